"""The four comparison methods: nominal planning, reactive speed
adjustment, legibility-only optimization, and distance+visibility
optimization without an uncertainty model.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .costs import CostContext, CostWeights
from .errors import ContractViolation
from .human_motion import HumanTrajectory
from .kinematics import ChainSpec, JointTrajectory, fk_points
from .optimizer import OptimizerOptions, OptResult, optimize, straightline_joint_init

Array = np.ndarray

#: Ratio of the smoothness regularizer to the legibility weight.
TAU_S_RATIO = 1e-3

#: Ratio of the nominal-anchor regularizer to the distance/visibility scale.
TAU_N_RATIO = 1e-2

OBSTACLE_MARGIN = 0.05


@dataclass(frozen=True)
class SpeedAdjustParams:
    """Reactive execution knobs: stop/slow separations and control rate.

    ``timeout`` of None means 3x the nominal duration.
    """

    d_stop: float = 0.06
    d_slow: float = 0.20
    control_rate: float = 100.0
    timeout: float | None = None

    def __post_init__(self):
        if not 0 < self.d_stop < self.d_slow:
            raise ContractViolation("need 0 < d_stop < d_slow")
        if self.control_rate <= 0:
            raise ContractViolation("control_rate must be positive")


@dataclass
class ExecutionTrace:
    """Timestamped realized execution of a planned path."""

    timestamps: Array
    configs: Array
    completed: bool
    stop_events: list[tuple[float, float]] = field(default_factory=list)
    min_separation: Array | None = None
    speed_scale: Array | None = None

    def __post_init__(self):
        self.timestamps = np.asarray(self.timestamps, dtype=float)
        self.configs = np.asarray(self.configs, dtype=float)
        if self.timestamps.ndim != 1 or self.configs.ndim != 2:
            raise ContractViolation("trace needs 1-D timestamps and 2-D configs")
        if self.timestamps.shape[0] != self.configs.shape[0]:
            raise ContractViolation("trace timestamps and configs must have equal length")
        if np.any(np.diff(self.timestamps) <= 0):
            raise ContractViolation("trace timestamps must be strictly increasing")

    @property
    def duration(self) -> float:
        return float(self.timestamps[-1] - self.timestamps[0])

    def configs_at(self, times: Array) -> Array:
        """Linearly interpolated configurations, held at the boundaries."""
        times = np.atleast_1d(np.asarray(times, dtype=float))
        return np.stack(
            [np.interp(times, self.timestamps, self.configs[:, j]) for j in range(self.configs.shape[1])],
            axis=1,
        )


def obstacle_penalty(obstacles, weight: float, margin: float = OBSTACLE_MARGIN):
    """Hinge clearance penalty over robot points for sphere obstacles.

    Each sphere contributes ``weight * max(0, r + margin - dist)**2``
    per robot point per waypoint.  Returns an extra-cost callback for
    the optimizer.
    """
    centers = np.asarray([c for c, _ in obstacles], dtype=float).reshape(-1, 3)
    radii = np.asarray([r for _, r in obstacles], dtype=float)

    def extra(q, points, jacs, with_grad):
        diff = points[:, :, None, :] - centers[None, None, :, :]  # (N,P,S,3)
        dist = np.linalg.norm(diff, axis=3)
        pen = np.maximum(0.0, (radii + margin)[None, None, :] - dist)
        value = weight * float(np.sum(pen**2))
        if not with_grad:
            return value, None
        coeff = np.where(pen > 0, -2.0 * weight * pen / np.maximum(dist, 1e-12), 0.0)
        dval_dp = np.einsum("tps,tpsa->tpa", coeff, diff)
        grad = np.einsum("tpan,tpa->tn", jacs, dval_dp)
        return value, grad

    return extra


def nominal_trajectory(
    chain: ChainSpec,
    start: Array,
    goal: Array,
    obstacles=(),
    n_waypoints: int = 20,
    dt: float = 2.0 / 19.0,
    t0: float = 0.0,
    smooth_weight: float = 1e-3,
    obstacle_weight: float = 200.0,
    margin: float = OBSTACLE_MARGIN,
    opts: OptimizerOptions | None = None,
) -> JointTrajectory:
    """Default trajectory with no human: smooth and obstacle-clearing.

    With no obstacles this is exactly the joint-space straight line.
    """
    init = straightline_joint_init(start, goal, n_waypoints, dt, t0)
    if len(obstacles) == 0:
        return init
    ctx = CostContext(chain=chain, goal_config=np.asarray(goal, dtype=float))
    weights = CostWeights(alpha_smooth=smooth_weight)
    extra = obstacle_penalty(obstacles, obstacle_weight, margin)
    if opts is None:
        opts = OptimizerOptions(max_iters=300, grad_tol=1e-3, step_init=0.05)
    return optimize(ctx, weights, init, opts, extra_cost=extra).trajectory


def _human_tracks(human: HumanTrajectory) -> tuple[Array, float]:
    tracks = np.stack([human.samples[name] for name in human.joints], axis=0)  # (J,T,3)
    return tracks, human.rate


def _human_at(tracks: Array, rate: float, t: float) -> Array:
    """(J, 3) joint positions at absolute time t, held at the boundaries."""
    idx = t * rate
    last = tracks.shape[1] - 1
    if idx <= 0:
        return tracks[:, 0]
    if idx >= last:
        return tracks[:, last]
    i0 = int(idx)
    frac = idx - i0
    return (1.0 - frac) * tracks[:, i0] + frac * tracks[:, i0 + 1]


def min_separation(chain: ChainSpec, q: Array, human_points: Array) -> float:
    """Smallest distance between any robot point and any human joint."""
    robot = fk_points(chain, q)
    diff = robot[None, :, :] - human_points[:, None, :]
    return float(np.sqrt(np.min(np.sum(diff**2, axis=2))))


def speed_adjusted_execute(
    chain: ChainSpec,
    nominal: JointTrajectory,
    human_truth: HumanTrajectory,
    p: SpeedAdjustParams = SpeedAdjustParams(),
) -> ExecutionTrace:
    """Follow the nominal path, scaling progress by human separation.

    The joint-space path is never altered: every emitted configuration
    lies on the nominal polyline.  Progress per control tick is scaled
    by ``s(d) = clamp((d - d_stop) / (d_slow - d_stop), 0, 1)`` with d
    the current minimum human-robot separation (ground truth; this is a
    sensor-driven method).  Returns ``completed=False`` if the timeout
    elapses before the path end; the human pose is held at its last
    sample beyond the recorded horizon.
    """
    D = nominal.duration
    timeout = 3.0 * D if p.timeout is None else p.timeout
    dtick = 1.0 / p.control_rate
    tracks, rate = _human_tracks(human_truth)
    waypoints = nominal.waypoints

    def config_at(u: float) -> Array:
        k = u / nominal.dt
        i0 = min(int(k), waypoints.shape[0] - 2)
        frac = k - i0
        if frac <= 0.0:
            return waypoints[i0]
        if frac >= 1.0:
            return waypoints[i0 + 1]
        return (1.0 - frac) * waypoints[i0] + frac * waypoints[i0 + 1]

    u, t = 0.0, nominal.t0
    times, configs, seps, speeds = [], [], [], []
    completed = False
    while True:
        qcur = config_at(u)
        d = min_separation(chain, qcur, _human_at(tracks, rate, t))
        s = float(np.clip((d - p.d_stop) / (p.d_slow - p.d_stop), 0.0, 1.0))
        times.append(t)
        configs.append(qcur)
        seps.append(d)
        speeds.append(s)
        if u >= D:
            completed = True
            break
        if t - nominal.t0 >= timeout - 1e-12:
            break
        advance = s * dtick
        if advance > 0 and u + advance >= D:
            t += (D - u) / s  # partial tick: land exactly on the path end
            u = D
        else:
            u += advance
            t += dtick

    speeds_arr = np.asarray(speeds)
    stop_events = []
    run_start = None
    for k, s in enumerate(speeds_arr):
        if s == 0.0 and run_start is None:
            run_start = times[k]
        elif s > 0.0 and run_start is not None:
            stop_events.append((run_start, times[k] - run_start))
            run_start = None
    if run_start is not None:
        stop_events.append((run_start, times[-1] - run_start))

    return ExecutionTrace(
        timestamps=np.asarray(times),
        configs=np.asarray(configs),
        completed=completed,
        stop_events=stop_events,
        min_separation=np.asarray(seps),
        speed_scale=speeds_arr,
    )


def legible_optimize(
    ctx: CostContext,
    init: JointTrajectory,
    opts: OptimizerOptions = OptimizerOptions(),
    alpha: float = 1.0,
) -> OptResult:
    """Optimize legibility alone (plus a small smoothness regularizer)."""
    w = CostWeights(alpha_legibility=alpha, alpha_smooth=TAU_S_RATIO * alpha)
    return optimize(ctx, w, init, opts)


def distvis_optimize(
    ctx: CostContext,
    init: JointTrajectory,
    opts: OptimizerOptions = OptimizerOptions(),
    alpha_dist: float = 1.0,
    alpha_vis: float = 1.0,
    tau_n: float | None = None,
) -> OptResult:
    """Optimize separation and visibility with no uncertainty model.

    The prediction covariance is replaced by the identity (the source
    method is deterministic); a small nominal-anchor weight keeps the
    problem well-posed.
    """
    if ctx.prediction is None:
        raise ContractViolation("distance+visibility baseline needs a prediction")
    if tau_n is None:
        tau_n = TAU_N_RATIO * max(alpha_dist, alpha_vis)
    flat_ctx = CostContext(
        chain=ctx.chain,
        goal_config=ctx.goal_config,
        prediction=ctx.prediction.with_isotropic_covariance(),
        nominal=ctx.nominal,
        object_pos=ctx.object_pos,
        legibility_weights=ctx.legibility_weights,
        eps_m=ctx.eps_m,
        sigma_floor=ctx.sigma_floor,
    )
    w = CostWeights(alpha_dist=alpha_dist, alpha_vis=alpha_vis, alpha_nominal=tau_n)
    return optimize(flat_ctx, w, init, opts)


def save_trace(trace: ExecutionTrace, path: str | Path) -> None:
    """Write a trace as CSV: time, joints, min_separation, speed_scale."""
    n = trace.configs.shape[1]
    header = (
        "time," + ",".join(f"q{j}" for j in range(n)) + ",min_separation,speed_scale"
    )
    lines = [f"# completed={trace.completed}", header]
    sep = trace.min_separation if trace.min_separation is not None else np.full(len(trace.timestamps), np.nan)
    spd = trace.speed_scale if trace.speed_scale is not None else np.full(len(trace.timestamps), np.nan)
    for k in range(trace.timestamps.shape[0]):
        row = [repr(float(trace.timestamps[k]))]
        row += [repr(float(v)) for v in trace.configs[k]]
        row += [repr(float(sep[k])), repr(float(spd[k]))]
        lines.append(",".join(row))
    Path(path).write_text("\n".join(lines) + "\n")


def load_trace(path: str | Path) -> ExecutionTrace:
    lines = Path(path).read_text().splitlines()
    if not lines or not lines[0].startswith("# completed="):
        raise ContractViolation(f"{path}: missing '# completed=' header")
    completed = lines[0].split("=", 1)[1] == "True"
    rows = [[float(v) for v in ln.split(",")] for ln in lines[2:] if ln.strip()]
    data = np.asarray(rows)
    return ExecutionTrace(
        timestamps=data[:, 0],
        configs=data[:, 1:-2],
        completed=completed,
        min_separation=data[:, -2],
        speed_scale=data[:, -1],
    )
