"""Evaluation metrics, always computed against ground-truth human motion.

Four measures per run: percentage of steps with separation above a
threshold, percentage of steps with the end effector inside the human's
field of view, a goal-inference (legibility) score normalized so chance
is 0 and certainty 100, and squared deviation from the nominal
trajectory.  Optimized trajectories are evaluated on their waypoint
grid; executed traces on their realized control ticks.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass

import numpy as np

from .baselines import ExecutionTrace
from .errors import ContractViolation
from .human_motion import HumanTrajectory
from .kinematics import ChainSpec, JointTrajectory, fk_points_batch

Array = np.ndarray

SEPARATION_THRESHOLD = 0.20  # meters
FOV_DEG = 160.0


@dataclass(frozen=True)
class GoalSet:
    """True goal plus at least one distractor, all distinct, meters."""

    true_goal: Array
    distractors: tuple

    def __post_init__(self):
        true_goal = np.asarray(self.true_goal, dtype=float).reshape(3)
        distractors = tuple(np.asarray(d, dtype=float).reshape(3) for d in self.distractors)
        if len(distractors) < 1:
            raise ContractViolation("goal set needs at least one distractor")
        pts = [true_goal, *distractors]
        for i in range(len(pts)):
            for j in range(i + 1, len(pts)):
                if np.linalg.norm(pts[i] - pts[j]) < 1e-9:
                    raise ContractViolation("goal set contains coincident points")
        object.__setattr__(self, "true_goal", true_goal)
        object.__setattr__(self, "distractors", distractors)

    @property
    def all_goals(self) -> list:
        return [self.true_goal, *self.distractors]


@dataclass
class MetricReport:
    """One run's metric values."""

    dst_pct: float
    vis_pct: float
    legibility: float
    nom_dev: float
    completed: bool = True


def _times_and_configs(planned) -> tuple[Array, Array]:
    if isinstance(planned, ExecutionTrace):
        return planned.timestamps, planned.configs
    if isinstance(planned, JointTrajectory):
        return planned.times, planned.waypoints
    raise ContractViolation(f"cannot evaluate object of type {type(planned).__name__}")


def _human_positions(human: HumanTrajectory, times: Array) -> dict[str, Array]:
    return human.positions_at(times)


def metric_separation(
    chain: ChainSpec,
    planned,
    human_truth: HumanTrajectory,
    threshold: float = SEPARATION_THRESHOLD,
) -> float:
    """Percent of steps whose minimum human-robot distance exceeds the threshold."""
    times, configs = _times_and_configs(planned)
    if times.shape[0] == 0:
        raise ContractViolation("empty trajectory")
    robot = fk_points_batch(chain, configs)  # (T,P,3)
    human = _human_positions(human_truth, times)
    stacked = np.stack(list(human.values()), axis=1)  # (T,J,3)
    diff = robot[:, None, :, :] - stacked[:, :, None, :]
    min_dist = np.sqrt(np.min(np.sum(diff**2, axis=3), axis=(1, 2)))
    return float(100.0 * np.count_nonzero(min_dist > threshold) / times.shape[0])


def metric_visibility(
    chain: ChainSpec,
    planned,
    human_truth: HumanTrajectory,
    target: Array,
    fov_deg: float = FOV_DEG,
) -> float:
    """Percent of steps with the end effector inside the gaze-centered FOV.

    The gaze ray runs from the head to the target object; a step counts
    as visible when the head-to-eef direction is within half the field
    of view of that ray.  Steps with a degenerate gaze count as not
    visible.
    """
    times, configs = _times_and_configs(planned)
    if "head" not in human_truth.samples:
        raise ContractViolation("ground truth has no head track")
    eef = fk_points_batch(chain, configs)[:, -1]
    head = _human_positions(human_truth, times)["head"]
    target = np.asarray(target, dtype=float).reshape(3)
    gaze = target[None, :] - head
    to_eef = eef - head
    n_gaze = np.linalg.norm(gaze, axis=1)
    n_eef = np.linalg.norm(to_eef, axis=1)
    ok = (n_gaze > 1e-9) & (n_eef > 1e-9)
    if not np.all(ok):
        warnings.warn("degenerate gaze or eef-at-head steps counted as not visible")
    cosang = np.einsum("ta,ta->t", gaze, to_eef) / np.maximum(n_gaze * n_eef, 1e-300)
    angle = np.degrees(np.arccos(np.clip(cosang, -1.0, 1.0)))
    visible = ok & (angle <= fov_deg / 2.0)
    return float(100.0 * np.count_nonzero(visible) / times.shape[0])


def metric_legibility(chain: ChainSpec, planned, goals: GoalSet) -> float:
    """Goal-inference score: 100 at certainty, 0 at chance level.

    Per step, the posterior over goals uses the exponentiated
    path-length ratio per goal with straight-line optimal costs; the
    time-weighted posterior of the true goal is mapped through
    ``(p - 1/K) * K / (K - 1)`` and scaled to percent.
    """
    _, configs = _times_and_configs(planned)
    eef = fk_points_batch(chain, configs)[:, -1]
    T = eef.shape[0]
    seg_len = np.linalg.norm(np.diff(eef, axis=0), axis=1)
    s = np.concatenate([[0.0], np.cumsum(seg_len)])
    all_goals = goals.all_goals
    K = len(all_goals)
    P = np.empty((K, T))
    for gi, g in enumerate(all_goals):
        r = np.linalg.norm(eef - g[None, :], axis=1)
        P[gi] = np.exp(r[0] - s - r)
    denom = P.sum(axis=0)
    p_true = np.where(denom > 1e-300, P[0] / np.maximum(denom, 1e-300), 1.0 / K)
    f = np.arange(T, 0, -1, dtype=float)
    weighted = float(np.sum(p_true * f) / np.sum(f))
    return float(100.0 * (weighted - 1.0 / K) * K / (K - 1.0))


def metric_nominal_dev(chain: ChainSpec, traj: JointTrajectory, nominal: JointTrajectory) -> float:
    """Sum of squared end-effector distances to the nominal, meters^2."""
    if traj.n_waypoints != nominal.n_waypoints:
        raise ContractViolation("trajectory and nominal must have equal waypoint counts")
    eef = fk_points_batch(chain, traj.waypoints)[:, -1]
    eef_nom = fk_points_batch(chain, nominal.waypoints)[:, -1]
    return float(np.sum(np.linalg.norm(eef - eef_nom, axis=1) ** 2))


def trace_at_nominal_times(trace: ExecutionTrace, nominal: JointTrajectory) -> JointTrajectory:
    """Sample an executed trace on the nominal waypoint clock.

    Gives the time-aligned configuration sequence used to measure how
    far a reactive execution lagged the plan; boundary values are held.
    """
    configs = trace.configs_at(nominal.times)
    return JointTrajectory(configs, nominal.dt, nominal.t0)


def evaluate_run(
    chain: ChainSpec,
    planned,
    human_truth: HumanTrajectory,
    nominal: JointTrajectory,
    goals: GoalSet,
    gaze_target: Array,
    threshold: float = SEPARATION_THRESHOLD,
    fov_deg: float = FOV_DEG,
) -> MetricReport:
    """All four metrics for one planned trajectory or executed trace."""
    dst = metric_separation(chain, planned, human_truth, threshold)
    vis = metric_visibility(chain, planned, human_truth, gaze_target, fov_deg)
    leg = metric_legibility(chain, planned, goals)
    if isinstance(planned, ExecutionTrace):
        aligned = trace_at_nominal_times(planned, nominal)
        nom = metric_nominal_dev(chain, aligned, nominal)
        completed = planned.completed
    else:
        nom = metric_nominal_dev(chain, planned, nominal)
        completed = True
    return MetricReport(dst_pct=dst, vis_pct=vis, legibility=leg, nom_dev=nom, completed=completed)


def aggregate(reports: list[MetricReport]) -> dict[str, tuple[float, float]]:
    """Per-metric (mean, sample standard deviation); one report gives SD 0."""
    if len(reports) == 0:
        raise ContractViolation("need at least one report to aggregate")
    out = {}
    for name in ("dst_pct", "vis_pct", "legibility", "nom_dev"):
        vals = np.asarray([getattr(r, name) for r in reports], dtype=float)
        sd = 0.0 if vals.size == 1 else float(np.std(vals, ddof=1))
        out[name] = (float(np.mean(vals)), sd)
    return out
