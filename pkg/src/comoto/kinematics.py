"""Serial-chain forward kinematics with standard DH parameters.

A chain is described by one DH row per revolute joint, ``(a, alpha, d,
theta_offset)``, using the *standard* (distal) convention: the transform
from frame ``i`` to frame ``i+1`` is

    Rz(q_i + theta_offset_i) Tz(d_i) Tx(a_i) Rx(alpha_i)

All lengths are meters, all angles radians.  The "robot points" used by
the proximity costs and metrics are the origins of every joint frame
plus the end-effector frame origin (``n_links + 1`` points in total).
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from importlib import resources
from pathlib import Path

import numpy as np
import yaml

from .errors import ContractViolation

Array = np.ndarray


@dataclass(frozen=True)
class ChainSpec:
    """Geometry of a serial revolute chain.

    Attributes
    ----------
    dh : (n, 4) array
        Standard DH rows ``(a, alpha, d, theta_offset)``.
    base_pose : (4, 4) array
        Rigid transform of the chain base in the world frame.
    joint_limits : (n, 2) array
        Per-joint ``(lo, hi)`` bounds, radians.
    name : str
        Label used in config files and reports.
    """

    dh: Array
    base_pose: Array
    joint_limits: Array
    name: str = "chain"

    def __post_init__(self):
        dh = np.asarray(self.dh, dtype=float)
        base = np.asarray(self.base_pose, dtype=float)
        lims = np.asarray(self.joint_limits, dtype=float)
        if dh.ndim != 2 or dh.shape[1] != 4 or dh.shape[0] < 2:
            raise ContractViolation("chain needs at least 2 DH rows of (a, alpha, d, theta_offset)")
        if base.shape != (4, 4):
            raise ContractViolation("base_pose must be a 4x4 rigid transform")
        rot = base[:3, :3]
        if not np.allclose(rot @ rot.T, np.eye(3), atol=1e-9):
            raise ContractViolation("base_pose rotation is not orthonormal within 1e-9")
        if lims.shape != (dh.shape[0], 2) or np.any(lims[:, 0] >= lims[:, 1]):
            raise ContractViolation("joint_limits must be (n, 2) with lo < hi")
        object.__setattr__(self, "dh", dh)
        object.__setattr__(self, "base_pose", base)
        object.__setattr__(self, "joint_limits", lims)

    @property
    def n_joints(self) -> int:
        return self.dh.shape[0]

    @property
    def n_points(self) -> int:
        return self.dh.shape[0] + 1

    def clamp(self, q: Array) -> Array:
        """Project a configuration onto the joint limits."""
        return np.clip(q, self.joint_limits[:, 0], self.joint_limits[:, 1])


@dataclass
class JointTrajectory:
    """Uniformly timed joint-space waypoint sequence.

    ``waypoints`` is an (N, n) array; waypoint ``k`` occurs at
    ``t0 + k * dt`` seconds.
    """

    waypoints: Array
    dt: float
    t0: float = 0.0

    def __post_init__(self):
        wp = np.asarray(self.waypoints, dtype=float)
        if wp.ndim != 2 or wp.shape[0] < 3:
            raise ContractViolation("trajectory needs at least 3 waypoints of equal dimension")
        if not self.dt > 0:
            raise ContractViolation("dt must be positive")
        self.waypoints = wp

    @property
    def n_waypoints(self) -> int:
        return self.waypoints.shape[0]

    @property
    def n_joints(self) -> int:
        return self.waypoints.shape[1]

    @property
    def times(self) -> Array:
        return self.t0 + self.dt * np.arange(self.n_waypoints)

    @property
    def duration(self) -> float:
        return self.dt * (self.n_waypoints - 1)

    def copy(self) -> "JointTrajectory":
        return JointTrajectory(self.waypoints.copy(), self.dt, self.t0)


def _dh_transform(a: float, alpha: float, d: float, theta: float) -> Array:
    ct, st = math.cos(theta), math.sin(theta)
    ca, sa = math.cos(alpha), math.sin(alpha)
    return np.array(
        [
            [ct, -st * ca, st * sa, a * ct],
            [st, ct * ca, -ct * sa, a * st],
            [0.0, sa, ca, d],
            [0.0, 0.0, 0.0, 1.0],
        ]
    )


def _check_config(chain: ChainSpec, q: Array) -> Array:
    q = np.asarray(q, dtype=float)
    if q.shape != (chain.n_joints,):
        raise ContractViolation(
            f"configuration has {q.shape} entries, chain expects ({chain.n_joints},)"
        )
    return q


def frame_origins_and_axes(chain: ChainSpec, q: Array) -> tuple[Array, Array]:
    """World-frame origins of frames 0..n and the joint rotation axes.

    Returns ``(points, axes)`` where ``points`` is (n+1, 3) — frame
    origins with the end-effector last — and ``axes`` is (n, 3), the
    world z-axis of the frame each joint rotates about.
    """
    q = _check_config(chain, q)
    n = chain.n_joints
    points = np.empty((n + 1, 3))
    axes = np.empty((n, 3))
    T = chain.base_pose
    points[0] = T[:3, 3]
    for i in range(n):
        a, alpha, d, off = chain.dh[i]
        axes[i] = T[:3, 2]
        T = T @ _dh_transform(a, alpha, d, q[i] + off)
        points[i + 1] = T[:3, 3]
    return points, axes


def fk_points(chain: ChainSpec, q: Array) -> Array:
    """3D world positions of all robot points for configuration ``q``.

    Output is (n+1, 3): every joint frame origin plus the end-effector
    origin, end-effector last.
    """
    points, _ = frame_origins_and_axes(chain, q)
    return points


def fk_eef(chain: ChainSpec, q: Array) -> Array:
    """World position of the end-effector (last entry of ``fk_points``)."""
    return fk_points(chain, q)[-1]


def position_jacobian(chain: ChainSpec, q: Array, point_index: int) -> Array:
    """(3, n) Jacobian of the selected robot point w.r.t. joint angles."""
    points, axes = frame_origins_and_axes(chain, q)
    if not 0 <= point_index < chain.n_points:
        raise ContractViolation(
            f"point_index {point_index} out of range for {chain.n_points} robot points"
        )
    return _jacobian_from_frames(points, axes, point_index, chain.n_joints)


def _jacobian_from_frames(points: Array, axes: Array, point_index: int, n: int) -> Array:
    J = np.zeros((3, n))
    for j in range(min(point_index, n)):
        J[:, j] = np.cross(axes[j], points[point_index] - points[j])
    return J


def all_point_jacobians(chain: ChainSpec, q: Array) -> tuple[Array, Array]:
    """FK points plus the (n+1, 3, n) Jacobian stack, one FK pass.

    Used by the cost gradients, which need every robot point and its
    Jacobian at each waypoint.
    """
    points, axes = frame_origins_and_axes(chain, q)
    n = chain.n_joints
    jacs = np.zeros((n + 1, 3, n))
    for k in range(1, n + 1):
        m = min(k, n)
        # column j of point k: z_j x (p_k - o_j) for j < k
        jacs[k, :, :m] = np.cross(axes[:m], points[k] - points[:m]).T
    return points, jacs


def _batch_frames(chain: ChainSpec, Q: Array) -> tuple[Array, Array]:
    """Vectorized FK over a (N, n) batch of configurations.

    Returns ``(points, axes)`` with shapes (N, n+1, 3) and (N, n, 3).
    """
    Q = np.asarray(Q, dtype=float)
    if Q.ndim != 2 or Q.shape[1] != chain.n_joints:
        raise ContractViolation(
            f"batch has shape {Q.shape}, chain expects (N, {chain.n_joints})"
        )
    N, n = Q.shape
    points = np.empty((N, n + 1, 3))
    axes = np.empty((N, n, 3))
    T = np.broadcast_to(chain.base_pose, (N, 4, 4)).copy()
    points[:, 0] = T[:, :3, 3]
    for i in range(n):
        a, alpha, d, off = chain.dh[i]
        axes[:, i] = T[:, :3, 2]
        theta = Q[:, i] + off
        ct, st = np.cos(theta), np.sin(theta)
        ca, sa = math.cos(alpha), math.sin(alpha)
        A = np.zeros((N, 4, 4))
        A[:, 0, 0] = ct
        A[:, 0, 1] = -st * ca
        A[:, 0, 2] = st * sa
        A[:, 0, 3] = a * ct
        A[:, 1, 0] = st
        A[:, 1, 1] = ct * ca
        A[:, 1, 2] = -ct * sa
        A[:, 1, 3] = a * st
        A[:, 2, 1] = sa
        A[:, 2, 2] = ca
        A[:, 2, 3] = d
        A[:, 3, 3] = 1.0
        T = T @ A
        points[:, i + 1] = T[:, :3, 3]
    return points, axes


def fk_points_batch(chain: ChainSpec, Q: Array) -> Array:
    """(N, n+1, 3) robot points for every configuration in the batch."""
    return _batch_frames(chain, Q)[0]


def all_point_jacobians_batch(chain: ChainSpec, Q: Array) -> tuple[Array, Array]:
    """Batched FK points and Jacobians: (N, n+1, 3) and (N, n+1, 3, n)."""
    points, axes = _batch_frames(chain, Q)
    n = chain.n_joints
    # lever[k, j] = p_k - o_j; column j of point k is z_j x lever for j < k
    lever = points[:, :, None, :] - points[:, None, :n, :]
    cross = np.cross(axes[:, None, :, :], lever)
    mask = np.arange(n)[None, :] < np.arange(n + 1)[:, None]
    cross *= mask[None, :, :, None]
    return points, np.swapaxes(cross, 2, 3)


def eef_path(chain: ChainSpec, traj: JointTrajectory) -> Array:
    """(N, 3) end-effector positions along a trajectory."""
    return fk_points_batch(chain, traj.waypoints)[:, -1]


def solve_position_ik(
    chain: ChainSpec,
    target: Array,
    q0: Array,
    iters: int = 200,
    damping: float = 0.05,
    tol: float = 1e-6,
) -> Array:
    """Damped least-squares position-only IK, for scenario authoring.

    Deterministic: fixed iteration count and no randomization.  Returns
    the best configuration found, clamped to the joint limits.
    """
    target = np.asarray(target, dtype=float)
    q = _check_config(chain, q0).copy()
    best_q, best_err = q.copy(), np.inf
    for _ in range(iters):
        points, axes = frame_origins_and_axes(chain, q)
        err = target - points[-1]
        err_norm = float(np.linalg.norm(err))
        if err_norm < best_err:
            best_err, best_q = err_norm, q.copy()
        if err_norm < tol:
            break
        J = _jacobian_from_frames(points, axes, chain.n_points - 1, chain.n_joints)
        JJt = J @ J.T + (damping**2) * np.eye(3)
        q = chain.clamp(q + J.T @ np.linalg.solve(JJt, err))
    return best_q


# ---------------------------------------------------------------------------
# Config and trajectory files
# ---------------------------------------------------------------------------


def _pose_from_xyz_rpy(xyz, rpy) -> Array:
    roll, pitch, yaw = rpy
    cr, sr = math.cos(roll), math.sin(roll)
    cp, sp = math.cos(pitch), math.sin(pitch)
    cy, sy = math.cos(yaw), math.sin(yaw)
    Rz = np.array([[cy, -sy, 0], [sy, cy, 0], [0, 0, 1]])
    Ry = np.array([[cp, 0, sp], [0, 1, 0], [-sp, 0, cp]])
    Rx = np.array([[1, 0, 0], [0, cr, -sr], [0, sr, cr]])
    T = np.eye(4)
    T[:3, :3] = Rz @ Ry @ Rx
    T[:3, 3] = xyz
    return T


def chain_from_dict(cfg: dict) -> ChainSpec:
    base = cfg.get("base_pose", {})
    if isinstance(base, dict):
        pose = _pose_from_xyz_rpy(base.get("xyz", [0, 0, 0]), base.get("rpy", [0, 0, 0]))
    else:
        pose = np.asarray(base, dtype=float)
    return ChainSpec(
        dh=np.asarray(cfg["dh"], dtype=float),
        base_pose=pose,
        joint_limits=np.asarray(cfg["joint_limits"], dtype=float),
        name=cfg.get("name", "chain"),
    )


def load_chain(source: str | Path) -> ChainSpec:
    """Load a chain config. ``source`` is a YAML path or a packaged name."""
    path = Path(source)
    if path.suffix in (".yaml", ".yml") and path.exists():
        text = path.read_text()
    else:
        res = resources.files("comoto.data").joinpath(f"{source}.yaml")
        if not res.is_file():
            raise ContractViolation(f"unknown chain config: {source!r}")
        text = res.read_text()
    return chain_from_dict(yaml.safe_load(text))


def default_chain() -> ChainSpec:
    """The packaged 7-DOF arm used by the benchmark scenarios."""
    return load_chain("iiwa7")


def save_trajectory(traj: JointTrajectory, path: str | Path) -> None:
    """Write a trajectory as CSV: header ``time,q0..q{n-1}``, one row per waypoint."""
    n = traj.n_joints
    lines = ["time," + ",".join(f"q{i}" for i in range(n))]
    for t, row in zip(traj.times, traj.waypoints):
        lines.append(",".join(repr(float(v)) for v in (t, *row)))
    Path(path).write_text("\n".join(lines) + "\n")


def load_trajectory(path: str | Path) -> JointTrajectory:
    lines = [ln for ln in Path(path).read_text().splitlines() if ln.strip()]
    rows = np.array([[float(v) for v in ln.split(",")] for ln in lines[1:]])
    if rows.shape[0] < 3:
        raise ContractViolation(f"trajectory file {path} has fewer than 3 waypoints")
    times, waypoints = rows[:, 0], rows[:, 1:]
    dt = float(times[1] - times[0])
    if not np.allclose(np.diff(times), dt, atol=1e-9):
        raise ContractViolation(f"trajectory file {path} is not uniformly timed")
    return JointTrajectory(waypoints, dt=dt, t0=float(times[0]))
