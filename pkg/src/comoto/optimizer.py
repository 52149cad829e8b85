"""Projected gradient descent over interior waypoints.

The goal constraint is enforced by construction: the first and last
waypoints are excluded from the decision variables, so the returned
trajectory's endpoints are bit-identical to the inputs.  Steps use
backtracking line search (Armijo condition) with a persistent step size
that shrinks on rejection and grows on acceptance; joint limits are
enforced by clamping after each trial step.
"""

from __future__ import annotations

import time
from dataclasses import dataclass, field

import numpy as np

from .costs import CostContext, CostReport, CostWeights, evaluate_objective
from .errors import ContractViolation, GradientCheckError
from .kinematics import JointTrajectory

Array = np.ndarray


@dataclass(frozen=True)
class OptimizerOptions:
    """Descent-loop knobs.

    ``fd_check`` verifies the analytic gradient against central finite
    differences at the initial point before optimizing.  ``seed`` is
    recorded for reproducibility; the solver itself is deterministic.
    """

    max_iters: int = 500
    grad_tol: float = 1e-4
    step_init: float = 0.05
    step_shrink: float = 0.5
    step_grow: float = 1.4
    armijo_c: float = 1e-4
    min_step: float = 1e-14
    fd_check: bool = False
    seed: int = 0
    verbose: bool = False

    def __post_init__(self):
        if self.max_iters < 1:
            raise ContractViolation("max_iters must be at least 1")
        if self.grad_tol <= 0:
            raise ContractViolation("grad_tol must be positive")
        if not (0 < self.step_shrink < 1 < self.step_grow):
            raise ContractViolation("need 0 < step_shrink < 1 < step_grow")


@dataclass
class OptResult:
    """Outcome of one solve."""

    trajectory: JointTrajectory
    iterations: int
    converged: bool
    initial_report: CostReport
    final_report: CostReport
    wall_time: float
    trace: list = field(default_factory=list)


def straightline_joint_init(start: Array, goal: Array, N: int, dt: float, t0: float = 0.0) -> JointTrajectory:
    """Joint-space linear interpolation with bit-exact endpoints."""
    if N < 3:
        raise ContractViolation("need at least 3 waypoints")
    start = np.asarray(start, dtype=float)
    goal = np.asarray(goal, dtype=float)
    s = np.linspace(0.0, 1.0, N)[:, None]
    waypoints = start[None, :] + s * (goal - start)[None, :]
    waypoints[0] = start
    waypoints[-1] = goal
    return JointTrajectory(waypoints, dt, t0)


def _fd_gradient(q: Array, dt: float, ctx: CostContext, w: CostWeights, extra_cost, h: float = 1e-6) -> Array:
    grad = np.zeros((q.shape[0] - 2) * q.shape[1])
    flat_index = 0
    for t in range(1, q.shape[0] - 1):
        for j in range(q.shape[1]):
            for sign in (+1.0, -1.0):
                qp = q.copy()
                qp[t, j] += sign * h
                val, _, _, _ = evaluate_objective(qp, dt, ctx, w, with_grad=False, extra_cost=extra_cost)
                grad[flat_index] += sign * val
            grad[flat_index] /= 2.0 * h
            flat_index += 1
    return grad


def _report(total, grad, per_cost, diagnostics, w) -> CostReport:
    weights = w.as_dict()
    if "extra" in per_cost:
        weights["extra"] = 1.0
    return CostReport(
        total=total,
        per_cost=dict(per_cost),
        gradient=None if grad is None else grad[1:-1].ravel().copy(),
        weights=weights,
        diagnostics=diagnostics,
    )


def optimize(
    ctx: CostContext,
    w: CostWeights,
    init: JointTrajectory,
    opts: OptimizerOptions = OptimizerOptions(),
    extra_cost=None,
) -> OptResult:
    """Minimize the weighted objective over the interior waypoints.

    The first and last waypoints of ``init`` are held fixed; ``init``
    must already end at the context's goal configuration.  Accepted
    iterates never increase the total cost; termination is on the
    max-norm of the interior gradient or on ``max_iters``.
    """
    t_start = time.perf_counter()
    if init.n_waypoints < 3:
        raise ContractViolation("init needs at least 3 waypoints")
    if not np.array_equal(init.waypoints[-1], ctx.goal_config):
        raise ContractViolation("init must end exactly at the goal configuration")

    q = init.waypoints.copy()
    dt = init.dt
    lo = ctx.chain.joint_limits[:, 0]
    hi = ctx.chain.joint_limits[:, 1]

    total, grad, per_cost, diag = evaluate_objective(q, dt, ctx, w, True, extra_cost)
    if not np.isfinite(total):
        raise ContractViolation("objective is non-finite at the initial trajectory")
    initial_report = _report(total, grad, per_cost, diag, w)

    if opts.fd_check:
        analytic = grad[1:-1].ravel()
        numeric = _fd_gradient(q, dt, ctx, w, extra_cost)
        scale = max(float(np.max(np.abs(numeric))), 1e-8)
        rel = float(np.max(np.abs(analytic - numeric))) / scale
        if rel > 1e-4:
            raise GradientCheckError(
                f"analytic gradient disagrees with finite differences (rel error {rel:.2e})"
            )

    step = opts.step_init
    converged = False
    iterations = 0
    trace = []
    for iteration in range(opts.max_iters):
        g = grad[1:-1]
        if float(np.max(np.abs(g))) < opts.grad_tol:
            converged = True
            break
        iterations = iteration + 1
        accepted = False
        while step >= opts.min_step:
            q_new = q.copy()
            q_new[1:-1] = np.clip(q[1:-1] - step * g, lo, hi)
            delta = q_new[1:-1] - q[1:-1]
            trial, _, _, _ = evaluate_objective(q_new, dt, ctx, w, False, extra_cost)
            if trial <= total + opts.armijo_c * float(np.sum(g * delta)):
                accepted = True
                break
            step *= opts.step_shrink
        if not accepted:
            break  # line search exhausted: keep the best-so-far iterate
        q = q_new
        total, grad, per_cost, diag = evaluate_objective(q, dt, ctx, w, True, extra_cost)
        if opts.verbose:
            trace.append({"iteration": iterations, "total": total, "step": step, **per_cost})
        step *= opts.step_grow

    if not converged and float(np.max(np.abs(grad[1:-1]))) < opts.grad_tol:
        converged = True
    final_report = _report(total, grad, per_cost, diag, w)
    trajectory = JointTrajectory(q, dt, init.t0)
    return OptResult(
        trajectory=trajectory,
        iterations=iterations,
        converged=converged,
        initial_report=initial_report,
        final_report=final_report,
        wall_time=time.perf_counter() - t_start,
        trace=trace,
    )
