"""Projected gradient descent: recovery oracles, endpoint handling,
convergence bookkeeping, and the built-in gradient self-check."""

from __future__ import annotations

import numpy as np
import pytest

from test_costs import COMBINED_WEIGHTS, build_problem

from comoto.costs import CostContext, CostWeights
from comoto.errors import ContractViolation, GradientCheckError
from comoto.kinematics import JointTrajectory
from comoto.optimizer import OptimizerOptions, optimize, straightline_joint_init


def perturbed_line(chain, start, goal, n, dt, seed, scale=0.3):
    init = straightline_joint_init(start, goal, n, dt)
    rng = np.random.default_rng(seed)
    init.waypoints[1:-1] += scale * rng.standard_normal(init.waypoints[1:-1].shape)
    lo, hi = chain.joint_limits[:, 0], chain.joint_limits[:, 1]
    init.waypoints[1:-1] = np.clip(init.waypoints[1:-1], lo, hi)
    return init


def test_straightline_init_hand_values():
    line = straightline_joint_init(np.array([0.0, 0.0]), np.array([1.0, 2.0]), 3, 0.5, t0=1.0)
    assert np.allclose(line.waypoints, [[0, 0], [0.5, 1.0], [1.0, 2.0]], atol=1e-15)
    assert line.dt == 0.5
    assert line.t0 == 1.0
    assert np.array_equal(line.waypoints[-1], [1.0, 2.0])
    with pytest.raises(ContractViolation):
        straightline_joint_init(np.zeros(2), np.ones(2), 2, 0.5)


def test_smoothness_only_recovers_straight_line(arm):
    start = np.array([0.0, 0.6, 0.0, -1.1, 0.0, 0.8, 0.0])
    goal = np.array([0.5, 0.9, -0.3, -0.7, 0.2, 1.1, 0.4])
    n, dt = 10, 0.2
    init = perturbed_line(arm, start, goal, n, dt, seed=5)
    ctx = CostContext(chain=arm, goal_config=goal)
    # the second-difference quadratic is ill-conditioned: give descent room
    opts = OptimizerOptions(max_iters=30000, grad_tol=1e-10, step_init=0.05)
    result = optimize(ctx, CostWeights(alpha_smooth=1.0), init, opts)
    want = straightline_joint_init(start, goal, n, dt).waypoints
    err = np.max(np.abs(result.trajectory.waypoints[1:-1] - want[1:-1]))
    assert err <= 1e-6
    assert result.converged
    assert np.array_equal(result.trajectory.waypoints[0], start)
    assert np.array_equal(result.trajectory.waypoints[-1], goal)


def test_zero_gradient_start_returns_immediately(arm):
    # the nominal term is exactly minimized on the nominal itself
    start = np.array([0.0, 0.6, 0.0, -1.1, 0.0, 0.8, 0.0])
    goal = start + 0.3
    nominal = straightline_joint_init(start, goal, 8, 0.1)
    ctx = CostContext(chain=arm, goal_config=goal, nominal=nominal)
    result = optimize(ctx, CostWeights(alpha_nominal=1.0), nominal.copy(), OptimizerOptions())
    assert result.converged
    assert result.iterations == 0
    assert np.array_equal(result.trajectory.waypoints, nominal.waypoints)


def test_endpoints_bit_identical_across_problems(arm):
    for seed in range(6):
        traj, ctx = build_problem(arm, seed=seed, n_waypoints=9)
        init = JointTrajectory(traj.waypoints.copy(), traj.dt)
        opts = OptimizerOptions(max_iters=40, grad_tol=1e-10, step_init=0.02)
        result = optimize(ctx, COMBINED_WEIGHTS, init, opts)
        assert np.array_equal(result.trajectory.waypoints[0], init.waypoints[0])
        assert np.array_equal(result.trajectory.waypoints[-1], ctx.goal_config)


def test_descent_never_increases_total(arm):
    traj, ctx = build_problem(arm, seed=11, n_waypoints=10)
    init = JointTrajectory(traj.waypoints.copy(), traj.dt)
    opts = OptimizerOptions(max_iters=80, grad_tol=1e-10, step_init=0.02, verbose=True)
    result = optimize(ctx, COMBINED_WEIGHTS, init, opts)
    totals = [result.initial_report.total] + [entry["total"] for entry in result.trace]
    assert all(b <= a + 1e-12 for a, b in zip(totals, totals[1:]))
    assert result.final_report.total <= result.initial_report.total
    assert result.final_report.total == pytest.approx(totals[-1], rel=1e-12)


def test_optimizer_is_deterministic(arm):
    traj, ctx = build_problem(arm, seed=13, n_waypoints=8)
    opts = OptimizerOptions(max_iters=60, grad_tol=1e-10, step_init=0.02)
    a = optimize(ctx, COMBINED_WEIGHTS, JointTrajectory(traj.waypoints.copy(), traj.dt), opts)
    b = optimize(ctx, COMBINED_WEIGHTS, JointTrajectory(traj.waypoints.copy(), traj.dt), opts)
    assert np.array_equal(a.trajectory.waypoints, b.trajectory.waypoints)
    assert a.iterations == b.iterations
    assert a.converged == b.converged
    assert a.final_report.total == b.final_report.total


def test_init_must_end_at_goal(arm):
    traj, ctx = build_problem(arm, seed=1, n_waypoints=5)
    bad = JointTrajectory(traj.waypoints.copy(), traj.dt)
    bad.waypoints[-1] += 1e-9
    with pytest.raises(ContractViolation):
        optimize(ctx, COMBINED_WEIGHTS, bad)


def test_result_reports_and_gradient_shape(arm):
    traj, ctx = build_problem(arm, seed=2, n_waypoints=7)
    init = JointTrajectory(traj.waypoints.copy(), traj.dt)
    opts = OptimizerOptions(max_iters=10, grad_tol=1e-10, step_init=0.02)
    result = optimize(ctx, COMBINED_WEIGHTS, init, opts)
    n_free = (init.n_waypoints - 2) * init.n_joints
    assert result.initial_report.gradient.shape == (n_free,)
    assert result.final_report.gradient.shape == (n_free,)
    assert set(result.initial_report.per_cost) >= {
        "distance",
        "visibility",
        "legibility",
        "nominal",
        "smoothness",
    }
    assert result.wall_time >= 0.0
    assert result.iterations <= opts.max_iters


def test_fd_check_accepts_correct_gradient(arm):
    traj, ctx = build_problem(arm, seed=4, n_waypoints=5)
    init = JointTrajectory(traj.waypoints.copy(), traj.dt)
    opts = OptimizerOptions(max_iters=3, grad_tol=1e-10, step_init=0.02, fd_check=True)
    optimize(ctx, COMBINED_WEIGHTS, init, opts)


def test_fd_check_catches_wrong_gradient(arm):
    traj, ctx = build_problem(arm, seed=4, n_waypoints=5)
    init = JointTrajectory(traj.waypoints.copy(), traj.dt)

    def lying_extra(q, points, jacs, with_grad):
        value = float(np.sum(q**2))
        return value, (0.5 * q if with_grad else None)  # wrong on purpose

    opts = OptimizerOptions(max_iters=3, grad_tol=1e-10, step_init=0.02, fd_check=True)
    with pytest.raises(GradientCheckError):
        optimize(ctx, COMBINED_WEIGHTS, init, opts, extra_cost=lying_extra)


def test_joint_limits_respected(arm):
    traj, ctx = build_problem(arm, seed=9, n_waypoints=8)
    init = JointTrajectory(traj.waypoints.copy(), traj.dt)
    opts = OptimizerOptions(max_iters=50, grad_tol=1e-10, step_init=0.5)
    result = optimize(ctx, COMBINED_WEIGHTS, init, opts)
    lo, hi = arm.joint_limits[:, 0], arm.joint_limits[:, 1]
    assert np.all(result.trajectory.waypoints[1:-1] >= lo - 1e-15)
    assert np.all(result.trajectory.waypoints[1:-1] <= hi + 1e-15)


def test_options_validation():
    with pytest.raises(ContractViolation):
        OptimizerOptions(max_iters=0)
    with pytest.raises(ContractViolation):
        OptimizerOptions(grad_tol=0.0)
    with pytest.raises(ContractViolation):
        OptimizerOptions(step_shrink=1.5)
    with pytest.raises(ContractViolation):
        OptimizerOptions(step_grow=0.9)
