"""Benchmark scenario generation: determinism, family geometry
contracts, and file round-trips."""

from __future__ import annotations

import numpy as np
import pytest

from comoto.errors import ContractViolation
from comoto.human_motion import RIGHT_ARM_JOINTS, generate_reach
from comoto.kinematics import fk_eef
from comoto.scenarios import (
    FAMILIES,
    FAR_GAP_MIN,
    GRASP_OFFSET,
    NEAR_GAP_MAX,
    Scenario,
    generate_scenarios,
    load_scenario,
    make_scenario,
    save_scenario,
    scenario_from_dict,
    scenario_to_dict,
)

SEEDS = (1, 2, 3, 4, 5)


def test_generation_is_deterministic(arm):
    for family in FAMILIES:
        a = make_scenario(family, 3, arm)
        b = make_scenario(family, 3, arm)
        assert np.array_equal(a.robot_start, b.robot_start)
        assert np.array_equal(a.robot_goal, b.robot_goal)
        assert np.array_equal(a.robot_object, b.robot_object)
        assert np.array_equal(a.human_object, b.human_object)
        for name in RIGHT_ARM_JOINTS:
            assert np.array_equal(a.human_script.arm_start[name], b.human_script.arm_start[name])
            assert np.array_equal(a.human_script.arm_goal[name], b.human_script.arm_goal[name])
        assert a.human_script.move_duration == b.human_script.move_duration
        assert len(a.obstacles) == len(b.obstacles)
        for (ca, ra), (cb, rb) in zip(a.obstacles, b.obstacles):
            assert np.array_equal(ca, cb) and ra == rb


def test_seeds_give_distinct_scenarios(arm):
    for family in FAMILIES:
        objects = [make_scenario(family, s, arm).robot_object for s in SEEDS]
        for i in range(len(objects)):
            for j in range(i + 1, len(objects)):
                assert np.linalg.norm(objects[i] - objects[j]) > 1e-6


def test_family_gap_contracts(arm):
    for seed in SEEDS:
        far = make_scenario("reaching_far", seed, arm)
        assert np.linalg.norm(far.human_object - far.robot_object) >= FAR_GAP_MIN
        near = make_scenario("reaching_near", seed, arm)
        assert np.linalg.norm(near.human_object - near.robot_object) <= NEAR_GAP_MAX


def test_stationary_human_never_moves(arm):
    for seed in SEEDS:
        sc = make_scenario("stationary", seed, arm)
        assert sc.human_script.noise_scale == 0.0
        truth = generate_reach(sc.human_script, sc.human_rate)
        for name in RIGHT_ARM_JOINTS:
            track = truth.samples[name]
            assert np.max(np.abs(track - track[0])) == 0.0


def test_goal_configuration_reaches_the_object(arm):
    for family in FAMILIES:
        sc = make_scenario(family, 2, arm)
        grasp = sc.robot_object + GRASP_OFFSET
        assert np.linalg.norm(fk_eef(arm, sc.robot_goal) - grasp) <= 1e-4
        lo, hi = arm.joint_limits[:, 0], arm.joint_limits[:, 1]
        for q in (sc.robot_start, sc.robot_goal):
            assert np.all(q >= lo) and np.all(q <= hi)


def test_scenario_timing_properties(arm):
    sc = make_scenario("reaching_far", 1, arm)
    assert sc.robot_t0 == sc.observation
    assert sc.dt == pytest.approx(sc.horizon / (sc.n_waypoints - 1))
    assert sc.human_script.total_duration >= sc.observation + sc.horizon
    assert np.array_equal(sc.goal_point, fk_eef(arm, sc.robot_goal))
    assert sc.predictor_goal is not None
    assert make_scenario("stationary", 1, arm).predictor_goal is None


def test_generate_scenarios_order_and_count(arm):
    scs = generate_scenarios("reaching_near", SEEDS, arm)
    assert [sc.seed for sc in scs] == list(SEEDS)
    assert all(sc.family == "reaching_near" for sc in scs)
    with pytest.raises(ContractViolation):
        make_scenario("unheard_of", 1, arm)


def test_family_contract_validation(arm):
    sc = make_scenario("reaching_far", 1, arm)
    data = scenario_to_dict(sc)
    data["human_object"] = data["robot_object"]  # gap collapses to the grasp offset
    with pytest.raises(ContractViolation):
        scenario_from_dict(data, arm)


def test_scenario_yaml_round_trip(tmp_path, arm):
    for family in FAMILIES:
        sc = make_scenario(family, 4, arm)
        path = tmp_path / f"{family}.yaml"
        save_scenario(sc, path)
        back = load_scenario(path, arm)
        assert back.family == sc.family
        assert back.seed == sc.seed
        assert np.array_equal(back.robot_start, sc.robot_start)
        assert np.array_equal(back.robot_goal, sc.robot_goal)
        assert np.array_equal(back.robot_object, sc.robot_object)
        assert np.array_equal(back.human_object, sc.human_object)
        assert back.human_script.move_duration == sc.human_script.move_duration
        assert back.human_script.noise_scale == sc.human_script.noise_scale
        assert back.human_script.seed == sc.human_script.seed
        for name in RIGHT_ARM_JOINTS:
            assert np.array_equal(back.human_script.arm_goal[name], sc.human_script.arm_goal[name])
        assert len(back.obstacles) == len(sc.obstacles)
        for (ca, ra), (cb, rb) in zip(back.obstacles, sc.obstacles):
            assert np.array_equal(ca, cb) and ra == rb
        assert back.n_waypoints == sc.n_waypoints
        assert back.horizon == sc.horizon


def test_scenario_uses_default_chain_when_unspecified():
    sc = make_scenario("stationary", 1)
    assert isinstance(sc, Scenario)
    assert sc.chain.n_joints == 7
