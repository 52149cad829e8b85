"""Deterministic desk-scale scenario generation for the three families.

A scenario puts the robot base at the origin of a shared tabletop
(z = 0) with the human across a 0.8 m table (+x).  The human right arm
executes one scripted reach; the robot moves from a raised start to a
grasp point above its own object.  All geometry is jittered per seed
through a generator keyed on (family, seed), so a seed fully
determines the scenario.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
import yaml

from .errors import ContractViolation
from .human_motion import RIGHT_ARM_JOINTS, ReachScript
from .kinematics import ChainSpec, default_chain, fk_eef, load_chain, solve_position_ik

Array = np.ndarray

FAMILIES = ("stationary", "reaching_far", "reaching_near")
FAMILY_IDS = {"stationary": 1, "reaching_far": 2, "reaching_near": 3}

#: Grasp approach height above an object, meters.
GRASP_OFFSET = np.array([0.0, 0.0, 0.02])

#: Far/near constraints on the object gap, meters.
FAR_GAP_MIN = 0.6
NEAR_GAP_MAX = 0.15

_IK_SEED_CONFIG = np.array([0.0, 0.7, 0.0, -1.2, 0.0, 0.9, 0.0])


@dataclass(frozen=True)
class Scenario:
    """One benchmark task: robot motion goal plus a scripted human."""

    family: str
    seed: int
    chain: ChainSpec
    robot_start: Array
    robot_goal: Array
    robot_object: Array
    human_object: Array
    human_script: ReachScript
    obstacles: tuple = ()
    observation: float = 1.0
    horizon: float = 2.0
    n_waypoints: int = 20
    human_rate: float = 100.0

    def __post_init__(self):
        if self.family not in FAMILIES:
            raise ContractViolation(f"unknown family {self.family!r}; expected one of {FAMILIES}")
        gap = float(np.linalg.norm(np.asarray(self.human_object) - np.asarray(self.robot_object)))
        if self.family == "reaching_far" and gap < FAR_GAP_MIN:
            raise ContractViolation(f"reaching_far needs an object gap >= {FAR_GAP_MIN}, got {gap:.3f}")
        if self.family == "reaching_near" and gap > NEAR_GAP_MAX:
            raise ContractViolation(f"reaching_near needs an object gap <= {NEAR_GAP_MAX}, got {gap:.3f}")
        if self.family == "stationary":
            for name in RIGHT_ARM_JOINTS:
                if not np.array_equal(self.human_script.arm_start[name], self.human_script.arm_goal[name]):
                    raise ContractViolation("stationary scenarios must have arm_goal == arm_start")

    @property
    def dt(self) -> float:
        return self.horizon / (self.n_waypoints - 1)

    @property
    def robot_t0(self) -> float:
        """The robot starts moving when the observation window ends."""
        return self.observation

    @property
    def goal_point(self) -> Array:
        return fk_eef(self.chain, self.robot_goal)

    @property
    def predictor_goal(self) -> Array | None:
        """Palm goal handed to the predictor; None when the human holds still."""
        if self.family == "stationary":
            return None
        return np.asarray(self.human_script.arm_goal["right_palm"], dtype=float)


def _arm_pose(rng: np.random.Generator) -> dict[str, Array]:
    shoulder = np.array([1.00, -0.08, 0.42]) + rng.uniform(-1, 1, 3) * [0.02, 0.06, 0.02]
    palm = shoulder + np.array([-0.20, -0.10, -0.30]) + rng.uniform(-1, 1, 3) * [0.02, 0.04, 0.02]
    elbow = shoulder + 0.5 * (palm - shoulder) + np.array([0.0, -0.05, 0.04])
    wrist = shoulder + 0.85 * (palm - shoulder) + np.array([0.0, 0.0, 0.01])
    return {
        "right_shoulder": shoulder,
        "right_elbow": elbow,
        "right_wrist": wrist,
        "right_palm": palm,
    }


def _solve_config(chain: ChainSpec, target: Array, q0: Array, what: str) -> Array:
    q = solve_position_ik(chain, target, q0)
    err = float(np.linalg.norm(fk_eef(chain, q) - target))
    if err > 1e-4:
        raise ContractViolation(f"could not reach the {what} point {target} (residual {err:.2e})")
    return q


def make_scenario(family: str, seed: int, chain: ChainSpec | None = None) -> Scenario:
    """Build one deterministic scenario; the seed controls all jitter."""
    if family not in FAMILIES:
        raise ContractViolation(f"unknown family {family!r}; expected one of {FAMILIES}")
    if chain is None:
        chain = default_chain()
    rng = np.random.default_rng([FAMILY_IDS[family], seed])

    arm_start = _arm_pose(rng)
    robot_object = np.array([0.52, -0.26, 0.12]) + rng.uniform(-1, 1, 3) * [0.03, 0.03, 0.02]
    eef_start = np.array([0.32, 0.30, 0.45]) + rng.uniform(-1, 1, 3) * [0.03, 0.03, 0.03]

    if family == "stationary":
        human_object = np.array([0.78, 0.10, 0.12]) + rng.uniform(-1, 1, 3) * [0.03, 0.03, 0.02]
        arm_goal = {k: v.copy() for k, v in arm_start.items()}
        noise_scale = 0.0
    elif family == "reaching_far":
        human_object = np.array([0.50, 0.38, 0.12]) + rng.uniform(-1, 1, 3) * [0.03, 0.03, 0.02]
        gap_vec = human_object - robot_object
        gap = float(np.linalg.norm(gap_vec))
        if gap < FAR_GAP_MIN + 0.02:
            human_object = robot_object + gap_vec / gap * (FAR_GAP_MIN + 0.02)
    else:
        tight = seed % 2 == 1  # alternate tight and wide gaps across seeds
        gap = 0.035 if tight else 0.10 + 0.04 * float(rng.random())
        # Object sits on the robot's approach corridor just beyond its
        # goal, so paths that overshoot toward it read as ambiguous.
        direction = (robot_object + GRASP_OFFSET) - eef_start
        direction[2] = 0.0
        direction /= np.linalg.norm(direction)
        human_object = robot_object + gap * direction

    if family != "stationary":
        palm_goal = human_object + GRASP_OFFSET
        shift = palm_goal - arm_start["right_palm"]
        arm_goal = {k: v + shift for k, v in arm_start.items()}
        noise_scale = 0.008

    move_duration = 1.1 + 0.2 * float(rng.random())
    script = ReachScript(
        arm_start=arm_start,
        arm_goal=arm_goal,
        move_duration=move_duration,
        total_duration=3.0,
        noise_scale=noise_scale,
        seed=FAMILY_IDS[family] * 10_000 + seed,
    )

    robot_start = _solve_config(chain, eef_start, _IK_SEED_CONFIG, "start")
    robot_goal = _solve_config(chain, robot_object + GRASP_OFFSET, robot_start, "goal")

    # Centered on the joint-interpolated path so the nominal has to bend
    # around it, displaced laterally away from the watched object so the
    # bend goes toward that side of the workspace.  The near family gets a
    # larger sphere later along the path: with both objects close together
    # the detour must happen near the goal to affect the approach at all.
    if family == "reaching_near":
        frac, radius, offset = 0.65, 0.09, 0.05
    else:
        frac, radius, offset = 0.5, 0.06, 0.035
    mid = fk_eef(chain, robot_start + frac * (robot_goal - robot_start))
    tangent = (robot_object + GRASP_OFFSET) - eef_start
    tangent /= np.linalg.norm(tangent)
    lateral = (mid - human_object) - np.dot(mid - human_object, tangent) * tangent
    norm = float(np.linalg.norm(lateral))
    if norm > 1e-9:
        lateral /= norm
    else:
        lateral = np.array([0.0, 0.0, 1.0])
    obstacle_center = mid + offset * lateral + rng.uniform(-1, 1, 3) * [0.015, 0.015, 0.015]
    obstacles = ((obstacle_center, radius),)

    return Scenario(
        family=family,
        seed=seed,
        chain=chain,
        robot_start=robot_start,
        robot_goal=robot_goal,
        robot_object=robot_object,
        human_object=human_object,
        human_script=script,
        obstacles=obstacles,
    )


def generate_scenarios(family: str, seeds, chain: ChainSpec | None = None) -> list[Scenario]:
    """Deterministic scenario per seed for one family."""
    if chain is None:
        chain = default_chain()
    return [make_scenario(family, int(s), chain) for s in seeds]


# ---------------------------------------------------------------------------
# Scenario files
# ---------------------------------------------------------------------------


def scenario_to_dict(sc: Scenario) -> dict:
    return {
        "family": sc.family,
        "seed": sc.seed,
        "chain": sc.chain.name,
        "observation": sc.observation,
        "horizon": sc.horizon,
        "n_waypoints": sc.n_waypoints,
        "human_rate": sc.human_rate,
        "robot_start": [float(v) for v in sc.robot_start],
        "robot_goal": [float(v) for v in sc.robot_goal],
        "robot_object": [float(v) for v in sc.robot_object],
        "human_object": [float(v) for v in sc.human_object],
        "obstacles": [
            {"center": [float(v) for v in c], "radius": float(r)} for c, r in sc.obstacles
        ],
        "script": {
            "arm_start": {k: [float(v) for v in p] for k, p in sc.human_script.arm_start.items()},
            "arm_goal": {k: [float(v) for v in p] for k, p in sc.human_script.arm_goal.items()},
            "move_duration": sc.human_script.move_duration,
            "total_duration": sc.human_script.total_duration,
            "noise_scale": sc.human_script.noise_scale,
            "seed": sc.human_script.seed,
        },
    }


def scenario_from_dict(data: dict, chain: ChainSpec | None = None) -> Scenario:
    if chain is None:
        chain = load_chain(data.get("chain", "iiwa7"))
    script = data["script"]
    return Scenario(
        family=data["family"],
        seed=int(data["seed"]),
        chain=chain,
        robot_start=np.asarray(data["robot_start"], dtype=float),
        robot_goal=np.asarray(data["robot_goal"], dtype=float),
        robot_object=np.asarray(data["robot_object"], dtype=float),
        human_object=np.asarray(data["human_object"], dtype=float),
        human_script=ReachScript(
            arm_start={k: np.asarray(v, dtype=float) for k, v in script["arm_start"].items()},
            arm_goal={k: np.asarray(v, dtype=float) for k, v in script["arm_goal"].items()},
            move_duration=float(script["move_duration"]),
            total_duration=float(script["total_duration"]),
            noise_scale=float(script["noise_scale"]),
            seed=int(script["seed"]),
        ),
        obstacles=tuple(
            (np.asarray(o["center"], dtype=float), float(o["radius"]))
            for o in data.get("obstacles", [])
        ),
        observation=float(data.get("observation", 1.0)),
        horizon=float(data.get("horizon", 2.0)),
        n_waypoints=int(data.get("n_waypoints", 20)),
        human_rate=float(data.get("human_rate", 100.0)),
    )


def save_scenario(sc: Scenario, path: str | Path) -> None:
    Path(path).write_text(yaml.safe_dump(scenario_to_dict(sc), sort_keys=False))


def load_scenario(path: str | Path, chain: ChainSpec | None = None) -> Scenario:
    return scenario_from_dict(yaml.safe_load(Path(path).read_text()), chain)
