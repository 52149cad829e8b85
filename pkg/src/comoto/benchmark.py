"""Benchmark runner: all five methods over the scenario families.

One nominal trajectory is generated per scenario and shared by every
method (as the plan, the execution path, the optimization init, and
the deviation anchor).  Results are emitted as per-run CSV rows plus an
aggregated markdown table (mean over seeds with sample SD, best value
per family and metric in bold).
"""

from __future__ import annotations

import json
import time
from dataclasses import dataclass, field
from importlib import resources
from pathlib import Path

import numpy as np
import yaml

from .baselines import (
    SpeedAdjustParams,
    distvis_optimize,
    legible_optimize,
    nominal_trajectory,
    speed_adjusted_execute,
)
from .costs import CostContext, CostWeights
from .errors import ContractViolation
from .human_motion import PredictorOptions, extrapolate_skeleton, generate_reach, predict
from .metrics import GoalSet, MetricReport, evaluate_run
from .optimizer import OptimizerOptions, optimize
from .scenarios import FAMILIES, Scenario, generate_scenarios

Array = np.ndarray

METHODS = ("Nominal", "Speed-Adj", "Legible", "Dist+Vis", "CoMOTO")

#: Deterministic output: everything except wall time.
RESULT_COLUMNS = (
    "scenario_family",
    "seed",
    "method",
    "dst_pct",
    "vis_pct",
    "legibility",
    "nom_dev",
    "completed",
    "converged",
    "failed",
)

#: Per-run record including timing.
RUNS_COLUMNS = (
    "scenario_family",
    "seed",
    "method",
    "dst_pct",
    "vis_pct",
    "legibility",
    "nom_dev",
    "completed",
    "wall_time",
)

_FLOAT_COLUMNS = {"dst_pct", "vis_pct", "legibility", "nom_dev", "wall_time"}
_BOOL_COLUMNS = {"completed", "converged", "failed"}

METRIC_NAMES = ("dst_pct", "vis_pct", "legibility", "nom_dev")
_LOWER_IS_BETTER = {"nom_dev"}


@dataclass(frozen=True)
class RunConfig:
    """Fully resolved benchmark configuration."""

    families: tuple = FAMILIES
    seeds: tuple = (1, 2, 3, 4, 5)
    comoto_weights: CostWeights = CostWeights(
        alpha_dist=2.0, alpha_vis=0.02, alpha_legibility=200.0, alpha_nominal=0.3, alpha_smooth=0.02
    )
    legible_alpha: float = 250.0
    distvis_alpha_dist: float = 0.05
    distvis_alpha_vis: float = 0.2
    distvis_tau_n: float = 0.5
    nominal_smooth_weight: float = 1e-3
    nominal_obstacle_weight: float = 200.0
    nominal_margin: float = 0.05
    optimizer: OptimizerOptions = OptimizerOptions(max_iters=1200, grad_tol=5.0, step_init=0.02)
    d_stop: float = 0.06
    d_slow: float = 0.10
    control_rate: float = 100.0
    timeout_factor: float = 3.0
    separation_threshold: float = 0.20
    fov_deg: float = 160.0
    eps_m: float = 1e-4
    sigma_floor: float = 0.01
    prediction: PredictorOptions = PredictorOptions()

    def __post_init__(self):
        if len(self.seeds) == 0 or len(set(self.seeds)) != len(self.seeds):
            raise ContractViolation("seeds must be non-empty and distinct")
        for fam in self.families:
            if fam not in FAMILIES:
                raise ContractViolation(f"unknown family {fam!r}")


def default_config_dict() -> dict:
    text = resources.files("comoto.data").joinpath("default_config.yaml").read_text()
    return yaml.safe_load(text)


def _merge(base: dict, override: dict) -> dict:
    out = dict(base)
    for key, value in override.items():
        if isinstance(value, dict) and isinstance(out.get(key), dict):
            out[key] = _merge(out[key], value)
        else:
            out[key] = value
    return out


def _check_keys(default: dict, override: dict, path: str = "") -> None:
    # A misspelled key would otherwise fall back to the default silently.
    for key, value in override.items():
        where = f"{path}.{key}" if path else str(key)
        if key not in default:
            raise ContractViolation(f"unknown config key {where!r}")
        if isinstance(value, dict) and isinstance(default[key], dict):
            _check_keys(default[key], value, where)


def config_from_dict(data: dict) -> RunConfig:
    defaults = default_config_dict()
    _check_keys(defaults, data or {})
    data = _merge(defaults, data or {})
    bench = data["benchmark"]
    weights = data["weights"]
    opt = data["optimizer"]
    speed = data["speed_adjust"]
    met = data["metrics"]
    costs = data["costs"]
    pred = data["prediction"]
    return RunConfig(
        families=tuple(bench["families"]),
        seeds=tuple(int(s) for s in bench["seeds"]),
        comoto_weights=CostWeights(**weights["comoto"]),
        legible_alpha=float(weights["legible"]["alpha"]),
        distvis_alpha_dist=float(weights["distvis"]["alpha_dist"]),
        distvis_alpha_vis=float(weights["distvis"]["alpha_vis"]),
        distvis_tau_n=float(weights["distvis"]["tau_n"]),
        nominal_smooth_weight=float(weights["nominal"]["smooth_weight"]),
        nominal_obstacle_weight=float(weights["nominal"]["obstacle_weight"]),
        nominal_margin=float(weights["nominal"]["margin"]),
        optimizer=OptimizerOptions(
            max_iters=int(opt["max_iters"]),
            grad_tol=float(opt["grad_tol"]),
            step_init=float(opt["step_init"]),
        ),
        d_stop=float(speed["d_stop"]),
        d_slow=float(speed["d_slow"]),
        control_rate=float(speed["control_rate"]),
        timeout_factor=float(speed["timeout_factor"]),
        separation_threshold=float(met["separation_threshold"]),
        fov_deg=float(met["fov_deg"]),
        eps_m=float(costs["eps_m"]),
        sigma_floor=float(costs["sigma_floor"]),
        prediction=PredictorOptions(
            sigma0=float(pred["sigma0"]),
            kappa=float(pred["kappa"]),
            sigma_floor=float(pred["sigma_floor"]),
        ),
    )


def load_config(path: str | Path | None = None) -> RunConfig:
    """Default configuration, optionally overridden by a YAML file."""
    if path is None:
        return config_from_dict({})
    return config_from_dict(yaml.safe_load(Path(path).read_text()) or {})


@dataclass
class ScenarioBundle:
    """Everything derived from one scenario, shared across methods."""

    scenario: Scenario
    truth: object
    ctx: CostContext
    nominal: object
    goals: GoalSet
    speed_params: SpeedAdjustParams


def prepare_scenario(sc: Scenario, cfg: RunConfig) -> ScenarioBundle:
    """Ground truth, prediction, shared nominal, and metric inputs."""
    truth = generate_reach(sc.human_script, sc.human_rate)
    observed = truth.prefix(sc.observation)
    arm_pred = predict(
        observed, sc.n_waypoints, sc.dt, goal=sc.predictor_goal, options=cfg.prediction
    )
    full_pred = extrapolate_skeleton(arm_pred)
    nominal = nominal_trajectory(
        sc.chain,
        sc.robot_start,
        sc.robot_goal,
        sc.obstacles,
        n_waypoints=sc.n_waypoints,
        dt=sc.dt,
        t0=sc.robot_t0,
        smooth_weight=cfg.nominal_smooth_weight,
        obstacle_weight=cfg.nominal_obstacle_weight,
        margin=cfg.nominal_margin,
    )
    ctx = CostContext(
        chain=sc.chain,
        goal_config=sc.robot_goal,
        prediction=full_pred,
        nominal=nominal,
        object_pos=sc.human_object,
        eps_m=cfg.eps_m,
        sigma_floor=cfg.sigma_floor,
    )
    goals = GoalSet(true_goal=sc.goal_point, distractors=(sc.human_object,))
    speed_params = SpeedAdjustParams(
        d_stop=cfg.d_stop,
        d_slow=cfg.d_slow,
        control_rate=cfg.control_rate,
        timeout=cfg.timeout_factor * nominal.duration,
    )
    return ScenarioBundle(
        scenario=sc, truth=truth, ctx=ctx, nominal=nominal, goals=goals, speed_params=speed_params
    )


def run_method(name: str, bundle: ScenarioBundle, cfg: RunConfig):
    """Plan or execute one method; returns (planned, converged)."""
    if name == "Nominal":
        return bundle.nominal, True
    if name == "Speed-Adj":
        trace = speed_adjusted_execute(
            bundle.scenario.chain, bundle.nominal, bundle.truth, bundle.speed_params
        )
        return trace, True
    if name == "Legible":
        result = legible_optimize(bundle.ctx, bundle.nominal, cfg.optimizer, cfg.legible_alpha)
        return result.trajectory, result.converged
    if name == "Dist+Vis":
        result = distvis_optimize(
            bundle.ctx,
            bundle.nominal,
            cfg.optimizer,
            cfg.distvis_alpha_dist,
            cfg.distvis_alpha_vis,
            cfg.distvis_tau_n,
        )
        return result.trajectory, result.converged
    if name == "CoMOTO":
        result = optimize(bundle.ctx, cfg.comoto_weights, bundle.nominal, cfg.optimizer)
        return result.trajectory, result.converged
    raise ContractViolation(f"unknown method {name!r}")


def _failed_row(family: str, seed: int, method: str) -> dict:
    return {
        "scenario_family": family,
        "seed": seed,
        "method": method,
        "dst_pct": float("nan"),
        "vis_pct": float("nan"),
        "legibility": float("nan"),
        "nom_dev": float("nan"),
        "completed": False,
        "converged": False,
        "failed": True,
        "wall_time": 0.0,
    }


def run_benchmark(cfg: RunConfig, chain=None) -> list[dict]:
    """All (family, seed, method) rows, deterministically ordered."""
    rows = []
    for family in cfg.families:
        for sc in generate_scenarios(family, cfg.seeds, chain):
            bundle = prepare_scenario(sc, cfg)
            for method in METHODS:
                start = time.perf_counter()
                try:
                    planned, converged = run_method(method, bundle, cfg)
                    report = evaluate_run(
                        sc.chain,
                        planned,
                        bundle.truth,
                        bundle.nominal,
                        bundle.goals,
                        gaze_target=sc.human_object,
                        threshold=cfg.separation_threshold,
                        fov_deg=cfg.fov_deg,
                    )
                    rows.append(
                        {
                            "scenario_family": family,
                            "seed": sc.seed,
                            "method": method,
                            "dst_pct": report.dst_pct,
                            "vis_pct": report.vis_pct,
                            "legibility": report.legibility,
                            "nom_dev": report.nom_dev,
                            "completed": report.completed,
                            "converged": converged,
                            "failed": False,
                            "wall_time": time.perf_counter() - start,
                        }
                    )
                except Exception:
                    rows.append(_failed_row(family, sc.seed, method))
    order = {m: i for i, m in enumerate(METHODS)}
    fam_order = {f: i for i, f in enumerate(cfg.families)}
    rows.sort(key=lambda r: (fam_order[r["scenario_family"]], r["seed"], order[r["method"]]))
    return rows


# ---------------------------------------------------------------------------
# Report emission
# ---------------------------------------------------------------------------


def _format_cell(value) -> str:
    if isinstance(value, bool):
        return "true" if value else "false"
    if isinstance(value, float):
        return repr(value)
    return str(value)


def _rows_to_csv(rows: list[dict], columns) -> str:
    lines = [",".join(columns)]
    for row in rows:
        lines.append(",".join(_format_cell(row[c]) for c in columns))
    return "\n".join(lines) + "\n"


def read_rows(path: str | Path) -> list[dict]:
    """Parse a benchmark CSV back into typed rows."""
    lines = Path(path).read_text().splitlines()
    columns = lines[0].split(",")
    rows = []
    for ln in lines[1:]:
        if not ln.strip():
            continue
        values = ln.split(",")
        row = {}
        for col, raw in zip(columns, values):
            if col in _FLOAT_COLUMNS:
                row[col] = float(raw)
            elif col in _BOOL_COLUMNS:
                row[col] = raw == "true"
            elif col == "seed":
                row[col] = int(raw)
            else:
                row[col] = raw
        rows.append(row)
    return rows


def aggregate_rows(rows: list[dict]) -> dict:
    """(family, method) -> metric -> (mean, sample SD), skipping failed rows."""
    out: dict = {}
    for row in rows:
        if row.get("failed"):
            continue
        fam, method = row["scenario_family"], row["method"]
        out.setdefault(fam, {}).setdefault(method, []).append(row)
    agg: dict = {}
    for fam, methods in out.items():
        agg[fam] = {}
        for method, mrows in methods.items():
            stats = {}
            for name in METRIC_NAMES:
                vals = np.asarray([r[name] for r in mrows], dtype=float)
                sd = 0.0 if vals.size == 1 else float(np.std(vals, ddof=1))
                stats[name] = (float(np.mean(vals)), sd)
            stats["n"] = len(mrows)
            stats["completed_all"] = all(r["completed"] for r in mrows)
            agg[fam][method] = stats
    return agg


_METRIC_HEADERS = (
    ("dst_pct", "Dst. (%)"),
    ("vis_pct", "Vis. (%)"),
    ("legibility", "Leg."),
    ("nom_dev", "Nom. (m²)"),
)


def _fmt_stat(name: str, stat) -> str:
    mean, sd = stat
    digits = 2 if name == "nom_dev" else 1
    return f"{mean:.{digits}f} ± {sd:.{digits}f}"


def render_markdown(rows: list[dict]) -> str:
    """Aggregated per-family table, best value per metric in bold.

    Lower is better for the nominal-deviation column; the Nominal row
    shows n/a there (it is the reference trajectory).
    """
    agg = aggregate_rows(rows)
    families = list(dict.fromkeys(r["scenario_family"] for r in rows))
    lines = ["# Benchmark results", ""]
    for fam in families:
        methods = [m for m in METHODS if m in agg.get(fam, {})]
        lines.append(f"## {fam}")
        lines.append("")
        lines.append("| Method | " + " | ".join(h for _, h in _METRIC_HEADERS) + " |")
        lines.append("|" + "---|" * (len(_METRIC_HEADERS) + 1))
        best: dict[str, str] = {}
        for name, _ in _METRIC_HEADERS:
            candidates = {
                m: agg[fam][m][name][0]
                for m in methods
                if not (name == "nom_dev" and m == "Nominal")
            }
            candidates = {m: v for m, v in candidates.items() if np.isfinite(v)}
            if candidates:
                pick = min if name in _LOWER_IS_BETTER else max
                best[name] = pick(candidates, key=candidates.get)
        for m in methods:
            cells = []
            for name, _ in _METRIC_HEADERS:
                if name == "nom_dev" and m == "Nominal":
                    cells.append("n/a")
                    continue
                cell = _fmt_stat(name, agg[fam][m][name])
                if best.get(name) == m:
                    cell = f"**{cell}**"
                cells.append(cell)
            lines.append(f"| {m} | " + " | ".join(cells) + " |")
        lines.append("")
    return "\n".join(lines)


def emit_report(rows: list[dict], fmt: str, path: str | Path) -> Path:
    """Write rows in the requested format; returns the output path."""
    if len(rows) == 0:
        raise ContractViolation("no rows to report")
    path = Path(path)
    try:
        if fmt == "csv":
            columns = [c for c in RESULT_COLUMNS if c in rows[0]]
            path.write_text(_rows_to_csv(rows, columns))
        elif fmt == "json":
            path.write_text(json.dumps(rows, indent=2, default=str) + "\n")
        elif fmt == "markdown":
            path.write_text(render_markdown(rows))
        else:
            raise ContractViolation(f"unknown report format {fmt!r}")
    except OSError as exc:
        raise OSError(f"cannot write report to {path}: {exc}") from exc
    return path


def write_benchmark_outputs(rows: list[dict], out_dir: str | Path, formats=("csv", "json", "markdown")) -> dict:
    """Standard artifact set: results.csv, runs.csv, aggregate.json, table.md."""
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    paths = {}
    result_rows = [{c: r[c] for c in RESULT_COLUMNS} for r in rows]
    runs_rows = [{c: r[c] for c in RUNS_COLUMNS} for r in rows]
    if "csv" in formats:
        paths["results"] = out_dir / "results.csv"
        paths["results"].write_text(_rows_to_csv(result_rows, RESULT_COLUMNS))
        paths["runs"] = out_dir / "runs.csv"
        paths["runs"].write_text(_rows_to_csv(runs_rows, RUNS_COLUMNS))
    if "json" in formats:
        agg = aggregate_rows(rows)
        paths["aggregate"] = out_dir / "aggregate.json"
        paths["aggregate"].write_text(json.dumps(agg, indent=2, default=list) + "\n")
    if "markdown" in formats:
        paths["table"] = out_dir / "table.md"
        paths["table"].write_text(render_markdown(rows))
    return paths
