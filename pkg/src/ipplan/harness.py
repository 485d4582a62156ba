"""Benchmark harness: configs, synthetic worlds, sweeps, and persistence.

A sweep expands (method x seed) against deterministic synthetic instances,
writes one CSV row per episode plus a JSON report per run and a JSON
snapshot per instance, and prints mean +/- standard-error summaries.
``validate_reports`` closes the loop by re-deriving every stored result
from its instance snapshot.
"""

from __future__ import annotations

import csv
import dataclasses
import json
import math
import time
from dataclasses import dataclass
from pathlib import Path

import numpy as np
from scipy.linalg import cho_solve

try:
    import tomllib  # py311+
except ModuleNotFoundError:  # pragma: no cover - py310 fallback
    import tomli as tomllib

from . import bounds as bounds_mod
from .belief import (
    Belief,
    KernelSpec,
    SensorModel,
    build_prior,
    default_characterization,
    kernel_matrix,
    update,
)
from .envgraph import (
    EnvGraph,
    PathEncoding,
    build_grid,
    graph_from_json,
    graph_to_json,
    shortest_costs_to_goal,
    validate_path,
)
from .errors import IpplanError
from .multiagent import plan_fleet
from .numerics import cholesky_spd, spd_inverse
from .objectives import (
    DesignWeights,
    Objective,
    eval_design,
    eval_ei_prediction,
)
from .planner import (
    PlannerConfig,
    SolveReport,
    aspo_plan,
    greedy_baseline,
    random_baseline,
)
from .refine import select_sensors

METHODS = ("aspo", "greedy", "random", "exact", "relax_round", "b_surrogate")

CSV_COLUMNS = [
    "run_id",
    "method",
    "objective",
    "seed",
    "agent",
    "n",
    "m",
    "grid_side",
    "budget",
    "value",
    "joint_value",
    "runtime_s",
    "replans",
    "truncated",
    "lower_bound",
    "gap_delta",
    "gap_ratio_a",
    "gap_ratio_d",
    "fw_gap",
    "relaxation",
    "mm_k",
    "mm_value",
    "status",
    "error",
]


@dataclass(frozen=True)
class ExperimentConfig:
    """Everything a sweep needs; file values < CLI overrides."""

    grid_side: int = 10
    edge_weight_mode: str = "unit"
    extent: float | None = None
    graph_json: str | None = None
    objective: str = "a"
    budget: float | str = "2x"
    methods: tuple[str, ...] = ("aspo", "greedy", "random")
    seeds: tuple[int, ...] = (0, 1, 2)
    runtime_cap_s: float = 120.0
    kernel_family: str = "squared_exponential"
    length_scale: float = 1.0
    prediction_count: int = 20
    sigma: float = 1.0
    execute_steps: int = 1
    budget_resolution: float | None = None
    agents: int = 1
    adaptive: bool = False  # log per-step net EI even for design objectives
    world: str = "gp"  # gp | interest
    compute_bounds: bool = True
    relaxation: str = "walk_polytope"
    multimodal_k: int = 0
    multimodal_ladder: tuple[float, ...] = ()
    out_dir: str = "results"

    def __post_init__(self) -> None:
        Objective.parse(str(self.objective))  # fail fast on typos
        for m in self.methods:
            if m not in METHODS:
                raise ValueError(f"unknown method {m!r}; choose from {METHODS}")
        if self.world not in ("gp", "interest"):
            raise ValueError("world must be 'gp' or 'interest'")
        if self.agents < 1:
            raise ValueError("agents must be >= 1")

    @property
    def objective_parsed(self) -> Objective:
        return Objective.parse(str(self.objective))

    @classmethod
    def from_file(cls, path: str | Path, overrides: dict | None = None) -> ExperimentConfig:
        with open(path, "rb") as fh:
            raw = tomllib.load(fh)
        return cls.from_dict({**raw, **(overrides or {})})

    @classmethod
    def from_dict(cls, raw: dict) -> ExperimentConfig:
        known = {f.name for f in dataclasses.fields(cls)}
        unknown = set(raw) - known
        if unknown:
            raise ValueError(f"unknown config keys: {sorted(unknown)}")
        clean = dict(raw)
        for key in ("methods", "seeds", "multimodal_ladder"):
            if key in clean and clean[key] is not None:
                clean[key] = tuple(clean[key])
        return cls(**clean)

    def replace(self, **kw) -> ExperimentConfig:
        return dataclasses.replace(self, **kw)


def resolve_budget(spec: float | str, g: EnvGraph) -> float:
    """Absolute number, or '<factor>x' the cheapest start-to-goal cost."""
    if isinstance(spec, str):
        text = spec.strip().lower()
        if not text.endswith("x"):
            return float(text)
        factor = float(text[:-1])
        return factor * float(shortest_costs_to_goal(g)[g.start])
    return float(spec)


def sample_ground_truth(
    g: EnvGraph, kernel: KernelSpec, seed: int, obs_noise: float = 1.0
) -> np.ndarray:
    """Smooth scalar field over the nodes, reproducible from the seed.

    Independent uniform draws at every node are treated as noisy field
    observations; the returned field is a posterior sample of a zero-mean
    process with the given kernel conditioned on them. Smoothness tracks the
    kernel length scale instead of the raw white noise.
    """
    rng = np.random.default_rng([seed, 101])
    u = rng.uniform(0.0, 1.0, g.n)
    k_nodes = kernel_matrix(kernel, g.coords, g.coords)
    gram = k_nodes + (obs_noise**2 + 1e-9) * np.eye(g.n)
    lower = cholesky_spd(gram)
    mean = k_nodes @ cho_solve((lower, True), u)
    cov = k_nodes - k_nodes @ cho_solve((lower, True), k_nodes)
    cov_l = cholesky_spd(cov, jitter=1e-8)
    return mean + cov_l @ rng.standard_normal(g.n)


@dataclass(frozen=True)
class InterestMap:
    """Average of a handful of planar Gaussian bumps, peak-normalized to 1."""

    centers: np.ndarray
    bandwidth: float
    scale: float
    values: np.ndarray  # per node

    def at(self, points: np.ndarray) -> np.ndarray:
        pts = np.atleast_2d(np.asarray(points, dtype=float))
        d2 = ((pts[:, None, :] - self.centers[None, :, :]) ** 2).sum(axis=2)
        raw = np.exp(-0.5 * d2 / self.bandwidth**2).mean(axis=1) / (
            2.0 * math.pi * self.bandwidth**2
        )
        return raw / self.scale


def sample_interest_map(g: EnvGraph, seed: int) -> InterestMap:
    """8 to 12 random bumps over the node bounding box, max value 1.0."""
    rng = np.random.default_rng([seed, 202])
    k = int(rng.integers(8, 13))
    lo = g.coords.min(axis=0)
    hi = g.coords.max(axis=0)
    span = float(np.max(hi - lo))
    centers = rng.uniform(lo, hi, size=(k, 2))
    bandwidth = 0.18 * span
    probe = InterestMap(centers=centers, bandwidth=bandwidth, scale=1.0, values=np.zeros(0))
    raw = probe.at(g.coords)
    scale = float(np.max(raw))
    return InterestMap(
        centers=centers,
        bandwidth=bandwidth,
        scale=scale,
        values=raw / scale,
    )


@dataclass(frozen=True)
class Instance:
    g: EnvGraph
    kernel: KernelSpec
    prior_cov: np.ndarray
    model: SensorModel
    prior_belief: Belief
    truth: np.ndarray
    interest: InterestMap
    budget: float
    seed: int


def build_instance(cfg: ExperimentConfig, seed: int) -> Instance:
    if cfg.graph_json:
        g = graph_from_json(Path(cfg.graph_json).read_text())
    else:
        g = build_grid(
            cfg.grid_side,
            cfg.edge_weight_mode,
            prediction_count=cfg.prediction_count,
            extent=cfg.extent,
        )
    kernel = KernelSpec(cfg.kernel_family, cfg.length_scale)
    prior_cov = build_prior(g.prediction_points, kernel)
    model = default_characterization(g, prior_cov, kernel, sigma=cfg.sigma)
    belief = Belief.from_prior(np.zeros(len(prior_cov)), prior_cov)
    return Instance(
        g=g,
        kernel=kernel,
        prior_cov=prior_cov,
        model=model,
        prior_belief=belief,
        truth=sample_ground_truth(g, kernel, seed),
        interest=sample_interest_map(g, seed),
        budget=resolve_budget(cfg.budget, g),
        seed=seed,
    )


def make_world(inst: Instance, cfg: ExperimentConfig, seed: int):
    """Measurement oracle: field value plus fresh per-run sensor noise."""
    field_vals = (
        -inst.interest.values if cfg.world == "interest" else inst.truth
    )
    rng = np.random.default_rng([seed, 303])
    sigma = inst.model.sigma

    def world(node: int) -> float:
        return float(field_vals[node] + sigma[node] * rng.standard_normal())

    return world


def _planner_cfg(cfg: ExperimentConfig, inst: Instance, seed: int) -> PlannerConfig:
    return PlannerConfig(
        objective=cfg.objective_parsed,
        budget=inst.budget,
        execute_steps=cfg.execute_steps,
        budget_resolution=cfg.budget_resolution,
        runtime_cap_s=cfg.runtime_cap_s,
        rng_seed=seed,
        track_ei=cfg.adaptive,
    )


def _design_value_of_path(inst: Instance, obj: Objective, p: PathEncoding) -> float:
    return eval_design(
        obj,
        DesignWeights.from_path(inst.g, p),
        inst.model,
        inst.prior_cov,
        prior_precision=inst.prior_belief.prior_precision,
    )


def _run_single(
    method: str, cfg: ExperimentConfig, inst: Instance, seed: int
) -> SolveReport:
    obj = cfg.objective_parsed
    pcfg = _planner_cfg(cfg, inst, seed)
    world = make_world(inst, cfg, seed)
    if method == "aspo":
        return aspo_plan(inst.g, inst.model, inst.prior_belief, pcfg, world)
    if method == "greedy":
        return greedy_baseline(inst.g, inst.model, inst.prior_belief, pcfg, world)
    if method == "random":
        return random_baseline(inst.g, inst.model, inst.prior_belief, pcfg, world)
    t0 = time.perf_counter()
    if method == "exact":
        res = bounds_mod.exact_small(
            inst.g, inst.model, inst.prior_cov, obj, inst.budget,
            runtime_cap_s=cfg.runtime_cap_s,
        )
        path, truncated = res.path, res.truncated
    elif method == "b_surrogate":
        res = bounds_mod.exact_small(
            inst.g, inst.model, inst.prior_cov, Objective("B"), inst.budget,
            runtime_cap_s=cfg.runtime_cap_s,
        )
        path, truncated = res.path, res.truncated
    elif method == "relax_round":
        path = bounds_mod.relax_and_round(
            inst.g, inst.model, inst.prior_cov, obj, inst.budget,
            kind=cfg.relaxation,
        )
        truncated = False
    else:
        raise ValueError(f"unknown method {method!r}")
    value = _design_value_of_path(inst, obj, path)
    return SolveReport(
        method=method,
        objective=obj,
        path=path,
        objective_value=value,
        budget=inst.budget,
        budget_spent=path.total_cost,
        runtime_s=time.perf_counter() - t0,
        truncated=truncated,
        seed=seed,
        replans=0,
        measurements=(),
    )


def instance_to_dict(inst: Instance, cfg: ExperimentConfig) -> dict:
    return {
        "graph": json.loads(graph_to_json(inst.g)),
        "kernel_family": inst.kernel.family,
        "length_scale": inst.kernel.length_scale,
        "sigma": float(np.max(inst.model.sigma)),
        "budget": inst.budget,
        "seed": inst.seed,
        "world": cfg.world,
        "truth": inst.truth.tolist(),
        "interest": inst.interest.values.tolist(),
    }


def _rebuild_from_instance(payload: dict) -> Instance:
    g = graph_from_json(json.dumps(payload["graph"]))
    kernel = KernelSpec(payload["kernel_family"], payload["length_scale"])
    prior_cov = build_prior(g.prediction_points, kernel)
    model = default_characterization(g, prior_cov, kernel, sigma=payload["sigma"])
    belief = Belief.from_prior(np.zeros(len(prior_cov)), prior_cov)
    return Instance(
        g=g,
        kernel=kernel,
        prior_cov=prior_cov,
        model=model,
        prior_belief=belief,
        truth=np.array(payload["truth"]),
        interest=InterestMap(
            centers=np.zeros((1, 2)),
            bandwidth=1.0,
            scale=1.0,
            values=np.array(payload["interest"]),
        ),
        budget=float(payload["budget"]),
        seed=int(payload["seed"]),
    )


@dataclass
class ExperimentResult:
    rows: list[dict]
    summary: dict[str, dict[str, float]]
    csv_path: Path | None


def _blank_row(cfg: ExperimentConfig, inst: Instance, method: str, seed: int) -> dict:
    return {
        "run_id": f"{cfg.objective}-{method}-seed{seed}",
        "method": method,
        "objective": str(cfg.objective_parsed),
        "seed": seed,
        "agent": 0,
        "n": inst.g.n,
        "m": inst.model.m,
        "grid_side": cfg.grid_side if not cfg.graph_json else "",
        "budget": inst.budget,
        "value": "",
        "joint_value": "",
        "runtime_s": "",
        "replans": "",
        "truncated": "",
        "lower_bound": "",
        "gap_delta": "",
        "gap_ratio_a": "",
        "gap_ratio_d": "",
        "fw_gap": "",
        "relaxation": "",
        "mm_k": "",
        "mm_value": "",
        "status": "ok",
        "error": "",
    }


def _attach_bound(row: dict, bound: bounds_mod.BoundReport | None) -> None:
    if bound is None:
        return
    row.update(
        lower_bound=bound.lower,
        gap_delta=bound.gap_delta,
        gap_ratio_a=bound.gap_ratio_a,
        gap_ratio_d=bound.gap_ratio_d,
        fw_gap=bound.fw_gap,
        relaxation=bound.relaxation_kind,
    )


def run_experiment(cfg: ExperimentConfig, quiet: bool = False) -> ExperimentResult:
    """Full sweep: every configured method on every seed, persisted to disk."""
    obj = cfg.objective_parsed
    out_dir = Path(cfg.out_dir)
    reports_dir = out_dir / "reports"
    inst_dir = out_dir / "instances"
    for d in (out_dir, reports_dir, inst_dir):
        d.mkdir(parents=True, exist_ok=True)

    rows: list[dict] = []
    for seed in cfg.seeds:
        inst = build_instance(cfg, seed)
        inst_file = inst_dir / f"instance-seed{seed}.json"
        inst_file.write_text(json.dumps(instance_to_dict(inst, cfg), indent=1))

        relax: bounds_mod.RelaxResult | None = None
        if cfg.compute_bounds and obj.is_design:
            relax = bounds_mod.relax_lower_bound(
                inst.g, inst.model, inst.prior_cov, obj, inst.budget,
                kind=cfg.relaxation,
            )

        for method in cfg.methods:
            row = _blank_row(cfg, inst, method, seed)
            payload: dict = {
                "run_id": row["run_id"],
                "config": dataclasses.asdict(cfg),
                "instance_file": inst_file.name,
            }
            try:
                if cfg.agents > 1 and method == "aspo":
                    fleet = plan_fleet(
                        inst.g, inst.model, inst.prior_belief,
                        _planner_cfg(cfg, inst, seed), cfg.agents,
                        make_world(inst, cfg, seed),
                    )
                    payload["fleet"] = fleet.to_dict()
                    agent_rows = []
                    for i, rep in enumerate(fleet.agent_reports):
                        arow = dict(row)
                        arow["run_id"] = f"{row['run_id']}-agent{i}"
                        arow["agent"] = i
                        _fill_solve(arow, rep)
                        arow["joint_value"] = fleet.joint_value
                        agent_rows.append(arow)
                    self_rows = agent_rows
                else:
                    rep = _run_single(method, cfg, inst, seed)
                    payload["solve"] = rep.to_dict()
                    _fill_solve(row, rep)
                    if cfg.multimodal_k > 0 and obj.is_design:
                        mm = select_sensors(
                            inst.g, inst.model, inst.prior_cov, obj,
                            rep.path, cfg.multimodal_k,
                            list(cfg.multimodal_ladder),
                        )
                        row["mm_k"] = cfg.multimodal_k
                        row["mm_value"] = mm.rounded_value
                        payload["multimodal"] = {
                            "k": mm.k,
                            "chosen": {str(k): v for k, v in mm.chosen.items()},
                            "relaxed_value": mm.relaxed_value,
                            "relaxed_lower": mm.relaxed_lower,
                            "rounded_value": mm.rounded_value,
                            "rounded_additive_value": mm.rounded_additive_value,
                        }
                    self_rows = [row]
                # the relaxation certifies single paths; a fleet's joint
                # design can legitimately beat it, so skip bound columns there
                if relax is not None and "fleet" not in payload:
                    for r in self_rows:
                        bound = bounds_mod.gap(
                            float(r["value"]),
                            relax.lower,
                            inst.model.m,
                            relaxation_kind=relax.kind,
                            iterations=relax.iterations,
                            fw_gap=relax.fw_gap,
                        )
                        _attach_bound(r, bound)
                    payload["bound"] = {
                        "lower": relax.lower,
                        "fw_gap": relax.fw_gap,
                        "iterations": relax.iterations,
                        "kind": relax.kind,
                    }
            except (IpplanError, ValueError) as exc:
                row["status"] = "error"
                row["error"] = str(exc)
                self_rows = [row]
                payload["error"] = str(exc)
            rows.extend(self_rows)
            (reports_dir / f"{row['run_id']}.json").write_text(
                json.dumps(payload, indent=1)
            )

    csv_path = out_dir / "results.csv"
    with open(csv_path, "w", newline="") as fh:
        writer = csv.DictWriter(fh, fieldnames=CSV_COLUMNS)
        writer.writeheader()
        writer.writerows(rows)
    summary = summarize(rows)
    if not quiet:
        print(format_summary(summary))
    return ExperimentResult(rows=rows, summary=summary, csv_path=csv_path)


def _fill_solve(row: dict, rep: SolveReport) -> None:
    row["value"] = rep.objective_value
    row["runtime_s"] = rep.runtime_s
    row["replans"] = rep.replans
    row["truncated"] = rep.truncated


def summarize(rows: list[dict]) -> dict[str, dict[str, float]]:
    """Per-method mean and standard error of value and runtime."""
    out: dict[str, dict[str, float]] = {}
    for method in sorted({r["method"] for r in rows}):
        vals = [
            float(r["value"])
            for r in rows
            if r["method"] == method and r["status"] == "ok" and r["value"] != ""
        ]
        times = [
            float(r["runtime_s"])
            for r in rows
            if r["method"] == method and r["status"] == "ok" and r["runtime_s"] != ""
        ]
        if not vals:
            out[method] = {"runs": 0}
            continue
        arr = np.array(vals)
        tarr = np.array(times)
        out[method] = {
            "runs": len(vals),
            "value_mean": float(arr.mean()),
            "value_stderr": float(arr.std(ddof=1) / math.sqrt(len(arr)))
            if len(arr) > 1
            else 0.0,
            "runtime_mean": float(tarr.mean()),
            "runtime_stderr": float(tarr.std(ddof=1) / math.sqrt(len(tarr)))
            if len(tarr) > 1
            else 0.0,
        }
    return out


def format_summary(summary: dict[str, dict[str, float]]) -> str:
    lines = []
    for method, stats in summary.items():
        if stats.get("runs", 0) == 0:
            lines.append(f"{method:>12}: no successful runs")
            continue
        lines.append(
            f"{method:>12}: value {stats['value_mean']:.6g} "
            f"+/- {stats['value_stderr']:.2g}  "
            f"runtime {stats['runtime_mean']:.3g}s "
            f"+/- {stats['runtime_stderr']:.2g} "
            f"({stats['runs']} runs)"
        )
    return "\n".join(lines)


def gap_study(
    cfg: ExperimentConfig,
    budgets: list[float | str],
    quiet: bool = False,
) -> list[dict]:
    """Certified-gap trend: planner value vs relaxation bound per budget."""
    obj = cfg.objective_parsed
    if not obj.is_design:
        raise ValueError("gap studies need a design objective")
    out_dir = Path(cfg.out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    rows: list[dict] = []
    for spec in budgets:
        for seed in cfg.seeds:
            inst = build_instance(cfg.replace(budget=spec), seed)
            rep = aspo_plan(
                inst.g, inst.model, inst.prior_belief,
                _planner_cfg(cfg, inst, seed), make_world(inst, cfg, seed),
            )
            relax = bounds_mod.relax_lower_bound(
                inst.g, inst.model, inst.prior_cov, obj, inst.budget,
                kind=cfg.relaxation,
            )
            bound = bounds_mod.gap(
                rep.objective_value,
                relax.lower,
                inst.model.m,
                relaxation_kind=relax.kind,
                iterations=relax.iterations,
                fw_gap=relax.fw_gap,
            )
            rows.append(
                {
                    "budget_spec": str(spec),
                    "budget": inst.budget,
                    "seed": seed,
                    "objective": str(obj),
                    "upper": rep.objective_value,
                    "lower": relax.lower,
                    "gap_delta": bound.gap_delta,
                    "gap_ratio_a": bound.gap_ratio_a,
                    "gap_ratio_d": bound.gap_ratio_d,
                }
            )
    csv_path = out_dir / "gap.csv"
    with open(csv_path, "w", newline="") as fh:
        writer = csv.DictWriter(fh, fieldnames=list(rows[0].keys()))
        writer.writeheader()
        writer.writerows(rows)
    if not quiet:
        for spec in dict.fromkeys(r["budget_spec"] for r in rows):
            deltas = [r["gap_delta"] for r in rows if r["budget_spec"] == spec]
            print(
                f"budget {spec}: median gap per prediction point "
                f"{float(np.median(deltas)):.6g} over {len(deltas)} seeds"
            )
    return rows


def high_interest_trace(
    inst: Instance, belief: Belief, threshold: float = 0.4
) -> float:
    """Posterior variance mass left on prediction points in hot regions."""
    interest_at_pred = inst.interest.at(inst.g.prediction_points)
    hot = interest_at_pred >= threshold
    if not np.any(hot):
        return 0.0
    cov = spd_inverse(belief.precision)
    return float(np.sum(np.diag(cov)[hot]))


def validate_reports(out_dir: str | Path, quiet: bool = False) -> bool:
    """Re-derive every stored run from its instance snapshot and re-check it.

    A report passes when each recorded path is feasible for the recorded
    budget and the stored objective value matches a fresh recomputation.
    """
    out_dir = Path(out_dir)
    reports = sorted((out_dir / "reports").glob("*.json"))
    if not reports:
        if not quiet:
            print(f"no reports under {out_dir}")
        return False
    all_ok = True
    for path in reports:
        payload = json.loads(path.read_text())
        status, detail = _validate_one(out_dir, payload)
        all_ok &= status
        if not quiet:
            print(f"{'OK  ' if status else 'FAIL'} {path.name}{detail}")
    return all_ok


def _check_solve(inst: Instance, solve: dict) -> tuple[bool, str]:
    p = PathEncoding.from_sequence(inst.g, solve["sequence"])
    verdict = validate_path(inst.g, p, inst.budget)
    if not verdict.valid:
        return False, f" path violates {verdict.violations}"
    obj = Objective.parse(solve["objective"])
    if obj.is_design:
        expect = _design_value_of_path(inst, obj, p)
    else:
        belief = inst.prior_belief
        y_min = float(np.min(inst.model.A @ belief.prior_mean))
        for meas in solve["measurements"]:
            belief = update(belief, meas["node"], meas["value"], inst.model)
            y_min = min(y_min, meas["value"])
        expect = float(np.sum(eval_ei_prediction(belief, y_min))) / inst.g.n
    if not math.isclose(expect, solve["objective_value"], rel_tol=0, abs_tol=1e-9):
        return False, f" stored value {solve['objective_value']} != {expect}"
    return True, ""


def _validate_one(out_dir: Path, payload: dict) -> tuple[bool, str]:
    if "error" in payload:
        return True, " (recorded error)"
    inst_payload = json.loads(
        (out_dir / "instances" / payload["instance_file"]).read_text()
    )
    inst = _rebuild_from_instance(inst_payload)
    if "solve" in payload:
        return _check_solve(inst, payload["solve"])
    if "fleet" in payload:
        for agent in payload["fleet"]["agents"]:
            ok, detail = _check_solve(inst, agent)
            if not ok:
                return ok, detail
        return True, ""
    return False, " nothing to validate"
