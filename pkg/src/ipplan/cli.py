"""Command line front end: plan, sweep, gap, validate."""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

from .errors import IpplanError
from .harness import (
    ExperimentConfig,
    gap_study,
    run_experiment,
    validate_reports,
)


def _parse_seeds(text: str) -> tuple[int, ...]:
    """'5' -> first five seeds, '2:6' -> a range, '0,3,7' -> exactly those."""
    text = text.strip()
    if ":" in text:
        lo, hi = text.split(":", 1)
        return tuple(range(int(lo), int(hi)))
    if "," in text:
        return tuple(int(tok) for tok in text.split(",") if tok)
    return tuple(range(int(text)))


def _parse_multimodal(text: str) -> tuple[int, tuple[float, ...]]:
    """'k=3,ladder=0.1:0.5:1.0' -> (3, (0.1, 0.5, 1.0))."""
    k, ladder = 0, ()
    for part in text.split(","):
        key, _, val = part.partition("=")
        if key.strip() == "k":
            k = int(val)
        elif key.strip() == "ladder":
            ladder = tuple(float(tok) for tok in val.split(":"))
        else:
            raise ValueError(f"bad --multimodal field {part!r}")
    if k <= 0 or not ladder:
        raise ValueError("--multimodal needs k=<int>,ladder=a:b:c")
    return k, ladder


def _parse_budget(text: str) -> float | str:
    text = text.strip()
    return text if text.lower().endswith("x") else float(text)


def _add_common(sub: argparse.ArgumentParser) -> None:
    sub.add_argument("--config", help="TOML config file; flags override it")
    sub.add_argument("--grid", type=int, help="grid side length")
    sub.add_argument("--budget", help="path budget, absolute or like '2x'")
    sub.add_argument(
        "--objective", choices=["a", "b", "d", "ei"], help="objective to minimize"
    )
    sub.add_argument("--seeds", help="seed spec: count, lo:hi, or comma list")
    sub.add_argument("--out", help="output directory")
    sub.add_argument("--runtime-cap", type=float, help="per-run cap in seconds")
    sub.add_argument("--agents", type=int, help="number of agents")
    sub.add_argument("--multimodal", help="sensor selection: k=3,ladder=0.1:0.5:1.0")
    sub.add_argument("--kernel", choices=["squared_exponential", "matern32"])
    sub.add_argument("--length-scale", type=float)
    sub.add_argument("--edge-weights", choices=["unit", "euclidean"])
    sub.add_argument("--extent", type=float, help="rescale the grid to this span")
    sub.add_argument("--world", choices=["gp", "interest"])
    sub.add_argument(
        "--adaptive", action="store_true", default=None,
        help="log net expected improvement per step",
    )
    sub.add_argument("--relaxation", choices=["box_budget", "walk_polytope"])
    sub.add_argument("--execute-steps", type=int, help="hops per replan")
    sub.add_argument("--graph-json", help="plan on an imported graph file")


def _overrides(args: argparse.Namespace) -> dict:
    over: dict = {}
    if args.grid is not None:
        over["grid_side"] = args.grid
    if args.budget is not None:
        over["budget"] = _parse_budget(args.budget)
    if args.objective is not None:
        over["objective"] = args.objective
    if args.seeds is not None:
        over["seeds"] = _parse_seeds(args.seeds)
    if args.out is not None:
        over["out_dir"] = args.out
    if args.runtime_cap is not None:
        over["runtime_cap_s"] = args.runtime_cap
    if args.agents is not None:
        over["agents"] = args.agents
    if args.multimodal is not None:
        k, ladder = _parse_multimodal(args.multimodal)
        over["multimodal_k"] = k
        over["multimodal_ladder"] = ladder
    if args.kernel is not None:
        over["kernel_family"] = args.kernel
    if args.length_scale is not None:
        over["length_scale"] = args.length_scale
    if args.edge_weights is not None:
        over["edge_weight_mode"] = args.edge_weights
    if args.extent is not None:
        over["extent"] = args.extent
    if args.world is not None:
        over["world"] = args.world
    if args.adaptive is not None:
        over["adaptive"] = args.adaptive
    if args.relaxation is not None:
        over["relaxation"] = args.relaxation
    if args.execute_steps is not None:
        over["execute_steps"] = args.execute_steps
    if args.graph_json is not None:
        over["graph_json"] = args.graph_json
    if getattr(args, "method", None):
        over["methods"] = tuple(args.method.split(","))
    return over


def _load_config(args: argparse.Namespace) -> ExperimentConfig:
    over = _overrides(args)
    if args.config:
        return ExperimentConfig.from_file(args.config, over)
    return ExperimentConfig.from_dict(over)


def _cmd_plan(args: argparse.Namespace) -> int:
    cfg = _load_config(args)
    if len(cfg.seeds) != 1:
        cfg = cfg.replace(seeds=(cfg.seeds[0],))
    if len(cfg.methods) != 1:
        cfg = cfg.replace(methods=(cfg.methods[0],))
    result = run_experiment(cfg)
    row = result.rows[0]
    # fleet rows carry an -agent<i> suffix; the report file uses the base id
    base_id = str(row["run_id"]).split("-agent")[0]
    report = json.loads(
        (Path(cfg.out_dir) / "reports" / f"{base_id}.json").read_text()
    )
    solve = report.get("solve") or report["fleet"]["agents"][0]
    print("path:", " -> ".join(str(v) for v in solve["sequence"]))
    if row.get("lower_bound") not in ("", None):
        print(
            f"value {row['value']:.6g}  certified lower bound "
            f"{row['lower_bound']:.6g}  gap/point {row['gap_delta']:.3g}"
        )
    return 0 if row["status"] == "ok" else 1


def _cmd_sweep(args: argparse.Namespace) -> int:
    result = run_experiment(_load_config(args))
    print(f"wrote {result.csv_path}")
    return 0 if any(r["status"] == "ok" for r in result.rows) else 1


def _cmd_gap(args: argparse.Namespace) -> int:
    cfg = _load_config(args)
    budgets = [_parse_budget(tok) for tok in args.budgets.split(",") if tok]
    gap_study(cfg, budgets)
    print(f"wrote {Path(cfg.out_dir) / 'gap.csv'}")
    return 0


def _cmd_validate(args: argparse.Namespace) -> int:
    out = args.out or "results"
    return 0 if validate_reports(out) else 1


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="ipplan",
        description="Budgeted informative path planning with certified bounds",
    )
    subs = parser.add_subparsers(dest="command", required=True)

    plan = subs.add_parser("plan", help="run one method on one seed")
    _add_common(plan)
    plan.add_argument("--method", default="aspo", help="planning method")
    plan.set_defaults(func=_cmd_plan)

    sweep = subs.add_parser("sweep", help="run a method x seed benchmark sweep")
    _add_common(sweep)
    sweep.add_argument(
        "--method", default=None, help="comma list overriding configured methods"
    )
    sweep.set_defaults(func=_cmd_sweep)

    gap = subs.add_parser("gap", help="bound-vs-planner gap study over budgets")
    _add_common(gap)
    gap.add_argument("--budgets", default="1.5x,2x,3x", help="comma list of budgets")
    gap.set_defaults(func=_cmd_gap)

    val = subs.add_parser("validate", help="re-check stored reports from disk")
    val.add_argument("--out", help="results directory", default="results")
    val.set_defaults(func=_cmd_validate)
    return parser


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except (IpplanError, ValueError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    raise SystemExit(main())
