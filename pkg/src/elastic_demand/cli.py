"""Command line entry point.

Subcommands: ``optimize``, ``sweep``, ``cost``, ``simulate`` and ``oracle``.
Data goes to stdout (or ``--out``); diagnostics go to stderr. Exit codes:
0 success, 1 bad input, 2 solver hit ``--max-iter`` without converging.
"""

from __future__ import annotations

import argparse
import json
import logging
import sys
from pathlib import Path

from . import io as pio
from .cost import cost_breakdown, load_scenarios
from .datagen import simulate_panel
from .l1 import solve_l1
from .oracle import grid_search
from .panel import ShiftBounds, panel_stats
from .qp import solve_qp
from .solver import SolverConfig
from .sweep import run_sweep, sweep_to_csv

log = logging.getLogger("elastic_demand")

EXIT_OK, EXIT_INPUT, EXIT_MAX_ITER = 0, 1, 2


def _float_list(text: str) -> list[float]:
    return [float(v) for v in text.replace(",", " ").split()]


def _add_solver_flags(p: argparse.ArgumentParser, sweep: bool = False) -> None:
    if sweep:
        p.add_argument("--U", dest="U", nargs="+", required=True,
                       help="symmetric limits to sweep; bounds are [-U, U]")
        p.add_argument("--lambda", dest="lam", nargs="+", default=["0"],
                       help="penalty weights to sweep")
    else:
        p.add_argument("--L", dest="L", type=float, default=None,
                       help="lower shift limit, <= 0 (default 0)")
        p.add_argument("--U", dest="U", type=float, default=None,
                       help="upper shift limit, >= 0 (default 0)")
        p.add_argument("--bounds", type=Path, default=None,
                       help='per-edge bounds JSON {"lower": [[...]], "upper": [[...]]}')
        p.add_argument("--lambda", dest="lam", type=float, default=0.0, help="penalty weight")
    p.add_argument("--objective", choices=("squared", "absolute"), default="squared")
    p.add_argument("--penalty-basis", choices=("fraction", "units"), default="fraction")
    p.add_argument("--cyclic", action="store_true", help="also shift between last and first slot")
    p.add_argument("--nonneg", action="store_true", help="keep shifted demand >= 0")
    p.add_argument("--tol", type=float, default=1e-10)
    p.add_argument("--max-iter", type=int, default=10000)


def _config(args, lam=None) -> SolverConfig:
    return SolverConfig(
        lam=args.lam if lam is None else lam,
        penalty_basis=args.penalty_basis,
        cyclic=args.cyclic,
        objective_kind=args.objective,
        enforce_nonneg_shifted=args.nonneg,
        tol=args.tol,
        max_iter=args.max_iter,
    )


def _bounds(args, panel) -> ShiftBounds:
    if args.bounds is not None:
        return pio.read_bounds(args.bounds)
    L = 0.0 if args.L is None else args.L
    U = 0.0 if args.U is None else args.U
    return ShiftBounds.for_panel(panel, L, U, cyclic=args.cyclic)


def _emit(text: str, out: Path | None) -> None:
    if out is None:
        sys.stdout.write(text)
    else:
        out.write_text(text, encoding="utf-8")


def cmd_optimize(args) -> int:
    panel = pio.read_panel(args.panel)
    bounds = _bounds(args, panel)
    config = _config(args)
    solve = solve_qp if config.objective_kind == "squared" else solve_l1
    report = solve(panel, bounds, config)
    before = panel_stats(panel)
    doc = {
        "objective_kind": config.objective_kind,
        "var_bar_before": before.var_bar,
        "var_bar_after": report.stats.var_bar,
        "mean_abs_p": report.stats.mean_abs_p,
        "objective": report.objective,
        "iterations": report.iterations,
        "converged": report.converged,
        "forecast": [float(v) for v in report.forecast.values],
    }
    text = json.dumps(doc, indent=2) + "\n"
    if args.out is None:
        sys.stdout.write(text)
    else:
        args.out.mkdir(parents=True, exist_ok=True)
        (args.out / "shifted.csv").write_text(pio.panel_to_csv(report.shifted), encoding="utf-8")
        (args.out / "plan.csv").write_text(pio.plan_to_csv(report.plan, panel), encoding="utf-8")
        (args.out / "report.json").write_text(text, encoding="utf-8")
    if not report.converged:
        log.warning("no convergence within %d iterations", config.max_iter)
        return EXIT_MAX_ITER
    return EXIT_OK


def cmd_sweep(args) -> int:
    panel = pio.read_panel(args.panel)
    us = [v for item in args.U for v in _float_list(item)]
    lams = [v for item in args.lam for v in _float_list(item)]
    rows = run_sweep(panel, us, lams, _config(args, lam=0.0), workers=args.jobs)
    _emit(sweep_to_csv(rows), args.out)
    if not all(r.converged for r in rows):
        log.warning("some sweep points did not converge")
        return EXIT_MAX_ITER
    return EXIT_OK


def cmd_cost(args) -> int:
    forecast = pio.read_forecast(args.forecast)
    scenarios = load_scenarios(args.scenarios)
    report = cost_breakdown(forecast, scenarios, args.under_cost, args.over_cost)
    doc = {
        "forecast": [float(v) for v in forecast.values],
        "scenarios": [
            {
                "label": s.label,
                "probability": s.probability,
                "elastic": s.elastic,
                "cost": float(c),
                "shifted": [float(v) for v in shifted],
            }
            for s, c, shifted in zip(scenarios, report.per_scenario, report.shifted)
        ],
        "expected_cost_per_slot": [float(v) for v in report.per_slot],
        "expected_cost": report.total,
    }
    _emit(json.dumps(doc, indent=2) + "\n", args.out)
    return EXIT_OK


def cmd_simulate(args) -> int:
    profile = _float_list(args.profile) if args.profile else None
    panel = simulate_panel(args.days, args.slots, profile, args.noise, args.seed)
    _emit(pio.panel_to_csv(panel), args.out)
    return EXIT_OK


def cmd_oracle(args) -> int:
    panel = pio.read_panel(args.panel)
    bounds = _bounds(args, panel)
    result = grid_search(panel, bounds, _config(args), resolution=args.resolution)
    doc = {
        "objective": result.objective,
        "plan": result.plan.x.tolist(),
        "forecast": [float(v) for v in result.forecast.values],
        "eps_grid": result.eps_grid,
        "grid_points": result.n_points,
    }
    _emit(json.dumps(doc, indent=2) + "\n", args.out)
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="elastic-demand",
        description="Reallocate elastic demand between adjacent slots to reduce variance.",
    )
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("optimize", help="solve one instance")
    p.add_argument("panel", type=Path)
    _add_solver_flags(p)
    p.add_argument("--out", type=Path, default=None,
                   help="directory for shifted.csv, plan.csv and report.json")
    p.set_defaults(func=cmd_optimize)

    p = sub.add_parser("sweep", help="solve a grid of (U, lambda) points")
    p.add_argument("panel", type=Path)
    _add_solver_flags(p, sweep=True)
    p.add_argument("--jobs", type=int, default=1, help="worker threads")
    p.add_argument("--out", type=Path, default=None)
    p.set_defaults(func=cmd_sweep)

    p = sub.add_parser("cost", help="expected mismatch cost of a forecast")
    p.add_argument("forecast", type=Path)
    p.add_argument("scenarios", type=Path)
    p.add_argument("--under-cost", type=float, default=1.0, help="cost per unit of unmet demand")
    p.add_argument("--over-cost", type=float, default=1.0, help="cost per unit of idle supply")
    p.add_argument("--out", type=Path, default=None)
    p.set_defaults(func=cmd_cost)

    p = sub.add_parser("simulate", help="generate a synthetic hourly panel")
    p.add_argument("--days", type=int, default=10)
    p.add_argument("--slots", type=int, default=24)
    p.add_argument("--noise", type=float, default=0.3)
    p.add_argument("--seed", type=int, default=42)
    p.add_argument("--profile", default=None, help="comma-separated slot means")
    p.add_argument("--out", type=Path, default=None)
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("oracle", help="exhaustive grid search on a tiny instance")
    p.add_argument("panel", type=Path)
    _add_solver_flags(p)
    p.add_argument("--resolution", type=float, default=0.01)
    p.add_argument("--out", type=Path, default=None)
    p.set_defaults(func=cmd_oracle)
    return parser


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(
        level=logging.DEBUG if args.verbose else logging.WARNING,
        format="%(levelname)s: %(message)s",
        stream=sys.stderr,
    )
    try:
        return args.func(args)
    except pio.PanelFormatError as exc:
        log.error("%s", exc)
        return EXIT_INPUT
    except (ValueError, OSError, KeyError) as exc:
        log.error("%s", exc)
        return EXIT_INPUT


if __name__ == "__main__":
    sys.exit(main())
