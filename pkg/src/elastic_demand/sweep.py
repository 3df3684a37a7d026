"""Parameter sweeps over symmetric shift limits and penalty weights."""

from __future__ import annotations

import csv
import io
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from typing import Iterable

from .l1 import solve_l1
from .panel import DemandPanel, ShiftBounds
from .qp import solve_qp
from .solver import SolverConfig

__all__ = ["SweepRow", "run_sweep", "sweep_to_csv", "SWEEP_COLUMNS"]

SWEEP_COLUMNS = ("U", "lambda", "var_bar", "mean_abs_p", "iterations")


@dataclass(frozen=True)
class SweepRow:
    U: float
    lam: float
    var_bar: float
    mean_abs_p: float
    iterations: int
    converged: bool


def _solve_point(panel: DemandPanel, U: float, lam: float, base: SolverConfig) -> SweepRow:
    bounds = ShiftBounds.for_panel(panel, -U, U, cyclic=base.cyclic)
    config = SolverConfig(
        lam=lam,
        penalty_basis=base.penalty_basis,
        cyclic=base.cyclic,
        objective_kind=base.objective_kind,
        enforce_nonneg_shifted=base.enforce_nonneg_shifted,
        tol=base.tol,
        max_iter=base.max_iter,
        polish=base.polish,
    )
    solve = solve_qp if config.objective_kind == "squared" else solve_l1
    report = solve(panel, bounds, config)
    return SweepRow(U, lam, report.stats.var_bar, report.stats.mean_abs_p, report.iterations, report.converged)


def run_sweep(
    panel: DemandPanel,
    u_values: Iterable[float],
    lam_values: Iterable[float],
    config: SolverConfig | None = None,
    workers: int = 1,
) -> list[SweepRow]:
    """Solve every ``(U, lambda)`` pair with bounds ``[-U, U]``.

    Points are independent and may run on a thread pool; rows come back
    sorted by ``(U, lambda)`` whatever order they finished in.
    """
    config = config or SolverConfig()
    us = sorted({float(u) for u in u_values})
    lams = sorted({float(v) for v in lam_values})
    for u in us:
        if not 0.0 <= u <= 1.0:
            raise ValueError(f"U must lie in [0, 1], got {u}")
    points = [(u, lam) for u in us for lam in lams]
    if workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            rows = list(pool.map(lambda p: _solve_point(panel, p[0], p[1], config), points))
    else:
        rows = [_solve_point(panel, u, lam, config) for u, lam in points]
    return sorted(rows, key=lambda r: (r.U, r.lam))


def sweep_to_csv(rows: list[SweepRow]) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(SWEEP_COLUMNS)
    for r in rows:
        w.writerow([repr(r.U), repr(r.lam), repr(r.var_bar), repr(r.mean_abs_p), r.iterations])
    return buf.getvalue()
