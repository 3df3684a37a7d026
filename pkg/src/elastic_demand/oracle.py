"""Exhaustive grid search over shift plans for tiny instances.

Used as ground truth for the solvers. Every edge takes values on a grid
from its lower to its upper bound, and for each plan the forecast is set
to its slot-wise optimum (clamped mean or lower median), so only the plan
is enumerated.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from numpy.typing import NDArray

from .panel import (
    DemandPanel,
    ForecastVector,
    ShiftBounds,
    ShiftPlan,
    edge_endpoints,
    lower_median,
)
from .solver import SolverConfig, check_inputs

__all__ = ["OracleResult", "grid_search", "edge_grid", "MAX_EDGES"]

MAX_EDGES = 6
MAX_GRID_POINTS = 50_000_000
_CHUNK = 100_000


@dataclass(frozen=True)
class OracleResult:
    plan: ShiftPlan
    forecast: ForecastVector
    objective: float
    eps_grid: float
    n_points: int


def edge_grid(lower: float, upper: float, resolution: float) -> NDArray:
    """``lower, lower + resolution, ...`` up to ``upper``, plus both ends and 0."""
    n = int(np.floor((upper - lower) / resolution + 1e-9)) + 1
    pts = lower + resolution * np.arange(n)
    pts = np.concatenate([pts[pts < upper], [lower, upper, 0.0]])
    return np.unique(pts)


def _cartesian(grids: list[NDArray]) -> NDArray:
    """All combinations, first grid varying slowest."""
    mesh = np.meshgrid(*grids, indexing="ij")
    return np.stack([m.ravel() for m in mesh], axis=-1)


def _residual_bound(D, lower, upper, src, dst, forecast) -> float:
    lo = np.array(D, dtype=float)
    hi = np.array(D, dtype=float)
    a = D[:, src]
    # leaving through the outgoing edge
    lo[:, src] -= a * upper
    hi[:, src] -= a * lower
    # arriving through the incoming edge
    lo[:, dst] += a * lower
    hi[:, dst] += a * upper
    if forecast is None:
        f_lo, f_hi = 0.0, max(float(hi.max()), 0.0)
    else:
        f_lo, f_hi = float(forecast.min()), float(forecast.max())
    return max(float(hi.max()) - f_lo, f_hi - float(lo.min()), 0.0)


def grid_search(
    panel: DemandPanel,
    bounds: ShiftBounds,
    config: SolverConfig | None = None,
    resolution: float = 0.01,
    forecast: ForecastVector | None = None,
) -> OracleResult:
    """Lexicographically first grid plan with the smallest objective.

    ``eps_grid`` bounds how far the grid optimum can sit above the
    continuous optimum: a per-edge slope bound summed over edges, times
    ``resolution``. With ``forecast`` given it is held fixed instead of
    being optimized.
    """
    config = config or SolverConfig()
    if not resolution > 0:
        raise ValueError("resolution must be > 0")
    check_inputs(panel, bounds, config)
    D = np.array(panel.values)
    K, T = D.shape
    src, dst = edge_endpoints(T, config.cyclic)
    E = src.size
    if K * E > MAX_EDGES:
        raise ValueError(f"instance has {K * E} edges; grid search is capped at {MAX_EDGES}")
    if forecast is not None and len(forecast) != T:
        raise ValueError(f"forecast has {len(forecast)} slots, panel has {T}")

    lower, upper = bounds.lower.ravel(), bounds.upper.ravel()
    grids = [edge_grid(lo, hi, resolution) for lo, hi in zip(lower, upper)]
    total = int(np.prod([g.size for g in grids], dtype=np.int64))
    if total > MAX_GRID_POINTS:
        raise ValueError(f"grid has {total} points; limit is {MAX_GRID_POINTS}")

    squared = config.objective_kind == "squared"
    lam = config.lam_matrix(K, T)
    scale = config.penalty_scale(D)
    a = D[:, src]
    fixed = None if forecast is None else np.array(forecast.values)

    # Plans of different series only meet through the forecast, so each
    # series' candidate rows are built once and combined by broadcasting.
    plans, rows, pens = [], [], []
    for k in range(K):
        Xk = _cartesian(grids[k * E : (k + 1) * E])
        Dk = np.broadcast_to(D[k], (Xk.shape[0], T)).copy()
        moved = a[k] * Xk
        Dk[:, src] -= moved
        Dk[:, dst] += moved
        pk = lam[k] * (scale[k] * Xk) ** 2 if squared else lam[k] * np.abs(scale[k] * Xk)
        plans.append(Xk)
        rows.append(Dk)
        pens.append(pk.sum(axis=1))

    prefix_shape = tuple(X.shape[0] for X in plans[:-1])
    n_prefix = int(np.prod(prefix_shape, dtype=np.int64))
    n_last = plans[-1].shape[0]
    chunk = max(1, _CHUNK // n_last)
    best_obj, best_at = np.inf, None
    for start in range(0, n_prefix, chunk):
        flat = np.arange(start, min(start + chunk, n_prefix))
        sub = np.unravel_index(flat, prefix_shape) if prefix_shape else ()
        c = flat.size
        Dbar = np.empty((c, n_last, K, T))
        pen = np.broadcast_to(pens[-1], (c, n_last)).copy()
        for k, i in enumerate(sub):
            Dbar[:, :, k, :] = rows[k][i][:, None, :]
            pen += pens[k][i][:, None]
        Dbar[:, :, K - 1, :] = rows[-1][None, :, :]
        if fixed is not None:
            f = fixed
        elif squared:
            f = np.maximum(Dbar.mean(axis=2), 0.0)[:, :, None, :]
        else:
            f = np.maximum(lower_median(Dbar, axis=2), 0.0)[:, :, None, :]
        r = Dbar - f
        fit = np.sum(r * r, axis=(2, 3)) if squared else np.sum(np.abs(r), axis=(2, 3))
        obj = (fit + pen).ravel()
        j = int(np.argmin(obj))
        if obj[j] < best_obj:
            best_obj = float(obj[j])
            best_at = (flat[j // n_last], j % n_last)

    head, last = best_at
    picks = [int(i) for i in np.unravel_index(head, prefix_shape)] if prefix_shape else []
    x = np.stack([plans[k][i] for k, i in enumerate(picks + [last])])
    Dbar = np.array(D)
    Dbar[:, src] -= a * x
    Dbar[:, dst] += a * x
    if fixed is not None:
        f = fixed
    elif squared:
        f = np.maximum(Dbar.mean(axis=0), 0.0)
    else:
        f = np.maximum(lower_median(Dbar, axis=0), 0.0)

    R = _residual_bound(D, bounds.lower, bounds.upper, src, dst, fixed)
    xmax = np.maximum(np.abs(bounds.lower), np.abs(bounds.upper))
    if squared:
        slope = 2.0 * a * 2.0 * R + 2.0 * lam * scale**2 * xmax
    else:
        slope = 2.0 * a + lam * scale
    eps = float(resolution * slope.sum())
    return OracleResult(ShiftPlan(x), ForecastVector(f), best_obj, eps, total)
