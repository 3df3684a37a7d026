"""Absolute-error reallocation.

Minimizes::

    sum_{k,t} |Dbar[k,t] - f[t]| + sum_{k,t} lam[k,t] * |pen(x[k,t])|

by alternating a forecast update (clamped lower median of every slot) with
exact per-edge minimization. Restricted to one shift fraction the
objective is piecewise linear and convex with kinks where either touched
residual crosses zero and where the fraction itself is zero, so checking
those points plus the interval ends finds the minimum.

Coordinate descent can stall on a kink of a non-smooth objective. When it
stops making progress the problem is handed, warm, to the HiGHS LP solver
and the answer is kept only if it is strictly better.
"""

from __future__ import annotations

import numpy as np
from numpy.typing import NDArray
from scipy import sparse
from scipy.optimize import linprog

from .panel import (
    DemandPanel,
    ForecastVector,
    ShiftBounds,
    ShiftPlan,
    apply_shift,
    edge_endpoints,
    lower_median,
    panel_stats,
    shift_values,
)
from .solver import (
    SolveReport,
    SolverConfig,
    check_dims,
    check_inputs,
    colour_classes,
    initial_plan,
)

__all__ = ["l1_objective", "solve_l1"]

_MAX_POLISH = 3


def _mismatch(r: NDArray, under: NDArray, over: NDArray) -> NDArray:
    """Cost of residual ``r = demand - forecast``: short supply costs ``under``
    per unit, surplus costs ``over`` per unit."""
    return np.where(r > 0, under * r, -over * r)


def _objective(D, x, f, pen, cyclic, under, over) -> float:
    r = shift_values(D, x, cyclic) - f
    return float(np.sum(_mismatch(r, under, over)) + np.sum(pen * np.abs(x)))


def l1_objective(
    panel: DemandPanel, plan: ShiftPlan, forecast: ForecastVector, config: SolverConfig
) -> float:
    """Absolute residuals around ``forecast`` plus the absolute shift penalty."""
    check_dims(panel, plan, forecast, config)
    D = panel.values
    pen = config.lam_matrix(*panel.shape) * config.penalty_scale(D)
    ones = np.ones(panel.n_slots)
    return _objective(D, plan.x, forecast.values, pen, config.cyclic, ones, ones)


def _update_edges(D, Dbar, x, f, pen, lower, upper, idx, src, dst, nonneg, under, over):
    s, d = src[idx], dst[idx]
    a = D[:, s]
    x0 = x[:, idx]
    rt = Dbar[:, s] - f[s]
    rs = Dbar[:, d] - f[d]
    lo, hi = lower[:, idx], upper[:, idx]
    pos = a > 0
    with np.errstate(divide="ignore", invalid="ignore", over="ignore"):
        if nonneg:
            lo = np.where(pos, np.maximum(lo, x0 - np.maximum(Dbar[:, d], 0.0) / a), lo)
            hi = np.where(pos, np.minimum(hi, x0 + np.maximum(Dbar[:, s], 0.0) / a), hi)
        root_t = np.where(pos, x0 + rt / a, x0)
        root_s = np.where(pos, x0 - rs / a, x0)
    cand = np.stack([root_t, root_s, np.zeros_like(x0), lo, hi, x0], axis=-1)
    cand = np.clip(cand, lo[..., None], hi[..., None])
    step = a[..., None] * (cand - x0[..., None])
    value = (
        _mismatch(rt[..., None] - step, under[s][None, :, None], over[s][None, :, None])
        + _mismatch(rs[..., None] + step, under[d][None, :, None], over[d][None, :, None])
        + pen[:, idx][..., None] * np.abs(cand)
    )
    # minimum value, then smallest magnitude, then smallest value of x
    order = np.lexsort((cand, np.abs(cand), value), axis=-1)
    new = np.take_along_axis(cand, order[..., :1], axis=-1)[..., 0]
    moved = a * (new - x0)
    x[:, idx] = new
    Dbar[:, s] -= moved
    Dbar[:, d] += moved


def _lp_polish(D, x, f, pen, lower, upper, cyclic, nonneg, under, over, fixed_forecast):
    """Solve the program exactly as an LP. Returns ``None`` on solver failure."""
    K, T = D.shape
    src, dst = edge_endpoints(T, cyclic)
    E = src.size
    n_x, n_r = K * E, K * T
    penalized = np.flatnonzero(pen.ravel() > 0)
    n_s = penalized.size

    rows, cols, vals = [], [], []
    for k in range(K):
        for e in range(E):
            col = k * E + e
            rows += [k * T + src[e], k * T + dst[e]]
            cols += [col, col]
            vals += [-D[k, src[e]], D[k, src[e]]]
    B = sparse.csr_matrix((vals, (rows, cols)), shape=(n_r, n_x))
    P = sparse.kron(sparse.csr_matrix(np.ones((K, 1))), sparse.identity(T), format="csr")
    I_r = sparse.identity(n_r, format="csr")
    A_eq = sparse.hstack([B, -P, -I_r, I_r, sparse.csr_matrix((n_r, n_s))], format="csr")
    b_eq = -D.ravel()

    ub_blocks, b_ub = [], []
    if n_s:
        S = sparse.csr_matrix((np.ones(n_s), (np.arange(n_s), penalized)), shape=(n_s, n_x))
        # |x| <= s on penalized edges; the weight goes into the cost of s
        unit = sparse.diags(np.ones(n_s))
        zeros = sparse.csr_matrix((n_s, T + 2 * n_r))
        ub_blocks.append(sparse.hstack([S, zeros, -unit], format="csr"))
        ub_blocks.append(sparse.hstack([-S, zeros, -unit], format="csr"))
        b_ub.append(np.zeros(2 * n_s))
        s_cost = pen.ravel()[penalized]
    else:
        s_cost = np.zeros(0)
    if nonneg:
        ub_blocks.append(sparse.hstack([-B, sparse.csr_matrix((n_r, T + 2 * n_r + n_s))], format="csr"))
        b_ub.append(D.ravel())

    c = np.concatenate([np.zeros(n_x + T), np.tile(under, K), np.tile(over, K), s_cost])
    if fixed_forecast is None:
        f_bounds = [(0.0, None)] * T
    else:
        f_bounds = [(v, v) for v in fixed_forecast]
    bounds = (
        list(zip(lower.ravel(), upper.ravel()))
        + f_bounds
        + [(0.0, None)] * (2 * n_r + n_s)
    )
    res = linprog(
        c,
        A_ub=sparse.vstack(ub_blocks, format="csr") if ub_blocks else None,
        b_ub=np.concatenate(b_ub) if b_ub else None,
        A_eq=A_eq,
        b_eq=b_eq,
        bounds=bounds,
        method="highs",
    )
    if not res.success:
        return None
    z = res.x
    px = np.clip(z[:n_x].reshape(K, E), lower, upper)
    pf = np.maximum(z[n_x : n_x + T], 0.0) if fixed_forecast is None else np.array(fixed_forecast)
    return px, pf


def solve_l1(
    panel: DemandPanel,
    bounds: ShiftBounds,
    config: SolverConfig | None = None,
    forecast: ForecastVector | None = None,
    *,
    under_cost: NDArray | float = 1.0,
    over_cost: NDArray | float = 1.0,
) -> SolveReport:
    """Minimize the regularized absolute-error program.

    Passing ``forecast`` holds it fixed and optimizes the plan alone.
    ``under_cost``/``over_cost`` weight shortfall and surplus per slot; they
    default to 1, which is the plain absolute error, and anything else
    requires a fixed forecast.
    """
    config = config or SolverConfig(objective_kind="absolute")
    if config.objective_kind != "absolute":
        raise ValueError("solve_l1 handles objective_kind='absolute'; use solve_qp")
    check_inputs(panel, bounds, config)
    D = np.array(panel.values)
    K, T = D.shape
    cyclic = config.cyclic
    src, dst = edge_endpoints(T, cyclic)
    under = np.broadcast_to(np.asarray(under_cost, dtype=float), (T,)).copy()
    over = np.broadcast_to(np.asarray(over_cost, dtype=float), (T,)).copy()
    if np.any(under < 0) or np.any(over < 0):
        raise ValueError("mismatch costs must be >= 0")
    if forecast is None and not (np.all(under == 1.0) and np.all(over == 1.0)):
        raise ValueError("asymmetric mismatch costs require a fixed forecast")
    if forecast is not None and len(forecast) != T:
        raise ValueError(f"forecast has {len(forecast)} slots, panel has {T}")
    pen = config.lam_matrix(K, T) * config.penalty_scale(D)
    lower, upper = np.array(bounds.lower), np.array(bounds.upper)
    nonneg = config.enforce_nonneg_shifted
    groups = colour_classes(T, cyclic)

    def update_forecast(Dbar):
        if forecast is not None:
            return np.array(forecast.values)
        return np.maximum(lower_median(Dbar, axis=0), 0.0)

    x = initial_plan(panel, config)
    Dbar = shift_values(D, x, cyclic)
    if nonneg and np.any(Dbar < 0):
        raise ValueError("init_plan yields negative shifted demand")
    f = update_forecast(Dbar)
    trace = [_objective(D, x, f, pen, cyclic, under, over)]

    converged = False
    polish_steps = 0
    polish_tries = 0
    it = 0
    while it < config.max_iter:
        it += 1
        f = update_forecast(Dbar)
        for idx in groups:
            _update_edges(D, Dbar, x, f, pen, lower, upper, idx, src, dst, nonneg, under, over)
        Dbar = shift_values(D, x, cyclic)
        obj = _objective(D, x, f, pen, cyclic, under, over)
        prev = trace[-1]
        trace.append(obj)
        if prev - obj > config.tol * (1.0 + abs(prev)):
            continue
        if config.polish and polish_tries < _MAX_POLISH:
            polish_tries += 1
            f = update_forecast(Dbar)
            cur = _objective(D, x, f, pen, cyclic, under, over)
            fixed = None if forecast is None else forecast.values
            out = _lp_polish(D, x, f, pen, lower, upper, cyclic, nonneg, under, over, fixed)
            if out is not None:
                px, pf = out
                if forecast is None:
                    pf = np.maximum(lower_median(shift_values(D, px, cyclic), axis=0), 0.0)
                pobj = _objective(D, px, pf, pen, cyclic, under, over)
                ok = not (nonneg and np.any(shift_values(D, px, cyclic) < 0))
                if ok and pobj < min(cur, trace[-1]):
                    x, f = px, pf
                    Dbar = shift_values(D, x, cyclic)
                    trace.append(pobj)
                    polish_steps += 1
                    continue
        converged = True
        break

    f = update_forecast(Dbar)
    trace[-1] = _objective(D, x, f, pen, cyclic, under, over)
    plan = ShiftPlan(x)
    shifted = apply_shift(panel, plan, cyclic)
    return SolveReport(
        plan=plan,
        forecast=ForecastVector(f),
        shifted=shifted,
        objective_trace=trace,
        stats=panel_stats(shifted, plan),
        iterations=it,
        converged=converged,
        polish_steps=polish_steps,
    )
