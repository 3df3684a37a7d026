"""Squared-error reallocation by block coordinate descent.

The program minimized here is::

    sum_{k,t} (Dbar[k,t] - f[t])**2 + sum_{k,t} lam[k,t] * pen(x[k,t])**2

over shift fractions ``x`` inside box bounds and a forecast ``f >= 0``,
where ``Dbar`` is the shifted panel and ``pen`` is either the fraction or
the moved amount. Two blocks alternate: the forecast (clamped slot means)
and every shift fraction, each minimized exactly in closed form. Once the
descent stalls, an active-set least-squares step lands on the exact
minimizer of the current face; descent then resumes to confirm.
"""

from __future__ import annotations

import numpy as np
from numpy.linalg import LinAlgError
from scipy.linalg import cho_factor, cho_solve, lstsq

from .panel import (
    DemandPanel,
    ForecastVector,
    ShiftBounds,
    ShiftPlan,
    apply_shift,
    edge_endpoints,
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

__all__ = ["qp_objective", "solve_qp"]

_MAX_POLISH = 100


def _objective(D, x, f, lamw, cyclic) -> float:
    r = shift_values(D, x, cyclic) - f
    return float(np.sum(r * r) + np.sum(lamw * x * x))


def qp_objective(
    panel: DemandPanel, plan: ShiftPlan, forecast: ForecastVector, config: SolverConfig
) -> float:
    """Squared residuals around ``forecast`` plus the quadratic shift penalty."""
    check_dims(panel, plan, forecast, config)
    D = panel.values
    lamw = config.lam_matrix(*panel.shape) * config.penalty_scale(D) ** 2
    return _objective(D, plan.x, forecast.values, lamw, config.cyclic)


def _update_edges(D, Dbar, x, f, lamw, lower, upper, idx, src, dst, nonneg):
    """Exact minimization over the fractions of the edges ``idx`` (in place)."""
    s, d = src[idx], dst[idx]
    a = D[:, s]
    x0 = x[:, idx]
    rt = Dbar[:, s] - f[s]
    rs = Dbar[:, d] - f[d]
    w = lamw[:, idx]
    curv = 2.0 * a * a + w
    with np.errstate(divide="ignore", invalid="ignore", over="ignore"):
        target = np.where(curv > 0, x0 + (a * (rt - rs) - w * x0) / curv, x0)
        lo, hi = lower[:, idx], upper[:, idx]
        if nonneg:
            pos = a > 0
            lo = np.where(pos, np.maximum(lo, x0 - np.maximum(Dbar[:, d], 0.0) / a), lo)
            hi = np.where(pos, np.minimum(hi, x0 + np.maximum(Dbar[:, s], 0.0) / a), hi)
    new = np.clip(target, lo, hi)
    moved = a * (new - x0)
    x[:, idx] = new
    Dbar[:, s] -= moved
    Dbar[:, d] += moved


def _design(D, lamw, cyclic):
    """Least-squares form ``||A z - b||**2`` of the objective, ``z = [x.ravel(), f]``."""
    K, T = D.shape
    src, dst = edge_endpoints(T, cyclic)
    E = src.size
    n_x = K * E
    A = np.zeros((K * T + n_x, n_x + T))
    b = np.zeros(K * T + n_x)
    for k in range(K):
        for e in range(E):
            col = k * E + e
            A[k * T + src[e], col] -= D[k, src[e]]
            A[k * T + dst[e], col] += D[k, src[e]]
            A[K * T + col, col] = np.sqrt(lamw[k, e])
        for t in range(T):
            A[k * T + t, n_x + t] = -1.0
            b[k * T + t] = -D[k, t]
    return A, b


def _face_step(H, g, free):
    """Minimum-norm solution of ``H[free, free] d = g[free]``."""
    Hf = H[np.ix_(free, free)]
    gf = g[free]
    try:
        c = cho_factor(Hf, check_finite=False)
        d = cho_solve(c, gf, check_finite=False)
        if np.all(np.isfinite(d)) and np.linalg.norm(Hf @ d - gf) <= 1e-9 * (1.0 + np.linalg.norm(gf)):
            return d
    except LinAlgError:
        pass
    return lstsq(Hf, gf, lapack_driver="gelsy", check_finite=False)[0]


def _polish(design, D, x, f, lower, upper, nonneg):
    """Active-set least-squares refinement.

    Variables sitting on a bound stay fixed; the rest move toward the
    least-squares minimizer of that face, stopping at the first bound they
    hit (which is then fixed as well). The objective is convex along the
    path, so the result is never worse than the starting point.
    """
    A, b, H, Atb = design
    K, T = D.shape
    E = x.shape[1]
    n_x = K * E
    B = A[: K * T, :n_x]
    z = np.concatenate([x.ravel(), f])
    lo = np.concatenate([lower.ravel(), np.zeros(T)])
    hi = np.concatenate([upper.ravel(), np.full(T, np.inf)])
    fixed = (z <= lo) | (z >= hi)
    for _ in range(z.size + 1):
        free = ~fixed
        if not free.any():
            break
        step = np.zeros_like(z)
        step[free] = _face_step(H, Atb - H @ z, free)
        alpha, blocker = 1.0, None
        with np.errstate(divide="ignore", invalid="ignore", over="ignore"):
            ratio = np.where(step > 0, (hi - z) / step, np.where(step < 0, (lo - z) / step, np.inf))
        ratio[fixed] = np.inf
        j = int(np.argmin(ratio))
        if ratio[j] < alpha:
            alpha, blocker = max(ratio[j], 0.0), j
        if nonneg:
            Dbar = D.ravel() + B @ z[:n_x]
            dD = B @ step[:n_x]
            with np.errstate(divide="ignore", invalid="ignore", over="ignore"):
                lim = np.where(dD < 0, np.maximum(Dbar, 0.0) / -dD, np.inf)
            if lim.min() < alpha:
                alpha, blocker = max(float(lim.min()), 0.0), -1
        z = z + alpha * step
        if blocker is None:
            break
        if blocker >= 0:
            z[blocker] = lo[blocker] if step[blocker] < 0 else hi[blocker]
            fixed[blocker] = True
        else:
            # a shifted value hit zero; that face is not axis-aligned, stop here
            break
    z = np.clip(z, lo, hi)
    return z[:n_x].reshape(K, E), z[n_x:]


def solve_qp(panel: DemandPanel, bounds: ShiftBounds, config: SolverConfig | None = None) -> SolveReport:
    """Minimize the regularized squared-error program.

    Returns the best iterate even when ``max_iter`` is hit (``converged`` is
    then False). Raises ``ValueError`` on shape mismatches or a config asking
    for the absolute objective.
    """
    config = config or SolverConfig()
    if config.objective_kind != "squared":
        raise ValueError("solve_qp handles objective_kind='squared'; use solve_l1")
    check_inputs(panel, bounds, config)
    D = np.array(panel.values)
    K, T = D.shape
    cyclic = config.cyclic
    src, dst = edge_endpoints(T, cyclic)
    lamw = config.lam_matrix(K, T) * config.penalty_scale(D) ** 2
    lower, upper = np.array(bounds.lower), np.array(bounds.upper)
    nonneg = config.enforce_nonneg_shifted
    groups = colour_classes(T, cyclic)

    x = initial_plan(panel, config)
    Dbar = shift_values(D, x, cyclic)
    if nonneg and np.any(Dbar < 0):
        raise ValueError("init_plan yields negative shifted demand")
    f = np.maximum(Dbar.mean(axis=0), 0.0)
    trace = [_objective(D, x, f, lamw, cyclic)]

    converged = False
    polish_steps = 0
    next_polish = 1
    design = None
    it = 0
    while it < config.max_iter:
        it += 1
        f = np.maximum(Dbar.mean(axis=0), 0.0)
        for idx in groups:
            _update_edges(D, Dbar, x, f, lamw, lower, upper, idx, src, dst, nonneg)
        Dbar = shift_values(D, x, cyclic)
        obj = _objective(D, x, f, lamw, cyclic)
        prev = trace[-1]
        trace.append(obj)
        decrease = prev - obj
        stalled = decrease <= config.tol * (1.0 + abs(prev))
        if not config.polish:
            if stalled:
                converged = True
                break
            continue
        if stalled or it >= next_polish:
            f = np.maximum(Dbar.mean(axis=0), 0.0)
            if design is None:
                A, b = _design(D, lamw, cyclic)
                design = (A, b, A.T @ A, A.T @ b)
            px, pf = _polish(design, D, x, f, lower, upper, nonneg)
            pobj = _objective(D, px, pf, lamw, cyclic)
            if nonneg and np.any(shift_values(D, px, cyclic) < 0):
                pobj = np.inf
            if pobj < trace[-1] and polish_steps < _MAX_POLISH:
                x, f = px, pf
                Dbar = shift_values(D, x, cyclic)
                trace.append(pobj)
                polish_steps += 1
                continue
            # failed attempt: back off exponentially
            next_polish = 2 * it
        if stalled:
            converged = True
            break

    f = np.maximum(Dbar.mean(axis=0), 0.0)
    final = _objective(D, x, f, lamw, cyclic)
    trace[-1] = final
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
