"""Shared test utilities (independent of the solvers' own code paths)."""

import numpy as np
from scipy.optimize import minimize_scalar

from elastic_demand import DemandPanel, ShiftBounds


def random_instance(rng, K, T, width=1.0, high=20.0, cyclic=False):
    E = T if cyclic else T - 1
    D = rng.uniform(0.0, high, (K, T))
    lower = -width * rng.uniform(0.0, 1.0, (K, E))
    upper = width * rng.uniform(0.0, 1.0, (K, E))
    return DemandPanel(D), ShiftBounds(lower, upper)


def shifted_by_formula(D, x, cyclic=False):
    """Dbar[k,t] = D[k,t-1] x[k,t-1] + D[k,t] (1 - x[k,t]), boundary terms zero."""
    K, T = D.shape
    out = np.zeros((K, T))
    for k in range(K):
        for t in range(T):
            if cyclic:
                prev = D[k, t - 1] * x[k, t - 1]
                own = D[k, t] * (1 - x[k, t])
            else:
                prev = D[k, t - 1] * x[k, t - 1] if t >= 1 else 0.0
                own = D[k, t] * (1 - x[k, t]) if t < T - 1 else D[k, t]
            out[k, t] = prev + own
    return out


def squared_objective(D, x, f, lam, cyclic=False, units=False):
    r = shifted_by_formula(D, x, cyclic) - f
    E = x.shape[1]
    scale = D[:, :E] if units else 1.0
    return float(np.sum(r**2) + np.sum(lam * (scale * x) ** 2))


def absolute_objective(D, x, f, lam, cyclic=False):
    r = shifted_by_formula(D, x, cyclic) - f
    return float(np.sum(np.abs(r)) + np.sum(lam * np.abs(x)))


def best_single_coordinate_gain(objective, x, f, lower, upper):
    """Largest decrease any one coordinate (an x edge or a forecast slot) can achieve."""
    base = objective(x, f)
    best = 0.0
    for idx in np.ndindex(x.shape):
        def g(v, idx=idx):
            y = x.copy()
            y[idx] = v
            return objective(y, f)

        lo, hi = lower[idx], upper[idx]
        if hi > lo:
            res = minimize_scalar(g, bounds=(lo, hi), method="bounded", options={"xatol": 1e-12})
            best = max(best, base - min(res.fun, g(lo), g(hi)))
    top = max(1.0, float(np.max(np.abs(f))) * 4 + 100.0)
    for t in range(f.size):
        def h(v, t=t):
            g2 = f.copy()
            g2[t] = v
            return objective(x, g2)

        res = minimize_scalar(h, bounds=(0.0, top), method="bounded", options={"xatol": 1e-12})
        best = max(best, base - min(res.fun, h(0.0)))
    return best
