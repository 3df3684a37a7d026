import itertools

import numpy as np
import pytest

from elastic_demand import (
    DemandPanel,
    ForecastVector,
    ShiftBounds,
    SolverConfig,

    grid_search,
    solve_qp,
)

from elastic_demand.oracle import edge_grid
from helpers import absolute_objective, random_instance, shifted_by_formula, squared_objective


def best_forecast(Dbar, squared):
    if squared:
        return np.maximum(Dbar.mean(axis=0), 0.0)
    s = np.sort(Dbar, axis=0)
    return np.maximum(s[(Dbar.shape[0] - 1) // 2], 0.0)


def brute_force(D, grids, lam, squared):
    """Plain loop over every grid plan."""
    K, E = lam.shape
    best = np.inf
    for combo in itertools.product(*grids):
        x = np.array(combo).reshape(K, E)
        f = best_forecast(shifted_by_formula(D, x), squared)
        val = squared_objective(D, x, f, lam) if squared else absolute_objective(D, x, f, lam)
        best = min(best, val)
    return best


def test_edge_grid_includes_ends_and_zero():
    g = edge_grid(-0.25, 0.13, 0.1)
    assert g[0] == -0.25 and g[-1] == 0.13
    assert 0.0 in g
    assert np.all(np.diff(g) > 0)
    np.testing.assert_array_equal(edge_grid(0.0, 0.0, 0.01), [0.0])


def test_table1_penalized(table1, bounds_for):
    cfg = SolverConfig(lam=1.0)
    orc = grid_search(table1, bounds_for(table1, -1, 1), cfg, resolution=0.01)
    np.testing.assert_allclose(orc.plan.x.ravel(), [-0.2, 0.4], atol=0.01)
    qp = solve_qp(table1, bounds_for(table1, -1, 1), cfg)
    assert qp.objective <= orc.objective + 1e-9
    assert orc.objective <= qp.objective + orc.eps_grid


def test_zero_width_bounds(table1, bounds_for):
    orc = grid_search(table1, bounds_for(table1, 0, 0))
    assert np.all(orc.plan.x == 0)
    assert orc.objective == pytest.approx(100.0)
    assert orc.n_points == 1


def test_tight_bounds_objective(table1, bounds_for):
    orc = grid_search(table1, bounds_for(table1, -0.1, 0.1))
    assert orc.objective == pytest.approx(49.0, abs=1e-9)


@pytest.mark.parametrize("squared", [True, False])
def test_matches_brute_force(rng, squared):
    for _ in range(5):
        panel, bounds = random_instance(rng, 2, 3)
        lam = np.full((2, 2), float(rng.choice([0.0, 1.0])))
        cfg = SolverConfig(lam=lam, objective_kind="squared" if squared else "absolute")
        orc = grid_search(panel, bounds, cfg, resolution=0.2)
        grids = [edge_grid(lo, hi, 0.2) for lo, hi in zip(bounds.lower.ravel(), bounds.upper.ravel())]
        assert orc.objective == pytest.approx(brute_force(panel.values, grids, lam, squared), rel=1e-12)


def test_no_sampled_grid_plan_beats_it(rng):
    panel, bounds = random_instance(rng, 2, 3)
    lam = np.ones((2, 2))
    orc = grid_search(panel, bounds, SolverConfig(lam=lam), resolution=0.01)
    grids = [edge_grid(lo, hi, 0.01) for lo, hi in zip(bounds.lower.ravel(), bounds.upper.ravel())]
    D = panel.values
    picks = np.stack([g[rng.integers(0, g.size, 1000)] for g in grids], axis=1)
    for row in picks:
        x = row.reshape(2, 2)
        f = best_forecast(shifted_by_formula(D, x), True)
        assert squared_objective(D, x, f, lam) >= orc.objective - 1e-9


def test_fixed_forecast(table1, bounds_for):
    f = ForecastVector([15.0, 15.0])
    cfg = SolverConfig(objective_kind="absolute")
    orc = grid_search(table1, bounds_for(table1, -1, 1), cfg, forecast=f)
    np.testing.assert_array_equal(orc.forecast.values, [15, 15])
    assert orc.objective == pytest.approx(0.0, abs=1e-9)


def test_cyclic(rng):
    panel, bounds = random_instance(rng, 1, 3, cyclic=True)
    orc = grid_search(panel, bounds, SolverConfig(cyclic=True), resolution=0.05)
    assert orc.plan.shape == (1, 3)


def test_errors(table1, bounds_for):
    with pytest.raises(ValueError):
        grid_search(table1, bounds_for(table1, -1, 1), resolution=0.0)
    big = DemandPanel(np.ones((2, 5)))
    with pytest.raises(ValueError, match="edges"):
        grid_search(big, ShiftBounds.for_panel(big, -1, 1))
    wide = DemandPanel(np.ones((2, 4)))
    with pytest.raises(ValueError, match="points"):
        grid_search(wide, ShiftBounds.for_panel(wide, -1, 1), resolution=0.001)
    with pytest.raises(ValueError):
        grid_search(table1, bounds_for(table1, -1, 1), forecast=ForecastVector([1.0, 2.0, 3.0]))
