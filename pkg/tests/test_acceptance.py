"""One test per acceptance criterion, each at its stated tolerance.

Every test is wrapped in the ``criterion`` fixture, which prints a
PASS/FAIL line per criterion in the terminal summary.
"""

import warnings

import numpy as np
import pytest

from elastic_demand import (
    DemandPanel,
    Scenario,
    ScenarioSet,
    ShiftBounds,
    ShiftPlan,
    SolverConfig,
    apply_shift,
    check_conservation,
    cost_breakdown,
    grid_search,
    solve_l1,
    solve_qp,
)
from elastic_demand.sweep import run_sweep

SEED = 20240517
U_GRID = [round(0.1 * i, 1) for i in range(11)]
FIG9_GRID = [0.0, 0.1, 0.2, 0.3, 0.4, 0.5]


def table1_panel():
    return DemandPanel([[10.0, 20.0], [20.0, 10.0]])


def table1_solve(L, U, lam):
    panel = table1_panel()
    return panel, solve_qp(panel, ShiftBounds.for_panel(panel, L, U), SolverConfig(lam=lam))


def oracle_instances():
    """50 seeded instances: K=2, T in {2, 3}, random bounds, lambda in {0, 1}."""
    rng = np.random.default_rng(SEED)
    out = []
    for i in range(50):
        T = 2 if i % 2 == 0 else 3
        D = rng.uniform(0.0, 20.0, (2, T))
        # three-slot instances use narrower boxes to keep the 0.01 grid small
        width = 1.0 if T == 2 else 0.15
        lower = -width * rng.uniform(0.0, 1.0, (2, T - 1))
        upper = width * rng.uniform(0.0, 1.0, (2, T - 1))
        lam = float(rng.choice([0.0, 1.0]))
        out.append((DemandPanel(D), ShiftBounds(lower, upper), lam))
    return out


def test_criterion_1_unique_optimum_rows(criterion):
    with criterion("1", "unique-optimum rows reproduce the (-1,1,1), (-0.1,0.1,0) and (-1,0,0) anchors"):
        _, rep = table1_solve(-1, 1, 1.0)
        np.testing.assert_allclose(rep.shifted.values, [[12, 18], [12, 18]], atol=0.1)
        np.testing.assert_allclose(rep.plan.x.ravel(), [-0.2, 0.4], atol=0.01)
        assert rep.stats.var_bar <= 0.01
        assert abs(rep.stats.mean_abs_p - 0.3) <= 0.01

        _, rep = table1_solve(-0.1, 0.1, 0.0)
        np.testing.assert_allclose(rep.shifted.values, [[11, 19], [18, 12]], atol=1e-6, rtol=0)
        assert abs(rep.stats.var_bar - 24.5) <= 1e-6

        _, rep = table1_solve(-1, 0, 0.0)
        np.testing.assert_allclose(rep.shifted.values, [[20, 10], [20, 10]], atol=1e-6, rtol=0)
        assert rep.stats.var_bar <= 1e-9


def test_criterion_2_degenerate_rows(criterion):
    with criterion("2", "degenerate rows (-1,1,0) and (0,1,0) reach zero variance"):
        for L, U in ((-1, 1), (0, 1)):
            panel, rep = table1_solve(L, U, 0.0)
            assert rep.stats.var_bar <= 1e-9
            assert ShiftBounds.for_panel(panel, L, U).contains(rep.plan)
            assert check_conservation(panel, rep.shifted, 1e-9).passed


def test_criterion_3_expected_costs(criterion):
    with criterion("3", "expected costs 5/5, 5/5, 2.5/2.5 and 0/0 to 1e-12"):
        p1, p2 = [10.0, 20.0], [20.0, 10.0]
        inelastic = ScenarioSet((Scenario(0.5, p1), Scenario(0.5, p2)))
        elastic = ScenarioSet((Scenario(0.5, p1), Scenario.shiftable_units(0.5, p2, slot=0, units=10.0)))
        cases = [
            ([15.0, 15.0], inelastic, [5.0, 5.0], 10.0),
            ([10.0, 20.0], inelastic, [5.0, 5.0], 10.0),
            ([15.0, 15.0], elastic, [2.5, 2.5], 5.0),
            ([10.0, 20.0], elastic, [0.0, 0.0], 0.0),
        ]
        for forecast, scenarios, per_slot, total in cases:
            rep = cost_breakdown(forecast, scenarios)
            np.testing.assert_allclose(rep.per_slot, per_slot, atol=1e-12, rtol=0)
            assert abs(rep.total - total) <= 1e-12


def test_criterion_4_conservation(criterion):
    with criterion("4", "1000 random feasible plans conserve per-series totals at 1e-9"):
        rng = np.random.default_rng(SEED)
        for i in range(1000):
            cyclic = i % 2 == 1
            K, T = int(rng.integers(1, 8)), int(rng.integers(2, 30))
            E = T if cyclic else T - 1
            D = rng.uniform(0.0, 1000.0, (K, T)) * (rng.uniform(size=(K, T)) > 0.1)
            panel = DemandPanel(D)
            lower = -rng.uniform(0.0, 1.0, (K, E))
            upper = rng.uniform(0.0, 1.0, (K, E))
            x = lower + (upper - lower) * rng.uniform(size=(K, E))
            shifted = apply_shift(panel, ShiftPlan(x), cyclic)
            assert check_conservation(panel, shifted, 1e-9).passed


@pytest.mark.parametrize("kind", ["squared", "absolute"])
def test_criterion_5_oracle_equivalence(criterion, kind):
    with criterion("5", f"{kind} solver matches the grid oracle on 50 instances"):
        solve = solve_qp if kind == "squared" else solve_l1
        for panel, bounds, lam in oracle_instances():
            cfg = SolverConfig(lam=lam, objective_kind=kind)
            rep = solve(panel, bounds, cfg)
            orc = grid_search(panel, bounds, cfg, resolution=0.01)
            assert rep.objective <= orc.objective + 1e-9
            assert orc.objective <= rep.objective + orc.eps_grid


def test_criterion_6_sweep_shape(criterion, generated):
    with criterion("6", "variance falls with U, a heavy penalty plateaus higher, shift size grows"):
        rows = run_sweep(generated, U_GRID, [0.0, 1.0, 100.0])
        curve = {lam: [r for r in rows if r.lam == lam] for lam in (0.0, 1.0, 100.0)}
        var0 = [r.var_bar for r in curve[0.0]]
        assert all(b <= a + 1e-6 for a, b in zip(var0, var0[1:]))
        assert curve[100.0][-1].var_bar > curve[0.0][-1].var_bar
        p1 = [r.mean_abs_p for r in curve[1.0]]
        assert all(b >= a - 1e-6 for a, b in zip(p1, p1[1:]))


def test_criterion_7_elastic_fraction(criterion, generated):
    with criterion("7", "variance falls with the elastic fraction at lambda=1"):
        var = [r.var_bar for r in run_sweep(generated, FIG9_GRID, [1.0])]
        drops = -np.diff(var)
        assert np.all(drops >= -1e-6)
        if int(np.argmax(drops)) != 0:
            warnings.warn(f"first drop is not the largest on this data: drops {drops.tolist()}")


def test_criterion_8_solver_hygiene(criterion, generated):
    with criterion("8", "every trace is non-increasing and converges within 10000 iterations"):
        reports = []
        for L, U, lam in ((-1, 1, 1.0), (-0.1, 0.1, 0.0), (-1, 0, 0.0), (-1, 1, 0.0), (0, 1, 0.0)):
            reports.append(table1_solve(L, U, lam)[1])
        for panel, bounds, lam in oracle_instances():
            for kind, solve in (("squared", solve_qp), ("absolute", solve_l1)):
                reports.append(solve(panel, bounds, SolverConfig(lam=lam, objective_kind=kind)))
        for U in sorted(set(U_GRID)):
            bounds = ShiftBounds.for_panel(generated, -U, U)
            for lam in (0.0, 1.0, 100.0):
                reports.append(solve_qp(generated, bounds, SolverConfig(lam=lam)))
        for rep in reports:
            assert np.all(np.diff(rep.objective_trace) <= 1e-12)
            assert rep.converged
            assert rep.iterations <= 10000
