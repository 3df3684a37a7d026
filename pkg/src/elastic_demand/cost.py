"""Expected supply/demand mismatch cost of a forecast.

Each scenario is one demand pattern with a probability. When a scenario
carries elastic demand, the demand can be moved (within its bounds) to
meet the forecast as well as possible before the mismatch is charged.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path
from typing import Sequence

import numpy as np
from numpy.typing import NDArray

from .l1 import solve_l1
from .oracle import MAX_EDGES, grid_search
from .panel import DemandPanel, ForecastVector, ShiftBounds, n_edges
from .solver import SolverConfig

__all__ = [
    "Scenario",
    "ScenarioSet",
    "CostReport",
    "scenario_cost",
    "scenario_slot_costs",
    "expected_cost",
    "cost_breakdown",
    "load_scenarios",
]


@dataclass(frozen=True)
class Scenario:
    """A demand pattern with its probability.

    ``bounds`` is a one-series :class:`ShiftBounds`; leave it out for an
    inelastic pattern. ``T`` edges (instead of ``T - 1``) mean the pattern
    wraps around.
    """

    probability: float
    base: NDArray[np.float64]
    bounds: ShiftBounds | None = None
    label: str = ""

    def __post_init__(self):
        if not 0.0 <= self.probability <= 1.0:
            raise ValueError(f"probability {self.probability} outside [0, 1]")
        base = np.array(self.base, dtype=float).ravel()
        # DemandPanel does the finiteness / sign / length checks
        DemandPanel(base)
        base.setflags(write=False)
        object.__setattr__(self, "base", base)
        T = base.size
        bounds = self.bounds
        if bounds is None:
            bounds = ShiftBounds.uniform(0.0, 0.0, 1, T - 1)
        if bounds.shape not in ((1, T - 1), (1, T)):
            raise ValueError(f"scenario bounds have shape {bounds.shape} for {T} slots")
        object.__setattr__(self, "bounds", bounds)

    @property
    def cyclic(self) -> bool:
        return self.bounds.shape[1] == self.base.size

    @property
    def elastic(self) -> bool:
        return bool(np.any(self.bounds.lower != 0) or np.any(self.bounds.upper != 0))

    @classmethod
    def shiftable_units(cls, probability: float, base: Sequence[float], slot: int, units: float,
                        direction: str = "later", label: str = "") -> "Scenario":
        """Pattern where ``units`` of demand at ``slot`` may move to a neighbour.

        ``direction`` is ``"later"`` (toward ``slot + 1``) or ``"earlier"``.
        """
        base = np.array(base, dtype=float)
        T = base.size
        lower = np.zeros((1, T - 1))
        upper = np.zeros((1, T - 1))
        if direction == "later":
            if not 0 <= slot < T - 1:
                raise ValueError("no later slot to move demand to")
            upper[0, slot] = units / base[slot]
        elif direction == "earlier":
            if not 1 <= slot < T:
                raise ValueError("no earlier slot to move demand to")
            # the edge into ``slot`` is scaled by the demand of ``slot - 1``
            lower[0, slot - 1] = -units / base[slot - 1]
        else:
            raise ValueError(f"unknown direction {direction!r}")
        return cls(probability, base, ShiftBounds(lower, upper), label)


@dataclass(frozen=True)
class ScenarioSet:
    scenarios: tuple[Scenario, ...]

    def __post_init__(self):
        scenarios = tuple(self.scenarios)
        if not scenarios:
            raise ValueError("scenario set is empty")
        sizes = {s.base.size for s in scenarios}
        if len(sizes) != 1:
            raise ValueError("scenarios differ in slot count")
        total = sum(s.probability for s in scenarios)
        if abs(total - 1.0) > 1e-9:
            raise ValueError(f"scenario probabilities sum to {total}, not 1")
        object.__setattr__(self, "scenarios", scenarios)

    def __iter__(self):
        return iter(self.scenarios)

    def __len__(self) -> int:
        return len(self.scenarios)

    @property
    def n_slots(self) -> int:
        return self.scenarios[0].base.size


@dataclass(frozen=True)
class CostReport:
    per_scenario: NDArray[np.float64]
    per_slot: NDArray[np.float64]
    total: float
    shifted: list[NDArray[np.float64]] = field(default_factory=list)


def _as_forecast(forecast) -> ForecastVector:
    return forecast if isinstance(forecast, ForecastVector) else ForecastVector(forecast)


def _mismatch(r, under, over):
    return np.where(r > 0, under * r, -over * r)


def _best_shift(forecast: ForecastVector, scenario: Scenario, under_cost, over_cost):
    """Shifted pattern closest to the forecast, in mismatch cost."""
    if len(forecast) != scenario.base.size:
        raise ValueError(f"forecast has {len(forecast)} slots, scenario has {scenario.base.size}")
    if not scenario.elastic:
        return np.array(scenario.base)
    report = solve_l1(
        DemandPanel(scenario.base),
        scenario.bounds,
        SolverConfig(lam=0.0, objective_kind="absolute", cyclic=scenario.cyclic),
        forecast=forecast,
        under_cost=under_cost,
        over_cost=over_cost,
    )
    return np.array(report.shifted.values[0])


def scenario_slot_costs(forecast, scenario: Scenario, under_cost=1.0, over_cost=1.0) -> NDArray:
    """Per-slot mismatch at the best reallocation of the scenario's demand."""
    forecast = _as_forecast(forecast)
    shifted = _best_shift(forecast, scenario, under_cost, over_cost)
    T = scenario.base.size
    under = np.broadcast_to(np.asarray(under_cost, dtype=float), (T,))
    over = np.broadcast_to(np.asarray(over_cost, dtype=float), (T,))
    return _mismatch(shifted - forecast.values, under, over)


def scenario_cost(
    forecast,
    scenario: Scenario,
    under_cost=1.0,
    over_cost=1.0,
    cross_check: bool = False,
    resolution: float = 0.01,
) -> float:
    """Smallest mismatch cost reachable by reallocating the scenario's elastic demand.

    With ``cross_check`` the answer is compared against an exhaustive grid
    search (small instances only) and a ``RuntimeError`` is raised if the
    two disagree beyond the grid's error bound.
    """
    forecast = _as_forecast(forecast)
    cost = float(scenario_slot_costs(forecast, scenario, under_cost, over_cost).sum())
    if cross_check and scenario.elastic:
        if n_edges(scenario.base.size, scenario.cyclic) > MAX_EDGES:
            raise ValueError("cross-check needs at most %d edges" % MAX_EDGES)
        if np.ndim(under_cost) or np.ndim(over_cost) or under_cost != 1.0 or over_cost != 1.0:
            raise ValueError("cross-check supports unit mismatch costs only")
        oracle = grid_search(
            DemandPanel(scenario.base),
            scenario.bounds,
            SolverConfig(objective_kind="absolute", cyclic=scenario.cyclic),
            resolution=resolution,
            forecast=forecast,
        )
        if cost > oracle.objective + 1e-9 or oracle.objective > cost + oracle.eps_grid:
            raise RuntimeError(
                f"cost {cost} disagrees with grid search {oracle.objective} (eps {oracle.eps_grid})"
            )
    return cost


def cost_breakdown(forecast, scenarios: ScenarioSet, under_cost=1.0, over_cost=1.0) -> CostReport:
    forecast = _as_forecast(forecast)
    if len(forecast) != scenarios.n_slots:
        raise ValueError(f"forecast has {len(forecast)} slots, scenarios have {scenarios.n_slots}")
    per_scenario, per_slot, shifted = [], np.zeros(scenarios.n_slots), []
    for s in scenarios:
        best = _best_shift(forecast, s, under_cost, over_cost)
        T = s.base.size
        slot_cost = _mismatch(
            best - forecast.values,
            np.broadcast_to(np.asarray(under_cost, dtype=float), (T,)),
            np.broadcast_to(np.asarray(over_cost, dtype=float), (T,)),
        )
        per_scenario.append(float(slot_cost.sum()))
        per_slot = per_slot + s.probability * slot_cost
        shifted.append(best)
    per_scenario = np.array(per_scenario)
    total = float(sum(s.probability * c for s, c in zip(scenarios, per_scenario)))
    return CostReport(per_scenario, per_slot, total, shifted)


def expected_cost(forecast, scenarios: ScenarioSet, under_cost=1.0, over_cost=1.0) -> float:
    """Probability-weighted :func:`scenario_cost` over a scenario set."""
    return cost_breakdown(forecast, scenarios, under_cost, over_cost).total


def load_scenarios(source: str | Path | dict) -> ScenarioSet:
    """Read ``{"scenarios": [{"prob", "base", "lower"?, "upper"?, "label"?}]}``."""
    if isinstance(source, dict):
        doc = source
    else:
        doc = json.loads(Path(source).read_text(encoding="utf-8"))
    out = []
    for i, item in enumerate(doc["scenarios"]):
        base = np.array(item["base"], dtype=float)
        lower = item.get("lower")
        upper = item.get("upper")
        bounds = None
        if lower is not None or upper is not None:
            width = len(lower if lower is not None else upper)
            lower = np.zeros(width) if lower is None else np.array(lower, dtype=float)
            upper = np.zeros(width) if upper is None else np.array(upper, dtype=float)
            bounds = ShiftBounds(lower[None, :], upper[None, :])
        out.append(Scenario(float(item["prob"]), base, bounds, str(item.get("label", i + 1))))
    return ScenarioSet(tuple(out))
