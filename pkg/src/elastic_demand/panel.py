"""Demand panels, shift plans and the shifted-demand map.

A panel holds ``K`` historical series (e.g. days) of ``T`` time slots
(e.g. delivery hours). A shift plan assigns one signed fraction per
adjacent-slot edge of every series: ``x[k, t]`` moves ``D[k, t] * x[k, t]``
units from slot ``t`` to slot ``t + 1`` (negative values move the same
amount the other way). In cyclic mode an extra edge joins the last slot
to the first one.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Literal, Sequence

import numpy as np
from numpy.typing import NDArray

__all__ = [
    "DemandPanel",
    "ShiftBounds",
    "ShiftPlan",
    "ForecastVector",
    "PanelStats",
    "ConservationReport",
    "InfeasibleBoundsError",
    "edge_endpoints",
    "n_edges",
    "apply_shift",
    "check_conservation",
    "panel_stats",
    "optimal_forecast",
]

ObjectiveKind = Literal["squared", "absolute"]


class InfeasibleBoundsError(ValueError):
    """Raised when shift bounds do not bracket zero."""


def _frozen(a: NDArray) -> NDArray:
    a = np.array(a, dtype=float)
    a.setflags(write=False)
    return a


def n_edges(n_slots: int, cyclic: bool = False) -> int:
    return n_slots if cyclic else n_slots - 1


def edge_endpoints(n_slots: int, cyclic: bool = False) -> tuple[NDArray, NDArray]:
    """Source and destination slot index of every edge."""
    src = np.arange(n_edges(n_slots, cyclic))
    return src, (src + 1) % n_slots


@dataclass(frozen=True)
class DemandPanel:
    """Observed demand, one row per series and one column per slot."""

    values: NDArray[np.float64]
    series_labels: tuple[str, ...] = ()
    slot_labels: tuple[str, ...] = ()

    def __post_init__(self):
        values = np.array(self.values, dtype=float)
        if values.ndim == 1:
            values = values[None, :]
        if values.ndim != 2:
            raise ValueError("panel values must be a K x T matrix")
        K, T = values.shape
        if K < 1 or T < 2:
            raise ValueError(f"panel needs K >= 1 series and T >= 2 slots, got {K}x{T}")
        if not np.all(np.isfinite(values)):
            raise ValueError("panel values must be finite")
        if np.any(values < 0):
            raise ValueError("panel values must be nonnegative")
        series = tuple(str(s) for s in self.series_labels) or tuple(str(k + 1) for k in range(K))
        slots = tuple(str(s) for s in self.slot_labels) or tuple(str(t + 1) for t in range(T))
        if len(series) != K or len(slots) != T:
            raise ValueError("label counts do not match panel shape")
        object.__setattr__(self, "values", _frozen(values))
        object.__setattr__(self, "series_labels", series)
        object.__setattr__(self, "slot_labels", slots)

    @property
    def shape(self) -> tuple[int, int]:
        return self.values.shape

    @property
    def n_series(self) -> int:
        return self.values.shape[0]

    @property
    def n_slots(self) -> int:
        return self.values.shape[1]

    def with_values(self, values: NDArray) -> "ShiftedPanel":
        """Same labels, new values. The result may hold negative demand."""
        return ShiftedPanel(values, self.series_labels, self.slot_labels)


@dataclass(frozen=True)
class ShiftedPanel(DemandPanel):
    """A panel produced by :func:`apply_shift`.

    Extreme plans can push demand below zero, so the nonnegativity check of
    :class:`DemandPanel` is relaxed here.
    """

    def __post_init__(self):
        values = np.array(self.values, dtype=float)
        if values.ndim != 2 or values.shape[1] < 2:
            raise ValueError("panel values must be a K x T matrix with T >= 2")
        if not np.all(np.isfinite(values)):
            raise ValueError("panel values must be finite")
        K, T = values.shape
        object.__setattr__(self, "values", _frozen(values))
        object.__setattr__(
            self, "series_labels", tuple(self.series_labels) or tuple(str(k + 1) for k in range(K))
        )
        object.__setattr__(
            self, "slot_labels", tuple(self.slot_labels) or tuple(str(t + 1) for t in range(T))
        )


@dataclass(frozen=True)
class ShiftBounds:
    """Per-edge limits on the shift fractions, ``lower <= 0 <= upper``."""

    lower: NDArray[np.float64]
    upper: NDArray[np.float64]

    def __post_init__(self):
        lower = np.atleast_2d(np.array(self.lower, dtype=float))
        upper = np.atleast_2d(np.array(self.upper, dtype=float))
        if lower.shape != upper.shape:
            raise ValueError(f"lower {lower.shape} and upper {upper.shape} differ in shape")
        if not (np.all(np.isfinite(lower)) and np.all(np.isfinite(upper))):
            raise ValueError("bounds must be finite")
        if np.any(lower > upper):
            raise InfeasibleBoundsError("lower bound exceeds upper bound")
        if np.any(lower > 0) or np.any(upper < 0):
            raise InfeasibleBoundsError("bounds must satisfy lower <= 0 <= upper")
        if np.any(lower < -1) or np.any(upper > 1):
            raise InfeasibleBoundsError("shift fractions are limited to [-1, 1]")
        object.__setattr__(self, "lower", _frozen(lower))
        object.__setattr__(self, "upper", _frozen(upper))

    @classmethod
    def uniform(cls, lower: float, upper: float, n_series: int, n_edges: int) -> "ShiftBounds":
        shape = (n_series, n_edges)
        return cls(np.full(shape, float(lower)), np.full(shape, float(upper)))

    @classmethod
    def for_panel(
        cls, panel: DemandPanel, lower: float, upper: float, cyclic: bool = False
    ) -> "ShiftBounds":
        return cls.uniform(lower, upper, panel.n_series, n_edges(panel.n_slots, cyclic))

    @property
    def shape(self) -> tuple[int, int]:
        return self.lower.shape

    def contains(self, plan: "ShiftPlan", atol: float = 0.0) -> bool:
        x = plan.x
        return bool(np.all(x >= self.lower - atol) and np.all(x <= self.upper + atol))


@dataclass(frozen=True)
class ShiftPlan:
    """Shift fractions, ``x[k, t]`` for the edge from slot ``t`` to ``t + 1``."""

    x: NDArray[np.float64]

    def __post_init__(self):
        x = np.atleast_2d(np.array(self.x, dtype=float))
        if x.ndim != 2:
            raise ValueError("shift plan must be a K x E matrix")
        if not np.all(np.isfinite(x)):
            raise ValueError("shift plan entries must be finite")
        object.__setattr__(self, "x", _frozen(x))

    @classmethod
    def zeros(cls, n_series: int, n_edges: int) -> "ShiftPlan":
        return cls(np.zeros((n_series, n_edges)))

    @property
    def shape(self) -> tuple[int, int]:
        return self.x.shape


@dataclass(frozen=True)
class ForecastVector:
    """Per-slot target demand."""

    values: NDArray[np.float64]

    def __post_init__(self):
        v = np.array(self.values, dtype=float).ravel()
        if not np.all(np.isfinite(v)):
            raise ValueError("forecast values must be finite")
        if np.any(v < 0):
            raise ValueError("forecast values must be nonnegative")
        object.__setattr__(self, "values", _frozen(v))

    def __len__(self) -> int:
        return self.values.size


@dataclass(frozen=True)
class PanelStats:
    """Cross-series spread of a panel and the size of the plan that produced it.

    Attributes:
        per_slot_variance: sample variance (denominator ``K - 1``) of every slot
        var_bar: mean of ``per_slot_variance``
        p: the shift fractions
        abs_p: ``|p|``
        mean_abs_p: mean of ``abs_p`` over all edges and series
    """

    per_slot_variance: NDArray[np.float64]
    var_bar: float
    p: NDArray[np.float64]
    abs_p: NDArray[np.float64]
    mean_abs_p: float

    def summary(self) -> dict:
        return {"var_bar": self.var_bar, "mean_abs_p": self.mean_abs_p}


@dataclass(frozen=True)
class ConservationReport:
    deltas: NDArray[np.float64]
    passed: bool
    rel_tol: float = field(default=1e-9)


def _resolve_cyclic(panel: DemandPanel, plan: ShiftPlan, cyclic: bool | None) -> bool:
    K, T = panel.shape
    if plan.shape[0] != K:
        raise ValueError(f"plan has {plan.shape[0]} series, panel has {K}")
    E = plan.shape[1]
    if cyclic is None:
        if E not in (T - 1, T):
            raise ValueError(f"plan has {E} edges; expected {T - 1} or {T} for {T} slots")
        return E == T
    if E != n_edges(T, cyclic):
        raise ValueError(f"plan has {E} edges; expected {n_edges(T, cyclic)} (cyclic={cyclic})")
    return cyclic


def shift_values(D: NDArray, x: NDArray, cyclic: bool) -> NDArray:
    """Array form of :func:`apply_shift`, no validation."""
    src, dst = edge_endpoints(D.shape[1], cyclic)
    moved = D[:, src] * x
    out = np.array(D, dtype=float)
    out[:, src] -= moved
    out[:, dst] += moved
    return out


def apply_shift(panel: DemandPanel, plan: ShiftPlan, cyclic: bool | None = None) -> ShiftedPanel:
    """Shifted demand ``D[k,t-1] * x[k,t-1] + D[k,t] * (1 - x[k,t])``.

    ``cyclic`` defaults to whatever the plan's edge count implies. The
    result is not clipped at zero.
    """
    cyclic = _resolve_cyclic(panel, plan, cyclic)
    return panel.with_values(shift_values(panel.values, plan.x, cyclic))


def check_conservation(
    original: DemandPanel, shifted: DemandPanel, rel_tol: float = 1e-9
) -> ConservationReport:
    """Compare per-series totals of two panels.

    Passes iff ``|sum(shifted[k]) - sum(original[k])| <= rel_tol * (1 + sum(original[k]))``
    for every series.
    """
    if original.shape != shifted.shape:
        raise ValueError(f"shape mismatch: {original.shape} vs {shifted.shape}")
    totals = original.values.sum(axis=1)
    deltas = shifted.values.sum(axis=1) - totals
    passed = bool(np.all(np.abs(deltas) <= rel_tol * (1.0 + np.abs(totals))))
    return ConservationReport(deltas=deltas, passed=passed, rel_tol=rel_tol)


def slot_variance(values: NDArray) -> NDArray:
    if values.shape[0] < 2:
        return np.zeros(values.shape[1])
    return np.var(values, axis=0, ddof=1)


def panel_stats(panel: DemandPanel, plan: ShiftPlan | None = None) -> PanelStats:
    """Variance and shift-magnitude summary of a (usually shifted) panel."""
    per_slot = slot_variance(panel.values)
    if plan is None:
        plan = ShiftPlan.zeros(panel.n_series, panel.n_slots - 1)
    elif plan.shape[0] != panel.n_series:
        raise ValueError(f"plan has {plan.shape[0]} series, panel has {panel.n_series}")
    p = np.array(plan.x)
    abs_p = np.abs(p)
    return PanelStats(
        per_slot_variance=per_slot,
        var_bar=float(per_slot.mean()),
        p=p,
        abs_p=abs_p,
        mean_abs_p=float(abs_p.mean()) if abs_p.size else 0.0,
    )


def lower_median(values: NDArray, axis: int = 0) -> NDArray:
    s = np.sort(values, axis=axis)
    return np.take(s, (s.shape[axis] - 1) // 2, axis=axis)


def forecast_values(values: NDArray, objective_kind: ObjectiveKind = "squared") -> NDArray:
    if objective_kind == "squared":
        center = values.mean(axis=0)
    elif objective_kind == "absolute":
        center = lower_median(values, axis=0)
    else:
        raise ValueError(f"unknown objective kind {objective_kind!r}")
    return np.maximum(center, 0.0)


def optimal_forecast(panel: DemandPanel, objective_kind: ObjectiveKind = "squared") -> ForecastVector:
    """Slot-wise best forecast: the mean for squared error, the lower median for
    absolute error; both clamped at zero."""
    return ForecastVector(forecast_values(panel.values, objective_kind))


def as_panel(rows: Sequence[Sequence[float]] | NDArray | DemandPanel) -> DemandPanel:
    if isinstance(rows, DemandPanel):
        return rows
    return DemandPanel(np.asarray(rows, dtype=float))
