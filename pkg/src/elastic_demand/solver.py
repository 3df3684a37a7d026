"""Configuration and result types shared by the two solvers."""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Literal

import numpy as np
from numpy.typing import NDArray

from .panel import (
    DemandPanel,
    ForecastVector,
    PanelStats,
    ShiftBounds,
    ShiftPlan,
    ShiftedPanel,
    edge_endpoints,
    n_edges,
)

PenaltyBasis = Literal["fraction", "units"]


@dataclass(frozen=True)
class SolverConfig:
    """Knobs for :func:`solve_qp` and :func:`solve_l1`.

    ``lam`` is either a scalar or a per-edge ``K x E`` matrix of penalty
    weights. With ``penalty_basis="units"`` the penalty applies to the moved
    amount ``D[k, t] * x[k, t]`` instead of the fraction itself.
    ``enforce_nonneg_shifted`` additionally keeps every shifted value
    nonnegative. ``polish`` runs an exact refinement once coordinate descent
    stalls (see the solver modules).
    """

    lam: float | NDArray[np.float64] = 0.0
    penalty_basis: PenaltyBasis = "fraction"
    cyclic: bool = False
    objective_kind: Literal["squared", "absolute"] = "squared"
    enforce_nonneg_shifted: bool = False
    tol: float = 1e-10
    max_iter: int = 10000
    init_plan: ShiftPlan | None = None
    polish: bool = True

    def __post_init__(self):
        lam = np.asarray(self.lam, dtype=float)
        if not np.all(np.isfinite(lam)) or np.any(lam < 0):
            raise ValueError("lambda must be finite and >= 0")
        if lam.ndim not in (0, 2):
            raise ValueError("lambda must be a scalar or a K x E matrix")
        if self.penalty_basis not in ("fraction", "units"):
            raise ValueError(f"unknown penalty basis {self.penalty_basis!r}")
        if self.objective_kind not in ("squared", "absolute"):
            raise ValueError(f"unknown objective kind {self.objective_kind!r}")
        if not self.tol > 0:
            raise ValueError("tol must be > 0")
        if int(self.max_iter) < 1:
            raise ValueError("max_iter must be >= 1")

    def lam_matrix(self, n_series: int, n_slots: int) -> NDArray:
        shape = (n_series, n_edges(n_slots, self.cyclic))
        lam = np.asarray(self.lam, dtype=float)
        if lam.ndim == 2 and lam.shape != shape:
            raise ValueError(f"lambda matrix has shape {lam.shape}, expected {shape}")
        return np.broadcast_to(lam, shape).astype(float)

    def penalty_scale(self, D: NDArray) -> NDArray:
        """Multiplier turning a fraction into the penalized quantity."""
        src, _ = edge_endpoints(D.shape[1], self.cyclic)
        if self.penalty_basis == "units":
            return np.array(D[:, src], dtype=float)
        return np.ones((D.shape[0], src.size))


@dataclass(frozen=True)
class SolveReport:
    plan: ShiftPlan
    forecast: ForecastVector
    shifted: ShiftedPanel
    objective_trace: list[float]
    stats: PanelStats
    iterations: int
    converged: bool
    polish_steps: int = field(default=0)

    @property
    def objective(self) -> float:
        return self.objective_trace[-1]

    def summary(self) -> dict:
        return {
            "objective": self.objective,
            "var_bar": self.stats.var_bar,
            "mean_abs_p": self.stats.mean_abs_p,
            "iterations": self.iterations,
            "converged": self.converged,
        }


def check_inputs(panel: DemandPanel, bounds: ShiftBounds, config: SolverConfig) -> None:
    K, T = panel.shape
    expected = (K, n_edges(T, config.cyclic))
    if bounds.shape != expected:
        raise ValueError(f"bounds have shape {bounds.shape}, expected {expected}")
    config.lam_matrix(K, T)
    if config.init_plan is not None:
        if config.init_plan.shape != expected:
            raise ValueError(f"init_plan has shape {config.init_plan.shape}, expected {expected}")
        if not bounds.contains(config.init_plan):
            raise ValueError("init_plan violates the bounds")


def check_dims(panel: DemandPanel, plan: ShiftPlan, forecast: ForecastVector, config: SolverConfig):
    K, T = panel.shape
    if plan.shape != (K, n_edges(T, config.cyclic)):
        raise ValueError(f"plan shape {plan.shape} does not match panel {panel.shape}")
    if len(forecast) != T:
        raise ValueError(f"forecast has {len(forecast)} slots, panel has {T}")


def colour_classes(n_slots: int, cyclic: bool) -> list[NDArray]:
    """Partition edges into groups that share no slot.

    Edges inside a group can be minimized simultaneously; that is the same as
    visiting them one after another.
    """
    E = n_edges(n_slots, cyclic)
    even = np.arange(0, E, 2)
    odd = np.arange(1, E, 2)
    if cyclic and E % 2 == 1 and E > 1:
        # last edge wraps onto slot 0, which edge 0 also touches
        return [c for c in (even[:-1], odd, even[-1:]) if c.size]
    return [c for c in (even, odd) if c.size]


def initial_plan(panel: DemandPanel, config: SolverConfig) -> NDArray:
    K, T = panel.shape
    if config.init_plan is not None:
        return np.array(config.init_plan.x, dtype=float)
    return np.zeros((K, n_edges(T, config.cyclic)))
