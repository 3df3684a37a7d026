"""Seeded synthetic hourly demand.

Noise comes from SplitMix64 (Steele, Lea and Flood, 2014) rather than a
library RNG so that a seed gives the same panel on every platform and
numpy version.
"""

from __future__ import annotations

from typing import Sequence

import numpy as np

from .panel import DemandPanel

__all__ = ["SplitMix64", "default_profile", "simulate_panel"]

_MASK = (1 << 64) - 1
_GAMMA = 0x9E3779B97F4A7C15
_MIX1 = 0xBF58476D1CE4E5B9
_MIX2 = 0x94D049BB133111EB


class SplitMix64:
    """64-bit SplitMix generator: one word of state advanced by a fixed odd constant."""

    def __init__(self, seed: int):
        self.state = int(seed) & _MASK

    def next_u64(self) -> int:
        self.state = (self.state + _GAMMA) & _MASK
        z = self.state
        z = ((z ^ (z >> 30)) * _MIX1) & _MASK
        z = ((z ^ (z >> 27)) * _MIX2) & _MASK
        return z ^ (z >> 31)

    def unit(self) -> float:
        """Uniform on [0, 1) with 53 random bits."""
        return (self.next_u64() >> 11) * 2.0**-53

    def symmetric(self) -> float:
        """Uniform on [-1, 1)."""
        return 2.0 * self.unit() - 1.0


def default_profile(slots_per_day: int = 24) -> list[float]:
    """Bimodal daily demand: a late-morning peak, an evening peak and a floor.

    Slot ``t`` is evaluated at the middle of its share of a 24 hour day.
    """
    if slots_per_day < 2:
        raise ValueError("need at least 2 slots per day")
    hours = (np.arange(slots_per_day) + 0.5) * 24.0 / slots_per_day
    morning = 45.0 * np.exp(-0.5 * ((hours - 10.5) / 1.8) ** 2)
    evening = 35.0 * np.exp(-0.5 * ((hours - 18.5) / 2.0) ** 2)
    return [round(float(v), 4) for v in 8.0 + morning + evening]


def _slot_labels(slots_per_day: int) -> list[str]:
    if slots_per_day == 24:
        return [f"{h:02d}-{h + 1:02d}" for h in range(24)]
    return [f"slot{t + 1}" for t in range(slots_per_day)]


def simulate_panel(
    days: int = 10,
    slots_per_day: int = 24,
    profile: Sequence[float] | None = None,
    noise_scale: float = 0.3,
    seed: int = 42,
) -> DemandPanel:
    """One series per day: ``max(0, profile[t] * (1 + noise_scale * u))``, ``u`` in [-1, 1).

    Draws are taken day by day, slot by slot, from ``SplitMix64(seed)``.
    """
    if days < 1:
        raise ValueError("days must be >= 1")
    if profile is None:
        profile = default_profile(slots_per_day)
    profile = [float(p) for p in profile]
    if len(profile) != slots_per_day:
        raise ValueError(f"profile has {len(profile)} entries, expected {slots_per_day}")
    if any(p < 0 for p in profile):
        raise ValueError("profile values must be >= 0")
    if not noise_scale >= 0:
        raise ValueError("noise_scale must be >= 0")
    rng = SplitMix64(seed)
    values = [
        [max(0.0, p * (1.0 + noise_scale * rng.symmetric())) for p in profile] for _ in range(days)
    ]
    return DemandPanel(
        np.array(values),
        series_labels=tuple(f"day{d + 1:02d}" for d in range(days)),
        slot_labels=tuple(_slot_labels(slots_per_day)),
    )
