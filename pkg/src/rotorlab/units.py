"""Dimensionless scenario parameters and their internal counterparts.

Scenarios are stated in the reduced variables

    t~ = t sqrt(V0/I),   T~ = k_B T / V0,   hbar~ = hbar / sqrt(V0 I),   Gamma~ = Gamma sqrt(I/V0).

Internally I = k_B = 1.  By default hbar = 1 as well, so energies are
measured in hbar^2/I and V0 = 1/hbar~^2; an explicit V0 instead fixes the
energy unit and gives hbar = hbar~ sqrt(V0).
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .state import BathParams, PotentialSpec


@dataclass(frozen=True)
class ReducedUnits:
    """Reduced temperature, Planck constant and friction rate of a scenario."""

    temperature: float
    hbar: float
    gamma: float = 1.0
    energy_scale: float | None = None

    def __post_init__(self):
        for name in ("temperature", "hbar"):
            if getattr(self, name) <= 0:
                raise ValueError(f"reduced {name} must be positive")
        if self.gamma < 0:
            raise ValueError("reduced friction rate must be non-negative")
        if self.energy_scale is not None and self.energy_scale <= 0:
            raise ValueError("V0 must be positive")

    @property
    def V0(self) -> float:
        """Potential scale in internal units (I = 1; hbar = 1 unless V0 is given)."""
        return self.energy_scale if self.energy_scale is not None else 1.0 / self.hbar ** 2

    @property
    def internal_hbar(self) -> float:
        return float(self.hbar * np.sqrt(self.V0))

    @property
    def time_scale(self) -> float:
        """Internal time per unit of reduced time, sqrt(I/V0)."""
        return float(1.0 / np.sqrt(self.V0))

    def internal_time(self, t_reduced):
        return t_reduced * self.time_scale

    def reduced_time(self, t_internal):
        return t_internal / self.time_scale

    def bath(self) -> BathParams:
        return BathParams(temperature=self.temperature * self.V0,
                          gamma=float(self.gamma * np.sqrt(self.V0)), inertia=1.0, hbar=self.internal_hbar)

    def tilted_double_well(self) -> PotentialSpec:
        return PotentialSpec.tilted_double_well(self.V0)

    def potential(self, terms) -> PotentialSpec:
        """Potential whose Fourier amplitudes are given in units of V0."""
        return PotentialSpec(tuple((k, a * self.V0, b * self.V0) for k, a, b in terms), V0=self.V0)

    @property
    def thermal_ratio(self) -> float:
        """T I / hbar^2 = T~ / hbar~^2, the thermal momentum variance in units of hbar^2."""
        return self.temperature / self.hbar ** 2


def revival_time(hbar: float = 1.0, inertia: float = 1.0) -> float:
    """t_r = 4 pi I / hbar, after which a free rotor state recurs exactly."""
    return 4.0 * np.pi * inertia / hbar


def thermal_truncation(thermal_ratio: float, n_sigma: float = 7.0, minimum: int = 8) -> int:
    """Basis cutoff covering n_sigma thermal widths sqrt(T I)/hbar plus a margin."""
    return max(minimum, int(np.ceil(n_sigma * np.sqrt(thermal_ratio))) + 4)
