"""
Adiabatic-basis data structures.

This module defines the instantaneous spectrum record, gap reports and the
regime classification of a parameter point.
"""
import math
from dataclasses import dataclass
from enum import Enum
from typing import Optional, Tuple

import numpy as np

# Returned by the second-threshold search when no closing is found
ABOVE_WINDOW = math.inf


class Regime(Enum):
    """Coupling regime of a parameter point."""
    I = "I"        # Delta < Delta_c1: the coupling closes the central gap
    II = "II"      # Delta_c1 <= Delta < Delta_c2: superadiabatic window
    III = "III"    # Delta >= Delta_c2: off-center gap closings


@dataclass(frozen=True)
class SpectrumSlice:
    """
    Instantaneous eigen-decomposition of H(t).

    Attributes:
        t: Time of the slice
        eigenvalues: Ascending eigenvalues
        eigenvectors: Columns matching eigenvalues, gauge-fixed
        gauge_skipped: Branch indices inside a degenerate block (gauge not fixed)
    """
    t: float
    eigenvalues: np.ndarray
    eigenvectors: np.ndarray
    gauge_skipped: Tuple[int, ...] = ()

    @property
    def is_degenerate(self) -> bool:
        """True when some branches were left without gauge fixing."""
        return bool(self.gauge_skipped)


@dataclass(frozen=True)
class PairGap:
    """Minimum of the gap between adjacent branches (lower, lower + 1)."""
    lower_branch: int
    gap: float
    t_at: float
    converged: bool = True
    bracket: Optional[Tuple[float, float]] = None


@dataclass(frozen=True)
class GapReport:
    """
    Result of a minimal-gap search.

    Attributes:
        gap: Minimum of the central gap (between the lower and upper halves)
        t_at: Location of that minimum
        pair_minima: Refined minimum for every adjacent pair
        converged: False if the refinement of the central pair failed
        bracket: Interval bracketing the central minimum
    """
    gap: float
    t_at: float
    pair_minima: Tuple[PairGap, ...]
    converged: bool
    bracket: Tuple[float, float]

    @property
    def smallest(self) -> PairGap:
        """Smallest adjacent gap over all pairs."""
        return min(self.pair_minima, key=lambda pair: pair.gap)


@dataclass(frozen=True)
class ThresholdSettings:
    """
    Operational settings of the second-threshold search.

    Attributes:
        gap_fraction: Required depth (in units of g) of an off-center closing
            below the central minimum
        t_window_factor: Half window in units of g/epsilon
        t_width_factor: Lower bound of the central half width, in units of g/epsilon
        transition_width_factor: Central half width in units of the LZ
            transition time 1/sqrt(epsilon); the larger of the two widths is used
        coupling_floor: Minimum |<i|dH/dt|j>| / (epsilon/2) for a pair of
            branches to count as dynamically coupled
        delta_cap_factor: Largest Delta scanned, in units of g
        delta_floor_factor: Smallest Delta scanned, in units of g
        scan_points: Points of the geometric coarse scan in Delta
        rel_precision: Relative precision of the bisection
        n_samples: Time samples per spectrum scan
    """
    gap_fraction: float = 0.1
    t_window_factor: float = 10.0
    t_width_factor: float = 0.5
    transition_width_factor: float = 1.0
    coupling_floor: float = 1e-6
    delta_cap_factor: float = 100.0
    delta_floor_factor: float = 0.01
    scan_points: int = 60
    rel_precision: float = 1e-3
    n_samples: int = 1001

    def __post_init__(self) -> None:
        if not 0.0 < self.gap_fraction < 1.0:
            raise ValueError(f"gap_fraction must be in (0, 1), got {self.gap_fraction}")
        if not 0.0 < self.t_width_factor < self.t_window_factor:
            raise ValueError("t_width_factor must be in (0, t_window_factor)")
        if not self.transition_width_factor > 0.0:
            raise ValueError(f"transition_width_factor must be > 0, got {self.transition_width_factor}")


@dataclass(frozen=True)
class RegimeClassification:
    """
    Regime of a parameter point.

    Attributes:
        delta: Spectator splitting sqrt(4 x0^2 + omega_c^2)
        delta_c1: First threshold (= g)
        delta_c2: Second threshold along the point's (x0, omega_c) ray
            (ABOVE_WINDOW if no closing was found)
        regime: Regime label
    """
    delta: float
    delta_c1: float
    delta_c2: float
    regime: Regime

    def to_dict(self) -> dict:
        """JSON-ready representation (infinite threshold rendered as null)."""
        return {
            "delta": self.delta,
            "delta_c1": self.delta_c1,
            "delta_c2": None if math.isinf(self.delta_c2) else self.delta_c2,
            "regime": self.regime.value,
        }
