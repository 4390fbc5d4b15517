"""
Time-evolution data structures.

This module defines the output sampling grid, the trajectory record with its
observables and diagnostic flags, and the spectator dissipation settings.
"""
from dataclasses import dataclass, field
from enum import Enum
from typing import Optional, Tuple

import numpy as np

from src.models.model_params import ModelError

# Diagnostic flags attached to trajectories
FLAG_NORM_DRIFT = "norm-drift"
FLAG_TRACE_DRIFT = "trace-drift"
FLAG_POSITIVITY = "positivity-violated"
FLAG_HERMITICITY = "hermiticity-drift"


@dataclass(frozen=True)
class TimeGrid:
    """
    Uniform output sampling grid.

    The sample count only controls where observables are recorded; the
    integrator chooses its own internal steps.

    Attributes:
        t_start: First sample time
        t_end: Last sample time
        sample_count: Number of samples (>= 2)
    """
    t_start: float
    t_end: float
    sample_count: int = 2001

    def __post_init__(self) -> None:
        if not self.t_start < self.t_end:
            raise ModelError(f"t_start ({self.t_start}) must be < t_end ({self.t_end})")
        if self.sample_count < 2:
            raise ModelError(f"sample_count must be >= 2, got {self.sample_count}")

    @property
    def times(self) -> np.ndarray:
        """Sample times."""
        return np.linspace(self.t_start, self.t_end, self.sample_count)

    @property
    def spacing(self) -> float:
        """Distance between consecutive samples."""
        return (self.t_end - self.t_start) / (self.sample_count - 1)

    def scaled(self, factor: float) -> "TimeGrid":
        """Grid with every time divided by factor (companion of ModelParams.scaled)."""
        return TimeGrid(self.t_start / factor, self.t_end / factor, self.sample_count)


@dataclass(frozen=True)
class Trajectory:
    """
    Sampled observables of one time evolution.

    Attributes:
        times: Sample times
        p_of_t: Transition probability into the upper instantaneous qubit branch
        purity_of_t: Purity of the reduced qubit state
        renyi_of_t: Second Renyi entropy -ln(purity)
        norm_defect: |norm - 1| (state vectors) or |Tr(rho) - 1| (density matrices)
        flags: Diagnostic flags (norm-drift, trace-drift, ...)
        snapshots: Composite states per sample, stored only on request
    """
    times: np.ndarray
    p_of_t: np.ndarray
    purity_of_t: np.ndarray
    renyi_of_t: np.ndarray
    norm_defect: np.ndarray
    flags: Tuple[str, ...] = ()
    snapshots: Optional[np.ndarray] = field(default=None, repr=False, compare=False)

    @property
    def final_probability(self) -> float:
        """P at the last sample."""
        return float(self.p_of_t[-1])

    def has_flag(self, flag: str) -> bool:
        """True when the diagnostic flag was raised."""
        return flag in self.flags


class DissipationChannel(Enum):
    """Spectator dissipation channel."""
    SPECTATOR_DECAY = "spectator_decay"            # tau_- or a
    SPECTATOR_DEPHASING = "spectator_dephasing"    # tau_z or a^dagger a


@dataclass(frozen=True)
class DissipationSpec:
    """
    Markovian dissipation acting on the spectator factor.

    Attributes:
        rate: Rate kappa (energy, >= 0)
        channel: Jump-operator family
    """
    rate: float = 0.0
    channel: DissipationChannel = DissipationChannel.SPECTATOR_DECAY

    def __post_init__(self) -> None:
        if not self.rate >= 0:
            raise ModelError(f"Dissipation rate must be >= 0, got {self.rate}")

    def scaled(self, factor: float) -> "DissipationSpec":
        """Rate rescaled with the energies."""
        return DissipationSpec(self.rate * factor, self.channel)


@dataclass(frozen=True)
class EffectiveGapFit:
    """
    Effective LZ gap extracted from asymptotic transition probabilities.

    Attributes:
        g_prime: Fitted effective gap
        residual: max |P - exp(-pi g'^2 / 2 eps)| over the measured rates
        epsilons: Sweep rates used
        probabilities: Asymptotic P measured at each rate
        hypotheses: Residual of each closed-form candidate, keyed by label
        winner: Label of the candidate with the smallest residual
    """
    g_prime: float
    residual: float
    epsilons: Tuple[float, ...]
    probabilities: Tuple[float, ...]
    hypotheses: dict
    winner: str
