"""
Parameter-sweep data structures.

This module defines the (x0/g, omega_c/x0) sweep grid, per-point records,
pipeline settings and the robustness statistics record.
"""
import math
from dataclasses import dataclass, field
from enum import Enum
from typing import Dict, List, Optional, Tuple

import numpy as np

from src.models.model_params import ModelError, ModelParams, SpectatorSpec
from src.models.spectrum_slice import Regime


class PointStatus(Enum):
    """Outcome of one grid point."""
    OK = "ok"
    FAILED = "failed"


class TfFlag(Enum):
    """How the final time was chosen."""
    LOCAL_MINIMUM = "local-minimum"
    MONOTONE_WINDOW = "monotone-window"


def parse_axis(text: str) -> Tuple[float, ...]:
    """
    Parse an axis specification lo:hi:n[:log|lin].

    Args:
        text: e.g. "0.05:8:81:log"

    Returns:
        Strictly increasing axis values

    Raises:
        ModelError: If the specification is malformed
    """
    parts = text.strip().split(":")
    if len(parts) not in (3, 4):
        raise ModelError(f"Axis must look like lo:hi:n[:log|lin], got {text!r}")
    spacing = parts[3].lower() if len(parts) == 4 else "log"
    try:
        lo, hi, count = float(parts[0]), float(parts[1]), int(parts[2])
    except ValueError:
        raise ModelError(f"Axis bounds must be numbers, got {text!r}")

    if count < 1 or (count > 1 and not lo < hi):
        raise ModelError(f"Axis needs lo < hi and n >= 1, got {text!r}")
    if spacing == "log":
        if lo <= 0:
            raise ModelError(f"Log axis needs lo > 0, got {text!r}")
        values = np.geomspace(lo, hi, count) if count > 1 else np.array([lo])
    elif spacing == "lin":
        values = np.linspace(lo, hi, count) if count > 1 else np.array([lo])
    else:
        raise ModelError(f"Axis spacing must be log or lin, got {spacing!r}")
    return tuple(float(v) for v in values)


DEFAULT_AXIS = "0.05:8:81:log"


@dataclass(frozen=True)
class SweepGrid:
    """
    Grid over x0/g (rows) and omega_c/x0 (columns) at fixed g and epsilon.

    Attributes:
        x0_over_g: Row axis
        omega_c_over_x0: Column axis
        g: LZ gap
        epsilon: Sweep rate (g^2/epsilon = 0.5 by default)
        spectator: Spectator used at every point
    """
    x0_over_g: Tuple[float, ...] = field(default_factory=lambda: parse_axis(DEFAULT_AXIS))
    omega_c_over_x0: Tuple[float, ...] = field(default_factory=lambda: parse_axis(DEFAULT_AXIS))
    g: float = 1.0
    epsilon: float = 2.0
    spectator: SpectatorSpec = SpectatorSpec()

    def __post_init__(self) -> None:
        for name, axis in (("x0_over_g", self.x0_over_g), ("omega_c_over_x0", self.omega_c_over_x0)):
            values = np.asarray(axis, dtype=float)
            if values.size == 0:
                raise ModelError(f"{name} is empty")
            if np.any(np.diff(values) <= 0):
                raise ModelError(f"{name} must be strictly increasing")
            if values[0] < 0:
                raise ModelError(f"{name} must be non-negative")
        # validates g, epsilon
        ModelParams(g=self.g, epsilon=self.epsilon, spectator=self.spectator)

    @property
    def shape(self) -> Tuple[int, int]:
        """(rows, columns)."""
        return len(self.x0_over_g), len(self.omega_c_over_x0)

    def params_at(self, row: int, col: int) -> ModelParams:
        """Model parameters of grid point (row, col)."""
        x0 = self.x0_over_g[row] * self.g
        return ModelParams(
            g=self.g,
            epsilon=self.epsilon,
            x0=x0,
            omega_c=self.omega_c_over_x0[col] * x0,
            spectator=self.spectator
        )

    def to_dict(self) -> dict:
        """JSON-ready representation."""
        return {
            "x0_over_g": list(self.x0_over_g),
            "omega_c_over_x0": list(self.omega_c_over_x0),
            "g": self.g,
            "epsilon": self.epsilon,
            "spectator": {
                "kind": self.spectator.kind.value,
                "truncation": self.spectator.truncation,
                "initial_state": self.spectator.initial_label,
            },
        }


@dataclass(frozen=True)
class PipelineSettings:
    """
    Per-point pipeline settings, in units of g/epsilon.

    Attributes:
        tol: Integrator tolerance
        ti_factor: Start time is -ti_factor g/epsilon
        target_factor: t_f search target is +target_factor g/epsilon
        window_factor: Half width of the t_f search window
        spacing_factor: Sample spacing of the trajectory
    """
    tol: float = 1e-9
    ti_factor: float = 10.0
    target_factor: float = 10.0
    window_factor: float = 4.0
    spacing_factor: float = 0.01


@dataclass(frozen=True)
class TfOptimum:
    """Optimized final time and the transition probability there."""
    t_f: float
    p_min: float
    flag: TfFlag
    index: int


@dataclass(frozen=True)
class SweepPoint:
    """
    Result of one grid point.

    Attributes:
        row, col: Grid indices
        x0, omega_c: Physical parameters
        delta: Spectator splitting
        regime: Regime label (None when classification failed)
        t_f_opt: Optimized final time
        infidelity: P(t_f_opt)
        purity_bar: Purity at t_f_opt
        status: OK or FAILED
        flag: How t_f was chosen
        message: Failure description
    """
    row: int
    col: int
    x0: float
    omega_c: float
    delta: float
    regime: Optional[Regime] = None
    t_f_opt: float = math.nan
    infidelity: float = math.nan
    purity_bar: float = math.nan
    status: PointStatus = PointStatus.OK
    flag: Optional[TfFlag] = None
    message: str = ""

    @property
    def failed(self) -> bool:
        """True for a failed point."""
        return self.status is PointStatus.FAILED


@dataclass(frozen=True)
class SweepResult:
    """
    All grid points in row-major grid order.

    manifest holds the provenance of the run (version, grid, settings and
    whatever the caller adds, e.g. the resolved configuration and its hash).
    """
    grid: SweepGrid
    points: Tuple[SweepPoint, ...]
    manifest: Dict = field(default_factory=dict, compare=False)

    @property
    def n_failed(self) -> int:
        """Number of failed points."""
        return sum(1 for point in self.points if point.failed)

    def infidelity_map(self) -> np.ndarray:
        """Infidelities shaped (rows, columns); NaN where failed."""
        return np.array([point.infidelity for point in self.points]).reshape(self.grid.shape)

    def purity_map(self) -> np.ndarray:
        """Purities shaped (rows, columns); NaN where failed."""
        return np.array([point.purity_bar for point in self.points]).reshape(self.grid.shape)


class NoiseDistribution(Enum):
    """Relative parameter noise of the robustness study."""
    UNIFORM = "uniform"      # U(-rel_sigma, +rel_sigma)
    GAUSSIAN = "gaussian"    # N(0, rel_sigma)


@dataclass(frozen=True)
class RobustnessReport:
    """
    Statistics of the infidelity under relative parameter noise.

    Attributes:
        mean, maximum, minimum: Over successful samples
        quantiles: Infidelity at the 5/25/50/75/95 percent levels
        n_samples: Samples drawn
        n_failed: Samples whose propagation failed
        infidelities: Per-sample infidelities in draw order (NaN if failed)
        seed: Random seed
        rel_sigma: Relative noise amplitude
        distribution: Noise distribution
    """
    mean: float
    maximum: float
    minimum: float
    quantiles: Dict[str, float]
    n_samples: int
    n_failed: int
    infidelities: Tuple[float, ...]
    seed: int
    rel_sigma: float
    distribution: NoiseDistribution

    def to_dict(self) -> dict:
        """JSON-ready representation."""
        return {
            "mean": self.mean,
            "max": self.maximum,
            "min": self.minimum,
            "quantiles": dict(self.quantiles),
            "n_samples": self.n_samples,
            "n_failed": self.n_failed,
            "infidelities": [None if math.isnan(v) else v for v in self.infidelities],
            "seed": self.seed,
            "rel_sigma": self.rel_sigma,
            "distribution": self.distribution.value,
        }


def quantile_labels(levels: List[float]) -> List[str]:
    """Keys used in RobustnessReport.quantiles, e.g. q05."""
    return [f"q{int(round(level * 100)):02d}" for level in levels]
