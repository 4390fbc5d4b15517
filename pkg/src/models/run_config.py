"""
Resolved run configuration of the command-line tool.

Every flag of the CLI has a field here. Defaults are the settings of the
standard trajectory and sweep runs (g = 1, eps = 2, t_i = -10 g/eps).
"""
import dataclasses
from dataclasses import dataclass
from typing import Optional

from src.models.model_params import (
    DEFAULT_OSCILLATOR_TRUNCATION,
    CouplingAxis,
    ModelError,
    ModelParams,
    SpectatorKind,
    SpectatorSpec,
)
from src.models.sweep_result import DEFAULT_AXIS, NoiseDistribution, SweepGrid, parse_axis
from src.models.trajectory import DissipationChannel, DissipationSpec, TimeGrid

# Keys that do not influence any computed number
NON_COMPUTATIONAL_KEYS = ("out", "resume", "log_level", "workers")


@dataclass(frozen=True)
class RunConfig:
    """
    Flat configuration record (one field per CLI flag / config-file key).

    Attributes:
        g, epsilon, x0, omega_c: Model energies
        spectator: "qubit" or "oscillator"
        truncation: Fock truncation (None: 2 for a qubit, 20 for an oscillator)
        initial: Spectator initial state label
        coupling_axis: "x" or "y"
        ti, tf: Time window (None: -10 g/eps and +10 g/eps)
        samples: Output samples
        tol: Integrator tolerance
        kappa: Spectator dissipation rate (0: closed system)
        channel: Dissipation channel
        grid_x0, grid_wc: Sweep axes as lo:hi:n:log
        workers: Worker processes of sweeps and robustness studies
        seed: Random seed of robustness studies
        out: Output path (None: derived from LZSPEC_OUTPUT_DIR)
        resume: Resume an interrupted sweep
        baseline: Add the bare LZ column to trajectory output
        rel_sigma: Relative noise of robustness studies
        n_samples: Robustness samples
        distribution: "uniform" or "gaussian"
        log_level: Logging level
    """
    g: float = 1.0
    epsilon: float = 2.0
    x0: float = 0.0
    omega_c: float = 0.0
    spectator: str = "qubit"
    truncation: Optional[int] = None
    initial: str = "ground"
    coupling_axis: str = "x"
    ti: Optional[float] = None
    tf: Optional[float] = None
    samples: int = 2001
    tol: float = 1e-9
    kappa: float = 0.0
    channel: str = DissipationChannel.SPECTATOR_DECAY.value
    grid_x0: str = DEFAULT_AXIS
    grid_wc: str = DEFAULT_AXIS
    workers: int = 1
    seed: int = 0
    out: Optional[str] = None
    resume: bool = False
    baseline: bool = False
    rel_sigma: float = 0.1
    n_samples: int = 100
    distribution: str = NoiseDistribution.UNIFORM.value
    log_level: str = "INFO"

    def spectator_spec(self) -> SpectatorSpec:
        """SpectatorSpec described by spectator, truncation and initial."""
        try:
            kind = SpectatorKind(self.spectator)
        except ValueError:
            raise ModelError(f"Unknown spectator kind: {self.spectator!r}")
        if kind is SpectatorKind.QUBIT:
            if self.truncation not in (None, 2):
                raise ModelError(f"A qubit spectator has truncation 2, got {self.truncation}")
            return SpectatorSpec.qubit(self.initial)
        return SpectatorSpec.oscillator(self.truncation or DEFAULT_OSCILLATOR_TRUNCATION, self.initial)

    def model_params(self) -> ModelParams:
        """ModelParams of the configured point."""
        try:
            axis = CouplingAxis(self.coupling_axis)
        except ValueError:
            raise ModelError(f"Unknown coupling axis: {self.coupling_axis!r}")
        return ModelParams(
            g=float(self.g),
            epsilon=float(self.epsilon),
            x0=float(self.x0),
            omega_c=float(self.omega_c),
            spectator=self.spectator_spec(),
            coupling_axis=axis
        )

    def time_grid(self) -> TimeGrid:
        """Output grid; open ends default to -+10 g/eps."""
        unit = float(self.g) / float(self.epsilon)
        t_start = -10.0 * unit if self.ti is None else float(self.ti)
        t_end = 10.0 * unit if self.tf is None else float(self.tf)
        return TimeGrid(t_start, t_end, int(self.samples))

    def sweep_grid(self) -> SweepGrid:
        """SweepGrid of the configured axes."""
        return SweepGrid(
            x0_over_g=parse_axis(self.grid_x0),
            omega_c_over_x0=parse_axis(self.grid_wc),
            g=float(self.g),
            epsilon=float(self.epsilon),
            spectator=self.spectator_spec()
        )

    def dissipation(self) -> DissipationSpec:
        """DissipationSpec of kappa and channel."""
        try:
            channel = DissipationChannel(self.channel)
        except ValueError:
            raise ModelError(f"Unknown dissipation channel: {self.channel!r}")
        return DissipationSpec(float(self.kappa), channel)

    def noise_distribution(self) -> NoiseDistribution:
        """Robustness noise distribution."""
        try:
            return NoiseDistribution(self.distribution)
        except ValueError:
            raise ModelError(f"Unknown noise distribution: {self.distribution!r}")

    def validate(self) -> None:
        """
        Build every derived object once.

        Raises:
            ModelError: On any invalid value
        """
        self.model_params()
        self.time_grid()
        self.sweep_grid()
        self.dissipation()
        self.noise_distribution()
        if not 1e-14 < float(self.tol) < 1e-4:
            raise ModelError(f"tol must be in (1e-14, 1e-4), got {self.tol}")
        if int(self.workers) < 1:
            raise ModelError(f"workers must be >= 1, got {self.workers}")
        if not 0.0 <= float(self.rel_sigma) <= 0.5:
            raise ModelError(f"rel_sigma must be in [0, 0.5], got {self.rel_sigma}")
        if int(self.n_samples) < 10:
            raise ModelError(f"n_samples must be >= 10, got {self.n_samples}")
        if self.log_level.upper() not in ("DEBUG", "INFO", "WARNING", "ERROR"):
            raise ModelError(f"Unknown log level: {self.log_level!r}")

    def to_dict(self) -> dict:
        """All fields as a plain dict."""
        return dataclasses.asdict(self)

    def computational_dict(self) -> dict:
        """Fields that determine the computed numbers (hashed in manifests)."""
        return {k: v for k, v in self.to_dict().items() if k not in NON_COMPUTATIONAL_KEYS}
