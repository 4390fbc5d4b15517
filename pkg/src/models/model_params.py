"""
Physical parameters of the Landau-Zener qubit and its spectator.

Units: hbar = 1, energies in units of g (g = 1 by default), sweep rate in
units of g^2, times in units of 1/g.

Basis conventions (frozen so output files stay comparable):
- qubit: |0> has sigma_z = +1, |1> has sigma_z = -1
- qubit spectator: |up> (tau_z = +1) first, |down> second
- oscillator spectator: Fock states in ascending n
"""
import dataclasses
import re
from dataclasses import dataclass
from enum import Enum

DEFAULT_OSCILLATOR_TRUNCATION = 20

_FOCK_PATTERN = re.compile(r"^fock\((\d+)\)$")


class ModelError(ValueError):
    """Raised for parameters that violate the model invariants."""
    pass


class SpectatorKind(Enum):
    """Kind of quantum spectator coupled to the LZ qubit."""
    QUBIT = "qubit"
    OSCILLATOR = "oscillator"


class InitialSpectatorState(Enum):
    """Initial state of the spectator."""
    GROUND = "ground"            # |down> for a qubit, vacuum for an oscillator
    EXCITED = "excited"          # |up> for a qubit, |1> for an oscillator
    TAU_X_PLUS = "tau_x_plus"    # (|up> + |down>)/sqrt(2)
    TAU_X_MINUS = "tau_x_minus"  # (|up> - |down>)/sqrt(2)
    FOCK = "fock"                # |n>, see SpectatorSpec.fock_level


class CouplingAxis(Enum):
    """Qubit-side Pauli matrix of the interaction."""
    X = "x"
    Y = "y"


@dataclass(frozen=True)
class SpectatorSpec:
    """
    Spectator description.

    Attributes:
        kind: Qubit or truncated harmonic oscillator
        truncation: Fock dimension (forced to 2 for a qubit)
        initial_state: Initial spectator state
        fock_level: Level n used when initial_state is FOCK
    """
    kind: SpectatorKind = SpectatorKind.QUBIT
    truncation: int = 2
    initial_state: InitialSpectatorState = InitialSpectatorState.GROUND
    fock_level: int = 0

    def __post_init__(self) -> None:
        if self.kind is SpectatorKind.QUBIT and self.truncation != 2:
            raise ModelError(f"A qubit spectator has truncation 2, got {self.truncation}")
        if self.truncation < 2:
            raise ModelError(f"Truncation must be >= 2, got {self.truncation}")
        if self.initial_state is InitialSpectatorState.FOCK:
            if not 0 <= self.fock_level < self.truncation:
                raise ModelError(
                    f"fock({self.fock_level}) is outside the truncation {self.truncation}"
                )

    @classmethod
    def qubit(cls, initial_state: str = "ground") -> "SpectatorSpec":
        """Qubit spectator with the given initial state label."""
        state, level = parse_initial_state(initial_state)
        return cls(SpectatorKind.QUBIT, 2, state, level)

    @classmethod
    def oscillator(
        cls,
        truncation: int = DEFAULT_OSCILLATOR_TRUNCATION,
        initial_state: str = "ground"
    ) -> "SpectatorSpec":
        """Oscillator spectator with the given truncation and initial state label."""
        state, level = parse_initial_state(initial_state)
        return cls(SpectatorKind.OSCILLATOR, truncation, state, level)

    def with_truncation(self, truncation: int) -> "SpectatorSpec":
        """Copy with a different Fock truncation."""
        return dataclasses.replace(self, truncation=truncation)

    def with_initial_state(self, label: str) -> "SpectatorSpec":
        """Copy with a different initial state label."""
        state, level = parse_initial_state(label)
        return dataclasses.replace(self, initial_state=state, fock_level=level)

    @property
    def initial_label(self) -> str:
        """Label accepted by parse_initial_state."""
        if self.initial_state is InitialSpectatorState.FOCK:
            return f"fock({self.fock_level})"
        return self.initial_state.value


def parse_initial_state(label: str) -> tuple:
    """
    Parse an initial spectator state label.

    Args:
        label: One of ground, excited, tau_x_plus, tau_x_minus, fock(n)

    Returns:
        (InitialSpectatorState, fock_level)

    Raises:
        ModelError: If the label is unknown
    """
    match = _FOCK_PATTERN.match(label.strip())
    if match:
        return InitialSpectatorState.FOCK, int(match.group(1))
    try:
        return InitialSpectatorState(label.strip()), 0
    except ValueError:
        raise ModelError(f"Unknown spectator initial state: {label!r}")


@dataclass(frozen=True)
class ModelParams:
    """
    Parameters of the composite Hamiltonian.

    Attributes:
        g: Minimum LZ gap (energy)
        epsilon: Sweep rate (energy^2)
        x0: Qubit-spectator coupling (energy)
        omega_c: Spectator frequency (energy)
        spectator: Spectator description
        coupling_axis: Qubit-side Pauli of the interaction (x by default)
    """
    g: float = 1.0
    epsilon: float = 2.0
    x0: float = 0.0
    omega_c: float = 0.0
    spectator: SpectatorSpec = SpectatorSpec()
    coupling_axis: CouplingAxis = CouplingAxis.X

    def __post_init__(self) -> None:
        if not self.g > 0:
            raise ModelError(f"g must be > 0, got {self.g}")
        if not self.epsilon > 0:
            raise ModelError(f"epsilon must be > 0, got {self.epsilon}")
        if not self.x0 >= 0:
            raise ModelError(f"x0 must be >= 0, got {self.x0}")
        if not self.omega_c >= 0:
            raise ModelError(f"omega_c must be >= 0, got {self.omega_c}")

    @property
    def spectator_dim(self) -> int:
        """Dimension of the spectator factor."""
        return self.spectator.truncation

    @property
    def dim(self) -> int:
        """Dimension of the composite space."""
        return 2 * self.spectator.truncation

    @property
    def time_unit(self) -> float:
        """The natural time scale g/epsilon of the sweep."""
        return self.g / self.epsilon

    def replace(self, **changes) -> "ModelParams":
        """Copy with some fields changed."""
        return dataclasses.replace(self, **changes)

    def scaled(self, factor: float) -> "ModelParams":
        """
        Rescale energies by factor (epsilon by factor^2).

        The model has one free scale, so every dimensionless observable is
        unchanged when times are divided by the same factor.
        """
        return dataclasses.replace(
            self,
            g=self.g * factor,
            epsilon=self.epsilon * factor ** 2,
            x0=self.x0 * factor,
            omega_c=self.omega_c * factor
        )
