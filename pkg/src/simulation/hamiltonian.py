"""
Time-dependent Hamiltonian of the LZ qubit coupled to a quantum spectator.

    H(t) = H_s(t) (x) I_f + H_int + I_s (x) H_f

    H_s(t) = (eps t sigma_z + g sigma_x) / 2
    H_int  = x0 sigma_x (x) tau_x            (qubit spectator)
           = x0 sigma_x (x) (a + a^dagger)   (oscillator spectator)
    H_f    = omega_c tau_z / 2               (qubit spectator)
           = omega_c a^dagger a              (oscillator, zero-point energy dropped)

H(t) is linear in t, so H(t) = H(0) + t dH/dt exactly and dH/dt is constant.
All constructors are pure and return fresh arrays.
"""
import numpy as np

from src.models.model_params import (
    CouplingAxis,
    InitialSpectatorState,
    ModelParams,
    SpectatorKind,
    SpectatorSpec,
)
from src.qcore.linalg import kron

SIGMA_X = np.array([[0, 1], [1, 0]], dtype=complex)
SIGMA_Y = np.array([[0, -1j], [1j, 0]], dtype=complex)
SIGMA_Z = np.array([[1, 0], [0, -1]], dtype=complex)
IDENTITY_2 = np.eye(2, dtype=complex)

# tau_- maps |up> -> |down> in the (up, down) ordering
TAU_MINUS = np.array([[0, 0], [1, 0]], dtype=complex)


def annihilation(truncation: int) -> np.ndarray:
    """Truncated annihilation operator a with a|n> = sqrt(n)|n-1>."""
    return np.diag(np.sqrt(np.arange(1, truncation)), k=1).astype(complex)


def coupling_operator(spectator: SpectatorSpec) -> np.ndarray:
    """Spectator-side factor of the interaction: tau_x or a + a^dagger."""
    if spectator.kind is SpectatorKind.QUBIT:
        return SIGMA_X.copy()
    a = annihilation(spectator.truncation)
    return a + a.conj().T


def lowering_operator(spectator: SpectatorSpec) -> np.ndarray:
    """Spectator decay jump operator: tau_- or a."""
    if spectator.kind is SpectatorKind.QUBIT:
        return TAU_MINUS.copy()
    return annihilation(spectator.truncation)


def dephasing_operator(spectator: SpectatorSpec) -> np.ndarray:
    """Spectator dephasing jump operator: tau_z or a^dagger a."""
    if spectator.kind is SpectatorKind.QUBIT:
        return SIGMA_Z.copy()
    return np.diag(np.arange(spectator.truncation)).astype(complex)


def spectator_state(spectator: SpectatorSpec) -> np.ndarray:
    """Initial spectator amplitudes in the frozen basis ordering."""
    dim = spectator.truncation
    is_qubit = spectator.kind is SpectatorKind.QUBIT

    def basis(n: int) -> np.ndarray:
        # for a qubit, excitation number n maps to index 1 - n (|up> first)
        vector = np.zeros(dim, dtype=complex)
        vector[1 - n if is_qubit else n] = 1.0
        return vector

    initial = spectator.initial_state
    if initial is InitialSpectatorState.GROUND:
        return basis(0)
    if initial is InitialSpectatorState.EXCITED:
        return basis(1)
    if initial is InitialSpectatorState.FOCK:
        return basis(spectator.fock_level)

    sign = 1.0 if initial is InitialSpectatorState.TAU_X_PLUS else -1.0
    # tau_x eigenstates; for an oscillator this is (|1> +- |0>)/sqrt(2)
    return (basis(1) + sign * basis(0)) / np.sqrt(2.0)


def h_system(t: float, p: ModelParams) -> np.ndarray:
    """Bare LZ Hamiltonian (eps t sigma_z + g sigma_x) / 2."""
    return 0.5 * (p.epsilon * t * SIGMA_Z + p.g * SIGMA_X)


def h_spectator(p: ModelParams) -> np.ndarray:
    """Free spectator Hamiltonian."""
    if p.spectator.kind is SpectatorKind.QUBIT:
        return 0.5 * p.omega_c * SIGMA_Z
    return p.omega_c * np.diag(np.arange(p.spectator.truncation)).astype(complex)


def h_interaction(p: ModelParams) -> np.ndarray:
    """Interaction x0 sigma_{x|y} (x) coupling_operator."""
    qubit_side = SIGMA_Y if p.coupling_axis is CouplingAxis.Y else SIGMA_X
    return p.x0 * kron(qubit_side, coupling_operator(p.spectator))


def h_total(t: float, p: ModelParams) -> np.ndarray:
    """Composite Hamiltonian H(t)."""
    identity_f = np.eye(p.spectator_dim, dtype=complex)
    return (
        kron(h_system(t, p), identity_f)
        + h_interaction(p)
        + kron(IDENTITY_2, h_spectator(p))
    )


def dh_dt(p: ModelParams) -> np.ndarray:
    """Constant time derivative (eps/2) sigma_z (x) I."""
    return 0.5 * p.epsilon * kron(SIGMA_Z, np.eye(p.spectator_dim, dtype=complex))


def h_total_stack(times: np.ndarray, p: ModelParams) -> np.ndarray:
    """H(t) for many times at once, shape (n, dim, dim)."""
    times = np.asarray(times, dtype=float)
    return h_total(0.0, p)[np.newaxis] + times[:, np.newaxis, np.newaxis] * dh_dt(p)[np.newaxis]


def h_system_stack(times: np.ndarray, p: ModelParams) -> np.ndarray:
    """Bare LZ Hamiltonian for many times, shape (n, 2, 2)."""
    times = np.asarray(times, dtype=float)
    return 0.5 * (
        p.epsilon * times[:, np.newaxis, np.newaxis] * SIGMA_Z[np.newaxis]
        + p.g * SIGMA_X[np.newaxis]
    )
