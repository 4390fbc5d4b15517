"""
Dense linear-algebra primitives for the composite qubit-spectator space.

Matrices are plain complex128 numpy arrays. Dimensions stay tiny (2 to a few
hundred), so everything is dense and exponentials go through the Hermitian
eigendecomposition. Every function is pure and safe to call from concurrent
workers.

Conventions:
- Composite ordering is qubit factor first, spectator second.
- Batched helpers accept a leading stack axis (shape (n, d, d) or (n, d)).
"""
import logging
from typing import Tuple, Union

import numpy as np

from src.qcore.errors import DimensionError, HermiticityError, QCoreError
from src.qcore.states import DensityMatrix, QuantumState
from src.qcore.tolerances import DEFAULT_TOLERANCES, Tolerances

logger = logging.getLogger(__name__)

StateLike = Union[QuantumState, DensityMatrix, np.ndarray]


def _as_matrix(a: np.ndarray, name: str) -> np.ndarray:
    matrix = np.asarray(a, dtype=complex)
    if matrix.ndim != 2:
        raise DimensionError(f"{name} must be a 2-D matrix, got shape {matrix.shape}")
    if not np.all(np.isfinite(matrix)):
        raise QCoreError(f"{name} has non-finite entries")
    return matrix


def kron(
    a: np.ndarray,
    b: np.ndarray,
    tolerances: Tolerances = DEFAULT_TOLERANCES
) -> np.ndarray:
    """
    Kronecker product a (x) b.

    Args:
        a: Left factor (qubit side)
        b: Right factor (spectator side)
        tolerances: Provides the maximum admissible dimension

    Returns:
        Matrix of shape (rows_a * rows_b, cols_a * cols_b)

    Raises:
        DimensionError: If the product exceeds tolerances.max_dimension
    """
    a = _as_matrix(a, "kron left factor")
    b = _as_matrix(b, "kron right factor")

    rows = a.shape[0] * b.shape[0]
    cols = a.shape[1] * b.shape[1]
    if max(rows, cols) > tolerances.max_dimension:
        raise DimensionError(
            f"Kronecker product of {a.shape} and {b.shape} exceeds the maximum "
            f"dimension {tolerances.max_dimension} (runaway truncation?)"
        )
    return np.kron(a, b)


def hermiticity_defect(h: np.ndarray) -> float:
    """Largest entry of |h - h^dagger| (works on stacks)."""
    h = np.asarray(h, dtype=complex)
    return float(np.max(np.abs(h - np.swapaxes(h, -1, -2).conj())))


def _check_hermitian(h: np.ndarray, tolerances: Tolerances) -> None:
    if h.shape[-1] != h.shape[-2]:
        raise DimensionError(f"Matrix must be square, got shape {h.shape}")
    scale = max(1.0, float(np.max(np.abs(h)))) if h.size else 1.0
    limit = tolerances.hermiticity * scale
    defect = hermiticity_defect(h)
    if defect > limit:
        raise HermiticityError(defect, limit)


def eigh(
    h: np.ndarray,
    tolerances: Tolerances = DEFAULT_TOLERANCES
) -> Tuple[np.ndarray, np.ndarray]:
    """
    Hermitian eigendecomposition.

    Eigenvalues are returned in ascending order; eigenvectors are the columns
    of the second result. Inside a degenerate block any orthonormal basis may
    be returned.

    Args:
        h: Hermitian matrix, or a stack of them with shape (n, d, d)
        tolerances: Hermiticity tolerance

    Returns:
        (eigenvalues, eigenvectors)

    Raises:
        HermiticityError: If h is not Hermitian within tolerance
    """
    h = np.asarray(h, dtype=complex)
    if h.ndim < 2:
        raise DimensionError(f"eigh needs a matrix, got shape {h.shape}")
    _check_hermitian(h, tolerances)

    hermitian = 0.5 * (h + np.swapaxes(h, -1, -2).conj())
    return np.linalg.eigh(hermitian)


def eigvalsh(
    h: np.ndarray,
    tolerances: Tolerances = DEFAULT_TOLERANCES
) -> np.ndarray:
    """Ascending eigenvalues only (stack-aware)."""
    h = np.asarray(h, dtype=complex)
    _check_hermitian(h, tolerances)
    return np.linalg.eigvalsh(0.5 * (h + np.swapaxes(h, -1, -2).conj()))


def expm_unitary(
    h: np.ndarray,
    dt: float,
    tolerances: Tolerances = DEFAULT_TOLERANCES
) -> np.ndarray:
    """
    Propagator exp(-i h dt) with hbar = 1.

    Built from the eigendecomposition of h, so the result is unitary to
    rounding. A stack of Hamiltonians yields a stack of propagators.

    Args:
        h: Hermitian matrix or stack (n, d, d)
        dt: Time step
        tolerances: Hermiticity tolerance

    Returns:
        Unitary matrix (or stack)
    """
    values, vectors = eigh(h, tolerances)
    phases = np.exp(-1j * values * dt)
    return (vectors * phases[..., np.newaxis, :]) @ np.swapaxes(vectors, -1, -2).conj()


def ordered_product(unitaries: np.ndarray) -> np.ndarray:
    """
    Time-ordered product U_{n-1} ... U_1 U_0 of a stack (n, d, d).

    Reduced pairwise so the work is vectorized over the stack.
    """
    stack = np.asarray(unitaries, dtype=complex)
    if stack.ndim != 3:
        raise DimensionError(f"Expected a stack of matrices, got shape {stack.shape}")

    while stack.shape[0] > 1:
        if stack.shape[0] % 2:
            identity = np.eye(stack.shape[1], dtype=complex)[np.newaxis]
            stack = np.concatenate([stack, identity], axis=0)
        stack = stack[1::2] @ stack[0::2]
    return stack[0]


def reduce_vectors(states: np.ndarray, spectator_dim: int, qubit_dim: int = 2) -> np.ndarray:
    """
    Reduced qubit density matrices of composite state vectors.

    Args:
        states: Vector (d,) or stack (n, d) with d = qubit_dim * spectator_dim
        spectator_dim: Dimension of the traced-out factor
        qubit_dim: Dimension of the kept factor

    Returns:
        Array (qubit_dim, qubit_dim) or (n, qubit_dim, qubit_dim); the trace
        equals the squared norm of each vector (no renormalization).
    """
    states = np.asarray(states, dtype=complex)
    if states.shape[-1] != qubit_dim * spectator_dim:
        raise DimensionError(
            f"Composite dimension {states.shape[-1]} != {qubit_dim} x {spectator_dim}"
        )
    blocks = states.reshape(states.shape[:-1] + (qubit_dim, spectator_dim))
    reduced = np.einsum("...as,...bs->...ab", blocks, blocks.conj())
    return 0.5 * (reduced + np.swapaxes(reduced, -1, -2).conj())


def reduce_matrices(rhos: np.ndarray, spectator_dim: int, qubit_dim: int = 2) -> np.ndarray:
    """Reduced qubit density matrices of composite density matrices (stack-aware)."""
    rhos = np.asarray(rhos, dtype=complex)
    dim = qubit_dim * spectator_dim
    if rhos.shape[-2:] != (dim, dim):
        raise DimensionError(
            f"Composite density matrix shape {rhos.shape[-2:]} != ({dim}, {dim})"
        )
    blocks = rhos.reshape(rhos.shape[:-2] + (qubit_dim, spectator_dim, qubit_dim, spectator_dim))
    reduced = np.einsum("...asbs->...ab", blocks)
    return 0.5 * (reduced + np.swapaxes(reduced, -1, -2).conj())


def partial_trace_spectator(
    state_or_rho: StateLike,
    spectator_dim: int,
    qubit_dim: int = 2,
    tolerances: Tolerances = DEFAULT_TOLERANCES
) -> DensityMatrix:
    """
    Trace out the spectator factor.

    Args:
        state_or_rho: Composite QuantumState, DensityMatrix, or raw array
            (1-D vector or 2-D matrix)
        spectator_dim: Dimension of the spectator factor
        qubit_dim: Dimension of the qubit factor (2)
        tolerances: Validation tolerances for the result

    Returns:
        Reduced qubit DensityMatrix

    Raises:
        DimensionError: If the composite dimension is not qubit_dim * spectator_dim
    """
    if isinstance(state_or_rho, QuantumState):
        reduced = reduce_vectors(state_or_rho.amplitudes, spectator_dim, qubit_dim)
    elif isinstance(state_or_rho, DensityMatrix):
        reduced = reduce_matrices(state_or_rho.matrix, spectator_dim, qubit_dim)
    else:
        array = np.asarray(state_or_rho, dtype=complex)
        if array.ndim == 1:
            reduced = reduce_vectors(array, spectator_dim, qubit_dim)
        elif array.ndim == 2:
            reduced = reduce_matrices(array, spectator_dim, qubit_dim)
        else:
            raise DimensionError(f"Expected a vector or matrix, got shape {array.shape}")

    return DensityMatrix(reduced, tolerances=tolerances)


def purities(rhos: np.ndarray) -> np.ndarray:
    """Tr(rho^2) for a stack of density matrices."""
    rhos = np.asarray(rhos, dtype=complex)
    return np.real(np.einsum("...ab,...ba->...", rhos, rhos))


def purity(rho: Union[DensityMatrix, np.ndarray]) -> float:
    """
    Purity gamma = Tr(rho^2), in [1/dim, 1] for a valid density matrix.

    Args:
        rho: DensityMatrix or square array

    Returns:
        Purity as a float
    """
    matrix = rho.matrix if isinstance(rho, DensityMatrix) else np.asarray(rho, dtype=complex)
    return float(purities(matrix))


def renyi_entropy(rho: Union[DensityMatrix, np.ndarray]) -> float:
    """Second Renyi entropy S2 = -ln(gamma)."""
    return float(-np.log(purity(rho)))
