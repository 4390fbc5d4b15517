"""
Validated quantum states on the composite qubit-spectator space.

QuantumState wraps a normalized amplitude vector and DensityMatrix a
Hermitian, unit-trace, positive semi-definite matrix. Both are immutable:
the wrapped arrays are made read-only on construction.
"""
from dataclasses import dataclass, field

import numpy as np

from src.qcore.errors import DimensionError, InvalidStateError
from src.qcore.tolerances import DEFAULT_TOLERANCES, Tolerances


def _frozen(array: np.ndarray) -> np.ndarray:
    array = np.array(array, dtype=complex, copy=True)
    array.setflags(write=False)
    return array


@dataclass(frozen=True)
class QuantumState:
    """
    Normalized state vector.

    Attributes:
        amplitudes: Complex amplitudes, qubit factor first
        tolerances: Tolerances used for validation
    """
    amplitudes: np.ndarray
    tolerances: Tolerances = field(default=DEFAULT_TOLERANCES, repr=False, compare=False)

    def __post_init__(self) -> None:
        amplitudes = _frozen(np.ravel(self.amplitudes))
        if amplitudes.size == 0:
            raise InvalidStateError("State vector is empty")
        if not np.all(np.isfinite(amplitudes)):
            raise InvalidStateError("State vector has non-finite amplitudes")

        norm = float(np.linalg.norm(amplitudes))
        if abs(norm - 1.0) > self.tolerances.norm:
            raise InvalidStateError(f"State vector norm {norm!r} is not 1")

        object.__setattr__(self, "amplitudes", amplitudes)

    @property
    def dim(self) -> int:
        """Hilbert-space dimension."""
        return int(self.amplitudes.size)

    def projector(self) -> "DensityMatrix":
        """Pure-state density matrix |psi><psi|."""
        return DensityMatrix(
            np.outer(self.amplitudes, self.amplitudes.conj()),
            tolerances=self.tolerances
        )


@dataclass(frozen=True)
class DensityMatrix:
    """
    Hermitian, unit-trace, positive semi-definite matrix.

    Attributes:
        matrix: Square complex matrix
        tolerances: Tolerances used for validation
    """
    matrix: np.ndarray
    tolerances: Tolerances = field(default=DEFAULT_TOLERANCES, repr=False, compare=False)

    def __post_init__(self) -> None:
        matrix = _frozen(self.matrix)
        if matrix.ndim != 2 or matrix.shape[0] != matrix.shape[1]:
            raise DimensionError(f"Density matrix must be square, got shape {matrix.shape}")
        if not np.all(np.isfinite(matrix)):
            raise InvalidStateError("Density matrix has non-finite entries")

        tol = self.tolerances
        defect = float(np.max(np.abs(matrix - matrix.conj().T)))
        if defect > tol.density_hermiticity:
            raise InvalidStateError(f"Density matrix Hermiticity defect {defect:.3e}")

        trace = complex(np.trace(matrix))
        if abs(trace - 1.0) > tol.trace:
            raise InvalidStateError(f"Density matrix trace {trace!r} is not 1")

        smallest = float(np.linalg.eigvalsh(matrix)[0])
        if smallest < tol.min_eigenvalue:
            raise InvalidStateError(f"Density matrix has eigenvalue {smallest:.3e} < 0")

        object.__setattr__(self, "matrix", matrix)

    @property
    def dim(self) -> int:
        """Hilbert-space dimension."""
        return int(self.matrix.shape[0])
