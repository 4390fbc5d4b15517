"""
Numerical tolerances shared by every layer of the simulator.

All thresholds live in one record so that tests and callers can tighten or
relax them in a single place.
"""
from dataclasses import dataclass


@dataclass(frozen=True)
class Tolerances:
    """
    Tolerance record.

    Attributes:
        hermiticity: Max |h - h^dagger| accepted by eigh (relative to max(1, |h|max))
        density_hermiticity: Max Hermiticity defect of a DensityMatrix
        trace: Max |Tr(rho) - 1| of a DensityMatrix
        min_eigenvalue: Most negative eigenvalue tolerated in a DensityMatrix
        norm: Max |norm - 1| of a QuantumState
        degeneracy: Eigenvalue spacing below which branches count as degenerate
        max_dimension: Largest matrix dimension kron may produce
        lindblad_trace: Trace drift flagged during master-equation runs
        lindblad_min_eigenvalue: Negativity flagged during master-equation runs
        lindblad_hermiticity: Hermiticity drift flagged during master-equation runs
    """
    hermiticity: float = 1e-10
    density_hermiticity: float = 1e-12
    trace: float = 1e-10
    min_eigenvalue: float = -1e-10
    norm: float = 1e-10
    degeneracy: float = 1e-9
    max_dimension: int = 256
    lindblad_trace: float = 1e-8
    lindblad_min_eigenvalue: float = -1e-8
    lindblad_hermiticity: float = 1e-10


DEFAULT_TOLERANCES = Tolerances()
