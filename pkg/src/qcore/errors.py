"""Exceptions raised by the linear-algebra layer."""


class QCoreError(Exception):
    """Base exception for linear-algebra failures."""
    pass


class HermiticityError(QCoreError):
    """Raised when a matrix expected to be Hermitian is not."""

    def __init__(self, defect: float, tolerance: float):
        self.defect = defect
        self.tolerance = tolerance
        super().__init__(
            f"Matrix is not Hermitian: max |h - h^dagger| = {defect:.3e} "
            f"exceeds {tolerance:.1e}"
        )


class DimensionError(QCoreError):
    """Raised on shape mismatches or runaway tensor-product dimensions."""
    pass


class InvalidStateError(QCoreError):
    """Raised when a state vector or density matrix violates its invariants."""
    pass
