"""
Unit tests for the dense linear-algebra layer.

Tests validate:
- Kronecker products and the dimension guard
- Hermitian eigendecomposition and exponentials
- Time-ordered products
- Partial trace, purity and Renyi entropy
- Validated state containers
"""
import numpy as np
import pytest
from scipy.linalg import expm

from src.qcore.errors import DimensionError, HermiticityError, InvalidStateError
from src.qcore.linalg import (
    eigh,
    expm_unitary,
    kron,
    ordered_product,
    partial_trace_spectator,
    purity,
    renyi_entropy,
)
from src.qcore.states import DensityMatrix, QuantumState
from src.qcore.tolerances import Tolerances


def random_hermitian(dim: int, seed: int) -> np.ndarray:
    rng = np.random.default_rng(seed)
    a = rng.normal(size=(dim, dim)) + 1j * rng.normal(size=(dim, dim))
    return 0.5 * (a + a.conj().T)


class TestKron:
    """Test Kronecker products."""

    def test_kron_orders_qubit_factor_first(self):
        """Test that the left factor is the slow index."""
        up = np.array([[1, 0], [0, 0]])
        result = kron(up, np.eye(3))
        assert result.shape == (6, 6)
        assert np.allclose(result[:3, :3], np.eye(3))
        assert np.allclose(result[3:, 3:], 0)

    def test_kron_rejects_runaway_dimension(self):
        """Test that products beyond max_dimension raise DimensionError."""
        with pytest.raises(DimensionError):
            kron(np.eye(4), np.eye(2), Tolerances(max_dimension=4))

    def test_kron_is_associative(self):
        """Test (a x b) x c = a x (b x c)."""
        a, b, c = (random_hermitian(2, seed=s) for s in (10, 11, 12))
        assert np.allclose(kron(kron(a, b), c), kron(a, kron(b, c)), atol=1e-13)


class TestEigh:
    """Test Hermitian eigendecomposition."""

    def test_eigh_reconstructs_matrix(self):
        """Test that V diag(E) V^dagger reproduces h."""
        h = random_hermitian(6, seed=1)
        values, vectors = eigh(h)
        assert np.all(np.diff(values) >= 0)
        assert np.allclose(vectors @ np.diag(values) @ vectors.conj().T, h, atol=1e-12)

    def test_eigh_rejects_non_hermitian(self):
        """Test that a non-Hermitian matrix raises HermiticityError with its defect."""
        h = np.array([[0, 1], [0, 0]], dtype=complex)
        with pytest.raises(HermiticityError) as info:
            eigh(h)
        assert info.value.defect == pytest.approx(1.0)

    def test_eigh_accepts_stacks(self):
        """Test that a stack of matrices is decomposed slice by slice."""
        stack = np.stack([random_hermitian(4, seed=s) for s in range(3)])
        values, _ = eigh(stack)
        assert values.shape == (3, 4)
        assert np.allclose(values[2], np.linalg.eigvalsh(stack[2]))


class TestExpmUnitary:
    """Test the eigendecomposition-based exponential."""

    def test_matches_scipy_expm(self):
        """Test agreement with scipy.linalg.expm."""
        h = random_hermitian(4, seed=2)
        assert np.allclose(expm_unitary(h, 0.7), expm(-0.7j * h), atol=1e-12)

    def test_result_is_unitary(self):
        """Test that U^dagger U = I."""
        u = expm_unitary(random_hermitian(5, seed=3), 2.5)
        assert np.allclose(u.conj().T @ u, np.eye(5), atol=1e-12)

    def test_propagators_compose(self):
        """Test U(dt1) U(dt2) = U(dt1 + dt2) for a fixed Hamiltonian."""
        h = random_hermitian(4, seed=5)
        combined = expm_unitary(h, 0.4) @ expm_unitary(h, 1.1)
        assert np.allclose(combined, expm_unitary(h, 1.5), atol=1e-12)


class TestOrderedProduct:
    """Test time-ordered products."""

    def test_later_factors_act_last(self):
        """Test that the product is U_2 U_1 U_0 for an odd-length stack."""
        stack = np.stack([expm_unitary(random_hermitian(3, seed=s), 0.3) for s in range(3)])
        expected = stack[2] @ stack[1] @ stack[0]
        assert np.allclose(ordered_product(stack), expected, atol=1e-13)

    def test_single_factor(self):
        """Test that a one-element stack returns that element."""
        u = expm_unitary(random_hermitian(2, seed=4), 1.0)
        assert np.allclose(ordered_product(u[np.newaxis]), u)


class TestPartialTrace:
    """Test reduced qubit states."""

    def test_product_state_stays_pure(self):
        """Test that tracing out a product state gives the qubit factor."""
        qubit = np.array([0.6, 0.8j])
        spectator = np.array([1, 1, 0]) / np.sqrt(2)
        rho = partial_trace_spectator(QuantumState(np.kron(qubit, spectator)), 3)
        assert np.allclose(rho.matrix, np.outer(qubit, qubit.conj()), atol=1e-14)
        assert purity(rho) == pytest.approx(1.0, abs=1e-12)

    def test_bell_state_is_maximally_mixed(self):
        """Test purity 1/2 and S2 = ln 2 for a maximally entangled state."""
        bell = QuantumState(np.array([1, 0, 0, 1]) / np.sqrt(2))
        rho = partial_trace_spectator(bell, 2)
        assert np.allclose(rho.matrix, np.eye(2) / 2)
        assert purity(rho) == pytest.approx(0.5, abs=1e-12)
        assert renyi_entropy(rho) == pytest.approx(np.log(2), abs=1e-12)

    def test_density_matrix_input(self):
        """Test that a composite DensityMatrix is reduced like its vector."""
        vector = np.array([1, 1j, 0, 1]) / np.sqrt(3)
        from_vector = partial_trace_spectator(vector, 2)
        from_matrix = partial_trace_spectator(DensityMatrix(np.outer(vector, vector.conj())), 2)
        assert np.allclose(from_vector.matrix, from_matrix.matrix, atol=1e-14)

    def test_dimension_mismatch(self):
        """Test that an incompatible spectator dimension raises DimensionError."""
        with pytest.raises(DimensionError):
            partial_trace_spectator(np.ones(6) / np.sqrt(6), 4)

    def test_purity_bounds(self):
        """Test 1/2 <= purity <= 1 for reduced states of random composite vectors."""
        rng = np.random.default_rng(9)
        for _ in range(25):
            vector = rng.normal(size=8) + 1j * rng.normal(size=8)
            rho = partial_trace_spectator(vector / np.linalg.norm(vector), 4)
            assert 0.5 - 1e-12 <= purity(rho) <= 1.0 + 1e-12


class TestStates:
    """Test validated state containers."""

    def test_unnormalized_vector_rejected(self):
        """Test that a non-unit vector raises InvalidStateError."""
        with pytest.raises(InvalidStateError):
            QuantumState(np.array([1.0, 1.0]))

    def test_amplitudes_are_read_only(self):
        """Test that the wrapped array cannot be modified."""
        state = QuantumState(np.array([1.0, 0.0]))
        with pytest.raises(ValueError):
            state.amplitudes[0] = 0.0

    def test_negative_density_matrix_rejected(self):
        """Test that a unit-trace matrix with a negative eigenvalue is rejected."""
        with pytest.raises(InvalidStateError):
            DensityMatrix(np.diag([1.5, -0.5]))

    def test_projector_is_valid_density_matrix(self):
        """Test that |psi><psi| passes validation."""
        rho = QuantumState(np.array([0.6, 0.8])).projector()
        assert rho.dim == 2
        assert np.trace(rho.matrix) == pytest.approx(1.0)
