"""
Unit tests for unitary time evolution and observables.

Tests validate:
- Analytic LZ baseline and initial states
- Transition probability via reduced state and composite projector
- Adaptive propagation: frozen Hamiltonian, norm, x0 = 0 reduction
- Exponential-midpoint oracle: unitarity and second-order convergence
- Truncation convergence and asymptotic averages
"""
import math

import numpy as np
import pytest

from src.models.model_params import ModelParams, SpectatorSpec
from src.models.trajectory import FLAG_NORM_DRIFT, TimeGrid, Trajectory
from src.qcore.errors import DimensionError
from src.qcore.linalg import expm_unitary
from src.qcore.states import DensityMatrix, QuantumState
from src.qcore.tolerances import Tolerances
from src.simulation.dynamics import (
    asymptotic_probability,
    default_grid,
    evolve_bare_lz,
    evolve_oracle,
    evolve_unitary,
    initial_state,
    integrate_linear_schrodinger,
    lz_infidelity_analytic,
    projector_probability,
    transition_probability,
    truncation_convergence,
)
from src.simulation.hamiltonian import h_system, h_total

REGIME_II = ModelParams(x0=2.0, omega_c=0.5)


def qubit_eigenstates(p: ModelParams, t: float):
    _, vectors = np.linalg.eigh(h_system(t, p))
    return vectors[:, 0], vectors[:, 1]


class TestAnalyticBaseline:
    """Test the closed-form LZ probability."""

    def test_zero_gap(self):
        """Test that g = 0 gives a certain transition."""
        assert lz_infidelity_analytic(0.0, 2.0) == 1.0

    def test_standard_point(self):
        """Test g = 1, eps = 2 gives exp(-pi/4)."""
        assert lz_infidelity_analytic(1.0, 2.0) == pytest.approx(0.45594, abs=1e-5)

    def test_slow_sweep(self):
        """Test g^2/eps = 2 gives exp(-pi)."""
        assert lz_infidelity_analytic(2.0, 2.0) == pytest.approx(0.04322, abs=1e-5)

    def test_invalid_rate(self):
        """Test that eps <= 0 raises ValueError."""
        with pytest.raises(ValueError):
            lz_infidelity_analytic(1.0, 0.0)


class TestInitialState:
    """Test the product initial state."""

    def test_starts_in_lower_branch(self):
        """Test P(t_i) is negligible at t_i = -10 g/eps."""
        p = ModelParams()
        psi = initial_state(p, -5.0)
        assert psi.dim == 4
        assert np.linalg.norm(psi.amplitudes) == pytest.approx(1.0, abs=1e-14)
        assert transition_probability(psi, -5.0, p) <= 1e-3

    def test_far_past_lower_branch_is_sigma_z_up(self):
        """Test that the lower branch at eps t = -1000 g is the sigma_z = +1 state."""
        p = ModelParams()
        lower, _ = qubit_eigenstates(p, -500.0)
        assert abs(lower[0]) == pytest.approx(1.0, abs=1e-6)

    def test_spectator_factor(self):
        """Test that the spectator factor follows the configured initial state."""
        p = ModelParams(spectator=SpectatorSpec.oscillator(4, "fock(2)"))
        psi = initial_state(p, -5.0).amplitudes.reshape(2, 4)
        assert np.allclose(np.abs(psi[:, [0, 1, 3]]), 0.0)


class TestTransitionProbability:
    """Test P(t) from the reduced state."""

    def test_upper_branch_gives_one(self):
        """Test |+_t> (x) anything gives 1."""
        p = ModelParams()
        _, upper = qubit_eigenstates(p, 0.3)
        state = np.kron(upper, np.array([0.6, 0.8]))
        assert transition_probability(state, 0.3, p) == pytest.approx(1.0, abs=1e-12)

    def test_lower_branch_gives_zero(self):
        """Test |-_t> (x) anything gives 0."""
        p = ModelParams()
        lower, _ = qubit_eigenstates(p, -1.1)
        state = np.kron(lower, np.array([1.0, 1.0j]) / np.sqrt(2))
        assert transition_probability(state, -1.1, p) == pytest.approx(0.0, abs=1e-12)

    def test_maximally_mixed_gives_half(self):
        """Test that a maximally mixed qubit gives 1/2."""
        rho = DensityMatrix(np.eye(4) / 4)
        assert transition_probability(rho, 0.7, ModelParams()) == pytest.approx(0.5, abs=1e-12)

    def test_projector_agrees_with_reduced_state(self):
        """Test the two evaluations of P agree on an entangled state."""
        rng = np.random.default_rng(3)
        p = ModelParams(spectator=SpectatorSpec.oscillator(3))
        vector = rng.normal(size=6) + 1j * rng.normal(size=6)
        state = QuantumState(vector / np.linalg.norm(vector))
        for t in (-2.0, 0.0, 1.5):
            assert transition_probability(state, t, p) == pytest.approx(
                projector_probability(state, t, p), abs=1e-12
            )


class TestUnitaryEvolution:
    """Test the adaptive propagator."""

    def test_frozen_hamiltonian_matches_exponential(self):
        """Test that with dH/dt = 0 the result is expm(-i H t) psi0."""
        h = h_total(0.0, ModelParams(x0=0.7, omega_c=0.4))
        psi0 = np.array([1, 0, 0, 0], dtype=complex)
        times = np.linspace(0.0, 3.0, 7)
        states = integrate_linear_schrodinger(h, np.zeros_like(h), psi0, times, tol=1e-12)
        for t, state in zip(times, states):
            assert np.allclose(state, expm_unitary(h, t) @ psi0, atol=1e-9)

    def test_norm_preserved(self):
        """Test norm defect below 1e-10 on the regime-II point."""
        grid = default_grid(REGIME_II, samples=401)
        traj = evolve_unitary(REGIME_II, grid, initial_state(REGIME_II, grid.t_start), tol=1e-12)
        assert traj.norm_defect.max() <= 1e-10
        assert not traj.has_flag(FLAG_NORM_DRIFT)

    def test_norm_preserved_at_default_tol(self):
        """Test that the default tol keeps the norm defect below 1e-10 over the full grid."""
        grid = default_grid(REGIME_II)
        traj = evolve_unitary(REGIME_II, grid, initial_state(REGIME_II, grid.t_start))
        assert traj.norm_defect.max() <= 1e-10
        assert not traj.has_flag(FLAG_NORM_DRIFT)

    def test_defect_above_norm_tolerance_flagged(self):
        """Test that the drift flag follows Tolerances.norm."""
        grid = default_grid(REGIME_II, samples=201)
        traj = evolve_unitary(
            REGIME_II, grid, initial_state(REGIME_II, grid.t_start), tolerances=Tolerances(norm=1e-16)
        )
        assert traj.has_flag(FLAG_NORM_DRIFT)

    def test_observable_ranges(self):
        """Test P in [0, 1], purity in (0, 1] and S2 = -ln(purity)."""
        grid = default_grid(REGIME_II, samples=401)
        traj = evolve_unitary(REGIME_II, grid, initial_state(REGIME_II, grid.t_start))
        assert np.all((traj.p_of_t >= 0) & (traj.p_of_t <= 1))
        assert np.all((traj.purity_of_t > 0) & (traj.purity_of_t <= 1))
        assert np.allclose(traj.renyi_of_t, -np.log(traj.purity_of_t), atol=1e-12)
        assert traj.purity_of_t[0] == pytest.approx(1.0, abs=1e-10)

    def test_snapshots_only_on_request(self):
        """Test that states are stored only when asked for."""
        p = ModelParams()
        grid = default_grid(p, samples=11)
        psi0 = initial_state(p, grid.t_start)
        assert evolve_unitary(p, grid, psi0).snapshots is None
        assert evolve_unitary(p, grid, psi0, store_snapshots=True).snapshots.shape == (11, 4)

    def test_tolerance_range(self):
        """Test that tol outside (1e-14, 1e-4) raises ValueError."""
        p = ModelParams()
        grid = default_grid(p, samples=11)
        with pytest.raises(ValueError):
            evolve_unitary(p, grid, initial_state(p, grid.t_start), tol=1e-3)

    def test_dimension_mismatch(self):
        """Test that a state of the wrong size raises DimensionError."""
        p = ModelParams(spectator=SpectatorSpec.oscillator(3))
        grid = default_grid(p, samples=11)
        with pytest.raises(DimensionError):
            evolve_unitary(p, grid, QuantumState(np.array([1.0, 0, 0, 0])))

    @pytest.mark.parametrize("label", ["ground", "excited", "tau_x_plus"])
    def test_decoupled_reduces_to_bare_lz(self, label):
        """Test that x0 = 0 reproduces the two-level LZ probability."""
        p = ModelParams(x0=0.0, omega_c=0.7, spectator=SpectatorSpec.qubit(label))
        grid = default_grid(p, samples=501)
        composite = evolve_unitary(p, grid, initial_state(p, grid.t_start), tol=1e-12)
        bare = evolve_bare_lz(p.g, p.epsilon, grid, tol=1e-12)
        assert np.max(np.abs(composite.p_of_t - bare.p_of_t)) < 1e-8
        assert np.allclose(composite.purity_of_t, 1.0, atol=1e-10)


class TestOracle:
    """Test the exponential-midpoint propagator."""

    def test_unitary_per_step(self):
        """Test that the accumulated norm defect stays below 1e-12."""
        grid = default_grid(REGIME_II, samples=101)
        traj = evolve_oracle(REGIME_II, grid, initial_state(REGIME_II, grid.t_start), n_steps=5000)
        assert traj.norm_defect.max() <= 1e-12

    def test_second_order_convergence(self):
        """Test that halving the step reduces the deviation about fourfold."""
        grid = default_grid(REGIME_II, samples=101)
        psi0 = initial_state(REGIME_II, grid.t_start)
        reference = evolve_unitary(REGIME_II, grid, psi0, tol=1e-12, store_snapshots=True).snapshots

        def deviation(n_steps: int) -> float:
            states = evolve_oracle(REGIME_II, grid, psi0, n_steps=n_steps, store_snapshots=True).snapshots
            return float(np.max(np.abs(states - reference)))

        ratio = deviation(4000) / deviation(8000)
        assert 3.0 <= ratio <= 5.0


class TestTruncationConvergence:
    """Test oscillator truncation checks."""

    def test_decoupled_is_truncation_independent(self):
        """Test that x0 = 0 gives no dependence on the truncation."""
        p = ModelParams(x0=0.0, omega_c=0.5, spectator=SpectatorSpec.oscillator(4))
        grid = default_grid(p, samples=201)
        assert truncation_convergence(p, grid, 4, 6, tol=1e-12) == pytest.approx(0.0, abs=1e-9)

    def test_requires_oscillator(self):
        """Test that a qubit spectator raises ValueError."""
        with pytest.raises(ValueError):
            truncation_convergence(ModelParams(), default_grid(ModelParams()), 2, 3)

    def test_requires_larger_truncation(self):
        """Test that n_plus <= n raises ValueError."""
        p = ModelParams(spectator=SpectatorSpec.oscillator(4))
        with pytest.raises(ValueError):
            truncation_convergence(p, default_grid(p), 6, 6)


class TestAsymptoticProbability:
    """Test the tail average."""

    def test_tail_mean(self):
        """Test that the final 10% of samples are averaged."""
        times = np.linspace(0, 1, 100)
        p_of_t = np.where(times > 0.9, 0.2, 0.9)
        ones = np.ones_like(times)
        traj = Trajectory(times, p_of_t, ones, 0 * ones, 0 * ones)
        assert asymptotic_probability(traj) == pytest.approx(0.2)

    def test_invalid_fraction(self):
        """Test that fraction outside (0, 1] raises ValueError."""
        ones = np.ones(5)
        with pytest.raises(ValueError):
            asymptotic_probability(Trajectory(ones, ones, ones, ones, ones), fraction=0.0)
