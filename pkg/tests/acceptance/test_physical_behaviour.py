"""
End-to-end checks of the physical behaviour the simulator must reproduce.

Heavy runs (long windows, full sweeps, many trajectories) are marked slow;
deselect them with -m "not slow".
"""
import math

import numpy as np
import pytest

from src.models.model_params import ModelParams, SpectatorSpec
from src.models.spectrum_slice import Regime
from src.models.sweep_result import NoiseDistribution, PipelineSettings, SweepGrid, parse_axis
from src.models.trajectory import DissipationSpec
from src.simulation.dynamics import (
    asymptotic_probability,
    default_grid,
    evolve_bare_lz,
    evolve_lindblad,
    evolve_oracle,
    evolve_unitary,
    fit_effective_gap,
    initial_state,
    lz_infidelity_analytic,
    truncation_convergence,
)
from src.simulation.hamiltonian import h_total
from src.simulation.spectrum import adiabaticity_profile, classify_regime
from src.simulation.sweep import robustness_study, run_pipeline, run_sweep

REGIME_II = ModelParams(g=1.0, epsilon=2.0, x0=2.0, omega_c=0.5)


class TestSpectrum:
    """Closed-form level structure at the symmetric point."""

    def test_closed_form_eigenvalues(self):
        """Test eigenvalues at t = 0 equal +-g/2 +- Delta/2 for random points."""
        rng = np.random.default_rng(2024)
        for g, x0, omega_c in rng.uniform(0.1, 3.0, size=(20, 3)):
            p = ModelParams(g=g, x0=x0, omega_c=omega_c)
            d = math.sqrt(4 * x0 ** 2 + omega_c ** 2)
            expected = np.sort([g / 2 + d / 2, g / 2 - d / 2, -g / 2 + d / 2, -g / 2 - d / 2])
            assert np.allclose(np.linalg.eigvalsh(h_total(0.0, p)), expected, atol=1e-12)

    def test_degeneracy_at_first_threshold(self):
        """Test the two middle levels coincide when Delta = g."""
        values = np.linalg.eigvalsh(h_total(0.0, ModelParams(x0=0.3, omega_c=0.8)))
        assert abs(values[2] - values[1]) < 1e-12

    def test_first_threshold_belongs_to_regime_two(self):
        """Test that Delta = g exactly (3-4-5 point) is classified as regime II."""
        p = ModelParams(g=5.0, epsilon=50.0, x0=1.5, omega_c=4.0)
        result = classify_regime(p)
        assert result.delta == result.delta_c1 == 5.0
        assert result.regime is Regime.II

    def test_regime_ii_is_more_adiabatic(self):
        """Test that the regime-II ratio max |<i|dH/dt|j>| / dE^2 stays well below the bare one."""
        times = default_grid(REGIME_II, samples=801).times
        coupled = adiabaticity_profile(REGIME_II, times).max()
        bare = adiabaticity_profile(REGIME_II.replace(x0=0.0), times).max()
        assert bare == pytest.approx(1.0, rel=1e-6)
        assert coupled < 0.5 * bare


class TestBareLandauZener:
    """Reproduction of the two-level transition formula."""

    @pytest.mark.slow
    @pytest.mark.parametrize("adiabaticity", [0.5, 1.0, 2.0])
    def test_asymptotic_probability(self, adiabaticity):
        """Test the long-window tail average against exp(-pi g^2 / 2 eps)."""
        g, epsilon = 1.0, 1.0 / adiabaticity
        grid = default_grid(ModelParams(g=g, epsilon=epsilon), samples=20001, span=200.0)
        traj = evolve_bare_lz(g, epsilon, grid, tol=1e-10)
        expected = lz_infidelity_analytic(g, epsilon)
        assert asymptotic_probability(traj) == pytest.approx(expected, rel=0.02)

    def test_finite_time_baseline(self):
        """Test the bare probability at t_f = 10 g/eps lies in (0.45, 0.65)."""
        grid = default_grid(ModelParams(), samples=2001)
        final = evolve_bare_lz(1.0, 2.0, grid, tol=1e-10).final_probability
        assert 0.45 < final < 0.65

    def test_decoupled_spectator(self):
        """Test that x0 = 0 reduces to two-level propagation for three spectator states."""
        for label in ("ground", "excited", "tau_x_plus"):
            p = ModelParams(x0=0.0, omega_c=0.5, spectator=SpectatorSpec.qubit(label))
            grid = default_grid(p, samples=1001)
            composite = evolve_unitary(p, grid, initial_state(p, grid.t_start), tol=1e-12)
            bare = evolve_bare_lz(p.g, p.epsilon, grid, tol=1e-12)
            assert np.max(np.abs(composite.p_of_t - bare.p_of_t)) < 1e-8


class TestSuperadiabaticity:
    """Suppressed transitions in the intermediate regime."""

    def test_regime_ii_infidelity(self):
        """Test the optimized infidelity at x0 = 2g, omega_c = 0.5g is below 0.05."""
        optimum, _ = run_pipeline(REGIME_II)
        assert optimum.p_min < 0.05
        assert abs(optimum.t_f - 10.0 * REGIME_II.time_unit) <= 4.0 * REGIME_II.time_unit
        baseline = evolve_bare_lz(1.0, 2.0, default_grid(REGIME_II), tol=1e-10).final_probability
        assert optimum.p_min * 10 < baseline

    def test_purity_dip_and_recovery(self):
        """Test purity starts at 1, dips during the transfer and recovers near t_f."""
        _, purity_at_tf = run_pipeline(REGIME_II)
        grid = default_grid(REGIME_II, samples=2001, span=14.0)
        traj = evolve_unitary(REGIME_II, grid, initial_state(REGIME_II, grid.t_start))
        assert traj.purity_of_t[0] == pytest.approx(1.0, abs=1e-10)
        assert traj.purity_of_t.min() < 0.95
        assert purity_at_tf > 0.9

    @pytest.mark.slow
    def test_two_orders_of_magnitude(self):
        """Test at least 1% of regime-II sweep points reach infidelity below 5e-3."""
        grid = SweepGrid(x0_over_g=parse_axis("0.05:8:81:log"), omega_c_over_x0=parse_axis("0.05:8:81:log"))
        result = run_sweep(grid, workers=4)
        regime_ii = [pt for pt in result.points if pt.regime is Regime.II]
        good = [pt for pt in regime_ii if pt.infidelity < 5e-3]
        assert regime_ii
        assert len(good) >= 0.01 * len(regime_ii)


class TestOracle:
    """Agreement of the adaptive integrator with the fixed-step reference."""

    @pytest.mark.slow
    def test_adaptive_matches_midpoint_reference(self):
        """Test composite amplitudes agree within 1e-8 and norms stay within 1e-10."""
        grid = default_grid(REGIME_II, samples=2001)
        psi0 = initial_state(REGIME_II, grid.t_start)
        adaptive = evolve_unitary(REGIME_II, grid, psi0, tol=1e-12, store_snapshots=True)
        oracle = evolve_oracle(REGIME_II, grid, psi0, n_steps=1_000_000, store_snapshots=True)
        assert np.max(np.abs(adaptive.snapshots - oracle.snapshots)) < 1e-8
        assert adaptive.norm_defect.max() < 1e-10
        assert oracle.norm_defect.max() < 1e-10


class TestEffectiveGap:
    """The omega_c = 0 limit behaves like a bare sweep with a larger gap."""

    @pytest.mark.slow
    def test_effective_gap(self):
        """Test g' > g, a small fit residual and the g + 2 x0 form winning."""
        fit = fit_effective_gap(ModelParams(x0=0.5))
        assert fit.g_prime > 1.0
        assert fit.residual < 1e-3
        assert fit.winner == "g+2x0"
        assert fit.g_prime == pytest.approx(2.0, rel=0.02)


class TestOscillatorSpectator:
    """Oscillator spectator variant."""

    @pytest.mark.slow
    def test_truncation_converged(self):
        """Test truncation 20 vs 30 changes P(t_f) by less than 1e-4."""
        p = ModelParams(x0=1.0, omega_c=2.0, spectator=SpectatorSpec.oscillator(20))
        grid = default_grid(p, samples=501)
        assert truncation_convergence(p, grid, 20, 30, tol=1e-10) < 1e-4

    @pytest.mark.slow
    def test_sweep_has_low_infidelity_region(self):
        """Test a coarse oscillator sweep contains points below 0.05."""
        grid = SweepGrid(
            x0_over_g=parse_axis("0.25:4:7:log"),
            omega_c_over_x0=parse_axis("0.25:4:7:log"),
            spectator=SpectatorSpec.oscillator(12)
        )
        result = run_sweep(grid, PipelineSettings(tol=1e-8, spacing_factor=0.02), workers=4)
        assert result.n_failed == 0
        assert np.nanmin(result.infidelity_map()) < 0.05


class TestDissipation:
    """Spectator dissipation contracts."""

    def test_zero_rate_matches_unitary(self):
        """Test kappa = 0 reproduces P(t) within 1e-7."""
        grid = default_grid(REGIME_II, samples=501)
        psi0 = initial_state(REGIME_II, grid.t_start)
        unitary = evolve_unitary(REGIME_II, grid, psi0, tol=1e-10)
        mixed = evolve_lindblad(REGIME_II, grid, psi0.projector(), DissipationSpec(0.0), tol=1e-10)
        assert np.max(np.abs(unitary.p_of_t - mixed.p_of_t)) < 1e-7

    def test_dissipation_damps_oscillations(self):
        """Test kappa = 0.1g keeps the trace and damps post-transfer oscillations of P."""
        grid = default_grid(REGIME_II, samples=1001)
        rho0 = initial_state(REGIME_II, grid.t_start).projector()
        closed = evolve_lindblad(REGIME_II, grid, rho0, DissipationSpec(0.0), tol=1e-10)
        damped = evolve_lindblad(REGIME_II, grid, rho0, DissipationSpec(0.1), tol=1e-10)
        assert damped.norm_defect.max() < 1e-8

        tail = grid.times > 2.0 * REGIME_II.time_unit
        assert np.ptp(damped.p_of_t[tail]) < np.ptp(closed.p_of_t[tail])


class TestRobustness:
    """Parameter noise around the regime-II optimum."""

    @pytest.mark.slow
    def test_ten_percent_noise(self):
        """Test 100 samples of 10% uniform noise keep the infidelity below 0.05."""
        report = robustness_study(
            REGIME_II, 0.1, 100, seed=0, distribution=NoiseDistribution.UNIFORM, workers=4
        )
        assert report.n_failed == 0
        assert report.maximum < 0.05


class TestScaleInvariance:
    """The model has a single energy scale."""

    @pytest.mark.parametrize("x0,omega_c", [(0.25, 0.5), (2.0, 0.5), (4.0, 12.0)])
    def test_infidelity_invariant_under_rescaling(self, x0, omega_c):
        """Test energies x2, eps x4 and times x1/2 leave the infidelity unchanged."""
        p = ModelParams(x0=x0, omega_c=omega_c)
        settings = PipelineSettings(tol=1e-12)
        original, _ = run_pipeline(p, settings)
        scaled, _ = run_pipeline(p.scaled(2.0), settings)
        assert scaled.p_min == pytest.approx(original.p_min, abs=1e-8)
        assert scaled.t_f == pytest.approx(original.t_f / 2.0, rel=1e-6)

    def test_dissipative_rescaling(self):
        """Test the rescaling also holds with kappa scaled alongside the energies."""
        grid = default_grid(REGIME_II, samples=401)
        diss = DissipationSpec(0.1)
        q = REGIME_II.scaled(2.0)
        first = evolve_lindblad(
            REGIME_II, grid, initial_state(REGIME_II, grid.t_start).projector(), diss, tol=1e-11
        )
        second = evolve_lindblad(
            q, grid.scaled(2.0), initial_state(q, grid.t_start / 2.0).projector(), diss.scaled(2.0), tol=1e-11
        )
        assert np.max(np.abs(first.p_of_t - second.p_of_t)) < 1e-8
