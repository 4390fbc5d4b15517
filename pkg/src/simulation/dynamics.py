"""
Time evolution of the LZ qubit and its spectator.

The main propagator integrates the Schroedinger equation with an adaptive
embedded Runge-Kutta pair (DOP853) and dense output on the sampling grid.
An exponential-midpoint propagator with fixed steps serves as an independent
check. The Lindblad integrator shares the adaptive machinery and works on
the density matrix directly.

Observables per sample:
    P(t)   = <+_t| rho_q(t) |+_t>, |+_t> the upper eigenstate of h_system(t)
    gamma  = Tr(rho_q^2)
    S2     = -ln(gamma)
where rho_q is the reduced qubit state. Norms are never renormalized; the
norm defect is reported instead.
"""
import logging
import math
from typing import Callable, Optional, Sequence, Union

import numpy as np
from scipy.integrate import solve_ivp
from scipy.optimize import curve_fit

from src.models.model_params import InitialSpectatorState, ModelParams, SpectatorKind
from src.models.trajectory import (
    FLAG_HERMITICITY,
    FLAG_NORM_DRIFT,
    FLAG_POSITIVITY,
    FLAG_TRACE_DRIFT,
    DissipationChannel,
    DissipationSpec,
    EffectiveGapFit,
    TimeGrid,
    Trajectory,
)
from src.qcore.errors import DimensionError
from src.qcore.linalg import (
    eigh,
    expm_unitary,
    hermiticity_defect,
    kron,
    ordered_product,
    purities,
    reduce_matrices,
    reduce_vectors,
)
from src.qcore.states import DensityMatrix, QuantumState
from src.qcore.tolerances import DEFAULT_TOLERANCES, Tolerances
from src.simulation.hamiltonian import (
    IDENTITY_2,
    dephasing_operator,
    dh_dt,
    h_system,
    h_system_stack,
    h_total,
    h_total_stack,
    lowering_operator,
    spectator_state,
)

logger = logging.getLogger(__name__)

DEFAULT_TOL = 1e-9
DEFAULT_ORACLE_STEPS = 200_000

StateLike = Union[QuantumState, DensityMatrix, np.ndarray]


class PropagationError(Exception):
    """Raised when the adaptive integrator aborts (e.g. step-size underflow)."""

    def __init__(self, message: str, t_fail: float):
        self.t_fail = t_fail
        super().__init__(f"{message} (at t={t_fail:.6g})")


def lz_infidelity_analytic(g: float, epsilon: float) -> float:
    """
    Asymptotic LZ transition probability exp(-pi g^2 / (2 eps)).

    Raises:
        ValueError: If g < 0 or epsilon <= 0
    """
    if g < 0 or not epsilon > 0:
        raise ValueError(f"Need g >= 0 and epsilon > 0, got g={g}, epsilon={epsilon}")
    return math.exp(-math.pi * g ** 2 / (2.0 * epsilon))


def default_grid(p: ModelParams, samples: int = 2001, span: float = 10.0) -> TimeGrid:
    """Symmetric grid [-span g/eps, +span g/eps]."""
    return TimeGrid(-span * p.time_unit, span * p.time_unit, samples)


def _upper_branches(p: ModelParams, times: np.ndarray) -> np.ndarray:
    _, vectors = eigh(h_system_stack(times, p))
    return vectors[:, :, 1]


def initial_state(p: ModelParams, t_i: float) -> QuantumState:
    """
    Product state |-_{t_i}> (x) |spectator>.

    The qubit starts in the lower instantaneous eigenstate of h_system(t_i);
    the spectator state follows p.spectator.initial_state.

    Args:
        p: Model parameters
        t_i: Initial time

    Returns:
        Normalized composite QuantumState
    """
    _, vectors = eigh(h_system(t_i, p))
    return QuantumState(np.kron(vectors[:, 0], spectator_state(p.spectator)))


def _reduced(state: StateLike, spectator_dim: int) -> np.ndarray:
    if isinstance(state, QuantumState):
        return reduce_vectors(state.amplitudes, spectator_dim)
    if isinstance(state, DensityMatrix):
        return reduce_matrices(state.matrix, spectator_dim)
    array = np.asarray(state, dtype=complex)
    if array.ndim == 1:
        return reduce_vectors(array, spectator_dim)
    return reduce_matrices(array, spectator_dim)


def transition_probability(state: StateLike, t: float, p: ModelParams) -> float:
    """
    P(t) = Tr(rho_q |+_t><+_t|) via the reduced qubit density matrix.

    Args:
        state: Composite state vector or density matrix
        t: Time defining the instantaneous basis
        p: Model parameters

    Returns:
        Probability clipped to [0, 1]
    """
    upper = _upper_branches(p, np.array([t]))[0]
    rho = _reduced(state, p.spectator_dim)
    value = float(np.real(upper.conj() @ rho @ upper))
    return min(max(value, 0.0), 1.0)


def projector_probability(state: StateLike, t: float, p: ModelParams) -> float:
    """P(t) as the expectation of |+_t><+_t| (x) I on the composite state."""
    upper = _upper_branches(p, np.array([t]))[0]
    projector = kron(np.outer(upper, upper.conj()), np.eye(p.spectator_dim))
    if isinstance(state, QuantumState):
        vector = state.amplitudes
        return float(np.real(vector.conj() @ projector @ vector))
    matrix = state.matrix if isinstance(state, DensityMatrix) else np.asarray(state, dtype=complex)
    if matrix.ndim == 1:
        return float(np.real(matrix.conj() @ projector @ matrix))
    return float(np.real(np.trace(projector @ matrix)))


def _qubit_observables(p: ModelParams, times: np.ndarray, rho_q: np.ndarray):
    upper = _upper_branches(p, times)
    p_of_t = np.real(np.einsum("na,nab,nb->n", upper.conj(), rho_q, upper))
    purity = np.minimum(purities(rho_q), 1.0)
    return np.clip(p_of_t, 0.0, 1.0), purity, -np.log(purity)


def _solve(fun: Callable, y0: np.ndarray, times: np.ndarray, tol: float) -> np.ndarray:
    # local error well below tol so the accumulated norm defect stays under Tolerances.norm
    rtol = max(tol * 1e-3, 100 * np.finfo(float).eps)
    solution = solve_ivp(
        fun,
        (float(times[0]), float(times[-1])),
        y0,
        method="DOP853",
        t_eval=times,
        rtol=rtol,
        atol=tol * 1e-5
    )
    if solution.status < 0:
        t_fail = float(solution.t[-1]) if solution.t.size else float(times[0])
        raise PropagationError(solution.message, t_fail)
    return solution.y.T


def _check_tol(tol: float) -> None:
    if not 1e-14 < tol < 1e-4:
        raise ValueError(f"tol must be in (1e-14, 1e-4), got {tol}")


def integrate_linear_schrodinger(
    h0: np.ndarray,
    slope: np.ndarray,
    psi0: np.ndarray,
    times: Sequence[float],
    tol: float = DEFAULT_TOL
) -> np.ndarray:
    """
    Solve i d/dt psi = (h0 + t slope) psi on the given sample times.

    Args:
        h0: Hamiltonian at t = 0
        slope: Constant dH/dt
        psi0: State at times[0]
        times: Increasing sample times
        tol: Relative local error tolerance

    Returns:
        States, shape (len(times), dim)

    Raises:
        PropagationError: If the integrator aborts
    """
    h0 = np.asarray(h0, dtype=complex)
    slope = np.asarray(slope, dtype=complex)

    def rhs(t: float, y: np.ndarray) -> np.ndarray:
        return -1j * (h0 @ y + t * (slope @ y))

    return _solve(rhs, np.asarray(psi0, dtype=complex), np.asarray(times, dtype=float), tol)


def _trajectory_from_states(
    p: ModelParams,
    times: np.ndarray,
    states: np.ndarray,
    store_snapshots: bool,
    drift_limit: float
) -> Trajectory:
    p_of_t, purity, renyi = _qubit_observables(p, times, reduce_vectors(states, p.spectator_dim))
    norm_defect = np.abs(np.linalg.norm(states, axis=1) - 1.0)

    flags = ()
    if norm_defect.max() > drift_limit:
        logger.warning(f"Norm drift {norm_defect.max():.2e} exceeds {drift_limit:.0e}")
        flags = (FLAG_NORM_DRIFT,)

    return Trajectory(
        times=times,
        p_of_t=p_of_t,
        purity_of_t=purity,
        renyi_of_t=renyi,
        norm_defect=norm_defect,
        flags=flags,
        snapshots=states if store_snapshots else None
    )


def _check_dim(p: ModelParams, dim: int) -> None:
    if dim != p.dim:
        raise DimensionError(f"Initial state has dimension {dim}, model needs {p.dim}")


def evolve_unitary(
    p: ModelParams,
    grid: TimeGrid,
    psi0: QuantumState,
    tol: float = DEFAULT_TOL,
    store_snapshots: bool = False,
    tolerances: Tolerances = DEFAULT_TOLERANCES
) -> Trajectory:
    """
    Adaptive-step unitary propagation sampled on the grid.

    Args:
        p: Model parameters
        grid: Output sampling grid (psi0 is the state at grid.t_start)
        psi0: Initial composite state
        tol: Relative local error tolerance in (1e-14, 1e-4)
        store_snapshots: Keep the composite state at each sample
        tolerances: Norm-drift threshold

    Returns:
        Trajectory; flagged norm-drift when the norm defect exceeds tolerances.norm

    Raises:
        PropagationError: If the integrator aborts
    """
    _check_tol(tol)
    _check_dim(p, psi0.dim)

    times = grid.times
    logger.debug(f"Unitary propagation over [{grid.t_start:.6g}, {grid.t_end:.6g}], dim={p.dim}")
    states = integrate_linear_schrodinger(h_total(0.0, p), dh_dt(p), psi0.amplitudes, times, tol)
    return _trajectory_from_states(p, times, states, store_snapshots, tolerances.norm)


def evolve_bare_lz(
    g: float,
    epsilon: float,
    grid: TimeGrid,
    tol: float = DEFAULT_TOL
) -> Trajectory:
    """
    Two-level LZ propagation without spectator, from the lower branch at grid.t_start.

    Used as the independent reference for the decoupled limit and as the
    bare baseline of trajectory outputs.
    """
    _check_tol(tol)
    p = ModelParams(g=g, epsilon=epsilon)
    times = grid.times
    _, vectors = eigh(h_system(grid.t_start, p))
    slope = 0.5 * epsilon * np.diag([1.0, -1.0]).astype(complex)
    states = integrate_linear_schrodinger(h_system(0.0, p), slope, vectors[:, 0], times, tol)

    upper = _upper_branches(p, times)
    p_of_t = np.clip(np.abs(np.einsum("na,na->n", upper.conj(), states)) ** 2, 0.0, 1.0)
    return Trajectory(
        times=times,
        p_of_t=p_of_t,
        purity_of_t=np.ones_like(times),
        renyi_of_t=np.zeros_like(times),
        norm_defect=np.abs(np.linalg.norm(states, axis=1) - 1.0)
    )


def evolve_oracle(
    p: ModelParams,
    grid: TimeGrid,
    psi0: QuantumState,
    n_steps: int = DEFAULT_ORACLE_STEPS,
    store_snapshots: bool = False,
    tolerances: Tolerances = DEFAULT_TOLERANCES
) -> Trajectory:
    """
    Fixed-step exponential-midpoint propagation.

    Each step applies expm(-i H(t + dt/2) dt); the scheme is second-order
    accurate and unitary per step. Steps are distributed evenly over the
    sampling intervals.

    Args:
        p: Model parameters
        grid: Output sampling grid
        psi0: Initial composite state
        n_steps: Total number of steps over the grid (rounded up per interval)
        store_snapshots: Keep the composite state at each sample
        tolerances: Norm-drift threshold

    Returns:
        Trajectory
    """
    _check_dim(p, psi0.dim)
    if n_steps < 1:
        raise ValueError(f"n_steps must be >= 1, got {n_steps}")

    times = grid.times
    per_interval = math.ceil(n_steps / (grid.sample_count - 1))
    dt = grid.spacing / per_interval
    offsets = (np.arange(per_interval) + 0.5) * dt

    states = np.empty((times.size, p.dim), dtype=complex)
    states[0] = psi0.amplitudes
    psi = psi0.amplitudes.copy()
    for k in range(times.size - 1):
        steps = expm_unitary(h_total_stack(times[k] + offsets, p), dt, tolerances)
        psi = ordered_product(steps) @ psi
        states[k + 1] = psi

    logger.debug(f"Oracle propagation: {per_interval * (times.size - 1)} midpoint steps, dt={dt:.3e}")
    return _trajectory_from_states(p, times, states, store_snapshots, tolerances.norm)


def jump_operator(p: ModelParams, diss: DissipationSpec) -> np.ndarray:
    """Composite jump operator I_2 (x) L acting on the spectator."""
    if diss.channel is DissipationChannel.SPECTATOR_DECAY:
        local = lowering_operator(p.spectator)
    else:
        local = dephasing_operator(p.spectator)
    return kron(IDENTITY_2, local)


def evolve_lindblad(
    p: ModelParams,
    grid: TimeGrid,
    rho0: DensityMatrix,
    diss: DissipationSpec,
    tol: float = DEFAULT_TOL,
    store_snapshots: bool = False,
    tolerances: Tolerances = DEFAULT_TOLERANCES
) -> Trajectory:
    """
    Lindblad master-equation propagation with one spectator jump operator.

        d rho/dt = -i[H(t), rho] + kappa (J rho J^dagger - {J^dagger J, rho}/2)

    Positivity is monitored, not enforced.

    Args:
        p: Model parameters
        grid: Output sampling grid
        rho0: Initial composite density matrix
        diss: Dissipation rate and channel
        tol: Relative local error tolerance in (1e-14, 1e-4)
        store_snapshots: Keep the composite density matrix at each sample
        tolerances: Drift thresholds for the trace, Hermiticity and positivity flags

    Returns:
        Trajectory; norm_defect holds |Tr(rho) - 1|

    Raises:
        PropagationError: If the integrator aborts
    """
    _check_tol(tol)
    _check_dim(p, rho0.dim)

    dim = p.dim
    h0 = h_total(0.0, p)
    slope = dh_dt(p)
    jump = jump_operator(p, diss)
    jump_dag = jump.conj().T
    anti = jump_dag @ jump
    kappa = diss.rate

    def rhs(t: float, y: np.ndarray) -> np.ndarray:
        rho = y.reshape(dim, dim)
        h = h0 + t * slope
        drho = -1j * (h @ rho - rho @ h)
        if kappa:
            drho = drho + kappa * (jump @ rho @ jump_dag - 0.5 * (anti @ rho + rho @ anti))
        return drho.ravel()

    times = grid.times
    logger.debug(f"Lindblad propagation: kappa={kappa:.3g}, channel={diss.channel.value}")
    rhos = _solve(rhs, rho0.matrix.ravel().copy(), times, tol).reshape(-1, dim, dim)

    p_of_t, purity, renyi = _qubit_observables(p, times, reduce_matrices(rhos, p.spectator_dim))
    trace_defect = np.abs(np.trace(rhos, axis1=1, axis2=2) - 1.0)

    flags = []
    if trace_defect.max() > tolerances.lindblad_trace:
        logger.warning(f"Trace drift {trace_defect.max():.2e} in Lindblad run")
        flags.append(FLAG_TRACE_DRIFT)
    smallest = float(np.linalg.eigvalsh(0.5 * (rhos + np.conj(np.swapaxes(rhos, 1, 2))))[:, 0].min())
    if smallest < tolerances.lindblad_min_eigenvalue:
        logger.warning(f"Density matrix eigenvalue {smallest:.2e} below tolerance in Lindblad run")
        flags.append(FLAG_POSITIVITY)
    if hermiticity_defect(rhos) > tolerances.lindblad_hermiticity:
        flags.append(FLAG_HERMITICITY)

    return Trajectory(
        times=times,
        p_of_t=p_of_t,
        purity_of_t=purity,
        renyi_of_t=renyi,
        norm_defect=trace_defect,
        flags=tuple(flags),
        snapshots=rhos if store_snapshots else None
    )


def truncation_convergence(
    p: ModelParams,
    grid: TimeGrid,
    n: int,
    n_plus: int,
    tol: float = DEFAULT_TOL,
    recipe: Callable[[ModelParams, float], QuantumState] = initial_state
) -> float:
    """
    |P_n(t_f) - P_{n_plus}(t_f)| for an oscillator spectator.

    Args:
        p: Model parameters with an oscillator spectator
        grid: Sampling grid
        n: Smaller truncation
        n_plus: Larger truncation
        tol: Integrator tolerance
        recipe: Builds the initial state from (params, t_start)

    Returns:
        Final-time deviation
    """
    if p.spectator.kind is not SpectatorKind.OSCILLATOR:
        raise ValueError("Truncation convergence needs an oscillator spectator")
    if not n_plus > n:
        raise ValueError(f"n_plus ({n_plus}) must exceed n ({n})")

    finals = []
    for truncation in (n, n_plus):
        q = p.replace(spectator=p.spectator.with_truncation(truncation))
        finals.append(evolve_unitary(q, grid, recipe(q, grid.t_start), tol).final_probability)

    deviation = abs(finals[0] - finals[1])
    logger.info(f"Truncation {n} vs {n_plus}: |dP(t_f)| = {deviation:.3e}")
    return deviation


def asymptotic_probability(traj: Trajectory, fraction: float = 0.1) -> float:
    """Mean of P over the final fraction of the samples."""
    if not 0.0 < fraction <= 1.0:
        raise ValueError(f"fraction must be in (0, 1], got {fraction}")
    count = max(1, int(round(fraction * traj.times.size)))
    return float(np.mean(traj.p_of_t[-count:]))


def fit_effective_gap(
    p: ModelParams,
    epsilons: Sequence[float] = (3.0, 4.0, 6.0),
    window: float = 200.0,
    samples: int = 20001,
    tol: float = 1e-10
) -> EffectiveGapFit:
    """
    Effective gap of the omega_c = 0 limit.

    The spectator is prepared in the tau_x = +1 eigenstate, the asymptotic P
    is measured for several sweep rates over eps t in [-window g, +window g],
    and g' is fitted to exp(-pi g'^2 / 2 eps). The closed-form candidates
    g + x0 and g + 2 x0 are scored against the same data.

    Args:
        p: Model parameters (omega_c is forced to 0)
        epsilons: Sweep rates
        window: Half window in units of g/eps
        samples: Samples per trajectory
        tol: Integrator tolerance

    Returns:
        EffectiveGapFit
    """
    base = p.replace(
        omega_c=0.0,
        spectator=p.spectator.with_initial_state(InitialSpectatorState.TAU_X_PLUS.value)
    )

    rates = np.asarray(epsilons, dtype=float)
    measured = []
    for rate in rates:
        q = base.replace(epsilon=float(rate))
        grid = default_grid(q, samples=samples, span=window)
        measured.append(asymptotic_probability(evolve_unitary(q, grid, initial_state(q, grid.t_start), tol)))
    measured = np.asarray(measured)

    def model(rate, gap):
        return np.exp(-np.pi * gap ** 2 / (2.0 * rate))

    popt, _ = curve_fit(model, rates, measured, p0=[base.g + base.x0])
    g_prime = abs(float(popt[0]))
    residual = float(np.max(np.abs(measured - model(rates, g_prime))))

    hypotheses = {
        "g+x0": float(np.max(np.abs(measured - model(rates, base.g + base.x0)))),
        "g+2x0": float(np.max(np.abs(measured - model(rates, base.g + 2.0 * base.x0)))),
    }
    winner = min(hypotheses, key=hypotheses.get)
    logger.info(f"Effective gap g'={g_prime:.6g} (residual {residual:.2e}), closest form {winner}")

    return EffectiveGapFit(
        g_prime=g_prime,
        residual=residual,
        epsilons=tuple(float(r) for r in rates),
        probabilities=tuple(float(v) for v in measured),
        hypotheses=hypotheses,
        winner=winner
    )
