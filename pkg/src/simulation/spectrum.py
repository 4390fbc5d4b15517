"""
Adiabatic-basis analysis of the composite Hamiltonian.

Provides branch-tracked instantaneous spectra, minimal gaps, the spectator
splitting Delta with the two regime thresholds, and the adiabatic-theorem
ratio |<i|dH/dt|j>| / (E_i - E_j)^2.

Gauge convention: each eigenvector is multiplied by a phase so that its
overlap with the same branch at the previous slice is real and positive.
Without a previous slice, the largest-magnitude component is made real and
positive. Branches inside a degenerate block keep whatever basis eigh
returns and are reported in SpectrumSlice.gauge_skipped.
"""
import dataclasses
import logging
import math
from concurrent.futures import ThreadPoolExecutor
from typing import List, Optional, Sequence, Tuple

import numpy as np
from scipy.optimize import minimize_scalar

from src.models.model_params import CouplingAxis, ModelParams, SpectatorSpec
from src.models.spectrum_slice import (
    ABOVE_WINDOW,
    GapReport,
    PairGap,
    Regime,
    RegimeClassification,
    SpectrumSlice,
    ThresholdSettings,
)
from src.qcore.linalg import eigh, eigvalsh
from src.qcore.tolerances import DEFAULT_TOLERANCES, Tolerances
from src.simulation.hamiltonian import dh_dt, h_total, h_total_stack

logger = logging.getLogger(__name__)

DEFAULT_THRESHOLDS = ThresholdSettings()


class SpectrumError(Exception):
    """Base exception for adiabatic-basis analysis failures."""
    pass


class DegenerateSpectrumError(SpectrumError):
    """Raised when every pair of branches is degenerate."""
    pass


def delta(p: ModelParams) -> float:
    """Spectator splitting energy sqrt(4 x0^2 + omega_c^2)."""
    return float(math.hypot(2.0 * p.x0, p.omega_c))


def _degenerate_branches(eigenvalues: np.ndarray, tolerance: float) -> Tuple[int, ...]:
    close = np.diff(eigenvalues) < tolerance
    flagged = np.zeros(eigenvalues.size, dtype=bool)
    flagged[:-1] |= close
    flagged[1:] |= close
    return tuple(int(k) for k in np.flatnonzero(flagged))


def _fix_gauge(
    vectors: np.ndarray,
    reference: Optional[np.ndarray],
    skipped: Tuple[int, ...]
) -> np.ndarray:
    vectors = vectors.copy()
    for k in range(vectors.shape[1]):
        if k in skipped:
            continue
        if reference is None:
            anchor = vectors[np.argmax(np.abs(vectors[:, k])), k]
            vectors[:, k] *= np.conj(anchor) / abs(anchor)
            continue
        overlap = np.vdot(reference[:, k], vectors[:, k])
        if abs(overlap) > 0.0:
            vectors[:, k] *= np.conj(overlap) / abs(overlap)
    return vectors


def spectrum_slice(
    t: float,
    p: ModelParams,
    prev: Optional[SpectrumSlice] = None,
    tolerances: Tolerances = DEFAULT_TOLERANCES
) -> SpectrumSlice:
    """
    Instantaneous spectrum of H(t) with branch-continuous gauge.

    Args:
        t: Time
        p: Model parameters
        prev: Slice at a nearby earlier time; its eigenvectors anchor the gauge
        tolerances: Degeneracy threshold

    Returns:
        SpectrumSlice; branches in degenerate blocks are listed in gauge_skipped
    """
    values, vectors = eigh(h_total(t, p), tolerances)
    skipped = _degenerate_branches(values, tolerances.degeneracy)
    reference = prev.eigenvectors if prev is not None else None
    vectors = _fix_gauge(vectors, reference, skipped)

    if skipped:
        logger.debug(f"t={t:.6g}: gauge fixing skipped for degenerate branches {skipped}")

    return SpectrumSlice(
        t=float(t),
        eigenvalues=values,
        eigenvectors=vectors,
        gauge_skipped=skipped
    )


def _chain(p: ModelParams, times: Sequence[float], tolerances: Tolerances) -> List[SpectrumSlice]:
    slices: List[SpectrumSlice] = []
    prev = None
    for t in times:
        prev = spectrum_slice(t, p, prev, tolerances)
        slices.append(prev)
    return slices


def track_branches(
    p: ModelParams,
    times: Sequence[float],
    chunk_size: Optional[int] = None,
    workers: int = 1,
    tolerances: Tolerances = DEFAULT_TOLERANCES
) -> List[SpectrumSlice]:
    """
    Branch-tracked spectrum over a time grid.

    The gauge chain is computed per contiguous chunk (chunks may run on
    several threads) and chunks are stitched by reconciling the phases at
    their boundaries, which reproduces the sequential chain.

    Args:
        p: Model parameters
        times: Increasing sample times
        chunk_size: Slices per chunk (None: one chunk)
        workers: Threads used for the chunks
        tolerances: Degeneracy threshold

    Returns:
        One SpectrumSlice per time
    """
    times = [float(t) for t in times]
    if not times:
        return []
    size = chunk_size or len(times)
    chunks = [times[start:start + size] for start in range(0, len(times), size)]

    if workers > 1 and len(chunks) > 1:
        with ThreadPoolExecutor(max_workers=workers) as executor:
            chained = list(executor.map(lambda chunk: _chain(p, chunk, tolerances), chunks))
    else:
        chained = [_chain(p, chunk, tolerances) for chunk in chunks]

    slices = list(chained[0])
    for chunk in chained[1:]:
        last, first = slices[-1], chunk[0]
        phases = np.ones(first.eigenvalues.size, dtype=complex)
        for k in range(phases.size):
            if k in last.gauge_skipped or k in first.gauge_skipped:
                continue
            overlap = np.vdot(last.eigenvectors[:, k], first.eigenvectors[:, k])
            if abs(overlap) > 0.0:
                phases[k] = np.conj(overlap) / abs(overlap)
        slices.extend(
            dataclasses.replace(s, eigenvectors=s.eigenvectors * phases[np.newaxis, :])
            for s in chunk
        )
    return slices


def branch_energies(
    p: ModelParams,
    times: Sequence[float],
    tolerances: Tolerances = DEFAULT_TOLERANCES
) -> np.ndarray:
    """Sorted eigenvalues for many times, shape (n, dim)."""
    return eigvalsh(h_total_stack(np.asarray(times, dtype=float), p), tolerances)


def branch_slopes(p: ModelParams, t: float) -> np.ndarray:
    """
    Slopes dE_j/dt of every branch at t (Hellmann-Feynman <j|dH/dt|j>).

    Only meaningful for non-degenerate branches.
    """
    _, vectors = eigh(h_total(t, p))
    return np.real(np.einsum("ai,ab,bi->i", vectors.conj(), dh_dt(p), vectors))


def branch_curvatures(
    p: ModelParams,
    t: float,
    tolerances: Tolerances = DEFAULT_TOLERANCES
) -> np.ndarray:
    """
    Curvatures d^2E_j/dt^2 of every branch at t.

    Second-order perturbation theory with a constant dH/dt:
    2 sum_{k != j} |<k|dH/dt|j>|^2 / (E_j - E_k). Pairs closer than
    tolerances.degeneracy are left out.
    """
    values, vectors = eigh(h_total(t, p))
    elements = np.abs(vectors.conj().T @ dh_dt(p) @ vectors) ** 2
    spacing = values[:, None] - values[None, :]
    resolved = np.abs(spacing) > tolerances.degeneracy
    terms = np.divide(elements, spacing, out=np.zeros_like(elements), where=resolved)
    return 2.0 * terms.sum(axis=1)


def _default_window(p: ModelParams, factor: float = 10.0) -> Tuple[float, float]:
    half = factor * p.time_unit
    return -half, half


def _refine_pair(
    p: ModelParams,
    lower: int,
    times: np.ndarray,
    gaps: np.ndarray,
    tolerances: Tolerances
) -> PairGap:
    i = int(np.argmin(gaps))
    a = times[max(i - 1, 0)]
    c = times[min(i + 1, times.size - 1)]

    def gap_at(t: float) -> float:
        values = eigvalsh(h_total_stack(np.array([t]), p)[0], tolerances)
        return float(values[lower + 1] - values[lower])

    interior = 0 < i < times.size - 1 and gaps[i] < gaps[i - 1] and gaps[i] < gaps[i + 1]
    try:
        if interior:
            result = minimize_scalar(
                gap_at, bracket=(a, times[i], c), method="golden", options={"xtol": 1e-10}
            )
        else:
            result = minimize_scalar(
                gap_at, bounds=(a, c), method="bounded", options={"xatol": 1e-12}
            )
        converged = bool(getattr(result, "success", True))
        refined_t, refined_gap = float(result.x), float(result.fun)
    except (ValueError, RuntimeError) as e:
        logger.warning(f"Gap refinement for pair {lower} failed in [{a:.6g}, {c:.6g}]: {e}")
        converged, refined_t, refined_gap = False, float(times[i]), float(gaps[i])

    if not converged:
        logger.warning(f"Gap refinement for pair {lower} did not converge in [{a:.6g}, {c:.6g}]")

    if refined_gap > gaps[i] or not a <= refined_t <= c:
        refined_t, refined_gap = float(times[i]), float(gaps[i])

    return PairGap(
        lower_branch=lower,
        gap=refined_gap,
        t_at=refined_t,
        converged=converged,
        bracket=(float(a), float(c))
    )


def minimal_gap(
    p: ModelParams,
    t_range: Optional[Tuple[float, float]] = None,
    n_samples: int = 2001,
    tolerances: Tolerances = DEFAULT_TOLERANCES
) -> GapReport:
    """
    Minimal gaps between adjacent branches.

    A coarse scan locates each pair's minimum, which is then refined by a
    golden-section search inside the bracketing samples.

    Args:
        p: Model parameters
        t_range: (t_start, t_end); defaults to +-10 g/epsilon
        n_samples: Coarse samples (>= 3)
        tolerances: Hermiticity tolerance

    Returns:
        GapReport whose primary gap is the central pair (lower vs upper half)
    """
    if n_samples < 3:
        raise ValueError(f"n_samples must be >= 3, got {n_samples}")

    start, end = t_range or _default_window(p)
    times = np.linspace(start, end, n_samples)
    gaps = np.diff(branch_energies(p, times, tolerances), axis=1)

    pairs = tuple(
        _refine_pair(p, k, times, gaps[:, k], tolerances) for k in range(gaps.shape[1])
    )
    central = pairs[p.dim // 2 - 1]
    return GapReport(
        gap=central.gap,
        t_at=central.t_at,
        pair_minima=pairs,
        converged=central.converged,
        bracket=central.bracket
    )


def central_half_width(p: ModelParams, settings: ThresholdSettings = DEFAULT_THRESHOLDS) -> float:
    """
    Half width in time of the region around t = 0 where the LZ transition happens.

    The larger of t_width_factor * g/eps and transition_width_factor / sqrt(eps).
    In units of g/eps this grows like sqrt(eps)/g, so faster sweeps push the
    off-center region outwards.
    """
    return max(
        settings.t_width_factor * p.time_unit,
        settings.transition_width_factor / math.sqrt(p.epsilon)
    )


def _has_off_center_closing(p: ModelParams, settings: ThresholdSettings) -> bool:
    """
    True when the coupled central gap dips off-center below its centre minimum.

    Only samples where the two central branches are dynamically coupled count,
    so symmetry-protected crossings of decoupled sectors are ignored.
    """
    width = central_half_width(p, settings)
    half = max(settings.t_window_factor * p.time_unit, 2.0 * width)
    times = np.linspace(-half, half, settings.n_samples)
    values, vectors = np.linalg.eigh(h_total_stack(times, p))

    lower = p.dim // 2 - 1
    gap = values[:, lower + 1] - values[:, lower]
    coupling = np.abs(np.einsum(
        "na,ab,nb->n", vectors[:, :, lower].conj(), dh_dt(p), vectors[:, :, lower + 1]
    ))
    coupled = coupling >= settings.coupling_floor * 0.5 * p.epsilon

    centre = np.abs(times) <= width
    off_center = coupled & ~centre
    if not off_center.any():
        return False

    centre_gaps = gap[coupled & centre]
    centre_min = centre_gaps.min() if centre_gaps.size else math.inf
    return bool(gap[off_center].min() < centre_min - settings.gap_fraction * p.g)


def delta_c2(
    ray: Tuple[float, float],
    g: float,
    epsilon: float,
    t_window: Optional[float] = None,
    gap_fraction: Optional[float] = None,
    *,
    spectator: Optional[SpectatorSpec] = None,
    coupling_axis: CouplingAxis = CouplingAxis.X,
    settings: ThresholdSettings = DEFAULT_THRESHOLDS
) -> float:
    """
    Second threshold Delta_c2 along a ray in the (x0, omega_c) plane.

    The smallest Delta along the ray at which the central gap closes
    off-center (see _has_off_center_closing), found by a geometric coarse
    scan up to settings.delta_cap_factor * g and refined by bisection.
    The central region widens with the sweep rate (central_half_width), so
    Delta_c2 / g depends on eps / g^2 and does not decrease as eps grows.

    Args:
        ray: Direction (x0, omega_c); only the ratio matters
        g: LZ gap
        epsilon: Sweep rate
        t_window: Half time window (default 10 g/epsilon)
        gap_fraction: Closing depth in units of g (default 0.1)
        spectator: Spectator used for the spectra (default qubit)
        coupling_axis: Qubit-side Pauli of the interaction
        settings: Remaining search settings

    Returns:
        Delta_c2 in energy units, or ABOVE_WINDOW (math.inf)
    """
    ux, uw = float(ray[0]), float(ray[1])
    if ux < 0 or uw < 0:
        raise ValueError(f"Ray components must be non-negative, got {ray}")
    norm = math.hypot(2.0 * ux, uw)
    if norm == 0.0:
        return ABOVE_WINDOW

    if t_window is not None:
        settings = dataclasses.replace(settings, t_window_factor=t_window * epsilon / g)
    if gap_fraction is not None:
        settings = dataclasses.replace(settings, gap_fraction=gap_fraction)

    # single-scale model: search in units of g
    base = ModelParams(
        g=1.0,
        epsilon=epsilon / g ** 2,
        spectator=spectator or SpectatorSpec(),
        coupling_axis=coupling_axis
    )

    def closes(d: float) -> bool:
        return _has_off_center_closing(
            base.replace(x0=d * ux / norm, omega_c=d * uw / norm), settings
        )

    lower = 0.0
    upper = None
    for d in np.geomspace(settings.delta_floor_factor, settings.delta_cap_factor,
                          settings.scan_points):
        if closes(float(d)):
            upper = float(d)
            break
        lower = float(d)

    if upper is None:
        logger.debug(f"No off-center closing along ray {ray} up to {settings.delta_cap_factor} g")
        return ABOVE_WINDOW

    while upper - lower > settings.rel_precision * upper:
        middle = 0.5 * (lower + upper)
        if closes(middle):
            upper = middle
        else:
            lower = middle

    return upper * g


def classify_regime(
    p: ModelParams,
    settings: ThresholdSettings = DEFAULT_THRESHOLDS,
    delta_c2_value: Optional[float] = None
) -> RegimeClassification:
    """
    Regime of a parameter point.

    Boundaries are half-open: [0, Dc1) -> I, [Dc1, Dc2) -> II, [Dc2, inf) -> III,
    with Dc1 = g and Dc2 taken along the point's own (x0, omega_c) ray.

    Args:
        p: Model parameters
        settings: Threshold search settings
        delta_c2_value: Precomputed Dc2 for this ray (skips the search)

    Returns:
        RegimeClassification
    """
    d = delta(p)
    c1 = p.g
    if delta_c2_value is None:
        c2 = delta_c2(
            (p.x0, p.omega_c), p.g, p.epsilon,
            spectator=p.spectator,
            coupling_axis=p.coupling_axis,
            settings=settings
        )
    else:
        c2 = delta_c2_value

    if d < c1:
        regime = Regime.I
    elif d < c2:
        regime = Regime.II
    else:
        regime = Regime.III

    if regime is Regime.II and d < 2.0 * c1:
        # central gap |Delta - g| still below the bare gap g
        logger.info(
            f"Delta={d:.4g} is regime II by Delta_c1=g, but the central gap "
            f"{abs(d - c1):.4g} has not recovered the bare value {c1:.4g}"
        )

    return RegimeClassification(delta=d, delta_c1=c1, delta_c2=c2, regime=regime)


def adiabaticity_profile(
    p: ModelParams,
    times: Sequence[float],
    tolerances: Tolerances = DEFAULT_TOLERANCES
) -> np.ndarray:
    """
    Adiabatic-theorem ratio max_{i != j} |<i|dH/dt|j>| / (E_i - E_j)^2 per time.

    Pairs closer than tolerances.degeneracy are excluded.

    Raises:
        DegenerateSpectrumError: If every pair is degenerate at some time
    """
    times = np.asarray(times, dtype=float)
    values, vectors = eigh(h_total_stack(times, p), tolerances)
    elements = np.abs(np.einsum("nai,ab,nbj->nij", vectors.conj(), dh_dt(p), vectors))
    spacing = values[:, :, np.newaxis] - values[:, np.newaxis, :]

    usable = np.abs(spacing) >= tolerances.degeneracy
    if not usable.any(axis=(1, 2)).all():
        bad = times[~usable.any(axis=(1, 2))]
        raise DegenerateSpectrumError(f"All branch pairs degenerate at t={bad[0]:.6g}")

    excluded = int((~usable).sum() - usable.shape[0] * usable.shape[1]) // 2
    if excluded:
        logger.debug(f"Excluded {excluded} degenerate branch pairs from the adiabaticity ratio")

    ratios = np.where(usable, elements / np.where(usable, spacing, 1.0) ** 2, 0.0)
    return ratios.max(axis=(1, 2))


def adiabaticity_ratio(
    t: float,
    p: ModelParams,
    tolerances: Tolerances = DEFAULT_TOLERANCES
) -> float:
    """Adiabatic-theorem ratio at a single time (see adiabaticity_profile)."""
    return float(adiabaticity_profile(p, [t], tolerances)[0])
