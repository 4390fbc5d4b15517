"""
Parameter-space exploration.

Every point runs the same pipeline: start in the lower branch at
t_i = -10 g/eps, propagate past the target time, pick the local minimum of
P(t) nearest to t = +10 g/eps and record P and the purity there. Grid rows
are distributed over a multiprocessing pool in static blocks; results are
collected in the parent and always returned in grid order, so the output
does not depend on the worker count.
"""
import dataclasses
import logging
import math
from multiprocessing import Pool
from typing import Any, Callable, Dict, List, Optional, Sequence, Tuple

import numpy as np

from src import __version__
from src.models.model_params import ModelError, ModelParams
from src.models.spectrum_slice import ThresholdSettings
from src.models.sweep_result import (
    NoiseDistribution,
    PipelineSettings,
    PointStatus,
    RobustnessReport,
    SweepGrid,
    SweepPoint,
    SweepResult,
    TfFlag,
    TfOptimum,
    quantile_labels,
)
from src.models.trajectory import TimeGrid, Trajectory
from src.qcore.errors import QCoreError
from src.simulation.dynamics import PropagationError, evolve_unitary, initial_state
from src.simulation.spectrum import DEFAULT_THRESHOLDS, classify_regime, delta, delta_c2

logger = logging.getLogger(__name__)

QUANTILE_LEVELS = [0.05, 0.25, 0.5, 0.75, 0.95]

# Failures recorded per point instead of aborting the sweep
POINT_ERRORS = (PropagationError, QCoreError, ModelError, np.linalg.LinAlgError)


def optimize_tf(
    traj: Trajectory,
    target: float,
    window: Optional[float] = None
) -> TfOptimum:
    """
    Local minimum of P(t) nearest to the target time.

    Discrete local minima inside [target - window, target + window] are
    ranked by |t - target|; the winner is refined by a parabola through the
    three neighbouring samples. Without any local minimum, P(target) is
    returned (linear interpolation) with the MONOTONE_WINDOW flag.

    Args:
        traj: Trajectory extending beyond target
        target: Target final time
        window: Half width of the search window (None: whole trajectory)

    Returns:
        TfOptimum

    Raises:
        ValueError: If the trajectory does not reach the target
    """
    times, probability = traj.times, traj.p_of_t
    if not times[0] <= target <= times[-1]:
        raise ValueError(f"Target {target:.6g} outside trajectory [{times[0]:.6g}, {times[-1]:.6g}]")

    inner = np.arange(1, times.size - 1)
    is_minimum = (
        (probability[inner] <= probability[inner - 1])
        & (probability[inner] < probability[inner + 1])
    )
    candidates = inner[is_minimum]
    if window is not None:
        candidates = candidates[np.abs(times[candidates] - target) <= window]

    if candidates.size == 0:
        index = int(np.argmin(np.abs(times - target)))
        p_target = float(np.interp(target, times, probability))
        return TfOptimum(t_f=float(target), p_min=p_target, flag=TfFlag.MONOTONE_WINDOW, index=index)

    index = int(candidates[np.argmin(np.abs(times[candidates] - target))])
    before, centre, after = probability[index - 1], probability[index], probability[index + 1]
    step = times[index + 1] - times[index]
    curvature = before - 2.0 * centre + after

    t_f, p_min = float(times[index]), float(centre)
    if curvature > 0:
        t_f += step * (before - after) / (2.0 * curvature)
        p_min = centre - (before - after) ** 2 / (8.0 * curvature)
        p_min = float(min(max(p_min, 0.0), centre))

    return TfOptimum(t_f=t_f, p_min=p_min, flag=TfFlag.LOCAL_MINIMUM, index=index)


def pipeline_grid(p: ModelParams, settings: PipelineSettings) -> TimeGrid:
    """Sampling grid from -ti g/eps to (target + window) g/eps."""
    unit = p.time_unit
    t_start = -settings.ti_factor * unit
    t_end = (settings.target_factor + settings.window_factor) * unit
    samples = int(round((t_end - t_start) / (settings.spacing_factor * unit))) + 1
    return TimeGrid(t_start, t_end, samples)


def run_pipeline(
    p: ModelParams,
    settings: PipelineSettings = PipelineSettings()
) -> Tuple[TfOptimum, float]:
    """
    Evolve one parameter point and optimize the final time.

    Args:
        p: Model parameters
        settings: Pipeline settings

    Returns:
        (TfOptimum, purity at the optimized final time)

    Raises:
        PropagationError: If the integrator aborts
    """
    grid = pipeline_grid(p, settings)
    traj = evolve_unitary(p, grid, initial_state(p, grid.t_start), settings.tol)
    unit = p.time_unit
    optimum = optimize_tf(traj, settings.target_factor * unit, settings.window_factor * unit)
    purity = float(np.interp(optimum.t_f, traj.times, traj.purity_of_t))
    return optimum, min(purity, 1.0)


def _evaluate_point(
    grid: SweepGrid,
    row: int,
    col: int,
    settings: PipelineSettings,
    threshold: float
) -> SweepPoint:
    p = grid.params_at(row, col)
    base = SweepPoint(row=row, col=col, x0=p.x0, omega_c=p.omega_c, delta=delta(p))
    try:
        regime = classify_regime(p, delta_c2_value=threshold).regime
        optimum, purity = run_pipeline(p, settings)
    except POINT_ERRORS as e:
        logger.warning(f"Point ({row}, {col}) x0={p.x0:.4g} omega_c={p.omega_c:.4g} failed: {e}")
        return SweepPoint(
            row=row, col=col, x0=p.x0, omega_c=p.omega_c, delta=base.delta,
            status=PointStatus.FAILED, message=str(e)
        )

    return SweepPoint(
        row=row,
        col=col,
        x0=p.x0,
        omega_c=p.omega_c,
        delta=base.delta,
        regime=regime,
        t_f_opt=optimum.t_f,
        infidelity=optimum.p_min,
        purity_bar=purity,
        flag=optimum.flag
    )


def _evaluate_row(task: tuple) -> List[SweepPoint]:
    """Worker entry point: evaluate the requested columns of one row."""
    row, cols, grid, settings, thresholds = task
    return [_evaluate_point(grid, row, col, settings, thresholds[col]) for col in cols]


def column_thresholds(
    grid: SweepGrid,
    thresholds: ThresholdSettings = DEFAULT_THRESHOLDS
) -> List[float]:
    """
    Delta_c2 for every column.

    All points of a column lie on the same (x0, omega_c) ray, so one search
    per column serves the whole column.
    """
    values = []
    for ratio in grid.omega_c_over_x0:
        values.append(delta_c2(
            (1.0, ratio), grid.g, grid.epsilon,
            spectator=grid.spectator,
            settings=thresholds
        ))
    finite = [v for v in values if not math.isinf(v)]
    logger.info(f"Delta_c2 computed for {len(values)} columns ({len(values) - len(finite)} above window)")
    return values


def run_sweep(
    grid: SweepGrid,
    settings: PipelineSettings = PipelineSettings(),
    workers: int = 1,
    on_point: Optional[Callable[[SweepPoint], None]] = None,
    completed: Optional[Dict[Tuple[int, int], SweepPoint]] = None,
    thresholds: ThresholdSettings = DEFAULT_THRESHOLDS,
    manifest: Optional[Dict[str, Any]] = None
) -> SweepResult:
    """
    Evaluate every grid point.

    Args:
        grid: Sweep grid
        settings: Per-point pipeline settings
        workers: Worker processes (1: in-process)
        on_point: Collector callback, called in the parent for each new point
        completed: Points already computed (resume); they are not recomputed
        thresholds: Delta_c2 search settings
        manifest: Entries merged over the default provenance record

    Returns:
        SweepResult with points in row-major grid order and a filled manifest
    """
    rows, cols = grid.shape
    results: Dict[Tuple[int, int], SweepPoint] = dict(completed or {})

    tasks = []
    per_column = column_thresholds(grid, thresholds)
    for row in range(rows):
        missing = [col for col in range(cols) if (row, col) not in results]
        if missing:
            tasks.append((row, missing, grid, settings, per_column))

    logger.info(
        f"Sweep {rows}x{cols}: {sum(len(t[1]) for t in tasks)} points to evaluate, "
        f"{len(results)} reused, workers={workers}"
    )

    def collect(points: List[SweepPoint]) -> None:
        for point in points:
            results[(point.row, point.col)] = point
            if on_point is not None:
                on_point(point)

    if workers > 1 and len(tasks) > 1:
        chunk = max(1, math.ceil(len(tasks) / workers))
        with Pool(processes=workers) as pool:
            for points in pool.imap(_evaluate_row, tasks, chunksize=chunk):
                collect(points)
    else:
        for task in tasks:
            collect(_evaluate_row(task))

    ordered = tuple(results[(row, col)] for row in range(rows) for col in range(cols))
    provenance = {
        "tool": "lzspec",
        "version": __version__,
        "grid": grid.to_dict(),
        "settings": dataclasses.asdict(settings),
        "thresholds": dataclasses.asdict(thresholds),
        "reused_points": len(completed or {}),
    }
    provenance.update(manifest or {})
    result = SweepResult(grid=grid, points=ordered, manifest=provenance)
    if result.n_failed:
        logger.warning(f"Sweep finished with {result.n_failed} failed points")
    return result


def _perturb(p: ModelParams, factors: Sequence[float]) -> ModelParams:
    return p.replace(
        x0=p.x0 * factors[0],
        omega_c=p.omega_c * factors[1],
        g=p.g * factors[2]
    )


def _evaluate_sample(task: tuple) -> float:
    p, factors, settings = task
    try:
        optimum, _ = run_pipeline(_perturb(p, factors), settings)
    except POINT_ERRORS as e:
        logger.warning(f"Robustness sample {tuple(factors)} failed: {e}")
        return math.nan
    return optimum.p_min


def robustness_study(
    p: ModelParams,
    rel_sigma: float,
    n_samples: int,
    seed: int,
    distribution: NoiseDistribution = NoiseDistribution.UNIFORM,
    settings: PipelineSettings = PipelineSettings(),
    workers: int = 1
) -> RobustnessReport:
    """
    Infidelity statistics under independent relative noise on x0, omega_c and g.

    Epsilon is held fixed. Each sample reruns the full pipeline with its
    perturbed parameters. Draws come from numpy's default_rng(seed), so the
    report is reproducible.

    Args:
        p: Unperturbed parameter point
        rel_sigma: Relative noise amplitude in [0, 0.5]
        n_samples: Number of samples (>= 10)
        seed: Random seed
        distribution: Uniform on [-rel_sigma, rel_sigma] or Gaussian with that width
        settings: Pipeline settings
        workers: Worker processes

    Returns:
        RobustnessReport
    """
    if not 0.0 <= rel_sigma <= 0.5:
        raise ValueError(f"rel_sigma must be in [0, 0.5], got {rel_sigma}")
    if n_samples < 10:
        raise ValueError(f"n_samples must be >= 10, got {n_samples}")

    rng = np.random.default_rng(seed)
    if distribution is NoiseDistribution.UNIFORM:
        noise = rng.uniform(-rel_sigma, rel_sigma, size=(n_samples, 3))
    else:
        noise = rng.normal(0.0, rel_sigma, size=(n_samples, 3))
    tasks = [(p, tuple(1.0 + row), settings) for row in noise]

    if workers > 1:
        with Pool(processes=workers) as pool:
            infidelities = pool.map(_evaluate_sample, tasks)
    else:
        infidelities = [_evaluate_sample(task) for task in tasks]

    values = np.asarray(infidelities, dtype=float)
    good = values[~np.isnan(values)]
    if good.size:
        quantiles = dict(zip(quantile_labels(QUANTILE_LEVELS), np.quantile(good, QUANTILE_LEVELS).tolist()))
        mean, maximum, minimum = float(good.mean()), float(good.max()), float(good.min())
    else:
        quantiles = dict.fromkeys(quantile_labels(QUANTILE_LEVELS), math.nan)
        mean = maximum = minimum = math.nan

    report = RobustnessReport(
        mean=mean,
        maximum=maximum,
        minimum=minimum,
        quantiles=quantiles,
        n_samples=n_samples,
        n_failed=int(values.size - good.size),
        infidelities=tuple(float(v) for v in values),
        seed=seed,
        rel_sigma=rel_sigma,
        distribution=distribution
    )
    logger.info(
        f"Robustness: {n_samples} samples at rel_sigma={rel_sigma}: "
        f"mean={mean:.3e} max={maximum:.3e} failed={report.n_failed}"
    )
    return report
