"""Realization runner, parameter sweeps and power-law fitting."""

from __future__ import annotations

import logging
import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field, replace
from typing import Dict, Iterable, List, Optional, Sequence, Tuple

import numpy as np
from numpy.lib.stride_tricks import sliding_window_view
from scipy import stats

from .clustering import find_optimum
from .evolution import ModelParams, Population, Strategy, init_population, step_generation
from .language import ComprehensionCache
from .random_streams import RandomStreams, derive_seed

logger = logging.getLogger(__name__)

DEFAULT_R_GRID: Tuple[float, ...] = (0.01, 0.02, 0.03, 0.05, 0.07, 0.1, 0.15, 0.2, 0.3, 0.4, 0.5, 0.7)
DEFAULT_N_VALUES: Tuple[int, ...] = (50, 100, 150, 200)
R_KEY_SCALE = 1_000_000


@dataclass(frozen=True)
class AnalysisOptions:
    """How the final generation of a realization is analysed."""

    k_min: int = 1
    k_max: int = 10
    restarts: int = 10
    max_passes: int = 100
    exclude_self_in_assignment: bool = True
    steady_window: int = 50
    steady_tol: float = 0.02


@dataclass(frozen=True)
class RealizationResult:
    params: ModelParams
    w_trajectory: Tuple[float, ...]
    final_w: float
    k_star: int
    w_star: float
    i_star: Optional[float]
    w_min: Optional[float] = None
    community_sizes: Tuple[int, ...] = ()
    steady_generation: Optional[int] = None
    final_cache: Optional[ComprehensionCache] = field(default=None, repr=False, compare=False)


@dataclass(frozen=True)
class SweepRow:
    model: Strategy
    n: int
    r: Optional[float]
    imitation_size: Optional[int]
    realizations: int
    mean_w: float
    se_w: float
    mean_w_star: float
    se_w_star: float
    mean_i_star: float
    se_i_star: float
    i_star_count: int
    mean_k_star: float
    se_k_star: float

    @property
    def sort_key(self) -> Tuple[int, int, float]:
        return (self.model.order, self.n, -1.0 if self.r is None else self.r)


@dataclass
class SweepSummary:
    rows: List[SweepRow] = field(default_factory=list)
    realizations: List[RealizationResult] = field(default_factory=list)

    def rows_for(self, model: Strategy, n: Optional[int] = None) -> List[SweepRow]:
        return [row for row in self.rows if row.model is model and (n is None or row.n == n)]


@dataclass(frozen=True)
class PowerLawFit:
    gamma: float
    intercept: float
    r_cutoff: float
    r_squared: float
    n_points: int


def steady_state_generation(trajectory: Sequence[float], window: int, tol: float) -> Optional[int]:
    """First generation from which W(P) stays within ``tol`` for ``window`` generations."""

    if window < 2:
        raise ValueError(f"Steady-state window must be at least 2, got {window}")
    values = np.asarray(trajectory, dtype=np.float64)
    if values.size < window:
        return None
    windows = sliding_window_view(values, window)
    spans = windows.max(axis=1) - windows.min(axis=1)
    settled = np.flatnonzero(spans <= tol)
    return int(settled[0]) if settled.size else None


def run_realization(
    params: ModelParams,
    options: AnalysisOptions = AnalysisOptions(),
    keep_cache: bool = False,
) -> RealizationResult:
    """Evolve one population and cluster its final generation."""

    streams = RandomStreams(params.seed)
    population: Population = init_population(params, streams.for_init())
    trajectory = [population.overall_comprehension()]
    for _ in range(params.generations):
        population = step_generation(population, params, streams)
        trajectory.append(population.overall_comprehension())
        logger.debug("Generation %s: W(P)=%.6f", population.generation, trajectory[-1])

    k_max = min(options.k_max, params.n)
    optimum = find_optimum(
        population.cache,
        min(options.k_min, k_max),
        k_max,
        options.restarts,
        streams.for_clustering(),
        max_passes=options.max_passes,
        exclude_self=options.exclude_self_in_assignment,
    )
    logger.info(
        "Realization %s seed=%s N=%s r=%s finished: W(P)=%.4f K*=%s W*=%.4f",
        params.strategy.value,
        params.seed,
        params.n,
        params.r_rel,
        trajectory[-1],
        optimum.k_star,
        optimum.w_star,
    )
    return RealizationResult(
        params=params,
        w_trajectory=tuple(trajectory),
        final_w=trajectory[-1],
        k_star=optimum.k_star,
        w_star=optimum.w_star,
        i_star=optimum.i_star,
        w_min=optimum.w_min,
        community_sizes=tuple(optimum.partition.sizes()),
        steady_generation=steady_state_generation(trajectory, options.steady_window, options.steady_tol),
        final_cache=population.cache if keep_cache else None,
    )


def _mean_and_se(values: Sequence[float]) -> Tuple[float, float]:
    if not values:
        return math.nan, math.nan
    data = np.asarray(values, dtype=np.float64)
    if data.size < 2:
        return float(data.mean()), math.nan
    return float(data.mean()), float(data.std(ddof=1) / math.sqrt(data.size))


def aggregate_cell(
    model: Strategy,
    n: int,
    r: Optional[float],
    imitation_size: Optional[int],
    results: Sequence[RealizationResult],
) -> SweepRow:
    """Average one sweep cell; I* only counts realizations with at least two communities."""

    mean_w, se_w = _mean_and_se([result.final_w for result in results])
    mean_w_star, se_w_star = _mean_and_se([result.w_star for result in results])
    i_values = [result.i_star for result in results if result.k_star >= 2 and result.i_star is not None]
    mean_i_star, se_i_star = _mean_and_se(i_values)
    mean_k_star, se_k_star = _mean_and_se([float(result.k_star) for result in results])
    return SweepRow(
        model=model,
        n=n,
        r=r,
        imitation_size=imitation_size,
        realizations=len(results),
        mean_w=mean_w,
        se_w=se_w,
        mean_w_star=mean_w_star,
        se_w_star=se_w_star,
        mean_i_star=mean_i_star,
        se_i_star=se_i_star,
        i_star_count=len(i_values),
        mean_k_star=mean_k_star,
        se_k_star=se_k_star,
    )


@dataclass(frozen=True)
class _Cell:
    model: Strategy
    n: int
    r_index: int
    r: Optional[float]

    @property
    def r_key(self) -> int:
        """r in millionths, so seeds follow the value rather than its grid position."""

        return 0 if self.r is None else int(round(self.r * R_KEY_SCALE))


def _cells(models: Iterable[Strategy], n_values: Iterable[int], r_grid: Sequence[float]) -> List[_Cell]:
    cells: List[_Cell] = []
    for model in dict.fromkeys(Strategy(model) for model in models):
        for n in dict.fromkeys(n_values):
            if model is Strategy.BASE:
                cells.append(_Cell(model, n, 0, None))
                continue
            cells.extend(_Cell(model, n, index, r) for index, r in enumerate(r_grid))
    return sorted(cells, key=lambda cell: (cell.model.order, cell.n, cell.r_key, cell.r_index))


def _run_task(task: Tuple[ModelParams, AnalysisOptions, bool]) -> RealizationResult:
    params, options, keep_cache = task
    return run_realization(params, options, keep_cache)


def run_realizations(
    params_list: Sequence[ModelParams],
    options: AnalysisOptions = AnalysisOptions(),
    workers: int = 1,
    keep_cache: bool = False,
) -> List[RealizationResult]:
    """Run independent realizations, in worker processes when ``workers > 1``; results keep input order."""

    tasks = [(params, options, keep_cache) for params in params_list]
    if workers > 1 and len(tasks) > 1:
        with ProcessPoolExecutor(max_workers=workers) as executor:
            return list(executor.map(_run_task, tasks, chunksize=1))
    return [_run_task(task) for task in tasks]


def run_sweep(
    models: Iterable[Strategy],
    n_values: Iterable[int],
    r_grid: Sequence[float],
    realizations: int,
    base_seed: int,
    base_params: ModelParams = ModelParams(),
    options: AnalysisOptions = AnalysisOptions(),
    workers: int = 1,
) -> SweepSummary:
    """Run every (model, N, r) cell ``realizations`` times and average the results.

    Realization seeds come from ``derive_seed(base_seed, model, N, r_key,
    realization)`` with r_key the value of r in millionths, so a cell's numbers
    depend neither on the grid around it nor on how many workers share the
    load. BASE ignores r and gets one cell per N.
    """

    if realizations < 1:
        raise ValueError(f"realizations must be at least 1, got {realizations}")
    cells = _cells(models, n_values, r_grid)
    if not cells:
        raise ValueError("A sweep needs at least one model, one N and one r value")

    params_list: List[ModelParams] = []
    owners: List[_Cell] = []
    for cell in cells:
        for realization in range(realizations):
            seed = derive_seed(base_seed, cell.model.order, cell.n, cell.r_key, realization)
            params = replace(
                base_params,
                n=cell.n,
                strategy=cell.model,
                r_rel=1.0 if cell.r is None else cell.r,
                seed=seed,
            )
            params_list.append(params)
            owners.append(cell)
    logger.info("Sweep: %s cells x %s realizations on %s worker(s)", len(cells), realizations, workers)

    results = run_realizations(params_list, options, workers)

    grouped: Dict[_Cell, List[RealizationResult]] = {cell: [] for cell in cells}
    for cell, result in zip(owners, results):
        grouped[cell].append(result)

    summary = SweepSummary()
    for cell, cell_results in grouped.items():
        imitation_size = None if cell.r is None else cell_results[0].params.imitation_size
        summary.rows.append(aggregate_cell(cell.model, cell.n, cell.r, imitation_size, cell_results))
        summary.realizations.extend(cell_results)
        logger.info("Cell %s N=%s r=%s done", cell.model.value, cell.n, cell.r)
    summary.rows.sort(key=lambda row: row.sort_key)
    return summary


def fit_power_law(points: Iterable[Tuple[float, float]], r_cutoff: float = 0.03) -> PowerLawFit:
    """Least-squares line through (log r, log K*) for r above the cutoff; gamma is minus the slope."""

    usable = [(float(r), float(k)) for r, k in points if r > r_cutoff and k >= 1 and r > 0]
    if len(usable) < 2:
        raise ValueError(
            f"Power-law fit needs at least 2 points with r > {r_cutoff} and K* >= 1, got {len(usable)}"
        )
    log_r = np.log([r for r, _ in usable])
    log_k = np.log([k for _, k in usable])
    regression = stats.linregress(log_r, log_k)
    return PowerLawFit(
        gamma=-float(regression.slope),
        intercept=float(regression.intercept),
        r_cutoff=r_cutoff,
        r_squared=float(regression.rvalue) ** 2,
        n_points=len(usable),
    )


__all__ = [
    "AnalysisOptions",
    "DEFAULT_N_VALUES",
    "DEFAULT_R_GRID",
    "PowerLawFit",
    "RealizationResult",
    "SweepRow",
    "SweepSummary",
    "aggregate_cell",
    "fit_power_law",
    "run_realization",
    "run_realizations",
    "run_sweep",
    "steady_state_generation",
]
