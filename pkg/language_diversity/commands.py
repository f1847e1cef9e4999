"""Subcommand implementations behind the command line interface."""

from __future__ import annotations

import functools
import logging
from dataclasses import replace
from pathlib import Path
from typing import Callable, Dict, List, Tuple, TypeVar

from .clustering import find_optimum
from .config import ConfigError, RunConfig
from .evolution import Strategy
from .experiments import PowerLawFit, fit_power_law, run_realizations, run_sweep
from .random_streams import RandomStreams, derive_seed
from .results_io import (
    ResultFormatError,
    read_cache_file,
    read_sweep_csv,
    write_cache_file,
    write_fit_csv,
    write_optimum_json,
    write_realizations_jsonl,
    write_sweep_csv,
    write_trajectory_csv,
)

logger = logging.getLogger(__name__)

EXIT_OK = 0
EXIT_FAILURE = 1

SWEEP_FILE = "sweep.csv"
REALIZATIONS_FILE = "realizations.jsonl"
TRAJECTORY_FILE = "trajectory.csv"
CACHE_FILE = "cache.csv"
OPTIMUM_FILE = "optimum.json"
FIT_FILE = "fit.csv"

F = TypeVar("F", bound=Callable[..., int])


def _reports_failures(command: F) -> F:
    """Turn expected failures into a logged error and a non-zero exit status."""

    @functools.wraps(command)
    def wrapper(*args, **kwargs):  # type: ignore[no-untyped-def]
        try:
            return command(*args, **kwargs)
        except (ConfigError, ResultFormatError) as error:
            logger.error("%s", error)
        except ValueError as error:
            logger.error("Invalid input: %s", error)
        except OSError as error:
            logger.error("I/O failure: %s", error)
        return EXIT_FAILURE

    return wrapper  # type: ignore[return-value]


@_reports_failures
def cmd_run(config: RunConfig) -> int:
    """Run ``config.realizations`` realizations of the configured model."""

    base = config.model_params()
    params_list = [
        replace(base, seed=derive_seed(config.seed, index)) for index in range(config.realizations)
    ]
    results = run_realizations(
        params_list, config.analysis_options(), workers=config.workers, keep_cache=True
    )
    if "jsonl" in config.formats:
        write_realizations_jsonl(config.out_dir / REALIZATIONS_FILE, results)
    if "csv" in config.formats:
        write_trajectory_csv(config.out_dir / TRAJECTORY_FILE, results)
        first_cache = results[0].final_cache
        if first_cache is not None:
            write_cache_file(config.out_dir / CACHE_FILE, first_cache)
    return EXIT_OK


@_reports_failures
def cmd_sweep(config: RunConfig) -> int:
    """Average every (model, N, r) cell of the configured grids."""

    summary = run_sweep(
        config.models,
        config.n_values,
        config.r_grid,
        config.realizations,
        config.seed,
        base_params=config.model_params(),
        options=config.analysis_options(),
        workers=config.workers,
    )
    if "csv" in config.formats:
        write_sweep_csv(config.out_dir / SWEEP_FILE, summary.rows)
    if "jsonl" in config.formats:
        write_realizations_jsonl(config.out_dir / REALIZATIONS_FILE, summary.realizations)
    return EXIT_OK


@_reports_failures
def cmd_cluster(cache_path: Path, config: RunConfig) -> int:
    """Find the optimum community structure of a stored comprehension matrix."""

    cache = read_cache_file(cache_path)
    k_max = min(config.k_max, cache.n)
    optimum = find_optimum(
        cache,
        min(config.k_min, k_max),
        k_max,
        config.restarts,
        RandomStreams(config.seed).for_clustering(),
        max_passes=config.max_passes,
        exclude_self=config.exclude_self_in_assignment,
    )
    logger.info("Optimum community count K*=%s with W*=%.4f", optimum.k_star, optimum.w_star)
    write_optimum_json(config.out_dir / OPTIMUM_FILE, optimum)
    return EXIT_OK


@_reports_failures
def cmd_fit(summary_path: Path, config: RunConfig) -> int:
    """Fit K* against r for every (model, N) group of a sweep summary."""

    groups: Dict[Tuple[Strategy, int], List[Tuple[float, float]]] = {}
    for row in read_sweep_csv(summary_path):
        if row.model is Strategy.BASE or row.r is None:
            continue
        groups.setdefault((row.model, row.n), []).append((row.r, row.mean_k_star))
    if not groups:
        raise ValueError(f"{summary_path} has no rows with an imitation set to fit")

    fits: List[Tuple[Strategy, int, PowerLawFit]] = []
    failed = 0
    for (model, n), points in sorted(groups.items(), key=lambda item: (item[0][0].order, item[0][1])):
        try:
            fit = fit_power_law(points, config.r_cutoff)
        except ValueError as error:
            logger.warning("Skipping %s N=%s: %s", model.value, n, error)
            failed += 1
            continue
        logger.info("%s N=%s: gamma=%.4f (R^2=%.3f, %s points)", model.value, n, fit.gamma, fit.r_squared, fit.n_points)
        fits.append((model, n, fit))
    write_fit_csv(config.out_dir / FIT_FILE, fits)
    return EXIT_FAILURE if failed else EXIT_OK


__all__ = [
    "CACHE_FILE",
    "EXIT_FAILURE",
    "EXIT_OK",
    "FIT_FILE",
    "OPTIMUM_FILE",
    "REALIZATIONS_FILE",
    "SWEEP_FILE",
    "TRAJECTORY_FILE",
    "cmd_cluster",
    "cmd_fit",
    "cmd_run",
    "cmd_sweep",
]
