"""Generational language evolution with parent-oriented teacher selection."""

from importlib.metadata import PackageNotFoundError, version

from .clustering import Partition, find_optimum, kmeans_language
from .evolution import ModelParams, Strategy
from .experiments import AnalysisOptions, fit_power_law, run_realization, run_sweep

try:
    __version__ = version("language_diversity")
except PackageNotFoundError:  # pragma: no cover - running from a source checkout
    __version__ = "0.1.0"

__all__ = [
    "AnalysisOptions",
    "ModelParams",
    "Partition",
    "Strategy",
    "__version__",
    "find_optimum",
    "fit_power_law",
    "kmeans_language",
    "run_realization",
    "run_sweep",
]
