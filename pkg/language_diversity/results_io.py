"""Bit-stable readers and writers for result tables, records and cache files."""

from __future__ import annotations

import csv
import io
import json
import logging
import math
from pathlib import Path
from typing import Any, Dict, Iterable, List, Optional, Sequence, Tuple

import numpy as np
from atomicwrites import atomic_write

from .clustering import OptimumResult
from .evolution import Strategy
from .experiments import PowerLawFit, RealizationResult, SweepRow
from .language import ComprehensionCache

logger = logging.getLogger(__name__)

SWEEP_HEADER: Tuple[str, ...] = (
    "model",
    "N",
    "r",
    "R",
    "realizations",
    "mean_w",
    "se_w",
    "mean_w_star",
    "se_w_star",
    "mean_i_star",
    "se_i_star",
    "i_star_count",
    "mean_k_star",
    "se_k_star",
)
FIT_HEADER: Tuple[str, ...] = ("model", "N", "gamma", "intercept", "r_cutoff", "r_squared", "n_points")
TRAJECTORY_HEADER: Tuple[str, ...] = ("generation", "mean_w", "se_w")


class ResultFormatError(ValueError):
    """Raised when a result or cache file cannot be parsed."""

    def __init__(self, path: Path, line: int, reason: str) -> None:
        super().__init__(f"{path}:{line}: {reason}")
        self.path = path
        self.line = line


def format_real(value: Optional[float]) -> str:
    """Six significant digits in fixed notation; ``nan`` for undefined values."""

    if value is None or math.isnan(value):
        return "nan"
    return np.format_float_positional(value, precision=6, unique=False, fractional=False, trim="k")


def write_text(path: Path, text: str) -> Path:
    path.parent.mkdir(parents=True, exist_ok=True)
    with atomic_write(path, mode="w", overwrite=True, encoding="utf-8", newline="") as handle:
        handle.write(text)
    logger.info("Wrote %s", path)
    return path


def _csv_text(header: Sequence[str], rows: Iterable[Sequence[str]]) -> str:
    buffer = io.StringIO()
    writer = csv.writer(buffer, lineterminator="\n")
    writer.writerow(header)
    writer.writerows(rows)
    return buffer.getvalue()


def _read_csv(path: Path, header: Sequence[str]) -> List[Tuple[int, List[str]]]:
    rows = list(csv.reader(io.StringIO(path.read_text(encoding="utf-8"))))
    if not rows or tuple(rows[0]) != tuple(header):
        raise ResultFormatError(path, 1, f"expected header {','.join(header)}")
    parsed: List[Tuple[int, List[str]]] = []
    for line, row in enumerate(rows[1:], start=2):
        if not row:
            continue
        if len(row) != len(header):
            raise ResultFormatError(path, line, f"expected {len(header)} fields, got {len(row)}")
        parsed.append((line, row))
    return parsed


def sweep_row_fields(row: SweepRow) -> List[str]:
    return [
        row.model.value,
        str(row.n),
        "" if row.r is None else format_real(row.r),
        "" if row.imitation_size is None else str(row.imitation_size),
        str(row.realizations),
        format_real(row.mean_w),
        format_real(row.se_w),
        format_real(row.mean_w_star),
        format_real(row.se_w_star),
        format_real(row.mean_i_star),
        format_real(row.se_i_star),
        str(row.i_star_count),
        format_real(row.mean_k_star),
        format_real(row.se_k_star),
    ]


def sweep_csv_text(rows: Iterable[SweepRow]) -> str:
    ordered = sorted(rows, key=lambda row: row.sort_key)
    return _csv_text(SWEEP_HEADER, (sweep_row_fields(row) for row in ordered))


def write_sweep_csv(path: Path, rows: Iterable[SweepRow]) -> Path:
    return write_text(path, sweep_csv_text(rows))


def read_sweep_csv(path: Path) -> List[SweepRow]:
    rows: List[SweepRow] = []
    for line, values in _read_csv(path, SWEEP_HEADER):
        record = dict(zip(SWEEP_HEADER, values))
        try:
            rows.append(
                SweepRow(
                    model=Strategy(record["model"]),
                    n=int(record["N"]),
                    r=float(record["r"]) if record["r"] else None,
                    imitation_size=int(record["R"]) if record["R"] else None,
                    realizations=int(record["realizations"]),
                    mean_w=float(record["mean_w"]),
                    se_w=float(record["se_w"]),
                    mean_w_star=float(record["mean_w_star"]),
                    se_w_star=float(record["se_w_star"]),
                    mean_i_star=float(record["mean_i_star"]),
                    se_i_star=float(record["se_i_star"]),
                    i_star_count=int(record["i_star_count"]),
                    mean_k_star=float(record["mean_k_star"]),
                    se_k_star=float(record["se_k_star"]),
                )
            )
        except ValueError as error:
            raise ResultFormatError(path, line, str(error)) from error
    return rows


def realization_record(result: RealizationResult) -> Dict[str, Any]:
    params = result.params
    return {
        "model": params.strategy.value,
        "n": params.n,
        "m": params.m,
        "s": params.s,
        "q": params.q,
        "r": params.r_rel if params.strategy.uses_imitation_set else None,
        "R": params.imitation_size if params.strategy.uses_imitation_set else None,
        "generations": params.generations,
        "include_parent": params.include_parent,
        "fitness_includes_self": params.fitness_includes_self,
        "seed": params.seed,
        "final_w": result.final_w,
        "k_star": result.k_star,
        "w_star": result.w_star,
        "i_star": result.i_star,
        "w_min": result.w_min,
        "community_sizes": list(result.community_sizes),
        "steady_generation": result.steady_generation,
        "w_trajectory": list(result.w_trajectory),
    }


def dump_record(record: Dict[str, Any]) -> str:
    return json.dumps(record, sort_keys=True, allow_nan=False)


def write_realizations_jsonl(path: Path, results: Iterable[RealizationResult]) -> Path:
    lines = [dump_record(realization_record(result)) + "\n" for result in results]
    return write_text(path, "".join(lines))


def read_jsonl(path: Path) -> List[Dict[str, Any]]:
    records: List[Dict[str, Any]] = []
    for line, text in enumerate(path.read_text(encoding="utf-8").splitlines(), start=1):
        if not text.strip():
            continue
        try:
            record = json.loads(text)
        except json.JSONDecodeError as error:
            raise ResultFormatError(path, line, f"malformed JSON record: {error}") from error
        if not isinstance(record, dict):
            raise ResultFormatError(path, line, "expected a JSON object")
        records.append(record)
    return records


def write_trajectory_csv(path: Path, results: Sequence[RealizationResult]) -> Path:
    """Mean and standard error of W(P) per generation across realizations."""

    trajectories = np.array([result.w_trajectory for result in results], dtype=np.float64)
    rows = []
    for generation in range(trajectories.shape[1]):
        column = trajectories[:, generation]
        se = float(column.std(ddof=1) / math.sqrt(column.size)) if column.size > 1 else math.nan
        rows.append([str(generation), format_real(float(column.mean())), format_real(se)])
    return write_text(path, _csv_text(TRAJECTORY_HEADER, rows))


def fit_row_fields(model: Strategy, n: int, fit: PowerLawFit) -> List[str]:
    return [
        model.value,
        str(n),
        format_real(fit.gamma),
        format_real(fit.intercept),
        format_real(fit.r_cutoff),
        format_real(fit.r_squared),
        str(fit.n_points),
    ]


def write_fit_csv(path: Path, fits: Iterable[Tuple[Strategy, int, PowerLawFit]]) -> Path:
    ordered = sorted(fits, key=lambda item: (item[0].order, item[1]))
    return write_text(path, _csv_text(FIT_HEADER, (fit_row_fields(*item) for item in ordered)))


def read_fit_csv(path: Path) -> List[Tuple[Strategy, int, PowerLawFit]]:
    fits: List[Tuple[Strategy, int, PowerLawFit]] = []
    for line, values in _read_csv(path, FIT_HEADER):
        record = dict(zip(FIT_HEADER, values))
        try:
            fit = PowerLawFit(
                gamma=float(record["gamma"]),
                intercept=float(record["intercept"]),
                r_cutoff=float(record["r_cutoff"]),
                r_squared=float(record["r_squared"]),
                n_points=int(record["n_points"]),
            )
            fits.append((Strategy(record["model"]), int(record["N"]), fit))
        except ValueError as error:
            raise ResultFormatError(path, line, str(error)) from error
    return fits


def cache_text(cache: ComprehensionCache) -> str:
    lines = [f"N={cache.n}"]
    lines.extend(",".join(repr(float(value)) for value in row) for row in cache.f)
    return "\n".join(lines) + "\n"


def write_cache_file(path: Path, cache: ComprehensionCache) -> Path:
    return write_text(path, cache_text(cache))


def read_cache_file(path: Path) -> ComprehensionCache:
    """Read an ``N=<n>`` header followed by N comma-separated rows of F values."""

    lines = [line.strip() for line in path.read_text(encoding="utf-8").splitlines()]
    lines = [line for line in lines if line]
    if not lines or not lines[0].startswith("N="):
        raise ResultFormatError(path, 1, "expected an 'N=<n>' header")
    try:
        n = int(lines[0][2:])
    except ValueError as error:
        raise ResultFormatError(path, 1, f"invalid population size: {lines[0][2:]!r}") from error
    if n < 1 or len(lines) - 1 != n:
        raise ResultFormatError(path, 1, f"header declares {n} rows, found {len(lines) - 1}")
    rows = []
    for line, text in enumerate(lines[1:], start=2):
        try:
            row = [float(value) for value in text.split(",")]
        except ValueError as error:
            raise ResultFormatError(path, line, str(error)) from error
        if len(row) != n:
            raise ResultFormatError(path, line, f"expected {n} values, got {len(row)}")
        rows.append(row)
    try:
        return ComprehensionCache.from_mutual(rows)
    except ValueError as error:
        raise ResultFormatError(path, 2, str(error)) from error


def optimum_record(optimum: OptimumResult) -> Dict[str, Any]:
    return {
        "k_star": optimum.k_star,
        "w_star": optimum.w_star,
        "i_star": optimum.i_star,
        "w_min": optimum.w_min,
        "community_sizes": optimum.partition.sizes(),
        "partition": optimum.partition.as_lists(),
        "scan": [{"k": k, "w": w} for k, w in optimum.scan],
    }


def write_optimum_json(path: Path, optimum: OptimumResult) -> Path:
    return write_text(path, json.dumps(optimum_record(optimum), sort_keys=True, indent=2) + "\n")


__all__ = [
    "FIT_HEADER",
    "ResultFormatError",
    "SWEEP_HEADER",
    "TRAJECTORY_HEADER",
    "cache_text",
    "dump_record",
    "fit_row_fields",
    "format_real",
    "optimum_record",
    "read_cache_file",
    "read_fit_csv",
    "read_jsonl",
    "read_sweep_csv",
    "realization_record",
    "sweep_csv_text",
    "sweep_row_fields",
    "write_cache_file",
    "write_fit_csv",
    "write_optimum_json",
    "write_realizations_jsonl",
    "write_sweep_csv",
    "write_text",
    "write_trajectory_csv",
]
