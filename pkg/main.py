"""Command line interface for the language diversity simulator."""

from __future__ import annotations

import argparse
import logging
from pathlib import Path
from typing import Any, Dict, List, Optional

from language_diversity.commands import EXIT_FAILURE, cmd_cluster, cmd_fit, cmd_run, cmd_sweep
from language_diversity.config import ConfigError, RunConfig, apply_overrides, load_config, parse_override

logger = logging.getLogger("language_diversity.cli")


def _add_common_options(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--config", type=Path, default=None, help="Path to the YAML/JSON configuration file")
    parser.add_argument("--seed", type=int, default=None, help="Base random seed (unsigned 64-bit)")
    parser.add_argument("--out-dir", type=Path, default=None, help="Directory receiving output files")
    parser.add_argument("--realizations", type=int, default=None, help="Realizations per run or sweep cell")
    parser.add_argument("--generations", type=int, default=None, help="Generations per realization")
    parser.add_argument("--workers", type=int, default=None, help="Worker processes for realizations")
    parser.add_argument(
        "--set",
        dest="overrides",
        action="append",
        default=[],
        metavar="KEY=VALUE",
        help="Override any configuration key; may be repeated",
    )
    parser.add_argument("--verbose", action="store_true", help="Log per-generation details")


def parse_args(argv: Optional[List[str]] = None) -> argparse.Namespace:
    parser = argparse.ArgumentParser(
        description="Generational language evolution with parent-oriented teacher selection"
    )
    commands = parser.add_subparsers(dest="command", required=True)

    run_parser = commands.add_parser("run", help="Run realizations of one model configuration")
    _add_common_options(run_parser)

    sweep_parser = commands.add_parser("sweep", help="Average realizations over model, N and r grids")
    _add_common_options(sweep_parser)

    cluster_parser = commands.add_parser("cluster", help="Find language communities in a cache file")
    cluster_parser.add_argument("cache", type=Path, help="Comprehension matrix file with an N=<n> header")
    _add_common_options(cluster_parser)

    fit_parser = commands.add_parser("fit", help="Fit K* proportional to r^-gamma from a sweep summary")
    fit_parser.add_argument("summary", type=Path, help="Sweep summary CSV produced by the sweep command")
    _add_common_options(fit_parser)

    return parser.parse_args(argv)


def build_config(args: argparse.Namespace) -> RunConfig:
    """Layer configuration: file, then ``--set`` overrides, then dedicated flags."""

    config = load_config(args.config)
    overrides: Dict[str, Any] = dict(parse_override(item) for item in args.overrides)
    flags = {
        "seed": args.seed,
        "out_dir": None if args.out_dir is None else str(args.out_dir),
        "realizations": args.realizations,
        "generations": args.generations,
        "workers": args.workers,
    }
    overrides.update({key: value for key, value in flags.items() if value is not None})
    return apply_overrides(config, overrides)


def main(argv: Optional[List[str]] = None) -> int:
    args = parse_args(argv)
    logging.basicConfig(
        level=logging.DEBUG if args.verbose else logging.INFO,
        format="%(asctime)s %(levelname)s %(name)s: %(message)s",
    )
    try:
        config = build_config(args)
    except (ConfigError, ValueError, OSError) as error:
        logger.error("%s", error)
        return EXIT_FAILURE

    if args.command == "run":
        return cmd_run(config)
    if args.command == "sweep":
        return cmd_sweep(config)
    if args.command == "cluster":
        return cmd_cluster(args.cache, config)
    return cmd_fit(args.summary, config)


if __name__ == "__main__":  # pragma: no cover - CLI entry point
    raise SystemExit(main())
