"""
halfmaxent - q=1/2 MaxEnt reconstruction from redundant linear constraints.
Entry point for the command line.

Usage:
    python main.py gen --spec example2 --out data.json
    python main.py preselect --data data.json --tol 1e-10 --out pool.json
    python main.py fit --data data.json --pool pool.json --t 1.1 --out fit.json --report fit_report.json
    python main.py prune --data data.json --state fit.json --t 2.0 --out pruned.json --report prune_report.json
    python main.py predict --data data.json --state pruned.json --out distribution.csv
"""

import argparse
import sys
from pathlib import Path
from typing import List, Optional

from loguru import logger
from pydantic import ValidationError

from config.settings import settings
from controllers.pipeline_controller import PipelineController
from models.schemas import MeasureMode
from utils.exceptions import DatasetError, HalfMaxEntError, UsageError

MEASURES = {
    "uniform": MeasureMode.UNIFORM,
    "inverse-variance": MeasureMode.INVERSE_VARIANCE,
}


def configure_logging():
    """Send log messages to stderr, and to a rotating file when enabled."""
    logger.remove()
    logger.add(
        sys.stderr,
        format="{time:YYYY-MM-DD HH:mm:ss} | {level: <8} | {message}",
        level=settings.LOG_LEVEL,
    )
    if settings.LOG_TO_FILE:
        logger.add(
            settings.LOG_DIR / "halfmaxent.log",
            format="{time:YYYY-MM-DD HH:mm:ss} | {level: <8} | {name}:{function}:{line} - {message}",
            level="DEBUG",
            rotation="10 MB",
        )


class _Parser(argparse.ArgumentParser):
    """Argument parser that raises instead of exiting."""

    def error(self, message):
        raise UsageError(message)


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="halfmaxent", description=__doc__.strip().splitlines()[0])
    parser.add_argument("--version", action="version", version=f"%(prog)s {settings.APP_VERSION}")
    parser.add_argument("--output-dir", type=Path, default=None, help="directory for relative output paths")
    commands = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    gen = commands.add_parser("gen", help="generate a synthetic dataset")
    gen.add_argument("--spec", required=True, help="experiment spec file or built-in name (example1, example2)")
    gen.add_argument("--out", required=True, type=Path)
    gen.add_argument("--seed", type=int, default=None)
    gen.add_argument("--report", type=Path, default=None)

    pre = commands.add_parser("preselect", help="data-independent constraint pool")
    pre.add_argument("--data", required=True, type=Path)
    pre.add_argument("--tol", type=float, default=None)
    pre.add_argument("--measure", choices=sorted(MEASURES), default=None)
    pre.add_argument("--out", required=True, type=Path)
    pre.add_argument("--report", type=Path, default=None)

    fit = commands.add_parser("fit", help="forward constraint selection")
    fit.add_argument("--data", required=True, type=Path)
    fit.add_argument("--pool", type=Path, default=None)
    fit.add_argument("--t", type=float, default=settings.DEFAULT_FORWARD_T)
    fit.add_argument("--measure", choices=sorted(MEASURES), default=None)
    fit.add_argument("--max-k", type=int, default=None)
    fit.add_argument("--epsilon2", type=float, default=None)
    fit.add_argument("--out", required=True, type=Path)
    fit.add_argument("--report", required=True, type=Path)

    prune = commands.add_parser("prune", help="backward multiplier pruning")
    prune.add_argument("--data", required=True, type=Path)
    prune.add_argument("--state", required=True, type=Path)
    prune.add_argument("--t", type=float, default=settings.DEFAULT_PRUNE_T)
    prune.add_argument("--epsilon2", type=float, default=None)
    prune.add_argument("--out", required=True, type=Path)
    prune.add_argument("--report", required=True, type=Path)

    predict = commands.add_parser("predict", help="write the reconstructed distribution")
    predict.add_argument("--data", required=True, type=Path)
    predict.add_argument("--state", required=True, type=Path)
    predict.add_argument("--out", required=True, type=Path)
    predict.add_argument("--data-out", type=Path, default=None)
    predict.add_argument("--report", type=Path, default=None)

    return parser


def dispatch(args: argparse.Namespace) -> None:
    controller = PipelineController(args.output_dir)
    measure = MEASURES[args.measure] if getattr(args, "measure", None) else None

    if args.command == "gen":
        dataset = controller.generate(args.spec, args.out, seed=args.seed, report=args.report)
        logger.info(f"Generated dataset M={dataset.M}, N={dataset.N} -> {args.out}")
    elif args.command == "preselect":
        result = controller.preselect(args.data, args.out, tol=args.tol, measure=measure, report=args.report)
        logger.info(f"Pool of {len(result.pool)} constraints ({result.status}) -> {args.out}")
    elif args.command == "fit":
        result = controller.fit(
            args.data, args.out, args.report, pool=args.pool, t=args.t,
            measure=measure, max_k=args.max_k, epsilon2=args.epsilon2,
        )
        logger.info(f"Fit k={result.state.k} ({result.stop_reason.value}), residual2={result.residual2:.6g}")
    elif args.command == "prune":
        result = controller.prune(args.data, args.state, args.out, args.report, t=args.t, epsilon2=args.epsilon2)
        logger.info(f"Pruned to k={result.state.k} ({result.stop_reason.value}), residual2={result.residual2:.6g}")
    elif args.command == "predict":
        controller.predict(args.data, args.state, args.out, data_out=args.data_out, report=args.report)
        logger.info(f"Distribution -> {args.out}")


def run(argv: Optional[List[str]] = None) -> int:
    """Run the command line and return the process exit code."""
    configure_logging()
    try:
        args = build_parser().parse_args(argv)
        dispatch(args)
    except SystemExit as e:
        # --help and --version
        return int(e.code or 0)
    except HalfMaxEntError as e:
        logger.error(str(e))
        return e.exit_code
    except ValidationError as e:
        logger.error(f"invalid input: {e}")
        return DatasetError.exit_code
    return 0


if __name__ == "__main__":
    sys.exit(run())
