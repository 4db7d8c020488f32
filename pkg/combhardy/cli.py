import argparse
import logging
import sys
from typing import List, Optional

from combhardy.config import load_settings
from combhardy.core import COMMANDS, run_command
from combhardy.errors import CombHardyError
from combhardy.utils import setup_logger


def _floats(text: str) -> List[float]:
    try:
        return [float(v) for v in text.split(',') if v.strip()]
    except ValueError as e:
        raise argparse.ArgumentTypeError(f"expected comma-separated numbers, got {text!r}") from e


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog='combhardy',
        description="Hardy number diagnostics for comb domains: bounds, classification, grid oracle, exit times.",
    )
    parser.add_argument("command", choices=COMMANDS, help="Pipeline to run; 'report' chains all four.")
    parser.add_argument("--spec", type=str, required=True, help="Path to the JSON comb spec.")
    parser.add_argument("--out", type=str, required=True, help="Output directory, created if missing.")
    parser.add_argument("--n", type=int, default=None, help="Truncation depth N; overrides the spec file.")
    parser.add_argument("--radii", type=_floats, default=None, help="Comma-separated radii for 'qh'.")
    parser.add_argument("--cell", type=float, default=None, help="Grid cell size, below 1/4.")
    parser.add_argument("--clip", type=float, default=None, help="Clip radius of the grid domain.")
    parser.add_argument("--max_height", type=float, default=None, help="Clip |Im z| of the grid domain.")
    parser.add_argument("--samples", type=int, default=None, help="Number of Brownian paths.")
    parser.add_argument("--p", type=_floats, default=None, help="Comma-separated moment orders.")
    parser.add_argument("--seed", type=int, default=None, help="Root seed of the path RNG streams.")
    parser.add_argument("--thetas", type=_floats, default=None, help="Comma-separated thetas in (0, 1) for Explicit specs.")
    parser.add_argument("--strict", action="store_true", default=None, help="Fail on too many censored paths.")
    parser.add_argument("--raw_times", action="store_true", help="Also write the raw exit times as CSV.")
    parser.add_argument("--num_threads", type=int, default=None, help="Worker threads for path sampling.")
    parser.add_argument("--log_file_path", type=str, default=None, help="Path to the log file. Logs go to stderr otherwise.")
    parser.add_argument("--verbose", action="store_true", help="Log per-index numerics.")
    return parser


def main(argv: Optional[List[str]] = None) -> int:
    """
    Entry point of the combhardy command.

    Example:
    ```
    combhardy bounds --spec double_exp.json --out runs/double_exp
    combhardy report --spec constant.json --out runs/constant --samples 20000 --seed 7
    ```

    Returns:
    - int: 0 on success, 2 for spec errors, 3 for computation errors, 4 for I/O errors
    """
    args = build_parser().parse_args(argv)
    level = logging.DEBUG if args.verbose else logging.INFO
    try:
        logger = setup_logger("combhardy", level=level, log_file_path=args.log_file_path)
    except OSError as e:
        print(f"cannot open log file {args.log_file_path}: {e}", file=sys.stderr)
        return 4

    try:
        settings = load_settings(
            radii=args.radii,
            cell=args.cell,
            clip_radius=args.clip,
            max_height=args.max_height,
            n_samples=args.samples,
            ps=args.p,
            seed=args.seed,
            thetas=args.thetas,
            strict=args.strict,
            num_threads=args.num_threads,
        )
        summary = run_command(
            args.command, args.spec, args.out, settings, logger,
            raw_times=args.raw_times, truncate_n=args.n,
        )
    except CombHardyError as e:
        logger.error(f"{type(e).__name__}: {e}")
        return e.exit_code

    logger.info(f"{args.command} completed. Summary: {summary}")
    return 0


if __name__ == "__main__":
    sys.exit(main())
