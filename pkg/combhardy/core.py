"""
Pipelines behind the command-line commands.

Each pipeline takes a materialized spec, an existing output directory, the
effective Settings and the configured logger, writes its files and returns a
summary dict listing them.
"""
import logging
import os
import shutil
import tempfile
from typing import Any, Dict, List, Optional, Tuple

from combhardy.bounds import bound_estimates, criterion_series, write_bounds_csv
from combhardy.brownian import moment_estimate, sample_exit_times, write_times_csv
from combhardy.classifier import classify, verdict_to_dict
from combhardy.comb import CombSpec, Point, geometric_extent, load_spec, spec_to_dict
from combhardy.config import Settings
from combhardy.errors import GridConfigError, IoError
from combhardy.plots import plot_bounds, plot_hardy
from combhardy.qh_oracle import GridConfig, hardy_estimate, write_hardy_csv
from combhardy.utils import ensure_dir, json_float, manifest_entries, write_json

SummaryDict = Dict[str, Any]

COMMANDS = ('bounds', 'classify', 'qh', 'bm', 'report')


def _new_summary(command: str, spec: CombSpec) -> SummaryDict:
    return {'command': command, 'family': spec.family.value, 'truncate_n': spec.truncate_n, 'files': []}


def run_bounds(spec: CombSpec, out_dir: str, settings: Settings, logger: logging.Logger) -> SummaryDict:
    """
    Write bounds.csv and bounds.svg.

    Parameters:
    - spec: CombSpec: Materialized comb
    - out_dir: str: Existing output directory
    - settings: Settings: Effective configuration
    - logger: logging.Logger: Logger object for logging messages

    Returns:
    - SummaryDict: Written files and the last ratio values
    """
    summary = _new_summary('bounds', spec)
    series = criterion_series(spec)
    write_bounds_csv(series, os.path.join(out_dir, 'bounds.csv'))
    plot_bounds(series, os.path.join(out_dir, 'bounds.svg'), title=f"{spec.family.value}, N = {spec.truncate_n}")
    summary['files'] += ['bounds.csv', 'bounds.svg']
    lower, upper = bound_estimates(spec, settings.tail_fraction)
    summary.update(
        last_ratio_R=series[-1].ratio_R,
        last_ratio_Rprime=series[-1].ratio_Rprime,
        bound_lower=lower,
        bound_upper=upper,
    )
    logger.info(f"bounds: R_N = {series[-1].ratio_R:.6g}, R'_N = {series[-1].ratio_Rprime:.6g}")
    return summary


def run_classify(spec: CombSpec, out_dir: str, settings: Settings, logger: logging.Logger) -> SummaryDict:
    summary = _new_summary('classify', spec)
    verdict = classify(spec, settings.thetas or None, settings.tail_fraction, settings.slope_tol)
    write_json(os.path.join(out_dir, 'verdict.json'), verdict_to_dict(verdict))
    summary['files'].append('verdict.json')
    summary.update(decision=verdict.decision.value, justification=verdict.justification.value)
    logger.info(f"classify: {verdict.decision.value} ({verdict.justification.value})")
    return summary


def _grid_plan(spec: CombSpec, settings: Settings) -> Tuple[GridConfig, List[float], List[float]]:
    """
    Grid config with the radii the grid can resolve, and the ones it cannot.

    Raises GridConfigError on a bad config or when no radius lies in (1, min(clip_radius, x_N)).
    """
    cfg = GridConfig(settings.cell, settings.clip_radius, settings.connectivity, settings.max_height)
    limit = min(settings.clip_radius, geometric_extent(spec))
    radii = [float(r) for r in settings.radii]
    kept = sorted(r for r in radii if 1 < r < limit)
    if not kept:
        raise GridConfigError(f"no radius left in (1, {limit:g})")
    return cfg, kept, sorted(set(radii) - set(kept))


def run_qh(spec: CombSpec, out_dir: str, settings: Settings, logger: logging.Logger) -> SummaryDict:
    """
    Write hardy.csv and hardy.svg from the grid oracle.

    Radii at or beyond min(clip_radius, x_N) cannot be resolved and are dropped with a warning.
    """
    summary = _new_summary('qh', spec)
    cfg, kept, dropped = _grid_plan(spec, settings)
    limit = min(settings.clip_radius, geometric_extent(spec))
    for r in dropped:
        logger.warning(f"qh: dropping radius {r:g}, outside (1, {limit:g})")
    estimate = hardy_estimate(spec, cfg, kept, settings.max_nodes, settings.tail_fraction)
    write_hardy_csv(estimate, os.path.join(out_dir, 'hardy.csv'))
    plot_hardy(estimate, os.path.join(out_dir, 'hardy.svg'), title=f"{spec.family.value}, cell = {cfg.cell:g}")
    summary['files'] += ['hardy.csv', 'hardy.svg']
    summary.update(sandwich_low=estimate.sandwich_low, sandwich_high=estimate.sandwich_high)
    logger.info(f"qh: sandwich [{estimate.sandwich_low:.6g}, {estimate.sandwich_high:.6g}]")
    return summary


def run_bm(
    spec: CombSpec,
    out_dir: str,
    settings: Settings,
    logger: logging.Logger,
    raw_times: bool = False,
) -> SummaryDict:
    """Write moments.json, and times.csv when raw_times is set."""
    summary = _new_summary('bm', spec)
    batch = sample_exit_times(
        spec,
        Point(0.0, 0.0),
        settings.n_samples,
        seed=settings.seed,
        step_fraction=settings.step_fraction,
        absorb_eps=settings.absorb_eps,
        max_steps=settings.max_steps,
        chunk_size=settings.chunk_size,
        num_threads=settings.num_threads,
        strict=settings.strict,
    )
    moments = [moment_estimate(batch, p, settings.truncation_cap, settings.strict) for p in settings.ps]
    payload = {
        'seed': settings.seed,
        'n_samples': batch.n_samples,
        'truncation_hits': batch.truncation_hits,
        'nonconvergent': batch.nonconvergent,
        'moments': [
            {key: json_float(v) if isinstance(v, float) else v for key, v in m.to_dict().items()}
            for m in moments
        ],
    }
    write_json(os.path.join(out_dir, 'moments.json'), payload)
    summary['files'].append('moments.json')
    if raw_times:
        write_times_csv(batch, os.path.join(out_dir, 'times.csv'))
        summary['files'].append('times.csv')
    for m in moments:
        logger.info(f"bm: p = {m.p:g}, mean = {m.mean_p:.6g} +- {m.std_err:.3g}, stable = {m.stable}")
    summary['truncation_hits'] = batch.truncation_hits
    return summary


def run_report(
    spec: CombSpec,
    out_dir: str,
    settings: Settings,
    logger: logging.Logger,
    raw_times: bool = False,
) -> SummaryDict:
    """
    Run bounds, classify, qh and bm into one directory and write manifest.json.

    The files are built in a staging directory inside out_dir and moved into
    place only once every step has succeeded, so a failed report leaves no
    partial output.
    """
    summary = _new_summary('report', spec)
    _grid_plan(spec, settings)
    try:
        staging = tempfile.mkdtemp(prefix='.report-', dir=out_dir)
    except OSError as e:
        raise IoError(f"cannot create a staging directory in {out_dir}: {e}") from e
    try:
        for step in (run_bounds, run_classify, run_qh):
            summary['files'] += step(spec, staging, settings, logger)['files']
        summary['files'] += run_bm(spec, staging, settings, logger, raw_times=raw_times)['files']
        manifest = {
            'spec': spec_to_dict(spec),
            'seed': settings.seed,
            'files': manifest_entries(staging, summary['files']),
        }
        write_json(os.path.join(staging, 'manifest.json'), manifest)
        summary['files'].append('manifest.json')
        for name in summary['files']:
            os.replace(os.path.join(staging, name), os.path.join(out_dir, name))
    except OSError as e:
        raise IoError(f"cannot write the report into {out_dir}: {e}") from e
    finally:
        shutil.rmtree(staging, ignore_errors=True)
    logger.info(f"report: {len(summary['files'])} files written to {out_dir}")
    return summary


def run_command(
    command: str,
    spec_path: str,
    out_dir: str,
    settings: Settings,
    logger: logging.Logger,
    raw_times: bool = False,
    truncate_n: Optional[int] = None,
) -> SummaryDict:
    """
    Parse the spec, create the output directory, run one pipeline.

    The spec, and for qh and report the grid settings, are checked before the
    output directory is touched, so bad input leaves nothing behind.

    Parameters:
    - command: str: One of COMMANDS
    - spec_path: str: JSON spec file
    - out_dir: str: Output directory, created if missing
    - settings: Settings: Effective configuration
    - logger: logging.Logger: Logger object for logging messages
    - raw_times: bool: Also write the raw exit times (bm and report)
    - truncate_n: Optional[int]: Overrides the spec file's truncation depth

    Returns:
    - SummaryDict: Summary of the run
    """
    if command not in COMMANDS:
        raise ValueError(f"unknown command {command!r}")
    spec = load_spec(spec_path, truncate_n=truncate_n, float_cap=settings.float_cap, default_n=settings.truncate_n)
    logger.info(f"loaded {spec.family.value} comb with N = {spec.truncate_n} from {spec_path}")
    if command in ('qh', 'report'):
        _grid_plan(spec, settings)
    ensure_dir(out_dir)
    if command == 'bounds':
        return run_bounds(spec, out_dir, settings, logger)
    if command == 'classify':
        return run_classify(spec, out_dir, settings, logger)
    if command == 'qh':
        return run_qh(spec, out_dir, settings, logger)
    if command == 'bm':
        return run_bm(spec, out_dir, settings, logger, raw_times=raw_times)
    return run_report(spec, out_dir, settings, logger, raw_times=raw_times)
