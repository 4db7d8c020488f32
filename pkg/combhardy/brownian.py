"""
Monte Carlo exit times of planar Brownian motion.

Each path moves by isotropic Gaussian steps of scale s = step_fraction * d(z),
d being the distance to the boundary. A step long enough to reach the boundary
is redrawn, so paths stay inside and are absorbed only once d < absorb_eps.
Each step accumulates time s^2 times the mean of |xi|^2/2 over the accepted
steps. Paths that run past the last materialized tooth are censored, as are
paths still running after max_steps steps.

Several nested domains can share one path (coupled sampling): the step scale is
taken from the smallest domain still running, so exit times are ordered pathwise.

Paths are simulated in chunks of chunk_size. Chunk c draws from
Philox(SeedSequence(seed, spawn_key=(c,))), chunks run on a thread pool and are
joined in chunk order, so results do not depend on scheduling.
"""
import logging
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Any, Dict, List, Sequence, Tuple, Union

import numpy as np

from combhardy.classifier import Decision, Verdict
from combhardy.comb import CombSpec, Point, boundary_distances, geometric_extent, ray_positions
from combhardy.errors import (
    ComputationError,
    NonconvergentPath,
    StartOutsideDomain,
    TooManyTruncations,
)
from combhardy.utils import write_csv

logger = logging.getLogger(__name__)

_ACTIVE, _ABSORBED, _ESCAPED, _NONCONVERGENT = 0, 1, 2, 3


class CombDomain:
    """The materialized comb; paths past the last tooth escape."""

    def __init__(self, spec: CombSpec) -> None:
        self.spec = spec
        self.rays = ray_positions(spec)
        self.extent = geometric_extent(spec)

    def distance(self, re: np.ndarray, im: np.ndarray) -> np.ndarray:
        return boundary_distances(self.spec, re, im, self.rays)

    def escaped(self, re: np.ndarray) -> np.ndarray:
        return re > self.extent


class StripDomain:
    """{|Im z| < 1}."""

    def distance(self, re: np.ndarray, im: np.ndarray) -> np.ndarray:
        return 1.0 - np.abs(im)

    def escaped(self, re: np.ndarray) -> np.ndarray:
        return np.zeros(np.shape(re), dtype=bool)


class SubStripDomain:
    """{Re z > -left, |Im z| < 1}."""

    def __init__(self, left: float) -> None:
        self.left = left

    def distance(self, re: np.ndarray, im: np.ndarray) -> np.ndarray:
        return np.minimum(re + self.left, 1.0 - np.abs(im))

    def escaped(self, re: np.ndarray) -> np.ndarray:
        return np.zeros(np.shape(re), dtype=bool)


class HalfPlaneDomain:
    """{Re z > -left}."""

    def __init__(self, left: float) -> None:
        self.left = left

    def distance(self, re: np.ndarray, im: np.ndarray) -> np.ndarray:
        return re + self.left

    def escaped(self, re: np.ndarray) -> np.ndarray:
        return np.zeros(np.shape(re), dtype=bool)


Domain = Union[CombDomain, StripDomain, SubStripDomain, HalfPlaneDomain]


@dataclass(frozen=True)
class ExitTimeBatch:
    """
    Recorded exit times in path order, with the boundary distance at absorption.

    truncation_hits counts every censored path: escapes past the last tooth and
    the nonconvergent paths, which are also counted on their own.
    """

    seed: int
    n_samples: int
    step_fraction: float
    absorb_eps: float
    times: np.ndarray = field(compare=False)
    path_index: np.ndarray = field(compare=False)
    truncation_hits: int = 0
    nonconvergent_index: np.ndarray = field(default_factory=lambda: np.empty(0, dtype=np.int64), compare=False)
    exit_distance: np.ndarray = field(default_factory=lambda: np.empty(0), compare=False)

    @property
    def nonconvergent(self) -> int:
        return int(self.nonconvergent_index.size)

    def prefix(self, k: int) -> 'ExitTimeBatch':
        """The batch restricted to paths 0 .. k-1."""
        keep = self.path_index < k
        recorded = int(np.count_nonzero(keep))
        return ExitTimeBatch(
            seed=self.seed,
            n_samples=k,
            step_fraction=self.step_fraction,
            absorb_eps=self.absorb_eps,
            times=self.times[keep],
            path_index=self.path_index[keep],
            truncation_hits=k - recorded,
            nonconvergent_index=self.nonconvergent_index[self.nonconvergent_index < k],
            exit_distance=self.exit_distance[keep] if self.exit_distance.size == keep.size else self.exit_distance,
        )


@dataclass(frozen=True)
class MomentEstimate:
    p: float
    mean_p: float
    std_err: float
    stable: bool
    truncation_hits: int = 0
    biased_low: bool = False

    def to_dict(self) -> Dict[str, Any]:
        return {
            'p': self.p,
            'mean_p': self.mean_p,
            'std_err': self.std_err,
            'stable': self.stable,
            'truncation_hits': self.truncation_hits,
            'biased_low': self.biased_low,
        }


@dataclass(frozen=True)
class BurkholderEntry:
    p: float
    sample_sizes: Tuple[int, ...]
    means: Tuple[float, ...]
    std_err: float
    stable: bool
    expected: str
    label: str


@dataclass(frozen=True)
class BurkholderReport:
    decision: Decision
    entries: Tuple[BurkholderEntry, ...] = ()
    truncation_hits: int = 0
    nonconvergent: int = 0

    def to_dict(self) -> Dict[str, Any]:
        return {
            'decision': self.decision.value,
            'truncation_hits': self.truncation_hits,
            'nonconvergent': self.nonconvergent,
            'moments': [
                {
                    'p': e.p,
                    'sample_sizes': list(e.sample_sizes),
                    'means': list(e.means),
                    'std_err': e.std_err,
                    'stable': e.stable,
                    'expected': e.expected,
                    'label': e.label,
                }
                for e in self.entries
            ],
        }


def _chunk_rng(seed: int, chunk: int) -> np.random.Generator:
    return np.random.Generator(np.random.Philox(np.random.SeedSequence(seed, spawn_key=(chunk,))))


def _step_time_scale(step_fraction: float) -> float:
    """
    Mean of |xi|^2 / 2 for a standard planar Gaussian xi conditioned on
    |xi| < 1 / step_fraction. A redrawn step of scale s then moves y^2 by
    time_scale * s^2 on average, so crediting that much time keeps E[tau] exact.
    """
    a = 1.0 / (step_fraction * step_fraction)
    tail = math.exp(-0.5 * a)
    return 1.0 - 0.5 * a * tail / (1.0 - tail)


def _run_chunk(
    domains: Sequence[Domain],
    start: Point,
    size: int,
    seed: int,
    chunk: int,
    step_fraction: float,
    absorb_eps: float,
    max_steps: int,
) -> Tuple[np.ndarray, np.ndarray, np.ndarray]:
    rng = _chunk_rng(seed, chunk)
    n_dom = len(domains)
    time_scale = _step_time_scale(step_fraction)
    re = np.full(size, start.re)
    im = np.full(size, start.im)
    t = np.zeros(size)
    times = np.full((n_dom, size), np.nan)
    exit_dist = np.full((n_dom, size), np.nan)
    status = np.full((n_dom, size), _ACTIVE, dtype=np.int8)
    live = np.arange(size)

    for _ in range(max_steps):
        if live.size == 0:
            break
        r, y = re[live], im[live]
        d_min = np.full(live.size, np.inf)
        for k, domain in enumerate(domains):
            st = status[k, live]
            active = st == _ACTIVE
            escaped = active & domain.escaped(r)
            d = domain.distance(r, y)
            absorbed = active & ~escaped & (d < absorb_eps)
            st[escaped] = _ESCAPED
            st[absorbed] = _ABSORBED
            status[k, live] = st
            times[k, live[absorbed]] = t[live[absorbed]]
            exit_dist[k, live[absorbed]] = d[absorbed]
            d_min = np.minimum(d_min, np.where(st == _ACTIVE, d, np.inf))

        moving = np.isfinite(d_min)
        live, d_min = live[moving], d_min[moving]
        if live.size == 0:
            break

        s = step_fraction * d_min
        noise = rng.standard_normal((live.size, 2))
        # redraw steps that would reach the nearest boundary
        too_long = np.hypot(noise[:, 0], noise[:, 1]) * step_fraction >= 1.0
        while too_long.any():
            noise[too_long] = rng.standard_normal((int(np.count_nonzero(too_long)), 2))
            too_long = np.hypot(noise[:, 0], noise[:, 1]) * step_fraction >= 1.0
        re[live] += s * noise[:, 0]
        im[live] += s * noise[:, 1]
        t[live] += time_scale * s * s

    status[status == _ACTIVE] = _NONCONVERGENT
    return times, status, exit_dist


def _check_params(step_fraction: float, absorb_eps: float) -> None:
    if not 0 < step_fraction <= 0.25:
        raise ComputationError(f"step_fraction must lie in (0, 1/4], got {step_fraction}")
    if not 0 < absorb_eps < 0.1:
        raise ComputationError(f"absorb_eps must lie in (0, 1/10), got {absorb_eps}")


def _check_start(domains: Sequence[Domain], start: Point, absorb_eps: float) -> None:
    for domain in domains:
        re, im = np.array([start.re]), np.array([start.im])
        if domain.escaped(re)[0]:
            raise StartOutsideDomain(f"start {start} lies beyond the last materialized tooth")
        d = float(domain.distance(re, im)[0])
        if not d >= absorb_eps:
            raise StartOutsideDomain(f"start {start} is not an interior point (distance {d:.3g})")


def _simulate(
    domains: Sequence[Domain],
    start: Point,
    n: int,
    seed: int,
    step_fraction: float,
    absorb_eps: float,
    max_steps: int,
    chunk_size: int,
    num_threads: int,
) -> Tuple[np.ndarray, np.ndarray, np.ndarray]:
    _check_params(step_fraction, absorb_eps)
    if n < 1:
        raise ComputationError(f"need at least one sample, got {n}")
    _check_start(domains, start, absorb_eps)
    sizes = [min(chunk_size, n - lo) for lo in range(0, n, chunk_size)]
    with ThreadPoolExecutor(max_workers=max(1, num_threads)) as executor:
        futures = [
            executor.submit(_run_chunk, domains, start, size, seed, c, step_fraction, absorb_eps, max_steps)
            for c, size in enumerate(sizes)
        ]
        results = [f.result() for f in futures]
    logger.debug("simulated %d paths in %d chunks", n, len(sizes))
    times = np.concatenate([r[0] for r in results], axis=1)
    status = np.concatenate([r[1] for r in results], axis=1)
    exit_dist = np.concatenate([r[2] for r in results], axis=1)
    return times, status, exit_dist


def sample_exit_times(
    target: Union[CombSpec, Domain],
    start: Point,
    n: int,
    seed: int = 0,
    step_fraction: float = 0.25,
    absorb_eps: float = 1e-3,
    max_steps: int = 100_000,
    chunk_size: int = 8192,
    num_threads: int = 4,
    strict: bool = False,
) -> ExitTimeBatch:
    """
    Exit times of n independent paths started at `start`.

    Parameters:
    - target: Union[CombSpec, Domain]: A comb spec, or a domain plug such as StripDomain
    - start: Point: Interior start point
    - n: int: Number of paths
    - seed: int: Root seed; identical arguments give identical batches
    - step_fraction: float: Step scale as a fraction of the boundary distance, in (0, 1/4]
    - absorb_eps: float: Absorption band width, in (0, 1/10)
    - max_steps: int: Per-path step budget
    - chunk_size: int: Paths per RNG stream
    - num_threads: int: Worker threads
    - strict: bool: Raise NonconvergentPath instead of censoring paths over budget

    Returns:
    - ExitTimeBatch: Recorded times and censoring counts
    """
    domain = CombDomain(target) if isinstance(target, CombSpec) else target
    times, status, exit_dist = _simulate(
        [domain], start, n, seed, step_fraction, absorb_eps, max_steps, chunk_size, num_threads,
    )
    absorbed = status[0] == _ABSORBED
    nonconvergent = int(np.count_nonzero(status[0] == _NONCONVERGENT))
    escaped = int(np.count_nonzero(status[0] == _ESCAPED))
    if nonconvergent:
        if strict:
            raise NonconvergentPath(f"{nonconvergent} of {n} paths exceeded {max_steps} steps")
        logger.warning("%d of %d paths exceeded the step budget of %d", nonconvergent, n, max_steps)
    if escaped:
        logger.info("%d of %d paths escaped past the last materialized tooth", escaped, n)
    return ExitTimeBatch(
        seed=seed,
        n_samples=n,
        step_fraction=step_fraction,
        absorb_eps=absorb_eps,
        times=times[0][absorbed],
        path_index=np.flatnonzero(absorbed),
        truncation_hits=escaped + nonconvergent,
        nonconvergent_index=np.flatnonzero(status[0] == _NONCONVERGENT),
        exit_distance=exit_dist[0][absorbed],
    )


def coupled_exit_times(
    domains: Sequence[Domain],
    start: Point,
    n: int,
    seed: int = 0,
    step_fraction: float = 0.25,
    absorb_eps: float = 1e-3,
    max_steps: int = 100_000,
    chunk_size: int = 8192,
    num_threads: int = 4,
) -> np.ndarray:
    """
    Exit times of the same n paths from each domain; NaN marks a censored path.

    Returns:
    - np.ndarray: Shape (len(domains), n)
    """
    times, _, _ = _simulate(
        list(domains), start, n, seed, step_fraction, absorb_eps, max_steps, chunk_size, num_threads,
    )
    return times


def moment_estimate(
    batch: ExitTimeBatch,
    p: float,
    truncation_cap: float = 0.01,
    strict: bool = False,
) -> MomentEstimate:
    """
    Empirical mean of tau^p with its standard error.

    The estimate is stable when the first half of the paths gives a mean within
    3 standard errors of the full batch. Censored paths contribute nothing, so a
    censored fraction above truncation_cap marks the estimate biased low.
    """
    if batch.n_samples < 1:
        raise ComputationError("empty exit-time batch")
    biased_low = batch.truncation_hits / batch.n_samples > truncation_cap
    if biased_low:
        message = (f"{batch.truncation_hits} of {batch.n_samples} paths censored, "
                   f"above the cap of {truncation_cap:.2%}")
        if strict:
            raise TooManyTruncations(message)
        logger.warning("%s; moment estimates are biased low", message)
    if p == 0:
        return MomentEstimate(p=0.0, mean_p=1.0, std_err=0.0, stable=True,
                              truncation_hits=batch.truncation_hits, biased_low=biased_low)
    if batch.times.size == 0:
        raise ComputationError("no recorded exit times to estimate from")

    values = batch.times ** p
    mean = math.fsum(values) / values.size
    std_err = float(np.std(values, ddof=1)) / math.sqrt(values.size) if values.size > 1 else 0.0
    half = batch.prefix(batch.n_samples // 2).times ** p
    stable = half.size > 0 and abs(math.fsum(half) / half.size - mean) <= 3.0 * std_err
    return MomentEstimate(
        p=float(p), mean_p=mean, std_err=std_err, stable=bool(stable),
        truncation_hits=batch.truncation_hits, biased_low=biased_low,
    )


def _expected_label(verdict: Verdict, p: float) -> str:
    if verdict.decision is Decision.INFINITE:
        return 'stable'
    if verdict.decision is Decision.FINITE:
        if p <= verdict.bound_lower / 2.0:
            return 'stable'
        if p > verdict.bound_upper / 2.0:
            return 'growing'
    return 'unknown'


def burkholder_diagnostic(
    spec: CombSpec,
    verdict: Verdict,
    ps: Sequence[float],
    start: Point = Point(0.0, 0.0),
    n_samples: int = 100_000,
    seed: int = 0,
    step_fraction: float = 0.25,
    absorb_eps: float = 1e-3,
    max_steps: int = 100_000,
    chunk_size: int = 8192,
    num_threads: int = 4,
    truncation_cap: float = 0.01,
) -> BurkholderReport:
    """
    Compare exit-time moment behaviour with the classifier verdict.

    The exit time has finite p-th moments exactly for p below half the Hardy
    number, so infinite-Hardy combs should show stable moments for every p, and
    finite-Hardy combs growing means for p above bound_upper / 2. Each p is
    estimated on the first n/4, n/2 and n paths; only labels are reported.
    """
    if not ps:
        return BurkholderReport(decision=verdict.decision)
    for p in ps:
        if not 0 < p <= 5:
            raise ComputationError(f"moment order must lie in (0, 5], got {p}")
    batch = sample_exit_times(
        spec, start, n_samples, seed, step_fraction, absorb_eps, max_steps, chunk_size, num_threads,
    )
    sizes = tuple(sorted({max(1, n_samples // 4), max(1, n_samples // 2), n_samples}))
    prefixes = [batch.prefix(k) for k in sizes]
    entries: List[BurkholderEntry] = []
    for p in ps:
        estimates = [moment_estimate(b, p, truncation_cap) for b in prefixes]
        means = tuple(e.mean_p for e in estimates)
        full = estimates[-1]
        growing = all(b >= a for a, b in zip(means, means[1:])) and not full.stable
        label = 'stable' if full.stable else ('growing' if growing else 'unstable')
        entries.append(BurkholderEntry(
            p=float(p), sample_sizes=sizes, means=means, std_err=full.std_err,
            stable=full.stable, expected=_expected_label(verdict, p), label=label,
        ))
        logger.info("p = %g: mean %.6g (se %.3g), %s", p, full.mean_p, full.std_err, label)
    return BurkholderReport(
        decision=verdict.decision,
        entries=tuple(entries),
        truncation_hits=batch.truncation_hits,
        nonconvergent=batch.nonconvergent,
    )


def write_times_csv(batch: ExitTimeBatch, path: str) -> None:
    rows = ((int(i), float(t)) for i, t in zip(batch.path_index, batch.times))
    write_csv(path, ('path', 'time'), rows)
