"""
Criterion ratios and two-sided bound series for the Hardy number of a comb.

With alpha_i the gaps and x_n = alpha_1 + ... + alpha_n:

    R_n  = sum_{i<=n} log alpha_i / log x_n
    R'_n = sum_{i<=n} log alpha_i / log sum_{i<=n} alpha_i
    U_n  = 4 R_n + n K / log x_n + 4,   K = 4 log((1 + sqrt 5) / 2)
    L_n  = R_n - 1

h(C) is infinite iff R_n (equivalently R'_n) tends to infinity, and
liminf L_n <= h(C) <= liminf U_n. A finite prefix only shows trends, so
every limit is reported as a tail-window statistic over indices [N/2, N].

The statement of the upper bound uses n K; its derivation reaches (n - 1) K
before re-indexing. The n K form is used here; the two agree in the limit.
"""
import logging
import math
from dataclasses import dataclass
from enum import Enum
from typing import List, Optional, Sequence, Tuple

import numpy as np
from scipy.integrate import quad
from scipy.special import logsumexp

from combhardy.comb import BFamily, CombSpec, boundary_distances, log_x_series, ray_positions
from combhardy.errors import DegenerateLog, FloatOverflow, IndexOutOfRange
from combhardy.utils import tail_window, write_csv

logger = logging.getLogger(__name__)

K_CONSTANT = 4.0 * math.log((1.0 + math.sqrt(5.0)) / 2.0)

BOUNDS_CSV_COLUMNS = ('n', 'sum_log_gaps', 'log_x_n', 'ratio_R', 'ratio_Rprime', 'upper_U', 'lower_L')


@dataclass(frozen=True)
class BoundSeries:
    n: int
    sum_log_gaps: float
    log_x_n: float
    ratio_R: float
    ratio_Rprime: float
    upper_U: float
    lower_L: float
    K: float = K_CONSTANT


class TrendHint(str, Enum):
    DIVERGES = 'DivergesToInfinity'
    BOUNDED = 'BoundedAbove'
    INCONCLUSIVE = 'Inconclusive'


@dataclass(frozen=True)
class TrendReport:
    tail_min: float
    tail_max: float
    term_ratio_tail: Tuple[float, ...]
    verdict_hint: TrendHint
    slope: float
    window: Tuple[int, int]
    ratio: str = 'R'


@dataclass(frozen=True)
class StolzCesaroWindow:
    """Partial-sum ratios sum log alpha_i / b_n next to the running extremes of the term ratios."""

    partial_ratio: np.ndarray
    term_ratio: np.ndarray
    running_min: np.ndarray
    running_max: np.ndarray
    window: Tuple[int, int]

    @property
    def tail_partial_min(self) -> float:
        lo, hi = self.window
        return float(np.min(self.partial_ratio[lo - 1:hi]))

    @property
    def tail_term_min(self) -> float:
        lo, hi = self.window
        return float(np.min(self.term_ratio[lo - 1:hi]))


def _ratio_arrays(spec: CombSpec) -> Tuple[np.ndarray, np.ndarray, np.ndarray, np.ndarray]:
    log_gaps = spec.gaps_log
    sums = np.cumsum(log_gaps)
    log_x = log_x_series(spec)
    log_sum = np.array([logsumexp(log_gaps[:n]) for n in range(1, log_gaps.size + 1)])
    bad = np.flatnonzero(log_x <= 0)
    if bad.size:
        raise DegenerateLog(f"log x_{int(bad[0]) + 1} = {log_x[bad[0]]:.6g} is not positive")
    return sums, log_x, sums / log_x, sums / log_sum


def criterion_series(spec: CombSpec) -> List[BoundSeries]:
    """
    One BoundSeries record per index n = 1..N, computed entirely in log space.

    Parameters:
    - spec: CombSpec: Materialized comb

    Returns:
    - List[BoundSeries]: Ratios and bound values, in index order
    """
    sums, log_x, ratio_r, ratio_rp = _ratio_arrays(spec)
    n = np.arange(1, sums.size + 1, dtype=float)
    upper = 4.0 * ratio_r + n * K_CONSTANT / log_x + 4.0
    lower = ratio_r - 1.0
    return [
        BoundSeries(
            n=int(n[i]),
            sum_log_gaps=float(sums[i]),
            log_x_n=float(log_x[i]),
            ratio_R=float(ratio_r[i]),
            ratio_Rprime=float(ratio_rp[i]),
            upper_U=float(upper[i]),
            lower_L=float(lower[i]),
        )
        for i in range(sums.size)
    ]


def upper_bound_series(spec: CombSpec) -> np.ndarray:
    """U_1 .. U_N."""
    sums, log_x, ratio_r, _ = _ratio_arrays(spec)
    n = np.arange(1, sums.size + 1, dtype=float)
    return 4.0 * ratio_r + n * K_CONSTANT / log_x + 4.0


def lower_bound_series(spec: CombSpec) -> np.ndarray:
    """L_1 .. L_N."""
    _, _, ratio_r, _ = _ratio_arrays(spec)
    return ratio_r - 1.0


def bound_estimates(spec: CombSpec, tail_fraction: float = 0.5) -> Tuple[float, float]:
    """
    Numeric bracket for h(C) from the tail of the bound series.

    The lower end is never below 1/2, the Hardy number of any simply connected domain
    being at least 1/2.

    Returns:
    - Tuple[float, float]: (max(1/2, tail min L_n), tail min U_n)
    """
    lo, hi = tail_window(spec.truncate_n, tail_fraction)
    lower = lower_bound_series(spec)[lo - 1:hi]
    upper = upper_bound_series(spec)[lo - 1:hi]
    return max(0.5, float(np.min(lower))), float(np.min(upper))


def _check_indices(spec: CombSpec, a: int, b: int) -> None:
    if not 0 <= a <= b <= spec.truncate_n:
        raise IndexOutOfRange(f"need 0 <= a <= b <= {spec.truncate_n}, got a={a}, b={b}")


def qh_axis_distance(spec: CombSpec, a: int, b: int) -> float:
    """
    Quasi-hyperbolic distance between x_a and x_b along the real axis.

    On [x_{i-1}, x_i] the nearest boundary points are the two tips, so
    d(x) = sqrt(1 + min(x - x_{i-1}, x_i - x)^2) and each interval contributes
    2 arcsinh(alpha_i / 2).
    """
    _check_indices(spec, a, b)
    if a == b:
        return 0.0
    log_gaps = spec.gaps_log[a:b]
    if np.any(log_gaps > math.log(spec.float_cap)):
        raise FloatOverflow(f"a gap between teeth {a} and {b} exceeds the float cap {spec.float_cap:g}")
    return 2.0 * math.fsum(np.arcsinh(np.exp(log_gaps) / 2.0))


def qh_axis_distance_at(spec: CombSpec, r: float) -> float:
    """
    Quasi-hyperbolic distance from 0 to the real point r, 0 <= r <= x_N.

    Within [x_{n-1}, x_n] the integral runs to the midpoint as arcsinh(r - x_{n-1})
    and past it as 2 arcsinh(alpha_n / 2) - arcsinh(x_n - r).
    """
    x = ray_positions(spec)
    if not 0 <= r <= x[-1]:
        raise IndexOutOfRange(f"r = {r:g} outside [0, {x[-1]:g}]")
    if r == 0:
        return 0.0
    n = int(np.searchsorted(x, r, side='left'))
    base = qh_axis_distance(spec, 0, n - 1)
    alpha = x[n] - x[n - 1]
    t = r - x[n - 1]
    if t <= alpha / 2.0:
        return base + math.asinh(t)
    return base + 2.0 * math.asinh(alpha / 2.0) - math.asinh(x[n] - r)


def radial_upper_estimate(spec: CombSpec, radii: Sequence[float]) -> np.ndarray:
    """2 delta_C(0, r) / log r for each radius r > 1: upper estimates of d_C(0, r) / log r."""
    return np.array([2.0 * qh_axis_distance_at(spec, r) / math.log(r) for r in radii])


def axis_quadrature(spec: CombSpec, a: int, b: int) -> float:
    """Adaptive quadrature of the integral of dx / d(x, boundary) from x_a to x_b."""
    _check_indices(spec, a, b)
    x = ray_positions(spec)
    if b >= x.size:
        raise FloatOverflow(f"x_{b} exceeds the float cap {spec.float_cap:g}")

    def inverse_distance(t: float) -> float:
        return 1.0 / float(boundary_distances(spec, t, 0.0, rays=x))

    pieces = []
    for i in range(a + 1, b + 1):
        mid = 0.5 * (x[i - 1] + x[i])
        for lo, hi in ((x[i - 1], mid), (mid, x[i])):
            value, _ = quad(inverse_distance, lo, hi, epsabs=0.0, epsrel=1e-13, limit=200)
            pieces.append(value)
    return math.fsum(pieces)


def term_ratios(spec: CombSpec, b_family: Optional[BFamily] = None) -> np.ndarray:
    """
    log alpha_n / (b_n - b_{n-1}) for n = 1..N, with b_0 = 0.

    Without a declared b-family the comparison sequence b_n = n is used, making the
    term ratio log alpha_n itself.
    """
    log_gaps = spec.gaps_log
    if b_family is None:
        return log_gaps.copy()
    b = b_family.values(log_gaps.size)
    return log_gaps / np.diff(np.concatenate(([0.0], b)))


def stolz_cesaro_window(spec: CombSpec, b_family: BFamily, tail_fraction: float = 0.5) -> StolzCesaroWindow:
    """
    Finite-window form of the Stolz-Cesaro inequalities.

    With positive increments, sum log alpha_i / b_n is a mediant of the term ratios
    log alpha_i / (b_i - b_{i-1}), i <= n, so it always lies between their running
    minimum and maximum.
    """
    log_gaps = spec.gaps_log
    b = b_family.values(log_gaps.size)
    term = term_ratios(spec, b_family)
    return StolzCesaroWindow(
        partial_ratio=np.cumsum(log_gaps) / b,
        term_ratio=term,
        running_min=np.minimum.accumulate(term),
        running_max=np.maximum.accumulate(term),
        window=tail_window(log_gaps.size, tail_fraction),
    )


def trend_report(
    spec: CombSpec,
    b_family: Optional[BFamily] = None,
    ratio: str = 'R',
    tail_fraction: float = 0.5,
    slope_tol: float = 1e-3,
) -> TrendReport:
    """
    Tail diagnostics of the criterion ratio.

    DivergesToInfinity when the tail is increasing with least-squares slope above
    slope_tol; BoundedAbove when it levels off (slope within tolerance) or
    oscillates without its lower envelope rising; Inconclusive otherwise, and for
    fewer than 8 teeth.

    Parameters:
    - spec: CombSpec: Materialized comb
    - b_family: Optional[BFamily]: Comparison sequence for the term ratios
    - ratio: str: 'R' (denominator log x_n) or 'Rprime' (log of the gap sum)
    - tail_fraction: float: Tail starts at ceil(N * tail_fraction)
    - slope_tol: float: Slope threshold separating growth from levelling off

    Returns:
    - TrendReport: Tail statistics and the hint
    """
    _, _, ratio_r, ratio_rp = _ratio_arrays(spec)
    series = ratio_r if ratio == 'R' else ratio_rp
    lo, hi = tail_window(spec.truncate_n, tail_fraction)
    tail = series[lo - 1:hi]
    terms = term_ratios(spec, b_family)[lo - 1:hi]
    idx = np.arange(lo, hi + 1, dtype=float)
    slope = float(np.polyfit(idx, tail, 1)[0]) if tail.size >= 2 else 0.0

    hint = TrendHint.INCONCLUSIVE
    if spec.truncate_n >= 8 and tail.size >= 2:
        diffs = np.diff(tail)
        increasing = bool(np.all(diffs >= -1e-12 * np.maximum(1.0, np.abs(tail[1:]))))
        half = tail.size // 2
        envelope_flat = float(np.min(tail[half:])) <= float(np.min(tail[:half])) + slope_tol * tail.size
        if increasing and slope > slope_tol:
            hint = TrendHint.DIVERGES
        elif slope <= slope_tol or (not increasing and envelope_flat):
            hint = TrendHint.BOUNDED
    logger.debug("trend of %s over [%d, %d]: slope %.3g, hint %s", ratio, lo, hi, slope, hint.value)
    return TrendReport(
        tail_min=float(np.min(tail)),
        tail_max=float(np.max(tail)),
        term_ratio_tail=tuple(float(v) for v in terms),
        verdict_hint=hint,
        slope=slope,
        window=(lo, hi),
        ratio=ratio,
    )


def write_bounds_csv(series: Sequence[BoundSeries], path: str) -> None:
    """Write BoundSeries records as CSV with a header row."""
    write_csv(path, BOUNDS_CSV_COLUMNS, ([getattr(rec, col) for col in BOUNDS_CSV_COLUMNS] for rec in series))
