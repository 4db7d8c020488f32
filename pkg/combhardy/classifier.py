"""
Theorem-backed verdicts on whether a comb has infinite Hardy number.

Rules are keyed to the declared family, never inferred from samples, and are
tried in this order:

1. bounded gaps -> infinite
2. log alpha_n / n -> 0 (subexponential gaps) -> infinite
3. alpha_n <= e^{b_n} with inf (b_n - b_{n-1}) > 0 and log alpha_n / (b_n - b_{n-1}) -> inf -> infinite
4. alpha_n = e^{cn}: c <= 1 is the case b_n = n of rule 3 with alpha_n -> inf; c > 1 is
   checked directly on the criterion ratio -> infinite
5. oscillating construction (constant gaps with sparse spikes e^{b_{k_m}}) -> finite
6. alpha_n comparable to e^{e^n} -> finite

Anything else is Undetermined with the numeric trend attached.
"""
import logging
import math
from dataclasses import dataclass
from enum import Enum
from typing import Any, Dict, Optional, Sequence, Tuple

import numpy as np
from scipy.special import logsumexp

from combhardy.bounds import TrendHint, TrendReport, bound_estimates, term_ratios, trend_report
from combhardy.comb import BFamily, BKind, CombSpec, Family, Growth, OscillatingParams, materialize
from combhardy.errors import InvalidFamilyParam
from combhardy.utils import json_float, tail_window

logger = logging.getLogger(__name__)


class Decision(str, Enum):
    INFINITE = 'InfiniteHardy'
    FINITE = 'FiniteHardy'
    UNDETERMINED = 'Undetermined'


class Justification(str, Enum):
    SUBEXPONENTIAL = 'Thm1_2_Subexponential'
    GENERAL_BOUND = 'Thm1_3_GeneralBound'
    EXP_BOUND = 'Cor1_4_ExpBound'
    OSCILLATING = 'Thm1_5_Oscillating'
    DOUBLE_EXP = 'Thm1_6_DoubleExp'
    EXPONENTIAL_TYPE = 'Sec1_ExponentialType'
    BOUNDED_GAPS = 'BoundedGaps_Thm1_1'
    EXIT_MOMENT_SERIES = 'Cor4_1_Bou'
    NUMERIC_TREND = 'NumericTrendOnly'


@dataclass(frozen=True)
class Verdict:
    decision: Decision
    justification: Justification
    bound_lower: float
    bound_upper: float
    notes: str = ''
    trend: Optional[TrendReport] = None

    def __post_init__(self) -> None:
        if self.decision is Decision.FINITE:
            if not (math.isfinite(self.bound_lower) and math.isfinite(self.bound_upper)):
                raise ValueError("a finite verdict needs a finite bound interval")
            if self.bound_lower > self.bound_upper:
                raise ValueError(f"bound interval [{self.bound_lower}, {self.bound_upper}] is empty")
        if self.decision is not Decision.UNDETERMINED and self.justification is Justification.NUMERIC_TREND:
            raise ValueError("a decided verdict must cite a theorem-backed rule")

    @property
    def bound_interval(self) -> Tuple[float, float]:
        return self.bound_lower, self.bound_upper


@dataclass(frozen=True)
class CounterexampleCheck:
    """Numeric restatement of the bounds satisfied by the oscillating construction."""

    k_indices: Tuple[int, ...]
    i_values: Tuple[float, ...]
    i_bounds: Tuple[float, ...]
    i_tail_min: float
    i_limit_bound: float
    term_tail_min: float
    term_bound: float

    @property
    def holds(self) -> bool:
        pointwise = all(v <= b + 1e-9 for v, b in zip(self.i_values, self.i_bounds))
        return pointwise and self.term_tail_min <= self.term_bound + 1e-12


def check_bou_corollary(spec: CombSpec, thetas: Sequence[float], tail_fraction: float = 0.5) -> bool:
    """
    Desk-scale test of sum_j (max_{n<=j} alpha_n^2) theta^j < inf for every theta given.

    The series is judged convergent when its log-terms strictly decrease across the
    whole tail window (ratio test). For a fixed theta this holds eventually iff
    alpha_n theta^{n/2} < 1 eventually, i.e. log alpha_n / n < log(1/theta) / 2, so
    holding for all theta is the subexponential condition.

    Parameters:
    - spec: CombSpec: Materialized comb
    - thetas: Sequence[float]: Values in (0, 1)
    - tail_fraction: float: Tail starts at ceil(N * tail_fraction)

    Returns:
    - bool: True iff the series passes the tail test for every theta
    """
    if not thetas:
        raise ValueError("at least one theta is needed")
    log_max = np.maximum.accumulate(spec.gaps_log)
    j = np.arange(1, log_max.size + 1, dtype=float)
    lo, hi = tail_window(log_max.size, tail_fraction)
    for theta in thetas:
        if not 0 < theta < 1:
            raise ValueError(f"theta must lie in (0, 1), got {theta}")
        log_terms = 2.0 * log_max + j * math.log(theta)
        increments = np.diff(log_terms[lo - 1:hi])
        if increments.size == 0 or np.any(increments >= 0):
            logger.debug("exit-moment series fails the tail test at theta=%g", theta)
            return False
    return True


def build_counterexample(params: OscillatingParams, n: int) -> CombSpec:
    """
    Comb with alpha_n = c off the greedy subsequence k_m and alpha_{k_m} = e^{b_{k_m}} on it.

    Parameters:
    - params: OscillatingParams: c > 1 and an increasing b-family with positive increments
    - n: int: Truncation depth

    Returns:
    - CombSpec: Materialized Oscillating spec
    """
    if not params.c > 1:
        raise InvalidFamilyParam(f"counterexample needs c > 1, got {params.c}")
    if params.increment_floor(max(n, 2)) <= 0:
        raise InvalidFamilyParam("counterexample needs r = inf (b_n - b_{n-1}) > 0")
    return materialize(CombSpec(family=Family.OSCILLATING, params=params.to_dict(), truncate_n=n))


def counterexample_check(spec: CombSpec, tail_fraction: float = 0.5) -> CounterexampleCheck:
    """
    Evaluate I_{k_m} = sum_{i<=k_m} log alpha_i / log sum_{i<=k_m} alpha_i along the spikes.

    Each I_{k_m} is at most 2 + (1/r + (r - b_1) / (r b_{k_m})) log c, so its tail
    stays below about 2 + log(c) / r; off the spikes the term ratio
    log alpha_n / (b_n - b_{n-1}) is at most log(c) / r.
    """
    osc = spec.oscillating
    n = spec.truncate_n
    log_gaps = spec.gaps_log
    b = osc.b.values(n)
    r = osc.increment_floor(n)
    log_c = math.log(osc.c)
    ks = osc.k_indices(n)

    i_values = tuple(float(np.sum(log_gaps[:k]) / logsumexp(log_gaps[:k])) for k in ks)
    i_bounds = tuple(2.0 + (1.0 / r + (r - b[0]) / (r * b[k - 1])) * log_c for k in ks)
    m_lo, m_hi = tail_window(len(ks), tail_fraction)
    lo, hi = tail_window(n, tail_fraction)
    terms = term_ratios(spec, osc.b)[max(lo, 2) - 1:hi]
    return CounterexampleCheck(
        k_indices=ks,
        i_values=i_values,
        i_bounds=i_bounds,
        i_tail_min=min(i_values[m_lo - 1:m_hi]),
        i_limit_bound=2.0 + log_c / r,
        term_tail_min=float(np.min(terms)) if terms.size else math.inf,
        term_bound=log_c / r,
    )


def _witness(spec: CombSpec) -> Optional[Tuple[BFamily, str]]:
    if spec.family is Family.SUBEXP_EXP and float(spec.params['p']) >= 1:
        p = float(spec.params['p'])
        return BFamily(BKind.POWER, exponent=p), f"b_n = n^{p:g}"
    if spec.family is Family.CUSTOM and spec.custom_formula.growth is Growth.B_WITNESS:
        formula = spec.custom_formula
        return formula.witness(spec.params), formula.note
    return None


def _growth(spec: CombSpec) -> Growth:
    family = spec.family
    if family is Family.CONSTANT:
        return Growth.BOUNDED
    if family is Family.POLYNOMIAL:
        return Growth.SUBEXPONENTIAL
    if family is Family.SUBEXP_EXP and float(spec.params['p']) < 1:
        return Growth.SUBEXPONENTIAL
    if family is Family.CUSTOM:
        return spec.custom_formula.growth
    if _witness(spec) is not None:
        return Growth.B_WITNESS
    return Growth.NONE


def _infinite(justification: Justification, notes: str) -> Verdict:
    return Verdict(Decision.INFINITE, justification, math.inf, math.inf, notes)


def classify(
    spec: CombSpec,
    thetas: Optional[Sequence[float]] = None,
    tail_fraction: float = 0.5,
    slope_tol: float = 1e-3,
) -> Verdict:
    """
    Map a comb spec to a theorem-backed verdict.

    Parameters:
    - spec: CombSpec: Materialized comb
    - thetas: Optional[Sequence[float]]: For Explicit specs only, run the exit-moment
      series test at these theta values and accept it as a desk-scale justification
    - tail_fraction: float: Tail window start used for bounds and trends
    - slope_tol: float: Trend slope tolerance

    Returns:
    - Verdict: Decision, justification, bound interval and notes
    """
    growth = _growth(spec)
    if growth is Growth.BOUNDED:
        return _infinite(Justification.BOUNDED_GAPS, 'bounded gaps keep the criterion ratio unbounded')
    if growth is Growth.SUBEXPONENTIAL:
        return _infinite(Justification.SUBEXPONENTIAL, 'log alpha_n / n -> 0')

    witness = _witness(spec)
    if witness is not None:
        b_family, note = witness
        n = spec.truncate_n
        floor = b_family.min_increment(n)
        envelope = bool(np.all(spec.gaps_log <= b_family.values(n) + 1e-9))
        if floor > 0 and envelope:
            return _infinite(
                Justification.GENERAL_BOUND,
                f"{note}; inf (b_n - b_(n-1)) = {floor:.6g} over n <= {n}",
            )
        logger.warning("b-family witness failed its numeric check (floor %.3g, envelope %s)", floor, envelope)

    if spec.family is Family.EXPONENTIAL:
        c = float(spec.params['c'])
        if c <= 1:
            return _infinite(Justification.EXP_BOUND, f"alpha_n = e^({c:g} n) <= e^n and alpha_n -> inf")
        trend = trend_report(spec, tail_fraction=tail_fraction, slope_tol=slope_tol)
        return _infinite(
            Justification.EXPONENTIAL_TYPE,
            f"alpha_n = e^({c:g} n); criterion ratio tail trend: {trend.verdict_hint.value}",
        )

    if spec.family is Family.OSCILLATING:
        check = counterexample_check(spec, tail_fraction)
        lower, upper = bound_estimates(spec, tail_fraction)
        return Verdict(
            Decision.FINITE, Justification.OSCILLATING, lower, upper,
            f"spikes at k = {list(check.k_indices)}; liminf of the criterion ratio <= {check.i_limit_bound:.6g}",
        )

    if spec.family is Family.DOUBLE_EXP:
        lower, upper = bound_estimates(spec, tail_fraction)
        return Verdict(
            Decision.FINITE, Justification.DOUBLE_EXP, lower, upper,
            f"criterion ratio tends to e/(e-1) = {math.e / (math.e - 1):.7f}",
        )

    trend = trend_report(spec, tail_fraction=tail_fraction, slope_tol=slope_tol) if spec.truncate_n >= 2 else None
    if spec.family is Family.EXPLICIT and thetas and check_bou_corollary(spec, thetas, tail_fraction):
        return _infinite(
            Justification.EXIT_MOMENT_SERIES,
            f"desk-scale: exit-moment series converges in the tail for theta in {list(thetas)}",
        )
    lower, upper = bound_estimates(spec, tail_fraction)
    hint = trend.verdict_hint.value if trend is not None else TrendHint.INCONCLUSIVE.value
    return Verdict(
        Decision.UNDETERMINED, Justification.NUMERIC_TREND, lower, upper,
        f"no symbolic rule applies to {spec.family.value}; numeric trend: {hint}", trend,
    )


def verdict_to_dict(verdict: Verdict) -> Dict[str, Any]:
    """JSON object form; infinite bounds are written as the string 'inf'."""
    return {
        'decision': verdict.decision.value,
        'justification': verdict.justification.value,
        'bound_lower': json_float(verdict.bound_lower),
        'bound_upper': json_float(verdict.bound_upper),
        'notes': verdict.notes,
    }
