import csv
import math
import os
import tempfile
from typing import Any, List

import mpmath
import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from combhardy.bounds import (
    BOUNDS_CSV_COLUMNS,
    K_CONSTANT,
    TrendHint,
    axis_quadrature,
    bound_estimates,
    criterion_series,
    lower_bound_series,
    qh_axis_distance,
    qh_axis_distance_at,
    radial_upper_estimate,
    stolz_cesaro_window,
    term_ratios,
    trend_report,
    upper_bound_series,
    write_bounds_csv,
)
from combhardy.comb import BFamily, BKind, CombSpec, spec_from_dict
from combhardy.errors import FloatOverflow, IndexOutOfRange

mpmath.mp.dps = 50

E_LIMIT = math.e / (math.e - 1.0)


def make_spec(family: str, n: int = 40, **params: Any) -> CombSpec:
    return spec_from_dict({'family': family, 'params': params, 'truncate_n': n})


def explicit(x: List[float]) -> CombSpec:
    return spec_from_dict({'family': 'Explicit', 'x': list(x)})


def test_constant_ratio_value():
    spec = make_spec('Constant', n=10, alpha=math.e)
    last = criterion_series(spec)[-1]
    assert last.ratio_R == pytest.approx(10.0 / (1.0 + math.log(10.0)), rel=1e-12), f"R_10 = {last.ratio_R}"
    assert last.ratio_R == pytest.approx(3.02794, abs=1e-5), "R_10 for alpha = e"


def test_first_upper_bound_value():
    spec = make_spec('Constant', n=3, alpha=math.e)
    first = criterion_series(spec)[0]
    assert first.upper_U == pytest.approx(8.0 + K_CONSTANT, rel=1e-12), f"U_1 = {first.upper_U}"
    assert K_CONSTANT == pytest.approx(4.0 * math.log((1 + math.sqrt(5)) / 2)), "K = 4 log(golden ratio)"


def test_series_relations_hold_for_every_index():
    spec = make_spec('Polynomial', n=30, p=1.5)
    for rec in criterion_series(spec):
        assert rec.lower_L == pytest.approx(rec.ratio_R - 1.0), f"L_{rec.n} should equal R_{rec.n} - 1"
        assert rec.lower_L < rec.upper_U, f"L_{rec.n} must stay below U_{rec.n}"
        assert rec.ratio_Rprime == pytest.approx(rec.ratio_R, rel=1e-9), "x_n is the sum of the gaps"
        assert rec.upper_U >= 4.0 * rec.lower_L + 8.0 - 1e-9, f"U_{rec.n} >= 4 L_{rec.n} + 8"


def test_ratio_prime_matches_high_precision():
    spec = make_spec('DoubleExp', n=6)
    n = 6
    num = mpmath.fsum(mpmath.exp(k) for k in range(1, n + 1))
    den = mpmath.log(mpmath.fsum(mpmath.exp(mpmath.exp(k)) for k in range(1, n + 1)))
    value = criterion_series(spec)[-1].ratio_Rprime
    assert value == pytest.approx(float(num / den), rel=1e-13), f"R'_6 = {value}"


def test_double_exp_ratio_limit():
    spec = make_spec('DoubleExp', n=40)
    last = criterion_series(spec)[-1]
    assert abs(last.ratio_Rprime - E_LIMIT) < 1e-6, f"R'_40 = {last.ratio_Rprime}, limit {E_LIMIT}"


def test_double_exp_bound_sandwich():
    spec = make_spec('DoubleExp', n=40)
    lo, hi = 20, 40
    upper = upper_bound_series(spec)[lo - 1:hi].min()
    lower = lower_bound_series(spec)[lo - 1:hi].min()
    assert upper == pytest.approx(4 * E_LIMIT + 4, abs=1e-4), f"tail min U = {upper}"
    assert lower == pytest.approx(E_LIMIT - 1, abs=1e-4), f"tail min L = {lower}"
    low_est, high_est = bound_estimates(spec)
    assert low_est == pytest.approx(E_LIMIT - 1, abs=1e-4), "lower estimate is the tail min of L"
    assert low_est < high_est, "bound estimates must be ordered"


def test_bound_estimate_floor_is_one_half():
    spec = make_spec('Oscillating', n=64, c=2, b={'kind': 'linear', 'r': 1, 'b1': 1})
    low, high = bound_estimates(spec)
    assert low >= 0.5, f"lower estimate {low} is below 1/2"
    assert low <= high, "estimates must be ordered"


@pytest.mark.parametrize('family, params', [
    ('Constant', {'alpha': 2}),
    ('Polynomial', {'p': 1}),
    ('Polynomial', {'p': 3}),
    ('SubexpExp', {'p': 0.5}),
    ('Exponential', {'c': 1}),
])
def test_infinite_families_have_large_ratio(family, params):
    spec = make_spec(family, n=400, **params)
    ratio = criterion_series(spec)[-1].ratio_R
    assert ratio > 10, f"{family}{params}: R_400 = {ratio} should exceed 10"


@pytest.mark.parametrize('family, params', [
    ('DoubleExp', {}),
    ('Oscillating', {'c': 2, 'b': {'kind': 'linear', 'r': 1, 'b1': 1}}),
])
def test_finite_families_keep_ratio_prime_small(family, params):
    spec = make_spec(family, n=400, **params)
    ratios = np.array([rec.ratio_Rprime for rec in criterion_series(spec)])
    tail_min = ratios[199:400].min()
    assert tail_min < 3, f"{family}: tail min of R' = {tail_min} should stay below 3"


def test_axis_distance_example():
    spec = explicit([2, 5, 9])
    expected = 2 * (math.asinh(1.0) + math.asinh(1.5) + math.asinh(2.0))
    assert qh_axis_distance(spec, 0, 3) == pytest.approx(expected, rel=1e-14), "closed form over three gaps"
    assert qh_axis_distance(spec, 0, 3) == pytest.approx(7.0396, abs=1e-4), "documented value"
    assert qh_axis_distance(spec, 2, 2) == 0.0, "empty interval"
    assert qh_axis_distance(explicit([2]), 0, 1) == pytest.approx(2 * math.asinh(1.0)), "single gap of 2"


def test_axis_distance_errors():
    spec = make_spec('DoubleExp', n=10)
    with pytest.raises(FloatOverflow):
        qh_axis_distance(spec, 0, 8)
    with pytest.raises(IndexOutOfRange):
        qh_axis_distance(spec, 3, 2)
    with pytest.raises(IndexOutOfRange):
        qh_axis_distance(spec, 0, 11)


@settings(max_examples=50, deadline=None)
@given(gaps=st.lists(st.floats(min_value=1.01, max_value=50.0), min_size=2, max_size=12), data=st.data())
def test_axis_distance_is_additive(gaps, data):
    spec = explicit(list(np.cumsum(gaps)))
    n = len(gaps)
    a = data.draw(st.integers(min_value=0, max_value=n))
    b = data.draw(st.integers(min_value=a, max_value=n))
    total = qh_axis_distance(spec, 0, a) + qh_axis_distance(spec, a, b)
    assert qh_axis_distance(spec, 0, b) == pytest.approx(total, rel=1e-12), "distance along the axis adds up"


@settings(max_examples=20, deadline=None)
@given(gaps=st.lists(st.floats(min_value=1.001, max_value=10.0), min_size=1, max_size=10))
def test_closed_form_matches_quadrature(gaps):
    spec = explicit(list(np.cumsum(gaps)))
    n = len(gaps)
    closed = qh_axis_distance(spec, 0, n)
    numeric = axis_quadrature(spec, 0, n)
    assert abs(closed - numeric) / closed <= 1e-8, f"closed form {closed} vs quadrature {numeric}"


def test_axis_distance_at_partial_intervals():
    spec = explicit([2, 5, 9])
    assert qh_axis_distance_at(spec, 0.0) == 0.0, "distance to the origin itself"
    assert qh_axis_distance_at(spec, 5.0) == pytest.approx(qh_axis_distance(spec, 0, 2)), "r = x_2"
    assert qh_axis_distance_at(spec, 1.0) == pytest.approx(math.asinh(1.0)), "up to the first midpoint"
    assert qh_axis_distance_at(spec, 4.0) == pytest.approx(
        qh_axis_distance(spec, 0, 2) - math.asinh(1.0)
    ), "past the midpoint the remaining arcsinh is subtracted"
    with pytest.raises(IndexOutOfRange):
        qh_axis_distance_at(spec, 9.5)


def test_radial_upper_estimate():
    spec = explicit([2, 5, 9])
    values = radial_upper_estimate(spec, [5.0, 9.0])
    assert values[1] == pytest.approx(2 * qh_axis_distance(spec, 0, 3) / math.log(9.0)), "2 delta / log r"


def test_oscillating_term_ratios():
    spec = make_spec('Oscillating', n=64, c=2, b={'kind': 'linear', 'r': 1, 'b1': 1})
    b = BFamily(BKind.LINEAR, r=1.0, b1=1.0)
    terms = term_ratios(spec, b)
    tail_min = terms[31:64].min()
    assert tail_min <= math.log(2.0) + 1e-12, f"off-spike term ratio {tail_min} should be log 2"
    assert np.allclose(term_ratios(spec), spec.gaps_log), "without a b-family the term ratio is log alpha"


def test_stolz_cesaro_window_brackets_partial_ratio():
    spec = make_spec('SubexpExp', n=60, p=1.5)
    window = stolz_cesaro_window(spec, BFamily(BKind.POWER, exponent=1.5))
    assert np.all(window.running_min <= window.partial_ratio + 1e-12), "partial ratio below running min"
    assert np.all(window.partial_ratio <= window.running_max + 1e-12), "partial ratio above running max"

    matched = BFamily(BKind.CUSTOM, table=tuple(np.cumsum(spec.gaps_log)))
    exact = stolz_cesaro_window(spec, matched)
    assert exact.tail_partial_min == pytest.approx(1.0), "increments equal to log alpha_n give ratio 1"
    assert exact.tail_term_min == pytest.approx(1.0), "every term ratio is 1"


def test_trend_hints():
    diverging = trend_report(make_spec('Polynomial', n=200, p=1))
    assert diverging.verdict_hint is TrendHint.DIVERGES, f"polynomial gaps: {diverging}"
    bounded = trend_report(make_spec('DoubleExp', n=40), ratio='Rprime')
    assert bounded.verdict_hint is TrendHint.BOUNDED, f"double exponential gaps: {bounded}"
    assert bounded.window == (20, 40), "tail window is [N/2, N]"
    short = trend_report(make_spec('Constant', n=5, alpha=2))
    assert short.verdict_hint is TrendHint.INCONCLUSIVE, "too few teeth for a trend"


def test_write_bounds_csv():
    spec = make_spec('Constant', n=12, alpha=3)
    series = criterion_series(spec)
    with tempfile.TemporaryDirectory() as tempdir:
        path = os.path.join(tempdir, 'bounds.csv')
        write_bounds_csv(series, path)
        with open(path, newline='') as f:
            rows = list(csv.reader(f))
    assert tuple(rows[0]) == BOUNDS_CSV_COLUMNS, f"unexpected header {rows[0]}"
    assert len(rows) == 13, f"expected 12 data rows, got {len(rows) - 1}"
    assert float(rows[-1][3]) == series[-1].ratio_R, "floats are written round-trip exact"


OSCILLATING_LINEAR = {'c': 2, 'b': {'kind': 'linear', 'r': 1, 'b1': 1}}


@pytest.mark.parametrize('family, n, params, hint', [
    ('Constant', 40, {'alpha': 2}, TrendHint.DIVERGES),
    ('Polynomial', 200, {'p': 1}, TrendHint.DIVERGES),
    ('DoubleExp', 40, {}, TrendHint.BOUNDED),
    ('Oscillating', 64, OSCILLATING_LINEAR, TrendHint.BOUNDED),
])
def test_trend_hint_agrees_for_both_ratios(family, n, params, hint):
    spec = make_spec(family, n=n, **params)
    plain = trend_report(spec, ratio='R')
    primed = trend_report(spec, ratio='Rprime')
    assert plain.verdict_hint is hint, f"{family}: {plain}"
    assert primed.verdict_hint is plain.verdict_hint, f"{family}: R gives {plain}, R' gives {primed}"


def test_oscillating_tail_minimum():
    report = trend_report(make_spec('Oscillating', n=64, **OSCILLATING_LINEAR), ratio='Rprime')
    assert report.verdict_hint is TrendHint.BOUNDED, f"spikes do not make R' diverge: {report}"
    assert report.tail_min <= 2.0 + math.log(2.0), f"tail minimum {report.tail_min}"
