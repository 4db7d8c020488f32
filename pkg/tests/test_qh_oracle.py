import csv
import math
import os
import tempfile
from typing import Any, List

import pytest

from combhardy.bounds import qh_axis_distance
from combhardy.classifier import Decision, classify
from combhardy.comb import CombSpec, Point, spec_from_dict
from combhardy.errors import GridConfigError
from combhardy.qh_oracle import (
    HARDY_CSV_COLUMNS,
    GridConfig,
    QhMethod,
    QhTarget,
    closed_form_delta,
    grid_delta,
    hardy_estimate,
    quadrature_delta,
    write_hardy_csv,
)

ORIGIN = Point(0.0, 0.0)


def explicit(x: List[float]) -> CombSpec:
    return spec_from_dict({'family': 'Explicit', 'x': list(x)})


def make_spec(family: str, n: int = 40, **params: Any) -> CombSpec:
    return spec_from_dict({'family': family, 'params': params, 'truncate_n': n})


def test_grid_config_validation():
    with pytest.raises(GridConfigError):
        GridConfig(cell=0.25, clip_radius=10.0)
    with pytest.raises(GridConfigError):
        GridConfig(cell=0.05, clip_radius=1.0)
    with pytest.raises(GridConfigError):
        GridConfig(cell=0.05, clip_radius=10.0, connectivity=6)
    assert GridConfig(0.02, 10.0).refined().cell == 0.01, "refinement halves the cell"


def test_same_point_has_zero_distance():
    cfg = GridConfig(cell=0.1, clip_radius=10.0, max_height=2.0)
    result = grid_delta(explicit([2, 5, 9]), cfg, ORIGIN, ORIGIN)
    assert result.value == 0.0, "empty path"
    assert result.method is QhMethod.GRID_PATH, "grid results are tagged GridPath"


def test_coarse_grid_close_to_closed_form():
    spec = explicit([2, 5, 9])
    cfg = GridConfig(cell=0.05, clip_radius=10.0, max_height=1.5)
    result = grid_delta(spec, cfg, ORIGIN, Point(9.0, 0.0))
    exact = qh_axis_distance(spec, 0, 3)
    assert abs(result.value - exact) / exact <= 0.02, f"grid {result.value} vs closed form {exact}"
    assert result.discretization_error > 0, "grid results report their discretization error"


@pytest.mark.slow
def test_fine_grid_agreement_and_refinement():
    spec = explicit([2, 5, 9])
    coarse = GridConfig(cell=0.02, clip_radius=10.0, max_height=1.5)
    fine = coarse.refined()
    target = Point(9.0, 0.0)
    v_coarse = grid_delta(spec, coarse, ORIGIN, target).value
    v_fine = grid_delta(spec, fine, ORIGIN, target).value
    assert abs(v_fine - 7.0396) / 7.0396 <= 0.02, f"cell 0.01 value {v_fine}"
    assert abs(v_fine - v_coarse) / v_coarse < 0.01, f"refinement moved {v_coarse} to {v_fine}"


def test_circle_target_dominated_by_point_on_circle():
    spec = explicit([2, 5])
    cfg = GridConfig(cell=0.05, clip_radius=4.5, max_height=2.0)
    to_circle = grid_delta(spec, cfg, ORIGIN, 4.0)
    to_point = grid_delta(spec, cfg, ORIGIN, Point(4.0, 0.0))
    assert to_circle.target is QhTarget.CIRCLE, "radius targets are circle sets"
    assert to_circle.value <= to_point.value + 1e-12, f"{to_circle.value} > {to_point.value}"
    assert to_circle.attained_at is not None, "the attaining node is recorded"
    assert abs(to_circle.attained_at.modulus - 4.0) <= 0.05, "attaining node lies next to the circle"


def test_circle_radius_must_be_inside_clip():
    cfg = GridConfig(cell=0.1, clip_radius=4.5, max_height=2.0)
    with pytest.raises(GridConfigError):
        grid_delta(explicit([2, 5]), cfg, ORIGIN, 5.0)


def test_target_on_a_ray_is_rejected():
    cfg = GridConfig(cell=0.1, clip_radius=8.0, max_height=2.0)
    with pytest.raises(GridConfigError):
        grid_delta(explicit([2, 5]), cfg, ORIGIN, Point(2.0, 1.5))


def test_off_grid_target_is_rejected():
    spec = explicit([2, 5, 9])
    cfg = GridConfig(cell=0.05, clip_radius=10.0, max_height=1.5)
    with pytest.raises(GridConfigError):
        grid_delta(spec, cfg, ORIGIN, Point(4.03, 0.0))
    with pytest.raises(GridConfigError):
        grid_delta(spec, cfg, ORIGIN, Point(4.0, 0.51))
    on_grid = grid_delta(spec, cfg, ORIGIN, Point(4.05, 0.5))
    assert on_grid.attained_at == Point(4.05, 0.5), "node targets are reported as given"


def test_oversized_grid_is_rejected():
    cfg = GridConfig(cell=0.01, clip_radius=41.0)
    with pytest.raises(GridConfigError):
        grid_delta(make_spec('Constant', alpha=2), cfg, ORIGIN, Point(10.0, 0.0), max_nodes=100_000)


def test_growing_clip_never_increases_distance():
    spec = explicit([2, 5, 9])
    target = Point(5.0, 0.0)
    small = grid_delta(spec, GridConfig(cell=0.1, clip_radius=6.0, max_height=1.2), ORIGIN, target).value
    large = grid_delta(spec, GridConfig(cell=0.1, clip_radius=9.0, max_height=2.5), ORIGIN, target).value
    assert large <= small + 1e-12, f"larger domain gave {large} > {small}"


def test_closed_form_and_quadrature_results():
    spec = explicit([2, 5, 9])
    closed = closed_form_delta(spec, 0, 3)
    numeric = quadrature_delta(spec, 0, 3)
    assert closed.method is QhMethod.CLOSED_FORM and numeric.method is QhMethod.QUADRATURE, "methods tagged"
    assert numeric.value == pytest.approx(closed.value, rel=1e-8), "quadrature reproduces the closed form"


def test_hardy_estimate_validates_radii():
    spec = explicit([2, 5, 9])
    cfg = GridConfig(cell=0.1, clip_radius=8.0, max_height=2.0)
    with pytest.raises(GridConfigError):
        hardy_estimate(spec, cfg, [4.0, 3.0])
    with pytest.raises(GridConfigError):
        hardy_estimate(spec, cfg, [2.0, 8.5])
    with pytest.raises(GridConfigError):
        hardy_estimate(spec, cfg, [0.5, 3.0])


def test_single_tooth_estimate_is_positive():
    spec = explicit([6])
    cfg = GridConfig(cell=0.05, clip_radius=5.5, max_height=2.0)
    estimate = hardy_estimate(spec, cfg, [3.0])
    direct = grid_delta(spec, cfg, ORIGIN, 3.0)
    assert estimate.deltas[0] == pytest.approx(direct.value), "same field as the direct query"
    assert estimate.deltas[0] > 0, "distance to a circle around the start is positive"


@pytest.mark.slow
def test_constant_comb_ratio_grows():
    spec = make_spec('Constant', n=120, alpha=2)
    cfg = GridConfig(cell=0.05, clip_radius=210.0, max_height=2.0)
    estimate = hardy_estimate(spec, cfg, [50.0, 100.0, 200.0])
    ratios = estimate.delta_over_logr
    assert ratios[0] < ratios[1] < ratios[2], f"delta / log r should increase, got {ratios}"
    assert ratios[-1] > 5, f"delta / log r = {ratios[-1]} at the largest radius"
    tail_min = min(ratios[1:])
    assert estimate.sandwich_low == pytest.approx(tail_min / 2), "sandwich low is half the tail min"
    assert estimate.sandwich_high == pytest.approx(2 * tail_min), "sandwich high is twice the tail min"


def test_write_hardy_csv():
    spec = explicit([2, 5, 9])
    cfg = GridConfig(cell=0.1, clip_radius=8.0, max_height=2.0)
    estimate = hardy_estimate(spec, cfg, [2.0, 4.0, 7.0])
    with tempfile.TemporaryDirectory() as tempdir:
        path = os.path.join(tempdir, 'hardy.csv')
        write_hardy_csv(estimate, path)
        with open(path, newline='') as f:
            rows = list(csv.reader(f))
    assert tuple(rows[0]) == HARDY_CSV_COLUMNS, f"unexpected header {rows[0]}"
    assert len(rows) == 4, "one row per radius"
    assert float(rows[1][2]) == pytest.approx(estimate.deltas[0] / math.log(2.0)), "delta over log r"


@pytest.mark.slow
def test_double_exp_ratio_stays_bounded_and_meets_the_bounds():
    spec = make_spec('DoubleExp', n=4)
    cfg = GridConfig(cell=0.2, clip_radius=10_001.0, max_height=1.5)
    estimate = hardy_estimate(spec, cfg, [1e2, 1e3, 1e4])
    ratios = estimate.delta_over_logr
    assert all(0.5 < ratio < 10.0 for ratio in ratios), f"delta / log r left the band: {ratios}"

    verdict = classify(spec)
    assert verdict.decision is Decision.FINITE, f"unexpected verdict {verdict}"
    low, high = verdict.bound_interval
    assert low <= estimate.sandwich_high and estimate.sandwich_low <= high, \
        f"bounds [{low}, {high}] miss the grid interval [{estimate.sandwich_low}, {estimate.sandwich_high}]"
