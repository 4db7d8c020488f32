"""
Grid shortest-path oracle for quasi-hyperbolic distances in a comb.

The comb is sampled on a uniform grid anchored at the source point. Adjacent
interior nodes are joined by an edge of weight |u - v| / d((u + v) / 2), unless
the segment crosses a ray; shortest paths are found with scipy's csgraph Dijkstra.
Grid values are lengths of genuine paths, so they estimate the distance from
above up to the midpoint-rule and anisotropy errors, which are reported.
"""
import logging
import math
from dataclasses import dataclass
from enum import Enum
from typing import List, Optional, Sequence, Tuple, Union

import numpy as np
from scipy.sparse import csr_matrix
from scipy.sparse.csgraph import dijkstra

from combhardy.bounds import axis_quadrature, qh_axis_distance
from combhardy.comb import CombSpec, Point, boundary_distances, ray_positions
from combhardy.errors import GridConfigError, OutsideTruncation, Unreachable
from combhardy.utils import tail_window, write_csv

logger = logging.getLogger(__name__)

HARDY_CSV_COLUMNS = ('r', 'delta', 'delta_over_logr', 'cell', 'clip_radius')

DEFAULT_MAX_NODES = 5_000_000

# worst-case ratio of a grid path to the straight segment it approximates
_ANISOTROPY = {4: math.sqrt(2.0), 8: 1.0 / math.cos(math.pi / 8.0)}
# targets farther than this fraction of a cell from every node are rejected
_SNAP_TOLERANCE = 1e-6


class QhMethod(str, Enum):
    CLOSED_FORM = 'ClosedForm'
    QUADRATURE = 'Quadrature'
    GRID_PATH = 'GridPath'


class QhTarget(str, Enum):
    POINT = 'PointToPoint'
    CIRCLE = 'PointToCircleSet'


@dataclass(frozen=True)
class GridConfig:
    cell: float
    clip_radius: float
    connectivity: int = 8
    max_height: Optional[float] = None

    def __post_init__(self) -> None:
        if not 0 < self.cell < 0.25:
            raise GridConfigError(f"cell must lie in (0, 1/4) to resolve the teeth, got {self.cell}")
        if not self.clip_radius > 1:
            raise GridConfigError(f"clip_radius must exceed 1, got {self.clip_radius}")
        if self.connectivity not in _ANISOTROPY:
            raise GridConfigError(f"connectivity must be 4 or 8, got {self.connectivity}")
        if self.max_height is not None and not self.max_height > 0:
            raise GridConfigError(f"max_height must be positive, got {self.max_height}")

    def refined(self) -> 'GridConfig':
        return GridConfig(self.cell / 2.0, self.clip_radius, self.connectivity, self.max_height)


@dataclass(frozen=True)
class QhDistanceResult:
    value: float
    method: QhMethod
    config: Optional[GridConfig] = None
    target: QhTarget = QhTarget.POINT
    radius: Optional[float] = None
    discretization_error: float = 0.0
    attained_at: Optional[Point] = None


@dataclass(frozen=True)
class HardyEstimate:
    radii: Tuple[float, ...]
    deltas: Tuple[float, ...]
    delta_over_logr: Tuple[float, ...]
    sandwich_low: float
    sandwich_high: float
    attained_at: Tuple[Point, ...]
    config: GridConfig


@dataclass
class _DistanceField:
    re: np.ndarray
    im: np.ndarray
    interior: np.ndarray
    dist: np.ndarray
    config: GridConfig
    shape: Tuple[int, int]

    def node(self, z: Point) -> int:
        h = self.config.cell
        i = int(round((z.re - self.re[0]) / h))
        j = int(round((z.im - self.im[0]) / h))
        n_cols, n_rows = self.shape
        if not (0 <= i < n_cols and 0 <= j < n_rows):
            raise GridConfigError(f"point {z} is not covered by the grid")
        snap = math.hypot(float(self.re[i]) - z.re, float(self.im[j]) - z.im)
        if snap > _SNAP_TOLERANCE * h:
            raise GridConfigError(
                f"point {z} is not a grid node; the nearest node is "
                f"({float(self.re[i]):g}, {float(self.im[j]):g}) with cell {h:g} anchored at the source"
            )
        return i * n_rows + j

    def error(self, value: float) -> float:
        return value * ((_ANISOTROPY[self.config.connectivity] - 1.0) + self.config.cell)


def _offsets(connectivity: int) -> List[Tuple[int, int]]:
    if connectivity == 4:
        return [(1, 0), (0, 1)]
    return [(1, 0), (0, 1), (1, 1), (1, -1)]


def _pairs(n_cols: int, n_rows: int, di: int, dj: int) -> Tuple[np.ndarray, np.ndarray]:
    idx = np.arange(n_cols * n_rows).reshape(n_cols, n_rows)
    if dj >= 0:
        u = idx[:n_cols - di, :n_rows - dj]
        v = idx[di:, dj:]
    else:
        u = idx[:n_cols - di, -dj:]
        v = idx[di:, :n_rows + dj]
    return u.ravel(), v.ravel()


def _distance_field(spec: CombSpec, cfg: GridConfig, source: Point, max_nodes: int) -> _DistanceField:
    rays = ray_positions(spec)
    if rays.size < 2:
        raise GridConfigError("the grid needs at least one materialized tooth")
    h = cfg.cell
    re_min = -rays[1]
    re_max = min(float(rays[-1]), cfg.clip_radius)
    im_max = cfg.clip_radius if cfg.max_height is None else min(cfg.clip_radius, cfg.max_height)
    if source.re > rays[-1]:
        raise OutsideTruncation(f"source {source} lies beyond the last materialized tooth")

    i_lo = math.ceil((re_min - source.re) / h - 1e-9)
    i_hi = math.floor((re_max - source.re) / h + 1e-9)
    j_lo = math.ceil((-im_max - source.im) / h - 1e-9)
    j_hi = math.floor((im_max - source.im) / h + 1e-9)
    n_cols, n_rows = i_hi - i_lo + 1, j_hi - j_lo + 1
    if not (i_lo <= 0 <= i_hi and j_lo <= 0 <= j_hi):
        raise GridConfigError(f"source {source} lies outside the clipped region")
    if n_cols * n_rows > max_nodes:
        raise GridConfigError(
            f"grid of {n_cols} x {n_rows} nodes exceeds the limit of {max_nodes}; "
            "raise the cell size or lower clip_radius / max_height"
        )

    re = np.minimum(source.re + h * np.arange(i_lo, i_hi + 1), re_max)
    im = np.clip(source.im + h * np.arange(j_lo, j_hi + 1), -im_max, im_max)
    grid_re, grid_im = np.meshgrid(re, im, indexing='ij')
    flat_re, flat_im = grid_re.ravel(), grid_im.ravel()
    d = boundary_distances(spec, flat_re, flat_im, rays)
    interior = np.isfinite(d) & (d > 0) & (np.hypot(flat_re, flat_im) <= cfg.clip_radius + 1e-9)

    rows, cols, weights = [], [], []
    for di, dj in _offsets(cfg.connectivity):
        u, v = _pairs(n_cols, n_rows, di, dj)
        keep = interior[u] & interior[v]
        u, v = u[keep], v[keep]
        xu, xv, yu, yv = flat_re[u], flat_re[v], flat_im[u], flat_im[v]
        if di:
            # cell < 1/4 < gaps, so at most one ray sits strictly between two columns
            k = np.searchsorted(rays, xu, side='right')
            has_ray = k < rays.size
            x_ray = rays[np.minimum(k, rays.size - 1)]
            between = has_ray & (x_ray < xv)
            y_cross = yu + (yv - yu) * (x_ray - xu) / (xv - xu)
            keep = ~(between & (np.abs(y_cross) >= 1.0))
            u, v, xu, xv, yu, yv = u[keep], v[keep], xu[keep], xv[keep], yu[keep], yv[keep]
        mid = boundary_distances(spec, 0.5 * (xu + xv), 0.5 * (yu + yv), rays)
        keep = np.isfinite(mid) & (mid > 0)
        rows.append(u[keep])
        cols.append(v[keep])
        weights.append(np.hypot(xv - xu, yv - yu)[keep] / mid[keep])

    n_nodes = n_cols * n_rows
    graph = csr_matrix(
        (np.concatenate(weights), (np.concatenate(rows), np.concatenate(cols))),
        shape=(n_nodes, n_nodes),
    )
    src = (0 - i_lo) * n_rows + (0 - j_lo)
    if not interior[src]:
        raise GridConfigError(f"source {source} is not an interior grid node")
    logger.debug("grid %d x %d, %d edges, cell %g", n_cols, n_rows, graph.nnz, h)
    dist = dijkstra(graph, directed=False, indices=src)
    return _DistanceField(
        re=re, im=im, interior=interior, dist=dist, config=cfg, shape=(n_cols, n_rows),
    )


def _circle_value(field: _DistanceField, r: float) -> Tuple[float, Point]:
    n_rows = field.shape[1]
    grid_re = np.repeat(field.re, n_rows)
    grid_im = np.tile(field.im, field.shape[0])
    band = field.interior & (np.abs(np.hypot(grid_re, grid_im) - r) <= field.config.cell / math.sqrt(2.0))
    if not np.any(band):
        raise GridConfigError(f"no interior grid node lies on the circle |z| = {r:g}")
    candidates = np.flatnonzero(band)
    best = candidates[int(np.argmin(field.dist[candidates]))]
    value = float(field.dist[best])
    if not math.isfinite(value):
        raise Unreachable(f"circle |z| = {r:g} is not reachable on the grid; refine the cell")
    return value, Point(float(grid_re[best]), float(grid_im[best]))


def grid_delta(
    spec: CombSpec,
    cfg: GridConfig,
    source: Point,
    target: Union[Point, float],
    max_nodes: int = DEFAULT_MAX_NODES,
) -> QhDistanceResult:
    """
    Grid estimate of the quasi-hyperbolic distance from source to a point or to the set |z| = r.

    Parameters:
    - spec: CombSpec: Materialized comb
    - cfg: GridConfig: Cell size, clipping and connectivity
    - source: Point: Interior start point, also the grid anchor
    - target: Union[Point, float]: Interior target point, or a radius r < clip_radius
    - max_nodes: int: Refuse grids larger than this

    Returns:
    - QhDistanceResult: GridPath value with its discretization error
    """
    if not isinstance(target, Point):
        r = float(target)
        if not 0 < r < cfg.clip_radius:
            raise GridConfigError(f"circle radius {r:g} must lie in (0, clip_radius = {cfg.clip_radius:g})")
        field = _distance_field(spec, cfg, source, max_nodes)
        value, at = _circle_value(field, r)
        return QhDistanceResult(
            value=value, method=QhMethod.GRID_PATH, config=cfg, target=QhTarget.CIRCLE,
            radius=r, discretization_error=field.error(value), attained_at=at,
        )

    if target == source:
        return QhDistanceResult(value=0.0, method=QhMethod.GRID_PATH, config=cfg, attained_at=source)
    field = _distance_field(spec, cfg, source, max_nodes)
    node = field.node(target)
    if not field.interior[node]:
        raise GridConfigError(f"target {target} is not an interior grid node")
    value = float(field.dist[node])
    if not math.isfinite(value):
        raise Unreachable(f"{target} is not reachable from {source}; refine the cell")
    return QhDistanceResult(
        value=value, method=QhMethod.GRID_PATH, config=cfg,
        discretization_error=field.error(value), attained_at=target,
    )


def closed_form_delta(spec: CombSpec, a: int, b: int) -> QhDistanceResult:
    return QhDistanceResult(value=qh_axis_distance(spec, a, b), method=QhMethod.CLOSED_FORM)


def quadrature_delta(spec: CombSpec, a: int, b: int) -> QhDistanceResult:
    return QhDistanceResult(value=axis_quadrature(spec, a, b), method=QhMethod.QUADRATURE)


def hardy_estimate(
    spec: CombSpec,
    cfg: GridConfig,
    radii: Sequence[float],
    max_nodes: int = DEFAULT_MAX_NODES,
    tail_fraction: float = 0.5,
) -> HardyEstimate:
    """
    delta_C(0, F_r) / log r for each radius from a single distance field.

    The hyperbolic distance lies in [delta / 2, 2 delta], so the tail minimum of
    delta / log r brackets h(C) within a factor of two either way. Diagnostic only.

    Parameters:
    - spec: CombSpec: Materialized comb
    - cfg: GridConfig: Grid parameters
    - radii: Sequence[float]: Increasing radii, each in (1, min(clip_radius, x_N))

    Returns:
    - HardyEstimate: Per-radius values and the sandwich
    """
    radii = [float(r) for r in radii]
    if not radii:
        raise GridConfigError("at least one radius is needed")
    if any(b <= a for a, b in zip(radii, radii[1:])):
        raise GridConfigError(f"radii must be strictly increasing, got {radii}")
    limit = min(cfg.clip_radius, float(ray_positions(spec)[-1]))
    if radii[0] <= 1 or radii[-1] >= limit:
        raise GridConfigError(f"radii must lie in (1, {limit:g}), got {radii}")

    field = _distance_field(spec, cfg, Point(0.0, 0.0), max_nodes)
    deltas, points = [], []
    for r in radii:
        value, at = _circle_value(field, r)
        deltas.append(value)
        points.append(at)
        logger.debug("r = %g: delta = %.6g attained at %s", r, value, at)
    ratios = [d / math.log(r) for d, r in zip(deltas, radii)]
    lo, hi = tail_window(len(ratios), tail_fraction)
    tail_min = min(ratios[lo - 1:hi])
    return HardyEstimate(
        radii=tuple(radii),
        deltas=tuple(deltas),
        delta_over_logr=tuple(ratios),
        sandwich_low=tail_min / 2.0,
        sandwich_high=2.0 * tail_min,
        attained_at=tuple(points),
        config=cfg,
    )


def write_hardy_csv(estimate: HardyEstimate, path: str) -> None:
    cfg = estimate.config
    rows = [
        (r, d, q, float(cfg.cell), float(cfg.clip_radius))
        for r, d, q in zip(estimate.radii, estimate.deltas, estimate.delta_over_logr)
    ]
    write_csv(path, HARDY_CSV_COLUMNS, rows)
