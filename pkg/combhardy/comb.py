"""
Canonical comb domains.

The domains handled here are

    C = {Re z > -x_1} minus the rays {x_n + iy : |y| >= 1}, n = 0, 1, 2, ...

with x_0 = 0 and gaps alpha_n = x_n - x_{n-1} whose infimum exceeds 1.

A general comb, the plane minus rays {x_n + iy : |y| >= c_n} for n in Z with
m <= c_n <= M, reduces to this form without changing whether its Hardy number
is finite: it sits between the combs with constant half-lengths m and M, which
are affine images of each other; a two-sided comb has infinite Hardy number iff
both of its one-sided halves {Re z > -x_1} and {Re z < -x_{-1}} do, and the left
half is a reflection of a right half; finally an affine map brings the
half-length to 1 with gaps above 1. Only that canonical one-sided form is
implemented.

A CombSpec is always a finite prefix of N gaps. All gap and coordinate
arithmetic is kept in natural-log space; raw coordinates x_n exist as floats
only while they stay below the float cap.
"""
import json
import logging
import math
from dataclasses import dataclass, field, replace
from enum import Enum
from typing import Any, Callable, Dict, List, Mapping, Optional, Tuple

import numpy as np

from combhardy.errors import (
    FloatOverflow,
    IndexOutOfRange,
    InvalidFamilyParam,
    IoError,
    OutsideTruncation,
    SpecParseError,
)

logger = logging.getLogger(__name__)

DEFAULT_FLOAT_CAP = 1e300


class Family(str, Enum):
    EXPLICIT = 'Explicit'
    CONSTANT = 'Constant'
    POLYNOMIAL = 'Polynomial'
    EXPONENTIAL = 'Exponential'
    SUBEXP_EXP = 'SubexpExp'
    DOUBLE_EXP = 'DoubleExp'
    OSCILLATING = 'Oscillating'
    CUSTOM = 'Custom'


class BKind(str, Enum):
    LINEAR = 'linear'
    CUSTOM = 'custom'
    POWER = 'power'
    EXP_POWER = 'exp_power'
    EXP_N_OVER_LOG_N = 'exp_n_over_log_n'


class Growth(str, Enum):
    """Symbolic growth class a family is known to have."""

    BOUNDED = 'bounded'
    SUBEXPONENTIAL = 'subexponential'
    B_WITNESS = 'b_witness'
    NONE = 'none'


@dataclass(frozen=True)
class Point:
    re: float
    im: float = 0.0

    def __post_init__(self) -> None:
        if not (math.isfinite(self.re) and math.isfinite(self.im)):
            raise ValueError(f"point coordinates must be finite, got ({self.re}, {self.im})")

    @property
    def modulus(self) -> float:
        return math.hypot(self.re, self.im)


@dataclass(frozen=True)
class BFamily:
    """
    A comparison sequence b_1, b_2, ... used as growth envelope alpha_n <= e^{b_n}.

    Kinds:
    - linear: b_n = b1 + (n - 1) r
    - custom: b_n read from `table`
    - power: b_n = n^exponent
    - exp_power: b_n = exp(n^exponent)
    - exp_n_over_log_n: b_n = exp(m / log m) with m = n + 2 (m >= 3 keeps it increasing)
    """

    kind: BKind
    r: float = 1.0
    b1: float = 1.0
    exponent: float = 1.0
    table: Tuple[float, ...] = ()

    def values(self, n: int) -> np.ndarray:
        """b_1 .. b_n as an array."""
        idx = np.arange(1, n + 1, dtype=float)
        if self.kind is BKind.LINEAR:
            return self.b1 + self.r * (idx - 1.0)
        if self.kind is BKind.CUSTOM:
            if len(self.table) < n:
                raise InvalidFamilyParam(f"custom b-family has {len(self.table)} values, {n} needed")
            return np.asarray(self.table[:n], dtype=float)
        if self.kind is BKind.POWER:
            return idx ** self.exponent
        if self.kind is BKind.EXP_POWER:
            return np.exp(idx ** self.exponent)
        if self.kind is BKind.EXP_N_OVER_LOG_N:
            m = idx + 2.0
            return np.exp(m / np.log(m))
        raise InvalidFamilyParam(f"unknown b-family kind {self.kind!r}")

    def increments(self, n: int) -> np.ndarray:
        """b_i - b_{i-1} for i = 2 .. n."""
        return np.diff(self.values(n))

    def min_increment(self, n: int) -> float:
        """inf over 1 < i <= n of b_i - b_{i-1}; +inf when n < 2."""
        if n < 2:
            return math.inf
        return float(np.min(self.increments(n)))

    def validate(self, n: int) -> None:
        values = self.values(n)
        if np.any(values <= 0):
            raise InvalidFamilyParam("b-family must be positive")
        if self.kind is BKind.LINEAR and (self.r <= 0 or self.b1 <= 0):
            raise InvalidFamilyParam(f"linear b-family needs r > 0 and b1 > 0, got r={self.r}, b1={self.b1}")
        if n >= 2 and self.min_increment(n) <= 0:
            raise InvalidFamilyParam("b-family must have positive increments")

    def to_dict(self) -> Dict[str, Any]:
        if self.kind is BKind.LINEAR:
            return {'kind': self.kind.value, 'r': self.r, 'b1': self.b1}
        if self.kind is BKind.CUSTOM:
            return {'kind': self.kind.value, 'values': list(self.table)}
        if self.kind in (BKind.POWER, BKind.EXP_POWER):
            return {'kind': self.kind.value, 'exponent': self.exponent}
        return {'kind': self.kind.value}

    @classmethod
    def from_dict(cls, payload: Mapping[str, Any]) -> 'BFamily':
        try:
            kind = BKind(str(payload.get('kind', 'linear')).lower())
        except ValueError as e:
            raise SpecParseError(f"unknown b-family kind {payload.get('kind')!r}") from e
        try:
            if kind is BKind.LINEAR:
                return cls(kind, r=float(payload.get('r', 1.0)), b1=float(payload.get('b1', 1.0)))
            if kind is BKind.CUSTOM:
                return cls(kind, table=tuple(float(v) for v in payload['values']))
            if kind in (BKind.POWER, BKind.EXP_POWER):
                return cls(kind, exponent=float(payload['exponent']))
            return cls(kind)
        except (KeyError, TypeError, ValueError) as e:
            raise SpecParseError(f"malformed b-family {dict(payload)!r}: {e}") from e


@dataclass(frozen=True)
class OscillatingParams:
    """Constant gap c off a sparse subsequence k_m, spikes e^{b_{k_m}} on it."""

    c: float
    b: BFamily = BFamily(BKind.LINEAR)

    def validate(self, n: int) -> None:
        if not self.c > 1:
            raise InvalidFamilyParam(f"oscillating comb needs c > 1, got c={self.c}")
        if self.b.kind is BKind.LINEAR and self.b.r <= 0:
            raise InvalidFamilyParam(f"oscillating comb needs r > 0, got r={self.b.r}")
        self.b.validate(n)

    def k_indices(self, n: int) -> Tuple[int, ...]:
        """
        Greedy spike indices k_1 < k_2 < ... <= n.

        k_m is the smallest index admitted by b_{k_m} >= sum_{i<m} b_{k_i}; from m = 3
        on it must also skip one index (k_m >= k_{m-1} + 2) so that alpha_{k_m + 1} = c
        for every m >= 2.
        """
        b = self.b.values(n)
        ks: List[int] = []
        total = 0.0
        for idx in range(1, n + 1):
            if len(ks) >= 2 and idx < ks[-1] + 2:
                continue
            if not ks or b[idx - 1] >= total:
                ks.append(idx)
                total += float(b[idx - 1])
        return tuple(ks)

    def increment_floor(self, n: int) -> float:
        """r = inf_{1 < i <= n} (b_i - b_{i-1}); exactly the declared r for a linear b-family."""
        if self.b.kind is BKind.LINEAR:
            return self.b.r
        return self.b.min_increment(n)

    def to_dict(self) -> Dict[str, Any]:
        return {'c': self.c, 'b': self.b.to_dict()}

    @classmethod
    def from_dict(cls, payload: Mapping[str, Any]) -> 'OscillatingParams':
        try:
            c = float(payload['c'])
        except (KeyError, TypeError, ValueError) as e:
            raise SpecParseError(f"oscillating family needs a numeric 'c': {e}") from e
        b = BFamily.from_dict(payload.get('b', {'kind': 'linear'}))
        return cls(c=c, b=b)


@dataclass(frozen=True)
class CustomFormula:
    name: str
    log_gaps: Callable[[np.ndarray, Mapping[str, Any]], np.ndarray]
    growth: Growth
    witness: Optional[Callable[[Mapping[str, Any]], BFamily]] = None
    note: str = ''


def _alternating_power(n: np.ndarray, params: Mapping[str, Any]) -> np.ndarray:
    p = float(params['p'])
    if p <= 0:
        raise InvalidFamilyParam(f"alternating_power needs p > 0, got {p}")
    return np.where(n % 2 == 1, math.log(2.0), p * np.log(n))


def _periodic(n: np.ndarray, params: Mapping[str, Any]) -> np.ndarray:
    gaps = np.asarray(params['gaps'], dtype=float)
    if gaps.size == 0:
        raise InvalidFamilyParam("periodic formula needs at least one gap")
    return np.log(gaps[(n.astype(int) - 1) % gaps.size])


def _exp_exp_power(n: np.ndarray, params: Mapping[str, Any]) -> np.ndarray:
    k = float(params['k'])
    if not 0 < k < 1:
        raise InvalidFamilyParam(f"exp_exp_power needs 0 < k < 1, got {k}")
    return np.exp(n ** k)


def _exp_exp_n_over_log_n(n: np.ndarray, params: Mapping[str, Any]) -> np.ndarray:
    m = n + 2.0
    return np.exp(m / np.log(m))


CUSTOM_FORMULAS: Dict[str, CustomFormula] = {
    'alternating_power': CustomFormula(
        'alternating_power', _alternating_power, Growth.SUBEXPONENTIAL,
        note='alpha_n = 2 for odd n, n^p for even n',
    ),
    'periodic': CustomFormula('periodic', _periodic, Growth.BOUNDED, note='gaps repeat with a fixed period'),
    'exp_exp_power': CustomFormula(
        'exp_exp_power', _exp_exp_power, Growth.B_WITNESS,
        witness=lambda params: BFamily(BKind.EXP_POWER, exponent=float(params['k'])),
        note='alpha_n = exp(exp(n^k)), witnessed by b_n = exp(n^k)',
    ),
    'exp_exp_n_over_log_n': CustomFormula(
        'exp_exp_n_over_log_n', _exp_exp_n_over_log_n, Growth.B_WITNESS,
        witness=lambda params: BFamily(BKind.EXP_N_OVER_LOG_N),
        note=('interpretation: alpha_n = exp(exp(m/log m)) with m = n + 2, witnessed by '
              'b_n = exp(m/log m); the shift starts m past e, where m/log m turns increasing'),
    ),
}


@dataclass(frozen=True)
class CombSpec:
    """
    Declarative description of a comb domain: a gap family plus a truncation depth.

    `log_gaps` holds log alpha_1 .. log alpha_N once the spec is materialized.
    """

    family: Family
    params: Mapping[str, Any] = field(default_factory=dict)
    truncate_n: int = 40
    log_gaps: Tuple[float, ...] = ()
    float_cap: float = DEFAULT_FLOAT_CAP

    @property
    def materialized(self) -> bool:
        return len(self.log_gaps) == self.truncate_n

    @property
    def gaps_log(self) -> np.ndarray:
        if not self.materialized:
            raise InvalidFamilyParam("comb spec is not materialized")
        return np.asarray(self.log_gaps, dtype=float)

    @property
    def oscillating(self) -> OscillatingParams:
        if self.family is not Family.OSCILLATING:
            raise InvalidFamilyParam(f"{self.family.value} comb has no oscillating parameters")
        return OscillatingParams.from_dict(self.params)

    @property
    def custom_formula(self) -> CustomFormula:
        if self.family is not Family.CUSTOM:
            raise InvalidFamilyParam(f"{self.family.value} comb has no custom formula")
        name = self.params.get('formula')
        if name not in CUSTOM_FORMULAS:
            raise InvalidFamilyParam(f"unknown custom formula {name!r}; known: {sorted(CUSTOM_FORMULAS)}")
        return CUSTOM_FORMULAS[name]


def _param(params: Mapping[str, Any], name: str, default: Optional[float] = None) -> float:
    if name not in params:
        if default is None:
            raise InvalidFamilyParam(f"missing family parameter {name!r}")
        return default
    try:
        return float(params[name])
    except (TypeError, ValueError) as e:
        raise InvalidFamilyParam(f"family parameter {name!r} must be numeric, got {params[name]!r}") from e


def _family_log_gaps(spec: CombSpec) -> np.ndarray:
    n_max = spec.truncate_n
    n = np.arange(1, n_max + 1, dtype=float)
    params = spec.params
    family = spec.family

    if family is Family.EXPLICIT:
        x = np.asarray(params.get('x', ()), dtype=float)
        if x.size < n_max:
            raise InvalidFamilyParam(f"explicit comb lists {x.size} teeth, truncate_n={n_max}")
        gaps = np.diff(np.concatenate(([0.0], x[:n_max])))
        if np.any(gaps <= 0):
            raise InvalidFamilyParam("explicit tooth positions must be strictly increasing and positive")
        return np.log(gaps)
    if family is Family.CONSTANT:
        alpha = _param(params, 'alpha')
        if alpha <= 0:
            raise InvalidFamilyParam(f"constant gap must be positive, got {alpha}")
        return np.full(n_max, math.log(alpha))
    if family is Family.POLYNOMIAL:
        p = _param(params, 'p')
        if p <= 0:
            raise InvalidFamilyParam(f"polynomial family needs p > 0, got {p}")
        return p * np.log(n + 1.0)
    if family is Family.EXPONENTIAL:
        c = _param(params, 'c')
        if c <= 0:
            raise InvalidFamilyParam(f"exponential family needs c > 0, got {c}")
        return c * n
    if family is Family.SUBEXP_EXP:
        p = _param(params, 'p')
        if p <= 0:
            raise InvalidFamilyParam(f"SubexpExp family needs p > 0, got {p}")
        return n ** p
    if family is Family.DOUBLE_EXP:
        scale = _param(params, 'scale', 1.0)
        if scale <= 0:
            raise InvalidFamilyParam(f"DoubleExp scale must be positive, got {scale}")
        return np.exp(n) + math.log(scale)
    if family is Family.OSCILLATING:
        osc = OscillatingParams.from_dict(params)
        osc.validate(n_max)
        log_gaps = np.full(n_max, math.log(osc.c))
        b = osc.b.values(n_max)
        for k in osc.k_indices(n_max):
            log_gaps[k - 1] = b[k - 1]
        return log_gaps
    if family is Family.CUSTOM:
        formula = spec.custom_formula
        try:
            return np.asarray(formula.log_gaps(n, params), dtype=float)
        except (KeyError, TypeError, ValueError) as e:
            raise InvalidFamilyParam(f"custom formula {formula.name!r} rejected params {dict(params)!r}: {e}") from e
    raise InvalidFamilyParam(f"unknown family {family!r}")


def materialize(spec: CombSpec) -> CombSpec:
    """
    Fill log_gaps from the family formula.

    Parameters:
    - spec: CombSpec: Spec with family, params and truncate_n

    Returns:
    - CombSpec: Copy of the spec with log alpha_1 .. log alpha_N filled in
    """
    if spec.truncate_n < 1:
        raise InvalidFamilyParam(f"truncate_n must be >= 1, got {spec.truncate_n}")
    log_gaps = _family_log_gaps(spec)
    if not np.all(np.isfinite(log_gaps)):
        raise InvalidFamilyParam(f"{spec.family.value} family produced non-finite gaps")
    bad = np.flatnonzero(log_gaps <= 0)
    if bad.size:
        i = int(bad[0]) + 1
        raise InvalidFamilyParam(f"gap alpha_{i} = exp({log_gaps[i - 1]:.6g}) is not > 1")
    logger.debug("materialized %s comb with %d teeth", spec.family.value, spec.truncate_n)
    return replace(spec, log_gaps=tuple(float(v) for v in log_gaps))


def log_x_series(spec: CombSpec) -> np.ndarray:
    """log x_1 .. log x_N by running log-sum-exp of the gaps; never overflows."""
    return np.logaddexp.accumulate(spec.gaps_log)


def log_x_coord(spec: CombSpec, n: int) -> float:
    if not 0 <= n <= spec.truncate_n:
        raise IndexOutOfRange(f"tooth index {n} outside 0..{spec.truncate_n}")
    if n == 0:
        return -math.inf
    return float(log_x_series(spec)[n - 1])


def ray_positions(spec: CombSpec) -> np.ndarray:
    """
    x_0 = 0, x_1, .., x_M as floats, where x_M is the last coordinate below the float cap.
    """
    if spec.family is Family.EXPLICIT:
        x = np.asarray(spec.params['x'], dtype=float)[:spec.truncate_n]
        x = x[x <= spec.float_cap]
        return np.concatenate(([0.0], x))
    log_x = log_x_series(spec)
    m = int(np.searchsorted(log_x, math.log(spec.float_cap), side='right'))
    gaps = np.exp(spec.gaps_log[:m])
    return np.concatenate(([0.0], np.cumsum(gaps)))


def x_coord(spec: CombSpec, n: int) -> float:
    """x_n as a float; FloatOverflow once x_n exceeds the float cap."""
    if not 0 <= n <= spec.truncate_n:
        raise IndexOutOfRange(f"tooth index {n} outside 0..{spec.truncate_n}")
    x = ray_positions(spec)
    if n >= x.size:
        raise FloatOverflow(f"x_{n} = exp({log_x_coord(spec, n):.6g}) exceeds the float cap {spec.float_cap:g}")
    return float(x[n])


def geometric_extent(spec: CombSpec) -> float:
    """Largest materialized ray position available as a float."""
    return float(ray_positions(spec)[-1])


def boundary_distances(spec: CombSpec, re: Any, im: Any, rays: Optional[np.ndarray] = None) -> np.ndarray:
    """
    Vectorized Euclidean distance to the comb boundary.

    Only the wall and the two rays bracketing Re z can be nearest, since any other
    ray is farther both horizontally and vertically. Points outside the domain get 0,
    points beyond the last materialized ray get NaN.

    Parameters:
    - spec: CombSpec: Materialized comb
    - re, im: array-like: Coordinates, broadcast together
    - rays: Optional[np.ndarray]: Precomputed ray_positions(spec)

    Returns:
    - np.ndarray: Distances with the broadcast shape of re and im
    """
    x = ray_positions(spec) if rays is None else rays
    re = np.asarray(re, dtype=float)
    im = np.asarray(im, dtype=float)
    re, im = np.broadcast_arrays(re, im)
    ay = np.abs(im)
    last = x.size - 1

    d_wall = re + x[1] if last >= 1 else np.full(re.shape, math.inf)
    j = np.searchsorted(x, re, side='right') - 1

    def to_ray(idx: np.ndarray) -> np.ndarray:
        dx = np.abs(re - x[np.clip(idx, 0, last)])
        return np.where(ay >= 1.0, dx, np.hypot(dx, 1.0 - ay))

    d_left = np.where(j >= 0, to_ray(j), math.inf)
    d_right = np.where(j + 1 <= last, to_ray(j + 1), math.inf)
    d = np.minimum(d_wall, np.minimum(d_left, d_right))
    d = np.where(d_wall <= 0, 0.0, np.maximum(d, 0.0))
    return np.where(re <= x[last], d, np.nan)


def _check_extent(spec: CombSpec, z: Point) -> None:
    extent = geometric_extent(spec)
    if z.re > extent:
        raise OutsideTruncation(f"Re z = {z.re:g} lies beyond the last materialized tooth at {extent:g}")


def contains(spec: CombSpec, z: Point) -> bool:
    """True iff z lies in the comb; OutsideTruncation beyond the last materialized tooth."""
    _check_extent(spec, z)
    return bool(boundary_distances(spec, z.re, z.im) > 0)


def dist_to_boundary(spec: CombSpec, z: Point) -> float:
    """d(z, boundary of C); 0 for points outside the comb."""
    _check_extent(spec, z)
    return float(boundary_distances(spec, z.re, z.im))


def insert_tooth(spec: CombSpec, position: float) -> CombSpec:
    """Explicit copy of the comb with one more ray at `position`."""
    x = sorted(list(ray_positions(spec)[1:]) + [float(position)])
    return spec_from_dict({'family': Family.EXPLICIT.value, 'params': {'x': x}}, float_cap=spec.float_cap)


def spec_from_dict(
    payload: Mapping[str, Any],
    truncate_n: Optional[int] = None,
    float_cap: float = DEFAULT_FLOAT_CAP,
    default_n: int = 40,
) -> CombSpec:
    """
    Build and materialize a CombSpec from its JSON object form.

    The object is {"family": str, "params": object, "truncate_n": int}; the Explicit
    family takes "x" either inside params or at top level, and defaults truncate_n to len(x).
    """
    if not isinstance(payload, Mapping):
        raise SpecParseError("comb spec must be a JSON object")
    name = payload.get('family')
    families = {f.value.lower(): f for f in Family}
    if not isinstance(name, str) or name.lower() not in families:
        raise SpecParseError(f"unknown family {name!r}; expected one of {[f.value for f in Family]}")
    family = families[name.lower()]
    params = payload.get('params', {})
    if not isinstance(params, Mapping):
        raise SpecParseError("'params' must be a JSON object")
    params = dict(params)
    if family is Family.EXPLICIT:
        if 'x' not in params and 'x' in payload:
            params['x'] = payload['x']
        if not isinstance(params.get('x'), (list, tuple)) or not params['x']:
            raise SpecParseError("Explicit family needs a non-empty list 'x'")
        try:
            params['x'] = [float(v) for v in params['x']]
        except (TypeError, ValueError) as e:
            raise SpecParseError(f"Explicit 'x' must be numbers: {e}") from e
    n = truncate_n if truncate_n is not None else payload.get('truncate_n')
    if n is None:
        n = len(params['x']) if family is Family.EXPLICIT else default_n
    if isinstance(n, bool) or not isinstance(n, int):
        raise SpecParseError(f"truncate_n must be an integer, got {n!r}")
    return materialize(CombSpec(family=family, params=params, truncate_n=n, float_cap=float_cap))


def spec_to_dict(spec: CombSpec) -> Dict[str, Any]:
    return {'family': spec.family.value, 'params': dict(spec.params), 'truncate_n': spec.truncate_n}


def load_spec(
    path: str,
    truncate_n: Optional[int] = None,
    float_cap: float = DEFAULT_FLOAT_CAP,
    default_n: int = 40,
) -> CombSpec:
    """
    Read a comb spec file.

    Parameters:
    - path: str: JSON spec file
    - truncate_n: Optional[int]: Overrides the file's truncation depth
    - float_cap: float: Largest raw coordinate materialized as a float
    - default_n: int: Depth used when neither the file nor the caller gives one

    Returns:
    - CombSpec: The materialized spec
    """
    try:
        with open(path, 'r', encoding='utf-8') as f:
            text = f.read()
    except OSError as e:
        raise IoError(f"cannot read spec file {path}: {e}") from e
    try:
        payload = json.loads(text)
    except json.JSONDecodeError as e:
        raise SpecParseError(f"{path} is not valid JSON: {e}") from e
    return spec_from_dict(payload, truncate_n=truncate_n, float_cap=float_cap, default_n=default_n)
