"""
Single configuration layer for combhardy.

Every default lives in Settings. Values are resolved as
defaults < COMBHARDY_<FIELD> environment variables < explicit overrides
(the command line passes its flags as overrides).
"""
import dataclasses
import os
from dataclasses import dataclass
from typing import Any, Dict, Mapping, Optional, Tuple

from combhardy.errors import SpecParseError

ENV_PREFIX = 'COMBHARDY_'


@dataclass(frozen=True)
class Settings:
    # comb materialization
    truncate_n: int = 40
    float_cap: float = 1e300

    # tail diagnostics
    tail_fraction: float = 0.5
    slope_tol: float = 1e-3

    # quasi-hyperbolic grid oracle
    cell: float = 0.02
    clip_radius: float = 41.0
    max_height: Optional[float] = 2.0
    connectivity: int = 8
    radii: Tuple[float, ...] = (10.0, 20.0, 40.0)
    max_nodes: int = 5_000_000

    # Brownian exit times
    n_samples: int = 100_000
    seed: int = 0
    ps: Tuple[float, ...] = (0.2, 0.5, 1.0)
    step_fraction: float = 0.25
    absorb_eps: float = 1e-3
    max_steps: int = 100_000
    chunk_size: int = 8192
    num_threads: int = 4
    truncation_cap: float = 0.01
    strict: bool = False

    # classifier
    thetas: Tuple[float, ...] = ()


DEFAULT_SETTINGS = Settings()


def _convert(name: str, raw: str, default: Any) -> Any:
    field_type = {f.name: f.type for f in dataclasses.fields(Settings)}[name]
    text = raw.strip()
    try:
        if isinstance(default, bool):
            lowered = text.lower()
            if lowered in ('1', 'true', 'yes', 'on'):
                return True
            if lowered in ('0', 'false', 'no', 'off'):
                return False
            raise ValueError(raw)
        if isinstance(default, tuple):
            return tuple(float(v) for v in text.split(',') if v.strip())
        if isinstance(default, int):
            return int(text)
        if 'Optional' in str(field_type) and text.lower() in ('', 'none'):
            return None
        return float(text)
    except ValueError as e:
        raise SpecParseError(f"invalid value for {ENV_PREFIX}{name.upper()}: {raw!r}") from e


def load_settings(env: Optional[Mapping[str, str]] = None, **overrides: Any) -> Settings:
    """
    Resolve the effective Settings.

    Parameters:
    - env: Optional[Mapping[str, str]]: Environment to read (default: os.environ)
    - overrides: Any: Explicit values; None means "not given" and is skipped

    Returns:
    - Settings: The resolved configuration
    """
    env = os.environ if env is None else env
    values: Dict[str, Any] = {}
    for f in dataclasses.fields(Settings):
        key = ENV_PREFIX + f.name.upper()
        if key in env:
            values[f.name] = _convert(f.name, env[key], f.default)
    unknown = set(overrides) - {f.name for f in dataclasses.fields(Settings)}
    if unknown:
        raise TypeError(f"unknown settings: {sorted(unknown)}")
    for name, value in overrides.items():
        if value is not None:
            values[name] = tuple(value) if isinstance(value, list) else value
    return dataclasses.replace(DEFAULT_SETTINGS, **values)
