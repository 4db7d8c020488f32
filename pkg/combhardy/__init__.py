"""Hardy number diagnostics for comb domains."""
from combhardy.bounds import criterion_series, qh_axis_distance, trend_report
from combhardy.classifier import Decision, Justification, Verdict, classify
from combhardy.comb import CombSpec, Family, Point, load_spec, materialize, spec_from_dict
from combhardy.errors import CombHardyError

__version__ = '0.1.0'

__all__ = [
    'CombHardyError',
    'CombSpec',
    'Decision',
    'Family',
    'Justification',
    'Point',
    'Verdict',
    'classify',
    'criterion_series',
    'load_spec',
    'materialize',
    'qh_axis_distance',
    'spec_from_dict',
    'trend_report',
]
