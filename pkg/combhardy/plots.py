"""Static SVG figures for the bounds and grid-oracle outputs."""
from typing import Sequence

import matplotlib

matplotlib.use('Agg')

from matplotlib.figure import Figure  # noqa: E402

from combhardy.bounds import BoundSeries  # noqa: E402
from combhardy.errors import IoError  # noqa: E402
from combhardy.qh_oracle import HardyEstimate  # noqa: E402

# fixed salt and no date keep reruns byte-identical
matplotlib.rcParams['svg.hashsalt'] = 'combhardy'
matplotlib.rcParams['svg.fonttype'] = 'none'


def _save(fig: Figure, path: str) -> None:
    try:
        fig.savefig(path, format='svg', metadata={'Date': None})
    except OSError as e:
        raise IoError(f"cannot write {path}: {e}") from e


def plot_bounds(series: Sequence[BoundSeries], path: str, title: str = '') -> None:
    """ratio_R, U_n and L_n against n."""
    n = [s.n for s in series]
    fig = Figure(figsize=(6.4, 4.0))
    ax = fig.add_subplot(1, 1, 1)
    ax.plot(n, [s.upper_U for s in series], label='U_n')
    ax.plot(n, [s.ratio_R for s in series], label='R_n')
    ax.plot(n, [s.lower_L for s in series], label='L_n')
    ax.set_xlabel('n')
    ax.set_ylabel('value')
    if title:
        ax.set_title(title)
    ax.legend()
    fig.tight_layout()
    _save(fig, path)


def plot_hardy(estimate: HardyEstimate, path: str, title: str = '') -> None:
    """delta / log r against r with the sandwich band."""
    fig = Figure(figsize=(6.4, 4.0))
    ax = fig.add_subplot(1, 1, 1)
    ax.plot(estimate.radii, estimate.delta_over_logr, marker='o', label='delta / log r')
    ax.axhspan(estimate.sandwich_low, estimate.sandwich_high, alpha=0.2, label='sandwich')
    ax.set_xscale('log')
    ax.set_xlabel('r')
    ax.set_ylabel('delta / log r')
    if title:
        ax.set_title(title)
    ax.legend()
    fig.tight_layout()
    _save(fig, path)
