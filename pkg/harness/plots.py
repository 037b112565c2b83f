"""Static SVG charts for experiment artifacts."""

import logging
from pathlib import Path
from typing import Optional, Sequence

import matplotlib

matplotlib.use('Agg')
matplotlib.rcParams['svg.hashsalt'] = 'gradflow'

import numpy as np  # noqa: E402
from matplotlib.figure import Figure  # noqa: E402

logger = logging.getLogger(__name__)

_SVG_METADATA = {'Date': None}


def _save(fig: Figure, path: Path) -> Path:
    fig.tight_layout()
    fig.savefig(path, format='svg', metadata=_SVG_METADATA)
    logger.debug("Plot written to %s", path)
    return path


def energy_plot(path: Path, t: Sequence[float], energy: Sequence[float], title: str = '') -> Path:
    """Energy against time."""
    fig = Figure(figsize=(6.0, 4.0))
    ax = fig.add_subplot(1, 1, 1)
    ax.plot(t, energy, color='tab:blue', lw=1.5)
    ax.set_xlabel('t')
    ax.set_ylabel('E(v(t))')
    ax.set_title(title or 'energy')
    ax.grid(True, alpha=0.3)
    return _save(fig, path)


def distance_plot(path: Path, t: Sequence[float], distance: Sequence[float],
                  bound: Optional[Sequence[float]] = None, title: str = '') -> Path:
    """
    Distance to the equilibrium on a log axis, with an optional predicted bound.

    Zero distances are dropped from the log plot.
    """
    t, d = np.asarray(t, dtype=float), np.asarray(distance, dtype=float)
    fig = Figure(figsize=(6.0, 4.0))
    ax = fig.add_subplot(1, 1, 1)
    keep = d > 0
    ax.semilogy(t[keep], d[keep], color='tab:blue', lw=1.5, label='measured')
    if bound is not None:
        b = np.asarray(bound, dtype=float)
        ok = b > 0
        ax.semilogy(t[ok], b[ok], color='tab:red', lw=1.0, ls='--', label='bound')
        ax.legend(loc='best')
    ax.set_xlabel('t')
    ax.set_ylabel('d(v(t), phi)')
    ax.set_title(title or 'distance to equilibrium')
    ax.grid(True, which='both', alpha=0.3)
    return _save(fig, path)


def slope_scatter(path: Path, r: Sequence[float], g: Sequence[float], fitted_slope: Optional[float] = None,
                  title: str = '') -> Path:
    """log g against log E(.|phi) with the regression line."""
    r, g = np.asarray(r, dtype=float), np.asarray(g, dtype=float)
    keep = (r > 0) & (g > 0)
    fig = Figure(figsize=(5.0, 5.0))
    ax = fig.add_subplot(1, 1, 1)
    ax.loglog(r[keep], g[keep], '.', ms=2, color='tab:blue', alpha=0.5)
    if fitted_slope is not None and np.isfinite(fitted_slope) and keep.sum() >= 2:
        lr, lg = np.log(r[keep]), np.log(g[keep])
        intercept = float(np.mean(lg - fitted_slope * lr))
        xs = np.linspace(lr.min(), lr.max(), 2)
        ax.loglog(np.exp(xs), np.exp(intercept + fitted_slope * xs), color='tab:red', lw=1.0,
                  label=f'slope {fitted_slope:.3f}')
        ax.legend(loc='best')
    ax.set_xlabel('E(v|phi)')
    ax.set_ylabel('g(v)')
    ax.set_title(title or 'slope against relative entropy')
    ax.grid(True, which='both', alpha=0.3)
    return _save(fig, path)
