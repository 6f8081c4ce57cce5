"""Static figures: eigenvalues against the predicted ray, sampled range."""

from __future__ import annotations

import math
from contextlib import contextmanager

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402
import numpy as np  # noqa: E402

golden_mean = (math.sqrt(5) - 1.0) / 2.0
fig_width = 5.0

params = {
    "axes.labelsize": 10,
    "font.family": "serif",
    "font.size": 9,
    "mathtext.fontset": "stix",
    "legend.fontsize": 8,
    "xtick.labelsize": 8,
    "ytick.labelsize": 8,
    "figure.figsize": [fig_width, fig_width * golden_mean * 1.2],
    "lines.linewidth": 1,
    "lines.markersize": 4,
    # deterministic SVG output
    "svg.hashsalt": "semispec",
    "svg.fonttype": "none",
}

markers = ["o", "s", "^", "D", "v", "p"]


@contextmanager
def figure_style():
    with matplotlib.rc_context(params):
        yield


def _save(fig, path):
    fmt = str(path).rsplit(".", 1)[-1]
    meta = {"Date": None} if fmt == "svg" else None
    fig.savefig(path, format=fmt, metadata=meta)
    plt.close(fig)


def spectrum_figure(path, runs, rays, disc=None, title=None):
    """Scatter trusted eigenvalues with one ray per critical point.

    runs : list of (label, values) with values the trusted eigenvalues to show
    rays : list of (z0, angle, length)
    disc : optional (center, radius) fixing the view
    """
    with figure_style():
        fig, ax = plt.subplots()
        for i, (label, vals) in enumerate(runs):
            vals = np.asarray(vals, dtype=complex)
            sc = ax.scatter(
                vals.real,
                vals.imag,
                marker=markers[i % len(markers)],
                s=14,
                facecolors="none",
                edgecolors=f"C{i}",
                label=label,
                zorder=3,
            )
            sc.set_gid(f"eigs-{i}")
        for j, (z0, angle, length) in enumerate(rays):
            end = z0 + length * complex(math.cos(angle), math.sin(angle))
            (ln,) = ax.plot(
                [z0.real, end.real],
                [z0.imag, end.imag],
                "k-",
                label=f"slope {math.tan(angle):.4f}" if j == 0 else None,
            )
            ln.set_gid(f"ray-{j}")
        if disc is not None:
            c, r = disc
            ax.set_xlim(c.real - 0.1 * r, c.real + r)
            ax.set_ylim(c.imag - 0.1 * r, c.imag + r)
        ax.set_xlabel(r"Re $z$")
        ax.set_ylabel(r"Im $z$")
        if title:
            ax.set_title(title)
        ax.legend(loc="upper left")
        ax.grid(alpha=0.3)
        fig.tight_layout()
        _save(fig, path)


def range_figure(path, values, max_points=200_000, title=None):
    """Sampled range p(R^2) in the complex plane (thinned for file size)."""
    vals = np.asarray(values, dtype=complex)
    if len(vals) > max_points:
        vals = vals[:: int(math.ceil(len(vals) / max_points))]
    with figure_style():
        fig, ax = plt.subplots()
        ax.plot(vals.real, vals.imag, ",", color="0.4", rasterized=True)
        ax.set_xlabel(r"Re $p$")
        ax.set_ylabel(r"Im $p$")
        if title:
            ax.set_title(title)
        fig.tight_layout()
        _save(fig, path)
