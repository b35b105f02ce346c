"""Figures for run reports, rendered off-screen to image files."""

from __future__ import annotations

from pathlib import Path

import numpy as np
from matplotlib.backends.backend_agg import FigureCanvasAgg
from matplotlib.figure import Figure
from matplotlib.tri import Triangulation

from . import postproc as pp

_METADATA = {"Software": None}


def _figure(width=6.0, height=4.0):
    fig = Figure(figsize=(width, height), dpi=100)
    FigureCanvasAgg(fig)
    return fig, fig.add_subplot(1, 1, 1)


def _save(fig, path) -> Path:
    path = Path(path)
    fig.tight_layout()
    fig.savefig(path, metadata=_METADATA)
    return path


def plot_turn_voltages(voltages: pp.TurnVoltages, path, *, label: str = "", reference=None,
                       reference_label: str = "reference") -> Path:
    """Per-turn voltage magnitudes, with the continuous distribution for FW runs."""
    fig, ax = _figure()
    v = np.abs(np.asarray(voltages.values))
    n = len(v)
    turns = np.arange(1, n + 1)
    ax.plot(turns, v, "o", label=label or "turn voltage")
    if voltages.distribution is not None:
        alpha = np.linspace(0.0, 1.0, 400)
        phi = np.abs(voltages.distribution(alpha))
        ax.plot(0.5 + alpha * n, phi, "-", lw=1.0, label="distribution")
    if reference is not None:
        ax.plot(turns, np.abs(np.asarray(reference)), "x", label=reference_label)
    ax.set_xlabel("turn")
    ax.set_ylabel("|V| (V)")
    ax.grid(True, alpha=0.3)
    ax.legend()
    return _save(fig, path)


def plot_losses(series: pp.LossSeries, path) -> Path:
    fig, ax = _figure()
    ax.plot(series.times * 1e3, series.power, lw=1.0, label="instantaneous")
    ok = np.isfinite(series.window_average)
    if ok.any():
        ax.plot(series.times[ok] * 1e3, series.window_average[ok], lw=1.5, label="one-period average")
    ax.set_xlabel("time (ms)")
    ax.set_ylabel("loss (W/m)")
    ax.grid(True, alpha=0.3)
    ax.legend()
    return _save(fig, path)


def plot_current_density(solution, path, step: int = -1) -> Path:
    """|j| per triangle on the mesh (peak value for harmonic runs)."""
    sys = solution.system
    mesh = sys.mesh
    xs, dxs = pp._field_history(solution)
    k = 0 if solution.kind == "harmonic" else step
    j = pp.element_current_density(sys, xs[k], dxs[k])
    mag = np.abs(j[0]).mean(axis=-1)
    tri = Triangulation(mesh.nodes[:, 0], mesh.nodes[:, 1], mesh.triangles)
    fig, ax = _figure(6.0, 5.0)
    cond = sys.materials.conducting | sys.materials.hts_mask
    if cond.any():
        c = mesh.nodes[mesh.triangles[cond]].reshape(-1, 2)
        lo, hi = c.min(axis=0), c.max(axis=0)
        pad = 0.5 * (hi - lo)
        ax.set_xlim(lo[0] - pad[0], hi[0] + pad[0])
        ax.set_ylim(lo[1] - pad[1], hi[1] + pad[1])
    pc = ax.tripcolor(tri, facecolors=mag, cmap="viridis", edgecolors="none")
    fig.colorbar(pc, ax=ax, label="|j| (A/m²)")
    ax.set_aspect("equal")
    ax.set_xlabel("r (m)" if mesh.coordinate_system == "axisymmetric" else "x (m)")
    ax.set_ylabel("z (m)" if mesh.coordinate_system == "axisymmetric" else "y (m)")
    return _save(fig, path)


def plot_sweep(rows: list[dict], axis: str, path) -> Path:
    """R_tot and L_tot (or loss) against the sweep value, one curve per model."""
    keys = [k for k in ("R_tot", "L_tot", "loss") if any(k in r for r in rows)]
    fig = Figure(figsize=(6.0, 2.6 * max(len(keys), 1)), dpi=100)
    FigureCanvasAgg(fig)
    models = sorted({r["model"] for r in rows})
    for i, key in enumerate(keys):
        ax = fig.add_subplot(len(keys), 1, i + 1)
        for m in models:
            pts = [(r["value"], r[key]) for r in rows if r["model"] == m and key in r]
            if pts:
                xv, yv = zip(*pts)
                ax.plot(range(len(xv)) if axis == "basis" else xv, yv, "o-", label=m)
                if axis == "basis":
                    ax.set_xticks(range(len(xv)), [str(v) for v in xv])
        ax.set_ylabel(key)
        ax.grid(True, alpha=0.3)
        if i == 0:
            ax.legend(fontsize="small")
    fig.axes[-1].set_xlabel(axis)
    return _save(fig, path)
