"""Static figures rendered from sweep rows.

Plots are pure views of the CSV data: every series here can be rebuilt from
``sweep.read_rows`` output alone. Styling: unmeasured phase curves in
grayscale, measured series in solid colors keyed by measurement site.
"""

from __future__ import annotations

from pathlib import Path
from typing import Mapping, Sequence

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt
import numpy as np

_MEASURED_COLORS = ("tab:red", "tab:blue", "tab:green", "tab:purple", "tab:orange")


def _normalize(rows: Sequence) -> list[dict]:
    return [r.as_dict() if hasattr(r, "as_dict") else dict(r) for r in rows]


def _series(rows: list[dict], **match) -> tuple[np.ndarray, list[dict]]:
    picked = [r for r in rows if all(r.get(k) == v for k, v in match.items())]
    picked.sort(key=lambda r: r["T"])
    return np.array([r["T"] for r in picked]), picked


def _grouped(rows: list[dict]) -> tuple[list[float], list[tuple[int, float]]]:
    thetas = sorted({r["theta"] for r in rows if r["mode"] == "unmeasured"})
    schemes = sorted({(r["site"], r["phi"]) for r in rows if r["mode"] == "measured"})
    return thetas, schemes


def emit_plots(rows: Sequence, out_dir: str | Path) -> list[Path]:
    """Write the four standard figures; needs at least two distinct temperatures."""
    rows = _normalize(rows)
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    temps = sorted({r["T"] for r in rows})
    if len(temps) < 2:
        raise ValueError("plots need at least two distinct temperatures")
    thetas, schemes = _grouped(rows)
    if not thetas and not schemes:
        raise ValueError("no plottable series in rows")

    def measured_label(site, phi):
        return f"measured n={site}, phi={phi:.3g}"

    paths = []

    def new_axes(ylabel):
        fig, ax = plt.subplots(figsize=(6.4, 4.2))
        ax.set_xscale("log")
        ax.set_xlim(temps[0], temps[-1])
        ax.set_xlabel("T")
        ax.set_ylabel(ylabel)
        return fig, ax

    def save(fig, ax, name):
        ax.legend(fontsize=8)
        fig.tight_layout()
        path = out_dir / name
        fig.savefig(path, dpi=150)
        plt.close(fig)
        paths.append(path)

    # (a) efficiency
    fig, ax = new_axes("efficiency")
    for i, theta in enumerate(thetas):
        t, picked = _series(rows, mode="unmeasured", theta=theta)
        shade = 0.75 * i / max(1, len(thetas) - 1)
        ax.plot(t, [r["eta"] for r in picked], color=str(shade), lw=1.2,
                label=f"unmeasured theta={theta:.3g}")
    for i, (site, phi) in enumerate(schemes):
        t, picked = _series(rows, mode="measured", site=site, phi=phi)
        ax.plot(t, [r["eta"] for r in picked], color=_MEASURED_COLORS[i % 5], lw=1.6,
                label=measured_label(site, phi))
    save(fig, ax, "fig_a_efficiency.png")

    # (b) total extracted energy
    fig, ax = new_axes("total ergotropy")
    if thetas:
        t, picked = _series(rows, mode="unmeasured", theta=thetas[0])
        ax.plot(t, [r["E_tot"] for r in picked], color="black", lw=1.4, label="unmeasured")
    for i, (site, phi) in enumerate(schemes):
        t, picked = _series(rows, mode="measured", site=site, phi=phi)
        ax.plot(t, [r["E_tot"] for r in picked], color=_MEASURED_COLORS[i % 5], lw=1.6,
                label=measured_label(site, phi))
    save(fig, ax, "fig_b_total_ergotropy.png")

    # (c) memory ergotropy and daemonic gain
    fig, ax = new_axes("memory ergotropy / daemonic gain")
    for i, (site, phi) in enumerate(schemes):
        t, picked = _series(rows, mode="measured", site=site, phi=phi)
        color = _MEASURED_COLORS[i % 5]
        ax.plot(t, [r["E_m"] for r in picked], color=color, ls=":", lw=1.6,
                label=f"E_m n={site}, phi={phi:.3g}")
        ax.plot(t, [r["dE_b"] for r in picked], color=color, ls="--", lw=1.6,
                label=f"gain n={site}, phi={phi:.3g}")
    save(fig, ax, "fig_c_gains.png")

    # (work) total, measurement, and reset work; symlog because the reset work
    # turns negative at low temperature.
    fig, ax = new_axes("work")
    ax.set_yscale("symlog", linthresh=1e-6)
    if thetas:
        t, picked = _series(rows, mode="unmeasured", theta=thetas[0])
        ax.plot(t, [r["W_tot"] for r in picked], color="black", lw=1.4, label="W_tot unmeasured")
    for i, (site, phi) in enumerate(schemes):
        t, picked = _series(rows, mode="measured", site=site, phi=phi)
        color = _MEASURED_COLORS[i % 5]
        ax.plot(t, [r["W_tot"] for r in picked], color=color, lw=1.6,
                label=f"W_tot n={site}, phi={phi:.3g}")
        ax.plot(t, [r["W_meas"] for r in picked], color=color, ls="--", lw=1.2,
                label=f"W_meas n={site}")
        ax.plot(t, [r["W_reset"] for r in picked], color=color, ls=":", lw=1.2,
                label=f"W_reset n={site}")
    save(fig, ax, "fig_work.png")
    return paths
