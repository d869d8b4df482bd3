"""Static SVG figures for the three experiment families.

Rendering is fully in-process (matplotlib Agg backend) and deterministic:
text is stored as paths, the SVG hash salt is pinned, and no date metadata
is embedded, so identical tables produce identical bytes.
"""

from __future__ import annotations

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt
import numpy as np

plt.rcParams["svg.hashsalt"] = "esn-rmt"

_MODEL_STYLE = {"esn": ("tab:blue", "ESN"), "ridge": ("tab:orange", "ridge")}


def save_svg(fig, path) -> None:
    fig.savefig(path, format="svg", metadata={"Date": None})
    plt.close(fig)


def _series(records, model, x_field):
    rows = [r for r in records if r["model"] == model and not r["diverged"]]
    rows.sort(key=lambda r: r[x_field])
    x = np.array([r[x_field] for r in rows])
    y = np.array([r["total"] for r in rows])
    return rows, x, y


def _overlay_mc(ax, rows, x_field, color):
    pts = [r for r in rows if r.get("mc_estimate") is not None]
    if not pts:
        return
    ax.errorbar(
        [r[x_field] for r in pts],
        [r["mc_estimate"] for r in pts],
        yerr=[r["mc_stderr"] for r in pts],
        fmt="o", ms=3.5, color=color, alpha=0.75, capsize=2, linestyle="none",
    )


def render_double_descent(records) -> plt.Figure:
    panels = sorted({r["teacher_rho"] for r in records})
    fig, axes = plt.subplots(
        1, len(panels), figsize=(5.2 * len(panels), 3.8), squeeze=False, sharey=True
    )
    for ax, rho in zip(axes[0], panels):
        panel = [r for r in records if r["teacher_rho"] == rho]
        for model, (color, label) in _MODEL_STYLE.items():
            rows, x, y = _series(panel, model, "gamma")
            ax.semilogy(x, y, "-", color=color, label=label)
            _overlay_mc(ax, rows, "gamma", color)
        ax.axvline(1.0, color="grey", ls=":", lw=1)
        ax.set_xlabel("T / N")
        ax.set_title(f"teacher rho = {rho:g}")
        ax.grid(alpha=0.3)
    axes[0][0].set_ylabel("test risk")
    axes[0][0].legend()
    fig.tight_layout()
    return fig


def render_memory_grid(records) -> plt.Figure:
    cells = [r for r in records if r["model"] == "esn"]
    Ns = sorted({r["N"] for r in cells})
    rhos = sorted({r["rho"] for r in cells})
    grid = np.full((len(rhos), len(Ns)), np.nan)
    for r in cells:
        grid[rhos.index(r["rho"]), Ns.index(r["N"])] = (
            np.nan if r["diff_total"] is None else r["diff_total"]
        )
    fig, ax = plt.subplots(figsize=(6.0, 4.2))
    span = np.nanmax(np.abs(grid)) or 1.0
    mesh = ax.pcolormesh(
        np.arange(len(Ns) + 1), np.arange(len(rhos) + 1), grid,
        cmap="RdBu_r", vmin=-span, vmax=span,
    )
    ax.set_xticks(np.arange(len(Ns)) + 0.5, [str(n) for n in Ns])
    ax.set_yticks(np.arange(len(rhos)) + 0.5, [f"{r:g}" for r in rhos])
    ax.set_xlabel("training samples N")
    ax.set_ylabel("teacher memory rho")
    ax.set_title("ridge minus ESN total risk")
    fig.colorbar(mesh, ax=ax)
    fig.tight_layout()
    return fig


def render_lambda_sweep(records, annotations: dict | None = None) -> plt.Figure:
    fig, ax = plt.subplots(figsize=(6.0, 4.2))
    for model, (color, label) in _MODEL_STYLE.items():
        rows, x, y = _series(records, model, "lam")
        if not len(x):
            continue
        ax.loglog(x, y, "-", color=color, label=f"{label} (analytic)")
        _overlay_mc(ax, rows, "lam", color)
    annotations = annotations or {}
    if "lambda_star" in annotations:
        ax.axvline(
            annotations["lambda_star"], color="k", ls="--", lw=1,
            label="closed-form optimum",
        )
    if "analytic_argmin_lambda" in annotations:
        ax.axvline(
            annotations["analytic_argmin_lambda"], color="green", ls=":", lw=1,
            label="analytic argmin",
        )
    ax.set_xlabel("regularization lambda")
    ax.set_ylabel("test risk")
    ax.grid(alpha=0.3, which="both")
    ax.legend()
    fig.tight_layout()
    return fig


def render(experiment: str, records, annotations: dict | None = None) -> plt.Figure:
    if experiment == "double_descent":
        return render_double_descent(records)
    if experiment == "memory_grid":
        return render_memory_grid(records)
    return render_lambda_sweep(records, annotations)
