"""Figure rendering for the report path.

Every command that writes delimited output also renders a small matplotlib
figure next to it.  Figures are presentation artifacts; the CSV/JSON files
stay the canonical data."""

from __future__ import annotations

from pathlib import Path

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt  # noqa: E402
import numpy as np  # noqa: E402

_SAVE_KW = {"dpi": 120, "metadata": {"Software": None}}


def _finish(fig, path):
    fig.tight_layout()
    fig.savefig(path, **_SAVE_KW)
    plt.close(fig)
    return Path(path)


def profile_plot(path, x, series: dict, xlabel: str, ylabel: str, title: str):
    fig, ax = plt.subplots(figsize=(5.2, 3.4))
    for label, y in series.items():
        ax.plot(x, y, lw=1.4, label=label)
    ax.set_xlabel(xlabel)
    ax.set_ylabel(ylabel)
    ax.set_title(title)
    if len(series) > 1:
        ax.legend(fontsize=8)
    ax.grid(alpha=0.3)
    return _finish(fig, path)


def mask_plot(path, mask, title: str):
    img = mask.to_raster()
    fig, ax = plt.subplots(figsize=(4.6, 4.0))
    d = mask.grid.delta
    ny, nx = img.shape
    ax.imshow(img, origin="lower", cmap="gray", vmin=0, vmax=255,
              extent=(0, nx * d, 0, ny * d))
    ax.set_title(title)
    ax.set_xlabel("x")
    ax.set_ylabel("y")
    return _finish(fig, path)


def field_plot(path, mesh, values, title: str):
    fig, ax = plt.subplots(figsize=(5.0, 4.0))
    tpc = ax.tripcolor(mesh.nodes[:, 0], mesh.nodes[:, 1], mesh.triangles,
                       values, shading="gouraud")
    fig.colorbar(tpc, ax=ax, shrink=0.85)
    ax.set_title(title)
    ax.set_aspect("equal")
    return _finish(fig, path)


def bars_plot(path, labels, values, title: str):
    fig, ax = plt.subplots(figsize=(4.6, 3.2))
    ax.bar(labels, values, color="#4878a8")
    ax.set_title(title)
    ax.grid(axis="y", alpha=0.3)
    return _finish(fig, path)


def convergence_plot(path, rows, title: str):
    fig, ax = plt.subplots(figsize=(5.0, 3.4))
    meshes = [r["mesh"] for r in rows]
    for key, marker in (("overdet_residual", "o"), ("volume_identity_gap", "s")):
        vals = [max(r[key], 1e-18) for r in rows]
        ax.loglog(meshes, vals, marker=marker, lw=1.2, label=key)
    ax.set_xlabel("mesh size")
    ax.invert_xaxis()
    ax.legend(fontsize=8)
    ax.grid(alpha=0.3, which="both")
    ax.set_title(title)
    return _finish(fig, path)


def sweep_plot(path, params, columns: dict, title: str):
    fig, ax = plt.subplots(figsize=(5.2, 3.4))
    for label, vals in columns.items():
        xs = [p for p, v in zip(params, vals) if v is not None]
        ys = [v for v in vals if v is not None]
        ax.plot(xs, ys, marker="o", lw=1.2, label=label)
    ax.set_xlabel("parameter")
    ax.legend(fontsize=8)
    ax.grid(alpha=0.3)
    ax.set_title(title)
    return _finish(fig, path)
