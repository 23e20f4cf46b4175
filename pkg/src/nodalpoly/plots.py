"""Static figures for reports (SVG with fixed metadata, plus PNG)."""

from __future__ import annotations

from pathlib import Path

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402
from matplotlib.collections import LineCollection, PatchCollection  # noqa: E402
from matplotlib.patches import Circle  # noqa: E402

import numpy as np  # noqa: E402

plt.rcParams["svg.hashsalt"] = "nodalpoly"
plt.rcParams["font.size"] = 9
plt.rcParams["axes.linewidth"] = 0.8

Blue = "#0072B2"
Vermillion = "#D55E00"
BluishGreen = "#009E73"
Grey = "#888888"


def save(fig, path, png=True):
    """Write ``path`` (SVG) and optionally a PNG twin; returns the written paths."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    fig.savefig(path, format="svg", metadata={"Date": None})
    out = [path]
    if png:
        p = path.with_suffix(".png")
        fig.savefig(p, format="png", dpi=150, metadata={"Software": None})
        out.append(p)
    plt.close(fig)
    return out


def _outline(ax, P):
    V = np.vstack([P.vertices, P.vertices[:1]])
    ax.plot(V[:, 0], V[:, 1], color="k", lw=1.0)
    ax.set_aspect("equal")
    ax.set_xticks([])
    ax.set_yticks([])


def plot_cover(P, cover, path, title=None):
    fig, ax = plt.subplots(figsize=(4.5, 4.5))
    _outline(ax, P)
    for level, colour in ((0, Vermillion), (1, Blue)):
        balls = cover.level(level)
        patches = [Circle(tuple(b.center), b.covering_radius) for b in balls]
        ax.add_collection(PatchCollection(patches, facecolor="none", edgecolor=colour, lw=0.3))
    ax.set_title(title or f"boundary cover, {len(cover.balls)} balls")
    return save(fig, path)


def plot_nodal(P, z, path, balls=None, title=None):
    fig, ax = plt.subplots(figsize=(4.5, 4.5))
    _outline(ax, P)
    if len(z):
        ax.add_collection(LineCollection(z.segments, colors=Blue, linewidths=0.8))
    if balls:
        patches = [Circle(tuple(c), r) for c, r in balls]
        ax.add_collection(PatchCollection(patches, facecolor="none", edgecolor=Grey, lw=0.4))
    ax.set_title(title or f"nodal set, length {z.length:.4f}")
    return save(fig, path)


def plot_profiles(profiles, path, labels=None, title=None):
    fig, (a1, a2) = plt.subplots(1, 2, figsize=(8, 3.2))
    for i, p in enumerate(profiles):
        lab = labels[i] if labels else None
        a1.semilogx(p.radii, p.N, marker=".", lw=0.8, label=lab)
        a2.semilogx(p.radii, p.beta, marker=".", lw=0.8, label=lab)
    a1.set_xlabel("r")
    a1.set_ylabel("doubling index N")
    a2.set_xlabel("r")
    a2.set_ylabel("frequency β")
    if labels:
        a2.legend(fontsize=6, frameon=False)
    if title:
        fig.suptitle(title)
    fig.tight_layout()
    return save(fig, path)


def plot_survey(lam, ratio, path, ylabel, title=None):
    fig, ax = plt.subplots(figsize=(4.5, 3.2))
    ax.plot(lam, ratio, "o", color=Blue, ms=3)
    ax.set_xlabel("λ")
    ax.set_ylabel(ylabel)
    if title:
        ax.set_title(title)
    fig.tight_layout()
    return save(fig, path)
