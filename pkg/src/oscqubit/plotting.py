"""Figure rendering for the command-line report path.

Every renderer takes plain arrays plus a destination path and writes a PNG
next to the delimited output; nothing here feeds back into the numerics.
"""

from __future__ import annotations

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt
import numpy as np

__all__ = [
    "render_decay_comparison",
    "render_bloch_sphere",
    "render_trajectory",
    "render_mechanics",
    "render_svea",
]


def render_decay_comparison(path, times, curves, errorbars=None, title=""):
    """Polarization/coherence decay families in one panel.

    ``curves`` maps label -> (values, style dict); ``errorbars`` optionally
    maps label -> (times, values, errors) drawn as sparse error bars.
    """
    fig, ax = plt.subplots(figsize=(6.0, 4.0))
    for label, (values, style) in curves.items():
        ax.plot(times, values, label=label, **style)
    if errorbars:
        for label, (tt, vv, ee) in errorbars.items():
            ax.errorbar(tt, vv, yerr=ee, fmt="o", ms=2.5, lw=0.8, capsize=2, label=label)
    ax.set_xlabel("time")
    ax.set_ylabel("Bloch components")
    if title:
        ax.set_title(title)
    ax.legend(fontsize=8, ncol=2)
    ax.axhline(0.0, color="0.8", lw=0.6, zorder=0)
    fig.tight_layout()
    fig.savefig(path, dpi=150)
    plt.close(fig)


def render_bloch_sphere(path, trajectories, title=""):
    """Three-dimensional Bloch-sphere trajectories.

    ``trajectories`` maps label -> (n, 3) arrays; a translucent unit sphere
    is drawn underneath.
    """
    fig = plt.figure(figsize=(5.0, 5.0))
    ax = fig.add_subplot(projection="3d")
    u = np.linspace(0, 2 * np.pi, 40)
    v = np.linspace(0, np.pi, 20)
    xs = np.outer(np.cos(u), np.sin(v))
    ys = np.outer(np.sin(u), np.sin(v))
    zs = np.outer(np.ones_like(u), np.cos(v))
    ax.plot_surface(xs, ys, zs, color="0.9", alpha=0.15, linewidth=0)
    for label, r in trajectories.items():
        ax.plot(r[:, 0], r[:, 1], r[:, 2], lw=1.0, label=label)
        ax.scatter(*r[0], s=12)
    ax.scatter([0], [0], [0], color="k", s=10)
    ax.set_xlabel("x")
    ax.set_ylabel("y")
    ax.set_zlabel("z")
    ax.set_box_aspect((1, 1, 1))
    if title:
        ax.set_title(title)
    ax.legend(fontsize=7, loc="upper left")
    fig.tight_layout()
    fig.savefig(path, dpi=150)
    plt.close(fig)


def render_trajectory(path, times, r, stderr=None, title=""):
    """Bloch components against time, optionally with error bands."""
    fig, ax = plt.subplots(figsize=(6.0, 4.0))
    labels = ("x", "y", "z")
    for i, lab in enumerate(labels):
        (line,) = ax.plot(times, r[:, i], label=lab, lw=1.0)
        if stderr is not None:
            ax.fill_between(
                times,
                r[:, i] - stderr[:, i],
                r[:, i] + stderr[:, i],
                alpha=0.25,
                color=line.get_color(),
                lw=0,
            )
    ax.set_xlabel("time")
    ax.set_ylabel("Bloch components")
    if title:
        ax.set_title(title)
    ax.legend(fontsize=8)
    fig.tight_layout()
    fig.savefig(path, dpi=150)
    plt.close(fig)


def render_mechanics(path, times, x1, x2, envelope=None, title=""):
    fig, ax = plt.subplots(figsize=(6.5, 4.0))
    ax.plot(times, x1, lw=0.4, alpha=0.7, label="x1")
    ax.plot(times, x2, lw=0.4, alpha=0.7, label="x2")
    if envelope is not None:
        ax.plot(times, np.abs(envelope[:, 0]), lw=1.4, label="|envelope 1|")
        ax.plot(times, np.abs(envelope[:, 1]), lw=1.4, label="|envelope 2|")
    ax.set_xlabel("time")
    ax.set_ylabel("displacement")
    if title:
        ax.set_title(title)
    ax.legend(fontsize=8)
    fig.tight_layout()
    fig.savefig(path, dpi=150)
    plt.close(fig)


def render_svea(path, times, r_mech, r_env, title=""):
    fig, axes = plt.subplots(2, 1, figsize=(6.0, 5.5), sharex=True)
    labels = ("x", "y", "z")
    for i, lab in enumerate(labels):
        axes[0].plot(times, r_env[:, i], lw=1.0, label=f"envelope {lab}")
        axes[0].plot(times, r_mech[:, i], lw=0.7, ls="--", label=f"mechanical {lab}")
    axes[0].set_ylabel("Bloch components")
    axes[0].legend(fontsize=7, ncol=3)
    axes[1].plot(times, np.linalg.norm(r_mech - r_env, axis=1), lw=1.0)
    axes[1].set_ylabel("|deviation|")
    axes[1].set_xlabel("time")
    if title:
        axes[0].set_title(title)
    fig.tight_layout()
    fig.savefig(path, dpi=150)
    plt.close(fig)
