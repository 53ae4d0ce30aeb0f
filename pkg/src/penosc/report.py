"""Delimited output, run manifests and figure rendering.

Floats are written with 17 significant digits so that reading a file back
recovers them exactly.  Every emitted file gets a ``<file>.manifest``
sidecar recording the resolved configuration of the run that produced it;
re-running the same command line reproduces the data files byte for byte.
Figures are rendered headlessly next to the data they visualize.
"""

from __future__ import annotations

import time
from pathlib import Path

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt  # noqa: E402  (backend must be set first)

__all__ = ["fmt", "write_csv", "write_manifest", "plot_series", "plot_density_2d"]


def fmt(value) -> str:
    """Render one CSV cell; floats keep full round-trip precision."""
    if isinstance(value, bool):
        return str(int(value))
    if isinstance(value, float):
        return "%.17g" % value
    return str(value)


def write_csv(path: str | Path, header: list[str], rows) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w") as fh:
        fh.write(",".join(header) + "\n")
        for row in rows:
            fh.write(",".join(fmt(v) for v in row) + "\n")
    return path


def write_manifest(output_path: str | Path, entries: dict) -> Path:
    """Write the key=value sidecar for one emitted file."""
    output_path = Path(output_path)
    manifest = output_path.with_suffix(output_path.suffix + ".manifest")
    with open(manifest, "w") as fh:
        for key in sorted(entries):
            fh.write("%s=%s\n" % (key, entries[key]))
    return manifest


def manifest_entries(subcommand: str, resolved: dict, outputs: list[Path],
                     started: float) -> dict:
    from . import __version__

    entries = {"subcommand": subcommand,
               "tool_version": __version__,
               "outputs": ";".join(str(p) for p in outputs),
               "duration_s": "%.3f" % (time.perf_counter() - started)}
    for key, value in resolved.items():
        entries["config.%s" % key] = fmt(value) if isinstance(value, float) else str(value)
    return entries


def plot_series(path: str | Path, curves, xlabel: str, ylabel: str,
                logx: bool = False, logy: bool = False,
                title: str | None = None) -> Path:
    """Line plot of (x, y, label[, style]) curves saved to ``path``."""
    path = Path(path)
    fig, ax = plt.subplots(figsize=(6.4, 4.2))
    for curve in curves:
        x, y, label = curve[0], curve[1], curve[2]
        style = curve[3] if len(curve) > 3 else "-"
        ax.plot(x, y, style, label=label, linewidth=1.2)
    if logx:
        ax.set_xscale("log")
    if logy:
        ax.set_yscale("log")
    ax.set_xlabel(xlabel)
    ax.set_ylabel(ylabel)
    if title:
        ax.set_title(title)
    if len(curves) > 1:
        ax.legend(frameon=False)
    ax.grid(alpha=0.3)
    fig.tight_layout()
    fig.savefig(path, dpi=150)
    plt.close(fig)
    return path


def plot_density_2d(path: str | Path, x_centers, y_centers, density,
                    xlabel: str, ylabel: str, title: str | None = None) -> Path:
    path = Path(path)
    fig, ax = plt.subplots(figsize=(5.6, 4.6))
    mesh = ax.pcolormesh(x_centers, y_centers, density.T, shading="auto")
    fig.colorbar(mesh, ax=ax, label="density")
    ax.set_xlabel(xlabel)
    ax.set_ylabel(ylabel)
    if title:
        ax.set_title(title)
    fig.tight_layout()
    fig.savefig(path, dpi=150)
    plt.close(fig)
    return path
