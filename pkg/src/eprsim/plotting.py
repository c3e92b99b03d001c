"""SVG figures drawn from the CSV outputs (matplotlib, optional)."""
from __future__ import annotations

import csv
from pathlib import Path

import numpy as np


def _read(path: Path) -> dict[str, list[str]]:
    with open(path, newline="") as fh:
        rows = list(csv.DictReader(fh))
    return {k: [r[k] for r in rows] for k in (rows[0] if rows else {})}


def _floats(col):
    return np.array([float(x) if x != "undefined" else np.nan for x in col])


def plot_outputs(mode: str, paths) -> list[Path]:
    import matplotlib

    matplotlib.use("Agg")
    import matplotlib.pyplot as plt

    written = []
    for path in map(Path, paths):
        if path.stem.endswith(("_index", "_summary")) or mode == "simulate":
            continue
        data = _read(path)
        fig, ax = plt.subplots(figsize=(5, 4))
        if mode == "analytic-surface":
            w, v, ss = _floats(data["w"]), _floats(data["v"]), _floats(data["SS"])
            nw, nv = len(np.unique(w)), len(np.unique(v))
            im = ax.pcolormesh(np.unique(v), np.unique(w), ss.reshape(nw, nv), shading="auto")
            fig.colorbar(im, ax=ax, label="SS")
            ax.set_xlabel("v [rad]")
            ax.set_ylabel("w [rad]")
        elif mode == "window-sweep":
            tau, S, err = _floats(data["tau"]), _floats(data["S_emp"]), _floats(data["S_err"])
            ax.errorbar(tau, S, yerr=err, marker="o")
            ax.axhline(2.0, ls="--", c="gray")
            ax.axhline(2 * np.sqrt(2), ls=":", c="gray")
            ax.set_xscale("log")
            ax.set_xlabel("tau")
            ax.set_ylabel("S")
        else:
            ax.plot(_floats(data["w0"]), _floats(data["visibility"]), marker="o")
            ax.set_xlabel("w0 [rad]")
            ax.set_ylabel("visibility")
        ax.set_title(path.stem)
        out = path.with_suffix(".svg")
        fig.savefig(out, format="svg", metadata={"Date": None})
        plt.close(fig)
        written.append(out)
    return written
