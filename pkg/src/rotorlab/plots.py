"""Emit self-contained matplotlib scripts for a run directory.

The scripts read only the CSV files next to them, so a run directory can be
copied elsewhere and re-plotted without this package installed.
"""

from __future__ import annotations

from pathlib import Path

from .export import read_manifest, write_manifest


class MissingArtifact(FileNotFoundError):
    pass


_HEADER = '''"""Generated plot script; reads only the CSV files in this directory."""
import csv
from collections import defaultdict
from pathlib import Path

import matplotlib
matplotlib.use("Agg")
import matplotlib.pyplot as plt
import numpy as np

HERE = Path(__file__).resolve().parent


def read(name):
    with open(HERE / name, newline="") as fh:
        rows = list(csv.reader(fh))
    return rows[0], rows[1:]
'''

WIGNER = _HEADER + '''

from matplotlib.colors import TwoSlopeNorm

header, rows = read("wigner_snapshots.csv")
frames = defaultdict(list)
for t, a, m, w in rows:
    frames[float(t)].append((float(a), int(m), float(w)))
for k, t in enumerate(sorted(frames)):
    data = np.array(frames[t])
    alpha = np.unique(data[:, 0])
    m = np.unique(data[:, 1])
    W = data[:, 2].reshape(len(m), len(alpha))
    # red at the maximum, blue at the (negative) minimum, white at zero
    lo, hi = W.min(), W.max()
    norm = TwoSlopeNorm(vmin=min(lo, -1e-12 * hi), vcenter=0.0, vmax=hi)
    fig, ax = plt.subplots(figsize=(5, 4))
    pc = ax.pcolormesh(alpha, m, W, cmap="RdBu_r", norm=norm, shading="nearest")
    fig.colorbar(pc, ax=ax, label="W(alpha, m)")
    ax.set_xlabel("alpha")
    ax.set_ylabel("m")
    ax.set_title(f"t = {t:.4g}")
    fig.tight_layout()
    fig.savefig(HERE / f"wigner_{k:02d}.png", dpi=150)
    plt.close(fig)
'''

MARGINALS = _HEADER + '''

fig, (ax1, ax2) = plt.subplots(1, 2, figsize=(9, 3.5))
for name, ax, xlabel in (("marginals_momentum.csv", ax1, "m"), ("marginals_angle.csv", ax2, "alpha")):
    header, rows = read(name)
    curves = defaultdict(list)
    for t, x, p in rows:
        curves[float(t)].append((float(x), float(p)))
    for t in sorted(curves):
        xy = np.array(curves[t])
        ax.plot(xy[:, 0], xy[:, 1], label=f"t = {t:.4g}")
    ax.set_xlabel(xlabel)
    ax.set_ylabel("probability" if xlabel == "m" else "density")
ax1.legend(fontsize=8)
fig.tight_layout()
fig.savefig(HERE / "marginals.png", dpi=150)
'''

OBSERVABLES = _HEADER + '''

header, rows = read("observables.csv")
data = np.array(rows, dtype=float)
cols = header[1:]
fig, axes = plt.subplots(len(cols), 1, figsize=(6, 1.8 * len(cols)), sharex=True, squeeze=False)
for ax, j in zip(axes[:, 0], range(1, len(header))):
    ax.plot(data[:, 0], data[:, j])
    ax.set_ylabel(header[j])
axes[-1, 0].set_xlabel("t")
fig.tight_layout()
fig.savefig(HERE / "observables.png", dpi=150)
'''

SWEEP = _HEADER + '''

header, rows = read("sweep.csv")
T = np.array([float(r[0]) for r in rows])
d1 = np.array([float(r[1]) for r in rows])
ok = np.isfinite(d1) & (d1 > 0)
fig, ax = plt.subplots(figsize=(5, 4))
ax.loglog(T[ok], d1[ok], "o-", label="d1(steady, Gibbs)")
# slope guides anchored at the middle and the last valid point
for power, anchor in ((-2, len(T[ok]) // 2), (-1, -1)):
    t0, y0 = T[ok][anchor], d1[ok][anchor]
    ax.loglog(T[ok], 1.5 * y0 * (T[ok] / t0) ** power, "--", lw=0.8, label=f"T^{power}")
ax.set_xlabel("T")
ax.set_ylabel("d1")
ax.legend()
fig.tight_layout()
fig.savefig(HERE / "sweep.png", dpi=150)
'''

STEADY = _HEADER + '''

header, rows = read("steady_populations.csv")
data = np.array(rows, dtype=float)
fig, ax = plt.subplots(figsize=(5, 3.5))
ax.semilogy(data[:, 0], np.clip(data[:, 1], 1e-300, None), "o", label="steady state")
ax.semilogy(data[:, 0], np.clip(data[:, 2], 1e-300, None), "-", label="Gibbs")
ax.set_xlabel("m")
ax.set_ylabel("population")
ax.legend()
fig.tight_layout()
fig.savefig(HERE / "steady_populations.png", dpi=150)
'''

_SCRIPTS = {
    # script name -> (source, required CSVs)
    "plot_wigner.py": (WIGNER, ["wigner_snapshots.csv"]),
    "plot_marginals.py": (MARGINALS, ["marginals_momentum.csv", "marginals_angle.csv"]),
    "plot_observables.py": (OBSERVABLES, ["observables.csv"]),
    "plot_sweep.py": (SWEEP, ["sweep.csv"]),
    "plot_steady.py": (STEADY, ["steady_populations.csv"]),
}

_BY_KIND = {
    "evolve": ("plot_wigner.py", "plot_marginals.py", "plot_observables.py"),
    "steady": ("plot_steady.py",),
    "sweep": ("plot_sweep.py",),
}


def emit_plots(run_dir) -> dict:
    """Write plot scripts for the artifacts present; returns {script: [csv inputs]}.

    Heatmaps are only emitted when Wigner snapshots exist.
    """
    run_dir = Path(run_dir)
    manifest_path = run_dir / "manifest.yaml"
    if not manifest_path.is_file():
        raise MissingArtifact(f"no manifest.yaml in {run_dir}")
    kind = read_manifest(manifest_path).get("kind")
    if kind not in _BY_KIND:
        raise MissingArtifact(f"manifest in {run_dir} has unknown run kind {kind!r}")
    emitted = {}
    for script in _BY_KIND[kind]:
        source, inputs = _SCRIPTS[script]
        present = [n for n in inputs if (run_dir / n).is_file()]
        if script == "plot_wigner.py" and not present:
            continue   # no snapshots requested
        if len(present) != len(inputs):
            missing = sorted(set(inputs) - set(present))
            raise MissingArtifact(f"{run_dir} lacks {', '.join(missing)} needed by {script}")
        (run_dir / script).write_text(source)
        emitted[script] = inputs
    write_manifest(run_dir / "plots_manifest.yaml", {"run_kind": kind, "scripts": emitted})
    return emitted
