"""CSV and manifest writers.  Every float is written with 17 significant digits.

CSV schemas (one header line, comma separated):

  observables.csv        t, <observable columns in config order>
  wigner_snapshots.csv   t, alpha, m, W
  marginals_momentum.csv t, m, P
  marginals_angle.csv    t, alpha, P
  steady_summary.csv     quantity, value
  steady_populations.csv m, steady, gibbs
  wigner_steady.csv      alpha, m, W_steady, W_gibbs
  sweep.csv              T, d1, epsilon1, epsilon2, local_slope, M, boundary, min_eigenvalue,
                         leak_rate, residual, error

Times are reduced times t~, temperatures reduced temperatures T~.
"""

from __future__ import annotations

import csv
from pathlib import Path

import numpy as np
import yaml

SCHEMAS = {
    "observables.csv": "t, <observable columns in config order>",
    "wigner_snapshots.csv": "t, alpha, m, W",
    "marginals_momentum.csv": "t, m, P",
    "marginals_angle.csv": "t, alpha, P",
    "steady_summary.csv": "quantity, value",
    "steady_populations.csv": "m, steady, gibbs",
    "wigner_steady.csv": "alpha, m, W_steady, W_gibbs",
    "sweep.csv": "T, d1, epsilon1, epsilon2, local_slope, M, boundary, min_eigenvalue, leak_rate, residual, error",
}


def fmt(x) -> str:
    """17 significant digits for floats; integers and strings unchanged."""
    if isinstance(x, (bool, np.bool_)):
        return str(int(x))
    if isinstance(x, (int, np.integer)):
        return str(int(x))
    if isinstance(x, (float, np.floating)):
        return format(float(x), ".17g")
    return str(x)


def write_csv(path, header, rows) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with path.open("w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(header)
        for row in rows:
            w.writerow([fmt(v) for v in row])
    return path


def read_csv(path) -> tuple[list, list]:
    with Path(path).open(newline="") as fh:
        r = csv.reader(fh)
        header = next(r)
        return header, [row for row in r]


def wigner_rows(t: float, alpha: np.ndarray, m: np.ndarray, W: np.ndarray):
    """Long format, m outer and alpha inner, matching W[m, alpha]."""
    for i, mi in enumerate(m):
        for j, a in enumerate(alpha):
            yield (t, a, int(mi), W[i, j])


def _plain(x):
    if isinstance(x, dict):
        return {str(k): _plain(v) for k, v in x.items()}
    if isinstance(x, (list, tuple)):
        return [_plain(v) for v in x]
    if isinstance(x, (np.floating, np.integer)):
        return x.item()
    if isinstance(x, np.ndarray):
        return _plain(x.tolist())
    return x


def write_manifest(path, data: dict) -> Path:
    """Plain-text (YAML) run manifest."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(yaml.safe_dump(_plain(data), sort_keys=False))
    return path


def read_manifest(path) -> dict:
    return yaml.safe_load(Path(path).read_text())
