"""Shared pieces: decision streams, fixed-grid windowing, threshold sweeps."""

from __future__ import annotations

import csv
from dataclasses import dataclass

import numpy as np


@dataclass(frozen=True)
class Decisions:
    """A detector's output: one AP-count decision per window, stamped at the window end."""

    t: np.ndarray
    value: np.ndarray
    name: str = ""

    def __post_init__(self):
        t = np.asarray(self.t, dtype=float)
        v = np.asarray(self.value, dtype=int)
        if t.shape != v.shape:
            raise ValueError("time and value arrays differ in length")
        object.__setattr__(self, "t", t)
        object.__setattr__(self, "value", v)

    def __len__(self):
        return len(self.t)

    def to_csv(self, path) -> None:
        with open(path, "w", newline="") as fh:
            wr = csv.writer(fh, lineterminator="\n")
            wr.writerow(["t_s", "ap_count"])
            for t, v in zip(self.t.tolist(), self.value.tolist()):
                wr.writerow([repr(t), v])

    @classmethod
    def from_csv(cls, path, name: str = "") -> "Decisions":
        with open(path, newline="") as fh:
            rows = list(csv.reader(fh))
        if not rows or rows[0] != ["t_s", "ap_count"]:
            raise ValueError(f"{path}: expected header t_s,ap_count")
        body = rows[1:]
        return cls([float(r[0]) for r in body], [int(r[1]) for r in body], name)


def window_index(t: np.ndarray, window_s: float, t0: float = 0.0) -> np.ndarray:
    return np.floor((np.asarray(t, dtype=float) - t0) / window_s + 1e-12).astype(np.int64)


def window_reduce(t, values, window_s: float = 1.0, t0: float = 0.0, reducer=np.mean):
    """Apply ``reducer`` per fixed window ``[t0 + j w, t0 + (j+1) w)``.

    Windows without samples are skipped.  Returns (window_end_times, reduced, counts).
    """
    t = np.asarray(t, dtype=float)
    values = np.asarray(values, dtype=float)
    if len(t) == 0:
        return np.zeros(0), np.zeros(0), np.zeros(0, dtype=int)
    idx = window_index(t, window_s, t0)
    order = np.argsort(idx, kind="stable")
    idx, vals = idx[order], values[order]
    uniq, start, counts = np.unique(idx, return_index=True, return_counts=True)
    if reducer is np.mean:
        red = np.add.reduceat(vals, start) / counts
    else:
        red = np.array([reducer(v) for v in np.split(vals, start[1:])])
    return t0 + (uniq + 1) * window_s, red, counts


def pair_boundary(low: np.ndarray, high: np.ndarray, grid: np.ndarray, high_inclusive: bool) -> tuple[float, float]:
    """Best boundary between two classes by balanced accuracy over ``grid``.

    With ``high_inclusive`` a value equal to the boundary belongs to the
    upper class (``[b, inf)``), otherwise to the lower class (``(-inf, b]``).
    Ties pick the middle of the best plateau.
    """
    low = np.sort(np.asarray(low, dtype=float))
    high = np.sort(np.asarray(high, dtype=float))
    side = "left" if high_inclusive else "right"
    low_ok = np.searchsorted(low, grid, side=side) / max(len(low), 1)
    high_ok = 1.0 - np.searchsorted(high, grid, side=side) / max(len(high), 1)
    score = 0.5 * (low_ok + high_ok)
    best = score.max()
    hits = np.flatnonzero(score >= best - 1e-12)
    # middle of the longest contiguous run of maxima
    runs = np.split(hits, np.flatnonzero(np.diff(hits) > 1) + 1)
    run = max(runs, key=len)
    return float(grid[run[len(run) // 2]]), float(best)


def alternate_split(n: int) -> tuple[np.ndarray, np.ndarray]:
    """Deterministic 50/50 split of ``n`` windows: even positions fit, odd held out."""
    idx = np.arange(n)
    return idx[0::2], idx[1::2]
