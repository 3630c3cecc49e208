"""Energy detector: average the dBm samples over one second and bin against thresholds."""

from __future__ import annotations

import warnings
from dataclasses import dataclass

import numpy as np

from .common import Decisions, alternate_split, pair_boundary, window_reduce


@dataclass(frozen=True)
class EdThresholds:
    """Ascending thresholds; the implicit top threshold is +inf.

    A window average ``a`` maps to ``base + #{alpha <= a}``, i.e. class
    ``base + i`` when ``alpha_i <= a < alpha_{i+1}``.
    """

    alphas: tuple
    base: int = 0
    noise_floor_dbm: float | None = None
    separable: bool = True

    def __post_init__(self):
        a = tuple(float(x) for x in self.alphas)
        if not a:
            raise ValueError("need at least one threshold")
        if any(b <= c for c, b in zip(a, a[1:])):
            raise ValueError(f"thresholds must be strictly ascending: {a}")
        if self.noise_floor_dbm is not None and self.base == 0 and a[0] <= self.noise_floor_dbm:
            raise ValueError("alpha_1 must lie above the noise floor")
        object.__setattr__(self, "alphas", a)

    @property
    def classes(self) -> list[int]:
        return list(range(self.base, self.base + len(self.alphas) + 1))

    def classify(self, avg) -> np.ndarray:
        return self.base + np.searchsorted(np.asarray(self.alphas), np.asarray(avg, dtype=float), side="right")


def ed_windows(t, dbm, window_s: float = 1.0, t0: float = 0.0):
    """Per-window average energy (dBm domain); empty windows are skipped."""
    te, avg, _ = window_reduce(t, dbm, window_s, t0)
    return te, avg


def ed_detect(t, dbm, th: EdThresholds, window_s: float = 1.0, t0: float = 0.0) -> Decisions:
    te, avg = ed_windows(t, dbm, window_s, t0)
    return Decisions(te, th.classify(avg), "ED")


@dataclass(frozen=True)
class EdCalibration:
    thresholds: EdThresholds
    fit_accuracy: float
    heldout_accuracy: float


def _ordered_classes(by_class: dict) -> list[int]:
    classes = sorted(by_class)
    if len(classes) < 2:
        raise ValueError("calibration needs at least two distinct classes")
    if classes != list(range(classes[0], classes[0] + len(classes))):
        raise ValueError(f"classes must be consecutive counts, got {classes}")
    return classes


def calibrate_ed_windows(by_class: dict, step_db: float = 0.1, noise_floor_dbm: float | None = None,
                         min_balanced: float = 0.55) -> EdCalibration:
    """Calibrate thresholds from per-window averages grouped by true class.

    Even-indexed windows of each class fit the thresholds, odd ones are held
    out.  Each boundary maximizes the balanced detection of its two
    neighbouring classes on a ``step_db`` grid.  When some pair is not
    separable (best balanced detection below ``min_balanced``) the result is
    flagged and midpoints of class means are returned instead.
    """
    classes = _ordered_classes(by_class)
    fit, held = {}, {}
    for c in classes:
        v = np.asarray(by_class[c], dtype=float)
        a, b = alternate_split(len(v))
        fit[c], held[c] = v[a], v[b] if len(b) else v[a]
    lo = min(v.min() for v in fit.values())
    hi = max(v.max() for v in fit.values())
    grid = np.round(np.arange(np.floor(lo / step_db) * step_db, hi + 2 * step_db, step_db), 6)
    alphas, ok = [], True
    for c_lo, c_hi in zip(classes, classes[1:]):
        b, score = pair_boundary(fit[c_lo], fit[c_hi], grid, high_inclusive=True)
        alphas.append(b)
        ok &= score >= min_balanced
    alphas = np.array(alphas)
    if not ok or np.any(np.diff(alphas) <= 0):
        ok = False
        means = np.sort([fit[c].mean() for c in classes])
        alphas = 0.5 * (means[1:] + means[:-1])
        alphas = alphas + np.arange(len(alphas)) * 1e-9  # keep ties strictly ascending
        warnings.warn("energy classes not separable; using midpoints of class means", stacklevel=2)
    if noise_floor_dbm is not None and classes[0] == 0 and alphas[0] <= noise_floor_dbm:
        alphas[0] = noise_floor_dbm + step_db
        alphas = np.maximum.accumulate(alphas + np.arange(len(alphas)) * 1e-9)
    th = EdThresholds(tuple(alphas.tolist()), classes[0], noise_floor_dbm, ok)

    def acc(groups):
        return float(np.mean([np.mean(th.classify(groups[c]) == c) for c in classes]))

    return EdCalibration(th, acc(fit), acc(held))


def calibrate_ed_thresholds(labeled_traces, window_s: float = 1.0, step_db: float = 0.1) -> EdThresholds:
    """``labeled_traces`` is a list of (SimTrace, ap_count)."""
    return calibrate_ed(labeled_traces, window_s, step_db).thresholds


def calibrate_ed(labeled_traces, window_s: float = 1.0, step_db: float = 0.1) -> EdCalibration:
    by_class: dict[int, list] = {}
    for trace, count in labeled_traces:
        _, avg = ed_windows(trace.energy_t, trace.energy_dbm, window_s)
        by_class.setdefault(int(count), []).extend(avg.tolist())
    # the idle class gives the floor estimate that alpha_1 must clear
    floor = float(np.median(by_class[0])) if by_class.get(0) else None
    return calibrate_ed_windows(by_class, step_db, floor)
