"""Auto-correlation detector: fraction of preamble-like AC values per second."""

from __future__ import annotations

import warnings
from dataclasses import dataclass

import numpy as np

from .common import Decisions, alternate_split, pair_boundary, window_reduce


@dataclass(frozen=True)
class AcConfig:
    """``ratios[j]`` is the upper edge R of class ``base + j``.

    A window ratio goes to the smallest class whose edge it does not exceed,
    so class i owns the band ``(R_{i-1}, R_i]``; ratios above every edge go
    to the top class.
    """

    th_rho: float = 0.25
    ratios: tuple = ()
    base: int = 0
    separable: bool = True

    def __post_init__(self):
        if not 0 < self.th_rho < 1:
            raise ValueError("th_rho must lie in (0, 1)")
        r = tuple(float(x) for x in self.ratios)
        if any(not 0 <= x <= 1 for x in r):
            raise ValueError("ratios must lie in [0, 1]")
        if any(b < a for a, b in zip(r, r[1:])):
            raise ValueError(f"ratios must be nondecreasing: {r}")
        object.__setattr__(self, "ratios", r)

    @property
    def classes(self) -> list[int]:
        return list(range(self.base, self.base + len(self.ratios)))

    def classify(self, ratio) -> np.ndarray:
        if not self.ratios:
            raise ValueError("no calibrated ratios")
        r = np.asarray(self.ratios)
        idx = np.searchsorted(r, np.asarray(ratio, dtype=float), side="left")
        return self.base + np.minimum(idx, len(r) - 1)


def ac_windows(t, rho, th_rho: float = 0.25, window_s: float = 1.0, t0: float = 0.0):
    """Per-window ``ratio = Signal / T`` with Signal = #{rho >= th_rho}."""
    hits = (np.asarray(rho, dtype=float) >= th_rho).astype(float)
    te, ratio, counts = window_reduce(t, hits, window_s, t0)
    return te, ratio, counts


def ac_detect(t, rho, cfg: AcConfig, window_s: float = 1.0, t0: float = 0.0) -> Decisions:
    te, ratio, _ = ac_windows(t, rho, cfg.th_rho, window_s, t0)
    return Decisions(te, cfg.classify(ratio), "AC")


@dataclass(frozen=True)
class AcCalibration:
    config: AcConfig
    fit_accuracy: float
    heldout_accuracy: float


def calibrate_ac_windows(by_class: dict, th_rho: float = 0.25, step: float = 0.005,
                         min_balanced: float = 0.55) -> AcCalibration:
    """Per-class ratio edges from per-window ratios grouped by true class.

    Interior edges maximize balanced detection of neighbouring classes on a
    ``step`` grid over [0, 1]; the top edge is the upper envelope of the top
    class.  Non-separable pairs fall back to midpoints of class means.
    """
    classes = sorted(by_class)
    if len(classes) < 2:
        raise ValueError("calibration needs at least two distinct classes")
    if classes != list(range(classes[0], classes[0] + len(classes))):
        raise ValueError(f"classes must be consecutive counts, got {classes}")
    fit, held = {}, {}
    for c in classes:
        v = np.asarray(by_class[c], dtype=float)
        a, b = alternate_split(len(v))
        fit[c], held[c] = v[a], v[b] if len(b) else v[a]
    grid = np.round(np.arange(0.0, 1.0 + step / 2, step), 6)
    edges, ok = [], True
    for c_lo, c_hi in zip(classes, classes[1:]):
        if fit[c_lo].max() <= 0 and fit[c_hi].max() <= 0:
            edges.append(0.0)
            continue
        r, score = pair_boundary(fit[c_lo], fit[c_hi], grid, high_inclusive=False)
        edges.append(r)
        ok &= score >= min_balanced
    top = float(np.ceil(fit[classes[-1]].max() / step - 1e-9) * step)
    edges.append(min(1.0, max(top, edges[-1] if edges else 0.0)))
    edges = np.array(edges)
    if not ok or np.any(np.diff(edges) < 0):
        ok = False
        means = np.sort([fit[c].mean() for c in classes])
        edges = np.append(0.5 * (means[1:] + means[:-1]), edges[-1])
        edges = np.maximum.accumulate(np.clip(edges, 0, 1))
        warnings.warn("AC classes not separable; using midpoints of class means", stacklevel=2)
    cfg = AcConfig(th_rho, tuple(edges.tolist()), classes[0], ok)

    def acc(groups):
        return float(np.mean([np.mean(cfg.classify(groups[c]) == c) for c in classes]))

    return AcCalibration(cfg, acc(fit), acc(held))


def calibrate_ac(labeled_traces, th_rho: float = 0.25, window_s: float = 1.0, step: float = 0.005) -> AcCalibration:
    by_class: dict[int, list] = {}
    for trace, count in labeled_traces:
        _, ratio, _ = ac_windows(trace.ac_t, trace.ac_rho, th_rho, window_s)
        by_class.setdefault(int(count), []).extend(ratio.tolist())
    return calibrate_ac_windows(by_class, th_rho, step)


def calibrate_ac_ratios(labeled_traces, th_rho: float = 0.25, window_s: float = 1.0, step: float = 0.005) -> AcConfig:
    return calibrate_ac(labeled_traces, th_rho, window_s, step).config
