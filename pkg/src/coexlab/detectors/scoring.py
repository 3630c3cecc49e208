"""Score decision streams against the ground-truth AP-count timeline."""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .common import Decisions


class EmptyDecisionsError(ValueError):
    pass


@dataclass(frozen=True)
class Truth:
    """Step function: ``count[i]`` holds on ``[t[i], t[i+1])``."""

    t: np.ndarray
    count: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "t", np.asarray(self.t, dtype=float))
        object.__setattr__(self, "count", np.asarray(self.count, dtype=int))

    def at(self, t) -> np.ndarray:
        idx = np.searchsorted(self.t, np.asarray(t, dtype=float), side="right") - 1
        return self.count[np.clip(idx, 0, None)]

    @classmethod
    def of(cls, obj) -> "Truth":
        if isinstance(obj, Truth):
            return obj
        if hasattr(obj, "truth_t"):
            return cls(obj.truth_t, obj.truth_count)
        if isinstance(obj, (int, np.integer)):
            return cls([0.0], [int(obj)])
        t, c = obj
        return cls(t, c)

    @property
    def changes(self) -> list[tuple[float, int]]:
        return list(zip(self.t[1:].tolist(), self.count[1:].tolist()))


@dataclass
class DetectorReport:
    name: str
    classes: list
    detect: dict
    falsealarm: dict
    accuracy: float
    p_d: float
    p_fa: float
    confusion: np.ndarray
    delays_s: list = field(default_factory=list)
    mean_detection_delay_s: float = float("nan")
    timeouts: int = 0

    def as_text(self) -> str:
        """Key-value block; one ``key: value`` per line."""
        lines = [f"detector: {self.name}", f"classes: {' '.join(map(str, self.classes))}",
                 f"accuracy: {self.accuracy:.6f}", f"p_d: {self.p_d:.6f}", f"p_fa: {self.p_fa:.6f}"]
        for c in self.classes:
            lines.append(f"count.detect_{c}: {self.detect[c]}")
            lines.append(f"count.falsealarm_{c}: {self.falsealarm[c]}")
        lines.append(f"mean_detection_delay_s: {self.mean_detection_delay_s:.6f}")
        lines.append(f"timeouts: {self.timeouts}")
        return "\n".join(lines) + "\n"


def change_delays(dec: Decisions, truth: Truth, confirm: int = 2, horizon: float | None = None):
    """Delay per change point until ``confirm`` consecutive decisions match the new count.

    Only decisions stamped after the change count.  A change that is not
    confirmed before the next change (or ``horizon``) is a timeout, reported
    as ``inf``.
    """
    out = []
    changes = truth.changes
    for j, (tc, n) in enumerate(changes):
        t_next = changes[j + 1][0] if j + 1 < len(changes) else (horizon if horizon is not None else math.inf)
        sel = np.flatnonzero((dec.t > tc) & (dec.t <= t_next))
        run, found = 0, math.inf
        for i in sel:
            run = run + 1 if dec.value[i] == n else 0
            if run >= confirm:
                found = dec.t[i] - tc
                break
        out.append(found)
    return out


def score_detector(dec: Decisions, truth, classes=None, confirm: int = 2, horizon: float | None = None,
                   name: str | None = None) -> DetectorReport:
    """Accuracy, per-class counters, macro P_D / P_FA and change-point delays."""
    if len(dec) == 0:
        raise EmptyDecisionsError("no decisions to score")
    truth = Truth.of(truth)
    if dec.t.min() < truth.t[0]:
        raise ValueError("decision before the start of the truth timeline")
    y = truth.at(dec.t)
    p = dec.value
    if classes is None:
        classes = sorted(set(y.tolist()) | set(p.tolist()))
    classes = list(classes)
    pos = {c: i for i, c in enumerate(classes)}
    conf = np.zeros((len(classes), len(classes)), dtype=int)
    for a, b in zip(y.tolist(), p.tolist()):
        if a in pos and b in pos:
            conf[pos[a], pos[b]] += 1
    detect = {c: int(np.sum((y == c) & (p == c))) for c in classes}
    falsealarm = {c: int(np.sum((y == c) & (p != c))) for c in classes}
    present = [c for c in classes if detect[c] + falsealarm[c] > 0]
    recall = [detect[c] / (detect[c] + falsealarm[c]) for c in present]
    fpr = []
    for c in classes:
        neg = int(np.sum(y != c))
        if neg:
            fpr.append(int(np.sum((y != c) & (p == c))) / neg)
    delays = change_delays(dec, truth, confirm, horizon)
    finite = [d for d in delays if math.isfinite(d)]
    return DetectorReport(
        name=name or dec.name,
        classes=classes,
        detect=detect,
        falsealarm=falsealarm,
        accuracy=float(np.mean(y == p)),
        p_d=float(np.mean(recall)) if recall else float("nan"),
        p_fa=float(np.mean(fpr)) if fpr else 0.0,
        confusion=conf,
        delays_s=delays,
        mean_detection_delay_s=float(np.mean(finite)) if finite else float("nan"),
        timeouts=len(delays) - len(finite),
    )
