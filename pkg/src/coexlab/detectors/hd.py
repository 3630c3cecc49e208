"""Header-decoding detector: count APs whose beacons were decoded often enough in a slot."""

from __future__ import annotations

from collections import Counter
from dataclasses import dataclass

import numpy as np

from ..sim.mac import BEACON_INTERVAL_US
from .common import Decisions

BEACON_INTERVAL_S = BEACON_INTERVAL_US / 1e6


@dataclass(frozen=True)
class HdConfig:
    time_slot_s: float = 0.512
    beacon_threshold: int = 4

    def __post_init__(self):
        if self.time_slot_s <= 0:
            raise ValueError("time slot must be positive")
        expected = self.time_slot_s / BEACON_INTERVAL_S
        if not 0 < self.beacon_threshold <= expected + 1e-9:
            raise ValueError(f"threshold {self.beacon_threshold} outside (0, {expected:g}]")

    @classmethod
    def confident(cls) -> "HdConfig":
        """The longer 10-beacon slot with a 9-beacon threshold."""
        return cls(1.024, 9)


class HdDetector:
    """Streaming form: feed beacons in time order, collect one decision per slot."""

    def __init__(self, cfg: HdConfig = HdConfig(), t0: float = 0.0):
        self.cfg = cfg
        self.slot_start = t0
        self.counts: Counter = Counter()
        self.out_t: list[float] = []
        self.out_v: list[int] = []
        self._last_t = -np.inf

    def _close_slot(self) -> None:
        n = sum(1 for c in self.counts.values() if c >= self.cfg.beacon_threshold)
        self.slot_start += self.cfg.time_slot_s
        self.out_t.append(self.slot_start)
        self.out_v.append(n)
        self.counts.clear()

    def advance(self, t: float) -> None:
        """Close every slot that ends at or before ``t``."""
        while self.slot_start + self.cfg.time_slot_s <= t + 1e-12:
            self._close_slot()

    def push(self, t: float, bssid: str) -> None:
        if t < self._last_t:
            raise ValueError("beacon timestamps must be nondecreasing")
        self._last_t = t
        self.advance(t)
        self.counts[bssid] += 1

    def decisions(self) -> Decisions:
        return Decisions(self.out_t, self.out_v, "HD")


def hd_detect(beacons, cfg: HdConfig = HdConfig(), t_end: float | None = None, t0: float = 0.0) -> Decisions:
    """One decision per slot ``[t0 + j s, t0 + (j+1) s)`` up to ``t_end``.

    ``beacons`` is a sequence of ``(t, bssid)``.  Slots with no beacons report 0;
    beacons at or after ``t_end`` are ignored.
    """
    det = HdDetector(cfg, t0)
    last = t0
    for t, bssid in beacons:
        if t_end is not None and t >= t_end:
            break
        det.push(float(t), bssid)
        last = float(t)
    det.advance(t_end if t_end is not None else last)
    return det.decisions()
