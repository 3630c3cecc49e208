"""Streaming inference, class-transition debounce and the CSAT duty-cycle controller."""

from __future__ import annotations

import math
from collections import deque
from dataclasses import dataclass, field
from typing import Iterable, Iterator

import numpy as np

from .dataset import chunk_array, chunk_starts, chunk_stride
from .detectors.common import Decisions
from .detectors.scoring import Truth
from .nn.conv import ShapeError
from .nn.fcn import FcnModel

LTEU_PERIOD_MS = 40.0
MAX_DUTY = 0.95


# ── streaming inference ──

@dataclass
class InferenceState:
    w: int
    buffer: deque = field(default=None)
    last_emitted_class: int | None = None
    pending_class: int | None = None
    pending_count: int = 0

    def __post_init__(self):
        if self.buffer is None:
            self.buffer = deque(maxlen=self.w)


class StreamInfer:
    """Consumer side of the live pipeline.

    Raw dBm samples are clipped and normalized with the model's training
    statistics as they arrive.  The first decision comes once ``w`` samples
    are buffered, then one every ``stride`` samples, so the windows line up
    with :func:`chunk_starts` over the same sample sequence.
    """

    def __init__(self, model: FcnModel, stride: int | None = None, candidates=None):
        if model.norm_stats is None:
            raise ValueError("model carries no normalization statistics")
        stride = chunk_stride(model.w) if stride is None else int(stride)
        if not 1 <= stride <= model.w:
            raise ShapeError(f"stride must lie in [1, {model.w}], got {stride}")
        self.model = model.eval()
        self.stride = stride
        self.candidates = candidates
        self.state = InferenceState(model.w)
        self._since = 0
        self._seen = 0

    def push(self, t: float, dbm: float) -> int | None:
        """Add one sample; returns a class when a window completes."""
        x = float(self.model.prepare(np.array([dbm]))[0])
        self.state.buffer.append(x)
        self._seen += 1
        self._since += 1
        if self._seen < self.model.w:
            return None
        if self._seen > self.model.w and self._since < self.stride:
            return None
        self._since = 0
        window = np.fromiter(self.state.buffer, dtype=float, count=self.model.w)[None, :]
        return int(self.model.predict(window, self.candidates)[0])


def _as_pairs(samples) -> Iterator[tuple[float, float]]:
    for i, s in enumerate(samples):
        if isinstance(s, (tuple, list)):
            yield float(s[0]), float(s[1])
        else:
            yield float(i), float(s)


def stream_infer(model: FcnModel, samples: Iterable, stride: int | None = None,
                 candidates=None) -> Iterator[tuple[float, int]]:
    """Yield ``(t, class)`` per completed window, stamped at its last sample.

    ``samples`` holds ``(t, dbm)`` pairs or bare dBm values (then ``t`` is
    the sample index).
    """
    si = StreamInfer(model, stride, candidates)
    for t, v in _as_pairs(samples):
        c = si.push(t, v)
        if c is not None:
            yield t, c


def batch_infer(model: FcnModel, t, dbm, stride: int | None = None, candidates=None) -> Decisions:
    """Offline counterpart of :func:`stream_infer` over the same window positions."""
    t = np.asarray(t, dtype=float)
    dbm = np.asarray(dbm, dtype=float)
    stride = chunk_stride(model.w) if stride is None else int(stride)
    starts = chunk_starts(len(dbm), model.w, stride)
    if len(starts) == 0:
        return Decisions([], [], "ML")
    x = chunk_array(model.prepare(dbm), model.w, stride)
    return Decisions(t[starts + model.w - 1], model.predict(x, candidates), "ML")


# ── debounce ──

class Debouncer:
    """Change state only after two consecutive classifications agree on a new class."""

    def __init__(self, initial: int | None = None):
        self.state = initial
        self.pending: int | None = None
        self.pending_count = 0

    def update(self, c: int) -> int | None:
        """Returns the new state when it changes, else ``None``."""
        c = int(c)
        if c == self.state:
            self.pending, self.pending_count = None, 0
            return None
        if self.pending == c and self.pending_count == 1:
            self.state = c
            self.pending, self.pending_count = None, 0
            return c
        self.pending, self.pending_count = c, 1
        return None


def debounce(classes: Iterable[int], initial: int | None = None) -> list[tuple[int, int]]:
    """``(index, new_state)`` for every state change over the class stream."""
    d = Debouncer(initial)
    out = []
    for i, c in enumerate(classes):
        s = d.update(c)
        if s is not None:
            out.append((i, s))
    return out


def state_changes(dec: Decisions, initial: int | None = None, confirm: int = 2) -> Decisions:
    """Debounced state changes of a decision stream; ``confirm=1`` passes every change."""
    if confirm not in (1, 2):
        raise ValueError("confirm must be 1 or 2")
    if confirm == 2:
        ch = debounce(dec.value.tolist(), initial)
        idx = [i for i, _ in ch]
        return Decisions(dec.t[idx], [s for _, s in ch], dec.name)
    t, v, state = [], [], initial
    for ti, c in zip(dec.t.tolist(), dec.value.tolist()):
        if c != state:
            state = c
            t.append(ti)
            v.append(c)
    return Decisions(t, v, dec.name)


# ── CSAT ──

@dataclass(frozen=True)
class DutyCycleState:
    ap_count: int
    duty_cycle: float
    period_ms: float = LTEU_PERIOD_MS

    def __post_init__(self):
        if not 0 < self.duty_cycle <= MAX_DUTY:
            raise ValueError(f"duty cycle {self.duty_cycle} outside (0, {MAX_DUTY}]")


def csat_set_duty(ap_count: int) -> DutyCycleState:
    """0 APs: 95 %; 1 AP: 50 %; N >= 2 APs: fair share 1/(N+1)."""
    n = int(ap_count)
    if n < 0:
        raise ValueError("AP count must be nonnegative")
    if n == 0:
        duty = MAX_DUTY
    else:
        duty = 1.0 / (n + 1)
    return DutyCycleState(n, duty)


def duty_rows(dec: Decisions, initial: int | None = None) -> list[tuple[float, int, float]]:
    """``(t, class, duty_cycle)`` per decision; the duty follows the debounced state."""
    d = Debouncer(initial)
    rows = []
    for t, c in zip(dec.t.tolist(), dec.value.tolist()):
        d.update(c)
        duty = csat_set_duty(d.state).duty_cycle if d.state is not None else float("nan")
        rows.append((t, int(c), duty))
    return rows


def write_duty_csv(rows, fh) -> None:
    fh.write("t_s,class,duty_cycle\n")
    for t, c, duty in rows:
        fh.write(f"{t!r},{c},{duty!r}\n")


# ── delay ──

def measure_delay(dec: Decisions, truth, initial: int | None = None, confirm: int = 2,
                  horizon: float | None = None) -> list[float]:
    """Delay from each truth change to the debounced switch to the new count.

    The search for change ``j`` stops at the next change (or ``horizon``);
    a change never adopted in time is reported as ``inf``.
    """
    truth = Truth.of(truth)
    if initial is None:
        initial = int(truth.count[0])
    flips = state_changes(dec, initial, confirm)
    changes = truth.changes
    if not changes:
        raise ValueError("truth timeline has no change points")
    out = []
    for j, (tc, n) in enumerate(changes):
        t_next = changes[j + 1][0] if j + 1 < len(changes) else (horizon if horizon is not None else math.inf)
        sel = np.flatnonzero((flips.t > tc) & (flips.t <= t_next) & (flips.value == n))
        out.append(float(flips.t[sel[0]] - tc) if len(sel) else math.inf)
    return out


def mean_delay(delays) -> float:
    """Mean over adopted changes; ``inf`` when none was adopted."""
    d = np.asarray(list(delays), dtype=float)
    finite = d[np.isfinite(d)]
    return float(finite.mean()) if len(finite) else math.inf


# ── closed loop ──

def run_closed_loop(sim, model: FcnModel, until_s: float, step_s: float = 0.25, stride: int | None = None,
                    initial: int | None = None) -> list[tuple[float, int, float]]:
    """Drive ``sim`` (a :class:`CoexistenceSimulator`) with the ML controller.

    Energy gathered in each step is pushed through the stream classifier;
    each debounced state change resets the LTE-U duty cycle for the
    periods that follow.
    """
    si = StreamInfer(model, stride)
    deb = Debouncer(initial)
    if initial is not None:
        s = csat_set_duty(initial)
        sim.set_duty_cycle(s.duty_cycle, s.period_ms)
    rows = []
    used = 0
    t = 0.0
    while t < until_s - 1e-12:
        t = min(until_s, t + step_s)
        sim.advance(t)
        et, ev, *_ = sim.drain()
        for ti, vi in zip(et[used:].tolist(), ev[used:].tolist()):
            c = si.push(ti, vi)
            if c is None:
                continue
            new = deb.update(c)
            if new is not None:
                s = csat_set_duty(new)
                sim.set_duty_cycle(s.duty_cycle, s.period_ms)
            duty = csat_set_duty(deb.state).duty_cycle if deb.state is not None else float("nan")
            rows.append((ti, c, duty))
        used = len(et)
    return rows
