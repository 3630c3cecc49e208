"""Energy traces to labeled, normalized, overlapping chunks in a UCR-style file."""

from __future__ import annotations

import logging
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable, Sequence

import numpy as np

log = logging.getLogger(__name__)


class DatasetFormatError(ValueError):
    pass


@dataclass(frozen=True)
class RawTrace:
    values: np.ndarray
    label: int
    source: str = ""

    def __post_init__(self):
        v = np.asarray(self.values, dtype=float)
        if v.ndim != 1:
            raise ValueError("trace values must be one-dimensional")
        if not np.all(np.isfinite(v)):
            raise ValueError(f"trace {self.source!r} has non-finite values")
        object.__setattr__(self, "values", v)


@dataclass(frozen=True)
class LabeledChunk:
    values: np.ndarray
    label: int


@dataclass(frozen=True)
class NormStats:
    """Training-set mean/std.  ``provenance`` names the data they came from."""

    mu: float
    sigma: float
    outlier_k: float = 4.0
    provenance: str = "train"

    def __post_init__(self):
        if not self.sigma > 0:
            raise ValueError("sigma must be positive")

    def to_dict(self) -> dict:
        return {"mu": self.mu, "sigma": self.sigma, "outlier_k": self.outlier_k, "provenance": self.provenance}

    @classmethod
    def from_dict(cls, d: dict) -> "NormStats":
        return cls(float(d["mu"]), float(d["sigma"]), float(d.get("outlier_k", 4.0)), d.get("provenance", "train"))


def chunk_stride(w: int) -> int:
    return w // 4 if w % 4 == 0 else max(1, w // 4)


def chunk_starts(n: int, w: int, stride: int | None = None) -> np.ndarray:
    if w < 1:
        raise ValueError("chunk width must be positive")
    stride = chunk_stride(w) if stride is None else stride
    if n < w:
        return np.zeros(0, dtype=int)
    return np.arange(0, n - w + 1, stride)


def chunk_count(n: int, w: int, stride: int | None = None) -> int:
    stride = chunk_stride(w) if stride is None else stride
    return 0 if n < w else (n - w) // stride + 1


def chunk_trace(trace: RawTrace, w: int, stride: int | None = None) -> list[LabeledChunk]:
    starts = chunk_starts(len(trace.values), w, stride)
    if len(starts) == 0:
        log.warning("trace %r shorter than chunk width %d", trace.source, w)
    return [LabeledChunk(trace.values[s:s + w], trace.label) for s in starts]


def chunk_array(values: np.ndarray, w: int, stride: int | None = None) -> np.ndarray:
    """All chunks of one trace as a (n_chunks, w) view-backed array."""
    values = np.asarray(values)
    starts = chunk_starts(len(values), w, stride)
    if len(starts) == 0:
        return np.zeros((0, w), dtype=values.dtype)
    win = np.lib.stride_tricks.sliding_window_view(values, w)
    return win[starts]


def split_segments(t: np.ndarray, values: np.ndarray, labels: np.ndarray) -> list[tuple[np.ndarray, int]]:
    """Cut a trace at label changes so that no chunk can mix classes."""
    labels = np.asarray(labels)
    if len(labels) == 0:
        return []
    cuts = np.flatnonzero(np.diff(labels)) + 1
    out = []
    for seg_v, seg_l in zip(np.split(np.asarray(values), cuts), np.split(labels, cuts)):
        out.append((seg_v, int(seg_l[0])))
    return out


def split_shuffle(items: Sequence, seed: int):
    """Shuffle and cut in half; the first half gets the extra item on odd counts."""
    n = len(items)
    if n < 2:
        raise ValueError("need at least two chunks to split")
    perm = np.random.default_rng(seed).permutation(n)
    half = (n + 1) // 2
    if isinstance(items, np.ndarray):
        return items[perm[:half]], items[perm[half:]]
    return [items[i] for i in perm[:half]], [items[i] for i in perm[half:]]


def split_indices(n: int, seed: int) -> tuple[np.ndarray, np.ndarray]:
    if n < 2:
        raise ValueError("need at least two chunks to split")
    perm = np.random.default_rng(seed).permutation(n)
    half = (n + 1) // 2
    return perm[:half], perm[half:]


def compute_stats(train_values, outlier_k: float = 4.0, provenance: str = "train") -> NormStats:
    v = np.asarray(train_values, dtype=float).ravel()
    return NormStats(float(v.mean()), float(v.std()), outlier_k, provenance)


def clip_outliers(values, stats: NormStats) -> np.ndarray:
    v = np.array(values, dtype=float, copy=True)
    v[np.abs(v - stats.mu) > stats.outlier_k * stats.sigma] = stats.mu
    return v


def normalize(values, stats: NormStats) -> np.ndarray:
    if not stats.sigma > 0:
        raise ValueError("sigma must be positive")
    return (np.asarray(values, dtype=float) - stats.mu) / stats.sigma


def denormalize(values, stats: NormStats) -> np.ndarray:
    return np.asarray(values, dtype=float) * stats.sigma + stats.mu


@dataclass
class PreparedData:
    x_train: np.ndarray
    y_train: np.ndarray
    x_test: np.ndarray
    y_test: np.ndarray
    stats: NormStats
    n_clipped: int = 0
    meta: dict = field(default_factory=dict)


def prepare_dataset(traces: Iterable[RawTrace], w: int, seed: int = 0, stride: int | None = None,
                    trace_disjoint: bool = False) -> PreparedData:
    """Chunk, split 50/50, then clip and normalize with training statistics.

    With ``trace_disjoint`` whole traces (alternating per class) go to one
    side instead of shuffling overlapping chunks across the split.
    """
    traces = list(traces)
    chunks, labels, owner = [], [], []
    for i, tr in enumerate(traces):
        c = chunk_array(tr.values, w, stride)
        chunks.append(c)
        labels.append(np.full(len(c), tr.label, dtype=int))
        owner.append(np.full(len(c), i, dtype=int))
    x = np.concatenate(chunks) if chunks else np.zeros((0, w))
    y = np.concatenate(labels) if labels else np.zeros(0, dtype=int)
    own = np.concatenate(owner) if owner else np.zeros(0, dtype=int)
    if trace_disjoint:
        side = np.zeros(len(traces), dtype=bool)
        seen: dict[int, int] = {}
        for i, tr in enumerate(traces):
            side[i] = seen.get(tr.label, 0) % 2 == 1
            seen[tr.label] = seen.get(tr.label, 0) + 1
        test_mask = side[own]
        rng = np.random.default_rng(seed)
        tr_idx = rng.permutation(np.flatnonzero(~test_mask))
        te_idx = rng.permutation(np.flatnonzero(test_mask))
    else:
        tr_idx, te_idx = split_indices(len(x), seed)
    x_tr, x_te = x[tr_idx], x[te_idx]
    stats = compute_stats(x_tr)
    n_clipped = int((np.abs(x_tr - stats.mu) > stats.outlier_k * stats.sigma).sum())
    x_tr = normalize(clip_outliers(x_tr, stats), stats)
    x_te = normalize(clip_outliers(x_te, stats), stats)
    return PreparedData(x_tr, y[tr_idx], x_te, y[te_idx], stats, n_clipped,
                        {"w": w, "seed": seed, "trace_disjoint": trace_disjoint})


# ── UCR-style text files: label<TAB>v1<TAB>...<TAB>vw ──

def write_dataset(chunks, path) -> None:
    """``chunks`` is a list of LabeledChunk or an ``(x, y)`` pair of arrays."""
    if isinstance(chunks, tuple):
        x, y = chunks
        rows = zip(np.asarray(y).tolist(), np.asarray(x, dtype=float))
    else:
        rows = ((c.label, np.asarray(c.values, dtype=float)) for c in chunks)
    with open(path, "w", encoding="ascii", newline="\n") as fh:
        for label, vals in rows:
            fh.write(str(int(label)))
            for v in vals.tolist():
                fh.write("\t")
                fh.write(repr(float(v)))
            fh.write("\n")


def read_dataset_arrays(path) -> tuple[np.ndarray, np.ndarray]:
    xs, ys = [], []
    width = None
    with open(path, encoding="ascii") as fh:
        for lineno, line in enumerate(fh, 1):
            line = line.rstrip("\n")
            if not line:
                continue
            parts = line.split("\t")
            try:
                label = int(parts[0])
                vals = [float(p) for p in parts[1:]]
            except ValueError as exc:
                raise DatasetFormatError(f"{path}:{lineno}: {exc}") from None
            if not vals:
                raise DatasetFormatError(f"{path}:{lineno}: no values")
            if width is None:
                width = len(vals)
            elif len(vals) != width:
                raise DatasetFormatError(f"{path}:{lineno}: expected {width} values, got {len(vals)}")
            ys.append(label)
            xs.append(vals)
    if not xs:
        return np.zeros((0, 0)), np.zeros(0, dtype=int)
    return np.array(xs, dtype=float), np.array(ys, dtype=int)


def read_dataset(path) -> list[LabeledChunk]:
    x, y = read_dataset_arrays(path)
    return [LabeledChunk(v, int(l)) for v, l in zip(x, y)]


def write_stats(stats: NormStats, path) -> None:
    import json

    Path(path).write_text(json.dumps(stats.to_dict(), sort_keys=True) + "\n")


def read_stats(path) -> NormStats:
    import json

    return NormStats.from_dict(json.loads(Path(path).read_text()))
