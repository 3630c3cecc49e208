"""CSV export and import of simulator traces.

A trace with stem ``s`` is stored as four CSV files plus a stats block::

    s_energy.csv    t_s,dbm
    s_ac.csv        t_s,rho
    s_beacons.csv   t_s,bssid
    s_truth.csv     t_s,ap_count
    s_stats.txt     key=value lines (duration_s and simulator counters)

Floats are written with ``repr`` so a write/read cycle is lossless and the
bytes depend only on the values.
"""

from __future__ import annotations

import io
from pathlib import Path
from typing import Iterable, Iterator, TextIO

import numpy as np

from .sim import SimTrace

ENERGY_HEADER = "t_s,dbm"
AC_HEADER = "t_s,rho"
BEACON_HEADER = "t_s,bssid"
TRUTH_HEADER = "t_s,ap_count"


class TraceFormatError(ValueError):
    pass


def trace_paths(out_dir, stem: str = "trace") -> dict[str, Path]:
    d = Path(out_dir)
    return {
        "energy": d / f"{stem}_energy.csv",
        "ac": d / f"{stem}_ac.csv",
        "beacons": d / f"{stem}_beacons.csv",
        "truth": d / f"{stem}_truth.csv",
        "stats": d / f"{stem}_stats.txt",
    }


def _write_rows(path: Path, header: str, cols) -> None:
    buf = io.StringIO()
    buf.write(header + "\n")
    for row in zip(*cols):
        buf.write(",".join(v if isinstance(v, str) else repr(v) for v in row) + "\n")
    path.write_text(buf.getvalue())


def write_energy_csv(path, t, dbm) -> None:
    _write_rows(Path(path), ENERGY_HEADER, (np.asarray(t, float).tolist(), np.asarray(dbm, float).tolist()))


def write_trace(trace: SimTrace, out_dir, stem: str = "trace") -> dict[str, Path]:
    paths = trace_paths(out_dir, stem)
    Path(out_dir).mkdir(parents=True, exist_ok=True)
    write_energy_csv(paths["energy"], trace.energy_t, trace.energy_dbm)
    _write_rows(paths["ac"], AC_HEADER, (trace.ac_t.tolist(), trace.ac_rho.tolist()))
    _write_rows(paths["beacons"], BEACON_HEADER, (trace.beacon_t.tolist(), list(trace.beacon_bssid)))
    _write_rows(paths["truth"], TRUTH_HEADER, (trace.truth_t.tolist(), [int(c) for c in trace.truth_count]))
    stats = {"duration_s": trace.duration_s, **trace.stats}
    paths["stats"].write_text("".join(f"{k}={v!r}\n" for k, v in sorted(stats.items())))
    return paths


def _read_rows(path: Path, header: str) -> list[list[str]]:
    lines = Path(path).read_text().splitlines()
    if not lines or lines[0].strip() != header:
        raise TraceFormatError(f"{path}: expected header {header!r}")
    rows = []
    for n, line in enumerate(lines[1:], start=2):
        if not line.strip():
            continue
        parts = line.split(",")
        if len(parts) != 2:
            raise TraceFormatError(f"{path}:{n}: expected 2 fields, got {len(parts)}")
        rows.append(parts)
    return rows


def _floats(path, rows, col) -> np.ndarray:
    try:
        out = np.array([float(r[col]) for r in rows], dtype=float)
    except ValueError as exc:
        raise TraceFormatError(f"{path}: {exc}") from None
    if not np.all(np.isfinite(out)):
        raise TraceFormatError(f"{path}: non-finite value")
    return out


def read_energy_csv(path) -> tuple[np.ndarray, np.ndarray]:
    rows = _read_rows(Path(path), ENERGY_HEADER)
    return _floats(path, rows, 0), _floats(path, rows, 1)


def iter_energy_csv(stream: TextIO | Iterable[str]) -> Iterator[tuple[float, float]]:
    """Parse ``t_s,dbm`` rows lazily, e.g. from a pipe."""
    it = iter(stream)
    first = next(it, None)
    if first is None:
        return
    if first.strip() != ENERGY_HEADER:
        raise TraceFormatError(f"expected header {ENERGY_HEADER!r}, got {first.strip()!r}")
    for n, line in enumerate(it, start=2):
        line = line.strip()
        if not line:
            continue
        try:
            t, v = line.split(",")
            yield float(t), float(v)
        except ValueError:
            raise TraceFormatError(f"line {n}: bad row {line!r}") from None


def _parse_stat(v: str):
    try:
        return int(v)
    except ValueError:
        return float(v)


def read_trace(out_dir, stem: str = "trace") -> SimTrace:
    paths = trace_paths(out_dir, stem)
    for p in paths.values():
        if not p.exists():
            raise FileNotFoundError(p)
    et, ed = read_energy_csv(paths["energy"])
    ac_rows = _read_rows(paths["ac"], AC_HEADER)
    b_rows = _read_rows(paths["beacons"], BEACON_HEADER)
    t_rows = _read_rows(paths["truth"], TRUTH_HEADER)
    stats = {}
    for line in paths["stats"].read_text().splitlines():
        if line.strip():
            k, _, v = line.partition("=")
            stats[k.strip()] = _parse_stat(v.strip())
    duration = float(stats.pop("duration_s"))
    return SimTrace(
        energy_t=et, energy_dbm=ed,
        ac_t=_floats(paths["ac"], ac_rows, 0), ac_rho=_floats(paths["ac"], ac_rows, 1),
        beacon_t=_floats(paths["beacons"], b_rows, 0), beacon_bssid=tuple(r[1] for r in b_rows),
        truth_t=_floats(paths["truth"], t_rows, 0),
        truth_count=np.array([int(r[1]) for r in t_rows], dtype=int),
        duration_s=duration, stats=stats,
    )
