"""Key-value text files for calibrated ED thresholds and AC ratios.

::

    detector: ED
    base: 0
    alphas: -80.1 -71.3 -60.0
    separable: true
    noise_floor_dbm: -94.0
    fit_accuracy: 0.912000
    heldout_accuracy: 0.903000
"""

from __future__ import annotations

from pathlib import Path

from .ac import AcCalibration, AcConfig
from .ed import EdCalibration, EdThresholds


class CalibrationFormatError(ValueError):
    pass


def _dump(pairs: dict) -> str:
    return "".join(f"{k}: {v}\n" for k, v in pairs.items())


def write_calibration(cal, path) -> None:
    if isinstance(cal, EdCalibration):
        th = cal.thresholds
        pairs = {"detector": "ED", "base": th.base, "alphas": " ".join(repr(a) for a in th.alphas),
                 "separable": str(th.separable).lower(),
                 "noise_floor_dbm": "none" if th.noise_floor_dbm is None else repr(th.noise_floor_dbm)}
    elif isinstance(cal, AcCalibration):
        c = cal.config
        pairs = {"detector": "AC", "base": c.base, "th_rho": repr(c.th_rho),
                 "ratios": " ".join(repr(r) for r in c.ratios), "separable": str(c.separable).lower()}
    else:
        raise TypeError(f"cannot store {type(cal).__name__}")
    pairs["fit_accuracy"] = f"{cal.fit_accuracy:.6f}"
    pairs["heldout_accuracy"] = f"{cal.heldout_accuracy:.6f}"
    Path(path).write_text(_dump(pairs))


def read_calibration(path):
    """Returns an :class:`EdThresholds` or an :class:`AcConfig`."""
    kv = {}
    for n, line in enumerate(Path(path).read_text().splitlines(), start=1):
        if not line.strip():
            continue
        key, sep, value = line.partition(":")
        if not sep:
            raise CalibrationFormatError(f"{path}:{n}: expected 'key: value'")
        kv[key.strip()] = value.strip()
    try:
        det = kv["detector"]
        base = int(kv["base"])
        separable = kv.get("separable", "true") == "true"
        if det == "ED":
            floor = kv.get("noise_floor_dbm", "none")
            return EdThresholds(tuple(float(a) for a in kv["alphas"].split()), base,
                                None if floor == "none" else float(floor), separable)
        if det == "AC":
            return AcConfig(float(kv["th_rho"]), tuple(float(r) for r in kv["ratios"].split()), base, separable)
    except (KeyError, ValueError) as exc:
        raise CalibrationFormatError(f"{path}: {exc}") from None
    raise CalibrationFormatError(f"{path}: unknown detector {kv.get('detector')!r}")
