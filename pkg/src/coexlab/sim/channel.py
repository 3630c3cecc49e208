"""Received-power model and the RF power measurement of the LTE-U receiver."""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np

FEET_TO_M = 0.3048


@dataclass(frozen=True)
class PathLossParams:
    """Log-distance path loss with a wall penalty for NLOS links.

    ``ref_loss_db`` is the free-space loss at 1 m for 5.825 GHz.  The slow
    fading terms model the indoor environment changing over seconds: a
    common receiver-side process shared by all links and an independent
    per-link process.  ``fast_sigma_db`` is the per-frame fading spread.
    ``noise_drift_*`` let the receiver's noise floor wander (gain and
    temperature drift, weak non-Wi-Fi emitters); energy readings see it,
    preamble correlation does not.
    """

    ref_loss_db: float = 47.7
    exponent_los: float = 2.0
    exponent_nlos: float = 3.0
    wall_penalty_db: float = 5.0
    shadow_sigma_db: float = 3.0
    tx_power_dbm: float = 23.0
    noise_floor_dbm: float = -94.0
    fast_sigma_db: float = 1.5
    slow_common_sigma_db: float = 3.0
    slow_link_sigma_db: float = 1.0
    slow_tau_s: float = 8.0
    noise_drift_sigma_db: float = 0.0
    noise_drift_tau_s: float = 1.0

    def __post_init__(self):
        if self.exponent_nlos < self.exponent_los:
            raise ValueError("exponent_nlos must be >= exponent_los")
        for name in ("shadow_sigma_db", "fast_sigma_db", "slow_common_sigma_db", "slow_link_sigma_db",
                     "noise_drift_sigma_db"):
            if getattr(self, name) < 0:
                raise ValueError(f"{name} must be nonnegative")
        if self.slow_tau_s <= 0 or self.noise_drift_tau_s <= 0:
            raise ValueError("fading time constants must be positive")


def path_loss_db(
    distance_feet: float,
    sight: str,
    params: PathLossParams,
    rng: np.random.Generator | None = None,
) -> float:
    """Loss in dB between a Wi-Fi AP and the LTE-U receiver.

    One shadowing draw is taken from ``rng`` when ``shadow_sigma_db > 0``.
    """
    if not distance_feet > 0:
        raise ValueError(f"distance must be positive, got {distance_feet}")
    sight = sight.upper()
    if sight not in ("LOS", "NLOS"):
        raise ValueError(f"sight must be LOS or NLOS, got {sight!r}")
    d_m = distance_feet * FEET_TO_M
    exponent = params.exponent_los if sight == "LOS" else params.exponent_nlos
    loss = params.ref_loss_db + 10.0 * exponent * math.log10(d_m)
    if sight == "NLOS":
        loss += params.wall_penalty_db
    if params.shadow_sigma_db > 0:
        if rng is None:
            raise ValueError("rng required when shadow_sigma_db > 0")
        loss += float(rng.normal(0.0, params.shadow_sigma_db))
    return loss


def dbm_to_mw(dbm):
    return np.power(10.0, np.asarray(dbm, dtype=float) / 10.0)


def mw_to_dbm(mw):
    return 10.0 * np.log10(mw)


def sample_energy(busy_fraction: float, received_powers_dbm: Sequence[float], noise_floor_dbm: float) -> float:
    """RF power of one measurement window in dBm.

    The concurrent signals are summed in mW, scaled by the fraction of the
    window they occupy, and added to the noise floor.
    """
    if not 0.0 <= busy_fraction <= 1.0:
        raise ValueError(f"busy_fraction must be in [0, 1], got {busy_fraction}")
    if busy_fraction == 0.0:
        return float(noise_floor_dbm)
    if len(received_powers_dbm) == 0:
        raise ValueError("busy window needs at least one received power")
    signal_mw = float(np.sum(dbm_to_mw(received_powers_dbm)))
    return float(mw_to_dbm(dbm_to_mw(noise_floor_dbm) + busy_fraction * signal_mw))


def window_energy_dbm(
    win_start: np.ndarray,
    win_end: np.ndarray,
    tx_start: np.ndarray,
    tx_end: np.ndarray,
    tx_power_dbm: np.ndarray,
    noise_floor_dbm,
) -> np.ndarray:
    """Vectorised :func:`sample_energy` over many windows and transmissions.

    Each transmission contributes its power times its overlap with the
    window divided by the window length.  A window no transmission touches
    returns the noise floor exactly.  ``noise_floor_dbm`` may be a scalar
    or one value per window.
    """
    win_start = np.asarray(win_start, dtype=float)
    win_end = np.asarray(win_end, dtype=float)
    ts = np.asarray(tx_start, dtype=float)
    te = np.asarray(tx_end, dtype=float)
    floor = np.broadcast_to(np.asarray(noise_floor_dbm, dtype=float), win_start.shape)
    acc = np.zeros_like(win_start)
    if len(ts):
        order = np.argsort(ts, kind="stable")
        ts, te = ts[order], te[order]
        p_mw = dbm_to_mw(np.asarray(tx_power_dbm, dtype=float)[order])
        longest = float(np.max(te - ts))
        lo = np.searchsorted(ts, win_start - longest, side="right")
        hi = np.searchsorted(ts, win_end, side="left")
        span = int(np.max(hi - lo)) if len(lo) else 0
        for j in range(span):
            idx = lo + j
            valid = idx < hi
            k = np.where(valid, idx, 0)
            overlap = np.minimum(te[k], win_end) - np.maximum(ts[k], win_start)
            overlap = np.where(valid, np.clip(overlap, 0.0, None), 0.0)
            acc += overlap * p_mw[k]
    length = win_end - win_start
    out = floor.astype(float, copy=True)
    busy = acc > 0
    out[busy] = mw_to_dbm(dbm_to_mw(floor[busy]) + acc[busy] / length[busy])
    return out
