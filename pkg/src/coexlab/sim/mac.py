"""802.11 DCF constants and binary exponential backoff."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

# 5 GHz OFDM PHY timing, microseconds
SLOT_US = 9
SIFS_US = 16
DIFS_US = SIFS_US + 2 * SLOT_US
PIFS_US = SIFS_US + SLOT_US

CW_MIN = 16
MAX_STAGE = 6

# airtime of one data exchange (data + SIFS + ACK + overheads)
FRAME_US = 1500
BEACON_US = 256
PREAMBLE_US = 20
BEACON_INTERVAL_US = 102_400


class InvalidStageError(ValueError):
    pass


def contention_window(stage: int, w0: int = CW_MIN) -> int:
    return (2**stage) * w0


def draw_backoff(stage: int, w0: int, rng: np.random.Generator, max_stage: int = MAX_STAGE) -> int:
    """Draw a backoff counter uniformly from ``{0, ..., 2**stage * w0 - 1}``."""
    if stage < 0 or stage > max_stage:
        raise InvalidStageError(f"backoff stage {stage} outside [0, {max_stage}]")
    if w0 < 1:
        raise ValueError("w0 must be positive")
    return int(rng.integers(0, contention_window(stage, w0)))


@dataclass
class DcfStationState:
    """Contention state of one access point."""

    bssid: str
    stage: int = 0
    backoff_counter: int = 0
    cw_min: int = CW_MIN
    max_stage: int = MAX_STAGE
    slot_us: int = SLOT_US
    difs_us: int = DIFS_US
    sifs_us: int = SIFS_US
    beacon_interval_ms: float = BEACON_INTERVAL_US / 1000.0
    # stage m is used twice before a frame is dropped
    repeats_at_max: int = 0

    def check(self) -> None:
        if not 0 <= self.stage <= self.max_stage:
            raise InvalidStageError(f"{self.bssid}: stage {self.stage}")
        if not 0 <= self.backoff_counter < contention_window(self.stage, self.cw_min):
            raise AssertionError(
                f"{self.bssid}: counter {self.backoff_counter} outside window of stage {self.stage}"
            )

    def redraw(self, rng: np.random.Generator) -> None:
        self.backoff_counter = draw_backoff(self.stage, self.cw_min, rng, self.max_stage)

    def on_success(self, rng: np.random.Generator) -> None:
        self.stage = 0
        self.repeats_at_max = 0
        self.redraw(rng)

    def on_failure(self, rng: np.random.Generator) -> bool:
        """Advance the backoff stage after a collision.

        Returns True when the frame must be dropped (second failure at the
        maximum stage); the stage is then reset to 0.
        """
        dropped = False
        if self.stage < self.max_stage:
            self.stage += 1
        elif self.repeats_at_max == 0:
            self.repeats_at_max = 1
        else:
            self.stage = 0
            self.repeats_at_max = 0
            dropped = True
        self.redraw(rng)
        return dropped
