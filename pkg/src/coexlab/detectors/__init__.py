"""Header-decoding, energy and auto-correlation AP-count detectors, calibration and scoring."""

from .ac import AcCalibration, AcConfig, ac_detect, ac_windows, calibrate_ac, calibrate_ac_ratios, calibrate_ac_windows
from .common import Decisions, window_reduce
from .ed import (EdCalibration, EdThresholds, calibrate_ed, calibrate_ed_thresholds, calibrate_ed_windows, ed_detect,
                 ed_windows)
from .hd import HdConfig, HdDetector, hd_detect
from .scoring import DetectorReport, EmptyDecisionsError, Truth, change_delays, score_detector

__all__ = [
    "AcCalibration", "AcConfig", "Decisions", "DetectorReport", "EdCalibration", "EdThresholds",
    "EmptyDecisionsError", "HdConfig", "HdDetector", "Truth", "ac_detect", "ac_windows", "calibrate_ac",
    "calibrate_ac_ratios", "calibrate_ac_windows", "calibrate_ed", "calibrate_ed_thresholds",
    "calibrate_ed_windows", "change_delays", "ed_detect", "ed_windows", "hd_detect", "score_detector",
    "window_reduce",
]
