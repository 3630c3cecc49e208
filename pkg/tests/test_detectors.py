import math

import numpy as np
import pytest

from coexlab import presets
from coexlab.detectors import (AcConfig, Decisions, EdThresholds, EmptyDecisionsError, HdConfig, HdDetector, Truth,
                               ac_detect, ac_windows, calibrate_ac, calibrate_ac_windows, calibrate_ed_windows,
                               ed_detect, hd_detect, score_detector)
from coexlab.detectors.store import CalibrationFormatError, read_calibration, write_calibration
from coexlab.sim import simulate_scenario

BI = 0.1024


def _beacons(bssid, n, t0=0.01):
    return [(t0 + i * BI, bssid) for i in range(n)]


# ── header decoding ──

def test_hd_one_ap_five_beacons():
    dec = hd_detect(_beacons("a", 5), t_end=0.512)
    assert dec.value.tolist() == [1]
    assert dec.t.tolist() == [0.512]


def test_hd_empty_slot_reports_zero():
    dec = hd_detect([], t_end=1.024)
    assert dec.value.tolist() == [0, 0]


def test_hd_threshold_filters_weak_ap():
    beacons = sorted(_beacons("a", 5) + _beacons("b", 2, t0=0.05))
    assert hd_detect(beacons, t_end=0.512).value.tolist() == [1]


def test_hd_stops_at_t_end():
    dec = hd_detect(_beacons("a", 40), t_end=1.024)
    assert dec.value.tolist() == [1, 1]
    assert dec.t.tolist() == [0.512, 1.024]


def test_hd_config_validation():
    with pytest.raises(ValueError):
        HdConfig(0.512, 6)
    with pytest.raises(ValueError):
        HdConfig(0.0, 1)
    assert HdConfig.confident() == HdConfig(1.024, 9)


def test_hd_rejects_out_of_order():
    det = HdDetector()
    det.push(0.2, "a")
    with pytest.raises(ValueError):
        det.push(0.1, "a")


def test_hd_exact_on_simulated_aps():
    for n in (1, 3, 5):
        tr = simulate_scenario(presets.fixed_distance_scenario(n, seed=7, duration_s=20.0))
        assert set(hd_detect(tr.beacons, t_end=20.0).value.tolist()) == {n}


def test_hd_arrival_delay_bound():
    tr = simulate_scenario(presets.arrival_scenario(seed=2, duration_s=12.0, change_s=5.0))
    rep = score_detector(hd_detect(tr.beacons, t_end=12.0), tr, confirm=1)
    assert rep.delays_s[0] <= 2 * 0.512 + BI


# ── energy ──

def test_ed_bands():
    th = EdThresholds((-80.0, -60.0))
    t = np.array([0.1, 1.1, 2.1, 3.1])
    dbm = np.array([-90.0, -80.0, -70.0, -50.0])
    assert ed_detect(t, dbm, th).value.tolist() == [0, 1, 1, 2]


def test_ed_thresholds_validation():
    with pytest.raises(ValueError):
        EdThresholds((-60.0, -80.0))
    with pytest.raises(ValueError):
        EdThresholds((-95.0,), noise_floor_dbm=-94.0)


def _brute_force_boundary(lo, hi):
    best, arg = -1.0, None
    cands = np.round(np.arange(-50.0, -30.0, 0.1), 6)
    for c in cands:
        s = 0.5 * (np.mean(lo < c) + np.mean(hi >= c))
        if s > best:
            best, arg = s, c
    return arg, best


def test_ed_calibration_matches_sweep_oracle():
    rng = np.random.default_rng(0)
    lo = rng.normal(-45, 1, 400)
    hi = rng.normal(-35, 1, 400)
    cal = calibrate_ed_windows({1: lo, 2: hi})
    a = cal.thresholds.alphas[0]
    assert abs(a - (-40.0)) <= 1.0
    _, best = _brute_force_boundary(lo[0::2], hi[0::2])
    assert cal.fit_accuracy == pytest.approx(best, abs=1e-12)


def test_ed_calibration_single_class_errors():
    with pytest.raises(ValueError):
        calibrate_ed_windows({1: np.zeros(10)})


def test_ed_calibration_ascending():
    rng = np.random.default_rng(1)
    cal = calibrate_ed_windows({c: rng.normal(-90 + 10 * c, 1, 50) for c in range(5)})
    assert all(b > a for a, b in zip(cal.thresholds.alphas, cal.thresholds.alphas[1:]))
    assert cal.thresholds.separable


def test_ed_non_separable_flagged():
    v = np.random.default_rng(2).normal(-50, 1, 50)
    with pytest.warns(UserWarning):
        cal = calibrate_ed_windows({0: v, 1: v.copy()})
    assert not cal.thresholds.separable


# ── auto-correlation ──

def test_ac_ratio_arithmetic():
    t = np.linspace(0.001, 0.999, 192)
    rho = np.zeros(192)
    rho[:48] = 0.9
    _, ratio, counts = ac_windows(t, rho)
    assert counts.tolist() == [192] and ratio.tolist() == [0.25]
    _, ratio, _ = ac_windows(t, np.full(192, 0.1))
    assert ratio.tolist() == [0.0]


def test_ac_banded_rule():
    cfg = AcConfig(0.25, (0.05, 0.3, 0.6))
    assert cfg.classify([0.0, 0.05, 0.06, 0.3, 0.5, 0.9]).tolist() == [0, 0, 1, 1, 2, 2]


def test_ac_no_preambles_all_zero():
    cal = calibrate_ac_windows({0: np.zeros(20), 1: np.zeros(20)})
    assert cal.config.ratios == (0.0, 0.0)


def test_ac_ratios_upper_envelope_and_monotone():
    tr = [(simulate_scenario(presets.fixed_distance_scenario(n, seed=n, duration_s=20.0)), n) for n in range(4)]
    cal = calibrate_ac(tr)
    r = cal.config.ratios
    assert all(b >= a for a, b in zip(r, r[1:]))
    _, top, _ = ac_windows(tr[-1][0].ac_t, tr[-1][0].ac_rho)
    assert r[-1] >= top[0::2].max() - 1e-12


def test_ac_config_validation():
    with pytest.raises(ValueError):
        AcConfig(0.0, (0.1,))
    with pytest.raises(ValueError):
        AcConfig(0.25, (0.5, 0.1))


# ── scoring ──

def test_score_all_correct():
    dec = Decisions([1.0, 2.0, 3.0], [2, 2, 2])
    rep = score_detector(dec, 2)
    assert rep.accuracy == 1.0 and rep.p_fa == 0.0 and rep.p_d == 1.0


def test_score_alternating():
    dec = Decisions([1.0, 2.0, 3.0, 4.0], [1, 0, 1, 0])
    assert score_detector(dec, 1).accuracy == 0.5


def test_score_empty_errors():
    with pytest.raises(EmptyDecisionsError):
        score_detector(Decisions([], []), 1)


def test_score_delays_and_timeouts():
    truth = Truth([0.0, 5.0], [1, 2])
    dec = Decisions(np.arange(1.0, 10.0), [1, 1, 1, 1, 1, 2, 2, 2, 2])
    rep = score_detector(dec, truth, confirm=2)
    assert rep.delays_s == [2.0]
    dec = Decisions(np.arange(1.0, 10.0), [1] * 9)
    rep = score_detector(dec, truth)
    assert rep.timeouts == 1 and math.isinf(rep.delays_s[0])


def test_report_text_block():
    rep = score_detector(Decisions([1.0, 2.0], [0, 1]), Truth([0.0], [0]), classes=[0, 1])
    text = rep.as_text()
    assert "count.detect_0: 1" in text and "count.falsealarm_0: 1" in text


def test_decisions_csv_round_trip(tmp_path):
    dec = Decisions([0.5, 1.5], [1, 3], "X")
    dec.to_csv(tmp_path / "d.csv")
    assert (tmp_path / "d.csv").read_text().splitlines()[0] == "t_s,ap_count"
    back = Decisions.from_csv(tmp_path / "d.csv")
    assert np.array_equal(back.t, dec.t) and np.array_equal(back.value, dec.value)


# ── calibration files ──

def test_calibration_file_round_trip(tmp_path):
    rng = np.random.default_rng(3)
    ed = calibrate_ed_windows({c: rng.normal(-90 + 10 * c, 1, 40) for c in range(3)}, noise_floor_dbm=-94.0)
    write_calibration(ed, tmp_path / "ed.txt")
    assert read_calibration(tmp_path / "ed.txt") == ed.thresholds
    ac = calibrate_ac_windows({c: np.clip(rng.normal(0.1 * c, 0.01, 40), 0, 1) for c in range(3)})
    write_calibration(ac, tmp_path / "ac.txt")
    assert read_calibration(tmp_path / "ac.txt") == ac.config


def test_calibration_file_errors(tmp_path):
    p = tmp_path / "x.txt"
    p.write_text("detector ED\n")
    with pytest.raises(CalibrationFormatError):
        read_calibration(p)
    p.write_text("detector: ZZ\nbase: 0\n")
    with pytest.raises(CalibrationFormatError):
        read_calibration(p)
