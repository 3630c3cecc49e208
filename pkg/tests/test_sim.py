import math

import numpy as np
import pytest

from coexlab import presets
from coexlab.sim import (ApSpec, ChangePoint, CoexistenceSimulator, ConfigError, DcfStationState, InvalidStageError,
                         LteuSpec, PathLossParams, ScenarioConfig, draw_backoff, dump_scenario, load_scenario,
                         sample_energy, simulate_scenario, window_energy_dbm)
from coexlab.sim import mac


# ── MAC ──

def test_mac_constants():
    assert (mac.SLOT_US, mac.SIFS_US, mac.DIFS_US) == (9, 16, 34)
    assert mac.CW_MIN == 16 and mac.MAX_STAGE == 6
    assert mac.BEACON_INTERVAL_US == 102_400


def test_draw_backoff_range_per_stage():
    rng = np.random.default_rng(0)
    for stage in range(7):
        draws = np.array([draw_backoff(stage, 16, rng) for _ in range(4000)])
        hi = 2 ** stage * 16
        assert draws.min() >= 0 and draws.max() <= hi - 1
        # uniform law: mean of U{0..hi-1}
        assert abs(draws.mean() - (hi - 1) / 2) < 0.05 * hi


def test_draw_backoff_uniform_chi_square():
    from scipy.stats import chisquare
    rng = np.random.default_rng(1)
    draws = np.array([draw_backoff(0, 16, rng) for _ in range(16000)])
    counts = np.bincount(draws, minlength=16)
    assert chisquare(counts).pvalue > 1e-3


def test_draw_backoff_rejects_bad_stage():
    rng = np.random.default_rng(0)
    with pytest.raises(InvalidStageError):
        draw_backoff(7, 16, rng)
    with pytest.raises(InvalidStageError):
        draw_backoff(-1, 16, rng)


def test_failure_walks_stages_then_drops():
    rng = np.random.default_rng(0)
    st = DcfStationState(bssid="a")
    dropped = [st.on_failure(rng) for _ in range(7)]
    assert st.stage == 6 and not any(dropped)
    assert st.on_failure(rng) is True
    assert st.stage == 0


# ── channel ──

def test_sample_energy_examples():
    assert sample_energy(0.0, [], -94.0) == -94.0
    assert sample_energy(1.0, [-40.0], -94.0) == pytest.approx(-40.0, abs=1e-3)
    assert sample_energy(1.0, [-40.0, -40.0], -94.0) == pytest.approx(-36.99, abs=0.01)
    # oracle: 10 log10(2e-4 + noise)
    assert sample_energy(1.0, [-40.0, -40.0], -94.0) == pytest.approx(10 * math.log10(2e-4 + 10 ** -9.4), abs=1e-12)


def test_sample_energy_contract():
    with pytest.raises(ValueError):
        sample_energy(0.5, [], -94.0)
    with pytest.raises(ValueError):
        sample_energy(1.5, [-40.0], -94.0)
    assert sample_energy(0.3, [-80.0], -94.0) >= -94.0


def test_window_energy_idle_and_full():
    ws = np.array([0.0, 100.0])
    we = np.array([100.0, 200.0])
    out = window_energy_dbm(ws, we, np.array([100.0]), np.array([200.0]), np.array([-40.0]), -94.0)
    assert out[0] == -94.0
    assert out[1] == pytest.approx(10 * math.log10(1e-4 + 10 ** -9.4))


def test_channel_validation():
    with pytest.raises(ValueError):
        PathLossParams(noise_drift_sigma_db=-1.0)
    with pytest.raises(ValueError):
        PathLossParams(noise_drift_tau_s=0.0)


# ── scenario config ──

def test_config_round_trip(tmp_path):
    cfg = presets.arrival_scenario(seed=3, duration_s=10, change_s=5)
    dump_scenario(cfg, tmp_path / "s.ini")
    assert load_scenario(tmp_path / "s.ini") == cfg


def test_config_errors(tmp_path):
    with pytest.raises(ConfigError):
        LteuSpec(duty_cycle=1.5)
    with pytest.raises(ConfigError):
        ScenarioConfig(duration_s=-1)
    p = tmp_path / "bad.ini"
    p.write_text("[scenario]\nduration_s = 5\nbogus = 1\n")
    with pytest.raises(ConfigError):
        load_scenario(p)


# ── simulation ──

def _cfg(n, seed=0, duration=10.0, **kw):
    return presets.fixed_distance_scenario(n, seed=seed, duration_s=duration, **kw)


def test_zero_aps_is_noise_floor():
    tr = simulate_scenario(ScenarioConfig(duration_s=5.0, seed=2))
    assert np.all(tr.energy_dbm == -94.0)
    assert len(tr.beacon_t) == 0


def test_one_ap_beacons_every_interval():
    tr = simulate_scenario(_cfg(1, duration=60.0))
    assert abs(len(tr.beacon_t) - 60 / 0.1024) <= 2


def test_more_aps_more_energy():
    e1 = simulate_scenario(_cfg(1, seed=4, duration=20)).energy_dbm.mean()
    e5 = simulate_scenario(_cfg(5, seed=4, duration=20)).energy_dbm.mean()
    assert e5 > e1


def test_sample_count_at_192hz():
    cfg = ScenarioConfig(ap_list=(ApSpec(6.0),), duration_s=60.0, sample_rate_hz=192.0)
    tr = simulate_scenario(cfg)
    # the 192 Hz tick lattice against the 40 ms period lands 95 of every 192 ticks in OFF
    assert len(tr.energy_t) == pytest.approx(5760, rel=0.02)


def test_reproducible_bit_identical():
    a = simulate_scenario(_cfg(3, seed=9))
    b = simulate_scenario(_cfg(3, seed=9))
    for name in ("energy_t", "energy_dbm", "ac_t", "ac_rho", "beacon_t"):
        assert np.array_equal(getattr(a, name), getattr(b, name))
    assert a.beacon_bssid == b.beacon_bssid
    c = simulate_scenario(_cfg(3, seed=10))
    assert not np.array_equal(a.energy_dbm, c.energy_dbm)


def test_samples_only_in_off_phase():
    cfg = _cfg(2, duration=10.0)
    tr = simulate_scenario(cfg)
    period = cfg.lteu.period_ms / 1000
    on = cfg.lteu.duty_cycle * period
    phase = np.mod(tr.energy_t, period)
    assert np.all(phase >= on - 1e-9)
    assert np.all(np.mod(tr.ac_t, period) >= on - 1e-9)


def test_airtime_matches_duty():
    for duty in (0.5, 0.33, 0.8):
        cfg = ScenarioConfig(ap_list=(ApSpec(6.0),), lteu=LteuSpec(duty, 40.0), duration_s=12.0)
        sim = CoexistenceSimulator(cfg)
        sim.advance(12.0)
        assert abs(sim.on_airtime_s(12_000_000) / 12.0 - duty) < 0.01


def test_single_ap_never_collides():
    sim = CoexistenceSimulator(ScenarioConfig(ap_list=(ApSpec(6.0),), duration_s=10.0))
    sim.advance(10.0)
    assert sim.n_data_tx > 0 and sim.n_data_collisions == 0


def test_backoff_legal_throughout():
    sim = CoexistenceSimulator(_cfg(5, duration=3.0, ap_list=tuple(ApSpec(6.0) for _ in range(5))))
    for t in np.arange(0.05, 3.0, 0.05):
        sim.advance(float(t))
        for st in sim.stations:
            st.dcf.check()
            st.bq.check()


def test_energy_monotone_in_ap_count():
    means = []
    for n in range(6):
        means.append(np.mean([simulate_scenario(_cfg(n, seed=s, duration=30.0)).energy_dbm.mean() for s in range(10)]))
    assert all(b >= a for a, b in zip(means, means[1:]))


def test_change_point_switches_truth_and_beacons():
    cfg = presets.arrival_scenario(seed=1, duration_s=10.0, change_s=5.0, before=1, after=2)
    tr = simulate_scenario(cfg)
    assert tr.truth_count.tolist() == [1, 2]
    assert tr.truth_t.tolist() == [0.0, 5.0]
    late = np.array(tr.beacon_bssid)[tr.beacon_t > 5.2]
    assert set(late) == {"ap1", "ap2"}
    assert "ap2" not in set(np.array(tr.beacon_bssid)[tr.beacon_t < 5.0])


def test_many_aps_keep_every_beacon():
    # saturated bursts must not push a beacon past the next TBTT
    tr = simulate_scenario(_cfg(5, seed=2, duration=30.0))
    bt, bb = tr.beacon_t, np.array(tr.beacon_bssid)
    for ap in set(bb):
        gaps = np.diff(bt[bb == ap])
        assert gaps.max() < 2 * 0.1024


def test_set_duty_cycle_applies_next_period():
    sim = CoexistenceSimulator(ScenarioConfig(ap_list=(ApSpec(6.0),), duration_s=4.0))
    sim.advance(2.0)
    sim.set_duty_cycle(0.25)
    sim.advance(4.0)
    on = sim.on_airtime_s(4_000_000)
    assert on == pytest.approx(2.0 * 0.5 + 2.0 * 0.25, abs=0.03)


def test_full_buffer_saturates():
    cfg = ScenarioConfig(ap_list=(ApSpec(6.0, traffic="FullBuffer"), ApSpec(6.0, traffic="FullBuffer")),
                         duration_s=5.0, change_points=(ChangePoint(2.0, 1),))
    tr = simulate_scenario(cfg)
    assert tr.stats["wifi_tx"] > 0
    assert tr.truth_count.tolist() == [2, 1]
