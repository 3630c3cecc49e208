import io

import numpy as np
import pytest

from coexlab import presets
from coexlab.dataset import NormStats
from coexlab.detectors import Decisions, Truth
from coexlab.nn import FcnModel
from coexlab.runtime import (Debouncer, DutyCycleState, InferenceState, StreamInfer, batch_infer, csat_set_duty,
                             debounce, duty_rows, mean_delay, measure_delay, run_closed_loop, state_changes,
                             stream_infer, write_duty_csv)
from coexlab.sim import CoexistenceSimulator, simulate_scenario


def _model(w=64, k=3, stats=NormStats(-70.0, 10.0)):
    return FcnModel(k, w, (4, 8, 4), seed=2, norm_stats=stats)


# ── duty cycle ──

def test_csat_mapping():
    assert csat_set_duty(0).duty_cycle == 0.95
    assert csat_set_duty(1).duty_cycle == 0.5
    assert csat_set_duty(2).duty_cycle == pytest.approx(1 / 3)
    for n in range(6):
        s = csat_set_duty(n)
        assert s.ap_count == n and s.period_ms == 40.0
    with pytest.raises(ValueError):
        csat_set_duty(-1)


def test_duty_state_validation():
    with pytest.raises(ValueError):
        DutyCycleState(1, 0.99)


# ── debounce ──

def test_debounce_needs_two_agreeing():
    assert debounce([1, 2, 2], initial=1) == [(2, 2)]
    assert debounce([1, 2, 1, 2, 1], initial=1) == []


def test_debounce_first_state_without_initial():
    d = Debouncer()
    assert d.update(3) is None
    assert d.update(3) == 3
    assert d.state == 3


def test_debounce_suppresses_isolated_noise():
    rng = np.random.default_rng(0)
    labels = np.full(5000, 2)
    # 1 % noise, one flip per block of 100 so no two flips touch
    flips = np.arange(0, 5000, 100) + rng.integers(1, 99, 50)
    labels[flips] = rng.choice([0, 1, 3, 4], size=50)
    assert debounce(labels.tolist(), initial=2) == []


def test_state_changes_confirm():
    dec = Decisions(np.arange(1.0, 7.0), [1, 2, 2, 2, 1, 2])
    ch = state_changes(dec, initial=1, confirm=2)
    assert ch.t.tolist() == [3.0] and ch.value.tolist() == [2]
    ch1 = state_changes(dec, initial=1, confirm=1)
    assert ch1.value.tolist() == [2, 1, 2]


# ── stream vs batch ──

def test_first_decision_after_w_samples():
    m = _model(w=512)
    t = np.arange(600) / 192.0
    dbm = np.full(600, -90.0)
    out = list(stream_infer(m, zip(t.tolist(), dbm.tolist())))
    assert out[0][0] == pytest.approx(511 / 192.0)
    assert out[0][0] == pytest.approx(2.67, abs=0.01)


def test_stream_equals_batch_on_trace():
    tr = simulate_scenario(presets.fixed_distance_scenario(2, seed=1, duration_s=6.0))
    m = _model(w=64)
    stream = list(stream_infer(m, zip(tr.energy_t.tolist(), tr.energy_dbm.tolist())))
    batch = batch_infer(m, tr.energy_t, tr.energy_dbm)
    assert [c for _, c in stream] == batch.value.tolist()
    assert [t for t, _ in stream] == batch.t.tolist()


def test_stream_accepts_bare_values_and_stride():
    m = _model(w=64)
    vals = np.linspace(-90, -50, 200)
    out = list(stream_infer(m, vals.tolist(), stride=10))
    assert len(out) == (200 - 64) // 10 + 1


def test_stream_requires_norm_stats():
    with pytest.raises(ValueError):
        StreamInfer(FcnModel(2, 16, (2, 2, 2)))


def test_inference_state_buffer_bounded():
    s = InferenceState(8)
    for i in range(20):
        s.buffer.append(i)
    assert len(s.buffer) == 8


# ── delay ──

def test_measure_delay():
    truth = Truth([0.0, 10.0], [1, 2])
    dec = Decisions(np.arange(0.5, 20.0, 0.5), [1] * 21 + [2] * 18)
    # first "2" at 11.0 s, confirmed at 11.5 s
    d = measure_delay(dec, truth, initial=1, confirm=2)
    assert d == [pytest.approx(1.5)]
    assert mean_delay([1.0, 3.0, float("inf")]) == 2.0


# ── CSV and closed loop ──

def test_duty_rows_and_csv():
    dec = Decisions([1.0, 2.0, 3.0], [1, 2, 2])
    rows = duty_rows(dec, initial=1)
    assert [r[2] for r in rows] == [0.5, 0.5, pytest.approx(1 / 3)]
    fh = io.StringIO()
    write_duty_csv(rows, fh)
    assert fh.getvalue().splitlines()[0] == "t_s,class,duty_cycle"


def test_closed_loop_sets_duty():
    cfg = presets.arrival_scenario(seed=0, duration_s=8.0, change_s=4.0)
    sim = CoexistenceSimulator(cfg)
    rows = run_closed_loop(sim, _model(w=64), 8.0, initial=1)
    assert rows and all(r[0] <= 8.0 for r in rows)
    assert {round(r[2], 6) for r in rows} <= {round(csat_set_duty(n).duty_cycle, 6) for n in range(3)}
