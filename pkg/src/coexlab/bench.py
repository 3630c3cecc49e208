"""Detector comparison experiments and their CSV tables.

All experiments are single-threaded and fully seeded, so the same
:class:`BenchSpec` always yields byte-identical tables.
"""

from __future__ import annotations

import csv
import logging
import math
from dataclasses import dataclass, field, replace
from pathlib import Path
from typing import Callable, Sequence

import numpy as np

from . import presets
from .dataset import PreparedData, RawTrace, prepare_dataset
from .detectors import (AcConfig, EdThresholds, ac_detect, ac_windows, calibrate_ac_windows, calibrate_ed_windows,
                        ed_detect, ed_windows, hd_detect)
from .detectors.scoring import Truth
from .nn import FcnModel, TrainConfig, train
from .runtime import batch_infer, mean_delay, measure_delay
from .sim import SimTrace, simulate_scenario

log = logging.getLogger(__name__)

DETECTORS = ("HD", "ED", "AC", "ML")
SWEEP_FILTERS = (16, 32, 16)


class MissingDependencyError(FileNotFoundError):
    """A referenced checkpoint or calibration file does not exist."""


# ── trace generation ──

ScenarioMaker = Callable[[int, int, float], "object"]


def fixed_distance_maker(distance_ft: float = 6.0, sight: str = "NLOS") -> ScenarioMaker:
    def make(n, seed, duration_s):
        return presets.fixed_distance_scenario(n, distance_ft, sight, seed, duration_s)
    return make


def case_maker(case: str, sight: str = "NLOS") -> ScenarioMaker:
    def make(n, seed, duration_s):
        return presets.case_scenario(case, sight, seed, duration_s, n_active=n)
    return make


def simulate_classes(make: ScenarioMaker, classes: Sequence[int], seed: int, duration_s: float,
                     traces_per_class: int = 1) -> dict[int, list[SimTrace]]:
    """One or more stationary traces per AP count.  Trace ``j`` of every class uses seed ``seed*100+j``."""
    out: dict[int, list[SimTrace]] = {}
    for n in classes:
        out[n] = [simulate_scenario(make(n, seed * 100 + j, duration_s)) for j in range(traces_per_class)]
    return out


# ── detectors ──

def _windows(traces_by_class):
    ed, ac = {}, {}
    for c, trs in traces_by_class.items():
        ed[c] = np.concatenate([ed_windows(t.energy_t, t.energy_dbm)[1] for t in trs])
        ac[c] = np.concatenate([ac_windows(t.ac_t, t.ac_rho)[1] for t in trs])
    return ed, ac


def hd_accuracy(traces_by_class, classes) -> float:
    """Mean over classes of the fraction of slots reporting the true count."""
    per = []
    for c in classes:
        hits = []
        for tr in traces_by_class[c]:
            dec = hd_detect(tr.beacons, t_end=tr.duration_s)
            hits.append(dec.value == Truth.of(tr).at(dec.t))
        per.append(float(np.mean(np.concatenate(hits))))
    return float(np.mean(per))


def detector_accuracy(traces_by_class, ks: Sequence[int] = (2, 3, 4, 5, 6), class_sets=None) -> dict:
    """Held-out accuracy of HD, ED and AC per class count.

    ED and AC thresholds are fitted on even 1 s windows of every class and
    scored on the odd ones.
    """
    class_sets = class_sets or {k: presets.class_set(k) for k in ks}
    ed, ac = _windows(traces_by_class)
    out = {}
    for k in ks:
        cl = class_sets[k]
        out[k] = {
            "HD": hd_accuracy(traces_by_class, cl),
            "ED": calibrate_ed_windows({c: ed[c] for c in cl}).heldout_accuracy,
            "AC": calibrate_ac_windows({c: ac[c] for c in cl}).heldout_accuracy,
        }
    return out


def calibrate_all(traces_by_class) -> tuple[EdThresholds, AcConfig]:
    """Thresholds over every class present (used by the delay suite)."""
    ed, ac = _windows(traces_by_class)
    return calibrate_ed_windows(ed).thresholds, calibrate_ac_windows(ac).config


# ── ML ──

def ml_dataset(traces_by_class, w: int, seed: int = 0, classes=None, trace_disjoint: bool = False) -> PreparedData:
    """Chunked, split and normalized energy traces; labels are remapped to 0..len(classes)-1."""
    classes = sorted(traces_by_class) if classes is None else list(classes)
    remap = {c: i for i, c in enumerate(classes)}
    raws = [RawTrace(tr.energy_dbm, remap[c], f"class{c}") for c in classes for tr in traces_by_class[c]]
    return prepare_dataset(raws, w, seed=seed, trace_disjoint=trace_disjoint)


def train_ml(data: PreparedData, n_classes: int, w: int, filters=SWEEP_FILTERS, cfg: TrainConfig | None = None,
             seed: int = 0, compression: float = 0.0, init: FcnModel | None = None) -> FcnModel:
    cfg = cfg or TrainConfig.adam(epochs=15, seed=seed)
    model = FcnModel(n_classes, w, filters, seed=seed, compression=compression, norm_stats=data.stats)
    if init is not None:
        copy_weights(init, model)
    train(model, (data.x_train, data.y_train), None, cfg)
    return model


def copy_weights(src: FcnModel, dst: FcnModel) -> None:
    for (name, la, pa), (_, lb, pb) in zip(src.named_params(), dst.named_params()):
        lb.params[pb] = la.params[pa].copy()
    for la, lb in zip(src.layers, dst.layers):
        if hasattr(la, "running_mean"):
            lb.running_mean = la.running_mean.copy()
            lb.running_var = la.running_var.copy()


def balanced_accuracy(pred, y, classes) -> float:
    return float(np.mean([np.mean(pred[y == c] == c) for c in classes if np.any(y == c)]))


def ml_accuracy(model: FcnModel, data: PreparedData, class_sets: dict) -> dict:
    """Test accuracy per class count, restricting the argmax to each candidate set."""
    out = {}
    for k, cl in class_sets.items():
        sel = np.isin(data.y_test, cl)
        pred = model.predict(data.x_test[sel], cl)
        out[k] = balanced_accuracy(pred, data.y_test[sel], cl)
    return out


# ── one seed of the standard comparison ──

@dataclass(frozen=True)
class SuiteRun:
    duration_s: float = 200.0
    traces_per_class: int = 2
    w: int = 512
    filters: tuple = SWEEP_FILTERS
    epochs: int = 15
    lr: float = 1e-3


def compare_detectors(make: ScenarioMaker, seed: int, run: SuiteRun = SuiteRun(), n_classes: int = 6,
                      detectors: Sequence[str] = DETECTORS) -> dict:
    """``{k: {detector: accuracy}}`` for every class count the scenario family supports."""
    classes = list(range(n_classes))
    trs = simulate_classes(make, classes, seed, run.duration_s, run.traces_per_class)
    if n_classes == presets.MAX_CLASSES:
        sets = {k: presets.class_set(k) for k in range(2, n_classes + 1)}
    else:
        sets = {n_classes: classes}
    out = {k: {} for k in sets}
    if any(d in detectors for d in ("HD", "ED", "AC")):
        det = detector_accuracy(trs, list(sets), sets)
        for k in sets:
            out[k].update({d: det[k][d] for d in ("HD", "ED", "AC") if d in detectors})
    if "ML" in detectors:
        data = ml_dataset(trs, run.w, seed)
        cfg = TrainConfig.adam(lr=run.lr, epochs=run.epochs, seed=seed)
        model = train_ml(data, n_classes, run.w, run.filters, cfg, seed)
        for k, acc in ml_accuracy(model, data, sets).items():
            out[k]["ML"] = acc
    return out


def chunk_width_accuracy(make: ScenarioMaker, seed: int, widths: Sequence[int], run: SuiteRun = SuiteRun(),
                         classes=(0, 1, 2, 3, 4, 5)) -> dict:
    """Test accuracy of a model trained over ``classes`` for each chunk width."""
    trs = simulate_classes(make, list(classes), seed, run.duration_s, run.traces_per_class)
    out = {}
    for w in widths:
        data = ml_dataset(trs, w, seed, classes)
        cfg = TrainConfig.adam(lr=run.lr, epochs=run.epochs, seed=seed)
        model = train_ml(data, len(classes), w, run.filters, cfg, seed)
        out[w] = balanced_accuracy(model.predict(data.x_test), data.y_test, range(len(classes)))
    return out


# ── compression ──

def compression_curve(traces_by_class, ks: Sequence[int], rates: Sequence[float], w: int = 512,
                      filters=SWEEP_FILTERS, epochs: int = 40, finetune_epochs: int = 15, seed: int = 0,
                      lr: float = 1e-3) -> list[tuple[int, float, float]]:
    """``(k, compression, accuracy)`` rows.

    For each class count an uncompressed model is trained first; each
    compressed model starts from its weights and is fine-tuned with the
    spectral mask in place, at a tenth of the training lr.  At the full lr
    the fine-tuned accuracy swings by several points from epoch to epoch.
    """
    rows = []
    for k in ks:
        cl = presets.class_set(k)
        data = ml_dataset(traces_by_class, w, seed, cl)
        base = train_ml(data, k, w, filters, TrainConfig.adam(lr=lr, epochs=epochs, seed=seed), seed)
        labels = list(range(k))
        for r in rates:
            if r == 0:
                model = base
            else:
                cfg = TrainConfig.adam(lr=lr / 10, epochs=finetune_epochs, seed=seed)
                model = train_ml(data, k, w, filters, cfg, seed, compression=r, init=base)
            acc = balanced_accuracy(model.predict(data.x_test), data.y_test, labels)
            rows.append((k, float(r), acc))
            log.info("compression k=%d rate=%.2f acc=%.4f", k, r, acc)
    return rows


# ── delay ──

@dataclass
class DelayKit:
    """Everything the arrival suite needs: a trained model and calibrated thresholds."""

    model: FcnModel
    ed: EdThresholds
    ac: AcConfig


def build_delay_kit(seed: int = 0, run: SuiteRun = SuiteRun(), case: str = presets.DELAY_CASE,
                    sight: str = "NLOS") -> DelayKit:
    n = len(presets.CASES[case]) + 1
    trs = simulate_classes(case_maker(case, sight), range(n), seed, run.duration_s, run.traces_per_class)
    ed, ac = calibrate_all(trs)
    data = ml_dataset(trs, run.w, seed)
    model = train_ml(data, n, run.w, run.filters, TrainConfig.adam(lr=run.lr, epochs=run.epochs, seed=seed), seed)
    return DelayKit(model, ed, ac)


def arrival_delays(kit: DelayKit, seeds: Sequence[int], duration_s: float = 40.0, change_s: float = 20.0,
                   before: int = 1, after: int = 2) -> dict[str, list[float]]:
    """Adaptation delay per detector over the arrival suite (``inf`` marks a timeout).

    HD's slot decision already demands four beacons per BSSID, so it is
    taken as confirmed at once; ED, AC and ML go through the two-decision
    debounce.
    """
    out: dict[str, list[float]] = {d: [] for d in DETECTORS}
    for s in seeds:
        tr = simulate_scenario(presets.arrival_scenario(s, duration_s, change_s, before, after))
        truth = Truth.of(tr)
        decs = {
            "HD": (hd_detect(tr.beacons, t_end=tr.duration_s), 1),
            "ED": (ed_detect(tr.energy_t, tr.energy_dbm, kit.ed), 2),
            "AC": (ac_detect(tr.ac_t, tr.ac_rho, kit.ac), 2),
            "ML": (batch_infer(kit.model, tr.energy_t, tr.energy_dbm), 2),
        }
        for name, (dec, confirm) in decs.items():
            out[name] += measure_delay(dec, truth, initial=before, confirm=confirm, horizon=tr.duration_s)
    return out


# ── bench spec and tables ──

@dataclass(frozen=True)
class BenchSpec:
    distances: tuple = (6.0,)
    sights: tuple = ("NLOS",)
    cases: tuple = ()
    detectors: tuple = DETECTORS
    seeds: tuple = (0,)
    run: SuiteRun = field(default_factory=SuiteRun)
    delay_seeds: tuple = ()
    compression_classes: tuple = ()
    compression_rates: tuple = (0.0, 0.2, 0.4, 0.6)
    out_dir: str = "bench_out"
    checkpoint: str | None = None

    def __post_init__(self):
        unknown = set(self.detectors) - set(DETECTORS)
        if unknown:
            raise ValueError(f"unknown detectors {sorted(unknown)}")
        for c in self.cases:
            if c.upper() not in presets.CASES:
                raise ValueError(f"unknown case {c!r}")
        if not self.seeds:
            raise ValueError("at least one seed")


def _mean_std(vals) -> tuple[float, float]:
    a = np.asarray(vals, dtype=float)
    return float(a.mean()), float(a.std())


def _fmt(x: float) -> str:
    return "inf" if math.isinf(x) else f"{x:.6f}"


def _write_csv(path: Path, header, rows) -> None:
    with open(path, "w", newline="") as fh:
        wr = csv.writer(fh, lineterminator="\n")
        wr.writerow(header)
        wr.writerows(rows)


def run_bench(spec: BenchSpec) -> dict[str, Path]:
    """Run every table the spec asks for; returns the written files."""
    out = Path(spec.out_dir)
    out.mkdir(parents=True, exist_ok=True)
    if spec.checkpoint is not None and not Path(spec.checkpoint).exists():
        raise MissingDependencyError(f"checkpoint {spec.checkpoint} not found")
    written = {}
    dets = [d for d in DETECTORS if d in spec.detectors]

    if spec.distances:
        cells: dict = {}
        for dist in spec.distances:
            for sight in spec.sights:
                for s in spec.seeds:
                    res = compare_detectors(fixed_distance_maker(dist, sight), s, spec.run, detectors=dets)
                    for k, accs in res.items():
                        for d, a in accs.items():
                            cells.setdefault((dist, k, d, sight), []).append(a)
        header = ["distance_ft", "classes"] + [f"{d}_{s}_{m}" for d in dets for s in spec.sights for m in ("mean", "std")]
        rows = []
        for dist in spec.distances:
            for k in range(2, presets.MAX_CLASSES + 1):
                row = [f"{dist:g}", k]
                for d in dets:
                    for s in spec.sights:
                        row += [_fmt(v) for v in _mean_std(cells[(dist, k, d, s)])]
                rows.append(row)
        written["fixed_distance"] = out / "table_fixed_distance.csv"
        _write_csv(written["fixed_distance"], header, rows)

    if spec.cases:
        rows = []
        for case in spec.cases:
            n = len(presets.CASES[case.upper()]) + 1
            for sight in spec.sights:
                accs: dict = {d: [] for d in dets}
                for s in spec.seeds:
                    res = compare_detectors(case_maker(case, sight), s, spec.run, n_classes=n, detectors=dets)
                    for d in dets:
                        accs[d].append(res[n][d])
                row = [case.upper(), sight, n - 1]
                for d in dets:
                    row += [_fmt(v) for v in _mean_std(accs[d])]
                rows.append(row)
        header = ["case", "sight", "n_aps"] + [f"{d}_{m}" for d in dets for m in ("mean", "std")]
        written["cases"] = out / "table_cases.csv"
        _write_csv(written["cases"], header, rows)

    if spec.delay_seeds:
        kit = build_delay_kit(spec.seeds[0], spec.run)
        if spec.checkpoint is not None:
            kit.model = FcnModel.load(spec.checkpoint)
        delays = arrival_delays(kit, spec.delay_seeds)
        rows = []
        for d in dets:
            v = np.asarray(delays[d])
            fin = v[np.isfinite(v)]
            rows.append([d, _fmt(mean_delay(v)), _fmt(float(fin.std()) if len(fin) else math.inf),
                         int(np.sum(~np.isfinite(v))), len(v)])
        written["delay"] = out / "table_delay.csv"
        _write_csv(written["delay"], ["detector", "mean_delay_s", "std_delay_s", "timeouts", "changes"], rows)

    if spec.compression_classes:
        s = spec.seeds[0]
        trs = simulate_classes(fixed_distance_maker(6.0, "NLOS"), range(presets.MAX_CLASSES), s,
                               spec.run.duration_s, spec.run.traces_per_class)
        curve = compression_curve(trs, spec.compression_classes, spec.compression_rates, spec.run.w,
                                  spec.run.filters, spec.run.epochs,
                                  finetune_epochs=spec.run.epochs, seed=s, lr=spec.run.lr)
        written["compression"] = out / "compression_curve.csv"
        _write_csv(written["compression"], ["classes", "compression", "accuracy"],
                   [[k, f"{r:.2f}", _fmt(a)] for k, r, a in curve])
    return written


def quick_spec(out_dir: str = "bench_out") -> BenchSpec:
    """Small configuration for smoke runs."""
    return BenchSpec(seeds=(0,), run=replace(SuiteRun(), duration_s=60.0, traces_per_class=1, epochs=2),
                     out_dir=out_dir)
