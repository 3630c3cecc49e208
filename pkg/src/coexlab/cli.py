"""Command line: ``coexlab <command> [options]``.

Commands: simulate, prepare, calibrate, train, eval, infer, bench.
Global flags ``--seed``, ``--out`` and ``--config`` go before the command.

Exit codes: 0 ok, 2 configuration error, 3 missing input or dependency,
4 numeric failure.
"""

from __future__ import annotations

import argparse
import configparser
import json
import logging
import sys
from dataclasses import replace
from pathlib import Path

import numpy as np

from . import presets
from .bench import BenchSpec, MissingDependencyError, SuiteRun, quick_spec, run_bench
from .dataset import (DatasetFormatError, RawTrace, prepare_dataset, read_dataset_arrays, read_stats, write_dataset,
                      write_stats)
from .detectors import Decisions, calibrate_ac, calibrate_ed
from .detectors.store import CalibrationFormatError, write_calibration
from .nn import CheckpointError, FcnModel, NumericError, TrainConfig, evaluate, train
from .nn.conv import ShapeError
from .runtime import duty_rows, run_closed_loop, stream_infer, write_duty_csv
from .sim import ConfigError, CoexistenceSimulator, load_scenario, simulate_scenario
from .trace_io import TraceFormatError, iter_energy_csv, read_trace, write_trace

EXIT_OK, EXIT_CONFIG, EXIT_MISSING, EXIT_NUMERIC = 0, 2, 3, 4

log = logging.getLogger("coexlab")


class UsageError(ValueError):
    pass


def _out(args, default: str) -> Path:
    return Path(args.out if args.out is not None else default)


def _scenario(args):
    if args.config:
        cfg = load_scenario(args.config)
    elif args.case:
        cfg = presets.case_scenario(args.case, args.sight, 0, args.duration, n_active=args.aps)
    elif args.aps is not None:
        cfg = presets.fixed_distance_scenario(args.aps, args.distance, args.sight, 0, args.duration)
    else:
        raise UsageError("simulate needs --config, --case or --aps")
    if args.seed is not None:
        cfg = cfg.replace(seed=args.seed)
    return cfg


def cmd_simulate(args) -> int:
    cfg = _scenario(args)
    out = _out(args, "trace_out")
    tr = simulate_scenario(cfg)
    paths = write_trace(tr, out, args.stem)
    print(f"{len(tr.energy_t)} energy samples, {len(tr.beacon_t)} beacons -> {paths['energy']}")
    return EXIT_OK


def _load_traces(dirs, stem):
    out = []
    for d in dirs:
        tr = read_trace(d, stem)
        counts = set(tr.truth_count.tolist())
        if len(counts) != 1:
            raise UsageError(f"{d}: trace is not stationary (AP counts {sorted(counts)})")
        out.append((tr, counts.pop()))
    return out


def cmd_prepare(args) -> int:
    traces = _load_traces(args.trace, args.stem)
    raws = [RawTrace(tr.energy_dbm, c, str(d)) for (tr, c), d in zip(traces, args.trace)]
    seed = args.seed if args.seed is not None else 0
    data = prepare_dataset(raws, args.w, seed=seed, trace_disjoint=args.trace_disjoint)
    out = _out(args, "dataset_out")
    out.mkdir(parents=True, exist_ok=True)
    write_dataset((data.x_train, data.y_train), out / "train.tsv")
    write_dataset((data.x_test, data.y_test), out / "test.tsv")
    write_stats(data.stats, out / "stats.json")
    print(f"{len(data.x_train)} train / {len(data.x_test)} test chunks of width {args.w}; "
          f"{data.n_clipped} outliers clipped -> {out}")
    return EXIT_OK


def cmd_calibrate(args) -> int:
    traces = _load_traces(args.trace, args.stem)
    cal = calibrate_ed(traces) if args.detector == "ed" else calibrate_ac(traces)
    out = _out(args, f"{args.detector}_calibration.txt")
    write_calibration(cal, out)
    print(out.read_text(), end="")
    return EXIT_OK


def _train_config(args) -> TrainConfig:
    seed = args.seed if args.seed is not None else 0
    kw = dict(epochs=args.epochs, batch=args.batch, seed=seed, weight_decay=args.weight_decay,
              plateau_unit=args.plateau_unit, time_budget_s=args.time_budget)
    if args.lr is not None:
        kw["lr"] = args.lr
    return TrainConfig.adam(**kw) if args.optimizer == "Adam" else TrainConfig(optimizer="SGD", **kw)


def cmd_train(args) -> int:
    x, y = read_dataset_arrays(args.train)
    if len(x) == 0:
        raise UsageError(f"{args.train}: empty dataset")
    stats = read_stats(args.stats)
    k = args.classes if args.classes is not None else int(y.max()) + 1
    filters = tuple(int(f) for f in args.filters.split(","))
    cfg = _train_config(args)
    model = FcnModel(k, x.shape[1], filters, seed=cfg.seed, compression=args.compression, norm_stats=stats)
    val = None
    if args.val is not None:
        val = read_dataset_arrays(args.val)
    model, hist = train(model, (x, y), val, cfg)
    out = _out(args, "model.npz")
    out.parent.mkdir(parents=True, exist_ok=True)
    model.save(out)
    hist_path = out.with_suffix(".history.json")
    # wall time is left out so reruns stay byte-identical
    hist_dict = {k: v for k, v in hist.as_dict().items() if k != "seconds"}
    hist_path.write_text(json.dumps(hist_dict, sort_keys=True) + "\n")
    print(f"trained {len(hist.train_loss)} epochs, final train acc {hist.train_acc[-1]:.4f} -> {out}")
    return EXIT_OK


def cmd_eval(args) -> int:
    model = FcnModel.load(args.model)
    x, y = read_dataset_arrays(args.test)
    if len(x) == 0:
        raise UsageError(f"{args.test}: empty dataset")
    loss, acc = evaluate(model, x, y)
    pred = model.predict(x)
    lines = [f"accuracy: {acc:.6f}", f"loss: {loss:.6f}", f"chunks: {len(y)}"]
    for c in range(model.k):
        sel = y == c
        if sel.any():
            lines.append(f"recall_{c}: {np.mean(pred[sel] == c):.6f}")
    text = "\n".join(lines) + "\n"
    out = _out(args, "eval_report.txt")
    out.write_text(text)
    print(text, end="")
    return EXIT_OK


def cmd_infer(args) -> int:
    model = FcnModel.load(args.model)
    out = _out(args, "decisions.csv")
    if args.closed_loop:
        if not args.config:
            raise UsageError("--closed-loop needs --config with a scenario")
        cfg = load_scenario(args.config)
        if args.seed is not None:
            cfg = cfg.replace(seed=args.seed)
        rows = run_closed_loop(CoexistenceSimulator(cfg), model, cfg.duration_s, stride=args.stride,
                               initial=args.initial)
    else:
        if args.input == "-":
            samples = list(iter_energy_csv(sys.stdin))
        else:
            with open(args.input) as fh:
                samples = list(iter_energy_csv(fh))
        res = list(stream_infer(model, samples, args.stride))
        dec = Decisions([t for t, _ in res], [c for _, c in res], "ML")
        rows = duty_rows(dec, args.initial)
    if str(out) == "-":
        write_duty_csv(rows, sys.stdout)
    else:
        with open(out, "w", newline="") as fh:
            write_duty_csv(rows, fh)
        print(f"{len(rows)} decisions -> {out}")
    return EXIT_OK


def _ints(text: str) -> tuple:
    vals = []
    for part in text.split(","):
        part = part.strip()
        if not part:
            continue
        if "-" in part:
            a, b = part.split("-")
            vals.extend(range(int(a), int(b) + 1))
        else:
            vals.append(int(part))
    return tuple(vals)


def _floats(text: str) -> tuple:
    return tuple(float(p) for p in text.split(",") if p.strip())


def bench_spec_from_ini(path, out_dir: str) -> BenchSpec:
    """``[bench]`` keys: distances, sights, cases, detectors, seeds, delay_seeds,
    compression_classes, compression_rates, checkpoint; ``[run]`` keys: the
    :class:`SuiteRun` fields."""
    parser = configparser.ConfigParser()
    if not parser.read(path):
        raise FileNotFoundError(path)
    b = parser["bench"] if parser.has_section("bench") else {}
    kw: dict = {"out_dir": out_dir}
    try:
        if "distances" in b:
            kw["distances"] = _floats(b["distances"])
        if "sights" in b:
            kw["sights"] = tuple(s.strip().upper() for s in b["sights"].split(",") if s.strip())
        if "cases" in b:
            kw["cases"] = tuple(s.strip().upper() for s in b["cases"].split(",") if s.strip())
        if "detectors" in b:
            kw["detectors"] = tuple(s.strip().upper() for s in b["detectors"].split(",") if s.strip())
        for key in ("seeds", "delay_seeds", "compression_classes"):
            if key in b:
                kw[key] = _ints(b[key])
        if "compression_rates" in b:
            kw["compression_rates"] = _floats(b["compression_rates"])
        if "checkpoint" in b:
            kw["checkpoint"] = b["checkpoint"]
        extra = set(b) - {"distances", "sights", "cases", "detectors", "seeds", "delay_seeds",
                          "compression_classes", "compression_rates", "checkpoint"}
        if extra:
            raise ConfigError(f"unknown key [bench] {sorted(extra)[0]}")
        if parser.has_section("run"):
            r = parser["run"]
            run = SuiteRun()
            rk = {}
            for key, value in r.items():
                if key == "filters":
                    rk[key] = tuple(int(v) for v in value.split(","))
                elif key in ("duration_s", "lr"):
                    rk[key] = float(value)
                elif key in ("traces_per_class", "w", "epochs"):
                    rk[key] = int(value)
                else:
                    raise ConfigError(f"unknown key [run] {key}")
            kw["run"] = replace(run, **rk)
        return BenchSpec(**kw)
    except ConfigError:
        raise
    except ValueError as exc:
        raise ConfigError(str(exc)) from exc


def cmd_bench(args) -> int:
    out = str(_out(args, "bench_out"))
    if args.config:
        spec = bench_spec_from_ini(args.config, out)
    elif args.quick:
        spec = quick_spec(out)
    else:
        spec = BenchSpec(seeds=tuple(range(10)), delay_seeds=tuple(range(10)), compression_classes=(2, 3, 5),
                         out_dir=out)
    if args.seed is not None:
        spec = replace(spec, seeds=tuple(s + args.seed for s in spec.seeds))
    written = run_bench(spec)
    for name, path in written.items():
        print(f"{name}: {path}")
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="coexlab", description="LTE-U / Wi-Fi coexistence laboratory")
    p.add_argument("--seed", type=int, default=None, help="override the random seed")
    p.add_argument("--out", default=None, help="output file or directory")
    p.add_argument("--config", default=None, help="scenario or bench config file")
    p.add_argument("-v", "--verbose", action="store_true")
    sub = p.add_subparsers(dest="command", required=True)

    s = sub.add_parser("simulate", help="run a scenario and write trace CSVs")
    s.add_argument("--case", help="named placement A-N instead of --config")
    s.add_argument("--aps", type=int, help="AP count (fixed-distance preset, or active APs of --case)")
    s.add_argument("--distance", type=float, default=6.0)
    s.add_argument("--sight", default="NLOS")
    s.add_argument("--duration", type=float, default=60.0)
    s.add_argument("--stem", default="trace")
    s.set_defaults(func=cmd_simulate)

    s = sub.add_parser("prepare", help="chunk, split and normalize stationary traces")
    s.add_argument("--trace", action="append", required=True, help="trace directory (repeatable)")
    s.add_argument("--stem", default="trace")
    s.add_argument("--w", type=int, default=512)
    s.add_argument("--trace-disjoint", action="store_true")
    s.set_defaults(func=cmd_prepare)

    s = sub.add_parser("calibrate", help="fit ED thresholds or AC ratios")
    s.add_argument("detector", choices=("ed", "ac"))
    s.add_argument("--trace", action="append", required=True)
    s.add_argument("--stem", default="trace")
    s.set_defaults(func=cmd_calibrate)

    s = sub.add_parser("train", help="train an FCN on a prepared dataset")
    s.add_argument("--train", required=True)
    s.add_argument("--stats", required=True)
    s.add_argument("--val")
    s.add_argument("--classes", type=int)
    s.add_argument("--filters", default="128,256,128")
    s.add_argument("--epochs", type=int, default=100)
    s.add_argument("--batch", type=int, default=32)
    s.add_argument("--optimizer", choices=("SGD", "Adam"), default="Adam")
    s.add_argument("--lr", type=float)
    s.add_argument("--weight-decay", type=float, default=1e-4)
    s.add_argument("--plateau-unit", choices=("epoch", "iteration"), default="epoch")
    s.add_argument("--compression", type=float, default=0.0)
    s.add_argument("--time-budget", type=float)
    s.set_defaults(func=cmd_train)

    s = sub.add_parser("eval", help="score a checkpoint on a prepared test set")
    s.add_argument("--model", required=True)
    s.add_argument("--test", required=True)
    s.set_defaults(func=cmd_eval)

    s = sub.add_parser("infer", help="stream energy CSV through a model; emits t_s,class,duty_cycle")
    s.add_argument("--model", required=True)
    s.add_argument("--input", default="-", help="t_s,dbm CSV file or - for stdin")
    s.add_argument("--stride", type=int)
    s.add_argument("--initial", type=int, help="AP count assumed before the first decision")
    s.add_argument("--closed-loop", action="store_true", help="drive the --config scenario instead")
    s.set_defaults(func=cmd_infer)

    s = sub.add_parser("bench", help="detector comparison tables")
    s.add_argument("--quick", action="store_true", help="small smoke configuration")
    s.set_defaults(func=cmd_bench)
    return p


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        return args.func(args)
    except (ConfigError, UsageError, configparser.Error, ShapeError, CalibrationFormatError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except (FileNotFoundError, MissingDependencyError, CheckpointError, ImportError) as exc:
        print(f"missing: {exc}", file=sys.stderr)
        return EXIT_MISSING
    except (NumericError, FloatingPointError) as exc:
        print(f"numeric failure: {exc}", file=sys.stderr)
        return EXIT_NUMERIC
    except (DatasetFormatError, TraceFormatError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG


if __name__ == "__main__":
    sys.exit(main())
