import json

import numpy as np
import pytest

from coexlab.cli import main
from coexlab.dataset import read_dataset_arrays
from coexlab.detectors.store import read_calibration
from coexlab.nn import FcnModel
from coexlab.sim import dump_scenario
from coexlab import presets


def _run(*argv):
    return main([str(a) for a in argv])


def _pipeline(root, seed=5):
    """simulate -> prepare -> calibrate -> train -> eval -> infer under ``root``."""
    root.mkdir(parents=True, exist_ok=True)
    traces = []
    for n in range(3):
        d = root / f"tr{n}"
        assert _run("--seed", seed + n, "--out", d, "simulate", "--aps", n, "--duration", 20) == 0
        traces.append(d)
    tflags = [a for d in traces for a in ("--trace", d)]
    assert _run("--out", root / "data", "prepare", *tflags, "--w", 64) == 0
    assert _run("--out", root / "ed.txt", "calibrate", "ed", *tflags) == 0
    assert _run("--out", root / "ac.txt", "calibrate", "ac", *tflags) == 0
    assert _run("--seed", 1, "--out", root / "model.npz", "train", "--train", root / "data" / "train.tsv",
                "--stats", root / "data" / "stats.json", "--filters", "4,8,4", "--epochs", 2) == 0
    assert _run("--out", root / "eval.txt", "eval", "--model", root / "model.npz",
                "--test", root / "data" / "test.tsv") == 0
    assert _run("--out", root / "duty.csv", "infer", "--model", root / "model.npz",
                "--input", traces[1] / "trace_energy.csv", "--initial", 1) == 0
    return root


@pytest.fixture(scope="module")
def runs(tmp_path_factory):
    base = tmp_path_factory.mktemp("cli")
    return _pipeline(base / "a"), _pipeline(base / "b")


def _files(root):
    return sorted(p for p in root.rglob("*") if p.is_file())


def test_every_command_byte_identical(runs):
    a, b = runs
    fa, fb = _files(a), _files(b)
    assert [p.relative_to(a) for p in fa] == [p.relative_to(b) for p in fb]
    for p, q in zip(fa, fb):
        assert p.read_bytes() == q.read_bytes(), p.relative_to(a)


def test_prepare_outputs(runs):
    root = runs[0]
    x, y = read_dataset_arrays(root / "data" / "train.tsv")
    assert x.shape[1] == 64 and set(y.tolist()) == {0, 1, 2}
    assert json.loads((root / "data" / "stats.json").read_text())["sigma"] > 0


def test_calibration_files(runs):
    ed = read_calibration(runs[0] / "ed.txt")
    assert len(ed.alphas) == 2 and ed.alphas[0] < ed.alphas[1]
    ac = read_calibration(runs[0] / "ac.txt")
    # one upper-envelope ratio per class
    assert len(ac.ratios) == 3 and list(ac.ratios) == sorted(ac.ratios)


def test_eval_matches_checkpoint(runs):
    root = runs[0]
    m = FcnModel.load(root / "model.npz")
    x, y = read_dataset_arrays(root / "data" / "test.tsv")
    acc = float(np.mean(m.predict(x) == y))
    report = dict(line.split(": ") for line in (root / "eval.txt").read_text().splitlines())
    assert float(report["accuracy"]) == pytest.approx(acc, abs=1e-6)
    assert int(report["chunks"]) == len(y)
    hist = json.loads((root / "model.history.json").read_text())
    assert len(hist["train_loss"]) == 2


def test_infer_csv(runs):
    lines = (runs[0] / "duty.csv").read_text().splitlines()
    assert lines[0] == "t_s,class,duty_cycle"
    assert len(lines) > 1
    for line in lines[1:]:
        t, c, d = line.split(",")
        assert int(c) in (0, 1, 2) and 0 < float(d) <= 0.95


def test_infer_stdin_stdout(runs, monkeypatch, capsys):
    import io
    src = (runs[0] / "tr1" / "trace_energy.csv").read_text()
    monkeypatch.setattr("sys.stdin", io.StringIO(src))
    assert _run("--out", "-", "infer", "--model", runs[0] / "model.npz", "--initial", 1) == 0
    assert capsys.readouterr().out == (runs[0] / "duty.csv").read_text()


def test_infer_closed_loop(runs, tmp_path):
    cfg = tmp_path / "s.ini"
    dump_scenario(presets.arrival_scenario(seed=0, duration_s=6.0, change_s=3.0), cfg)
    out = tmp_path / "loop.csv"
    assert _run("--config", cfg, "--out", out, "infer", "--model", runs[0] / "model.npz", "--closed-loop",
                "--initial", 1) == 0
    assert out.read_text().startswith("t_s,class,duty_cycle\n")


def test_simulate_case_preset(tmp_path):
    assert _run("--out", tmp_path, "simulate", "--case", "A", "--duration", 3) == 0
    assert (tmp_path / "trace_energy.csv").exists()


def test_exit_code_config_errors(tmp_path, capsys):
    assert _run("simulate") == 2
    bad = tmp_path / "bad.ini"
    bad.write_text("[scenario]\nbogus = 1\n")
    assert _run("--config", bad, "simulate") == 2
    assert _run("--out", tmp_path, "simulate", "--case", "Z") == 2
    with pytest.raises(SystemExit) as exc:
        _run("nonsense")
    assert exc.value.code == 2


def test_exit_code_missing_input(tmp_path):
    assert _run("eval", "--model", tmp_path / "none.npz", "--test", tmp_path / "none.tsv") == 3
    assert _run("prepare", "--trace", tmp_path / "nowhere") == 3


def test_exit_code_numeric(tmp_path):
    # an infinite learning rate turns the weights non-finite after one step
    from coexlab.dataset import NormStats, write_dataset, write_stats
    x = np.random.default_rng(0).normal(size=(8, 16))
    write_dataset((x, np.arange(8) % 2), tmp_path / "t.tsv")
    write_stats(NormStats(0.0, 1.0), tmp_path / "s.json")
    code = _run("--out", tmp_path / "m.npz", "train", "--train", tmp_path / "t.tsv", "--stats", tmp_path / "s.json",
                "--filters", "2,2,2", "--epochs", 2, "--batch", 4, "--lr", "inf")
    assert code == 4


def test_bench_quick_byte_identical(tmp_path):
    assert _run("--out", tmp_path / "a", "bench", "--quick") == 0
    assert _run("--out", tmp_path / "b", "bench", "--quick") == 0
    fa, fb = _files(tmp_path / "a"), _files(tmp_path / "b")
    assert fa and len(fa) == len(fb)
    for p, q in zip(fa, fb):
        assert p.read_bytes() == q.read_bytes(), p.name
