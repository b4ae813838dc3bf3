import io
import json
import subprocess
import sys
import time

import pytest

from ecgarrhythmia.classify import load_model
from ecgarrhythmia.cli import main, stream_classify
from ecgarrhythmia.domain import EcgRecord, LABELS, load_features, read_manifest, write_record


def run(capsys, *argv):
    code = main([str(a) for a in argv])
    out = capsys.readouterr()
    return code, out.out, out.err


@pytest.fixture(scope="module")
def workdir(tmp_path_factory):
    d = tmp_path_factory.mktemp("cli")
    assert main(["synth", "--n", "10", "--seed", "13", "--out", str(d / "corpus")]) == 0
    assert main(["features", "--manifest", str(d / "corpus" / "manifest.csv"),
                 "--out", str(d / "f.csv")]) == 0
    assert main(["train", "--features", str(d / "f.csv"), "--trees", "30",
                 "--out", str(d / "model.bin")]) == 0
    return d


def test_synth_layout(workdir):
    entries = list(read_manifest(workdir / "corpus" / "manifest.csv"))
    assert len(entries) == 90
    assert {lab for _, lab in entries} == set(LABELS)
    assert (workdir / "corpus" / "NSR_0000.truth.json").exists()


def test_synth_single_class(tmp_path, capsys):
    code, _, _ = run(capsys, "synth", "--class", "AF", "--n", "3", "--seed", "21",
                     "--out", tmp_path, "--no-truth")
    assert code == 0
    assert sorted(p.name for p in tmp_path.iterdir()) == \
        ["AF_0000.ecg", "AF_0001.ecg", "AF_0002.ecg", "manifest.csv"]


def test_predict(workdir, capsys):
    code, out, _ = run(capsys, "predict", "--model", workdir / "model.bin", "--features", workdir / "f.csv")
    assert code == 0
    lines = out.strip().splitlines()
    assert lines[0] == "id,label,confidence" and len(lines) == 91


def test_preprocess_and_delineate(workdir, tmp_path, capsys):
    code, _, _ = run(capsys, "preprocess", "--manifest", workdir / "corpus" / "manifest.csv",
                     "--out", tmp_path / "clean")
    assert code == 0 and len(list(read_manifest(tmp_path / "clean" / "manifest.csv"))) == 90
    code, out, _ = run(capsys, "delineate", "--record", workdir / "corpus" / "NSR_0000.ecg")
    assert code == 0
    beats = json.loads(out)["NSR_0000"]["beats"]
    assert len(beats) >= 8


def test_balance_command(workdir, tmp_path, capsys):
    code, _, _ = run(capsys, "balance", "--features", workdir / "f.csv", "--target", "15",
                     "--out", tmp_path / "b.csv")
    assert code == 0
    ds = load_features(tmp_path / "b.csv")
    assert set(ds.class_counts().values()) == {15}


def test_crossval_from_features_and_config_precedence(workdir, tmp_path, capsys):
    cfg = tmp_path / "cfg.json"
    cfg.write_text(json.dumps({"trees": 5, "folds": 3}))
    code, out, _ = run(capsys, "crossval", "--features", workdir / "f.csv", "--config", cfg)
    assert code == 0 and len(json.loads(out)["folds"]) == 3
    code, out, _ = run(capsys, "crossval", "--features", workdir / "f.csv", "--config", cfg,
                       "--folds", "5")
    assert code == 0 and len(json.loads(out)["folds"]) == 5
    cfg.write_text(json.dumps({"no_such_option": 1}))
    with pytest.raises(SystemExit) as exc:
        main(["crossval", "--features", str(workdir / "f.csv"), "--config", str(cfg)])
    assert exc.value.code == 2


def test_crossval_from_manifest_with_plots(workdir, tmp_path, capsys):
    pytest.importorskip("matplotlib")
    code, out, _ = run(capsys, "crossval", "--manifest", workdir / "corpus" / "manifest.csv",
                       "--trees", "10", "--folds", "5", "--out-dir", tmp_path,
                       "--plots", tmp_path / "plots")
    assert code == 0
    assert json.loads(out) == json.loads((tmp_path / "report.json").read_text())
    assert (tmp_path / "plots" / "confusion.png").exists()


def test_ablate(workdir, capsys):
    code, out, _ = run(capsys, "ablate", "subsets", "--features", workdir / "f.csv",
                       "--subsets", "HRV,ALL", "--trees", "10", "--folds", "5")
    assert code == 0
    assert [r["name"] for r in json.loads(out)["rows"]] == ["HRV", "ALL"]
    code, out, _ = run(capsys, "ablate", "grid", "--features", workdir / "f.csv",
                       "--grid", '{"n_trees": [5, 10]}', "--folds", "5")
    assert code == 0 and "best" in json.loads(out)


def test_exit_codes(workdir, tmp_path, capsys):
    assert run(capsys, "predict", "--model", workdir / "model.bin", "--features", tmp_path / "nope.csv")[0] == 3
    write_record(EcgRecord("flat", 500.0, [0.0] * 5000), tmp_path / "flat.ecg")
    assert run(capsys, "delineate", "--record", tmp_path / "flat.ecg")[0] == 4
    assert run(capsys, "ablate", "wavelets", "--manifest", workdir / "corpus" / "manifest.csv",
               "--wavelets", "mexh")[0] == 5
    (tmp_path / "bad.bin").write_bytes(b"garbage")
    assert run(capsys, "predict", "--model", tmp_path / "bad.bin", "--features", workdir / "f.csv")[0] == 6
    assert run(capsys, "crossval", "--features", workdir / "f.csv", "--folds", "11",
               "--no-balance")[0] == 7
    assert run(capsys, "train", "--features", workdir / "f.csv", "--trees", "0",
               "--out", tmp_path / "m.bin")[0] == 2
    with pytest.raises(SystemExit) as exc:
        main(["frobnicate"])
    assert exc.value.code == 2


def test_stream_order_errors_and_latency(workdir, tmp_path):
    model = load_model(workdir / "model.bin")
    corpus = workdir / "corpus"
    paths = [corpus / f"NSR_{i:04d}.ecg" for i in range(10)]
    (tmp_path / "broken.ecg").write_text("# id: broken\n# fs_hz: abc\n1\n2\n")
    lines = [str(p) for p in paths[:5]] + [str(tmp_path / "broken.ecg")] + [str(p) for p in paths[5:]]
    out, err = io.StringIO(), io.StringIO()
    t0 = time.perf_counter()
    n_err = stream_classify(model, lines, out, err)
    elapsed = time.perf_counter() - t0
    rows = [line.split(",") for line in out.getvalue().splitlines()]
    assert n_err == 1 and len(rows) == 11
    assert rows[5][:2] == ["broken", "ERROR"]
    ok = rows[:5] + rows[6:]
    assert [r[0] for r in ok] == [f"NSR_{i:04d}" for i in range(10)]
    assert all(r[1] in {str(lab) for lab in LABELS} and 0 < float(r[2]) <= 1 for r in ok)
    latencies = [float(line.split("latency_ms=")[1]) for line in err.getvalue().splitlines()]
    assert len(latencies) == 11 and max(latencies) < 500
    assert elapsed < 11 * 0.5


def test_stream_command_reads_stdin(workdir):
    paths = "\n".join(str(workdir / "corpus" / f"NSR_{i:04d}.ecg") for i in range(3)) + "\n"
    proc = subprocess.run([sys.executable, "-m", "ecgarrhythmia.cli", "stream", "--model",
                           str(workdir / "model.bin")], input=paths, capture_output=True, text=True)
    assert proc.returncode == 0
    assert [line.split(",")[0] for line in proc.stdout.splitlines()] == ["NSR_0000", "NSR_0001", "NSR_0002"]
    assert proc.stderr.count("latency_ms=") == 3
