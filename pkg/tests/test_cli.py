import csv
import subprocess
import sys

import numpy as np
import pytest

from icucet import cli
from icucet.artifact import load_model
from icucet.featurize import read_features
from icucet.labeler import LABELS, read_labels
from icucet.learners import fit_model
from icucet.metrics import evaluate, metric_rows
from icucet.seeding import derive_seed
from icucet.splitter import read_assignment


def run(*argv):
    return cli.main([str(a) for a in argv])


def _pipeline(out, n_stays, family="gbt", params=()):
    assert run("synth", "--out-dir", out, "--n-stays", n_stays) == 0
    for step in ("featurize", "label", "split"):
        assert run(step, "--out-dir", out) == 0
    extra = [x for p in params for x in ("--param", p)]
    assert run("train", "--out-dir", out, "--family", family, *extra) == 0
    assert run("evaluate", "--out-dir", out, "--model", out / f"model_{family}.bin") == 0


@pytest.fixture(scope="module")
def smoke(tmp_path_factory):
    out = tmp_path_factory.mktemp("smoke")
    _pipeline(out, 5000)  # boosting with the fixed default hyperparameters
    return out


def test_smoke_pipeline_writes_declared_files(smoke):
    for name in ("stays.csv", "events.csv", "truth.csv", "features.csv", "labels.csv", "split.csv",
                 "folds.csv", "model_gbt.bin", "metrics.csv", *(f"roc_gbt_{lab}.csv" for lab in LABELS)):
        assert (smoke / name).stat().st_size > 0, name
    with open(smoke / "metrics.csv") as f:
        rows = list(csv.reader(f))
    assert rows[0] == ["model", "label", "accuracy", "precision", "recall", "f1", "auc"]
    assert [r[1] for r in rows[1:]] == list(LABELS)
    with open(smoke / "split.csv") as f:
        assign = read_assignment(f)
    test = sum(a == "test" for a in assign.values())
    assert abs(test - 1000) <= 1


def test_artifact_alone_reproduces_training_metrics(tmp_path):
    _pipeline(tmp_path, 1200, params=["n_estimators=8"])
    with open(tmp_path / "features.csv") as f:
        ids, X = read_features(f)
    with open(tmp_path / "labels.csv") as f:
        lids, Y = read_labels(f)
    with open(tmp_path / "split.csv") as f:
        assign = read_assignment(f)
    assert lids == ids
    side = np.array([assign[s] for s in ids])
    # the same fit done in memory, never serialized
    model = fit_model("gbt", X[side == "train"], Y[side == "train"], {"n_estimators": 8},
                      seed=derive_seed(42, "learners", "gbt"))
    met, _, _ = evaluate(model, X[side == "test"], Y[side == "test"])
    expect = [[r[0], r[1], *map(repr, r[2:])] for r in metric_rows("gbt", met)]
    with open(tmp_path / "metrics.csv") as f:
        assert list(csv.reader(f))[1:] == expect


def test_importance_and_report(smoke, capsys):
    assert run("importance", "--out-dir", smoke, "--model", smoke / "model_gbt.bin", "--repeats", 1) == 0
    assert run("report", "--out-dir", smoke) == 0
    with open(smoke / "report.csv") as f:
        rows = list(csv.DictReader(f))
    assert [r["label"] for r in rows] == [*LABELS, "macro"]
    assert "creatinine_latest" in rows[2]["top_predictors"]
    assert "gbt" in capsys.readouterr().out


def test_mismatched_truth_length(smoke, tmp_path, capsys):
    lines = (smoke / "labels.csv").read_text().splitlines()
    short = tmp_path / "labels.csv"
    short.write_text("\n".join(lines[:-10]) + "\n")
    code = run("evaluate", "--out-dir", tmp_path, "--features", smoke / "features.csv", "--labels", short,
               "--split", smoke / "split.csv", "--model", smoke / "model_gbt.bin")
    err = capsys.readouterr().err.strip().splitlines()
    assert code == 3 and err[-1].startswith("error: LengthMismatch: ")


def test_report_without_metrics(tmp_path, capsys):
    assert run("report", "--out-dir", tmp_path) == 3
    assert capsys.readouterr().err.startswith("error: MissingInput: ")


def test_missing_input_file(tmp_path, capsys):
    assert run("featurize", "--out-dir", tmp_path) == 3
    assert "MissingInput" in capsys.readouterr().err


def test_usage_errors(tmp_path, capsys):
    assert run("train", "--out-dir", tmp_path, "--family", "gbt", "--param", "depth") == 2
    assert "UsageError" in capsys.readouterr().err
    with pytest.raises(SystemExit) as e:
        run("bogus")
    assert e.value.code == 2


def test_grid_training_writes_cv_table(tmp_path):
    out = tmp_path
    assert run("synth", "--out-dir", out, "--n-stays", 400) == 0
    for step in ("featurize", "label", "split"):
        assert run(step, "--out-dir", out, *(["--k", 3] if step == "split" else [])) == 0
    ini = out / "grid.ini"
    ini.write_text("[grid.logreg]\nC = 0.1, 10\n[params.logreg]\nmax_iter = 50\n")
    assert run("--config", ini, "train", "--out-dir", out, "--family", "logreg", "--grid") == 0
    with open(out / "cv_logreg.csv") as f:
        rows = list(csv.reader(f))
    assert rows[0] == ["candidate", "params", "fold0", "fold1", "fold2", "mean_macro_f1"]
    assert len(rows) == 3
    assert (out / "model_logreg.bin").exists()


def test_module_entry_point(tmp_path):
    proc = subprocess.run([sys.executable, "-m", "icucet", "report", "--out-dir", str(tmp_path)],
                          capture_output=True, text=True)
    assert proc.returncode == 3
    assert proc.stderr.strip().startswith("error: MissingInput:")
    assert len(proc.stderr.strip().splitlines()) == 1
