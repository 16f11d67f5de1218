"""Acceptance criteria, one test each.

Every test prints a single ``PASS``/``FAIL`` line (also repeated in the
pytest terminal summary) and then asserts, so a failing criterion shows
up both in the summary and as a red test.
"""

import time
from fractions import Fraction

import numpy as np
import pytest

from icucet import cli
from icucet.artifact import dumps, loads
from icucet.featurize import N_FEATURES
from icucet.labeler import CetLabels, label_stay
from icucet.learners import (
    N_CLASSES,
    DEFAULT_PARAMS,
    fit_model,
    powerset_decode,
    powerset_encode,
    predict_class_proba,
    predict_labels,
)
from icucet.learners.linear import logreg_objective
from icucet.learners.mlp import init_mlp, mlp_loss_grad
from icucet.metrics import confusion, hamming_loss, label_metrics, roc_auc
from icucet.splitter import stratified_kfold, stratified_shuffle_split
from icucet.synth import PLANTED_FEATURES, SynthConfig, generate_cohort

import oracles
from conftest import ACCEPTANCE_LINES, GBT_PROFILE, gbt_importance, gbt_run, synthetic
from test_labeler import STAY, K, events
from test_learners import accuracy, rel_err, xor_data


def verdict(number, title, ok, detail):
    line = f"criterion {number:>2} {'PASS' if ok else 'FAIL'}  {title}: {detail}"
    ACCEPTANCE_LINES.append(line)
    print(line)
    assert ok, line


def test_criterion_01_powerset_bijection():
    combos = [tuple(bool(c >> (3 - j) & 1) for j in range(4)) for c in range(N_CLASSES)]
    ok = all(tuple(powerset_decode(powerset_encode(y))) == y for y in combos)
    ok &= sorted(powerset_encode(y) for y in combos) == list(range(16))
    verdict(1, "powerset bijection", ok, "16/16 combinations round-trip")


def test_criterion_02_labeler_oracle():
    start = time.perf_counter()
    cohort, _, _, Y, _ = synthetic(1000, 1.0)
    _, events_b, _ = generate_cohort(SynthConfig(n_stays=1000, signal_strength=1.0))
    per_stay = oracles.read_events(events_b)
    expect = np.array([oracles.cet_labels(s.intime, per_stay[s.stay_id]) for s in cohort.stays])
    agree = float((expect == Y).all(axis=1).mean())
    boundary = [
        label_stay(STAY, events((30, K.MAP, 65.0))).hemodynamic,
        label_stay(STAY, events((5, K.GCS, 15), (30, K.GCS, 13))).neurologic,
        label_stay(STAY, events((5, K.CREATININE, 1.0), (30, K.CREATININE, 1.3))).renal,
        label_stay(STAY, events((30, K.SPO2, 85))).respiratory,
    ]
    elapsed = time.perf_counter() - start
    ok = agree == 1.0 and not any(boundary) and len(Y) == 1000 and elapsed < 10
    verdict(2, "labeler oracle equivalence", ok,
            f"agreement {agree:.4f} on {len(Y)} stays, boundary fixtures {boundary}, {elapsed:.1f}s")


def test_criterion_03_stratification():
    _, _, _, Y, _ = synthetic(10_000, 1.0)
    start = time.perf_counter()
    sp = stratified_shuffle_split(Y, 0.2, seed=42)
    again = stratified_shuffle_split(Y, 0.2, seed=42)
    folds = stratified_kfold(Y, 5, seed=42)
    elapsed = time.perf_counter() - start
    gap = np.abs(Y[sp.train_indices].mean(axis=0) - Y[sp.test_indices].mean(axis=0)).max()
    fold_gap = max(np.abs(Y[folds.fold_of == f].mean(axis=0) - Y.mean(axis=0)).max() for f in range(5))
    sizes = (len(sp.train_indices), len(sp.test_indices))
    ok = (gap < 0.01 and fold_gap < 0.02 and abs(sizes[0] - 8000) <= 1 and abs(sizes[1] - 2000) <= 1
          and np.array_equal(sp.test_indices, again.test_indices) and elapsed < 5)
    verdict(3, "iterative stratification", ok,
            f"sizes {sizes}, split gap {gap:.4f}, fold gap {fold_gap:.4f}, {elapsed:.2f}s")


def _fd(f, arrays, h=1e-6):
    out = []
    for a in arrays:
        g = np.zeros_like(a)
        for idx in np.ndindex(a.shape):
            old = a[idx]
            a[idx] = old + h
            lp = f()
            a[idx] = old - h
            lm = f()
            a[idx] = old
            g[idx] = (lp - lm) / (2 * h)
        out.append(g)
    return out


def test_criterion_04_gradient_checks():
    start = time.perf_counter()
    rng = np.random.default_rng(7)
    X = rng.normal(size=(30, 5))
    y = rng.integers(0, 16, 30)
    sw = rng.uniform(0.5, 2, 30)
    W, b = rng.normal(size=(16, 5)) * 0.3, rng.normal(size=16) * 0.3
    _, gW, gb = logreg_objective(W, b, X, y, sw, 1.5)
    nW, nb = _fd(lambda: logreg_objective(W, b, X, y, sw, 1.5)[0], [W, b])
    lr_err = max(rel_err(gW, nW), rel_err(gb, nb))

    Xm = rng.normal(size=(3, 4))
    ym = np.array([0, 5, 15])
    swm = np.array([1.0, 0.4, 2.5])
    net = init_mlp(4, 8, 2, rng)
    net.biases = [rng.normal(size=v.shape) * 0.1 for v in net.biases]
    _, gWs, gbs = mlp_loss_grad(net, Xm, ym, swm)
    nums = _fd(lambda: mlp_loss_grad(net, Xm, ym, swm)[0], net.weights + net.biases)
    mlp_err = max(rel_err(a, n) for a, n in zip(gWs + gbs, nums))
    elapsed = time.perf_counter() - start
    ok = lr_err < 1e-4 and mlp_err < 1e-3 and elapsed < 30
    verdict(4, "gradient checks", ok, f"logreg max rel err {lr_err:.2e}, mlp {mlp_err:.2e}, {elapsed:.1f}s")


def test_criterion_05_auc_oracle():
    rng = np.random.default_rng(99)
    worst = 0.0
    for i in range(100):
        n = int(rng.integers(2, 201))
        t = rng.random(n) < 0.4
        t[0], t[1] = True, False
        s = np.round(rng.random(n), 1) if i % 3 == 0 else rng.random(n)
        worst = max(worst, abs(roc_auc(s, t).auc - float(oracles.pairwise_auc(s.tolist(), t.tolist()))))
    t = np.array([1, 1, 0, 0, 1, 0], dtype=bool)
    s = np.where(t, 1.0, 0.0) + np.arange(6) / 100
    special = (roc_auc(s, t).auc, roc_auc(-s, t).auc, roc_auc(np.full(6, 0.3), t).auc)
    ok = worst <= 1e-12 and special == (1.0, 0.0, 0.5)
    verdict(5, "AUC oracle", ok, f"max |sweep - pairwise| {worst:.1e} over 100 fixtures, special {special}")


def test_criterion_06_metric_identities():
    rng = np.random.default_rng(6)
    ok = True
    for _ in range(200):
        n = int(rng.integers(1, 300))
        t, p = rng.random((n, 4)) < 0.3, rng.random((n, 4)) < 0.4
        c = confusion(t, p)
        m = label_metrics(c)
        per_label = sum(Fraction(int(c.fp[j] + c.fn[j]), n) for j in range(4)) / 4
        ok &= hamming_loss(t, p) == float(per_label)
        ok &= bool((c.tp + c.fp + c.tn + c.fn == n).all())
        for j in range(4):
            pr, rc = m.precision[j], m.recall[j]
            f1 = 2 * pr * rc / (pr + rc) if pr + rc else 0.0
            ok &= abs(m.f1[j] - f1) < 1e-12
            ok &= pr == (c.tp[j] / (c.tp[j] + c.fp[j]) if c.tp[j] + c.fp[j] else 0.0)
    verdict(6, "metric identities", bool(ok), "200 random fixtures: Hamming, F1, count totals")


def test_criterion_07_nonlinear_separation():
    start = time.perf_counter()
    X, Y = xor_data(400, seed=0)
    acc = {fam: accuracy(fit_model(fam, X, Y, DEFAULT_PARAMS[fam], seed=42), X, Y)
           for fam in ("forest", "gbt", "logreg")}
    elapsed = time.perf_counter() - start
    ok = acc["forest"] > 0.95 and acc["gbt"] > 0.95 and 0.4 <= acc["logreg"] <= 0.6 and elapsed < 60
    verdict(7, "nonlinear learner separation", ok,
            ", ".join(f"{k} {v:.3f}" for k, v in acc.items()) + f", {elapsed:.1f}s")


def test_criterion_08_planted_signal_recovery():
    start = time.perf_counter()
    signal = gbt_run(2.0)[3].roc_auc
    control = gbt_run(0.0)[3].roc_auc
    rep = gbt_importance(2.0, 5)
    firsts = {lab: rep.ranking(lab)[0] for lab in rep.labels}
    elapsed = time.perf_counter() - start
    ok = bool((signal - control >= 0.15).all()) and all(firsts[l] == PLANTED_FEATURES[l] for l in firsts)
    verdict(8, "planted-signal recovery", ok,
            f"profile gbt {GBT_PROFILE}, AUC {np.round(signal, 3).tolist()} vs control "
            f"{np.round(control, 3).tolist()}, top features {list(firsts.values())}, {elapsed:.0f}s")


def _cli_pipeline(out, workers, monkeypatch):
    monkeypatch.setenv("ICUCET_WORKERS", str(workers))
    steps = [
        ["synth", "--n-stays", "1500"], ["featurize"], ["label"], ["split"],
        ["train", "--family", "forest", "--param", "n_estimators=20"],
        ["train", "--family", "gbt", "--param", "n_estimators=10"],
        ["evaluate", "--model", str(out / "model_forest.bin")],
        ["evaluate", "--model", str(out / "model_gbt.bin")],
        ["importance", "--model", str(out / "model_gbt.bin"), "--repeats", "2"],
    ]
    for s in steps:
        assert cli.main([s[0], "--out-dir", str(out), *s[1:]]) == 0, s
    return (out / "metrics.csv").read_bytes(), (out / "importance_renal.csv").read_bytes()


def test_criterion_09_determinism_and_artifact(tmp_path, monkeypatch):
    a = _cli_pipeline(tmp_path / "a", 1, monkeypatch)
    b = _cli_pipeline(tmp_path / "b", 1, monkeypatch)
    c = _cli_pipeline(tmp_path / "c", 4, monkeypatch)
    same_runs, same_workers = a == b, a == c
    rng = np.random.default_rng(0)
    X = rng.normal(size=(200, N_FEATURES))
    X[rng.random(X.shape) < 0.1] = np.nan
    Y = rng.random((200, 4)) < 0.3
    bitwise = True
    for fam, p in (("logreg", {"max_iter": 50}), ("forest", {"n_estimators": 5}), ("gbt", {"n_estimators": 3}),
                   ("mlp", {"epochs": 1})):
        m = fit_model(fam, X, Y, p)
        blob = dumps(m)
        back = loads(blob)
        bitwise &= dumps(back) == blob
        bitwise &= np.array_equal(predict_class_proba(m, X), predict_class_proba(back, X))
        bitwise &= np.array_equal(predict_labels(m, X), predict_labels(back, X))
    ok = same_runs and same_workers and bitwise
    verdict(9, "determinism and artifact integrity", ok,
            f"metrics.csv identical across runs {same_runs}, across worker counts {same_workers}, "
            f"artifact round-trip bitwise {bitwise}")


@pytest.mark.skip(reason="data-gated: needs a credentialed ICU database extract, not available here")
def test_criterion_10_full_cohort_reference_scores():
    """Cohort within 5% of 85,242 stays and gbt per-label F1 within 0.05 of 0.66/0.72/0.76/0.62."""
