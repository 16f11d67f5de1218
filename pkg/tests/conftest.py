import functools
import io
import os
import sys

import pytest

sys.path.insert(0, os.path.dirname(__file__))

from icucet.featurize import featurize_cohort  # noqa: E402
from icucet.ingest import parse_event_blocks, parse_stays, select_cohort  # noqa: E402
from icucet.labeler import label_cohort  # noqa: E402
from icucet.synth import SynthConfig, generate_cohort  # noqa: E402


@functools.lru_cache(maxsize=8)
def synthetic(n_stays, signal_strength=1.0, seed=42):
    """(cohort, stay_ids, X, Y, truth_bytes) for a generated cohort, via the CSV path."""
    stays_b, events_b, truth_b = generate_cohort(
        SynthConfig(n_stays=n_stays, signal_strength=signal_strength, seed=seed)
    )
    cohort = select_cohort(parse_stays(io.BytesIO(stays_b)), parse_event_blocks(io.BytesIO(events_b)))
    ids, Y = label_cohort(cohort)
    _, X = featurize_cohort(cohort)
    return cohort, ids, X, Y, truth_b


@pytest.fixture
def no_workers_env(monkeypatch):
    monkeypatch.delenv("ICUCET_WORKERS", raising=False)


# reduced boosting profile for the 10,000-stay statistical checks
GBT_PROFILE = {"n_estimators": 50}


@functools.lru_cache(maxsize=4)
def gbt_run(signal_strength, n_stays=10_000):
    """(model, X_test, Y_test, metrics) for gbt on a seeded 80/20 split."""
    from icucet.learners import fit_model
    from icucet.metrics import evaluate
    from icucet.splitter import stratified_shuffle_split

    _, _, X, Y, _ = synthetic(n_stays, signal_strength)
    sp = stratified_shuffle_split(Y, 0.2, seed=42)
    model = fit_model("gbt", X[sp.train_indices], Y[sp.train_indices], GBT_PROFILE, seed=42)
    Xt, Yt = X[sp.test_indices], Y[sp.test_indices]
    met, _, _ = evaluate(model, Xt, Yt)
    return model, Xt, Yt, met


@functools.lru_cache(maxsize=4)
def gbt_importance(signal_strength, repeats):
    from icucet.metrics import permutation_importance

    model, Xt, Yt, _ = gbt_run(signal_strength)
    return permutation_importance(model, Xt, Yt, repeats=repeats, seed=42)


ACCEPTANCE_LINES = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)
