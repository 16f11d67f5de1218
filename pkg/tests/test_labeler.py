import io
import time
from datetime import datetime

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from icucet.errors import UsageError
from icucet.ingest import SignalKind, StayEvents, StayRecord
from icucet.labeler import (
    LABELS,
    CetLabels,
    CetRuleConfig,
    label_cohort,
    label_hemodynamic,
    label_neurologic,
    label_renal,
    label_respiratory,
    label_stay,
    read_labels,
    write_labels,
)
from icucet.synth import SynthConfig, generate_cohort

import oracles
from conftest import synthetic

T0 = datetime(2150, 1, 1)
K = SignalKind


def events(*triples):
    triples = sorted(triples, key=lambda t: t[0])
    t = np.array([np.datetime64(T0, "s") + np.timedelta64(int(round(h * 3600)), "s") for h, _, _ in triples],
                 dtype="datetime64[s]")
    return StayEvents(t, np.array([int(k) for _, k, _ in triples], dtype=np.int8),
                      np.array([float(v) for _, _, v in triples]))


def win(*pairs):
    return events(*[(30, k, v) for k, v in pairs])


STAY = StayRecord("1", "p", "h", T0, 60, 2150, "M")


def test_respiratory_rules():
    assert label_respiratory(win((K.SPO2, 88), (K.SPO2, 89)))
    assert not label_respiratory(win((K.SPO2, 88)))
    assert label_respiratory(win((K.RR, 32), (K.RR, 35)))
    assert not label_respiratory(win((K.RR, 32)))
    assert not label_respiratory(win((K.SPO2, 88), (K.RR, 32)))
    assert not label_respiratory(win((K.SPO2, 90), (K.SPO2, 90), (K.RR, 30), (K.RR, 30)))


def test_hemodynamic_rules():
    assert label_hemodynamic(win((K.MAP, 64)))
    assert not label_hemodynamic(win((K.MAP, 65.0), (K.SBP, 90.0)))
    assert not label_hemodynamic(win((K.HR, 120)))
    assert label_hemodynamic(win((K.SBP, 89.9)))


def test_renal_rules():
    assert label_renal(1.0, win((K.CREATININE, 1.2), (K.CREATININE, 1.4)))
    assert not label_renal(1.0, win((K.CREATININE, 1.25)))
    assert not label_renal(0.5, win((K.CREATININE, 0.9)))
    assert not label_renal(1.0, win((K.CREATININE, 1.3)))  # delta exactly 0.3
    assert not label_renal(np.nan, win((K.CREATININE, 5.0)))
    assert not label_renal(1.0, win())


def test_neurologic_rules():
    assert label_neurologic(15, win((K.GCS, 12)))
    assert not label_neurologic(15, win((K.GCS, 13)))
    assert label_neurologic(np.nan, win((K.SEDATION, 1)))
    assert not label_neurologic(np.nan, win((K.GCS, 3)))


def test_empty_window_is_all_false():
    ev = events((1, K.MAP, 40), (72, K.MAP, 40), (80, K.SEDATION, 1))
    assert label_stay(STAY, ev) == CetLabels(False, False, False, False)


def test_resp_and_hemo_fixture():
    ev = events((30, K.MAP, 60), (31, K.SPO2, 85), (32, K.SPO2, 86))
    assert label_stay(STAY, ev) == CetLabels(True, True, False, False)


def test_all_four_fixture():
    ev = events(
        (30, K.MAP, 60), (31, K.SPO2, 85), (32, K.SPO2, 86),
        (10, K.CREATININE, 1.0), (40, K.CREATININE, 1.4),
        (5, K.GCS, 15), (50, K.GCS, 12),
    )
    assert label_stay(STAY, ev) == CetLabels(True, True, True, True)


def test_window_boundaries():
    # 24h belongs to the label window, 72h to neither
    assert label_stay(STAY, events((24, K.MAP, 50))).hemodynamic
    assert not label_stay(STAY, events((72, K.MAP, 50), (30, K.HR, 80))).hemodynamic
    # a creatinine at exactly 24h is not a baseline
    ev = events((24, K.CREATININE, 0.5), (30, K.CREATININE, 2.0))
    assert not label_stay(STAY, ev).renal


def test_baseline_is_latest_creatinine_not_lowest():
    ev = events((1, K.CREATININE, 0.5), (20, K.CREATININE, 1.8), (30, K.CREATININE, 2.0))
    assert not label_stay(STAY, ev).renal


def test_thresholds_come_from_config():
    ev = events((30, K.MAP, 64))
    assert label_stay(STAY, ev).hemodynamic
    assert not label_stay(STAY, ev, CetRuleConfig(map_threshold=60)).hemodynamic
    assert label_stay(STAY, events((30, K.SPO2, 85)), CetRuleConfig(spo2_min_count=1)).respiratory


def test_config_validation():
    with pytest.raises(UsageError):
        CetRuleConfig(window_start=72, window_end=24)
    with pytest.raises(UsageError):
        CetRuleConfig.from_mapping({"nope": "1"})
    assert CetRuleConfig.from_mapping({"map_threshold": "70"}).map_threshold == 70.0


_kinds = st.sampled_from([K.SPO2, K.SBP, K.MAP, K.RR, K.CREATININE, K.GCS, K.SEDATION, K.HR])


@st.composite
def stay_events(draw):
    out = []
    for _ in range(draw(st.integers(0, 25))):
        k = draw(_kinds)
        v = 1 if k == K.SEDATION else draw(st.integers(0, 200)) / 10
        out.append((draw(st.integers(0, 80 * 4)) / 4, k, v))
    return out


@settings(max_examples=200, deadline=None)
@given(stay_events(), st.integers(24 * 4, 72 * 4 - 1), st.sampled_from([K.SPO2, K.RR, K.MAP, K.SBP, K.SEDATION]))
def test_monotone_in_triggering_events(base, when, kind):
    trigger = {K.SPO2: 80, K.RR: 40, K.MAP: 50, K.SBP: 70, K.SEDATION: 1}[kind]
    before = label_stay(STAY, events(*base))
    after = label_stay(STAY, events(*base, (when / 4, kind, trigger)))
    assert all(a >= b for a, b in zip(after, before))


@settings(max_examples=200, deadline=None)
@given(stay_events())
def test_matches_oracle_on_random_stays(evs):
    got = label_stay(STAY, events(*evs))
    from datetime import timedelta
    from decimal import Decimal

    rows = [(T0 + timedelta(seconds=round(h * 3600)), k.token, Decimal(repr(float(v)))) for h, k, v in evs]
    assert tuple(got) == oracles.cet_labels(T0, rows)


def test_oracle_equivalence_on_1000_synthetic_stays():
    start = time.perf_counter()
    cohort, ids, _, Y, _ = synthetic(1000, 1.0)
    stays_b, events_b, _ = generate_cohort(SynthConfig(n_stays=1000, signal_strength=1.0))
    per_stay = oracles.read_events(events_b)
    expected = np.array([oracles.cet_labels(s.intime, per_stay[s.stay_id]) for s in cohort.stays])
    assert len(ids) == 1000
    assert (expected == Y).all()
    assert time.perf_counter() - start < 10


def test_labels_roundtrip():
    Y = np.array([[1, 0, 0, 1], [0, 0, 0, 0]], dtype=bool)
    buf = io.StringIO()
    write_labels(buf, ["a", "b"], Y)
    assert buf.getvalue().splitlines()[0] == "stay_id," + ",".join(LABELS)
    buf.seek(0)
    ids, back = read_labels(buf)
    assert ids == ["a", "b"] and (back == Y).all()


def test_cohort_summary_counts_empty_windows():
    cohort, *_ = synthetic(200, 1.0)
    label_cohort(cohort)
    assert "stays_without_label_window_events" in cohort.summary
