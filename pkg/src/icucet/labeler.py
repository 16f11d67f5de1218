"""Rule-based Care Escalation Trigger (CET) labels.

Labels come from events in the label window (hours 24-72 after intime by
default). The renal and neurologic rules compare against baselines taken
from the feature window (hours 0-24).
"""

import csv
import dataclasses
from dataclasses import dataclass
from typing import NamedTuple

import numpy as np

from .errors import MissingColumn, UsageError
from .featurize import FEATURE_WINDOW_HOURS
from .ingest import SignalKind, StayEvents

LABELS = ("respiratory", "hemodynamic", "renal", "neurologic")


class CetLabels(NamedTuple):
    respiratory: bool = False
    hemodynamic: bool = False
    renal: bool = False
    neurologic: bool = False


@dataclass(frozen=True)
class CetRuleConfig:
    spo2_threshold: float = 90.0
    spo2_min_count: int = 2
    rr_threshold: float = 30.0
    rr_min_count: int = 2
    map_threshold: float = 65.0
    sbp_threshold: float = 90.0
    creat_delta: float = 0.3
    creat_peak: float = 1.2
    gcs_drop: float = 2.0
    window_start: float = 24.0
    window_end: float = 72.0

    def __post_init__(self):
        for f in dataclasses.fields(self):
            if f.name.startswith("window"):
                continue
            if not getattr(self, f.name) > 0:
                raise UsageError(f"rule threshold {f.name} must be positive")
        if not 0 <= self.window_start < self.window_end:
            raise UsageError("label window must satisfy 0 <= start < end")

    @classmethod
    def from_mapping(cls, values):
        """Build from string-valued overrides (config file / CLI)."""
        kinds = {f.name: f.type for f in dataclasses.fields(cls)}
        kw = {}
        for k, v in values.items():
            if k not in kinds:
                raise UsageError(f"unknown rule setting {k!r}")
            kw[k] = int(v) if kinds[k] in (int, "int") else float(v)
        return cls(**kw)

    def as_dict(self):
        return dataclasses.asdict(self)


def _values(events, kind):
    return events.value[events.signal == kind]


# Inputs are short decimals from CSV, so differences are rounded before the
# strict comparison; otherwise 1.3 - 1.0 > 0.3 holds in binary floating point.
_DIFF_DECIMALS = 9


def _present(x):
    return x is not None and not np.isnan(x)


def label_respiratory(window_events, cfg=CetRuleConfig()):
    spo2 = _values(window_events, SignalKind.SPO2)
    rr = _values(window_events, SignalKind.RR)
    return bool(
        np.count_nonzero(spo2 < cfg.spo2_threshold) >= cfg.spo2_min_count
        or np.count_nonzero(rr > cfg.rr_threshold) >= cfg.rr_min_count
    )


def label_hemodynamic(window_events, cfg=CetRuleConfig()):
    return bool(
        (_values(window_events, SignalKind.MAP) < cfg.map_threshold).any()
        or (_values(window_events, SignalKind.SBP) < cfg.sbp_threshold).any()
    )


def label_renal(baseline_creatinine, window_events, cfg=CetRuleConfig()):
    cr = _values(window_events, SignalKind.CREATININE)
    if not _present(baseline_creatinine) or not len(cr):
        return False
    peak = cr.max()
    return bool(round(peak - baseline_creatinine, _DIFF_DECIMALS) > cfg.creat_delta and peak > cfg.creat_peak)


def label_neurologic(baseline_gcs, window_events, cfg=CetRuleConfig()):
    if (window_events.signal == SignalKind.SEDATION).any():
        return True
    gcs = _values(window_events, SignalKind.GCS)
    if not _present(baseline_gcs) or not len(gcs):
        return False
    return bool(round(baseline_gcs - gcs.min(), _DIFF_DECIMALS) > cfg.gcs_drop)


def _slice(events, hours, lo, hi):
    m = (hours >= lo) & (hours < hi)
    return StayEvents(events.charttime[m], events.signal[m], events.value[m])


def baselines(events, intime):
    """(latest creatinine, max GCS) in the feature window, NaN when absent."""
    h = events.hours_since(intime)
    base = _slice(events, h, *FEATURE_WINDOW_HOURS)
    cr = _values(base, SignalKind.CREATININE)
    gcs = _values(base, SignalKind.GCS)
    return (cr[-1] if len(cr) else np.nan), (gcs.max() if len(gcs) else np.nan)


def label_stay(stay, events, cfg=CetRuleConfig()) -> CetLabels:
    h = events.hours_since(stay.intime)
    win = _slice(events, h, cfg.window_start, cfg.window_end)
    if not len(win):
        return CetLabels()
    base_cr, base_gcs = baselines(events, stay.intime)
    return CetLabels(
        label_respiratory(win, cfg),
        label_hemodynamic(win, cfg),
        label_renal(base_cr, win, cfg),
        label_neurologic(base_gcs, win, cfg),
    )


def label_cohort(cohort, cfg=CetRuleConfig()):
    """Boolean label matrix (n_stays x 4) in cohort stay order."""
    Y = np.zeros((len(cohort.stays), len(LABELS)), dtype=bool)
    empty = 0
    for i, stay in enumerate(cohort.stays):
        ev = cohort.events[stay.stay_id]
        Y[i] = label_stay(stay, ev, cfg)
        h = ev.hours_since(stay.intime)
        empty += not ((h >= cfg.window_start) & (h < cfg.window_end)).any()
    cohort.summary["stays_without_label_window_events"] = empty
    return [s.stay_id for s in cohort.stays], Y


def write_labels(fh, stay_ids, Y):
    w = csv.writer(fh, lineterminator="\n")
    w.writerow(["stay_id", *LABELS])
    for sid, row in zip(stay_ids, np.asarray(Y, dtype=int).tolist()):
        w.writerow([sid, *row])


def read_labels(fh):
    rows = csv.reader(fh)
    header = next(rows, None)
    if header is None or [h.strip() for h in header[:5]] != ["stay_id", *LABELS]:
        raise MissingColumn(f"labels table must have columns stay_id,{','.join(LABELS)}")
    ids, data = [], []
    for row in rows:
        if row:
            ids.append(row[0])
            data.append([int(v) for v in row[1:5]])
    return ids, np.array(data, dtype=bool).reshape(len(ids), len(LABELS))
