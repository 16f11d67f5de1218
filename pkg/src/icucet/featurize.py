"""First-24-hour feature vectors and fold-safe preprocessing statistics.

Missing entries are carried as NaN until imputation. Feature order is fixed
by :data:`FEATURE_NAMES`.
"""

import csv
from dataclasses import dataclass
from datetime import datetime

import numpy as np

from .errors import AllMissingFeature, MissingColumn, NegativeAge, PreprocessMismatch
from .ingest import VITALS, SignalKind

FEATURE_WINDOW_HOURS = (0.0, 24.0)
DAYS_PER_YEAR = 365.25

_AGGS = ("mean", "min", "max")
VITAL_FEATURES = tuple(f"{s.token}_{a}" for s in VITALS for a in _AGGS)
FEATURE_NAMES = VITAL_FEATURES + ("creatinine_latest", "age", "gender_f", "gender_m")
N_FEATURES = len(FEATURE_NAMES)
# entries of the aggregate vector (everything except the demographics)
N_AGGREGATES = len(VITAL_FEATURES) + 1


def compute_age(anchor_age, anchor_year, intime):
    """Age in fractional years at ``intime``.

    The birth date is approximated as July 1 of ``anchor_year - anchor_age``;
    the elapsed calendar time is divided by 365.25 days.
    """
    birth = datetime(int(anchor_year) - int(anchor_age), 7, 1)
    if intime < birth:
        raise NegativeAge(f"intime {intime} precedes estimated birth date {birth.date()}")
    return (intime - birth).total_seconds() / (DAYS_PER_YEAR * 86400.0)


def aggregate_window(events, intime, window=FEATURE_WINDOW_HOURS):
    """Raw aggregates over ``[intime + window[0], intime + window[1])``.

    Returns a length-16 float array: (mean, min, max) for each vital in
    :data:`VITALS` order followed by the latest creatinine, NaN where the
    window holds no observation.
    """
    out = np.full(N_AGGREGATES, np.nan)
    if not len(events):
        return out
    h = events.hours_since(intime)
    inw = (h >= window[0]) & (h < window[1])
    sig, val = events.signal[inw], events.value[inw]
    for k, s in enumerate(VITALS):
        v = val[sig == s]
        if len(v):
            lo, hi = v.min(), v.max()
            # rounding in the sum can push the mean a hair outside [min, max]
            out[3 * k : 3 * k + 3] = (min(max(v.mean(), lo), hi), lo, hi)
    cr = val[sig == SignalKind.CREATININE]
    if len(cr):
        # events are sorted by charttime (stable), so the last one is the latest
        out[-1] = cr[-1]
    return out


@dataclass
class FeatureVector:
    stay_id: str
    values: np.ndarray  # length N_FEATURES, NaN = missing

    @property
    def missing(self):
        return np.isnan(self.values)

    def as_dict(self):
        return dict(zip(FEATURE_NAMES, self.values.tolist()))


def build_feature_vector(stay, aggregates) -> FeatureVector:
    age = compute_age(stay.anchor_age, stay.anchor_year, stay.intime)
    g = (1.0, 0.0) if stay.gender == "F" else (0.0, 1.0)
    return FeatureVector(stay.stay_id, np.concatenate([aggregates, [age], g]))


def featurize_cohort(cohort):
    """Feature matrix (n_stays x 19, NaN = missing) in cohort stay order."""
    X = np.empty((len(cohort.stays), N_FEATURES))
    for i, stay in enumerate(cohort.stays):
        agg = aggregate_window(cohort.events[stay.stay_id], stay.intime)
        X[i] = build_feature_vector(stay, agg).values
    return [s.stay_id for s in cohort.stays], X


def _as_matrix(rows):
    if len(rows) and isinstance(rows[0], FeatureVector):
        rows = [r.values for r in rows]
    X = np.asarray(rows, dtype=np.float64)
    if X.ndim != 2 or X.shape[1] != N_FEATURES:
        raise PreprocessMismatch(f"expected rows of {N_FEATURES} features, got shape {X.shape}")
    return X


@dataclass
class ImputationStats:
    medians: np.ndarray


@dataclass
class ScalingStats:
    mean: np.ndarray
    std: np.ndarray

    @property
    def constant(self):
        return self.std == 0


def fit_imputation(train_rows) -> ImputationStats:
    X = _as_matrix(train_rows)
    present = ~np.isnan(X)
    for j in np.flatnonzero(~present.any(axis=0)):
        raise AllMissingFeature(FEATURE_NAMES[j])
    return ImputationStats(np.nanmedian(X, axis=0))


def apply_imputation(rows, stats: ImputationStats):
    X = _as_matrix(rows).copy()
    r, c = np.nonzero(np.isnan(X))
    X[r, c] = stats.medians[c]
    return X


def fit_scaling(train_rows) -> ScalingStats:
    X = _as_matrix(train_rows)
    mean = X.mean(axis=0)
    std = X.std(axis=0)
    std[np.ptp(X, axis=0) == 0] = 0.0
    return ScalingStats(mean, std)


def apply_scaling(rows, stats: ScalingStats):
    """Population z-score; constant features map to 0."""
    X = _as_matrix(rows)
    safe = np.where(stats.std > 0, stats.std, 1.0)
    Z = (X - stats.mean) / safe
    Z[:, stats.constant] = 0.0
    return Z


def write_features(fh, stay_ids, X):
    w = csv.writer(fh, lineterminator="\n")
    w.writerow(["stay_id", *FEATURE_NAMES, *(f"{n}_missing" for n in FEATURE_NAMES)])
    miss = np.isnan(X)
    for sid, row, m in zip(stay_ids, X.tolist(), miss.tolist()):
        w.writerow([sid, *("" if mi else repr(v) for v, mi in zip(row, m)), *(int(mi) for mi in m)])


def read_features(fh):
    """Inverse of :func:`write_features`: returns (stay_ids, X with NaN)."""
    rows = csv.reader(fh)
    header = next(rows, None)
    if header is None or header[: 1 + N_FEATURES] != ["stay_id", *FEATURE_NAMES]:
        raise MissingColumn("features table must start with stay_id and the 19 feature columns in order")
    ids, data = [], []
    for row in rows:
        if not row:
            continue
        ids.append(row[0])
        data.append([float(v) if v != "" else np.nan for v in row[1 : 1 + N_FEATURES]])
    return ids, np.array(data, dtype=np.float64).reshape(len(ids), N_FEATURES)
