"""Per-label evaluation: confusion counts, precision/recall/F1, Hamming loss,
ROC curves, and permutation importance.

Label matrices are (n, 4) booleans in ``LABELS`` order.
"""

import csv
from dataclasses import dataclass

import numpy as np

from .errors import LengthMismatch, SingleClass
from .labeler import LABELS
from .seeding import DEFAULT_SEED, parallel_map, rng_for


@dataclass
class ConfusionCounts:
    tp: np.ndarray
    fp: np.ndarray
    tn: np.ndarray
    fn: np.ndarray

    @property
    def n(self):
        return self.tp + self.fp + self.tn + self.fn


@dataclass
class LabelMetrics:
    accuracy: np.ndarray
    precision: np.ndarray
    recall: np.ndarray
    f1: np.ndarray
    roc_auc: np.ndarray = None

    def macro(self):
        out = {k: float(np.mean(getattr(self, k))) for k in ("accuracy", "precision", "recall", "f1")}
        if self.roc_auc is not None:
            out["roc_auc"] = float(np.mean(self.roc_auc))
        return out


@dataclass
class RocCurve:
    thresholds: np.ndarray  # descending, starts at +inf
    fpr: np.ndarray
    tpr: np.ndarray
    auc: float


@dataclass
class ImportanceReport:
    features: tuple
    labels: tuple
    mean: np.ndarray  # (n_labels, n_features)
    std: np.ndarray

    def ranking(self, label):
        """Feature names for ``label`` ordered by decreasing mean importance."""
        i = self.labels.index(label)
        order = np.argsort(-self.mean[i], kind="stable")
        return [self.features[j] for j in order]


def _pair(y_true, y_pred):
    t = np.asarray(y_true, dtype=bool)
    p = np.asarray(y_pred, dtype=bool)
    if t.shape != p.shape:
        raise LengthMismatch(f"shapes differ: {t.shape} vs {p.shape}")
    if t.ndim == 1:
        t, p = t[:, None], p[:, None]
    return t, p


def confusion(y_true, y_pred) -> ConfusionCounts:
    t, p = _pair(y_true, y_pred)
    return ConfusionCounts(
        (t & p).sum(axis=0), (~t & p).sum(axis=0), (~t & ~p).sum(axis=0), (t & ~p).sum(axis=0)
    )


def _ratio(a, b):
    a = np.asarray(a, dtype=np.float64)
    b = np.asarray(b, dtype=np.float64)
    return np.divide(a, b, out=np.zeros_like(a), where=b > 0)


def label_metrics(counts: ConfusionCounts) -> LabelMetrics:
    """Zero denominators give 0 for precision, recall and F1."""
    p = _ratio(counts.tp, counts.tp + counts.fp)
    r = _ratio(counts.tp, counts.tp + counts.fn)
    f1 = _ratio(2 * p * r, p + r)
    acc = _ratio(counts.tp + counts.tn, counts.n)
    return LabelMetrics(acc, p, r, f1)


def hamming_loss(y_true, y_pred):
    t, p = _pair(y_true, y_pred)
    if not t.size:
        return 0.0
    return float((t != p).sum() / t.size)


def macro_f1(y_true, y_pred):
    return float(label_metrics(confusion(y_true, y_pred)).f1.mean())


def roc_auc(scores, truth) -> RocCurve:
    """ROC curve over every distinct score threshold, highest first.

    Tied scores form a single step, so the trapezoidal area equals the
    Mann-Whitney probability P(pos > neg) + P(pos == neg) / 2.
    """
    s = np.asarray(scores, dtype=np.float64)
    t = np.asarray(truth, dtype=bool)
    if s.shape != t.shape:
        raise LengthMismatch(f"scores {s.shape} vs truth {t.shape}")
    n_pos = int(t.sum())
    n_neg = len(t) - n_pos
    if n_pos == 0 or n_neg == 0:
        raise SingleClass("ROC needs at least one positive and one negative")
    order = np.argsort(-s, kind="stable")
    s, t = s[order], t[order]
    last = np.r_[np.flatnonzero(np.diff(s) != 0), len(s) - 1]
    tp = np.r_[0, np.cumsum(t)[last]]
    fp = np.r_[0, np.cumsum(~t)[last]]
    # integer arithmetic keeps the area exact until the final division
    area2 = int(((fp[1:] - fp[:-1]) * (tp[1:] + tp[:-1])).sum())
    auc = area2 / (2 * n_pos * n_neg)
    return RocCurve(np.r_[np.inf, s[last]], fp / n_neg, tp / n_pos, auc)


def evaluate(model, X, Y):
    """Hard-label metrics and per-label ROC from a single prediction pass."""
    from .learners.pipeline import decode_predictions, predict_class_proba

    Y = np.asarray(Y, dtype=bool)
    proba = predict_class_proba(model, X)
    if len(proba) != len(Y):
        raise LengthMismatch(f"{len(proba)} feature rows vs {len(Y)} label rows")
    marg, hard = decode_predictions(proba)
    m = label_metrics(confusion(Y, hard))
    curves = []
    for j in range(Y.shape[1]):
        try:
            curves.append(roc_auc(marg[:, j], Y[:, j]))
        except SingleClass:
            curves.append(None)
    m.roc_auc = np.array([c.auc if c is not None else np.nan for c in curves])
    return m, curves, hard


def permutation_importance(model, X, Y, label=None, repeats=5, seed=DEFAULT_SEED, n_jobs=None):
    """Drop in per-label F1 when one feature column of ``X`` is shuffled.

    ``X`` is the raw (pre-imputation) feature matrix the model consumes.
    Each (feature, repeat) uses its own seeded permutation; one prediction
    pass serves all labels. ``label`` restricts the report to one label.
    """
    from .featurize import FEATURE_NAMES
    from .learners.pipeline import predict_labels

    if repeats < 1:
        raise ValueError("repeats must be >= 1")
    X = np.asarray(X, dtype=np.float64)
    Y = np.asarray(Y, dtype=bool)
    if len(X) != len(Y):
        raise LengthMismatch(f"{len(X)} feature rows vs {len(Y)} label rows")
    base = label_metrics(confusion(Y, predict_labels(model, X))).f1
    n_feat = X.shape[1]

    def unit(job):
        j, r = job
        Xp = X.copy()
        Xp[:, j] = X[rng_for(seed, "importance", j, r).permutation(len(X)), j]
        return base - label_metrics(confusion(Y, predict_labels(model, Xp))).f1

    jobs = [(j, r) for j in range(n_feat) for r in range(repeats)]
    drops = np.array(parallel_map(unit, jobs, n_jobs)).reshape(n_feat, repeats, Y.shape[1])
    mean = drops.mean(axis=1).T
    std = drops.std(axis=1).T
    labels = tuple(LABELS[: Y.shape[1]])
    names = tuple(FEATURE_NAMES[:n_feat])
    if label is not None:
        i = labels.index(label)
        return ImportanceReport(names, (label,), mean[i : i + 1], std[i : i + 1])
    return ImportanceReport(names, labels, mean, std)


METRIC_COLUMNS = ("model", "label", "accuracy", "precision", "recall", "f1", "auc")


def metric_rows(model_name, m: LabelMetrics):
    rows = []
    for j, lab in enumerate(LABELS):
        rows.append([model_name, lab, *(float(getattr(m, k)[j]) for k in ("accuracy", "precision", "recall", "f1")),
                     float(m.roc_auc[j]) if m.roc_auc is not None else float("nan")])
    return rows


def write_roc(fh, curve: RocCurve):
    w = csv.writer(fh, lineterminator="\n")
    w.writerow(["threshold", "fpr", "tpr"])
    for th, f, t in zip(curve.thresholds.tolist(), curve.fpr.tolist(), curve.tpr.tolist()):
        w.writerow([repr(th), repr(f), repr(t)])


def write_importance(fh, report: ImportanceReport, label):
    i = report.labels.index(label)
    w = csv.writer(fh, lineterminator="\n")
    w.writerow(["feature", "mean", "std"])
    for j, name in enumerate(report.features):
        w.writerow([name, repr(float(report.mean[i, j])), repr(float(report.std[i, j]))])
