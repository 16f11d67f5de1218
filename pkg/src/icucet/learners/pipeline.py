"""Fitted model = preprocessing statistics + one learner family.

Everything needed to go from a raw (pre-imputation) feature matrix to
class probabilities lives in :class:`TrainedModel`.
"""

import dataclasses
from dataclasses import dataclass

import numpy as np

from ..errors import PreprocessMismatch, UsageError
from ..featurize import (
    FEATURE_NAMES,
    ImputationStats,
    ScalingStats,
    apply_imputation,
    apply_scaling,
    fit_imputation,
    fit_scaling,
)
from ..seeding import DEFAULT_SEED
from .boosting import BoostedModel, BoostParams, train_gbt
from .forest import ForestModel, ForestParams, train_forest
from .linear import LinearModel, train_logreg
from .mlp import MlpModel, MlpParams, train_mlp
from .powerset import CLASS_LABELS, compute_class_weights, powerset_encode

FAMILIES = ("logreg", "forest", "gbt", "mlp")
TREE_FAMILIES = frozenset({"forest", "gbt"})

DEFAULT_PARAMS = {
    "logreg": {"C": 100.0},
    "forest": {"n_estimators": 200, "max_depth": 12, "min_samples_split": 2, "min_samples_leaf": 1},
    "gbt": {"n_estimators": 200, "max_depth": 8, "learning_rate": 0.1, "subsample": 0.8},
    "mlp": {"hidden_dim": 128, "num_hidden_layers": 2, "lr": 0.001, "batch_size": 32, "epochs": 10},
}

_PARAM_TYPES = {"forest": ForestParams, "gbt": BoostParams, "mlp": MlpParams}
MODEL_TYPES = {"logreg": LinearModel, "forest": ForestModel, "gbt": BoostedModel, "mlp": MlpModel}


def resolve_params(family, params=None):
    """Default hyperparameters for ``family`` overridden by ``params``; values coerced to field types."""
    if family not in FAMILIES:
        raise UsageError(f"unknown model family {family!r}; expected one of {', '.join(FAMILIES)}")
    merged = dict(DEFAULT_PARAMS[family])
    merged.update(params or {})
    if family == "logreg":
        allowed = {"C": float, "max_iter": int, "tol": float}
    else:
        allowed = {f.name: f.type for f in dataclasses.fields(_PARAM_TYPES[family])}
    out = {}
    for k, v in merged.items():
        if k not in allowed:
            raise UsageError(f"unknown {family} parameter {k!r}")
        typ = allowed[k]
        out[k] = int(float(v)) if typ is int else float(v)
    return out


@dataclass
class TrainedModel:
    family: str
    params: dict
    model: object
    imputation: ImputationStats
    scaling: ScalingStats  # None for tree families
    class_weights: np.ndarray
    seed: int = DEFAULT_SEED
    feature_names: tuple = FEATURE_NAMES
    rules: dict = None

    def preprocess(self, X):
        X = np.asarray(X, dtype=np.float64)
        if X.ndim == 1:
            X = X[None, :]
        if X.ndim != 2 or X.shape[1] != len(self.feature_names):
            raise PreprocessMismatch(f"expected {len(self.feature_names)} features, got shape {X.shape}")
        Xi = apply_imputation(X, self.imputation)
        return apply_scaling(Xi, self.scaling) if self.scaling is not None else Xi


def fit_model(family, X, Y, params=None, seed=DEFAULT_SEED, n_jobs=None, rules=None) -> TrainedModel:
    """Fit imputation (and scaling for non-tree families) on ``X``, then train.

    ``X`` is raw with NaN for missing; ``Y`` is the (n, 4) label matrix.
    """
    p = resolve_params(family, params)
    X = np.asarray(X, dtype=np.float64)
    y = powerset_encode(np.asarray(Y, dtype=bool))
    imputation = fit_imputation(X)
    Xi = apply_imputation(X, imputation)
    scaling = None
    if family not in TREE_FAMILIES:
        scaling = fit_scaling(Xi)
        Xi = apply_scaling(Xi, scaling)
    w = compute_class_weights(y)
    if family == "logreg":
        model = train_logreg(Xi, y, w, **p)
    elif family == "forest":
        model = train_forest(Xi, y, w, ForestParams(**p), seed=seed, n_jobs=n_jobs)
    elif family == "gbt":
        model = train_gbt(Xi, y, w, BoostParams(**p), seed=seed)
    else:
        model = train_mlp(Xi, y, w, MlpParams(**p), seed=seed)
    return TrainedModel(family, p, model, imputation, scaling, w, seed, FEATURE_NAMES, rules)


def predict_class_proba(model: TrainedModel, X):
    """(n, 16) class distribution; rows sum to 1."""
    return model.model.predict_proba(model.preprocess(X))


def decode_predictions(proba):
    """Label marginals and hard labels (bits of the argmax class, ties to the lowest id)."""
    proba = np.asarray(proba, dtype=np.float64)
    marginals = proba @ CLASS_LABELS.astype(np.float64)
    hard = CLASS_LABELS[np.argmax(proba, axis=1)]
    return marginals, hard


def predict_label_marginals(model: TrainedModel, X):
    return decode_predictions(predict_class_proba(model, X))[0]


def predict_labels(model: TrainedModel, X):
    return decode_predictions(predict_class_proba(model, X))[1]
