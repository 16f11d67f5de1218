"""Multiclass softmax gradient boosting with second-order (Newton) trees."""

from dataclasses import dataclass, field

import numpy as np

from ..errors import NonFinite
from ..seeding import DEFAULT_SEED, rng_for
from ._tree import BinMapper, TreeEnsemble, apply_codes, grow_tree
from .linear import log_softmax, softmax
from .powerset import N_CLASSES, one_hot


@dataclass
class BoostParams:
    n_estimators: int = 200
    max_depth: int = 8
    learning_rate: float = 0.1
    subsample: float = 0.8
    reg_lambda: float = 1.0
    min_child_weight: float = 1.0
    max_bins: int = 256


@dataclass
class BoostedModel:
    ensemble: TreeEnsemble  # round r, class k at tree index r * 16 + k
    learning_rate: float
    history: list = field(default_factory=list)

    @property
    def n_rounds(self):
        return self.ensemble.n_trees // N_CLASSES

    def decision_function(self, X, chunk_cells=1 << 22):
        X = np.asarray(X, dtype=np.float64)
        T = self.ensemble.n_trees
        out = np.empty((len(X), N_CLASSES))
        step = max(1, chunk_cells // T)
        for s in range(0, len(X), step):
            v = self.ensemble.leaf_values(X[s : s + step])[:, :, 0]
            out[s : s + step] = self.learning_rate * v.reshape(len(v), -1, N_CLASSES).sum(axis=1)
        if not np.isfinite(out).all():
            raise NonFinite("boosted scores overflowed")
        return out

    def predict_proba(self, X):
        return softmax(self.decision_function(X))

    def to_arrays(self):
        return {
            **self.ensemble.to_arrays("gbt_"),
            "learning_rate": np.array([self.learning_rate]),
            "history": np.asarray(self.history, dtype=np.float64),
        }

    @classmethod
    def from_arrays(cls, a):
        return cls(TreeEnsemble.from_arrays(a, "gbt_"), float(a["learning_rate"][0]), a["history"].tolist())


def weighted_cross_entropy(F, y, sample_weight):
    logp = log_softmax(F)
    return float(-(sample_weight * logp[np.arange(len(y)), y]).mean())


def train_gbt(X, y, class_weights, params=BoostParams(), seed=DEFAULT_SEED):
    """Fit 16 score functions, one regression tree per class per round.

    Each round draws a subsample without replacement (shared by the
    round's 16 trees), fits every class tree to the weighted softmax
    gradient and hessian, and sets leaves to -G / (H + reg_lambda).
    ``history[r]`` is the weighted training loss after r rounds.
    """
    X = np.asarray(X, dtype=np.float64)
    y = np.asarray(y, dtype=np.int64)
    n = len(X)
    mapper = BinMapper(params.max_bins)
    codes = mapper.fit_transform(X)
    sw = np.asarray(class_weights, dtype=np.float64)[y]
    Y = one_hot(y)
    F = np.zeros((n, N_CLASSES))
    m = max(1, min(n, int(np.floor(params.subsample * n + 0.5))))
    trees, values = [], []
    history = [weighted_cross_entropy(F, y, sw)]
    for r in range(params.n_estimators):
        if m < n:
            rows = np.sort(rng_for(seed, "gbt", r).choice(n, m, replace=False))
        else:
            rows = np.arange(n)
        P = softmax(F)
        G = sw[:, None] * (P - Y)
        H = sw[:, None] * P * (1.0 - P)
        sub = codes[rows]
        for k in range(N_CLASSES):
            tree = grow_tree(
                sub,
                G[rows, k],
                H[rows, k],
                mapper.edges,
                max_depth=params.max_depth,
                reg=params.reg_lambda,
                min_child_den=params.min_child_weight,
                min_gain=1e-12,
            )
            leaf = -tree.num_sum[:, 0] / np.maximum(tree.den_sum + params.reg_lambda, 1e-16)
            F[:, k] += params.learning_rate * leaf[apply_codes(tree, codes)]
            trees.append(tree)
            values.append(leaf[:, None])
        if not np.isfinite(F).all():
            raise NonFinite(f"boosted scores overflowed in round {r}")
        history.append(weighted_cross_entropy(F, y, sw))
    if not trees:
        raise ValueError("n_estimators must be at least 1")
    return BoostedModel(TreeEnsemble.from_trees(trees, values), params.learning_rate, history)
