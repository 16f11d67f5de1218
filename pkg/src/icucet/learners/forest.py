"""Random forest of weighted-Gini classification trees."""

import math
from dataclasses import dataclass

import numpy as np

from ..seeding import DEFAULT_SEED, parallel_map, rng_for
from ._tree import BinMapper, TreeEnsemble, grow_tree
from .powerset import N_CLASSES


@dataclass
class ForestParams:
    n_estimators: int = 200
    max_depth: int = 12
    min_samples_split: int = 2
    min_samples_leaf: int = 1
    max_bins: int = 256


@dataclass
class ForestModel:
    ensemble: TreeEnsemble  # leaf value = weighted class histogram (16,)

    def predict_proba(self, X, chunk_cells=1 << 22):
        X = np.asarray(X, dtype=np.float64)
        T = self.ensemble.n_trees
        out = np.empty((len(X), N_CLASSES))
        step = max(1, chunk_cells // (T * N_CLASSES))
        for s in range(0, len(X), step):
            v = self.ensemble.leaf_values(X[s : s + step])
            v = v / v.sum(axis=2, keepdims=True)
            out[s : s + step] = v.mean(axis=1)
        return out / out.sum(axis=1, keepdims=True)

    def to_arrays(self):
        return self.ensemble.to_arrays("forest_")

    @classmethod
    def from_arrays(cls, a):
        return cls(TreeEnsemble.from_arrays(a, "forest_"))


def train_forest(X, y, class_weights, params=ForestParams(), seed=DEFAULT_SEED, n_jobs=None):
    """Bootstrap-aggregated trees with ceil(sqrt(d)) candidate features per node.

    Each tree draws its bootstrap sample and feature subsets from its own
    generator seeded by (seed, tree index), so the forest does not depend
    on how trees are scheduled across workers.
    """
    X = np.asarray(X, dtype=np.float64)
    y = np.asarray(y, dtype=np.int64)
    n, d = X.shape
    mapper = BinMapper(params.max_bins)
    codes = mapper.fit_transform(X)
    classes = np.unique(y)
    y_local = np.searchsorted(classes, y)
    sw = np.asarray(class_weights, dtype=np.float64)[y]
    mtry = max(1, math.ceil(math.sqrt(d)))

    def one_tree(t):
        rng = rng_for(seed, "forest", t)
        rows = rng.integers(0, n, n)
        num = np.zeros((n, len(classes)))
        num[np.arange(n), y_local[rows]] = sw[rows]
        tree = grow_tree(
            codes[rows],
            num,
            sw[rows],
            mapper.edges,
            max_depth=params.max_depth,
            min_samples_split=params.min_samples_split,
            min_samples_leaf=params.min_samples_leaf,
            max_features=mtry,
            rng=rng,
            min_gain=-np.inf,
            stop_when_pure=True,
        )
        value = np.zeros((len(tree.feature), N_CLASSES))
        value[:, classes] = tree.num_sum
        return tree, value

    grown = parallel_map(one_tree, range(params.n_estimators), n_jobs)
    return ForestModel(TreeEnsemble.from_trees([g[0] for g in grown], [g[1] for g in grown]))
