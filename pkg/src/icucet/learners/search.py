"""Grid-search cross-validation on mean macro-F1."""

import itertools
from dataclasses import dataclass

import numpy as np

from ..seeding import DEFAULT_SEED, derive_seed, parallel_map
from .pipeline import fit_model, predict_labels

DEFAULT_GRIDS = {
    "logreg": {"C": [0.1, 1.0, 10.0, 100.0]},
    "forest": {
        "n_estimators": [100, 200],
        "max_depth": [8, 12],
        "min_samples_split": [2, 5],
        "min_samples_leaf": [1, 2],
    },
    "gbt": {
        "n_estimators": [100, 200],
        "max_depth": [4, 8],
        "learning_rate": [0.05, 0.1],
        "subsample": [0.8, 1.0],
    },
    "mlp": {"hidden_dim": [64, 128], "num_hidden_layers": [1, 2]},
}


def expand_grid(grid):
    """Cartesian product in key order, last key varying fastest."""
    keys = list(grid)
    return [dict(zip(keys, combo)) for combo in itertools.product(*(grid[k] for k in keys))]


@dataclass
class CvResult:
    candidates: list
    fold_scores: np.ndarray  # (n_candidates, k)

    @property
    def mean_scores(self):
        return self.fold_scores.mean(axis=1)

    @property
    def best_index(self):
        # argmax returns the first maximum: ties go to grid order
        return int(np.argmax(self.mean_scores))

    @property
    def best_params(self):
        return self.candidates[self.best_index]


def grid_search(family, grid, folds, X, Y, seed=DEFAULT_SEED, n_jobs=None):
    """Score every candidate on every fold and pick the best mean macro-F1.

    Imputation, scaling and class weights are refit on each fold's training
    part inside :func:`fit_model`, so validation rows never inform them.
    """
    from ..metrics import macro_f1

    X = np.asarray(X, dtype=np.float64)
    Y = np.asarray(Y, dtype=bool)
    candidates = expand_grid(grid) if isinstance(grid, dict) else list(grid)
    if not candidates:
        raise ValueError("empty hyperparameter grid")
    k = folds.k

    def unit(job):
        ci, f = job
        tr, va = folds.split(f)
        m = fit_model(family, X[tr], Y[tr], candidates[ci], seed=derive_seed(seed, family, ci, f), n_jobs=1)
        return macro_f1(Y[va], predict_labels(m, X[va]))

    jobs = [(ci, f) for ci in range(len(candidates)) for f in range(k)]
    scores = np.array(parallel_map(unit, jobs, n_jobs)).reshape(len(candidates), k)
    return CvResult(candidates, scores)
