"""Multilabel-stratified train/test split and k-fold partitioning.

Both use iterative stratification: labels are processed scarcest first and
each example carrying the current label goes to the side that still wants
the most examples of that label. All-negative examples are placed by
remaining capacity alone.
"""

import csv
from dataclasses import dataclass

import numpy as np

from .errors import DegenerateFraction, MissingColumn, TooFewSamples
from .seeding import DEFAULT_SEED, rng_for


@dataclass
class SplitAssignment:
    train_indices: np.ndarray
    test_indices: np.ndarray


@dataclass
class FoldAssignment:
    fold_of: np.ndarray

    @property
    def k(self):
        return int(self.fold_of.max()) + 1 if len(self.fold_of) else 0

    def split(self, fold):
        """(train, validation) index arrays for one fold."""
        return np.flatnonzero(self.fold_of != fold), np.flatnonzero(self.fold_of == fold)


def _label_matrix(labels):
    Y = np.asarray([tuple(y) for y in labels] if not isinstance(labels, np.ndarray) else labels, dtype=bool)
    if Y.ndim != 2 or not len(Y):
        raise TooFewSamples("labels must be a non-empty 2-D collection")
    return Y


def _pick(cands, rng):
    return int(cands[0]) if len(cands) == 1 else int(rng.choice(cands))


def iterative_stratify(Y, capacities, rng):
    """Assign each row of ``Y`` to one of ``len(capacities)`` sides."""
    n, n_labels = Y.shape
    capacities = np.asarray(capacities, dtype=np.float64)
    k = len(capacities)
    desired = capacities[:, None] / n * Y.sum(axis=0)[None, :]
    remaining = capacities.copy()
    side_of = np.full(n, -1, dtype=np.int64)

    order = rng.permutation(n)
    Yo = Y[order]
    left = Yo.sum(axis=0).astype(np.int64)
    done = np.zeros(n, dtype=bool)
    label_rows = [np.flatnonzero(Yo[:, j]) for j in range(n_labels)]
    while (left > 0).any():
        l = int(np.argmin(np.where(left > 0, left, np.iinfo(np.int64).max)))
        for pos in label_rows[l]:
            if done[pos]:
                continue
            # full sides are never candidates, so side sizes come out exact
            d = np.where(remaining > 0, desired[:, l], -np.inf)
            cands = np.flatnonzero(d == d.max())
            if len(cands) > 1:
                cap = remaining[cands]
                cands = cands[cap == cap.max()]
            j = _pick(cands, rng)
            side_of[order[pos]] = j
            done[pos] = True
            lab = Yo[pos]
            desired[j, lab] -= 1
            remaining[j] -= 1
            left[lab] -= 1

    for pos in np.flatnonzero(~done):
        cands = np.flatnonzero(remaining == remaining.max()) if k > 1 else np.array([0])
        j = _pick(cands, rng)
        side_of[order[pos]] = j
        remaining[j] -= 1
    return side_of


def stratified_shuffle_split(labels, test_fraction=0.2, seed=DEFAULT_SEED) -> SplitAssignment:
    Y = _label_matrix(labels)
    n = len(Y)
    if not 0 < test_fraction < 1:
        raise DegenerateFraction(f"test_fraction must lie in (0, 1), got {test_fraction}")
    n_test = int(np.floor(test_fraction * n + 0.5))
    if n_test == 0 or n_test == n:
        raise DegenerateFraction(f"test_fraction {test_fraction} leaves an empty side for n={n}")
    side = iterative_stratify(Y, [n - n_test, n_test], rng_for(seed, "shuffle_split"))
    return SplitAssignment(np.flatnonzero(side == 0), np.flatnonzero(side == 1))


def stratified_kfold(labels, k=5, seed=DEFAULT_SEED) -> FoldAssignment:
    Y = _label_matrix(labels)
    n = len(Y)
    if k < 2 or n < k:
        raise TooFewSamples(f"need k >= 2 and n >= k (k={k}, n={n})")
    caps = [n // k + (i < n % k) for i in range(k)]
    return FoldAssignment(iterative_stratify(Y, caps, rng_for(seed, "kfold", k)))


def write_assignment(fh, stay_ids, assignment):
    w = csv.writer(fh, lineterminator="\n")
    w.writerow(["stay_id", "assignment"])
    for sid, a in zip(stay_ids, assignment):
        w.writerow([sid, a])


def read_assignment(fh):
    """Returns {stay_id: assignment string} preserving file order."""
    rows = csv.reader(fh)
    header = next(rows, None)
    if header is None or [h.strip() for h in header[:2]] != ["stay_id", "assignment"]:
        raise MissingColumn("assignment table must have columns stay_id,assignment")
    return {r[0]: r[1] for r in rows if r}
