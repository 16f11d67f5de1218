"""Label powerset transformation and inverse-frequency class weights."""

import numpy as np

from ..errors import BadClassId
from ..labeler import CetLabels

N_LABELS = 4
N_CLASSES = 1 << N_LABELS
# bit of each label inside a class id: respiratory is the high bit
_BITS = np.array([8, 4, 2, 1])
# (16, 4) boolean table: row c holds the labels encoded by class c
CLASS_LABELS = (np.arange(N_CLASSES)[:, None] & _BITS[None, :]) > 0


def powerset_encode(y):
    """Class id(s) for one label tuple or an (n, 4) boolean matrix."""
    Y = np.asarray(y, dtype=bool)
    if Y.ndim == 1:
        return int(Y.astype(np.int64) @ _BITS)
    return Y.astype(np.int64) @ _BITS


def powerset_decode(c):
    """CetLabels for one class id, or an (n, 4) boolean matrix for an array."""
    arr = np.asarray(c)
    if not np.issubdtype(arr.dtype, np.integer) or ((arr < 0) | (arr >= N_CLASSES)).any():
        raise BadClassId(f"class id(s) outside [0, {N_CLASSES - 1}]: {c!r}")
    if arr.ndim == 0:
        return CetLabels(*(bool(b) for b in CLASS_LABELS[int(arr)]))
    return CLASS_LABELS[arr]


def compute_class_weights(train_classes):
    """N / (K_present * n_c) for classes seen in training, 0 otherwise."""
    y = np.asarray(train_classes, dtype=np.int64)
    counts = np.bincount(y, minlength=N_CLASSES).astype(np.float64)
    present = counts > 0
    w = np.zeros(N_CLASSES)
    w[present] = len(y) / (present.sum() * counts[present])
    return w


def one_hot(y, n_classes=N_CLASSES):
    out = np.zeros((len(y), n_classes))
    out[np.arange(len(y)), y] = 1.0
    return out
