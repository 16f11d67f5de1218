"""Multinomial logistic regression trained by full-batch gradient descent."""

from dataclasses import dataclass, field

import numpy as np

from ..errors import NonFinite
from .powerset import N_CLASSES, one_hot


def softmax(Z):
    Z = Z - Z.max(axis=1, keepdims=True)
    E = np.exp(Z)
    return E / E.sum(axis=1, keepdims=True)


def log_softmax(Z):
    Z = Z - Z.max(axis=1, keepdims=True)
    return Z - np.log(np.exp(Z).sum(axis=1, keepdims=True))


@dataclass
class LinearModel:
    W: np.ndarray  # (16, d)
    b: np.ndarray  # (16,)
    history: list = field(default_factory=list)

    def decision_function(self, X):
        return X @ self.W.T + self.b

    def predict_proba(self, X):
        return softmax(self.decision_function(X))

    def to_arrays(self):
        return {"W": self.W, "b": self.b, "history": np.asarray(self.history, dtype=np.float64)}

    @classmethod
    def from_arrays(cls, a):
        return cls(a["W"], a["b"], a["history"].tolist())


def logreg_objective(W, b, X, y, sample_weight, C):
    """Weighted mean cross-entropy plus (1/C)(1/2)||W||^2 and its gradient.

    Returns ``(loss, grad_W, grad_b)``; the bias is not penalised.
    """
    n = len(X)
    Z = X @ W.T + b
    logp = log_softmax(Z)
    loss = -(sample_weight * logp[np.arange(n), y]).sum() / n + 0.5 / C * (W * W).sum()
    R = sample_weight[:, None] * (np.exp(logp) - one_hot(y, W.shape[0])) / n
    return loss, R.T @ X + W / C, R.sum(axis=0)


def train_logreg(X, y, class_weights, C=100.0, max_iter=5000, tol=1e-5):
    """Gradient descent from zero with step 1/L.

    L bounds the objective's curvature (softmax Hessian <= 1/2), so every
    step decreases the loss. Stops when the gradient norm drops below
    ``tol`` or after ``max_iter`` steps.
    """
    X = np.asarray(X, dtype=np.float64)
    y = np.asarray(y, dtype=np.int64)
    n, d = X.shape
    sw = np.asarray(class_weights, dtype=np.float64)[y]
    Xa = np.hstack([X, np.ones((n, 1))])
    L = 0.5 * np.linalg.eigvalsh((Xa * sw[:, None]).T @ Xa / n)[-1] + 1.0 / C
    step = 1.0 / L
    W = np.zeros((N_CLASSES, d))
    b = np.zeros(N_CLASSES)
    history = []
    for _ in range(max_iter):
        loss, gW, gb = logreg_objective(W, b, X, y, sw, C)
        if not np.isfinite(loss):
            raise NonFinite("logistic regression loss diverged")
        history.append(float(loss))
        if np.sqrt((gW * gW).sum() + (gb * gb).sum()) < tol:
            break
        W -= step * gW
        b -= step * gb
    return LinearModel(W, b, history)
