"""Feed-forward ReLU network with softmax output, trained with Adam."""

from dataclasses import dataclass, field

import numpy as np

from ..errors import NonFinite
from ..seeding import DEFAULT_SEED, rng_for
from .linear import log_softmax, softmax
from .powerset import N_CLASSES, one_hot


@dataclass
class MlpParams:
    hidden_dim: int = 128
    num_hidden_layers: int = 2
    lr: float = 0.001
    batch_size: int = 32
    epochs: int = 10
    beta1: float = 0.9
    beta2: float = 0.999
    eps: float = 1e-8


@dataclass
class MlpModel:
    weights: list  # (fan_in, fan_out) per layer
    biases: list
    history: list = field(default_factory=list)

    def decision_function(self, X):
        a = np.asarray(X, dtype=np.float64)
        for W, b in zip(self.weights[:-1], self.biases[:-1]):
            a = np.maximum(a @ W + b, 0.0)
        return a @ self.weights[-1] + self.biases[-1]

    def predict_proba(self, X):
        return softmax(self.decision_function(X))

    def to_arrays(self):
        out = {"history": np.asarray(self.history, dtype=np.float64)}
        for i, (W, b) in enumerate(zip(self.weights, self.biases)):
            out[f"mlp_W{i}"], out[f"mlp_b{i}"] = W, b
        return out

    @classmethod
    def from_arrays(cls, a):
        n = sum(1 for k in a if k.startswith("mlp_W"))
        return cls([a[f"mlp_W{i}"] for i in range(n)], [a[f"mlp_b{i}"] for i in range(n)], a["history"].tolist())


def init_mlp(d, hidden_dim, num_hidden_layers, rng, n_out=N_CLASSES):
    """He-uniform weights (limit sqrt(6 / fan_in)), zero biases."""
    sizes = [d] + [hidden_dim] * num_hidden_layers + [n_out]
    weights, biases = [], []
    for fan_in, fan_out in zip(sizes[:-1], sizes[1:]):
        lim = np.sqrt(6.0 / fan_in)
        weights.append(rng.uniform(-lim, lim, size=(fan_in, fan_out)))
        biases.append(np.zeros(fan_out))
    return MlpModel(weights, biases)


def mlp_loss_grad(model, X, y, sample_weight):
    """Mean of per-sample weighted cross-entropy and its backpropagated gradient."""
    n = len(X)
    acts = [np.asarray(X, dtype=np.float64)]
    for W, b in zip(model.weights[:-1], model.biases[:-1]):
        acts.append(np.maximum(acts[-1] @ W + b, 0.0))
    Z = acts[-1] @ model.weights[-1] + model.biases[-1]
    logp = log_softmax(Z)
    loss = -(sample_weight * logp[np.arange(n), y]).sum() / n
    delta = sample_weight[:, None] * (np.exp(logp) - one_hot(y, Z.shape[1])) / n
    gW, gb = [None] * len(model.weights), [None] * len(model.weights)
    for i in range(len(model.weights) - 1, -1, -1):
        gW[i] = acts[i].T @ delta
        gb[i] = delta.sum(axis=0)
        if i:
            delta = (delta @ model.weights[i].T) * (acts[i] > 0)
    return loss, gW, gb


def train_mlp(X, y, class_weights, params=MlpParams(), seed=DEFAULT_SEED):
    """Mini-batch Adam. Initialisation and per-epoch shuffles are seeded.

    ``history[e]`` is the weighted full-data loss after ``e`` epochs.
    """
    X = np.asarray(X, dtype=np.float64)
    y = np.asarray(y, dtype=np.int64)
    n, d = X.shape
    sw = np.asarray(class_weights, dtype=np.float64)[y]
    model = init_mlp(d, params.hidden_dim, params.num_hidden_layers, rng_for(seed, "mlp", "init"))
    params_ = model.weights + model.biases
    m1 = [np.zeros_like(p) for p in params_]
    m2 = [np.zeros_like(p) for p in params_]
    t = 0
    history = [float(mlp_loss_grad(model, X, y, sw)[0])]
    for epoch in range(params.epochs):
        order = rng_for(seed, "mlp", "epoch", epoch).permutation(n)
        for s in range(0, n, params.batch_size):
            idx = order[s : s + params.batch_size]
            _, gW, gb = mlp_loss_grad(model, X[idx], y[idx], sw[idx])
            t += 1
            c1 = 1.0 - params.beta1**t
            c2 = 1.0 - params.beta2**t
            for i, (p, g) in enumerate(zip(params_, gW + gb)):
                m1[i] *= params.beta1
                m1[i] += (1.0 - params.beta1) * g
                m2[i] *= params.beta2
                m2[i] += (1.0 - params.beta2) * g * g
                p -= params.lr * (m1[i] / c1) / (np.sqrt(m2[i] / c2) + params.eps)
        loss = float(mlp_loss_grad(model, X, y, sw)[0])
        if not np.isfinite(loss):
            raise NonFinite(f"network loss diverged in epoch {epoch}")
        history.append(loss)
    model.history = history
    return model
