"""Single-hidden-layer ReLU classifier trained by full-batch momentum descent."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ..delay import ClassBoundaries
from .dataset import Dataset
from .forest import HyperParams


class TrainingDiverged(RuntimeError):
    pass


def forward(params: dict, Xs: np.ndarray):
    """Return (hidden pre-activation, hidden activation, class probabilities)."""
    z1 = Xs @ params["W1"] + params["b1"]
    h = np.maximum(z1, 0.0)
    z2 = h @ params["W2"] + params["b2"]
    z2 = z2 - z2.max(axis=1, keepdims=True)
    e = np.exp(z2)
    return z1, h, e / e.sum(axis=1, keepdims=True)


def loss_and_grads(params: dict, Xs: np.ndarray, y: np.ndarray) -> tuple[float, dict]:
    """Mean cross-entropy and its gradients by backpropagation."""
    n = Xs.shape[0]
    z1, h, p = forward(params, Xs)
    loss = -float(np.mean(np.log(np.clip(p[np.arange(n), y], 1e-300, None))))
    dz2 = p.copy()
    dz2[np.arange(n), y] -= 1.0
    dz2 /= n
    grads = {"W2": h.T @ dz2, "b2": dz2.sum(axis=0)}
    dz1 = (dz2 @ params["W2"].T) * (z1 > 0)
    grads["W1"] = Xs.T @ dz1
    grads["b1"] = dz1.sum(axis=0)
    return loss, grads


def numeric_grads(params: dict, Xs: np.ndarray, y: np.ndarray, eps: float = 1e-6) -> dict:
    """Central finite differences of the loss, one parameter at a time."""
    out = {}
    for name, w in params.items():
        g = np.zeros_like(w)
        it = np.nditer(w, flags=["multi_index"])
        for _ in it:
            i = it.multi_index
            old = w[i]
            w[i] = old + eps
            lp, _ = loss_and_grads(params, Xs, y)
            w[i] = old - eps
            lm, _ = loss_and_grads(params, Xs, y)
            w[i] = old
            g[i] = (lp - lm) / (2 * eps)
        out[name] = g
    return out


def init_params(n_in: int, n_hidden: int, n_out: int, rng: np.random.Generator) -> dict:
    return {
        "W1": rng.normal(0.0, np.sqrt(2.0 / n_in), size=(n_in, n_hidden)),
        "b1": np.zeros(n_hidden),
        "W2": rng.normal(0.0, np.sqrt(1.0 / n_hidden), size=(n_hidden, n_out)),
        "b2": np.zeros(n_out),
    }


@dataclass
class TrainedNet:
    boundaries: ClassBoundaries
    mean: np.ndarray
    std: np.ndarray
    W1: np.ndarray
    b1: np.ndarray
    W2: np.ndarray
    b2: np.ndarray
    hyper: HyperParams

    algo = "nn"

    @property
    def n_classes(self) -> int:
        return self.boundaries.n_classes

    @property
    def n_features(self) -> int:
        return self.mean.shape[0]

    @property
    def feature_mode(self) -> str:
        return self.hyper.features

    @property
    def params(self) -> dict:
        return {"W1": self.W1, "b1": self.b1, "W2": self.W2, "b2": self.b2}

    def predict_proba(self, X) -> np.ndarray:
        X = np.atleast_2d(np.asarray(X, dtype=np.float64))
        return forward(self.params, (X - self.mean) / self.std)[2]

    def predict_batch(self, X) -> np.ndarray:
        return np.argmax(self.predict_proba(X), axis=1).astype(np.int32)

    def predict(self, f) -> int:
        return int(self.predict_batch(np.asarray(f)[None, :])[0])


def train_nn(d: Dataset, hp: HyperParams, boundaries: ClassBoundaries) -> TrainedNet:
    if len(d) == 0:
        raise ValueError("cannot train on an empty dataset")
    X = d.X.astype(np.float64)
    mean = X.mean(axis=0)
    std = X.std(axis=0)
    std[std == 0] = 1.0
    Xs = (X - mean) / std
    rng = np.random.default_rng(hp.seed)
    params = init_params(d.n_features, hp.nn_hidden, d.n_classes, rng)
    vel = {k: np.zeros_like(v) for k, v in params.items()}
    # overflow shows up as a non-finite loss, reported below
    with np.errstate(over="ignore", invalid="ignore"):
        for epoch in range(hp.nn_epochs):
            loss, grads = loss_and_grads(params, Xs, d.y)
            if not np.isfinite(loss):
                raise TrainingDiverged(f"non-finite loss at epoch {epoch}")
            for k in params:
                vel[k] = hp.nn_momentum * vel[k] - hp.nn_lr * grads[k]
                params[k] = params[k] + vel[k]
    if not all(np.isfinite(v).all() for v in params.values()):
        raise TrainingDiverged("non-finite weights after training")
    return TrainedNet(boundaries, mean, std, params["W1"], params["b1"],
                      params["W2"], params["b2"], hp)
