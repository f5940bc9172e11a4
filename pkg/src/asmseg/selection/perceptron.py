"""One-hidden-layer perceptron with sigmoid units and a softmax output."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np


def sigmoid(z):
    return 0.5 * (1.0 + np.tanh(0.5 * z))


def softmax(z):
    z = z - z.max(axis=-1, keepdims=True)
    e = np.exp(z)
    return e / e.sum(axis=-1, keepdims=True)


@dataclass(frozen=True, eq=False)
class MLP:
    mu: np.ndarray
    sigma: np.ndarray
    W1: np.ndarray
    b1: np.ndarray
    W2: np.ndarray
    b2: np.ndarray

    def standardize(self, X):
        return (np.asarray(X, dtype=np.float64) - self.mu) / self.sigma

    def probabilities(self, X):
        Z = self.standardize(X)
        return forward(params_of(self), Z)[1]


def params_of(net: MLP) -> dict[str, np.ndarray]:
    return {"W1": net.W1, "b1": net.b1, "W2": net.W2, "b2": net.b2}


def init_params(n_in: int, n_hidden: int, n_out: int, rng: np.random.Generator, scale: float = 0.1):
    return {
        "W1": rng.uniform(-scale, scale, size=(n_in, n_hidden)),
        "b1": rng.uniform(-scale, scale, size=n_hidden),
        "W2": rng.uniform(-scale, scale, size=(n_hidden, n_out)),
        "b2": rng.uniform(-scale, scale, size=n_out),
    }


def forward(params, X):
    H = sigmoid(X @ params["W1"] + params["b1"])
    P = softmax(H @ params["W2"] + params["b2"])
    return H, P


def loss_and_gradients(params, X, y):
    """Mean cross-entropy of integer targets ``y`` and its gradients."""
    X = np.asarray(X, dtype=np.float64)
    n = X.shape[0]
    H, P = forward(params, X)
    loss = -np.mean(np.log(P[np.arange(n), y]))
    dZ2 = P.copy()
    dZ2[np.arange(n), y] -= 1.0
    dZ2 /= n
    dH = dZ2 @ params["W2"].T
    dZ1 = dH * H * (1.0 - H)
    grads = {
        "W2": H.T @ dZ2,
        "b2": dZ2.sum(axis=0),
        "W1": X.T @ dZ1,
        "b1": dZ1.sum(axis=0),
    }
    return float(loss), grads


def train_mlp(X, y, n_out: int, hidden: int = 64, lr: float = 0.05, epochs: int = 200,
              batch_size: int = 16, seed: int = 0) -> MLP:
    X = np.asarray(X, dtype=np.float64)
    y = np.asarray(y, dtype=np.int64)
    mu = X.mean(axis=0)
    sigma = X.std(axis=0)
    sigma[sigma < 1e-12] = 1.0
    Z = (X - mu) / sigma
    rng = np.random.default_rng(seed)
    params = init_params(X.shape[1], hidden, n_out, rng)
    n = Z.shape[0]
    for _ in range(epochs):
        order = rng.permutation(n)
        for start in range(0, n, batch_size):
            idx = order[start : start + batch_size]
            _, grads = loss_and_gradients(params, Z[idx], y[idx])
            for name, g in grads.items():
                params[name] -= lr * g
    return MLP(mu, sigma, **params)
