"""Linear extreme learning machine.

Random, fixed hidden layer; output weights from the Moore-Penrose
pseudoinverse of the hidden activation matrix (optionally ridge-regularized).
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import scipy.linalg
from scipy.special import expit

from hsilbp._seeding import rng_for
from hsilbp.errors import DimensionMismatchError, InvalidDimensionError, NumericalError

ACTIVATIONS = {
    "sigmoid": expit,
    "tanh": np.tanh,
    "relu": lambda z: np.maximum(z, 0.0),
    "identity": lambda z: z,
}


@dataclass(frozen=True)
class HiddenLayer:
    input_weights: np.ndarray  # (L, d)
    biases: np.ndarray  # (L,)
    activation: str
    seed: int

    @property
    def n_hidden(self):
        return self.input_weights.shape[0]

    @property
    def n_inputs(self):
        return self.input_weights.shape[1]


@dataclass(frozen=True)
class ElmModel:
    hidden: HiddenLayer
    output_weights: np.ndarray  # (L, M)
    ridge: float = 0.0

    @property
    def num_classes(self):
        return self.output_weights.shape[1]


def init_hidden(L, d, activation="sigmoid", seed=0):
    """Draw weights uniform on [-1, 1] and biases uniform on [0, 1]."""
    if L < 1 or d < 1:
        raise InvalidDimensionError(f"hidden layer needs L >= 1 and d >= 1, got L={L}, d={d}")
    if activation not in ACTIVATIONS:
        raise ValueError(f"unknown activation {activation!r}; choose from {sorted(ACTIVATIONS)}")
    rng = rng_for(seed, 0x1E1)
    weights = rng.uniform(-1.0, 1.0, size=(L, d))
    biases = rng.uniform(0.0, 1.0, size=L)
    weights.setflags(write=False)
    biases.setflags(write=False)
    return HiddenLayer(weights, biases, activation, seed)


def hidden_map(layer, samples):
    """G[i, j] = g(w_j . x_i + b_j)."""
    X = np.asarray(samples, dtype=np.float64)
    if X.ndim != 2 or X.shape[1] != layer.n_inputs:
        raise DimensionMismatchError(f"samples have shape {X.shape}, layer expects d={layer.n_inputs}")
    return ACTIVATIONS[layer.activation](X @ layer.input_weights.T + layer.biases)


def pinv_solve(G, Y):
    """Minimum-norm least-squares solution of G @ beta = Y via SVD.

    Singular values at or below max(N, L) * s_max * eps are treated as zero.
    """
    U, s, Vt = np.linalg.svd(G, full_matrices=False)
    if s.size == 0:
        return np.zeros((G.shape[1], Y.shape[1]))
    cutoff = max(G.shape) * s[0] * np.finfo(np.float64).eps
    keep = s > cutoff
    return (Vt[keep].T / s[keep]) @ (U[:, keep].T @ Y)


def train(G1, Y1, ridge=0.0):
    """Output weights beta for hidden matrix ``G1`` (N, L) and targets ``Y1`` (N, M)."""
    G = np.asarray(G1, dtype=np.float64)
    Y = np.asarray(Y1, dtype=np.float64)
    if G.ndim != 2 or Y.ndim != 2 or G.shape[0] != Y.shape[0]:
        raise DimensionMismatchError(f"G {G.shape} and Y {Y.shape} disagree on sample count")
    if G.shape[0] < 1:
        raise InvalidDimensionError("training needs at least one sample")
    if ridge < 0:
        raise ValueError("ridge must be nonnegative")
    if not (np.all(np.isfinite(G)) and np.all(np.isfinite(Y))):
        raise NumericalError("non-finite entries in hidden matrix or targets")
    if ridge == 0:
        return pinv_solve(G, Y)
    N, L = G.shape
    if N >= L:
        return scipy.linalg.solve(G.T @ G + ridge * np.eye(L), G.T @ Y, assume_a="pos")
    return G.T @ scipy.linalg.solve(G @ G.T + ridge * np.eye(N), Y, assume_a="pos")


def fit(samples, Y1, L, activation="sigmoid", ridge=0.0, seed=0):
    """Convenience: draw a hidden layer, map the samples and train."""
    X = np.asarray(samples, dtype=np.float64)
    layer = init_hidden(L, X.shape[1], activation, seed)
    beta = train(hidden_map(layer, X), Y1, ridge)
    return ElmModel(layer, beta, float(ridge))


def predict(model, samples):
    return hidden_map(model.hidden, samples) @ model.output_weights


def scores_to_probs(scores, temperature=1.0):
    """Row-wise softmax of ``scores / temperature``; argmax is preserved."""
    if temperature <= 0:
        raise ValueError("temperature must be positive")
    z = np.asarray(scores, dtype=np.float64) / temperature
    if not np.all(np.isfinite(z)):
        raise NumericalError("non-finite scores")
    z = z - z.max(axis=1, keepdims=True)
    e = np.exp(z)
    return e / e.sum(axis=1, keepdims=True)
