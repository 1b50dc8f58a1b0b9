"""Kernel (nonlinear) ELM, trained in its dual form.

The regularized output weights (I/C + H^T H)^-1 H^T Y can't be formed when
the feature map is implicit, so the model stores dual coefficients
A = (I/C + Omega)^-1 Y with Omega = K(train, train), and predicts
K(x, train) @ A. Both forms give identical predictions.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import scipy.linalg

from hsilbp.errors import DimensionMismatchError, InvalidDimensionError, NumericalError

DEFAULT_C = 2.0**9
DEFAULT_SIGMA = 2.0**-1


@dataclass(frozen=True)
class KernelSpec:
    kind: str = "gaussian"
    sigma: float = DEFAULT_SIGMA

    def __post_init__(self):
        if self.kind not in ("gaussian", "linear"):
            raise ValueError(f"unknown kernel kind {self.kind!r}")
        if self.kind == "gaussian" and not self.sigma > 0:
            raise ValueError("gaussian kernel needs sigma > 0")


@dataclass(frozen=True)
class KelmModel:
    kernel: KernelSpec
    train_samples: np.ndarray
    dual_coefficients: np.ndarray
    cost: float

    @property
    def num_classes(self):
        return self.dual_coefficients.shape[1]


def gram(kernel, A, B):
    A = np.atleast_2d(np.asarray(A, dtype=np.float64))
    B = np.atleast_2d(np.asarray(B, dtype=np.float64))
    if A.shape[1] != B.shape[1]:
        raise DimensionMismatchError(f"column counts differ: {A.shape[1]} vs {B.shape[1]}")
    inner = A @ B.T
    if kernel.kind == "linear":
        return inner
    sq = np.einsum("ij,ij->i", A, A)[:, None] + np.einsum("ij,ij->i", B, B)[None, :] - 2.0 * inner
    np.maximum(sq, 0.0, out=sq)
    K = np.exp(-sq / (2.0 * kernel.sigma**2))
    if A is B or (A.shape == B.shape and np.array_equal(A, B)):
        # rounding in the expansion can leave the diagonal a hair off 1
        np.fill_diagonal(K, 1.0)
    return K


def train_kelm(train_samples, Y1, kernel=None, C=DEFAULT_C):
    """Solve (I/C + Omega) A = Y by Cholesky factorization."""
    kernel = kernel or KernelSpec()
    X = np.asarray(train_samples, dtype=np.float64)
    Y = np.asarray(Y1, dtype=np.float64)
    if not C > 0:
        raise ValueError("cost C must be positive")
    if X.ndim != 2 or X.shape[0] < 1:
        raise InvalidDimensionError("need at least one training sample")
    if Y.ndim != 2 or Y.shape[0] != X.shape[0]:
        raise DimensionMismatchError(f"targets {Y.shape} do not match samples {X.shape}")
    system = gram(kernel, X, X)
    system[np.diag_indices_from(system)] += 1.0 / C
    try:
        factor = scipy.linalg.cho_factor(system, lower=True, check_finite=True)
    except (np.linalg.LinAlgError, ValueError) as exc:
        try:
            cond = np.linalg.cond(system)
        except np.linalg.LinAlgError:
            cond = float("inf")
        raise NumericalError(f"kernel system is not positive definite (condition number ~{cond:.3g})") from exc
    A = scipy.linalg.cho_solve(factor, Y)
    return KelmModel(kernel, X.copy(), A, float(C))


def predict_kelm(model, samples):
    X = np.atleast_2d(np.asarray(samples, dtype=np.float64))
    if X.shape[1] != model.train_samples.shape[1]:
        raise DimensionMismatchError(
            f"samples have {X.shape[1]} features, model expects {model.train_samples.shape[1]}"
        )
    return gram(model.kernel, X, model.train_samples) @ model.dual_coefficients
