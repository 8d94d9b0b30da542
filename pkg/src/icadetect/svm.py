"""Soft-margin kernel SVM trained by sequential minimal optimization.

The dual

    min_a  1/2 a^T Q a - sum(a)    s.t.  0 <= a_i <= C,  sum(a_i y_i) = 0,
    Q_ij = y_i y_j K(x_i, x_j)

is solved two coordinates at a time, always on the maximal violating pair,
until the KKT gap drops below ``tol``.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import ConfigError, DimensionMismatch, NoConvergence, SingleClass

KERNEL_KINDS = ("gaussian", "rbf", "polynomial")


@dataclass(frozen=True)
class KernelSpec:
    """``gaussian``: exp(-|u-v|^2 / (2 sigma^2)); ``rbf``: exp(-gamma |u-v|^2);
    ``polynomial``: (scale <u,v> + coef0)^degree."""

    kind: str
    sigma: float = 1.0
    gamma: float = 1.0
    degree: int = 3
    coef0: float = 1.0
    scale: float = 1.0

    def __post_init__(self):
        if self.kind not in KERNEL_KINDS:
            raise ConfigError(f"unknown kernel {self.kind!r}")
        if self.kind == "gaussian" and not self.sigma > 0:
            raise ConfigError("sigma must be > 0")
        if self.kind == "rbf" and not self.gamma > 0:
            raise ConfigError("gamma must be > 0")
        if self.kind == "polynomial" and self.degree < 1:
            raise ConfigError("degree must be >= 1")

    @classmethod
    def gaussian(cls, sigma):
        return cls("gaussian", sigma=float(sigma))

    @classmethod
    def rbf(cls, gamma):
        return cls("rbf", gamma=float(gamma))

    @classmethod
    def polynomial(cls, degree, coef0=1.0, scale=1.0):
        return cls("polynomial", degree=int(degree), coef0=float(coef0), scale=float(scale))

    def to_dict(self) -> dict:
        if self.kind == "gaussian":
            return {"kind": "gaussian", "sigma": self.sigma}
        if self.kind == "rbf":
            return {"kind": "rbf", "gamma": self.gamma}
        return {"kind": "polynomial", "degree": self.degree, "coef0": self.coef0, "scale": self.scale}

    @classmethod
    def from_dict(cls, d: dict) -> "KernelSpec":
        return cls(**d)


def _sqdist(A, B):
    d = np.sum(A * A, axis=1)[:, None] + np.sum(B * B, axis=1)[None, :] - 2.0 * A @ B.T
    return np.maximum(d, 0.0)


def gram(spec: KernelSpec, A, B) -> np.ndarray:
    """Kernel matrix between the rows of ``A`` and ``B``."""
    A = np.atleast_2d(np.asarray(A, dtype=float))
    B = np.atleast_2d(np.asarray(B, dtype=float))
    if A.shape[1] != B.shape[1]:
        raise DimensionMismatch(f"feature dimensions differ: {A.shape[1]} vs {B.shape[1]}")
    if spec.kind == "gaussian":
        return np.exp(-_sqdist(A, B) / (2.0 * spec.sigma**2))
    if spec.kind == "rbf":
        return np.exp(-spec.gamma * _sqdist(A, B))
    return (spec.scale * (A @ B.T) + spec.coef0) ** spec.degree


def kernel_eval(spec: KernelSpec, u, v) -> float:
    u = np.asarray(u, dtype=float).ravel()
    v = np.asarray(v, dtype=float).ravel()
    if u.shape != v.shape:
        raise DimensionMismatch(f"vector lengths differ: {u.size} vs {v.size}")
    if spec.kind == "gaussian":
        return float(np.exp(-np.sum((u - v) ** 2) / (2.0 * spec.sigma**2)))
    if spec.kind == "rbf":
        return float(np.exp(-spec.gamma * np.sum((u - v) ** 2)))
    return float((spec.scale * (u @ v) + spec.coef0) ** spec.degree)


@dataclass
class SvmModel:
    support_vectors: np.ndarray
    alphas: np.ndarray  # alpha_i * y_i
    bias: float
    kernel: KernelSpec
    c: float
    dual_objective: float = float("nan")
    iterations: int = 0
    objective_trace: list = field(default_factory=list, repr=False)

    def decision_function(self, X) -> np.ndarray:
        X = np.atleast_2d(np.asarray(X, dtype=float))
        if X.shape[1] != self.support_vectors.shape[1]:
            raise DimensionMismatch(
                f"expected {self.support_vectors.shape[1]} features, got {X.shape[1]}"
            )
        return gram(self.kernel, X, self.support_vectors) @ self.alphas + self.bias


def dual_objective(alpha, y, K) -> float:
    """sum(alpha) - 1/2 sum_ij alpha_i alpha_j y_i y_j K_ij (to be maximized)."""
    ay = alpha * y
    return float(np.sum(alpha) - 0.5 * ay @ K @ ay)


def _smo(K, y, c, tol, max_iter, trace):
    n = len(y)
    alpha = np.zeros(n)
    grad = -np.ones(n)  # gradient of 1/2 a^T Q a - e^T a
    for it in range(max_iter):
        ygrad = -y * grad
        up = ((y > 0) & (alpha < c)) | ((y < 0) & (alpha > 0))
        low = ((y > 0) & (alpha > 0)) | ((y < 0) & (alpha < c))
        i = int(np.argmax(np.where(up, ygrad, -np.inf)))
        j = int(np.argmin(np.where(low, ygrad, np.inf)))
        gap = ygrad[i] - ygrad[j]
        if gap < tol:
            return alpha, grad, it
        # move along u = y_i e_i - y_j e_j, the steepest feasible pair direction
        curv = K[i, i] + K[j, j] - 2.0 * K[i, j]
        curv = max(curv, 1e-12)
        t = gap / curv
        t = min(t, c - alpha[i] if y[i] > 0 else alpha[i])
        t = min(t, alpha[j] if y[j] > 0 else c - alpha[j])
        alpha[i] += y[i] * t
        alpha[j] -= y[j] * t
        # clean roundoff at the box edges
        for k in (i, j):
            if alpha[k] < 1e-14 * c:
                alpha[k] = 0.0
            elif alpha[k] > c * (1 - 1e-14):
                alpha[k] = c
        grad += t * y * (K[i] - K[j])
        if trace is not None:
            trace.append(dual_objective(alpha, y, K))
    raise NoConvergence(f"SMO did not reach KKT gap {tol} in {max_iter} iterations")


def _bias(alpha, grad, y, c):
    ygrad = -y * grad
    free = (alpha > 0) & (alpha < c)
    if np.any(free):
        return float(np.mean(ygrad[free]))
    up = ((y > 0) & (alpha < c)) | ((y < 0) & (alpha > 0))
    low = ((y > 0) & (alpha > 0)) | ((y < 0) & (alpha < c))
    return float(0.5 * (np.max(ygrad[up]) + np.min(ygrad[low])))


def fit(X, labels, spec: KernelSpec, c: float = 1.0, tol: float = 1e-3,
        max_iter: int = 100_000, record_trace: bool = False) -> SvmModel:
    """Train on rows of ``X`` (samples x features) with labels in {+1, -1}."""
    X = np.atleast_2d(np.asarray(X, dtype=float))
    y = np.asarray(labels, dtype=float).ravel()
    if X.shape[0] != y.size:
        raise DimensionMismatch(f"{X.shape[0]} samples but {y.size} labels")
    if not np.all(np.isin(y, (-1.0, 1.0))):
        raise ConfigError("labels must be +1 or -1")
    if np.all(y == y[0]):
        raise SingleClass("training labels contain a single class")
    if not c > 0:
        raise ConfigError("C must be > 0")
    K = gram(spec, X, X)
    trace = [] if record_trace else None
    alpha, grad, iters = _smo(K, y, c, tol, max_iter, trace)
    bias = _bias(alpha, grad, y, c)
    sv = alpha > 0
    return SvmModel(
        support_vectors=X[sv].copy(), alphas=(alpha * y)[sv], bias=bias, kernel=spec, c=c,
        dual_objective=dual_objective(alpha, y, K), iterations=iters,
        objective_trace=trace or [],
    )


def predict(model: SvmModel, X) -> tuple[np.ndarray, np.ndarray]:
    """Labels in {+1, -1} (a zero decision value maps to +1) and decision values."""
    dec = model.decision_function(X)
    return np.where(dec >= 0, 1, -1), dec
