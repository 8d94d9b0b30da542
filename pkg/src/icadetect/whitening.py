"""Feature centering and projection onto the leading principal subspace."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import DimensionMismatch, NotCentered, OrderTooLarge, TooFewSamples
from .text import TermDocMatrix


def as_array(X) -> np.ndarray:
    if isinstance(X, TermDocMatrix):
        X = X.values
    X = np.asarray(X, dtype=float)
    if X.ndim != 2:
        raise DimensionMismatch(f"expected a matrix, got {X.ndim} dimension(s)")
    return X


@dataclass(frozen=True)
class CenteringStats:
    mean: np.ndarray


@dataclass(frozen=True)
class PcaProjector:
    """``f`` holds the top eigenvectors as rows (order x d)."""

    f: np.ndarray
    eigenvalues: np.ndarray

    @property
    def order(self) -> int:
        return self.f.shape[0]


def fit_center(X_train) -> CenteringStats:
    X = as_array(X_train)
    if X.shape[1] < 2:
        raise TooFewSamples("centering needs at least two training columns")
    return CenteringStats(X.mean(axis=1))


def center(stats: CenteringStats, X) -> np.ndarray:
    X = as_array(X)
    if X.shape[0] != stats.mean.shape[0]:
        raise DimensionMismatch(f"X has {X.shape[0]} rows, expected {stats.mean.shape[0]}")
    return X - stats.mean[:, None]


def _fix_signs(vecs: np.ndarray) -> np.ndarray:
    """Make the largest-magnitude entry of every column positive."""
    pivot = np.argmax(np.abs(vecs), axis=0)
    signs = np.sign(vecs[pivot, np.arange(vecs.shape[1])])
    signs[signs == 0] = 1.0
    return vecs * signs


def fit_pca(Xc, order: int) -> PcaProjector:
    """Top-``order`` eigenvectors of the sample covariance Xc Xc^T / (V - 1).

    When there are fewer columns than rows the V x V Gram matrix is
    decomposed instead and its eigenvectors are mapped back to d dimensions.
    """
    Xc = as_array(Xc)
    d, V = Xc.shape
    if V < 2:
        raise TooFewSamples("PCA needs at least two columns")
    scale = max(1.0, float(np.max(np.abs(Xc))))
    if np.max(np.abs(Xc.mean(axis=1))) > 1e-10 * scale:
        raise NotCentered("rows of Xc must have zero mean")
    if not 1 <= order <= min(d, V - 1):
        raise OrderTooLarge(f"order must be in [1, {min(d, V - 1)}], got {order}")

    if V < d:
        gram = Xc.T @ Xc / (V - 1)
        vals, vecs = np.linalg.eigh(gram)
        vals, vecs = vals[::-1][:order], vecs[:, ::-1][:, :order]
        if vals[-1] <= 1e-12 * max(vals[0], 1e-300):
            raise OrderTooLarge(f"order {order} exceeds the numerical rank of the data")
        comps = Xc @ vecs / np.sqrt(vals * (V - 1))
    else:
        cov = Xc @ Xc.T / (V - 1)
        vals, vecs = np.linalg.eigh(cov)
        vals, comps = vals[::-1][:order], vecs[:, ::-1][:, :order]
    comps = _fix_signs(comps)
    return PcaProjector(f=np.ascontiguousarray(comps.T), eigenvalues=np.maximum(vals, 0.0))


def project(stats: CenteringStats, proj: PcaProjector, X, centering: str = "train") -> np.ndarray:
    """``f @ (X - mean)``.

    ``centering="train"`` subtracts the stored training mean; ``"self"``
    subtracts the column mean of ``X`` itself.
    """
    X = as_array(X)
    if X.shape[0] != proj.f.shape[1]:
        raise DimensionMismatch(f"X has {X.shape[0]} rows, projector expects {proj.f.shape[1]}")
    if centering == "train":
        Xc = center(stats, X)
    elif centering == "self":
        Xc = X - X.mean(axis=1, keepdims=True)
    else:
        raise ValueError(f"unknown centering {centering!r}")
    return proj.f @ Xc
