"""Mutual-information ICA with entropy-bound density estimates.

The cost minimized over a square demixing matrix ``w`` is

    J(w) = sum_n H(w_n . x) - ln|det w| + lam * sum_{n,v} sqrt(y_nv^2 + eps)

where H is the entropy bound from :mod:`icadetect.entropy` and the last term
is a smoothed l1 penalty on the source estimates (zero when ``lam == 0``).
The mixture entropy is a constant offset and is left out.

The optimizer whitens the input, keeps every demixing row on the unit sphere
in the whitened space (so each source has unit variance, which also pins the
scale the l1 penalty would otherwise shrink to zero), and takes projected
gradient steps with a Barzilai-Borwein step length and Armijo backtracking.
The returned demixing matrix is composed with the whitener, so it applies to
the input coordinates directly.
"""

from __future__ import annotations

from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from .entropy import row_entropies
from .errors import ConfigError, DegenerateInput, DimensionMismatch, SingularW

_DET_FLOOR = 1e-12


@dataclass(frozen=True)
class IcaConfig:
    """Optimizer settings.  ``lam == 0`` gives the plain mutual-information cost."""

    seed: int = 0
    max_iters: int = 500
    tol: float = 1e-6
    lam: float = 0.0
    smooth_eps: float = 1e-8
    restarts: int = 5
    threads: int = 1

    def __post_init__(self):
        if self.max_iters < 1:
            raise ConfigError("max_iters must be >= 1")
        if not self.tol > 0:
            raise ConfigError("tol must be > 0")
        if self.lam < 0:
            raise ConfigError("lam must be >= 0")
        if not self.smooth_eps > 0:
            raise ConfigError("smooth_eps must be > 0")
        if self.restarts < 1:
            raise ConfigError("restarts must be >= 1")
        if self.threads < 1:
            raise ConfigError("threads must be >= 1")


@dataclass
class IcaResult:
    w: np.ndarray
    y: np.ndarray
    cost_trace: list = field(default_factory=list)
    converged: bool = False
    iters: int = 0
    restart: int = 0

    @property
    def cost(self) -> float:
        return self.cost_trace[-1]


def _check(w, X_hat):
    w = np.asarray(w, dtype=float)
    X_hat = np.asarray(X_hat, dtype=float)
    if w.ndim != 2 or w.shape[0] != w.shape[1]:
        raise DimensionMismatch(f"w must be square, got shape {w.shape}")
    if X_hat.ndim != 2 or X_hat.shape[0] != w.shape[1]:
        raise DimensionMismatch(f"X_hat has shape {X_hat.shape}, w has {w.shape}")
    return w, X_hat


def _logdet(w):
    sign, logdet = np.linalg.slogdet(w)
    if sign == 0 or logdet < np.log(_DET_FLOOR):
        raise SingularW("|det w| is below 1e-12")
    return logdet


def _penalty(Y, lam, eps):
    if lam == 0:
        return 0.0
    return lam * float(np.sum(np.sqrt(Y * Y + eps)))


def ica_cost(w, X_hat, config: IcaConfig = IcaConfig()) -> float:
    """Entropy-bound mutual-information cost, plus the l1 penalty if ``lam > 0``."""
    w, X_hat = _check(w, X_hat)
    logdet = _logdet(w)
    Y = w @ X_hat
    H, _ = row_entropies(Y)
    return float(np.sum(H)) - logdet + _penalty(Y, config.lam, config.smooth_eps)


def _cost_and_grad(w, X, lam, eps):
    logdet = _logdet(w)
    Y = w @ X
    H, _, dH = row_entropies(Y, grad=True)
    cost = float(np.sum(H)) - logdet + _penalty(Y, lam, eps)
    if lam:
        dH = dH + lam * Y / np.sqrt(Y * Y + eps)
    grad = dH @ X.T - np.linalg.inv(w).T
    return cost, grad


def ica_gradient(w, X_hat, config: IcaConfig = IcaConfig()) -> np.ndarray:
    """Gradient of :func:`ica_cost` with respect to ``w``."""
    w, X_hat = _check(w, X_hat)
    return _cost_and_grad(w, X_hat, config.lam, config.smooth_eps)[1]


def isi(w, a) -> float:
    """Normalized Amari inter-symbol interference of ``w @ a``.

    0 when the product is a scaled permutation, 1 for a flat matrix.

    >>> isi(np.eye(3), np.eye(3)[[2, 0, 1]] * 4.0)
    0.0
    >>> isi(np.ones((2, 2)), np.eye(2))
    1.0
    """
    G = np.abs(np.asarray(w, dtype=float) @ np.asarray(a, dtype=float))
    n = G.shape[0]
    if n < 2:
        return 0.0
    rows = np.sum(G / G.max(axis=1, keepdims=True), axis=1) - 1.0
    cols = np.sum(G / G.max(axis=0, keepdims=True), axis=0) - 1.0
    return float((rows.sum() + cols.sum()) / (2.0 * n * (n - 1)))


def whitener(X_hat: np.ndarray) -> np.ndarray:
    """Symmetric inverse square root of the (uncentered) sample covariance."""
    n, V = X_hat.shape
    if n > V:
        raise DegenerateInput(f"more components ({n}) than samples ({V})")
    C = X_hat @ X_hat.T / V
    vals, vecs = np.linalg.eigh(C)
    if vals[-1] <= 0 or vals[0] <= 1e-12 * vals[-1]:
        raise DegenerateInput("input rows are rank deficient")
    return (vecs / np.sqrt(vals)) @ vecs.T


def _random_orthogonal(n, rng):
    Q, R = np.linalg.qr(rng.standard_normal((n, n)))
    return Q * np.sign(np.diag(R))


def _normalize_rows(W):
    return W / np.linalg.norm(W, axis=1, keepdims=True)


def _project(W, G):
    return G - np.sum(G * W, axis=1, keepdims=True) * W


def _descend(W, Z, config, offset):
    """Projected gradient descent on the product of unit spheres."""
    lam, eps = config.lam, config.smooth_eps
    cost, G = _cost_and_grad(W, Z, lam, eps)
    D = _project(W, G)
    trace = [cost + offset]
    step = 1.0
    converged = False
    it = 0
    for it in range(1, config.max_iters + 1):
        gnorm2 = float(np.sum(D * D))
        if np.sqrt(gnorm2) < config.tol:
            converged = True
            it -= 1
            break
        while True:
            W_new = _normalize_rows(W - step * D)
            try:
                cost_new, G_new = _cost_and_grad(W_new, Z, lam, eps)
            except SingularW:
                cost_new = np.inf
            if cost_new <= cost - 1e-4 * step * gnorm2:
                break
            step *= 0.5
            if step < 1e-14:
                return W, trace, False, it
        D_new = _project(W_new, G_new)
        # Barzilai-Borwein length for the next trial step
        s = W_new - W
        r = D_new - D
        sr = float(np.sum(s * r))
        step = float(np.sum(s * s)) / sr if sr > 0 else 2.0 * step
        step = min(max(step, 1e-8), 1e3)
        W, cost, D = W_new, cost_new, D_new
        trace.append(cost + offset)
    else:
        converged = np.linalg.norm(D) < config.tol
    return W, trace, converged, it


def ica_ebm(X_hat, config: IcaConfig = IcaConfig()) -> IcaResult:
    """Estimate a demixing matrix for centered ``X_hat`` (N x V).

    Runs ``config.restarts`` descents from random orthogonal starts and keeps
    the lowest final cost (ties go to the earlier restart).  Restart ``r``
    draws from ``np.random.default_rng([config.seed, r])``, so the result does
    not depend on how restarts are scheduled across threads.
    """
    X_hat = np.asarray(X_hat, dtype=float)
    if X_hat.ndim != 2:
        raise DimensionMismatch("X_hat must be a matrix")
    P = whitener(X_hat)
    Z = P @ X_hat
    offset = -np.linalg.slogdet(P)[1]
    n = X_hat.shape[0]

    def run(r):
        rng = np.random.default_rng([config.seed, r])
        return _descend(_random_orthogonal(n, rng), Z, config, offset)

    if config.threads > 1 and config.restarts > 1:
        with ThreadPoolExecutor(config.threads) as pool:
            runs = list(pool.map(run, range(config.restarts)))
    else:
        runs = [run(r) for r in range(config.restarts)]

    best = min(range(len(runs)), key=lambda r: (runs[r][1][-1], r))
    W, trace, converged, iters = runs[best]
    # order sources by increasing entropy (most non-Gaussian first)
    H, _ = row_entropies(W @ Z)
    W = W[np.argsort(H, kind="stable")]
    w = W @ P
    return IcaResult(
        w=w, y=w @ X_hat, cost_trace=trace, converged=bool(converged),
        iters=iters, restart=best,
    )


def sparse_ica_ebm(X_hat, config: IcaConfig) -> IcaResult:
    """:func:`ica_ebm` with the l1 penalty weighted by ``config.lam``.

    With ``lam == 0`` this is exactly :func:`ica_ebm`.
    """
    return ica_ebm(X_hat, config)
