"""Center, reduce, unmix, classify: feature extraction and nested cross-validation."""

from __future__ import annotations

import json
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Optional

import numpy as np
from scipy import linalg

from . import svm
from .errors import (
    ConfigError, DimensionMismatch, FoldTooSmall, GridEmpty, IllConditioned, OrderTooLarge, SingleClass,
)
from .evaluation import ConfusionCounts, mean_metrics, metrics
from .ica import IcaConfig, IcaResult, ica_ebm, sparse_ica_ebm
from .whitening import CenteringStats, PcaProjector, as_array, center, fit_center, fit_pca

MAX_COND = 1e12


@dataclass(frozen=True)
class FeatureExtractor:
    stats: CenteringStats
    proj: PcaProjector
    w: np.ndarray
    a_hat: np.ndarray
    test_centering: str = "train"

    @property
    def order(self) -> int:
        return self.w.shape[0]

    @property
    def d(self) -> int:
        return self.a_hat.shape[0]


def fit_extractor(X_train, order: int, ica_config: IcaConfig = IcaConfig(),
                  test_centering: str = "train") -> tuple[FeatureExtractor, IcaResult]:
    """Fit mean, PCA reduction and demixing matrix on training columns only."""
    if test_centering not in ("train", "self"):
        raise ConfigError(f"test_centering must be 'train' or 'self', got {test_centering!r}")
    X = as_array(X_train)
    stats = fit_center(X)
    Xc = center(stats, X)
    proj = fit_pca(Xc, order)
    X_hat = proj.f @ Xc
    runner = sparse_ica_ebm if ica_config.lam > 0 else ica_ebm
    res = runner(X_hat, ica_config)
    # F has orthonormal rows, so its pseudo-inverse is F^T
    a_hat = proj.f.T @ np.linalg.inv(res.w)
    return FeatureExtractor(stats, proj, res.w, a_hat, test_centering), res


def transform_train(fx: FeatureExtractor, X_train) -> np.ndarray:
    X = as_array(X_train)
    if X.shape[0] != fx.d:
        raise DimensionMismatch(f"X has {X.shape[0]} rows, extractor expects {fx.d}")
    return fx.w @ (fx.proj.f @ center(fx.stats, X))


def transform_test(fx: FeatureExtractor, X_test) -> np.ndarray:
    """Least-squares coordinates of the centered test columns on the columns of a_hat."""
    X = as_array(X_test)
    if X.shape[0] != fx.d:
        raise DimensionMismatch(f"X has {X.shape[0]} rows, extractor expects {fx.d}")
    if fx.test_centering == "train":
        Xc = center(fx.stats, X)
    else:
        Xc = X - X.mean(axis=1, keepdims=True)
    AtA = fx.a_hat.T @ fx.a_hat
    cond = np.linalg.cond(AtA)
    if not np.isfinite(cond) or cond > MAX_COND:
        raise IllConditioned(f"cond(A^T A) = {cond:.3g} exceeds {MAX_COND:.0e}")
    return linalg.cho_solve(linalg.cho_factor(AtA), fx.a_hat.T @ Xc)


# ---------------------------------------------------------------- splits

def stratified_folds(labels, k: int, rng) -> list[np.ndarray]:
    """Shuffle each class and deal its members round-robin into ``k`` folds.

    Dealing continues where the previous class stopped, so fold sizes differ
    by at most one and per-class counts per fold differ by at most one.
    """
    labels = np.asarray(labels)
    buckets = [[] for _ in range(k)]
    pos = 0
    for cls in np.unique(labels):
        idx = np.flatnonzero(labels == cls)
        for i in rng.permutation(idx):
            buckets[pos % k].append(int(i))
            pos += 1
    return [np.sort(np.array(b, dtype=int)) for b in buckets]


def _class_counts(labels, idx):
    lab = np.asarray(labels)[idx]
    return int(np.sum(lab > 0)), int(np.sum(lab < 0))


@dataclass(frozen=True)
class SplitPlan:
    outer: tuple  # (train_idx, test_idx) per fold
    inner: tuple  # (train_idx, val_idx, test_idx) per fold, global indices
    seed: int


def make_split_plan(labels, seed: int = 0, n_outer: int = 5) -> SplitPlan:
    """Five stratified outer folds; each outer-train set is cut 8/1/1 for the inner search."""
    labels = np.asarray(labels)
    if len(np.unique(labels)) < 2:
        raise SingleClass("cross-validation needs both classes")
    folds = stratified_folds(labels, n_outer, np.random.default_rng([seed, 0]))
    outer, inner = [], []
    for f, test_idx in enumerate(folds):
        pos, neg = _class_counts(labels, test_idx)
        if min(pos, neg) < 2:
            raise FoldTooSmall(f"outer fold {f} has {pos} unreliable and {neg} reliable samples (need 2 each)")
        train_idx = np.sort(np.concatenate([folds[g] for g in range(n_outer) if g != f]))
        parts = stratified_folds(labels[train_idx], 10, np.random.default_rng([seed, 1, f]))
        parts = [train_idx[p] for p in parts]
        itrain = np.sort(np.concatenate(parts[:8]))
        ival, itest = parts[8], parts[9]
        if min(_class_counts(labels, itrain)) < 1 or len(ival) == 0:
            raise FoldTooSmall(f"inner split of fold {f} is too small")
        outer.append((train_idx, test_idx))
        inner.append((itrain, ival, itest))
    return SplitPlan(tuple(outer), tuple(inner), seed)


# ---------------------------------------------------------------- grid

FAMILIES = ("gaussian", "rbf", "polynomial")


@dataclass(frozen=True)
class HyperGrid:
    """Kernel widths are relative: sigma = factor * median pairwise distance
    of the training features, gamma = factor / (N * feature variance)."""

    orders: tuple = (10, 25, 50, 100)
    c_values: tuple = (0.1, 1.0, 10.0, 100.0)
    sigma_factors: tuple = (0.5, 1.0, 2.0, 5.0)
    gamma_factors: tuple = (0.1, 1.0, 10.0)
    degrees: tuple = (2, 3)
    coef0: float = 1.0
    families: tuple = FAMILIES

    def __post_init__(self):
        for fam in self.families:
            if fam not in FAMILIES:
                raise ConfigError(f"unknown kernel family {fam!r}")
        if any(n < 1 for n in self.orders):
            raise ConfigError("orders must be >= 1")
        if any(not c > 0 for c in self.c_values):
            raise ConfigError("C values must be > 0")
        if not self.orders or not self.c_values or not self.families or not any(self.kernel_params(f) for f in self.families):
            raise GridEmpty("hyperparameter grid is empty")

    def kernel_params(self, family: str) -> tuple:
        if family == "gaussian":
            return self.sigma_factors
        if family == "rbf":
            return self.gamma_factors
        return self.degrees

    def configs(self, family: str) -> list:
        """(order, kernel parameter, C), ordered so earlier entries win ties:
        smaller C first, then smaller order."""
        return [
            (n, p, c)
            for c in sorted(self.c_values)
            for n in sorted(self.orders)
            for p in self.kernel_params(family)
        ]


def median_distance(F: np.ndarray) -> float:
    """Median pairwise Euclidean distance between rows of ``F``."""
    sq = np.sum(F * F, axis=1)
    D = np.sqrt(np.maximum(sq[:, None] + sq[None, :] - 2 * F @ F.T, 0.0))
    vals = D[np.triu_indices(len(F), 1)]
    med = float(np.median(vals)) if vals.size else 1.0
    return med if med > 0 else 1.0


def resolve_kernel(family: str, param, F: np.ndarray, coef0: float = 1.0) -> svm.KernelSpec:
    """Turn a relative grid parameter into a kernel for features ``F`` (samples x N)."""
    N = F.shape[1]
    if family == "gaussian":
        return svm.KernelSpec.gaussian(param * median_distance(F))
    if family == "rbf":
        var = float(F.var())
        return svm.KernelSpec.rbf(param / (N * (var if var > 0 else 1.0)))
    return svm.KernelSpec.polynomial(int(param), coef0=coef0, scale=1.0 / N)


def _accuracy(model, F, y):
    pred, _ = svm.predict(model, F)
    return float(np.mean(pred == y))


# ---------------------------------------------------------------- nested CV

@dataclass
class CvReport:
    folds: list
    summary: dict
    order_scores: list
    variant: str
    timings: dict = field(default_factory=dict)

    def to_dict(self) -> dict:
        """Deterministic content only; timings live in :attr:`timings`."""
        return {
            "folds": self.folds,
            "summary": self.summary,
            "order_scores": self.order_scores,
            "selected_order": select_order(self),
            "variant": self.variant,
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2, sort_keys=True)


def _features(X, idx):
    return X[:, idx]


def _fit_svm(F, y, family, param, c, grid, tol):
    spec = resolve_kernel(family, param, F, grid.coef0)
    return svm.fit(F, y, spec, c, tol=tol), spec


def _run_fold(f, X, labels, plan, grid, ica_config, svm_tol, centering):
    t0 = time.perf_counter()
    itrain, ival, itest = plan.inner[f]
    otrain, otest = plan.outer[f]
    y = labels

    # inner search: one extractor per order, shared by every kernel family
    inner_feats = {}
    for n in sorted(set(grid.orders)):
        fx, _ = fit_extractor(_features(X, itrain), n, ica_config, centering)
        inner_feats[n] = (
            transform_train(fx, _features(X, itrain)).T,
            transform_test(fx, _features(X, ival)).T,
            transform_test(fx, _features(X, itest)).T,
        )
    per_family, best_by_order = {}, {n: 0.0 for n in grid.orders}
    for fam in grid.families:
        best = None
        for n, p, c in grid.configs(fam):
            Ftr, Fval, Fte = inner_feats[n]
            model, _ = _fit_svm(Ftr, y[itrain], fam, p, c, grid, svm_tol)
            acc = _accuracy(model, Fval, y[ival])
            best_by_order[n] = max(best_by_order[n], acc)
            if best is None or acc > best[0]:
                best = (acc, n, p, c, _accuracy(model, Fte, y[itest]))
        per_family[fam] = best

    # refit the winners on the whole outer-train set
    outer_fx = {}
    for fam, (_, n, *_rest) in per_family.items():
        if n not in outer_fx:
            fx, res = fit_extractor(_features(X, otrain), n, ica_config, centering)
            outer_fx[n] = (fx, res, transform_train(fx, _features(X, otrain)).T,
                           transform_test(fx, _features(X, otest)).T)
    families = {}
    for fam, (val_acc, n, p, c, inner_test_acc) in per_family.items():
        fx, res, Ftr, Fte = outer_fx[n]
        model, spec = _fit_svm(Ftr, y[otrain], fam, p, c, grid, svm_tol)
        pred, _ = svm.predict(model, Fte)
        counts = ConfusionCounts.from_labels(y[otest], pred)
        families[fam] = {
            "selected": {"order": n, "param": p, "c": c, "kernel": spec.to_dict()},
            "validation_accuracy": val_acc,
            "inner_test_accuracy": inner_test_acc,
            "confusion": {"tp": counts.tp, "fp": counts.fp, "tn": counts.tn, "fn": counts.fn},
            "metrics": metrics(counts),
            "ica_converged": res.converged,
        }
    row = {
        "fold": f,
        "n_train": int(len(otrain)),
        "n_test": int(len(otest)),
        "families": families,
        "order_validation": {str(n): best_by_order[n] for n in sorted(best_by_order)},
    }
    return row, time.perf_counter() - t0


def nested_cv(X, labels, grid: HyperGrid = HyperGrid(), seed: int = 0,
              ica_config: IcaConfig = IcaConfig(), threads: int = 1,
              svm_tol: float = 1e-3, test_centering: str = "train") -> CvReport:
    """Five outer folds, each with an 8/1/1 inner grid search.

    Feature extraction is refitted inside every split from training columns
    only.  Labels are columns of ``X``: +1 unreliable, -1 reliable.
    """
    X = as_array(X)
    labels = np.asarray(labels, dtype=int).ravel()
    if X.shape[1] != labels.size:
        raise DimensionMismatch(f"X has {X.shape[1]} columns but there are {labels.size} labels")
    plan = make_split_plan(labels, seed)
    max_order = min(X.shape[0], min(len(p[0]) for p in plan.inner) - 1)
    too_big = [n for n in grid.orders if n > max_order]
    if too_big:
        raise OrderTooLarge(f"orders {too_big} exceed the largest usable order {max_order}")

    def run(f):
        return _run_fold(f, X, labels, plan, grid, ica_config, svm_tol, test_centering)

    t0 = time.perf_counter()
    if threads > 1:
        with ThreadPoolExecutor(threads) as pool:
            results = list(pool.map(run, range(len(plan.outer))))
    else:
        results = [run(f) for f in range(len(plan.outer))]
    rows = [r for r, _ in results]
    summary = {
        fam: mean_metrics([r["families"][fam]["metrics"] for r in rows]) for fam in grid.families
    }
    order_scores = [
        {"order": n, "mean_validation_accuracy": float(np.mean([r["order_validation"][str(n)] for r in rows]))}
        for n in sorted(set(grid.orders))
    ]
    timings = {"total_s": time.perf_counter() - t0, "fold_s": [t for _, t in results]}
    variant = "sparse" if ica_config.lam > 0 else "dense"
    return CvReport(rows, summary, order_scores, variant, timings)


def select_order(report) -> int:
    """Order with the highest mean inner-validation accuracy; ties go to the smaller order."""
    scores = report.order_scores if isinstance(report, CvReport) else report["order_scores"]
    best = min(scores, key=lambda s: (-s["mean_validation_accuracy"], s["order"]))
    return int(best["order"])


def final_selection(report: CvReport, family: str) -> tuple:
    """The (order, param, C) a family picked most often across folds (earliest fold on ties)."""
    picks = [tuple(r["families"][family]["selected"][k] for k in ("order", "param", "c")) for r in report.folds]
    return max(picks, key=lambda p: (picks.count(p), -picks.index(p)))


@dataclass
class TrainedModel:
    extractor: FeatureExtractor
    model: svm.SvmModel
    family: str
    train_features: np.ndarray  # samples x N


def train_final(X, labels, family: str, order: int, param, c: float,
                ica_config: IcaConfig = IcaConfig(), grid: Optional[HyperGrid] = None,
                svm_tol: float = 1e-3, test_centering: str = "train") -> TrainedModel:
    grid = grid or HyperGrid()
    X = as_array(X)
    labels = np.asarray(labels, dtype=int)
    fx, _ = fit_extractor(X, order, ica_config, test_centering)
    F = transform_train(fx, X).T
    model, _ = _fit_svm(F, labels, family, param, c, grid, svm_tol)
    return TrainedModel(fx, model, family, F)


def predict_documents(tm: TrainedModel, X) -> tuple[np.ndarray, np.ndarray]:
    return svm.predict(tm.model, transform_test(tm.extractor, X).T)

