import numpy as np
import pytest

from icadetect import pipeline as pl
from icadetect import synthetic, text
from icadetect.errors import DegenerateSample, FoldTooSmall, GridEmpty, IllConditioned, OrderTooLarge, SingleClass
from icadetect.ica import IcaConfig

from helpers import make_docs

FAST = IcaConfig(seed=0, restarts=1, max_iters=200)
SMALL_GRID = pl.HyperGrid(orders=(3,), c_values=(1.0,), sigma_factors=(1.0,), families=("gaussian",))


def mixed(d=20, n=4, V=1500, seed=0, noise=1e-3):
    rng = np.random.default_rng(seed)
    S = synthetic.sources(["laplace", "uniform", "bimodal", "laplace"][:n], V, rng)
    A = rng.standard_normal((d, n))
    return A @ S + noise * rng.standard_normal((d, V)), A


def corpus(n_docs, seed=0):
    texts, labels = synthetic.topic_corpus(n_docs, np.random.default_rng(seed))
    docs = make_docs(texts, labels)
    X = text.tfidf(text.build_matrix(docs, text.TokenizeConfig(stop_words=frozenset())))
    return X.values, text.label_signs(docs)


def same_plan(a, b):
    flat = lambda p: [ix for fold in p.outer + p.inner for ix in fold]
    return a.seed == b.seed and all(np.array_equal(x, y) for x, y in zip(flat(a), flat(b)))


def test_a_hat_aligns_with_true_mixing():
    X, A = mixed()
    fx, _ = pl.fit_extractor(X, 4, IcaConfig(seed=0, restarts=3))
    An = A / np.linalg.norm(A, axis=0)
    Hn = fx.a_hat / np.linalg.norm(fx.a_hat, axis=0)
    cos = np.abs(An.T @ Hn)
    assert np.all(cos.max(axis=1) > 0.95)


def test_a_hat_identity():
    X, _ = mixed(seed=1)
    fx, _ = pl.fit_extractor(X, 3, FAST)
    np.testing.assert_allclose(fx.a_hat, fx.proj.f.T @ np.linalg.inv(fx.w), atol=1e-8)


def test_boundary_order():
    # smallest sample count the entropy estimator accepts is 8, so V=9 gives N=V-1=8
    X = np.random.default_rng(2).standard_normal((10, 9))
    fx, _ = pl.fit_extractor(X, 8, FAST)
    assert np.linalg.matrix_rank(fx.a_hat.T @ fx.a_hat) == 8
    with pytest.raises(OrderTooLarge):
        pl.fit_extractor(X, 9, FAST)
    with pytest.raises(DegenerateSample):
        pl.fit_extractor(X[:, :6], 5, FAST)


def test_fit_extractor_deterministic():
    X, _ = mixed(seed=3)
    a = pl.fit_extractor(X, 3, FAST)[0]
    b = pl.fit_extractor(X, 3, FAST)[0]
    assert a.a_hat.tobytes() == b.a_hat.tobytes()


def test_transform_train_properties():
    X, _ = mixed(seed=4)
    fx, res = pl.fit_extractor(X, 4, IcaConfig(seed=0, restarts=2))
    Y = pl.transform_train(fx, X)
    Xh = fx.proj.f @ (X - fx.stats.mean[:, None])
    np.testing.assert_allclose(Y, fx.w @ Xh)
    assert np.max(np.abs(Y.mean(axis=1))) < 1e-8
    off = lambda M: np.sum(np.abs(np.corrcoef(M) - np.eye(len(M))))
    assert off(Y) < off(Xh) or off(Xh) < 1e-6


def test_transform_test_algebra():
    X, _ = mixed(d=12, n=3, V=400, seed=5)
    fx, _ = pl.fit_extractor(X, 3, FAST)
    np.testing.assert_allclose(pl.transform_test(fx, X), pl.transform_train(fx, X), atol=1e-6)
    np.testing.assert_allclose(pl.transform_test(fx, fx.stats.mean[:, None]), 0.0, atol=1e-12)
    cols = fx.a_hat + fx.stats.mean[:, None]
    np.testing.assert_allclose(pl.transform_test(fx, cols), np.eye(3), atol=1e-8)


def test_transform_test_ill_conditioned():
    X, _ = mixed(d=6, n=2, V=300, seed=6)
    fx, _ = pl.fit_extractor(X, 2, FAST)
    bad = pl.FeatureExtractor(fx.stats, fx.proj, fx.w, np.outer(fx.a_hat[:, 0], [1.0, 1.0 + 1e-9]))
    with pytest.raises(IllConditioned):
        pl.transform_test(bad, X)


def test_extraction_is_label_blind():
    X, y = corpus(60)
    plan = pl.make_split_plan(y, seed=0)
    tr, te = plan.outer[0]
    fx, _ = pl.fit_extractor(X[:, tr], 3, FAST)
    # extraction never sees labels, so permuting them cannot matter
    fx2, _ = pl.fit_extractor(X[:, tr], 3, FAST)
    assert pl.transform_test(fx, X[:, te]).tobytes() == pl.transform_test(fx2, X[:, te]).tobytes()
    assert same_plan(pl.make_split_plan(y, seed=0), plan)


def test_split_plan_partitions_and_stratifies():
    y = np.array([1] * 37 + [-1] * 63)
    plan = pl.make_split_plan(y, seed=7)
    tests = np.concatenate([t for _, t in plan.outer])
    np.testing.assert_array_equal(np.sort(tests), np.arange(100))
    for (tr, te), (itr, iv, ite) in zip(plan.outer, plan.inner):
        assert np.sum(y[te] > 0) in (7, 8)
        assert len(np.intersect1d(tr, te)) == 0
        np.testing.assert_array_equal(np.sort(np.concatenate([itr, iv, ite])), tr)
        assert len(iv) == len(ite) == 8
    assert same_plan(pl.make_split_plan(y, seed=7), plan)


def test_split_plan_errors():
    with pytest.raises(FoldTooSmall):
        pl.make_split_plan(np.array([1] * 5 + [-1] * 50))
    with pytest.raises(SingleClass):
        pl.make_split_plan(np.ones(20, dtype=int))


def test_grid_validation():
    with pytest.raises(GridEmpty):
        pl.HyperGrid(orders=())
    with pytest.raises(GridEmpty):
        pl.HyperGrid(sigma_factors=(), families=("gaussian",))
    cfgs = pl.HyperGrid(orders=(20, 10), c_values=(10.0, 1.0), sigma_factors=(1.0,)).configs("gaussian")
    assert cfgs == [(10, 1.0, 1.0), (20, 1.0, 1.0), (10, 1.0, 10.0), (20, 1.0, 10.0)]


def test_resolve_kernel_relative_parameters():
    F = np.array([[0.0, 0.0], [3.0, 4.0], [6.0, 8.0]])
    assert pl.resolve_kernel("gaussian", 2.0, F).sigma == pytest.approx(10.0)
    assert pl.resolve_kernel("rbf", 1.0, F).gamma == pytest.approx(1.0 / (2 * F.var()))
    poly = pl.resolve_kernel("polynomial", 3, F, coef0=0.5)
    assert (poly.degree, poly.coef0, poly.scale) == (3, 0.5, 0.5)


def test_select_order_ties():
    rep = {"order_scores": [{"order": 20, "mean_validation_accuracy": 0.8},
                            {"order": 10, "mean_validation_accuracy": 0.8},
                            {"order": 5, "mean_validation_accuracy": 0.7}]}
    assert pl.select_order(rep) == 10
    assert pl.select_order({"order_scores": [{"order": 7, "mean_validation_accuracy": 0.1}]}) == 7


def test_single_config_grid_selected_everywhere():
    X, y = corpus(60)
    rep = pl.nested_cv(X, y, SMALL_GRID, seed=0, ica_config=FAST)
    for row in rep.folds:
        sel = row["families"]["gaussian"]["selected"]
        assert (sel["order"], sel["param"], sel["c"]) == (3, 1.0, 1.0)
    assert pl.select_order(rep) == 3
    assert pl.final_selection(rep, "gaussian") == (3, 1.0, 1.0)


def test_nested_cv_deterministic_and_thread_independent():
    X, y = corpus(60, seed=1)
    a = pl.nested_cv(X, y, SMALL_GRID, seed=3, ica_config=FAST)
    b = pl.nested_cv(X, y, SMALL_GRID, seed=3, ica_config=FAST, threads=3)
    assert a.to_json() == b.to_json()


def test_no_leakage_into_own_fold():
    X, y = corpus(60, seed=2)
    plan = pl.make_split_plan(y, seed=0)
    _, te = plan.outer[1]
    noisy = X.copy()
    noisy[:, te] = np.random.default_rng(0).random((X.shape[0], len(te))) * 5
    base = pl.nested_cv(X, y, SMALL_GRID, seed=0, ica_config=FAST)
    pert = pl.nested_cv(noisy, y, SMALL_GRID, seed=0, ica_config=FAST)
    a, b = base.folds[1]["families"]["gaussian"], pert.folds[1]["families"]["gaussian"]
    for key in ("selected", "validation_accuracy", "inner_test_accuracy"):
        assert a[key] == b[key]
    assert base.folds[1]["order_validation"] == pert.folds[1]["order_validation"]


def test_nested_cv_rejects_large_order():
    X, y = corpus(40)
    with pytest.raises(OrderTooLarge):
        pl.nested_cv(X, y, pl.HyperGrid(orders=(500,), families=("gaussian",)), ica_config=FAST)


def test_train_final_and_predict():
    X, y = corpus(60, seed=4)
    tm = pl.train_final(X, y, "gaussian", 3, 1.0, 1.0, FAST)
    pred, dec = pl.predict_documents(tm, X)
    assert np.mean(pred == y) > 0.9
    assert dec.shape == (60,)
