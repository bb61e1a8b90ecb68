import numpy as np
import pytest
import scipy.sparse as sp

from alpool.models import (
    CONSTANT_NEGATIVE,
    CONSTANT_POSITIVE,
    FeedForwardNN,
    LogisticRegressionOVR,
    ModelConfig,
    RandomForestOVR,
    fit,
    load_model,
    loss_and_gradient,
    predict,
    predict_proba,
    save_model,
)
from alpool.models._lbfgs import lbfgs
from alpool.models.forest import Tree, best_gini_split
from alpool.models.neural import init_parameters
from helpers import central_difference, relative_error, small_problem

FAST = {
    "logistic_regression": {},
    "random_forest": {"n_estimators": 5},
    "feedforward_nn": {"hidden_layer_sizes": (8,), "epochs": 5},
}


def toy_data(seed=0, n=60, V=10):
    rng = np.random.default_rng(seed)
    X = sp.csr_matrix(rng.random((n, V)) * (rng.random((n, V)) < 0.5))
    Y = np.column_stack([
        (X[:, 3].toarray().ravel() > 0.4).astype(np.int8),
        (X[:, 7].toarray().ravel() > 0.2).astype(np.int8),
    ])
    return X, Y


class TestLbfgs:
    def test_quadratic(self):
        A = np.diag([1.0, 10.0, 100.0])
        b = np.array([1.0, -2.0, 3.0])
        res = lbfgs(lambda x: (0.5 * x @ A @ x - b @ x, A @ x - b), np.zeros(3), gtol=1e-8)
        assert res.converged
        np.testing.assert_allclose(res.x, np.linalg.solve(A, b), atol=1e-8)

    def test_rosenbrock(self):
        def f(x):
            a, b = x
            val = (1 - a) ** 2 + 100 * (b - a * a) ** 2
            g = np.array([-2 * (1 - a) - 400 * a * (b - a * a), 200 * (b - a * a)])
            return val, g

        res = lbfgs(f, np.array([-1.2, 1.0]), max_iter=500, gtol=1e-8)
        np.testing.assert_allclose(res.x, [1.0, 1.0], atol=1e-5)

    def test_history_non_increasing(self):
        X, Y = small_problem(np.random.default_rng(1), n=30, V=6, k=1)
        m = LogisticRegressionOVR().fit(X, Y)
        h = np.array(m.loss_history_[0])
        assert np.all(np.diff(h) <= 1e-12)


class TestLogistic:
    @pytest.mark.parametrize("seed", range(5))
    def test_gradient_matches_finite_differences(self, seed):
        rng = np.random.default_rng(seed)
        X, Y = small_problem(rng)
        W = rng.normal(size=(Y.shape[1], X.shape[1] + 1))
        cfg = ModelConfig("logistic_regression", {"alpha": 0.7})
        _, g = loss_and_gradient(cfg, W, X, Y)
        num = central_difference(lambda: loss_and_gradient(cfg, W, X, Y)[0], [W])
        assert relative_error([g], num) < 1e-5

    def test_zero_weights_give_half(self):
        X, Y = toy_data()
        m = LogisticRegressionOVR(max_iter=0).fit(X, Y)
        np.testing.assert_allclose(m.predict_proba(X), 0.5)

    def test_separable(self):
        X = sp.csr_matrix(np.array([[1.0, 0], [2, 0], [0, 1], [0, 2]]))
        Y = np.array([[1, 0], [1, 0], [0, 1], [0, 1]])
        m = LogisticRegressionOVR().fit(X, Y)
        assert np.array_equal(m.predict(X), Y)

    def test_learns_rule(self):
        X, Y = toy_data()
        assert LogisticRegressionOVR(alpha=0.01).fit(X, Y).score(X, Y) > 0.85

    def test_intercept_not_penalized(self):
        X = sp.csr_matrix(np.zeros((4, 2)))
        Y = np.array([[1], [1], [1], [0]])
        m = LogisticRegressionOVR(alpha=1.0).fit(X, Y)
        assert m.predict_proba(X)[0, 0] == pytest.approx(0.75, abs=1e-6)


class TestForest:
    def test_gini_split_example(self):
        D = np.array([[0.0], [1.0], [2.0], [3.0]])
        c, thr, g = best_gini_split(D, np.array([0.0, 0.0, 1.0, 1.0]))
        assert (c, thr, g) == (0, 1.5, 0.0)
        assert best_gini_split(np.ones((3, 2)), np.array([0.0, 1.0, 1.0])) is None

    def test_learns_single_feature_rule(self):
        X, Y = toy_data(3, n=120)
        m = RandomForestOVR(n_estimators=15, random_state=0).fit(X, Y[:, :1])
        X_new, Y_new = toy_data(4, n=200)
        assert m.score(X_new, Y_new[:, :1]) > 0.9

    def test_vote_fraction(self):
        m = RandomForestOVR()
        m.forests_ = [[Tree.leaf(0.8)] * 12 + [Tree.leaf(0.2)] * 18]
        m.constant_ = np.array([np.nan])
        m.n_features_in_, m.n_labels_ = 4, 1
        assert m.predict_proba(np.zeros((1, 4)))[0, 0] == pytest.approx(0.4)

    def test_depth_limit(self):
        X, Y = toy_data(5)
        m = RandomForestOVR(n_estimators=3, max_depth=2, random_state=1).fit(X, Y)
        assert max(t.depth for forest in m.forests_ for t in forest) <= 2


class TestNeural:
    @pytest.mark.parametrize("seed", range(5))
    def test_gradient_matches_finite_differences(self, seed):
        rng = np.random.default_rng(seed)
        X, Y = small_problem(rng)
        params = init_parameters([X.shape[1], 6, 4, Y.shape[1]], rng)
        params = [p + rng.normal(scale=0.1, size=p.shape) for p in params]
        cfg = ModelConfig("feedforward_nn")
        _, g = loss_and_gradient(cfg, params, X, Y)
        num = central_difference(lambda: loss_and_gradient(cfg, params, X, Y)[0], params)
        assert relative_error(g, num) < 1e-4

    def test_zero_weights_give_half(self):
        params = [np.zeros((3, 4)), np.zeros(4), np.zeros((4, 2)), np.zeros(2)]
        m = FeedForwardNN().set_parameters(params)
        np.testing.assert_allclose(m.predict_proba(np.ones((2, 3))), 0.5)

    def test_learns_rule(self):
        X, Y = toy_data(6, n=200)
        m = FeedForwardNN(hidden_layer_sizes=(32,), epochs=100, learning_rate=0.5,
                          random_state=0).fit(X, Y)
        assert m.score(X, Y) > 0.85
        assert m.loss_curve_[-1] < m.loss_curve_[0]


@pytest.mark.parametrize("kind", list(FAST))
class TestContract:
    def test_proba_shape_and_range(self, kind):
        X, Y = toy_data()
        m = fit(ModelConfig(kind, FAST[kind], rng_seed=0), X, Y)
        P = m.predict_proba(X)
        assert P.shape == Y.shape and np.all((P >= 0) & (P <= 1))
        assert predict_proba(m, X[0]).shape == (2,)
        assert predict(m, X[:3]).dtype == np.int8

    def test_constant_columns(self, kind):
        X, Y = toy_data()
        Y = np.column_stack([Y[:, 0], np.zeros(len(Y)), np.ones(len(Y))]).astype(np.int8)
        P = fit(ModelConfig(kind, FAST[kind]), X, Y).predict_proba(X)
        assert np.all(P[:, 1] == CONSTANT_NEGATIVE) and np.all(P[:, 2] == CONSTANT_POSITIVE)

    def test_deterministic(self, kind):
        X, Y = toy_data()
        cfg = ModelConfig(kind, FAST[kind], rng_seed=3)
        assert fit(cfg, X, Y).predict_proba(X).tobytes() == fit(cfg, X, Y).predict_proba(X).tobytes()

    def test_save_load(self, kind, tmp_path):
        X, Y = toy_data()
        m = fit(ModelConfig(kind, FAST[kind]), X, Y)
        save_model(m, tmp_path / "m.pkl")
        assert load_model(tmp_path / "m.pkl").predict_proba(X).tobytes() == m.predict_proba(X).tobytes()

    def test_errors(self, kind):
        X, Y = toy_data()
        cfg = ModelConfig(kind, FAST[kind])
        with pytest.raises(ValueError, match="empty training set"):
            fit(cfg, X[:0], Y[:0])
        m = fit(cfg, X, Y)
        with pytest.raises(ValueError, match="dimension mismatch"):
            m.predict_proba(np.zeros((1, 3)))


def test_forest_has_no_gradient():
    with pytest.raises(ValueError, match="non-differentiable"):
        loss_and_gradient(ModelConfig("rf"), None, np.zeros((1, 1)), np.zeros((1, 1)))


def test_unknown_kind():
    with pytest.raises(ValueError, match="unknown model kind"):
        ModelConfig("svm")


def test_lr_separable_twenty_points():
    rng = np.random.default_rng(0)
    X = rng.normal(size=(20, 3))
    y = (X @ np.array([1.0, -2.0, 0.5]) > 0).astype(np.int8)
    m = LogisticRegressionOVR().fit(X, y)
    assert np.array_equal(m.predict(X)[:, 0], y)


def test_rf_feature_three_indicator_training_accuracy():
    rng = np.random.default_rng(1)
    X = rng.random((50, 6)) * (rng.random((50, 6)) < 0.5)
    y = (X[:, 3] > 0).astype(np.int8)
    m = RandomForestOVR(random_state=0).fit(sp.csr_matrix(X), y)
    assert np.array_equal(m.predict(X)[:, 0], y)


def test_zero_weight_loss_is_ln2_per_example():
    X = sp.csr_matrix(np.eye(4))
    Y = np.array([[1], [0], [1], [0]])
    loss, _ = loss_and_gradient(ModelConfig("lr"), np.zeros((1, 5)), X, Y)
    assert loss == pytest.approx(4 * np.log(2), abs=1e-14)


def test_fnn_gradient_five_unit_net():
    rng = np.random.default_rng(9)
    X, Y = small_problem(rng, n=8, V=4, k=2)
    params = init_parameters([4, 5, 2], rng)
    cfg = ModelConfig("fnn")
    _, g = loss_and_gradient(cfg, params, X, Y)
    num = central_difference(lambda: loss_and_gradient(cfg, params, X, Y)[0], params)
    assert relative_error(g, num) < 1e-4


class _FixedProba(LogisticRegressionOVR):
    def __init__(self, p):
        self.p = p
        self.constant_ = np.full(len(p), np.nan)
        self.n_features_in_ = 1

    def _raw_proba(self, X):
        return np.tile(np.asarray(self.p, dtype=float), (X.shape[0], 1))


@pytest.mark.parametrize(
    "p, threshold, expected",
    [([0.6, 0.4], 0.5, [1, 0]), ([0.5], 0.5, [1]), ([0.6, 0.4], 0.99, [0, 0])],
)
def test_predict_threshold(p, threshold, expected):
    assert predict(_FixedProba(p), np.zeros(1), threshold).tolist() == expected
