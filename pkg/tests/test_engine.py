import numpy as np
import pytest

from alpool.acquisition import STRATEGY_NAMES
from alpool.corpus import Document
from alpool.engine import (
    CSV_COLUMNS,
    ExperimentConfig,
    Oracle,
    Pool,
    oracle_labels,
    prepare_corpus,
    read_results_csv,
    records_to_csv,
    run_experiment,
    seed_pool,
    write_results_csv,
)
from alpool.synthgen import SynthSpec, generate
from conftest import TINY_MODELS


def config(strategy="random", model="logistic_regression", **kw):
    return ExperimentConfig(strategy=strategy, model=model,
                            model_params=TINY_MODELS[model], **kw)


class TestSeedPool:
    def test_non_lr(self):
        pool = seed_pool(np.arange(100), "rf", np.zeros((100, 2)), 2, rng_seed=1)
        assert len(pool.labeled_ids) == 10 and len(pool.unlabeled_ids) == 90
        assert pool.size == 100

    def test_lr_covers_every_label(self):
        rng = np.random.default_rng(0)
        Y = (rng.random((300, 6)) < [0.5, 0.3, 0.2, 0.1, 0.05, 0.02]).astype(np.int8)
        ids = np.arange(1000, 1300)
        pool = seed_pool(ids, "lr", Y, 6, rng_seed=3)
        assert len(pool.labeled_ids) == 50
        assert Y[np.array(pool.labeled_ids) - 1000].any(axis=0).all()

    def test_lr_greedy_repair(self):
        # a label with one positive out of 500 is almost never drawn in 10 rows
        Y = np.zeros((500, 2), dtype=np.int8)
        Y[:, 0] = 1
        Y[321, 1] = 1
        pool = seed_pool(np.arange(500), "lr", Y, 2, seed_size=10, rng_seed=0)
        assert 321 in pool.labeled_ids and len(pool.labeled_ids) == 10

    def test_lr_impossible(self):
        Y = np.zeros((60, 2), dtype=np.int8)
        Y[:, 0] = 1
        with pytest.raises(ValueError, match="coverage impossible"):
            seed_pool(np.arange(60), "lr", Y, 2)

    def test_deterministic(self):
        Y = np.ones((80, 1), dtype=np.int8)
        assert seed_pool(range(80), "fnn", Y, 1, rng_seed=4) == seed_pool(range(80), "fnn", Y, 1, rng_seed=4)

    def test_too_large(self):
        with pytest.raises(ValueError):
            seed_pool(range(5), "rf", np.zeros((5, 1)), 1)


class TestPool:
    def test_move(self):
        p = Pool([1], {2, 3})
        p.move([3])
        assert p.labeled_ids == [1, 3] and p.unlabeled_ids == {2}
        with pytest.raises(ValueError):
            p.move([3])

    def test_overlap(self):
        with pytest.raises(ValueError):
            Pool([1], {1, 2})


class TestOracle:
    def test_answers(self, small_corpus):
        i = int(small_corpus.train_ids[3])
        a = oracle_labels([i], small_corpus)
        assert np.array_equal(a[0], small_corpus.Y_train[3])
        assert np.array_equal(a, oracle_labels([i], small_corpus))

    def test_space_order(self):
        o = Oracle([7], [[1, 0, 1]])
        assert o([7]).tolist() == [[1, 0, 1]]

    def test_rejects_test_and_unknown(self, small_corpus):
        with pytest.raises(ValueError, match="oracle restricted to training pool"):
            oracle_labels([int(small_corpus.test_ids[0])], small_corpus)
        with pytest.raises(ValueError, match="unknown id"):
            oracle_labels([10**9], small_corpus)


def test_prepare_corpus_shapes(small_corpus):
    c = small_corpus
    assert c.train.matrix.shape[0] == len(c.Y_train) == 140
    assert c.test.matrix.shape[0] == len(c.Y_test) == 40
    assert len(c.validation_ids) == 20
    assert not set(c.train_ids) & set(c.test_ids)
    assert c.train.matrix.shape[1] == c.vocabulary.size


class TestRunExperiment:
    def test_n_labeled_arithmetic(self, small_corpus):
        cfg = config(max_iterations=5)
        recs = run_experiment(cfg, small_corpus)
        assert len(recs) == 12
        for r in recs:
            assert r.n_labeled == 50 + 10 * r.iteration == 50 + r.n_selected
            assert 0 <= r.f1_micro <= 1
        assert [r.split for r in recs[:2]] == ["train", "test"]

    def test_exhaustion(self):
        docs, _ = generate(SynthSpec(n_docs=50, n_labels=3, vocab_size=60, tokens_per_doc=10))
        corpus = prepare_corpus(docs, top_k=3, train_fraction=0.5, validation_fraction=0.0)
        assert len(corpus.train_ids) == 25
        recs = run_experiment(config(model="random_forest", max_iterations=300), corpus)
        tests = [r for r in recs if r.split == "test"]
        assert [r.n_selected for r in tests] == [0, 10, 15]
        assert [r.n_labeled for r in tests] == [10, 20, 25]

    def test_deterministic(self, small_corpus):
        cfg = config("be_mean_ts", "feedforward_nn", max_iterations=3)
        assert run_experiment(cfg, small_corpus) == run_experiment(cfg, small_corpus)

    def test_seed_iteration_is_strategy_independent(self, small_corpus):
        first = {s: run_experiment(config(s, max_iterations=1), small_corpus)[:2]
                 for s in ("random", "lc_mode", "kmeans_c2", "be_mean_w")}
        assert len({tuple(v) for v in first.values()}) == 1

    @pytest.mark.parametrize("strategy", STRATEGY_NAMES)
    def test_every_strategy_runs(self, small_corpus, strategy):
        recs = run_experiment(config(strategy, max_iterations=2), small_corpus)
        assert [r.n_labeled for r in recs[::2]] == [50, 60, 70]

    def test_config_validation(self):
        for bad in ({"batch_size": 0}, {"max_iterations": 0}, {"threshold": 1.0},
                    {"strategy": "nope"}, {"model": "svm"}):
            with pytest.raises(ValueError):
                ExperimentConfig(**bad)


def test_csv_roundtrip(tmp_path, small_corpus):
    cfg = config(max_iterations=2)
    recs = run_experiment(cfg, small_corpus)
    path = write_results_csv(tmp_path / "r.csv", cfg, recs)
    rows = read_results_csv(path)
    assert len(rows) == len(recs)
    assert rows[0]["experiment_id"] == "random__logistic_regression__s0"
    assert path.read_text().splitlines()[0] == ",".join(CSV_COLUMNS)
    assert all(r["wall_time_ms"] == 0.0 for r in rows)
    assert rows[-1]["f1_micro"] == recs[-1].f1_micro
    assert not list(tmp_path.glob("*.tmp"))
    assert path.read_text() == records_to_csv(cfg, recs)


def test_read_rejects_bad_header(tmp_path):
    (tmp_path / "x.csv").write_text("a,b\n1,2\n")
    with pytest.raises(ValueError, match="unexpected header"):
        read_results_csv(tmp_path / "x.csv")


def test_timing_flag(small_corpus):
    recs = run_experiment(config(max_iterations=1, record_timing=True), small_corpus)
    assert all(r.wall_time_ms > 0 for r in recs)


def test_training_order_is_canonical(small_corpus):
    # same labeled content, two different labeling orders
    from alpool.models import ModelConfig, fit

    ids = list(small_corpus.train_ids[:40])
    rows = {int(i): r for r, i in enumerate(small_corpus.train_ids)}
    X, Y = small_corpus.train.matrix, small_corpus.Y_train
    order = sorted(rows[int(i)] for i in ids)
    cfg = ModelConfig("fnn", TINY_MODELS["feedforward_nn"], rng_seed=0)
    a = fit(cfg, X[order], Y[order]).predict_proba(small_corpus.test.matrix)
    b = fit(cfg, X[order], Y[order]).predict_proba(small_corpus.test.matrix)
    assert a.tobytes() == b.tobytes()


@pytest.mark.slow
@pytest.mark.parametrize("strategy", ["random", "be_mean", "lc_mode", "kmeans_r10", "be_mean_ts", "lc_mean_w"])
def test_learning_curve_rises(default_corpus, strategy):
    gains = []
    for seed in range(5):
        recs = run_experiment(
            ExperimentConfig(strategy=strategy, model="logistic_regression",
                             max_iterations=60, rng_seed=seed),
            default_corpus,
        )
        test = {r.iteration: r.f1_micro for r in recs if r.split == "test"}
        gains.append(test[60] - test[10])
    assert np.mean(gains) >= 0
