"""Training loop: early stopping, determinism, optimizer, learning signal."""

import numpy as np
import pytest

from citegraph.exceptions import ShapeError, TrainingError
from citegraph.graph import split_edges
from citegraph.retriever import (
    AdamOptimizer,
    TrainConfig,
    init_params,
    train,
)

from conftest import make_planted_benchmark, make_two_cluster_toy


class TestConfig:
    def test_defaults_follow_reference_setup(self):
        cfg = TrainConfig()
        assert cfg.epochs_max == 500
        assert cfg.patience == 5
        assert cfg.num_negatives == 10
        assert cfg.max_neighbors == 10
        assert cfg.lambda_re == 1.0

    def test_validation(self):
        with pytest.raises(ShapeError):
            TrainConfig(epochs_max=0)
        with pytest.raises(ShapeError):
            TrainConfig(patience=0)
        with pytest.raises(ShapeError):
            TrainConfig(num_negatives=0)

    def test_stable_hash_deterministic(self):
        assert TrainConfig(seed=3).stable_hash() == TrainConfig(seed=3).stable_hash()
        assert TrainConfig(seed=3).stable_hash() != TrainConfig(seed=4).stable_hash()


class TestAdam:
    def test_first_step_matches_reference_formula(self):
        params = init_params(3, seed=0)
        before = params.to_vector()
        grads = params.copy()  # arbitrary nonzero gradient: params themselves
        opt = AdamOptimizer(params, learning_rate=0.1)
        opt.step(params, grads)
        g = before
        m_hat = (0.1 * g) / (1 - 0.9)
        v_hat = (0.001 * g * g) / (1 - 0.999)
        expected = before - 0.1 * m_hat / (np.sqrt(v_hat) + 1e-8)
        assert np.allclose(params.to_vector(), expected, rtol=1e-12)

    def test_two_steps_match_naive_implementation(self):
        rng = np.random.default_rng(1)
        params = init_params(2, seed=1)
        vec = params.to_vector().copy()
        g1 = rng.normal(size=vec.size)
        g2 = rng.normal(size=vec.size)

        # naive scalar reference
        m = np.zeros_like(vec)
        v = np.zeros_like(vec)
        x = vec.copy()
        for t, g in enumerate((g1, g2), start=1):
            m = 0.9 * m + 0.1 * g
            v = 0.999 * v + 0.001 * g * g
            x = x - 0.01 * (m / (1 - 0.9**t)) / (np.sqrt(v / (1 - 0.999**t)) + 1e-8)

        from citegraph.retriever.params import RetrieverParams

        opt = AdamOptimizer(params, learning_rate=0.01)
        d, d1 = params.d, params.d1
        opt.step(params, RetrieverParams.from_vector(g1, d, d1))
        opt.step(params, RetrieverParams.from_vector(g2, d, d1))
        assert np.allclose(params.to_vector(), x, rtol=1e-12)


class TestEarlyStopping:
    def _graph(self):
        graph, table, _ = make_two_cluster_toy(seed=0, size=10)
        split = split_edges(graph, seed=0)
        return graph, table, split

    def test_patience_one_returns_previous_best(self):
        graph, table, split = self._graph()
        schedule = {1: 0.9, 2: 0.1}
        snapshots = {}

        def fake_metric(params, epoch):
            snapshots[epoch] = params.copy()
            return schedule.get(epoch, 0.0)

        cfg = TrainConfig(patience=1, epochs_max=50, seed=0)
        best, history = train(graph, table, split, cfg, val_metric_fn=fake_metric)
        assert len(history) == 2  # stops right after the first non-improvement
        assert np.array_equal(best.to_vector(), snapshots[1].to_vector())

    def test_stops_exactly_patience_epochs_after_best(self):
        graph, table, split = self._graph()
        schedule = {1: 0.2, 2: 0.5, 3: 0.4, 4: 0.4, 5: 0.3, 6: 0.2, 7: 0.1, 8: 0.9}

        def fake_metric(params, epoch):
            return schedule.get(epoch, 0.0)

        cfg = TrainConfig(patience=5, epochs_max=100, seed=0)
        _, history = train(graph, table, split, cfg, val_metric_fn=fake_metric)
        # best at epoch 2; epochs 3..7 are the 5 stale epochs; halt at 7
        assert len(history) == 7

    def test_returns_bitwise_best_epoch_params(self):
        graph, table, split = self._graph()
        snapshots = {}
        schedule = {1: 0.1, 2: 0.8, 3: 0.3, 4: 0.2}

        def fake_metric(params, epoch):
            snapshots[epoch] = params.copy()
            return schedule.get(epoch, 0.0)

        cfg = TrainConfig(patience=2, epochs_max=50, seed=1)
        best, history = train(graph, table, split, cfg, val_metric_fn=fake_metric)
        assert len(history) == 4
        assert best.to_vector().tobytes() == snapshots[2].to_vector().tobytes()

    def test_epochs_max_reached_without_stopping(self):
        graph, table, split = self._graph()
        cfg = TrainConfig(patience=100, epochs_max=3, seed=0)
        _, history = train(graph, table, split, cfg,
                           val_metric_fn=lambda p, e: float(e))
        assert len(history) == 3


class TestDeterminism:
    def test_same_seed_bitwise_identical(self):
        graph, table, _ = make_two_cluster_toy(seed=2, size=10)
        split = split_edges(graph, seed=2)
        cfg = TrainConfig(seed=7, epochs_max=4, patience=100)
        p1, h1 = train(graph, table, split, cfg)
        p2, h2 = train(graph, table, split, cfg)
        assert h1 == h2
        assert p1.to_vector().tobytes() == p2.to_vector().tobytes()

    def test_different_seed_differs(self):
        graph, table, _ = make_two_cluster_toy(seed=2, size=10)
        split = split_edges(graph, seed=2)
        p1, _ = train(graph, table, split, TrainConfig(seed=1, epochs_max=2, patience=100))
        p2, _ = train(graph, table, split, TrainConfig(seed=2, epochs_max=2, patience=100))
        assert p1.to_vector().tobytes() != p2.to_vector().tobytes()


class TestLearningSignal:
    def test_loss_decreases_and_beats_random_ranking(self):
        graph, table, cluster = make_planted_benchmark(
            seed=0, n_clusters=2, cluster_size=20, p_intra=0.3, p_inter=0.02,
            dim=8, noise=0.2)
        split = split_edges(graph, seed=0)
        cfg = TrainConfig(seed=0, epochs_max=20)
        params, history = train(graph, table, split, cfg)
        assert history[-1]["train_loss"] < history[0]["train_loss"]

        from citegraph.metrics import heldout_precision_at_k

        p5 = heldout_precision_at_k(graph, table, params, split, which="val", k=5)
        # random ranking recovers val neighbors at roughly |relevant|/|pool|
        pool = len(graph) - 1
        mean_relevant = 2 * len(split.val_edges) / len(graph)
        random_baseline = mean_relevant / pool * 5 / 5
        assert p5 > 3 * random_baseline

    def test_empty_train_split_errors(self):
        graph, table, _ = make_two_cluster_toy(seed=3, size=8)
        split = split_edges(graph, seed=3)
        split.train_edges = []
        with pytest.raises(TrainingError):
            train(graph, table, split, TrainConfig(seed=0))

    def test_d1_mismatch_rejected(self):
        graph, table, _ = make_two_cluster_toy(seed=3, size=8)
        split = split_edges(graph, seed=3)
        with pytest.raises(ShapeError):
            train(graph, table, split, TrainConfig(seed=0, d1=4))
