import io

import numpy as np
import pytest

from hypervec import (DataError, auc_score, build_hypergraph,
                      evaluate_classification, evaluate_hyperedge_prediction,
                      hyperedge_feature, make_split, sample_negatives,
                      split_hyperedge_holdout, train_classifier)
from hypervec.evaluate import (cross_entropy_gradients, cross_entropy_loss,
                               _softmax)

from _reference import ref_auc_trapezoid
from _synth import planted_community_hypergraph


def _gaussian_clusters(rng, n_per_class, num_classes, dim, spread=0.2):
    centers = rng.standard_normal((num_classes, dim)) * 4.0
    X, y = [], []
    for c in range(num_classes):
        X.append(centers[c] + rng.standard_normal((n_per_class, dim)) * spread)
        y.append(np.full(n_per_class, c))
    return np.vstack(X), np.concatenate(y)


class TestSplit:
    def test_disjoint_union_and_fraction(self):
        split = make_split(200, 0.04, 0)
        assert len(split.train_ids) == 8
        assert len(np.intersect1d(split.train_ids, split.test_ids)) == 0
        assert len(split.train_ids) + len(split.test_ids) == 200

    def test_deterministic(self):
        a = make_split(100, 0.3, 42)
        b = make_split(100, 0.3, 42)
        assert np.array_equal(a.train_ids, b.train_ids)

    def test_both_sides_nonempty(self):
        split = make_split(3, 0.01, 1)
        assert len(split.train_ids) >= 1
        assert len(split.test_ids) >= 1


class TestClassifier:
    def test_separable_clusters_perfect(self):
        rng = np.random.default_rng(0)
        X, y = _gaussian_clusters(rng, 30, 2, 4)
        model = train_classifier(X, y, epochs=500)
        assert np.mean(model.predict(X) == y) == 1.0

    def test_no_signal_is_chance(self):
        rng = np.random.default_rng(1)
        X = np.ones((200, 3))
        y = np.array([0, 1] * 100)
        model = train_classifier(X, y, epochs=100)
        report = evaluate_classification(X, y, num_splits=20, fraction=0.5,
                                         seed=2, epochs=50)
        assert abs(report.mean - 0.5) <= 0.1

    def test_missing_class_named(self):
        X = np.ones((4, 2))
        with pytest.raises(DataError, match="class absent.*: 1"):
            train_classifier(X, np.array([0, 0, 2, 2]), num_classes=3)

    def test_loss_monotone_for_small_rate(self):
        rng = np.random.default_rng(3)
        X, y = _gaussian_clusters(rng, 20, 3, 5, spread=1.5)
        model = train_classifier(X, y, learning_rate=0.05, epochs=200)
        diffs = np.diff(model.loss_history)
        assert np.all(diffs <= 1e-12)

    def test_gradient_check_against_finite_differences(self):
        rng = np.random.default_rng(4)
        X = rng.standard_normal((5, 3))
        y = rng.integers(0, 3, size=5)
        W = rng.standard_normal((3, 3)) * 0.3
        b = rng.standard_normal(3) * 0.3
        l2 = 0.01
        gw, gb = cross_entropy_gradients(W, b, X, y, l2)
        eps = 1e-6
        for idx in np.ndindex(W.shape):
            Wp, Wm = W.copy(), W.copy()
            Wp[idx] += eps
            Wm[idx] -= eps
            num = (cross_entropy_loss(Wp, b, X, y, l2)
                   - cross_entropy_loss(Wm, b, X, y, l2)) / (2 * eps)
            assert abs(num - gw[idx]) / max(abs(num), 1e-8) < 1e-5
        for i in range(len(b)):
            bp, bm = b.copy(), b.copy()
            bp[i] += eps
            bm[i] -= eps
            num = (cross_entropy_loss(W, bp, X, y, l2)
                   - cross_entropy_loss(W, bm, X, y, l2)) / (2 * eps)
            assert abs(num - gb[i]) / max(abs(num), 1e-8) < 1e-5

    def test_softmax_rows_sum_to_one(self):
        rng = np.random.default_rng(5)
        p = _softmax(rng.standard_normal((10, 4)) * 50)
        np.testing.assert_allclose(p.sum(axis=1), 1.0)
        assert np.all(p >= 0)


class TestEvaluateClassification:
    def test_perfect_data(self):
        rng = np.random.default_rng(6)
        X, y = _gaussian_clusters(rng, 50, 2, 4)
        report = evaluate_classification(X, y, num_splits=10, fraction=0.2,
                                         seed=7, epochs=300)
        assert report.mean == 1.0
        assert report.std == 0.0

    def test_protocol_counts(self):
        rng = np.random.default_rng(8)
        X, y = _gaussian_clusters(rng, 150, 3, 4, spread=2.0)
        report = evaluate_classification(X, y, num_splits=100, fraction=0.04,
                                         seed=9, epochs=60)
        assert len(report.accuracies) == 100

    def test_deterministic(self):
        rng = np.random.default_rng(10)
        X, y = _gaussian_clusters(rng, 40, 2, 3, spread=2.0)
        a = evaluate_classification(X, y, num_splits=5, fraction=0.1, seed=11)
        b = evaluate_classification(X, y, num_splits=5, fraction=0.1, seed=11)
        assert np.array_equal(a.accuracies, b.accuracies)

    def test_rotation_invariance_with_retraining(self):
        rng = np.random.default_rng(12)
        X, y = _gaussian_clusters(rng, 60, 3, 6)
        Q, _ = np.linalg.qr(rng.standard_normal((6, 6)))
        base = evaluate_classification(X, y, num_splits=8, fraction=0.1,
                                       seed=13, epochs=400)
        rotated = evaluate_classification(X @ Q, y, num_splits=8, fraction=0.1,
                                          seed=13, epochs=400)
        assert abs(base.mean - rotated.mean) <= 0.02

    def test_csv_shape(self):
        rng = np.random.default_rng(14)
        X, y = _gaussian_clusters(rng, 20, 2, 3)
        report = evaluate_classification(X, y, num_splits=4, fraction=0.2, seed=0)
        buf = io.StringIO()
        report.to_csv(buf)
        lines = buf.getvalue().strip().splitlines()
        assert lines[0] == "split,accuracy,std"
        assert len(lines) == 1 + 4 + 1
        assert lines[-1].startswith("aggregate,")


class TestHyperedgeFeature:
    def test_identical_members_zero(self):
        emb = np.tile([1.5, -2.0], (4, 1))
        assert hyperedge_feature([0, 1, 2], emb).tolist() == [0.0, 0.0]

    def test_population_variance_frozen(self):
        emb = np.array([[0.0, 0.0], [2.0, 2.0]])
        assert hyperedge_feature([0, 1], emb).tolist() == [1.0, 1.0]

    def test_permutation_invariant(self):
        rng = np.random.default_rng(15)
        emb = rng.standard_normal((6, 3))
        a = hyperedge_feature([0, 2, 4], emb)
        b = hyperedge_feature([4, 0, 2], emb)
        np.testing.assert_array_equal(a, b)

    def test_scaling_is_quadratic(self):
        rng = np.random.default_rng(16)
        emb = rng.standard_normal((5, 4))
        base = hyperedge_feature([0, 1, 3], emb)
        scaled = hyperedge_feature([0, 1, 3], 3.0 * emb)
        np.testing.assert_allclose(scaled, 9.0 * base)

    def test_errors(self):
        emb = np.zeros((3, 2))
        with pytest.raises(DataError, match="unknown id"):
            hyperedge_feature([0, 9], emb)
        with pytest.raises(DataError):
            hyperedge_feature([0], emb)


class TestSampleNegatives:
    def test_ratio_and_no_collisions(self):
        pins, _, _ = planted_community_hypergraph(
            num_nodes=150, num_classes=3, num_hedges=100, seed=17,
            feature_dim=None)
        h, _ = build_hypergraph(pins)
        negs = sample_negatives(h, 5, 18)
        assert len(negs) == 5 * h.num_hyperedges
        existing = {frozenset(h.pins(e).tolist()) for e in range(h.num_hyperedges)}
        for t in negs:
            assert frozenset(t.tolist()) not in existing

    def test_sizes_match_distribution(self):
        pins = [[0, 1, 2], [3, 4], [5, 6, 7, 8]]
        h, _ = build_hypergraph(pins + [[1, 5], [2, 6]])
        negs = sample_negatives(h, 3, 19)
        want = sorted(list(h.pin_counts) * 3)
        assert sorted(len(t) for t in negs) == want

    def test_deterministic(self):
        pins, _, _ = planted_community_hypergraph(
            num_nodes=80, num_classes=2, num_hedges=50, seed=20,
            feature_dim=None)
        h, _ = build_hypergraph(pins)
        a = sample_negatives(h, 2, 21)
        b = sample_negatives(h, 2, 21)
        assert all(np.array_equal(x, y) for x, y in zip(a, b))

    def test_too_dense_errors(self):
        # complete pair hypergraph: every 2-subset exists, nothing to sample
        from itertools import combinations
        pins = [list(c) for c in combinations(range(5), 2)]
        h, _ = build_hypergraph(pins)
        with pytest.raises(DataError, match="too dense"):
            sample_negatives(h, 5, 22)

    def test_subset_of_hyperedges(self):
        h, _ = build_hypergraph([[0, 1, 2], [2, 3], [3, 4, 5]])
        negs = sample_negatives(h, 2, 23, hyperedge_ids=np.array([1]))
        assert len(negs) == 2
        assert all(len(t) == 2 for t in negs)


class TestAuc:
    def test_perfect_ranking(self):
        assert auc_score([0.9] * 10, [0.1] * 40) == 1.0

    def test_reversed_ranking(self):
        assert auc_score([0.1] * 10, [0.9] * 40) == 0.0

    def test_random_scores_near_half(self):
        rng = np.random.default_rng(24)
        pos = rng.random(5000)
        neg = rng.random(5000)
        assert abs(auc_score(pos, neg) - 0.5) < 0.05

    def test_matches_trapezoid_oracle(self):
        rng = np.random.default_rng(25)
        for trial in range(60):
            n_pos = int(rng.integers(2, 40))
            n_neg = int(rng.integers(2, 40))
            if trial % 3 == 0:  # force ties
                pos = rng.integers(0, 4, n_pos).astype(float)
                neg = rng.integers(0, 4, n_neg).astype(float)
            else:
                pos = rng.standard_normal(n_pos)
                neg = rng.standard_normal(n_neg)
            assert abs(auc_score(pos, neg)
                       - ref_auc_trapezoid(pos, neg)) < 1e-9

    def test_empty_side_rejected(self):
        with pytest.raises(DataError):
            auc_score([], [0.5])


class TestHoldout:
    def test_fraction_and_node_universe(self):
        pins, _, _ = planted_community_hypergraph(
            num_nodes=120, num_classes=2, num_hedges=80, seed=26,
            feature_dim=None)
        h, _ = build_hypergraph(pins)
        visible, hidden = split_hyperedge_holdout(h, 0.2, 27)
        assert len(hidden) == round(0.2 * h.num_hyperedges)
        assert visible.num_nodes == h.num_nodes
        assert visible.num_hyperedges == h.num_hyperedges - len(hidden)

    def test_deterministic(self):
        h, _ = build_hypergraph([[0, 1], [1, 2], [2, 3], [3, 4], [4, 0]])
        _, a = split_hyperedge_holdout(h, 0.4, 28)
        _, b = split_hyperedge_holdout(h, 0.4, 28)
        assert np.array_equal(a, b)

    def test_visible_pins_intact(self):
        h, _ = build_hypergraph([[0, 1, 2], [2, 3], [3, 4, 0]])
        visible, hidden = split_hyperedge_holdout(h, 0.34, 29)
        kept = [e for e in range(h.num_hyperedges) if e not in set(hidden.tolist())]
        assert visible.pin_lists() == [h.pins(e).tolist() for e in kept]


class TestHyperedgePrediction:
    def test_clustered_embeddings_score_high(self):
        pins, labels, _ = planted_community_hypergraph(
            num_nodes=200, num_classes=4, num_hedges=160, p_intra=1.0,
            seed=30, feature_dim=None)
        h, original = build_hypergraph(pins)
        rng = np.random.default_rng(31)
        centers = rng.standard_normal((4, 8)) * 3.0
        emb = centers[labels[original]] + rng.standard_normal((h.num_nodes, 8)) * 0.1
        report = evaluate_hyperedge_prediction(h, emb, hidden_fraction=0.2,
                                               ratio=5, seed=32)
        assert report.auc > 0.9
        assert report.num_negatives == 5 * report.num_positives

    def test_too_few_positives(self):
        h, _ = build_hypergraph([[0, 1], [1, 2], [2, 3]])
        with pytest.raises(DataError, match="too few hyperedges"):
            evaluate_hyperedge_prediction(h, np.zeros((4, 2)),
                                          hidden_fraction=0.3, seed=33)

    def test_deterministic(self):
        pins, _, _ = planted_community_hypergraph(
            num_nodes=100, num_classes=2, num_hedges=90, seed=34,
            feature_dim=None)
        h, _ = build_hypergraph(pins)
        rng = np.random.default_rng(35)
        emb = rng.standard_normal((h.num_nodes, 6))
        a = evaluate_hyperedge_prediction(h, emb, seed=36)
        b = evaluate_hyperedge_prediction(h, emb, seed=36)
        assert a.auc == b.auc

    def test_auc_invariant_under_scaling(self):
        pins, labels, _ = planted_community_hypergraph(
            num_nodes=150, num_classes=3, num_hedges=120, p_intra=1.0,
            seed=37, feature_dim=None)
        h, original = build_hypergraph(pins)
        rng = np.random.default_rng(38)
        centers = rng.standard_normal((3, 6)) * 3.0
        emb = centers[labels[original]] + rng.standard_normal((h.num_nodes, 6)) * 0.15
        a = evaluate_hyperedge_prediction(h, emb, seed=39, epochs=500)
        b = evaluate_hyperedge_prediction(h, 2.0 * emb, seed=39, epochs=500)
        assert abs(a.auc - b.auc) <= 0.02
