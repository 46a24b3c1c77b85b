"""
Tests for the decision tree, random forest, logistic regression and the
model container.
"""

import sys
import tempfile
import unittest
from pathlib import Path

import numpy as np

sys.path.insert(0, str(Path(__file__).parent.parent.parent))

from rids._types import AttackLabel
from rids.classifier import (
    MODEL_MAGIC, N_CLASSES, ForestModel, LogRegModel, TreeModel, deserialize_model, empty_tree, fit_forest,
    fit_logreg, fit_model, fit_tree, gini, load_model, predict, predict_many, predict_proba, save_model,
    serialize_model, softmax_loss_grad, standardization,
)
from rids.errors import DomainError, ModelFormatError, TrainingError
from rids.features import FeatureVector, LabeledVector


def brute_force_stump(X, y):
    """Exhaustive best single split: lowest feature, then lowest threshold, wins ties."""
    n = len(y)

    def impurity(labels):
        counts = np.bincount(labels, minlength=6)
        return 1.0 - sum((c / len(labels)) ** 2 for c in counts)

    parent = impurity(y)
    best = (-1, 0.0)
    best_weighted = parent - 1e-12
    for j in range(X.shape[1]):
        values = sorted(set(X[:, j].tolist()))
        for lo, hi in zip(values, values[1:]):
            t = (lo + hi) / 2.0
            mask = X[:, j] <= t
            weighted = (mask.sum() * impurity(y[mask]) + (~mask).sum() * impurity(y[~mask])) / n
            if weighted < best_weighted - 1e-12:
                best, best_weighted = (j, t), weighted
    return best


def leaf_tree(label: AttackLabel) -> TreeModel:
    counts = np.zeros((1, 6), dtype=np.uint32)
    counts[0, int(label)] = 5
    return TreeModel(np.array([-1], dtype=np.int16), np.zeros(1), np.array([-1], dtype=np.int32),
                     np.array([-1], dtype=np.int32), counts)


def random_tree(rng: np.random.Generator, n_features: int, max_nodes: int = 31) -> TreeModel:
    """A structurally valid tree with random splits and leaf counts."""
    feature, threshold, left, right, counts = [], [], [], [], []

    def new_leaf():
        feature.append(-1)
        threshold.append(0.0)
        left.append(-1)
        right.append(-1)
        counts.append(rng.integers(0, 1000, size=N_CLASSES))
        return len(feature) - 1

    frontier = [new_leaf()]
    while frontier and len(feature) + 2 <= max_nodes:
        i = frontier.pop(int(rng.integers(len(frontier))))
        if rng.random() < 0.3:
            continue
        feature[i] = int(rng.integers(0, n_features))
        threshold[i] = float(rng.normal(0, 4))
        counts[i] = np.zeros(N_CLASSES, dtype=np.int64)
        left[i] = new_leaf()
        right[i] = new_leaf()
        frontier += [left[i], right[i]]
    return TreeModel(
        np.array(feature, dtype=np.int16), np.array(threshold, dtype=np.float64),
        np.array(left, dtype=np.int32), np.array(right, dtype=np.int32),
        np.array(counts, dtype=np.uint32).reshape(-1, N_CLASSES),
        n_features=n_features, max_depth=int(rng.integers(1, 65536)),
        min_samples_leaf=int(rng.integers(1, 2 ** 32)), seed=int(rng.integers(0, 2 ** 63 - 1)),
        n_samples=int(rng.integers(0, 2 ** 63 - 1)),
    )


def random_model(rng: np.random.Generator, kind: int):
    d = int(rng.integers(1, 17))
    if kind == 0:
        return random_tree(rng, d)
    if kind == 1:
        trees = [random_tree(rng, d, max_nodes=15) for _ in range(int(rng.integers(1, 4)))]
        return ForestModel(trees, int(rng.integers(1, d + 1)), seeds=[t.seed for t in trees],
                           bootstrap=bool(rng.integers(0, 2)), n_features=d)
    return LogRegModel(rng.normal(0, 2, size=(N_CLASSES, d)), rng.normal(0, 1, size=N_CLASSES),
                       rng.normal(0, 10, size=d), rng.uniform(0.1, 5, size=d),
                       epochs=int(rng.integers(1, 1000)), learning_rate=float(rng.uniform(1e-4, 1)),
                       seed=int(rng.integers(0, 2 ** 63 - 1)))


def toy_data(seed=0, n=300, d=5, n_classes=4):
    """Gaussian blobs, one per class, in d dimensions."""
    rng = np.random.default_rng(seed)
    y = rng.integers(0, n_classes, size=n)
    centers = rng.normal(0, 3, size=(n_classes, d))
    X = centers[y] + rng.normal(0, 1, size=(n, d))
    return X, y.astype(np.int64)


class TestGini(unittest.TestCase):

    def test_hand_values(self):
        self.assertEqual(gini([10, 0, 0, 0, 0, 0]), 0.0)
        self.assertAlmostEqual(gini([5, 5, 0, 0, 0, 0]), 0.5)
        self.assertAlmostEqual(gini([2, 1, 1, 0, 0, 0]), 0.625)

    def test_all_zero(self):
        with self.assertRaises(DomainError):
            gini([0, 0, 0, 0, 0, 0])
        with self.assertRaises(ValueError):
            gini([0, 0])

    def test_negative(self):
        with self.assertRaises(DomainError):
            gini([3, -1])


class TestTree(unittest.TestCase):
    """Test fit_tree."""

    def test_single_class(self):
        X = np.random.default_rng(0).normal(size=(20, 3))
        tree = fit_tree((X, np.full(20, 4, dtype=np.int64)))
        self.assertEqual(tree.n_nodes, 1)
        self.assertEqual(tree.depth(), 0)
        self.assertTrue((tree.predict_many(X) == 4).all())

    def test_separable_1d(self):
        X = np.array([[-3.0], [-2.0], [-1.0], [1.0], [2.0], [4.0]])
        y = np.array([1, 1, 1, 2, 2, 2])
        tree = fit_tree((X, y), min_samples_leaf=1)
        self.assertEqual(tree.n_nodes, 3)
        self.assertEqual(int(tree.feature[0]), 0)
        self.assertEqual(float(tree.threshold[0]), 0.0)
        self.assertTrue((tree.predict_many(X) == y).all())

    def test_stump_matches_brute_force(self):
        rng = np.random.default_rng(42)
        for _ in range(100):
            n = int(rng.integers(5, 201))
            d = int(rng.integers(1, 5))
            X = rng.integers(0, 12, size=(n, d)).astype(np.float64)
            y = rng.integers(0, int(rng.integers(2, 7)), size=n)
            tree = fit_tree((X, y), max_depth=1, min_samples_leaf=1)
            expected = brute_force_stump(X, y)
            got = (int(tree.feature[0]), float(tree.threshold[0])) if tree.feature[0] >= 0 else (-1, 0.0)
            self.assertEqual(got, expected)

    def test_depth_two_root_matches_brute_force(self):
        rng = np.random.default_rng(7)
        X = rng.normal(size=(50, 4))
        y = rng.integers(0, 3, size=50)
        tree = fit_tree((X, y), max_depth=2, min_samples_leaf=1)
        j, t = brute_force_stump(X, y)
        self.assertEqual(int(tree.feature[0]), j)
        self.assertAlmostEqual(float(tree.threshold[0]), t)
        self.assertLessEqual(tree.depth(), 2)

    def test_tie_prefers_lower_feature(self):
        X = np.array([[0.0, 0.0], [0.0, 0.0], [1.0, 1.0], [1.0, 1.0]])
        y = np.array([0, 0, 3, 3])
        tree = fit_tree((X, y), min_samples_leaf=1)
        self.assertEqual(int(tree.feature[0]), 0)

    def test_min_samples_leaf(self):
        X, y = toy_data(1)
        tree = fit_tree((X, y), min_samples_leaf=10)
        leaves = tree.counts[tree.feature < 0].sum(axis=1)
        self.assertGreaterEqual(int(leaves.min()), 10)

    def test_max_depth(self):
        X, y = toy_data(2, n_classes=6)
        self.assertLessEqual(fit_tree((X, y), max_depth=3).depth(), 3)
        self.assertEqual(fit_tree((X, y), max_depth=0).n_nodes, 1)

    def test_deterministic(self):
        X, y = toy_data(3)
        a, b = fit_tree((X, y), seed=5), fit_tree((X, y), seed=5)
        self.assertEqual(serialize_model(a), serialize_model(b))

    def test_labeled_vectors(self):
        v = [LabeledVector(FeatureVector(*([float(i)] * 16)), AttackLabel(i % 2)) for i in range(10)]
        tree = fit_tree(v, min_samples_leaf=1)
        self.assertEqual(predict(tree, v[3].features), AttackLabel.Deauth)
        self.assertEqual(predict(tree, v[4].features), AttackLabel.Normal)

    def test_training_errors(self):
        with self.assertRaises(TrainingError):
            fit_tree([])
        with self.assertRaises(TrainingError):
            fit_tree((np.array([[np.nan]]), np.array([0])))
        with self.assertRaises(TrainingError):
            fit_tree((np.zeros((2, 1)), np.array([0, 9])))
        with self.assertRaises(TrainingError):
            fit_model("svm", toy_data())


class TestForest(unittest.TestCase):
    """Test fit_forest and majority voting."""

    def test_degenerate_forest_equals_tree(self):
        X, y = toy_data(4)
        forest = fit_forest((X, y), n_trees=1, features_per_split=X.shape[1], bootstrap=False, seed=9)
        tree = fit_tree((X, y))
        Xt, _ = toy_data(5)
        self.assertTrue((forest.predict_many(Xt) == tree.predict_many(Xt)).all())

    def test_pure_data(self):
        X = np.random.default_rng(0).normal(size=(30, 4))
        forest = fit_forest((X, np.full(30, 2, dtype=np.int64)), n_trees=5, seed=1)
        self.assertTrue(all(t.n_nodes == 1 for t in forest.trees))

    def test_majority_vote(self):
        forest = ForestModel([leaf_tree(AttackLabel.RogueAp), leaf_tree(AttackLabel.RogueAp),
                              leaf_tree(AttackLabel.Deauth)], features_per_split=4)
        self.assertEqual(int(forest.predict_many(np.zeros((1, 16)))[0]), int(AttackLabel.RogueAp))

    def test_tied_vote_goes_to_lower_code(self):
        forest = ForestModel([leaf_tree(AttackLabel.Krack), leaf_tree(AttackLabel.EvilTwin)],
                             features_per_split=4)
        self.assertEqual(int(forest.predict_many(np.zeros((1, 16)))[0]), int(AttackLabel.EvilTwin))

    def test_accuracy_and_determinism(self):
        X, y = toy_data(6)
        a = fit_forest((X, y), n_trees=10, seed=3)
        b = fit_forest((X, y), n_trees=10, seed=3)
        self.assertEqual(a.seeds, b.seeds)
        self.assertEqual(serialize_model(a), serialize_model(b))
        self.assertGreater(float(np.mean(a.predict_many(X) == y)), 0.9)
        self.assertEqual(a.features_per_split, 2)

    def test_bad_parameters(self):
        with self.assertRaises(TrainingError):
            fit_forest(toy_data(), n_trees=0)
        with self.assertRaises(TrainingError):
            fit_forest(toy_data(), features_per_split=99)


class TestLogReg(unittest.TestCase):
    """Test softmax regression."""

    def test_gradient_matches_finite_difference(self):
        X, y = toy_data(7, n=60, d=4, n_classes=6)
        mean, std = standardization(X)
        Z = (X - mean) / std
        Y = np.eye(6)[y]
        rng = np.random.default_rng(0)
        W = rng.normal(0, 0.01, size=(6, 4))
        b = np.zeros(6)
        _, gW, gb = softmax_loss_grad(W, b, Z, Y)
        eps = 1e-6
        numeric = np.zeros_like(W)
        for i in range(6):
            for j in range(4):
                Wp, Wm = W.copy(), W.copy()
                Wp[i, j] += eps
                Wm[i, j] -= eps
                numeric[i, j] = (softmax_loss_grad(Wp, b, Z, Y)[0] - softmax_loss_grad(Wm, b, Z, Y)[0]) / (2 * eps)
        rel = np.linalg.norm(gW - numeric) / max(np.linalg.norm(gW), np.linalg.norm(numeric))
        self.assertLess(rel, 1e-4)
        numeric_b = np.zeros(6)
        for i in range(6):
            bp, bm = b.copy(), b.copy()
            bp[i] += eps
            bm[i] -= eps
            numeric_b[i] = (softmax_loss_grad(W, bp, Z, Y)[0] - softmax_loss_grad(W, bm, Z, Y)[0]) / (2 * eps)
        self.assertLess(np.linalg.norm(gb - numeric_b) / np.linalg.norm(gb), 1e-4)

    def test_loss_non_increasing(self):
        losses = []
        fit_logreg(toy_data(8), epochs=200, learning_rate=0.1, callback=lambda e, loss: losses.append(loss))
        self.assertEqual(len(losses), 200)
        for before, after in zip(losses, losses[1:]):
            self.assertLessEqual(after, before + 1e-12)

    def test_separable_two_class(self):
        X = np.concatenate([np.linspace(-5, -1, 20), np.linspace(1, 5, 20)]).reshape(-1, 1)
        y = np.array([0] * 20 + [5] * 20)
        model = fit_logreg((X, y), epochs=500)
        self.assertEqual(float(np.mean(model.predict_many(X) == y)), 1.0)

    def test_zero_variance_feature(self):
        X, y = toy_data(9, d=3)
        X = np.hstack([X, np.full((len(X), 1), 7.0)])
        model = fit_logreg((X, y), epochs=50)
        self.assertEqual(float(model.std[-1]), 1.0)
        self.assertTrue(np.isfinite(model.weights).all())


class TestProba(unittest.TestCase):
    """Class distributions from every model kind."""

    def test_rows_are_distributions(self):
        X, y = toy_data(10, n_classes=6)
        for model in (fit_tree((X, y)), fit_forest((X, y), n_trees=5, seed=2), fit_logreg((X, y), epochs=50)):
            proba = predict_proba(model, X)
            self.assertEqual(proba.shape, (len(X), 6))
            self.assertTrue(np.allclose(proba.sum(axis=1), 1.0))
            self.assertTrue((proba >= 0).all())

    def test_argmax_matches_prediction(self):
        X, y = toy_data(11)
        for model in (fit_tree((X, y)), fit_logreg((X, y), epochs=50)):
            self.assertTrue((np.argmax(predict_proba(model, X), axis=1) == model.predict_many(X)).all())

    def test_empty_tree_is_normal(self):
        proba = predict_proba(empty_tree(), np.zeros((3, 16)))
        self.assertEqual(proba[:, int(AttackLabel.Normal)].tolist(), [1.0, 1.0, 1.0])


class TestSerialization(unittest.TestCase):
    """Test the model container."""

    def assertSamePredictions(self, a, b, seed=0):
        X = np.random.default_rng(seed).normal(0, 4, size=(1000, a.n_features))
        self.assertTrue((predict_many(a, X) == predict_many(b, X)).all())

    def test_round_trips(self):
        X, y = toy_data(10, d=16, n_classes=6)
        for model in (fit_tree((X, y)), fit_forest((X, y), n_trees=5, seed=2), fit_logreg((X, y), epochs=30)):
            data = serialize_model(model)
            self.assertTrue(data.startswith(MODEL_MAGIC))
            clone = deserialize_model(data)
            self.assertIs(type(clone), type(model))
            self.assertEqual(serialize_model(clone), data)
            self.assertSamePredictions(model, clone)

    def test_random_models_round_trip(self):
        rng = np.random.default_rng(2024)
        for i in range(10_000):
            model = random_model(rng, i % 3)
            data = serialize_model(model)
            clone = deserialize_model(data)
            self.assertIs(type(clone), type(model))
            self.assertEqual(serialize_model(clone), data)
            self.assertEqual(clone.metadata(), model.metadata())
            X = rng.normal(0, 4, size=(8, model.n_features))
            self.assertTrue((predict_many(model, X) == predict_many(clone, X)).all(), i)

    def test_file_round_trip(self):
        X, y = toy_data(11, d=16)
        model = fit_tree((X, y))
        with tempfile.TemporaryDirectory() as tmp:
            path = Path(tmp) / "tree.rids"
            size = save_model(path, model)
            self.assertEqual(size, path.stat().st_size)
            self.assertSamePredictions(model, load_model(path))

    def test_empty_tree(self):
        data = serialize_model(empty_tree())
        self.assertEqual(len(data), 37)
        tree = deserialize_model(data)
        self.assertEqual(tree.n_nodes, 0)
        self.assertTrue((tree.predict_many(np.zeros((3, 16))) == 0).all())

    def test_bad_magic(self):
        data = bytearray(serialize_model(empty_tree()))
        data[0:4] = b"XXXX"
        with self.assertRaises(ModelFormatError):
            deserialize_model(bytes(data))

    def test_bad_version(self):
        data = bytearray(serialize_model(empty_tree()))
        data[4] = 99
        with self.assertRaises(ModelFormatError) as ctx:
            deserialize_model(bytes(data))
        self.assertIn("version", str(ctx.exception))

    def test_truncated_and_trailing(self):
        data = serialize_model(fit_tree(toy_data(12)))
        for cut in (0, 3, 10, len(data) - 1):
            with self.assertRaises(ModelFormatError):
                deserialize_model(data[:cut])
        with self.assertRaises(ModelFormatError):
            deserialize_model(data + b"\x00")

    def test_missing_file(self):
        with self.assertRaises(ModelFormatError):
            load_model("/nonexistent/model.rids")


if __name__ == '__main__':
    unittest.main()
