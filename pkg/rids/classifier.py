"""
From-scratch classifiers for the controller: CART decision tree (gini),
random forest, and softmax logistic regression. Plus the versioned binary
model container.

Trees are stored as flat node arrays (feature, threshold, left, right and
per-leaf class counts) so prediction over a batch is a vectorised walk.
"""

import logging
import math
import struct
from dataclasses import dataclass, field
from pathlib import Path
from typing import Callable, List, Optional, Sequence, Tuple, Union

import numpy as np

from ._types import AttackLabel
from .errors import DomainError, ModelFormatError, TrainingError
from .features import FeatureVector, LabeledVector, N_FEATURES, vectors_to_matrix

try:
    from tqdm import tqdm
    HAS_TQDM = True
except ImportError:
    HAS_TQDM = False

logger = logging.getLogger(__name__)

N_CLASSES = len(AttackLabel)

DEFAULT_MAX_DEPTH = 12
DEFAULT_MIN_SAMPLES_LEAF = 2
DEFAULT_N_TREES = 50
DEFAULT_EPOCHS = 500
DEFAULT_LEARNING_RATE = 0.1

# Two candidate splits whose impurities differ by less than this are tied.
TIE_TOLERANCE = 1e-12

MODEL_MAGIC = b"RIDS"
MODEL_VERSION = 1
KIND_TREE = 1
KIND_FOREST = 2
KIND_LOGREG = 3
MODEL_KINDS = {"tree": KIND_TREE, "forest": KIND_FOREST, "logreg": KIND_LOGREG}


def gini(counts: Sequence[float]) -> float:
    """Gini impurity 1 - sum(p_i^2) of a class-count vector."""
    c = np.asarray(counts, dtype=np.float64)
    if c.ndim != 1 or np.any(c < 0) or not np.all(np.isfinite(c)):
        raise DomainError("gini needs a flat vector of non-negative counts")
    total = c.sum()
    if total <= 0:
        raise DomainError("gini of all-zero counts is undefined")
    p = c / total
    return float(1.0 - np.dot(p, p))


Data = Union[Sequence[LabeledVector], Tuple[np.ndarray, np.ndarray]]


def _as_arrays(data: Data) -> Tuple[np.ndarray, np.ndarray]:
    if isinstance(data, tuple) and len(data) == 2 and isinstance(data[0], np.ndarray):
        X = np.asarray(data[0], dtype=np.float64)
        y = np.asarray(data[1], dtype=np.int64)
    else:
        X, y = vectors_to_matrix(list(data))
    if X.ndim != 2 or len(X) != len(y):
        raise TrainingError(f"feature matrix shape {X.shape} does not match {len(y)} labels")
    if len(y) == 0:
        raise TrainingError("cannot train on an empty dataset")
    if not np.all(np.isfinite(X)):
        raise TrainingError("feature matrix contains non-finite values")
    if y.min() < 0 or y.max() >= N_CLASSES:
        raise TrainingError("label outside the known classes")
    return X, y


def _one_hot(y: np.ndarray) -> np.ndarray:
    out = np.zeros((len(y), N_CLASSES), dtype=np.float64)
    out[np.arange(len(y)), y] = 1.0
    return out


# Decision tree

@dataclass
class TreeModel:
    """
    A fitted CART tree.

    Node 0 is the root. ``feature[i] == -1`` marks a leaf; ``counts[i]`` holds
    the training class counts of leaf i (zero rows for internal nodes).
    """
    feature: np.ndarray
    threshold: np.ndarray
    left: np.ndarray
    right: np.ndarray
    counts: np.ndarray
    n_features: int = N_FEATURES
    max_depth: int = DEFAULT_MAX_DEPTH
    min_samples_leaf: int = DEFAULT_MIN_SAMPLES_LEAF
    seed: int = 0
    n_samples: int = 0

    @property
    def n_nodes(self) -> int:
        return len(self.feature)

    @property
    def is_leaf(self) -> np.ndarray:
        return self.feature < 0

    @property
    def value(self) -> np.ndarray:
        """Leaf class distributions (rows sum to 1 on leaves, 0 elsewhere)."""
        totals = self.counts.sum(axis=1, keepdims=True).astype(np.float64)
        return np.divide(self.counts, totals, out=np.zeros(self.counts.shape), where=totals > 0)

    def depth(self) -> int:
        if self.n_nodes == 0:
            return 0
        depths = np.zeros(self.n_nodes, dtype=np.int64)
        for i in range(self.n_nodes):
            if self.feature[i] >= 0:
                depths[self.left[i]] = depths[i] + 1
                depths[self.right[i]] = depths[i] + 1
        return int(depths.max())

    def leaf_index(self, X: np.ndarray) -> np.ndarray:
        node = np.zeros(len(X), dtype=np.int64)
        active = np.flatnonzero(self.feature[node] >= 0)
        while active.size:
            cur = node[active]
            go_left = X[active, self.feature[cur]] <= self.threshold[cur]
            node[active] = np.where(go_left, self.left[cur], self.right[cur])
            active = active[self.feature[node[active]] >= 0]
        return node

    def predict_proba(self, X: np.ndarray) -> np.ndarray:
        X = _matrix(X)
        if self.n_nodes == 0:
            proba = np.zeros((len(X), N_CLASSES))
            proba[:, int(AttackLabel.Normal)] = 1.0
            return proba
        return self.value[self.leaf_index(X)]

    def predict_many(self, X: np.ndarray) -> np.ndarray:
        X = _matrix(X)
        if self.n_nodes == 0:
            return np.full(len(X), int(AttackLabel.Normal), dtype=np.int64)
        # argmax keeps the lowest class code among equal counts.
        return np.argmax(self.counts[self.leaf_index(X)], axis=1).astype(np.int64)

    def metadata(self) -> dict:
        return {
            "kind": "tree", "max_depth": self.max_depth, "min_samples_leaf": self.min_samples_leaf,
            "seed": self.seed, "n_samples": self.n_samples, "n_nodes": self.n_nodes,
        }


def empty_tree(n_features: int = N_FEATURES) -> TreeModel:
    return TreeModel(
        feature=np.zeros(0, dtype=np.int16),
        threshold=np.zeros(0, dtype=np.float64),
        left=np.zeros(0, dtype=np.int32),
        right=np.zeros(0, dtype=np.int32),
        counts=np.zeros((0, N_CLASSES), dtype=np.uint32),
        n_features=n_features,
    )


def best_split(X: np.ndarray, Y: np.ndarray, features: Sequence[int],
               min_samples_leaf: int) -> Tuple[int, float, float]:
    """
    Best gini split of one node.

    Args:
        X: Node samples
        Y: One-hot labels of the node samples
        features: Candidate feature indices, ascending
        min_samples_leaf: Minimum samples on each side

    Returns:
        Tuple of (feature, threshold, gain); feature is -1 when no split
        improves impurity.
    """
    n = len(X)
    parent = Y.sum(axis=0)
    parent_gini = 1.0 - float(np.dot(parent, parent)) / (n * n)
    best_feature, best_threshold, best_gain = -1, 0.0, TIE_TOLERANCE
    left_n = np.arange(1, n, dtype=np.float64)
    right_n = n - left_n
    size_ok = (left_n >= min_samples_leaf) & (right_n >= min_samples_leaf)
    if not size_ok.any():
        return best_feature, best_threshold, 0.0

    for j in features:
        order = np.argsort(X[:, j], kind="stable")
        xs = X[order, j]
        valid = size_ok & (xs[:-1] < xs[1:])
        if not valid.any():
            continue
        left_counts = np.cumsum(Y[order], axis=0)[:-1]
        right_counts = parent - left_counts
        left_gini = 1.0 - np.sum(left_counts * left_counts, axis=1) / (left_n * left_n)
        right_gini = 1.0 - np.sum(right_counts * right_counts, axis=1) / (right_n * right_n)
        weighted = (left_n * left_gini + right_n * right_gini) / n
        weighted[~valid] = np.inf
        lowest = weighted.min()
        # Earliest position among ties is the lowest threshold.
        i = int(np.flatnonzero(weighted <= lowest + TIE_TOLERANCE)[0])
        gain = parent_gini - float(weighted[i])
        if gain > best_gain + TIE_TOLERANCE or (best_feature < 0 and gain > TIE_TOLERANCE):
            best_feature, best_threshold, best_gain = int(j), float((xs[i] + xs[i + 1]) / 2.0), gain

    if best_feature < 0:
        return -1, 0.0, 0.0
    return best_feature, best_threshold, best_gain


class _TreeBuilder:
    def __init__(self, X: np.ndarray, Y: np.ndarray, max_depth: int, min_samples_leaf: int,
                 features_per_split: Optional[int], rng: Optional[np.random.Generator]):
        self.X = X
        self.Y = Y
        self.max_depth = max_depth
        self.min_samples_leaf = min_samples_leaf
        self.features_per_split = features_per_split
        self.rng = rng
        self.feature: List[int] = []
        self.threshold: List[float] = []
        self.left: List[int] = []
        self.right: List[int] = []
        self.counts: List[np.ndarray] = []

    def _candidates(self) -> Sequence[int]:
        d = self.X.shape[1]
        k = self.features_per_split
        if k is None or k >= d:
            return range(d)
        return sorted(int(j) for j in self.rng.choice(d, size=k, replace=False))

    def _new_node(self) -> int:
        self.feature.append(-1)
        self.threshold.append(0.0)
        self.left.append(-1)
        self.right.append(-1)
        self.counts.append(np.zeros(N_CLASSES))
        return len(self.feature) - 1

    def build(self, idx: np.ndarray, depth: int) -> int:
        node = self._new_node()
        Y = self.Y[idx]
        class_counts = Y.sum(axis=0)
        pure = np.count_nonzero(class_counts) <= 1
        if pure or depth >= self.max_depth or len(idx) < 2 * self.min_samples_leaf:
            self.counts[node] = class_counts
            return node
        feat, thr, _ = best_split(self.X[idx], Y, self._candidates(), self.min_samples_leaf)
        if feat < 0:
            self.counts[node] = class_counts
            return node
        go_left = self.X[idx, feat] <= thr
        self.feature[node] = feat
        self.threshold[node] = thr
        self.left[node] = self.build(idx[go_left], depth + 1)
        self.right[node] = self.build(idx[~go_left], depth + 1)
        return node

    def model(self, **meta) -> TreeModel:
        return TreeModel(
            feature=np.array(self.feature, dtype=np.int16),
            threshold=np.array(self.threshold, dtype=np.float64),
            left=np.array(self.left, dtype=np.int32),
            right=np.array(self.right, dtype=np.int32),
            counts=np.array(self.counts, dtype=np.uint32).reshape(-1, N_CLASSES),
            n_features=self.X.shape[1],
            **meta,
        )


def _fit_tree_arrays(X: np.ndarray, y: np.ndarray, max_depth: int, min_samples_leaf: int,
                     seed: int, features_per_split: Optional[int] = None,
                     rng: Optional[np.random.Generator] = None) -> TreeModel:
    if max_depth < 0:
        raise TrainingError("max_depth cannot be negative")
    if min_samples_leaf < 1:
        raise TrainingError("min_samples_leaf must be at least 1")
    builder = _TreeBuilder(X, _one_hot(y), max_depth, min_samples_leaf, features_per_split,
                           rng if rng is not None else np.random.default_rng(seed))
    builder.build(np.arange(len(y)), 0)
    return builder.model(max_depth=max_depth, min_samples_leaf=min_samples_leaf,
                         seed=seed, n_samples=len(y))


def fit_tree(data: Data, max_depth: int = DEFAULT_MAX_DEPTH,
             min_samples_leaf: int = DEFAULT_MIN_SAMPLES_LEAF, seed: int = 0) -> TreeModel:
    """
    Grow a CART tree by greedy best-gini splits over every feature.

    Args:
        data: LabeledVectors, or an (X, y) pair of arrays
        max_depth: Maximum depth (0 gives a single leaf)
        min_samples_leaf: Minimum samples on each side of a split
        seed: Recorded in the model metadata

    Returns:
        Fitted TreeModel
    """
    X, y = _as_arrays(data)
    model = _fit_tree_arrays(X, y, max_depth, min_samples_leaf, seed)
    logger.info("fitted tree: %d samples, %d nodes, depth %d", len(y), model.n_nodes, model.depth())
    return model


# Random forest

@dataclass
class ForestModel:
    trees: List[TreeModel]
    features_per_split: int
    seeds: List[int] = field(default_factory=list)
    bootstrap: bool = True
    n_features: int = N_FEATURES

    def votes(self, X: np.ndarray) -> np.ndarray:
        X = _matrix(X)
        counts = np.zeros((len(X), N_CLASSES), dtype=np.int64)
        rows = np.arange(len(X))
        for tree in self.trees:
            counts[rows, tree.predict_many(X)] += 1
        return counts

    def predict_many(self, X: np.ndarray) -> np.ndarray:
        # Ties go to the lower class code.
        return np.argmax(self.votes(X), axis=1).astype(np.int64)

    def predict_proba(self, X: np.ndarray) -> np.ndarray:
        X = _matrix(X)
        return sum(tree.predict_proba(X) for tree in self.trees) / len(self.trees)

    def metadata(self) -> dict:
        return {
            "kind": "forest", "n_trees": len(self.trees), "features_per_split": self.features_per_split,
            "bootstrap": self.bootstrap, "n_nodes": sum(t.n_nodes for t in self.trees),
        }


def default_features_per_split(n_features: int) -> int:
    return max(1, int(round(math.sqrt(n_features))))


def fit_forest(data: Data, n_trees: int = DEFAULT_N_TREES, features_per_split: Optional[int] = None,
               max_depth: int = DEFAULT_MAX_DEPTH, seed: int = 0,
               min_samples_leaf: int = DEFAULT_MIN_SAMPLES_LEAF, bootstrap: bool = True,
               progress: bool = False) -> ForestModel:
    """
    Grow ``n_trees`` trees, each on a bootstrap resample (or the data itself
    when ``bootstrap`` is false) with ``features_per_split`` random features
    considered at every split.
    """
    X, y = _as_arrays(data)
    if n_trees < 1:
        raise TrainingError("a forest needs at least one tree")
    d = X.shape[1]
    k = default_features_per_split(d) if features_per_split is None else features_per_split
    if not 1 <= k <= d:
        raise TrainingError(f"features_per_split must be in 1..{d}")

    master = np.random.default_rng(seed)
    seeds = [int(s) for s in master.integers(0, 2 ** 63 - 1, size=n_trees)]
    iterator = seeds
    if progress and HAS_TQDM:
        iterator = tqdm(seeds, desc="Growing trees", unit="tree")
    trees = []
    for tree_seed in iterator:
        rng = np.random.default_rng(tree_seed)
        if bootstrap:
            idx = rng.integers(0, len(y), size=len(y))
        else:
            idx = np.arange(len(y))
        trees.append(_fit_tree_arrays(X[idx], y[idx], max_depth, min_samples_leaf, tree_seed,
                                      features_per_split=k, rng=rng))
    logger.info("fitted forest: %d trees, %d features per split", n_trees, k)
    return ForestModel(trees=trees, features_per_split=k, seeds=seeds, bootstrap=bootstrap, n_features=d)


# Logistic regression

@dataclass
class LogRegModel:
    weights: np.ndarray
    bias: np.ndarray
    mean: np.ndarray
    std: np.ndarray
    epochs: int = DEFAULT_EPOCHS
    learning_rate: float = DEFAULT_LEARNING_RATE
    seed: int = 0

    @property
    def n_features(self) -> int:
        return self.weights.shape[1]

    def standardize(self, X: np.ndarray) -> np.ndarray:
        return (_matrix(X) - self.mean) / self.std

    def predict_proba(self, X: np.ndarray) -> np.ndarray:
        return softmax(self.standardize(X) @ self.weights.T + self.bias)

    def predict_many(self, X: np.ndarray) -> np.ndarray:
        return np.argmax(self.predict_proba(X), axis=1).astype(np.int64)

    def metadata(self) -> dict:
        return {"kind": "logreg", "epochs": self.epochs, "learning_rate": self.learning_rate, "seed": self.seed}


def softmax(logits: np.ndarray) -> np.ndarray:
    z = logits - logits.max(axis=1, keepdims=True)
    e = np.exp(z)
    return e / e.sum(axis=1, keepdims=True)


def softmax_loss_grad(W: np.ndarray, b: np.ndarray, Z: np.ndarray,
                      Y: np.ndarray) -> Tuple[float, np.ndarray, np.ndarray]:
    """Mean cross-entropy of softmax(Z W^T + b) against one-hot Y, and its gradients."""
    P = softmax(Z @ W.T + b)
    n = len(Z)
    loss = -float(np.sum(Y * np.log(np.clip(P, 1e-300, None)))) / n
    delta = (P - Y) / n
    return loss, delta.T @ Z, delta.sum(axis=0)


def standardization(X: np.ndarray) -> Tuple[np.ndarray, np.ndarray]:
    """Per-feature mean and std; zero-variance features get std 1."""
    mean = X.mean(axis=0)
    std = X.std(axis=0)
    std = np.where(std > 1e-12, std, 1.0)
    return mean, std


def fit_logreg(data: Data, epochs: int = DEFAULT_EPOCHS, learning_rate: float = DEFAULT_LEARNING_RATE,
               seed: int = 0, callback: Optional[Callable[[int, float], None]] = None) -> LogRegModel:
    """
    Multiclass softmax regression by full-batch gradient descent on
    standardized features.

    Args:
        data: LabeledVectors, or an (X, y) pair of arrays
        epochs: Gradient steps
        learning_rate: Step size
        seed: Seeds the small random weight initialization
        callback: Called as callback(epoch, loss) with the loss before each step

    Returns:
        Fitted LogRegModel
    """
    X, y = _as_arrays(data)
    if epochs < 0 or learning_rate <= 0:
        raise TrainingError("epochs must be >= 0 and learning_rate > 0")
    mean, std = standardization(X)
    Z = (X - mean) / std
    Y = _one_hot(y)
    rng = np.random.default_rng(seed)
    W = rng.normal(0.0, 0.01, size=(N_CLASSES, X.shape[1]))
    b = np.zeros(N_CLASSES)
    loss = float("nan")
    for epoch in range(epochs):
        loss, gW, gb = softmax_loss_grad(W, b, Z, Y)
        if callback is not None:
            callback(epoch, loss)
        W -= learning_rate * gW
        b -= learning_rate * gb
    logger.info("fitted logreg: %d samples, %d epochs, last loss %.6f", len(y), epochs, loss)
    return LogRegModel(W, b, mean, std, epochs=epochs, learning_rate=learning_rate, seed=seed)


# Common interface

Model = Union[TreeModel, ForestModel, LogRegModel]


def _matrix(X) -> np.ndarray:
    X = np.asarray(X, dtype=np.float64)
    if X.ndim == 1:
        X = X.reshape(1, -1)
    return X


def predict_many(model: Model, X) -> np.ndarray:
    """Class codes for every row of X."""
    return model.predict_many(_matrix(X))


def predict_proba(model: Model, X) -> np.ndarray:
    return model.predict_proba(_matrix(X))


def predict(model: Model, v: FeatureVector) -> AttackLabel:
    return AttackLabel(int(model.predict_many(_matrix(tuple(v)))[0]))


def fit_model(kind: str, data: Data, seed: int = 0, progress: bool = False) -> Model:
    """Fit one of the MODEL_KINDS with its default hyperparameters."""
    if kind == "tree":
        return fit_tree(data, seed=seed)
    if kind == "forest":
        return fit_forest(data, seed=seed, progress=progress)
    if kind == "logreg":
        return fit_logreg(data, seed=seed)
    raise TrainingError(f"unknown model kind {kind!r}; choose from {', '.join(MODEL_KINDS)}")


# Serialization

_HEADER = struct.Struct("<4sHB")
_TREE_HEAD = struct.Struct("<IHIQQI")
_FOREST_HEAD = struct.Struct("<IIBI")
_TREE_ENTRY = struct.Struct("<QI")
_LOGREG_HEAD = struct.Struct("<IIIdQ")


def _tree_payload(tree: TreeModel) -> bytes:
    head = _TREE_HEAD.pack(tree.n_features, tree.max_depth, tree.min_samples_leaf,
                           tree.seed, tree.n_samples, tree.n_nodes)
    leaves = tree.counts[tree.feature < 0]
    return b"".join([
        head,
        tree.feature.astype("<i2").tobytes(),
        tree.threshold.astype("<f8").tobytes(),
        tree.left.astype("<i4").tobytes(),
        tree.right.astype("<i4").tobytes(),
        leaves.astype("<u4").tobytes(),
    ])


class _Reader:
    def __init__(self, data: bytes, offset: int = 0):
        self.data = data
        self.offset = offset

    def take(self, n: int) -> bytes:
        if self.offset + n > len(self.data):
            raise ModelFormatError(f"model truncated at byte {len(self.data)}, needed {self.offset + n}")
        chunk = self.data[self.offset:self.offset + n]
        self.offset += n
        return chunk

    def unpack(self, st: struct.Struct) -> tuple:
        return st.unpack(self.take(st.size))

    def array(self, dtype: str, count: int) -> np.ndarray:
        dt = np.dtype(dtype)
        return np.frombuffer(self.take(dt.itemsize * count), dtype=dt).copy()


def _read_tree(r: _Reader) -> TreeModel:
    n_features, max_depth, min_leaf, seed, n_samples, n_nodes = r.unpack(_TREE_HEAD)
    feature = r.array("<i2", n_nodes).astype(np.int16)
    threshold = r.array("<f8", n_nodes).astype(np.float64)
    left = r.array("<i4", n_nodes).astype(np.int32)
    right = r.array("<i4", n_nodes).astype(np.int32)
    leaf_mask = feature < 0
    counts = np.zeros((n_nodes, N_CLASSES), dtype=np.uint32)
    counts[leaf_mask] = r.array("<u4", int(leaf_mask.sum()) * N_CLASSES).reshape(-1, N_CLASSES)
    internal = ~leaf_mask
    if np.any(feature[internal] >= n_features) or np.any(left[internal] < 0) or \
            np.any(left[internal] >= n_nodes) or np.any(right[internal] < 0) or \
            np.any(right[internal] >= n_nodes):
        raise ModelFormatError("tree references a missing node or feature")
    return TreeModel(feature, threshold, left, right, counts, n_features=n_features,
                     max_depth=max_depth, min_samples_leaf=min_leaf, seed=seed, n_samples=n_samples)


def serialize_model(model: Model) -> bytes:
    """Encode a model into the versioned "RIDS" container."""
    if isinstance(model, TreeModel):
        return _HEADER.pack(MODEL_MAGIC, MODEL_VERSION, KIND_TREE) + _tree_payload(model)
    if isinstance(model, ForestModel):
        parts = [
            _HEADER.pack(MODEL_MAGIC, MODEL_VERSION, KIND_FOREST),
            _FOREST_HEAD.pack(model.n_features, model.features_per_split, int(model.bootstrap),
                              len(model.trees)),
        ]
        seeds = model.seeds or [t.seed for t in model.trees]
        for seed, tree in zip(seeds, model.trees):
            payload = _tree_payload(tree)
            parts.append(_TREE_ENTRY.pack(seed, len(payload)))
            parts.append(payload)
        return b"".join(parts)
    if isinstance(model, LogRegModel):
        n_classes, d = model.weights.shape
        return b"".join([
            _HEADER.pack(MODEL_MAGIC, MODEL_VERSION, KIND_LOGREG),
            _LOGREG_HEAD.pack(n_classes, d, model.epochs, model.learning_rate, model.seed),
            model.weights.astype("<f8").tobytes(),
            model.bias.astype("<f8").tobytes(),
            model.mean.astype("<f8").tobytes(),
            model.std.astype("<f8").tobytes(),
        ])
    raise TypeError(f"cannot serialize {type(model).__name__}")


def deserialize_model(data: bytes) -> Model:
    """Decode a model container; bad magic, version or length raise ModelFormatError."""
    r = _Reader(bytes(data))
    magic, version, kind = r.unpack(_HEADER)
    if magic != MODEL_MAGIC:
        raise ModelFormatError(f"bad magic {magic!r}")
    if version != MODEL_VERSION:
        raise ModelFormatError(f"unsupported model format version {version} (expected {MODEL_VERSION})")
    if kind == KIND_TREE:
        model = _read_tree(r)
    elif kind == KIND_FOREST:
        n_features, k, bootstrap, n_trees = r.unpack(_FOREST_HEAD)
        if n_trees < 1:
            raise ModelFormatError("forest has no trees")
        trees, seeds = [], []
        for _ in range(n_trees):
            seed, length = r.unpack(_TREE_ENTRY)
            end = r.offset + length
            tree = _read_tree(r)
            if r.offset != end:
                raise ModelFormatError("tree payload length mismatch")
            if tree.n_features != n_features:
                raise ModelFormatError("trees disagree on feature count")
            trees.append(tree)
            seeds.append(seed)
        model = ForestModel(trees, k, seeds=seeds, bootstrap=bool(bootstrap), n_features=n_features)
    elif kind == KIND_LOGREG:
        n_classes, d, epochs, lr, seed = r.unpack(_LOGREG_HEAD)
        W = r.array("<f8", n_classes * d).reshape(n_classes, d)
        b = r.array("<f8", n_classes)
        mean = r.array("<f8", d)
        std = r.array("<f8", d)
        model = LogRegModel(W, b, mean, std, epochs=epochs, learning_rate=lr, seed=seed)
    else:
        raise ModelFormatError(f"unknown model kind {kind}")
    if r.offset != len(r.data):
        raise ModelFormatError(f"{len(r.data) - r.offset} trailing bytes after model")
    return model


def save_model(path: Union[str, Path], model: Model) -> int:
    data = serialize_model(model)
    Path(path).write_bytes(data)
    logger.info("wrote %s model to %s (%d bytes)", type(model).__name__, path, len(data))
    return len(data)


def load_model(path: Union[str, Path]) -> Model:
    try:
        data = Path(path).read_bytes()
    except OSError as e:
        raise ModelFormatError(f"cannot read {path}: {e.strerror}") from None
    model = deserialize_model(data)
    logger.info("loaded %s model from %s", type(model).__name__, path)
    return model
