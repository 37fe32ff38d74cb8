"""Downstream tasks over embeddings: node classification and hyperedge
prediction, with the metric plumbing (splits, negatives, AUC).
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.stats import rankdata

from .core import DataError, Hypergraph, _offsets_from_counts
from .coarsening import _mix64

_MASK = 0xFFFFFFFFFFFFFFFF


@dataclass(frozen=True)
class Split:
    """One seeded train/test partition of a labeled set."""

    train_ids: np.ndarray
    test_ids: np.ndarray
    fraction: float
    seed: int


def make_split(num_items, fraction, seed) -> Split:
    """Random split keeping both sides nonempty; train size = round(f*n)."""
    if num_items < 2:
        raise DataError("need at least two labeled items to split")
    if not 0.0 < fraction < 1.0:
        raise ValueError("fraction must lie strictly between 0 and 1")
    rng = np.random.default_rng(seed)
    perm = rng.permutation(num_items)
    n_train = int(round(fraction * num_items))
    n_train = min(max(n_train, 1), num_items - 1)
    return Split(np.sort(perm[:n_train]), np.sort(perm[n_train:]),
                 fraction, seed)


def _softmax(scores):
    shifted = scores - scores.max(axis=1, keepdims=True)
    e = np.exp(shifted)
    return e / e.sum(axis=1, keepdims=True)


def cross_entropy_loss(weights, bias, X, y, l2=0.0) -> float:
    """Mean cross-entropy of a linear softmax model, plus L2 penalty."""
    probs = _softmax(X @ weights.T + bias)
    n = len(y)
    nll = -np.log(np.maximum(probs[np.arange(n), y], 1e-300)).mean()
    return float(nll + 0.5 * l2 * np.sum(weights * weights))


def cross_entropy_gradients(weights, bias, X, y, l2=0.0):
    """Analytic gradients of :func:`cross_entropy_loss` w.r.t. W and b."""
    n = len(y)
    probs = _softmax(X @ weights.T + bias)
    probs[np.arange(n), y] -= 1.0
    grad_w = probs.T @ X / n + l2 * weights
    grad_b = probs.sum(axis=0) / n
    return grad_w, grad_b


@dataclass
class LogisticModel:
    """Linear softmax classifier; ``weights`` is (num_classes, dim)."""

    weights: np.ndarray
    bias: np.ndarray
    loss_history: list
    trained: bool = True

    @property
    def num_classes(self) -> int:
        return self.weights.shape[0]

    def decision(self, X) -> np.ndarray:
        return X @ self.weights.T + self.bias

    def predict_proba(self, X) -> np.ndarray:
        return _softmax(self.decision(X))

    def predict(self, X) -> np.ndarray:
        return np.argmax(self.decision(X), axis=1)


def train_classifier(X, y, num_classes=None, learning_rate=0.5,
                     epochs=300, l2=0.0) -> LogisticModel:
    """Fit multinomial logistic regression by full-batch gradient descent.

    Every class in ``[0, num_classes)`` must appear in ``y``. The recorded
    ``loss_history`` decreases monotonically for small enough rates.
    """
    X = np.asarray(X, dtype=np.float64)
    y = np.asarray(y, dtype=np.int64)
    if X.ndim != 2 or len(X) != len(y) or len(y) == 0:
        raise DataError("training data and labels must align and be nonempty")
    if num_classes is None:
        num_classes = int(y.max()) + 1
    present = np.bincount(y, minlength=num_classes)
    for c in range(num_classes):
        if present[c] == 0:
            raise DataError(f"class absent from training data: {c}")

    weights = np.zeros((num_classes, X.shape[1]))
    bias = np.zeros(num_classes)
    history = []
    for _ in range(epochs):
        history.append(cross_entropy_loss(weights, bias, X, y, l2))
        grad_w, grad_b = cross_entropy_gradients(weights, bias, X, y, l2)
        weights -= learning_rate * grad_w
        bias -= learning_rate * grad_b
    history.append(cross_entropy_loss(weights, bias, X, y, l2))
    if not (np.all(np.isfinite(weights)) and np.all(np.isfinite(bias))):
        raise DataError("classifier diverged; lower the learning rate")
    return LogisticModel(weights, bias, history)


@dataclass
class ClassificationReport:
    """Accuracy distribution over repeated train/test splits."""

    accuracies: np.ndarray
    fraction: float
    seed: int

    @property
    def mean(self) -> float:
        return float(self.accuracies.mean())

    @property
    def std(self) -> float:
        return float(self.accuracies.std())

    def to_csv(self, stream):
        stream.write("split,accuracy,std\n")
        for i, acc in enumerate(self.accuracies):
            stream.write(f"{i},{float(acc)!r},\n")
        stream.write(f"aggregate,{self.mean!r},{self.std!r}\n")


def evaluate_classification(X, y, num_splits=100, fraction=0.04, seed=0,
                            learning_rate=0.5, epochs=300,
                            l2=0.0) -> ClassificationReport:
    """Mean/std test accuracy over seeded random splits.

    ``X`` holds the embedding rows of the labeled nodes, aligned with
    ``y``. Each split trains a fresh classifier on ``fraction`` of the
    rows and scores the rest.
    """
    X = np.asarray(X, dtype=np.float64)
    y = np.asarray(y, dtype=np.int64)
    if len(X) != len(y):
        raise DataError("embedding rows and labels must align")
    num_classes = int(y.max()) + 1
    accuracies = np.empty(num_splits)
    for i in range(num_splits):
        split = make_split(len(y), fraction, (seed, i))
        model = train_classifier(X[split.train_ids], y[split.train_ids],
                                 num_classes=num_classes,
                                 learning_rate=learning_rate,
                                 epochs=epochs, l2=l2)
        pred = model.predict(X[split.test_ids])
        accuracies[i] = np.mean(pred == y[split.test_ids])
    return ClassificationReport(accuracies, fraction, seed)


def hyperedge_feature(members, emb) -> np.ndarray:
    """Per-dimension population variance of the member nodes' embeddings.

    Tight groups of co-embedded nodes score near zero; scattered tuples
    score high, which is what separates plausible hyperedges from noise.
    """
    members = np.sort(np.asarray(members, dtype=np.int64))  # order-independent
    if len(members) < 2:
        raise DataError("hyperedge tuples need at least two members")
    if members.min() < 0 or members.max() >= len(emb):
        raise DataError(f"unknown id in tuple: {int(members.max())}")
    return np.var(emb[members], axis=0)


def split_hyperedge_holdout(h: Hypergraph, fraction, seed):
    """Hide a seeded fraction of hyperedges.

    Returns ``(visible, hidden_ids)`` where ``visible`` keeps the full
    node universe (ids stay aligned) even if hiding leaves some nodes
    without memberships.
    """
    if not 0.0 <= fraction < 1.0:
        raise ValueError("fraction must lie in [0, 1)")
    rng = np.random.default_rng(seed)
    n_hidden = int(round(fraction * h.num_hyperedges))
    n_hidden = min(n_hidden, h.num_hyperedges - 1)
    hidden_ids = np.sort(rng.permutation(h.num_hyperedges)[:n_hidden])

    keep = np.ones(h.num_hyperedges, dtype=bool)
    keep[hidden_ids] = False
    keep_mask = np.repeat(keep, h.pin_counts)
    visible = Hypergraph(h.num_nodes,
                         _offsets_from_counts(h.pin_counts[keep]),
                         h.pin_nodes[keep_mask],
                         weights=h.hyperedge_weights[keep],
                         features=h.node_features)
    return visible, hidden_ids


def sample_negatives(h: Hypergraph, ratio, seed, hyperedge_ids=None) -> list:
    """Draw ``ratio`` size-matched random node tuples per positive.

    Candidates are uniform node sets rejected when they equal an existing
    hyperedge's pin set. Raises when the rejection rate exceeds 99%.
    """
    if ratio < 1:
        raise ValueError("ratio must be at least 1")
    if hyperedge_ids is None:
        hyperedge_ids = np.arange(h.num_hyperedges)
    existing = {frozenset(h.pins(e).tolist()) for e in range(h.num_hyperedges)}
    rng = np.random.default_rng(seed)

    negatives = []
    attempts = 0
    accepted = 0
    for e in hyperedge_ids:
        size = int(h.pin_counts[e])
        for _ in range(ratio):
            while True:
                attempts += 1
                if attempts >= 1000 and accepted < attempts * 0.01:
                    raise DataError(
                        "hypergraph too dense to sample negatives "
                        "(rejection rate above 99%)")
                candidate = rng.choice(h.num_nodes, size=size, replace=False)
                if frozenset(candidate.tolist()) not in existing:
                    accepted += 1
                    negatives.append(np.sort(candidate))
                    break
    return negatives


def auc_score(positive_scores, negative_scores) -> float:
    """Probability a random positive outranks a random negative.

    Computed from average ranks (ties shared), which matches the area
    under the ROC curve exactly.
    """
    pos = np.asarray(positive_scores, dtype=np.float64)
    neg = np.asarray(negative_scores, dtype=np.float64)
    if len(pos) == 0 or len(neg) == 0:
        raise DataError("AUC needs at least one positive and one negative")
    ranks = rankdata(np.concatenate([pos, neg]), method="average")
    u = ranks[:len(pos)].sum() - len(pos) * (len(pos) + 1) / 2.0
    return float(u / (len(pos) * len(neg)))


@dataclass
class PredictionReport:
    """Outcome of one hyperedge-prediction run."""

    auc: float
    num_positives: int
    num_negatives: int
    seed: int

    def to_csv(self, stream):
        stream.write("run,auc,positives,negatives\n")
        stream.write(f"0,{self.auc!r},{self.num_positives},{self.num_negatives}\n")
        stream.write(f"aggregate,{self.auc!r},{self.num_positives},"
                     f"{self.num_negatives}\n")


def evaluate_hyperedge_prediction(h: Hypergraph, emb, hidden_fraction=0.2,
                                  ratio=5, seed=0, hidden_ids=None,
                                  test_fraction=0.5, learning_rate=0.5,
                                  epochs=300, l2=0.0) -> PredictionReport:
    """Score how well variance features separate hidden hyperedges from
    random tuples.

    ``emb`` must come from an embedding of the hypergraph with the hidden
    hyperedges removed (see :func:`split_hyperedge_holdout`); pass the
    same ``hidden_ids``, or leave None to re-derive them from the seed.
    A binary classifier is fit on half the tuples (stratified) and the
    AUC is computed on the held-out half.
    """
    emb = np.asarray(emb, dtype=np.float64)
    if emb.shape[0] < h.num_nodes:
        raise DataError("embedding does not cover all nodes")
    if hidden_ids is None:
        _, hidden_ids = split_hyperedge_holdout(h, hidden_fraction, seed)
    hidden_ids = np.asarray(hidden_ids, dtype=np.int64)
    if len(hidden_ids) < 10:
        raise DataError("too few hyperedges")

    positives = [h.pins(e) for e in hidden_ids]
    neg_seed = int(_mix64(np.uint64((seed + 1) & _MASK)))
    negatives = sample_negatives(h, ratio, neg_seed, hyperedge_ids=hidden_ids)

    feats = np.array([hyperedge_feature(t, emb)
                      for t in positives + negatives])
    labels = np.concatenate([np.ones(len(positives), dtype=np.int64),
                             np.zeros(len(negatives), dtype=np.int64)])

    # stratified half/half split keeps both classes on both sides
    rng = np.random.default_rng((seed, 0x5B17))
    train_idx, test_idx = [], []
    for cls in (0, 1):
        ids = np.flatnonzero(labels == cls)
        perm = rng.permutation(ids)
        cut = max(1, int(round(len(ids) * (1.0 - test_fraction))))
        cut = min(cut, len(ids) - 1)
        train_idx.append(perm[:cut])
        test_idx.append(perm[cut:])
    train_idx = np.concatenate(train_idx)
    test_idx = np.concatenate(test_idx)

    model = train_classifier(feats[train_idx], labels[train_idx],
                             num_classes=2, learning_rate=learning_rate,
                             epochs=epochs, l2=l2)
    scores = model.predict_proba(feats[test_idx])[:, 1]
    test_labels = labels[test_idx]
    auc = auc_score(scores[test_labels == 1], scores[test_labels == 0])
    return PredictionReport(auc, len(positives), len(negatives), seed)
