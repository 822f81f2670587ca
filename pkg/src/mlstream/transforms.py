"""Problem-transformation multi-label learners.

* :class:`BinaryRelevance` - one binary classifier per label.
* :class:`ClassifierChain` - binary classifiers linked in a random label
  order, each seeing the predecessors' labels as extra binary features.
* :class:`PrunedSets` - frequent labelsets as classes of one multi-class
  Naive Bayes; infrequent labelsets are recycled as their frequent subsets.
"""
from __future__ import annotations

from typing import Iterable, Optional, Sequence

import numpy as np

from .core import FeatureSchema, Instance, MultiLabelLearner
from .learners import MODEL_BYTES, HoeffdingTree, NaiveBayes


def make_binary_learner(schema: FeatureSchema, base: str = "ht", **params):
    if base == "ht":
        return HoeffdingTree(schema, n_classes=2, **params)
    if base == "nb":
        return NaiveBayes(schema, n_classes=2, **params)
    raise ValueError(f"unknown base learner {base!r}")


class BinaryRelevance(MultiLabelLearner):
    """Independent binary learners, one per label.

    Untrained, every entry is the base learner's uniform positive-class
    probability (0.5).
    """

    def __init__(self, schema: FeatureSchema, n_labels: int, base: str = "ht", **params):
        self.schema = schema
        self.n_labels = n_labels
        self.base = base
        self.learners = [make_binary_learner(schema, base, **params) for _ in range(n_labels)]

    def train_instance(self, instance: Instance) -> None:
        x = instance.features
        for learner, bit in zip(self.learners, instance.labels):
            learner.update(x, int(bit))

    def predict_raw(self, features: np.ndarray) -> np.ndarray:
        return np.array([learner.predict_proba(features)[1] for learner in self.learners])

    def size_estimate(self) -> int:
        return MODEL_BYTES + sum(learner.size_estimate() for learner in self.learners)


class ClassifierChain(MultiLabelLearner):
    """Binary learners chained in ``order``.

    The learner at chain position ``j`` sees the ``M`` features followed by
    the labels at positions ``0..j-1``: true labels when training, its
    predecessors' hard decisions (score > 0.5) when predicting. Without an
    explicit ``order`` a permutation is drawn from ``seed``.
    """

    def __init__(self, schema: FeatureSchema, n_labels: int, seed: Optional[int] = None,
                 order: Optional[Sequence[int]] = None, base: str = "ht", **params):
        self.schema = schema
        self.n_labels = n_labels
        if order is None:
            order = np.random.default_rng(seed).permutation(n_labels)
        order = np.asarray(order, dtype=np.intp)
        if sorted(order.tolist()) != list(range(n_labels)):
            raise ValueError("chain order must be a permutation of the labels")
        self.order = order
        M = schema.n_features
        self._n_features = M
        self.learners = [make_binary_learner(schema.extended((2,) * j), base, **params)
                         for j in range(n_labels)]

    def _chain_values(self, bits: np.ndarray) -> np.ndarray:
        return bits

    def train_instance(self, instance: Instance) -> None:
        M = self._n_features
        x = np.concatenate([instance.features,
                            self._chain_values(instance.labels[self.order].astype(np.float64))])
        for j, learner in enumerate(self.learners):
            learner.update(x[:M + j], int(instance.labels[self.order[j]]))

    def predict_raw(self, features: np.ndarray) -> np.ndarray:
        M = self._n_features
        x = np.concatenate([features, np.zeros(self.n_labels)])
        scores = np.empty(self.n_labels)
        for j, learner in enumerate(self.learners):
            p = learner.predict_proba(x[:M + j])[1]
            scores[self.order[j]] = p
            x[M + j] = self._chain_values(np.array([1.0 if p > 0.5 else 0.0]))[0]
        return scores

    def size_estimate(self) -> int:
        return MODEL_BYTES + sum(learner.size_estimate() for learner in self.learners)


def _key(bits: np.ndarray) -> bytes:
    return np.asarray(bits, dtype=np.int8).tobytes()


def decompose(labelset: np.ndarray, vocabulary: np.ndarray, counts: np.ndarray,
              n_subsets: int) -> list[int]:
    """Indices of the largest vocabulary labelsets contained in ``labelset``.

    Only maximal subsets are considered (none contained in another chosen
    candidate); ties on size go to the more frequent labelset.
    """
    if not len(vocabulary):
        return []
    y = np.asarray(labelset, dtype=bool)
    inside = ~(vocabulary.astype(bool) & ~y).any(axis=1)
    candidates = np.flatnonzero(inside)
    if not len(candidates):
        return []
    ranked = sorted(candidates, key=lambda i: (-int(vocabulary[i].sum()), -counts[i], i))
    chosen: list[int] = []
    for i in ranked:
        vi = vocabulary[i].astype(bool)
        if any((vi & ~vocabulary[j].astype(bool)).sum() == 0 for j in chosen):
            continue  # contained in an already chosen, larger subset
        chosen.append(int(i))
        if len(chosen) == n_subsets:
            break
    return chosen


def build_vocabulary(labelsets: Iterable[np.ndarray], prune: int = 1, n_subsets: int = 2):
    """Frequent-labelset vocabulary of a chunk.

    Returns ``(vocabulary, counts, assignments)``: the kept labelsets as a
    ``(V, L)`` 0/1 matrix, their chunk frequencies, and for every input
    labelset the list of vocabulary classes it trains (its own class, or up
    to ``n_subsets`` maximal frequent subsets when it was pruned).
    """
    labelsets = [np.asarray(y, dtype=np.int8) for y in labelsets]
    if not labelsets:
        raise ValueError("cannot build a labelset vocabulary from an empty chunk")
    frequency: dict[bytes, int] = {}
    first: dict[bytes, np.ndarray] = {}
    for y in labelsets:
        k = _key(y)
        frequency[k] = frequency.get(k, 0) + 1
        first.setdefault(k, y)
    kept = [k for k in first if frequency[k] > prune]  # insertion order = first appearance
    L = len(labelsets[0])
    vocabulary = np.array([first[k] for k in kept], dtype=np.int8).reshape(len(kept), L)
    counts = np.array([frequency[k] for k in kept], dtype=np.int64)
    index = {k: i for i, k in enumerate(kept)}
    assignments = []
    for y in labelsets:
        k = _key(y)
        if k in index:
            assignments.append([index[k]])
        else:
            assignments.append(decompose(y, vocabulary, counts, n_subsets))
    return vocabulary, counts, assignments


class PrunedSets(MultiLabelLearner):
    """Pruned-sets transformation over an incremental Naive Bayes.

    The vocabulary is fixed by the first batch the model sees: the chunk
    passed to :meth:`train_chunk`, or the first ``buffer_size`` instances
    fed through :meth:`train_instance`. Afterwards labelsets outside the
    vocabulary train their maximal frequent subsets. Until a nonempty
    vocabulary exists the raw scores are all zero.
    """

    def __init__(self, schema: FeatureSchema, n_labels: int, prune: int = 1, n_subsets: int = 2,
                 buffer_size: int = 500, alpha: float = 1.0):
        self.schema = schema
        self.n_labels = n_labels
        self.prune = prune
        self.n_subsets = n_subsets
        self.buffer_size = buffer_size
        self.alpha = alpha
        self.vocabulary = np.zeros((0, n_labels), dtype=np.int8)
        self.counts = np.zeros(0, dtype=np.int64)
        self._index: dict[bytes, int] = {}
        self.classifier: Optional[NaiveBayes] = None
        self._buffer: list[Instance] = []

    @property
    def built(self) -> bool:
        return self.classifier is not None

    def _build(self, instances: Sequence[Instance]) -> None:
        vocabulary, counts, assignments = build_vocabulary(
            [inst.labels for inst in instances], self.prune, self.n_subsets)
        if not len(vocabulary):
            return
        self.vocabulary, self.counts = vocabulary, counts
        self._index = {_key(v): i for i, v in enumerate(vocabulary)}
        self.classifier = NaiveBayes(self.schema, len(vocabulary), alpha=self.alpha)
        for inst, classes in zip(instances, assignments):
            for c in classes:
                self.classifier.update(inst.features, c)

    def _classes_for(self, labels: np.ndarray) -> list[int]:
        c = self._index.get(_key(labels))
        if c is not None:
            return [c]
        return decompose(labels, self.vocabulary, self.counts, self.n_subsets)

    def train_chunk(self, instances: Iterable[Instance]) -> None:
        instances = list(instances)
        if not self.built:
            self._build(instances)
            return
        for inst in instances:
            self.train_instance(inst)

    def train_instance(self, instance: Instance) -> None:
        if not self.built:
            self._buffer.append(instance)
            if len(self._buffer) >= self.buffer_size:
                buffered, self._buffer = self._buffer, []
                self._build(buffered)
            return
        for c in self._classes_for(instance.labels):
            self.classifier.update(instance.features, c)

    def predict_raw(self, features: np.ndarray) -> np.ndarray:
        if not self.built:
            return np.zeros(self.n_labels)
        return self.classifier.predict_proba(features) @ self.vocabulary

    def size_estimate(self) -> int:
        size = MODEL_BYTES + self.vocabulary.nbytes + self.counts.nbytes
        if self.classifier is not None:
            size += self.classifier.size_estimate()
        return size
