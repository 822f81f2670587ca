"""Domain types and the relevance-score pipeline shared by every module.

Label vectors are ``numpy`` arrays of 0/1 (``int8``); relevance vectors are
``float64`` arrays. Feature vectors are ``float64`` arrays where nominal
features hold their category index and missing values are ``NaN``.
"""
from __future__ import annotations

from abc import ABC, abstractmethod
from dataclasses import dataclass, field
from typing import Iterable, Optional, Sequence

import numpy as np

#: Marker for an absent feature value (``?`` in ARFF).
MISSING = float("nan")


class ContractError(ValueError):
    """Raised when a caller violates an operation's precondition."""


@dataclass(frozen=True)
class FeatureSchema:
    """Kinds of the ``M`` input features.

    ``cardinalities[i]`` is the number of declared categories of nominal
    feature ``i``, or 0 when the feature is numeric. A nominal value equal
    to its cardinality is the reserved "unknown category" index.
    """

    cardinalities: tuple[int, ...]

    @classmethod
    def numeric(cls, n_features: int) -> "FeatureSchema":
        return cls((0,) * n_features)

    @property
    def n_features(self) -> int:
        return len(self.cardinalities)

    @property
    def nominal_indices(self) -> np.ndarray:
        return np.array([i for i, c in enumerate(self.cardinalities) if c > 0], dtype=np.intp)

    @property
    def numeric_indices(self) -> np.ndarray:
        return np.array([i for i, c in enumerate(self.cardinalities) if c == 0], dtype=np.intp)

    def extended(self, extra: Sequence[int]) -> "FeatureSchema":
        return FeatureSchema(self.cardinalities + tuple(extra))


@dataclass(frozen=True, eq=False)
class Instance:
    """One stream element: features plus (optionally) its label vector."""

    features: np.ndarray
    labels: Optional[np.ndarray] = None

    def __post_init__(self):
        object.__setattr__(self, "features", np.asarray(self.features, dtype=np.float64))
        if self.labels is not None:
            labels = np.asarray(self.labels, dtype=np.int8)
            if labels.ndim != 1 or np.any((labels != 0) & (labels != 1)):
                raise ContractError("label vector must be a 1-d array of 0/1 values")
            object.__setattr__(self, "labels", labels)

    @property
    def n_labels(self) -> int:
        return 0 if self.labels is None else len(self.labels)


@dataclass
class DataChunk:
    """Fixed-capacity buffer of instances (the batch unit of chunk learners)."""

    capacity: int
    instances: list = field(default_factory=list)

    def __post_init__(self):
        if self.capacity < 1:
            raise ContractError("chunk capacity must be positive")

    def append(self, instance: Instance) -> None:
        if self.full:
            raise ContractError("chunk is full")
        self.instances.append(instance)

    @property
    def full(self) -> bool:
        return len(self.instances) == self.capacity

    def clear(self) -> None:
        self.instances = []

    def __len__(self) -> int:
        return len(self.instances)

    def __iter__(self):
        return iter(self.instances)


def label_vector(bits: Iterable[int]) -> np.ndarray:
    out = np.asarray(list(bits), dtype=np.int8)
    if np.any((out != 0) & (out != 1)):
        raise ContractError("label vector entries must be 0 or 1")
    return out


def normalize_relevance(raw) -> np.ndarray:
    """Scale a nonnegative score vector so it sums to one.

    A vector summing to zero carries no preference and maps to the uniform
    vector ``1/L``.
    """
    raw = np.asarray(raw, dtype=np.float64)
    if np.any(raw < 0):
        raise ContractError("relevance scores must be nonnegative before normalization")
    total = raw.sum()
    if total <= 0.0:
        return np.full(len(raw), 1.0 / len(raw))
    return raw / total


#: Scores within this distance of ``1/L`` count as ties with it (rounding noise).
TIE_TOLERANCE = 1e-12


def threshold_relevance(normalized) -> np.ndarray:
    """Mark label ``j`` relevant iff its normalized score is strictly above ``1/L``.

    Differences below ``TIE_TOLERANCE`` are treated as exact ties, so a vote
    that is uniform up to rounding predicts the empty set.
    """
    normalized = np.asarray(normalized, dtype=np.float64)
    return (normalized > 1.0 / len(normalized) + TIE_TOLERANCE).astype(np.int8)


def label_cardinality(dataset: Iterable) -> float:
    """Mean number of relevant labels per instance."""
    total = 0
    count = 0
    width = None
    for y in dataset:
        y = np.asarray(y)
        if width is None:
            width = len(y)
        elif len(y) != width:
            raise ContractError("label vectors of unequal length")
        total += int(y.sum())
        count += 1
    if count == 0:
        raise ContractError("label cardinality of an empty dataset is undefined")
    return total / count


def label_density(dataset) -> float:
    """Label cardinality divided by the number of labels."""
    dataset = list(dataset)
    if not dataset:
        raise ContractError("label density of an empty dataset is undefined")
    return label_cardinality(dataset) / len(dataset[0])


class MultiLabelLearner(ABC):
    """Contract shared by transforms and ensembles.

    ``predict_raw`` always returns ``n_labels`` scores, trained or not.
    Transforms return scores in [0, 1]; a weighted ensemble vote may be
    negative, and ``predict_relevance`` clips it at zero before
    normalizing. ``is_ready`` is False while the learner has no model to predict
    with (a chunk ensemble before its first chunk); the prequential harness
    does not record evaluations during that phase.
    """

    n_labels: int

    @abstractmethod
    def train_instance(self, instance: Instance) -> None:
        ...

    def train_chunk(self, instances: Iterable[Instance]) -> None:
        for instance in instances:
            self.train_instance(instance)

    @abstractmethod
    def predict_raw(self, features: np.ndarray) -> np.ndarray:
        ...

    def predict_relevance(self, features: np.ndarray) -> np.ndarray:
        return normalize_relevance(np.clip(self.predict_raw(features), 0.0, None))

    def predict(self, features: np.ndarray) -> np.ndarray:
        return threshold_relevance(self.predict_relevance(features))

    @abstractmethod
    def size_estimate(self) -> int:
        """Deterministic model size in bytes."""

    @property
    def is_ready(self) -> bool:
        return True
