"""Chunk-based stacked ensemble with least-squares component weights."""
from __future__ import annotations

import logging
from typing import Callable, Optional

import numpy as np

from ..core import DataChunk, Instance, MultiLabelLearner, normalize_relevance, threshold_relevance
from ..learners import MODEL_BYTES
from .weights import accumulate, solve_weights, weighted_vote

logger = logging.getLogger(__name__)

#: Relative tolerance under which two solved weights count as tied for eviction;
#: a ridge-regularized solve of a rank-deficient system is only this accurate.
WEIGHT_TIE_TOLERANCE = 1e-6

ComponentFactory = Callable[[int], MultiLabelLearner]


class GooweML(MultiLabelLearner):
    """Geometrically optimum online weighted ensemble for multi-label streams.

    Instances are buffered into a chunk of ``chunk_size``. While the chunk
    fills, each instance's normalized component scores are folded into the
    normal equations ``A w = d``. When the chunk is full:

    1. a new component is trained on the chunk;
    2. ``A w = d`` is solved for the existing components;
    3. at capacity, the component with the smallest weight is evicted
       (ties evict the oldest);
    4. the new component joins with weight 1;
    5. the older components are trained on the chunk;
    6. the chunk and ``A``, ``d`` are cleared.

    Predictions are the weighted sum of normalized component scores,
    normalized again and thresholded at ``1/L``.

    Parameters
    ----------
    factory : callable
        ``factory(seed)`` returns a fresh, untrained component.
    n_labels : int
    max_components : int
        Ensemble capacity ``K``.
    chunk_size : int
        Chunk capacity ``h``.
    seed : int, optional
        Seeds the per-component seeds handed to ``factory``.
    """

    def __init__(self, factory: ComponentFactory, n_labels: int, max_components: int = 10,
                 chunk_size: int = 500, seed: Optional[int] = None):
        if max_components < 1:
            raise ValueError("ensemble needs room for at least one component")
        self.factory = factory
        self.n_labels = n_labels
        self.max_components = max_components
        self.chunk = DataChunk(chunk_size)
        self.components: list[MultiLabelLearner] = []
        self.weights = np.zeros(0)
        self.solved_weights: Optional[np.ndarray] = None
        self.A = np.zeros((0, 0))
        self.d = np.zeros(0)
        self.n_chunks = 0
        self._rng = np.random.default_rng(seed)
        self._cached_features = None
        self._cached_scores = None

    @property
    def is_ready(self) -> bool:
        return bool(self.components)

    def component_scores(self, features: np.ndarray) -> np.ndarray:
        """``(K, L)`` matrix of normalized component relevance scores."""
        if features is self._cached_features:
            return self._cached_scores
        scores = np.empty((len(self.components), self.n_labels))
        for k, component in enumerate(self.components):
            scores[k] = normalize_relevance(np.clip(component.predict_raw(features), 0.0, None))
        self._cached_features, self._cached_scores = features, scores
        return scores

    def predict_raw(self, features: np.ndarray) -> np.ndarray:
        """Weighted vote of the components; entries may be negative."""
        if not self.components:
            return np.zeros(self.n_labels)
        return weighted_vote(self.component_scores(features), self.weights)

    def process(self, instance: Instance):
        """Test-then-train one labeled instance; returns ``(prediction, relevance)``."""
        if self.components:
            relevance = self.predict_relevance(instance.features)
            prediction = threshold_relevance(relevance)
        else:
            relevance = np.zeros(self.n_labels)
            prediction = np.zeros(self.n_labels, dtype=np.int8)
        self.train_instance(instance)
        return prediction, relevance

    def train_instance(self, instance: Instance) -> None:
        if instance.labels is None:
            raise ValueError("training requires a labeled instance")
        if self.components:
            accumulate(self.A, self.d, self.component_scores(instance.features), instance.labels)
        self.chunk.append(instance)
        if self.chunk.full:
            self._close_chunk()

    def _close_chunk(self) -> None:
        instances = list(self.chunk)
        newcomer = self.factory(int(self._rng.integers(2**31 - 1)))
        newcomer.train_chunk(instances)

        if self.components:
            solved = solve_weights(self.A, self.d)
            self.solved_weights = solved.copy()
            self.weights = solved
            if len(self.components) >= self.max_components:
                # weights equal up to rounding are ties; the oldest of them goes
                slack = WEIGHT_TIE_TOLERANCE * max(1.0, float(np.abs(solved).max()))
                out = int(np.flatnonzero(solved <= solved.min() + slack)[0])
                logger.debug("chunk %d: evicting component %d (weight %.4g)", self.n_chunks, out, solved[out])
                del self.components[out]
                self.weights = np.delete(self.weights, out)

        for component in self.components:
            component.train_chunk(instances)
        self.components.append(newcomer)
        self.weights = np.append(self.weights, 1.0)

        self.chunk.clear()
        K = len(self.components)
        self.A = np.zeros((K, K))
        self.d = np.zeros(K)
        self._cached_features = self._cached_scores = None
        self.n_chunks += 1

    def size_estimate(self) -> int:
        size = MODEL_BYTES + self.A.nbytes + self.d.nbytes + self.weights.nbytes
        size += sum(inst.features.nbytes + inst.labels.nbytes for inst in self.chunk)
        return size + sum(c.size_estimate() for c in self.components)
