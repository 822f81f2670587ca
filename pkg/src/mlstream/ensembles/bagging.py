"""Online bagging baselines: OzaBag and its ADWIN-monitored variant."""
from __future__ import annotations

import logging
from typing import Callable, Optional

import numpy as np

from ..core import Instance, MultiLabelLearner, normalize_relevance, threshold_relevance
from ..learners import MODEL_BYTES
from .adwin import Adwin

logger = logging.getLogger(__name__)


class OzaBag(MultiLabelLearner):
    """Online bagging with a fixed set of ``n_components`` components.

    The ensemble vote is the unweighted mean of the components' raw scores.
    Each training instance is presented to every component ``k`` times with
    ``k ~ Poisson(1)``, the online analogue of bootstrap resampling.
    """

    def __init__(self, factory: Callable[[int], MultiLabelLearner], n_labels: int,
                 n_components: int = 10, seed: Optional[int] = None):
        if n_components < 1:
            raise ValueError("bagging needs at least one component")
        self.factory = factory
        self.n_labels = n_labels
        self.rng = np.random.default_rng(seed)
        self.components = [self._fresh() for _ in range(n_components)]

    def _fresh(self) -> MultiLabelLearner:
        return self.factory(int(self.rng.integers(2**31 - 1)))

    def predict_raw(self, features: np.ndarray) -> np.ndarray:
        return np.mean([c.predict_raw(features) for c in self.components], axis=0)

    def process(self, instance: Instance) -> np.ndarray:
        """Test-then-train one labeled instance; returns the prediction."""
        prediction = self.predict(instance.features)
        self.train_instance(instance)
        return prediction

    def train_instance(self, instance: Instance) -> None:
        for component, k in zip(self.components, self.rng.poisson(1.0, len(self.components))):
            for _ in range(k):
                component.train_instance(instance)

    def size_estimate(self) -> int:
        return MODEL_BYTES + sum(c.size_estimate() for c in self.components)


def _accuracy(component: MultiLabelLearner, instance: Instance) -> float:
    """``1 -`` Hamming loss of the component's own thresholded prediction."""
    raw = np.clip(component.predict_raw(instance.features), 0.0, None)
    predicted = threshold_relevance(normalize_relevance(raw))
    return float(np.mean(predicted == instance.labels))


class AdwinBag(OzaBag):
    """OzaBag with one ADWIN detector per component.

    Before training, each detector receives its component's accuracy on
    the instance. When any detector signals a change, the component whose
    detector has the lowest mean accuracy is replaced by a fresh one and
    that detector is reset.
    """

    def __init__(self, factory: Callable[[int], MultiLabelLearner], n_labels: int,
                 n_components: int = 10, seed: Optional[int] = None, delta: float = 0.002,
                 max_buckets: int = 5):
        super().__init__(factory, n_labels, n_components, seed)
        self.delta = delta
        self.max_buckets = max_buckets
        self.detectors = [Adwin(delta, max_buckets) for _ in self.components]
        self.n_resets = 0

    def train_instance(self, instance: Instance) -> None:
        changed = False
        for component, detector in zip(self.components, self.detectors):
            changed |= detector.update(_accuracy(component, instance))
        super().train_instance(instance)
        if changed:
            worst = int(np.argmin([d.mean for d in self.detectors]))
            logger.debug("change detected; resetting component %d", worst)
            self.components[worst] = self._fresh()
            self.detectors[worst] = Adwin(self.delta, self.max_buckets)
            self.n_resets += 1
