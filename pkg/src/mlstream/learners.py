"""Incremental single-target classifiers: Naive Bayes and Hoeffding trees.

Both learners consume feature vectors laid out by a :class:`FeatureSchema`
(nominal features carry category indices, missing values are NaN) and skip
missing values in their statistics.
"""
from __future__ import annotations

import math

import numpy as np
from scipy.special import ndtr

from .core import FeatureSchema

#: Minimum variance of any Gaussian likelihood.
VARIANCE_FLOOR = 1e-6
#: Posterior entries never drop below this before renormalization.
PROBABILITY_FLOOR = 1e-12
#: Bookkeeping bytes charged per tree node / per model object.
NODE_BYTES = 64
MODEL_BYTES = 64


def hoeffding_bound(value_range: float, confidence: float, n: float) -> float:
    """Deviation ``eps`` such that the true mean lies within ``eps`` of the
    mean of ``n`` samples with probability ``1 - confidence``."""
    return math.sqrt(value_range * value_range * math.log(1.0 / confidence) / (2.0 * n))


def _softmax(log_p: np.ndarray) -> np.ndarray:
    if len(log_p) == 2:  # scalar arithmetic is much cheaper for binary problems
        a, b = log_p.tolist()
        top = max(a, b)
        p0, p1 = math.exp(a - top), math.exp(b - top)
        total = p0 + p1
        p0, p1 = p0 / total, p1 / total
        if min(p0, p1) < PROBABILITY_FLOOR:
            p0, p1 = max(p0, PROBABILITY_FLOOR), max(p1, PROBABILITY_FLOOR)
            total = p0 + p1
            p0, p1 = p0 / total, p1 / total
        return np.array([p0, p1])
    p = np.exp(log_p - log_p.max())
    p /= p.sum()
    if p.min() < PROBABILITY_FLOOR:
        np.maximum(p, PROBABILITY_FLOOR, out=p)
        p /= p.sum()
    return p


ALL_PRESENT = slice(None)


class _FeatureLayout:
    """Precomputed index arrays for a schema."""

    def __init__(self, schema: FeatureSchema):
        self.schema = schema
        self.nominal = schema.nominal_indices
        self.numeric = schema.numeric_indices
        self.all_numeric = len(self.nominal) == 0
        self.cards = np.array([schema.cardinalities[i] for i in self.nominal], dtype=np.intp)
        self.max_slots = int(self.cards.max()) + 1 if len(self.cards) else 1
        self.nominal_pos = np.arange(len(self.nominal))

    def split(self, x: np.ndarray):
        """Return ``(numeric values, nominal slot indices or None, nominal mask)``.

        The mask selects the observed nominal values; it is the full slice
        :data:`ALL_PRESENT` when none is missing.
        """
        num = x if self.all_numeric else x[self.numeric]
        if not len(self.nominal):
            return num, None, None
        raw = x[self.nominal]
        if math.isnan(raw.sum()):
            mask = ~np.isnan(raw)
            raw = np.where(mask, raw, 0)
        else:
            mask = ALL_PRESENT
        return num, np.minimum(raw.astype(np.intp), self.cards), mask


class GaussianStats:
    """Per-class weighted running mean and variance (Welford / West)."""

    def __init__(self, n_classes: int, n_features: int):
        self.n = np.zeros((n_classes, n_features))
        self.mean = np.zeros((n_classes, n_features))
        self.m2 = np.zeros((n_classes, n_features))

    def update(self, c: int, values: np.ndarray, weight: float = 1.0) -> None:
        if math.isnan(values.sum()):
            keep = ~np.isnan(values)
            values = values[keep]
            n = self.n[c, keep] + weight
            mean = self.mean[c, keep]
            delta = values - mean
            mean = mean + delta * (weight / n)
            self.m2[c, keep] += weight * delta * (values - mean)
            self.mean[c, keep] = mean
            self.n[c, keep] = n
            return
        n = self.n[c]
        n += weight
        mean = self.mean[c]
        delta = values - mean
        mean += delta * (weight / n)
        self.m2[c] += weight * delta * (values - mean)

    def variance(self) -> np.ndarray:
        """Unbiased variance; 0 where fewer than two observations."""
        if self.n.min() > 1:
            return self.m2 / (self.n - 1)
        with np.errstate(divide="ignore", invalid="ignore"):
            var = np.where(self.n > 1, self.m2 / (self.n - 1), 0.0)
        return var

    def pooled(self):
        """Class-agnostic ``(n, mean, variance)`` per feature."""
        n = self.n.sum(axis=0)
        with np.errstate(divide="ignore", invalid="ignore"):
            mean = np.where(n > 0, (self.n * self.mean).sum(axis=0) / n, 0.0)
            m2 = (self.m2 + self.n * (self.mean - mean) ** 2).sum(axis=0)
            var = np.where(n > 1, m2 / (n - 1), 0.0)
        return n, mean, var

    @property
    def nbytes(self) -> int:
        return self.n.nbytes + self.mean.nbytes + self.m2.nbytes


class _LikelihoodTables:
    """Naive Bayes log-likelihood terms frozen from a set of statistics.

    Nominal terms are Laplace-smoothed log frequencies. Numeric terms are
    Gaussian; a class that never observed a feature uses the pooled
    estimate for it, and a feature nobody observed contributes nothing.
    Rebuilt whenever the statistics change.
    """

    def __init__(self, layout: _FeatureLayout, nominal_counts, nominal_totals,
                 gaussians: GaussianStats, alpha: float):
        self.layout = layout
        if len(layout.nominal):
            denom = nominal_totals + alpha * (layout.cards + 1)
            self.nominal_log = np.log((nominal_counts + alpha) / denom[:, :, None])
        if len(layout.numeric):
            g = gaussians
            n, mean, var = g.n, g.mean.copy(), g.variance()
            if n.all():
                var = np.maximum(var, VARIANCE_FLOOR)
                self.mean = mean
                self.half_precision = 0.5 / var
                self.log_norm = -0.5 * np.log(2.0 * np.pi * var)
                return
            pn, pmean, pvar = g.pooled()
            unseen = n <= 0
            mean = np.where(unseen, pmean, mean)
            var = np.maximum(np.where(unseen, pvar, var), VARIANCE_FLOOR)
            usable = np.broadcast_to(pn > 0, n.shape)
            self.mean = np.where(usable, mean, 0.0)
            self.half_precision = np.where(usable, 0.5 / var, 0.0)
            self.log_norm = np.where(usable, -0.5 * np.log(2.0 * np.pi * var), 0.0)

    def log_likelihood(self, x: np.ndarray) -> np.ndarray:
        """Per-class log likelihood of ``x``, prior excluded; NaNs are skipped."""
        lay = self.layout
        num, slots, mask = lay.split(x)
        ll = 0.0
        if slots is not None:
            if mask is ALL_PRESENT or mask.all():
                ll = self.nominal_log[:, lay.nominal_pos, slots].sum(axis=1)
            elif mask.any():
                ll = self.nominal_log[:, lay.nominal_pos[mask], slots[mask]].sum(axis=1)
        if len(num):
            d = num - self.mean
            terms = self.log_norm - d * d * self.half_precision
            numeric = terms.sum(axis=1)
            if math.isnan(numeric[0]):  # a missing value poisons every class row
                numeric = np.where(np.isnan(num), 0.0, terms).sum(axis=1)
            ll = ll + numeric
        return ll


class NaiveBayes:
    """Incremental Naive Bayes over mixed nominal/numeric features.

    Nominal likelihoods are Laplace-smoothed category frequencies (the
    unknown-category slot counts as one more category); numeric likelihoods
    are Gaussian with variance floored at ``VARIANCE_FLOOR``. Class priors
    are smoothed with the same ``alpha``.
    """

    def __init__(self, schema: FeatureSchema, n_classes: int, alpha: float = 1.0):
        self.schema = schema
        self.n_classes = n_classes
        self.alpha = alpha
        self._layout = _FeatureLayout(schema)
        lay = self._layout
        self.class_counts = np.zeros(n_classes)
        self.nominal_counts = np.zeros((n_classes, len(lay.nominal), lay.max_slots))
        self.nominal_totals = np.zeros((n_classes, len(lay.nominal)))
        self.gaussians = GaussianStats(n_classes, len(lay.numeric))
        self._tables = None

    def update(self, features: np.ndarray, label: int, weight: float = 1.0) -> None:
        num, slots, mask = self._layout.split(features)
        self._tables = None
        self.class_counts[label] += weight
        if slots is not None:
            pos = self._layout.nominal_pos[mask]
            self.nominal_counts[label, pos, slots[mask]] += weight
            self.nominal_totals[label, pos] += weight
        if len(num):
            self.gaussians.update(label, num, weight)

    def predict_proba(self, features: np.ndarray) -> np.ndarray:
        total = self.class_counts.sum()
        C = self.n_classes
        if total <= 0:
            return np.full(C, 1.0 / C)
        a = self.alpha
        log_p = np.log((self.class_counts + a) / (total + a * C))
        if self._tables is None:
            self._tables = _LikelihoodTables(self._layout, self.nominal_counts, self.nominal_totals,
                                             self.gaussians, a)
        log_p += self._tables.log_likelihood(features)
        return _softmax(log_p)

    def size_estimate(self) -> int:
        return (MODEL_BYTES + self.class_counts.nbytes + self.nominal_counts.nbytes
                + self.nominal_totals.nbytes + self.gaussians.nbytes)


# -- Hoeffding tree ---------------------------------------------------------

def _entropy(dist: np.ndarray, axis: int = 0) -> np.ndarray:
    """Base-2 entropy of (unnormalized) distributions along ``axis``."""
    total = dist.sum(axis=axis, keepdims=True)
    with np.errstate(divide="ignore", invalid="ignore"):
        p = np.where(total > 0, dist / total, 0.0)
        terms = np.where(p > 0, -p * np.log2(np.where(p > 0, p, 1.0)), 0.0)
    return terms.sum(axis=axis)


class _Leaf:
    __slots__ = ("class_counts", "prior", "nominal_counts", "gaussians", "num_min", "num_max",
                 "weight_since_check", "mc_correct", "nb_correct", "tables", "memo", "seen",
                 "prior_total")

    def __init__(self, n_classes: int, prior=None):
        self.class_counts = np.zeros(n_classes)
        self.seen = 0.0  # running class_counts.sum()
        self.prior = prior
        self.prior_total = 0.0 if prior is None else float(prior.sum())
        self.nominal_counts = None
        self.gaussians = None
        self.num_min = None
        self.num_max = None
        self.weight_since_check = 0.0
        self.mc_correct = 0.0
        self.nb_correct = 0.0
        self.tables = None  # cached _LikelihoodTables, derived from the statistics
        self.memo = None  # (query, log posterior) of the last Naive Bayes evaluation

    @property
    def nbytes(self) -> int:
        size = self.class_counts.nbytes
        if self.prior is not None:
            size += self.prior.nbytes
        if self.nominal_counts is not None:
            size += self.nominal_counts.nbytes
        if self.gaussians is not None:
            size += self.gaussians.nbytes + self.num_min.nbytes + self.num_max.nbytes
        return size


class _Split:
    __slots__ = ("feature", "threshold", "cardinality", "children", "default")

    def __init__(self, feature: int, children: list, default: int,
                 threshold: float = None, cardinality: int = 0):
        self.feature = feature
        self.threshold = threshold
        self.cardinality = cardinality
        self.children = children
        self.default = default

    def child(self, x: np.ndarray):
        v = x[self.feature]
        if v != v:
            return self.children[self.default]
        if self.threshold is not None:
            return self.children[0 if v <= self.threshold else 1]
        v = int(v)
        if v >= self.cardinality:
            return self.children[self.default]
        return self.children[v]


class HoeffdingTree:
    """Very Fast Decision Tree for a single nominal target.

    Numeric features are summarised per class by Gaussians and split at one
    of ``n_thresholds`` evenly spaced candidates between the observed
    minimum and maximum; nominal features split multiway. A leaf is checked
    every ``grace_period`` units of weight and split when the information
    gain of the best feature beats the runner-up by more than the Hoeffding
    bound, or when the bound itself falls below ``tie_threshold``.

    ``leaf_prediction`` selects how a leaf scores an instance:

    ``"mc"``
        Laplace-smoothed class counts of the leaf.
    ``"nb"``
        Naive Bayes over the leaf's own sufficient statistics.
    ``"nba"``
        whichever of the two has classified more of the leaf's training
        instances correctly so far (the usual streaming default).
    """

    def __init__(self, schema: FeatureSchema, n_classes: int = 2, grace_period: int = 200,
                 split_confidence: float = 1e-7, tie_threshold: float = 0.05,
                 alpha: float = 1.0, n_thresholds: int = 10, min_branch_fraction: float = 0.01,
                 leaf_prediction: str = "mc"):
        if leaf_prediction not in ("mc", "nb", "nba"):
            raise ValueError(f"unknown leaf prediction {leaf_prediction!r}")
        self.schema = schema
        self.n_classes = n_classes
        self.grace_period = grace_period
        self.split_confidence = split_confidence
        self.tie_threshold = tie_threshold
        self.alpha = alpha
        self.n_thresholds = n_thresholds
        self.min_branch_fraction = min_branch_fraction
        self.leaf_prediction = leaf_prediction
        self._layout = _FeatureLayout(schema)
        self.root = self._new_leaf()
        self.n_nodes = 1
        self.n_leaves = 1
        self.n_splits = 0

    def _new_leaf(self, prior=None) -> _Leaf:
        # statistics are allocated up front so a leaf's size is fixed until it splits
        lay = self._layout
        C = self.n_classes
        leaf = _Leaf(C, prior)
        if len(lay.nominal):
            leaf.nominal_counts = np.zeros((C, len(lay.nominal), lay.max_slots))
        if len(lay.numeric):
            leaf.gaussians = GaussianStats(C, len(lay.numeric))
            leaf.num_min = np.full(len(lay.numeric), np.inf)
            leaf.num_max = np.full(len(lay.numeric), -np.inf)
        return leaf

    # routing

    def _leaf_of(self, x: np.ndarray) -> _Leaf:
        node = self.root
        while type(node) is _Split:
            node = node.child(x)
        return node

    def _class_distribution(self, leaf: _Leaf) -> np.ndarray:
        counts = leaf.class_counts if leaf.prior is None else leaf.class_counts + leaf.prior
        return (counts + self.alpha) / (leaf.seen + leaf.prior_total + self.alpha * self.n_classes)

    def _naive_bayes(self, leaf: _Leaf, x: np.ndarray) -> np.ndarray:
        return _softmax(self._naive_bayes_log(leaf, x))

    def _naive_bayes_log(self, leaf: _Leaf, x: np.ndarray) -> np.ndarray:
        """Unnormalized log posterior of the leaf's Naive Bayes model."""
        if leaf.memo is not None and leaf.memo[0] is x:
            return leaf.memo[1]  # test-then-train asks twice for the same instance
        log_p = np.log(self._class_distribution(leaf))
        if leaf.seen > 0:  # a fresh child has only its estimated prior
            if leaf.tables is None:
                totals = None if leaf.nominal_counts is None else leaf.nominal_counts.sum(axis=2)
                leaf.tables = _LikelihoodTables(self._layout, leaf.nominal_counts, totals,
                                                leaf.gaussians, self.alpha)
            log_p = log_p + leaf.tables.log_likelihood(x)
        leaf.memo = (x, log_p)
        return log_p

    def predict_proba(self, features: np.ndarray) -> np.ndarray:
        leaf = self._leaf_of(features)
        mode = self.leaf_prediction
        if mode == "nb" or (mode == "nba" and leaf.nb_correct > leaf.mc_correct):
            return self._naive_bayes(leaf, features)
        return self._class_distribution(leaf)

    # learning

    def update(self, features: np.ndarray, label: int, weight: float = 1.0) -> None:
        leaf = self._leaf_of(features)
        if self.leaf_prediction == "nba":
            if int(np.argmax(leaf.class_counts if leaf.prior is None
                             else leaf.class_counts + leaf.prior)) == label:
                leaf.mc_correct += weight
            if int(np.argmax(self._naive_bayes_log(leaf, features))) == label:
                leaf.nb_correct += weight
        self._observe(leaf, features, label, weight)
        leaf.weight_since_check += weight
        if leaf.weight_since_check >= self.grace_period:
            leaf.weight_since_check = 0.0
            if np.count_nonzero(leaf.class_counts) > 1:
                self._attempt_split(leaf)

    def _observe(self, leaf: _Leaf, x: np.ndarray, label: int, weight: float) -> None:
        lay = self._layout
        leaf.tables = leaf.memo = None
        leaf.class_counts[label] += weight
        leaf.seen += weight
        num, slots, mask = lay.split(x)
        if slots is not None:
            leaf.nominal_counts[label, lay.nominal_pos[mask], slots[mask]] += weight
        if len(num):
            leaf.gaussians.update(label, num, weight)
            np.fmin(leaf.num_min, num, out=leaf.num_min)
            np.fmax(leaf.num_max, num, out=leaf.num_max)

    def _numeric_candidates(self, leaf: _Leaf, parent_entropy: float):
        """Best (merit, threshold, left dist, right dist) per numeric feature."""
        g = leaf.gaussians
        k = self.n_thresholds
        span = leaf.num_max - leaf.num_min  # inf - inf = nan for unseen features
        frac = np.arange(1, k + 1) / (k + 1)
        with np.errstate(invalid="ignore"):
            thresholds = leaf.num_min[:, None] + span[:, None] * frac[None, :]  # (F, T)
            sigma = np.sqrt(np.maximum(g.variance(), VARIANCE_FLOOR))  # (C, F)
            z = (thresholds[None, :, :] - g.mean[:, :, None]) / sigma[:, :, None]
            left = g.n[:, :, None] * ndtr(z)  # (C, F, T)
            right = g.n[:, :, None] - left
            merit = self._merit(np.stack([left, right], axis=-1), parent_entropy)  # (F, T)
        valid = np.isfinite(span) & (span > 0)
        merit[~valid] = -np.inf
        best_t = merit.argmax(axis=1)
        rows = np.arange(merit.shape[0])
        return (merit[rows, best_t], thresholds[rows, best_t],
                left[:, rows, best_t], right[:, rows, best_t])

    def _merit(self, branches: np.ndarray, parent_entropy: float) -> np.ndarray:
        """Information gain of splits; ``branches`` is ``(C, ..., B)``."""
        weights = branches.sum(axis=0)  # (..., B)
        total = weights.sum(axis=-1)
        with np.errstate(divide="ignore", invalid="ignore"):
            post = (weights * _entropy(branches, axis=0)).sum(axis=-1) / total
        merit = parent_entropy - post
        big_enough = (weights > self.min_branch_fraction * total[..., None]).sum(axis=-1) >= 2
        return np.where(big_enough & (total > 0), merit, -np.inf)

    def _attempt_split(self, leaf: _Leaf) -> None:
        lay = self._layout
        parent_entropy = float(_entropy(leaf.class_counts))
        candidates = []  # (merit, kind, feature, payload)
        if leaf.gaussians is not None:
            merits, thresholds, lefts, rights = self._numeric_candidates(leaf, parent_entropy)
            for i, f in enumerate(lay.numeric):
                candidates.append((merits[i], "numeric", int(f), (thresholds[i], lefts[:, i], rights[:, i])))
        if leaf.nominal_counts is not None:
            branches = leaf.nominal_counts.copy()
            for i, card in enumerate(lay.cards):
                branches[:, i, card:] = 0.0  # unknown slot is not a branch
            merits = self._merit(branches, parent_entropy)
            for i, f in enumerate(lay.nominal):
                candidates.append((merits[i], "nominal", int(f), (int(lay.cards[i]), branches[:, i, :])))
        if not candidates:
            return
        merits = np.array([c[0] for c in candidates])
        order = np.argsort(-merits, kind="stable")
        best = candidates[order[0]]
        second_merit = max(merits[order[1]] if len(order) > 1 else -np.inf, 0.0)  # null split
        if not best[0] > 0.0:
            return
        eps = hoeffding_bound(math.log2(self.n_classes), self.split_confidence,
                              leaf.class_counts.sum())
        if best[0] - second_merit > eps or eps < self.tie_threshold:
            self._split(leaf, best)

    def _split(self, leaf: _Leaf, candidate) -> None:
        _, kind, feature, payload = candidate
        C = self.n_classes
        if kind == "numeric":
            threshold, left, right = payload
            dists = [left.copy(), right.copy()]
        else:
            card, branches = payload
            dists = [branches[:, v].copy() for v in range(card)]
        children = [self._new_leaf(prior=d) for d in dists]
        default = int(np.argmax([d.sum() for d in dists]))
        if kind == "numeric":
            node = _Split(feature, children, default, threshold=float(threshold))
        else:
            node = _Split(feature, children, default, cardinality=len(children))
        self._replace(leaf, node)
        self.n_nodes += len(children)
        self.n_leaves += len(children) - 1
        self.n_splits += 1

    def _replace(self, leaf: _Leaf, node: _Split) -> None:
        if self.root is leaf:
            self.root = node
            return
        stack = [self.root]
        while stack:
            current = stack.pop()
            for i, child in enumerate(current.children):
                if child is leaf:
                    current.children[i] = node
                    return
                if type(child) is _Split:
                    stack.append(child)
        raise RuntimeError("leaf not found in tree")

    def leaves(self):
        stack = [self.root]
        while stack:
            node = stack.pop()
            if type(node) is _Split:
                stack.extend(node.children)
            else:
                yield node

    def size_estimate(self) -> int:
        return MODEL_BYTES + NODE_BYTES * self.n_nodes + sum(leaf.nbytes for leaf in self.leaves())
