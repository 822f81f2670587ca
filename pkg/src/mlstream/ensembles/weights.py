"""Least-squares combination weights for stacked multi-label ensembles.

Component score vectors live in label space. For a chunk of instances the
weights ``w`` minimising ``sum_i || y_i - S_i^T w ||^2`` satisfy the normal
equations ``A w = d`` with

    A[q, k] = sum_i sum_j S_i[q, j] * S_i[k, j]
    d[q]    = sum_i sum_j y_i[j]   * S_i[q, j]

which are accumulated one instance at a time and solved by Gaussian
elimination at the chunk boundary.
"""
from __future__ import annotations

import logging

import numpy as np

logger = logging.getLogger(__name__)

#: A pivot smaller than this fraction of ``max|A|`` counts as singular.
PIVOT_TOLERANCE = 1e-12
#: Tikhonov shift used on retry, as a fraction of ``trace(A) / K``.
RIDGE_FRACTION = 1e-8


class SingularSystemError(ArithmeticError):
    pass


def weighted_vote(scores: np.ndarray, weights: np.ndarray) -> np.ndarray:
    """Combined relevance ``sum_k w_k * scores[k]`` for a ``(K, L)`` score matrix."""
    scores = np.asarray(scores, dtype=np.float64)
    weights = np.asarray(weights, dtype=np.float64)
    if scores.shape[0] != len(weights):
        raise ValueError(f"{len(weights)} weights for {scores.shape[0]} components")
    return weights @ scores


def accumulate(A: np.ndarray, d: np.ndarray, scores: np.ndarray, labels: np.ndarray):
    """Add one instance's contribution to ``A`` and ``d`` in place."""
    scores = np.asarray(scores, dtype=np.float64)
    if scores.ndim != 2 or A.shape != (scores.shape[0], scores.shape[0]) or len(d) != scores.shape[0]:
        raise ValueError(f"score matrix {scores.shape} does not match A {A.shape} and d {d.shape}")
    if scores.shape[1] != len(labels):
        raise ValueError(f"{scores.shape[1]} scores per component for {len(labels)} labels")
    A += scores @ scores.T
    d += scores @ np.asarray(labels, dtype=np.float64)
    return A, d


def gaussian_elimination(A: np.ndarray, b: np.ndarray, tolerance: float = PIVOT_TOLERANCE) -> np.ndarray:
    """Solve ``A x = b`` by Gaussian elimination with partial pivoting.

    Raises :class:`SingularSystemError` when a pivot falls below
    ``tolerance * max|A|``.
    """
    A = np.array(A, dtype=np.float64)
    x = np.array(b, dtype=np.float64)
    n = len(x)
    if A.shape != (n, n):
        raise ValueError(f"expected a square {n}x{n} matrix, got {A.shape}")
    scale = np.abs(A).max() if n else 0.0
    if scale == 0.0:
        raise SingularSystemError("zero matrix")
    limit = tolerance * scale
    for k in range(n):
        p = k + int(np.argmax(np.abs(A[k:, k])))
        if abs(A[p, k]) <= limit:
            raise SingularSystemError(f"pivot {A[p, k]:.3g} below {limit:.3g} in column {k}")
        if p != k:
            A[[k, p]] = A[[p, k]]
            x[[k, p]] = x[[p, k]]
        factors = A[k + 1:, k] / A[k, k]
        A[k + 1:, k:] -= np.outer(factors, A[k, k:])
        x[k + 1:] -= factors * x[k]
    for k in range(n - 1, -1, -1):
        x[k] = (x[k] - A[k, k + 1:] @ x[k + 1:]) / A[k, k]
    return x


def solve_weights(A: np.ndarray, d: np.ndarray) -> np.ndarray:
    """Optimal combination weights from the accumulated normal equations.

    Falls back to a ridge-shifted system, then to uniform weights ``1/K``,
    when ``A`` is singular.
    """
    A = np.asarray(A, dtype=np.float64)
    if A.ndim != 2 or A.shape[0] != A.shape[1]:
        raise ValueError(f"weight system must be square, got {A.shape}")
    K = A.shape[0]
    try:
        return gaussian_elimination(A, d)
    except SingularSystemError as exc:
        ridge = RIDGE_FRACTION * np.trace(A) / K
        logger.debug("singular weight system (%s); retrying with ridge %.3g", exc, ridge)
    if ridge > 0:
        try:
            return gaussian_elimination(A + ridge * np.eye(K), d)
        except SingularSystemError:
            pass
    logger.info("weight system unsolvable; using uniform weights for %d components", K)
    return np.full(K, 1.0 / K)
