"""Friedman test, Nemenyi critical distance and CD-diagram data.

Score tables are ``(D, m)`` arrays: one row per dataset, one column per
model. Rank 1 is the best model on a dataset.
"""
from __future__ import annotations

import glob
import math
import json
from dataclasses import dataclass
from typing import Sequence

import numpy as np
from scipy.stats import chi2, rankdata

# Two-tailed Nemenyi critical values q_alpha (studentized range / sqrt 2)
# for m = 2..20 models.
_Q_TABLE = {
    0.05: (1.960, 2.343, 2.569, 2.728, 2.850, 2.949, 3.031, 3.102, 3.164, 3.219,
           3.268, 3.313, 3.354, 3.391, 3.426, 3.458, 3.489, 3.517, 3.544),
    0.10: (1.645, 2.052, 2.291, 2.459, 2.589, 2.693, 2.780, 2.855, 2.920, 2.978,
           3.030, 3.077, 3.120, 3.159, 3.196, 3.230, 3.261, 3.291, 3.319),
}
_DIRECTIONS = ("maximize", "minimize")


def _validate(scores) -> np.ndarray:
    scores = np.asarray(scores, dtype=np.float64)
    if scores.ndim != 2:
        raise ValueError("score table must be 2-D (datasets x models)")
    D, m = scores.shape
    if D < 2 or m < 2:
        raise ValueError(f"need at least 2 datasets and 2 models, got {D} x {m}")
    if np.isnan(scores).any():
        rows, cols = np.nonzero(np.isnan(scores))
        cells = ", ".join(f"({r}, {c})" for r, c in zip(rows, cols))
        raise ValueError(f"score table has missing cells at {cells}")
    return scores


def rank_table(scores, direction: str = "maximize", ties: str = "average") -> np.ndarray:
    """Per-dataset ranks, 1 = best.

    ``ties="average"`` gives tied models the mean of their positions, so
    every row sums to ``m(m+1)/2``. ``ties="min"`` gives them the best
    shared position (competition ranking).
    """
    scores = _validate(scores)
    if direction not in _DIRECTIONS:
        raise ValueError(f"direction must be one of {_DIRECTIONS}, got {direction!r}")
    keyed = -scores if direction == "maximize" else scores
    return rankdata(keyed, method=ties, axis=1)


def average_ranks(scores, direction: str = "maximize", ties: str = "average") -> np.ndarray:
    """Mean rank of each model over the datasets."""
    return rank_table(scores, direction, ties).mean(axis=0)


def friedman_statistic(scores, direction: str = "maximize"):
    """Friedman chi-square over average ranks.

    Returns ``(chi2_F, degrees_of_freedom, p_value)``.
    """
    ranks = average_ranks(scores, direction)
    D = np.asarray(scores).shape[0]
    m = len(ranks)
    statistic = 12.0 * D / (m * (m + 1)) * float(np.sum(ranks ** 2)) - 3.0 * D * (m + 1)
    statistic = max(statistic, 0.0)  # rounding can leave -1e-15 on full ties
    dof = m - 1
    return statistic, dof, float(chi2.sf(statistic, dof))


def nemenyi_q(m: int, alpha: float = 0.05) -> float:
    if alpha not in _Q_TABLE:
        raise ValueError(f"alpha must be one of {sorted(_Q_TABLE)}, got {alpha}")
    if not 2 <= m <= 20:
        raise ValueError(f"critical values are tabulated for 2..20 models, got {m}")
    return _Q_TABLE[alpha][m - 2]


def nemenyi_cd(m: int, n_datasets: int, alpha: float = 0.05) -> float:
    """Critical difference of average ranks for ``m`` models on ``n_datasets``."""
    if n_datasets < 1:
        raise ValueError("need at least one dataset")
    return nemenyi_q(m, alpha) * math.sqrt(m * (m + 1) / (6.0 * n_datasets))


@dataclass(frozen=True)
class CDDiagram:
    names: tuple[str, ...]  # sorted best first
    ranks: tuple[float, ...]
    cd: float
    groups: tuple[tuple[int, int], ...]  # inclusive index ranges into names

    def to_dict(self) -> dict:
        return {
            "cd": self.cd,
            "models": [{"name": n, "rank": r} for n, r in zip(self.names, self.ranks)],
            "groups": [[self.names[i] for i in range(a, b + 1)] for a, b in self.groups],
        }


def cd_diagram_data(ranks: Sequence[float], cd: float, names: Sequence[str] = None) -> CDDiagram:
    """Sort models by rank and link runs of indistinguishable ones.

    Two models are indistinguishable when their rank difference is below
    ``cd``. On the sorted rank line each maximal contiguous run of
    mutually indistinguishable models (at least two) becomes one group;
    runs nested in a longer one are dropped.
    """
    ranks = np.asarray(ranks, dtype=np.float64)
    if names is None:
        names = [str(i) for i in range(len(ranks))]
    if len(names) != len(ranks):
        raise ValueError("one name per rank required")
    order = np.argsort(ranks, kind="stable")
    r = ranks[order]
    groups = []
    last_end = -1
    for a in range(len(r)):
        b = a
        while b + 1 < len(r) and r[b + 1] - r[a] < cd:
            b += 1
        if b > a and b > last_end:
            groups.append((a, b))
            last_end = b
    return CDDiagram(tuple(names[i] for i in order), tuple(float(x) for x in r), float(cd),
                     tuple(groups))


def render_cd_text(diagram: CDDiagram) -> str:
    """Plain-text rendering: the rank line followed by the linked groups."""
    lines = [f"critical difference = {diagram.cd:.3f}"]
    lines += [f"  {r:6.2f}  {n}" for n, r in zip(diagram.names, diagram.ranks)]
    if diagram.groups:
        lines.append("not significantly different:")
        for a, b in diagram.groups:
            lines.append("  " + " - ".join(diagram.names[a:b + 1]))
    else:
        lines.append("every pair differs significantly")
    return "\n".join(lines) + "\n"


def load_summaries(pattern: str, metric: str):
    """Build a score table from run summary JSON files.

    Returns ``(datasets, models, table)``. A model missing on some dataset
    raises ValueError listing every gap.
    """
    paths = sorted(glob.glob(pattern))
    if not paths:
        raise ValueError(f"no summaries match {pattern!r}")
    cells: dict[tuple[str, str], float] = {}
    for path in paths:
        with open(path) as fh:
            summary = json.load(fh)
        try:
            value = summary["metrics"][metric]
        except KeyError:
            raise ValueError(f"{path}: no metric {metric!r}") from None
        cells[(summary["dataset"], summary["model"])] = float(value)
    datasets = sorted({d for d, _ in cells})
    models = sorted({m for _, m in cells})
    gaps = [f"{m} on {d}" for d in datasets for m in models if (d, m) not in cells]
    if gaps:
        raise ValueError("incomplete results grid, missing: " + "; ".join(gaps))
    table = np.array([[cells[(d, m)] for m in models] for d in datasets])
    return datasets, models, table
