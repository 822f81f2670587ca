"""Prequential (test-then-train) evaluation and multi-label metrics.

Example-based metrics are averaged over instances; label-based metrics are
computed from per-label confusion tallies, micro-averaged (pooled) or
macro-averaged (uniform over all labels). Conventions for empty sets:

* no predicted labels: precision is 1 if the true set is empty too, else 0;
* no true labels: recall is 1 if nothing is predicted, else 0;
* empty union: accuracy 1; precision + recall = 0: F1 = 0;
* a per-label or pooled 0/0 ratio is 0.
"""
from __future__ import annotations

import csv
import json
import time
from collections import deque
from dataclasses import asdict, dataclass, fields
from typing import Callable, Iterable, Optional

import numpy as np

from .core import ContractError, Instance, MultiLabelLearner


def _ratio(num, den):
    """Elementwise ``num / den`` with ``0/0 -> 0``."""
    num = np.asarray(num, dtype=np.float64)
    den = np.asarray(den, dtype=np.float64)
    return np.divide(num, den, out=np.zeros(np.broadcast(num, den).shape), where=den > 0)


def _f1(p, r):
    p = np.asarray(p, dtype=np.float64)
    r = np.asarray(r, dtype=np.float64)
    return _ratio(2.0 * p * r, p + r)


@dataclass(frozen=True)
class InstanceRecord:
    exact_match: float
    hamming: float
    accuracy: float
    precision: float
    recall: float
    f1: float


def instance_metrics(y, y_hat) -> InstanceRecord:
    """Example-based scores of one prediction ``y_hat`` against truth ``y``.

    >>> r = instance_metrics([1, 0, 1, 0], [1, 1, 0, 0])
    >>> r.hamming, r.precision, r.recall
    (0.5, 0.5, 0.5)
    """
    y = np.asarray(y).astype(bool)
    y_hat = np.asarray(y_hat).astype(bool)
    if y.shape != y_hat.shape:
        raise ContractError(f"label vectors differ in length: {y.size} vs {y_hat.size}")
    inter = int((y & y_hat).sum())
    union = int((y | y_hat).sum())
    n_true, n_pred = int(y.sum()), int(y_hat.sum())
    precision = inter / n_pred if n_pred else float(n_true == 0)
    recall = inter / n_true if n_true else float(n_pred == 0)
    return InstanceRecord(
        exact_match=float(np.array_equal(y, y_hat)),
        hamming=float((y == y_hat).mean()),
        accuracy=inter / union if union else 1.0,
        precision=precision,
        recall=recall,
        # harmonic mean of precision and recall, in exact-count form
        f1=2 * inter / (n_true + n_pred) if n_true + n_pred else 1.0,
    )


class ConfusionCounts:
    """Per-label TP/FP/FN/TN tallies plus sums of example-based scores."""

    def __init__(self, n_labels: int):
        self.n_labels = n_labels
        self.tp = np.zeros(n_labels, dtype=np.int64)
        self.fp = np.zeros(n_labels, dtype=np.int64)
        self.fn = np.zeros(n_labels, dtype=np.int64)
        self.tn = np.zeros(n_labels, dtype=np.int64)
        self.sums = np.zeros(len(fields(InstanceRecord)))
        self.instances = 0

    def add(self, y, y_hat, record: Optional[InstanceRecord] = None) -> InstanceRecord:
        y = np.asarray(y).astype(bool)
        y_hat = np.asarray(y_hat).astype(bool)
        if record is None:
            record = instance_metrics(y, y_hat)
        self.tp += y & y_hat
        self.fp += ~y & y_hat
        self.fn += y & ~y_hat
        self.tn += ~y & ~y_hat
        self.sums += [getattr(record, f.name) for f in fields(InstanceRecord)]
        self.instances += 1
        return record

    def example_means(self) -> InstanceRecord:
        if not self.instances:
            return InstanceRecord(0.0, 0.0, 0.0, 0.0, 0.0, 0.0)
        return InstanceRecord(*(self.sums / self.instances).tolist())


@dataclass(frozen=True)
class LabelBasedScores:
    micro_p: float
    micro_r: float
    micro_f1: float
    macro_p: float
    macro_r: float
    macro_f1: float


def micro_macro(counts: ConfusionCounts) -> LabelBasedScores:
    """Micro (pooled) and macro (label-averaged) precision, recall and F1."""
    tp, fp, fn = counts.tp.sum(), counts.fp.sum(), counts.fn.sum()
    micro_p = float(_ratio(tp, tp + fp))
    micro_r = float(_ratio(tp, tp + fn))
    p = _ratio(counts.tp, counts.tp + counts.fp)
    r = _ratio(counts.tp, counts.tp + counts.fn)
    return LabelBasedScores(
        micro_p=micro_p,
        micro_r=micro_r,
        micro_f1=float(_f1(micro_p, micro_r)),
        macro_p=float(p.mean()),
        macro_r=float(r.mean()),
        macro_f1=float(_f1(p, r).mean()),
    )


@dataclass(frozen=True)
class MetricReport:
    exact_match: float
    hamming_score: float
    acc_ex: float
    prec_ex: float
    rec_ex: float
    f1_ex: float
    micro_p: float
    micro_r: float
    micro_f1: float
    macro_p: float
    macro_r: float
    macro_f1: float
    elapsed_seconds: float
    model_size_bytes: int
    instances: int  # evaluated instances covered by the report
    instances_seen: int  # stream position when the report was made

    @classmethod
    def from_counts(cls, counts: ConfusionCounts, elapsed_seconds: float = 0.0,
                    model_size_bytes: int = 0, instances_seen: int = 0) -> "MetricReport":
        ex = counts.example_means()
        label = micro_macro(counts) if counts.instances else LabelBasedScores(0, 0, 0, 0, 0, 0)
        return cls(ex.exact_match, ex.hamming, ex.accuracy, ex.precision, ex.recall, ex.f1,
                   float(label.micro_p), float(label.micro_r), float(label.micro_f1),
                   float(label.macro_p), float(label.macro_r), float(label.macro_f1),
                   float(elapsed_seconds), int(model_size_bytes), counts.instances, instances_seen)

    @property
    def metrics(self) -> dict:
        """The twelve quality metrics, without efficiency fields."""
        return {k: v for k, v in asdict(self).items() if k in METRIC_NAMES}


METRIC_NAMES = ("exact_match", "hamming_score", "acc_ex", "prec_ex", "rec_ex", "f1_ex",
                "micro_p", "micro_r", "micro_f1", "macro_p", "macro_r", "macro_f1")


class EvaluationWindow:
    """Tumbling window of ``size`` evaluated instances.

    :meth:`add` returns a :class:`ConfusionCounts` over the last ``size``
    records every time the window completes, else None.
    """

    def __init__(self, size: int, n_labels: int):
        if size < 1:
            raise ValueError("window size must be positive")
        self.size = size
        self.n_labels = n_labels
        self.ring: deque = deque(maxlen=size)
        self._since_report = 0

    def add(self, y, y_hat, record: InstanceRecord) -> Optional[ConfusionCounts]:
        self.ring.append((np.asarray(y), np.asarray(y_hat), record))
        self._since_report += 1
        if self._since_report < self.size:
            return None
        self._since_report = 0
        counts = ConfusionCounts(self.n_labels)
        for y_i, y_hat_i, rec in self.ring:
            counts.add(y_i, y_hat_i, rec)
        return counts


def prequential_run(learner: MultiLabelLearner, stream: Iterable[Instance], window_size: int,
                    on_window: Optional[Callable[[MetricReport], None]] = None):
    """Interleaved test-then-train evaluation of ``learner`` over ``stream``.

    Every instance is first predicted, then used for training. Predictions
    are scored only once ``learner.is_ready`` (for chunk ensembles: after
    the first component exists). Returns ``(final_report, window_reports)``
    where the final report covers every scored instance.
    """
    n_labels = learner.n_labels
    total = ConfusionCounts(n_labels)
    window = EvaluationWindow(window_size, n_labels)
    series: list[MetricReport] = []
    seen = 0
    start = time.perf_counter()
    for instance in stream:
        if instance.labels is None:
            raise ContractError(f"instance {seen} is unlabeled; prequential evaluation needs labels")
        if len(instance.labels) != n_labels:
            raise ContractError(f"instance {seen} has {len(instance.labels)} labels, learner expects {n_labels}")
        seen += 1
        if learner.is_ready:
            y_hat = learner.predict(instance.features)
            record = total.add(instance.labels, y_hat)
            counts = window.add(instance.labels, y_hat, record)
            if counts is not None:
                report = MetricReport.from_counts(counts, time.perf_counter() - start,
                                                  learner.size_estimate(), seen)
                series.append(report)
                if on_window is not None:
                    on_window(report)
        learner.train_instance(instance)
    final = MetricReport.from_counts(total, time.perf_counter() - start,
                                     learner.size_estimate(), seen)
    return final, series


def write_series_csv(path, series: Iterable[MetricReport]) -> None:
    """One row per window: index, stream position, metrics and efficiency."""
    columns = ["window_index", "instances_seen", *METRIC_NAMES,
               "elapsed_seconds", "model_size_bytes"]
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(columns)
        for i, report in enumerate(series):
            row = asdict(report)
            writer.writerow([i, report.instances_seen,
                             *(f"{row[m]:.6f}" for m in METRIC_NAMES),
                             f"{report.elapsed_seconds:.6f}", report.model_size_bytes])


def summary_dict(final: MetricReport, dataset: str, model: str, seed: int, config: dict,
                 n_windows: int, record_time: bool = False) -> dict:
    """JSON-ready run summary.

    Wall time is machine-dependent, so it is left out unless ``record_time``
    is set; that keeps reruns byte-identical.
    """
    summary = {
        "dataset": dataset,
        "model": model,
        "seed": seed,
        "config": config,
        "instances_seen": final.instances_seen,
        "instances_evaluated": final.instances,
        "n_windows": n_windows,
        "metrics": {k: round(v, 10) for k, v in final.metrics.items()},
        "model_size_bytes": final.model_size_bytes,
    }
    if record_time:
        summary["elapsed_seconds"] = final.elapsed_seconds
    return summary


def write_summary_json(path, summary: dict) -> None:
    with open(path, "w") as fh:
        json.dump(summary, fh, indent=2, sort_keys=True)
        fh.write("\n")
