"""ADWIN change detector over a stream of values in [0, 1].

The window is stored as an exponential histogram: row ``i`` holds up to
``max_buckets`` buckets that each summarise ``2**i`` consecutive values by
their sum and variance. Every ``clock`` insertions each split of the window
into an older and a newer part is tested; when their means differ by more
than the cut threshold the oldest bucket is dropped and the test repeats.
"""
from __future__ import annotations

import math
from collections import deque


class Adwin:
    def __init__(self, delta: float = 0.002, max_buckets: int = 5, clock: int = 32,
                 min_window: int = 10, min_subwindow: int = 5):
        self.delta = delta
        self.max_buckets = max_buckets
        self.clock = clock
        self.min_window = min_window
        self.min_subwindow = min_subwindow
        self.reset()

    def reset(self) -> None:
        # rows[i] holds [sum, variance] pairs, oldest first
        self.rows: list[deque] = []
        self.width = 0
        self.total = 0.0
        self.variance_sum = 0.0  # sum of squared deviations over the window
        self.n_detections = 0
        self._ticks = 0

    @property
    def mean(self) -> float:
        return self.total / self.width if self.width else 0.0

    @property
    def variance(self) -> float:
        return self.variance_sum / self.width if self.width else 0.0

    def update(self, value: float) -> bool:
        """Add ``value``; return True if a change was detected."""
        if not 0.0 <= value <= 1.0:
            raise ValueError(f"ADWIN input must lie in [0, 1], got {value}")
        self._insert(float(value))
        self._ticks += 1
        if self._ticks % self.clock or self.width <= self.min_window:
            return False
        changed = False
        while self.width > self.min_window and self._cut_once():
            changed = True
        if changed:
            self.n_detections += 1
        return changed

    def _insert(self, value: float) -> None:
        if self.width:
            mean = self.total / self.width
            self.variance_sum += self.width * (value - mean) ** 2 / (self.width + 1)
        self.width += 1
        self.total += value
        if not self.rows:
            self.rows.append(deque())
        self.rows[0].append([value, 0.0])
        self._compress()

    def _compress(self) -> None:
        i = 0
        while i < len(self.rows) and len(self.rows[i]) > self.max_buckets:
            row = self.rows[i]
            s1, v1 = row.popleft()
            s2, v2 = row.popleft()
            n = 2 ** i
            merged_var = v1 + v2 + n * n * (s1 / n - s2 / n) ** 2 / (2 * n)
            if i + 1 == len(self.rows):
                self.rows.append(deque())
            self.rows[i + 1].append([s1 + s2, merged_var])
            i += 1

    def _drop_oldest(self) -> None:
        i = len(self.rows) - 1
        s, v = self.rows[i].popleft()
        n = 2 ** i
        self.width -= n
        self.total -= s
        if self.width:
            mean_rest = self.total / self.width
            self.variance_sum -= v + n * self.width * (s / n - mean_rest) ** 2 / (n + self.width)
        else:
            self.variance_sum = 0.0
        self.variance_sum = max(self.variance_sum, 0.0)
        if not self.rows[i]:
            self.rows.pop()

    def _cut_threshold(self, n0: int, n1: int) -> float:
        dd = math.log(2.0 * math.log(self.width) / self.delta)
        m = 1.0 / (n0 - self.min_subwindow + 1) + 1.0 / (n1 - self.min_subwindow + 1)
        return math.sqrt(2.0 * m * self.variance * dd) + 2.0 / 3.0 * dd * m

    def _cut_once(self) -> bool:
        """Test every split point once; drop the oldest bucket on a cut."""
        n0, s0 = 0, 0.0
        n1, s1 = self.width, self.total
        for i in range(len(self.rows) - 1, -1, -1):
            size = 2 ** i
            row = self.rows[i]
            for k, (s, _) in enumerate(row):
                if i == 0 and k == len(row) - 1:
                    return False  # newest bucket: nothing on the right
                n0 += size
                n1 -= size
                s0 += s
                s1 -= s
                if n0 > self.min_subwindow + 1 and n1 > self.min_subwindow + 1:
                    if abs(s0 / n0 - s1 / n1) > self._cut_threshold(n0, n1):
                        self._drop_oldest()
                        return True
        return False
