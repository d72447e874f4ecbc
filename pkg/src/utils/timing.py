import time
from contextlib import contextmanager
from typing import Dict, Iterator

import numpy as np

# 0.01 ms 到 100 s 的对数分箱
_EDGES_MS = np.logspace(-2, 5, 71)


class LatencyHistogram:
    """固定对数分箱的耗时直方图，内存占用与样本数无关"""

    def __init__(self):
        self.counts = np.zeros(len(_EDGES_MS) + 1, dtype=np.int64)
        self.total_ms = 0.0
        self.max_ms = 0.0

    def record(self, seconds: float) -> None:
        ms = seconds * 1000.0
        self.counts[int(np.searchsorted(_EDGES_MS, ms, side="right"))] += 1
        self.total_ms += ms
        self.max_ms = max(self.max_ms, ms)

    @property
    def count(self) -> int:
        return int(self.counts.sum())

    def percentile(self, q: float) -> float:
        """
        按分箱上界估计百分位数

        Args:
            q: 0 到 100 之间的百分位

        Returns:
            float: 毫秒，无样本时返回 0
        """
        n = self.count
        if n == 0:
            return 0.0
        rank = int(np.ceil(q / 100.0 * n))
        idx = int(np.searchsorted(np.cumsum(self.counts), max(rank, 1)))
        if idx >= len(_EDGES_MS):
            return self.max_ms
        return float(min(_EDGES_MS[idx], self.max_ms))

    def to_dict(self) -> Dict[str, float]:
        n = self.count
        return {
            "count": n,
            "mean_ms": self.total_ms / n if n else 0.0,
            "p50_ms": self.percentile(50),
            "p95_ms": self.percentile(95),
            "max_ms": self.max_ms,
        }


@contextmanager
def stopwatch(timings: Dict[str, float], stage: str) -> Iterator[None]:
    """把代码块耗时（秒）写入 timings[stage]"""
    start = time.perf_counter()
    try:
        yield
    finally:
        timings[stage] = time.perf_counter() - start
