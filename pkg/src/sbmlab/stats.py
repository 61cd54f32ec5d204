"""Monte Carlo estimates and two-sample comparisons."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy import stats as _st

__all__ = ["MCEstimate", "Comparison", "compare", "median_stderr", "fraction_stderr", "ks_two_sample", "hill_tail_index"]


@dataclass(frozen=True)
class MCEstimate:
    """Sample mean, its standard error and the replica count.

    ``m2`` (sum of squared deviations) is kept so estimates over disjoint
    replica sets merge exactly (Chan et al. parallel update).
    """

    mean: float
    stderr: float
    n: int
    m2: float = float("nan")

    @classmethod
    def from_samples(cls, x) -> "MCEstimate":
        x = np.asarray(x, dtype=np.float64)
        n = x.size
        if n < 1:
            raise ValueError("no samples")
        mean = float(np.mean(x))
        m2 = float(np.sum((x - mean) ** 2))
        se = math.sqrt(m2 / (n - 1) / n) if n > 1 else 0.0
        return cls(mean, se, n, m2)

    @classmethod
    def exact(cls, value: float, n: int) -> "MCEstimate":
        return cls(float(value), 0.0, n, 0.0)

    def merge(self, other: "MCEstimate") -> "MCEstimate":
        n = self.n + other.n
        delta = other.mean - self.mean
        mean = self.mean + delta * other.n / n
        m2 = self.m2 + other.m2 + delta * delta * self.n * other.n / n
        se = math.sqrt(m2 / (n - 1) / n) if n > 1 else 0.0
        return MCEstimate(mean, se, n, m2)


@dataclass(frozen=True)
class Comparison:
    z: float
    passed: bool
    diagnostic: str = ""


def compare(a: MCEstimate, b: MCEstimate, z_max: float = 4.0, min_n: int = 30) -> Comparison:
    """Two-sample z test for independent estimates."""
    if a.n < min_n or b.n < min_n:
        raise ValueError(f"compare needs at least {min_n} replicas per side, got {a.n} and {b.n}")
    diff = abs(a.mean - b.mean)
    se = math.hypot(a.stderr, b.stderr)
    if se == 0.0:
        if diff == 0.0:
            return Comparison(0.0, True)
        return Comparison(math.inf, False, f"both standard errors are 0 but means differ by {diff:.3g}")
    z = diff / se
    return Comparison(z, z <= z_max)


def fraction_stderr(p: float, n: int) -> float:
    return math.sqrt(max(p * (1.0 - p), 0.0) / n)


def median_stderr(x) -> float:
    """Order-statistic standard error of the sample median.

    Half the distance between the quantiles at ``1/2 -+ 1/(2 sqrt n)``, the
    binomial standard deviation of the rank of the median.
    """
    x = np.asarray(x, dtype=np.float64)
    n = x.size
    h = 0.5 / math.sqrt(n)
    lo, hi = np.quantile(x, [0.5 - h, 0.5 + h])
    return float(hi - lo) / 2.0


def ks_two_sample(a, b) -> tuple[float, float]:
    res = _st.ks_2samp(np.asarray(a), np.asarray(b))
    return float(res.statistic), float(res.pvalue)


def hill_tail_index(x, k: int = 100) -> float:
    """Hill estimate of the right-tail index from the ``k`` largest samples.

    Values below 2 mean the variance is effectively infinite at this sample
    size, so a ``z`` built from the sample standard error is unreliable.
    """
    x = np.sort(np.asarray(x, dtype=np.float64))[::-1]
    k = min(k, x.size - 1)
    if k < 1 or x[k] <= 0:
        return math.inf
    logs = np.log(x[:k] / x[k])
    m = logs.mean()
    return math.inf if m == 0 else float(1.0 / m)
