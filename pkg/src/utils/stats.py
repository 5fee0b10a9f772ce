from dataclasses import dataclass
from typing import Tuple, Iterable

import numpy as np
from scipy.stats import norm


def normal_quantile(ci_level: float) -> float:
    return norm.ppf(0.5 + ci_level / 2)


@dataclass(frozen=True)
class BernoulliEstimate:
    """Crude Monte Carlo estimate of an event probability"""
    hits: int
    n_samples: int

    @property
    def p_hat(self) -> float:
        return self.hits / self.n_samples

    @property
    def stderr(self) -> float:
        p = self.p_hat
        return np.sqrt(p * (1 - p) / self.n_samples).item()

    def ci(self, ci_level: float=0.95) -> Tuple[float, float]:
        z = normal_quantile(ci_level)
        return max(self.p_hat - z * self.stderr, 0.0), min(self.p_hat + z * self.stderr, 1.0)

    def to_dict(self) -> dict:
        return {'p_hat': self.p_hat, 'stderr': self.stderr, 'hits': self.hits, 'n_samples': self.n_samples}


@dataclass(frozen=True)
class MomentSums:
    """Sufficient statistics of a sample mean, mergeable across chunks in any order"""
    n: int
    total: float
    total_sq: float

    @classmethod
    def of(cls, values: np.ndarray) -> "MomentSums":
        values = np.asarray(values, dtype=np.float64)
        return cls(len(values), values.sum().item(), (values ** 2).sum().item())

    @classmethod
    def merge(cls, parts: Iterable["MomentSums"]) -> "MomentSums":
        parts = list(parts)
        return cls(sum(p.n for p in parts), sum(p.total for p in parts), sum(p.total_sq for p in parts))

    @property
    def mean(self) -> float:
        return self.total / self.n

    @property
    def stderr(self) -> float:
        if self.n < 2:
            return float('nan')

        var = (self.total_sq - self.n * self.mean ** 2) / (self.n - 1)

        return np.sqrt(max(var, 0.0) / self.n).item()


def combined_stderr(*stderrs: float) -> float:
    return np.sqrt(np.sum(np.square(stderrs))).item()
