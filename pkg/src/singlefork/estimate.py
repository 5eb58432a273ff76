"""Sampling estimates of expected latency and cost from a (possibly empirical) law.

Each repetition draws ``n`` execution times, takes the fork point as the
``ceil(n(1-p))``-th smallest, then draws ``floor(np)`` residual times from the
residual law and recombines both parts the same way the asymptotic formulas do.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Optional

import numpy as np

from .residual import ResidualModel, SingleForkPolicy


@dataclass(frozen=True)
class EstimateConfig:
    n: int
    m: int = 500
    seed: Optional[int] = 0

    def __post_init__(self):
        if self.n < 2:
            raise ValueError("job size n must be >= 2")
        if self.m < 1:
            raise ValueError("need at least one repetition")


@dataclass(frozen=True)
class EstimatedMetrics:
    latency: float
    cost: float
    latency_se: Optional[float]
    cost_se: Optional[float]

    def objective(self, mu: float) -> float:
        return self.latency + mu * self.cost


def _rng(seed) -> np.random.Generator:
    if isinstance(seed, np.random.Generator):
        return seed
    return np.random.default_rng(seed)


def _summarize(t: np.ndarray, c: np.ndarray) -> EstimatedMetrics:
    m = t.size
    if m > 1:
        return EstimatedMetrics(
            float(t.mean()),
            float(c.mean()),
            float(t.std(ddof=1) / math.sqrt(m)),
            float(c.std(ddof=1) / math.sqrt(m)),
        )
    return EstimatedMetrics(float(t[0]), float(c[0]), None, None)


def estimate_repetitions(base, policy: SingleForkPolicy, cfg: EstimateConfig, seed=None):
    """Per-repetition ``(T, C, T1, C1)`` arrays; ``T1``/``C1`` are NaN for the baseline."""
    rng = _rng(cfg.seed if seed is None else seed)
    n, m = cfg.n, cfg.m
    x = base._ppf(rng.random((m, n)))
    if policy.p == 0:
        nan = np.full(m, np.nan)
        return x.max(axis=1), x.mean(axis=1), nan, nan
    p = policy.p
    k = math.ceil(n * (1.0 - p))
    n_strag = math.floor(n * p)
    part = np.partition(x, k - 1, axis=1)
    t1 = part[:, k - 1]
    c1 = part[:, :k].sum(axis=1) / n
    if n_strag == 0:
        return t1, c1 + p * t1, t1, c1
    res = ResidualModel(base, policy)
    y = res._from_uniforms(rng.random((m, n_strag, policy.r + 1)))
    t = t1 + y.max(axis=1)
    c = c1 + p * t1 + (policy.r + 1) * p * y.mean(axis=1)
    return t, c, t1, c1


def estimate_metrics(base, policy: SingleForkPolicy, cfg: EstimateConfig, seed=None) -> EstimatedMetrics:
    """Mean latency and cost over ``cfg.m`` sampled repetitions.

    ``seed`` overrides ``cfg.seed`` and may be an int, a ``SeedSequence`` or a
    ``Generator``.  With ``p = 0`` the estimate is the plain maximum and mean of
    ``n`` draws.
    """
    t, c, _, _ = estimate_repetitions(base, policy, cfg, seed)
    return _summarize(t, c)
