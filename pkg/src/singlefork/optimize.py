"""Heuristic search for a good single-fork policy under ``J = T + mu * C``.

For the current fork fraction the replica count is grown one step at a time,
choosing the better of relaunching and keeping the original, while that lowers
``J``.  The fork fraction then takes a finite-difference gradient step.  Every
``J`` is a fresh sampling estimate, so the search is noisy and offers no
optimality guarantee; it reports the best policy it evaluated.
"""
from __future__ import annotations

import logging
from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np

from .estimate import EstimateConfig, EstimatedMetrics, estimate_metrics
from .residual import BASELINE, SingleForkPolicy

log = logging.getLogger(__name__)


def objective(metrics, mu: float) -> float:
    if mu < 0:
        raise ValueError("cost weight mu must be nonnegative")
    return metrics.latency + mu * metrics.cost


@dataclass(frozen=True)
class SearchConfig:
    mu: float
    estimate_cfg: EstimateConfig
    delta_p: float = 0.002
    k: int = 25
    r_max: int = 10
    p_min: Optional[float] = None
    p_max: float = 0.5
    normalized_gradient: bool = False
    learning_rate: float = 1e-5
    common_random_numbers: bool = False

    def __post_init__(self):
        if self.mu < 0:
            raise ValueError("cost weight mu must be nonnegative")
        if self.delta_p <= 0 or self.k < 1 or self.r_max < 1:
            raise ValueError("need delta_p > 0, k >= 1 and r_max >= 1")

    @property
    def p_bounds(self) -> tuple[float, float]:
        lo = 1.0 / self.estimate_cfg.n if self.p_min is None else self.p_min
        if not (0 < lo <= self.p_max < 1):
            raise ValueError(f"invalid fork-fraction bounds [{lo}, {self.p_max}]")
        return lo, self.p_max


@dataclass(frozen=True)
class Evaluation:
    iteration: int
    phase: str
    p: float
    r: int
    l: int
    latency: float
    cost: float
    objective: float


@dataclass(frozen=True)
class SearchResult:
    policy: SingleForkPolicy
    latency: float
    cost: float
    objective: float
    baseline_objective: float
    trajectory: tuple[Evaluation, ...] = field(repr=False)
    diagnostics: tuple[str, ...] = ()


def _policy(p: float, r: int, l: int) -> SingleForkPolicy:
    # no extra replica means nothing changes, whatever l says
    return BASELINE if r == 0 else SingleForkPolicy(p, r, l)


def best_single_fork(base, cfg: SearchConfig, seed=None) -> SearchResult:
    """Run the heuristic search; ``seed`` defaults to ``cfg.estimate_cfg.seed``."""
    root = seed if isinstance(seed, np.random.SeedSequence) else np.random.SeedSequence(
        cfg.estimate_cfg.seed if seed is None else seed
    )
    p_lo, p_hi = cfg.p_bounds
    mu = cfg.mu
    trajectory: list[Evaluation] = []
    diagnostics: list[str] = []
    iteration_stream = [None]

    def evaluate(p, r, l, phase, it) -> Evaluation:
        if cfg.common_random_numbers and iteration_stream[0] is not None:
            stream = iteration_stream[0]
        else:
            stream = root.spawn(1)[0]
        est = estimate_metrics(base, _policy(p, r, l), cfg.estimate_cfg, seed=stream)
        ev = Evaluation(it, phase, p, r, l, est.latency, est.cost, objective(est, mu))
        trajectory.append(ev)
        return ev

    baseline = evaluate(0.0, 0, 1, "baseline", -1)
    p, r_best, l_best = p_lo, 0, 0
    for it in range(cfg.k):
        if cfg.common_random_numbers:
            iteration_stream[0] = root.spawn(1)[0]
        current = evaluate(p, r_best, l_best, "current", it)
        while True:
            if r_best + 1 > cfg.r_max:
                msg = f"iteration {it}: replica cap r_max={cfg.r_max} reached at p={p:.6g}"
                if not diagnostics:
                    log.warning("%s (further hits recorded in diagnostics)", msg)
                diagnostics.append(msg)
                break
            relaunch = evaluate(p, r_best + 1, 0, "propose", it)
            keep = evaluate(p, r_best + 1, 1, "propose", it)
            cand = keep if keep.objective < relaunch.objective else relaunch
            if cand.objective - current.objective < 0:
                r_best, l_best, current = cand.r, cand.l, cand
            else:
                break
        probe = evaluate(p + cfg.delta_p, r_best, l_best, "probe", it)
        d_j = probe.objective - current.objective
        if cfg.normalized_gradient:
            step = cfg.learning_rate * d_j / cfg.delta_p
        else:
            step = cfg.delta_p * d_j
        p = float(np.clip(p - step, p_lo, p_hi))

    best = min(trajectory, key=lambda e: e.objective)
    return SearchResult(
        _policy(best.p, best.r, best.l),
        best.latency,
        best.cost,
        best.objective,
        baseline.objective,
        tuple(trajectory),
        tuple(diagnostics),
    )


def mapreduce_reference_curve(
    base, n: int, p_grid: Sequence[float], estimate_cfg: EstimateConfig, seed=None
) -> list[tuple[float, EstimatedMetrics]]:
    """Estimated metrics of backup tasks (one extra copy, original kept) along ``p_grid``."""
    if estimate_cfg.n != n:
        estimate_cfg = EstimateConfig(n, estimate_cfg.m, estimate_cfg.seed)
    root = seed if isinstance(seed, np.random.SeedSequence) else np.random.SeedSequence(
        estimate_cfg.seed if seed is None else seed
    )
    grid = sorted(p_grid)
    out = []
    for p, stream in zip(grid, root.spawn(len(grid))):
        policy = BASELINE if p == 0 else SingleForkPolicy(p, 1, 1)
        out.append((p, estimate_metrics(base, policy, estimate_cfg, seed=stream)))
    return out
