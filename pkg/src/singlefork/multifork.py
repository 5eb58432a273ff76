"""Multi-fork policies evaluated as a chain of single-fork sub-problems.

After fork ``i`` the surviving tasks form a new job of ``n * p_i`` tasks whose
execution law is the residual law of the previous stage.  Fresh replicas are
always drawn from the base law; surviving copies keep their conditioned residual.
Every task at stage ``i`` has the same number of running copies, which weights
that stage's machine time.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np
from scipy import integrate

from .analytic import MetricsPair, quantile_integral
from .dist import (
    EULER_GAMMA,
    Frechet,
    Gumbel,
    InfiniteMomentError,
    Pareto,
    ShiftedExponential,
    UnsupportedDistributionError,
    expected_limit,
    is_parametric,
)
from .residual import QUAD_EPSABS, ResidualModel, SingleForkPolicy, tail_inverse


@dataclass(frozen=True)
class MultiForkPolicy:
    stages: tuple[SingleForkPolicy, ...]

    def __init__(self, stages: Sequence):
        stages = tuple(s if isinstance(s, SingleForkPolicy) else SingleForkPolicy(*s) for s in stages)
        if not stages:
            raise ValueError("a multi-fork policy needs at least one stage")
        ps = [s.p for s in stages]
        if any(not (0 < p < 1) for p in ps):
            raise ValueError("every fork fraction must lie in (0, 1)")
        if any(b >= a for a, b in zip(ps, ps[1:])):
            raise ValueError(f"fork fractions must be strictly decreasing, got {ps}")
        object.__setattr__(self, "stages", stages)

    @property
    def fractions(self) -> list[float]:
        return [s.p for s in self.stages]


def stage_fractions(ps: Sequence[float]) -> list[float]:
    """Per-stage fork fraction: share of the stage's tasks still running at its fork."""
    out, prev = [], 1.0
    for p in ps:
        q = p / prev
        if not (0 < q < 1):
            raise ValueError(f"stage fraction {q:g} outside (0, 1)")
        out.append(q)
        prev = p
    return out


def _integrate_tail(sf, lo: float, hi: float, kinks) -> float:
    pts = sorted({lo, hi, *[k for k in kinks if lo < k < hi]})
    total = 0.0
    for a, b in zip(pts[:-1], pts[1:]):
        total += integrate.quad(lambda y: float(sf(y)), a, b, epsabs=QUAD_EPSABS, epsrel=1e-11, limit=200)[0]
    return total


class _BaseStage:
    """Stage-1 law: the base distribution itself, one copy per task."""

    copies = 1

    def __init__(self, base):
        self.base = base

    def _sf(self, y):
        return self.base._sf(y)

    @property
    def kinks(self):
        return [self.base.lower]

    def fork_point(self, q: float) -> float:
        return self.base.quantile(1.0 - q)

    def run_until(self, s: float, q: float) -> float:
        # expected per-copy busy time up to the fork, min(X, s)
        return quantile_integral(self.base, 1.0 - q) + q * s


class _ResidualStage:
    """Law after a fork, wrapping any ``_sf`` with generic quantile/mean/extreme helpers."""

    def __init__(self, base, sf, copies: int, kinks, residual: ResidualModel | None = None):
        self.base = base
        self._sf = sf
        self.copies = copies
        self.kinks = [k for k in kinks if k > 0]
        self.residual = residual

    @property
    def family(self):
        if isinstance(self.base, Pareto):
            return Frechet(self.base.alpha * self.copies)
        return Gumbel()

    def fork_point(self, q: float) -> float:
        return tail_inverse(self._sf, q)

    def run_until(self, s: float, q: float) -> float:
        return _integrate_tail(self._sf, 0.0, s, self.kinks)

    def mean(self) -> float:
        if self.residual is not None:
            return self.residual.mean()
        fam = self.family
        if isinstance(fam, Frechet) and fam.xi <= 1:
            raise InfiniteMomentError("residual mean diverges")
        y_cut = tail_inverse(self._sf, 1e-13)
        body = _integrate_tail(self._sf, 0.0, y_cut, self.kinks + list(np.geomspace(1e-3 + y_cut / 1e6, y_cut, 12)))
        tail_at = float(self._sf(y_cut))
        if isinstance(fam, Frechet):
            return body + tail_at * y_cut / (fam.xi - 1.0)
        return body + tail_at / (self.base.lam * self.copies)

    def expected_max(self, count: float) -> float:
        if count < 2:
            raise ValueError(f"need at least two final stragglers, got {count:g}")
        if self.residual is not None:
            ev = self.residual.evt_constants(count)
            return ev.a_n * expected_limit(ev.family) + ev.b_n
        x_n = tail_inverse(self._sf, 1.0 / count)
        fam = self.family
        if isinstance(fam, Frechet):
            return x_n * expected_limit(fam)
        return x_n + EULER_GAMMA / (self.base.lam * self.copies)


def _next_stage(base, stage, s: float, q: float, pol: SingleForkPolicy, first: bool):
    r, l = pol.r, pol.l
    if first:
        res = ResidualModel(base, SingleForkPolicy(q, r, l))
        kinks = [base.lower, base.lower - res.fork_quantile]
        return _ResidualStage(base, res._sf, r + 1 if l == 0 else 1 + r, kinks, res)
    if l == 0:
        sf = lambda y: base._sf(np.maximum(y, 0.0)) ** (r + 1)
        return _ResidualStage(base, sf, r + 1, [base.lower])
    prev_sf = stage._sf

    def sf(y):
        y = np.maximum(np.asarray(y, dtype=float), 0.0)
        return np.clip(base._sf(y) ** r * prev_sf(y + s) / q, 0.0, 1.0)

    kinks = [base.lower] + [k - s for k in stage.kinks]
    return _ResidualStage(base, sf, stage.copies + r, kinks)


def multi_fork_metrics(base, mf: MultiForkPolicy, n: float) -> MetricsPair:
    """Large-``n`` expected latency and cost of a multi-fork policy."""
    if not is_parametric(base):
        raise UnsupportedDistributionError("multi-fork evaluation needs a parametric base")
    qs = stage_fractions(mf.fractions)
    stage = _BaseStage(base)
    alive = 1.0  # fraction of the original tasks still unfinished at the stage start
    latency = cost = 0.0
    for i, (pol, q) in enumerate(zip(mf.stages, qs)):
        s = stage.fork_point(q)
        latency += s
        cost += alive * stage.copies * stage.run_until(s, q)
        stage = _next_stage(base, stage, s, q, pol, first=i == 0)
        alive *= q
    latency += stage.expected_max(alive * n)
    cost += alive * stage.copies * stage.mean()
    return MetricsPair(latency, cost)
