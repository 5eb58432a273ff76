"""Large-``n`` expected latency and cost of single-fork policies.

``metrics_general`` works for any parametric base law through the residual
model; ``metrics_pareto`` and ``metrics_sexp`` are the closed forms for the two
canonical families and are kept independent of it so each can check the other.
"""
from __future__ import annotations

import logging
import math
from dataclasses import dataclass
from typing import Optional, Sequence

from scipy import integrate

from .dist import (
    EULER_GAMMA,
    Pareto,
    ShiftedExponential,
    UnsupportedDistributionError,
    expected_limit,
    expected_maximum,
    is_parametric,
)
from .residual import QUAD_EPSABS, ResidualModel, SingleForkPolicy, pareto_keep_scale

log = logging.getLogger(__name__)


@dataclass(frozen=True)
class MetricsPair:
    latency: float
    cost: float

    def objective(self, mu: float) -> float:
        return self.latency + mu * self.cost


@dataclass(frozen=True)
class StageMetrics:
    """Latency and cost split at the fork point (``t1``/``c1`` before, ``t2``/``c2`` after)."""

    t1: float
    t2: float
    c1: float
    c2: float

    @property
    def total(self) -> MetricsPair:
        return MetricsPair(self.t1 + self.t2, self.c1 + self.c2)


def quantile_integral(base, upper: float) -> float:
    """``int_0^upper F^{-1}(h) dh`` by adaptive quadrature."""
    f = lambda h: float(base._ppf(h))
    return integrate.quad(f, 0.0, upper, epsabs=QUAD_EPSABS, epsrel=1e-12, limit=200)[0]


def stage_metrics(base, policy: SingleForkPolicy, n: float) -> StageMetrics:
    if n < 2:
        raise ValueError(f"job size n must be >= 2, got {n}")
    if not is_parametric(base):
        raise UnsupportedDistributionError(
            "asymptotic metrics need a parametric base; use the estimator for empirical data"
        )
    if policy.is_baseline:
        return StageMetrics(0.0, expected_maximum(base, n), base.mean(), 0.0)
    p = policy.p
    pn = p * n
    if pn < 2:
        raise ValueError(f"need p*n >= 2 stragglers, got {pn:g}")
    res = ResidualModel(base, policy)
    t1 = res.fork_quantile
    ev = res.evt_constants(pn)
    t2 = ev.a_n * expected_limit(ev.family) + ev.b_n
    c1 = quantile_integral(base, 1.0 - p) + p * t1
    c2 = policy.copies_after_fork * p * res.mean()
    return StageMetrics(t1, t2, c1, c2)


def metrics_general(base, policy: SingleForkPolicy, n: float) -> MetricsPair:
    return stage_metrics(base, policy, n).total


def metrics_pareto(alpha: float, xm: float, policy: SingleForkPolicy, n: float) -> MetricsPair:
    """Closed-form metrics for a Pareto(alpha, xm) base."""
    r, l, p = policy.r, policy.l, policy.p
    if alpha <= 1:
        raise ValueError("closed form needs alpha > 1 (finite mean)")
    mean_x = xm * alpha / (alpha - 1.0)
    if policy.is_baseline:
        return MetricsPair(math.gamma(1.0 - 1.0 / alpha) * xm * n ** (1.0 / alpha), mean_x)
    s = (r + 1) * alpha
    if s <= 1:
        raise ValueError(f"post-fork tail index (r+1)*alpha = {s} <= 1: latency diverges")
    if l == 0:
        scale = (p * n) ** (1.0 / s) * xm
        mean_y = s * xm / (s - 1.0)
    else:
        scale = pareto_keep_scale(alpha, xm, p, r, n)
        mean_y = ResidualModel(Pareto(alpha, xm), policy).mean()
    latency = xm * p ** (-1.0 / alpha) + math.gamma(1.0 - 1.0 / s) * scale
    cost = mean_x - xm * p ** (1.0 - 1.0 / alpha) / (alpha - 1.0) + (r + 1) * p * mean_y
    return MetricsPair(latency, cost)


def metrics_sexp(delta: float, lam: float, policy: SingleForkPolicy, n: float) -> MetricsPair:
    """Closed-form metrics for a shifted-exponential base.

    The cost carries no ``p * delta`` term beyond the ones below: stragglers only
    pay ``delta`` again for freshly launched copies.
    """
    r, l, p = policy.r, policy.l, policy.p
    if policy.is_baseline:
        return MetricsPair(delta + (math.log(n) + EULER_GAMMA) / lam, delta + 1.0 / lam)
    if r + l == 0:
        log.warning("(r, l) = (0, 0) has no closed-form latency; using the general evaluator")
        return metrics_general(ShiftedExponential(delta, lam), policy, n)
    latency = (2 * r + l) / (r + l) * delta + (math.log(n) - r * math.log(p) + EULER_GAMMA) / (
        (r + 1) * lam
    )
    if l == 1:
        cost = delta + 1.0 / lam + p * r * (1.0 - math.exp(-lam * delta)) / lam
    else:
        cost = delta + 1.0 / lam + p * (r + 1) * delta
    return MetricsPair(latency, cost)


# -- comparison predicates ---------------------------------------------------

def pareto_relaunch_preferred(p: float, r: int, n: float, alpha: float) -> bool:
    """Whether relaunching gives lower latency than keeping the original (Pareto base)."""
    if not (0.0 < p < 1.0):
        raise ValueError("p must lie in (0, 1)")
    return p ** (1.0 / alpha) + (n * p) ** (-1.0 / ((r + 1) * alpha)) <= 1.0


def pareto_suboptimal_boundary(
    r: int, alpha: float, n: float, xm: float = 1.0, step: float = 1e-4
) -> float:
    """Upper end ``p*`` of the range ``(0, p*)`` where relaunching policies are dominated.

    A policy is dominated when latency and cost move the same way in ``p``
    (``dT/dp * dC/dp > 0``): a nearby fork fraction improves both.
    """
    h = step / 4.0

    def metrics(p):
        return metrics_pareto(alpha, xm, SingleForkPolicy(p, r, 0), n)

    last_good = 0.0
    k = 1
    while k * step < 1.0 - step:
        p = k * step
        hi, lo = metrics(p + h), metrics(p - h)
        prod = (hi.latency - lo.latency) * (hi.cost - lo.cost)
        if prod <= 0:
            return last_good
        last_good = p
        k += 1
    return 0.0


def sexp_relaunch_gap(delta: float, lam: float, r: int) -> float:
    """``g(beta) = beta r + beta - r + r e^{-beta}`` at ``beta = lam * delta``."""
    beta = lam * delta
    return beta * r + beta - r + r * math.exp(-beta)


def sexp_relaunch_strictly_worse(delta: float, lam: float, r: int) -> bool:
    """Whether relaunching costs strictly more than keeping the original (latency is never better)."""
    if delta < 0 or lam <= 0 or r < 1:
        raise ValueError("need delta >= 0, lam > 0, r >= 1")
    return sexp_relaunch_gap(delta, lam, r) > 0


# -- sweeps ------------------------------------------------------------------

@dataclass(frozen=True)
class TradeoffPoint:
    p: float
    r: int
    l: int
    metrics: Optional[MetricsPair]
    error: Optional[str] = None


def tradeoff_curve(base, r: int, l: int, n: float, p_grid: Sequence[float]) -> list[TradeoffPoint]:
    """Metrics along a grid of fork fractions; failing points keep their error message."""
    out = []
    for p in sorted(p_grid):
        try:
            m = metrics_general(base, SingleForkPolicy(p, r, l), n)
            out.append(TradeoffPoint(p, r, l, m))
        except (ValueError, ArithmeticError) as exc:
            out.append(TradeoffPoint(p, r, l, None, str(exc)))
    return out
