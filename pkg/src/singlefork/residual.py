"""Single-fork policies and the law of the post-fork residual straggler time.

After the fork point ``F_X^{-1}(1-p)`` every straggler runs ``r + 1`` copies: either
``r + 1`` fresh ones (``l = 0``, original killed) or the surviving original plus
``r`` fresh ones (``l = 1``).  :class:`ResidualModel` is the law of the time from
the fork until the earliest of those copies finishes.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from functools import cached_property

import numpy as np
from scipy import integrate, optimize

from .dist import (
    EvtConstants,
    Frechet,
    Gumbel,
    InfiniteMomentError,
    Pareto,
    ReversedWeibull,
    ShiftedExponential,
    UnsupportedDistributionError,
    domain_of_attraction,
    is_parametric,
)

QUAD_EPSABS = 1e-9


@dataclass(frozen=True)
class SingleForkPolicy:
    """Fork when a fraction ``p`` of tasks is left; add ``r`` replicas; ``l`` keeps the original."""

    p: float
    r: int = 1
    l: int = 1

    def __post_init__(self):
        if not (0.0 <= self.p < 1.0):
            raise ValueError(f"fork fraction p must lie in [0, 1), got {self.p}")
        if int(self.r) != self.r or self.r < 0:
            raise ValueError(f"replica count r must be a nonnegative integer, got {self.r}")
        if self.l not in (0, 1):
            raise ValueError(f"l must be 0 (relaunch) or 1 (keep original), got {self.l}")
        object.__setattr__(self, "r", int(self.r))
        object.__setattr__(self, "l", int(self.l))

    @property
    def is_baseline(self) -> bool:
        """True when the policy never changes what runs: ``p = 0`` or ``(r, l) = (0, 1)``."""
        return self.p == 0 or (self.r == 0 and self.l == 1)

    @property
    def copies_after_fork(self) -> int:
        return self.r + 1


BASELINE = SingleForkPolicy(0.0, 0, 1)


class ResidualModel:
    """Residual straggler time ``Y`` for a base law and a single-fork policy."""

    def __init__(self, base, policy: SingleForkPolicy):
        if policy.l == 1 and policy.p == 0:
            raise ValueError("keeping the original (l=1) needs p > 0: the residual divides by p")
        self.base = base
        self.policy = policy
        p = policy.p
        self.fork_quantile = float(base._ppf(1.0 - p)) if p > 0 else math.inf

    def __repr__(self):
        pol = self.policy
        return f"ResidualModel({self.base!r}, p={pol.p:g}, r={pol.r}, l={pol.l})"

    # -- tail / sampling -----------------------------------------------------

    def _sf(self, y):
        y = np.asarray(y, dtype=float)
        pol = self.policy
        yy = np.maximum(y, 0.0)
        fresh = self.base._sf(yy)
        if pol.l == 0:
            out = fresh ** (pol.r + 1)
        else:
            out = fresh**pol.r * self.base._sf(yy + self.fork_quantile) / pol.p
        return np.where(y < 0, 1.0, np.clip(out, 0.0, 1.0))

    def tail(self, y: float) -> float:
        if y < 0:
            raise ValueError("residual time is nonnegative")
        return float(self._sf(y))

    def cdf(self, y: float) -> float:
        return 1.0 - self.tail(y)

    def _from_uniforms(self, u):
        """Map uniforms of shape ``(..., r+1)`` to residual draws.

        With ``l = 1`` the first column drives the surviving original, drawn from
        the base law truncated above the fork quantile.
        """
        u = np.asarray(u, dtype=float)
        pol = self.policy
        if pol.l == 0:
            return self.base._ppf(u).min(axis=-1)
        p = pol.p
        orig = np.maximum(self.base._ppf(1.0 - p + p * u[..., 0]) - self.fork_quantile, 0.0)
        if pol.r == 0:
            return orig
        return np.minimum(orig, self.base._ppf(u[..., 1:]).min(axis=-1))

    def sample(self, rng: np.random.Generator, size=None):
        shape = () if size is None else (size if isinstance(size, tuple) else (size,))
        out = self._from_uniforms(rng.random(shape + (self.policy.r + 1,)))
        return float(out) if size is None else out

    # -- extreme value behaviour ---------------------------------------------

    def doa(self):
        """Domain of attraction of ``F_Y``: Gumbel stays Gumbel, tail indices scale."""
        fam = domain_of_attraction(self.base)
        pol = self.policy
        if isinstance(fam, Gumbel):
            return fam
        if isinstance(fam, Frechet):
            return Frechet((pol.r + 1) * fam.xi)
        return ReversedWeibull(((1 - pol.l) * pol.r + 1) * fam.xi)

    def evt_constants(self, pn: float) -> EvtConstants:
        """Normalizing constants of the maximum of ``pn`` residual draws."""
        if not is_parametric(self.base):
            raise UnsupportedDistributionError(
                "residual EVT constants need a parametric base; use the estimator path"
            )
        if pn < 2:
            raise ValueError(f"need at least two stragglers, got pn={pn}")
        pol, base = self.policy, self.base
        fam = self.doa()
        if isinstance(base, Pareto):
            if pol.l == 0:
                a = base.xm * pn ** (1.0 / ((pol.r + 1) * base.alpha))
            else:
                a = pareto_keep_scale(base.alpha, base.xm, pol.p, pol.r, pn / pol.p)
            return EvtConstants(a, 0.0, fam, pn)
        lam, delta, r = base.lam, base.delta, pol.r
        a = 1.0 / (lam * (r + 1))
        if pol.l == 0:
            b = delta + math.log(pn) / (lam * (r + 1))
        else:
            b = r * delta / (r + 1) + math.log(pn) / (lam * (r + 1))
        return EvtConstants(a, b, fam, pn)

    # -- mean ----------------------------------------------------------------

    @cached_property
    def _mean(self) -> float:
        if not is_parametric(self.base):
            raise UnsupportedDistributionError(
                "residual mean needs a parametric base; use the estimator path"
            )
        pol, base = self.policy, self.base
        if isinstance(base, ShiftedExponential):
            lam, delta = base.lam, base.delta
            if pol.l == 0:
                return delta + 1.0 / ((pol.r + 1) * lam)
            e = math.exp(-lam * delta)
            return (1.0 - e) / lam + e / (lam * (pol.r + 1))
        s = (pol.r + 1) * base.alpha
        if s <= 1:
            raise InfiniteMomentError(f"residual mean diverges: tail index {s} <= 1")
        if pol.l == 0:
            return s * base.xm / (s - 1.0)
        return self._pareto_keep_mean()

    def mean(self) -> float:
        return self._mean

    def _pareto_keep_mean(self) -> float:
        base, pol = self.base, self.policy
        xm, alpha, p, r = base.xm, base.alpha, pol.p, pol.r
        fq = self.fork_quantile
        y_cut = 1e3 * fq
        f = lambda y: float(self._sf(y))
        total = integrate.quad(f, 0.0, xm, epsabs=QUAD_EPSABS, epsrel=1e-12, limit=200)[0]
        # geometric segments keep each quad call on a mildly varying piece
        edges = np.geomspace(xm, y_cut, 13)
        for lo, hi in zip(edges[:-1], edges[1:]):
            total += integrate.quad(f, lo, hi, epsabs=QUAD_EPSABS / 12, epsrel=1e-12, limit=200)[0]
        return total + _pareto_keep_remainder(alpha, xm, p, r, fq, y_cut)

    # -- convenience ---------------------------------------------------------

    def quantile(self, q: float) -> float:
        """Quantile of ``Y`` by bisection on the tail."""
        if not (0.0 < q < 1.0):
            raise ValueError("probability must lie in (0, 1)")
        return tail_inverse(self._sf, 1.0 - q)


def _pareto_keep_remainder(alpha, xm, p, r, fq, y_cut) -> float:
    """``int_{y_cut}^inf (1/p) (xm/y)^{a r} (xm/(y+fq))^a dy`` via a binomial series in fq/y."""
    s = (r + 1) * alpha
    ratio = fq / y_cut
    coef, k, acc = 1.0, 0, 0.0
    while True:
        term = coef * ratio**k / (s + k - 1.0)
        acc += term
        if abs(term) < 1e-17 * abs(acc) or k > 200:
            break
        coef *= (-alpha - k) / (k + 1.0)
        k += 1
    return xm**s * y_cut ** (1.0 - s) * acc / p


def pareto_keep_scale(alpha: float, xm: float, p: float, r: int, n: float) -> float:
    """Scale ``a`` of the residual maximum when the original is kept (Pareto base).

    Solves ``n^{1/alpha} xm^{r+1} = xm p^{-1/alpha} a^r + a^{r+1}`` by bisection.
    """
    lhs = n ** (1.0 / alpha) * xm ** (r + 1)
    c = xm * p ** (-1.0 / alpha)

    def gap(a):
        return (c * a**r + a ** (r + 1)) / lhs - 1.0

    lo = xm if gap(xm) < 0 else 0.0
    hi = xm * (p * n) ** (1.0 / alpha)
    while gap(hi) < 0:
        hi *= 2.0
    if gap(lo) >= 0:
        raise RuntimeError("no bracketing root for the residual scale equation")
    return optimize.bisect(gap, lo, hi, xtol=1e-300, rtol=1e-13, maxiter=500)


def tail_inverse(sf, target: float, hi: float = 1.0) -> float:
    """Smallest ``y >= 0`` with ``sf(y) <= target`` for a nonincreasing tail ``sf``."""
    if not (0.0 < target < 1.0):
        raise ValueError("target tail probability must lie in (0, 1)")
    sf_f = lambda y: float(sf(y)) - target
    if sf_f(0.0) <= 0:
        return 0.0
    while sf_f(hi) > 0:
        hi *= 2.0
        if hi > 1e300:
            raise RuntimeError("tail does not reach the target probability")
    return optimize.bisect(sf_f, 0.0, hi, xtol=1e-300, rtol=1e-13, maxiter=2000)
