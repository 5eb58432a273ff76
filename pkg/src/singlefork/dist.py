"""Execution-time distributions and the order-statistics / extreme-value toolkit.

Three models are provided: :class:`Pareto` (heavy tail), :class:`ShiftedExponential`
(exponential tail) and :class:`Empirical` (trace-derived).  All of them expose the
same small surface (``cdf``, ``tail``, ``quantile``, ``mean``, ``sample``) plus
vectorised private helpers used by the simulation code.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Union

import numpy as np

EULER_GAMMA = 0.57721566490153286061


class InfiniteMomentError(ValueError):
    """Raised when a requested mean or expected maximum diverges."""


class UnsupportedDistributionError(ValueError):
    """Raised when an operation needs a parametric model but got an empirical one."""


def _check_prob(q: float) -> None:
    if not (0.0 < q < 1.0):
        raise ValueError(f"probability must lie in (0, 1), got {q!r}")


@dataclass(frozen=True)
class Pareto:
    """Pareto law with shape ``alpha`` and scale (minimum) ``xm``."""

    alpha: float
    xm: float

    def __post_init__(self):
        if not (self.alpha > 0 and self.xm > 0):
            raise ValueError(f"Pareto needs alpha > 0 and xm > 0, got {self}")

    @property
    def lower(self) -> float:
        return self.xm

    @property
    def upper(self) -> float:
        return math.inf

    def _sf(self, x):
        x = np.asarray(x, dtype=float)
        with np.errstate(divide="ignore"):
            out = np.where(x < self.xm, 1.0, (self.xm / np.maximum(x, self.xm)) ** self.alpha)
        return out

    def _ppf(self, u):
        return self.xm * (1.0 - np.asarray(u, dtype=float)) ** (-1.0 / self.alpha)

    def tail(self, x: float) -> float:
        return float(self._sf(x))

    def cdf(self, x: float) -> float:
        return 1.0 - self.tail(x)

    def quantile(self, q: float) -> float:
        _check_prob(q)
        return float(self._ppf(q))

    def mean(self) -> float:
        if self.alpha <= 1:
            raise InfiniteMomentError(f"infinite mean: Pareto shape {self.alpha} <= 1")
        return self.xm * self.alpha / (self.alpha - 1.0)

    def sample(self, rng: np.random.Generator, size=None):
        return _inverse_transform(self, rng, size)


@dataclass(frozen=True)
class ShiftedExponential:
    """Exponential law with rate ``lam`` shifted right by a constant ``delta``."""

    delta: float
    lam: float

    def __post_init__(self):
        if not (self.delta >= 0 and self.lam > 0):
            raise ValueError(f"ShiftedExponential needs delta >= 0 and lam > 0, got {self}")

    @property
    def lower(self) -> float:
        return self.delta

    @property
    def upper(self) -> float:
        return math.inf

    def _sf(self, x):
        x = np.asarray(x, dtype=float)
        return np.where(x < self.delta, 1.0, np.exp(-self.lam * (np.maximum(x, self.delta) - self.delta)))

    def _ppf(self, u):
        return self.delta - np.log1p(-np.asarray(u, dtype=float)) / self.lam

    def tail(self, x: float) -> float:
        return float(self._sf(x))

    def cdf(self, x: float) -> float:
        return 1.0 - self.tail(x)

    def quantile(self, q: float) -> float:
        _check_prob(q)
        return float(self._ppf(q))

    def mean(self) -> float:
        return self.delta + 1.0 / self.lam

    def sample(self, rng: np.random.Generator, size=None):
        return _inverse_transform(self, rng, size)


class Empirical:
    """Empirical law over observed execution times.

    ``cdf``/``tail`` use the right-continuous step ECDF.  ``quantile`` (and hence
    sampling) interpolates linearly between adjacent order statistics, so the
    sampled surrogate is continuous on ``[min, max]``.
    """

    __slots__ = ("_x",)

    def __init__(self, samples):
        x = np.sort(np.asarray(samples, dtype=float).ravel())
        if x.size == 0:
            raise ValueError("Empirical model needs at least one sample")
        if not np.all(np.isfinite(x)) or x[0] < 0:
            raise ValueError("Empirical samples must be finite and nonnegative")
        x.flags.writeable = False
        self._x = x

    @property
    def samples(self) -> np.ndarray:
        return self._x

    @property
    def size(self) -> int:
        return self._x.size

    @property
    def lower(self) -> float:
        return float(self._x[0])

    @property
    def upper(self) -> float:
        return float(self._x[-1])

    def __len__(self):
        return self._x.size

    def __eq__(self, other):
        return isinstance(other, Empirical) and np.array_equal(self._x, other._x)

    def __hash__(self):
        return hash(self._x.tobytes())

    def __repr__(self):
        return f"Empirical(n={self._x.size}, min={self.lower:g}, max={self.upper:g})"

    def _sf(self, x):
        n = self._x.size
        above = n - np.searchsorted(self._x, np.asarray(x, dtype=float), side="right")
        return above / n

    def _ppf(self, u):
        x = self._x
        if x.size == 1:
            return np.full(np.shape(u), x[0]) if np.ndim(u) else float(x[0])
        pos = np.asarray(u, dtype=float) * (x.size - 1)
        return np.interp(pos, np.arange(x.size), x)

    def tail(self, x: float) -> float:
        return float(self._sf(x))

    def cdf(self, x: float) -> float:
        return 1.0 - self.tail(x)

    def quantile(self, q: float) -> float:
        _check_prob(q)
        return float(self._ppf(q))

    def mean(self) -> float:
        return float(np.mean(self._x))

    def sample(self, rng: np.random.Generator, size=None):
        return _inverse_transform(self, rng, size)


DistributionModel = Union[Pareto, ShiftedExponential, Empirical]


def _inverse_transform(dist, rng, size):
    u = rng.random(size)
    out = dist._ppf(u)
    return float(out) if size is None else out


def is_parametric(dist) -> bool:
    return isinstance(dist, (Pareto, ShiftedExponential))


# -- extreme value machinery -------------------------------------------------

@dataclass(frozen=True)
class Gumbel:
    """Domain of attraction for exponentially decaying tails."""


@dataclass(frozen=True)
class Frechet:
    """Domain of attraction for polynomial tails with index ``xi``."""

    xi: float

    def __post_init__(self):
        if not self.xi > 0:
            raise ValueError("Frechet tail index must be positive")


@dataclass(frozen=True)
class ReversedWeibull:
    """Domain of attraction for short tails with a finite upper end point."""

    xi: float

    def __post_init__(self):
        if not self.xi > 0:
            raise ValueError("reversed-Weibull tail index must be positive")


EvtFamily = Union[Gumbel, Frechet, ReversedWeibull]


@dataclass(frozen=True)
class EvtConstants:
    """Normalizing constants: ``(max_n - b_n) / a_n`` converges to ``family``."""

    a_n: float
    b_n: float
    family: EvtFamily
    n: float


def _require_parametric(dist):
    if not is_parametric(dist):
        raise UnsupportedDistributionError(
            "classification unsupported for empirical models; use the estimator path"
        )


def domain_of_attraction(dist) -> EvtFamily:
    _require_parametric(dist)
    if isinstance(dist, Pareto):
        return Frechet(dist.alpha)
    return Gumbel()


def auxiliary_function(dist, x: float) -> float:
    """Gumbel auxiliary function; constant ``1/lam`` for the shifted exponential."""
    if isinstance(dist, ShiftedExponential):
        return 1.0 / dist.lam
    raise UnsupportedDistributionError(f"no auxiliary function defined for {dist!r}")


def evt_constants(dist, n: float, family: EvtFamily | None = None) -> EvtConstants:
    """Normalizing constants of the maximum of ``n`` draws.

    ``family`` defaults to the model's domain of attraction.  Passing
    ``ReversedWeibull`` explicitly is the only way to use the bounded-support
    branch (e.g. for an empirical model, whose upper end point is its sample max).
    """
    if n < 2:
        raise ValueError(f"n must be >= 2, got {n}")
    if isinstance(family, ReversedWeibull):
        omega = dist.upper
        if not math.isfinite(omega):
            raise ValueError("reversed-Weibull constants need a finite upper end point")
        return EvtConstants(omega - float(dist._ppf(1.0 - 1.0 / n)), omega, family, n)
    _require_parametric(dist)
    family = family or domain_of_attraction(dist)
    x_n = float(dist._ppf(1.0 - 1.0 / n))
    if isinstance(family, Gumbel):
        return EvtConstants(auxiliary_function(dist, x_n), x_n, family, n)
    return EvtConstants(x_n, 0.0, family, n)


def expected_limit(family: EvtFamily) -> float:
    """Mean of the standard extreme-value law of ``family``."""
    if isinstance(family, Gumbel):
        return EULER_GAMMA
    if isinstance(family, Frechet):
        if family.xi <= 1:
            raise InfiniteMomentError(f"infinite expected maximum: tail index {family.xi} <= 1")
        return math.gamma(1.0 - 1.0 / family.xi)
    return -math.gamma(1.0 + 1.0 / family.xi)


def expected_maximum(dist, n: float) -> float:
    """Large-``n`` approximation of ``E[max(X_1..X_n)]``: ``a_n * E[G] + b_n``."""
    c = evt_constants(dist, n)
    return c.a_n * expected_limit(c.family) + c.b_n


def central_order_statistic(dist, n: int, k: int) -> float:
    """Large-``n`` limit of ``E[X_{k:n}]`` for a central rank ``k``."""
    if not (1 <= k <= n - 1):
        raise ValueError(f"central rank must satisfy 1 <= k <= n-1, got k={k}, n={n}")
    return dist.quantile(k / n)
