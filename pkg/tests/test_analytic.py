import logging
import math

import numpy as np
import pytest
from hypothesis import assume, given
from hypothesis import strategies as st

from singlefork.analytic import (
    MetricsPair,
    metrics_general,
    metrics_pareto,
    metrics_sexp,
    pareto_relaunch_preferred,
    pareto_suboptimal_boundary,
    sexp_relaunch_gap,
    sexp_relaunch_strictly_worse,
    stage_metrics,
    tradeoff_curve,
)
from singlefork.dist import EULER_GAMMA, Empirical, InfiniteMomentError, Pareto, ShiftedExponential
from singlefork.residual import BASELINE, SingleForkPolicy
from singlefork.sim import monte_carlo

EULER = EULER_GAMMA


def rel(a, b):
    return abs(a - b) / abs(b)


policy_st = st.builds(SingleForkPolicy, st.floats(0.01, 0.9), st.integers(0, 4), st.sampled_from([0, 1]))


# -- examples ----------------------------------------------------------------------

def test_baseline_examples():
    m = metrics_general(Pareto(2, 2), BASELINE, 400)
    assert m.latency == pytest.approx(2 * math.sqrt(400) * math.gamma(0.5), rel=1e-12)
    assert m.cost == 4
    m = metrics_general(ShiftedExponential(1, 1), BASELINE, 400)
    assert m.latency == pytest.approx(1 + math.log(400) + EULER, rel=1e-12)
    assert m.cost == 2


def test_stage_split():
    s = stage_metrics(Pareto(2, 2), SingleForkPolicy(0.25, 1, 0), 400)
    assert s.t1 == pytest.approx(4, rel=1e-14)
    assert s.c1 == pytest.approx(4 - 1, rel=1e-9)
    assert s.c2 == pytest.approx(2 * 0.25 * 8 / 3, rel=1e-12)
    assert s.total.latency == pytest.approx(s.t1 + s.t2)
    assert min(s.t1, s.t2, s.c1, s.c2) >= 0


def test_pareto_closed_form_example():
    m = metrics_pareto(2, 2, SingleForkPolicy(0.25, 1, 0), 400)
    assert m.latency == pytest.approx(4 + math.gamma(0.75) * 2 * 100**0.25, rel=1e-12)
    assert m.cost == pytest.approx(4 - 1 + 4 / 3, rel=1e-12)


def test_pareto_closed_form_against_simulation():
    pol = SingleForkPolicy(0.25, 1, 0)
    m = metrics_pareto(2, 2, pol, 400)
    mc = monte_carlo(Pareto(2, 2), pol, 400, 10_000, seed=3)
    assert rel(mc.metrics.latency, m.latency) < 0.05
    assert rel(mc.metrics.cost, m.cost) < 0.05


def test_pareto_relaunch_reaches_low_latency():
    # near its good operating region relaunching cuts latency from about 70 to about 15
    lat = [metrics_pareto(2, 2, SingleForkPolicy(p, 1, 0), 400).latency for p in np.arange(0.05, 0.5, 0.05)]
    assert min(lat) < 15 and 10 < min(lat)


def test_pareto_cost_tends_to_base_mean():
    c = metrics_pareto(2, 2, SingleForkPolicy(1e-9, 1, 0), 1e12).cost
    assert c == pytest.approx(4, abs=1e-3)


def test_sexp_closed_form_example():
    m = metrics_sexp(1, 1, SingleForkPolicy(0.25, 1, 0), 400)
    assert m.latency == pytest.approx(2 + (math.log(400) - math.log(0.25) + EULER) / 2, rel=1e-12)
    # relaunched copies pay the shift again; the stragglers' original shift is already in C1
    assert m.cost == pytest.approx(2.5, rel=1e-12)


@pytest.mark.parametrize("pol", [SingleForkPolicy(0.25, 1, 0), SingleForkPolicy(0.25, 1, 1), SingleForkPolicy(0.1, 2, 1)])
def test_sexp_closed_form_against_simulation(pol):
    m = metrics_sexp(1, 1, pol, 400)
    mc = monte_carlo(ShiftedExponential(1, 1), pol, 400, 10_000, seed=4)
    assert rel(mc.metrics.latency, m.latency) < 0.02
    assert rel(mc.metrics.cost, m.cost) < 0.02


def test_sexp_zero_shift_cost_is_constant():
    costs = {metrics_sexp(0, 2, SingleForkPolicy(p, r, l), 400).cost for p in (0.1, 0.5) for r in (1, 3) for l in (0, 1)}
    assert costs == {0.5}


def test_sexp_cost_tends_to_base_mean():
    assert metrics_sexp(1, 1, SingleForkPolicy(1e-12, 2, 1), 400).cost == pytest.approx(2, abs=1e-9)


def test_sexp_zero_replicas_relaunch_uses_general_path(caplog):
    with caplog.at_level(logging.WARNING):
        m = metrics_sexp(1, 1, SingleForkPolicy(0.2, 0, 0), 400)
    assert "general" in caplog.text
    assert m == metrics_general(ShiftedExponential(1, 1), SingleForkPolicy(0.2, 0, 0), 400)


def test_divergent_regimes_rejected():
    with pytest.raises(InfiniteMomentError):
        metrics_general(Pareto(0.9, 1), BASELINE, 400)
    with pytest.raises(ValueError):
        metrics_pareto(1.0, 1, SingleForkPolicy(0.2, 1, 0), 400)
    with pytest.raises(ValueError):
        metrics_general(Pareto(2, 2), SingleForkPolicy(0.001, 1, 0), 400)
    with pytest.raises(ValueError):
        metrics_general(Empirical([1, 2, 3]), SingleForkPolicy(0.2, 1, 0), 400)


def test_objective():
    assert MetricsPair(10, 4).objective(1) == 14
    assert MetricsPair(10, 4).objective(0) == 10


# -- predicates ----------------------------------------------------------------------

def test_relaunch_predicate_examples():
    assert pareto_relaunch_preferred(0.5, 1, 400, 2)
    assert not pareto_relaunch_preferred(0.9, 1, 400, 2)
    assert not pareto_relaunch_preferred(1 - 1e-12, 3, 1e6, 1.5)
    for p in (0.5, 0.9):
        l0 = metrics_pareto(2, 2, SingleForkPolicy(p, 1, 0), 400).latency
        l1 = metrics_pareto(2, 2, SingleForkPolicy(p, 1, 1), 400).latency
        assert pareto_relaunch_preferred(p, 1, 400, 2) == (l0 <= l1)


def test_suboptimal_boundary():
    p_star = pareto_suboptimal_boundary(1, 2, 400, xm=2)
    assert 0.03 <= p_star <= 0.07

    def product(p, h=2.5e-5):
        hi = metrics_pareto(2, 2, SingleForkPolicy(p + h, 1, 0), 400)
        lo = metrics_pareto(2, 2, SingleForkPolicy(p - h, 1, 0), 400)
        return (hi.latency - lo.latency) * (hi.cost - lo.cost)

    assert product(p_star / 2) > 0
    assert product(p_star + 1e-4) <= 0
    for r in (0, 2):
        assert pareto_suboptimal_boundary(r, 2, 400, xm=2) > 0


def test_suboptimal_boundary_scale_free():
    assert pareto_suboptimal_boundary(1, 2, 400, xm=1) == pareto_suboptimal_boundary(1, 2, 400, xm=2)


def test_sexp_relaunch_examples():
    assert sexp_relaunch_gap(1, 1, 1) == pytest.approx(1 + math.exp(-1))
    assert sexp_relaunch_strictly_worse(1, 1, 1)
    assert not sexp_relaunch_strictly_worse(0, 1, 1)
    assert sexp_relaunch_strictly_worse(50, 3, 4)
    c0 = metrics_sexp(1, 1, SingleForkPolicy(0.3, 1, 0), 400).cost
    c1 = metrics_sexp(1, 1, SingleForkPolicy(0.3, 1, 1), 400).cost
    assert c0 > c1
    with pytest.raises(ValueError):
        sexp_relaunch_strictly_worse(1, 1, 0)


# -- sweeps --------------------------------------------------------------------------

def test_tradeoff_curve_pareto():
    curve = tradeoff_curve(Pareto(2, 2), 1, 0, 400, np.arange(0.1, 0.95, 0.1))
    assert [pt.p for pt in curve] == sorted(pt.p for pt in curve)
    assert all(pt.metrics.latency < 70 / 4 for pt in curve)


def test_tradeoff_curve_sexp_monotone():
    curve = tradeoff_curve(ShiftedExponential(1, 1), 1, 1, 400, np.linspace(0.05, 0.95, 19))
    lat = [pt.metrics.latency for pt in curve]
    cost = [pt.metrics.cost for pt in curve]
    assert np.all(np.diff(lat) < 0) and np.all(np.diff(cost) > 0)


def test_tradeoff_curve_single_point_and_errors():
    pol = SingleForkPolicy(0.3, 2, 1)
    (pt,) = tradeoff_curve(Pareto(2, 2), 2, 1, 400, [0.3])
    assert pt.metrics == metrics_general(Pareto(2, 2), pol, 400)
    curve = tradeoff_curve(Pareto(2, 2), 1, 0, 400, [0.001, 0.2])
    assert curve[0].metrics is None and "p*n" in curve[0].error
    assert curve[1].metrics is not None


# -- invariants ------------------------------------------------------------------------

@pytest.mark.invariant
@given(st.floats(1.2, 5), st.floats(0.5, 5), policy_st, st.integers(100, 10_000))
def test_pareto_closed_form_matches_general(alpha, xm, pol, n):
    assume(pol.p * n >= 2)
    a = metrics_pareto(alpha, xm, pol, n)
    b = metrics_general(Pareto(alpha, xm), pol, n)
    assert rel(a.latency, b.latency) < 1e-6 and rel(a.cost, b.cost) < 1e-6


@pytest.mark.invariant
@given(st.floats(0, 5), st.floats(0.1, 5), policy_st, st.integers(100, 10_000))
def test_sexp_closed_form_matches_general(delta, lam, pol, n):
    assume(pol.p * n >= 2)
    a = metrics_sexp(delta, lam, pol, n)
    b = metrics_general(ShiftedExponential(delta, lam), pol, n)
    assert rel(a.latency, b.latency) < 1e-6 and rel(a.cost, b.cost) < 1e-6


@pytest.mark.invariant
@given(
    st.one_of(st.builds(Pareto, st.floats(1.2, 5), st.floats(0.5, 5)), st.builds(ShiftedExponential, st.floats(0, 3), st.floats(0.2, 3))),
    st.floats(0.01, 0.9),
)
def test_idle_replication_equals_baseline(base, p):
    a = metrics_general(base, SingleForkPolicy(p, 0, 1), 400)
    b = metrics_general(base, SingleForkPolicy(0.0, 3, 0), 400)
    assert abs(a.latency - b.latency) <= 1e-9 * b.latency and abs(a.cost - b.cost) <= 1e-9 * b.cost


@pytest.mark.invariant
@given(st.floats(0.01, 0.95), st.integers(1, 4), st.integers(50, 100_000), st.floats(1.2, 5))
def test_relaunch_predicate_matches_latency_order(p, r, n, alpha):
    assume(p * n >= 2)
    assume(abs(p ** (1 / alpha) + (n * p) ** (-1 / ((r + 1) * alpha)) - 1) > 1e-9)
    l0 = metrics_pareto(alpha, 1.0, SingleForkPolicy(p, r, 0), n).latency
    l1 = metrics_pareto(alpha, 1.0, SingleForkPolicy(p, r, 1), n).latency
    assert pareto_relaunch_preferred(p, r, n, alpha) == (l0 < l1)


@pytest.mark.invariant
@given(st.floats(0, 5), st.floats(0.1, 5), st.integers(1, 5), st.floats(0.01, 0.9))
def test_sexp_relaunch_predicate_matches_cost_order(delta, lam, r, p):
    c0 = metrics_sexp(delta, lam, SingleForkPolicy(p, r, 0), 400).cost
    c1 = metrics_sexp(delta, lam, SingleForkPolicy(p, r, 1), 400).cost
    assume(abs(c0 - c1) > 1e-12 * c1 or delta == 0)
    assert sexp_relaunch_strictly_worse(delta, lam, r) == (c0 > c1)


@pytest.mark.invariant
@given(st.floats(0, 5), st.floats(0.1, 5), st.floats(0.01, 0.9), st.sampled_from([0, 1]), st.integers(100, 10_000))
def test_sexp_latency_decreases_in_r_and_p(delta, lam, p, l, n):
    assume(p * n >= 2)
    lat_r = [metrics_sexp(delta, lam, SingleForkPolicy(p, r, l), n).latency for r in range(1, 5)]
    # keeping the original, each replica adds delta/((r+1)(r+2)) to the shift term;
    # it is outweighed only while log(pn) + gamma > lam * delta
    if l == 0 or math.log(p * n) + EULER > lam * delta:
        assert all(b < a for a, b in zip(lat_r, lat_r[1:]))
    else:
        assert all(b >= a for a, b in zip(lat_r, lat_r[1:]))
    ps = [p * f for f in (0.5, 0.75, 1.0)]
    lat_p = [metrics_sexp(delta, lam, SingleForkPolicy(q, 2, l), n).latency for q in ps]
    assert all(b < a for a, b in zip(lat_p, lat_p[1:]))
