"""Exact finite-``n`` simulation of replicated jobs.

Every copy of a task runs on its own machine; copies are killed the instant the
first copy of their task finishes.  Surviving originals keep their realized
execution time, so this module is the ground truth the asymptotic formulas are
checked against.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np

from .analytic import MetricsPair
from .residual import SingleForkPolicy

CHUNK_TRIALS = 2000


@dataclass(frozen=True)
class BusyInterval:
    task: int
    copy: int
    start: float
    stop: float


@dataclass(frozen=True)
class JobRealization:
    task_finish: np.ndarray
    latency: float
    cost: float
    fork_time: Optional[float] = None
    events: tuple[BusyInterval, ...] = field(default=(), repr=False)


@dataclass(frozen=True)
class LaunchSchedule:
    """Static launch times ``launches[i][j]`` of replica ``j`` of task ``i``."""

    launches: tuple[tuple[float, ...], ...]

    def __init__(self, launches):
        rows = tuple(tuple(float(t) for t in row) for row in launches)
        if not rows:
            raise ValueError("schedule has no tasks")
        for i, row in enumerate(rows):
            if not row:
                raise ValueError(f"task {i} has no replica")
            if any(not math.isfinite(t) or t < 0 for t in row):
                raise ValueError(f"task {i} has an invalid launch time")
        object.__setattr__(self, "launches", rows)


def evaluate_static(schedule: LaunchSchedule, execution_times) -> JobRealization:
    """Latency and cost of a pre-determined launch schedule with given draws."""
    if not isinstance(schedule, LaunchSchedule):
        schedule = LaunchSchedule(schedule)
    rows = schedule.launches
    xs = [tuple(float(x) for x in row) for row in execution_times]
    if len(xs) != len(rows) or any(len(a) != len(b) for a, b in zip(rows, xs)):
        raise ValueError("execution times must match the schedule's shape")
    finish, events = [], []
    for i, (ts, ds) in enumerate(zip(rows, xs)):
        t_i = min(t + x for t, x in zip(ts, ds))
        finish.append(t_i)
        events.extend(BusyInterval(i, j, t, max(t, t_i)) for j, t in enumerate(ts))
    cost = math.fsum(e.stop - e.start for e in events) / len(rows)
    return JobRealization(np.array(finish), max(finish), cost, None, tuple(events))


def _as_rng(seed) -> np.random.Generator:
    if isinstance(seed, np.random.Generator):
        return seed
    return np.random.default_rng(seed)


def simulate_job(base, policy: SingleForkPolicy, n: int, rng) -> JobRealization:
    """One job of ``n`` tasks under ``policy``, with the full machine-busy log."""
    rng = _as_rng(rng)
    x = np.asarray(base.sample(rng, n), dtype=float)
    if policy.is_baseline:
        events = tuple(BusyInterval(i, 0, 0.0, float(v)) for i, v in enumerate(x))
        return JobRealization(x, float(x.max()), math.fsum(x) / n, None, events)
    m = math.floor(policy.p * n)
    k = n - m
    order = np.argsort(x, kind="stable")
    fork = float(x[order[k - 1]])
    finish = x.copy()
    r, l = policy.r, policy.l
    n_fresh = r if l == 1 else r + 1
    fresh = np.asarray(base.sample(rng, (m, n_fresh)), dtype=float).reshape(m, n_fresh)
    events = [BusyInterval(int(i), 0, 0.0, float(x[i])) for i in order[:k]]
    for row, i in enumerate(order[k:]):
        first_fresh = fork + fresh[row].min() if n_fresh else math.inf
        t_i = min(x[i], first_fresh) if l == 1 else first_fresh
        finish[i] = t_i
        events.append(BusyInterval(int(i), 0, 0.0, float(t_i if l == 1 else fork)))
        events.extend(BusyInterval(int(i), j + 1, fork, float(t_i)) for j in range(n_fresh))
    # equals (sum of finished X + m * fork + (r+1) * sum of residuals) / n
    cost = math.fsum(e.stop - e.start for e in events) / n
    return JobRealization(finish, float(finish.max()), cost, fork, tuple(events))


def _run_batch(base, stages: Sequence[SingleForkPolicy], n: int, rng, trials: int):
    """Latency and cost of ``trials`` independent jobs forking at each stage in turn."""
    f = base._ppf(rng.random((trials, n)))
    stages = [s for s in stages if not s.is_baseline]
    if not stages:
        return f.max(axis=1), f.sum(axis=1) / n
    t_prev = np.zeros(trials)
    copies = 1
    cost = np.zeros(trials)
    for st in stages:
        m = math.floor(st.p * n)
        k = f.shape[1] - m
        if k < 1:
            raise ValueError("fork fractions must leave at least one task finishing per stage")
        part = np.partition(f, k - 1, axis=1)
        t = part[:, k - 1]
        cost += copies * ((part[:, :k] - t_prev[:, None]).sum(axis=1) + m * (t - t_prev))
        strag = part[:, k:]
        n_fresh = st.r if st.l == 1 else st.r + 1
        if m and n_fresh:
            fresh = t[:, None] + base._ppf(rng.random((trials, m, n_fresh))).min(axis=2)
            f = np.minimum(strag, fresh) if st.l == 1 else fresh
        else:
            f = strag
        copies = copies + st.r if st.l == 1 else st.r + 1
        t_prev = t
    if f.shape[1] == 0:
        return t_prev, cost / n
    cost += copies * (f - t_prev[:, None]).sum(axis=1)
    return f.max(axis=1), cost / n


@dataclass(frozen=True)
class MonteCarloResult:
    metrics: MetricsPair
    latency_se: Optional[float]
    cost_se: Optional[float]
    trials: int


def _monte_carlo(base, stages, n, trials, seed, chunk):
    if trials < 1:
        raise ValueError("need at least one trial")
    ss = seed if isinstance(seed, np.random.SeedSequence) else np.random.SeedSequence(seed)
    sizes = [min(chunk, trials - i) for i in range(0, trials, chunk)]
    lat, cost = [], []
    for size, child in zip(sizes, ss.spawn(len(sizes))):
        t, c = _run_batch(base, stages, n, np.random.default_rng(child), size)
        lat.append(t)
        cost.append(c)
    lat, cost = np.concatenate(lat), np.concatenate(cost)
    if trials > 1:
        lse = float(lat.std(ddof=1) / math.sqrt(trials))
        cse = float(cost.std(ddof=1) / math.sqrt(trials))
    else:
        lse = cse = None
    return MonteCarloResult(MetricsPair(float(lat.mean()), float(cost.mean())), lse, cse, trials)


def monte_carlo(base, policy: SingleForkPolicy, n: int, trials: int, seed=None, chunk: int = CHUNK_TRIALS):
    """Mean latency/cost over ``trials`` jobs with their standard errors.

    Trials run in fixed-size chunks, each with its own child seed, so results do
    not depend on how chunks are scheduled.
    """
    return _monte_carlo(base, [policy], n, trials, seed, chunk)


def simulate_multi_fork(base, mf, n: int, trials: int, seed=None, chunk: int = CHUNK_TRIALS):
    """Monte-Carlo counterpart of :func:`singlefork.multifork.multi_fork_metrics`."""
    return _monte_carlo(base, list(mf.stages), n, trials, seed, chunk)


def prefork_cost(sorted_sample: np.ndarray, p: float) -> float:
    """Machine time per task up to the fork for one sorted draw of ``n`` times."""
    n = sorted_sample.size
    m = math.floor(p * n)
    k = n - m
    return (math.fsum(sorted_sample[:k]) + m * sorted_sample[k - 1]) / n
