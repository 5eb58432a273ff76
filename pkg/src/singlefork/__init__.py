"""Latency and cost of task replication for straggler mitigation.

Single-fork policies wait until a fraction ``p`` of the tasks in a job is still
running, then give each straggler ``r`` extra replicas, optionally killing the
original.  The package evaluates such policies analytically (large-``n``
extreme value asymptotics), by exact simulation and by sampling from empirical
execution-time data, and searches for good policies.
"""
from .analytic import (
    MetricsPair,
    StageMetrics,
    TradeoffPoint,
    metrics_general,
    metrics_pareto,
    metrics_sexp,
    pareto_relaunch_preferred,
    pareto_suboptimal_boundary,
    sexp_relaunch_strictly_worse,
    stage_metrics,
    tradeoff_curve,
)
from .dist import (
    EULER_GAMMA,
    Empirical,
    EvtConstants,
    Frechet,
    Gumbel,
    InfiniteMomentError,
    Pareto,
    ReversedWeibull,
    ShiftedExponential,
    UnsupportedDistributionError,
    central_order_statistic,
    domain_of_attraction,
    evt_constants,
    expected_limit,
    expected_maximum,
)
from .estimate import EstimateConfig, EstimatedMetrics, estimate_metrics
from .multifork import MultiForkPolicy, multi_fork_metrics
from .optimize import SearchConfig, SearchResult, best_single_fork, mapreduce_reference_curve, objective
from .residual import BASELINE, ResidualModel, SingleForkPolicy
from .sim import LaunchSchedule, evaluate_static, monte_carlo, simulate_job, simulate_multi_fork
from .trace import TraceRecord, ingest_trace

__version__ = "0.1.0"
