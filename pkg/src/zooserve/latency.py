"""The latency profiler: analytic executor, capacity, and queueing bound.

The executor is a deterministic analytic simulator rather than wall-clock
execution: the composer calls the profiler hundreds of times per search, so
profiling must be cheap and exactly reproducible.

End-to-end latency is estimated as  total = serving_p95 + queue_bound:

* serving_p95 comes from an open-loop simulation of evenly paced queries at
  the offered rate through the slot pool (in-slot contention included);
* queue_bound is the maximum horizontal deviation between an empirical
  arrival curve (max queries observed in any window of length dt, built
  from a seeded profiling trace of the configured load) and an analytic
  rate-latency service curve at the measured capacity.

Load model: every patient contributes one ensemble query per observation
window, and patients' windows are aligned, so each window boundary emits a
burst of `patients` queries.  Setting window_s = 1/ingest_qps degenerates
to one query per ingested sample, i.e. an offered rate of
patients * ingest_qps.
"""

from __future__ import annotations

import csv
import heapq
import math
from dataclasses import dataclass

import numpy as np

from .errors import DivergenceError, EmptyEnsembleError, OverloadError
from .zoo import ModelZoo, Selector, check_selector

TRACE_TARGET_SPAN_S = 10.0      # aim for this much simulated load per trace
TRACE_MAX_QUERIES = 20000
CURVE_GRANULARITY_S = 1e-3      # binning step for very long traces
_EXACT_CURVE_LIMIT = 8000       # above this many events, bin the trace


@dataclass(frozen=True)
class ExecutorModel:
    """Deterministic service-time model for a pool of identical slots."""

    n_slots: int = 2
    per_mac_seconds: float = 1e-9
    fixed_overhead_s: float = 1e-3
    batch_size: int = 1

    def __post_init__(self):
        if self.n_slots < 1 or self.batch_size < 1:
            raise ValueError("n_slots and batch_size must be >= 1")
        if self.per_mac_seconds <= 0 or self.fixed_overhead_s < 0:
            raise ValueError("per_mac_seconds must be > 0 and overhead >= 0")


@dataclass(frozen=True)
class SystemConfig:
    """Deployment shape: slots, patient load, windowing and latency budget."""

    n_slots: int = 2
    patients: int = 16
    ingest_qps: float = 250.0
    window_s: float = 30.0
    budget_s: float = 0.2

    def __post_init__(self):
        if self.n_slots < 1 or self.patients < 1:
            raise ValueError("n_slots and patients must be >= 1")
        if self.ingest_qps <= 0 or self.window_s <= 0 or self.budget_s <= 0:
            raise ValueError("rates, window and budget must be positive")

    @property
    def query_qps(self) -> float:
        """Aggregate ensemble-query rate: one query per patient per window."""
        return self.patients / self.window_s

    def executor(self, per_mac_seconds: float = 1e-9,
                 fixed_overhead_s: float = 1e-3, batch_size: int = 1) -> ExecutorModel:
        return ExecutorModel(n_slots=self.n_slots, per_mac_seconds=per_mac_seconds,
                             fixed_overhead_s=fixed_overhead_s, batch_size=batch_size)


@dataclass(frozen=True)
class ArrivalCurve:
    """alpha(dt): max queries observed in any interval of length dt.

    Stored as paired breakpoints: alpha(dt) = max count whose minimal
    window length is <= dt.  Both arrays are non-decreasing.
    """

    dts: np.ndarray
    counts: np.ndarray
    n_events: int
    span_s: float

    def value(self, dt: float) -> float:
        if self.n_events == 0:
            return 0.0
        i = int(np.searchsorted(self.dts, dt, side="right"))
        return float(self.counts[i - 1]) if i > 0 else 0.0

    @property
    def long_run_qps(self) -> float:
        if self.n_events < 2 or self.span_s <= 0:
            return 0.0
        return (self.n_events - 1) / self.span_s


@dataclass(frozen=True)
class AffineArrivalCurve:
    """Token-bucket envelope alpha(dt) = burst + rate * dt."""

    burst: float
    rate_qps: float


@dataclass(frozen=True)
class ServiceCurve:
    """Rate-latency curve beta(dt) = rate * max(0, dt - offset)."""

    rate_qps: float
    latency_offset_s: float = 0.0

    def __post_init__(self):
        if self.rate_qps <= 0 or self.latency_offset_s < 0:
            raise ValueError("rate must be positive and offset non-negative")

    def value(self, dt: float) -> float:
        return self.rate_qps * max(0.0, dt - self.latency_offset_s)


@dataclass(frozen=True)
class LatencyReport:
    serving_p95_s: float
    queue_bound_s: float
    total_s: float
    capacity_qps: float

    @property
    def feasible(self) -> bool:
        return math.isfinite(self.total_s)


def service_time(b: Selector, zoo: ModelZoo, executor: ExecutorModel) -> float:
    """Seconds one slot spends on one ensemble query."""
    check_selector(b, zoo)
    if b.popcount == 0:
        raise EmptyEnsembleError("cannot serve an empty ensemble")
    total_macs = float(sum(zoo.profiles[i].macs for i in b.indices()))
    return executor.fixed_overhead_s + total_macs * executor.per_mac_seconds


def measure_capacity(b: Selector, zoo: ModelZoo, executor: ExecutorModel,
                     n_queries: int = 1000) -> float:
    """Closed-loop throughput: all slots kept busy for n_queries queries."""
    if n_queries < 100:
        raise ValueError("need at least 100 queries for a capacity estimate")
    s = service_time(b, zoo, executor)
    makespan = math.ceil(n_queries / executor.n_slots) * s
    return n_queries / makespan


def measure_ts(b: Selector, zoo: ModelZoo, executor: ExecutorModel,
               ingest_qps: float, duration_s: float,
               jitter_s: float = 0.0, seed: int = 0) -> float:
    """95th-percentile query latency under open-loop arrivals at ingest_qps.

    Arrivals are evenly paced (optionally with seeded jitter); latency is
    completion minus arrival, so slot contention counts but queue build-up
    cannot occur below capacity.
    """
    if ingest_qps <= 0 or duration_s <= 0:
        raise ValueError("ingest_qps and duration_s must be positive")
    s = service_time(b, zoo, executor)
    mu = measure_capacity(b, zoo, executor)
    if ingest_qps > mu * (1.0 + 1e-12):
        raise OverloadError(f"offered rate {ingest_qps:.6g} qps exceeds capacity "
                            f"{mu:.6g} qps")
    n = max(1, int(math.floor(duration_s * ingest_qps)))
    arrivals = np.arange(n) / ingest_qps
    if jitter_s > 0:
        rng = np.random.default_rng(seed)
        arrivals = np.sort(arrivals + rng.uniform(0.0, jitter_s, n))
    free = [0.0] * executor.n_slots
    heapq.heapify(free)
    latencies = np.empty(n)
    for i, t in enumerate(arrivals):
        slot_free = heapq.heappop(free)
        start = slot_free if slot_free > t else t
        done = start + s
        heapq.heappush(free, done)
        latencies[i] = done - t
    latencies.sort()
    return float(latencies[math.ceil(0.95 * n) - 1])


def build_arrival_curve(timestamps, granularity_s: float = CURVE_GRANULARITY_S) -> ArrivalCurve:
    """Empirical max-plus envelope of a query trace.

    For traces up to a few thousand events the curve is exact: for each
    count c the breakpoint is the shortest window containing c events.  For
    longer traces events are binned at `granularity_s` and the envelope is
    rounded up, which keeps the resulting delay bound conservative.
    """
    ts = np.asarray(timestamps, dtype=np.float64)
    if ts.ndim != 1:
        raise ValueError("timestamps must be 1-D")
    if ts.size and (np.diff(ts) < 0).any():
        raise ValueError("timestamps must be sorted non-decreasing")
    m = ts.size
    if m == 0:
        return ArrivalCurve(dts=np.zeros(0), counts=np.zeros(0), n_events=0, span_s=0.0)
    span = float(ts[-1] - ts[0])

    if m <= _EXACT_CURVE_LIMIT:
        widths = np.empty(m)
        for c in range(1, m + 1):
            widths[c - 1] = (ts[c - 1:] - ts[:m - c + 1]).min()
        counts = np.arange(1, m + 1, dtype=np.float64)
        return ArrivalCurve(dts=widths, counts=counts, n_events=m, span_s=span)

    g = granularity_s
    bins = np.floor((ts - ts[0]) / g + 1e-9).astype(np.int64)
    hist = np.bincount(bins).astype(np.float64)
    csum = np.concatenate([[0.0], np.cumsum(hist)])
    n_bins = hist.size
    # max sum over k consecutive bins, for k = 1..n_bins
    best = np.empty(n_bins)
    for k in range(1, n_bins + 1):
        best[k - 1] = (csum[k:] - csum[:-k]).max()
    # A real window of length dt can straddle floor(dt/g)+2 bins, so report
    # the (j+2)-bin maximum at breakpoint j*g: an over-approximation.
    j = np.arange(0, n_bins - 1)
    values = best[np.minimum(j + 1, n_bins - 1)]
    dts = j * g
    keep = np.ones(j.size, dtype=bool)
    keep[1:] = values[1:] > values[:-1]
    return ArrivalCurve(dts=dts[keep], counts=values[keep], n_events=m, span_s=span)


def horizontal_deviation(alpha: ArrivalCurve | AffineArrivalCurve,
                         beta: ServiceCurve) -> float:
    """Max horizontal distance between the curves: the queueing-delay bound.

    For piecewise-constant alpha against a rate-latency beta the supremum
    sits at the breakpoints: d = offset + alpha(t)/rate - t, clamped at 0.
    """
    if isinstance(alpha, AffineArrivalCurve):
        if alpha.rate_qps > beta.rate_qps * (1.0 + 1e-9):
            raise DivergenceError(f"arrival rate {alpha.rate_qps:.6g} qps exceeds "
                                  f"service rate {beta.rate_qps:.6g} qps")
        return max(0.0, beta.latency_offset_s + alpha.burst / beta.rate_qps)
    if alpha.n_events == 0:
        return 0.0
    if alpha.long_run_qps > beta.rate_qps * (1.0 + 1e-9):
        raise DivergenceError(f"long-run arrival rate {alpha.long_run_qps:.6g} qps "
                              f"exceeds service rate {beta.rate_qps:.6g} qps")
    d = beta.latency_offset_s + alpha.counts / beta.rate_qps - alpha.dts
    return max(0.0, float(d.max()))


def profiling_trace(sys: SystemConfig, seed: int = 0,
                    jitter_s: float = 2.5e-4) -> np.ndarray:
    """Seeded query-arrival trace for the configured load.

    All patients flush at each window boundary; per-query jitter models
    ingest skew.  The trace covers at least two windows and targets
    TRACE_TARGET_SPAN_S of load, capped at TRACE_MAX_QUERIES events.
    """
    per_window = sys.patients
    n_windows = max(2, min(math.ceil(TRACE_TARGET_SPAN_S / sys.window_s),
                           math.ceil(TRACE_MAX_QUERIES / per_window)))
    rng = np.random.default_rng(seed)
    bursts = np.repeat(np.arange(n_windows) * sys.window_s, per_window)
    if jitter_s > 0:
        bursts = bursts + rng.uniform(0.0, jitter_s, bursts.size)
    return np.sort(bursts)


def latency_profile(b: Selector, zoo: ModelZoo, executor: ExecutorModel,
                    sys: SystemConfig, seed: int = 0,
                    trace: np.ndarray | None = None) -> LatencyReport:
    """The latency profiler: serving p95 plus the network-calculus bound.

    Overload (query rate above measured capacity) is reported as an
    infinite-latency report rather than raised, so a hard-constrained
    objective can reject the selector.
    """
    s = service_time(b, zoo, executor)
    mu = measure_capacity(b, zoo, executor)
    rate = sys.query_qps
    if rate > mu * (1.0 + 1e-12):
        return LatencyReport(serving_p95_s=math.inf, queue_bound_s=math.inf,
                             total_s=math.inf, capacity_qps=mu)
    duration = 100.0 / rate
    ts_p95 = measure_ts(b, zoo, executor, rate, duration)
    if trace is None:
        trace = profiling_trace(sys, seed=seed)
    alpha = build_arrival_curve(trace)
    beta = ServiceCurve(rate_qps=mu, latency_offset_s=0.0)
    tq = horizontal_deviation(alpha, beta)
    return LatencyReport(serving_p95_s=ts_p95, queue_bound_s=tq,
                         total_s=ts_p95 + tq, capacity_qps=mu)


class LatencyProfiler:
    """Callable selector -> seconds, reusing one arrival trace per system.

    The arrival pattern depends only on the system configuration and seed,
    so the trace and its curve breakpoints are built once; each call then
    costs one short serving simulation.
    """

    def __init__(self, zoo: ModelZoo, executor: ExecutorModel, sys: SystemConfig,
                 seed: int = 0):
        self.zoo = zoo
        self.executor = executor
        self.sys = sys
        self.seed = seed
        self._trace = profiling_trace(sys, seed=seed)

    def report(self, b: Selector) -> LatencyReport:
        return latency_profile(b, self.zoo, self.executor, self.sys,
                               seed=self.seed, trace=self._trace)

    def __call__(self, b: Selector) -> float:
        return self.report(b).total_s


def make_latency_profiler(zoo: ModelZoo, executor: ExecutorModel, sys: SystemConfig,
                          seed: int = 0) -> LatencyProfiler:
    return LatencyProfiler(zoo, executor, sys, seed=seed)


def curves_to_csv(alpha: ArrivalCurve, beta: ServiceCurve, path) -> None:
    """Dump both curves at the arrival breakpoints (dt_s, alpha, beta)."""
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(["dt_s", "alpha", "beta"])
        for dt, count in zip(alpha.dts, alpha.counts):
            writer.writerow([repr(float(dt)), repr(float(count)),
                             repr(beta.value(float(dt)))])
