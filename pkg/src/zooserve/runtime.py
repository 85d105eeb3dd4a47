"""Streaming serving simulator: aggregation windows, FIFO queue, slot pool.

The default mode is a single-threaded discrete-event simulation: per-patient
sensor streams fill per-(patient, modality) window buffers; every completed
window emits one ensemble query, which flows through one FIFO queue into the
executor slot pool.  Sample arrivals are deterministic-rate, so buffers are
advanced arithmetically (one flush event per window) instead of simulating
16000 sample events per second; the Aggregator class below buffers real
samples and is used by the wall-clock and TCP-ingest paths.

Per-window model scores are drawn from the same binormal generator as the
profiling cohort, keyed by the run seed, so serving-path accuracy statistics
match profiling-path statistics.
"""

from __future__ import annotations

import heapq
import json
import math
import queue as queue_mod
import socket
import socketserver
import threading
import time
from collections import deque
from dataclasses import asdict, dataclass

import numpy as np

from .cohort import positive_shift
from .errors import ConfigurationError, EmptyEnsembleError
from .latency import ExecutorModel, service_time
from .zoo import ModelZoo, Selector, check_selector

DEFAULT_AGG_OVERHEAD_S = 0.002   # bookkeeping cost between capture and enqueue


@dataclass(frozen=True)
class SensorSample:
    patient_id: int
    modality: str
    t_gen: float
    value: float


@dataclass
class WindowBatch:
    patient_id: int
    modality: str
    window_start_s: float
    samples: np.ndarray
    t_flush: float

    def __post_init__(self):
        self.samples = np.asarray(self.samples, dtype=np.float64)


@dataclass(frozen=True)
class QueryTrace:
    query_id: int
    patient_id: int
    t_ingest: float     # first sample of the window was captured here
    t_enqueue: float
    t_dequeue: float
    t_done: float
    model_scores: dict[str, float]
    ensemble_score: float

    def __post_init__(self):
        if not self.t_ingest <= self.t_enqueue <= self.t_dequeue <= self.t_done:
            raise ValueError("trace timestamps must be ordered "
                             "ingest <= enqueue <= dequeue <= done")


class Aggregator:
    """Single-writer buffer for one (patient, modality) stream.

    Collects samples until exactly rate*window of them arrived, then emits a
    WindowBatch and starts over.  Windows are contiguous and never overlap.
    """

    def __init__(self, patient_id: int, modality: str, rate_qps: float,
                 window_s: float):
        per_window = rate_qps * window_s
        if abs(per_window - round(per_window)) > 1e-6 or round(per_window) < 1:
            raise ConfigurationError(
                f"rates.{modality}: rate * window must be a positive integer, "
                f"got {per_window}")
        self.patient_id = patient_id
        self.modality = modality
        self.window_s = window_s
        self.samples_per_window = int(round(per_window))
        self._buffer: list[float] = []
        self._window_index = 0
        self._last_t = -math.inf

    def add(self, sample: SensorSample) -> WindowBatch | None:
        if sample.t_gen < self._last_t:
            raise ValueError(f"samples for ({self.patient_id}, {self.modality}) "
                             "must arrive in time order")
        self._last_t = sample.t_gen
        self._buffer.append(sample.value)
        if len(self._buffer) < self.samples_per_window:
            return None
        batch = WindowBatch(
            patient_id=self.patient_id,
            modality=self.modality,
            window_start_s=self._window_index * self.window_s,
            samples=np.array(self._buffer),
            t_flush=sample.t_gen,
        )
        self._buffer = []
        self._window_index += 1
        return batch


class _WindowScorer:
    """Per-query model scores matching the profiling cohort's binormal model."""

    def __init__(self, zoo: ModelZoo, b: Selector, correlation: float,
                 rng: np.random.Generator):
        self.indices = b.indices()
        self.ids = [zoo.profiles[i].id for i in self.indices]
        self.mu = np.array([positive_shift(zoo.profiles[i].target_auc)
                            for i in self.indices])
        self.shared_w = math.sqrt(correlation)
        self.private_w = math.sqrt(1.0 - correlation)
        self.rng = rng

    def draw(self) -> tuple[dict[str, float], float]:
        label = 1.0 if self.rng.random() < 0.5 else 0.0
        shared = self.rng.standard_normal()
        private = self.rng.standard_normal(len(self.indices))
        scores = self.mu * label + self.shared_w * shared + self.private_w * private
        return dict(zip(self.ids, map(float, scores))), float(scores.mean())


def _check_modalities(zoo: ModelZoo, b: Selector, rates: dict[str, float]) -> None:
    check_selector(b, zoo)
    if b.popcount == 0:
        raise EmptyEnsembleError("cannot serve an empty ensemble")
    needed = {zoo.profiles[i].modality for i in b.indices()}
    missing = needed - set(rates)
    if missing:
        raise ConfigurationError(
            f"rates: no stream configured for modality {sorted(missing)[0]!r}")


_FLUSH, _DONE = 0, 1


def run_simulation(zoo: ModelZoo, b: Selector, executor: ExecutorModel,
                   patients: int, rates: dict[str, float], window_s: float,
                   duration_s: float, seed: int = 0,
                   correlation: float = 0.5,
                   agg_overhead_s: float = DEFAULT_AGG_OVERHEAD_S,
                   stagger: bool = False) -> list[QueryTrace]:
    """Discrete-event simulation; returns one trace per ensemble query.

    Every patient emits one query per completed window (all of its selected
    modalities flush together, since windows share one clock).  With
    ``stagger`` the patients' window phases are seeded-random instead of
    aligned, spreading the per-window query burst.  Queues drain fully at
    the end, so every emitted query is traced.
    """
    _check_modalities(zoo, b, rates)
    if window_s <= 0 or duration_s < window_s:
        raise ConfigurationError("window_s must be positive and duration_s >= window_s")
    if patients < 1:
        raise ConfigurationError("patients must be >= 1")
    for modality, rate in rates.items():
        Aggregator(0, modality, rate, window_s)  # validates rate * window

    rng = np.random.default_rng(seed)
    phases = rng.uniform(0.0, window_s, patients) if stagger else np.zeros(patients)
    scorer = _WindowScorer(zoo, b, correlation, rng)
    s_q = service_time(b, zoo, executor)

    events: list[tuple[float, int, int, object]] = []
    seq = 0
    for p in range(patients):
        n_windows = int(math.floor((duration_s - phases[p]) / window_s + 1e-9))
        for k in range(1, n_windows + 1):
            heapq.heappush(events, (phases[p] + k * window_s, seq, _FLUSH, p))
            seq += 1

    waiting: deque = deque()
    idle_slots = executor.n_slots
    traces: list[QueryTrace] = []
    next_query_id = 0

    def start_service(query, now: float):
        nonlocal seq, idle_slots
        idle_slots -= 1
        begin = max(now, query["t_enqueue"])
        heapq.heappush(events, (begin + s_q, seq, _DONE, (query, begin)))
        seq += 1

    while events:
        now, _, kind, payload = heapq.heappop(events)
        if kind == _FLUSH:
            patient = payload
            model_scores, ens_score = scorer.draw()
            query = {
                "query_id": next_query_id,
                "patient_id": patient,
                "t_ingest": now - window_s,
                "t_enqueue": now + agg_overhead_s,
                "model_scores": model_scores,
                "ensemble_score": ens_score,
            }
            next_query_id += 1
            if idle_slots > 0 and not waiting:
                start_service(query, query["t_enqueue"])
            else:
                waiting.append(query)
        else:
            query, started = payload
            idle_slots += 1
            traces.append(QueryTrace(
                query_id=query["query_id"],
                patient_id=query["patient_id"],
                t_ingest=query["t_ingest"],
                t_enqueue=query["t_enqueue"],
                t_dequeue=started,
                t_done=now,
                model_scores=query["model_scores"],
                ensemble_score=query["ensemble_score"],
            ))
            if waiting:
                start_service(waiting.popleft(), now)

    traces.sort(key=lambda t: t.query_id)
    return traces


def e2e_percentiles(traces: list[QueryTrace]) -> dict[str, dict[str, float]]:
    """Nearest-rank p50/p95/p99 of query latency and capture-to-result time."""
    if not traces:
        raise ValueError("need at least one trace")

    def pct(values: list[float]) -> dict[str, float]:
        ordered = sorted(values)
        n = len(ordered)
        return {f"p{q}": ordered[math.ceil(q / 100 * n) - 1] for q in (50, 95, 99)}

    return {
        "query": pct([t.t_done - t.t_enqueue for t in traces]),
        "capture": pct([t.t_done - t.t_ingest for t in traces]),
    }


def queueing_delays(traces: list[QueryTrace]) -> list[float]:
    """Pre-service waits (dequeue minus enqueue), one per query."""
    return [t.t_dequeue - t.t_enqueue for t in traces]


def save_traces_jsonl(traces: list[QueryTrace], path) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        for t in traces:
            fh.write(json.dumps(asdict(t), sort_keys=True))
            fh.write("\n")


@dataclass(frozen=True)
class TimelinePoint:
    t_s: float
    latency_s: float
    kind: str    # "aggregation" or "inference"


def batch_comparison(zoo: ModelZoo, b: Selector, executor: ExecutorModel,
                     patients: int, rates: dict[str, float], window_s: float,
                     batch_period_s: float, duration_s: float, seed: int = 0,
                     agg_overhead_s: float = DEFAULT_AGG_OVERHEAD_S
                     ) -> tuple[list[TimelinePoint], list[TimelinePoint]]:
    """Online per-window serving vs. deferred batch processing timelines.

    Both timelines come from the same seeded window stream.  Online shows
    one inference spike per window plus aggregation-only points in between;
    batch accumulates all windows of a period and drains them back-to-back
    through the same slot pool at the period boundary.
    """
    if batch_period_s < window_s:
        raise ConfigurationError("batch_period_s must be >= window_s")
    traces = run_simulation(zoo, b, executor, patients, rates, window_s,
                            duration_s, seed=seed, agg_overhead_s=agg_overhead_s)
    s_q = service_time(b, zoo, executor)

    online = [TimelinePoint(t.t_enqueue, t.t_done - t.t_enqueue, "inference")
              for t in traces]
    batch: list[TimelinePoint] = []
    n_periods = int(math.floor(duration_s / batch_period_s + 1e-9))
    for m in range(1, n_periods + 1):
        boundary = m * batch_period_s
        pending = [t for t in traces
                   if boundary - batch_period_s < t.t_enqueue - agg_overhead_s <= boundary]
        if not pending:
            continue
        drain = math.ceil(len(pending) / executor.n_slots) * s_q
        batch.append(TimelinePoint(boundary, agg_overhead_s + drain, "inference"))

    # Aggregation-only latency between inference spikes: a configured
    # constant, sampled once per second of simulated time.
    for t_s in range(int(duration_s)):
        online.append(TimelinePoint(float(t_s), agg_overhead_s, "aggregation"))
        batch.append(TimelinePoint(float(t_s), agg_overhead_s, "aggregation"))
    online.sort(key=lambda p: (p.t_s, p.kind))
    batch.sort(key=lambda p: (p.t_s, p.kind))
    return online, batch


def save_timeline_csv(points: list[TimelinePoint], path) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        fh.write("t_s,latency_s,kind\n")
        for p in points:
            fh.write(f"{p.t_s!r},{p.latency_s!r},{p.kind}\n")


def run_simulation_wallclock(zoo: ModelZoo, b: Selector, executor: ExecutorModel,
                             patients: int, rates: dict[str, float],
                             window_s: float, duration_s: float, seed: int = 0,
                             correlation: float = 0.5) -> list[QueryTrace]:
    """Wall-clock smoke-test mode: real threads, same trace schema.

    Aggregators are single-writer (one ingest thread per patient); the query
    queue is multi-producer multi-consumer; workers are stateless; the trace
    sink is append-only under a lock.  Timing is real and therefore not
    deterministic; use the DES for any seeded assertion.
    """
    _check_modalities(zoo, b, rates)
    scorer_lock = threading.Lock()
    scorer = _WindowScorer(zoo, b, correlation, np.random.default_rng(seed))
    s_q = service_time(b, zoo, executor)
    start = time.monotonic()

    work: queue_mod.Queue = queue_mod.Queue()
    traces: list[QueryTrace] = []
    traces_lock = threading.Lock()
    counter_lock = threading.Lock()
    next_id = [0]

    def ingest(patient: int):
        aggs = {m: Aggregator(patient, m, r, window_s) for m, r in rates.items()}
        needed = {zoo.profiles[i].modality for i in b.indices()}
        flushed: dict[int, set] = {}
        # Exact per-modality sample schedule, merged and walked in time order.
        schedule = sorted(
            (i / rate, modality)
            for modality, rate in rates.items()
            for i in range(1, int(math.floor(duration_s * rate + 1e-9)) + 1)
        )
        for t, modality in schedule:
            now = time.monotonic() - start
            if now < t:
                time.sleep(t - now)
            batch = aggs[modality].add(SensorSample(patient, modality, t, 0.0))
            if batch is None:
                continue
            widx = int(round(batch.window_start_s / window_s))
            flushed.setdefault(widx, set()).add(modality)
            if needed <= flushed[widx]:
                with counter_lock:
                    qid = next_id[0]
                    next_id[0] += 1
                with scorer_lock:
                    model_scores, ens = scorer.draw()
                work.put((qid, patient, batch.window_start_s,
                          time.monotonic() - start, model_scores, ens))

    def worker():
        while True:
            item = work.get()
            if item is None:
                return
            qid, patient, w_start, enq, model_scores, ens = item
            deq = time.monotonic() - start
            time.sleep(s_q)
            done = time.monotonic() - start
            with traces_lock:
                traces.append(QueryTrace(qid, patient, w_start, enq,
                                         max(deq, enq), max(done, deq, enq),
                                         model_scores, ens))

    ingest_threads = [threading.Thread(target=ingest, args=(p,)) for p in range(patients)]
    workers = [threading.Thread(target=worker) for _ in range(executor.n_slots)]
    for th in ingest_threads + workers:
        th.start()
    for th in ingest_threads:
        th.join()
    for _ in workers:
        work.put(None)
    for th in workers:
        th.join()
    return sorted(traces, key=lambda t: t.query_id)


class IngestServer:
    """Newline-delimited-JSON TCP ingest feeding window aggregators.

    Each line is one SensorSample object: {"patient_id", "modality",
    "t_gen", "value"}.  Completed windows are handed to `on_window`.  This
    adapter sits outside the deterministic path; it exists so an external
    generator can drive the same aggregation machinery.
    """

    def __init__(self, rates: dict[str, float], window_s: float, on_window=None,
                 host: str = "127.0.0.1", port: int = 0):
        self.rates = rates
        self.window_s = window_s
        self.windows: list[WindowBatch] = []
        self._on_window = on_window
        self._aggs: dict[tuple[int, str], Aggregator] = {}
        self._lock = threading.Lock()
        outer = self

        class Handler(socketserver.StreamRequestHandler):
            def handle(self):
                for raw in self.rfile:
                    line = raw.strip()
                    if not line:
                        continue
                    outer._ingest_line(line.decode("utf-8"))

        self._server = socketserver.ThreadingTCPServer((host, port), Handler)
        self._server.daemon_threads = True
        self._thread = threading.Thread(target=self._server.serve_forever, daemon=True)

    @property
    def address(self) -> tuple[str, int]:
        return self._server.server_address

    def _ingest_line(self, line: str) -> None:
        record = json.loads(line)
        sample = SensorSample(patient_id=int(record["patient_id"]),
                              modality=str(record["modality"]),
                              t_gen=float(record["t_gen"]),
                              value=float(record["value"]))
        if sample.modality not in self.rates:
            raise ConfigurationError(f"no stream configured for modality "
                                     f"{sample.modality!r}")
        key = (sample.patient_id, sample.modality)
        with self._lock:
            agg = self._aggs.get(key)
            if agg is None:
                agg = Aggregator(sample.patient_id, sample.modality,
                                 self.rates[sample.modality], self.window_s)
                self._aggs[key] = agg
            batch = agg.add(sample)
            if batch is not None:
                self.windows.append(batch)
        if batch is not None and self._on_window is not None:
            self._on_window(batch)

    def start(self) -> None:
        self._thread.start()

    def stop(self) -> None:
        self._server.shutdown()
        self._server.server_close()


def send_samples(address: tuple[str, int], samples: list[SensorSample]) -> None:
    """Client helper: push samples to an IngestServer as ND-JSON lines."""
    with socket.create_connection(address) as sock:
        payload = "".join(json.dumps(asdict(s), sort_keys=True) + "\n"
                          for s in samples)
        sock.sendall(payload.encode("utf-8"))
