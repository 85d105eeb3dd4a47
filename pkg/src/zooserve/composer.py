"""Ensemble composition: constrained objective, genetic exploration, SMBO.

The search maximizes true ensemble ROC-AUC subject to a latency budget.
Each iteration profiles the newest candidates, refits two regression-forest
surrogates (accuracy and latency), explores a batch of new selectors with
genetic operators, ranks them by the surrogate objective, and profiles the
top K.  The final answer is the argmax of the TRUE objective over every
profiled selector, so surrogate error can never produce a constraint
violation in hard mode.

Candidates are always ranked with the soft (linear-penalty) form even under
a hard constraint: surrogate latency estimates are noisy, and an -inf
penalty would discard useful near-boundary candidates.  The hard penalty
applies only to true profiled values.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass
from typing import Callable, Iterable, Sequence

import numpy as np

from . import surrogate
from .cohort import Cohort, ensemble_roc_auc
from .errors import ExplorationExhaustedError
from .latency import SystemConfig
from .seeds import derive_seed, spawn_rng
from .zoo import ModelZoo, Selector

# Finite stand-in for an infeasible (infinite) latency when fitting the
# latency surrogate; large enough to repel the ranking, small enough to
# keep the forest numerically sane.
LATENCY_SURROGATE_CAP_S = 1e3

HARD = "hard"
SOFT = "soft"


@dataclass(frozen=True)
class ProfileRecord:
    """True profiler outputs for one selector."""

    b: Selector
    accuracy: float
    latency_s: float

    def __post_init__(self):
        if not 0.0 <= self.accuracy <= 1.0:
            raise ValueError("accuracy must lie in [0, 1]")
        if self.latency_s < 0:
            raise ValueError("latency must be non-negative")


@dataclass(frozen=True)
class SearchParams:
    """Knobs of the SMBO loop; defaults suit zoos up to ~100 models."""

    latency_weight: float = 1.0     # soft-penalty weight per second of violation
    n_iters: int = 20
    n_warm: int = 20
    n_explore: int = 200
    top_k: int = 5
    mutation_degree: int = 2
    p_genetic: float = 0.8
    p_mutation: float = 0.5
    constraint_mode: str = HARD
    seed: int = 0

    def __post_init__(self):
        if self.latency_weight < 0:
            raise ValueError("latency_weight must be >= 0")
        if self.n_iters < 0 or self.n_warm < 1 or self.n_explore < 1 or self.top_k < 1:
            raise ValueError("n_iters >= 0 and n_warm/n_explore/top_k >= 1 required")
        if self.top_k > self.n_explore:
            raise ValueError("top_k must not exceed n_explore")
        if not 0 <= self.p_genetic <= 1 or not 0 <= self.p_mutation <= 1:
            raise ValueError("probabilities must lie in [0, 1]")
        if self.mutation_degree < 0:
            raise ValueError("mutation_degree must be >= 0")
        if self.constraint_mode not in (HARD, SOFT):
            raise ValueError(f"constraint_mode must be '{HARD}' or '{SOFT}'")


@dataclass(frozen=True)
class TrajectoryPoint:
    iteration: int
    best_accuracy: float
    best_latency_s: float
    best_objective: float


@dataclass
class SearchResult:
    best: Selector
    best_objective: float
    best_accuracy: float
    best_latency_s: float
    trajectory: list[TrajectoryPoint]
    profiled: list[ProfileRecord]
    profiler_calls: int

    @property
    def feasible(self) -> bool:
        return math.isfinite(self.best_objective)

    def to_json_dict(self) -> dict:
        def none_if_nonfinite(x):
            return x if math.isfinite(x) else None

        return {
            "best": str(self.best),
            "best_objective": none_if_nonfinite(self.best_objective),
            "best_accuracy": self.best_accuracy,
            "best_latency_s": none_if_nonfinite(self.best_latency_s),
            "feasible": self.feasible,
            "profiler_calls": self.profiler_calls,
            "trajectory": [
                {"iteration": p.iteration, "best_accuracy": p.best_accuracy,
                 "best_latency_s": none_if_nonfinite(p.best_latency_s),
                 "best_objective": none_if_nonfinite(p.best_objective)}
                for p in self.trajectory
            ],
            "profiled": [
                {"b": str(r.b), "accuracy": r.accuracy,
                 "latency_s": none_if_nonfinite(r.latency_s)}
                for r in self.profiled
            ],
        }

    def save_json(self, path) -> None:
        with open(path, "w", encoding="utf-8") as fh:
            json.dump(self.to_json_dict(), fh, indent=2, sort_keys=True)
            fh.write("\n")

    def save_trajectory_csv(self, path) -> None:
        with open(path, "w", encoding="utf-8") as fh:
            fh.write("iter,best_acc,best_lat,best_obj\n")
            for p in self.trajectory:
                fh.write(f"{p.iteration},{p.best_accuracy!r},"
                         f"{p.best_latency_s!r},{p.best_objective!r}\n")


def constraint_penalty(x: float, mode: str = HARD, weight: float = 1.0) -> float:
    """Penalty on constraint slack x: step function (hard) or linear (soft)."""
    if mode == HARD:
        return -math.inf if x < 0 else 0.0
    if mode == SOFT:
        return weight * x
    raise ValueError(f"unknown constraint mode {mode!r}")


def objective_value(rec: ProfileRecord, budget_s: float, params: SearchParams) -> float:
    """Accuracy plus the latency-slack penalty."""
    return rec.accuracy + constraint_penalty(budget_s - rec.latency_s,
                                             params.constraint_mode,
                                             params.latency_weight)


def dual_objective_value(rec: ProfileRecord, accuracy_floor: float,
                         params: SearchParams) -> float:
    """Latency minus the accuracy-slack penalty (to be minimized)."""
    return rec.latency_s - constraint_penalty(rec.accuracy - accuracy_floor,
                                              params.constraint_mode,
                                              params.latency_weight)


def recombine(b1: Selector, b2: Selector, cut: int) -> Selector:
    """Length-preserving one-point crossover: b1[:cut] followed by b2[cut:]."""
    if b1.n != b2.n:
        raise ValueError("parents must have equal length")
    if not 1 <= cut <= b1.n:
        raise ValueError(f"cut point must lie in [1, {b1.n}]")
    return Selector(b1.bits[:cut] + b2.bits[cut:])


def mutate(b: Selector, degree: int, rng: np.random.Generator | int) -> Selector:
    """Flip `degree` uniformly drawn indices (with replacement).

    The result lies within Manhattan distance `degree` of b; repeated draws
    of one index cancel, so the distance can be smaller.
    """
    if not 0 <= degree <= b.n:
        raise ValueError("degree must lie in [0, n]")
    if isinstance(rng, (int, np.integer)):
        rng = np.random.default_rng(rng)
    bits = list(b.bits)
    for _ in range(degree):
        i = int(rng.integers(0, b.n))
        bits[i] = 1 - bits[i]
    return Selector(tuple(bits))


_BRANCH_RANDOM = "random"
_BRANCH_RECOMBINE = "recombine"
_BRANCH_MUTATE = "mutate"


def genetic_explore(existing: Sequence[Selector], count: int, degree: int,
                    p_genetic: float, p_mutation: float,
                    rng: np.random.Generator | int,
                    exclude_empty: bool = False,
                    collect_branches: bool = False):
    """Produce `count` novel selectors by random/recombination/mutation moves.

    Per attempt: with probability 1-p_genetic emit a uniformly random
    selector, otherwise recombine two random parents (probability
    1-p_mutation within the genetic branch) or mutate a random parent.
    Duplicates of the parent set or of earlier output are rejected.
    """
    parents = list(existing)
    if not parents:
        raise ValueError("need at least one parent selector")
    if count < 1:
        raise ValueError("count must be >= 1")
    n = parents[0].n
    if isinstance(rng, (int, np.integer)):
        rng = np.random.default_rng(rng)
    # Three parents per round, distinct when the pool allows it.
    replace_parents = len(parents) < 3

    banned = set(parents)
    if exclude_empty:
        banned.add(Selector.zeros(n))
    if 2 ** n - len(banned) < count:
        raise ExplorationExhaustedError(
            f"only {2 ** n - len(banned)} unseen selectors remain, need {count}")

    out: list[Selector] = []
    branches: list[str] = []
    seen = set(banned)
    stall = 0
    while len(out) < count:
        rnd = rng.random()
        rnd1 = rng.random()
        i1, i2, i3 = rng.choice(len(parents), size=3, replace=replace_parents)
        if rnd > p_genetic:
            branch = _BRANCH_RANDOM
            cand = Selector(tuple(int(v) for v in rng.integers(0, 2, n)))
        elif rnd1 > p_mutation:
            branch = _BRANCH_RECOMBINE
            cut = int(rng.integers(1, n + 1))
            cand = recombine(parents[i1], parents[i2], cut)
        else:
            branch = _BRANCH_MUTATE
            cand = mutate(parents[i3], degree, rng)
        if cand in seen:
            stall += 1
            # Rejection sampling can crawl when almost everything is seen;
            # fall back to enumerating the small remainder.
            if stall >= 20000 and n <= 20:
                remaining = [Selector(tuple((v >> k) & 1 for k in range(n)))
                             for v in range(2 ** n)]
                remaining = [s for s in remaining if s not in seen]
                order = rng.permutation(len(remaining))
                for idx in order[:count - len(out)]:
                    out.append(remaining[idx])
                    branches.append(_BRANCH_RANDOM)
                break
            continue
        stall = 0
        seen.add(cand)
        out.append(cand)
        branches.append(branch)
    return (out, branches) if collect_branches else out


class Profilers:
    """Caching wrapper over the true accuracy and latency profilers.

    `calls` counts distinct selectors truly profiled; cache hits are free.
    """

    def __init__(self, accuracy_fn: Callable[[Selector], float],
                 latency_fn: Callable[[Selector], float]):
        self._accuracy_fn = accuracy_fn
        self._latency_fn = latency_fn
        self._cache: dict[Selector, ProfileRecord] = {}

    @property
    def calls(self) -> int:
        return len(self._cache)

    def known(self, b: Selector) -> bool:
        return b in self._cache

    def profile(self, b: Selector) -> ProfileRecord:
        rec = self._cache.get(b)
        if rec is None:
            rec = ProfileRecord(b=b, accuracy=self._accuracy_fn(b),
                                latency_s=self._latency_fn(b))
            self._cache[b] = rec
        return rec

    def records(self) -> list[ProfileRecord]:
        return list(self._cache.values())


def make_accuracy_profiler(cohort: Cohort) -> Callable[[Selector], float]:
    return lambda b: ensemble_roc_auc(cohort, b)


def _argbest(records: Iterable[ProfileRecord], value_fn, minimize: bool) -> tuple[ProfileRecord, float]:
    best_rec, best_val = None, None
    for rec in records:
        val = value_fn(rec)
        if best_rec is None or (val < best_val if minimize else val > best_val):
            best_rec, best_val = rec, val
    return best_rec, best_val


def _greedy_order_rd(zoo: ModelZoo, rng: np.random.Generator) -> list[int]:
    return list(rng.permutation(zoo.n))


def _greedy_order_af(zoo: ModelZoo) -> list[int]:
    # Most accurate standalone model first; ties go to the lower index.
    return sorted(range(zoo.n), key=lambda i: (-zoo.profiles[i].target_auc, i))


def _greedy_order_lf(zoo: ModelZoo) -> list[int]:
    # Cheapest model first: standalone latency is monotone in macs, so the
    # macs ordering equals the profiled-latency ordering without extra calls.
    return sorted(range(zoo.n), key=lambda i: (zoo.profiles[i].macs, i))


def _greedy_accrete(order: list[int], zoo: ModelZoo, profilers: Profilers,
                    budget_s: float, params: SearchParams) -> SearchResult:
    """Add models in the given order until the true latency exceeds budget.

    The violating ensemble is profiled (it costs budget) but rolled back;
    the returned selector is the last one that fit.
    """
    chosen: list[int] = []
    best = Selector.zeros(zoo.n)
    trajectory: list[TrajectoryPoint] = []
    for step, idx in enumerate(order, start=1):
        cand = Selector.from_indices(zoo.n, chosen + [idx])
        rec = profilers.profile(cand)
        if rec.latency_s > budget_s:
            trajectory.append(TrajectoryPoint(step, rec.accuracy, rec.latency_s,
                                              objective_value(rec, budget_s, params)))
            break
        chosen.append(idx)
        best = cand
        trajectory.append(TrajectoryPoint(step, rec.accuracy, rec.latency_s,
                                          objective_value(rec, budget_s, params)))
    records = profilers.records()
    if chosen:
        best_rec = next(r for r in records if r.b == best)
        best_obj = objective_value(best_rec, budget_s, params)
        best_acc, best_lat = best_rec.accuracy, best_rec.latency_s
    else:
        best_obj, best_acc, best_lat = -math.inf, 0.0, math.inf
    return SearchResult(best=best, best_objective=best_obj, best_accuracy=best_acc,
                        best_latency_s=best_lat, trajectory=trajectory,
                        profiled=records, profiler_calls=profilers.calls)


def _hard_params(params: SearchParams | None) -> SearchParams:
    return params if params is not None else SearchParams()


def baseline_rd(zoo: ModelZoo, cohort: Cohort, latency_profiler, budget_s: float,
                sys: SystemConfig | None = None, seed: int = 0,
                params: SearchParams | None = None) -> SearchResult:
    """Random accretion without replacement until the budget is exceeded."""
    profilers = Profilers(make_accuracy_profiler(cohort), latency_profiler)
    order = _greedy_order_rd(zoo, spawn_rng(seed, "baseline-rd"))
    return _greedy_accrete(order, zoo, profilers, budget_s, _hard_params(params))


def baseline_af(zoo: ModelZoo, cohort: Cohort, latency_profiler, budget_s: float,
                sys: SystemConfig | None = None, seed: int = 0,
                params: SearchParams | None = None) -> SearchResult:
    """Accuracy-first accretion by standalone profile AUC."""
    profilers = Profilers(make_accuracy_profiler(cohort), latency_profiler)
    return _greedy_accrete(_greedy_order_af(zoo), zoo, profilers, budget_s,
                           _hard_params(params))


def baseline_lf(zoo: ModelZoo, cohort: Cohort, latency_profiler, budget_s: float,
                sys: SystemConfig | None = None, seed: int = 0,
                params: SearchParams | None = None) -> SearchResult:
    """Latency-first accretion by standalone cost."""
    profilers = Profilers(make_accuracy_profiler(cohort), latency_profiler)
    return _greedy_accrete(_greedy_order_lf(zoo), zoo, profilers, budget_s,
                           _hard_params(params))


def _greedy_solution(order: list[int], zoo: ModelZoo, latency_profiler,
                     budget_s: float) -> Selector:
    """Largest prefix ensemble of `order` whose true latency fits the budget."""
    chosen: list[int] = []
    for idx in order:
        cand = Selector.from_indices(zoo.n, chosen + [idx])
        if latency_profiler(cand) > budget_s:
            break
        chosen.append(idx)
    return Selector.from_indices(zoo.n, chosen)


def _baseline_seed_selectors(zoo: ModelZoo, latency_profiler, budget_s: float,
                             seed: int) -> list[Selector]:
    """Solutions of RD/AF/LF, computed outside the budgeted profiler context.

    Only the solutions are seeded into the search; the greedy runs' own
    intermediate profiles do not count against the search budget.
    """
    orders = [
        _greedy_order_rd(zoo, spawn_rng(seed, "baseline-rd")),
        _greedy_order_af(zoo),
        _greedy_order_lf(zoo),
    ]
    unique: list[Selector] = []
    for order in orders:
        sol = _greedy_solution(order, zoo, latency_profiler, budget_s)
        if sol.popcount > 0 and sol not in unique:
            unique.append(sol)
    return unique


def _smbo_loop(zoo: ModelZoo, profilers: Profilers, budget_like: float,
               params: SearchParams, true_value_fn, rank_sign: float,
               rank_fn, iteration_hook=None,
               include_baseline_seeds: bool = True,
               latency_profiler=None) -> SearchResult:
    """Shared SMBO loop for the primal (maximize) and dual (minimize) forms."""
    minimize = rank_sign < 0
    warm_rng = spawn_rng(params.seed, "warm")
    explore_rng = spawn_rng(params.seed, "explore")
    seed_a = derive_seed(params.seed, "surrogate-accuracy")
    seed_l = derive_seed(params.seed, "surrogate-latency")

    # Warm start: baseline solutions occupy the first warm slots, the rest
    # are random selectors, for n_warm seeds in total.
    warm: list[Selector] = []
    if include_baseline_seeds and latency_profiler is not None:
        warm.extend(_baseline_seed_selectors(zoo, latency_profiler, budget_like,
                                             params.seed)[:params.n_warm])
    guard = 0
    while len(warm) < params.n_warm:
        cand = Selector.random(zoo.n, warm_rng)
        guard += 1
        if cand.popcount == 0 or cand in warm:
            if guard > 1000 * params.n_warm:
                raise ExplorationExhaustedError("cannot fill the warm-start set")
            continue
        warm.append(cand)

    explored: list[Selector] = []
    for b in warm:
        profilers.profile(b)
        explored.append(b)

    def snapshot(iteration: int) -> TrajectoryPoint:
        rec, val = _argbest(profilers.records(), true_value_fn, minimize)
        return TrajectoryPoint(iteration, rec.accuracy, rec.latency_s, val)

    trajectory = [snapshot(0)]

    for it in range(1, params.n_iters + 1):
        records = profilers.records()
        acc_data = [(r.b, r.accuracy) for r in records]
        lat_data = [(r.b, min(r.latency_s, LATENCY_SURROGATE_CAP_S)) for r in records]
        f_acc = surrogate.fit_forest(acc_data, seed=seed_a)
        f_lat = surrogate.fit_forest(lat_data, seed=seed_l)

        candidates = genetic_explore(explored, params.n_explore,
                                     params.mutation_degree, params.p_genetic,
                                     params.p_mutation, explore_rng,
                                     exclude_empty=True)
        acc_hat = surrogate.predict_batch(f_acc, candidates)
        lat_hat = surrogate.predict_batch(f_lat, candidates)
        scores = rank_fn(acc_hat, lat_hat)
        top = np.argsort(rank_sign * -scores, kind="stable")[:params.top_k]
        for idx in top:
            b = candidates[int(idx)]
            profilers.profile(b)
            explored.append(b)

        trajectory.append(snapshot(it))
        if iteration_hook is not None:
            iteration_hook(it, f_acc, f_lat, profilers)

    best_rec, best_val = _argbest(profilers.records(), true_value_fn, minimize)
    return SearchResult(best=best_rec.b, best_objective=best_val,
                        best_accuracy=best_rec.accuracy,
                        best_latency_s=best_rec.latency_s,
                        trajectory=trajectory, profiled=profilers.records(),
                        profiler_calls=profilers.calls)


def smbo_search(zoo: ModelZoo, cohort: Cohort, latency_profiler, budget_s: float,
                sys: SystemConfig | None = None,
                params: SearchParams | None = None,
                iteration_hook=None,
                include_baseline_seeds: bool = True) -> SearchResult:
    """Surrogate-guided search for the best ensemble under a latency budget.

    Total profiler calls never exceed n_warm + n_iters * top_k; an all-zero
    objective of -inf (hard mode, nothing feasible) is reported in the
    result rather than raised.
    """
    if zoo.n == 0:
        raise ValueError("zoo must be non-empty")
    params = params if params is not None else SearchParams()
    profilers = Profilers(make_accuracy_profiler(cohort), latency_profiler)

    def true_value(rec: ProfileRecord) -> float:
        return objective_value(rec, budget_s, params)

    def rank(acc_hat: np.ndarray, lat_hat: np.ndarray) -> np.ndarray:
        return acc_hat + params.latency_weight * (budget_s - lat_hat)

    return _smbo_loop(zoo, profilers, budget_s, params, true_value, +1.0, rank,
                      iteration_hook=iteration_hook,
                      include_baseline_seeds=include_baseline_seeds,
                      latency_profiler=latency_profiler)


def min_latency_search(zoo: ModelZoo, cohort: Cohort, latency_profiler,
                       accuracy_floor: float,
                       sys: SystemConfig | None = None,
                       params: SearchParams | None = None) -> SearchResult:
    """Dual form: minimize latency subject to a minimum accuracy.

    In hard mode an ensemble below the accuracy floor scores +inf, so the
    returned ensemble meets the floor whenever any profiled one does.
    """
    if zoo.n == 0:
        raise ValueError("zoo must be non-empty")
    params = params if params is not None else SearchParams()
    profilers = Profilers(make_accuracy_profiler(cohort), latency_profiler)

    def true_value(rec: ProfileRecord) -> float:
        return dual_objective_value(rec, accuracy_floor, params)

    def rank(acc_hat: np.ndarray, lat_hat: np.ndarray) -> np.ndarray:
        return lat_hat - params.latency_weight * (acc_hat - accuracy_floor)

    # A latency budget is meaningless here, so the warm start is random-only.
    return _smbo_loop(zoo, profilers, math.inf, params, true_value, -1.0, rank,
                      include_baseline_seeds=False, latency_profiler=latency_profiler)


def baseline_npo(zoo: ModelZoo, cohort: Cohort, latency_profiler, budget_s: float,
                 sys: SystemConfig | None = None, budget_calls: int = 120,
                 seed: int = 0, params: SearchParams | None = None) -> SearchResult:
    """Non-parametric random-subset search with the same profiling budget.

    Subset sizes are bounded by the size of the latency-first solution;
    baseline solutions seed the profiled set, as for the SMBO search.
    """
    params = _hard_params(params)
    profilers = Profilers(make_accuracy_profiler(cohort), latency_profiler)
    rng = spawn_rng(seed, "npo")

    seeds = _baseline_seed_selectors(zoo, latency_profiler, budget_s, seed)
    lf_solution = _greedy_solution(_greedy_order_lf(zoo), zoo, latency_profiler,
                                   budget_s)
    max_size = max(1, lf_solution.popcount)

    trajectory: list[TrajectoryPoint] = []

    def true_value(rec: ProfileRecord) -> float:
        return objective_value(rec, budget_s, params)

    for s in seeds:
        if profilers.calls >= budget_calls:
            break
        profilers.profile(s)

    attempts = 0
    while profilers.calls < budget_calls and attempts < 200 * budget_calls:
        attempts += 1
        size = int(rng.integers(1, max_size + 1))
        idx = rng.choice(zoo.n, size=size, replace=False)
        cand = Selector.from_indices(zoo.n, idx)
        if profilers.known(cand):
            continue
        profilers.profile(cand)
        rec, val = _argbest(profilers.records(), true_value, minimize=False)
        trajectory.append(TrajectoryPoint(profilers.calls, rec.accuracy,
                                          rec.latency_s, val))

    best_rec, best_val = _argbest(profilers.records(), true_value, minimize=False)
    return SearchResult(best=best_rec.b, best_objective=best_val,
                        best_accuracy=best_rec.accuracy,
                        best_latency_s=best_rec.latency_s,
                        trajectory=trajectory, profiled=profilers.records(),
                        profiler_calls=profilers.calls)


def exhaustive_search(zoo: ModelZoo, cohort: Cohort, latency_profiler,
                      budget_s: float, sys: SystemConfig | None = None,
                      params: SearchParams | None = None,
                      accuracy_floor: float | None = None) -> SearchResult:
    """Evaluate every non-empty selector with the true profilers (n <= 20).

    With `accuracy_floor` set, solves the dual problem (latency minimization)
    instead.  Accuracy is computed in one batched pass; ties resolve to the
    lowest selector integer, matching enumeration order.
    """
    if zoo.n > 20:
        raise ValueError(f"exhaustive search is guarded to n <= 20, got {zoo.n}")
    if zoo.n == 0:
        raise ValueError("zoo must be non-empty")
    params = _hard_params(params)
    from .metrics import roc_auc_many  # local import to keep module load light

    n = zoo.n
    values = np.arange(1, 2 ** n)
    bits = ((values[:, None] >> np.arange(n)) & 1).astype(np.float64)
    pop = bits.sum(axis=1)
    ens = (cohort.scores @ bits.T) / pop
    aucs = roc_auc_many(cohort.labels, ens)

    minimize = accuracy_floor is not None
    records: list[ProfileRecord] = []
    best_rec, best_val = None, None
    for row, auc in zip(bits, aucs):
        b = Selector(tuple(int(v) for v in row))
        rec = ProfileRecord(b=b, accuracy=float(auc), latency_s=latency_profiler(b))
        records.append(rec)
        val = (dual_objective_value(rec, accuracy_floor, params) if minimize
               else objective_value(rec, budget_s, params))
        if best_rec is None or (val < best_val if minimize else val > best_val):
            best_rec, best_val = rec, val

    trajectory = [TrajectoryPoint(0, best_rec.accuracy, best_rec.latency_s, best_val)]
    return SearchResult(best=best_rec.b, best_objective=best_val,
                        best_accuracy=best_rec.accuracy,
                        best_latency_s=best_rec.latency_s,
                        trajectory=trajectory, profiled=records,
                        profiler_calls=len(records))
