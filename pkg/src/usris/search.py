"""
Tabu search over element activation (stage 1) and fold angles (stage 2),
and the sequential pipeline that chains them.

Both stages share one loop: evaluate every non-tabu neighbor of the
current solution, move to the best one (ties go to the lowest
fingerprint), push the solution just left onto a bounded FIFO tabu list,
and keep the best solution seen so far. If every neighbor is tabu the best
tabu neighbor is accepted anyway (aspiration) and the iteration is flagged
in the trace.
"""

from __future__ import annotations

import csv
import itertools
import math
from collections import deque
from dataclasses import dataclass, field

import numpy as np

from .beamforming import BeamformingSolution
from .errors import InfeasibleBudgetError
from .geometry import FLAT, AngleSet, FoldConfiguration, angle_set_for


@dataclass(frozen=True)
class ActivationTopology:
    """Binary activation over ``layers * n_grid`` locations, stored as sorted active indices."""

    layers: int
    n_grid: int
    active: tuple

    def __post_init__(self):
        active = tuple(sorted(int(i) for i in self.active))
        if len(set(active)) != len(active):
            raise ValueError("duplicate active index")
        if active and (active[0] < 0 or active[-1] >= self.size):
            raise ValueError("active index out of range")
        object.__setattr__(self, "active", active)

    @classmethod
    def from_z(cls, z, layers: int | None = None) -> "ActivationTopology":
        z = np.asarray(z)
        if z.ndim == 2:
            layers = z.shape[0]
        z = z.ravel()
        if not np.all((z == 0) | (z == 1)):
            raise ValueError("activation entries must be 0 or 1")
        layers = layers or 1
        return cls(layers, z.size // layers, tuple(np.flatnonzero(z)))

    @property
    def size(self) -> int:
        return self.layers * self.n_grid

    @property
    def budget(self) -> int:
        return len(self.active)

    @property
    def z(self) -> np.ndarray:
        out = np.zeros(self.size, dtype=np.int8)
        out[list(self.active)] = 1
        return out

    def per_layer(self) -> np.ndarray:
        return self.z.reshape(self.layers, self.n_grid)

    @property
    def fingerprint(self) -> tuple:
        return self.active


def random_topology(layers: int, n_grid: int, n_active: int, seed) -> ActivationTopology:
    total = layers * n_grid
    if not 0 <= n_active <= total:
        raise InfeasibleBudgetError(f"budget {n_active} does not fit {total} locations")
    rng = np.random.default_rng(seed)
    return ActivationTopology(layers, n_grid, tuple(rng.choice(total, n_active, replace=False)))


def dense_reference_topology(layers: int, rows: int, cols: int, n_active: int) -> ActivationTopology:
    """Compact topology: the budget split evenly over layers, each layer filled from its center out.

    Every layer receives at least one element whenever the budget allows, so
    the cascade through the stack is never cut.
    """
    n_grid = rows * cols
    total = layers * n_grid
    if not 0 <= n_active <= total:
        raise InfeasibleBudgetError(f"budget {n_active} does not fit {total} locations")
    per_layer = [n_active // layers + (1 if l < n_active % layers else 0) for l in range(layers)]
    rr, cc = np.divmod(np.arange(n_grid), cols)
    dist = (rr - (rows - 1) / 2.0) ** 2 + (cc - (cols - 1) / 2.0) ** 2
    order = np.lexsort((np.arange(n_grid), dist))
    active = []
    for l, count in enumerate(per_layer):
        active.extend(l * n_grid + int(n) for n in order[:count])
    return ActivationTopology(layers, n_grid, tuple(active))


def swap_neighbors(topo: ActivationTopology, d: int, S: int, rng) -> list:
    """Up to S distinct neighbors, each swapping d active with d inactive locations.

    When the whole swap neighborhood has at most S members it is enumerated
    exactly; otherwise S neighbors are sampled (duplicates redrawn, bounded
    retries).
    """
    active = list(topo.active)
    inactive = sorted(set(range(topo.size)) - set(active))
    if d < 1 or len(active) < d or len(inactive) < d:
        raise ValueError(f"cannot swap d={d} with {len(active)} active / {len(inactive)} inactive")
    rng = np.random.default_rng(rng) if not isinstance(rng, np.random.Generator) else rng
    current = set(active)

    def make(off, on):
        return ActivationTopology(topo.layers, topo.n_grid, tuple((current - set(off)) | set(on)))

    if math.comb(len(active), d) * math.comb(len(inactive), d) <= S:
        return [make(off, on) for off in itertools.combinations(active, d)
                for on in itertools.combinations(inactive, d)]

    seen = {}
    attempts = 0
    while len(seen) < S and attempts < 20 * S:
        attempts += 1
        off = rng.choice(active, d, replace=False)
        on = rng.choice(inactive, d, replace=False)
        cand = make(off, on)
        seen.setdefault(cand.fingerprint, cand)
    return list(seen.values())


def fold_neighbors(c: FoldConfiguration, angles: AngleSet) -> list:
    """All configurations that change exactly one of the two angles."""
    out = [FoldConfiguration(a, c.phi_right) for a in angles.angles if angles.index(a) != angles.index(c.phi_left)]
    out += [FoldConfiguration(c.phi_left, a) for a in angles.angles if angles.index(a) != angles.index(c.phi_right)]
    return out


class TabuList:
    """Bounded FIFO of exact solution fingerprints."""

    def __init__(self, capacity: int):
        if capacity < 0:
            raise ValueError("capacity must be non-negative")
        self.capacity = capacity
        self._entries = deque(maxlen=capacity) if capacity else None

    def add(self, fingerprint) -> None:
        if self._entries is not None:
            self._entries.append(fingerprint)

    def __contains__(self, fingerprint) -> bool:
        return self._entries is not None and fingerprint in self._entries

    def __len__(self) -> int:
        return 0 if self._entries is None else len(self._entries)

    def entries(self) -> list:
        return [] if self._entries is None else list(self._entries)


@dataclass
class TraceRecord:
    iter: int
    best_candidate_rate: float
    best_so_far_rate: float
    evaluated: int
    tabu_hits: int
    aspiration_fired: bool = False
    move: tuple = ()  # fingerprint of the solution moved to; not exported


@dataclass
class SearchTrace:
    records: list = field(default_factory=list)

    def append(self, record: TraceRecord) -> None:
        self.records.append(record)

    def best_so_far(self) -> list:
        return [r.best_so_far_rate for r in self.records]

    def __len__(self) -> int:
        return len(self.records)

    def write_csv(self, path) -> None:
        with open(path, "w", newline="") as fh:
            writer = csv.writer(fh, lineterminator="\n")
            writer.writerow(["iter", "best_candidate_rate", "best_so_far_rate", "evaluated",
                             "tabu_hits", "aspiration_fired"])
            for r in self.records:
                writer.writerow([r.iter, repr(r.best_candidate_rate), repr(r.best_so_far_rate),
                                 r.evaluated, r.tabu_hits, int(r.aspiration_fired)])


@dataclass
class SearchResult:
    best: object
    rate: float
    trace: SearchTrace
    evaluations: int = 0


@dataclass(frozen=True)
class SearchParams:
    d: int = 1
    neighbors: int = 20
    tabu_capacity: int = 10
    stage1_max_iters: int = 50
    stage2_max_iters: int = 9
    # stop after this many iterations without a best-so-far gain; 0 disables
    stall_iters: int = 15
    # extension: repeat stage 1 / stage 2 this many times
    outer_loops: int = 1
    aspiration: bool = True


def _tabu_loop(evaluate, init, neighborhood, key, capacity, max_iters, stall_iters, map_fn, aspiration=True):
    cache = {}

    def rates_for(cands):
        todo = [c for c in cands if key(c) not in cache]
        for c, rate in zip(todo, map_fn(evaluate, todo)):
            cache[key(c)] = float(rate)
        return [cache[key(c)] for c in cands]

    current = init
    best, best_rate = init, rates_for([init])[0]
    tabu = TabuList(capacity)
    trace = SearchTrace([TraceRecord(0, best_rate, best_rate, 1, 0, False, key(init))])
    stall = 0
    for it in range(1, max_iters + 1):
        cands = neighborhood(current, it)
        if not cands:
            break
        allowed = [c for c in cands if key(c) not in tabu]
        hits = len(cands) - len(allowed)
        fired = False
        if not allowed:
            if not aspiration:
                break
            allowed, fired = cands, True
        rates = rates_for(allowed)
        # best rate, then lowest fingerprint
        pick = min(range(len(allowed)), key=lambda i: (-rates[i], key(allowed[i])))
        tabu.add(key(current))
        current, cand_rate = allowed[pick], rates[pick]
        if cand_rate > best_rate:
            best, best_rate, stall = current, cand_rate, 0
        else:
            stall += 1
        trace.append(TraceRecord(it, cand_rate, best_rate, len(allowed), hits, fired, key(current)))
        if stall_iters and stall >= stall_iters:
            break
    return SearchResult(best, best_rate, trace, len(cache))


def tabu_search_elements(evaluate, init: ActivationTopology, params: SearchParams = SearchParams(),
                         seed=0, map_fn=map) -> SearchResult:
    """Stage 1: search activation topologies of fixed budget.

    ``evaluate`` maps an ActivationTopology to its achievable rate.
    """
    rng = np.random.default_rng(seed)
    n_active = init.budget
    n_free = init.size - n_active
    if n_active < params.d or n_free < params.d:
        # no budget-preserving swap exists
        rate = float(evaluate(init))
        return SearchResult(init, rate, SearchTrace([TraceRecord(0, rate, rate, 1, 0, False)]), 1)

    def neighborhood(topo, _it):
        return swap_neighbors(topo, params.d, params.neighbors, rng)

    return _tabu_loop(evaluate, init, neighborhood, lambda t: t.fingerprint, params.tabu_capacity,
                      params.stage1_max_iters, params.stall_iters, map_fn, params.aspiration)


def tabu_search_folds(evaluate, init: FoldConfiguration, angles: AngleSet,
                      params: SearchParams = SearchParams(), map_fn=map) -> SearchResult:
    """Stage 2: search the two fold angles over the discrete angle set."""
    if init.phi_left not in angles or init.phi_right not in angles:
        raise ValueError(f"initial configuration {init} is not on the angle grid")

    def key(c):
        return (angles.index(c.phi_left), angles.index(c.phi_right))

    return _tabu_loop(evaluate, init, lambda c, _it: fold_neighbors(c, angles), key,
                      params.tabu_capacity, params.stage2_max_iters, params.stall_iters, map_fn,
                      params.aspiration)


@dataclass
class PipelineResult:
    topology: ActivationTopology
    fold: FoldConfiguration
    solution: BeamformingSolution
    init_topology: ActivationTopology
    init_rate: float
    stage1_rate: float
    stage1: list = field(default_factory=list)
    stage2: list = field(default_factory=list)

    @property
    def rate(self) -> float:
        return self.solution.rate


def joint_pipeline(scenario, n_active: int, m: int, params: SearchParams = SearchParams(), seed=0,
                   init: ActivationTopology | None = None, fold_stage: bool = True,
                   map_fn=map) -> PipelineResult:
    """Stage 1 at the flat fold, then stage 2 at the stage-1 topology.

    Candidates inside stage 1 are scored with the reduced AO budget; the
    stage-1 winner and the initial topology are then re-solved at full
    precision and the better of the two is kept, so the reported rate never
    falls below the full-precision rate of the starting topology. Stage 2
    starts from the incumbent fold, which keeps the final rate at or above
    the stage-1 rate.
    """
    layers, n_grid = scenario.layers, scenario.n_grid
    rng = np.random.default_rng(seed)
    if init is None:
        init = random_topology(layers, n_grid, n_active, rng)
    elif init.budget != n_active or init.size != layers * n_grid:
        raise ValueError("initial topology does not match the budget or grid")
    angles = angle_set_for(scenario.spec, m)

    init_sol = scenario.solve(init, FLAT)
    topo, fold, sol = init, FLAT, init_sol
    stage1_rate = None
    s1_traces, s2_traces = [], []
    for _ in range(max(1, params.outer_loops)):
        fold_now = fold

        def eval_topology(t, _fold=fold_now):
            return scenario.solve(t, _fold, precise=False).rate

        s1 = tabu_search_elements(eval_topology, topo, params, seed=rng, map_fn=map_fn)
        s1_traces.append(s1)
        candidate = scenario.solve(s1.best, fold)
        if candidate.rate > sol.rate:
            topo, sol = s1.best, candidate
        if stage1_rate is None:
            stage1_rate = sol.rate

        if fold_stage and angles.m > 1:
            z_now = topo

            def eval_fold(c, _z=z_now):
                return scenario.solve(_z, c).rate

            s2 = tabu_search_folds(eval_fold, fold, angles, params, map_fn=map_fn)
            s2_traces.append(s2)
            if s2.rate > sol.rate:
                fold = s2.best
                sol = scenario.solve(topo, fold)
    return PipelineResult(topo, fold, sol, init, init_sol.rate, stage1_rate, s1_traces, s2_traces)
