"""Cluster-to-core mapping search and static-order schedule construction.

The search is a swarm of real-valued positions over the cluster-by-core
grid.  Positions decode to assignments by per-cluster argmax followed by
a greedy capacity repair; each feasible assignment is scored by the
throughput of the mapped, scheduled dataflow graph.  Position and
velocity updates follow the plain attraction rule toward personal and
global bests (no inertia term, no random coefficients) unless the
optional knobs are switched on.
"""

from __future__ import annotations

import logging
import math
from collections import defaultdict
from dataclasses import dataclass, field
from fractions import Fraction

import numpy as np

from .errors import DeadlockError, InfeasibleMappingError
from .sdfg import (DEFAULT_STATE_BUDGET, ExecutionResult, Sdfg,
                   ThroughputResult, exact_time, execute, repetition_vector,
                   self_timed_throughput)
from .snn_graph import HardwareGraph

logger = logging.getLogger(__name__)

DEFAULT_TIME_WHEEL_SHARE = 0.5


@dataclass(frozen=True)
class StaticOrderSchedule:
    """Per-core firing order: a transient prefix then a repeating cycle.

    One pass over ``cycle`` covers ``iterations_per_cycle`` full graph
    iterations, so every actor bound to the core appears in the cycle
    exactly ``q(actor) * iterations_per_cycle`` times.
    """

    core: str
    transient: tuple[str, ...]
    cycle: tuple[str, ...]
    iterations_per_cycle: int

    def to_record(self) -> dict:
        return {"core": self.core, "transient": list(self.transient),
                "cycle": list(self.cycle),
                "iterations_per_cycle": self.iterations_per_cycle}


@dataclass(frozen=True)
class SwarmConfig:
    particles: int = 20
    iterations: int = 50
    phi1: float = 1.5
    phi2: float = 1.5
    v_max: float = 0.5
    inertia: float | None = None    # optional inertia weight, off by default
    stochastic: bool = False        # canonical random coefficients, off by default
    seed: int | None = None

    def __post_init__(self):
        if self.particles < 1 or self.iterations < 1:
            raise ValueError("particles and iterations must be >= 1")
        if self.phi1 < 0 or self.phi2 < 0:
            raise ValueError("acceleration constants must be >= 0")


@dataclass(frozen=True)
class MappingSolution:
    """A feasible cluster-to-core assignment with its schedule and rate."""

    mapping: dict[str, str]
    schedules: dict[str, StaticOrderSchedule]
    throughput: ThroughputResult

    def to_record(self) -> dict:
        return {
            "mapping": dict(sorted(self.mapping.items())),
            "throughput": self.throughput.to_record(),
            "schedules": {core: s.to_record()
                          for core, s in sorted(self.schedules.items())},
        }


def validate_mapping(g: Sdfg, hw: HardwareGraph,
                     mapping: dict[str, str]) -> None:
    """Check one-core-per-cluster plus every platform capacity.

    Raises :class:`InfeasibleMappingError` naming the violated limit:
    crossbar load (sum of cluster neuron counts), distinct incoming and
    outgoing remote cores against the connection caps, per-iteration
    token traffic against the bandwidth caps, and route existence for
    every inter-core channel.
    """
    cores = {c.id: c for c in hw.cores}
    for a in g.actors:
        if a.id not in mapping:
            raise InfeasibleMappingError(f"cluster {a.id!r} is unmapped")
        if mapping[a.id] not in cores:
            raise InfeasibleMappingError(
                f"cluster {a.id!r} mapped to undeclared core {mapping[a.id]!r}")
    load: dict[str, int] = defaultdict(int)
    for a in g.actors:
        load[mapping[a.id]] += a.weight
    for cid, used in load.items():
        if used > cores[cid].crossbar_dim:
            raise InfeasibleMappingError(
                f"core {cid!r} hosts {used} neurons "
                f"(crossbar limit {cores[cid].crossbar_dim})")

    in_peers: dict[str, set[str]] = defaultdict(set)
    out_peers: dict[str, set[str]] = defaultdict(set)
    in_tokens: dict[str, int] = defaultdict(int)
    out_tokens: dict[str, int] = defaultdict(int)
    q = repetition_vector(g)
    routed = hw.routed_latencies()
    for i, c in enumerate(g.channels):
        src, dst = mapping[c.src], mapping[c.dst]
        if src == dst:
            continue
        if (src, dst) not in routed:
            raise InfeasibleMappingError(
                f"no route from core {src!r} to core {dst!r} required by "
                f"channel {i}")
        in_peers[dst].add(src)
        out_peers[src].add(dst)
        traffic = c.prod * q[c.src]
        in_tokens[dst] += traffic
        out_tokens[src] += traffic
    for cid, core in cores.items():
        if core.in_connections is not None and len(in_peers[cid]) > core.in_connections:
            raise InfeasibleMappingError(
                f"core {cid!r} has {len(in_peers[cid])} incoming connections "
                f"(limit {core.in_connections})")
        if core.out_connections is not None and len(out_peers[cid]) > core.out_connections:
            raise InfeasibleMappingError(
                f"core {cid!r} has {len(out_peers[cid])} outgoing connections "
                f"(limit {core.out_connections})")
        if core.in_bandwidth is not None and in_tokens[cid] > core.in_bandwidth:
            raise InfeasibleMappingError(
                f"core {cid!r} receives {in_tokens[cid]} tokens per iteration "
                f"(limit {core.in_bandwidth})")
        if core.out_bandwidth is not None and out_tokens[cid] > core.out_bandwidth:
            raise InfeasibleMappingError(
                f"core {cid!r} sends {out_tokens[cid]} tokens per iteration "
                f"(limit {core.out_bandwidth})")


def decode_position(theta: np.ndarray, g: Sdfg,
                    hw: HardwareGraph) -> dict[str, str]:
    """Map a real-valued position to a feasible cluster-to-core assignment.

    Each cluster goes to the core with its largest position component
    (ties to the lowest core id); clusters are then moved off overloaded
    cores, lowest component first, to the feasible core with the next
    highest component.  Raises :class:`InfeasibleMappingError` when the
    demand cannot be repaired.
    """
    clusters = g.actor_ids()
    cores = sorted(hw.core_ids())
    cl_index = {cl: i for i, cl in enumerate(clusters)}
    core_index = {c: j for j, c in enumerate(cores)}
    weights = {a.id: a.weight for a in g.actors}
    caps = {c.id: c.crossbar_dim for c in hw.cores}
    grid = np.asarray(theta, dtype=float).reshape(len(clusters), len(cores))

    assign = {clusters[i]: cores[int(np.argmax(grid[i]))]
              for i in range(len(clusters))}
    load: dict[str, int] = defaultdict(int)
    for cl, core in assign.items():
        load[core] += weights[cl]

    def overloaded() -> str | None:
        for core in cores:
            if load[core] > caps[core]:
                return core
        return None

    while (core := overloaded()) is not None:
        residents = sorted((cl for cl in clusters if assign[cl] == core),
                           key=lambda cl: (grid[cl_index[cl],
                                                core_index[core]], cl))
        moved = False
        for cl in residents:
            row = grid[cl_index[cl]]
            for j in np.argsort(-row, kind="stable"):
                candidate = cores[int(j)]
                if candidate == core:
                    continue
                if load[candidate] + weights[cl] <= caps[candidate]:
                    assign[cl] = candidate
                    load[core] -= weights[cl]
                    load[candidate] += weights[cl]
                    moved = True
                    break
            if moved:
                break
        if not moved:
            raise InfeasibleMappingError(
                f"cannot repair overload on core {core!r}: total demand "
                f"exceeds platform capacity")
    return assign


def _reduce_cycles(per_core: dict[str, list[str]], ipc: int
                   ) -> tuple[dict[str, list[str]], int]:
    """Collapse a steady-state word repeated m times into one occurrence."""
    def repeats(seq: list[str], m: int) -> bool:
        if not seq:
            return True
        if len(seq) % m:
            return False
        w = len(seq) // m
        return all(seq[i] == seq[i % w] for i in range(len(seq)))

    best = 1
    for m in range(ipc, 1, -1):
        if ipc % m == 0 and all(repeats(seq, m) for seq in per_core.values()):
            best = m
            break
    if best == 1:
        return per_core, ipc
    return ({core: seq[:len(seq) // best] for core, seq in per_core.items()},
            ipc // best)


def build_schedules(g: Sdfg, hw: HardwareGraph, mapping: dict[str, str],
                    time_wheel_share: float = DEFAULT_TIME_WHEEL_SHARE,
                    state_budget: int = DEFAULT_STATE_BUDGET
                    ) -> dict[str, StaticOrderSchedule]:
    """Construct static firing orders for all cores at once.

    Runs the mapped graph with per-core FIFO ready lists (a ready actor
    waits until its core is free; ties break by earlier ready time then
    actor id) until a state recurs, then splits each core's recorded
    firing sequence into a transient prefix and the repeating cycle.
    Inter-core token latency participates in the run, and actor firings
    take the host core's execution time divided by its time-wheel share.
    """
    scale = _share_to_scale(time_wheel_share)
    try:
        res = execute(g, platform=hw, mapping=mapping, list_mode=True,
                      exec_time_scale=scale, state_budget=state_budget)
    except DeadlockError as exc:
        raise DeadlockError(
            f"list scheduling deadlocked under mapping: {exc}",
            state=exc.state) from exc
    return _schedules_from_log(res, mapping)


def _schedules_from_log(res: ExecutionResult, mapping: dict[str, str]
                        ) -> dict[str, StaticOrderSchedule]:
    transient: dict[str, list[str]] = defaultdict(list)
    cycle: dict[str, list[str]] = defaultdict(list)
    for pos, (core, actor) in enumerate(res.firing_log):
        (transient if pos < res.log_cycle_start else cycle)[core].append(actor)
    for core in set(mapping.values()):
        transient.setdefault(core, [])
        cycle.setdefault(core, [])
    reduced, ipc = _reduce_cycles(dict(cycle), res.iterations_per_cycle)
    return {core: StaticOrderSchedule(core, tuple(transient[core]),
                                      tuple(reduced[core]), ipc)
            for core in sorted(reduced)}


def _share_to_scale(share) -> object:
    share = exact_time(share)
    if not 0 < share <= 1:
        raise ValueError("time-wheel share must be in (0, 1]")
    scale = Fraction(1) / Fraction(share)
    return int(scale) if scale.denominator == 1 else scale


def evaluate_mapping(g: Sdfg, hw: HardwareGraph, mapping: dict[str, str],
                     time_wheel_share: float = DEFAULT_TIME_WHEEL_SHARE,
                     state_budget: int = DEFAULT_STATE_BUDGET) -> MappingSolution:
    """Validate, schedule and rate one assignment."""
    validate_mapping(g, hw, mapping)
    schedules = build_schedules(g, hw, mapping, time_wheel_share, state_budget)
    tr = self_timed_throughput(
        g, schedules=schedules, platform=hw, mapping=mapping,
        exec_time_scale=_share_to_scale(time_wheel_share),
        state_budget=state_budget)
    return MappingSolution(dict(mapping), schedules, tr)


@dataclass
class Swarm:
    """Mutable swarm state; positions are flattened cluster-by-core grids."""

    positions: np.ndarray
    velocities: np.ndarray
    best_positions: np.ndarray
    best_periods: np.ndarray
    gbest_position: np.ndarray | None = None
    gbest_period: float = math.inf
    gbest_solution: MappingSolution | None = None
    rng: np.random.Generator | None = None
    history: list[float] = field(default_factory=list)


def init_swarm(cfg: SwarmConfig, dims: int,
               rng: np.random.Generator) -> Swarm:
    positions = rng.uniform(0.0, 1.0, size=(cfg.particles, dims))
    velocities = rng.uniform(-cfg.v_max, cfg.v_max, size=(cfg.particles, dims))
    return Swarm(positions=positions, velocities=velocities,
                 best_positions=positions.copy(),
                 best_periods=np.full(cfg.particles, math.inf),
                 rng=rng)


def pso_step(swarm: Swarm, fitness, cfg: SwarmConfig) -> Swarm:
    """One swarm update: move positions, evaluate, refresh bests.

    ``fitness`` maps a position vector to a period (lower is better;
    ``inf`` marks an infeasible decode).  The first call on a fresh
    swarm only evaluates the initial positions.
    """
    if swarm.gbest_position is not None:
        w = 1.0 if cfg.inertia is None else cfg.inertia
        if cfg.stochastic:
            r1 = swarm.rng.uniform(size=swarm.positions.shape)
            r2 = swarm.rng.uniform(size=swarm.positions.shape)
        else:
            r1 = r2 = 1.0
        swarm.velocities = (
            w * swarm.velocities
            + cfg.phi1 * r1 * (swarm.best_positions - swarm.positions)
            + cfg.phi2 * r2 * (swarm.gbest_position - swarm.positions))
        np.clip(swarm.velocities, -cfg.v_max, cfg.v_max, out=swarm.velocities)
        swarm.positions = swarm.positions + swarm.velocities
        np.clip(swarm.positions, 0.0, 1.0, out=swarm.positions)

    for l in range(swarm.positions.shape[0]):
        period = fitness(swarm.positions[l])
        if period < swarm.best_periods[l]:
            swarm.best_periods[l] = period
            swarm.best_positions[l] = swarm.positions[l].copy()
        if period < swarm.gbest_period:
            swarm.gbest_period = period
            swarm.gbest_position = swarm.positions[l].copy()
    swarm.history.append(swarm.gbest_period)
    return swarm


def search_mapping(g: Sdfg, hw: HardwareGraph, cfg: SwarmConfig | None = None,
                   time_wheel_share: float = DEFAULT_TIME_WHEEL_SHARE,
                   state_budget: int = DEFAULT_STATE_BUDGET,
                   rng: np.random.Generator | None = None) -> MappingSolution:
    """Swarm search over assignments, keeping the highest-throughput one.

    Every evaluated assignment satisfies the platform capacities;
    positions whose decode cannot be repaired, or whose schedule
    deadlocks, score as infeasible.  Raises
    :class:`InfeasibleMappingError` when no feasible assignment was found
    at all.  Budget errors from the underlying analysis propagate.
    """
    cfg = cfg or SwarmConfig()
    if rng is None:
        rng = np.random.default_rng(cfg.seed)
    dims = len(g.actors) * len(hw.cores)
    swarm = init_swarm(cfg, dims, rng)
    cache: dict[tuple, tuple[float, MappingSolution | None]] = {}
    best_by_key: dict[tuple, MappingSolution] = {}

    def fitness(theta: np.ndarray) -> float:
        try:
            mapping = decode_position(theta, g, hw)
        except InfeasibleMappingError:
            return math.inf
        key = tuple(sorted(mapping.items()))
        if key not in cache:
            try:
                sol = evaluate_mapping(g, hw, mapping, time_wheel_share,
                                       state_budget)
                cache[key] = (sol.throughput.period, sol)
            except (InfeasibleMappingError, DeadlockError) as exc:
                logger.debug("assignment %s rejected: %s", mapping, exc)
                cache[key] = (math.inf, None)
        period, sol = cache[key]
        if sol is not None:
            best_by_key[key] = sol
            if swarm.gbest_solution is None \
                    or period < swarm.gbest_solution.throughput.period:
                swarm.gbest_solution = sol
        return period

    for _ in range(cfg.iterations):
        pso_step(swarm, fitness, cfg)
    if swarm.gbest_solution is None:
        raise InfeasibleMappingError(
            "no feasible cluster-to-core assignment found by the search")
    return swarm.gbest_solution
