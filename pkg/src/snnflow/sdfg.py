"""Synchronous dataflow core: rated graphs, consistency, deadlock, throughput.

Actors fire by consuming a fixed token count from every input channel and
producing a fixed count on every output channel; a firing may start only
when all input tokens and all output buffer space are available.  Bounded
buffers are enforced through a space-credit counter per channel whose
dynamics are exactly the classical reverse-channel encoding: space is
claimed when the producer starts and returned when the consumer finishes.

Throughput comes from self-timed execution: a discrete-event run over
exact (integer/rational) time that stops when a previously seen state
recurs; the long-term period is the clock advance divided by the
iterations completed between the two occurrences.
"""

from __future__ import annotations

import hashlib
import logging
import math
from collections import defaultdict, deque
from dataclasses import dataclass, replace
from fractions import Fraction
from heapq import heappop, heappush

import yaml

from .errors import (BudgetExceededError, DeadlockError, GraphFormatError,
                     GraphValidationError, InconsistentGraphError,
                     InfeasibleCapacityError, InfeasibleMappingError)
from .partition import ClusteredSnnGraph
from .snn_graph import HardwareGraph

logger = logging.getLogger(__name__)

SDFG_FORMAT = "sdfg/1"

DEFAULT_STATE_BUDGET = 10 ** 6


def exact_time(x) -> int | Fraction:
    """Convert a time value to exact arithmetic.

    Floats are interpreted through their decimal representation so that
    0.1 becomes 1/10; integral values collapse to ``int``.
    """
    if isinstance(x, bool):
        raise TypeError("boolean is not a time value")
    if isinstance(x, int):
        return x
    if isinstance(x, Fraction):
        return int(x) if x.denominator == 1 else x
    if isinstance(x, float):
        if x.is_integer():
            return int(x)
        f = Fraction(str(x))
        return int(f) if f.denominator == 1 else f
    raise TypeError(f"unsupported time value {x!r}")


@dataclass(frozen=True)
class Actor:
    """A dataflow actor; ``weight`` carries the neuron count of the
    cluster it represents (1 for plain actors)."""

    id: str
    exec_time: float = 1
    weight: int = 1


@dataclass(frozen=True)
class Channel:
    """A FIFO edge with fixed port rates.

    ``capacity`` of ``None`` means unbounded.  ``src == dst`` self-loops
    serialize an actor's firings.
    """

    src: str
    prod: int
    dst: str
    cons: int
    tokens: int = 0
    capacity: int | None = None


@dataclass(frozen=True)
class Sdfg:
    actors: tuple[Actor, ...]
    channels: tuple[Channel, ...] = ()

    def actor_ids(self) -> list[str]:
        return [a.id for a in self.actors]

    def actor(self, aid: str) -> Actor:
        for a in self.actors:
            if a.id == aid:
                return a
        raise KeyError(aid)

    def validate(self) -> None:
        ids = set()
        for a in self.actors:
            if a.id in ids:
                raise GraphValidationError(f"duplicate actor id {a.id!r}")
            ids.add(a.id)
            if a.exec_time < 0:
                raise GraphValidationError(
                    f"actor {a.id!r}: negative execution time")
        for i, c in enumerate(self.channels):
            if c.src not in ids or c.dst not in ids:
                raise GraphValidationError(
                    f"channel {i} ({c.src!r} -> {c.dst!r}) references an "
                    f"undeclared actor")
            if c.prod < 1 or c.cons < 1:
                raise GraphValidationError(
                    f"channel {i} ({c.src!r} -> {c.dst!r}): port rates must be >= 1")
            if c.tokens < 0:
                raise GraphValidationError(
                    f"channel {i} ({c.src!r} -> {c.dst!r}): negative initial tokens")
            if c.capacity is not None and c.capacity < c.tokens:
                raise GraphValidationError(
                    f"channel {i} ({c.src!r} -> {c.dst!r}): capacity below "
                    f"initial tokens")


@dataclass(frozen=True)
class ThroughputResult:
    """Long-term rate of one graph iteration per unit time."""

    period: float
    throughput: float
    transient_length: int
    steady_state_hash: str

    def to_record(self) -> dict:
        return {"period": self.period, "throughput": self.throughput,
                "transient_length": self.transient_length,
                "steady_state_hash": self.steady_state_hash}


@dataclass(frozen=True)
class DeadlockReport:
    """Stalled abstract-execution state: who starves and why."""

    starving: tuple[str, ...]
    remaining: dict[str, int]
    tokens: dict[int, int]
    reasons: dict[str, str]


def lift_to_sdfg(cg: ClusteredSnnGraph, core_exec_time=1,
                 default_buffer: int | None = None) -> Sdfg:
    """Turn a clustered spiking network into a rated dataflow graph.

    Each cluster becomes an actor; each cluster edge becomes a channel
    producing and consuming one frame's token count per firing.  Every
    actor gains an unbounded self-loop with one token so firings cannot
    overlap (a cluster occupies a single crossbar).  Edges whose token
    count is zero are dropped with a warning since a rate of zero is not
    a valid port rate.
    """
    actors = tuple(Actor(c.id, core_exec_time, max(1, len(c.neurons)))
                   for c in cg.clusters)
    channels = []
    for e in cg.edges:
        if e.tokens <= 0:
            logger.warning(
                "dropping zero-token edge %s -> %s from dataflow graph",
                e.src, e.dst)
            continue
        channels.append(Channel(e.src, e.tokens, e.dst, e.tokens,
                                tokens=0, capacity=default_buffer))
    for a in actors:
        channels.append(Channel(a.id, 1, a.id, 1, tokens=1, capacity=None))
    g = Sdfg(actors, tuple(channels))
    g.validate()
    return g


def repetition_vector(g: Sdfg) -> dict[str, int]:
    """Smallest positive firing counts balancing every channel.

    Solved per weakly connected component by propagating rate ratios and
    scaling to the least integer solution.  Raises
    :class:`InconsistentGraphError` naming a violating channel when only
    the zero solution exists.
    """
    g.validate()
    ids = g.actor_ids()
    adj: dict[str, list[tuple[str, Fraction, int]]] = defaultdict(list)
    for i, c in enumerate(g.channels):
        if c.src == c.dst:
            if c.prod != c.cons:
                raise InconsistentGraphError(
                    f"self-loop on {c.src!r} (channel {i}) has unequal rates "
                    f"{c.prod}/{c.cons}")
            continue
        ratio = Fraction(c.prod, c.cons)
        adj[c.src].append((c.dst, ratio, i))
        adj[c.dst].append((c.src, 1 / ratio, i))

    q: dict[str, Fraction] = {}
    for root in ids:
        if root in q:
            continue
        q[root] = Fraction(1)
        component = [root]
        stack = [root]
        while stack:
            u = stack.pop()
            for v, ratio, ci in adj[u]:
                expected = q[u] * ratio
                if v in q:
                    if q[v] != expected:
                        c = g.channels[ci]
                        raise InconsistentGraphError(
                            f"balance equations have no non-zero solution; "
                            f"channel {ci} ({c.src!r} -{c.prod}/{c.cons}-> "
                            f"{c.dst!r}) closes an inconsistent cycle")
                else:
                    q[v] = expected
                    component.append(v)
                    stack.append(v)
        scale = math.lcm(*(q[v].denominator for v in component))
        counts = [int(q[v] * scale) for v in component]
        g_all = math.gcd(*counts)
        for v, n in zip(component, counts):
            q[v] = Fraction(n // g_all)
    return {v: int(q[v]) for v in ids}


def check_deadlock(g: Sdfg) -> DeadlockReport | None:
    """Abstractly execute one full iteration; report the stall if any.

    Firings are instantaneous token moves (claim space and produce in one
    step).  Because each channel has a unique producer and a unique
    consumer, firing one actor never disables another, so a greedy order
    is conclusive.
    """
    q = repetition_vector(g)
    ids = g.actor_ids()
    remaining = {a: q[a] for a in ids}
    tokens = [c.tokens for c in g.channels]
    in_ch: dict[str, list[int]] = defaultdict(list)
    out_ch: dict[str, list[int]] = defaultdict(list)
    for i, c in enumerate(g.channels):
        in_ch[c.dst].append(i)
        out_ch[c.src].append(i)

    def blocked_reason(a: str) -> str | None:
        # mirrors the timed firing rule: tokens checked on inputs, space
        # (capacity minus tokens) on outputs, with no same-step credit
        for i in in_ch[a]:
            c = g.channels[i]
            if tokens[i] < c.cons:
                return (f"needs {c.cons} tokens on channel {i} "
                        f"({c.src!r} -> {c.dst!r}), has {tokens[i]}")
        for i in out_ch[a]:
            c = g.channels[i]
            if c.capacity is None:
                continue
            if c.capacity - tokens[i] < c.prod:
                return (f"needs {c.prod} space on channel {i} "
                        f"({c.src!r} -> {c.dst!r}), capacity {c.capacity} "
                        f"holds {tokens[i]}")
        return None

    progress = True
    while progress and any(remaining[a] > 0 for a in ids):
        progress = False
        for a in ids:
            while remaining[a] > 0 and blocked_reason(a) is None:
                for i in in_ch[a]:
                    tokens[i] -= g.channels[i].cons
                for i in out_ch[a]:
                    tokens[i] += g.channels[i].prod
                remaining[a] -= 1
                progress = True
    starving = tuple(a for a in ids if remaining[a] > 0)
    if not starving:
        return None
    reasons = {a: blocked_reason(a) or "unknown" for a in starving}
    return DeadlockReport(starving, dict(remaining),
                          {i: t for i, t in enumerate(tokens)}, reasons)


def set_buffer_allocation(g: Sdfg, alloc: dict[int, int | None]) -> Sdfg:
    """Return a copy of the graph with the given channel capacities.

    Each bounded capacity must admit at least one firing on both sides:
    at least ``max(prod, cons)`` and no smaller than the channel's
    initial tokens.
    """
    channels = list(g.channels)
    for i, cap in alloc.items():
        c = channels[i]
        if cap is not None:
            if cap < max(c.prod, c.cons):
                raise InfeasibleCapacityError(
                    f"channel {i} ({c.src!r} -> {c.dst!r}): capacity {cap} "
                    f"below single-firing minimum {max(c.prod, c.cons)}")
            if cap < c.tokens:
                raise InfeasibleCapacityError(
                    f"channel {i} ({c.src!r} -> {c.dst!r}): capacity {cap} "
                    f"below initial tokens {c.tokens}")
        channels[i] = replace(c, capacity=cap)
    return replace(g, channels=tuple(channels))


def minimum_buffer_allocation(g: Sdfg) -> dict[int, int]:
    """Smallest per-channel capacities admitting one firing each.

    Self-loops (``src == dst``) are modelling artifacts and are left out;
    they keep whatever capacity they already carry.
    """
    return {i: max(c.prod, c.cons, c.tokens)
            for i, c in enumerate(g.channels) if c.src != c.dst}


def buffer_quantum(c: Channel) -> int:
    """Finest capacity step that can change the channel's behaviour."""
    return math.gcd(c.prod, c.cons)


def total_buffer_size(alloc: dict[int, int | None]) -> int:
    return sum(v for v in alloc.values() if v is not None)


@dataclass(frozen=True)
class ExecutionResult:
    """Full outcome of one self-timed run (internal superset of
    :class:`ThroughputResult`)."""

    period_exact: object
    throughput: float
    transient_iterations: int
    steady_state_hash: str
    firing_log: tuple[tuple[str | None, str], ...]
    log_cycle_start: int
    iterations_per_cycle: int
    block_counts: dict[int, int]

    def to_throughput(self) -> ThroughputResult:
        return ThroughputResult(
            period=float(self.period_exact),
            throughput=self.throughput,
            transient_length=self.transient_iterations,
            steady_state_hash=self.steady_state_hash)


class _Simulation:
    """Discrete-event self-timed execution over exact time.

    Modes: free (any ready actor fires, auto-concurrency permitted),
    ``schedules`` (each core fires only the actor at its static-order
    cursor, one firing at a time), ``list_mode`` (FIFO ready lists per
    core, used to construct static orders).  Ties at equal time resolve
    by actor id, then core id.
    """

    END = 0
    ARRIVE = 1

    def __init__(self, g: Sdfg, *,
                 exec_times: dict[str, object] | None = None,
                 latencies: dict[int, object] | None = None,
                 core_of: dict[str, str] | None = None,
                 schedules: dict[str, "object"] | None = None,
                 list_mode: bool = False,
                 state_budget: int = DEFAULT_STATE_BUDGET):
        g.validate()
        self.g = g
        self.ids = g.actor_ids()
        self.index = {a: i for i, a in enumerate(self.ids)}
        self.exec = [exact_time(exec_times[a] if exec_times else g.actor(a).exec_time)
                     for a in self.ids]
        nch = len(g.channels)
        self.tokens = [c.tokens for c in g.channels]
        self.space = [None if c.capacity is None else c.capacity - c.tokens
                      for c in g.channels]
        self.latency = [0] * nch
        for i, lat in (latencies or {}).items():
            self.latency[i] = exact_time(lat)
        self.in_ch: list[list[tuple[int, int]]] = [[] for _ in self.ids]
        self.out_ch: list[list[tuple[int, int]]] = [[] for _ in self.ids]
        for i, c in enumerate(g.channels):
            self.in_ch[self.index[c.dst]].append((i, c.cons))
            self.out_ch[self.index[c.src]].append((i, c.prod))
        self.q = repetition_vector(g)
        self.qv = [self.q[a] for a in self.ids]
        self.completions = [0] * len(self.ids)
        self.inflight = [0] * len(self.ids)
        self.budget = state_budget
        self.core_of = dict(core_of or {})
        self.schedules = schedules
        self.list_mode = list_mode
        self.cores = sorted({*self.core_of.values()})
        self.busy = {t: False for t in self.cores}
        if schedules is not None:
            missing = [a for a in self.ids if a not in self.core_of]
            if missing:
                raise InfeasibleMappingError(
                    f"actors {missing} have no core under the imposed schedules")
            self.cursor = {t: 0 for t in self.cores}
        self.queues: dict[str, deque[int]] = {t: deque() for t in self.cores}
        self.queued = [False] * len(self.ids)
        self.heap: list[tuple] = []
        self.seq = 0
        self.firing_log: list[tuple[str | None, str]] = []
        self.block_counts: dict[int, int] = defaultdict(int)
        self.fire_starts = 0

    # -- firing rules -------------------------------------------------

    def _can_fire(self, a: int) -> bool:
        tokens, space = self.tokens, self.space
        for ci, need in self.in_ch[a]:
            if tokens[ci] < need:
                return False
        for ci, amount in self.out_ch[a]:
            s = space[ci]
            if s is not None and s < amount:
                return False
        return True

    def _start(self, a: int, now) -> None:
        for ci, need in self.in_ch[a]:
            self.tokens[ci] -= need
        for ci, amount in self.out_ch[a]:
            if self.space[ci] is not None:
                self.space[ci] -= amount
        self.seq += 1
        heappush(self.heap, (now + self.exec[a], self.seq, self.END, a))
        self.inflight[a] += 1
        self.fire_starts += 1
        self.firing_log.append((self.core_of.get(self.ids[a]), self.ids[a]))
        if self.fire_starts > self.budget:
            raise BudgetExceededError(
                f"more than {self.budget} firings without a recurrent state")

    def _end(self, a: int, now) -> None:
        self.inflight[a] -= 1
        self.completions[a] += 1
        for ci, need in self.in_ch[a]:
            if self.space[ci] is not None:
                self.space[ci] += need
        for ci, amount in self.out_ch[a]:
            lat = self.latency[ci]
            if lat == 0:
                self.tokens[ci] += amount
            else:
                self.seq += 1
                heappush(self.heap, (now + lat, self.seq, self.ARRIVE,
                                     (ci, amount)))
        core = self.core_of.get(self.ids[a])
        if core is not None:
            self.busy[core] = False

    def _schedule_next(self, core: str) -> int | None:
        sched = self.schedules.get(core)
        if sched is None or (not sched.transient and not sched.cycle):
            return None
        pos = self.cursor[core]
        nt = len(sched.transient)
        if pos < nt:
            return self.index[sched.transient[pos]]
        return self.index[sched.cycle[(pos - nt) % len(sched.cycle)]]

    def _fire_phase(self, now) -> int:
        started = 0
        if self.schedules is not None:
            for core in self.cores:
                if self.busy[core]:
                    continue
                a = self._schedule_next(core)
                if a is not None and self._can_fire(a):
                    self._start(a, now)
                    self.busy[core] = True
                    self.cursor[core] += 1
                    started += 1
        elif self.list_mode:
            for a in range(len(self.ids)):
                if (not self.queued[a] and self.inflight[a] == 0
                        and self._can_fire(a)):
                    core = self.core_of.get(self.ids[a])
                    if core is None:
                        raise InfeasibleMappingError(
                            f"actor {self.ids[a]!r} has no core binding")
                    self.queues[core].append(a)
                    self.queued[a] = True
            for core in self.cores:
                if not self.busy[core] and self.queues[core]:
                    a = self.queues[core].popleft()
                    self.queued[a] = False
                    self._start(a, now)
                    self.busy[core] = True
                    started += 1
        else:
            for a in range(len(self.ids)):
                while self._can_fire(a):
                    self._start(a, now)
                    started += 1
        return started

    # -- state bookkeeping --------------------------------------------

    def _snapshot(self, now):
        pending_ends = [[] for _ in self.ids]
        arrivals = []
        for t, _, kind, payload in self.heap:
            if kind == self.END:
                pending_ends[payload].append(t - now)
            else:
                ci, amount = payload
                arrivals.append((t - now, ci, amount))
        key = [tuple(self.tokens),
               tuple(-1 if s is None else s for s in self.space),
               tuple(tuple(sorted(p)) for p in pending_ends),
               tuple(sorted(arrivals))]
        if self.schedules is not None:
            cursors = []
            for core in self.cores:
                sched = self.schedules.get(core)
                pos = self.cursor[core]
                if sched is None or not sched.cycle:
                    cursors.append(pos)
                else:
                    nt = len(sched.transient)
                    cursors.append(pos if pos < nt
                                   else nt + (pos - nt) % len(sched.cycle))
            key.append(tuple(cursors))
        if self.list_mode:
            key.append(tuple(tuple(self.queues[c]) for c in self.cores))
        return tuple(key)

    def _iterations(self) -> int:
        return min(c // q for c, q in zip(self.completions, self.qv))

    def _count_blocking(self) -> None:
        for a in range(len(self.ids)):
            blocked_on: list[int] = []
            ok_inputs = True
            for ci, need in self.in_ch[a]:
                if self.tokens[ci] < need:
                    ok_inputs = False
                    break
            if not ok_inputs:
                continue
            for ci, amount in self.out_ch[a]:
                s = self.space[ci]
                if s is not None and s < amount:
                    blocked_on.append(ci)
            for ci in blocked_on:
                self.block_counts[ci] += 1

    def _deadlock_state(self) -> dict:
        reasons = {}
        for a, aid in enumerate(self.ids):
            why = []
            for ci, need in self.in_ch[a]:
                if self.tokens[ci] < need:
                    why.append(f"channel {ci}: {self.tokens[ci]}/{need} tokens")
            for ci, amount in self.out_ch[a]:
                s = self.space[ci]
                if s is not None and s < amount:
                    why.append(f"channel {ci}: {s}/{amount} space")
            if why:
                reasons[aid] = "; ".join(why)
        return {"tokens": {i: t for i, t in enumerate(self.tokens)},
                "starving": reasons,
                "completions": dict(zip(self.ids, self.completions))}

    # -- main loop ----------------------------------------------------

    def run(self) -> ExecutionResult:
        now = 0
        seen: dict[tuple, tuple] = {}
        while True:
            while True:
                progressed = False
                while self.heap and self.heap[0][0] == now:
                    _, _, kind, payload = heappop(self.heap)
                    if kind == self.END:
                        self._end(payload, now)
                    else:
                        ci, amount = payload
                        self.tokens[ci] += amount
                    progressed = True
                if self._fire_phase(now):
                    progressed = True
                if not progressed:
                    break
            self._count_blocking()
            key = self._snapshot(now)
            if key in seen:
                t0, it0, log0, done0 = seen[key]
                d_iter = self._iterations() - it0
                if d_iter <= 0:
                    # the periodic part will repeat forever, so actors that
                    # made no progress across the period never fire again
                    stuck = [self.ids[a] for a in range(len(self.ids))
                             if self.completions[a] == done0[a]]
                    state = self._deadlock_state()
                    state["starving"] = {a: state["starving"].get(a, "stuck")
                                         for a in stuck}
                    raise DeadlockError(
                        f"actors {stuck} starve while the rest cycle",
                        state=state)
                span = now - t0
                period = Fraction(span, d_iter)
                if period.denominator == 1:
                    period = int(period)
                digest = hashlib.sha1(repr(key).encode()).hexdigest()[:12]
                return ExecutionResult(
                    period_exact=period,
                    throughput=float(Fraction(d_iter) / Fraction(span)),
                    transient_iterations=it0,
                    steady_state_hash=digest,
                    firing_log=tuple(self.firing_log),
                    log_cycle_start=log0,
                    iterations_per_cycle=d_iter,
                    block_counts=dict(self.block_counts))
            seen[key] = (now, self._iterations(), len(self.firing_log),
                         tuple(self.completions))
            if len(seen) > self.budget:
                raise BudgetExceededError(
                    f"no recurrent state within {self.budget} states")
            if not self.heap:
                raise DeadlockError(
                    "execution stalled with no fireable actor",
                    state=self._deadlock_state())
            now = self.heap[0][0]


def resolve_platform(g: Sdfg, platform: HardwareGraph | None,
                     mapping: dict[str, str] | None,
                     exec_time_scale=1) -> tuple[dict, dict, dict]:
    """Resolve per-actor execution times and per-channel latencies.

    Under a mapping each actor runs at its host core's execution time
    (scaled, e.g. by the time-wheel share); channels between distinct
    cores take the routed link latency.  Without a platform the actors'
    own execution times apply.
    """
    scale = exact_time(exec_time_scale) if not isinstance(exec_time_scale, Fraction) \
        else exec_time_scale
    exec_times: dict[str, object] = {}
    latencies: dict[int, object] = {}
    core_of: dict[str, str] = {}
    if platform is not None and mapping is not None:
        routed = platform.routed_latencies()
        cores = {c.id: c for c in platform.cores}
        for a in g.actors:
            if a.id not in mapping:
                raise InfeasibleMappingError(f"actor {a.id!r} is unmapped")
            core = mapping[a.id]
            if core not in cores:
                raise InfeasibleMappingError(
                    f"actor {a.id!r} mapped to undeclared core {core!r}")
            core_of[a.id] = core
            exec_times[a.id] = exact_time(cores[core].exec_time) * scale
        for i, c in enumerate(g.channels):
            src, dst = core_of[c.src], core_of[c.dst]
            if src == dst:
                continue
            if (src, dst) not in routed:
                raise InfeasibleMappingError(
                    f"no route from core {src!r} to core {dst!r} required by "
                    f"channel {i}")
            latencies[i] = exact_time(routed[(src, dst)])
    else:
        for a in g.actors:
            exec_times[a.id] = exact_time(a.exec_time) * scale
    return exec_times, latencies, core_of


def execute(g: Sdfg, *, schedules=None, platform: HardwareGraph | None = None,
            mapping: dict[str, str] | None = None, exec_time_scale=1,
            list_mode: bool = False,
            state_budget: int = DEFAULT_STATE_BUDGET) -> ExecutionResult:
    """Low-level entry point shared by throughput analysis and schedule
    construction."""
    exec_times, latencies, core_of = resolve_platform(
        g, platform, mapping, exec_time_scale)
    sim = _Simulation(g, exec_times=exec_times, latencies=latencies,
                      core_of=core_of, schedules=schedules,
                      list_mode=list_mode, state_budget=state_budget)
    return sim.run()


def self_timed_throughput(g: Sdfg, schedules=None,
                          platform: HardwareGraph | None = None,
                          mapping: dict[str, str] | None = None,
                          exec_time_scale=1,
                          state_budget: int = DEFAULT_STATE_BUDGET) -> ThroughputResult:
    """Throughput of self-timed execution under finite buffers.

    With ``schedules`` imposed, each core fires only the actor at its
    static-order cursor.  Raises :class:`DeadlockError` on a stall,
    :class:`InconsistentGraphError` for unbalanced rates and
    :class:`BudgetExceededError` when no recurrent state appears within
    the state budget.
    """
    return execute(g, schedules=schedules, platform=platform, mapping=mapping,
                   exec_time_scale=exec_time_scale,
                   state_budget=state_budget).to_throughput()


def sdfg_to_dict(g: Sdfg) -> dict:
    doc: dict = {"format": SDFG_FORMAT}
    doc["actors"] = [
        {"id": a.id, "exec_time": a.exec_time}
        | ({"weight": a.weight} if a.weight != 1 else {})
        for a in g.actors]
    doc["channels"] = [
        {"src": c.src, "prod": c.prod, "dst": c.dst, "cons": c.cons,
         "tokens": c.tokens, "capacity": c.capacity}
        for c in g.channels]
    return doc


def sdfg_from_dict(doc: dict, ctx: str = "<sdfg>") -> Sdfg:
    if doc.get("format") != SDFG_FORMAT:
        raise GraphFormatError(
            f"{ctx}: format is {doc.get('format')!r}, expected {SDFG_FORMAT!r}")
    actors = tuple(
        Actor(str(e["id"]), e.get("exec_time", 1), int(e.get("weight", 1)))
        for e in doc.get("actors") or [])
    channels = tuple(
        Channel(str(e["src"]), int(e["prod"]), str(e["dst"]), int(e["cons"]),
                int(e.get("tokens", 0)),
                None if e.get("capacity") is None else int(e["capacity"]))
        for e in doc.get("channels") or [])
    g = Sdfg(actors, channels)
    g.validate()
    return g


def save_sdfg(g: Sdfg, path: str) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        yaml.safe_dump(sdfg_to_dict(g), fh, sort_keys=False)


def load_sdfg(path: str) -> Sdfg:
    with open(path, "r", encoding="utf-8") as fh:
        try:
            doc = yaml.safe_load(fh)
        except yaml.YAMLError as exc:
            raise GraphFormatError(f"{path}: not valid YAML: {exc}") from exc
    if not isinstance(doc, dict):
        raise GraphFormatError(f"{path}: expected a mapping at top level")
    return sdfg_from_dict(doc, ctx=path)
