"""Mapping search, decoding, schedules and the swarm update rule."""

import itertools
import math

import numpy as np
import pytest

from conftest import all_to_all_platform, demo_clustered, two_core_platform

from snnflow.errors import InfeasibleMappingError
from snnflow.mapping import (MappingSolution, SwarmConfig, Swarm,
                             build_schedules, decode_position,
                             evaluate_mapping, init_swarm, pso_step,
                             search_mapping, validate_mapping)
from snnflow.sdfg import (Actor, Channel, Sdfg, lift_to_sdfg,
                          minimum_buffer_allocation, repetition_vector,
                          self_timed_throughput, set_buffer_allocation)
from snnflow.snn_graph import Core, HardwareGraph, Link


def demo_sdfg(buffer=64) -> Sdfg:
    return lift_to_sdfg(demo_clustered(), core_exec_time=1,
                        default_buffer=buffer)


def pipeline_sdfg(n: int, tokens: int = 4, buffer: int | None = None) -> Sdfg:
    actors = tuple(Actor(f"c{i}", 1, 1) for i in range(n))
    channels = [Channel(f"c{i}", tokens, f"c{i+1}", tokens, 0,
                        buffer if buffer else tokens)
                for i in range(n - 1)]
    channels += [Channel(a.id, 1, a.id, 1, tokens=1) for a in actors]
    return Sdfg(actors, tuple(channels))


# --------------------------------------------------------------- decode

def test_decode_single_core_takes_everything():
    g = pipeline_sdfg(1)
    hw = HardwareGraph((Core("t0", 4, 1),))
    theta = np.array([[0.01]])
    assert decode_position(theta, g, hw) == {"c0": "t0"}


def test_decode_argmax_row():
    g = pipeline_sdfg(1)
    hw = two_core_platform()
    assert decode_position(np.array([[0.2, 0.9]]), g, hw) == {"c0": "t1"}
    assert decode_position(np.array([[0.9, 0.2]]), g, hw) == {"c0": "t0"}
    # tie goes to the lowest core id
    assert decode_position(np.array([[0.5, 0.5]]), g, hw) == {"c0": "t0"}


def test_decode_repairs_capacity_overflow():
    rng = np.random.default_rng(0)
    g = pipeline_sdfg(5)
    hw = all_to_all_platform(3, dim=2)  # each core fits two unit clusters
    for _ in range(25):
        theta = rng.uniform(size=(5, 3))
        mapping = decode_position(theta, g, hw)
        validate_mapping(g, hw, mapping)


def test_decode_infeasible_when_demand_exceeds_capacity():
    g = pipeline_sdfg(5)
    hw = HardwareGraph((Core("t0", 2, 1), Core("t1", 2, 1)))
    with pytest.raises(InfeasibleMappingError):
        decode_position(np.full((5, 2), 0.5), g, hw)


def test_validate_mapping_checks_connection_caps():
    g = demo_sdfg()
    hw = HardwareGraph(
        (Core("t0", 8, 1, out_connections=0), Core("t1", 8, 1)),
        (Link("t0", "t1", 1), Link("t1", "t0", 1)))
    mapping = {"c0": "t0", "c1": "t1", "c2": "t1"}
    with pytest.raises(InfeasibleMappingError, match="outgoing"):
        validate_mapping(g, hw, mapping)


def test_validate_mapping_checks_bandwidth():
    g = demo_sdfg()
    hw = HardwareGraph(
        (Core("t0", 8, 1), Core("t1", 8, 1, in_bandwidth=10)),
        (Link("t0", "t1", 1), Link("t1", "t0", 1)))
    mapping = {"c0": "t0", "c1": "t1", "c2": "t1"}
    # c0 -> c1 carries 19 tokens per iteration, above the cap of 10
    with pytest.raises(InfeasibleMappingError, match="tokens"):
        validate_mapping(g, hw, mapping)


def test_validate_mapping_requires_route():
    g = demo_sdfg()
    hw = HardwareGraph((Core("t0", 8, 1), Core("t1", 8, 1)),
                       (Link("t1", "t0", 1),))  # no route t0 -> t1
    with pytest.raises(InfeasibleMappingError, match="route"):
        validate_mapping(g, hw, {"c0": "t0", "c1": "t1", "c2": "t1"})


# ------------------------------------------------------------ schedules

def test_single_cluster_schedule_repeats_it():
    cg = demo_clustered()
    single = type(cg)(clusters=cg.clusters[:1], edges=())
    g = lift_to_sdfg(single, core_exec_time=1)
    hw = HardwareGraph((Core("t0", 8, 1),))
    schedules = build_schedules(g, hw, {"c0": "t0"})
    s = schedules["t0"]
    assert s.cycle == ("c0",)
    assert s.iterations_per_cycle == 1


def test_two_independent_clusters_alternate():
    from snnflow.partition import Cluster, ClusteredSnnGraph
    cg = ClusteredSnnGraph(
        clusters=(Cluster("u", ("x",)), Cluster("v", ("y",))), edges=())
    g = lift_to_sdfg(cg, core_exec_time=1)
    hw = HardwareGraph((Core("t0", 4, 1),))
    schedules = build_schedules(g, hw, {"u": "t0", "v": "t0"})
    s = schedules["t0"]
    assert sorted(s.cycle) == ["u", "v"]
    assert s.iterations_per_cycle == 1


def test_schedule_multiplicities_match_repetition_vector():
    g = Sdfg((Actor("a", 1), Actor("b", 1)),
             (Channel("a", 2, "b", 3, 0, 6),
              Channel("a", 1, "a", 1, tokens=1),
              Channel("b", 1, "b", 1, tokens=1)))
    hw = two_core_platform(dim=4)
    mapping = {"a": "t0", "b": "t1"}
    schedules = build_schedules(g, hw, mapping)
    q = repetition_vector(g)
    for core, s in schedules.items():
        for actor in set(s.cycle):
            assert s.cycle.count(actor) == q[actor] * s.iterations_per_cycle


def test_demo_schedule_covers_every_actor_q_times(hw2):
    g = demo_sdfg(buffer=38)
    mapping = {"c0": "t0", "c1": "t1", "c2": "t1"}
    schedules = build_schedules(g, hw2, mapping)
    q = repetition_vector(g)
    counted = {a: 0 for a in q}
    ipc = None
    for s in schedules.values():
        ipc = s.iterations_per_cycle
        for actor in s.cycle:
            counted[actor] += 1
    assert all(counted[a] == q[a] * ipc for a in counted)


def test_imposed_schedule_never_beats_free_execution(hw2):
    g = demo_sdfg(buffer=19)
    mapping = {"c0": "t0", "c1": "t0", "c2": "t1"}
    schedules = build_schedules(g, hw2, mapping)
    scheduled = self_timed_throughput(g, schedules=schedules, platform=hw2,
                                      mapping=mapping, exec_time_scale=2)
    free = self_timed_throughput(g, platform=hw2, mapping=mapping,
                                 exec_time_scale=2)
    assert scheduled.throughput <= free.throughput


def test_evaluate_mapping_returns_consistent_solution(hw2):
    g = demo_sdfg(buffer=38)
    sol = evaluate_mapping(g, hw2, {"c0": "t0", "c1": "t1", "c2": "t1"})
    assert isinstance(sol, MappingSolution)
    assert sol.throughput.period > 0
    assert sol.throughput.throughput * sol.throughput.period == \
        pytest.approx(1, abs=1e-12)
    record = sol.to_record()
    assert set(record) == {"mapping", "throughput", "schedules"}


# ------------------------------------------------------------------ pso

def test_pso_zero_phi_keeps_constant_velocity():
    cfg = SwarmConfig(particles=3, iterations=2, phi1=0.0, phi2=0.0,
                      v_max=0.5)
    rng = np.random.default_rng(0)
    swarm = init_swarm(cfg, dims=4, rng=rng)
    v0 = swarm.velocities.copy()
    p0 = swarm.positions.copy()
    fitness = lambda theta: float(np.sum(theta))
    pso_step(swarm, fitness, cfg)   # evaluation only
    pso_step(swarm, fitness, cfg)   # now positions move by velocity
    assert np.allclose(swarm.velocities, v0)
    assert np.allclose(swarm.positions,
                       np.clip(p0 + v0, 0.0, 1.0))


def test_pso_particle_at_gbest_is_stationary():
    cfg = SwarmConfig(particles=1, iterations=1)
    rng = np.random.default_rng(1)
    swarm = init_swarm(cfg, dims=3, rng=rng)
    swarm.velocities[:] = 0.0
    fitness = lambda theta: 1.0
    pso_step(swarm, fitness, cfg)
    before = swarm.positions.copy()
    pso_step(swarm, fitness, cfg)
    assert np.allclose(swarm.positions, before)


def test_pso_gbest_monotone_and_beats_initial_population(hw2):
    g = demo_sdfg(buffer=38)
    cfg = SwarmConfig(particles=8, iterations=12, seed=5)
    rng = np.random.default_rng(7)
    swarm = init_swarm(cfg, dims=len(g.actors) * 2, rng=rng)

    def fitness(theta):
        try:
            mapping = decode_position(theta, g, hw2)
            return evaluate_mapping(g, hw2, mapping).throughput.period
        except InfeasibleMappingError:
            return math.inf

    pso_step(swarm, fitness, cfg)
    initial_best = swarm.gbest_period
    for _ in range(cfg.iterations - 1):
        pso_step(swarm, fitness, cfg)
    assert all(b >= a for a, b in
               zip(swarm.history[1:], swarm.history[:-1]))  # non-increasing
    assert swarm.gbest_period <= initial_best


def test_search_symmetric_two_clusters(hw2):
    from snnflow.partition import Cluster, ClusterEdge, ClusteredSnnGraph
    cg = ClusteredSnnGraph(
        clusters=(Cluster("u", ("x",)), Cluster("v", ("y",))),
        edges=(ClusterEdge("u", "v", 3),))
    g = lift_to_sdfg(cg, core_exec_time=1, default_buffer=3)
    sol = search_mapping(g, hw2, SwarmConfig(particles=4, iterations=6, seed=2))
    both = {evaluate_mapping(g, hw2, {"u": "t0", "v": "t1"}).throughput.throughput,
            evaluate_mapping(g, hw2, {"u": "t1", "v": "t0"}).throughput.throughput}
    assert len(both) == 1
    assert sol.throughput.throughput >= max(both) or \
        sol.throughput.throughput in both


def test_three_stage_pipeline_gains_from_three_cores():
    g = pipeline_sdfg(3, tokens=2, buffer=8)
    hw1 = HardwareGraph((Core("t0", 4, 1),))
    hw3 = all_to_all_platform(3, dim=4)
    single = evaluate_mapping(g, hw1, {c: "t0" for c in g.actor_ids()})
    spread = evaluate_mapping(g, hw3, {"c0": "t0", "c1": "t1", "c2": "t2"})
    assert spread.throughput.throughput >= single.throughput.throughput


def test_search_matches_exhaustive_enumeration():
    g = pipeline_sdfg(4, tokens=2, buffer=4)
    hw = all_to_all_platform(2, dim=3)
    best = 0.0
    for combo in itertools.product(hw.core_ids(), repeat=4):
        mapping = dict(zip(g.actor_ids(), combo))
        try:
            sol = evaluate_mapping(g, hw, mapping)
        except InfeasibleMappingError:
            continue
        best = max(best, sol.throughput.throughput)
    hits = 0
    for seed in range(6):
        sol = search_mapping(g, hw, SwarmConfig(particles=10, iterations=12,
                                                seed=seed))
        assert sol.throughput.throughput <= best + 1e-12
        if sol.throughput.throughput == pytest.approx(best, rel=1e-12):
            hits += 1
    assert hits >= 4


def test_search_deterministic_given_seed(hw2):
    g = demo_sdfg(buffer=19)
    cfg = SwarmConfig(particles=6, iterations=8, seed=11)
    a = search_mapping(g, hw2, cfg)
    b = search_mapping(g, hw2, cfg)
    assert a.mapping == b.mapping
    assert a.throughput == b.throughput
