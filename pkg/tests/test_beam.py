import numpy as np
import pytest
from conftest import reference_search
from hypothesis import given, settings
from hypothesis import strategies as st

from qcpart.beam import (
    BeamEntry,
    InfeasibleError,
    SearchParams,
    candidates,
    constant_schedule_cost,
    initialize_beam,
    prune,
    search,
    step_rng,
)
from qcpart.circuit import TemporalCircuit, generate_random_circuit
from qcpart.cost import CostWeights, evaluate_total
from qcpart.network import build_topology, capacity_violations, parse_topology_spec
from qcpart.oracle import exact_optimum

K2 = build_topology("complete", 2, [4, 4])


def entry(*rows, cost=0):
    return BeamEntry(tuple(tuple(r) for r in rows), cost)


# initialization

def test_initial_beam_capacity_tight():
    c = generate_random_circuit(8, 2, 0.5, 0)
    beam = initialize_beam(c, K2, SearchParams(64, 0, 0, seed=1))
    assert len(beam) == 64 == len({e.partial_schedule for e in beam})
    for e in beam:
        assert np.bincount(e.last, minlength=2).tolist() == [4, 4]
        assert e.cumulative_cost == evaluate_total_prefix(e, c, K2)
    assert [e.cumulative_cost for e in beam] == sorted(e.cumulative_cost for e in beam)


def evaluate_total_prefix(e, circuit, net):
    layer = circuit.layers[0]
    return sum(int(net.distance[e.last[i], e.last[j]]) for i, j in layer)


def test_initial_beam_tiny_space():
    net = build_topology("complete", 2, [1, 1])
    beam = initialize_beam(TemporalCircuit(2, [[(0, 1)]]), net, SearchParams(8, 0, 0))
    assert 1 <= len(beam) <= 2
    assert {e.last for e in beam} <= {(0, 1), (1, 0)}


def test_initial_beam_empty_first_layer():
    c = TemporalCircuit(6, [[], [(0, 1)]])
    beam = initialize_beam(c, build_topology("cycle", 3, [2, 2, 2]), SearchParams(10, 0, 0, seed=4))
    assert len(beam) == 10 and all(e.cumulative_cost == 0 for e in beam)


def test_initial_beam_sampled_branch_is_distinct_and_valid():
    net = build_topology("path", 4, [8, 8, 8, 8])
    beam = initialize_beam(generate_random_circuit(32, 1, 0.5, 2), net, SearchParams(256, 0, 0, seed=9))
    assert len({e.last for e in beam}) == 256
    assert not capacity_violations(np.asarray([e.last for e in beam]), net)


def test_infeasible_capacity():
    with pytest.raises(InfeasibleError):
        search(generate_random_circuit(9, 2, 0.5, 0), K2, SearchParams(4, 1, 1))


# candidates

def test_mitigation_blocked_at_capacity():
    e = entry([0, 0, 0, 0, 1, 1, 1, 1])
    params = SearchParams(4, 0, 0)
    cands = candidates(e, [(0, 4)], K2, params, step_rng(0, 1, 0))
    assert cands == [e.last]


def test_mitigation_moves_both_ways():
    net = build_topology("complete", 2, [5, 5])
    e = entry([0, 0, 0, 0, 1, 1, 1, 1])
    cands = candidates(e, [(0, 4)], net, SearchParams(4, 0, 0), step_rng(0, 1, 0))
    assert cands == [e.last, (1, 0, 0, 0, 1, 1, 1, 1), (0, 0, 0, 0, 0, 1, 1, 1)]


def test_preservation_only():
    e = entry([0, 1, 0, 1])
    assert candidates(e, [(0, 2)], K2, SearchParams(4, 0, 0), step_rng(0, 1, 0)) == [e.last]


def test_swap_and_random_candidates_are_valid():
    net = build_topology("star", 3, [3, 2, 2])
    e = entry([0, 0, 1, 2, 0, 1, 2])
    cands = candidates(e, [(0, 3)], net, SearchParams(4, 30, 30), step_rng(5, 1, 0))
    assert len(cands) == len(set(cands))
    for cand in cands:
        assert not capacity_violations(np.asarray([cand]), net)
    assert cands[0] == e.last
    assert len(cands) > 2


def test_example_swap_reachable(example_schedule):
    s4, s5 = (tuple(r) for r in example_schedule.assignments[4:6].tolist())
    swapped = list(s4)
    swapped[3], swapped[7] = s4[7], s4[3]
    assert tuple(swapped) == s5
    params = SearchParams(1, 32, 0)
    assert any(s5 in candidates(entry(s4), [], K2, params, step_rng(seed, 5, 0)) for seed in range(20))


# pruning

def test_prune_examples():
    pool = [entry([0], cost=5), entry([1], cost=2), entry([2], cost=7)]
    assert [e.cumulative_cost for e in prune(pool, 2)] == [2, 5]
    assert len(prune([entry([0, 1], cost=3), entry([0, 1], cost=3)], 4)) == 1
    small = [entry([1], cost=1), entry([0], cost=4)]
    assert prune(small, 5) == small


def test_prune_tie_break_is_lexicographic():
    pool = [entry([1, 0], cost=1), entry([0, 1], cost=1), entry([0, 0], cost=2)]
    assert [e.last for e in prune(pool, 2)] == [(0, 1), (1, 0)]


# search

def test_example_reaches_optimum(example_circuit):
    params = SearchParams(64, 32, 16, seed=0)
    sched = search(example_circuit, K2, params, verify=True)
    opt = exact_optimum(example_circuit, K2, CostWeights())[1]
    assert sched.total_cost == opt <= 5


def test_gate_free_circuit_costs_nothing():
    sched = search(TemporalCircuit(6, [[]] * 5), build_topology("complete", 3, [2, 2, 2]), SearchParams(8, 4, 2))
    assert sched.total_cost == 0
    assert (sched.assignments == sched.assignments[0]).all()


def test_single_step_is_best_initial():
    c = generate_random_circuit(8, 1, 1.0, 3)
    params = SearchParams(16, 8, 4, seed=2)
    sched = search(c, K2, params)
    assert sched.depth == 1
    assert sched.total_cost == initialize_beam(c, K2, params)[0].cumulative_cost


@st.composite
def small_instances(draw):
    n = draw(st.integers(2, 9))
    k = draw(st.integers(2, 4))
    kind = draw(st.sampled_from(["complete", "cycle", "star", "path"]))
    slack = draw(st.integers(0, 2))
    net = parse_topology_spec(f"{kind}:{k}", -(-n // k) + slack)
    c = generate_random_circuit(n, draw(st.integers(1, 7)), draw(st.floats(0, 1)), draw(st.integers(0, 2**63)))
    params = SearchParams(draw(st.integers(1, 12)), draw(st.integers(0, 6)), draw(st.integers(0, 4)),
                          CostWeights(draw(st.integers(0, 3)), draw(st.integers(1, 3))), draw(st.integers(0, 2**64 - 1)))
    return c, net, params


@settings(max_examples=60)
@given(small_instances())
def test_matches_reference_search(inst):
    c, net, params = inst
    sched = search(c, net, params)
    ref, ref_cost = reference_search(c, net, params)
    assert sched == ref
    assert sched.total_cost == ref_cost


@settings(max_examples=200)
@given(small_instances())
def test_output_valid_and_cost_consistent(inst):
    c, net, params = inst
    sched = search(c, net, params)
    assert not capacity_violations(sched.assignments, net)
    assert sched.total_cost == evaluate_total(sched, c, net, params.weights)


def test_preservation_bound_is_not_universal():
    # Pruning may drop the constant path: at t=2 keeping the assignment and
    # moving q5 both cost 1, the tie-break keeps the move, and (4, 5) then
    # splits at t=3.  The search ends at 3 while holding S_0 fixed costs 2.
    c = TemporalCircuit(6, [[(0, 1)], [], [(0, 4), (2, 5)], [(4, 5)]])
    params = SearchParams(1, 0, 0, seed=0)
    (start,) = initialize_beam(c, K2, params)
    assert start.last == (1, 0, 0, 0, 1, 1)
    assert constant_schedule_cost(c, K2, start.last, CostWeights()) == 2
    assert search(c, K2, params).total_cost == 3


def test_preservation_bound_at_default_parameters():
    # not a theorem (see above); at the default widths it holds on all but
    # one of these 200 seeded instances (i=68: 6 vs 5)
    rng = np.random.default_rng(17)
    violations = []
    for i in range(200):
        n, k = int(rng.integers(2, 10)), int(rng.integers(2, 5))
        net = parse_topology_spec(f"{('complete', 'cycle', 'star', 'path')[i % 4]}:{k}", -(-n // k))
        c = generate_random_circuit(n, int(rng.integers(1, 12)), 0.5, i)
        params = SearchParams.for_qubits(n, seed=i)
        bound = min(constant_schedule_cost(c, net, e.last, params.weights) for e in initialize_beam(c, net, params))
        if search(c, net, params).total_cost > bound:
            violations.append(i)
    assert violations == [68]


def test_float_weights():
    c = generate_random_circuit(6, 5, 0.5, 8)
    params = SearchParams(10, 4, 2, CostWeights(0.5, 1.25), seed=3)
    sched = search(c, build_topology("cycle", 3, [2, 2, 2]), params, verify=True)
    assert sched.total_cost == pytest.approx(evaluate_total(sched, c, build_topology("cycle", 3, [2, 2, 2]),
                                                            params.weights))


def test_determinism_and_thread_independence():
    c = generate_random_circuit(16, 24, 0.5, 11)
    net = parse_topology_spec("cycle:4", 4)
    params = SearchParams.for_qubits(16, seed=1234)
    runs = [search(c, net, params) for _ in range(3)] + [search(c, net, params, threads=8)]
    first = runs[0].to_json()
    assert all(r.to_json() == first for r in runs)


def test_never_below_optimum():
    for i in range(20):
        n = [4, 6, 8][i % 3]
        c = generate_random_circuit(n, 6, 0.5, 300 + i)
        net = parse_topology_spec("complete:2", n // 2)
        sched = search(c, net, SearchParams.for_qubits(n, seed=i))
        assert sched.total_cost >= exact_optimum(c, net, CostWeights())[1]


def test_mean_cost_non_increasing_in_beam_width():
    c = generate_random_circuit(8, 16, 0.5, 3)
    means = [np.mean([search(c, K2, SearchParams(beta, 8, 4, seed=s)).total_cost for s in range(30)])
             for beta in (2, 8, 32)]
    assert means[0] >= means[1] >= means[2]
