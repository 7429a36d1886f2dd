import itertools

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from qcpart.network import (
    TopologyError,
    build_topology,
    capacity_violations,
    count_feasible,
    feasible_assignments,
    parse_topology_file,
    parse_topology_spec,
    relabel,
    topology_to_json,
    validate_capacity,
)


def floyd_warshall(k, edges):
    d = np.full((k, k), np.inf)
    np.fill_diagonal(d, 0)
    for i, j in edges:
        d[i, j] = d[j, i] = 1
    for m in range(k):
        d = np.minimum(d, d[:, m:m + 1] + d[m:m + 1, :])
    return d


def test_distance_examples():
    k4 = build_topology("complete", 4, [1] * 4).distance
    assert (k4 == 1 - np.eye(4, dtype=int)).all()
    assert build_topology("path", 4, [1] * 4).distance[0, 3] == 3
    star = build_topology("star", 4, [1] * 4).distance
    assert star[0, 1] == 1 and star[1, 2] == 2 and star[2, 3] == 2


@pytest.mark.parametrize("kind", ["complete", "cycle", "star", "path"])
@pytest.mark.parametrize("k", [2, 3, 4, 5, 8])
def test_distance_matches_floyd_warshall(kind, k):
    net = build_topology(kind, k, [2] * k)
    assert np.array_equal(net.distance, floyd_warshall(k, net.adjacency))


@given(st.integers(2, 9), st.data())
def test_custom_metric_properties(k, data):
    tree = [(data.draw(st.integers(0, j - 1)), j) for j in range(1, k)]
    extra = data.draw(st.lists(st.tuples(st.integers(0, k - 1), st.integers(0, k - 1)).filter(lambda e: e[0] != e[1]),
                               max_size=6))
    net = build_topology("custom", k, [1] * k, tree + extra)
    d = net.distance
    assert np.array_equal(d, d.T) and (np.diag(d) == 0).all() and (d[~np.eye(k, dtype=bool)] > 0).all()
    for a, b, c in itertools.product(range(k), repeat=3):
        assert d[a, c] <= d[a, b] + d[b, c]
    assert np.array_equal(d, floyd_warshall(k, net.adjacency))


@given(st.sampled_from(["complete", "cycle", "star", "path"]), st.integers(2, 7), st.data())
def test_relabel_conjugates_distance(kind, k, data):
    net = build_topology(kind, k, list(range(1, k + 1)))
    perm = data.draw(st.permutations(range(k)))
    moved = relabel(net, perm)
    p = np.asarray(perm)
    assert np.array_equal(moved.distance[np.ix_(p, p)], net.distance)
    assert all(moved.capacities[perm[j]] == net.capacities[j] for j in range(k))


def test_errors():
    with pytest.raises(TopologyError, match="disconnected"):
        build_topology("custom", 4, [1] * 4, [(0, 1), (2, 3)])
    with pytest.raises(TopologyError):
        build_topology("complete", 4, [1, 1, 1])
    with pytest.raises(TopologyError):
        parse_topology_spec("ring:4", 2)


def test_topology_file_round_trip():
    net = build_topology("star", 5, [3, 1, 2, 2, 1])
    again = parse_topology_file(topology_to_json(net))
    assert again == net


def test_validate_capacity_examples():
    net = build_topology("complete", 2, [4, 4])
    assert validate_capacity([0, 0, 0, 0, 1, 1, 1, 1], net)
    assert not validate_capacity([0, 0, 0, 0, 0, 1, 1, 1], net)
    assert validate_capacity([0, 1, 2], build_topology("complete", 4, [1, 1, 1, 1]))
    with pytest.raises(ValueError):
        validate_capacity([0, 2], net)


def test_capacity_violations_reports_step_and_qpu():
    net = build_topology("complete", 2, [2, 2])
    rows = np.array([[0, 0, 1, 1], [1, 1, 1, 0]])
    assert capacity_violations(rows, net) == [(1, 1, 3, 2)]


@pytest.mark.parametrize("n, caps", [(4, [2, 2]), (5, [3, 1, 2]), (6, [4, 4]), (3, [1, 1, 1, 1]), (7, [2, 2])])
def test_feasible_enumeration_against_brute_force(n, caps):
    brute = [a for a in itertools.product(range(len(caps)), repeat=n)
             if all(a.count(j) <= c for j, c in enumerate(caps))]
    rows = feasible_assignments(n, caps)
    assert [tuple(r) for r in rows.tolist()] == brute
    assert count_feasible(n, caps) == len(brute)
