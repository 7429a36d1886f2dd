"""QPU networks: capacities, physical links and hop-count distances."""

from __future__ import annotations

import json
from collections import deque
from math import comb
from dataclasses import dataclass
from typing import Iterable, Sequence

import numpy as np

KINDS = ("complete", "cycle", "star", "path", "custom")


class TopologyError(ValueError):
    pass


@dataclass(frozen=True, eq=False)
class QpuNetwork:
    num_qpus: int
    capacities: tuple[int, ...]
    adjacency: frozenset[tuple[int, int]]
    distance: np.ndarray
    kind: str = "custom"

    @property
    def total_capacity(self) -> int:
        return sum(self.capacities)

    def __eq__(self, other):
        if not isinstance(other, QpuNetwork):
            return NotImplemented
        return (
            self.capacities == other.capacities
            and self.adjacency == other.adjacency
            and np.array_equal(self.distance, other.distance)
        )

    def __hash__(self):
        return hash((self.capacities, self.adjacency))


def _edges_for(kind: str, k: int) -> set[tuple[int, int]]:
    if kind == "complete":
        return {(i, j) for i in range(k) for j in range(i + 1, k)}
    if kind == "cycle":
        return {(min(i, (i + 1) % k), max(i, (i + 1) % k)) for i in range(k)} if k > 2 else {(0, 1)}
    if kind == "star":
        return {(0, j) for j in range(1, k)}
    if kind == "path":
        return {(i, i + 1) for i in range(k - 1)}
    raise TopologyError(f"unknown topology kind {kind!r}")


def bfs_distances(num_nodes: int, edges: Iterable[tuple[int, int]]) -> np.ndarray:
    """All-pairs hop counts; unreachable pairs are -1."""
    nbrs: list[list[int]] = [[] for _ in range(num_nodes)]
    for i, j in edges:
        nbrs[i].append(j)
        nbrs[j].append(i)
    dist = np.full((num_nodes, num_nodes), -1, dtype=np.int64)
    for src in range(num_nodes):
        dist[src, src] = 0
        queue = deque([src])
        while queue:
            u = queue.popleft()
            for v in nbrs[u]:
                if dist[src, v] < 0:
                    dist[src, v] = dist[src, u] + 1
                    queue.append(v)
    return dist


def build_topology(
    kind: str,
    num_qpus: int,
    capacities: Sequence[int],
    custom_edges: Iterable[tuple[int, int]] | None = None,
) -> QpuNetwork:
    """Build a network of ``num_qpus`` QPUs.  For ``star`` the hub is QPU 0."""
    if num_qpus < 2:
        raise TopologyError("num_qpus must be at least 2")
    capacities = tuple(int(c) for c in capacities)
    if len(capacities) != num_qpus:
        raise TopologyError(f"got {len(capacities)} capacities for {num_qpus} QPUs")
    if any(c < 1 for c in capacities):
        raise TopologyError("capacities must be positive")
    if kind == "custom":
        if custom_edges is None:
            raise TopologyError("custom topology needs an edge list")
        edges = set()
        for i, j in custom_edges:
            i, j = int(i), int(j)
            if i == j or not (0 <= i < num_qpus and 0 <= j < num_qpus):
                raise TopologyError(f"invalid link ({i}, {j})")
            edges.add((min(i, j), max(i, j)))
    else:
        edges = _edges_for(kind, num_qpus)
    dist = bfs_distances(num_qpus, edges)
    if (dist < 0).any():
        raise TopologyError("topology is disconnected")
    dist.setflags(write=False)
    return QpuNetwork(num_qpus, capacities, frozenset(edges), dist, kind)


def parse_topology_spec(spec: str, capacity: int | Sequence[int]) -> QpuNetwork:
    """Parse CLI shorthand such as ``cycle:4`` with a uniform or explicit capacity."""
    kind, _, count = spec.partition(":")
    if kind not in KINDS[:-1] or not count.isdigit():
        raise TopologyError(f"bad topology spec {spec!r}; expected e.g. complete:4")
    k = int(count)
    caps = [capacity] * k if isinstance(capacity, int) else list(capacity)
    return build_topology(kind, k, caps)


def parse_topology_file(text: str) -> QpuNetwork:
    data = json.loads(text)
    return build_topology("custom", data["num_qpus"], data["capacities"], [tuple(e) for e in data["edges"]])


def topology_to_json(network: QpuNetwork) -> str:
    return json.dumps(
        {
            "num_qpus": network.num_qpus,
            "capacities": list(network.capacities),
            "edges": [list(e) for e in sorted(network.adjacency)],
        }
    )


def relabel(network: QpuNetwork, perm: Sequence[int]) -> QpuNetwork:
    """Rename QPU ``j`` to ``perm[j]``."""
    perm = list(perm)
    caps = [0] * network.num_qpus
    for j, c in enumerate(network.capacities):
        caps[perm[j]] = c
    edges = [(perm[i], perm[j]) for i, j in network.adjacency]
    return build_topology("custom", network.num_qpus, caps, edges)


def validate_capacity(assignment: Sequence[int], network: QpuNetwork) -> bool:
    """True iff no QPU holds more qubits than its capacity."""
    a = np.asarray(assignment, dtype=np.int64)
    if a.size and (a.min() < 0 or a.max() >= network.num_qpus):
        raise ValueError("assignment refers to a QPU outside the network")
    counts = np.bincount(a, minlength=network.num_qpus)
    return bool((counts <= np.asarray(network.capacities)).all())


def capacity_violations(assignments: np.ndarray, network: QpuNetwork) -> list[tuple[int, int, int, int]]:
    """``(t, qpu, load, capacity)`` for every overfull QPU in a dense schedule."""
    out = []
    caps = network.capacities
    for t, row in enumerate(np.asarray(assignments)):
        if row.size and (row.min() < 0 or row.max() >= network.num_qpus):
            raise ValueError(f"time step {t} refers to a QPU outside the network")
        counts = np.bincount(row, minlength=network.num_qpus)
        for j, load in enumerate(counts):
            if load > caps[j]:
                out.append((t, j, int(load), caps[j]))
    return out


def count_feasible(num_qubits: int, capacities: Sequence[int]) -> int:
    """Number of qubit-to-QPU maps that respect every capacity."""
    ways = [1] + [0] * num_qubits
    for c in capacities:
        ways = [sum(comb(m, r) * ways[m - r] for r in range(min(c, m) + 1)) for m in range(num_qubits + 1)]
    return ways[num_qubits]


def feasible_assignments(num_qubits: int, capacities: Sequence[int]) -> np.ndarray:
    """All capacity-respecting assignments in lexicographic order, shape (M, N)."""
    k = len(capacities)
    caps = list(capacities)
    rows: list[list[int]] = []
    row = [0] * num_qubits

    def fill(i: int):
        if i == num_qubits:
            rows.append(row.copy())
            return
        for j in range(k):
            if caps[j]:
                caps[j] -= 1
                row[i] = j
                fill(i + 1)
                caps[j] += 1

    fill(0)
    return np.asarray(rows, dtype=np.int64).reshape(len(rows), num_qubits)
