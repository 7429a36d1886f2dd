"""Static k-way partitioning of the aggregated interaction graph.

This plays the role of an off-the-shelf graph partitioner: it sees only the
collapsed, weighted graph and the QPU capacities, never the time axis or the
network distances.  Block ``j`` is placed on QPU ``j``.

Each restart grows a greedy seed region, refines it with
Fiduccia-Mattheyses passes (recursive bisection when k > 2), and finishes
with a k-way local search over single moves and pairwise swaps.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .circuit import SEED_MASK, AggregatedGraph
from .cost import Schedule
from .network import QpuNetwork

RESTARTS = 8
MAX_PASSES = 32


class PartitionError(ValueError):
    pass


@dataclass(frozen=True)
class StaticPartition:
    qpu_of: tuple[int, ...]
    cut_weight: int

    def as_array(self) -> np.ndarray:
        return np.asarray(self.qpu_of, dtype=np.int64)


def cut_weight(weights: np.ndarray, part: np.ndarray) -> int:
    """Total weight of edges whose endpoints lie in different blocks."""
    split = part[:, None] != part[None, :]
    return int(weights[split].sum()) // 2


def _grow_region(w: np.ndarray, size: int, rng: np.random.Generator) -> np.ndarray:
    """Greedy graph growing: start at a random vertex and repeatedly absorb the
    vertex most strongly connected to the region (random tie-break)."""
    n = w.shape[0]
    inside = np.zeros(n, dtype=bool)
    if size == 0:
        return inside
    noise = rng.random(n)
    inside[rng.integers(n)] = True
    conn = w[inside].sum(axis=0).astype(np.float64)
    for _ in range(size - 1):
        score = np.where(inside, -np.inf, conn + noise * 1e-3)
        v = int(np.argmax(score))
        inside[v] = True
        conn += w[v]
    return inside


def _fm_bisect(w: np.ndarray, left: np.ndarray, cap_left: int, cap_right: int, history=None) -> np.ndarray:
    """Fiduccia-Mattheyses refinement of a feasible two-way split.

    Within a pass each vertex moves at most once; a side may exceed its
    capacity by one vertex in between, but only feasible prefixes are kept.
    """
    n = w.shape[0]
    left = left.copy()
    cap = {True: cap_left, False: cap_right}
    for _ in range(MAX_PASSES):
        same = left[:, None] == left[None, :]
        gain = np.where(same, -w, w).sum(axis=1).astype(np.int64)  # external - internal
        locked = np.zeros(n, dtype=bool)
        state = left.copy()
        size_left = int(state.sum())
        total, best, best_len, moves = 0, 0, 0, []
        for _step in range(n):
            over_left = size_left > cap_left
            over_right = n - size_left > cap_right
            allowed = ~locked
            if over_left:
                allowed &= state
            elif over_right:
                allowed &= ~state
            else:
                # destination may be at most one over capacity
                allowed &= np.where(state, n - size_left < cap_right + 1, size_left < cap_left + 1)
            if not allowed.any():
                break
            v = int(np.argmax(np.where(allowed, gain, np.iinfo(np.int64).min)))
            total += int(gain[v])
            from_left = bool(state[v])
            state[v] = not from_left
            size_left += -1 if from_left else 1
            locked[v] = True
            moves.append(v)
            # neighbours on v's old side gain, on its new side lose
            sign = np.where(state == from_left, 2, -2)
            gain += sign * w[v]
            gain[v] = -gain[v]
            feasible = size_left <= cap[True] and n - size_left <= cap[False]
            if feasible and total > best:
                best, best_len = total, len(moves)
        if best <= 0:
            break
        for v in moves[:best_len]:
            left[v] = not left[v]
        if history is not None:
            history.append(cut_weight(w, left.astype(np.int64)))
    return left


def _split_sizes(n: int, cap_left: int, cap_right: int) -> int:
    target = round(n * cap_left / (cap_left + cap_right))
    return int(min(cap_left, max(n - cap_right, target)))


def _recursive_bisection(w, verts, qpus, caps, part, rng, history):
    if len(qpus) == 1:
        part[verts] = qpus[0]
        return
    half = len(qpus) // 2
    lq, rq = qpus[:half], qpus[half:]
    cap_l = int(sum(caps[j] for j in lq))
    cap_r = int(sum(caps[j] for j in rq))
    sub = w[np.ix_(verts, verts)]
    size_l = _split_sizes(len(verts), cap_l, cap_r)
    left = _grow_region(sub, size_l, rng)
    left = _fm_bisect(sub, left, cap_l, cap_r, history)
    _recursive_bisection(w, verts[left], lq, caps, part, rng, history)
    _recursive_bisection(w, verts[~left], rq, caps, part, rng, history)


def kway_local_search(w: np.ndarray, part: np.ndarray, caps, history=None) -> np.ndarray:
    """Apply the best improving single move or pairwise swap until none is left."""
    part = part.copy()
    n, k = len(part), len(caps)
    caps = np.asarray(caps)
    while True:
        onehot = np.zeros((n, k), dtype=np.int64)
        onehot[np.arange(n), part] = 1
        conn = w @ onehot
        own = conn[np.arange(n), part]
        rel = conn - own[:, None]  # gain of moving i to each block
        load = onehot.sum(axis=0)
        move_gain = np.where(load[None, :] < caps[None, :], rel, -1)
        swap_gain = rel[:, part] + rel[:, part].T - 2 * w
        swap_gain = np.where(part[:, None] != part[None, :], swap_gain, -1)
        i, b = np.unravel_index(np.argmax(move_gain), move_gain.shape)
        si, sj = np.unravel_index(np.argmax(swap_gain), swap_gain.shape)
        if move_gain[i, b] <= 0 and swap_gain[si, sj] <= 0:
            return part
        if move_gain[i, b] >= swap_gain[si, sj]:
            part[i] = b
        else:
            part[si], part[sj] = part[sj], part[si]
        if history is not None:
            history.append(cut_weight(w, part))


def static_partition(graph: AggregatedGraph, network: QpuNetwork, seed: int,
                     restarts: int = RESTARTS, history: list | None = None) -> StaticPartition:
    """Capacity-feasible partition minimizing cut weight (best of ``restarts``)."""
    n = graph.num_qubits
    if n > network.total_capacity:
        raise PartitionError(f"{n} qubits exceed total capacity {network.total_capacity}")
    w = graph.weight_matrix()
    caps = network.capacities
    best = None
    for r in range(restarts):
        rng = np.random.default_rng([seed & SEED_MASK, r])
        part = np.zeros(n, dtype=np.int64)
        trace = [] if history is not None else None
        _recursive_bisection(w, np.arange(n), list(range(network.num_qpus)), caps, part, rng, trace)
        part = kway_local_search(w, part, caps, trace)
        key = (cut_weight(w, part), tuple(part.tolist()))
        if best is None or key < best:
            best = key
        if history is not None:
            history.append(trace)
    return StaticPartition(best[1], best[0])


def lift_to_schedule(partition: StaticPartition, depth: int) -> Schedule:
    """Hold the static assignment fixed for ``depth`` time steps."""
    return Schedule(np.tile(partition.as_array(), (depth, 1)))


def import_partition(text: str, network: QpuNetwork, graph: AggregatedGraph) -> StaticPartition:
    """Read whitespace-separated block indices (one per qubit)."""
    tokens = text.split()
    if not tokens:
        raise PartitionError("empty partition file")
    try:
        part = np.asarray([int(tok) for tok in tokens], dtype=np.int64)
    except ValueError:
        raise PartitionError("partition file must contain integers only") from None
    if len(part) != graph.num_qubits:
        raise PartitionError(f"expected {graph.num_qubits} block indices, got {len(part)}")
    if part.min() < 0 or part.max() >= network.num_qpus:
        raise PartitionError(f"block index out of range [0, {network.num_qpus})")
    load = np.bincount(part, minlength=network.num_qpus)
    for j, (l, c) in enumerate(zip(load, network.capacities)):
        if l > c:
            raise PartitionError(f"block {j} holds {l} qubits, capacity is {c}")
    return StaticPartition(tuple(part.tolist()), cut_weight(graph.weight_matrix(), part))
