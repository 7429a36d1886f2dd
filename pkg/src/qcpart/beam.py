"""Time-aware beam search over per-step qubit-to-QPU assignments.

At every time step each beam entry is expanded with four kinds of candidate
assignments (keep the previous one, repair a split gate by moving one of its
qubits, swap two qubits on different QPUs, draw a fresh random assignment).
Candidates are scored incrementally and the ``beam_width`` cheapest partial
schedules survive.

Randomness is drawn from counter-based Philox streams keyed by the master
seed and indexed by ``(time step, beam index)``, so a row's candidates do not
depend on the beam width or on how rows are split across threads.
"""

from __future__ import annotations

from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .circuit import SEED_MASK, TemporalCircuit
from .cost import CostWeights, Schedule, evaluate_total, step_cost
from .network import QpuNetwork, count_feasible, feasible_assignments

_PRESERVE, _MITIGATE, _SWAP, _RANDOM = 0, 1, 2, 3
_CANDIDATE_STREAM, _INIT_STREAM = 0, 1


class InfeasibleError(ValueError):
    """The network cannot hold all qubits at once."""


@dataclass(frozen=True)
class SearchParams:
    beam_width: int
    num_swaps: int
    num_random: int
    weights: CostWeights = field(default_factory=CostWeights)
    seed: int = 0

    def __post_init__(self):
        if self.beam_width < 1:
            raise ValueError("beam_width must be at least 1")
        if self.num_swaps < 0 or self.num_random < 0:
            raise ValueError("expansion counts must be non-negative")

    @classmethod
    def for_qubits(cls, num_qubits: int, weights: CostWeights | None = None, seed: int = 0,
                   beam_factor: int = 8, swaps_factor: int = 4, random_factor: int = 2) -> "SearchParams":
        """Parameters scaled with the qubit count (defaults 8N, 4N, 2N)."""
        return cls(beam_factor * num_qubits, swaps_factor * num_qubits, random_factor * num_qubits,
                   weights or CostWeights(), seed)


@dataclass(frozen=True)
class BeamEntry:
    partial_schedule: tuple[tuple[int, ...], ...]
    cumulative_cost: float

    @property
    def last(self) -> tuple[int, ...]:
        return self.partial_schedule[-1]


def step_rng(seed: int, t: int, index: int, stream: int = _CANDIDATE_STREAM) -> np.random.Generator:
    """Child generator for beam row ``index`` at time step ``t``."""
    return np.random.Generator(np.random.Philox(key=seed & SEED_MASK, counter=[0, stream, index, t]))


def _check_feasible(num_qubits: int, network: QpuNetwork) -> None:
    if num_qubits > network.total_capacity:
        raise InfeasibleError(f"{num_qubits} qubits exceed total capacity {network.total_capacity}")


class _Layout:
    """Per-(circuit, network) constants shared by every step."""

    def __init__(self, num_qubits: int, network: QpuNetwork):
        n, k = num_qubits, network.num_qpus
        self.n, self.k = n, k
        self.caps = np.asarray(network.capacities)
        slot_counts = np.minimum(self.caps, n)
        self.num_slots = int(slot_counts.sum())
        # sorted position where each QPU's block of slots starts (QPU 0 excluded)
        self.cuts = np.cumsum(slot_counts)[:-1]
        self.tiebreak = np.arange(self.num_slots) * (2.0 ** -24 / self.num_slots)
        self.D = np.asarray(network.distance, dtype=np.int64)
        self.Dflat = self.D.ravel()
        self.Dcols32 = [self.D[:, j].astype(np.float32) for j in range(k)]
        # linear hash with small integer weights, exact in float32
        zmax = max(2, (1 << 24) // max(1, n * (k - 1)))
        self.z = np.random.default_rng(0x5EED).integers(1, zmax, n).astype(np.float32)


def _draw_row(rng: np.random.Generator, lay: _Layout, params: SearchParams):
    """Random numbers consumed by one beam row at one step, from one draw.

    Swaps use a first qubit and a uniform variate selecting its partner;
    every random candidate uses one sort key per capacity slot.
    """
    s = params.num_swaps
    vals = rng.random(2 * s + params.num_random * lay.num_slots, dtype=np.float32)
    first = np.minimum((vals[:s] * lay.n).astype(np.int64), lay.n - 1)
    return first, vals[s:2 * s], vals[2 * s:].reshape(params.num_random, lay.num_slots)


def _random_assignments(keys: np.ndarray, lay: _Layout) -> np.ndarray:
    """Uniform random injections of qubits into capacity slots.

    The first ``n`` keys belong to qubits, the rest to free slots; a qubit
    lands on the QPU owning the slot at its key's rank.
    """
    if lay.k == 1 or not len(lay.cuts):
        return np.zeros(keys.shape[:-1] + (lay.n,), dtype=np.int8)
    out = _slot_ranks(keys, lay)
    # float32 draws can tie at a threshold and overfill a QPU; redo those
    # (rare) rows with a slot-index tie-break below the draw resolution
    flat = out.reshape(-1, lay.n)
    if lay.k == 2:
        bad = flat.sum(axis=1, dtype=np.int64) > lay.caps[1]
    else:
        bad = np.zeros(len(flat), dtype=bool)
        for j in range(lay.k):
            bad |= (flat == j).sum(axis=1) > lay.caps[j]
    if bad.any():
        fixed = keys.reshape(-1, keys.shape[-1])[bad].astype(np.float64) + lay.tiebreak
        flat[bad] = _slot_ranks(fixed, lay)
    return out


def _slot_ranks(keys: np.ndarray, lay: _Layout) -> np.ndarray:
    qubit_keys = keys[..., : lay.n]
    th = np.partition(keys, lay.cuts, axis=-1)[..., lay.cuts]
    if lay.k == 2:
        return (qubit_keys >= th).astype(np.int8)
    return (qubit_keys[..., None] >= th[..., None, :]).sum(axis=-1, dtype=np.int8)


def _swap_partners(rows: np.ndarray, counts: np.ndarray, first: np.ndarray, u: np.ndarray):
    """Partner for each drawn first qubit: uniform among qubits on other QPUs.

    ``rows`` (B, N), ``counts`` (B, k), ``first``/``u`` (B, S).  Returns the
    partner array and a mask that is False where no partner exists.
    """
    b_idx = np.arange(rows.shape[0])[:, None]
    n = rows.shape[1]
    order = np.argsort(rows, axis=1, kind="stable")
    starts = np.cumsum(counts, axis=1) - counts
    qpu = rows[b_idx, first]
    own = counts[b_idx, qpu]
    others = n - own
    r = np.minimum((u * others).astype(np.int64), np.maximum(others - 1, 0))
    pos = np.where(r < starts[b_idx, qpu], r, r + own)
    partner = order[b_idx, np.minimum(pos, n - 1)]
    return partner, others > 0


def _layer_partner(num_qubits: int, u: np.ndarray, v: np.ndarray) -> np.ndarray:
    partner = np.full(num_qubits, -1, dtype=np.int64)
    partner[u] = v
    partner[v] = u
    return partner


# --------------------------------------------------------------------------
# Entry-level operations.  The vectorized search below reproduces exactly
# what these do, row by row.


def initialize_beam(circuit: TemporalCircuit, network: QpuNetwork, params: SearchParams) -> list[BeamEntry]:
    """Up to ``beam_width`` distinct feasible assignments for t = 0, each
    charged the gate cost of the first layer, sorted by (cost, assignment)."""
    rows, costs = _initial_rows(circuit, network, params)
    return [BeamEntry((tuple(int(x) for x in r),), c) for r, c in zip(rows, costs.tolist())]


def _initial_rows(circuit: TemporalCircuit, network: QpuNetwork, params: SearchParams):
    n = circuit.num_qubits
    _check_feasible(n, network)
    lay = _Layout(n, network)
    beta = params.beam_width
    rng = step_rng(params.seed, 0, 0, _INIT_STREAM)
    total = count_feasible(n, network.capacities)
    if total <= 4 * beta:
        every = feasible_assignments(n, network.capacities)
        pick = np.sort(rng.choice(len(every), size=min(beta, len(every)), replace=False))
        rows = every[pick]
    else:
        seen: set[bytes] = set()
        picked = []
        while len(picked) < beta:
            batch = _random_assignments(rng.random((beta, lay.num_slots), dtype=np.float32), lay)
            for row in batch:
                key = row.tobytes()
                if key not in seen:
                    seen.add(key)
                    picked.append(row)
                    if len(picked) == beta:
                        break
        rows = np.asarray(picked)
    rows = rows.astype(np.int64)
    u, v = circuit.layer_arrays(0)
    gate = network.distance[rows[:, u], rows[:, v]].sum(axis=1)
    ws, wg = params.weights.as_numbers()
    costs = (wg * gate).astype(np.int64 if params.weights.integral else np.float64)
    order = np.lexsort(tuple(rows[:, ::-1].T) + (costs,))
    return rows[order], costs[order]


def candidates(entry: BeamEntry, layer: Sequence[tuple[int, int]], network: QpuNetwork,
               params: SearchParams, rng: np.random.Generator) -> list[tuple[int, ...]]:
    """Candidate assignments for the step after ``entry``, deduplicated, in
    generation order (preservation, mitigation, swaps, random)."""
    prev = np.asarray(entry.last, dtype=np.int64)
    lay = _Layout(prev.shape[0], network)
    counts = np.bincount(prev, minlength=network.num_qpus)
    first, u, keys = _draw_row(rng, lay, params)

    out = [prev.copy()]
    for i, j in sorted(layer):
        if prev[i] == prev[j]:
            continue
        for mover, target in ((i, prev[j]), (j, prev[i])):
            if counts[target] < lay.caps[target]:
                cand = prev.copy()
                cand[mover] = target
                out.append(cand)
    if params.num_swaps:
        partner, ok = _swap_partners(prev[None], counts[None], first[None], u[None])
        for a, b, good in zip(first, partner[0], ok[0]):
            if good:
                cand = prev.copy()
                cand[a], cand[b] = prev[b], prev[a]
                out.append(cand)
    out.extend(_random_assignments(keys, lay).astype(np.int64))

    seen = set()
    result = []
    for cand in out:
        key = tuple(int(x) for x in cand)
        if key not in seen:
            seen.add(key)
            result.append(key)
    return result


def prune(pool: Sequence[BeamEntry], beam_width: int) -> list[BeamEntry]:
    """The ``beam_width`` cheapest distinct entries, ties broken by the
    flattened schedule, returned in that order."""
    unique = {e.partial_schedule: e for e in pool}
    ranked = sorted(unique.values(), key=lambda e: (e.cumulative_cost, e.partial_schedule))
    return ranked[:beam_width]


# --------------------------------------------------------------------------
# Vectorized search.  Candidates are kept as move descriptors relative to
# their parent row and only materialized once selected.


@dataclass
class _Pool:
    parent: np.ndarray
    kind: np.ndarray
    q1: np.ndarray  # moved qubit, or row of ``randoms`` for random candidates
    v1: np.ndarray
    q2: np.ndarray
    v2: np.ndarray
    cost: np.ndarray
    hash: np.ndarray
    randoms: np.ndarray


def _block(parents, kind, cost, hsh, q1=None, v1=None, q2=None, v2=None):
    m = len(parents)
    fill = np.full(m, -1, dtype=np.int64)
    return [parents, np.full(m, kind, dtype=np.int8),
            fill if q1 is None else q1, fill if v1 is None else v1,
            fill if q2 is None else q2, fill if v2 is None else v2, cost, hsh]


def _expand_chunk(rows, costs, lo, hi, t, u_e, v_e, partner, lay: _Layout, params: SearchParams):
    """Candidates of beam rows ``lo:hi`` as pool columns plus their random rows."""
    A = rows[lo:hi]
    B, n = A.shape
    D, caps = lay.D, lay.caps
    ws, wg = params.weights.as_numbers()
    dtype = np.int64 if params.weights.integral else np.float64
    base = costs[lo:hi]
    parents = np.arange(lo, hi)
    counts = (A[:, :, None] == np.arange(lay.k)).sum(axis=1)
    z = lay.z
    h0 = A.astype(np.float32) @ z
    gate0 = D[A[:, u_e], A[:, v_e]].sum(axis=1) if len(u_e) else np.zeros(B, dtype=np.int64)
    blocks = [_block(parents, _PRESERVE, (base + wg * gate0).astype(dtype), h0)]

    if len(u_e):
        au, av = A[:, u_e], A[:, v_e]
        d = D[au, av]
        split = au != av
        moved_cost = base[:, None] + ws * d + wg * (gate0[:, None] - d)
        for mover, old, new in ((u_e, au, av), (v_e, av, au)):
            bb, ee = np.nonzero(split & (counts[np.arange(B)[:, None], new] < caps[new]))
            q, o, nw = mover[ee], old[bb, ee], new[bb, ee]
            blocks.append(_block(parents[bb], _MITIGATE, moved_cost[bb, ee].astype(dtype),
                                 h0[bb] + (nw - o).astype(np.float32) * z[q], q, nw))

    S, R = params.num_swaps, params.num_random
    firsts = np.empty((B, S), dtype=np.int64)
    us = np.empty((B, S), dtype=np.float32)
    keys = np.empty((B, R, lay.num_slots), dtype=np.float32)
    for r in range(B):
        firsts[r], us[r], keys[r] = _draw_row(step_rng(params.seed, t, lo + r), lay, params)

    if S:
        second, ok = _swap_partners(A, counts, firsts, us)
        b_idx = np.arange(B)[:, None]
        ai, aj = A[b_idx, firsts], A[b_idx, second]
        pi, pj = partner[firsts], partner[second]
        ai_p = A[b_idx, np.maximum(pi, 0)]
        aj_p = A[b_idx, np.maximum(pj, 0)]
        # gate change on the (at most two) layer edges touching the swapped qubits
        delta = (np.where(pi >= 0, D[aj, ai_p] - D[ai, ai_p], 0)
                 + np.where(pj >= 0, D[ai, aj_p] - D[aj, aj_p], 0))
        delta = np.where(pi == second, 0, delta)
        c = base[:, None] + ws * 2 * D[ai, aj] + wg * (gate0[:, None] + delta)
        hh = h0[:, None] + (aj - ai).astype(np.float32) * (z[firsts] - z[second])
        bb, ss = np.nonzero(ok)
        blocks.append(_block(parents[bb], _SWAP, c[bb, ss].astype(dtype), hh[bb, ss],
                             firsts[bb, ss], aj[bb, ss], second[bb, ss], ai[bb, ss]))

    if R:
        rr = _random_assignments(keys, lay)  # (B, R, N) int8
        moved = np.zeros((B, R), dtype=np.float32)
        for j in range(lay.k):
            moved += np.matmul((rr == j).astype(np.float32), lay.Dcols32[j][A][:, :, None])[:, :, 0]
        moved = moved.astype(np.int64)
        if len(u_e):
            rT = np.ascontiguousarray(rr.transpose(2, 0, 1))
            gate = lay.Dflat[rT[u_e].astype(np.int64) * lay.k + rT[v_e]].sum(axis=0)
        else:
            gate = 0
        c = base[:, None] + ws * moved + wg * gate
        randoms = rr.reshape(B * R, n)
        blocks.append(_block(np.repeat(parents, R), _RANDOM, c.ravel().astype(dtype),
                             randoms.astype(np.float32) @ z, np.arange(B * R)))
    else:
        randoms = np.zeros((0, n), dtype=np.int8)

    return [np.concatenate(col) for col in zip(*blocks)], randoms


def _materialize(rows: np.ndarray, pool: _Pool, idx: np.ndarray) -> np.ndarray:
    out = rows[pool.parent[idx]].copy()
    kind = pool.kind[idx]
    m = np.nonzero(kind == _RANDOM)[0]
    out[m] = pool.randoms[pool.q1[idx[m]]]
    m = np.nonzero((kind == _MITIGATE) | (kind == _SWAP))[0]
    out[m, pool.q1[idx[m]]] = pool.v1[idx[m]]
    m = np.nonzero(kind == _SWAP)[0]
    out[m, pool.q2[idx[m]]] = pool.v2[idx[m]]
    return out


def _dedup(rows: np.ndarray, pool: _Pool) -> np.ndarray:
    """Indices of pool entries that do not repeat another candidate of the
    same parent.  Hash matches are confirmed on the materialized rows."""
    key = (pool.parent.astype(np.int64) << 25) | pool.hash.astype(np.int64)
    order = np.argsort(key)
    dup = np.nonzero(key[order][1:] == key[order][:-1])[0] + 1
    if len(dup) == 0:
        return np.arange(len(key))
    a = _materialize(rows, pool, order[dup])
    b = _materialize(rows, pool, order[dup - 1])
    drop = np.zeros(len(key), dtype=bool)
    drop[order[dup[(a == b).all(axis=1)]]] = True
    return np.nonzero(~drop)[0]


def _select(rows, pool: _Pool, keep: np.ndarray, lexrank: np.ndarray, beta: int) -> np.ndarray:
    """The ``beta`` best of ``keep`` by (cost, parent rank, assignment)."""
    if len(keep) <= beta:
        return keep
    cost = pool.cost[keep]
    thr = np.partition(cost, beta - 1)[beta - 1]
    chosen = keep[cost < thr]
    tied = keep[cost == thr]
    need = beta - len(chosen)
    tied = tied[np.argsort(lexrank[pool.parent[tied]], kind="stable")]
    ranks = lexrank[pool.parent[tied]]
    boundary = ranks[need - 1]
    inside = tied[ranks < boundary]
    group = tied[ranks == boundary]
    rest = need - len(inside)
    if rest < len(group):
        g_rows = _materialize(rows, pool, group)
        group = group[np.lexsort(tuple(g_rows[:, ::-1].T))][:rest]
    return np.concatenate([chosen, inside, group])


def _backtrack(history, t: int, index: int) -> np.ndarray:
    out = []
    for s in range(t, -1, -1):
        rows, parents = history[s]
        out.append(rows[index])
        index = parents[index]
    return np.asarray(out[::-1], dtype=np.int64)


def _check_prefix_costs(history, t, circuit, network, weights, costs) -> None:
    sub = TemporalCircuit(circuit.num_qubits, circuit.layers[: t + 1])
    for b, c in enumerate(costs):
        recomputed = evaluate_total(Schedule(_backtrack(history, t, b)), sub, network, weights)
        if recomputed != c:
            raise AssertionError(f"cumulative cost drift at step {t}, entry {b}: {c} != {recomputed}")


def search(circuit: TemporalCircuit, network: QpuNetwork, params: SearchParams,
           threads: int = 1, verify: bool = False) -> Schedule:
    """Best schedule found by the beam search; its ``total_cost`` is set.

    ``threads`` splits candidate generation across worker threads without
    changing the result.  ``verify`` recomputes every surviving prefix cost
    from scratch at each step (slow; for debugging).
    """
    n = circuit.num_qubits
    _check_feasible(n, network)
    lay = _Layout(n, network)
    rows, costs = _initial_rows(circuit, network, params)
    lexrank = np.empty(len(rows), dtype=np.int64)
    lexrank[np.lexsort(tuple(rows[:, ::-1].T))] = np.arange(len(rows))
    history = [(rows, np.full(len(rows), -1))]
    threads = max(1, int(threads))
    executor = ThreadPoolExecutor(threads) if threads > 1 else None

    try:
        for t in range(1, circuit.depth):
            u_e, v_e = circuit.layer_arrays(t)
            partner = _layer_partner(n, u_e, v_e)
            bounds = np.linspace(0, len(rows), min(threads, len(rows)) + 1).astype(int)
            jobs = [(lo, hi) for lo, hi in zip(bounds[:-1], bounds[1:]) if hi > lo]

            def run(job):
                return _expand_chunk(rows, costs, job[0], job[1], t, u_e, v_e, partner, lay, params)

            results = list(executor.map(run, jobs)) if executor else [run(j) for j in jobs]
            # random-row ids are chunk-local; shift them into the joined table
            offset = 0
            for cols, randoms in results:
                cols[2] = np.where(cols[1] == _RANDOM, cols[2] + offset, cols[2])
                offset += len(randoms)
            pool = _Pool(*[np.concatenate(c) for c in zip(*[r[0] for r in results])],
                         randoms=np.concatenate([r[1] for r in results]))

            keep = _dedup(rows, pool)
            sel = _select(rows, pool, keep, lexrank, params.beam_width)
            new_rows = _materialize(rows, pool, sel)
            new_cost = pool.cost[sel]
            plr = lexrank[pool.parent[sel]]
            order = np.lexsort(tuple(new_rows[:, ::-1].T) + (plr, new_cost))
            new_rows, new_cost, sel, plr = new_rows[order], new_cost[order], sel[order], plr[order]
            lexrank = np.empty(len(sel), dtype=np.int64)
            lexrank[np.lexsort(tuple(new_rows[:, ::-1].T) + (plr,))] = np.arange(len(sel))
            history.append((new_rows, pool.parent[sel]))
            rows, costs = new_rows, new_cost
            if verify:
                _check_prefix_costs(history, t, circuit, network, params.weights, costs.tolist())
    finally:
        if executor:
            executor.shutdown()

    schedule = Schedule(_backtrack(history, circuit.depth - 1, 0))
    schedule.total_cost = costs[0].item()
    return schedule


def constant_schedule_cost(circuit: TemporalCircuit, network: QpuNetwork, assignment, weights: CostWeights):
    """Cost of holding one assignment fixed for the whole circuit."""
    return sum(step_cost(None, assignment, layer, network, weights) for layer in circuit.layers)
