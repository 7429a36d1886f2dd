"""Exact minimum-cost schedules for small instances.

The objective splits into a per-step gate term and a between-step movement
term, so the optimum is a shortest path through ``T`` layers whose nodes are
all feasible assignments.  Every transition is evaluated; there is no pruning.
"""

from __future__ import annotations

import numpy as np

from .circuit import TemporalCircuit
from .cost import CostWeights, Schedule
from .network import QpuNetwork, count_feasible, feasible_assignments

DEFAULT_STATE_LIMIT = 20_000


class StateSpaceError(ValueError):
    """Too many feasible assignments for exact solving."""


def exact_optimum(circuit: TemporalCircuit, network: QpuNetwork, weights: CostWeights,
                  state_limit: int = DEFAULT_STATE_LIMIT) -> tuple[Schedule, float]:
    """Optimal schedule and its cost.

    Among optimal schedules the lexicographically smallest flattened one is
    returned.
    """
    n = circuit.num_qubits
    if n > network.total_capacity:
        raise StateSpaceError(f"{n} qubits exceed total capacity {network.total_capacity}")
    m = count_feasible(n, network.capacities)
    if m > state_limit:
        raise StateSpaceError(f"{m} feasible assignments exceed the state limit {state_limit}")
    states = feasible_assignments(n, network.capacities)
    D = network.distance
    ws, wg = weights.as_numbers()
    dtype = np.int64 if weights.integral else np.float64

    move = np.zeros((m, m), dtype=np.int64)
    for q in range(n):
        move += D[states[:, q][:, None], states[:, q][None, :]]
    move = (ws * move).astype(dtype)

    gates = []
    for t in range(circuit.depth):
        u, v = circuit.layer_arrays(t)
        g = D[states[:, u], states[:, v]].sum(axis=1) if len(u) else np.zeros(m, dtype=np.int64)
        gates.append((wg * g).astype(dtype))

    # cost-to-go from each state at each step
    togo = [None] * circuit.depth
    togo[-1] = gates[-1]
    for t in range(circuit.depth - 2, -1, -1):
        togo[t] = gates[t] + (move + togo[t + 1][None, :]).min(axis=1)

    path = [int(np.argmin(togo[0]))]
    for t in range(1, circuit.depth):
        path.append(int(np.argmin(move[path[-1]] + togo[t])))
    value = togo[0][path[0]].item()
    schedule = Schedule(states[path])
    schedule.total_cost = value
    return schedule, value
