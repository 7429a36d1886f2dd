"""Schedule evaluation: capacity validity, state/gate teleportation cost and
their weighted total.

Costs are exact Python ints whenever both weights are integral; otherwise
they are floats.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from numbers import Real
from typing import Iterable, Sequence

import numpy as np

from .circuit import TemporalCircuit
from .network import QpuNetwork, capacity_violations

Assignment = Sequence[int]


@dataclass(frozen=True)
class CostWeights:
    w_state: float = 1
    w_gate: float = 1

    def __post_init__(self):
        if self.w_state < 0 or self.w_gate < 0:
            raise ValueError("cost weights must be non-negative")
        if self.w_state == 0 and self.w_gate == 0:
            raise ValueError("cost weights must not both be zero")

    @property
    def integral(self) -> bool:
        return float(self.w_state).is_integer() and float(self.w_gate).is_integer()

    def as_numbers(self) -> tuple[Real, Real]:
        if self.integral:
            return int(self.w_state), int(self.w_gate)
        return float(self.w_state), float(self.w_gate)

    def combine(self, state, gate):
        ws, wg = self.as_numbers()
        return ws * state + wg * gate


@dataclass(eq=False)
class Schedule:
    """Dense per-step assignments, shape ``(T, N)``."""

    assignments: np.ndarray
    total_cost: Real | None = field(default=None)

    def __post_init__(self):
        a = np.asarray(self.assignments, dtype=np.int64)
        if a.ndim != 2 or a.shape[0] < 1:
            raise ValueError("schedule must be a non-empty (T, N) array")
        a.setflags(write=False)
        self.assignments = a

    @property
    def depth(self) -> int:
        return self.assignments.shape[0]

    @property
    def num_qubits(self) -> int:
        return self.assignments.shape[1]

    def __eq__(self, other):
        if not isinstance(other, Schedule):
            return NotImplemented
        return np.array_equal(self.assignments, other.assignments)

    def to_json(self) -> str:
        rows = ",\n".join("    " + json.dumps(row) for row in self.assignments.tolist())
        return f'{{\n  "depth": {self.depth},\n  "assignments": [\n{rows}\n  ]\n}}\n'

    @classmethod
    def from_json(cls, text: str) -> "Schedule":
        data = json.loads(text)
        rows = data["assignments"]
        if data.get("depth", len(rows)) != len(rows):
            raise ValueError(f"depth mismatch: depth={data['depth']} but {len(rows)} rows")
        if len({len(r) for r in rows}) > 1:
            raise ValueError("assignment rows have different lengths")
        return cls(np.asarray(rows, dtype=np.int64))


def _checked(schedule: Schedule, network: QpuNetwork) -> np.ndarray:
    a = schedule.assignments
    if a.size and (a.min() < 0 or a.max() >= network.num_qpus):
        raise ValueError("schedule refers to a QPU outside the network")
    return a


def state_cost(schedule: Schedule, network: QpuNetwork) -> int:
    a = _checked(schedule, network)
    if a.shape[0] < 2:
        return 0
    return int(network.distance[a[:-1], a[1:]].sum())


def _layer_gate_cost(row: np.ndarray, layer, dist: np.ndarray) -> int:
    if not layer:
        return 0
    e = np.asarray(layer)
    if e.max() >= row.shape[0]:
        raise ValueError("edge refers to a qubit outside the assignment")
    return int(dist[row[e[:, 0]], row[e[:, 1]]].sum())


def gate_cost(schedule: Schedule, circuit: TemporalCircuit, network: QpuNetwork) -> int:
    a = _checked(schedule, network)
    if a.shape[0] != circuit.depth:
        raise ValueError(f"schedule depth {a.shape[0]} != circuit depth {circuit.depth}")
    return sum(_layer_gate_cost(a[t], layer, network.distance) for t, layer in enumerate(circuit.layers))


def evaluate_total(schedule: Schedule, circuit: TemporalCircuit, network: QpuNetwork, weights: CostWeights):
    total = weights.combine(state_cost(schedule, network), gate_cost(schedule, circuit, network))
    schedule.total_cost = total
    return total


def cost_breakdown(schedule: Schedule, circuit: TemporalCircuit, network: QpuNetwork, weights: CostWeights) -> dict:
    s = state_cost(schedule, network)
    g = gate_cost(schedule, circuit, network)
    total = weights.combine(s, g)
    schedule.total_cost = total
    return {
        "state": s,
        "gate": g,
        "total": total,
        "valid": not capacity_violations(schedule.assignments, network),
    }


def step_cost(
    prev: Assignment | None,
    current: Assignment,
    layer: Iterable[tuple[int, int]],
    network: QpuNetwork,
    weights: CostWeights,
):
    """Cost of appending ``current`` after ``prev``; ``prev=None`` at t = 0."""
    cur = np.asarray(current, dtype=np.int64)
    moved = 0
    if prev is not None:
        p = np.asarray(prev, dtype=np.int64)
        if p.shape != cur.shape:
            raise ValueError("prev and current assignments differ in length")
        moved = int(network.distance[p, cur].sum())
    return weights.combine(moved, _layer_gate_cost(cur, tuple(layer), network.distance))
