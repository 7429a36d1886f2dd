"""Quantum circuits as temporal sequences of two-qubit interaction graphs.

A circuit on ``N`` qubits with depth ``T`` is stored as ``T`` layers, each a
set of disjoint qubit pairs ``(i, j)`` with ``i < j``.  Single-qubit gates
never produce edges, so they are not represented at all.
"""

from __future__ import annotations

import json
from collections import Counter
from dataclasses import dataclass, field

import numpy as np

Edge = tuple[int, int]
Layer = tuple[Edge, ...]

SEED_MASK = (1 << 64) - 1


class CircuitFormatError(ValueError):
    """Raised when circuit text cannot be turned into a valid circuit."""

    def __init__(self, message: str, line: int | None = None, column: int | None = None):
        self.line = line
        self.column = column
        where = f" (line {line}, column {column})" if line is not None else ""
        super().__init__(message + where)


def _canonical_layer(edges) -> Layer:
    return tuple(sorted((min(i, j), max(i, j)) for i, j in edges))


@dataclass(frozen=True)
class TemporalCircuit:
    num_qubits: int
    layers: tuple[Layer, ...]
    depth: int = field(default=-1)

    def __post_init__(self):
        layers = tuple(_canonical_layer(layer) for layer in self.layers)
        object.__setattr__(self, "layers", layers)
        if self.depth == -1:
            object.__setattr__(self, "depth", len(layers))
        if self.num_qubits < 1:
            raise ValueError("num_qubits must be positive")
        if self.depth < 1:
            raise ValueError("depth must be positive")
        if len(layers) != self.depth:
            raise ValueError(f"expected {self.depth} layers, got {len(layers)}")
        for t, layer in enumerate(layers):
            _check_layer(layer, self.num_qubits, t)

    @property
    def num_gates(self) -> int:
        return sum(len(layer) for layer in self.layers)

    def layer_arrays(self, t: int) -> tuple[np.ndarray, np.ndarray]:
        """Endpoints of layer ``t`` as two int arrays ``(u, v)``."""
        layer = self.layers[t]
        if not layer:
            empty = np.zeros(0, dtype=np.intp)
            return empty, empty.copy()
        arr = np.asarray(layer, dtype=np.intp)
        return arr[:, 0].copy(), arr[:, 1].copy()


def _check_layer(layer: Layer, num_qubits: int, t: int) -> None:
    seen: set[int] = set()
    for i, j in layer:
        if i == j:
            raise ValueError(f"self-loop on qubit {i} in layer {t}")
        if i < 0 or j >= num_qubits:
            raise ValueError(f"qubit index out of range in layer {t}: ({i}, {j})")
        for q in (i, j):
            if q in seen:
                raise ValueError(f"qubit {q} used twice in layer {t}")
            seen.add(q)


@dataclass(frozen=True)
class AggregatedGraph:
    num_qubits: int
    weighted_edges: dict[Edge, int]

    @property
    def total_weight(self) -> int:
        return sum(self.weighted_edges.values())

    def weight_matrix(self) -> np.ndarray:
        w = np.zeros((self.num_qubits, self.num_qubits), dtype=np.int64)
        for (i, j), c in self.weighted_edges.items():
            w[i, j] += c
            w[j, i] += c
        return w


def aggregate(circuit: TemporalCircuit) -> AggregatedGraph:
    """Collapse the time axis: each pair is weighted by its number of occurrences."""
    counts = Counter(edge for layer in circuit.layers for edge in layer)
    return AggregatedGraph(circuit.num_qubits, dict(sorted(counts.items())))


def generate_random_circuit(num_qubits: int, depth: int, gate_probability: float, seed: int) -> TemporalCircuit:
    """Random circuit: per layer, a uniform perfect matching of the qubits whose
    pairs each become a CNOT with probability ``gate_probability``.

    With odd ``num_qubits`` one qubit per layer stays unpaired.
    """
    if num_qubits < 2:
        raise ValueError("num_qubits must be at least 2")
    if depth < 1:
        raise ValueError("depth must be positive")
    if not 0.0 <= gate_probability <= 1.0:
        raise ValueError("gate_probability must lie in [0, 1]")
    rng = np.random.default_rng(seed & SEED_MASK)
    half = num_qubits // 2
    perms = np.argsort(rng.random((depth, num_qubits)), axis=1)
    keep = rng.random((depth, half)) < gate_probability
    layers = []
    for t in range(depth):
        pairs = perms[t, : 2 * half].reshape(half, 2)[keep[t]]
        layers.append([(int(a), int(b)) for a, b in pairs])
    return TemporalCircuit(num_qubits, tuple(layers), depth)


def _line_col(text: str, pos: int) -> tuple[int, int]:
    line = text.count("\n", 0, pos) + 1
    col = pos - (text.rfind("\n", 0, pos) + 1) + 1
    return line, col


def _skip_ws(text: str, pos: int) -> int:
    while pos < len(text) and text[pos] in " \t\r\n":
        pos += 1
    return pos


def _array_item_positions(text: str, pos: int, decoder: json.JSONDecoder) -> list[int]:
    """Start offsets of each item of the JSON array beginning at ``pos``."""
    pos = _skip_ws(text, pos)
    if text[pos] != "[":
        return []
    pos = _skip_ws(text, pos + 1)
    starts: list[int] = []
    if text[pos] == "]":
        return starts
    while True:
        starts.append(pos)
        _, pos = decoder.raw_decode(text, pos)
        pos = _skip_ws(text, pos)
        if text[pos] == "]":
            return starts
        pos = _skip_ws(text, pos + 1)  # comma


def _gate_positions(text: str) -> list[list[int]]:
    # Best-effort location of every gate; only used to annotate errors.
    decoder = json.JSONDecoder()
    try:
        pos = _skip_ws(text, 0) + 1
        while True:
            pos = _skip_ws(text, pos)
            key, pos = decoder.raw_decode(text, pos)
            pos = _skip_ws(text, pos) + 1  # colon
            pos = _skip_ws(text, pos)
            if key == "layers":
                return [_array_item_positions(text, p, decoder) for p in _array_item_positions(text, pos, decoder)]
            _, pos = decoder.raw_decode(text, pos)
            pos = _skip_ws(text, pos) + 1
    except (ValueError, IndexError):
        return []


def parse_circuit(text: str) -> TemporalCircuit:
    """Parse the JSON circuit format ``{"num_qubits", "depth", "layers"}``.

    Gates may be written as ``[i, j]`` pairs or as objects
    ``{"gate": name, "qubits": [...]}``; entries touching a single qubit are
    accepted and dropped.
    """
    try:
        data = json.loads(text)
    except json.JSONDecodeError as exc:
        raise CircuitFormatError(f"malformed JSON: {exc.msg}", exc.lineno, exc.colno) from None
    if not isinstance(data, dict):
        raise CircuitFormatError("top level must be an object", 1, 1)
    def at_key(msg: str, key: str):
        pos = text.find(f'"{key}"')
        raise CircuitFormatError(msg, *_line_col(text, max(pos, 0)))

    for key in ("num_qubits", "depth", "layers"):
        if key not in data:
            raise CircuitFormatError(f"missing key {key!r}", 1, 1)
    n, depth, raw_layers = data["num_qubits"], data["depth"], data["layers"]
    if not isinstance(n, int) or isinstance(n, bool) or n < 1:
        at_key("num_qubits must be a positive integer", "num_qubits")
    if not isinstance(depth, int) or isinstance(depth, bool) or depth < 1:
        at_key("depth must be a positive integer", "depth")
    if not isinstance(raw_layers, list):
        at_key("layers must be an array", "layers")
    if len(raw_layers) != depth:
        at_key(f"depth mismatch: depth={depth} but {len(raw_layers)} layers given", "layers")

    positions = _gate_positions(text)

    def fail(msg: str, t: int, g: int):
        try:
            line, col = _line_col(text, positions[t][g])
        except IndexError:
            line = col = None
        raise CircuitFormatError(f"layer {t}, gate {g}: {msg}", line, col)

    layers = []
    for t, raw in enumerate(raw_layers):
        if not isinstance(raw, list):
            at_key(f"layer {t} must be an array", "layers")
        seen: set[int] = set()
        edges = []
        for g, gate in enumerate(raw):
            qubits = gate.get("qubits") if isinstance(gate, dict) else gate
            if not isinstance(qubits, list) or not all(isinstance(q, int) and not isinstance(q, bool) for q in qubits):
                fail("expected an array of qubit indices", t, g)
            if len(qubits) == 1:
                q = qubits[0]
                if not 0 <= q < n:
                    fail(f"qubit index {q} out of range for {n} qubits", t, g)
                if q in seen:
                    fail(f"duplicate qubit {q} within layer", t, g)
                seen.add(q)
                continue
            if len(qubits) != 2:
                fail("gates must act on one or two qubits", t, g)
            i, j = qubits
            if i == j:
                fail(f"self-loop on qubit {i}", t, g)
            for q in (i, j):
                if not 0 <= q < n:
                    fail(f"qubit index {q} out of range for {n} qubits", t, g)
                if q in seen:
                    fail(f"duplicate qubit {q} within layer", t, g)
                seen.add(q)
            edges.append((i, j))
        layers.append(edges)
    return TemporalCircuit(n, tuple(layers), depth)


def serialize_circuit(circuit: TemporalCircuit) -> str:
    rows = ",\n".join("    " + json.dumps([list(e) for e in layer]) for layer in circuit.layers)
    return (
        "{\n"
        f'  "num_qubits": {circuit.num_qubits},\n'
        f'  "depth": {circuit.depth},\n'
        '  "layers": [\n'
        f"{rows}\n"
        "  ]\n"
        "}\n"
    )


def load_circuit(path) -> TemporalCircuit:
    with open(path, encoding="utf-8") as f:
        return parse_circuit(f.read())
