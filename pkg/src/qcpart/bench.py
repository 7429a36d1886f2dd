"""Experiment grid: random circuits x topologies, static baseline vs beam search.

Seeds for circuits, baseline restarts and beam runs are derived from the grid
master seed and the cell coordinates only, so results do not depend on the
order in which workers finish.  All topologies of a cell share circuits and
seeds.
"""

from __future__ import annotations

import csv
import io
import json
import math
import statistics
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field

import numpy as np

from .baseline import lift_to_schedule, static_partition
from .beam import SearchParams, search
from .circuit import aggregate, generate_random_circuit
from .cost import CostWeights, gate_cost, state_cost
from .network import parse_topology_spec

SCHEMA = 1
COLUMNS = ["N", "T", "topology", "sample", "run", "method", "state_cost", "gate_cost", "total_cost",
           "runtime_ms", "seed", "assignment", "error"]


@dataclass
class ExperimentGrid:
    qubit_counts: list[int] = field(default_factory=lambda: [8])
    depths: list[int] = field(default_factory=lambda: [8])
    topologies: list[str] = field(default_factory=lambda: ["complete:2"])
    samples: int = 10
    runs: int = 3
    cells: list[tuple[int, int]] | None = None  # explicit (N, T) pairs instead of the product
    gate_probability: float = 0.5
    beam_factor: int = 8
    swaps_factor: int = 4
    random_factor: int = 2
    w_state: float = 1
    w_gate: float = 1
    capacity: int | None = None  # per QPU; default ceil(N / k)
    restarts: int = 8
    seed: int = 0

    def __post_init__(self):
        if self.samples < 1 or self.runs < 1:
            raise ValueError("samples and runs must be at least 1")
        if self.cells is not None:
            self.cells = [tuple(c) for c in self.cells]

    @classmethod
    def from_json(cls, text: str) -> "ExperimentGrid":
        return cls(**json.loads(text))

    def cell_list(self) -> list[tuple[int, int]]:
        if self.cells is not None:
            return list(self.cells)
        return [(n, t) for n in self.qubit_counts for t in self.depths]


def derive_seed(*parts: int) -> int:
    return int(np.random.SeedSequence([p & ((1 << 64) - 1) for p in parts]).generate_state(1, np.uint64)[0])


def _network_for(spec: str, n: int, capacity: int | None):
    k = int(spec.partition(":")[2])
    return parse_topology_spec(spec, capacity if capacity is not None else math.ceil(n / k))


def _run_sample(grid: ExperimentGrid, n: int, t: int, sample: int, timing: bool) -> list[dict]:
    circuit_seed = derive_seed(grid.seed, n, t, sample, 0)
    weights = CostWeights(grid.w_state, grid.w_gate)
    rows = []
    base = {"N": n, "T": t, "sample": sample}
    try:
        circuit = generate_random_circuit(n, t, grid.gate_probability, circuit_seed)
        graph = aggregate(circuit)
    except Exception as exc:  # recorded, grid continues
        return [dict(base, topology=top, run="", method="error", error=repr(exc)) for top in grid.topologies]
    for top in grid.topologies:
        try:
            network = _network_for(top, n, grid.capacity)
            seed = derive_seed(grid.seed, n, t, sample, 1)
            start = time.perf_counter()
            part = static_partition(graph, network, seed, restarts=grid.restarts)
            elapsed = (time.perf_counter() - start) * 1e3
            sched = lift_to_schedule(part, t)
            s, g = state_cost(sched, network), gate_cost(sched, circuit, network)
            rows.append(dict(base, topology=top, run=0, method="baseline", state_cost=s, gate_cost=g,
                             total_cost=weights.combine(s, g), runtime_ms=f"{elapsed:.1f}" if timing else "",
                             seed=seed, assignment=" ".join(map(str, part.qpu_of)), error=""))
            for run in range(grid.runs):
                seed = derive_seed(grid.seed, n, t, sample, 2, run)
                params = SearchParams.for_qubits(n, weights, seed, grid.beam_factor, grid.swaps_factor,
                                                 grid.random_factor)
                start = time.perf_counter()
                sched = search(circuit, network, params)
                elapsed = (time.perf_counter() - start) * 1e3
                s, g = state_cost(sched, network), gate_cost(sched, circuit, network)
                rows.append(dict(base, topology=top, run=run, method="beam", state_cost=s, gate_cost=g,
                                 total_cost=weights.combine(s, g), runtime_ms=f"{elapsed:.1f}" if timing else "",
                                 seed=seed, assignment="", error=""))
        except Exception as exc:
            rows.append(dict(base, topology=top, run="", method="error", error=repr(exc)))
    return rows


def _task(args):
    return _run_sample(*args)


def run_grid(grid: ExperimentGrid, workers: int = 1, timing: bool = True) -> list[dict]:
    """Run every (cell, sample); rows come back in grid order."""
    tasks = [(grid, n, t, s, timing) for n, t in grid.cell_list() for s in range(grid.samples)]
    if workers > 1:
        with ProcessPoolExecutor(workers) as pool:
            chunks = list(pool.map(_task, tasks))
    else:
        chunks = [_task(task) for task in tasks]
    rows = [row for chunk in chunks for row in chunk]
    order = {top: i for i, top in enumerate(grid.topologies)}
    rows.sort(key=lambda r: (r["N"], r["T"], order[r["topology"]], r["sample"], r["method"] != "baseline",
                             r["run"] if r["run"] != "" else -1))
    return rows


def write_csv(rows: list[dict], out, grid: ExperimentGrid | None = None) -> None:
    out.write(f"# schema={SCHEMA}\n")
    out.write("# improvement = mean over samples of 100*(baseline - mean beam over runs)/baseline\n")
    if grid is not None:
        out.write(f"# grid={json.dumps(asdict(grid), sort_keys=True)}\n")
    writer = csv.DictWriter(out, fieldnames=COLUMNS, extrasaction="ignore", lineterminator="\n")
    writer.writeheader()
    for row in rows:
        writer.writerow({c: row.get(c, "") for c in COLUMNS})


def read_csv(text: str) -> list[dict]:
    lines = [line for line in text.splitlines() if not line.startswith("#")]
    rows = []
    for row in csv.DictReader(io.StringIO("\n".join(lines))):
        for key in ("N", "T", "sample"):
            row[key] = int(row[key])
        if row["method"] != "error":
            row["run"] = int(row["run"])
            for key in ("state_cost", "gate_cost", "total_cost"):
                row[key] = float(row[key])
        rows.append(row)
    return rows


def _mean_se(values: list[float]) -> tuple[float, float]:
    mean = statistics.fmean(values)
    se = statistics.stdev(values) / math.sqrt(len(values)) if len(values) > 1 else 0.0
    return mean, se


def cell_summaries(rows: list[dict]) -> list[dict]:
    """Per (N, T, topology): mean and standard error of each method over
    samples (beam first averaged over its runs), and mean improvement."""
    cells: dict[tuple, dict[int, dict]] = {}
    for row in rows:
        if row["method"] == "error":
            continue
        per_sample = cells.setdefault((row["N"], row["T"], row["topology"]), {})
        entry = per_sample.setdefault(row["sample"], {"baseline": [], "beam": []})
        entry[row["method"]].append(float(row["total_cost"]))
    out = []
    for (n, t, top), samples in cells.items():
        paired = [(statistics.fmean(s["baseline"]), statistics.fmean(s["beam"]))
                  for s in samples.values() if s["baseline"] and s["beam"]]
        if not paired:
            continue
        base_mean, base_se = _mean_se([b for b, _ in paired])
        beam_mean, beam_se = _mean_se([r for _, r in paired])
        imp = [100.0 * (b - r) / b if b else 0.0 for b, r in paired]
        imp_mean, imp_se = _mean_se(imp)
        out.append({"N": n, "T": t, "topology": top, "samples": len(paired),
                    "baseline_mean": base_mean, "baseline_se": base_se,
                    "beam_mean": beam_mean, "beam_se": beam_se,
                    "improvement": imp_mean, "improvement_se": imp_se})
    return out


def summarize(rows: list[dict]) -> str:
    lines = [f"{'N':>4} {'T':>5} {'topology':<12} {'baseline':>18} {'beam':>18} {'improvement':>14}"]
    for c in cell_summaries(rows):
        lines.append(
            f"{c['N']:>4} {c['T']:>5} {c['topology']:<12} "
            f"{c['baseline_mean']:>9.2f} ± {c['baseline_se']:<6.2f} "
            f"{c['beam_mean']:>9.2f} ± {c['beam_se']:<6.2f} "
            f"{c['improvement']:>7.2f}% ± {c['improvement_se']:.2f}"
        )
    errors = [r for r in rows if r["method"] == "error"]
    for r in errors:
        lines.append(f"error N={r['N']} T={r['T']} {r['topology']} sample={r['sample']}: {r['error']}")
    return "\n".join(lines)
