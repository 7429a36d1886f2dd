"""Command-line entry point.

Exit codes: 0 success, 1 usage error, 2 infeasible instance or capacity
violation, 3 I/O or parse error.
"""

from __future__ import annotations

import argparse
import json
import math
import os
import secrets
import sys

from . import __version__
from .baseline import PartitionError, import_partition, lift_to_schedule, static_partition
from .beam import InfeasibleError, SearchParams, search
from .bench import ExperimentGrid, cell_summaries, run_grid, summarize, write_csv
from .circuit import CircuitFormatError, aggregate, generate_random_circuit, load_circuit, serialize_circuit
from .cost import CostWeights, Schedule, cost_breakdown
from .network import TopologyError, capacity_violations, parse_topology_file, parse_topology_spec
from .oracle import DEFAULT_STATE_LIMIT, StateSpaceError, exact_optimum

EXIT_OK, EXIT_USAGE, EXIT_INFEASIBLE, EXIT_IO = 0, 1, 2, 3


class UsageError(Exception):
    pass


class InputError(Exception):
    pass


class Infeasible(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        print(f"{self.prog}: error: {message}", file=sys.stderr)
        raise SystemExit(EXIT_USAGE)


def _shared(p: argparse.ArgumentParser, instance: bool = True, topology: bool = True) -> None:
    if instance:
        g = p.add_mutually_exclusive_group()
        g.add_argument("--circuit", help="circuit JSON file")
        g.add_argument("--random", metavar="N,T,p[,seed]", help="generate a random circuit")
    if topology:
        p.add_argument("--topology", default="complete:2",
                       help="kind:k shorthand (complete, cycle, star, path) or a topology JSON file")
        p.add_argument("--capacity", help="uniform capacity or comma-separated list (default ceil(N/k))")
    p.add_argument("--w-state", type=float, default=1.0)
    p.add_argument("--w-gate", type=float, default=1.0)
    p.add_argument("--seed", type=int)
    p.add_argument("--threads", type=int, default=os.cpu_count() or 1)
    p.add_argument("--json", action="store_true", help="machine-readable output")


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="qcpart", description="Time-aware partitioning of quantum circuits over networked QPUs.")
    parser.add_argument("--version", action="version", version=__version__)
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    p = sub.add_parser("gen", help="generate a random circuit")
    _shared(p, topology=False)
    p.add_argument("--out")

    p = sub.add_parser("partition", help="beam search schedule")
    _shared(p)
    p.add_argument("--beam-width", type=int)
    p.add_argument("--swaps", type=int)
    p.add_argument("--randoms", type=int)
    p.add_argument("--out")
    p.add_argument("--emit-cost", action="store_true")

    p = sub.add_parser("baseline", help="static partition lifted to a schedule")
    _shared(p)
    p.add_argument("--restarts", type=int, default=8)
    p.add_argument("--partition-file", help="import an external partition instead of computing one")
    p.add_argument("--out")
    p.add_argument("--emit-cost", action="store_true")

    p = sub.add_parser("cost", help="evaluate a schedule")
    _shared(p)
    p.add_argument("--schedule", required=True)

    p = sub.add_parser("validate", help="check a schedule against QPU capacities")
    _shared(p, instance=False)
    p.add_argument("--schedule", required=True)

    p = sub.add_parser("oracle", help="exact optimum by dynamic programming (small instances)")
    _shared(p)
    p.add_argument("--state-limit", type=int, default=DEFAULT_STATE_LIMIT)
    p.add_argument("--out")

    p = sub.add_parser("bench", help="run an experiment grid")
    _shared(p, instance=False, topology=False)
    p.add_argument("--grid", required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--no-timing", action="store_true", help="omit runtimes so the CSV is byte-reproducible")
    return parser


def _read(path: str) -> str:
    try:
        with open(path) as fh:
            return fh.read()
    except OSError as exc:
        raise InputError(f"cannot read {path}: {exc.strerror}") from None


def _write(path: str | None, text: str) -> None:
    if path is None:
        sys.stdout.write(text)
        return
    try:
        with open(path, "w") as fh:
            fh.write(text)
    except OSError as exc:
        raise InputError(f"cannot write {path}: {exc.strerror}") from None


def _seed(args, label: str = "seed") -> int:
    if args.seed is not None:
        return args.seed
    seed = secrets.randbits(63)
    print(f"{label}={seed}", file=sys.stderr)
    return seed


def _circuit(args):
    if args.circuit:
        try:
            return load_circuit(args.circuit)
        except OSError as exc:
            raise InputError(f"cannot read {args.circuit}: {exc.strerror}") from None
        except CircuitFormatError as exc:
            raise InputError(f"{args.circuit}: {exc}") from None
    if args.random:
        parts = args.random.split(",")
        if len(parts) not in (3, 4):
            raise UsageError("--random expects N,T,p or N,T,p,seed")
        try:
            n, t, prob = int(parts[0]), int(parts[1]), float(parts[2])
            seed = int(parts[3]) if len(parts) == 4 else None
        except ValueError:
            raise UsageError(f"bad --random value {args.random!r}") from None
        if seed is None:
            seed = secrets.randbits(63)
            print(f"circuit_seed={seed}", file=sys.stderr)
        try:
            return generate_random_circuit(n, t, prob, seed)
        except ValueError as exc:
            raise UsageError(str(exc)) from None
    raise UsageError("one of --circuit or --random is required")


def _network(args, num_qubits: int | None):
    spec = args.topology
    try:
        if ":" in spec and not os.path.exists(spec):
            k = spec.partition(":")[2]
            if args.capacity is not None:
                caps = [int(c) for c in args.capacity.split(",")]
                cap = caps[0] if len(caps) == 1 else caps
            elif num_qubits is not None and k.isdigit() and int(k) > 0:
                cap = math.ceil(num_qubits / int(k))
            else:
                raise UsageError("--capacity is required")
            return parse_topology_spec(spec, cap)
    except (TopologyError, ValueError) as exc:
        raise UsageError(f"topology: {exc}") from None
    text = _read(spec)
    try:
        return parse_topology_file(text)
    except (ValueError, KeyError, TypeError) as exc:
        raise InputError(f"topology file {spec}: {exc!r}") from None


def _weights(args) -> CostWeights:
    try:
        return CostWeights(args.w_state, args.w_gate)
    except ValueError as exc:
        raise UsageError(str(exc)) from None


def _load_schedule(path: str) -> Schedule:
    try:
        return Schedule.from_json(_read(path))
    except (ValueError, KeyError, TypeError) as exc:
        raise InputError(f"{path}: bad schedule ({exc})") from None


def _cost_line(b: dict) -> str:
    return f"state={b['state']} gate={b['gate']} total={b['total']}"


def _report(args, result: dict, text: str) -> None:
    if args.json:
        print(json.dumps(result))
    else:
        print(text)


def cmd_gen(args) -> int:
    circuit = _circuit(args)
    _write(args.out, serialize_circuit(circuit))
    if args.out:
        _report(args, {"num_qubits": circuit.num_qubits, "depth": circuit.depth, "gates": circuit.num_gates,
                       "out": args.out},
                f"wrote {args.out}: N={circuit.num_qubits} T={circuit.depth} gates={circuit.num_gates}")
    return EXIT_OK


def _emit_schedule(args, schedule: Schedule, circuit, network, weights, extra: dict) -> None:
    b = cost_breakdown(schedule, circuit, network, weights)
    if args.out:
        _write(args.out, schedule.to_json())
    result = dict(extra, **b)
    if not args.out:
        result["assignments"] = schedule.assignments.tolist()
    if args.json:
        print(json.dumps(result))
        return
    if not args.out:
        sys.stdout.write(schedule.to_json())
    if args.emit_cost or args.out:
        print(_cost_line(b))


def cmd_partition(args) -> int:
    circuit = _circuit(args)
    network = _network(args, circuit.num_qubits)
    weights = _weights(args)
    n = circuit.num_qubits
    seed = _seed(args)
    beta = args.beam_width if args.beam_width is not None else 8 * n
    swaps = args.swaps if args.swaps is not None else 4 * n
    randoms = args.randoms if args.randoms is not None else 2 * n
    try:
        params = SearchParams(beta, swaps, randoms, weights, seed)
    except ValueError as exc:
        raise UsageError(str(exc)) from None
    try:
        schedule = search(circuit, network, params, threads=args.threads)
    except InfeasibleError as exc:
        raise Infeasible(str(exc)) from None
    _emit_schedule(args, schedule, circuit, network, weights, {"seed": seed})
    return EXIT_OK


def cmd_baseline(args) -> int:
    circuit = _circuit(args)
    network = _network(args, circuit.num_qubits)
    weights = _weights(args)
    graph = aggregate(circuit)
    extra = {}
    try:
        if args.partition_file:
            part = import_partition(_read(args.partition_file), network, graph)
        else:
            extra["seed"] = _seed(args)
            part = static_partition(graph, network, extra["seed"], restarts=args.restarts)
    except PartitionError as exc:
        if "capacity" in str(exc):
            raise Infeasible(str(exc)) from None
        raise InputError(str(exc)) from None
    extra["cut_weight"] = part.cut_weight
    extra["partition"] = list(part.qpu_of)
    _emit_schedule(args, lift_to_schedule(part, circuit.depth), circuit, network, weights, extra)
    return EXIT_OK


def cmd_cost(args) -> int:
    circuit = _circuit(args)
    network = _network(args, circuit.num_qubits)
    schedule = _load_schedule(args.schedule)
    if schedule.num_qubits != circuit.num_qubits:
        raise InputError(f"schedule has {schedule.num_qubits} qubits, circuit has {circuit.num_qubits}")
    try:
        b = cost_breakdown(schedule, circuit, network, _weights(args))
    except ValueError as exc:
        raise InputError(str(exc)) from None
    _report(args, b, _cost_line(b) + ("" if b["valid"] else " (capacity violated)"))
    return EXIT_OK


def cmd_validate(args) -> int:
    schedule = _load_schedule(args.schedule)
    network = _network(args, schedule.num_qubits)
    try:
        bad = capacity_violations(schedule.assignments, network)
    except ValueError as exc:
        raise InputError(str(exc)) from None
    result = {"valid": not bad,
              "violations": [{"t": t, "qpu": j, "load": load, "capacity": cap} for t, j, load, cap in bad]}
    lines = [f"time step {t}: QPU {j} holds {load} qubits (capacity {cap})" for t, j, load, cap in bad]
    _report(args, result, "\n".join(lines) if bad else "valid")
    return EXIT_INFEASIBLE if bad else EXIT_OK


def cmd_oracle(args) -> int:
    circuit = _circuit(args)
    network = _network(args, circuit.num_qubits)
    weights = _weights(args)
    try:
        schedule, value = exact_optimum(circuit, network, weights, state_limit=args.state_limit)
    except StateSpaceError as exc:
        raise Infeasible(str(exc)) from None
    b = cost_breakdown(schedule, circuit, network, weights)
    if args.out:
        _write(args.out, schedule.to_json())
    result = dict(b, optimum=value)
    if not args.out:
        result["assignments"] = schedule.assignments.tolist()
    _report(args, result, f"OPT={value} " + _cost_line(b))
    return EXIT_OK


def cmd_bench(args) -> int:
    try:
        grid = ExperimentGrid.from_json(_read(args.grid))
    except (ValueError, TypeError) as exc:
        raise InputError(f"{args.grid}: bad grid ({exc})") from None
    if args.seed is not None:
        grid.seed = args.seed
    rows = run_grid(grid, workers=max(1, args.threads), timing=not args.no_timing)
    try:
        with open(args.out, "w", newline="") as fh:
            write_csv(rows, fh, grid)
    except OSError as exc:
        raise InputError(f"cannot write {args.out}: {exc.strerror}") from None
    if args.json:
        print(json.dumps(cell_summaries(rows)))
    else:
        print(summarize(rows))
    return EXIT_OK


COMMANDS = {
    "gen": cmd_gen,
    "partition": cmd_partition,
    "baseline": cmd_baseline,
    "cost": cmd_cost,
    "validate": cmd_validate,
    "oracle": cmd_oracle,
    "bench": cmd_bench,
}


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return COMMANDS[args.command](args)
    except UsageError as exc:
        print(f"qcpart {args.command}: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except Infeasible as exc:
        print(f"qcpart {args.command}: infeasible: {exc}", file=sys.stderr)
        return EXIT_INFEASIBLE
    except InputError as exc:
        print(f"qcpart {args.command}: {exc}", file=sys.stderr)
        return EXIT_IO


if __name__ == "__main__":
    sys.exit(main())
