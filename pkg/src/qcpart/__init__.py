"""Time-aware partitioning of quantum circuits across networked QPUs."""

from .baseline import StaticPartition, import_partition, lift_to_schedule, static_partition
from .beam import BeamEntry, InfeasibleError, SearchParams, candidates, initialize_beam, prune, search
from .circuit import (
    AggregatedGraph,
    CircuitFormatError,
    TemporalCircuit,
    aggregate,
    generate_random_circuit,
    load_circuit,
    parse_circuit,
    serialize_circuit,
)
from .cost import CostWeights, Schedule, cost_breakdown, evaluate_total, gate_cost, state_cost, step_cost
from .network import QpuNetwork, TopologyError, build_topology, parse_topology_spec, validate_capacity
from .oracle import StateSpaceError, exact_optimum

__version__ = "0.1.0"
