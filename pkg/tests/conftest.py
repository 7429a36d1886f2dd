import os
from importlib import resources

import numpy as np
import pytest
from hypothesis import HealthCheck, settings

from qcpart.beam import BeamEntry, candidates, initialize_beam, prune, step_rng
from qcpart.circuit import parse_circuit
from qcpart.cost import Schedule, step_cost

settings.register_profile("default", deadline=None, suppress_health_check=[HealthCheck.too_slow])
settings.load_profile(os.environ.get("HYPOTHESIS_PROFILE", "default"))


def data_text(name: str) -> str:
    return resources.files("qcpart").joinpath("data", name).read_text()


@pytest.fixture
def example_circuit():
    return parse_circuit(data_text("example_n8_t8.json"))


@pytest.fixture
def example_schedule():
    return Schedule.from_json(data_text("example_n8_t8_schedule.json"))


def reference_search(circuit, network, params):
    """Entry-by-entry beam search built only from the public step operations.

    Slow, but it follows the algorithm literally and is used to pin down the
    vectorized implementation.
    """
    beam = initialize_beam(circuit, network, params)
    for t in range(1, circuit.depth):
        layer = circuit.layers[t]
        pool = []
        for b, entry in enumerate(beam):
            rng = step_rng(params.seed, t, b)
            for cand in candidates(entry, layer, network, params, rng):
                c = entry.cumulative_cost + step_cost(entry.last, cand, layer, network, params.weights)
                pool.append(BeamEntry(entry.partial_schedule + (cand,), c))
        beam = prune(pool, params.beam_width)
    best = beam[0]
    return Schedule(np.asarray(best.partial_schedule)), best.cumulative_cost


ACCEPTANCE_LINES: list[str] = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)
