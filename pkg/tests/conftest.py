import numpy as np
import pytest

from seedseg import GridField, GridSpec


@pytest.fixture
def small_spec():
    return GridSpec(1.0, 1.0, 8, 8)


@pytest.fixture
def rng():
    return np.random.default_rng(42)


def random_field(spec: GridSpec, rng, scale=1.0) -> GridField:
    return GridField(spec, rng.normal(0.0, scale, spec.num_nodes))


# one human-readable verdict line per acceptance criterion, printed in the
# terminal summary so they stay visible under output capture
ACCEPTANCE_LINES: list[str] = []


def pytest_terminal_summary(terminalreporter, exitstatus, config):
    if ACCEPTANCE_LINES:
        terminalreporter.write_sep("=", "acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)
