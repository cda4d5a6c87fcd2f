import numpy as np
import pytest

from ancestrymap import kernels
from ancestrymap.genotype_io import GenotypeMatrix
from ancestrymap.simulate import SimConfig, balding_nichols


def make_matrix(values, subject_prefix="s", snp_prefix="rs"):
    values = np.asarray(values)
    return GenotypeMatrix(
        [f"{subject_prefix}{i + 1}" for i in range(values.shape[0])],
        [f"{snp_prefix}{j + 1}" for j in range(values.shape[1])],
        values,
    )


@pytest.fixture
def two_pop_panel():
    g, labels = balding_nichols(SimConfig(2, [50, 50], 500, 0.1, seed=11))
    return g, labels


@pytest.fixture
def random_panel():
    rng = np.random.default_rng(5)
    return make_matrix(rng.integers(0, 3, size=(20, 50)))


@pytest.fixture(params=sorted(kernels.backends()))
def backend(request):
    return kernels.backends()[request.param]


# one line per acceptance criterion, echoed at the end of the run
ACCEPTANCE_LINES: list[str] = []


def record_criterion(number, name, passed, detail):
    line = f"[{'PASS' if passed else 'FAIL'}] criterion {number} {name}: {detail}"
    ACCEPTANCE_LINES.append(line)
    print(line)
    return passed


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)
