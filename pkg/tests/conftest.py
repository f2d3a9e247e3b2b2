import numpy as np
import pytest

from treecut.rng import RngStream

# lines recorded by the acceptance suite, printed in the terminal summary
ACCEPTANCE_LINES: list[str] = []


@pytest.fixture
def gen():
    return RngStream(20240611).generator()


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)


def chi2_uniform_p(counts) -> float:
    from scipy import stats

    counts = np.asarray(counts, dtype=float)
    return float(stats.chisquare(counts).pvalue)
