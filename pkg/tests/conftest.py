import pytest

from simstream.oracle import Dataset

# lines collected by test_acceptance.py, printed in the terminal summary
ACCEPTANCE_LINES: list[str] = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)


def intro_transactions():
    """100 transactions: items 1 and 2 in 20% each and together in 10%;
    items 3 and 4 only ever together, in 5%."""
    txs = []
    txs += [(1, 2)] * 10
    txs += [(1, 5)] * 10
    txs += [(2, 6)] * 10
    txs += [(3, 4)] * 5
    txs += [(7,)] * 65
    return txs


@pytest.fixture
def intro_dataset():
    return Dataset(intro_transactions())
