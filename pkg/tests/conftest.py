import pytest

from pcnsim import Network


@pytest.fixture
def fig2_channel():
    """Channel A-B with both parties depositing 100."""
    net = Network(2, [(0, 1)])
    net.set_channel_balance(0, 1, 100, 100)
    return net


def make_network(n, funded_edges):
    """Build a network from ``{(u, v): (balance_uv, balance_vu)}``."""
    net = Network(n, funded_edges.keys())
    for (u, v), (buv, bvu) in funded_edges.items():
        net.set_channel_balance(u, v, buv, bvu)
    return net


ACCEPTANCE_LINES: list[str] = []


def record(criterion: str, passed: bool, detail: str) -> bool:
    ACCEPTANCE_LINES.append(f"{'PASS' if passed else 'FAIL'}  {criterion}: {detail}")
    return passed


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)
