import pytest

from bergman_lab import DomainSpec, MomentTable, WeightSpec


@pytest.fixture(scope="session")
def ball():
    return MomentTable(DomainSpec.ball())


@pytest.fixture(scope="session")
def half_disc():
    """Disc with ``rho = |z| - 1``: ``Phi(x) = 2 pi I(x + 1)``."""
    return MomentTable(DomainSpec.disc(0.5))


@pytest.fixture(scope="session")
def plain_disc():
    return MomentTable(DomainSpec.disc(), WeightSpec.unweighted())


ACCEPTANCE_KEY = pytest.StashKey[list]()


@pytest.fixture
def verdict(request):
    """Record one PASS/FAIL line for an acceptance criterion; the lines are echoed in the terminal summary."""
    lines = request.config.stash.setdefault(ACCEPTANCE_KEY, [])

    def record(number: int, title: str, ok: bool, detail: str) -> bool:
        line = f"criterion {number:2d} {'PASS' if ok else 'FAIL'}  {title}: {detail}"
        lines.append((number, line))
        print(line)
        return ok

    return record


def pytest_terminal_summary(terminalreporter, config):
    lines = config.stash.get(ACCEPTANCE_KEY, [])
    if lines:
        terminalreporter.section("acceptance criteria")
        for _, line in sorted(lines):
            terminalreporter.write_line(line)
