import pytest

from qbfzero.qbf import Qbf, Quantifier, parse_qdimacs, random_qbf

FIG1_TEXT = """c exists x1 forall x2 exists x3
p cnf 3 3
e 1 0
a 2 0
e 3 0
1 2 -3 0
2 3 0
1 3 0
"""
UNIT1_TEXT = "p cnf 1 1\ne 1 0\n1 0\n"
CONTRA_TEXT = "p cnf 1 2\ne 1 0\n1 0\n-1 0\n"


@pytest.fixture
def fig1():
    return parse_qdimacs(FIG1_TEXT)


@pytest.fixture
def unit1():
    return parse_qdimacs(UNIT1_TEXT)


@pytest.fixture
def contra():
    return parse_qdimacs(CONTRA_TEXT)


def fixtures():
    return [parse_qdimacs(t) for t in (FIG1_TEXT, UNIT1_TEXT, CONTRA_TEXT)]


def small_instances(n=200, seed=0):
    """Seeded random QBFs with at most 4 variables and 4 clauses."""
    out = []
    for i in range(n):
        nv = 1 + i % 4
        nc = 1 + (i // 4) % 4
        out.append(random_qbf(nv, nc, seed=seed * 10_000 + i, min_width=1, max_width=3))
    return out


def brute_truth(q: Qbf) -> bool:
    """Quantifier expansion over full assignments; the matrix is only read at the leaves."""
    order = [v for _, v in q.prefix]

    def holds(assign):
        return all(any((l > 0) == assign[abs(l)] for l in c) for c in q.matrix)

    def rec(i, assign):
        if i == len(order):
            return holds(assign)
        branches = [rec(i + 1, {**assign, order[i]: b}) for b in (False, True)]
        return any(branches) if q.prefix[i][0] is Quantifier.EXISTS else all(branches)

    return rec(0, {})


# one line per acceptance criterion, echoed at the end of the session
ACCEPTANCE_LINES: list[str] = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in sorted(ACCEPTANCE_LINES):
            terminalreporter.write_line(line)
