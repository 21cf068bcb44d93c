"""Shared runs.  Scheduler runs take tens of seconds, so each is built once."""
from fractions import Fraction

import pytest
from mpmath import mp

from conjlab import scheduler
from conjlab.liouville import make_liouville

# criterion 3 reaches q = 10^40320 and certifies against a_5 = 362880
BIG = scheduler.Config(max_q_log10=10 ** 6)


@pytest.fixture(autouse=True)
def _prec():
    old = mp.prec
    mp.prec = 256
    yield
    mp.prec = old


def _run(kind, steps, **kw):
    mp.prec = 256
    cons = scheduler.make_construction(kind, **kw)
    return scheduler.run(cons, 1, make_liouville("factorial"), steps, BIG)


@pytest.fixture(scope="session")
def gbeta3():
    return _run("GBeta", 3, beta=Fraction(1, 2))


@pytest.fixture(scope="session")
def g1sing3():
    return _run("G1Sing", 3)


@pytest.fixture(scope="session")
def g1ac2():
    return _run("G1Ac", 2)


@pytest.fixture(scope="session")
def gk2():
    return _run("Gk", 2, k=1)


def pytest_terminal_summary(terminalreporter):
    import sys

    mod = sys.modules.get("test_acceptance")
    lines = getattr(mod, "RESULTS", None)
    if lines:
        terminalreporter.section("acceptance criteria")
        for n in sorted(lines):
            terminalreporter.write_line(lines[n])
