import random

import pytest

from huap import scheme
from huap.policy import AndGate, AttributeList, Policy


@pytest.fixture(scope="session")
def system():
    rng = random.Random("tests/system")
    pk, mk = scheme.system_setup(rng)
    return pk, mk


@pytest.fixture(scope="session")
def owner(system):
    pk, _ = system
    rng = random.Random("tests/owner")
    pp, sp = scheme.owner_param_setup(pk, rng)
    rk = scheme.reenc_keygen(rng)
    return pp, sp, rk


@pytest.fixture
def rng():
    return random.Random(1234)


def make_policy(universe, clause_lists):
    return Policy(universe, tuple(AndGate.build(universe, c) for c in clause_lists))


def attrs(universe, selections):
    return AttributeList(universe, tuple(selections))


def random_gate(universe, rng):
    clauses = []
    for size in universe.sizes:
        if rng.random() < 0.3:
            clauses.append("*")
        else:
            k = rng.randint(1, size)
            clauses.append(rng.sample(range(size), k))
    return AndGate.build(universe, clauses)


def random_policy(universe, m, rng):
    return Policy(universe, tuple(random_gate(universe, rng) for _ in range(m)))


def random_list(universe, rng):
    return AttributeList(universe, tuple(rng.randrange(k) for k in universe.sizes))




# -- acceptance report ----------------------------------------------------------

ACCEPTANCE = []


def record_acceptance(name, ok, detail=""):
    line = f"[{'PASS' if ok else 'FAIL'}] {name}" + (f": {detail}" if detail else "")
    ACCEPTANCE.append(line)
    print(line)
    return ok


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE:
            terminalreporter.write_line(line)
