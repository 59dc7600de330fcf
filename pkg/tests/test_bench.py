import random

import pytest

from huap.algebra import count_ops
from huap.bench import (
    CSV_COLUMNS,
    OPS,
    SEED_ENV,
    bench_policy,
    bench_run,
    expected_counts,
    resolve_seed,
)
from huap.policy import AndGate, Policy, Universe
from huap import scheme

from conftest import random_gate


@pytest.fixture(scope="module")
def report():
    return bench_run(ns=[2, 4], ni=3, m=2, trials=2, seed=7)


def test_report_ok(report):
    assert report.ok, report.mismatches
    assert len(report.rows) == 2 * len(OPS)
    assert all(r.mean_us > 0 and r.stddev_us >= 0 for r in report.rows)


def test_table_formulas_at_single_valued_clauses(report):
    for n in (2, 4):
        m, N = 2, 3 * n
        enc = report.row("anon_encrypt", n).counts
        assert enc["EG"] == 5 * m * n + 5 * m
        assert enc["MG"] == 5 * m * n + m
        assert enc["EGT"] == 3 * m
        assert enc["RG"] == 5 * m * N
        assert enc["P"] == 0
        assert report.row("offline_encrypt", n).counts == {"EG": 2, "EGT": 1, "MG": 0, "MGT": 0, "P": 0, "RG": 0}
        assert report.row("online_encrypt", n).counts == {"EG": 0, "EGT": 0, "MG": 0, "MGT": 1, "P": 0, "RG": 0}
        dec = report.row("decrypt", n).counts
        assert dec["P"] == 10 and dec["MGT"] == 9
        assert report.row("match", n).counts["P"] == 2


def test_csv_and_json(report):
    lines = report.to_csv().splitlines()
    assert lines[0] == ",".join(CSV_COLUMNS)
    assert len(lines) == 1 + len(report.rows)
    assert '"seed": 7' in report.to_json()


def test_counts_repeat_with_seed():
    a = bench_run(ns=[2], ni=2, trials=1, seed=3, ops=("anon_encrypt", "decrypt"))
    b = bench_run(ns=[2], ni=2, trials=1, seed=3, ops=("anon_encrypt", "decrypt"))
    assert [r.counts for r in a.rows] == [r.counts for r in b.rows]


def test_seed_resolution(monkeypatch):
    monkeypatch.delenv(SEED_ENV, raising=False)
    assert resolve_seed(None) == 1
    monkeypatch.setenv(SEED_ENV, "42")
    assert resolve_seed(None) == 42
    assert resolve_seed(5) == 5


def test_anon_encrypt_counts_general_clauses(system, owner):
    """Multi-valued clauses and wildcards: every admitted value costs a blinded hash power."""
    pk, _ = system
    pp, sp, rk = owner
    rng = random.Random(12)
    dk0 = scheme.derive_dk(pp, sp, scheme.epoch_secret(rk, 0))
    for _ in range(4):
        u = Universe.from_sizes([rng.randint(1, 4) for _ in range(rng.randint(1, 4))])
        pol = Policy(u, tuple(random_gate(u, rng) for _ in range(rng.randint(1, 3))))
        with count_ops() as c:
            scheme.anon_encrypt(pk, pp, sp, rk, pol, rng, dk=dk0)
        want = expected_counts("anon_encrypt", pol)
        assert {k: getattr(c, k) for k in want} == want


def test_bench_policy_shape():
    u = Universe.from_sizes([3, 3])
    pol = bench_policy(u, 4)
    assert pol.m == 4
    assert all(g.clause_size(i) == 1 for g in pol.gates for i in range(2))
    assert pol.gates[3] == AndGate.build(u, [[0], [0]])
