"""Operation-count and timing benchmark.

For each ``n`` in the grid this sets up a universe of ``n`` attributes with
``n_i`` values each and an ``m``-gate policy, then times every protocol
operation while counting group operations. Counts are checked against
closed-form expectations; times are informative only.
"""

from __future__ import annotations

import csv
import io
import json
import os
import random
import statistics
import time
from dataclasses import dataclass, field
from typing import Callable, Dict, List, Optional, Sequence

from .algebra import count_ops, random_target
from .policy import AndGate, AttributeList, Policy, Universe
from .scheme import (
    CloudCiphertext,
    anon_encrypt,
    attr_keygen,
    decrypt_gate,
    derive_dk,
    epoch_secret,
    match_gate,
    offline_encrypt,
    online_encrypt,
    open_message,
    owner_param_setup,
    reenc_keygen,
    reencrypt,
    system_setup,
)

CSV_COLUMNS = ["op", "n", "ni", "m", "trials", "mean_us", "stddev_us", "EG", "EGT", "MG", "MGT", "P", "RG"]
COUNT_COLUMNS = CSV_COLUMNS[7:]
DEFAULT_NS = (10, 20, 30, 40, 50)
SEED_ENV = "HUAP_BENCH_SEED"
OPS = ("keygen", "offline_encrypt", "online_encrypt", "derive_dk", "anon_encrypt",
       "reencrypt", "match", "decrypt")


def bench_policy(universe: Universe, m: int) -> Policy:
    """Gate ``j`` admits value ``j mod n_i`` of every attribute (single-valued clauses)."""
    return Policy(universe, tuple(
        AndGate.build(universe, [[j % size] for size in universe.sizes]) for j in range(m)
    ))


def expected_counts(op: str, policy: Policy) -> Dict[str, int]:
    """Closed-form operation counts for ``op`` on ``policy`` (one message part)."""
    u = policy.universe
    n, N, m = u.n, u.total_values, policy.m
    c = sum(g.clause_size(i) for g in policy.gates for i in range(n))
    zero = dict.fromkeys(COUNT_COLUMNS, 0)
    table = {
        "keygen": {"EG": 6 * n + 4, "MG": 3 * n},
        "offline_encrypt": {"EG": 2, "EGT": 1},
        "online_encrypt": {"MGT": 1},
        "derive_dk": {"EG": 1, "MG": 1},
        # dk precomputed; non-clause slots and blinders are fresh draws
        "anon_encrypt": {"EG": 5 * c + 5 * m, "EGT": 3 * m, "MG": 5 * c + m,
                         "RG": 5 * m * n + 5 * (m * N - c)},
        # one message part; gates keep epoch-0 components except the blind side
        "reencrypt": {"EG": 4 + m * (2 * N + 2), "EGT": 1 + 2 * m, "MG": 3 + 2 * m, "MGT": 1 + m},
        "match": {"MG": 2 * n - 1, "MGT": 1, "P": 2},
        # decrypt_gate with the blind part, then the message equation
        "decrypt": {"MG": 6 * n - 4, "MGT": 9, "P": 10},
    }
    return {**zero, **table[op]}


@dataclass
class BenchRow:
    op: str
    n: int
    ni: int
    m: int
    trials: int
    mean_us: float
    stddev_us: float
    counts: Dict[str, int]

    def as_dict(self) -> dict:
        return {"op": self.op, "n": self.n, "ni": self.ni, "m": self.m, "trials": self.trials,
                "mean_us": round(self.mean_us, 1), "stddev_us": round(self.stddev_us, 1),
                **{k: self.counts[k] for k in COUNT_COLUMNS}}


@dataclass
class BenchReport:
    rows: List[BenchRow] = field(default_factory=list)
    mismatches: List[str] = field(default_factory=list)
    seed: int = 0

    @property
    def ok(self) -> bool:
        return not self.mismatches

    def row(self, op: str, n: int) -> BenchRow:
        for r in self.rows:
            if r.op == op and r.n == n:
                return r
        raise KeyError((op, n))

    def to_csv(self) -> str:
        buf = io.StringIO()
        writer = csv.DictWriter(buf, fieldnames=CSV_COLUMNS, lineterminator="\n")
        writer.writeheader()
        for r in self.rows:
            writer.writerow(r.as_dict())
        return buf.getvalue()

    def to_json(self) -> str:
        return json.dumps({"seed": self.seed, "rows": [r.as_dict() for r in self.rows],
                           "mismatches": self.mismatches}, indent=2)


def _measure(fn: Callable[[], object], trials: int):
    times, counts, result = [], None, None
    for _ in range(trials):
        with count_ops() as c:
            start = time.perf_counter()
            result = fn()
            times.append((time.perf_counter() - start) * 1e6)
        now = {k: getattr(c, k) for k in COUNT_COLUMNS}
        if counts is not None and now != counts:
            raise AssertionError(f"operation counts changed between trials: {counts} vs {now}")
        counts = now
    stddev = statistics.stdev(times) if len(times) > 1 else 0.0
    return result, statistics.fmean(times), stddev, counts


def resolve_seed(seed: Optional[int]) -> int:
    if seed is not None:
        return seed
    env = os.environ.get(SEED_ENV)
    return int(env) if env else 1


def bench_run(ns: Sequence[int] = DEFAULT_NS, ni: int = 10, m: int = 1, trials: int = 3,
              seed: Optional[int] = None, ops: Sequence[str] = OPS,
              progress: Optional[Callable[[str], None]] = None) -> BenchReport:
    seed = resolve_seed(seed)
    rng = random.Random(seed)
    report = BenchReport(seed=seed)
    pk, mk = system_setup(rng)
    pp, sp = owner_param_setup(pk, rng)
    rk = reenc_keygen(rng)
    dk0 = derive_dk(pp, sp, epoch_secret(rk, 0))

    for n in ns:
        universe = Universe.from_sizes([ni] * n)
        policy = bench_policy(universe, m)
        attrs = AttributeList(universe, (0,) * n)  # satisfies gate 0
        state: Dict[str, object] = {}

        def run_keygen():
            return attr_keygen(pk, mk, attrs, rng)

        def run_offline():
            return offline_encrypt(pk, pp, rng)

        def run_online():
            return online_encrypt(state["M"], state["offline"].pop())

        steps = {
            "keygen": run_keygen,
            "offline_encrypt": run_offline,
            "online_encrypt": run_online,
            "derive_dk": lambda: derive_dk(pp, sp, epoch_secret(rk, 0)),
            "anon_encrypt": lambda: anon_encrypt(pk, pp, sp, rk, policy, rng, dk=dk0),
            "reencrypt": lambda: reencrypt(pk, pp, rk, 1, CloudCiphertext("bench", (state["msg"],), state["gates"]), rng),
            "match": lambda: match_gate(state["key"], state["uct"].gates[0].gate),
            "decrypt": lambda: open_message(pp, state["uct"].messages[0],
                                            decrypt_gate(state["key"], *state["uct"].gates[0], epoch=1)),
        }
        # prerequisites are built outside the timed region
        state["M"] = random_target(rng)
        state["offline"] = [offline_encrypt(pk, pp, rng) for _ in range(trials)]
        state["key"] = attr_keygen(pk, mk, attrs, rng)
        state["msg"] = online_encrypt(state["M"], offline_encrypt(pk, pp, rng))
        state["gates"] = anon_encrypt(pk, pp, sp, rk, policy, rng, dk=dk0)
        state["uct"] = reencrypt(pk, pp, rk, 1, CloudCiphertext("bench", (state["msg"],), state["gates"]), rng)

        for op in ops:
            result, mean, stddev, counts = _measure(steps[op], trials)
            if op == "match" and result is not True:
                report.mismatches.append(f"match n={n}: authorized key did not match")
            if op == "decrypt" and result != state["M"]:
                report.mismatches.append(f"decrypt n={n}: wrong message")
            want = expected_counts(op, policy)
            if counts != want:
                report.mismatches.append(f"{op} n={n} ni={ni} m={m}: counted {counts}, expected {want}")
            report.rows.append(BenchRow(op, n, ni, m, trials, mean, stddev, counts))
            if progress:
                progress(f"{op:16s} n={n:3d} {mean / 1000:9.2f} ms")
    return report
