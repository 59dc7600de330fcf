"""Acceptance criteria. Each test prints one PASS/FAIL line (also collected
into the pytest terminal summary) and then asserts it."""

import random
import time

import pytest

from huap import scheme, wire
from huap.algebra import count_ops, random_target
from huap.bench import DEFAULT_NS, bench_run
from huap.harness import Scenario
from huap.policy import AndGate, AttributeList, Policy, Universe, satisfies_gate, satisfies_policy
from huap.scheme import AccessDenied, PayloadError, open_payload, seal_payload

from conftest import ACCEPTANCE, random_gate, record_acceptance
from world import World

ZERO = {"EG": 0, "EGT": 0, "MG": 0, "MGT": 0, "P": 0, "RG": 0, "HG": 0}


def _counts(c):
    return {k: getattr(c, k) for k in ZERO}


def _authorized_list(policy, rng):
    gate = rng.choice(policy.gates)
    sel = []
    for i, size in enumerate(policy.universe.sizes):
        allowed = [t for t in range(size) if gate.allows(i, t)]
        sel.append(rng.choice(allowed))
    return AttributeList(policy.universe, tuple(sel))


def _unauthorized_list(policy, rng, tries=200):
    u = policy.universe
    for _ in range(tries):
        lst = AttributeList(u, tuple(rng.randrange(k) for k in u.sizes))
        if satisfies_policy(lst, policy) is None:
            return lst
    return None


# 1 -----------------------------------------------------------------------------

def test_correctness_suite(system, owner):
    """200 random instances (n <= 8, n_i <= 5, m <= 3); every epoch 1..3."""
    pk, mk = system
    pp, sp, rk = owner
    rng = random.Random("acceptance/correctness")
    dk0 = scheme.derive_dk(pp, sp, scheme.epoch_secret(rk, 0))
    failures, checks, rejections = [], 0, 0
    start = time.perf_counter()
    for k in range(200):
        if k < 4:  # the corners of the range are always covered
            n, m = 8, 3
            sizes = [5] * 8 if k < 2 else [1] * 8
        else:
            n, m = rng.randint(1, 8), rng.randint(1, 3)
            sizes = [rng.randint(1, 5) for _ in range(n)]
        u = Universe.from_sizes(sizes)
        policy = Policy(u, tuple(random_gate(u, rng) for _ in range(m)))
        M = random_target(rng)
        msg = scheme.online_encrypt(M, scheme.offline_encrypt(pk, pp, rng))
        stored = scheme.CloudCiphertext(f"obj{k}", (msg,), scheme.anon_encrypt(pk, pp, sp, rk, policy, rng, dk=dk0))
        lists = [_authorized_list(policy, rng) for _ in range(2)]
        bad = _unauthorized_list(policy, rng)
        if bad is not None:
            lists.append(bad)
        keys = [(lst, scheme.attr_keygen(pk, mk, lst, rng)) for lst in lists]
        for epoch in (1, 2, 3):
            uct = scheme.reencrypt(pk, pp, rk, epoch, stored, rng)
            for lst, key in keys:
                checks += 1
                authorized = satisfies_policy(lst, policy) is not None
                try:
                    got = scheme.anon_decrypt(pp, uct, key)
                except AccessDenied:
                    got = None
                if authorized and got != M:
                    failures.append(f"instance {k} epoch {epoch}: authorized {lst.selections} failed")
                if not authorized:
                    rejections += 1
                    if got is not None:
                        failures.append(f"instance {k} epoch {epoch}: unauthorized {lst.selections} accepted")
    elapsed = time.perf_counter() - start
    ok = not failures and elapsed < 300
    record_acceptance(
        "correctness suite", ok,
        f"200 instances, {checks} decrypt checks ({rejections} expected rejections), "
        f"{len(failures)} failures, {elapsed:.0f} s (limit 300 s)")
    assert not failures, failures[:5]
    assert elapsed < 300


# 2-4 ---------------------------------------------------------------------------

@pytest.fixture(scope="module")
def eval_grid():
    """n in {10..50}, n_i = 10, one gate: the evaluation grid."""
    return bench_run(ns=DEFAULT_NS, ni=10, m=1, trials=3, seed=2024,
                     ops=("offline_encrypt", "online_encrypt", "match", "decrypt"))


def test_constant_pairing_decryption(eval_grid, system, owner):
    pairings = {n: eval_grid.row("decrypt", n).counts["P"] for n in DEFAULT_NS}
    matching = {n: eval_grid.row("match", n).counts["P"] for n in DEFAULT_NS}
    # several gates: each rejected gate costs exactly one 2-pairing check
    pk, mk = system
    pp, sp, rk = owner
    rng = random.Random("acceptance/pairings")
    u = Universe.from_sizes([10] * 10)
    gates = [AndGate.build(u, [[j]] + ["*"] * 9) for j in range(4)]
    stored = scheme.CloudCiphertext("o", (scheme.online_encrypt(random_target(rng),
                                                                scheme.offline_encrypt(pk, pp, rng)),),
                                    scheme.anon_encrypt(pk, pp, sp, rk, Policy(u, tuple(gates)), rng))
    uct = scheme.reencrypt(pk, pp, rk, 1, stored, rng)
    key = scheme.attr_keygen(pk, mk, AttributeList(u, (3,) + (0,) * 9), rng)
    with count_ops() as c:
        scheme.anon_decrypt(pp, uct, key)
    multi_gate = c.P
    ok = (set(pairings.values()) == {10} and set(matching.values()) == {2} and multi_gate == 2 * 4 + 10)
    record_acceptance("constant-pairing decryption", ok,
                      f"decryption-phase P={pairings}, match P={matching}, "
                      f"4-gate anon_decrypt P={multi_gate} (4 checks + decryption phase = 18)")
    t10 = eval_grid.row("decrypt", 10).mean_us
    t50 = eval_grid.row("decrypt", 50).mean_us
    ratio = t50 / t10
    # soft check: reported, never asserted
    note = (f"       soft check {'met' if ratio < 3 else 'MISSED'}: decryption time n=50 / n=10 = "
            f"{ratio:.2f} (target < 3; {t10 / 1000:.1f} ms -> {t50 / 1000:.1f} ms)")
    ACCEPTANCE.append(note)
    print(note)
    assert ok


def test_constant_online_encryption(eval_grid, system, owner):
    pk, _ = system
    pp, _, _ = owner
    rows = {n: eval_grid.row("online_encrypt", n).counts for n in DEFAULT_NS}
    want = {"EG": 0, "EGT": 0, "MG": 0, "MGT": 1, "P": 0, "RG": 0}
    off = scheme.offline_encrypt(pk, pp, random.Random(1))
    with count_ops() as c:
        scheme.online_encrypt(random_target(random.Random(2)), off)
    direct = _counts(c)
    ok = all(r == want for r in rows.values()) and direct == {**ZERO, "MGT": 1}
    record_acceptance("constant online encryption", ok,
                      f"counts identical at n={list(rows)}: {want}; direct call incl. hashes: {direct}")
    assert ok


def test_offline_encryption_budget(eval_grid, system, owner):
    pk, _ = system
    pp, _, _ = owner
    rows = {n: eval_grid.row("offline_encrypt", n).counts for n in DEFAULT_NS}
    want = {"EG": 2, "EGT": 1, "MG": 0, "MGT": 0, "P": 0, "RG": 0}
    with count_ops() as c:
        scheme.offline_encrypt(pk, pp, random.Random(3))
    direct = _counts(c)
    ok = all(r == want for r in rows.values()) and direct == {**ZERO, "EG": 2, "EGT": 1}
    record_acceptance("offline encryption budget", ok, f"2 E_G + 1 E_GT at every n; direct: {direct}")
    assert ok


# 5 -----------------------------------------------------------------------------

SIZE_GRID = [(n, ni, m) for n in (1, 3, 6) for ni in (2, 5) for m in (1, 3)]


def test_size_formulas(system, owner):
    assert len(SIZE_GRID) == 12
    pk, mk = system
    pp, sp, rk = owner
    rng = random.Random("acceptance/sizes")
    bad = []

    def expect(label, obj, g, gt):
        rep = wire.measure(obj)
        if (rep.g, rep.gt) != (g, gt):
            bad.append(f"{label}: measured {rep.g}G+{rep.gt}GT, expected {g}G+{gt}GT")
        # bytes follow from the counts: fixed-width elements plus small integers only
        body = wire.layout(obj)
        small = sum(size for kind, size in body if kind not in ("G", "GT", "S"))
        if sum(size for _, size in body) != 65 * rep.g + 128 * rep.gt + 32 * rep.scalars + small:
            bad.append(f"{label}: byte total does not match element count")

    expect("PK", pk, 5, 1)
    for n, ni, m in SIZE_GRID:
        u = Universe.from_sizes([ni] * n)
        N = n * ni
        key = scheme.attr_keygen(pk, mk, AttributeList(u, (0,) * n), rng)
        expect(f"ASK n={n}", key, 3 * n + 4, 0)
        msg = scheme.online_encrypt(random_target(rng), scheme.offline_encrypt(pk, pp, rng))
        expect("message ct", msg, 2, 1)
        policy = Policy(u, tuple(random_gate(u, rng) for _ in range(m)))
        gates = scheme.anon_encrypt(pk, pp, sp, rk, policy, rng)
        expect(f"policy ct (n={n}, n_i={ni}, m={m})", wire.PolicyPart(gates), 5 * m * N + 6 * m, 2 * m)
        uct = scheme.reencrypt(pk, pp, rk, 1, scheme.CloudCiphertext("o", (msg,), gates), rng)
        expect(f"published policy ct (n={n}, n_i={ni}, m={m})", wire.policy_part(uct), 5 * m * N + 6 * m, 2 * m)
    ok = not bad
    record_acceptance("size formulas", ok,
                      f"PK, ASK, message and policy ciphertexts on {len(SIZE_GRID)} (n, n_i, m) points; "
                      f"{len(bad)} mismatches" + (f" e.g. {bad[0]}" if bad else ""))
    assert ok, bad


# 6 -----------------------------------------------------------------------------

def test_revocation_property(system):
    pk, mk = system
    rng = random.Random("acceptance/revocation")
    failures, deletions, checks = [], 0, 0
    for seq in range(50):
        world = World(pk, mk, seed=f"revocation/{seq}")
        u = Universe.from_sizes([rng.randint(1, 3) for _ in range(rng.randint(1, 4))])
        gates = {}
        initial = [random_gate(u, rng) for _ in range(rng.randint(2, 3))]
        M, msg = world.message()
        oid = f"seq{seq}"
        body = rng.randbytes(64)
        sealed = seal_payload(M, body, aad=oid.encode())
        stored = scheme.CloudCiphertext(oid, (msg,), world.gates(initial))
        world.cloud.publish(world.owner_id, stored, payloads=[sealed])
        gates.update({f"g{j}": g for j, g in enumerate(initial)})
        users = list({lst.selections: lst for lst in (
            [_authorized_list(Policy(u, (g,)), rng) for g in initial]
            + [AttributeList(u, tuple(rng.randrange(k) for k in u.sizes)) for _ in range(3)])}.values())
        cached = {}
        for step in range(rng.randint(2, 4)):
            uct = world.cloud.published(oid)
            for lst in users:
                try:
                    cached[lst.selections] = scheme.recover_dk(world.key(lst), uct)
                except AccessDenied:
                    cached.pop(lst.selections, None)
            if rng.random() < 0.35 or len(gates) == 1:
                gate = random_gate(u, rng)
                gid, _ = world.add(oid, gate)
                gates[gid] = gate
                continue
            victim = rng.choice(sorted(gates))
            del gates[victim]
            deletions += 1
            uct = world.cloud.delete_gate(oid, victim, world.owner_id)
            for lst in users:
                checks += 1
                authorized = any(satisfies_gate(lst, g) for g in gates.values())
                got = world.try_decrypt(uct, lst)
                if authorized and got != M:
                    failures.append(f"seq {seq}: {lst.selections} still authorized but failed")
                if not authorized and got is not None:
                    failures.append(f"seq {seq}: {lst.selections} revoked but decrypted")
                if authorized and open_payload(got, sealed, aad=oid.encode()) != body:
                    failures.append(f"seq {seq}: payload mismatch")
                old = cached.get(lst.selections)
                if old is not None:
                    stale = scheme.open_message(world.pp, uct.messages[0], old)
                    try:
                        open_payload(stale, sealed, aad=oid.encode())
                        failures.append(f"seq {seq}: cached epoch-{old.epoch} key opened epoch {uct.epoch}")
                    except PayloadError:
                        pass
    ok = not failures
    record_acceptance("revocation property", ok,
                      f"50 sequences, {deletions} deletions, {checks} user checks, {len(failures)} failures")
    assert ok, failures[:5]


# 7 -----------------------------------------------------------------------------

OFFLINE_DELETION_SCRIPT = {
    "seed": 99,
    "universe": {"attributes": [
        {"name": "role", "values": ["doctor", "nurse", "visitor"]},
        {"name": "ward", "values": ["a", "b"]},
    ]},
    "actors": {"aa": "AA", "csp": "CSP", "owner": "DO", "dev": "Dev", "doc": "DU", "nurse": "DU"},
    "actions": [
        {"actor": "aa", "op": "setup"},
        {"actor": "aa", "op": "keygen", "args": {"user": "doc", "attrs": {"role": "doctor", "ward": "a"}}},
        {"actor": "aa", "op": "keygen", "args": {"user": "nurse", "attrs": {"role": "nurse", "ward": "b"}}},
        {"actor": "owner", "op": "param-setup", "args": {"devices": ["dev"]}},
        {"actor": "owner", "op": "rkey"},
        {"actor": "dev", "op": "offline-pool", "args": {"size": 3}},
        {"actor": "dev", "op": "encrypt", "args": {"object": "rec", "payload": "temp 37.1"}},
        {"actor": "owner", "op": "define-policy", "args": {
            "object": "rec",
            "policy": {"gates": [{"clauses": {"role": "doctor", "ward": "*"}},
                                 {"clauses": {"role": "nurse", "ward": "b"}}]},
            "expirations": [None, 500]}},
        {"actor": "nurse", "op": "access", "args": {"object": "rec"}, "expect": "granted"},
        {"actor": "dev", "op": "encrypt", "args": {"object": "rec", "payload": "temp 37.4"}},
        {"actor": "csp", "op": "sweep", "args": {"now": 500}},
        {"actor": "nurse", "op": "access", "args": {"object": "rec"}, "expect": "denied"},
        {"actor": "nurse", "op": "access-cached", "args": {"object": "rec"}, "expect": "stale-key"},
        {"actor": "doc", "op": "access", "args": {"object": "rec"}, "expect": "granted"},
        {"actor": "csp", "op": "reencrypt", "args": {"object": "rec"}},
        {"actor": "doc", "op": "access", "args": {"object": "rec"}, "expect": "granted"},
    ],
}


def test_offline_policy_deletion():
    sc = Scenario(OFFLINE_DELETION_SCRIPT)
    sc.run()
    t = sc.transcript
    upload = t.messages(sender="owner", kind="policy")
    assert len(upload) == 1
    after = [e for e in t.messages(sender="owner") if e["seq"] > upload[0]["seq"]]
    published = [e["detail"]["epoch"] for e in t.events("published")]
    sweep = t.events("sweep")
    removed = sweep[0]["detail"]["removed"] if sweep else []
    recovered = sc.actor("doc").recovered.get("rec")
    ok = (not after and removed == [["rec", "g1"]] and published[-2:] == [2, 3]
          and recovered == [b"temp 37.1", b"temp 37.4"])
    record_acceptance("offline policy deletion", ok,
                      f"DO messages after policy upload: {len(after)}; sweep removed {removed}; "
                      f"publications at epochs {published}; nurse denied, doctor still granted")
    assert ok


# 8 -----------------------------------------------------------------------------

def test_policy_hiding_shape(system, owner):
    pk, _ = system
    pp, sp, rk = owner
    rng = random.Random("acceptance/shape")
    bad = []
    for k in range(20):
        u = Universe.from_sizes([rng.randint(1, 5) for _ in range(rng.randint(1, 6))])
        m = rng.randint(1, 3)
        blobs, layouts = [], []
        for _ in range(2):
            policy = Policy(u, tuple(random_gate(u, rng) for _ in range(m)))
            msg = scheme.online_encrypt(random_target(rng), scheme.offline_encrypt(pk, pp, rng))
            stored = scheme.CloudCiphertext("o", (msg,), scheme.anon_encrypt(pk, pp, sp, rk, policy, rng))
            part = wire.policy_part(scheme.reencrypt(pk, pp, rk, 1, stored, rng))
            blob = wire.encode(part)
            blobs.append(blob)
            layouts.append(wire.layout(part))
            # no slot stands out: every source-group slot is a non-identity element
            if any(x.is_identity() for pair in part for x in _group_slots(pair)):
                bad.append(f"pair {k}: identity element in a slot")
        header = 6 + 2 + 2 * u.n + 2
        if len(blobs[0]) != len(blobs[1]):
            bad.append(f"pair {k}: lengths {len(blobs[0])} vs {len(blobs[1])}")
        if blobs[0][:header] != blobs[1][:header]:
            bad.append(f"pair {k}: headers differ")
        if layouts[0] != layouts[1]:
            bad.append(f"pair {k}: layouts differ")
    ok = not bad
    record_acceptance("policy-hiding shape", ok, f"20 policy pairs, {len(bad)} differences")
    assert ok, bad


def _group_slots(pair):
    ct, blind = pair
    yield from (ct.C_tilde, ct.C0_hat, ct.C1, ct.C1_hat, blind.C1_p, blind.C1_hat_p)
    for table in (ct.C_delta_it, ct.C0_it, ct.C0_hat_it, blind.C0_it_p, blind.C0_hat_it_p):
        for row in table:
            yield from row
