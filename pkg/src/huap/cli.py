"""Command-line front end.

State lives under a home directory (``--home``, default ``$HUAP_HOME`` or
``./huap-home``)::

    universe.json             attribute universe (public)
    public/pk.huap pp.huap    system public key, owner public params
    aa/mk.huap                master key (attribute authority only)
    owner/sp.huap rk.huap     owner secrets
    device/pool/*.json        offline ciphertexts waiting for data
    csp/                      cloud object store

Exit status: 0 success, 1 access denied, 2 malformed input or a
protocol-order problem (such as an empty offline pool).
"""

from __future__ import annotations

import argparse
import json
import os
import sys
from pathlib import Path
from typing import List, Optional

from . import wire
from .algebra import DecodeError, TargetElem, random_target
from .algebra.group import default_rng
from .bench import DEFAULT_NS, bench_run
from .harness import HarnessError, run_scenario
from .harness.store import DirectoryStore, atomic_write, check_id
from .lifecycle import CloudService, LifecycleError, NotPublished
from .policy import AndGate, AttributeList, Policy, PolicyError, Universe
from .scheme import (
    AccessDenied,
    AttrSecretKey,
    CloudCiphertext,
    DataPublicParams,
    DataSecretParams,
    OfflineCiphertext,
    PayloadError,
    ReencKey,
    SchemeError,
    SystemMasterKey,
    SystemPublicKey,
    anon_encrypt,
    attr_keygen,
    offline_encrypt,
    online_encrypt,
    open_message,
    open_payload,
    owner_param_setup,
    recover_dk,
    reenc_keygen,
    seal_payload,
    system_setup,
)

OWNER_ID = "owner"
EXIT_OK, EXIT_DENIED, EXIT_INPUT = 0, 1, 2


class UsageError(Exception):
    pass


class Home:
    def __init__(self, root: Path):
        self.root = root

    def path(self, *parts: str) -> Path:
        return self.root.joinpath(*parts)

    def write(self, obj, *parts: str) -> Path:
        path = self.path(*parts)
        atomic_write(path, wire.encode(obj))
        return path

    def read(self, expect: type, *parts: str):
        path = self.path(*parts)
        if not path.exists():
            raise UsageError(f"{path} not found; run the step that creates it first")
        return wire.decode(path.read_bytes(), expect=expect)

    def universe(self) -> Universe:
        path = self.path("universe.json")
        if not path.exists():
            raise UsageError("no universe; run 'setup' first")
        return Universe.from_dict(json.loads(path.read_text("utf-8")))

    def pk(self) -> SystemPublicKey:
        return self.read(SystemPublicKey, "public", "pk.huap")

    def pp(self) -> DataPublicParams:
        return self.read(DataPublicParams, "public", "pp.huap")

    def cloud(self) -> CloudService:
        return CloudService(self.pk(), DirectoryStore(self.path("csp")))

    def pool_dir(self) -> Path:
        return self.path("device", "pool")


def _load_json(path: str):
    try:
        return json.loads(Path(path).read_text("utf-8"))
    except FileNotFoundError:
        raise UsageError(f"{path}: no such file") from None
    except json.JSONDecodeError as exc:
        raise UsageError(f"{path}: not valid JSON ({exc})") from None


def _say(msg: str) -> None:
    print(msg)


# -- commands -----------------------------------------------------------------

def cmd_setup(home: Home, args) -> int:
    if home.path("aa", "mk.huap").exists() and not args.force:
        raise UsageError(f"{home.root} already set up (use --force to overwrite)")
    universe = Universe.from_dict(_load_json(args.universe))
    pk, mk = system_setup(default_rng())
    atomic_write(home.path("universe.json"), json.dumps(universe.to_dict(), indent=1).encode())
    home.write(pk, "public", "pk.huap")
    home.write(mk, "aa", "mk.huap")
    _say(f"system set up: {universe.n} attributes, N = {universe.total_values}")
    return EXIT_OK


def cmd_keygen(home: Home, args) -> int:
    universe = home.universe()
    attrs = AttributeList.from_mapping(universe, _load_json(args.attrs))
    key = attr_keygen(home.pk(), home.read(SystemMasterKey, "aa", "mk.huap"), attrs, default_rng())
    atomic_write(Path(args.out), wire.encode(key))
    _say(f"wrote attribute key to {args.out}")
    return EXIT_OK


def cmd_owner_setup(home: Home, args) -> int:
    pp, sp = owner_param_setup(home.pk(), default_rng())
    home.write(pp, "public", "pp.huap")
    home.write(sp, "owner", "sp.huap")
    for stale in home.pool_dir().glob("*.json") if home.pool_dir().exists() else ():
        stale.unlink()
    _say("owner parameters created")
    return EXIT_OK


def cmd_rkey(home: Home, args) -> int:
    rk = reenc_keygen(default_rng())
    home.write(rk, "owner", "rk.huap")
    home.cloud().register_owner(OWNER_ID, home.pp(), rk)
    _say("re-encryption key created and handed to the cloud")
    return EXIT_OK


def cmd_enc_offline(home: Home, args) -> int:
    if args.pool < 1:
        raise UsageError("--pool must be positive")
    pk, pp = home.pk(), home.pp()
    rng = default_rng()
    pool = home.pool_dir()
    pool.mkdir(parents=True, exist_ok=True)
    start = max([int(p.stem) for p in pool.glob("*.json")], default=0) + 1
    for k in range(args.pool):
        entry = {"key": random_target(rng).to_bytes().hex(),
                 "offline": wire.encode(offline_encrypt(pk, pp, rng)).hex()}
        atomic_write(pool / f"{start + k:08d}.json", json.dumps(entry).encode())
    _say(f"offline pool now holds {len(list(pool.glob('*.json')))} entries")
    return EXIT_OK


class PoolEmptyError(UsageError):
    pass


def cmd_enc_online(home: Home, args) -> int:
    object_id = check_id(args.object)
    entries = sorted(home.pool_dir().glob("*.json")) if home.pool_dir().exists() else []
    if not entries:
        raise PoolEmptyError("offline pool is empty; run 'enc-offline --pool N' first")
    try:
        data = Path(args.input).read_bytes()
    except FileNotFoundError:
        raise UsageError(f"{args.input}: no such file") from None
    entry_path = entries[0]
    entry = json.loads(entry_path.read_text("utf-8"))
    M = TargetElem.from_bytes(bytes.fromhex(entry["key"]))
    offline = wire.decode(bytes.fromhex(entry["offline"]), expect=OfflineCiphertext)
    entry_path.unlink()  # consumed before use: never reused even if we crash below
    msg = online_encrypt(M, offline)
    sealed = seal_payload(M, data, aad=object_id.encode("utf-8"))
    uct = home.cloud().submit_message(OWNER_ID, object_id, msg, sealed)
    state = "parked until a policy is defined" if uct is None else f"published at epoch {uct.epoch}"
    _say(f"uploaded {len(data)} bytes to {object_id!r}: {state}")
    return EXIT_OK


def _owner_material(home: Home):
    pk, pp = home.pk(), home.pp()
    sp = home.read(DataSecretParams, "owner", "sp.huap")
    rk = home.read(ReencKey, "owner", "rk.huap")
    return pk, pp, sp, rk


def cmd_policy(home: Home, args) -> int:
    object_id = check_id(args.object)
    doc = _load_json(args.file)
    policy = Policy.from_dict(home.universe(), doc)
    expirations = [g.get("expires_at") for g in doc["gates"]]
    pk, pp, sp, rk = _owner_material(home)
    gates = anon_encrypt(pk, pp, sp, rk, policy, default_rng())
    uct = home.cloud().publish(OWNER_ID, CloudCiphertext(object_id, (), gates), expirations)
    _say(f"{object_id!r} published at epoch {uct.epoch} with {uct.m} gate(s), "
         f"{len(uct.messages)} message part(s)")
    return EXIT_OK


def cmd_reencrypt(home: Home, args) -> int:
    object_id = check_id(args.object)
    cloud = home.cloud()
    current = cloud.get(object_id).current_epoch
    if args.epoch is not None and args.epoch != current + 1:
        raise UsageError(f"next epoch for {object_id!r} is {current + 1}, not {args.epoch}")
    uct = cloud.rotate(object_id, "csp")
    if uct is None:
        raise NotPublished(f"{object_id!r} has no gates")
    _say(f"{object_id!r} republished at epoch {uct.epoch}")
    return EXIT_OK


def cmd_decrypt(home: Home, args) -> int:
    object_id = check_id(args.object)
    key = wire.decode(Path(args.key).read_bytes(), expect=AttrSecretKey)
    obj = home.cloud().get(object_id)
    if obj.published is None:
        print("access denied (object withdrawn: no gates)", file=sys.stderr)
        return EXIT_DENIED
    uct = obj.published
    if not 0 <= args.part < len(uct.messages):
        raise UsageError(f"{object_id!r} has {len(uct.messages)} message part(s)")
    dk = recover_dk(key, uct)  # raises AccessDenied
    M = open_message(home.pp(), uct.messages[args.part], dk)
    data = open_payload(M, obj.payloads[args.part], aad=object_id.encode("utf-8"))
    if args.out:
        atomic_write(Path(args.out), data)
        _say(f"recovered {len(data)} bytes (epoch {uct.epoch}) to {args.out}")
    else:
        sys.stdout.buffer.write(data)
    return EXIT_OK


def cmd_update(home: Home, args) -> int:
    cloud = home.cloud()
    if args.action == "sweep":
        removed = cloud.sweep_expirations(args.now)
        for object_id, gate_id in removed:
            _say(f"expired {object_id}/{gate_id}")
        _say(f"{len(removed)} gate(s) removed")
        return EXIT_OK
    object_id = check_id(args.object)
    if args.action == "delete":
        uct = cloud.delete_gate(object_id, args.gate, OWNER_ID)
        if uct is None:
            _say(f"deleted {args.gate}; {object_id!r} has no gates left and is withdrawn")
        else:
            _say(f"deleted {args.gate}; {object_id!r} republished at epoch {uct.epoch}")
        return EXIT_OK
    doc = _load_json(args.gate)
    clauses = doc.get("clauses", doc) if isinstance(doc, dict) else doc
    gate = AndGate.from_mapping(home.universe(), clauses)
    pk, pp, sp, rk = _owner_material(home)
    (pair,) = anon_encrypt(pk, pp, sp, rk, Policy(gate.universe, (gate,)), default_rng())
    gate_id, uct = cloud.add_gate(object_id, pair, OWNER_ID, args.expires)
    _say(f"added {gate_id} to {object_id!r} at epoch {uct.epoch}")
    return EXIT_OK


def cmd_status(home: Home, args) -> int:
    cloud = home.cloud()
    for object_id in ([check_id(args.object)] if args.object else cloud.store.ids()):
        obj = cloud.get(object_id)
        gates = ", ".join(g.gate_id + (f"(expires {g.expires_at})" if g.expires_at is not None else "")
                          for g in obj.gates) or "none"
        _say(f"{object_id}: epoch {obj.current_epoch}, {len(obj.stored.messages)} part(s), gates: {gates}")
    return EXIT_OK


def cmd_bench(home: Optional[Home], args) -> int:
    report = bench_run(ns=args.n, ni=args.ni, m=args.m, trials=args.trials, seed=args.seed,
                       progress=(lambda s: print(s, file=sys.stderr)) if args.verbose else None)
    text = report.to_json() if args.json else report.to_csv()
    if args.out:
        Path(args.out).write_text(text, "utf-8")
    else:
        sys.stdout.write(text)
    for line in report.mismatches:
        print("count mismatch: " + line, file=sys.stderr)
    return EXIT_OK if report.ok else EXIT_INPUT


def cmd_scenario(home: Optional[Home], args) -> int:
    transcript = run_scenario(args.script, store_dir=args.store)
    text = transcript.to_jsonl()
    if args.transcript:
        Path(args.transcript).write_text(text, "utf-8")
    for e in transcript.events("access"):
        d = e["detail"]
        _say(f"{e['actor']:>12s} {d['object']}: {d['outcome']}" + (f" (epoch {d['epoch']})" if "epoch" in d else ""))
    return EXIT_OK


# -- parser -------------------------------------------------------------------

def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="huap", description="Hidden-policy ABE with cloud-side policy updates")
    p.add_argument("--home", default=os.environ.get("HUAP_HOME", "huap-home"), help="state directory")
    sub = p.add_subparsers(dest="command", required=True)

    s = sub.add_parser("setup", help="AA: create system keys for a universe")
    s.add_argument("--universe", required=True, help="universe JSON file")
    s.add_argument("--force", action="store_true")
    s.set_defaults(func=cmd_setup)

    s = sub.add_parser("keygen", help="AA: issue an attribute key")
    s.add_argument("--attrs", required=True, help="JSON mapping attribute -> value")
    s.add_argument("--out", required=True)
    s.set_defaults(func=cmd_keygen)

    s = sub.add_parser("owner-setup", help="DO: create owner parameters")
    s.set_defaults(func=cmd_owner_setup)

    s = sub.add_parser("rkey", help="DO: create the re-encryption key and register with the cloud")
    s.set_defaults(func=cmd_rkey)

    s = sub.add_parser("enc-offline", help="Dev: precompute offline ciphertexts")
    s.add_argument("--pool", type=int, default=16)
    s.set_defaults(func=cmd_enc_offline)

    s = sub.add_parser("enc-online", help="Dev: encrypt a file with one pooled offline ciphertext")
    s.add_argument("--in", dest="input", required=True)
    s.add_argument("--object", required=True)
    s.set_defaults(func=cmd_enc_online)

    s = sub.add_parser("policy", help="DO: encrypt an access policy and publish the object")
    s.add_argument("--file", required=True, help='{"gates": [{"clauses": {...}, "expires_at": t?}]}')
    s.add_argument("--object", required=True)
    s.set_defaults(func=cmd_policy)

    s = sub.add_parser("reencrypt", help="CSP: republish an object at the next epoch")
    s.add_argument("--object", required=True)
    s.add_argument("--epoch", type=int, help="expected new epoch (must be current + 1)")
    s.set_defaults(func=cmd_reencrypt)

    s = sub.add_parser("decrypt", help="DU: decrypt a published object")
    s.add_argument("--key", required=True)
    s.add_argument("--object", required=True)
    s.add_argument("--part", type=int, default=0)
    s.add_argument("--out")
    s.set_defaults(func=cmd_decrypt)

    s = sub.add_parser("update", help="policy updates")
    s.add_argument("action", choices=["delete", "add", "sweep"])
    s.add_argument("--object")
    s.add_argument("--gate", help="gate id (delete) or gate JSON file (add)")
    s.add_argument("--expires", type=float, help="expiration for an added gate")
    s.add_argument("--now", type=float, help="sweep instant (default: current time)")
    s.set_defaults(func=cmd_update)

    s = sub.add_parser("status", help="CSP: list stored objects")
    s.add_argument("--object")
    s.set_defaults(func=cmd_status)

    s = sub.add_parser("bench", help="operation counts and timings")
    s.add_argument("--n", type=int, nargs="+", default=list(DEFAULT_NS))
    s.add_argument("--ni", type=int, default=10)
    s.add_argument("--m", type=int, default=1)
    s.add_argument("--trials", type=int, default=3)
    s.add_argument("--seed", type=int, help="default: $HUAP_BENCH_SEED or 1")
    s.add_argument("--json", action="store_true")
    s.add_argument("--out")
    s.add_argument("-v", "--verbose", action="store_true")
    s.set_defaults(func=cmd_bench, no_home=True)

    s = sub.add_parser("scenario", help="run a scripted protocol flow")
    s.add_argument("--script", required=True)
    s.add_argument("--store", help="directory for the cloud store (default: in memory)")
    s.add_argument("--transcript", help="write the JSON-lines transcript here")
    s.set_defaults(func=cmd_scenario, no_home=True)
    return p


def main(argv: Optional[List[str]] = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    if args.command == "update":
        if args.action in ("delete", "add") and (not args.object or not args.gate):
            parser.error(f"update {args.action} needs --object and --gate")
    home = None if getattr(args, "no_home", False) else Home(Path(args.home))
    try:
        return args.func(home, args)
    except AccessDenied as exc:
        print(str(exc), file=sys.stderr)
        return EXIT_DENIED
    except NotPublished as exc:
        print(f"access denied ({exc})", file=sys.stderr)
        return EXIT_DENIED
    except (UsageError, PolicyError, DecodeError, LifecycleError, HarnessError, PayloadError,
            SchemeError, ValueError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INPUT


if __name__ == "__main__":
    sys.exit(main())
