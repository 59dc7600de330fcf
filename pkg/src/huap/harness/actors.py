"""Protocol roles.

Each role object only ever holds the material its role is entitled to:

========  =====================================================
AA        PK, MK
CSP       PK, and per owner PP + RK (inside its CloudService)
Dev       PK, PP, its own offline pool
DO        PK, PP, SP, RK
DU        PK, its attribute key, cached data decryption keys
========  =====================================================
"""

from __future__ import annotations

import random
from typing import Any, Dict, List, Optional, Sequence, Tuple

from ..algebra import random_target
from ..lifecycle import CloudService, LifecycleError
from ..policy import AndGate, AttributeList, Policy, Universe
from ..scheme import (
    AccessDenied,
    AttrSecretKey,
    CloudCiphertext,
    DataDecryptionKey,
    DataPublicParams,
    DataSecretParams,
    OfflineCiphertext,
    PayloadError,
    ReencKey,
    SystemMasterKey,
    SystemPublicKey,
    UserCiphertext,
    anon_encrypt,
    attr_keygen,
    check_attr_key,
    derive_dk,
    epoch_secret,
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
from ..wire import PolicyPart
from .bus import Envelope, digest


class HarnessError(Exception):
    pass


class CapabilityError(HarnessError):
    """An actor was asked to do something its role cannot do."""


class ProtocolError(HarnessError):
    """Actions arrived in an order the protocol does not allow."""


class PoolEmpty(ProtocolError):
    pass


class Actor:
    role = "?"
    ops: Tuple[str, ...] = ()

    def __init__(self, name: str, rng: random.Random):
        self.name = name
        self.rng = rng
        self.bus = None
        self.pk: Optional[SystemPublicKey] = None

    def perform(self, op: str, **args) -> Any:
        if op not in self.ops:
            raise CapabilityError(f"{self.role} actor {self.name!r} cannot perform {op!r}")
        return getattr(self, "op_" + op.replace("-", "_"))(**args)

    def deliver(self, env: Envelope) -> None:
        handler = getattr(self, "on_" + env.kind.replace("-", "_"), None)
        if handler is None:
            raise ProtocolError(f"{self.role} actor {self.name!r} does not accept {env.kind!r}")
        handler(env.sender, **env.body)

    def on_system_pk(self, sender: str, pk: SystemPublicKey) -> None:
        self.pk = pk

    def send(self, recipient: str, kind: str, **body) -> None:
        self.bus.send(self.name, recipient, kind, **body)

    def event(self, kind: str, **detail) -> None:
        self.bus.event(self.name, kind, **detail)

    def _need_pk(self) -> SystemPublicKey:
        if self.pk is None:
            raise ProtocolError(f"{self.name!r} has not received the system public key")
        return self.pk


class AttributeAuthority(Actor):
    role = "AA"
    ops = ("setup", "keygen")

    def __init__(self, name: str, rng: random.Random, universe: Universe):
        super().__init__(name, rng)
        self.universe = universe
        self.mk: Optional[SystemMasterKey] = None

    def op_setup(self) -> None:
        if self.mk is not None:
            raise ProtocolError("system already set up")
        self.pk, self.mk = system_setup(self.rng)
        self.event("system-setup")
        for name in self.bus.actors:
            if name != self.name:
                self.send(name, "system-pk", pk=self.pk)

    def op_keygen(self, user: str, attrs: Dict[str, str]) -> None:
        if self.mk is None:
            raise ProtocolError("keygen before setup")
        if not isinstance(self.bus.actors.get(user), DataUser):
            raise CapabilityError(f"keys are only issued to data users, not {user!r}")
        attr_list = AttributeList.from_mapping(self.universe, attrs)
        key = attr_keygen(self.pk, self.mk, attr_list, self.rng)
        self.send(user, "attr-key", key=key, attrs=attrs)


class CSPService(CloudService):
    """CloudService whose randomness is a pure function of (seed, object, log position)."""

    def __init__(self, pk, store, seed, clock):
        super().__init__(pk, store, clock=clock)
        self.seed = seed

    def rng_for(self, object_id: str, seq: int) -> random.Random:
        return random.Random(f"{self.seed}/csp/{object_id}/{seq}")


class CloudProvider(Actor):
    role = "CSP"
    ops = ("reencrypt", "sweep", "restart")

    def __init__(self, name: str, rng: random.Random, store_factory, seed, clock):
        super().__init__(name, rng)
        self._store_factory = store_factory
        self._seed = seed
        self._clock = clock
        self.service: Optional[CloudService] = None

    def on_system_pk(self, sender: str, pk: SystemPublicKey) -> None:
        self.pk = pk
        self.service = CSPService(pk, self._store_factory(), self._seed, self._clock)

    def _svc(self) -> CloudService:
        if self.service is None:
            raise ProtocolError("cloud has not received the system public key")
        return self.service

    def _announce(self, object_id: str, uct: Optional[UserCiphertext]) -> None:
        obj = self._svc().get(object_id)
        self.event("published" if uct is not None else "withdrawn", object=object_id,
                   epoch=obj.current_epoch, gates=[g.gate_id for g in obj.gates],
                   ciphertext=uct)

    def on_reenc_key(self, sender: str, pp: DataPublicParams, rk: ReencKey) -> None:
        self._svc().register_owner(sender, pp, rk)

    def on_message_part(self, sender: str, owner: str, object: str, message, payload: bytes) -> None:
        uct = self._svc().submit_message(owner, object, message, payload)
        if uct is not None:
            self._announce(object, uct)

    def on_policy(self, sender: str, object: str, gates, expirations) -> None:
        svc = self._svc()
        try:
            uct = svc.publish(sender, CloudCiphertext(object, (), tuple(gates)), expirations)
        except LifecycleError as exc:
            raise ProtocolError(str(exc)) from None
        self._announce(object, uct)

    def on_delete_request(self, sender: str, object: str, gate: str) -> None:
        self._announce(object, self._svc().delete_gate(object, gate, sender))

    def on_add_request(self, sender: str, object: str, gates, expires_at=None) -> None:
        (pair,) = gates
        gate_id, uct = self._svc().add_gate(object, pair, sender, expires_at)
        self.event("gate-added", object=object, gate=gate_id)
        self._announce(object, uct)

    def on_access_request(self, sender: str, object: str) -> None:
        svc = self._svc()
        obj = svc.get(object)
        if obj.published is None:
            self.send(sender, "unavailable", object=object)
            return
        self.send(sender, "publication", object=object, ciphertext=obj.published,
                  pp=svc.owner_params(obj.owner_id), payloads=list(obj.payloads))

    def op_reencrypt(self, object: str) -> None:
        self._announce(object, self._svc().rotate(object, "csp"))

    def op_sweep(self, now: float) -> None:
        svc = self._svc()
        removed = svc.sweep_expirations(now)
        self.event("sweep", now=now, removed=[list(r) for r in removed])
        for object_id in sorted({o for o, _ in removed}):
            self._announce(object_id, svc.get(object_id).published)

    def op_restart(self) -> None:
        """Drop all in-memory state and reload from the store."""
        self.service = CSPService(self._svc().pk, self._store_factory(), self._seed, self._clock)
        self.event("restart", objects=self.service.store.ids())


class Device(Actor):
    role = "Dev"
    ops = ("offline-pool", "encrypt")
    DEFAULT_POOL = 16

    def __init__(self, name: str, rng: random.Random):
        super().__init__(name, rng)
        self.owner: Optional[str] = None
        self.pp: Optional[DataPublicParams] = None
        # (message key, offline ciphertext); the key is drawn ahead of time as well
        self.pool: List[Tuple[Any, OfflineCiphertext]] = []

    def on_owner_params(self, sender: str, pp: DataPublicParams) -> None:
        self.owner, self.pp = sender, pp
        self.pool = []

    def op_offline_pool(self, size: int = DEFAULT_POOL) -> None:
        if self.pp is None:
            raise ProtocolError(f"device {self.name!r} has no owner parameters")
        pk = self._need_pk()
        for _ in range(int(size)):
            self.pool.append((random_target(self.rng), offline_encrypt(pk, self.pp, self.rng)))
        self.event("pool", size=len(self.pool))

    def op_encrypt(self, object: str, payload: Optional[str] = None, payload_hex: Optional[str] = None) -> None:
        data = bytes.fromhex(payload_hex) if payload_hex is not None else (payload or "").encode("utf-8")
        if not self.pool:
            raise PoolEmpty(f"device {self.name!r} has no offline ciphertexts left")
        M, off = self.pool.pop(0)
        msg = online_encrypt(M, off)
        sealed = seal_payload(M, data, aad=object.encode("utf-8"), nonce=self.rng.randbytes(12))
        self.send("csp", "message-part", owner=self.owner, object=object, message=msg, payload=sealed)


class DataOwner(Actor):
    role = "DO"
    ops = ("param-setup", "rkey", "define-policy", "delete", "add")

    def __init__(self, name: str, rng: random.Random, universe: Universe):
        super().__init__(name, rng)
        self.universe = universe
        self.pp: Optional[DataPublicParams] = None
        self.sp: Optional[DataSecretParams] = None
        self.rk: Optional[ReencKey] = None
        self._dk0: Optional[DataDecryptionKey] = None

    def op_param_setup(self, devices: Sequence[str] = ()) -> None:
        self.pp, self.sp = owner_param_setup(self._need_pk(), self.rng)
        self._dk0 = None
        for dev in devices:
            if not isinstance(self.bus.actors.get(dev), Device):
                raise CapabilityError(f"{dev!r} is not a device")
            self.send(dev, "owner-params", pp=self.pp)

    def op_rkey(self) -> None:
        if self.pp is None:
            raise ProtocolError("rkey before param-setup")
        self.rk = reenc_keygen(self.rng)
        self.send("csp", "reenc-key", pp=self.pp, rk=self.rk)

    def _encrypt(self, gates: Sequence[AndGate]):
        if self.rk is None:
            raise ProtocolError("policy before rkey")
        if self._dk0 is None:
            self._dk0 = derive_dk(self.pp, self.sp, epoch_secret(self.rk, 0))
        policy = Policy(self.universe, tuple(gates))
        return PolicyPart(anon_encrypt(self.pk, self.pp, self.sp, self.rk, policy, self.rng, dk=self._dk0))

    def op_define_policy(self, object: str, policy: dict, expirations=None) -> None:
        parsed = Policy.from_dict(self.universe, policy)
        self.send("csp", "policy", object=object, gates=self._encrypt(parsed.gates),
                  expirations=list(expirations) if expirations else None)

    def op_delete(self, object: str, gate: str) -> None:
        self.send("csp", "delete-request", object=object, gate=gate)

    def op_add(self, object: str, clauses: dict, expires_at: Optional[float] = None) -> None:
        gate = AndGate.from_mapping(self.universe, clauses)
        self.send("csp", "add-request", object=object, gates=self._encrypt([gate]), expires_at=expires_at)


class DataUser(Actor):
    role = "DU"
    ops = ("access", "access-cached")

    def __init__(self, name: str, rng: random.Random, universe: Universe):
        super().__init__(name, rng)
        self.universe = universe
        self.key: Optional[AttrSecretKey] = None
        self.dk_cache: Dict[str, DataDecryptionKey] = {}
        self.outcomes: List[dict] = []
        self.recovered: Dict[str, List[bytes]] = {}
        self._use_cache = False

    def on_attr_key(self, sender: str, key: AttrSecretKey, attrs: Dict[str, str]) -> None:
        attr_list = AttributeList.from_mapping(self.universe, attrs)
        if not check_attr_key(self._need_pk(), key, attr_list, self.rng):
            raise ProtocolError(f"{self.name!r} received a malformed attribute key")
        self.key = key

    def _record(self, object_id: str, outcome: str, **detail) -> None:
        entry = {"object": object_id, "outcome": outcome, **detail}
        self.outcomes.append(entry)
        self.event("access", **entry)

    def on_unavailable(self, sender: str, object: str) -> None:
        self._record(object, "unavailable")

    def on_publication(self, sender: str, object: str, ciphertext: UserCiphertext,
                       pp: DataPublicParams, payloads: List[bytes]) -> None:
        if self._use_cache:
            dk = self.dk_cache.get(object)
            if dk is None:
                self._record(object, "no-cached-key")
                return
        else:
            try:
                dk = recover_dk(self.key, ciphertext)
            except AccessDenied:
                self._record(object, "denied", epoch=ciphertext.epoch)
                return
            self.dk_cache[object] = dk
        plain = []
        for msg, sealed in zip(ciphertext.messages, payloads):
            try:
                plain.append(open_payload(open_message(pp, msg, dk), sealed, aad=object.encode("utf-8")))
            except PayloadError:
                self._record(object, "stale-key" if self._use_cache else "corrupt",
                             epoch=ciphertext.epoch, key_epoch=dk.epoch)
                return
        self.recovered[object] = plain
        self._record(object, "granted", epoch=ciphertext.epoch, parts=[digest(p) for p in plain])

    def op_access(self, object: str) -> None:
        if self.key is None:
            raise ProtocolError(f"{self.name!r} has no attribute key")
        self._use_cache = False
        self.send("csp", "access-request", object=object)

    def op_access_cached(self, object: str) -> None:
        """Try the previously recovered data decryption key on the current publication."""
        self._use_cache = True
        try:
            self.send("csp", "access-request", object=object)
        finally:
            self._use_cache = False


ROLES = {
    "AA": AttributeAuthority,
    "CSP": CloudProvider,
    "Dev": Device,
    "DO": DataOwner,
    "DU": DataUser,
}
