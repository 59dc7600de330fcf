"""Cloud-side storage, publication and policy updates.

The cloud keeps each object in its epoch-0 form and only ever hands out
re-encrypted copies (epoch >= 1). Deleting a gate bumps the epoch and
republishes everything, so users who relied on the deleted gate lose
access; adding a gate re-encrypts just the new gate at the current epoch.
Neither needs anything from the data owner beyond the re-encryption key
delivered once at registration.
"""

from __future__ import annotations

import base64
import random
import threading
import time
from dataclasses import dataclass, replace
from typing import Dict, Iterable, List, Optional, Protocol, Sequence, Tuple

from . import wire
from .scheme import (
    CloudCiphertext,
    DataPublicParams,
    GatePair,
    MessageCiphertext,
    ReencKey,
    SystemPublicKey,
    UserCiphertext,
    reencrypt,
    reencrypt_gates,
    reencrypt_messages,
)
from .scheme.core import DimensionMismatch, SchemeError


class LifecycleError(SchemeError):
    pass


class UnknownObject(LifecycleError, KeyError):
    pass


class UnknownGate(LifecycleError, KeyError):
    pass


class NotOwner(LifecycleError, PermissionError):
    pass


class NotPublished(LifecycleError):
    """Every gate was deleted; nothing is published until a gate is added."""


@dataclass(frozen=True)
class GateMeta:
    gate_id: str
    expires_at: Optional[float] = None


@dataclass(frozen=True)
class UpdateRecord:
    """One line of an object's append-only audit log."""

    seq: int
    at: float
    kind: str  # publish | append | delete | add | sweep | rotate | withdraw
    epoch: int
    issued_by: str
    gate_ids: Tuple[str, ...] = ()

    def to_dict(self) -> dict:
        return {"seq": self.seq, "at": self.at, "kind": self.kind, "epoch": self.epoch,
                "issued_by": self.issued_by, "gate_ids": list(self.gate_ids)}

    @classmethod
    def from_dict(cls, d: dict) -> "UpdateRecord":
        return cls(d["seq"], d["at"], d["kind"], d["epoch"], d["issued_by"], tuple(d["gate_ids"]))


@dataclass(frozen=True)
class StoredObject:
    object_id: str
    owner_id: str
    stored: CloudCiphertext
    gates: Tuple[GateMeta, ...]
    current_epoch: int
    published: Optional[UserCiphertext]
    log: Tuple[UpdateRecord, ...] = ()
    next_gate: int = 0
    # opaque sealed payloads, one per message part (may be empty)
    payloads: Tuple[bytes, ...] = ()

    def gate_index(self, gate_id: str) -> int:
        for j, meta in enumerate(self.gates):
            if meta.gate_id == gate_id:
                return j
        raise UnknownGate(f"object {self.object_id!r} has no gate {gate_id!r}")

    def to_dict(self) -> dict:
        def b64(obj) -> str:
            return base64.b64encode(wire.encode(obj)).decode("ascii")

        return {
            "object_id": self.object_id,
            "owner_id": self.owner_id,
            "current_epoch": self.current_epoch,
            "next_gate": self.next_gate,
            "gates": [{"gate_id": g.gate_id, "expires_at": g.expires_at} for g in self.gates],
            # the stored form may have zero gates after deleting the last one
            "messages": [b64(msg) for msg in self.stored.messages],
            "policy": b64(wire.PolicyPart(self.stored.gates)) if self.stored.gates else None,
            "published": b64(self.published) if self.published is not None else None,
            "log": [rec.to_dict() for rec in self.log],
            "payloads": [base64.b64encode(p).decode("ascii") for p in self.payloads],
        }

    @classmethod
    def from_dict(cls, d: dict, verify: bool = False) -> "StoredObject":
        def unb64(text: str, expect: type):
            return wire.decode(base64.b64decode(text), expect=expect, verify=verify)

        gates = unb64(d["policy"], wire.PolicyPart) if d["policy"] else ()
        messages = tuple(unb64(m, MessageCiphertext) for m in d["messages"])
        return cls(
            object_id=d["object_id"],
            owner_id=d["owner_id"],
            stored=CloudCiphertext(d["object_id"], messages, tuple(gates)),
            gates=tuple(GateMeta(g["gate_id"], g["expires_at"]) for g in d["gates"]),
            current_epoch=d["current_epoch"],
            published=unb64(d["published"], UserCiphertext) if d["published"] else None,
            log=tuple(UpdateRecord.from_dict(r) for r in d["log"]),
            next_gate=d["next_gate"],
            payloads=tuple(base64.b64decode(p) for p in d.get("payloads", ())),
        )


@dataclass(frozen=True)
class PendingPart:
    """Message part uploaded before the object's policy exists."""

    owner_id: str
    message: MessageCiphertext
    payload: bytes = b""


class ObjectStore(Protocol):
    def get(self, object_id: str) -> StoredObject: ...

    def put(self, obj: StoredObject) -> None: ...

    def ids(self) -> List[str]: ...

    def add_pending(self, object_id: str, part: PendingPart) -> None: ...

    def take_pending(self, object_id: str) -> List[PendingPart]: ...

    def save_owner(self, owner_id: str, pp: DataPublicParams, rk: ReencKey) -> None: ...

    def load_owners(self) -> Dict[str, Tuple[DataPublicParams, ReencKey]]: ...


class MemoryStore:
    def __init__(self):
        self._objects: Dict[str, StoredObject] = {}
        self._pending: Dict[str, List[PendingPart]] = {}
        self._owners: Dict[str, Tuple[DataPublicParams, ReencKey]] = {}

    def add_pending(self, object_id: str, part: PendingPart) -> None:
        self._pending.setdefault(object_id, []).append(part)

    def take_pending(self, object_id: str) -> List[PendingPart]:
        return self._pending.pop(object_id, [])

    def save_owner(self, owner_id: str, pp: DataPublicParams, rk: ReencKey) -> None:
        self._owners[owner_id] = (pp, rk)

    def load_owners(self) -> Dict[str, Tuple[DataPublicParams, ReencKey]]:
        return dict(self._owners)

    def get(self, object_id: str) -> StoredObject:
        try:
            return self._objects[object_id]
        except KeyError:
            raise UnknownObject(f"no object {object_id!r}") from None

    def put(self, obj: StoredObject) -> None:
        self._objects[obj.object_id] = obj

    def ids(self) -> List[str]:
        return sorted(self._objects)


@dataclass
class _Owner:
    pp: DataPublicParams
    rk: ReencKey


class CloudService:
    """The CSP: holds ``PK``, each owner's public params and re-encryption key, and the store.

    It never sees owner secret params or any attribute key.
    """

    def __init__(self, pk: SystemPublicKey, store: Optional[ObjectStore] = None,
                 rng: Optional[random.Random] = None, clock=time.time):
        self.pk = pk
        self.store = store if store is not None else MemoryStore()
        self.rng = rng or random.SystemRandom()
        self.clock = clock
        self._owners: Dict[str, _Owner] = {
            oid: _Owner(pp, rk) for oid, (pp, rk) in self.store.load_owners().items()
        }
        self._locks: Dict[str, threading.Lock] = {}
        self._locks_guard = threading.Lock()

    def register_owner(self, owner_id: str, pp: DataPublicParams, rk: ReencKey) -> None:
        """Receive an owner's public params and re-encryption key (secure channel assumed)."""
        self.store.save_owner(owner_id, pp, rk)
        self._owners[owner_id] = _Owner(pp, rk)

    def owner_params(self, owner_id: str) -> DataPublicParams:
        return self._owner(owner_id).pp

    def rng_for(self, object_id: str, seq: int) -> random.Random:
        """Randomness for the update with log position ``seq``; override for reproducible runs."""
        return self.rng

    def _owner(self, owner_id: str) -> _Owner:
        try:
            return self._owners[owner_id]
        except KeyError:
            raise LifecycleError(f"owner {owner_id!r} has not delivered a re-encryption key") from None

    def _lock(self, object_id: str) -> threading.Lock:
        with self._locks_guard:
            return self._locks.setdefault(object_id, threading.Lock())

    def _log(self, obj: StoredObject, kind: str, epoch: int, issued_by: str,
             gate_ids: Sequence[str] = ()) -> Tuple[UpdateRecord, ...]:
        rec = UpdateRecord(len(obj.log), self.clock(), kind, epoch, issued_by, tuple(gate_ids))
        return obj.log + (rec,)

    @staticmethod
    def _authorize(obj: StoredObject, issued_by: str) -> None:
        if issued_by != obj.owner_id:
            raise NotOwner(f"{issued_by!r} does not own {obj.object_id!r}")

    # -- reads ----------------------------------------------------------------

    def published(self, object_id: str) -> UserCiphertext:
        obj = self.store.get(object_id)
        if obj.published is None:
            raise NotPublished(f"object {object_id!r} has no gates left")
        return obj.published

    def get(self, object_id: str) -> StoredObject:
        return self.store.get(object_id)

    # -- writes ---------------------------------------------------------------

    def submit_message(self, owner_id: str, object_id: str, message: MessageCiphertext,
                       payload: bytes = b"") -> Optional[UserCiphertext]:
        """Accept a message part from a device of ``owner_id``.

        Before the object's policy arrives the part is parked; afterwards it
        is re-encrypted at the current epoch and appended to the publication.
        """
        self._owner(owner_id)
        try:
            self.store.get(object_id)
        except UnknownObject:
            self.store.add_pending(object_id, PendingPart(owner_id, message, payload))
            return None
        return self.append_messages(object_id, [message], owner_id, [payload])

    def publish(self, owner_id: str, ct: CloudCiphertext,
                expirations: Optional[Sequence[Optional[float]]] = None,
                payloads: Sequence[bytes] = ()) -> UserCiphertext:
        """Store a new object and publish it at epoch 1.

        Parked message parts for the object are prepended to ``ct.messages``.
        """
        owner = self._owner(owner_id)
        if not ct.gates:
            raise LifecycleError("an object needs at least one gate")
        _check_same_shape(ct.gates)
        with self._lock(ct.object_id):
            try:
                self.store.get(ct.object_id)
            except UnknownObject:
                pass
            else:
                raise LifecycleError(f"object {ct.object_id!r} already exists")
            payloads = list(payloads) or [b""] * len(ct.messages)
            if len(payloads) != len(ct.messages):
                raise LifecycleError("one payload slot per message part")
            pending = self.store.take_pending(ct.object_id)
            if any(part.owner_id != owner_id for part in pending):
                raise NotOwner("parked message parts belong to another owner")
            ct = replace(ct, messages=tuple(p.message for p in pending) + tuple(ct.messages))
            payloads = [p.payload for p in pending] + payloads
            if not ct.messages:
                raise LifecycleError(f"object {ct.object_id!r} has no message parts")
            expirations = list(expirations or [None] * ct.m)
            if len(expirations) != ct.m:
                raise LifecycleError("one expiration slot per gate")
            metas = tuple(GateMeta(f"g{j}", exp) for j, exp in enumerate(expirations))
            uct = reencrypt(self.pk, owner.pp, owner.rk, 1, ct, self.rng_for(ct.object_id, 0))
            obj = StoredObject(ct.object_id, owner_id, ct, metas, 1, uct, next_gate=ct.m,
                               payloads=tuple(payloads))
            obj = replace(obj, log=self._log(obj, "publish", 1, owner_id, [m.gate_id for m in metas]))
            self.store.put(obj)
            return uct

    def append_messages(self, object_id: str, messages: Sequence[MessageCiphertext],
                        issued_by: str, payloads: Sequence[bytes] = ()) -> Optional[UserCiphertext]:
        """Add message parts (e.g. from further devices) under the object's existing policy."""
        with self._lock(object_id):
            obj = self.store.get(object_id)
            self._authorize(obj, issued_by)
            owner = self._owner(obj.owner_id)
            messages = tuple(messages)
            payloads = tuple(payloads) or (b"",) * len(messages)
            if len(payloads) != len(messages):
                raise LifecycleError("one payload slot per message part")
            stored = replace(obj.stored, messages=obj.stored.messages + messages)
            published = obj.published
            if published is not None:
                rng = self.rng_for(object_id, len(obj.log))
                fresh = reencrypt_messages(self.pk, owner.pp, owner.rk, obj.current_epoch, messages, rng)
                published = replace(published, messages=published.messages + fresh)
            obj = replace(obj, stored=stored, published=published, payloads=obj.payloads + payloads,
                          log=self._log(obj, "append", obj.current_epoch, issued_by))
            self.store.put(obj)
            return published

    def _republish(self, obj: StoredObject, stored: CloudCiphertext, metas: Tuple[GateMeta, ...],
                   kind: str, issued_by: str, gate_ids: Sequence[str] = ()) -> StoredObject:
        """Bump the epoch and re-encrypt the whole stored form (or withdraw it if no gate is left)."""
        owner = self._owner(obj.owner_id)
        epoch = obj.current_epoch + 1
        log = self._log(obj, kind, epoch, issued_by, gate_ids)
        if stored.gates:
            rng = self.rng_for(obj.object_id, len(obj.log))
            published = reencrypt(self.pk, owner.pp, owner.rk, epoch, stored, rng)
        else:
            published = None
            log = log + (UpdateRecord(len(log), self.clock(), "withdraw", epoch, issued_by),)
        return replace(obj, stored=stored, gates=metas, current_epoch=epoch,
                       published=published, log=log)

    def _delete(self, obj: StoredObject, gate_ids: Sequence[str], kind: str,
                issued_by: str) -> StoredObject:
        drop = {obj.gate_index(g) for g in gate_ids}
        keep = [j for j in range(obj.stored.m) if j not in drop]
        stored = replace(obj.stored, gates=tuple(obj.stored.gates[j] for j in keep))
        metas = tuple(obj.gates[j] for j in keep)
        return self._republish(obj, stored, metas, kind, issued_by, gate_ids)

    def rotate(self, object_id: str, issued_by: str) -> Optional[UserCiphertext]:
        """Republish unchanged content at the next epoch (fresh randomness, new ``dk``)."""
        with self._lock(object_id):
            obj = self.store.get(object_id)
            if issued_by != "csp":
                self._authorize(obj, issued_by)
            obj = self._republish(obj, obj.stored, obj.gates, "rotate", issued_by)
            self.store.put(obj)
            return obj.published

    def delete_gate(self, object_id: str, gate_id: str, issued_by: str) -> Optional[UserCiphertext]:
        """Remove a gate and republish everything at the next epoch.

        Returns None when the last gate was removed: the object is then
        withdrawn until a gate is added again.
        """
        with self._lock(object_id):
            obj = self.store.get(object_id)
            self._authorize(obj, issued_by)
            obj = self._delete(obj, [gate_id], "delete", issued_by)
            self.store.put(obj)
            return obj.published

    def add_gate(self, object_id: str, pair: GatePair, issued_by: str,
                 expires_at: Optional[float] = None) -> Tuple[str, UserCiphertext]:
        """Append a freshly encrypted (epoch-0) gate; the epoch does not change."""
        with self._lock(object_id):
            obj = self.store.get(object_id)
            self._authorize(obj, issued_by)
            owner = self._owner(obj.owner_id)
            pair = GatePair(*pair)
            _check_same_shape([pair] if not obj.stored.gates else [obj.stored.gates[0], pair])
            gate_id = f"g{obj.next_gate}"
            stored = replace(obj.stored, gates=obj.stored.gates + (pair,))
            rng = self.rng_for(object_id, len(obj.log))
            if obj.published is None:
                published = reencrypt(self.pk, owner.pp, owner.rk, obj.current_epoch, stored, rng)
            else:
                (fresh,) = reencrypt_gates(self.pk, owner.pp, owner.rk, obj.current_epoch, [pair], rng)
                published = replace(obj.published, gates=obj.published.gates + (fresh,))
            obj = replace(
                obj, stored=stored, gates=obj.gates + (GateMeta(gate_id, expires_at),),
                published=published, next_gate=obj.next_gate + 1,
                log=self._log(obj, "add", obj.current_epoch, issued_by, [gate_id]),
            )
            self.store.put(obj)
            return gate_id, published

    def set_expiration(self, object_id: str, gate_id: str, expires_at: Optional[float],
                       issued_by: str) -> None:
        with self._lock(object_id):
            obj = self.store.get(object_id)
            self._authorize(obj, issued_by)
            j = obj.gate_index(gate_id)
            metas = list(obj.gates)
            metas[j] = GateMeta(gate_id, expires_at)
            self.store.put(replace(obj, gates=tuple(metas)))

    def sweep_expirations(self, now: Optional[float] = None) -> List[Tuple[str, str]]:
        """Delete every gate whose expiration is at or before ``now``.

        All expired gates of one object go in a single epoch bump.
        Returns the ``(object_id, gate_id)`` pairs removed.
        """
        now = self.clock() if now is None else now
        done: List[Tuple[str, str]] = []
        for object_id in self.store.ids():
            with self._lock(object_id):
                obj = self.store.get(object_id)
                expired = [g.gate_id for g in obj.gates if g.expires_at is not None and g.expires_at <= now]
                if not expired:
                    continue
                self.store.put(self._delete(obj, expired, "sweep", "expiration"))
                done += [(object_id, g) for g in expired]
        return done


def _check_same_shape(pairs: Iterable[GatePair]) -> None:
    shapes = {(ct.sizes, blind.sizes) for ct, blind in pairs}
    if len(shapes) != 1 or any(a != b for a, b in shapes):
        raise DimensionMismatch("gate components do not share one universe shape")
