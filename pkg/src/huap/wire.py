"""Canonical binary encoding for keys, parameters and ciphertexts.

Every blob is an envelope::

    magic "HUAP" | version u8 | type u8 | n u16 | n_i u16 * n | m u16 | body

``n``/``n_i``/``m`` are zero or absent (``n = 0``) for types that carry no
universe shape. The body is a fixed sequence of elements: 65-byte
compressed points, 128-byte target-group elements, 32-byte scalars and a
few small integers. Files on disk use the ``.huap`` extension.

Decoding checks subgroup membership of every element unless ``verify``
is false; only skip it for blobs this process wrote itself.
"""

from __future__ import annotations

import struct
from dataclasses import dataclass
from typing import Dict, Optional, Sequence, Tuple

from .algebra import DecodeError, GroupElem, Scalar, TargetElem
from .algebra.params import POINT_BYTES, SCALAR_BYTES, TARGET_BYTES
from .scheme.types import (
    AttrSecretKey,
    BlindGatePolicy,
    CloudCiphertext,
    DataDecryptionKey,
    DataPublicParams,
    DataSecretParams,
    EpochSecret,
    GateCiphertext,
    GatePair,
    MessageCiphertext,
    OfflineCiphertext,
    ReencKey,
    SystemMasterKey,
    SystemPublicKey,
    UserCiphertext,
)

MAGIC = b"HUAP"
VERSION = 1
FILE_EXTENSION = ".huap"


class WireError(DecodeError):
    """Malformed, truncated or mismatched envelope."""


class PolicyPart(tuple):
    """Tuple of :class:`GatePair` encoded on its own (what ``anon_encrypt`` returns)."""


TYPE_TAGS: Dict[type, int] = {
    SystemPublicKey: 0x01,
    SystemMasterKey: 0x02,
    DataPublicParams: 0x03,
    DataSecretParams: 0x04,
    ReencKey: 0x05,
    EpochSecret: 0x06,
    DataDecryptionKey: 0x07,
    AttrSecretKey: 0x10,
    OfflineCiphertext: 0x20,
    MessageCiphertext: 0x21,
    PolicyPart: 0x22,
    CloudCiphertext: 0x23,
    UserCiphertext: 0x24,
}
_BY_TAG = {v: k for k, v in TYPE_TAGS.items()}


# -- element walk shared by encode and measure --------------------------------

def _gate_items(pair: GatePair) -> list:
    ct, blind = pair
    items = [("G", ct.C_tilde), ("GT", ct.C_delta), ("G", ct.C0_hat), ("G", ct.C1), ("G", ct.C1_hat)]
    for table in (ct.C_delta_it, ct.C0_it, ct.C0_hat_it):
        items += [("G", c) for row in table for c in row]
    items += [("GT", blind.C_tilde_p), ("G", blind.C1_p), ("G", blind.C1_hat_p)]
    for table in (blind.C0_it_p, blind.C0_hat_it_p):
        items += [("G", c) for row in table for c in row]
    return items


def _message_items(msg: MessageCiphertext) -> list:
    sig = msg.signature
    return [("G", msg.U0), ("G", msg.U1), ("GT", msg.V),
            ("u8", 0 if sig is None else 1)] + ([] if sig is None else [("bytes", sig)])


def _items(obj) -> list:
    """Body of ``obj`` as ``(kind, value)`` pairs in wire order."""
    if isinstance(obj, SystemPublicKey):
        return [("G", obj.g), ("G", obj.g1), ("G", obj.g2), ("G", obj.g3), ("G", obj.g4), ("GT", obj.Y)]
    if isinstance(obj, SystemMasterKey):
        return [("S", obj.y)]
    if isinstance(obj, DataPublicParams):
        return [("G", obj.Q0), ("GT", obj.PP0), ("G", obj.PP1)]
    if isinstance(obj, DataSecretParams):
        return [("S", obj.mk0), ("S", obj.mk1), ("S", obj.sk), ("G", obj.SK1)]
    if isinstance(obj, ReencKey):
        return [("S", obj.s_cloud)]
    if isinstance(obj, EpochSecret):
        return [("u64", obj.epoch), ("S", obj.value)]
    if isinstance(obj, DataDecryptionKey):
        return [("u64", obj.epoch), ("G", obj.element)]
    if isinstance(obj, AttrSecretKey):
        items = [("u16", k) for k in obj.selections]
        items += [("G", obj.D0), ("G", obj.D0_hat), ("G", obj.D_delta0), ("G", obj.D_delta0_hat)]
        for vec in (obj.D_delta, obj.D1, obj.D1_hat):
            items += [("G", d) for d in vec]
        return items
    if isinstance(obj, OfflineCiphertext):
        return [("G", obj.U0), ("G", obj.U1), ("GT", obj.V0), ("u8", int(obj.consumed))]
    if isinstance(obj, MessageCiphertext):
        return _message_items(obj)
    if isinstance(obj, PolicyPart):
        return [item for pair in obj for item in _gate_items(pair)]
    if isinstance(obj, (CloudCiphertext, UserCiphertext)):
        items = [("str", obj.object_id)]
        if isinstance(obj, UserCiphertext):
            items.append(("u64", obj.epoch))
        items.append(("u16", len(obj.messages)))
        for msg in obj.messages:
            items += _message_items(msg)
        for pair in obj.gates:
            items += _gate_items(pair)
        return items
    raise TypeError(f"no wire format for {type(obj).__name__}")


def _dims(obj) -> Tuple[Tuple[int, ...], int]:
    if isinstance(obj, AttrSecretKey):
        return obj.sizes, 0
    if isinstance(obj, PolicyPart):
        return (obj[0].gate.sizes if obj else ()), len(obj)
    if isinstance(obj, (CloudCiphertext, UserCiphertext)):
        return (obj.gates[0].gate.sizes if obj.gates else ()), len(obj.gates)
    return (), 0


def _check_shape(obj) -> None:
    sizes, _ = _dims(obj)
    pairs = obj if isinstance(obj, PolicyPart) else getattr(obj, "gates", ())
    for ct, blind in pairs:
        if ct.sizes != sizes or blind.sizes != sizes:
            raise WireError("gates in one policy part have different universe shapes")
        for table in (ct.C0_it, ct.C0_hat_it, blind.C0_hat_it_p):
            if tuple(len(r) for r in table) != sizes:
                raise WireError("ragged component table")
    if isinstance(obj, AttrSecretKey):
        n = len(obj.sizes)
        if not (len(obj.selections) == len(obj.D_delta) == len(obj.D1) == len(obj.D1_hat) == n):
            raise WireError("key vectors do not match its universe shape")


# -- encode -------------------------------------------------------------------

def _encode_item(kind: str, value) -> bytes:
    if kind in ("G", "GT", "S"):
        return value.to_bytes()
    if kind == "u8":
        return struct.pack(">B", value)
    if kind == "u16":
        return struct.pack(">H", value)
    if kind == "u64":
        return struct.pack(">Q", value)
    if kind == "bytes":
        return struct.pack(">I", len(value)) + bytes(value)
    if kind == "str":
        raw = value.encode("utf-8")
        return struct.pack(">H", len(raw)) + raw
    raise AssertionError(kind)


def _header(tag: int, sizes: Sequence[int], m: int) -> bytes:
    return (MAGIC + struct.pack(">BBH", VERSION, tag, len(sizes))
            + b"".join(struct.pack(">H", k) for k in sizes) + struct.pack(">H", m))


def encode(obj) -> bytes:
    if isinstance(obj, tuple) and not isinstance(obj, PolicyPart) and all(isinstance(p, GatePair) for p in obj):
        obj = PolicyPart(obj)
    tag = TYPE_TAGS.get(type(obj))
    if tag is None:
        raise TypeError(f"no wire format for {type(obj).__name__}")
    _check_shape(obj)
    sizes, m = _dims(obj)
    return _header(tag, sizes, m) + b"".join(_encode_item(k, v) for k, v in _items(obj))


# -- decode -------------------------------------------------------------------

class _Reader:
    def __init__(self, data: bytes, verify: bool):
        self.data = memoryview(data)
        self.pos = 0
        self.verify = verify

    def take(self, size: int) -> bytes:
        end = self.pos + size
        if end > len(self.data):
            raise WireError("truncated input")
        chunk = bytes(self.data[self.pos:end])
        self.pos = end
        return chunk

    def u8(self) -> int:
        return self.take(1)[0]

    def u16(self) -> int:
        return struct.unpack(">H", self.take(2))[0]

    def u64(self) -> int:
        return struct.unpack(">Q", self.take(8))[0]

    def raw(self) -> bytes:
        return self.take(struct.unpack(">I", self.take(4))[0])

    def text(self) -> str:
        try:
            return self.take(self.u16()).decode("utf-8")
        except UnicodeDecodeError:
            raise WireError("object id is not UTF-8") from None

    def g(self) -> GroupElem:
        return GroupElem.from_bytes(self.take(POINT_BYTES), check_subgroup=self.verify)

    def gt(self) -> TargetElem:
        return TargetElem.from_bytes(self.take(TARGET_BYTES), check_subgroup=self.verify)

    def s(self) -> Scalar:
        return Scalar.from_bytes(self.take(SCALAR_BYTES))

    def gs(self, count: int) -> tuple:
        return tuple(self.g() for _ in range(count))

    def table(self, sizes: Sequence[int]) -> tuple:
        return tuple(self.gs(k) for k in sizes)


def _read_message(r: _Reader) -> MessageCiphertext:
    U0, U1, V = r.g(), r.g(), r.gt()
    flag = r.u8()
    if flag not in (0, 1):
        raise WireError("bad signature flag")
    return MessageCiphertext(U0, U1, V, r.raw() if flag else None)


def _read_gate(r: _Reader, sizes: Sequence[int]) -> GatePair:
    ct = GateCiphertext(
        C_tilde=r.g(), C_delta=r.gt(), C0_hat=r.g(), C1=r.g(), C1_hat=r.g(),
        C_delta_it=r.table(sizes), C0_it=r.table(sizes), C0_hat_it=r.table(sizes),
    )
    blind = BlindGatePolicy(
        C_tilde_p=r.gt(), C1_p=r.g(), C1_hat_p=r.g(),
        C0_it_p=r.table(sizes), C0_hat_it_p=r.table(sizes),
    )
    return GatePair(ct, blind)


def _read_body(cls: type, r: _Reader, sizes: Tuple[int, ...], m: int):
    if cls is SystemPublicKey:
        return SystemPublicKey(r.g(), r.g(), r.g(), r.g(), r.g(), r.gt())
    if cls is SystemMasterKey:
        return SystemMasterKey(r.s())
    if cls is DataPublicParams:
        return DataPublicParams(r.g(), r.gt(), r.g())
    if cls is DataSecretParams:
        return DataSecretParams(r.s(), r.s(), r.s(), r.g())
    if cls is ReencKey:
        return ReencKey(r.s())
    if cls is EpochSecret:
        epoch = r.u64()
        return EpochSecret(epoch, r.s())
    if cls is DataDecryptionKey:
        epoch = r.u64()
        return DataDecryptionKey(r.g(), epoch)
    if cls is AttrSecretKey:
        n = len(sizes)
        selections = tuple(r.u16() for _ in range(n))
        if any(not 0 <= k < size for k, size in zip(selections, sizes)):
            raise WireError("key selection out of range")
        D0, D0_hat, D_delta0, D_delta0_hat = r.g(), r.g(), r.g(), r.g()
        return AttrSecretKey(sizes, selections, D0, D0_hat, D_delta0, D_delta0_hat,
                             r.gs(n), r.gs(n), r.gs(n))
    if cls is OfflineCiphertext:
        U0, U1, V0 = r.g(), r.g(), r.gt()
        flag = r.u8()
        if flag not in (0, 1):
            raise WireError("bad consumed flag")
        return OfflineCiphertext(U0, U1, V0, bool(flag))
    if cls is MessageCiphertext:
        return _read_message(r)
    if cls is PolicyPart:
        return PolicyPart(_read_gate(r, sizes) for _ in range(m))
    if cls in (CloudCiphertext, UserCiphertext):
        object_id = r.text()
        epoch = r.u64() if cls is UserCiphertext else None
        messages = tuple(_read_message(r) for _ in range(r.u16()))
        gates = tuple(_read_gate(r, sizes) for _ in range(m))
        if cls is UserCiphertext:
            return UserCiphertext(object_id, epoch, messages, gates)
        return CloudCiphertext(object_id, messages, gates)
    raise AssertionError(cls)


def peek_type(data: bytes) -> type:
    if len(data) < 6 or data[:4] != MAGIC:
        raise WireError("bad magic")
    if data[4] != VERSION:
        raise WireError(f"unsupported format version {data[4]}")
    cls = _BY_TAG.get(data[5])
    if cls is None:
        raise WireError(f"unknown type tag {data[5]:#04x}")
    return cls


def decode(data: bytes, expect: Optional[type] = None, verify: bool = True):
    """Parse an envelope; ``expect`` rejects blobs of any other type."""
    cls = peek_type(data)
    if expect is not None:
        want = PolicyPart if expect is tuple else expect
        if cls is not want:
            raise WireError(f"expected {want.__name__}, got {cls.__name__}")
    r = _Reader(data, verify)
    r.take(6)
    sizes = tuple(r.u16() for _ in range(r.u16()))
    m = r.u16()
    if any(k == 0 for k in sizes):
        raise WireError("attribute with no values")
    needs_shape = cls in (AttrSecretKey, PolicyPart, CloudCiphertext, UserCiphertext)
    if needs_shape and not sizes:
        raise WireError(f"{cls.__name__} needs a universe shape")
    if not needs_shape and (sizes or m):
        raise WireError(f"{cls.__name__} carries no universe shape")
    if cls is AttrSecretKey and m:
        raise WireError("attribute key carries no gate count")
    if cls in (PolicyPart, CloudCiphertext, UserCiphertext) and m < 1:
        raise WireError("policy part needs at least one gate")
    obj = _read_body(cls, r, sizes, m)
    if r.pos != len(data):
        raise WireError(f"{len(data) - r.pos} trailing bytes")
    return obj


# -- measure ------------------------------------------------------------------

@dataclass(frozen=True)
class SizeReport:
    g: int
    gt: int
    scalars: int
    total_bytes: int

    def as_dict(self) -> dict:
        return {"G": self.g, "GT": self.gt, "scalars": self.scalars, "bytes": self.total_bytes}


def measure(obj) -> SizeReport:
    """Logical element counts of ``obj``'s body, taken from its structure."""
    if isinstance(obj, tuple) and not isinstance(obj, PolicyPart):
        obj = PolicyPart(obj)
    counts = {"G": 0, "GT": 0, "S": 0}
    for kind, _ in _items(obj):
        if kind in counts:
            counts[kind] += 1
    return SizeReport(counts["G"], counts["GT"], counts["S"], len(encode(obj)))


def layout(obj) -> Tuple[Tuple[str, int], ...]:
    """``(kind, encoded length)`` of every body item in wire order.

    Two objects with equal layouts are indistinguishable by position:
    the same kind of element sits at every byte offset.
    """
    if isinstance(obj, tuple) and not isinstance(obj, PolicyPart):
        obj = PolicyPart(obj)
    return tuple((kind, len(_encode_item(kind, value))) for kind, value in _items(obj))


def policy_part(obj) -> PolicyPart:
    """The policy part of a stored/published ciphertext as a standalone object."""
    return PolicyPart(obj.gates)


def message_part(obj, index: int = 0) -> MessageCiphertext:
    return obj.messages[index]
