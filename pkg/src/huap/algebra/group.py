"""Symmetric pairing group ``e: G x G -> G_T`` with counted operations.

``G`` is written multiplicatively even though it is an elliptic-curve
group underneath, so scheme code reads like the algebra it implements::

    Y = pair(g1, g2) ** y
    D = g1 ** r_i * hash_to_group(tag) ** lam
"""

from __future__ import annotations

import hashlib
import random
import secrets
import struct
from dataclasses import dataclass
from functools import lru_cache
from typing import Union

from gmpy2 import mpz

from . import curve
from .metrics import record
from .params import FIELD_BYTES, FIELD_PRIME, ORDER, POINT_BYTES, SCALAR_BYTES, TARGET_BYTES


class DecodeError(ValueError):
    """Bytes do not encode a valid scalar or group element."""


class Scalar:
    """Element of ``Z_p`` (``p`` is the prime group order)."""

    __slots__ = ("value",)

    def __init__(self, value: int):
        self.value = int(int(value) % ORDER)

    def __add__(self, other: Union["Scalar", int]) -> "Scalar":
        return Scalar(self.value + int(other))

    __radd__ = __add__

    def __sub__(self, other: Union["Scalar", int]) -> "Scalar":
        return Scalar(self.value - int(other))

    def __rsub__(self, other: int) -> "Scalar":
        return Scalar(int(other) - self.value)

    def __mul__(self, other: Union["Scalar", int]) -> "Scalar":
        return Scalar(self.value * int(other))

    __rmul__ = __mul__

    def __neg__(self) -> "Scalar":
        return Scalar(-self.value)

    def inverse(self) -> "Scalar":
        if self.value == 0:
            raise ZeroDivisionError("zero has no inverse in Z_p")
        return Scalar(pow(self.value, -1, ORDER))

    def __int__(self) -> int:
        return self.value

    __index__ = __int__

    def __eq__(self, other: object) -> bool:
        if isinstance(other, Scalar):
            return self.value == other.value
        if isinstance(other, int):
            return self.value == other % ORDER
        return NotImplemented

    def __hash__(self) -> int:
        return hash(("Scalar", self.value))

    def __bool__(self) -> bool:
        return self.value != 0

    def __repr__(self) -> str:
        return f"Scalar({self.value:#x})"

    def to_bytes(self) -> bytes:
        return self.value.to_bytes(SCALAR_BYTES, "big")

    @classmethod
    def from_bytes(cls, data: bytes) -> "Scalar":
        if len(data) != SCALAR_BYTES:
            raise DecodeError(f"scalar must be {SCALAR_BYTES} bytes, got {len(data)}")
        value = int.from_bytes(data, "big")
        if value >= ORDER:
            raise DecodeError("scalar out of range")
        return cls(value)


class GroupElem:
    """Element of the source group ``G``."""

    __slots__ = ("_pt",)

    def __init__(self, pt: curve.Point):
        self._pt = pt

    @classmethod
    def identity(cls) -> "GroupElem":
        return cls(None)

    def is_identity(self) -> bool:
        return self._pt is None

    def __mul__(self, other: "GroupElem") -> "GroupElem":
        record("MG")
        return GroupElem(curve.add(self._pt, other._pt))

    def __truediv__(self, other: "GroupElem") -> "GroupElem":
        record("MG")
        return GroupElem(curve.add(self._pt, curve.neg(other._pt)))

    def __pow__(self, k: Union[Scalar, int]) -> "GroupElem":
        record("EG")
        return GroupElem(curve.mul(self._pt, int(k)))

    def inverse(self) -> "GroupElem":
        return GroupElem(curve.neg(self._pt))

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, GroupElem):
            return NotImplemented
        return self._pt == other._pt

    def __hash__(self) -> int:
        return hash(("G", self._pt))

    def __repr__(self) -> str:
        if self._pt is None:
            return "GroupElem(1)"
        return f"GroupElem({int(self._pt[0]) & 0xFFFFFFFF:08x}..)"

    def to_bytes(self) -> bytes:
        if self._pt is None:
            return bytes(POINT_BYTES)
        x, y = self._pt
        return bytes([2 | int(y & 1)]) + int(x).to_bytes(FIELD_BYTES, "big")

    @classmethod
    def from_bytes(cls, data: bytes, check_subgroup: bool = True) -> "GroupElem":
        if len(data) != POINT_BYTES:
            raise DecodeError(f"group element must be {POINT_BYTES} bytes, got {len(data)}")
        prefix = data[0]
        x = int.from_bytes(data[1:], "big")
        if prefix == 0:
            if x:
                raise DecodeError("malformed identity encoding")
            return cls(None)
        if prefix not in (2, 3) or x >= FIELD_PRIME:
            raise DecodeError("malformed point encoding")
        pt = curve.lift_x(x, prefix == 3)
        if pt is None:
            raise DecodeError("x-coordinate is not on the curve")
        if check_subgroup and curve.mul_raw(pt, ORDER) is not None:
            raise DecodeError("point is outside the prime-order subgroup")
        return cls(pt)


class TargetElem:
    """Element of the target group ``G_T`` (order-``p`` subgroup of ``F_q^2``)."""

    __slots__ = ("_v",)

    def __init__(self, v: curve.Fp2):
        self._v = v

    @classmethod
    def identity(cls) -> "TargetElem":
        return cls(curve.FP2_ONE)

    def is_identity(self) -> bool:
        return self._v == curve.FP2_ONE

    def __mul__(self, other: "TargetElem") -> "TargetElem":
        record("MGT")
        return TargetElem(curve.fp2_mul(self._v, other._v))

    def __truediv__(self, other: "TargetElem") -> "TargetElem":
        record("MGT")
        return TargetElem(curve.fp2_mul(self._v, curve.fp2_conj(other._v)))

    def __pow__(self, k: Union[Scalar, int]) -> "TargetElem":
        record("EGT")
        return TargetElem(curve.unitary_pow(self._v, int(k) % ORDER))

    def inverse(self) -> "TargetElem":
        return TargetElem(curve.fp2_conj(self._v))

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, TargetElem):
            return NotImplemented
        return self._v == other._v

    def __hash__(self) -> int:
        return hash(("GT", self._v))

    def __repr__(self) -> str:
        return f"TargetElem({int(self._v[0]) & 0xFFFFFFFF:08x}..)"

    def to_bytes(self) -> bytes:
        a, b = self._v
        return int(a).to_bytes(FIELD_BYTES, "big") + int(b).to_bytes(FIELD_BYTES, "big")

    @classmethod
    def from_bytes(cls, data: bytes, check_subgroup: bool = True) -> "TargetElem":
        if len(data) != TARGET_BYTES:
            raise DecodeError(f"target element must be {TARGET_BYTES} bytes, got {len(data)}")
        a = int.from_bytes(data[:FIELD_BYTES], "big")
        b = int.from_bytes(data[FIELD_BYTES:], "big")
        if a >= FIELD_PRIME or b >= FIELD_PRIME:
            raise DecodeError("coordinate out of range")
        v = (mpz(a), mpz(b))
        if not curve.is_unitary(v):
            raise DecodeError("not an element of the target group")
        if check_subgroup and curve.unitary_pow(v, ORDER) != curve.FP2_ONE:
            raise DecodeError("element is outside the prime-order subgroup")
        return cls(v)


@dataclass(frozen=True)
class PairingContext:
    """The one compiled-in parameter set plus hash domain-separation tags."""

    order: int
    field_prime: int
    generator: GroupElem
    tag_h: bytes = b"HUAP-v1/H"
    tag_hhat: bytes = b"HUAP-v1/Hhat"
    tag_f: bytes = b"HUAP-v1/F"


CONTEXT = PairingContext(
    order=int(ORDER),
    field_prime=int(FIELD_PRIME),
    generator=GroupElem(curve.hash_to_point(b"HUAP-v1/generator")),
)


def pair(a: GroupElem, b: GroupElem) -> TargetElem:
    record("P")
    return TargetElem(curve.tate(a._pt, b._pt))


def _frame(tag: bytes, message: bytes) -> bytes:
    return bytes([len(tag)]) + tag + message


@lru_cache(maxsize=1 << 16)
def _hash_point(data: bytes) -> curve.Point:
    return curve.hash_to_point(data)


def hash_to_group(message: bytes) -> GroupElem:
    """Random-oracle map ``{0,1}* -> G``; never returns the identity."""
    record("HG")
    return GroupElem(_hash_point(_frame(CONTEXT.tag_h, message)))


def hash_to_scalar(message: bytes) -> Scalar:
    """Random-oracle map ``{0,1}* -> Z_p^*``."""
    digest = hashlib.sha512(_frame(CONTEXT.tag_hhat, message)).digest()
    return Scalar(int.from_bytes(digest, "big") % (ORDER - 1) + 1)


def map_target_to_group(z: TargetElem) -> GroupElem:
    """The masking map ``F: G_T -> G``."""
    record("HG")
    return GroupElem(_hash_point(_frame(CONTEXT.tag_f, z.to_bytes())))


ATTR_TAG_PLAIN = 0x00
ATTR_TAG_HAT = 0x01
ATTR_TAG_DELTA = 0x02


def encode_attr_tag(tag: int, index: int, value: str) -> bytes:
    """Injective framing of ``tag || i || v`` fed to ``hash_to_group``.

    ``index`` is the 1-based attribute position.
    """
    raw = value.encode("utf-8")
    return bytes([tag]) + struct.pack(">II", index, len(raw)) + raw


def default_rng() -> random.Random:
    return secrets.SystemRandom()


def random_scalar(rng: random.Random, nonzero: bool = False) -> Scalar:
    while True:
        value = rng.randrange(ORDER)
        if value or not nonzero:
            return Scalar(value)


def random_element(rng: random.Random) -> GroupElem:
    """Uniform element of ``G`` (counted as ``RG``, not as an exponentiation)."""
    record("RG")
    return GroupElem(curve.mul(CONTEXT.generator._pt, rng.randrange(ORDER)))


def random_target(rng: random.Random) -> TargetElem:
    """Uniform element of ``G_T``; used to draw fresh message keys."""
    return TargetElem(curve.unitary_pow(_gt_generator(), rng.randrange(ORDER)))


@lru_cache(maxsize=1)
def _gt_generator() -> curve.Fp2:
    g = CONTEXT.generator._pt
    return curve.tate(g, g)


def random_unit_product(rng: random.Random, count: int) -> list:
    """``count`` uniform elements of ``G`` conditioned on their product being 1.

    Each draw counts as ``RG``: the first ``count - 1`` exponents are uniform
    and the last cancels their sum, so every element is marginally uniform.
    """
    exps = [rng.randrange(ORDER) for _ in range(count - 1)]
    exps.append(-sum(exps) % ORDER)
    g = CONTEXT.generator._pt
    record("RG", count)
    return [GroupElem(curve.mul(g, x)) for x in exps]
