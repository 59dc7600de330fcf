"""Key, parameter and ciphertext records.

Field names follow the usual notation of the construction: ``_hat`` marks a
hatted component, ``_p`` a primed one (blind-policy side), ``_it`` a
per-(attribute, value) table indexed ``[i][t]``.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import NamedTuple, Optional, Tuple

from ..algebra import GroupElem, Scalar, TargetElem

Table = Tuple[Tuple[GroupElem, ...], ...]


@dataclass(frozen=True)
class SystemPublicKey:
    g: GroupElem
    g1: GroupElem
    g2: GroupElem
    g3: GroupElem
    g4: GroupElem
    Y: TargetElem


@dataclass(frozen=True)
class SystemMasterKey:
    y: Scalar


@dataclass(frozen=True)
class DataPublicParams:
    Q0: GroupElem
    PP0: TargetElem
    PP1: GroupElem


@dataclass(frozen=True)
class DataSecretParams:
    mk0: Scalar
    mk1: Scalar
    sk: Scalar
    SK1: GroupElem


@dataclass(frozen=True)
class ReencKey:
    s_cloud: Scalar


@dataclass(frozen=True)
class EpochSecret:
    epoch: int
    value: Scalar


@dataclass(frozen=True)
class AttrSecretKey:
    """Key for one attribute list; ``selections[i]`` is the value index held for attribute i."""

    sizes: Tuple[int, ...]
    selections: Tuple[int, ...]
    D0: GroupElem
    D0_hat: GroupElem
    D_delta0: GroupElem
    D_delta0_hat: GroupElem
    D_delta: Tuple[GroupElem, ...]
    D1: Tuple[GroupElem, ...]
    D1_hat: Tuple[GroupElem, ...]

    @property
    def n(self) -> int:
        return len(self.selections)


@dataclass
class OfflineCiphertext:
    """Precomputed message mask. Single use: ``consumed`` flips on online encryption."""

    U0: GroupElem
    U1: GroupElem
    V0: TargetElem
    consumed: bool = False


@dataclass(frozen=True)
class MessageCiphertext:
    U0: GroupElem
    U1: GroupElem
    V: TargetElem
    # Reserved for a device signature; never produced or checked here.
    signature: Optional[bytes] = None


@dataclass(frozen=True)
class GateCiphertext:
    """Data decryption key encrypted under one AND-gate."""

    C_tilde: GroupElem
    C_delta: TargetElem
    C0_hat: GroupElem
    C1: GroupElem
    C1_hat: GroupElem
    C_delta_it: Table
    C0_it: Table
    C0_hat_it: Table

    @property
    def sizes(self) -> Tuple[int, ...]:
        return tuple(len(row) for row in self.C_delta_it)


@dataclass(frozen=True)
class BlindGatePolicy:
    """Gate-shaped carrier that lets the cloud hand a fresh mask to matching users."""

    C_tilde_p: TargetElem
    C1_p: GroupElem
    C1_hat_p: GroupElem
    C0_it_p: Table
    C0_hat_it_p: Table

    @property
    def sizes(self) -> Tuple[int, ...]:
        return tuple(len(row) for row in self.C0_it_p)


class GatePair(NamedTuple):
    gate: GateCiphertext
    blind: BlindGatePolicy


@dataclass(frozen=True)
class CloudCiphertext:
    """What the cloud stores: message parts plus the epoch-0 policy part.

    Several message parts may share one policy part when they come from
    devices provisioned with the same owner parameters.
    """

    object_id: str
    messages: Tuple[MessageCiphertext, ...]
    gates: Tuple[GatePair, ...]

    @property
    def m(self) -> int:
        return len(self.gates)


@dataclass(frozen=True)
class UserCiphertext:
    """Re-encrypted form published to data users for epoch ``epoch``."""

    object_id: str
    epoch: int
    messages: Tuple[MessageCiphertext, ...]
    gates: Tuple[GatePair, ...]

    @property
    def m(self) -> int:
        return len(self.gates)


@dataclass(frozen=True)
class DataDecryptionKey:
    element: GroupElem
    epoch: int = field(default=0)
