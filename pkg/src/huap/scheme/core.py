"""The scheme's algorithms.

Roles: the attribute authority runs :func:`system_setup` and
:func:`attr_keygen`; a data owner runs :func:`owner_param_setup`,
:func:`reenc_keygen`, :func:`derive_dk` and :func:`anon_encrypt`; devices
run :func:`offline_encrypt` / :func:`online_encrypt`; the cloud runs
:func:`reencrypt`; data users run :func:`anon_decrypt`.

Every randomized function takes an explicit ``rng`` (``random.Random``
interface); pass ``secrets.SystemRandom()`` outside of tests.
"""

from __future__ import annotations

import random
from dataclasses import replace
from functools import reduce
from typing import Iterable, Optional, Sequence, Tuple

from ..algebra import (
    ATTR_TAG_DELTA,
    ATTR_TAG_HAT,
    ATTR_TAG_PLAIN,
    CONTEXT,
    GroupElem,
    Scalar,
    TargetElem,
    encode_attr_tag,
    hash_to_group,
    hash_to_scalar,
    map_target_to_group,
    pair,
    random_element,
    random_scalar,
    random_unit_product,
)
from ..policy import AndGate, AttributeList, Policy, check
from .types import (
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


class SchemeError(Exception):
    pass


class AccessDenied(SchemeError):
    """The key satisfies none of the ciphertext's gates."""


class OfflineCiphertextReused(SchemeError):
    pass


class DimensionMismatch(SchemeError, ValueError):
    pass


def _attr_hash(tag: int, i: int, value: str) -> GroupElem:
    return hash_to_group(encode_attr_tag(tag, i + 1, value))


def _prod(elems: Iterable[GroupElem]) -> GroupElem:
    return reduce(lambda a, b: a * b, elems)


# -- setup and keys -----------------------------------------------------------

def system_setup(rng: random.Random) -> Tuple[SystemPublicKey, SystemMasterKey]:
    g1, g2, g3, g4 = (random_element(rng) for _ in range(4))
    y = random_scalar(rng, nonzero=True)
    pk = SystemPublicKey(g=CONTEXT.generator, g1=g1, g2=g2, g3=g3, g4=g4, Y=pair(g1, g2) ** y)
    return pk, SystemMasterKey(y)


def owner_param_setup(
    pk: SystemPublicKey, rng: random.Random
) -> Tuple[DataPublicParams, DataSecretParams]:
    mk0, mk1, sk = (random_scalar(rng, nonzero=True) for _ in range(3))
    pp = DataPublicParams(Q0=pk.g3 ** sk, PP0=pair(pk.g3, pk.g4) ** mk0, PP1=pk.g3 ** mk1)
    return pp, DataSecretParams(mk0=mk0, mk1=mk1, sk=sk, SK1=pk.g4 ** mk0)


def attr_keygen(
    pk: SystemPublicKey, mk: SystemMasterKey, attrs: AttributeList, rng: random.Random
) -> AttrSecretKey:
    universe = attrs.universe
    check(universe, attrs)
    n = universe.n
    # shares r_i of the master secret: n - 1 free draws, the last one fixed
    r_parts = [random_scalar(rng) for _ in range(n - 1)]
    r_parts.append(mk.y - sum(r_parts, Scalar(0)))
    r_hat_parts = [random_scalar(rng) for _ in range(n)]
    r_hat = sum(r_hat_parts, Scalar(0))
    r, lam, lam_hat = (random_scalar(rng, nonzero=True) for _ in range(3))

    D_delta, D1, D1_hat = [], [], []
    for i in range(n):
        v = attrs.value(i)
        D_delta.append(pk.g2 ** r_hat_parts[i] * _attr_hash(ATTR_TAG_DELTA, i, v) ** r)
        D1.append(pk.g1 ** r_parts[i] * _attr_hash(ATTR_TAG_PLAIN, i, v) ** lam)
        D1_hat.append(pk.g2 ** r_parts[i] * _attr_hash(ATTR_TAG_HAT, i, v) ** lam_hat)
    return AttrSecretKey(
        sizes=universe.sizes,
        selections=attrs.selections,
        D0=pk.g2 ** lam,
        D0_hat=pk.g1 ** lam_hat,
        D_delta0=pk.g1 ** r,
        D_delta0_hat=pk.g2 ** (mk.y - r_hat),
        D_delta=tuple(D_delta),
        D1=tuple(D1),
        D1_hat=tuple(D1_hat),
    )


def check_attr_key(
    pk: SystemPublicKey, key: AttrSecretKey, attrs: AttributeList, rng: random.Random
) -> bool:
    """Self-test a key against its attribute list with a random probe exponent.

    Checks the matching identity ``e(g1^s, D^_d0 * prod D_d,i) / e(prod H(i|v)^s, D_d0) = Y^s``
    and the two analogous identities over ``D_i,1`` and ``D^_i,1``; the latter
    hold only if the key's master-secret shares sum to ``y``.
    """
    if key.selections != attrs.selections or key.sizes != attrs.universe.sizes:
        return False
    s = random_scalar(rng, nonzero=True)
    values = [attrs.value(i) for i in range(key.n)]
    target = pk.Y ** s

    h_delta = _prod(_attr_hash(ATTR_TAG_DELTA, i, v) for i, v in enumerate(values))
    delta_ok = (
        pair(pk.g1 ** s, key.D_delta0_hat * _prod(key.D_delta)) / pair(h_delta ** s, key.D_delta0)
        == target
    )
    h_plain = _prod(_attr_hash(ATTR_TAG_PLAIN, i, v) for i, v in enumerate(values))
    plain_ok = pair(pk.g2 ** s, _prod(key.D1)) / pair(h_plain ** s, key.D0) == target
    h_hat = _prod(_attr_hash(ATTR_TAG_HAT, i, v) for i, v in enumerate(values))
    hat_ok = pair(pk.g1 ** s, _prod(key.D1_hat)) / pair(h_hat ** s, key.D0_hat) == target
    return delta_ok and plain_ok and hat_ok


def reenc_keygen(rng: random.Random) -> ReencKey:
    return ReencKey(random_scalar(rng, nonzero=True))


def epoch_secret(rk: ReencKey, epoch: int) -> EpochSecret:
    """``S_l`` shared by owner and cloud; deterministic in ``(rk, epoch)``."""
    if epoch < 0:
        raise ValueError("epoch must be non-negative")
    return EpochSecret(epoch, hash_to_scalar(rk.s_cloud.to_bytes() + epoch.to_bytes(8, "big")))


def derive_dk(pp: DataPublicParams, sp: DataSecretParams, secret: EpochSecret) -> DataDecryptionKey:
    """``dk_l = g4^mk0 * g3^(sk*mk1) * g3^(mk1*S_l)``, computed as ``SK1 * PP1^(sk + S_l)``."""
    return DataDecryptionKey(sp.SK1 * pp.PP1 ** (sp.sk + secret.value), secret.epoch)


# -- device side --------------------------------------------------------------

def offline_encrypt(
    pk: SystemPublicKey, pp: DataPublicParams, rng: random.Random
) -> OfflineCiphertext:
    r_d = random_scalar(rng, nonzero=True)
    return OfflineCiphertext(U0=pk.g3 ** r_d, U1=pp.Q0 ** r_d, V0=pp.PP0 ** r_d)


def online_encrypt(
    message: TargetElem, offline: OfflineCiphertext, signature: Optional[bytes] = None
) -> MessageCiphertext:
    if offline.consumed:
        raise OfflineCiphertextReused("offline ciphertext was already used")
    offline.consumed = True
    return MessageCiphertext(U0=offline.U0, U1=offline.U1, V=message * offline.V0, signature=signature)


# -- owner side ---------------------------------------------------------------

def encrypt_gate(
    pk: SystemPublicKey, dk: GroupElem, gate: AndGate, rng: random.Random
) -> GatePair:
    """Encrypt ``dk`` under one AND-gate (epoch-0 form) together with its blind policy."""
    universe = gate.universe
    n = universe.n
    s1, s1p, s1pp, s2, s2pp = (random_scalar(rng, nonzero=True) for _ in range(5))
    sig_delta, sig0, sig1, sig0_p, sig1_p = (random_unit_product(rng, n) for _ in range(5))
    e1 = s1 - s1pp
    e2 = s2 - s2pp

    C_delta_it, C0_it, C0_hat_it, C0_it_p, C0_hat_it_p = [], [], [], [], []
    for i, size in enumerate(universe.sizes):
        rows = ([], [], [], [], [])
        for t in range(size):
            if gate.allows(i, t):
                v = universe.value(i, t)
                h_delta = _attr_hash(ATTR_TAG_DELTA, i, v)
                h0 = _attr_hash(ATTR_TAG_PLAIN, i, v)
                h1 = _attr_hash(ATTR_TAG_HAT, i, v)
                comps = (
                    sig_delta[i] * h_delta ** s1p,
                    sig0[i] * h0 ** s1pp,
                    sig1[i] * h1 ** e1,
                    sig0_p[i] * h0 ** s2pp,
                    sig1_p[i] * h1 ** e2,
                )
            else:
                comps = tuple(random_element(rng) for _ in range(5))
            for row, comp in zip(rows, comps):
                row.append(comp)
        for table, row in zip((C_delta_it, C0_it, C0_hat_it, C0_it_p, C0_hat_it_p), rows):
            table.append(tuple(row))

    ct = GateCiphertext(
        C_tilde=dk * map_target_to_group(pk.Y ** s1),
        C_delta=pk.Y ** s1p,
        C0_hat=pk.g1 ** s1p,
        C1=pk.g2 ** s1pp,
        C1_hat=pk.g1 ** e1,
        C_delta_it=tuple(C_delta_it),
        C0_it=tuple(C0_it),
        C0_hat_it=tuple(C0_hat_it),
    )
    blind = BlindGatePolicy(
        C_tilde_p=pk.Y ** s2,
        C1_p=pk.g2 ** s2pp,
        C1_hat_p=pk.g1 ** e2,
        C0_it_p=tuple(C0_it_p),
        C0_hat_it_p=tuple(C0_hat_it_p),
    )
    return GatePair(ct, blind)


def anon_encrypt(
    pk: SystemPublicKey,
    pp: DataPublicParams,
    sp: DataSecretParams,
    rk: ReencKey,
    policy: Policy,
    rng: random.Random,
    dk: Optional[DataDecryptionKey] = None,
) -> Tuple[GatePair, ...]:
    """Policy part (epoch 0) for ``policy``.

    ``dk`` may be passed when the owner has already derived ``dk_0``; it is
    the same for every policy the owner encrypts.
    """
    check(policy.universe, policy)
    if dk is None:
        dk = derive_dk(pp, sp, epoch_secret(rk, 0))
    elif dk.epoch != 0:
        raise ValueError("policies are encrypted under the epoch-0 decryption key")
    return tuple(encrypt_gate(pk, dk.element, gate, rng) for gate in policy.gates)


# -- cloud side ---------------------------------------------------------------

def reencrypt_messages(
    pk: SystemPublicKey,
    pp: DataPublicParams,
    rk: ReencKey,
    epoch: int,
    messages: Sequence[MessageCiphertext],
    rng: random.Random,
) -> Tuple[MessageCiphertext, ...]:
    s = epoch_secret(rk, epoch).value
    out = []
    for msg in messages:
        r = random_scalar(rng, nonzero=True)
        U0 = msg.U0 * pk.g3 ** r
        out.append(MessageCiphertext(
            U0=U0,
            U1=msg.U1 * pp.Q0 ** r * U0 ** s,
            V=msg.V * pp.PP0 ** r,
        ))
    return tuple(out)


def reencrypt_gates(
    pk: SystemPublicKey,
    pp: DataPublicParams,
    rk: ReencKey,
    epoch: int,
    gates: Sequence[GatePair],
    rng: random.Random,
) -> Tuple[GatePair, ...]:
    """Move epoch-0 gate pairs to ``epoch``. Always start from the stored epoch-0 form."""
    shift = pp.PP1 ** (epoch_secret(rk, epoch).value - epoch_secret(rk, 0).value)
    out = []
    for ct, blind in gates:
        r_w = random_scalar(rng, nonzero=True)
        r_b = random_scalar(rng, nonzero=True)
        mask = pk.Y ** r_w
        new_blind = BlindGatePolicy(
            C_tilde_p=mask * blind.C_tilde_p ** r_b,
            C1_p=blind.C1_p ** r_b,
            C1_hat_p=blind.C1_hat_p ** r_b,
            C0_it_p=tuple(tuple(c ** r_b for c in row) for row in blind.C0_it_p),
            C0_hat_it_p=tuple(tuple(c ** r_b for c in row) for row in blind.C0_hat_it_p),
        )
        new_ct = replace(ct, C_tilde=map_target_to_group(mask) * shift * ct.C_tilde)
        out.append(GatePair(new_ct, new_blind))
    return tuple(out)


def reencrypt(
    pk: SystemPublicKey,
    pp: DataPublicParams,
    rk: ReencKey,
    epoch: int,
    ct: CloudCiphertext,
    rng: random.Random,
) -> UserCiphertext:
    if epoch < 1:
        raise ValueError("published epochs start at 1; epoch 0 is the stored form")
    return UserCiphertext(
        object_id=ct.object_id,
        epoch=epoch,
        messages=reencrypt_messages(pk, pp, rk, epoch, ct.messages, rng),
        gates=reencrypt_gates(pk, pp, rk, epoch, ct.gates, rng),
    )


# -- user side ----------------------------------------------------------------

def _check_dims(key: AttrSecretKey, sizes: Tuple[int, ...]) -> None:
    if key.sizes != sizes:
        raise DimensionMismatch(f"key universe shape {key.sizes} != ciphertext shape {sizes}")


def match_gate(key: AttrSecretKey, ct: GateCiphertext) -> bool:
    """Matching test for one gate: two pairings, no decryption."""
    _check_dims(key, ct.sizes)
    picked = _prod(ct.C_delta_it[i][t] for i, t in enumerate(key.selections))
    lhs = pair(ct.C0_hat, key.D_delta0_hat * _prod(key.D_delta)) / pair(picked, key.D_delta0)
    return lhs == ct.C_delta


def decrypt_gate(
    key: AttrSecretKey,
    ct: GateCiphertext,
    blind: Optional[BlindGatePolicy] = None,
    epoch: int = 0,
) -> DataDecryptionKey:
    """Recover ``dk`` from a gate the key matches.

    With ``blind`` (published form) this costs eight pairings; without it
    the gate is read as the stored epoch-0 form. No integrity check: a key
    that does not match yields a meaningless element.
    """
    _check_dims(key, ct.sizes)
    sel = key.selections
    D1 = _prod(key.D1)
    D1_hat = _prod(key.D1_hat)
    C0 = _prod(ct.C0_it[i][t] for i, t in enumerate(sel))
    C0_hat = _prod(ct.C0_hat_it[i][t] for i, t in enumerate(sel))
    y_s1 = (pair(ct.C1, D1) * pair(ct.C1_hat, D1_hat)) / (pair(C0, key.D0) * pair(C0_hat, key.D0_hat))
    if blind is None:
        return DataDecryptionKey(ct.C_tilde / map_target_to_group(y_s1), epoch)
    _check_dims(key, blind.sizes)
    C0_p = _prod(blind.C0_it_p[i][t] for i, t in enumerate(sel))
    C0_hat_p = _prod(blind.C0_hat_it_p[i][t] for i, t in enumerate(sel))
    y_rw = (blind.C_tilde_p * pair(C0_p, key.D0) * pair(C0_hat_p, key.D0_hat)) / (
        pair(blind.C1_p, D1) * pair(blind.C1_hat_p, D1_hat)
    )
    mask = map_target_to_group(y_rw) * map_target_to_group(y_s1)
    return DataDecryptionKey(ct.C_tilde / mask, epoch)


def open_message(pp: DataPublicParams, msg: MessageCiphertext, dk: DataDecryptionKey) -> TargetElem:
    """``M = V / (e(U0, dk) / e(PP1, U1))``."""
    return msg.V / (pair(msg.U0, dk.element) / pair(pp.PP1, msg.U1))


def find_matching_gate(key: AttrSecretKey, uct: UserCiphertext) -> Optional[int]:
    for j, (ct, _) in enumerate(uct.gates):
        if match_gate(key, ct):
            return j
    return None


def recover_dk(key: AttrSecretKey, uct: UserCiphertext) -> DataDecryptionKey:
    j = find_matching_gate(key, uct)
    if j is None:
        raise AccessDenied("access denied (no matching gate)")
    ct, blind = uct.gates[j]
    return decrypt_gate(key, ct, blind, uct.epoch)


def anon_decrypt(
    pp: DataPublicParams, uct: UserCiphertext, key: AttrSecretKey, index: int = 0
) -> TargetElem:
    """Recover message ``index`` of a published ciphertext or raise :class:`AccessDenied`."""
    return open_message(pp, uct.messages[index], recover_dk(key, uct))
