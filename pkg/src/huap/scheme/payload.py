"""Bulk data under a ``G_T`` message key (KEM/DEM).

The scheme encrypts a random ``M`` in ``G_T``; the payload itself goes
through AES-256-GCM with a key derived from ``M``'s canonical encoding.
"""

from __future__ import annotations

import os
from typing import Optional

from cryptography.exceptions import InvalidTag
from cryptography.hazmat.primitives import hashes
from cryptography.hazmat.primitives.ciphers.aead import AESGCM
from cryptography.hazmat.primitives.kdf.hkdf import HKDF

from ..algebra import TargetElem

_VERSION = b"\x01"
_NONCE_BYTES = 12


class PayloadError(ValueError):
    """Sealed payload is malformed, tampered with, or opened with the wrong key."""


def _key(message_key: TargetElem) -> bytes:
    return HKDF(
        algorithm=hashes.SHA256(), length=32, salt=None, info=b"HUAP-v1/payload-key"
    ).derive(message_key.to_bytes())


def seal_payload(message_key: TargetElem, plaintext: bytes, aad: bytes = b"",
                 nonce: Optional[bytes] = None) -> bytes:
    """AES-GCM under a key bound to ``message_key``.

    A fresh ``message_key`` is drawn per object, so a caller-supplied nonce
    (for reproducible runs) cannot collide under one key.
    """
    if nonce is None:
        nonce = os.urandom(_NONCE_BYTES)
    elif len(nonce) != _NONCE_BYTES:
        raise ValueError(f"nonce must be {_NONCE_BYTES} bytes")
    return _VERSION + nonce + AESGCM(_key(message_key)).encrypt(nonce, plaintext, _VERSION + aad)


def open_payload(message_key: TargetElem, sealed: bytes, aad: bytes = b"") -> bytes:
    if len(sealed) < 1 + _NONCE_BYTES + 16 or sealed[:1] != _VERSION:
        raise PayloadError("malformed sealed payload")
    nonce = sealed[1:1 + _NONCE_BYTES]
    try:
        return AESGCM(_key(message_key)).decrypt(nonce, sealed[1 + _NONCE_BYTES:], _VERSION + aad)
    except InvalidTag:
        raise PayloadError("payload authentication failed") from None
