"""Compiled-in parameters of the type-1 (symmetric) pairing group.

The curve is the supersingular curve ``y^2 = x^3 + x`` over ``F_p`` with
``p = 3 (mod 4)``, so ``#E(F_p) = p + 1`` and the embedding degree is 2.
Source and target groups have prime order ``ORDER = 2^159 + 2^107 + 1``.

``COFACTOR`` is derived from SHAKE-256 so that ``FIELD_PRIME`` has no
special (sparse) form::

    for ctr in count():
        d = shake_256(b"huap/ss512/cofactor" + ctr.to_bytes(4, "big")).digest(45)
        k = (int.from_bytes(d, "big") >> 9) | (1 << 350)
        if is_prime(4 * k * ORDER - 1):
            break                                  # ctr == 51

``tests/test_algebra.py`` re-runs this derivation.
"""

from gmpy2 import mpz

ORDER = mpz(2) ** 159 + mpz(2) ** 107 + 1

COFACTOR = mpz(
    0x15F7E0E17A56AC1D45B8D063F7CABBF3648D2031C0C2A330E84EEA2C90AF2BB2692D52D694130AB5717D9F0F4
)

FIELD_PRIME = COFACTOR * ORDER - 1

COFACTOR_SEED = b"huap/ss512/cofactor"
COFACTOR_COUNTER = 51

FIELD_BYTES = 64
SCALAR_BYTES = 32
POINT_BYTES = 1 + FIELD_BYTES
TARGET_BYTES = 2 * FIELD_BYTES
