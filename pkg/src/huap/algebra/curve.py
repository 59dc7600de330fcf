"""Raw arithmetic on ``E: y^2 = x^3 + x`` over ``F_p`` and ``F_p^2 = F_p[i]``.

Points are affine ``(x, y)`` tuples of ``mpz``; ``None`` is the point at
infinity. ``F_p^2`` elements are ``(a, b)`` tuples meaning ``a + b*i`` with
``i^2 = -1``. Nothing here validates inputs or counts operations; the
``group`` module wraps these functions with both.
"""

from __future__ import annotations

import hashlib
from typing import Optional, Tuple

import gmpy2
from gmpy2 import mpz

from .params import COFACTOR, FIELD_BYTES, FIELD_PRIME, ORDER

P = FIELD_PRIME
_SQRT_EXP = (P + 1) // 4

Point = Optional[Tuple[mpz, mpz]]
Fp2 = Tuple[mpz, mpz]

FP2_ONE: Fp2 = (mpz(1), mpz(0))

_invert = gmpy2.invert


# -- points -------------------------------------------------------------------

def is_on_curve(pt: Point) -> bool:
    if pt is None:
        return True
    x, y = pt
    return (y * y - x * x * x - x) % P == 0


def neg(pt: Point) -> Point:
    if pt is None:
        return None
    return (pt[0], (-pt[1]) % P)


def double(pt: Point) -> Point:
    if pt is None:
        return None
    x, y = pt
    if y == 0:
        return None
    lam = (3 * x * x + 1) * _invert(2 * y, P) % P
    x3 = (lam * lam - 2 * x) % P
    return (x3, (lam * (x - x3) - y) % P)


def add(p1: Point, p2: Point) -> Point:
    if p1 is None:
        return p2
    if p2 is None:
        return p1
    x1, y1 = p1
    x2, y2 = p2
    if x1 == x2:
        if y1 == y2:
            return double(p1)
        return None
    lam = (y2 - y1) * _invert(x2 - x1, P) % P
    x3 = (lam * lam - x1 - x2) % P
    return (x3, (lam * (x1 - x3) - y1) % P)


def _wnaf(k: int, width: int = 4) -> list:
    digits = []
    mod = 1 << (width + 1)
    half = 1 << width
    while k:
        if k & 1:
            d = k & (mod - 1)
            if d >= half:
                d -= mod
            k -= d
        else:
            d = 0
        digits.append(d)
        k >>= 1
    return digits


def _to_affine(X, Y, Z) -> Point:
    if Z == 0:
        return None
    zi = _invert(Z, P)
    zi2 = zi * zi % P
    return (X * zi2 % P, Y * zi2 * zi % P)


def _mul_wnaf(pt: Point, k: int) -> Point:
    # Jacobian accumulator, affine odd multiples (mixed addition).
    twice = double(pt)
    odd = [pt]
    for _ in range(7):
        odd.append(add(odd[-1], twice))
    X, Y, Z = mpz(1), mpz(1), mpz(0)
    for d in reversed(_wnaf(k)):
        if Z:
            # doubling, a = 1
            XX = X * X % P
            YY = Y * Y % P
            ZZ = Z * Z % P
            S = 4 * X * YY % P
            M = (3 * XX + ZZ * ZZ) % P
            X3 = (M * M - 2 * S) % P
            Z = 2 * Y * Z % P
            Y = (M * (S - X3) - 8 * YY * YY) % P
            X = X3
        if d:
            q = odd[d >> 1] if d > 0 else neg(odd[(-d) >> 1])
            if q is None:
                continue
            x2, y2 = q
            if not Z:
                X, Y, Z = x2, y2, mpz(1)
                continue
            ZZ = Z * Z % P
            U2 = x2 * ZZ % P
            S2 = y2 * ZZ * Z % P
            H = (U2 - X) % P
            R = (S2 - Y) % P
            if H == 0:
                if R == 0:
                    X, Y, Z = _jac_double_affine(x2, y2)
                else:
                    X, Y, Z = mpz(1), mpz(1), mpz(0)
                continue
            HH = H * H % P
            HHH = H * HH % P
            V = X * HH % P
            X3 = (R * R - HHH - 2 * V) % P
            Y = (R * (V - X3) - Y * HHH) % P
            Z = Z * H % P
            X = X3
    return _to_affine(X, Y, Z)


def _jac_double_affine(x, y):
    d = double((x, y))
    if d is None:
        return mpz(1), mpz(1), mpz(0)
    return d[0], d[1], mpz(1)


class _FixedBaseTable:
    """4-bit fixed-window table: ``rows[j][d-1] = d * 16^j * base``."""

    __slots__ = ("rows",)
    WINDOWS = (ORDER.bit_length() + 3) // 4

    def __init__(self, base: Point):
        rows = []
        cur = base
        for _ in range(self.WINDOWS):
            row = [cur]
            for _ in range(14):
                row.append(add(row[-1], cur))
            rows.append(row)
            cur = add(row[-1], cur)
        self.rows = rows

    def mul(self, k: int) -> Point:
        acc = None
        j = 0
        while k:
            d = k & 15
            if d:
                acc = add(acc, self.rows[j][d - 1])
            k >>= 4
            j += 1
        return acc


# Bases that are exponentiated repeatedly (generators, public parameters,
# hashed attribute points) get a fixed-base table once they are seen often.
_TABLE_THRESHOLD = 6
_TABLE_LIMIT = 512
_tables: dict = {}
_hits: dict = {}


def mul(pt: Point, k: int) -> Point:
    """``k * pt`` for a point of order ``ORDER`` (``k`` is reduced)."""
    if pt is None:
        return None
    k = int(k) % ORDER
    if k == 0:
        return None
    table = _tables.get(pt)
    if table is not None:
        return table.mul(k)
    seen = _hits.get(pt, 0) + 1
    if seen >= _TABLE_THRESHOLD and len(_tables) < _TABLE_LIMIT:
        table = _tables[pt] = _FixedBaseTable(pt)
        _hits.pop(pt, None)
        return table.mul(k)
    if len(_hits) > 8 * _TABLE_LIMIT:
        _hits.clear()
    _hits[pt] = seen
    return _mul_wnaf(pt, k)


def mul_raw(pt: Point, k: int) -> Point:
    """``k * pt`` without reducing ``k``; used for cofactor clearing."""
    if pt is None or k == 0:
        return None
    return _mul_wnaf(pt, int(k))


def lift_x(x: int, odd: bool) -> Point:
    """Point with abscissa ``x`` and y-parity ``odd``, or None if absent."""
    x = mpz(x)
    rhs = (x * x * x + x) % P
    if rhs == 0:
        return (x, mpz(0)) if not odd else None
    y = gmpy2.powmod(rhs, _SQRT_EXP, P)
    if y * y % P != rhs:
        return None
    if bool(y & 1) != odd:
        y = P - y
    return (x, y)


def hash_to_point(data: bytes) -> Point:
    """Try-and-increment map to the order-``ORDER`` subgroup."""
    ctr = 0
    while True:
        digest = hashlib.shake_256(ctr.to_bytes(4, "big") + data).digest(FIELD_BYTES + 16)
        x = mpz(int.from_bytes(digest[:-1], "big")) % P
        candidate = lift_x(x, bool(digest[-1] & 1))
        if candidate is not None:
            pt = mul_raw(candidate, COFACTOR)
            if pt is not None:
                return pt
        ctr += 1


# -- F_p^2 --------------------------------------------------------------------

def fp2_mul(u: Fp2, v: Fp2) -> Fp2:
    a, b = u
    c, d = v
    t0 = a * c
    t1 = b * d
    return ((t0 - t1) % P, ((a + b) * (c + d) - t0 - t1) % P)


def fp2_conj(u: Fp2) -> Fp2:
    return (u[0], (-u[1]) % P)


def fp2_inv(u: Fp2) -> Fp2:
    a, b = u
    n = _invert(a * a + b * b, P)
    return (a * n % P, (-b) * n % P)


def _cyclotomic_sqr(u: Fp2) -> Fp2:
    # valid only when a^2 + b^2 = 1
    a, b = u
    s = a + b
    return ((2 * a * a - 1) % P, (s * s - 1) % P)


def _naf(k: int) -> list:
    digits = []
    while k:
        if k & 1:
            d = 2 - (k & 3)
            k -= d
        else:
            d = 0
        digits.append(d)
        k >>= 1
    return digits


def unitary_pow(u: Fp2, k: int) -> Fp2:
    """``u^k`` for a norm-1 element (inversion is conjugation)."""
    if k == 0:
        return FP2_ONE
    inv = fp2_conj(u)
    acc = FP2_ONE
    for d in reversed(_naf(k)):
        acc = _cyclotomic_sqr(acc)
        if d == 1:
            acc = fp2_mul(acc, u)
        elif d == -1:
            acc = fp2_mul(acc, inv)
    return acc


def is_unitary(u: Fp2) -> bool:
    return (u[0] * u[0] + u[1] * u[1]) % P == 1


# -- pairing ------------------------------------------------------------------

# Miller loop over ORDER - 1 = 2^159 + 2^107; the final step (ORDER-1)P + P
# is a vertical line whose value lies in F_p and vanishes in the final
# exponentiation, as do all vertical-line denominators.
_LOOP_BITS = [int(c) for c in bin(ORDER - 1)[3:]]


def _miller(pt: Tuple[mpz, mpz], q: Tuple[mpz, mpz]) -> Fp2:
    # Doubling steps run in Jacobian coordinates; each line value is scaled
    # by a nonzero F_p factor, which the final exponentiation removes.
    xp, yp = pt
    xq, yq = q
    X, Y, Z = xp, yp, mpz(1)
    f0, f1 = mpz(1), mpz(0)
    for bit in _LOOP_BITS:
        XX = X * X % P
        YY = Y * Y % P
        ZZ = Z * Z % P
        M = (3 * XX + ZZ * ZZ) % P
        Z3 = 2 * Y * Z % P
        l0 = (M * (xq * ZZ + X) - 2 * YY) % P
        l1 = yq * Z3 * ZZ % P
        s0 = (f0 + f1) * (f0 - f1) % P
        s1 = 2 * f0 * f1 % P
        f0, f1 = (s0 * l0 - s1 * l1) % P, (s0 * l1 + s1 * l0) % P
        S = 4 * X * YY % P
        X = (M * M - 2 * S) % P
        Y = (M * (S - X) - 8 * YY * YY) % P
        Z = Z3
        if bit:
            xt, yt = _to_affine(X, Y, Z)
            lam = (yt - yp) * _invert(xt - xp, P) % P
            l0 = (lam * (xq + xt) - yt) % P
            f0, f1 = (f0 * l0 - f1 * yq) % P, (f0 * yq + f1 * l0) % P
            x3 = (lam * lam - xt - xp) % P
            X, Y, Z = x3, (lam * (xt - x3) - yt) % P, mpz(1)
    return (f0, f1)


def final_exponentiation(f: Fp2) -> Fp2:
    """``f^((p^2 - 1) / ORDER)`` as ``(f^(p-1))^COFACTOR``."""
    a, b = f
    n = _invert(a * a + b * b, P)
    # f^(p-1) = conj(f)^2 / N(f)
    g = ((a * a - b * b) * n % P, (-2 * a * b) * n % P)
    return unitary_pow(g, COFACTOR)


def tate(pt: Point, q: Point) -> Fp2:
    """Reduced Tate pairing of ``pt`` with the distortion image of ``q``.

    The distortion map is ``(x, y) -> (-x, i*y)``; the line functions are
    evaluated at that image directly.
    """
    if pt is None or q is None:
        return FP2_ONE
    return final_exponentiation(_miller(pt, q))
