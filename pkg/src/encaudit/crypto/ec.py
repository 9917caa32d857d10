"""Arithmetic on the NIST P-192 curve (X9.62 prime192v1).

Two code paths live here:

* a plain affine/Jacobian reference (``mul``) kept deliberately simple so it
  can act as a test oracle, and
* a precomputed 8-bit comb for multiples of the generator (``base_mul``),
  which is what the keyed hash uses.

Points are tuples ``(x, y)``; the point at infinity is ``None``.
"""

P = 2 ** 192 - 2 ** 64 - 1
N = 0xFFFFFFFFFFFFFFFFFFFFFFFF99DEF836146BC9B1B4D22831
A = P - 3
B = 0x64210519E59C80E70FA7E9AB72243049FEB8DEECC146B9B1
G = (0x188DA80EB03090F67CBF20EB43A18800F4FF0AFD82FF1012,
     0x07192B95FFC8DA78631011ED6B24CDD573F977A11E794811)
COORD_BYTES = 24


def on_curve(pt):
    if pt is None:
        return True
    x, y = pt
    return (y * y - (x * x * x + A * x + B)) % P == 0


def _jdouble(X, Y, Z):
    if not Y or not Z:
        return 0, 1, 0
    YY = Y * Y % P
    S = 4 * X * YY % P
    ZZ = Z * Z % P
    M = 3 * (X - ZZ) * (X + ZZ) % P   # a = -3
    X3 = (M * M - 2 * S) % P
    Y3 = (M * (S - X3) - 8 * YY * YY) % P
    return X3, Y3, 2 * Y * Z % P


def _jadd_affine(X1, Y1, Z1, x2, y2):
    if not Z1:
        return x2, y2, 1
    Z1Z1 = Z1 * Z1 % P
    H = (x2 * Z1Z1 - X1) % P
    r = (y2 * Z1 * Z1Z1 - Y1) % P
    if not H:
        if not r:
            return _jdouble(X1, Y1, Z1)
        return 0, 1, 0
    HH = H * H % P
    HHH = H * HH % P
    V = X1 * HH % P
    X3 = (r * r - HHH - 2 * V) % P
    Y3 = (r * (V - X3) - Y1 * HHH) % P
    return X3, Y3, Z1 * H % P


def _affine(X, Y, Z):
    if not Z:
        return None
    zi = pow(Z, -1, P)
    zi2 = zi * zi % P
    return X * zi2 % P, Y * zi2 * zi % P


def add(p1, p2):
    """Affine point addition (reference implementation)."""
    if p1 is None:
        return p2
    if p2 is None:
        return p1
    (x1, y1), (x2, y2) = p1, p2
    if x1 == x2:
        if (y1 + y2) % P == 0:
            return None
        lam = (3 * x1 * x1 + A) * pow(2 * y1, -1, P) % P
    else:
        lam = (y2 - y1) * pow(x2 - x1, -1, P) % P
    x3 = (lam * lam - x1 - x2) % P
    return x3, (lam * (x1 - x3) - y1) % P


def mul(k, pt):
    """Left-to-right double-and-add with affine formulas (slow, simple)."""
    k %= N
    acc = None
    for bit in bin(k)[2:]:
        acc = add(acc, acc)
        if bit == "1":
            acc = add(acc, pt)
    return acc


_COMB = None


def _comb_table():
    global _COMB
    if _COMB is None:
        table = []
        base = G
        for _ in range(COORD_BYTES + 1):
            row = [None]
            acc = (0, 1, 0)
            for _ in range(255):
                acc = _jadd_affine(*acc, *base)
                row.append(_affine(*acc))
            table.append(row)
            nxt = (base[0], base[1], 1)
            for _ in range(8):
                nxt = _jdouble(*nxt)
            base = _affine(*nxt)
        _COMB = table
    return _COMB


def base_mul(k):
    """``[k]G`` via the precomputed byte-wise comb."""
    k %= N
    table = _comb_table()
    acc = (0, 1, 0)
    i = 0
    while k:
        d = k & 0xFF
        if d:
            acc = _jadd_affine(*acc, *table[i][d])
        k >>= 8
        i += 1
    return _affine(*acc)


def sqrt_mod_p(a):
    """Square root modulo P (P = 3 mod 4), or None."""
    r = pow(a, (P + 1) // 4, P)
    return r if r * r % P == a % P else None


def lift_x(x):
    """One of the two points with abscissa ``x`` (None if x is not on the curve)."""
    y = sqrt_mod_p((x * x * x + A * x + B) % P)
    if y is None:
        return None
    return x, y


def x_bytes(pt):
    if pt is None:
        raise ValueError("point at infinity has no x-only encoding")
    return pt[0].to_bytes(COORD_BYTES, "big")
