"""Adjustable keyed hash over P-192.

``Hash(k, v) = [s * k] G`` where ``s`` is derived from a deterministic
encryption of ``v`` under a master key.  ``Token(k1, k2) = k2 / k1 mod n``
and ``Adjust(w, t) = [t] w``, so adjusting a hash under ``k1`` with the
token for ``k1 -> k2`` gives the hash under ``k2``.

Group elements are carried as their 24-byte x-coordinate.  This is a
canonical encoding of the point up to sign, and every operation here
(scalar multiplication) respects the sign symmetry, so equality of hashes is
preserved exactly.
"""

from functools import lru_cache

from cryptography.hazmat.primitives.asymmetric import ec as _ossl

from . import ec
from .det import det_encrypt

ORDER = ec.N
SCALAR_PREFIX = 32


class HashError(ValueError):
    pass


def hash_scalar(master, value):
    """Scalar ``s`` derived from DET(master, value), never zero."""
    data = bytes(value)
    while True:
        c = det_encrypt(master, data)
        s = int.from_bytes(c[:SCALAR_PREFIX], "big") % ORDER
        if s:
            return s
        data = data + b"\x01"


def akh_hash(k, value, master):
    if not k % ORDER:
        raise HashError("hash key must be nonzero")
    s = hash_scalar(master, value)
    return ec.x_bytes(ec.base_mul(s * k % ORDER))


def akh_hash_scalar(k, s):
    """Hash when the DET-derived scalar has been computed already."""
    return ec.x_bytes(ec.base_mul(s * k % ORDER))


def akh_token(k1, k2):
    k1 %= ORDER
    if not k1:
        raise HashError("token source key must be invertible")
    return k2 * pow(k1, -1, ORDER) % ORDER


@lru_cache(maxsize=256)
def _token_key(delta):
    return _ossl.derive_private_key(delta, _ossl.SECP192R1())


@lru_cache(maxsize=1 << 16)
def akh_adjust(w, delta):
    """``[delta] w`` on an x-only encoded element."""
    delta %= ORDER
    if delta == 1:
        return bytes(w)
    if not delta:
        raise HashError("zero token")
    try:
        pub = _ossl.EllipticCurvePublicKey.from_encoded_point(
            _ossl.SECP192R1(), b"\x02" + bytes(w))
    except ValueError as exc:
        raise HashError("not an encoded curve point") from exc
    return _token_key(delta).exchange(_ossl.ECDH(), pub)


def akh_adjust_reference(w, delta):
    """Pure-Python adjust used to cross-check the OpenSSL path."""
    pt = ec.lift_x(int.from_bytes(w, "big"))
    if pt is None:
        raise HashError("not an encoded curve point")
    return ec.x_bytes(ec.mul(delta, pt))
