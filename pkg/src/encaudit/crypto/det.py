"""Deterministic wide-block encryption (CMC mode over AES-256).

The construction follows the CMC encrypt-mix-encrypt pattern: a CBC pass,
a mask computed from the first and last intermediate blocks, and a second
CBC pass over the reversed, masked sequence.  The tweak is fixed, which makes
the mode deterministic: equal plaintexts under one key give equal
ciphertexts, while every ciphertext bit depends on every plaintext bit.
"""

from functools import lru_cache

from cryptography.hazmat.primitives.ciphers import Cipher, algorithms, modes

BLOCK = 16
_MASK128 = (1 << 128) - 1


class DecryptionError(ValueError):
    """Raised when a ciphertext is malformed or was not produced by this key."""


@lru_cache(maxsize=4096)
def _ciphers(key):
    c = Cipher(algorithms.AES(key), modes.ECB())
    enc = c.encryptor()
    dec = c.decryptor()
    tweak = enc.update(bytes(BLOCK))
    return enc, dec, tweak


def _xor(a, b):
    return (int.from_bytes(a, "big") ^ int.from_bytes(b, "big")).to_bytes(BLOCK, "big")


def _double(block):
    # multiplication by x in GF(2^128) with the usual 0x87 reduction
    v = int.from_bytes(block, "big")
    v = ((v << 1) & _MASK128) ^ (0x87 if v >> 127 else 0)
    return v.to_bytes(BLOCK, "big")


def pad(data):
    """10* padding up to the next block boundary (always adds at least 1 byte)."""
    n = BLOCK - (len(data) % BLOCK)
    return data + b"\x80" + bytes(n - 1)


def unpad(data):
    stripped = data.rstrip(b"\x00")
    if not stripped or stripped[-1] != 0x80 or len(data) - len(stripped) >= BLOCK:
        raise DecryptionError("bad padding")
    return stripped[:-1]


def ciphertext_length(n):
    """Length of the DET ciphertext of an ``n``-byte plaintext."""
    return (n // BLOCK + 1) * BLOCK


def det_encrypt(key, plaintext):
    enc, _, tweak = _ciphers(bytes(key))
    data = pad(bytes(plaintext))
    m = len(data) // BLOCK
    blocks = [data[i * BLOCK:(i + 1) * BLOCK] for i in range(m)]
    ppp = []
    prev = tweak
    for p in blocks:
        prev = enc.update(_xor(p, prev))
        ppp.append(prev)
    mask = _double(_xor(ppp[0], ppp[-1])) if m > 1 else bytes(BLOCK)
    out = []
    prev_ccc = bytes(BLOCK)
    for i in range(m):
        ccc = _xor(ppp[m - 1 - i], mask)
        out.append(_xor(enc.update(ccc), prev_ccc))
        prev_ccc = ccc
    out[0] = _xor(out[0], tweak)
    return b"".join(out)


def det_decrypt(key, ciphertext):
    ciphertext = bytes(ciphertext)
    if not ciphertext or len(ciphertext) % BLOCK:
        raise DecryptionError("ciphertext length is not a positive multiple of 16")
    _, dec, tweak = _ciphers(bytes(key))
    m = len(ciphertext) // BLOCK
    cs = [ciphertext[i * BLOCK:(i + 1) * BLOCK] for i in range(m)]
    cs[0] = _xor(cs[0], tweak)
    ccc = []
    prev_ccc = bytes(BLOCK)
    for c in cs:
        prev_ccc = dec.update(_xor(c, prev_ccc))
        ccc.append(prev_ccc)
    # ppp[j] = ccc[m-1-j] ^ mask; the mask cancels in ppp[0] ^ ppp[-1]
    mask = _double(_xor(ccc[0], ccc[-1])) if m > 1 else bytes(BLOCK)
    ppp = [_xor(ccc[m - 1 - j], mask) for j in range(m)]
    plain = []
    prev = tweak
    for p in ppp:
        plain.append(_xor(dec.update(p), prev))
        prev = p
    return unpad(b"".join(plain))
