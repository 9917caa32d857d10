"""Probabilistic authenticated encryption (AES-256-GCM, random nonce)."""

import os

from cryptography.exceptions import InvalidTag
from cryptography.hazmat.primitives.ciphers.aead import AESGCM

NONCE = 12


class AuthenticationError(ValueError):
    pass


_cache = {}


def _aead(key):
    a = _cache.get(key)
    if a is None:
        if len(_cache) > 4096:
            _cache.clear()
        a = _cache[key] = AESGCM(key)
    return a


def prob_encrypt(key, plaintext, nonce=None):
    """Encrypt; ``nonce`` may be pinned only for reproducible tests."""
    nonce = os.urandom(NONCE) if nonce is None else nonce
    return nonce + _aead(bytes(key)).encrypt(nonce, bytes(plaintext), None)


def prob_decrypt(key, ciphertext):
    ciphertext = bytes(ciphertext)
    if len(ciphertext) < NONCE + 16:
        raise AuthenticationError("ciphertext too short")
    try:
        return _aead(bytes(key)).decrypt(ciphertext[:NONCE], ciphertext[NONCE:], None)
    except InvalidTag as exc:
        raise AuthenticationError("authentication failed") from exc
