"""Cryptographic primitives: DET (CMC/AES), probabilistic AES-GCM, and the
adjustable keyed hash."""

from .akh import ORDER, HashError, akh_adjust, akh_hash, akh_token
from .det import DecryptionError, det_decrypt, det_encrypt
from .encoding import decode_value, encode_value
from .prob import AuthenticationError, prob_decrypt, prob_encrypt
from .rng import KeySource

__all__ = [
    "ORDER", "HashError", "akh_adjust", "akh_hash", "akh_token",
    "DecryptionError", "det_decrypt", "det_encrypt",
    "decode_value", "encode_value",
    "AuthenticationError", "prob_decrypt", "prob_encrypt",
    "KeySource",
]
