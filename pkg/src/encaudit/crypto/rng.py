"""Seedable source of key material.

Production use draws from ``os.urandom``.  Tests and benchmarks pass a seed,
in which case bytes come from an HMAC-SHA256 counter generator so runs are
reproducible.
"""

import hashlib
import hmac
import os


class KeySource:
    def __init__(self, seed=None):
        self._seed = None if seed is None else str(seed).encode()
        self._counter = 0

    def bytes(self, n):
        if self._seed is None:
            return os.urandom(n)
        out = b""
        while len(out) < n:
            self._counter += 1
            out += hmac.new(self._seed, self._counter.to_bytes(8, "big"),
                            hashlib.sha256).digest()
        return out[:n]

    def key(self):
        """A fresh 256-bit symmetric key."""
        return self.bytes(32)

    def scalar(self, order):
        """A uniformly random nonzero scalar below ``order``."""
        while True:
            s = int.from_bytes(self.bytes(40), "big") % order
            if s:
                return s
