"""The DET and KH encryption schemes.

DET gives every column class (a connected component of the equality scheme,
with all timestamp columns forced into one class) its own deterministic key,
so equal values in related columns encrypt identically.

KH gives every column its own hash key and encryption key; related columns
are linked at audit time by tokens that re-key hashes from one column to
another.
"""

from dataclasses import dataclass, field

from .crypto import (KeySource, akh_hash, akh_token, det_decrypt, det_encrypt,
                     decode_value, encode_value, prob_decrypt, prob_encrypt)
from .crypto.akh import ORDER, akh_hash_scalar, hash_scalar
from .logstore import Log, LogError
from .moped import ClientOracle, build_static, build_tree
from .policy.ast import TIME, Const, DetValue, KhValue, Prov
from .policy.utils import displacements_of, map_constants


class MissingKey(LookupError):
    """Missing key material for a column."""


def _columns(modes):
    for m in modes.values():
        for i in range(1, m.arity + 1):
            yield Prov(m.name, i)


def _time_columns(modes):
    return {Prov(m.name, i) for m in modes.values() for i in m.time_cols}


def column_classes(modes, delta, fold_time=False):
    """Connected components of the (undirected) equality-scheme graph.

    Returns a list of frozensets of :class:`Prov`, in first-column order.
    With ``fold_time`` all timestamp columns are merged into one class.
    """
    cols = list(_columns(modes))
    known = set(cols)
    parent = {c: c for c in cols}

    def find(c):
        while parent[c] != c:
            parent[c] = parent[parent[c]]
            c = parent[c]
        return c

    def union(a, b):
        ra, rb = find(a), find(b)
        if ra != rb:
            parent[max(ra, rb)] = min(ra, rb)

    for a, b in delta:
        for c in (a, b):
            if c not in known:
                raise MissingKey(f"equality scheme mentions unknown column {c}")
        union(a, b)
    if fold_time:
        times = sorted(_time_columns(modes))
        for t in times[1:]:
            union(times[0], t)
    groups = {}
    for c in cols:
        groups.setdefault(find(c), []).append(c)
    return [frozenset(g) for g in groups.values()]


# ----------------------------------------------------------------- key sets

@dataclass
class DetKeySet:
    keys: dict                      # Prov -> 32-byte key
    time_key: bytes
    classes: list = field(default_factory=list)

    def key(self, prov):
        if prov == TIME:
            return self.time_key
        try:
            return self.keys[prov]
        except KeyError:
            raise MissingKey(f"no DET key for column {prov}") from None

    def class_of(self, prov):
        for c in self.classes:
            if prov in c:
                return c
        return frozenset([prov])


@dataclass
class KhKeySet:
    hash_keys: dict                 # Prov -> scalar
    enc_keys: dict                  # Prov -> 32-byte key (TIME included)
    time_key: int
    master: bytes

    def hash_key(self, prov):
        if prov == TIME:
            return self.time_key
        try:
            return self.hash_keys[prov]
        except KeyError:
            raise MissingKey(f"no hash key for column {prov}") from None

    def enc_key(self, prov):
        try:
            return self.enc_keys[prov]
        except KeyError:
            raise MissingKey(f"no encryption key for column {prov}") from None


def keygen_det(modes, delta, source=None):
    source = source or KeySource()
    time_cols = _time_columns(modes)
    classes = column_classes(modes, delta, fold_time=True)
    time_key = source.key()
    keys = {}
    for cls in classes:
        k = time_key if cls & time_cols else source.key()
        for c in cls:
            keys[c] = k
    return DetKeySet(keys, time_key, classes)


def keygen_kh(modes, delta=(), source=None):
    """Independent keys per column; timestamp columns hash under ``K_time``."""
    source = source or KeySource()
    time_cols = _time_columns(modes)
    time_key = source.scalar(ORDER)
    master = source.key()
    hash_keys, enc_keys = {}, {}
    for c in _columns(modes):
        hash_keys[c] = time_key if c in time_cols else source.scalar(ORDER)
        enc_keys[c] = source.key()
    enc_keys[TIME] = source.key()
    return KhKeySet(hash_keys, enc_keys, time_key, master)


# -------------------------------------------------------------- primitives

class _KhCipher:
    """Caches the expensive hash computations of one KH key set."""

    def __init__(self, keys):
        self.keys = keys
        self._scalars = {}
        self._hashes = {}

    def hash(self, prov_or_key, value):
        k = prov_or_key if isinstance(prov_or_key, int) else self.keys.hash_key(prov_or_key)
        ck = (k, value)
        h = self._hashes.get(ck)
        if h is None:
            s = self._scalars.get(value)
            if s is None:
                s = self._scalars[value] = hash_scalar(self.keys.master, encode_value(value))
            h = self._hashes[ck] = akh_hash_scalar(k, s)
        return h

    def encrypt(self, prov, value):
        return KhValue(self.hash(prov, value),
                       prob_encrypt(self.keys.enc_key(prov), encode_value(value)))


_kh_cache = {}


def kh_cipher(keys):
    c = _kh_cache.get(id(keys))
    if c is None or c.keys is not keys:
        if len(_kh_cache) > 64:
            _kh_cache.clear()
        c = _kh_cache[id(keys)] = _KhCipher(keys)
    return c


def det_value(keys, prov, value):
    return det_encrypt(keys.key(prov), encode_value(value))


# ----------------------------------------------------------- log encryption

def _check_time(table, row):
    for c in table.time_cols:
        if not isinstance(row[c - 1], int):
            raise LogError(f"non-integer timestamp {row[c - 1]!r} in {table.name}.{c}")


def _time_values(log):
    from .logstore import timestamps_of
    return timestamps_of(log)


def encrypt_log_det(log, keys, displacements=(0,), variant="tree"):
    out = Log(kind="det")
    for t in log:
        et = out.add_table(t.copy_empty("det"))
        col_keys = [keys.key(Prov(t.name, i)) for i in range(1, t.width + 1)]
        cache = {}
        for row in t.rows:
            _check_time(t, row)
            cells = []
            for k, v in zip(col_keys, row):
                ck = (k, v)
                c = cache.get(ck)
                if c is None:
                    c = cache[ck] = det_encrypt(k, encode_value(v))
                cells.append(c)
            et.append(tuple(cells))

    def enc(v):
        return det_encrypt(keys.time_key, encode_value(v))

    stamps = _time_values(log)
    if variant == "static":
        out.et = build_static(stamps, displacements, enc)
    else:
        oracle = ClientOracle()
        out.et = build_tree(stamps, displacements, enc, oracle)
    return out


def encrypt_log_kh(log, keys, displacements=(0,), variant="tree"):
    kc = kh_cipher(keys)
    out = Log(kind="kh")
    for t in log:
        et = out.add_table(t.copy_empty("kh"))
        provs = [Prov(t.name, i) for i in range(1, t.width + 1)]
        enc_keys = [keys.enc_key(p) for p in provs]
        for row in t.rows:
            _check_time(t, row)
            cells = []
            for p, ek, v in zip(provs, enc_keys, row):
                cells.append(kc.hash(p, v))
                cells.append(prob_encrypt(ek, encode_value(v)))
            et.append(tuple(cells))

    def enc(v):
        return kc.hash(keys.time_key, v)

    stamps = _time_values(log)
    if variant == "static":
        out.et = build_static(stamps, displacements, enc)
    else:
        out.et = build_tree(stamps, displacements, enc, ClientOracle())
    return out


def encrypt_log(scheme, log, keys, displacements=(0,), variant="tree"):
    if scheme == "det":
        return encrypt_log_det(log, keys, displacements, variant)
    if scheme == "kh":
        return encrypt_log_kh(log, keys, displacements, variant)
    raise ValueError(f"unknown scheme {scheme!r}")


# -------------------------------------------------------- policy constants

def _const_prov(c, pos):
    """Column whose key protects the constant ``c`` found at ``pos``."""
    if c.prov is not None:
        return c.prov
    where, i = pos
    if where == "timeOrder":
        if i in (2, 4):
            return TIME
        raise MissingKey("timestamp constants inside timeOrder have no key; "
                         "bind the timestamp through a guard instead")
    if where == "=":
        raise MissingKey("constant in an equality atom sits at a keyless position")
    if where == "notin":
        raise MissingKey("notin entry without provenance")
    return Prov(where, i)


def encrypt_policy_constants_det(policy, keys):
    def fn(c, pos):
        if isinstance(c.value, (DetValue, KhValue)):
            return c
        prov = _const_prov(c, pos)
        return Const(DetValue(det_value(keys, prov, c.value)), prov)
    return map_constants(policy, fn)


def encrypt_policy_constants_kh(policy, keys):
    kc = kh_cipher(keys)

    def fn(c, pos):
        if isinstance(c.value, (DetValue, KhValue)):
            return c
        prov = _const_prov(c, pos)
        return Const(kc.encrypt(prov, c.value), prov)
    return map_constants(policy, fn)


def encrypt_policy_constants(scheme, policy, keys):
    if scheme == "det":
        return encrypt_policy_constants_det(policy, keys)
    if scheme == "kh":
        return encrypt_policy_constants_kh(policy, keys)
    raise ValueError(f"unknown scheme {scheme!r}")


def decrypt_value(value, prov, keys):
    if prov is None:
        raise MissingKey("encrypted constant without provenance cannot be decrypted")
    if isinstance(value, DetValue):
        return decode_value(det_decrypt(keys.key(prov), value.cipher))
    if isinstance(value, KhValue):
        return decode_value(prob_decrypt(keys.enc_key(prov), value.cipher))
    return value


def decrypt_policy_constants(policy, keys):
    """Replace every encrypted constant by its plaintext (provenance kept)."""
    def fn(c, pos):
        if isinstance(c.value, (DetValue, KhValue)):
            return Const(decrypt_value(c.value, c.prov, keys), c.prov)
        return c
    return map_constants(policy, fn)


def encrypt_substitution(scheme, sigma, keys):
    """``{x: (value, prov)}`` -> the same bindings with encrypted values."""
    out = {}
    for x, (v, prov) in sigma.items():
        if prov is None:
            raise MissingKey(f"binding for {x} has no provenance")
        if scheme == "det":
            out[x] = (DetValue(det_value(keys, prov, v)), prov)
        else:
            out[x] = (kh_cipher(keys).encrypt(prov, v), prov)
    return out


def encrypt_substitution_kh(sigma, keys):
    return encrypt_substitution("kh", sigma, keys)


def generate_token(delta, keys):
    """One token per equality-scheme pair, mapping source hashes to the
    destination column's key."""
    return {(a, b): akh_token(keys.hash_key(a), keys.hash_key(b)) for a, b in delta}


def policy_displacements(policy):
    return displacements_of(policy)


# ----------------------------------------------------------------- files

def render_keys(keys):
    lines = []
    if isinstance(keys, DetKeySet):
        lines.append(f"time {keys.time_key.hex()}")
        for p in sorted(keys.keys):
            lines.append(f"det {p} {keys.keys[p].hex()}")
    else:
        lines.append(f"time {keys.time_key:x}")
        lines.append(f"master {keys.master.hex()}")
        for p in sorted(keys.hash_keys):
            lines.append(f"akh {p} {keys.hash_keys[p]:x}")
        for p in sorted(keys.enc_keys):
            lines.append(f"enc {p} {keys.enc_keys[p].hex()}")
    return "".join(line + "\n" for line in lines)


def parse_keys(text):
    det, akh, enc = {}, {}, {}
    time = master = None
    for lineno, raw in enumerate(text.splitlines(), 1):
        parts = raw.split("#", 1)[0].split()
        if not parts:
            continue
        tag = parts[0]
        if tag == "time" and len(parts) == 2:
            time = parts[1]
        elif tag == "master" and len(parts) == 2:
            master = bytes.fromhex(parts[1])
        elif tag in ("det", "akh", "enc") and len(parts) == 3:
            prov = Prov.parse(parts[1])
            if tag == "det":
                det[prov] = bytes.fromhex(parts[2])
            elif tag == "akh":
                akh[prov] = int(parts[2], 16)
            else:
                enc[prov] = bytes.fromhex(parts[2])
        else:
            raise ValueError(f"line {lineno}: cannot parse key line {raw!r}")
    if time is None:
        raise ValueError("key file lacks a time key")
    if akh or master is not None:
        if master is None:
            raise ValueError("KH key file lacks a master key")
        return KhKeySet(akh, enc, int(time, 16), master)
    tk = bytes.fromhex(time)
    groups = {}
    for p, k in det.items():
        groups.setdefault(k, set()).add(p)
    return DetKeySet(det, tk, [frozenset(g) for g in groups.values()])


def render_tokens(tokens):
    return "".join(f"token {a} {b} {d:x}\n" for (a, b), d in sorted(tokens.items()))


def parse_tokens(text):
    out = {}
    for lineno, raw in enumerate(text.splitlines(), 1):
        parts = raw.split("#", 1)[0].split()
        if not parts:
            continue
        if len(parts) != 4 or parts[0] != "token":
            raise ValueError(f"line {lineno}: cannot parse token line {raw!r}")
        out[(Prov.parse(parts[1]), Prov.parse(parts[2]))] = int(parts[3], 16)
    return out


class DetScheme:
    """Convenience bundle of the DET algorithms for one schema."""
    name = "det"

    def __init__(self, modes, delta, seed=None):
        self.modes = modes
        self.delta = frozenset(delta)
        self.keys = keygen_det(modes, self.delta, KeySource(seed))
        self.tokens = {}

    def encrypt_log(self, log, displacements=(0,), variant="tree"):
        return encrypt_log_det(log, self.keys, displacements, variant)

    def encrypt_policy(self, policy):
        return encrypt_policy_constants_det(policy, self.keys)

    def encrypt_substitution(self, sigma):
        return encrypt_substitution("det", sigma, self.keys)

    def decrypt(self, residual):
        return decrypt_policy_constants(residual, self.keys)


class KhScheme(DetScheme):
    name = "kh"

    def __init__(self, modes, delta, seed=None):
        self.modes = modes
        self.delta = frozenset(delta)
        self.keys = keygen_kh(modes, self.delta, KeySource(seed))
        self.tokens = generate_token(self.delta, self.keys)

    def encrypt_log(self, log, displacements=(0,), variant="tree"):
        return encrypt_log_kh(log, self.keys, displacements, variant)

    def encrypt_policy(self, policy):
        return encrypt_policy_constants_kh(policy, self.keys)

    def encrypt_substitution(self, sigma):
        return encrypt_substitution("kh", sigma, self.keys)
