"""Executable versions of the log-equivalence notions, plus synthetic logs.

* :func:`edd` decides whether two timestamp sequences are indistinguishable
  under displaced comparisons.
* :func:`log_equivalent` checks the plaintext log-equivalence relation and
  returns the witnessing per-class value maps.
* :func:`make_dummy_log` and :func:`apply_injection` build equivalent logs by
  consistent value renaming.
* :func:`encrypted_structurally_equivalent` is the ciphertext-side analogue.
* :func:`gen_log` generates logs that exercise a policy.
"""

import random
import string
from dataclasses import dataclass, field

from .crypto.encoding import encode_value
from .logstore import Log, Table, timestamps_of
from .moped import MopedStatic, MopedTree
from .policy.ast import (And, Const, Eq, Exists, FalseF, Forall, GExists,
                         NotIn, Or, Pred, Prov, TimeOrder, TrueF, Var, flatten)
from .policy.utils import map_constants
from .policy.utils import displacements_of
from .schemes import column_classes


# ------------------------------------------------------------------- EDD

def edd(u, v, displacements):
    """Equal up to distances with displacements."""
    if len(u) != len(v):
        return False
    ds = sorted(set(displacements))
    n = len(u)
    for i in range(n):
        for j in range(n):
            for d in ds:
                for e in ds:
                    if (u[i] + d >= u[j] + e) != (v[i] + d >= v[j] + e):
                        return False
    return True


# -------------------------------------------------------- log equivalence

@dataclass
class EquivResult:
    ok: bool
    reason: str = ""
    maps: dict = field(default_factory=dict)

    def __bool__(self):
        return self.ok


def _class_index(modes, delta):
    classes = column_classes(modes, delta, fold_time=True)
    time_cols = {Prov(m.name, i) for m in modes.values() for i in m.time_cols}
    index, time_class = {}, None
    for k, cls in enumerate(classes):
        for c in cls:
            index[c] = k
        if cls & time_cols:
            time_class = k
    return classes, index, time_class


def log_equivalent(l1, l2, delta, constants, displacements, modes):
    """Check plaintext log equivalence; the result carries one value map per
    column class when it holds."""
    if list(l1.tables) != list(l2.tables):
        return EquivResult(False, "different table names")
    constants = set(constants)
    _, cls_of, time_class = _class_index(modes, delta)
    fwd, bwd = {}, {}
    for name, t1 in l1.tables.items():
        t2 = l2.tables[name]
        if len(t1.rows) != len(t2.rows):
            return EquivResult(False, f"table {name} has {len(t1.rows)} vs {len(t2.rows)} rows")
        if t1.width != t2.width or t1.complete != t2.complete:
            return EquivResult(False, f"table {name} differs in shape or completeness")
        for r, (row1, row2) in enumerate(zip(t1.rows, t2.rows)):
            for c in range(1, t1.width + 1):
                prov = Prov(name, c)
                k = cls_of.get(prov, ("solo", prov))
                a, b = t1.key(row1, c), t2.key(row2, c)
                if k != time_class:
                    if (a in constants or b in constants) and a != b:
                        return EquivResult(False, f"{prov} row {r + 1}: constant not fixed")
                    if len(encode_value(a)) != len(encode_value(b)):
                        return EquivResult(False, f"{prov} row {r + 1}: length differs")
                f, g = fwd.setdefault(k, {}), bwd.setdefault(k, {})
                if f.setdefault(a, b) != b or g.setdefault(b, a) != a:
                    return EquivResult(False, f"{prov} row {r + 1}: not a bijection")
    if not edd(timestamps_of(l1), timestamps_of(l2), displacements):
        return EquivResult(False, "timestamp sequences are not EDD")
    return EquivResult(True, maps=fwd)


# ------------------------------------------------------ injective renaming

_LETTERS = string.ascii_lowercase


class InjectiveMapFamily:
    """Per-class injective value maps, identity on constants, with timestamps
    moved by one shared offset."""

    def __init__(self, modes, delta, constants=(), shift=0):
        self.classes, self.cls_of, self.time_class = _class_index(modes, delta)
        self.constants = set(constants)
        self.shift = shift
        self.maps = {}

    def class_of(self, prov):
        if prov is None:
            return None
        return self.cls_of.get(prov, ("solo", prov))

    def define(self, prov, value, image):
        m = self.maps.setdefault(self.class_of(prov), {})
        if m.get(value, image) != image:
            raise ValueError("map is not a function")
        m[value] = image

    def __call__(self, value, prov):
        k = self.class_of(prov)
        if k is None:
            return value
        if k == self.time_class:
            return value + self.shift if isinstance(value, int) else value
        if value in self.constants:
            return value
        m = self.maps.get(k, {})
        if value not in m:
            raise KeyError(f"value {value!r} of {prov} outside the map's domain")
        return m[value]


def _fresh_like(value, rng, avoid):
    while True:
        if isinstance(value, int):
            cand = rng.randrange(-(2 ** 62), 2 ** 62)
        else:
            n = len(value.encode("utf-8"))
            cand = "".join(rng.choice(_LETTERS) for _ in range(n))
        if cand not in avoid:
            avoid.add(cand)
            return cand


def _log_values(log):
    return {v for t in log for row in t.rows for v in t.keys(row)}


def make_injection(log, modes, delta, constants=(), seed=0, shift=None, extra=()):
    """A random family of fresh, length-preserving renamings for ``log``.

    ``extra`` lists further ``(value, prov)`` pairs (for instance from a
    substitution) that the family must cover.
    """
    rng = random.Random(seed)
    if shift is None:
        shift = rng.randrange(1, 10 ** 6)
    fam = InjectiveMapFamily(modes, delta, constants, shift)
    avoid = _log_values(log) | set(fam.constants)
    pairs = [(t.key(row, c), Prov(t.name, c)) for t in log for row in t.rows
             for c in range(1, t.width + 1)]
    pairs += list(extra)
    for v, prov in pairs:
        k = fam.class_of(prov)
        if k == fam.time_class or v in fam.constants:
            continue
        m = fam.maps.setdefault(k, {})
        if v not in m:
            m[v] = _fresh_like(v, rng, avoid)
    return fam


def _map_log(log, fam):
    out = Log(kind=log.kind)
    for t in log:
        nt = out.add_table(t.copy_empty())
        for row in t.rows:
            nt.append(tuple(fam(v, Prov(t.name, c)) for c, v in enumerate(row, 1)))
    return out


def _map_formula(phi, fam):
    def fn(c, pos):
        where, i = pos
        if c.prov is not None:
            prov = c.prov
        elif where in ("timeOrder", "=", "notin"):
            return c
        else:
            prov = Prov(where, i)
        return Const(fam(c.value, prov), c.prov)
    return map_constants(phi, fn)


def apply_injection(target, fam):
    """Rename a log, formula or substitution through ``fam``."""
    if isinstance(target, Log):
        return _map_log(target, fam)
    if isinstance(target, dict):
        return {x: (fam(v, p), p) for x, (v, p) in target.items()}
    return _map_formula(target, fam)


def make_dummy_log(log, modes, delta, constants, displacements=(0,), seed=0):
    """An equivalent log: fresh same-length values, constants kept, all
    timestamps shifted by one positive offset."""
    fam = make_injection(log, modes, delta, constants, seed)
    return _map_log(log, fam)


# ------------------------------------------- encrypted structural equality

def encrypted_structurally_equivalent(e1, e2, constant_ciphers=(), classes=None):
    """Positional ciphertext bijection per column class, with constant
    ciphertexts fixed, plus isomorphic timestamp structures.

    ``classes`` groups columns that share a key (default: every column on its
    own, timestamp columns together).
    """
    if e1.kind != e2.kind or list(e1.tables) != list(e2.tables):
        return EquivResult(False, "different kinds or table names")
    fixed = set(constant_ciphers)
    cls_of = {}
    for k, cls in enumerate(classes or ()):
        for c in cls:
            cls_of[c] = k
    time_key = "time"
    fwd, bwd = {}, {}
    for name, t1 in e1.tables.items():
        t2 = e2.tables[name]
        if len(t1.rows) != len(t2.rows) or t1.physical_width != t2.physical_width:
            return EquivResult(False, f"table {name} differs in size")
        for r, (row1, row2) in enumerate(zip(t1.rows, t2.rows)):
            if [len(x) for x in row1] != [len(x) for x in row2]:
                return EquivResult(False, f"{name} row {r + 1}: ciphertext lengths differ")
            for c in range(1, t1.width + 1):
                prov = Prov(name, c)
                k = time_key if c in t1.time_cols else cls_of.get(prov, prov)
                a, b = t1.key(row1, c), t2.key(row2, c)
                if k != time_key and (a in fixed or b in fixed) and a != b:
                    return EquivResult(False, f"{prov} row {r + 1}: constant ciphertext moved")
                f, g = fwd.setdefault(k, {}), bwd.setdefault(k, {})
                if f.setdefault(a, b) != b or g.setdefault(b, a) != a:
                    return EquivResult(False, f"{prov} row {r + 1}: not a bijection")
    tmap = fwd.get(time_key, {})
    if (e1.et is None) != (e2.et is None):
        return EquivResult(False, "only one log has a timestamp structure")
    if e1.et is not None:
        if not _et_isomorphic(e1.et, e2.et, tmap):
            return EquivResult(False, "timestamp structures are not isomorphic")
    return EquivResult(True, maps=fwd)


def _et_isomorphic(a, b, tmap):
    def relabel(pair):
        et, ed = pair
        return (tmap.get(et, et), ed)
    if isinstance(a, MopedTree) and isinstance(b, MopedTree):
        return a.shape(relabel) == b.shape()
    if isinstance(a, MopedStatic) and isinstance(b, MopedStatic):
        la = [(r, sorted(relabel(p) for p in ps)) for r, ps in a.inorder()]
        return la == b.inorder()
    return False


# ------------------------------------------------------- synthetic logs

class UnsupportedPolicy(ValueError):
    pass


@dataclass
class GenSpec:
    policy: object
    modes: dict
    actions: int = 100
    violations: int = 0
    seed: int = 0
    incomplete: frozenset = frozenset()
    reuse: float = 0.0
    noise: float = 0.0
    start: int = 1000
    step: int = 10


class _Fail(Exception):
    pass


def _policy_clauses(phi):
    clauses = flatten(phi, And)
    for c in clauses:
        if not isinstance(c, Forall):
            raise UnsupportedPolicy("generator supports a conjunction of universal clauses")
    return clauses


def _depth(node):
    if isinstance(node, (Forall, Exists)):
        return 1 + _depth(node.body)
    if isinstance(node, (And, Or)):
        return max(_depth(node.left), _depth(node.right))
    return 0


class _Generator:
    def __init__(self, spec):
        self.spec = spec
        self.modes = spec.modes
        self.rng = random.Random(spec.seed)
        self.counter = 0
        self.used = {}     # Prov -> list of values seen there
        disps = displacements_of(spec.policy)
        self.window = max(disps) + 2 * spec.step + 5

    def fresh(self):
        self.counter += 1
        n, tag = self.counter, ""
        while n:
            n, r = divmod(n, 26)
            tag += _LETTERS[r]
        pad = "".join(self.rng.choice(_LETTERS) for _ in range(self.rng.randrange(2, 5)))
        return pad + tag

    def is_time(self, prov):
        m = self.modes.get(prov.table)
        return m is not None and prov.col in m.time_cols

    def value_for(self, prov, now):
        if self.is_time(prov):
            return now + self.rng.randrange(-self.window, self.window + 1)
        seen = self.used.get(prov)
        if seen and self.rng.random() < self.spec.reuse:
            return self.rng.choice(seen)
        return self.fresh()

    # guard satisfiers: extend env and collect rows
    def sat_guard(self, g, env, rows, now):
        if isinstance(g, TrueF):
            return
        if isinstance(g, FalseF):
            raise _Fail()
        if isinstance(g, Pred):
            args = []
            for i, a in enumerate(g.args, 1):
                if isinstance(a, Const):
                    args.append(a.value)
                else:
                    if a.name not in env:
                        env[a.name] = self.value_for(Prov(g.name, i), now)
                    args.append(env[a.name])
            rows.append((g.name, tuple(args)))
            return
        if isinstance(g, (TimeOrder, Eq, NotIn)):
            if isinstance(g, Eq):
                if isinstance(g.t2, Var) and g.t2.name not in env:
                    env[g.t2.name] = self.term(g.t1, env)
                elif isinstance(g.t1, Var) and g.t1.name not in env:
                    env[g.t1.name] = self.term(g.t2, env)
            if not self.holds(g, env, rows):
                raise _Fail()
            return
        if isinstance(g, And):
            self.sat_guard(g.left, env, rows, now)
            self.sat_guard(g.right, env, rows, now)
            return
        if isinstance(g, Or):
            branch = g.left if self.rng.random() < 0.5 else g.right
            self.sat_guard(branch, env, rows, now)
            return
        if isinstance(g, GExists):
            inner = {k: v for k, v in env.items() if k not in g.vars}
            self.sat_guard(g.body, inner, rows, now)
            env.update((k, v) for k, v in inner.items() if k not in g.vars)
            return
        raise UnsupportedPolicy(f"guard node {type(g).__name__}")

    def term(self, t, env):
        return t.value if isinstance(t, Const) else env[t.name]

    def holds(self, atom, env, rows):
        if isinstance(atom, TimeOrder):
            return (self.term(atom.t1, env) + atom.d1.value
                    <= self.term(atom.t2, env) + atom.d2.value)
        if isinstance(atom, Eq):
            return self.term(atom.t1, env) == self.term(atom.t2, env)
        return True

    # make a formula true / false under env, appending rows
    def make(self, phi, env, rows, now, want, depth=0):
        if depth > 3:
            raise UnsupportedPolicy("quantifier nesting deeper than 3")
        if isinstance(phi, TrueF):
            if not want:
                raise _Fail()
            return
        if isinstance(phi, FalseF):
            if want:
                raise _Fail()
            return
        if isinstance(phi, Pred):
            if want:
                rows.append((phi.name, tuple(self.term(a, env) for a in phi.args)))
            return
        if isinstance(phi, (TimeOrder, Eq)):
            if self.holds(phi, env, rows) != want:
                raise _Fail()
            return
        if isinstance(phi, And) or isinstance(phi, Or):
            items = flatten(phi, type(phi))
            conjunctive = isinstance(phi, And) == want
            if conjunctive:
                for it in items:
                    self.make(it, env, rows, now, want, depth)
            else:
                order = items[:]
                self.rng.shuffle(order)
                for it in order:
                    trial = list(rows)
                    try:
                        self.make(it, env, trial, now, want, depth)
                    except _Fail:
                        continue
                    rows[:] = trial
                    return
                raise _Fail()
            return
        if isinstance(phi, (Forall, Exists)):
            witness = isinstance(phi, Exists) == want
            if not witness:
                # no satisfier of the guard is created for this binding
                return
            for _ in range(40):
                inner = {k: v for k, v in env.items() if k not in phi.vars}
                trial = list(rows)
                try:
                    self.sat_guard(phi.guard, inner, trial, now)
                    self.make(phi.body, inner, trial, now, want, depth + 1)
                except _Fail:
                    continue
                rows[:] = trial
                return
            raise _Fail()
        raise UnsupportedPolicy(f"formula node {type(phi).__name__}")

    def action(self, clause, now, comply):
        for _ in range(60):
            env, rows = {}, []
            try:
                self.sat_guard(clause.guard, env, rows, now)
                self.make(clause.body, env, rows, now, comply, 1)
            except _Fail:
                continue
            return rows
        raise UnsupportedPolicy("could not generate an action for this clause")


def gen_log(spec):
    """Generate a plaintext log with ``spec.actions`` policy-relevant actions,
    ``spec.violations`` of which violate the policy."""
    clauses = _policy_clauses(spec.policy)
    for c in clauses:
        if _depth(c) > 3:
            raise UnsupportedPolicy("quantifier nesting deeper than 3")
    g = _Generator(spec)
    tables = {}
    for name, m in spec.modes.items():
        cols = [f"c{i}" for i in range(1, m.arity + 1)]
        tables[name] = Table(name, cols, name not in spec.incomplete, "plain", m.time_cols)
    seen = {name: set() for name in tables}
    bad = set(g.rng.sample(range(spec.actions), min(spec.violations, spec.actions)))
    for i in range(spec.actions):
        now = spec.start + i * spec.step
        clause = clauses[i % len(clauses)]
        rows = g.action(clause, now, i not in bad)
        if spec.noise and g.rng.random() < spec.noise:
            name = g.rng.choice(sorted(tables))
            m = spec.modes[name]
            rows.append((name, tuple(g.value_for(Prov(name, c), now)
                                     for c in range(1, m.arity + 1))))
        for name, row in rows:
            if name not in tables:
                raise UnsupportedPolicy(f"predicate {name} has no mode declaration")
            if row not in seen[name]:
                seen[name].add(row)
                tables[name].append(row)
            for c, v in enumerate(row, 1):
                g.used.setdefault(Prov(name, c), []).append(v)
    return Log([tables[n] for n in spec.modes])
