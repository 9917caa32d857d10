"""EQ mode check.

Walks a policy, tracking for every grounded variable the column(s) it may
have been read from, and collects the equality scheme: the directed column
pairs that an evaluator will need to compare.

A mode state ``chi`` is a frozenset of ``(variable, Prov)`` pairs.  The
equality scheme is a frozenset of ``(src Prov, dst Prov)`` pairs.
"""

import re
from dataclasses import dataclass, field

from .policy.ast import (And, Const, Eq, Exists, FalseF, Forall, GExists,
                         NotIn, Or, Pred, Prov, TimeOrder, TrueF, Var)
from .policy.utils import free_vars


class ModeError(ValueError):
    """The policy is not well-moded.

    ``atom`` and ``var`` name the offending atom and variable when known;
    ``premise`` is the index of a failed quantifier premise.
    """

    def __init__(self, msg, atom=None, var=None, premise=None):
        super().__init__(msg)
        self.atom = atom
        self.var = var
        self.premise = premise


@dataclass(frozen=True)
class PredMode:
    name: str
    arity: int
    inputs: frozenset
    time_cols: frozenset = field(default_factory=frozenset)

    @property
    def outputs(self):
        return frozenset(range(1, self.arity + 1)) - self.inputs

    def render(self):
        marks = ",".join("+" if i in self.inputs else "-" for i in range(1, self.arity + 1))
        line = f"pred {self.name}/{self.arity} modes({marks})"
        if self.time_cols:
            line += f" time({','.join(str(i) for i in sorted(self.time_cols))})"
        return line


_MODE_LINE = re.compile(
    r"pred\s+([a-zA-Z_][a-zA-Z0-9_]*)\s*/\s*(\d+)\s+modes\(([+\-,\s]*)\)"
    r"(?:\s+time\(([\d,\s]*)\))?\s*\Z")


def parse_modes(text):
    """Parse a mode declaration file into ``{name: PredMode}``."""
    modes = {}
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        m = _MODE_LINE.match(line)
        if not m:
            raise ValueError(f"line {lineno}: cannot parse mode declaration {raw!r}")
        name, arity = m.group(1), int(m.group(2))
        marks = [s.strip() for s in m.group(3).split(",")] if m.group(3).strip() else []
        if len(marks) != arity:
            raise ValueError(f"line {lineno}: {name} declares arity {arity} but {len(marks)} modes")
        times = frozenset(int(s) for s in (m.group(4) or "").split(",") if s.strip())
        if any(not 1 <= t <= arity for t in times):
            raise ValueError(f"line {lineno}: time column out of range for {name}")
        if name in modes:
            raise ValueError(f"line {lineno}: duplicate declaration of {name}")
        inputs = frozenset(i for i, s in enumerate(marks, 1) if s == "+")
        modes[name] = PredMode(name, arity, inputs, times)
    return modes


def render_modes(modes):
    return "".join(m.render() + "\n" for m in modes.values())


def arities(modes):
    return {name: m.arity for name, m in modes.items()}


def fe(chi):
    """Variables carried by a mode state."""
    return {x for x, _ in chi}


def provs(chi, x):
    return {p for v, p in chi if v == x}


def merge(chi1, chi2):
    """Disjunction merge: keep every provenance of variables bound on both sides."""
    both = fe(chi1) & fe(chi2)
    return frozenset(e for e in set(chi1) | set(chi2) if e[0] in both)


def _drop(chi, names):
    names = set(names)
    return frozenset(e for e in chi if e[0] not in names)


class _Checker:
    def __init__(self, modes):
        self.modes = modes
        self.visits = 0

    def mode(self, atom):
        m = self.modes.get(atom.name)
        if m is None:
            raise ModeError(f"no mode declared for predicate {atom.name!r}", atom)
        if m.arity != len(atom.args):
            raise ModeError(f"{atom.name} has arity {m.arity}, used with {len(atom.args)}", atom)
        return m

    def is_time(self, prov):
        m = self.modes.get(prov.table)
        return m is not None and prov.col in m.time_cols

    def time_terms(self, chi, atom):
        for t in (atom.t1, atom.t2):
            if isinstance(t, Var):
                if t.name not in fe(chi):
                    raise ModeError(f"timeOrder argument {t.name} is not ground", atom, t.name)
                for p in provs(chi, t.name):
                    if not self.is_time(p):
                        raise ModeError(f"timeOrder argument {t.name} comes from "
                                        f"non-timestamp column {p}", atom, t.name)

    def eq_pairs(self, chi, atom):
        delta = set()
        a, b = atom.t1, atom.t2
        if isinstance(a, Var) and isinstance(b, Var):
            for pa in provs(chi, a.name):
                for pb in provs(chi, b.name):
                    delta.add((pa, pb))
        return delta

    def ground(self, chi, t):
        return isinstance(t, Const) or t.name in fe(chi)

    # guards
    def guard(self, chi, g):
        self.visits += 1
        if isinstance(g, (TrueF, FalseF)):
            return chi, frozenset()
        if isinstance(g, Pred):
            m = self.mode(g)
            bound = fe(chi)
            for i in m.inputs:
                t = g.args[i - 1]
                if isinstance(t, Var) and t.name not in bound:
                    raise ModeError(f"variable {t.name} at input position {g.name}.{i} "
                                    "is not ground", g, t.name)
            out = set(chi)
            delta = set()
            first_out = {}
            for j, t in enumerate(g.args, 1):
                if not isinstance(t, Var):
                    continue
                here = Prov(g.name, j)
                if t.name in bound:
                    for p in provs(chi, t.name):
                        delta.add((p, here))
                elif j in m.outputs:
                    out.add((t.name, here))
                    # a variable repeated at output positions of one atom is
                    # compared against its first occurrence
                    if t.name in first_out:
                        delta.add((first_out[t.name], here))
                    else:
                        first_out[t.name] = here
            return frozenset(out), frozenset(delta)
        if isinstance(g, TimeOrder):
            self.time_terms(chi, g)
            return chi, frozenset()
        if isinstance(g, Eq):
            ga, gb = self.ground(chi, g.t1), self.ground(chi, g.t2)
            if ga and gb:
                return chi, frozenset(self.eq_pairs(chi, g))
            if not ga and not gb:
                raise ModeError("equality with both sides unbound", g, g.t1.name)
            src, dst = (g.t1, g.t2) if ga else (g.t2, g.t1)
            if isinstance(src, Const):
                raise ModeError(f"equality with a constant cannot ground {dst.name}: "
                                "the constant has no column", g, dst.name)
            new = {(dst.name, p) for p in provs(chi, src.name)}
            return frozenset(set(chi) | new), frozenset()
        if isinstance(g, NotIn):
            self.notin(chi, g)
            return chi, frozenset()
        if isinstance(g, And):
            chi1, d1 = self.guard(chi, g.left)
            chi2, d2 = self.guard(chi1, g.right)
            return chi2, d1 | d2
        if isinstance(g, Or):
            chi1, d1 = self.guard(chi, g.left)
            chi2, d2 = self.guard(chi, g.right)
            return merge(chi1, chi2), d1 | d2
        if isinstance(g, GExists):
            inner, d = self.guard(_drop(chi, g.vars), g.body)
            restored = _drop(inner, g.vars) | frozenset(e for e in chi if e[0] in g.vars)
            return restored, d
        raise ModeError(f"not a guard: {type(g).__name__}")

    def notin(self, chi, node):
        for x in node.vars:
            if x not in fe(chi):
                raise ModeError(f"notin variable {x} is not ground", node, x)

    # formulas
    def formula(self, chi, f):
        self.visits += 1
        if isinstance(f, (TrueF, FalseF)):
            return frozenset()
        if isinstance(f, Pred):
            self.mode(f)
            delta = set()
            for j, t in enumerate(f.args, 1):
                if isinstance(t, Var):
                    if t.name not in fe(chi):
                        raise ModeError(f"variable {t.name} in {f.name}.{j} is not ground "
                                        "(formulas do not ground variables)", f, t.name)
                    for p in provs(chi, t.name):
                        delta.add((p, Prov(f.name, j)))
            return frozenset(delta)
        if isinstance(f, TimeOrder):
            self.time_terms(chi, f)
            return frozenset()
        if isinstance(f, Eq):
            for t in (f.t1, f.t2):
                if not self.ground(chi, t):
                    raise ModeError(f"variable {t.name} in equality is not ground", f, t.name)
            return frozenset(self.eq_pairs(chi, f))
        if isinstance(f, NotIn):
            self.notin(chi, f)
            return frozenset()
        if isinstance(f, (And, Or)):
            return self.formula(chi, f.left) | self.formula(chi, f.right)
        if isinstance(f, (Forall, Exists)):
            return self.quantifier(chi, f)
        raise ModeError(f"not a formula: {type(f).__name__}")

    def quantifier(self, chi, f):
        xs = set(f.vars)
        outer = _drop(chi, xs)
        chi_o, dg = self.guard(outer, f.guard)
        missing = xs - fe(chi_o)
        if missing:
            raise ModeError(f"quantified variables {sorted(missing)} are not grounded by the guard",
                            f, sorted(missing)[0], premise=2)
        extra = free_vars(f.guard) - fe(outer) - xs
        if extra:
            raise ModeError(f"guard grounds variables {sorted(extra)} that are not quantified",
                            f, sorted(extra)[0], premise=3)
        dc = self.formula(chi_o, f.body)
        return dg | dc


def check_guard(chi, g, modes):
    """Guard judgement: returns ``(chi_out, delta)``."""
    return _Checker(modes).guard(frozenset(chi), g)


def check_formula(chi, f, modes):
    """Formula judgement: returns ``delta``."""
    return _Checker(modes).formula(frozenset(chi), f)


def check_with_stats(f, modes):
    c = _Checker(modes)
    delta = c.formula(frozenset(), f)
    return delta, c.visits


def is_well_moded(f, modes):
    """``(True, delta)`` when well-moded, else ``(False, message)``."""
    try:
        return True, check_formula(frozenset(), f, modes)
    except ModeError as exc:
        return False, str(exc)


def render_delta(delta):
    return "".join(f"{a} -> {b}\n" for a, b in sorted(delta))


def parse_delta(text):
    out = set()
    for raw in text.splitlines():
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        a, sep, b = line.partition("->")
        if not sep:
            raise ValueError(f"cannot parse equality-scheme line {raw!r}")
        out.add((Prov.parse(a), Prov.parse(b)))
    return frozenset(out)
