"""ereduce / esat over plain, DET and KH logs.

The engine is generic; a backend supplies how a bound value is turned into a
lookup key for a given column, how cells are decoded into binding values and
how displaced timestamps are compared.

Substitutions are plain dicts ``{var: (value, prov)}``.  A value is whatever
the backend stores: a plaintext for the plain backend, a :class:`DetValue`
for DET and a :class:`KhValue` for KH.
"""

from ..crypto.akh import akh_adjust
from ..logstore import Lookup3
from ..policy.ast import (FALSE, TRUE, And, Const, DetValue, Eq, Exists,
                          FalseF, Forall, GExists, KhValue, NotIn, Or, Pred,
                          Prov, TimeOrder, TrueF, Var, conj, disj,
                          fold_connectives)
from ..policy.utils import apply_substitution, walk
from .simplify import combine, simplify


class EvaluationError(RuntimeError):
    pass


class MissingToken(EvaluationError):
    def __init__(self, src, dst):
        super().__init__(f"no token for {src} -> {dst}; the equality scheme and "
                         "the issued tokens disagree")
        self.src = src
        self.dst = dst


class Trace:
    """Records storage, comparison and timestamp-structure calls."""

    def __init__(self):
        self.events = []
        self.comparisons = []

    def compare(self, src, dst):
        self.comparisons.append((src, dst))
        self.events.append(("compare", str(src), str(dst)))

    def select(self, table, cols):
        self.events.append(("select", table, tuple(cols)))

    def lookup(self, table):
        self.events.append(("lookup", table))

    def moped(self):
        self.events.append(("moped",))

    def lines(self):
        return [" ".join(str(p) for p in ev) for ev in self.events]


# ---------------------------------------------------------------- backends

class PlainBackend:
    kind = "plain"

    def __init__(self, log, trace=None):
        self.log = log
        self.trace = trace

    def key(self, binding, target):
        value, prov = binding
        if self.trace is not None and prov is not None and prov != target:
            self.trace.compare(prov, target)
        return self._raw(value, prov, target)

    def _raw(self, value, prov, target):
        return value

    def cell(self, table, row, col):
        return table.cell(row, col)

    def equal(self, b1, b2):
        return self.key(b1, b2[1]) == self._own(b2)

    def _own(self, binding):
        return binding[0]

    def time_value(self, binding):
        return binding[0]

    def time_order(self, t1, d1, t2, d2):
        a, b = self.time_value(t1), self.time_value(t2)
        return a + self.time_value(d1) <= b + self.time_value(d2)


class DetBackend(PlainBackend):
    kind = "det"

    def _raw(self, value, prov, target):
        return value.cipher

    def _own(self, binding):
        return binding[0].cipher

    def time_value(self, binding):
        return binding[0].cipher

    def time_order(self, t1, d1, t2, d2):
        if self.trace is not None:
            self.trace.moped()
        return self.log.et.time_order(self.time_value(t1), self.time_value(d1),
                                      self.time_value(t2), self.time_value(d2))


class KhBackend(DetBackend):
    kind = "kh"

    def __init__(self, log, tokens, trace=None):
        super().__init__(log, trace)
        self.tokens = tokens

    def _raw(self, value, prov, target):
        if prov is None or prov == target:
            return value.hash
        delta = self.tokens.get((prov, target))
        if delta is None:
            raise MissingToken(prov, target)
        return akh_adjust(value.hash, delta)

    def _own(self, binding):
        return binding[0].hash

    def time_value(self, binding):
        return binding[0].hash


def make_backend(log, tokens=None, trace=None):
    if log.kind == "plain":
        return PlainBackend(log, trace)
    if log.kind == "det":
        return DetBackend(log, trace)
    if tokens is None:
        raise EvaluationError("KH audits need tokens")
    return KhBackend(log, tokens, trace)


# ------------------------------------------------------------ engine proper

def binds(g, bound):
    """Variables that guard ``g`` newly binds given already ``bound`` ones."""
    if isinstance(g, Pred):
        return {a.name for a in g.args if isinstance(a, Var) and a.name not in bound}
    if isinstance(g, Eq):
        out = set()
        for a, b in ((g.t1, g.t2), (g.t2, g.t1)):
            if isinstance(a, Var) and a.name not in bound:
                out.add(a.name)
        return out if len(out) == 1 else set()
    if isinstance(g, And):
        first = binds(g.left, bound)
        return first | binds(g.right, bound | first)
    if isinstance(g, Or):
        return binds(g.left, bound) & binds(g.right, bound)
    if isinstance(g, GExists):
        inner = bound - set(g.vars)
        return binds(g.body, inner) - set(g.vars)
    return set()


def _dedupe(subs):
    seen, out = set(), []
    for s in subs:
        k = frozenset(s.items())
        if k not in seen:
            seen.add(k)
            out.append(s)
    return out


def restrict(sigma, names):
    names = set(names)
    return {k: v for k, v in sigma.items() if k in names}


def provmap(sigma):
    return {(x, p) for x, (_, p) in sigma.items()}


def sub_extends(s1, s2):
    """True when ``s1`` agrees with every binding of ``s2``."""
    return all(x in s1 and s1[x] == b for x, b in s2.items())


class Engine:
    def __init__(self, log, tokens=None, modes=None, trace=None):
        self.log = log
        self.trace = trace
        self.backend = make_backend(log, tokens, trace)
        if modes:
            for m in modes.values():
                if m.name in log.tables:
                    for i in m.inputs:
                        log.tables[m.name].build_index((i,))

    # term helpers
    def binding(self, term, sigma, pos):
        if isinstance(term, Const):
            return (term.value, term.prov if term.prov is not None else pos)
        b = sigma.get(term.name)
        if b is None:
            raise EvaluationError(f"variable {term.name} is unbound at {pos}")
        return b

    def _ground(self, term, sigma):
        return isinstance(term, Const) or term.name in sigma

    # satisfiers of guards
    def esat(self, atom, sigma):
        if isinstance(atom, Pred):
            return self._sat_pred(atom, sigma)
        if isinstance(atom, TimeOrder):
            return [sigma] if self._time(atom, sigma) else []
        if isinstance(atom, Eq):
            g1, g2 = self._ground(atom.t1, sigma), self._ground(atom.t2, sigma)
            if g1 and g2:
                return [sigma] if self._eq(atom, sigma) else []
            if not (g1 or g2):
                raise EvaluationError("equality with both sides unbound")
            src, dst = (atom.t1, atom.t2) if g1 else (atom.t2, atom.t1)
            out = dict(sigma)
            out[dst.name] = self.binding(src, sigma, None)
            return [out]
        if isinstance(atom, NotIn):
            return [] if self._excluded(atom, sigma) else [sigma]
        raise EvaluationError(f"not an atom: {atom!r}")

    def _sat_pred(self, atom, sigma):
        table = self.log.table(atom.name)
        if table.width != len(atom.args):
            raise EvaluationError(f"{atom.name} has {table.width} columns")
        constraints = {}
        outputs = []          # (col, var) first occurrences
        repeats = []          # (col, first col) later occurrences
        first = {}
        for i, a in enumerate(atom.args, 1):
            here = Prov(atom.name, i)
            if isinstance(a, Var) and a.name not in sigma:
                if a.name in first:
                    repeats.append((i, first[a.name]))
                else:
                    first[a.name] = i
                    outputs.append((i, a.name))
            else:
                constraints[i] = self.backend.key(self.binding(a, sigma, here), here)
        if self.trace is not None:
            self.trace.select(atom.name, sorted(constraints))
        rows = table.constrained_select(constraints, auto_index=True)
        out = []
        for row in rows:
            ok = True
            for i, j in repeats:
                b1 = (self.backend.cell(table, row, j), Prov(atom.name, j))
                b2 = (self.backend.cell(table, row, i), Prov(atom.name, i))
                if not self.backend.equal(b1, b2):
                    ok = False
                    break
            if not ok:
                continue
            s = dict(sigma)
            for i, x in outputs:
                s[x] = (self.backend.cell(table, row, i), Prov(atom.name, i))
            out.append(s)
        return _dedupe(out)

    def _time(self, atom, sigma):
        t1 = self.binding(atom.t1, sigma, None)
        t2 = self.binding(atom.t2, sigma, None)
        d1 = (atom.d1.value, atom.d1.prov)
        d2 = (atom.d2.value, atom.d2.prov)
        return self.backend.time_order(t1, d1, t2, d2)

    def _eq(self, atom, sigma):
        b1 = self.binding(atom.t1, sigma, None)
        b2 = self.binding(atom.t2, sigma, None)
        if b2[1] is None or b1[1] is None:
            return b1[0] == b2[0]
        return self.backend.equal(b1, b2)

    def _excluded(self, node, sigma):
        try:
            tup = tuple(sigma[x] for x in node.vars)
        except KeyError as exc:
            raise EvaluationError(f"notin variable {exc.args[0]} is unbound") from None
        return tup in node.excluded

    def esat_hat(self, g, sigma):
        if isinstance(g, TrueF):
            return [sigma]
        if isinstance(g, FalseF):
            return []
        if isinstance(g, And):
            out = []
            for s in self.esat_hat(g.left, sigma):
                out.extend(self.esat_hat(g.right, s))
            return _dedupe(out)
        if isinstance(g, Or):
            keep = set(sigma) | binds(g, set(sigma))
            both = self.esat_hat(g.left, sigma) + self.esat_hat(g.right, sigma)
            return _dedupe(restrict(s, keep) for s in both)
        if isinstance(g, GExists):
            hidden = set(g.vars)
            inner = {k: v for k, v in sigma.items() if k not in hidden}
            out = []
            for s in self.esat_hat(g.body, inner):
                s = {k: v for k, v in s.items() if k not in hidden}
                for x in hidden & set(sigma):
                    s[x] = sigma[x]
                out.append(s)
            return _dedupe(out)
        return self.esat(g, sigma)

    # residuals
    def closed(self, g):
        """No extension of the log can add satisfiers to ``g``."""
        return all(self.log.table(n.name).complete for n in walk(g) if isinstance(n, Pred))

    def ereduce(self, phi, sigma=None):
        return simplify(self._reduce(phi, dict(sigma or {})))

    def _reduce(self, phi, sigma):
        if isinstance(phi, (TrueF, FalseF)):
            return phi
        if isinstance(phi, Pred):
            table = self.log.table(phi.name)
            keys, args = [], []
            for i, a in enumerate(phi.args, 1):
                here = Prov(phi.name, i)
                b = self.binding(a, sigma, here)
                keys.append(self.backend.key(b, here))
                args.append(Const(b[0], b[1]))
            if self.trace is not None:
                self.trace.lookup(phi.name)
            ans = table.lookup(tuple(keys))
            if ans is Lookup3.TOP:
                return TRUE
            if ans is Lookup3.BOT:
                return FALSE
            return Pred(phi.name, tuple(args))
        if isinstance(phi, TimeOrder):
            return TRUE if self._time(phi, sigma) else FALSE
        if isinstance(phi, Eq):
            return TRUE if self._eq(phi, sigma) else FALSE
        if isinstance(phi, NotIn):
            return FALSE if self._excluded(phi, sigma) else TRUE
        if isinstance(phi, (And, Or)):
            return fold_connectives(phi, lambda n: self._reduce(n, sigma), combine)
        if isinstance(phi, (Forall, Exists)):
            xs = phi.vars
            outer = {k: v for k, v in sigma.items() if k not in xs}
            sat = self.esat_hat(phi.guard, outer)
            parts = [self._reduce(phi.body, s) for s in sat]
            rest = []
            if not self.closed(phi.guard):
                g = apply_substitution(phi.guard, outer)
                body = apply_substitution(phi.body, outer)
                excluded = frozenset(tuple(s[x] for x in xs) for s in sat)
                if excluded:
                    g = And(g, NotIn(xs, excluded))
                rest.append(type(phi)(xs, g, body))
            if isinstance(phi, Forall):
                return simplify(conj(parts + rest))
            return simplify(disj(parts + rest))
        raise EvaluationError(f"cannot reduce {phi!r}")


def ereduce(log, phi, tokens=None, sigma=None, modes=None, trace=None):
    """Audit ``phi`` on a plain, DET or KH log and return the residual."""
    return Engine(log, tokens, modes, trace).ereduce(phi, sigma)


def esat_hat(log, g, tokens=None, sigma=None, trace=None):
    return Engine(log, tokens, None, trace).esat_hat(g, dict(sigma or {}))


def esat(log, atom, tokens=None, sigma=None, trace=None):
    return Engine(log, tokens, None, trace).esat(atom, dict(sigma or {}))


def residual_values(node):
    """All encrypted values in a residual (used to detect hash collisions)."""
    out = []
    for n in walk(node):
        if isinstance(n, Pred):
            out.extend(a.value for a in n.args if isinstance(a, Const))
        elif isinstance(n, NotIn):
            out.extend(v for row in n.excluded for v, _ in row)
    return [v for v in out if isinstance(v, (DetValue, KhValue))]
