"""Plaintext reference auditor.

A deliberately naive interpreter kept separate from :mod:`.engine`: it scans
tables row by row, compares plaintext values directly and evaluates
``timeOrder`` with integer arithmetic.  The encrypted engines are tested
against it.
"""

from ..logstore import Lookup3
from ..policy.ast import (FALSE, TRUE, And, Const, Eq, Exists, FalseF, Forall,
                          GExists, NotIn, Or, Pred, Prov, TimeOrder, TrueF,
                          Var, conj, disj, fold_connectives)
from ..policy.utils import apply_substitution
from .engine import EvaluationError
from .simplify import combine, simplify


def _val(term, env):
    if isinstance(term, Const):
        return term.value
    if term.name not in env:
        raise EvaluationError(f"variable {term.name} is unbound")
    return env[term.name][0]


def _newly_bound(g, bound):
    if isinstance(g, Pred):
        return {a.name for a in g.args if isinstance(a, Var)} - bound
    if isinstance(g, Eq):
        free = {a.name for a in (g.t1, g.t2) if isinstance(a, Var)} - bound
        return free if len(free) == 1 else set()
    if isinstance(g, And):
        a = _newly_bound(g.left, bound)
        return a | _newly_bound(g.right, bound | a)
    if isinstance(g, Or):
        return _newly_bound(g.left, bound) & _newly_bound(g.right, bound)
    if isinstance(g, GExists):
        return _newly_bound(g.body, bound - set(g.vars)) - set(g.vars)
    return set()


def _unique(envs):
    out, seen = [], set()
    for e in envs:
        k = tuple(sorted(e.items(), key=lambda kv: kv[0]))
        if k not in seen:
            seen.add(k)
            out.append(e)
    return out


def _rows(log, name, g, env, buckets):
    """Candidate rows for ``g``: bucketed on the first ground argument."""
    table = log.table(name)
    for i, arg in enumerate(g.args):
        if isinstance(arg, Const):
            want = arg.value
        elif arg.name in env:
            want = env[arg.name][0]
        else:
            continue
        key = (name, i)
        if key not in buckets:
            b = {}
            for row in table.rows:
                b.setdefault(row[i], []).append(row)
            buckets[key] = b
        return buckets[key].get(want, [])
    return table.rows


def sat(log, g, env, buckets=None):
    """All extensions of ``env`` satisfying guard ``g`` on a plaintext log."""
    if buckets is None:
        buckets = {}
    if isinstance(g, TrueF):
        return [env]
    if isinstance(g, FalseF):
        return []
    if isinstance(g, Pred):
        found = []
        for row in _rows(log, g.name, g, env, buckets):
            new = dict(env)
            ok = True
            for i, (arg, cell) in enumerate(zip(g.args, row), 1):
                if isinstance(arg, Const):
                    ok = arg.value == cell
                elif arg.name in new:
                    ok = new[arg.name][0] == cell
                else:
                    new[arg.name] = (cell, Prov(g.name, i))
                if not ok:
                    break
            if ok:
                found.append(new)
        return _unique(found)
    if isinstance(g, TimeOrder):
        ok = _val(g.t1, env) + g.d1.value <= _val(g.t2, env) + g.d2.value
        return [env] if ok else []
    if isinstance(g, Eq):
        sides = [(t, isinstance(t, Const) or t.name in env) for t in (g.t1, g.t2)]
        if sides[0][1] and sides[1][1]:
            return [env] if _val(g.t1, env) == _val(g.t2, env) else []
        if not (sides[0][1] or sides[1][1]):
            raise EvaluationError("equality with both sides unbound")
        src, dst = (g.t1, g.t2) if sides[0][1] else (g.t2, g.t1)
        new = dict(env)
        new[dst.name] = (src.value, src.prov) if isinstance(src, Const) else env[src.name]
        return [new]
    if isinstance(g, NotIn):
        return [] if tuple(env[x] for x in g.vars) in g.excluded else [env]
    if isinstance(g, And):
        out = []
        for e in sat(log, g.left, env, buckets):
            out += sat(log, g.right, e, buckets)
        return _unique(out)
    if isinstance(g, Or):
        keep = set(env) | _newly_bound(g, set(env))
        out = sat(log, g.left, env, buckets) + sat(log, g.right, env, buckets)
        return _unique([{k: v for k, v in e.items() if k in keep} for e in out])
    if isinstance(g, GExists):
        inner = {k: v for k, v in env.items() if k not in g.vars}
        out = []
        for e in sat(log, g.body, inner, buckets):
            e = {k: v for k, v in e.items() if k not in g.vars}
            e.update({k: v for k, v in env.items() if k in g.vars})
            out.append(e)
        return _unique(out)
    raise EvaluationError(f"not a guard: {g!r}")


def _closed(log, g):
    if isinstance(g, Pred):
        return log.table(g.name).complete
    if isinstance(g, (And, Or)):
        return _closed(log, g.left) and _closed(log, g.right)
    if isinstance(g, GExists):
        return _closed(log, g.body)
    return True


def _reduce(log, phi, env, buckets):
    if isinstance(phi, (TrueF, FalseF)):
        return phi
    if isinstance(phi, Pred):
        args = []
        for i, a in enumerate(phi.args, 1):
            if isinstance(a, Const):
                args.append(Const(a.value, a.prov or Prov(phi.name, i)))
            else:
                if a.name not in env:
                    raise EvaluationError(f"variable {a.name} is unbound")
                args.append(Const(*env[a.name]))
        ans = log.lookup(Pred(phi.name, tuple(args)))
        if ans is Lookup3.TOP:
            return TRUE
        if ans is Lookup3.BOT:
            return FALSE
        return Pred(phi.name, tuple(args))
    if isinstance(phi, (TimeOrder, Eq, NotIn)):
        return TRUE if sat(log, phi, env, buckets) else FALSE
    if isinstance(phi, (And, Or)):
        return fold_connectives(phi, lambda n: _reduce(log, n, env, buckets), combine)
    if isinstance(phi, (Forall, Exists)):
        outer = {k: v for k, v in env.items() if k not in phi.vars}
        found = sat(log, phi.guard, outer, buckets)
        pieces = [_reduce(log, phi.body, e, buckets) for e in found]
        if not _closed(log, phi.guard):
            guard = apply_substitution(phi.guard, outer)
            if found:
                seen = frozenset(tuple(e[x] for x in phi.vars) for e in found)
                guard = And(guard, NotIn(phi.vars, seen))
            pieces.append(type(phi)(phi.vars, guard, apply_substitution(phi.body, outer)))
        combined = conj(pieces) if isinstance(phi, Forall) else disj(pieces)
        return simplify(combined)
    raise EvaluationError(f"cannot reduce {phi!r}")


def reduce(log, phi, sigma=None):
    """Residual of ``phi`` on plaintext ``log`` under bindings ``sigma``."""
    return simplify(_reduce(log, phi, dict(sigma or {}), {}))
