"""Structural helpers: traversal, constants, substitution and free variables."""

from .ast import (And, Const, Eq, Exists, FalseF, Forall, GExists, NotIn, Or,
                  Pred, TimeOrder, TrueF, Var, flatten, map_operands)


def children(node):
    if isinstance(node, (And, Or)):
        return (node.left, node.right)
    if isinstance(node, (Forall, Exists)):
        return (node.guard, node.body)
    if isinstance(node, GExists):
        return (node.body,)
    return ()


def walk(node):
    """Pre-order traversal over every formula node."""
    stack = [node]
    while stack:
        n = stack.pop()
        yield n
        stack.extend(reversed(children(n)))


def atoms(node):
    return [n for n in walk(node) if isinstance(n, (Pred, TimeOrder, Eq))]


def predicate_names(node):
    return {n.name for n in walk(node) if isinstance(n, Pred)}


def constants_of(node):
    """Every constant with its host: ``(value, predicate, 1-based position)``.

    timeOrder arguments are reported under the name ``timeOrder`` and equality
    sides under ``=``.
    """
    out = set()
    for n in walk(node):
        if isinstance(n, Pred):
            for i, a in enumerate(n.args, 1):
                if isinstance(a, Const):
                    out.add((a.value, n.name, i))
        elif isinstance(n, TimeOrder):
            for i, a in enumerate((n.t1, n.d1, n.t2, n.d2), 1):
                if isinstance(a, Const):
                    out.add((a.value, "timeOrder", i))
        elif isinstance(n, Eq):
            for i, a in enumerate((n.t1, n.t2), 1):
                if isinstance(a, Const):
                    out.add((a.value, "=", i))
    return out


def constant_values(node):
    return {c[0] for c in constants_of(node)}


def displacements_of(node):
    ds = {0}
    for n in walk(node):
        if isinstance(n, TimeOrder):
            ds.add(n.d1.value)
            ds.add(n.d2.value)
    return ds


def _sub_term(t, sigma):
    if isinstance(t, Var) and t.name in sigma:
        value, prov = sigma[t.name]
        return Const(value, prov)
    return t


def apply_substitution(node, sigma):
    """Replace free variables bound in ``sigma`` (name -> (value, prov))."""
    if not sigma:
        return node
    if isinstance(node, Pred):
        return Pred(node.name, tuple(_sub_term(a, sigma) for a in node.args))
    if isinstance(node, TimeOrder):
        return TimeOrder(_sub_term(node.t1, sigma), node.d1, _sub_term(node.t2, sigma), node.d2)
    if isinstance(node, Eq):
        return Eq(_sub_term(node.t1, sigma), _sub_term(node.t2, sigma))
    if isinstance(node, (TrueF, FalseF, NotIn)):
        return node
    if isinstance(node, (And, Or)):
        return map_operands(node, lambda n: apply_substitution(n, sigma))
    inner = {k: v for k, v in sigma.items() if k not in node.vars}
    if isinstance(node, GExists):
        return GExists(node.vars, apply_substitution(node.body, inner))
    cls = type(node)
    return cls(node.vars, apply_substitution(node.guard, inner),
               apply_substitution(node.body, inner))


def term_vars(terms):
    return {t.name for t in terms if isinstance(t, Var)}


def free_vars(node):
    if isinstance(node, Pred):
        return term_vars(node.args)
    if isinstance(node, TimeOrder):
        return term_vars((node.t1, node.t2))
    if isinstance(node, Eq):
        return term_vars((node.t1, node.t2))
    if isinstance(node, NotIn):
        return set(node.vars)
    if isinstance(node, (And, Or)):
        return set().union(*(free_vars(n) for n in flatten(node, (And, Or))))
    if isinstance(node, GExists):
        return free_vars(node.body) - set(node.vars)
    if isinstance(node, (Forall, Exists)):
        return (free_vars(node.guard) | free_vars(node.body)) - set(node.vars)
    return set()


def input_vars(atom, modes):
    """Variables at input positions of a predicate atom.

    ``modes`` maps predicate names to objects with an ``inputs`` set of
    1-based positions (see :class:`encaudit.modecheck.PredMode`).
    """
    if isinstance(atom, TimeOrder):
        return term_vars((atom.t1, atom.t2))
    if not isinstance(atom, Pred):
        raise TypeError("input_vars expects a predicate atom")
    if atom.name not in modes:
        raise KeyError(f"unknown predicate {atom.name!r}")
    ins = modes[atom.name].inputs
    return {a.name for i, a in enumerate(atom.args, 1) if i in ins and isinstance(a, Var)}


def map_constants(node, fn):
    """Rebuild ``node`` with every constant ``c`` at position ``pos`` replaced
    by ``fn(c, pos)``.  ``pos`` is ``(pred, i)``, ``("timeOrder", i)`` or
    ``("=", i)``; NotIn entries are passed as ``("notin", var)``.
    """
    def term(t, pos):
        return fn(t, pos) if isinstance(t, Const) else t

    def go(n):
        if isinstance(n, Pred):
            return Pred(n.name, tuple(term(a, (n.name, i)) for i, a in enumerate(n.args, 1)))
        if isinstance(n, TimeOrder):
            return TimeOrder(term(n.t1, ("timeOrder", 1)), term(n.d1, ("timeOrder", 2)),
                             term(n.t2, ("timeOrder", 3)), term(n.d2, ("timeOrder", 4)))
        if isinstance(n, Eq):
            return Eq(term(n.t1, ("=", 1)), term(n.t2, ("=", 2)))
        if isinstance(n, NotIn):
            rows = set()
            for row in n.excluded:
                new = []
                for var, (v, p) in zip(n.vars, row):
                    c = fn(Const(v, p), ("notin", var))
                    new.append((c.value, c.prov))
                rows.add(tuple(new))
            return NotIn(n.vars, frozenset(rows))
        if isinstance(n, (TrueF, FalseF)):
            return n
        if isinstance(n, (And, Or)):
            return map_operands(n, go)
        if isinstance(n, GExists):
            return GExists(n.vars, go(n.body))
        return type(n)(n.vars, go(n.guard), go(n.body))

    return go(node)


def size(node):
    return sum(1 for _ in walk(node))
