"""Three-valued recombination of residuals, plus a canonical normal form.

``simplify`` only removes truth constants; it keeps the order of operands, so
residuals read in the order they were produced.  ``normalize`` additionally
flattens, sorts and de-duplicates conjunctions and disjunctions and merges
exclusion lists, which makes residuals produced along different audit paths
comparable.
"""

from ..policy.ast import (FALSE, TRUE, And, Exists, FalseF, Forall, GExists,
                          NotIn, Or, TrueF, conj, disj, flatten,
                          fold_connectives)
from ..policy.printer import render


def combine(node, left, right):
    """Rebuild connective ``node`` over already simplified operands."""
    if isinstance(node, And):
        if isinstance(left, FalseF) or isinstance(right, FalseF):
            return FALSE
        if isinstance(left, TrueF):
            return right
        if isinstance(right, TrueF):
            return left
        return And(left, right)
    if isinstance(left, TrueF) or isinstance(right, TrueF):
        return TRUE
    if isinstance(left, FalseF):
        return right
    if isinstance(right, FalseF):
        return left
    return Or(left, right)


def simplify(node):
    if isinstance(node, (And, Or)):
        return fold_connectives(node, simplify, combine)
    if isinstance(node, Forall):
        body = simplify(node.body)
        if isinstance(body, TrueF) or isinstance(node.guard, FalseF):
            return TRUE
        return Forall(node.vars, node.guard, body)
    if isinstance(node, Exists):
        body = simplify(node.body)
        if isinstance(body, FalseF) or isinstance(node.guard, FalseF):
            return FALSE
        return Exists(node.vars, node.guard, body)
    return node


def _norm_guard(g):
    if isinstance(g, GExists):
        return GExists(g.vars, _norm_guard(g.body))
    if isinstance(g, Or):
        return Or(_norm_guard(g.left), _norm_guard(g.right))
    if not isinstance(g, And):
        return g
    items = [_norm_guard(x) for x in flatten(g, And)]
    rest, merged = [], {}
    for it in items:
        if isinstance(it, NotIn):
            merged[it.vars] = merged.get(it.vars, frozenset()) | it.excluded
        else:
            rest.append(it)
    for vs in sorted(merged):
        if merged[vs]:
            rest.append(NotIn(vs, merged[vs]))
    return conj(rest)


def _sorted_unique(items):
    seen = {}
    for it in items:
        seen.setdefault(it, render(it))
    return [it for it, _ in sorted(seen.items(), key=lambda kv: kv[1])]


def normalize(node):
    """Canonical form used to compare residuals for logical sameness."""
    node = simplify(node)
    if isinstance(node, And):
        items = [normalize(x) for x in flatten(node, And)]
        flat = []
        for it in items:
            flat.extend(flatten(it, And))
        if any(isinstance(x, FalseF) for x in flat):
            return FALSE
        return conj(_sorted_unique(x for x in flat if not isinstance(x, TrueF)))
    if isinstance(node, Or):
        items = [normalize(x) for x in flatten(node, Or)]
        flat = []
        for it in items:
            flat.extend(flatten(it, Or))
        if any(isinstance(x, TrueF) for x in flat):
            return TRUE
        return disj(_sorted_unique(x for x in flat if not isinstance(x, FalseF)))
    if isinstance(node, (Forall, Exists)):
        return simplify(type(node)(node.vars, _norm_guard(node.guard), normalize(node.body)))
    return node
