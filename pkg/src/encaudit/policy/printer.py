"""Render ASTs back to the text format accepted by :mod:`.parser`."""

from .ast import (And, Const, DetValue, Eq, Exists, FalseF, Forall, GExists,
                  KhValue, NotIn, Or, Pred, TimeOrder, TrueF, Var)


def render_value(v, prov=None):
    if isinstance(v, str):
        out = '"' + v.replace("\\", "\\\\").replace('"', '\\"') + '"'
    elif isinstance(v, int):
        out = str(v)
    elif isinstance(v, DetValue):
        out = "0x" + v.cipher.hex()
    elif isinstance(v, KhValue):
        out = "0x" + v.hash.hex() + ":0x" + v.cipher.hex()
    else:
        raise TypeError(f"cannot render {v!r}")
    if prov is not None:
        out += "@" + str(prov)
    return out


def render_term(t):
    if isinstance(t, Var):
        return t.name
    return render_value(t.value, t.prov)


def _atomic(node):
    return not isinstance(node, (And, Or))


def render(node):
    """Concrete syntax for ``node``; long connective chains render iteratively."""
    out, stack = [], [node]
    while stack:
        n = stack.pop()
        if isinstance(n, str):
            out.append(n)
        elif isinstance(n, And):
            left = ["(", n.left, ")"] if isinstance(n.left, Or) else [n.left]
            right = [n.right] if _atomic(n.right) else ["(", n.right, ")"]
            stack.extend(reversed(left + [" and "] + right))
        elif isinstance(n, Or):
            right = ["(", n.right, ")"] if isinstance(n.right, Or) else [n.right]
            stack.extend(reversed([n.left, " or "] + right))
        else:
            out.append(_render_one(n))
    return "".join(out)


def _render_one(node):
    if isinstance(node, TrueF):
        return "true"
    if isinstance(node, FalseF):
        return "false"
    if isinstance(node, Pred):
        return f"{node.name}({', '.join(render_term(a) for a in node.args)})"
    if isinstance(node, TimeOrder):
        parts = (node.t1, node.d1, node.t2, node.d2)
        return f"timeOrder({', '.join(render_term(a) for a in parts)})"
    if isinstance(node, Eq):
        return f"{render_term(node.t1)} = {render_term(node.t2)}"
    if isinstance(node, GExists):
        return f"exists {','.join(node.vars)}. ({render(node.body)})"
    if isinstance(node, Forall):
        return f"forall {','.join(node.vars)}. ({render(node.guard)} -> {render(node.body)})"
    if isinstance(node, Exists):
        g = render(node.guard)
        if not _atomic(node.guard):
            g = f"({g})"
        return f"exists {','.join(node.vars)}. ({g} and {render(node.body)})"
    if isinstance(node, NotIn):
        rows = sorted("(" + ", ".join(render_value(v, p) for v, p in row) + ")"
                      for row in node.excluded)
        return f"notin(({','.join(node.vars)}), {{{', '.join(rows)}}})"
    raise TypeError(f"cannot render {node!r}")


def render_policy(node):
    return render(node) + "\n"
