"""Immutable AST for guarded first-order policies.

Terms are :class:`Var` or :class:`Const`.  A constant's value is a plaintext
``str``/``int`` or, in encrypted policies, a :class:`DetValue` or
:class:`KhValue`.  Constants optionally record the column they came from
(``prov``); provenance never takes part in equality of the constant itself.
"""

import re
from dataclasses import dataclass, field
from typing import Optional, Tuple, Union

IDENT = re.compile(r"[a-zA-Z_][a-zA-Z0-9_]*\Z")


@dataclass(frozen=True, order=True)
class Prov:
    """A column position ``table.col`` with a 1-based column index."""
    table: str
    col: int

    def __str__(self):
        if self.table == TIME_TABLE:
            return "time"
        return f"{self.table}.{self.col}"

    @classmethod
    def parse(cls, text):
        text = text.strip()
        if text == "time":
            return TIME
        table, _, col = text.rpartition(".")
        if not table or not col.isdigit():
            raise ValueError(f"bad provenance {text!r}")
        return cls(table, int(col))


TIME_TABLE = "@time"
# Pseudo-provenance for displacements and other values keyed by the time key.
TIME = Prov(TIME_TABLE, 0)


@dataclass(frozen=True)
class DetValue:
    cipher: bytes

    def __repr__(self):
        return f"DetValue(0x{self.cipher.hex()[:12]}..)"


@dataclass(frozen=True)
class KhValue:
    """A keyed-hash cell: equality is decided by the hash alone."""
    hash: bytes
    cipher: bytes = field(compare=False, default=b"")

    def __repr__(self):
        return f"KhValue(0x{self.hash.hex()[:12]}..)"


Value = Union[str, int, DetValue, KhValue]


@dataclass(frozen=True)
class Var:
    name: str

    def __post_init__(self):
        if not IDENT.match(self.name):
            raise ValueError(f"invalid variable name {self.name!r}")


@dataclass(frozen=True)
class Const:
    value: Value
    prov: Optional[Prov] = field(default=None, compare=False)

    def __post_init__(self):
        v = self.value
        if isinstance(v, bool) or not isinstance(v, (str, int, DetValue, KhValue)):
            raise TypeError(f"unsupported constant {v!r}")
        if isinstance(v, int) and not -(2 ** 63) <= v < 2 ** 63:
            raise OverflowError("integer constants must fit in 64 bits")


Term = Union[Var, Const]


class Node:
    """Base class of every formula node."""
    __slots__ = ()


@dataclass(frozen=True)
class Pred(Node):
    name: str
    args: Tuple[Term, ...]

    def __post_init__(self):
        object.__setattr__(self, "args", tuple(self.args))


@dataclass(frozen=True)
class TimeOrder(Node):
    """``t1 + d1 <= t2 + d2``; the displacements are constants."""
    t1: Term
    d1: Const
    t2: Term
    d2: Const

    def __post_init__(self):
        for d in (self.d1, self.d2):
            if not isinstance(d, Const):
                raise ValueError("timeOrder displacements must be constants")
            if isinstance(d.value, str):
                raise ValueError("timeOrder displacements must be integers")


@dataclass(frozen=True)
class Eq(Node):
    t1: Term
    t2: Term


@dataclass(frozen=True)
class TrueF(Node):
    pass


@dataclass(frozen=True)
class FalseF(Node):
    pass


TRUE = TrueF()
FALSE = FalseF()


class _Connective(Node):
    """Equality and hashing for binary connectives without recursion.

    Residuals of large logs are conjunctions of thousands of operands; the
    generated dataclass methods would recurse once per operand.
    """
    __slots__ = ()

    def __eq__(self, other):
        if not isinstance(other, Node):
            return NotImplemented
        stack = [(self, other)]
        while stack:
            a, b = stack.pop()
            if a is b:
                continue
            if type(a) is not type(b):
                return False
            if isinstance(a, _Connective):
                if hash(a) != hash(b):
                    return False
                stack.append((a.right, b.right))
                stack.append((a.left, b.left))
            elif a != b:
                return False
        return True

    def __hash__(self):
        h = self.__dict__.get("_hash")
        if h is None:
            pending = []
            stack = [self]
            while stack:
                n = stack.pop()
                if isinstance(n, _Connective) and "_hash" not in n.__dict__:
                    pending.append(n)
                    stack.append(n.left)
                    stack.append(n.right)
            for n in reversed(pending):
                n.__dict__["_hash"] = hash((type(n).__name__, hash(n.left), hash(n.right)))
            h = self.__dict__["_hash"]
        return h


@dataclass(frozen=True, eq=False)
class And(_Connective):
    left: Node
    right: Node


@dataclass(frozen=True, eq=False)
class Or(_Connective):
    left: Node
    right: Node


@dataclass(frozen=True)
class GExists(Node):
    """Existential inside a guard: hides a variable grounded by ``body``."""
    vars: Tuple[str, ...]
    body: Node

    def __post_init__(self):
        object.__setattr__(self, "vars", tuple(self.vars))
        _check_guard(self.body)


@dataclass(frozen=True)
class Forall(Node):
    vars: Tuple[str, ...]
    guard: Node
    body: Node

    def __post_init__(self):
        object.__setattr__(self, "vars", tuple(self.vars))
        _check_guard(self.guard)


@dataclass(frozen=True)
class Exists(Node):
    vars: Tuple[str, ...]
    guard: Node
    body: Node

    def __post_init__(self):
        object.__setattr__(self, "vars", tuple(self.vars))
        _check_guard(self.guard)


@dataclass(frozen=True)
class NotIn(Node):
    """``vars`` must avoid every tuple in ``excluded``.

    Each excluded tuple holds one ``(value, prov)`` pair per variable, so an
    entry only matches a binding that has the same value *and* came from the
    same column.
    """
    vars: Tuple[str, ...]
    excluded: frozenset

    def __post_init__(self):
        object.__setattr__(self, "vars", tuple(self.vars))
        ex = frozenset(tuple(e) for e in self.excluded)
        for e in ex:
            if len(e) != len(self.vars):
                raise ValueError("notin tuple width differs from variable count")
        object.__setattr__(self, "excluded", ex)


ATOMS = (Pred, TimeOrder, Eq)


def _check_guard(g):
    for leaf in flatten(g, _Connective):
        if isinstance(leaf, (Forall, Exists)):
            raise ValueError("guards may not contain formula quantifiers")


def conj(items):
    """Left-nested conjunction; the empty conjunction is ``true``."""
    items = list(items)
    if not items:
        return TRUE
    out = items[0]
    for it in items[1:]:
        out = And(out, it)
    return out


def disj(items):
    items = list(items)
    if not items:
        return FALSE
    out = items[0]
    for it in items[1:]:
        out = Or(out, it)
    return out


def flatten(node, kind):
    """The operands of a nested ``And``/``Or`` chain, left to right."""
    out, stack = [], [node]
    while stack:
        n = stack.pop()
        if isinstance(n, kind):
            stack.append(n.right)
            stack.append(n.left)
        else:
            out.append(n)
    return out


def fold_connectives(node, leaf, combine):
    """Bottom-up fold over the ``And``/``Or`` skeleton of ``node``.

    ``leaf`` maps each operand that is not a connective; ``combine(n, l, r)``
    receives a connective together with the folded values of its children.
    Runs in constant stack depth however long the chain is.
    """
    if not isinstance(node, _Connective):
        return leaf(node)
    pending, stack = [], [node]
    while stack:
        n = stack.pop()
        if isinstance(n, _Connective):
            pending.append(n)
            stack.append(n.left)
            stack.append(n.right)
    done = {}

    def value(c):
        return done[id(c)] if isinstance(c, _Connective) else leaf(c)

    for n in reversed(pending):
        done[id(n)] = combine(n, value(n.left), value(n.right))
    return done[id(node)]


def map_operands(node, fn):
    """Rebuild ``node`` with ``fn`` applied to every non-connective operand."""
    return fold_connectives(node, fn, lambda n, l, r: type(n)(l, r))
