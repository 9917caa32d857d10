"""Recursive-descent parser for the policy text format.

Grammar (informal)::

    formula  := conj ("or" conj)*
    conj     := unary ("and" unary)*
    unary    := "true" | "false" | atom | notin | "(" formula ")"
              | "forall" vars "." "(" guard "->" formula ")"
              | "exists" vars "." "(" gunary "and" formula ")"
    guard    := gconj ("or" gconj)*
    gconj    := gunary ("and" gunary)*
    gunary   := "true" | "false" | atom | notin | "(" guard ")"
              | "exists" vars "." "(" guard ")"
    atom     := NAME "(" term,* ")" | "timeOrder" "(" term "," disp "," term "," disp ")"
              | term "=" term
    term     := NAME | STRING | INT | HEX | HEX ":" HEX, optionally "@" prov

Inside a formula-level ``exists`` the first conjunct is the guard; a guard
made of several atoms has to be parenthesised.
"""

import re

from .ast import (FALSE, TRUE, And, Const, DetValue, Eq, Exists, Forall,
                  GExists, KhValue, NotIn, Or, Pred, Prov, TimeOrder, Var)

KEYWORDS = {"forall", "exists", "and", "or", "true", "false", "notin", "timeOrder"}

_TOKEN = re.compile(r"""
    (?P<ws>[ \t\r\n]+|\#[^\n]*)
  | (?P<hex>0x[0-9a-fA-F]*)
  | (?P<int>-?[0-9]+)
  | (?P<str>"(?:[^"\\]|\\.)*")
  | (?P<name>[a-zA-Z_][a-zA-Z0-9_]*)
  | (?P<arrow>->)
  | (?P<sym>[(){},.=:@])
""", re.VERBOSE)


class PolicySyntaxError(ValueError):
    def __init__(self, msg, line=0, col=0):
        super().__init__(f"{msg} (line {line}, column {col})")
        self.line = line
        self.col = col


def _tokenize(text):
    pos, line, line_start = 0, 1, 0
    toks = []
    while pos < len(text):
        m = _TOKEN.match(text, pos)
        if not m:
            raise PolicySyntaxError(f"unexpected character {text[pos]!r}",
                                    line, pos - line_start + 1)
        kind = m.lastgroup
        val = m.group()
        if kind != "ws":
            if kind == "arrow":
                kind = "sym"
            toks.append((kind, val, line, m.start() - line_start + 1))
        nl = val.count("\n")
        if nl:
            line += nl
            line_start = m.start() + val.rfind("\n") + 1
        pos = m.end()
    toks.append(("eof", "", line, pos - line_start + 1))
    return toks


def _unescape(s):
    return re.sub(r"\\(.)", lambda m: m.group(1), s[1:-1])


class _Parser:
    def __init__(self, text, arities):
        self.toks = _tokenize(text)
        self.i = 0
        self.arities = dict(arities or {})
        self.declared = arities is not None

    # token helpers
    def peek(self, k=0):
        return self.toks[min(self.i + k, len(self.toks) - 1)]

    def error(self, msg, tok=None):
        tok = tok or self.peek()
        return PolicySyntaxError(msg, tok[2], tok[3])

    def at(self, val, k=0):
        t = self.peek(k)
        return t[0] in ("sym", "name") and t[1] == val

    def expect(self, val):
        t = self.peek()
        if not self.at(val):
            raise self.error(f"expected {val!r}, found {t[1] or 'end of input'!r}")
        self.i += 1
        return t

    def accept(self, val):
        if self.at(val):
            self.i += 1
            return True
        return False

    # grammar
    def formula(self):
        node = self.conj()
        while self.accept("or"):
            node = Or(node, self.conj())
        return node

    def conj(self):
        node = self.unary()
        while self.accept("and"):
            node = And(node, self.unary())
        return node

    def unary(self):
        if self.accept("("):
            node = self.formula()
            self.expect(")")
            return node
        if self.accept("forall"):
            vs = self.varlist()
            self.expect(".")
            self.expect("(")
            g = self.guard()
            self.expect("->")
            body = self.formula()
            self.expect(")")
            return Forall(vs, g, body)
        if self.accept("exists"):
            vs = self.varlist()
            self.expect(".")
            self.expect("(")
            g = self.gunary()
            self.expect("and")
            body = self.formula()
            self.expect(")")
            return Exists(vs, g, body)
        return self.basic()

    def guard(self):
        node = self.gconj()
        while self.accept("or"):
            node = Or(node, self.gconj())
        return node

    def gconj(self):
        node = self.gunary()
        while self.accept("and"):
            node = And(node, self.gunary())
        return node

    def gunary(self):
        if self.accept("("):
            node = self.guard()
            self.expect(")")
            return node
        if self.accept("exists"):
            vs = self.varlist()
            self.expect(".")
            self.expect("(")
            body = self.guard()
            self.expect(")")
            return GExists(vs, body)
        if self.at("forall"):
            raise self.error("universal quantifier not allowed inside a guard")
        return self.basic()

    def basic(self):
        t = self.peek()
        if self.accept("true"):
            return TRUE
        if self.accept("false"):
            return FALSE
        if self.at("notin"):
            return self.notin()
        if self.at("timeOrder"):
            return self.time_order()
        if t[0] == "name" and t[1] not in KEYWORDS and self.at("(", 1):
            return self.pred()
        if t[0] in ("name", "str", "int", "hex") and t[1] not in KEYWORDS:
            left = self.term()
            self.expect("=")
            return Eq(left, self.term())
        raise self.error(f"unexpected token {t[1] or 'end of input'!r}")

    def varlist(self):
        names = [self.name()]
        while self.accept(","):
            names.append(self.name())
        if len(set(names)) != len(names):
            raise self.error("duplicate quantified variable")
        return names

    def name(self):
        t = self.peek()
        if t[0] != "name" or t[1] in KEYWORDS:
            raise self.error(f"expected a variable name, found {t[1]!r}")
        self.i += 1
        return t[1]

    def pred(self):
        tok = self.peek()
        name = self.name()
        self.expect("(")
        args = []
        if not self.at(")"):
            args.append(self.term())
            while self.accept(","):
                args.append(self.term())
        self.expect(")")
        want = self.arities.get(name)
        if want is None:
            if self.declared:
                raise self.error(f"undeclared predicate {name!r}", tok)
            self.arities[name] = len(args)
        elif want != len(args):
            raise self.error(f"predicate {name!r} expects {want} arguments, got {len(args)}", tok)
        return Pred(name, tuple(args))

    def time_order(self):
        self.expect("timeOrder")
        self.expect("(")
        t1 = self.term()
        self.expect(",")
        d1 = self.disp()
        self.expect(",")
        t2 = self.term()
        self.expect(",")
        d2 = self.disp()
        self.expect(")")
        return TimeOrder(t1, d1, t2, d2)

    def disp(self):
        tok = self.peek()
        term = self.term()
        if not isinstance(term, Const) or isinstance(term.value, str):
            raise self.error("timeOrder displacement must be an integer constant", tok)
        return term

    def notin(self):
        self.expect("notin")
        self.expect("(")
        self.expect("(")
        vs = self.varlist()
        self.expect(")")
        self.expect(",")
        self.expect("{")
        rows = []
        if not self.at("}"):
            rows.append(self.const_tuple())
            while self.accept(","):
                rows.append(self.const_tuple())
        self.expect("}")
        self.expect(")")
        for r in rows:
            if len(r) != len(vs):
                raise self.error("notin tuple width differs from variable count")
        return NotIn(vs, frozenset(rows))

    def const_tuple(self):
        self.expect("(")
        items = [self.const_entry()]
        while self.accept(","):
            items.append(self.const_entry())
        self.expect(")")
        return tuple(items)

    def const_entry(self):
        tok = self.peek()
        c = self.term()
        if not isinstance(c, Const):
            raise self.error("notin tuples hold constants only", tok)
        return (c.value, c.prov)

    def term(self):
        t = self.peek()
        kind, val = t[0], t[1]
        if kind == "name":
            if val in KEYWORDS:
                raise self.error(f"keyword {val!r} used as a term")
            self.i += 1
            return Var(val)
        if kind == "str":
            self.i += 1
            value = _unescape(val)
        elif kind == "int":
            self.i += 1
            value = int(val)
            if not -(2 ** 63) <= value < 2 ** 63:
                raise self.error("integer constant out of 64-bit range", t)
        elif kind == "hex":
            self.i += 1
            first = _hex(val, self, t)
            if self.at(":") and self.peek(1)[0] == "hex":
                self.i += 1
                second = _hex(self.peek()[1], self, self.peek())
                self.i += 1
                value = KhValue(first, second)
            else:
                value = DetValue(first)
        else:
            raise self.error(f"expected a term, found {val or 'end of input'!r}")
        prov = None
        if self.accept("@"):
            prov = self.prov()
        return Const(value, prov)

    def prov(self):
        tok = self.peek()
        name = self.peek()
        if name[0] != "name":
            raise self.error("expected a provenance after '@'")
        self.i += 1
        if name[1] == "time":
            return Prov.parse("time")
        self.expect(".")
        col = self.peek()
        if col[0] != "int" or col[1].startswith("-"):
            raise self.error("expected a column index", tok)
        self.i += 1
        return Prov(name[1], int(col[1]))


def _hex(val, parser, tok):
    digits = val[2:]
    if len(digits) % 2:
        raise parser.error("hex literal has an odd number of digits", tok)
    return bytes.fromhex(digits)


def parse_policy(text, arities=None):
    """Parse one formula.

    ``arities`` maps predicate names to their declared arity; when given,
    unknown predicates and arity mismatches are rejected.
    """
    p = _Parser(text, arities)
    node = p.formula()
    if p.peek()[0] != "eof":
        raise p.error(f"trailing input {p.peek()[1]!r}")
    return node


def parse_guard(text, arities=None):
    p = _Parser(text, arities)
    node = p.guard()
    if p.peek()[0] != "eof":
        raise p.error(f"trailing input {p.peek()[1]!r}")
    return node
