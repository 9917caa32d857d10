"""Policy language: AST, text format and structural utilities."""

from .ast import (ATOMS, FALSE, TIME, TRUE, And, Const, DetValue, Eq, Exists,
                  FalseF, Forall, GExists, KhValue, NotIn, Or, Pred, Prov,
                  TimeOrder, TrueF, Var, conj, disj, flatten)
from .parser import PolicySyntaxError, parse_guard, parse_policy
from .printer import render, render_policy, render_term, render_value
from .utils import (apply_substitution, atoms, constant_values, constants_of,
                    displacements_of, free_vars, input_vars, map_constants,
                    predicate_names, walk)

GLBA_EXAMPLE = """\
# A financial institution may disclose nonpublic personal information of a
# customer to a non-affiliated third party only if a disclosure notice was
# sent to the customer within 30 days of the disclosure, before or after it.
forall p1,p2,m,q,a,t. (
    send(p1, p2, m, t) and tagged(m, q, a) and activeRole(p1, "institution")
    and notAffiliateOf(p2, p1, t) and customerOf(q, p1, t) and attr(a, "npi")
  ->
    exists t1,m1. (send(p1, q, m1, t1) and timeOrder(t1, 0, t, 0)
        and timeOrder(t, 0, t1, 30) and discNotice(m1, p1, p2, q, a, t))
    or
    exists t2,m2. (send(p1, q, m2, t2) and timeOrder(t, 0, t2, 0)
        and timeOrder(t2, 0, t, 30) and discNotice(m2, p1, p2, q, a, t))
)
"""

GLBA_MODES = """\
pred send/4 modes(-,-,-,-) time(4)
pred tagged/3 modes(+,-,-)
pred activeRole/2 modes(+,-)
pred notAffiliateOf/3 modes(+,+,+) time(3)
pred customerOf/3 modes(+,+,+) time(3)
pred attr/2 modes(+,+)
pred discNotice/6 modes(+,+,+,+,+,+) time(6)
"""
