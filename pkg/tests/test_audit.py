import itertools

import pytest
from hypothesis import given, settings, strategies as st

from encaudit.audit import (MissingToken, Trace, ereduce, esat, esat_hat,
                            normalize, provmap, reduce, restrict, simplify,
                            sub_extends)
from encaudit.logstore import Log, Table
from encaudit.modecheck import is_well_moded, parse_modes
from encaudit.policy import (FALSE, TRUE, And, Const, Forall, NotIn,
                             Or, Pred, Prov, Var, parse_guard, parse_policy,
                             walk)
from encaudit.schemes import DetScheme, KhScheme, kh_cipher

from strategies import formulas

P1, P2, Q1, Q2 = Prov("p", 1), Prov("p", 2), Prov("q", 1), Prov("q", 2)
MODES = parse_modes("""\
pred p/2 modes(-,-) time(2)
pred q/2 modes(+,-)
pred r/1 modes(+)
""")


def toy_log(q_complete=True, r_complete=True):
    p = Table("p", ["a", "t"], time_cols={2})
    p.extend([("a", 1), ("b", 2), ("c", 3)])
    q = Table("q", ["a", "b"], complete=q_complete)
    q.extend([("a", "x"), ("a", "y"), ("c", "z")])
    r = Table("r", ["a"], complete=r_complete)
    r.extend([("x",), ("z",)])
    return Log([p, q, r])


def test_substitution_helpers():
    assert restrict({}, set()) == {}
    assert provmap({"x": ("v", P1)}) == {("x", P1)}
    s = {"x": ("v", P1)}
    assert sub_extends({**s, "y": ("w", Q2)}, s)
    assert not sub_extends({"x": ("u", P1)}, s)


def test_kh_worked_example():
    scheme = KhScheme(MODES, {(P1, Q1)}, seed=1)
    el = scheme.encrypt_log(toy_log())
    kc = kh_cipher(scheme.keys)
    v = kc.encrypt(P1, "a")
    sigma = {"x": (v, P1)}
    out = esat(el, parse_guard("q(x, y)"), scheme.tokens, sigma)
    assert len(out) == 2
    for s in out:
        assert s["x"] == (v, P1)
        assert s["y"][1] == Q2
    hashes = {s["y"][0].hash for s in out}
    assert hashes == {kc.hash(Q2, "x"), kc.hash(Q2, "y")}


def test_kh_missing_token():
    scheme = KhScheme(MODES, set(), seed=1)
    el = scheme.encrypt_log(toy_log())
    sigma = {"x": (kh_cipher(scheme.keys).encrypt(P1, "a"), P1)}
    with pytest.raises(MissingToken) as info:
        esat(el, parse_guard("q(x, y)"), {}, sigma)
    assert (info.value.src, info.value.dst) == (P1, Q1)


def test_esat_edge_cases():
    log = toy_log()
    empty = Log([Table("p", ["a", "t"], time_cols={2}), Table("q", ["a", "b"]),
                 Table("r", ["a"])])
    assert esat(empty, parse_guard("p(x, t)")) == []
    sigma = {"x": ("a", P1)}
    assert esat(log, parse_guard('q(x, "x")'), sigma=sigma) == [sigma]
    assert esat_hat(log, TRUE, sigma=sigma) == [sigma]
    assert esat_hat(log, FALSE, sigma=sigma) == []


def test_disjunction_is_union():
    log = toy_log()
    g = parse_guard("(p(x, t) and q(x, y)) or (p(x, t) and r(x))")
    got = esat_hat(log, g)
    a = esat_hat(log, g.left)
    b = esat_hat(log, g.right)
    keep = lambda s: frozenset((k, v) for k, v in s.items() if k in ("x", "t"))
    assert {keep(s) for s in got} == {keep(s) for s in a + b}


def test_join_against_brute_force():
    log = toy_log()
    got = {(s["x"][0], s["y"][0]) for s in esat_hat(log, parse_guard("p(x, t) and q(x, y)"))}
    pv = {r[0] for r in log.table("p").rows}
    qv = set(log.table("q").rows)
    values = {v for t in log for row in t.rows for v in row if isinstance(v, str)}
    brute = {(x, y) for x, y in itertools.product(values, repeat=2)
             if x in pv and (x, y) in qv}
    assert got == brute


def test_trace_left_to_right():
    tr = Trace()
    esat_hat(toy_log(), parse_guard("p(x, t) and q(x, y) and r(y)"), trace=tr)
    tables = [e[1] for e in tr.events if e[0] == "select"]
    assert tables[0] == "p"
    assert tables.index("q") < tables.index("r")
    assert set(tr.comparisons) <= {(P1, Q1), (Q2, Prov("r", 1))}


def test_ereduce_ground_atoms():
    assert ereduce(toy_log(), TRUE) == TRUE
    assert reduce(toy_log(), FALSE) == FALSE
    missing = parse_policy('r("nope")')
    assert ereduce(toy_log(), missing) == FALSE
    assert ereduce(toy_log(r_complete=False), missing) == missing
    assert ereduce(toy_log(), parse_policy('r("x")')) == TRUE


def test_forall_residual_keeps_notin():
    phi = parse_policy("forall x,y. (q(x, y) -> r(y))")
    log = toy_log(q_complete=False, r_complete=True)
    psi = reduce(log, phi)
    # binding (a, y) violates against the complete r table
    assert psi == FALSE
    log = toy_log(q_complete=False, r_complete=False)
    psi = reduce(log, phi)
    # with r incomplete the quantifier stays, excluding the three seen rows
    quants = [n for n in walk(psi) if isinstance(n, Forall)]
    assert len(quants) == 1
    notin = [n for n in walk(quants[0].guard) if isinstance(n, NotIn)]
    assert len(notin) == 1 and len(notin[0].excluded) == 3
    assert ereduce(log, phi) == psi


def test_sigma_constants_are_used():
    phi = parse_policy("r(y)")
    assert reduce(toy_log(), phi, {"y": ("x", Prov("q", 2))}) == TRUE
    assert ereduce(toy_log(), phi, sigma={"y": ("w", Prov("q", 2))}) == FALSE


def test_simplify_examples():
    assert simplify(And(TRUE, FALSE)) == FALSE
    assert simplify(Or(FALSE, Pred("r", (Var("x"),)))) == Pred("r", (Var("x"),))
    assert simplify(Forall(("x",), Pred("p", (Var("x"), Var("t"))), TRUE)) == TRUE


@settings(max_examples=200, deadline=None)
@given(formulas)
def test_simplify_and_normalize_idempotent(f):
    s = simplify(f)
    assert simplify(s) == s
    n = normalize(f)
    assert normalize(n) == n


@settings(max_examples=100, deadline=None)
@given(formulas)
def test_normalize_ignores_operand_order(f):
    assert normalize(And(f, TRUE)) == normalize(f)
    if not isinstance(f, (And, Or)):
        g = Pred("r", (Const("k"),))
        assert normalize(And(f, g)) == normalize(And(g, f))


# random small logs for property tests
cells = st.sampled_from(["a", "b", "c"])
times = st.integers(0, 5)


@st.composite
def random_logs(draw):
    p = Table("p", ["a", "t"], draw(st.booleans()), time_cols={2})
    p.extend(sorted(draw(st.sets(st.tuples(cells, times), max_size=5))))
    q = Table("q", ["a", "b"], draw(st.booleans()))
    q.extend(sorted(draw(st.sets(st.tuples(cells, cells), max_size=5))))
    r = Table("r", ["a"], draw(st.booleans()))
    r.extend(sorted(draw(st.sets(st.tuples(cells), max_size=3))))
    return Log([p, q, r])


POLICIES = [parse_policy(t) for t in (
    "forall x,t. (p(x, t) -> exists y. (q(x, y) and r(y)))",
    "forall x,t,y. (p(x, t) and q(x, y) -> r(y) or r(x))",
    "forall x,t,u,s. (p(x, t) and p(u, s) and x = u -> timeOrder(t, 0, s, 2))",
    "forall y,t. (exists x. (p(x, t) and q(x, y)) -> r(y))",
    "forall x,t. ((p(x, t) and r(x)) or (p(x, t) and q(x, x)) -> timeOrder(t, 1, t, 0))",
)]


def test_policies_well_moded():
    for f in POLICIES:
        ok, msg = is_well_moded(f, MODES)
        assert ok, msg


@settings(max_examples=80, deadline=None)
@given(random_logs(), st.sampled_from(POLICIES))
def test_engine_matches_reduce(log, phi):
    assert ereduce(log, phi, modes=MODES) == reduce(log, phi)


@settings(max_examples=15, deadline=None)
@given(random_logs(), st.sampled_from(POLICIES))
def test_det_and_kh_match_reduce(log, phi):
    _, delta = is_well_moded(phi, MODES)
    want = reduce(log, phi)
    for cls in (DetScheme, KhScheme):
        s = cls(MODES, delta, seed=3)
        el = s.encrypt_log(log, {0, 1, 2})
        assert s.decrypt(ereduce(el, s.encrypt_policy(phi), s.tokens, modes=MODES)) == want


@settings(max_examples=80, deadline=None)
@given(random_logs(), cells)
def test_results_extend_sigma(log, v):
    sigma = {"x": (v, P1)}
    for g in ("q(x, y)", "q(x, y) and r(y)", "q(x, y) or r(x)", "exists y. (q(x, y))"):
        for s in esat_hat(log, parse_guard(g), sigma=sigma):
            assert sub_extends(s, sigma)


@settings(max_examples=60, deadline=None)
@given(random_logs(), st.sampled_from(POLICIES))
def test_residuals_are_simplified(log, phi):
    psi = reduce(log, phi)
    assert simplify(psi) == psi
    for n in walk(psi):
        if isinstance(n, (And, Or)):
            assert not isinstance(n.left, (type(TRUE), type(FALSE)))
            assert not isinstance(n.right, (type(TRUE), type(FALSE)))
