from pathlib import Path

import pytest
from hypothesis import given, settings, strategies as st

from encaudit.modecheck import (ModeError, check_formula, check_guard,
                                check_with_stats, fe, is_well_moded, merge,
                                parse_delta, parse_modes, render_delta,
                                render_modes)
from encaudit.policy import (GLBA_EXAMPLE, GLBA_MODES, FALSE, TRUE, Prov,
                             parse_guard, parse_policy)
from encaudit.policy.utils import free_vars, size

GOLDEN = Path(__file__).parent / "golden" / "glba_delta.txt"

P1, Q1, R1, R2 = Prov("p", 1), Prov("q", 1), Prov("r", 1), Prov("r", 2)

SMALL = parse_modes("""\
pred p/1 modes(-)
pred q/2 modes(-,-)
pred r/2 modes(+,-)
""")


def test_fe():
    assert fe({("x", P1), ("x", Q1)}) == {"x"}
    assert fe(set()) == set()
    assert fe({("x", P1), ("y", R2)}) == {"x", "y"}


def test_merge():
    assert merge({("x", P1)}, {("x", Q1)}) == {("x", P1), ("x", Q1)}
    chi = frozenset({("x", P1), ("y", R2)})
    assert merge(chi, chi) == chi
    assert merge({("x", P1), ("y", Prov("p", 2))}, {("x", Q1)}) == {("x", P1), ("x", Q1)}


def test_single_output_pred():
    chi, delta = check_guard(frozenset(), parse_guard("p(x)"), SMALL)
    assert chi == {("x", P1)} and delta == set()


def test_worked_example():
    g = parse_guard("(p(x) or q(x, z)) and r(x, y)")
    chi, delta = check_guard(frozenset(), g, SMALL)
    assert chi == {("x", P1), ("x", Q1), ("y", R2)}
    assert delta == {(P1, R1), (Q1, R1)}


def test_unbound_input_is_mode_error():
    with pytest.raises(ModeError) as info:
        check_guard(frozenset(), parse_guard("r(x, y)"), SMALL)
    assert info.value.var == "x"
    assert info.value.atom.name == "r"


def test_univ_with_formula_pred():
    modes = parse_modes("pred p/1 modes(-)\npred r/2 modes(+,+)")
    f = parse_policy('forall x. (p(x) -> r(x, "c"))')
    assert check_formula(frozenset(), f, modes) == {(P1, R1)}
    assert check_formula(frozenset(), TRUE, modes) == set()


def test_glba_golden():
    modes = parse_modes(GLBA_MODES)
    ok, delta = is_well_moded(parse_policy(GLBA_EXAMPLE), modes)
    assert ok
    assert render_delta(delta) == GOLDEN.read_text()
    assert parse_delta(GOLDEN.read_text()) == delta


def test_glba_spot_checks():
    # p1 bound by send.1 is compared with activeRole.1; the message m from
    # send.3 is looked up in tagged.1; customer q from tagged.2 meets send.2
    _, delta = is_well_moded(parse_policy(GLBA_EXAMPLE), parse_modes(GLBA_MODES))
    assert (Prov("send", 1), Prov("activeRole", 1)) in delta
    assert (Prov("send", 3), Prov("tagged", 1)) in delta
    assert (Prov("tagged", 2), Prov("send", 2)) in delta


def test_is_well_moded_failures():
    modes = parse_modes("pred p/1 modes(+)")
    ok, msg = is_well_moded(parse_policy("forall x. (true -> p(x))"), modes)
    assert not ok and "x" in msg
    assert is_well_moded(FALSE, modes) == (True, frozenset())


def test_univ_premises():
    modes = parse_modes("pred p/1 modes(-)\npred q/2 modes(-,-)")
    with pytest.raises(ModeError) as info:
        check_formula(frozenset(), parse_policy("forall x,y. (p(x) -> true)"), modes)
    assert info.value.premise == 2
    with pytest.raises(ModeError) as info:
        check_formula(frozenset(), parse_policy("forall x. (q(x, y) -> true)"), modes)
    assert info.value.premise == 3


def test_time_order_needs_time_columns():
    modes = parse_modes("pred p/2 modes(-,-) time(2)")
    ok, _ = is_well_moded(parse_policy("forall x,t. (p(x, t) -> timeOrder(t, 0, t, 5))"), modes)
    assert ok
    ok, msg = is_well_moded(parse_policy("forall x,t. (p(x, t) -> timeOrder(x, 0, t, 5))"), modes)
    assert not ok and "timestamp" in msg


def test_eq_rules():
    modes = parse_modes("pred p/1 modes(-)\npred q/1 modes(+)")
    g = parse_guard("p(x) and y = x")
    chi, delta = check_guard(frozenset(), g, modes)
    assert chi == {("x", P1), ("y", P1)} and delta == set()
    chi, delta = check_guard(frozenset(), parse_guard("p(x) and p(y) and x = y"), modes)
    assert delta == {(P1, P1)}
    with pytest.raises(ModeError):
        check_guard(frozenset(), parse_guard("x = y"), modes)
    with pytest.raises(ModeError):
        check_guard(frozenset(), parse_guard('x = "a"'), modes)


def test_repeated_output_variable():
    modes = parse_modes("pred q/2 modes(-,-)")
    chi, delta = check_guard(frozenset(), parse_guard("q(x, x)"), modes)
    assert chi == {("x", Q1), ("x", Prov("q", 2))}
    assert delta == {(Q1, Prov("q", 2))}


def test_guard_exists_hides_variable():
    chi, _ = check_guard(frozenset(), parse_guard("exists z. (q(x, z))"), SMALL)
    assert chi == {("x", Q1)}


def test_modes_file_roundtrip():
    modes = parse_modes(GLBA_MODES)
    assert render_modes(modes) == GLBA_MODES
    with pytest.raises(ValueError):
        parse_modes("pred p/2 modes(+)")


# property tests over random chains of guard atoms
CHAIN_MODES = parse_modes("""\
pred a/2 modes(-,-)
pred b/2 modes(+,-)
pred c/2 modes(+,+)
""")


@st.composite
def chain_guard(draw):
    """A conjunction/disjunction of atoms that is well-moded by construction."""
    bound = ["v0"]
    parts = ["a(v0, v1)"]
    bound.append("v1")
    for i in range(draw(st.integers(0, 6))):
        kind = draw(st.sampled_from("abc"))
        x = draw(st.sampled_from(bound))
        if kind == "a":
            parts.append(f"a(n{i}, {x})")
            bound.append(f"n{i}")
        elif kind == "b":
            parts.append(f"b({x}, n{i})")
            bound.append(f"n{i}")
        else:
            parts.append(f"c({x}, {draw(st.sampled_from(bound))})")
    joins = [draw(st.sampled_from(["and", "or"])) for _ in parts[1:]]
    text = parts[0]
    for j, p in zip(joins, parts[1:]):
        text = f"({text}) {j} {p}" if j == "or" else f"{text} and {p}"
    return text


@settings(max_examples=150, deadline=None)
@given(chain_guard())
def test_deterministic_and_monotone(text):
    g = parse_guard(text)
    try:
        first = check_guard(frozenset(), g, CHAIN_MODES)
    except ModeError:
        return
    assert check_guard(frozenset(), g, CHAIN_MODES) == first
    chi_i = frozenset({("v9", P1)})
    chi_o, _ = check_guard(chi_i, g, CHAIN_MODES)
    assert chi_i <= chi_o


@settings(max_examples=100, deadline=None)
@given(chain_guard())
def test_linear_visits(text):
    xs = ",".join(sorted(free_vars(parse_guard(text))))
    f = parse_policy(f"forall {xs}. ({text} -> true)")
    try:
        _, visits = check_with_stats(f, CHAIN_MODES)
    except ModeError:
        return
    assert visits <= 2 * size(f)
