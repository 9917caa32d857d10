import pytest
from hypothesis import given, settings, strategies as st

from encaudit.logstore import (Log, LogError, Lookup3, Table, build_index,
                               constrained_select, extends, lookup, read_log,
                               render_table, parse_table, select,
                               serialized_size, timestamps_of, write_log)
from encaudit.policy import Const, Pred


def table(name, rows, complete=True, cols=None, time_cols=()):
    width = len(rows[0]) if rows else (len(cols) if cols else 1)
    t = Table(name, cols or [f"c{i}" for i in range(1, width + 1)], complete,
              time_cols=time_cols)
    t.extend(rows)
    return t


def atom(name, *vals):
    return Pred(name, tuple(Const(v) for v in vals))


def test_lookup_three_valued():
    complete = Log([table("p", [("a",)])])
    assert lookup(complete, atom("p", "a")) is Lookup3.TOP
    assert lookup(complete, atom("p", "b")) is Lookup3.BOT
    partial = Log([table("p", [("a",)], complete=False)])
    assert lookup(partial, atom("p", "b")) is Lookup3.UU
    assert lookup(partial, atom("p", "a")) is Lookup3.TOP


def test_lookup_errors():
    log = Log([table("p", [("a",)])])
    with pytest.raises(LogError):
        lookup(log, atom("nope", "a"))
    with pytest.raises(LogError):
        lookup(log, atom("p", "a", "b"))


def test_extends_examples():
    l2 = Log([table("p", [("a",)], complete=False)])
    l1 = Log([table("p", [("a",), ("b",)], complete=False)])
    assert extends(l2, l2)
    assert extends(l1, l2)
    assert not extends(l2, l1)
    c2 = Log([table("p", [("a",)])])
    c1 = Log([table("p", [("a",), ("b",)])])
    assert not extends(c1, c2)
    with pytest.raises(LogError):
        extends(Log([table("q", [("a",)])]), c2)


def test_timestamps_of():
    assert timestamps_of(Log()) == []
    one = Log([table("p", [("x", 5), ("y", 5), ("z", 9)], time_cols={2})])
    assert timestamps_of(one) == [5, 9]
    two = Log([table("p", [(5,)], time_cols={1}), table("q", [(3,)], time_cols={1})])
    assert timestamps_of(two) == [5, 3]


def test_select_and_constraints():
    assert select(Log([table("e", [], cols=["a"])]), "e") == []
    t = table("q", [("a", "b", 1), ("a", "c", 1), ("a", "b", 2)])
    log = Log([t])
    hit = constrained_select(log, "q", {1: "a", 2: "b"})
    assert hit == [("a", "b", 1), ("a", "b", 2)]
    assert t.scans == 1
    with pytest.raises(LogError):
        constrained_select(log, "q", {4: "a"})


def test_index_uses_probe():
    t = table("q", [("a", "b"), ("c", "d"), ("a", "e")])
    log = Log([t])
    before = constrained_select(log, "q", {1: "a"})
    build_index(log, "q", [1])
    after = constrained_select(log, "q", {1: "a"})
    assert before == after
    assert t.probes == 1 and t.scans == 1
    empty = table("e", [], cols=["a"])
    empty.build_index([1])
    assert empty.constrained_select({1: "a"}) == []


def test_index_grows_with_appends():
    t = table("q", [("a", "b")])
    t.build_index([1])
    t.append(("a", "z"))
    assert t.constrained_select({1: "a"}) == [("a", "b"), ("a", "z")]


def test_kh_table_shape_and_index():
    t = Table("q", ["a", "b"], kind="kh")
    assert t.physical_width == 2 * t.width
    t.append((b"h1", b"e1", b"h2", b"e2"))
    t.append((b"h1", b"e3", b"h4", b"e4"))
    with pytest.raises(LogError):
        t.append((b"h1", b"h2"))
    t.build_index([1])
    rows = t.constrained_select({1: b"h1"})
    assert [r[1] for r in rows] == [b"e1", b"e3"]
    assert t.probes == 1


def test_text_roundtrip(tmp_path):
    t = table("send", [("alice", "bob", "m1", 10), ("carol", "dan", "m2", -4)],
              complete=False, cols=["from", "to", "msg", "time"], time_cols={4})
    log = Log([t, table("attr", [("a", "npi")], cols=["a", "b"])])
    write_log(log, tmp_path)
    back = read_log(tmp_path)
    assert [x.schema() for x in back] == [x.schema() for x in log]
    assert back.table("send").rows == t.rows
    assert serialized_size(back) == serialized_size(log)
    assert render_table(parse_table(render_table(t), time_cols={4})) == render_table(t)


def test_digit_strings_rejected_in_text():
    t = table("p", [("123",)])
    with pytest.raises(LogError):
        render_table(t)


# random logs over two small tables for the partial-order properties
cell = st.sampled_from(["a", "b", "c"])
rowsets = st.frozensets(st.tuples(cell, cell), max_size=5)


@st.composite
def logs(draw):
    tabs = []
    for name in ("p", "q"):
        tabs.append(table(name, sorted(draw(rowsets)), draw(st.booleans()), cols=["x", "y"]))
    return Log(tabs)


@settings(max_examples=200, deadline=None)
@given(logs(), logs(), logs())
def test_extends_partial_order(a, b, c):
    assert extends(a, a)
    if extends(a, b) and extends(b, a):
        for name in ("p", "q"):
            assert set(a.table(name).rows) == set(b.table(name).rows)
    if extends(a, b) and extends(b, c):
        assert extends(a, c)


@settings(max_examples=200, deadline=None)
@given(logs(), cell, cell)
def test_lookup_agrees_with_select(log, x, y):
    for name in ("p", "q"):
        present = (x, y) in select(log, name)
        assert (lookup(log, atom(name, x, y)) is Lookup3.TOP) == present


@settings(max_examples=200, deadline=None)
@given(st.lists(st.tuples(cell, cell, cell), max_size=12), cell, cell)
def test_indexed_and_unindexed_agree(rows, x, y):
    plain = table("t", rows, cols=["a", "b", "c"])
    idx = table("t", rows, cols=["a", "b", "c"])
    idx.build_index([1, 3])
    for cons in ({1: x}, {1: x, 3: y}, {2: y}):
        assert plain.constrained_select(cons) == idx.constrained_select(cons)
