import pytest

from encaudit.crypto import (KeySource, akh_adjust, decode_value, det_decrypt,
                             det_encrypt, encode_value, prob_decrypt)
from encaudit.logstore import Log, Table, serialized_size
from encaudit.modecheck import is_well_moded, parse_modes
from encaudit.policy import (GLBA_EXAMPLE, GLBA_MODES, TIME, DetValue, KhValue,
                             Prov, parse_policy)
from encaudit.schemes import (DetScheme, KhScheme, MissingKey, column_classes,
                              decrypt_policy_constants,
                              encrypt_policy_constants_det,
                              encrypt_policy_constants_kh, encrypt_substitution,
                              generate_token, keygen_det, keygen_kh,
                              encrypt_log_det, encrypt_log_kh, parse_keys,
                              parse_tokens, render_keys, render_tokens)
from encaudit.schemes import kh_cipher

P1, Q1, R1 = Prov("p", 1), Prov("q", 1), Prov("r", 1)
MODES = parse_modes("""\
pred p/2 modes(-,-) time(2)
pred q/2 modes(-,-)
pred r/3 modes(+,-,-) time(3)
""")
DELTA = {(P1, R1), (Q1, R1)}


def small_log():
    p = Table("p", ["a", "t"], time_cols={2})
    p.extend([("alice", 5), ("bob", 10)])
    q = Table("q", ["a", "b"], complete=False)
    q.extend([("alice", "x")])
    r = Table("r", ["a", "b", "t"], time_cols={3})
    r.extend([("alice", "doctor", 7)])
    return Log([p, q, r])


def test_classes_examples():
    classes = column_classes(MODES, DELTA)
    assert frozenset({P1, Q1, R1}) in classes
    assert frozenset({Prov("q", 2)}) in classes
    assert all(len(c) == 1 for c in column_classes(MODES, set()))
    chain = parse_modes("pred a/1 modes(-)\npred b/1 modes(-)\npred c/1 modes(-)")
    ab = {(Prov("a", 1), Prov("b", 1)), (Prov("b", 1), Prov("c", 1))}
    assert column_classes(chain, ab) == [frozenset({Prov("a", 1), Prov("b", 1), Prov("c", 1)})]
    with pytest.raises(MissingKey):
        column_classes(MODES, {(P1, Prov("zz", 1))})


def test_det_keygen_constraints():
    keys = keygen_det(MODES, DELTA, KeySource(1))
    assert keys.key(P1) == keys.key(Q1) == keys.key(R1)
    assert keys.key(Prov("p", 2)) == keys.key(Prov("r", 3)) == keys.time_key
    assert keys.key(Prov("q", 2)) != keys.key(Prov("r", 2))
    assert keys.key(TIME) == keys.time_key


def test_kh_keygen_independent_columns():
    keys = keygen_kh(MODES, DELTA, KeySource(1))
    assert len({keys.hash_key(c) for c in (P1, Q1, R1)}) == 3
    assert keys.hash_key(Prov("p", 2)) == keys.hash_key(Prov("r", 3)) == keys.time_key


def test_det_log_cells():
    keys = keygen_det(MODES, DELTA, KeySource(2))
    el = encrypt_log_det(small_log(), keys)
    row = el.table("p").rows[0]
    assert row[0] == det_encrypt(keys.key(P1), encode_value("alice"))
    # same plaintext in same-class columns gives equal bytes
    assert el.table("q").rows[0][0] == el.table("r").rows[0][0] == row[0]
    assert el.table("q").complete is False


def test_kh_log_shape():
    keys = keygen_kh(MODES, DELTA, KeySource(2))
    el = encrypt_log_kh(small_log(), keys)
    for t in el:
        for row in t.rows:
            assert len(row) == 2 * t.width
    h_p = el.table("p").rows[0][0]
    h_r = el.table("r").rows[0][0]
    assert h_p != h_r
    tokens = generate_token(DELTA, keys)
    assert akh_adjust(h_p, tokens[(P1, R1)]) == h_r
    # decryption reads the cipher half only
    c = el.table("p").rows[0][1]
    assert decode_value(prob_decrypt(keys.enc_key(P1), c)) == "alice"


def test_size_ordering():
    log = small_log()
    det = encrypt_log_det(log, keygen_det(MODES, DELTA, KeySource(3)))
    kh = encrypt_log_kh(log, keygen_kh(MODES, DELTA, KeySource(3)))
    assert serialized_size(log) < serialized_size(det) < serialized_size(kh)


def test_non_integer_timestamp():
    p = Table("p", ["a", "t"], time_cols={2})
    p.append(("x", "later"))
    log = Log([p, Table("q", ["a", "b"]), Table("r", ["a", "b", "t"], time_cols={3})])
    with pytest.raises(ValueError):
        encrypt_log_det(log, keygen_det(MODES, DELTA, KeySource(3)))


def test_policy_constants_det():
    keys = keygen_det(MODES, DELTA, KeySource(4))
    f = parse_policy('forall x,y,t. (r(x, y, t) and q(x, "doctor") -> timeOrder(t, 0, t, 5))')
    ef = encrypt_policy_constants_det(f, keys)
    doctor = ef.guard.right.args[1]
    assert doctor.value == DetValue(det_encrypt(keys.key(Prov("q", 2)), encode_value("doctor")))
    assert decrypt_policy_constants(ef, keys) == f
    plain = parse_policy("forall x,y. (q(x, y) -> true)")
    assert encrypt_policy_constants_det(plain, keys) == plain


def test_same_constant_two_positions():
    keys = keygen_det(MODES, DELTA, KeySource(4))
    f = parse_policy('q("v", "v")')
    ef = encrypt_policy_constants_det(f, keys)
    assert ef.args[0].value != ef.args[1].value


def test_policy_constants_kh():
    keys = keygen_kh(MODES, DELTA, KeySource(5))
    f = parse_policy('q(x, "doctor")')
    ef = encrypt_policy_constants_kh(f, keys)
    c = ef.args[1]
    assert isinstance(c.value, KhValue)
    assert c.value.hash == kh_cipher(keys).hash(Prov("q", 2), "doctor")
    assert decrypt_policy_constants(ef, keys) == f


def test_keyless_constants_rejected():
    keys = keygen_det(MODES, DELTA, KeySource(6))
    with pytest.raises(MissingKey):
        encrypt_policy_constants_det(parse_policy("timeOrder(5, 0, 6, 0)"), keys)
    with pytest.raises(MissingKey):
        encrypt_policy_constants_det(parse_policy('x = "a"'), keys)
    with pytest.raises(MissingKey):
        encrypt_policy_constants_det(parse_policy('zz("a")'), keys)


def test_glba_roundtrip_both_schemes():
    modes = parse_modes(GLBA_MODES)
    f = parse_policy(GLBA_EXAMPLE)
    _, delta = is_well_moded(f, modes)
    for scheme in (DetScheme(modes, delta, seed=1), KhScheme(modes, delta, seed=1)):
        ef = scheme.encrypt_policy(f)
        assert ef != f
        assert scheme.decrypt(ef) == f


def test_substitution_encryption():
    keys = keygen_kh(MODES, DELTA, KeySource(7))
    se = encrypt_substitution("kh", {"x": ("v", P1)}, keys)
    value, prov = se["x"]
    assert prov == P1
    assert value.hash == kh_cipher(keys).hash(P1, "v")
    assert decode_value(prob_decrypt(keys.enc_key(P1), value.cipher)) == "v"
    dkeys = keygen_det(MODES, DELTA, KeySource(7))
    sd = encrypt_substitution("det", {"x": ("v", P1)}, dkeys)
    assert decode_value(det_decrypt(dkeys.key(P1), sd["x"][0].cipher)) == "v"
    with pytest.raises(MissingKey):
        encrypt_substitution("det", {"x": ("v", None)}, dkeys)


def test_tokens():
    keys = keygen_kh(MODES, DELTA, KeySource(8))
    assert generate_token(set(), keys) == {}
    toks = generate_token({(P1, R1)}, keys)
    assert list(toks) == [(P1, R1)]
    assert parse_tokens(render_tokens(toks)) == toks


def test_key_files_roundtrip():
    dk = keygen_det(MODES, DELTA, KeySource(9))
    back = parse_keys(render_keys(dk))
    assert back.keys == dk.keys and back.time_key == dk.time_key
    assert sorted(map(sorted, back.classes)) == sorted(map(sorted, dk.classes))
    kk = keygen_kh(MODES, DELTA, KeySource(9))
    kb = parse_keys(render_keys(kk))
    assert (kb.hash_keys, kb.enc_keys, kb.time_key, kb.master) == \
        (kk.hash_keys, kk.enc_keys, kk.time_key, kk.master)
    with pytest.raises(ValueError):
        parse_keys("det p.1 00\n")


def test_cross_class_no_collisions():
    keys = keygen_det(MODES, set(), KeySource(10))
    seen = {}
    for c in (P1, Q1, R1, Prov("q", 2)):
        for v in range(300):
            ct = det_encrypt(keys.key(c), encode_value(f"v{v}"))
            assert seen.setdefault(ct, (c, v)) == (c, v)
