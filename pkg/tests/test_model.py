import pytest
from hypothesis import given, strategies as st

from spkicalc.algebra import ALWAYS, EMPTY, INF, ActionExpr, Range
from spkicalc.errors import ModelError, NotFullyQualified, RevokerMismatch
from spkicalc.model import (
    And,
    Auth,
    Auth5,
    Bound,
    Crl,
    Del,
    Dot,
    Key,
    LocalName,
    Name4,
    Naming,
    Not,
    NowIn,
    Perm,
    dot,
    formula_of_cert,
    implies,
    is_fully_qualified,
    leaves,
    normalize_principal,
    subsumes,
    tuple_of_cert,
)

k, k1, k2, kr = Key("k-a"), Key("k-b"), Key("k-c"), Key("k-r")
n, m, r = LocalName("n"), LocalName("m"), LocalName("r")
A = ActionExpr.of("read")


def test_normalize_right_associates():
    assert normalize_principal(Dot(Dot(n, m), r)) == Dot(n, Dot(m, r))
    assert normalize_principal(k) == k
    left = Dot(Dot(Dot(k, n), m), r)
    assert normalize_principal(left) == Dot(k, Dot(n, Dot(m, r)))
    assert leaves(left) == (k, n, m, r)


def test_fully_qualified():
    assert is_fully_qualified(Dot(k, Dot(n, m)))
    assert not is_fully_qualified(n)
    assert is_fully_qualified(k)
    assert not is_fully_qualified(dot(k, k1))


def test_tokens_are_disjoint():
    with pytest.raises(ModelError):
        Key("alice")
    with pytest.raises(ModelError):
        LocalName("k-alice")
    with pytest.raises(ModelError):
        LocalName("a b")


def test_certificate_invariants():
    with pytest.raises(NotFullyQualified):
        Naming(k, n, dot(n, m))
    c = Naming(k, n, k1, ALWAYS, kr)
    with pytest.raises(RevokerMismatch):
        Crl(k1, [c])
    with pytest.raises(ModelError):
        Crl(kr, [Crl(kr)])
    assert Crl(kr, [c]).canceled == frozenset([c])
    # subjects are stored right-associated
    assert Naming(k, n, Dot(Dot(k1, n), m)).subject == dot(k1, n, m)


def test_formula_of_cert_examples():
    c = Naming(k, n, k1, Range(0, 10))
    assert formula_of_cert(c) == implies(NowIn(Range(0, 10)), Bound(dot(k, n), k1))
    a = Auth(k, k1, True, A, Range(1, 3))
    assert formula_of_cert(a) == implies(NowIn(Range(1, 3)), And(Perm(k, k1, A), Del(k, k1, A)))
    a = Auth(k, k1, False, A, EMPTY)
    assert formula_of_cert(a) == Not(And(NowIn(EMPTY), Not(Perm(k, k1, A))))
    with pytest.raises(ModelError):
        formula_of_cert(Crl(k))


def test_revoker_never_changes_formula_or_tuple():
    c1 = Naming(k, n, dot(k1, m), Range(1, 3), kr)
    c2 = Naming(k, n, dot(k1, m), Range(1, 3))
    assert formula_of_cert(c1) == formula_of_cert(c2)
    assert tuple_of_cert(c1) == Name4(k, n, dot(k1, m), Range(1, 3))


def test_tuple_of_cert_examples():
    ron, joe, doctor = Key("k-ron"), Key("k-joe"), LocalName("doctor")
    c = Naming(ron, doctor, dot(joe, doctor), Range(1, 3))
    assert tuple_of_cert(c) == Name4(ron, doctor, dot(joe, doctor), Range(1, 3))
    a = Auth(k, dot(k1, n), True, A, Range(0, INF))
    assert tuple_of_cert(a) == Auth5(k, dot(k1, n), True, A, Range(0, INF))
    with pytest.raises(ModelError):
        tuple_of_cert(Crl(k))


def test_subsumes_examples():
    assert subsumes(Name4(k, n, k1, Range(0, 10)), Name4(k, n, k1, Range(2, 3)))
    assert not subsumes(Auth5(k, k1, False, A, Range(0, 5)), Auth5(k, k1, True, A, Range(0, 5)))
    t = Auth5(k, k1, True, A, Range(0, 5))
    assert subsumes(t, t)
    assert not subsumes(Name4(k, n, k1, ALWAYS), t)


keys = st.sampled_from([k, k1, k2])
names = st.sampled_from([n, m, r])
leaf = st.one_of(keys, names)


@st.composite
def exprs(draw, depth=3):
    if depth == 0 or draw(st.booleans()):
        return draw(leaf)
    return Dot(draw(exprs(depth=depth - 1)), draw(exprs(depth=depth - 1)))


@given(exprs())
def test_normalize_idempotent_and_leaf_preserving(p):
    q = normalize_principal(p)
    assert normalize_principal(q) == q
    assert leaves(q) == leaves(p)
    node = q
    while isinstance(node, Dot):
        assert not isinstance(node.head, Dot)
        node = node.tail


ivals = st.sampled_from([Range(0, 3), Range(1, 2), Range(0, INF), Range(2, 9), EMPTY])
acts = st.sampled_from([A, ActionExpr.of("read", "write"), ActionExpr.of("write")])
auth5 = st.builds(lambda d, a, v: Auth5(k, k1, d, a, v), st.booleans(), acts, ivals)


@given(auth5, auth5, auth5)
def test_subsumes_is_a_preorder(a, b, c):
    assert subsumes(a, a)
    if subsumes(a, b) and subsumes(b, c):
        assert subsumes(a, c)
