import random

import pytest
from hypothesis import given, settings, strategies as st

from instances import instance, universe_for
from spkicalc.algebra import ALWAYS, ActionExpr, Range
from spkicalc.errors import InconsistentCRLs, UniverseError
from spkicalc.model import (
    Auth,
    Bound,
    Crl,
    Del,
    Issued,
    Key,
    LocalName,
    Naming,
    Perm,
    Valid,
    NowIn,
    dot,
    formula_of_cert,
    implies,
)
from spkicalc.semantics import (
    Interpretation,
    Universe,
    applicable,
    canonical_run,
    close_interpretation,
    conjunction,
    entailment,
    entails_closed,
    eval_formula,
    in_chain_fragment,
    intension,
    interp_leq,
    interp_meet,
    is_consistent,
    is_interpretation,
    make_run,
    minimal_interpretation,
)

k, k1, k2, k3, kr = (Key(f"k-{x}") for x in ("k", "1", "2", "3", "r"))
n, m, p_ = LocalName("n"), LocalName("m"), LocalName("p")
A = ActionExpr.of("read")


def uni(*keys, names=(n, m), acts=(("read",), ("write",))):
    return Universe(frozenset(keys), frozenset(names), frozenset(acts))


# ---------------------------------------------------------------- runs


def test_make_run_rejects_overlapping_crls():
    r1, r2 = Crl(kr, frozenset(), Range(0, 5)), Crl(kr, frozenset(), Range(5, 9))
    with pytest.raises(InconsistentCRLs):
        make_run({0: [r1], 3: [r2]})
    run = make_run({0: [r1], 3: [Crl(kr, frozenset(), Range(6, 9))]})
    assert run.issue_time(r1) == 0 and run.last_event() == 3


def test_applicability_and_suspension():
    c = Naming(k, n, k1, ALWAYS, kr)
    run = make_run({0: [c, Crl(kr, frozenset(), Range(0, 3))], 6: [Crl(kr, frozenset(), Range(6, 9))]})
    assert applicable(run, c, 2)
    assert not applicable(run, c, 5)  # no current CRL: suspended
    assert applicable(run, c, 7)
    assert not applicable(run, c, 12)
    # a CRL issued later does not act retroactively
    run = make_run({0: [c], 4: [Crl(kr, frozenset(), Range(0, 9))]})
    assert not applicable(run, c, 2) and applicable(run, c, 4)
    assert applicable(run, Naming(k, n, k1), 100)


def test_cancellation_hides_a_certificate():
    c = Naming(k, n, k1, ALWAYS, kr)
    run = make_run({0: [c, Crl(kr, frozenset([c]), Range(0, 9))]})
    assert not applicable(run, c, 3)


# ---------------------------------------------------------------- interpretations


def test_intension_examples_and_associativity():
    L = {(k, n, 0): frozenset([k1, k2]), (k1, m, 0): frozenset([k3]), (k2, m, 0): frozenset([k])}
    assert intension(L, k, k2, 0) == {k}
    assert intension(L, n, k, 0) == {k1, k2}
    assert intension(L, dot(k, n, m), k3, 0) == {k3, k}
    assert intension(L, dot(n, m), k, 0) == intension(L, dot(k, n, m), k1, 0)
    assert intension(L, dot(k, n, m), k, 1) == frozenset()


def test_minimal_interpretation_follows_validity_and_issue_time():
    c = Naming(k, n, k1, Range(5, 10))
    U = uni(k, k1)
    run = make_run({5: [c]})
    I = minimal_interpretation(run, U)
    assert [t for t in range(15) if I.l(k, n, t)] == list(range(5, 11))
    assert is_consistent(run, I, U)
    # issued later than its validity starts: binding starts at the issue time
    I = minimal_interpretation(make_run({7: [c]}), U)
    assert [t for t in range(15) if I.l(k, n, t)] == list(range(7, 11))


def test_delegation_is_transitive():
    U = uni(k, k1, k2)
    run = make_run({0: [Auth(k, k1, True, A), Auth(k1, k2, False, A)]})
    I = minimal_interpretation(run, U)
    assert I.p(k, 3, k2, ("read",)) == 1
    assert I.p(k, 3, k1, ("read",)) == 2
    assert I.p(k, 3, k2, ("write",)) == 0
    assert is_interpretation(I) and is_consistent(run, I, U)


def test_interp_order_and_meet():
    U = uni(k, k1, k2)
    run = make_run({0: [Naming(k, n, k1)]})
    small = minimal_interpretation(run, U)
    big = minimal_interpretation(make_run({0: [Naming(k, n, k1), Naming(k, n, k2)]}), U)
    assert interp_leq(small, big) and not interp_leq(big, small)
    assert interp_meet(small, big) == small
    assert small == minimal_interpretation(run, U)


def test_eval_formula_examples():
    c = Naming(k, n, dot(k1, m), Range(0, 4))
    d = Naming(k1, m, k2, Range(2, 9))
    U = uni(k, k1, k2)
    run = make_run({0: [c, d]})
    I = minimal_interpretation(run, U)
    assert eval_formula(run, I, k, 3, Bound(dot(k, n), k2))
    assert not eval_formula(run, I, k, 1, Bound(dot(k, n), k2))
    assert eval_formula(run, I, k, 3, Bound(n, dot(k1, m)))
    assert eval_formula(run, I, k, 0, Issued(c)) and eval_formula(run, I, k, 0, Valid(c))
    assert eval_formula(run, I, k, 1, implies(NowIn(Range(2, 3)), Bound(dot(k, n), k2)))


# ---------------------------------------------------------------- entailment


ron, joe, dk, doctor = Key("k-ron"), Key("k-joe"), Key("k-d"), LocalName("doctor")
RONJOE = [Naming(ron, doctor, dot(joe, doctor), Range(1, 3)), Naming(joe, doctor, dk, Range(1, 3))]
U_RJ = Universe(frozenset([ron, joe, dk]), frozenset([doctor]), frozenset([("read",)]))


def test_entailment_examples():
    phi = implies(NowIn(Range(1, 3)), Bound(dot(ron, doctor), dk))
    assert entails_closed(RONJOE, [], phi, U_RJ)
    v = entailment(RONJOE, [], Bound(dot(ron, doctor), dk), U_RJ)
    assert not v and v.time == 0 and v.render().startswith("REFUTED (key")
    assert entailment(RONJOE, [], phi, U_RJ).render() == "ENTAILED (method chain |K|=3)"
    # the converse binding is not forced
    psi = implies(NowIn(Range(1, 3)), Bound(dk, dot(ron, doctor)))
    assert not entails_closed(RONJOE, [], psi, U_RJ)
    with pytest.raises(UniverseError):
        entailment(RONJOE, [], Bound(dot(k, n), dk), U_RJ)


def test_authorization_entailment():
    C = [Auth(k, k1, True, A), Auth(k1, k2, False, ActionExpr.of("read", "write"))]
    U = uni(k, k1, k2)
    assert entails_closed(C, [], Perm(k, k2, A), U)
    assert not entails_closed(C, [], Del(k, k2, A), U)
    assert not entails_closed(C, [], Perm(k, k2, ActionExpr.of("write")), U)


def test_revocation_changes_what_is_entailed():
    # adding a CRL can both add and remove consequences
    c = Naming(k, n, k1, Range(0, 9), kr)
    phi = implies(NowIn(Range(0, 4)), Bound(dot(k, n), k1))
    U = uni(k, k1, kr)
    assert not entails_closed([c], [], phi, U)
    live = Crl(kr, frozenset(), Range(0, 4))
    assert entails_closed([c], [live], phi, U)
    dead = Crl(kr, frozenset([c]), Range(0, 4))
    assert not entails_closed([c], [dead], phi, U)


def test_canonical_check_is_not_monotone_but_chain_is_exact():
    c = Naming(k, n, dot(k1, m))
    more = [Naming(k1, m, k2)]
    phi = formula_of_cert(c)
    U = uni(k, k1, k2)
    assert entails_closed([], [], phi, U, method="canonical")
    assert not entails_closed(more, [], phi, U, method="canonical")
    assert not entails_closed([], [], phi, U, method="chain")
    assert not entails_closed(more, [], phi, U, method="chain")
    assert in_chain_fragment(phi)
    with pytest.raises(ValueError):
        entailment([], [], Issued(c), U, method="chain")


def test_non_fragment_formulas_use_the_canonical_run():
    c = Naming(k, n, k1)
    U = uni(k, k1)
    v = entailment([c], [], conjunction([Issued(c), Valid(c)]), U)
    assert v.entailed and v.method == "canonical"


# ---------------------------------------------------------------- properties


seeds = st.integers(0, 10**6)


def _random_interp(rng, universe, H):
    keys = universe.sorted_keys()
    names = sorted(universe.names)
    acts = sorted(universe.actions)
    L = {(a, b, t): frozenset(x for x in keys if rng.random() < 0.4)
         for a in keys for b in names for t in range(H + 1) if rng.random() < 0.6}
    P = {(a, t, b, x): rng.choice((0, 1, 2)) for a in keys for b in keys for x in acts
         for t in range(H + 1) if rng.random() < 0.5}
    return Interpretation(L, P, universe, H)


@settings(max_examples=80, deadline=None)
@given(seeds)
def test_consistency_matches_certificate_formulas(seed):
    rng = random.Random(seed)
    C, C_R, keys, names, acts = instance(rng, max_certs=4)
    universe = universe_for(keys, names, acts, C + C_R)
    events = {0: set(C_R)}
    for c in C:
        events.setdefault(rng.randrange(0, 6), set()).add(c)
    run = make_run(events)
    H = 10
    for interp in [_random_interp(rng, universe, H), minimal_interpretation(run, universe)]:
        want = all(
            eval_formula(run, interp, k0, t, implies(conjunction([Issued(c), Valid(c)]), formula_of_cert(c)))
            for c in C for t in range(H + 1) for k0 in universe.sorted_keys()[:1])
        assert is_consistent(run, interp, universe) == want


@settings(max_examples=60, deadline=None)
@given(seeds)
def test_minimal_interpretation_is_least(seed):
    rng = random.Random(seed)
    C, C_R, keys, names, acts = instance(rng, max_certs=4)
    universe = universe_for(keys, names, acts, C + C_R)
    run = canonical_run(C, C_R)
    least = minimal_interpretation(run, universe)
    assert is_consistent(run, least, universe) and is_interpretation(least)
    seed_i = _random_interp(rng, universe, least.horizon)
    bigger = close_interpretation(run, universe, seed=seed_i)
    assert is_consistent(run, bigger, universe)
    assert interp_leq(least, bigger)
    assert interp_meet(least, bigger) == least


@settings(max_examples=60, deadline=None)
@given(seeds)
def test_chain_refutations_are_real(seed):
    rng = random.Random(seed)
    C, C_R, keys, names, acts = instance(rng, max_certs=4)
    target = rng.choice(C) if C else Naming(keys[0], names[0], keys[-1])
    universe = universe_for(keys, names, acts, C + C_R + [target])
    phi = formula_of_cert(target)
    v = entailment(C, C_R, phi, universe, method="chain")
    if v.entailed:
        assert target in C or entails_closed(C, C_R, phi, universe, method="canonical")
        return
    run = make_run({0: list(C) + list(C_R) + list(v.extra)})
    interp = minimal_interpretation(run, universe)
    interp = close_interpretation(run, universe, horizon=max(interp.horizon, v.time + 1))
    assert not eval_formula(run, interp, v.key, v.time, phi)


def test_bindings_may_shrink_over_time():
    U = uni(k, k1, k2)
    run = make_run({0: [Naming(k, n, k1, Range(0, 3)), Naming(k, n, k2, Range(0, 6))]})
    I = minimal_interpretation(run, U)
    assert I.l(k, n, 2) > I.l(k, n, 4) > I.l(k, n, 7)


def test_small_universe_entails_more():
    V = Range(0, 5)
    C = [Naming(k, n, k, V)]
    phi = formula_of_cert(Naming(k, n, dot(k, m), V))
    assert entails_closed(C, [], phi, Universe(frozenset([k]), frozenset([n, m])))
    assert not entails_closed(C, [], phi, Universe(frozenset([k, k1]), frozenset([n, m])))


@settings(max_examples=100, deadline=None)
@given(seeds)
def test_fully_qualified_intension_is_key_independent(seed):
    rng = random.Random(seed)
    keys, names = [k, k1, k2], [n, m, p_]
    L = {(a, b, 0): frozenset(x for x in keys if rng.random() < 0.5) for a in keys for b in names}
    p = dot(rng.choice(keys), *[rng.choice(names) for _ in range(rng.randrange(0, 4))])
    vals = {intension(L, p, x, 0) for x in keys}
    assert len(vals) == 1
