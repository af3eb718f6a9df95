"""Small random certificate instances shared by the property tests."""

from __future__ import annotations

import random

from spkicalc.algebra import INF, ActionExpr, Literal, Prefix, Range, representative_actions
from spkicalc.model import Auth, Crl, Key, LocalName, Naming, from_leaves
from spkicalc.reduction import ClosureConfig
from spkicalc.semantics import Universe

LITERALS = [("read",), ("write",), ("exec",)]
MAX_T = 8


def symbols(rng: random.Random):
    keys = [Key(f"k-{i}") for i in range(rng.randint(1, 4))]
    names = [LocalName(n) for n in ["a", "b", "c"][: rng.randint(1, 3)]]
    acts = LITERALS[: rng.randint(1, 3)]
    return keys, names, acts


def interval(rng):
    lo = rng.randint(0, MAX_T)
    if rng.random() < 0.2:
        return Range(lo, INF)
    return Range(lo, rng.randint(lo, MAX_T))


def subject(rng, keys, names, max_names=2):
    seq = [rng.choice(keys)] + [rng.choice(names) for _ in range(rng.randint(0, max_names))]
    return from_leaves(tuple(seq))


def action_expr(rng, acts, prefixes=True):
    atoms = {Literal(a) for a in rng.sample(acts, rng.randint(1, len(acts)))}
    if prefixes and rng.random() < 0.15:
        atoms.add(Prefix(("re",)))
    return ActionExpr(frozenset(atoms))


def certificate(rng, keys, names, acts, revocable=0.3, prefixes=True):
    revoker = rng.choice(keys) if rng.random() < revocable else None
    issuer = rng.choice(keys)
    if rng.random() < 0.6:
        return Naming(issuer, rng.choice(names), subject(rng, keys, names), interval(rng), revoker)
    return Auth(issuer, subject(rng, keys, names), rng.random() < 0.5,
                action_expr(rng, acts, prefixes), interval(rng), revoker)


def crls(rng, keys, certs, max_crls=2):
    """At most ``max_crls`` CRLs with pairwise disjoint intervals per issuer."""
    out = []
    taken = {}
    for _ in range(rng.randint(0, max_crls)):
        issuer = rng.choice(keys)
        v = interval(rng)
        if any(not (v.hi < w.lo or w.hi < v.lo) for w in taken.get(issuer, [])):
            continue
        taken.setdefault(issuer, []).append(v)
        mine = [c for c in certs if c.revoker == issuer]
        canceled = frozenset(c for c in mine if rng.random() < 0.4)
        out.append(Crl(issuer, canceled, v))
    return out


def instance(rng: random.Random, max_certs=6, prefixes=True):
    """(C, C_R, keys, names, literal actions) with a consistent CRL set."""
    keys, names, acts = symbols(rng)
    C = list({certificate(rng, keys, names, acts, prefixes=prefixes): None
              for _ in range(rng.randint(0, max_certs))})
    C_R = crls(rng, keys, C)
    return C, C_R, keys, names, acts


def universe_for(keys, names, acts, certs=()):
    atoms = {Literal(a) for a in acts}
    for c in certs:
        if isinstance(c, Auth):
            atoms |= c.action.atoms
    return Universe(frozenset(keys), frozenset(names), representative_actions(atoms))


def near_miss(rng, C, C_R, keys, names, acts, bound=4):
    """A certificate close to something derivable: a closure member, perturbed."""
    from spkicalc.algebra import EMPTY, action_union
    from spkicalc.model import Auth5, Name4
    from spkicalc.reduction import Closure, tuples_with_sources

    srcs = tuples_with_sources(C, C_R)
    pool = [t for t in Closure(srcs, "rs2", ClosureConfig(expr_len_bound=bound)).tuples
            if isinstance(t, (Name4, Auth5)) and t.validity is not EMPTY]
    if not pool:
        return certificate(rng, keys, names, acts, revocable=0)
    t = rng.choice(sorted(pool, key=repr))
    v = t.validity
    move = rng.randrange(4)
    if move == 0:
        v = Range(max(0, v.lo - rng.randint(0, 1)), v.hi if v.hi == INF else v.hi + rng.randint(0, 1))
    elif move == 1:
        v = Range(v.lo, v.lo)
    subj = t.subject
    if move == 2:
        subj = subject(rng, keys, names)
    if isinstance(t, Name4):
        return Naming(t.issuer, t.name, subj, v)
    a = t.action
    if move == 3:
        a = action_union(a, action_expr(rng, acts))
    return Auth(t.issuer, subj, t.delegate or rng.random() < 0.3, a, v)
