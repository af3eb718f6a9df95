"""Runs, interpretations and closed-semantics entailment at finite scale.

A run records which certificates are issued at each time.  An
interpretation assigns to every (key, name, time) a set of keys (``L``) and
to every (granting key, time, grantee, literal action) a level in {0, 1, 2}
(``P``: none, permitted, permitted and delegable).  Only nonempty ``L``
entries and nonzero ``P`` entries are stored.

Time is truncated at an effective horizon: one past the largest finite
interval endpoint or issue time in play (or the universe's own horizon if
larger).  Nothing changes after that point, so every lookup at a later time
is answered at the horizon.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass
from functools import lru_cache
from typing import Iterable, Mapping, Optional

from .algebra import INF, Range, action_member, interval_contains, point
from .errors import InconsistentCRLs, ModelError, UniverseError
from .model import (
    And,
    Auth,
    Bound,
    Crl,
    Del,
    Dot,
    Issued,
    Key,
    LocalName,
    Naming,
    Not,
    NowIn,
    Perm,
    Valid,
    leaves,
)
from .reduction import find_crl_clash


# ---------------------------------------------------------------- universe and runs


@dataclass(frozen=True)
class Universe:
    keys: frozenset
    names: frozenset = frozenset()
    actions: frozenset = frozenset()
    horizon: int = 0

    def __post_init__(self):
        for attr in ("keys", "names", "actions"):
            val = getattr(self, attr)
            if not isinstance(val, frozenset):
                object.__setattr__(self, attr, frozenset(val))
        if any(not isinstance(k, Key) for k in self.keys):
            raise UniverseError("universe keys must be Key values")
        if any(not isinstance(n, LocalName) for n in self.names):
            raise UniverseError("universe names must be LocalName values")
        if any(not isinstance(a, tuple) or not a for a in self.actions):
            raise UniverseError("universe actions are literal actions (nonempty tuples of strings)")

    def sorted_keys(self) -> list:
        return sorted(self.keys)


class Run:
    """A finite-support map from times to sets of issued certificates."""

    def __init__(self, events: Mapping[int, Iterable]):
        self.events = {int(t): frozenset(cs) for t, cs in events.items() if cs}
        self._first = {}
        for t in sorted(self.events):
            for c in self.events[t]:
                self._first.setdefault(c, t)
        self.crls = [(t, c) for c, t in sorted(self._first.items(), key=lambda kv: kv[1])
                     if isinstance(c, Crl)]

    def __eq__(self, other):
        return isinstance(other, Run) and self.events == other.events

    def __hash__(self):
        return hash(frozenset(self.events.items()))

    def __repr__(self):
        return f"Run({self.events!r})"

    def certificates(self) -> frozenset:
        return frozenset(self._first)

    def issue_time(self, c) -> Optional[int]:
        """Earliest time at which ``c`` is issued, or None."""
        return self._first.get(c)

    def issued_by(self, c, t: int) -> bool:
        first = self._first.get(c)
        return first is not None and first <= t

    def last_event(self) -> int:
        return max(self.events, default=0)


def make_run(events: Mapping[int, Iterable]) -> Run:
    run = Run(events)
    clash = find_crl_clash(c for _, c in run.crls)
    if clash is not None:
        raise InconsistentCRLs(*clash)
    return run


def canonical_run(C: Iterable, C_R: Iterable) -> Run:
    """Everything issued at time 0 and nothing afterwards."""
    return make_run({0: set(C) | set(C_R)})


def applicable(run: Run, c, t: int) -> bool:
    if not isinstance(c, (Naming, Auth)):
        raise ModelError("applicability is defined for naming and authorization certificates")
    if c.revoker is None:
        return True
    for t0, crl in run.crls:
        if t0 > t:
            break
        if crl.issuer == c.revoker and interval_contains(crl.validity, t) and c not in crl.canceled:
            return True
    return False


def _endpoints(c):
    out = []
    if isinstance(c.validity, Range):
        out.append(c.validity.lo)
        if c.validity.hi != INF:
            out.append(c.validity.hi)
    if isinstance(c, Crl):
        for x in c.canceled:
            out.extend(_endpoints(x))
    return out


def effective_horizon(run: Run, universe: Universe, extra=()) -> int:
    pts = [universe.horizon - 1, run.last_event()]
    for c in run.certificates():
        pts.extend(_endpoints(c))
    pts.extend(extra)
    return max(pts) + 1


def _symbols_of_cert(c, keys, names):
    keys.add(c.issuer)
    if isinstance(c, Crl):
        for x in c.canceled:
            _symbols_of_cert(x, keys, names)
        return
    if isinstance(c, Naming):
        names.add(c.name)
    for x in leaves(c.subject):
        (keys if isinstance(x, Key) else names).add(x)
    if c.revoker is not None:
        keys.add(c.revoker)


def symbols(certs: Iterable) -> tuple:
    keys, names = set(), set()
    for c in certs:
        _symbols_of_cert(c, keys, names)
    return keys, names


def _check_universe(certs, universe):
    keys, names = symbols(certs)
    if not keys <= universe.keys:
        raise UniverseError(f"keys outside the universe: {sorted(keys - universe.keys)}")
    if not names <= universe.names:
        raise UniverseError(f"names outside the universe: {sorted(names - universe.names)}")


# ---------------------------------------------------------------- interpretations


@dataclass(frozen=True, eq=False)
class Interpretation:
    """``L[(k, n, t)]`` and ``P[(k1, t, k2, act)]`` for ``t <= horizon``."""

    L: Mapping
    P: Mapping
    universe: Universe
    horizon: int

    def l(self, k, n, t) -> frozenset:
        return self.L.get((k, n, min(t, self.horizon)), frozenset())

    def p(self, k1, t, k2, act) -> int:
        return self.P.get((k1, min(t, self.horizon), k2, act), 0)

    def __eq__(self, other):
        return (isinstance(other, Interpretation) and interp_leq(self, other)
                and interp_leq(other, self))

    __hash__ = None


def intension(L, p, k: Key, t: int) -> frozenset:
    """The set of keys ``p`` denotes under ``L`` at key ``k`` and time ``t``.

    ``L`` is an :class:`Interpretation` or a mapping from ``(k, n, t)`` to
    key sets.
    """
    look = L.l if isinstance(L, Interpretation) else (lambda a, b, c: L.get((a, b, c), frozenset()))
    return _intension(look, p, k, t)


def _intension(look, p, k, t) -> frozenset:
    if isinstance(p, Key):
        return frozenset([p])
    if isinstance(p, LocalName):
        return frozenset(look(k, p, t))
    if isinstance(p, Dot):
        out = set()
        for k2 in _intension(look, p.head, k, t):
            out |= _intension(look, p.tail, k2, t)
        return frozenset(out)
    raise ModelError(f"not a principal expression: {p!r}")


def _leafwise(look, seq, k, t) -> set:
    """Right-associated evaluation on a leaf sequence (same value as the recursion)."""
    cur = {k}
    for x in seq:
        if isinstance(x, Key):
            cur = {x} if cur else set()
        else:
            nxt = set()
            for y in cur:
                nxt |= look(y, x, t)
            cur = nxt
        if not cur:
            break
    return cur


def _active(run: Run, t: int, extra=()) -> list:
    out = []
    for c in sorted(run.certificates(), key=_order):
        if isinstance(c, Crl) or not run.issued_by(c, t):
            continue
        if interval_contains(c.validity, t) and applicable(run, c, t):
            out.append(c)
    out.extend(extra)
    return out


@lru_cache(maxsize=None)
def _order(c):
    from .sexpr import encode_certificate

    return encode_certificate(c)


def _fix_time(certs, universe, t, L=None, P=None):
    """Least (L, P) at one time that contains the seeds and satisfies ``certs``."""
    L = {kn: set(v) for kn, v in (L or {}).items()}
    P = dict(P or {})
    look = lambda k, n, _t: L.get((k, n), frozenset())
    namings = [c for c in certs if isinstance(c, Naming)]
    auths = [c for c in certs if isinstance(c, Auth)]
    seqs = {c: leaves(c.subject) for c in namings + auths}
    changed = True
    while changed:
        changed = False
        for c in namings:
            got = _leafwise(look, seqs[c], c.issuer, t)
            cell = L.setdefault((c.issuer, c.name), set())
            if not got <= cell:
                cell |= got
                changed = True
    acts = sorted(universe.actions)
    for c in auths:
        level = 2 if c.delegate else 1
        granted = [a for a in acts if action_member(a, c.action)]
        for k2 in _leafwise(look, seqs[c], c.issuer, t):
            for a in granted:
                if P.get((c.issuer, k2, a), 0) < level:
                    P[(c.issuer, k2, a)] = level
    _close_delegation(P)
    return {kn: frozenset(v) for kn, v in L.items() if v}, P


def _close_delegation(P):
    """Raise P until 2-level grants compose: P(a,b)=2 and P(b,c)=i give P(a,c) >= i."""
    changed = True
    while changed:
        changed = False
        by_src = {}
        for (k1, k2, a), lv in P.items():
            by_src.setdefault((k1, a), []).append((k2, lv))
        for (k1, k2, a), lv in list(P.items()):
            if lv != 2:
                continue
            for k3, lv3 in by_src.get((k2, a), ()):
                if P.get((k1, k3, a), 0) < lv3:
                    P[(k1, k3, a)] = lv3
                    changed = True


def close_interpretation(run: Run, universe: Universe, seed: Optional[Interpretation] = None,
                         *, horizon: Optional[int] = None) -> Interpretation:
    """Least interpretation consistent with ``run`` that contains ``seed``."""
    _check_universe(run.certificates(), universe)
    H = horizon if horizon is not None else effective_horizon(run, universe)
    if seed is not None:
        H = max(H, seed.horizon)
    L, P = {}, {}
    for t in range(H + 1):
        sl, sp = {}, {}
        if seed is not None:
            for (k, n, tt), v in seed.L.items():
                if tt == t or (tt == seed.horizon and t > tt):
                    sl[(k, n)] = v
            for (k1, tt, k2, a), lv in seed.P.items():
                if tt == t or (tt == seed.horizon and t > tt):
                    sp[(k1, k2, a)] = lv
        lt, pt = _fix_time(_active(run, t), universe, t, sl, sp)
        for (k, n), v in lt.items():
            L[(k, n, t)] = v
        for (k1, k2, a), lv in pt.items():
            if lv:
                P[(k1, t, k2, a)] = lv
    return Interpretation(L, P, universe, H)


def minimal_interpretation(run: Run, universe: Universe) -> Interpretation:
    return close_interpretation(run, universe)


def interp_leq(i1: Interpretation, i2: Interpretation) -> bool:
    H = max(i1.horizon, i2.horizon)

    def times(t, h):
        return range(t, H + 1) if t == h else (t,)

    for (k, n, t), v in i1.L.items():
        if any(not v <= i2.l(k, n, s) for s in times(t, i1.horizon)):
            return False
    for (k1, t, k2, a), lv in i1.P.items():
        if any(lv > i2.p(k1, s, k2, a) for s in times(t, i1.horizon)):
            return False
    return True


def interp_meet(i1: Interpretation, i2: Interpretation) -> Interpretation:
    """Pointwise intersection of L and minimum of P."""
    H = max(i1.horizon, i2.horizon)
    L, P = {}, {}
    for t in range(H + 1):
        for (k, n, tt) in i1.L:
            if tt == min(t, i1.horizon):
                v = i1.l(k, n, t) & i2.l(k, n, t)
                if v:
                    L[(k, n, t)] = v
        for (k1, tt, k2, a) in i1.P:
            if tt == min(t, i1.horizon):
                lv = min(i1.p(k1, t, k2, a), i2.p(k1, t, k2, a))
                if lv:
                    P[(k1, t, k2, a)] = lv
    return Interpretation(L, P, i1.universe, H)


def is_interpretation(interp: Interpretation) -> bool:
    """Check the delegation-transitivity invariant of ``P``."""
    for (k1, t, k2, a), lv in interp.P.items():
        if lv != 2:
            continue
        for (k2b, tb, k3, ab), lv3 in interp.P.items():
            if k2b == k2 and tb == t and ab == a and interp.p(k1, t, k3, a) < lv3:
                return False
    return True


def is_consistent(run: Run, interp: Interpretation, universe: Universe) -> bool:
    """Every issued, applicable, currently valid certificate is respected."""
    H = max(interp.horizon, effective_horizon(run, universe))
    acts = sorted(universe.actions)
    for t in range(H + 1):
        for c in run.certificates():
            if isinstance(c, Crl) or not run.issued_by(c, t):
                continue
            if not interval_contains(c.validity, t) or not applicable(run, c, t):
                continue
            subj = intension(interp, c.subject, c.issuer, t)
            if isinstance(c, Naming):
                if not subj <= intension(interp, c.name, c.issuer, t):
                    return False
                continue
            need = 2 if c.delegate else 1
            for k2 in subj:
                for a in acts:
                    if action_member(a, c.action) and interp.p(c.issuer, t, k2, a) < need:
                        return False
    return True


# ---------------------------------------------------------------- formulas


def eval_formula(run: Run, interp: Interpretation, k: Key, t: int, phi) -> bool:
    if isinstance(phi, Bound):
        return intension(interp, phi.p, k, t) >= intension(interp, phi.q, k, t)
    if isinstance(phi, Issued):
        return run.issued_by(phi.c, t)
    if isinstance(phi, Valid):
        return applicable(run, phi.c, t)
    if isinstance(phi, (Perm, Del)):
        need = 1 if isinstance(phi, Perm) else 2
        acts = [a for a in sorted(interp.universe.actions) if action_member(a, phi.A)]
        for k2 in intension(interp, phi.p, phi.k, t):
            for a in acts:
                if interp.p(phi.k, t, k2, a) < need:
                    return False
        return True
    if isinstance(phi, NowIn):
        return interval_contains(phi.V, t)
    if isinstance(phi, Not):
        return not eval_formula(run, interp, k, t, phi.f)
    if isinstance(phi, And):
        return eval_formula(run, interp, k, t, phi.left) and eval_formula(run, interp, k, t, phi.right)
    raise ModelError(f"not a formula: {phi!r}")


def conjunction(formulas) -> object:
    formulas = list(formulas)
    if not formulas:
        return NowIn(Range(0, INF))
    out = formulas[0]
    for f in formulas[1:]:
        out = And(out, f)
    return out


def formula_symbols(phi, keys=None, names=None):
    keys = set() if keys is None else keys
    names = set() if names is None else names
    if isinstance(phi, Bound):
        for x in leaves(phi.p) + leaves(phi.q):
            (keys if isinstance(x, Key) else names).add(x)
    elif isinstance(phi, (Issued, Valid)):
        _symbols_of_cert(phi.c, keys, names)
    elif isinstance(phi, (Perm, Del)):
        keys.add(phi.k)
        for x in leaves(phi.p):
            (keys if isinstance(x, Key) else names).add(x)
    elif isinstance(phi, Not):
        formula_symbols(phi.f, keys, names)
    elif isinstance(phi, And):
        formula_symbols(phi.left, keys, names)
        formula_symbols(phi.right, keys, names)
    return keys, names


def _formula_times(phi, out):
    if isinstance(phi, NowIn) and isinstance(phi.V, Range):
        out.append(phi.V.lo)
        if phi.V.hi != INF:
            out.append(phi.V.hi)
    elif isinstance(phi, (Issued, Valid)):
        out.extend(_endpoints(phi.c))
    elif isinstance(phi, Not):
        _formula_times(phi.f, out)
    elif isinstance(phi, And):
        _formula_times(phi.left, out)
        _formula_times(phi.right, out)
    return out


# ---------------------------------------------------------------- entailment


@dataclass(frozen=True)
class Verdict:
    """Outcome of a closed-semantics entailment check.

    ``method`` is "canonical" when only the canonical run was examined and
    "chain" when the answer is exact for the universe.  On refutation,
    ``key`` and ``time`` locate the failure and ``extra`` lists the
    certificates added to the canonical run to obtain it (empty when the
    canonical run itself refutes).
    """

    entailed: bool
    method: str
    universe_keys: int
    key: Optional[Key] = None
    time: Optional[int] = None
    extra: tuple = ()

    def __bool__(self):
        return self.entailed

    def render(self) -> str:
        tail = f"method {self.method} |K|={self.universe_keys}"
        if self.entailed:
            return f"ENTAILED ({tail})"
        return f"REFUTED (key {self.key!r} time {self.time}; {tail})"


def _split_fragment(phi):
    """Return (guard interval or None, [atoms]) for ``[now∈V ->] a1 ∧ ... ∧ an``."""
    guard = None
    body = phi
    if isinstance(phi, Not) and isinstance(phi.f, And) and isinstance(phi.f.left, NowIn) \
            and isinstance(phi.f.right, Not):
        guard = phi.f.left.V
        body = phi.f.right.f
    atoms = []
    stack = [body]
    while stack:
        f = stack.pop()
        if isinstance(f, And):
            stack.extend([f.right, f.left])
        elif isinstance(f, (Bound, Perm, Del)):
            atoms.append(f)
        else:
            return None
    return guard, atoms


def in_chain_fragment(phi) -> bool:
    return _split_fragment(phi) is not None


@lru_cache(maxsize=256)
def _canonical_model(C: frozenset, C_R: frozenset, universe: Universe, H: int):
    run = canonical_run(C, C_R)
    return run, close_interpretation(run, universe, horizon=H)


@lru_cache(maxsize=256)
def _instance_horizon(C: frozenset, C_R: frozenset, universe: Universe) -> int:
    clash = find_crl_clash(C_R)
    if clash is not None:
        raise InconsistentCRLs(*clash)
    _check_universe(C | C_R, universe)
    return effective_horizon(Run({0: C | C_R}), universe)


def _prepare(C, C_R, phi, universe):
    C, C_R = frozenset(C), frozenset(C_R)
    H = _instance_horizon(C, C_R, universe)
    fk, fn = formula_symbols(phi)
    if not fk <= universe.keys:
        raise UniverseError(f"formula keys outside the universe: {sorted(fk - universe.keys)}")
    if not fn <= universe.names:
        raise UniverseError(f"formula names outside the universe: {sorted(fn - universe.names)}")
    H = max([H] + [x + 1 for x in _formula_times(phi, [])])
    return C, C_R, H


def entailment(C, C_R, phi, universe: Universe, *, method: str = "auto") -> Verdict:
    """Decide whether issuing ``C ∪ C_R`` forces ``phi`` in the closed semantics.

    ``canonical`` checks the run issuing exactly ``C ∪ C_R`` at time 0.
    ``chain`` is exact for formulas ``[now∈V ->] a1 ∧ ... ∧ an`` with each
    ``ai`` a binding, permission or delegation atom: a refuting run only
    needs, on top of the canonical run, point-in-time naming certificates
    that realize one chain of bindings for the expression being tested,
    and every such chain over the universe's keys is tried.  ``auto`` uses
    ``chain`` inside that fragment and ``canonical`` elsewhere.
    """
    if method not in ("auto", "canonical", "chain"):
        raise ValueError(f"unknown entailment method {method!r}")
    C, C_R, H = _prepare(C, C_R, phi, universe)
    if method == "auto":
        method = "chain" if in_chain_fragment(phi) else "canonical"
    if method == "chain" and not in_chain_fragment(phi):
        raise ValueError("the chain method needs a formula [now∈V ->] conjunction of ↦/Perm/Del atoms")
    run, interp = _canonical_model(C, C_R, universe, H)
    nk = len(universe.keys)
    # Every certificate of the canonical run is issued from time 0 on, so the
    # premise "all of C ∪ C_R issued" holds throughout and only phi is checked.
    keys = universe.sorted_keys() if _key_relative(phi) else universe.sorted_keys()[:1]
    guard = _guard(phi)
    for t in range(H + 1):
        if guard is not None and not interval_contains(guard, t):
            continue  # "now in V -> ..." holds outside V
        for k in keys:
            if not eval_formula(run, interp, k, t, phi):
                return Verdict(False, method, nk, k, t)
    if method == "canonical":
        return Verdict(True, method, nk)
    return _chain_search(run, interp, universe, phi, H, nk)


def _guard(phi):
    if isinstance(phi, Not) and isinstance(phi.f, And) and isinstance(phi.f.left, NowIn):
        return phi.f.left.V
    return None


def _key_relative(phi) -> bool:
    """Whether the truth of ``phi`` can depend on the evaluation key."""
    if isinstance(phi, Bound):
        return not (isinstance(leaves(phi.p)[0], Key) and isinstance(leaves(phi.q)[0], Key))
    if isinstance(phi, Not):
        return _key_relative(phi.f)
    if isinstance(phi, And):
        return _key_relative(phi.left) or _key_relative(phi.right)
    return False


def entails_closed(C, C_R, phi, universe: Universe, *, method: str = "auto") -> bool:
    return entailment(C, C_R, phi, universe, method=method).entailed


def _chains(seq, start, keys, t, known):
    """Ways to realize one key of ``seq`` from ``start`` with point naming certificates.

    Yields the certificates of each chain that are not already implied by
    ``known(k, n)`` (the bindings of the canonical model); chains that add
    nothing are skipped, since the canonical check already covers them.
    """
    name_slots = sum(1 for x in seq if isinstance(x, LocalName))
    seen = set()
    for choice in itertools.product(keys, repeat=name_slots):
        cur, certs, i = start, [], 0
        for x in seq:
            if isinstance(x, Key):
                cur = x
            else:
                nxt = choice[i]
                i += 1
                if nxt not in known(cur, x):
                    certs.append(Naming(cur, x, nxt, point(t)))
                cur = nxt
        certs = tuple(certs)
        if certs and certs not in seen:
            seen.add(certs)
            yield certs


def _chain_search(run, canon, universe, phi, H, nk) -> Verdict:
    guard, atoms = _split_fragment(phi)
    keys = universe.sorted_keys()
    seen = set()
    for t in range(H + 1):
        if guard is not None and not interval_contains(guard, t):
            continue
        base = _active(run, t)
        sig = frozenset(base)
        if sig in seen:
            continue
        seen.add(sig)
        known = lambda k, n, t=t: canon.l(k, n, t)
        for atom in atoms:
            if isinstance(atom, Bound):
                seq = leaves(atom.q)
                starts = keys if _key_relative(atom) else keys[:1]
            else:
                seq = leaves(atom.p)
                starts = [atom.k]
            for k0 in starts:
                for extra in _chains(seq, k0, keys, t, known):
                    L, P = _fix_time(base + list(extra), universe, t)
                    interp = _Pinned(L, P, universe, H, t)
                    if not eval_formula(run, interp, k0, t, atom):
                        return Verdict(False, "chain", nk, k0, t, extra)
    return Verdict(True, "chain", nk)


class _Pinned(Interpretation):
    """A one-time model: ``L[(k, n)]`` and ``P[(k1, k2, act)]`` read at every time."""

    def __init__(self, L, P, universe, horizon, t):
        object.__setattr__(self, "L", {(a, b, t): v for (a, b), v in L.items()})
        object.__setattr__(self, "P", {(a, t, b, c): lv for (a, b, c), lv in P.items()})
        object.__setattr__(self, "universe", universe)
        object.__setattr__(self, "horizon", horizon)
        object.__setattr__(self, "_L1", L)
        object.__setattr__(self, "_P1", P)

    def l(self, k, n, t):
        return self._L1.get((k, n), frozenset())

    def p(self, k1, t, k2, act):
        return self._P1.get((k1, k2, act), 0)
