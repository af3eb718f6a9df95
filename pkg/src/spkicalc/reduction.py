"""Tuple conversion, reduction rules and bounded closures.

Certificates are turned into 4-tuples (naming) and 5-tuples (authorization)
under CRL liveness, then combined with the reduction rules below.  3-tuples
``<p, q, V>`` ("p is bound to q during V") are produced by R5/R6/R6' only
and never feed back into 4- or 5-tuples, so they are computed after the
4/5-tuple closure and only on request.

Rules (``p`` may be empty, in which case ``r·p`` is just ``r``)::

    R0   -> <k, n, k·n, [0,inf]>
    R1   <k1, k2, true, A1, V1> + <k2, S, D2, A2, V2> -> <k1, S, D2, A1∩A2, V1∩V2>
    R2   <k1, n, k2·m·p, V1> + <k2, m, k3, V2>        -> <k1, n, k3·p, V1∩V2>
    R2'  <k1, n, k2·m·p, V1> + <k2, m, q, V2>         -> <k1, n, q·p, V1∩V2>
    R3   <k1, k2·n·p, D, A, V1> + <k2, n, k3, V2>     -> <k1, k3·p, D, A, V1∩V2>
    R3'  <k1, k2·n·p, D, A, V1> + <k2, n, q, V2>      -> <k1, q·p, D, A, V1∩V2>
    R4a  <k, n, p, V1> + <k, n, p, V2>     -> <k, n, p, V3>       if V1∪V2 ⊇ V3
    R4b  <k, p, D, A, V1> + <k, p, D, A, V2> -> <k, p, D, A, V3>  if V1∪V2 ⊇ V3
    R4c  <k, p, D1, A1, V> + <k, p, D2, A2, V> -> <k, p, D3, A3, V>
                                     if D3 -> D1∧D2 and A1∪A2 ⊇ A3
    R5   -> <p, p, [0,inf]>
    R6   <p, k1·n·q, V1> + <k1, n, k2, V2> -> <p, k2·q, V1∩V2>
    R6'  <p, k1·n·q, V1> + <k1, n, r, V2>  -> <p, r·q, V1∩V2>
"""

from __future__ import annotations

import enum
from collections import deque
from dataclasses import dataclass
from functools import lru_cache
from typing import Iterable, Optional

from .algebra import (
    ALWAYS,
    EMPTY,
    ActionExpr,
    Literal,
    Range,
    action_equivalent,
    action_intersect,
    action_union,
    actions_cover,
    cover_sequence,
    interval,
    interval_hull,
    interval_intersect,
    intervals_cover,
    _touch,
)
from .errors import BoundTooSmall, ModelError, NotConcrete, NotLive, UnknownRule
from .model import (
    Auth,
    Auth5,
    Bind3,
    Crl,
    Key,
    LocalName,
    Name4,
    Naming,
    from_leaves,
    is_fully_qualified,
    leaves,
    subsumes,
    tuple_of_cert,
)
from .sexpr import encode_certificate, encode_tuple


# ---------------------------------------------------------------- liveness


def is_live(c, crl) -> bool:
    if not isinstance(c, (Naming, Auth)) or not isinstance(crl, Crl):
        raise ModelError("liveness relates a naming/authorization certificate to a CRL")
    return (
        c.revoker is not None
        and c.revoker == crl.issuer
        and interval_intersect(c.validity, crl.validity) is not EMPTY
        and c not in crl.canceled
    )


def _with_validity(t, v):
    if isinstance(t, Name4):
        return Name4(t.issuer, t.name, t.subject, v)
    return Auth5(t.issuer, t.subject, t.delegate, t.action, v)


def tuple_of_pair(c, crl):
    if not is_live(c, crl):
        raise NotLive("certificate is not live with respect to the CRL")
    return _with_validity(tuple_of_cert(c), interval_intersect(c.validity, crl.validity))


def _clip(t, issued_at):
    v = t.validity
    if issued_at is None or v is EMPTY:
        return t
    return _with_validity(t, interval(max(issued_at, v.lo), v.hi))


def tuples_with_sources(C: Iterable, C_R: Iterable, *, issue_times: Optional[dict] = None) -> dict:
    """Map every tuple of ``Tuples(C, C_R)`` to the (cert, crl) pair it came from.

    ``crl`` is None for irrevocable certificates.  When ``issue_times`` maps
    certificates to issue times, each tuple's interval is clipped to start no
    earlier than its certificate's issue time.  Empty-interval tuples are
    dropped.
    """
    crls = sorted(C_R, key=_cert_order)
    out = {}
    for c in sorted(C, key=_cert_order):
        if isinstance(c, Crl):
            continue
        at = issue_times.get(c) if issue_times else None
        if c.revoker is None:
            pairs = [(tuple_of_cert(c), None)]
        else:
            pairs = [(tuple_of_pair(c, r), r) for r in crls if is_live(c, r)]
        for t, r in pairs:
            t = _clip(t, at)
            if t.validity is not EMPTY and t not in out:
                out[t] = (c, r)
    return out


def tuples_of(C: Iterable, C_R: Iterable, *, issue_times: Optional[dict] = None) -> frozenset:
    return frozenset(tuples_with_sources(C, C_R, issue_times=issue_times))


def crl_set_consistent(C_R: Iterable) -> bool:
    return find_crl_clash(C_R) is None


def find_crl_clash(C_R: Iterable):
    """Return a pair of distinct same-issuer CRLs with overlapping validity, or None."""
    crls = sorted(set(C_R), key=_cert_order)
    for i, a in enumerate(crls):
        for b in crls[i + 1:]:
            if a.issuer == b.issuer and interval_intersect(a.validity, b.validity) is not EMPTY:
                return a, b
    return None


def _cert_order(c):
    return encode_certificate(c)


# ---------------------------------------------------------------- rules


class RuleSet(enum.Enum):
    RS0 = "rs0"
    RS1 = "rs1"
    RS2 = "rs2"

    @property
    def rules(self) -> frozenset:
        return _RULESETS[self]

    @classmethod
    def coerce(cls, value) -> "RuleSet":
        if isinstance(value, cls):
            return value
        try:
            return cls(str(value).lower())
        except ValueError:
            raise UnknownRule(f"unknown rule set {value!r}") from None


_RULESETS = {
    RuleSet.RS0: frozenset({"R1", "R2", "R3", "R5", "R6"}),
    RuleSet.RS1: frozenset({"R0", "R1", "R2'", "R3'", "R5", "R6'"}),
}
_RULESETS[RuleSet.RS2] = _RULESETS[RuleSet.RS1] | {"R4a", "R4b", "R4c"}


def _subj(t):
    return leaves(t.subject)


def _r0(t1, t2, target):
    try:
        k, n = target
    except (TypeError, ValueError):
        return None
    if not isinstance(k, Key) or not isinstance(n, LocalName):
        return None
    return Name4(k, n, from_leaves((k, n)), ALWAYS)


def _r5(t1, t2, target):
    if target is None or not is_fully_qualified(target):
        return None
    p = from_leaves(leaves(target))
    return Bind3(p, p, ALWAYS)


def _r1(t1, t2, target):
    if not (isinstance(t1, Auth5) and isinstance(t2, Auth5) and t1.delegate):
        return None
    s = _subj(t1)
    if len(s) != 1 or s[0] != t2.issuer:
        return None
    v = interval_intersect(t1.validity, t2.validity)
    if v is EMPTY:
        return None
    return Auth5(t1.issuer, t2.subject, t2.delegate, action_intersect(t1.action, t2.action), v)


def _rewrite(s, t2, key_only):
    """Replace the leading ``k·n`` of leaf sequence ``s`` by the subject of ``t2``."""
    if not isinstance(t2, Name4) or len(s) < 2 or s[0] != t2.issuer or s[1] != t2.name:
        return None
    r = _subj(t2)
    if key_only and (len(r) != 1 or not isinstance(r[0], Key)):
        return None
    return from_leaves(r + s[2:])


def _make_r2(key_only):
    def rule(t1, t2, target):
        if not isinstance(t1, Name4):
            return None
        subject = _rewrite(_subj(t1), t2, key_only)
        v = interval_intersect(t1.validity, t2.validity) if subject is not None else EMPTY
        if v is EMPTY:
            return None
        return Name4(t1.issuer, t1.name, subject, v)

    return rule


def _make_r3(key_only):
    def rule(t1, t2, target):
        if not isinstance(t1, Auth5):
            return None
        subject = _rewrite(_subj(t1), t2, key_only)
        v = interval_intersect(t1.validity, t2.validity) if subject is not None else EMPTY
        if v is EMPTY:
            return None
        return Auth5(t1.issuer, subject, t1.delegate, t1.action, v)

    return rule


def _make_r6(key_only):
    def rule(t1, t2, target):
        if not isinstance(t1, Bind3):
            return None
        rhs = _rewrite(leaves(t1.rhs), t2, key_only)
        v = interval_intersect(t1.validity, t2.validity) if rhs is not None else EMPTY
        if v is EMPTY:
            return None
        return Bind3(t1.lhs, rhs, v)

    return rule


def _r4a(t1, t2, target):
    if not (isinstance(t1, Name4) and isinstance(t2, Name4)):
        return None
    if (t1.issuer, t1.name, _subj(t1)) != (t2.issuer, t2.name, _subj(t2)):
        return None
    if not isinstance(target, Range) or not intervals_cover(t1.validity, t2.validity, target):
        return None
    return Name4(t1.issuer, t1.name, t1.subject, target)


def _r4b(t1, t2, target):
    if not (isinstance(t1, Auth5) and isinstance(t2, Auth5)):
        return None
    if (t1.issuer, _subj(t1), t1.delegate) != (t2.issuer, _subj(t2), t2.delegate):
        return None
    if not action_equivalent(t1.action, t2.action):
        return None
    if not isinstance(target, Range) or not intervals_cover(t1.validity, t2.validity, target):
        return None
    return Auth5(t1.issuer, t1.subject, t1.delegate, t1.action, target)


def _r4c(t1, t2, target):
    if not (isinstance(t1, Auth5) and isinstance(t2, Auth5)):
        return None
    if (t1.issuer, _subj(t1)) != (t2.issuer, _subj(t2)) or t1.validity != t2.validity:
        return None
    if t1.validity is EMPTY:
        return None
    try:
        d3, a3 = target
    except (TypeError, ValueError):
        return None
    if not isinstance(d3, bool) or not isinstance(a3, ActionExpr):
        return None
    if d3 and not (t1.delegate and t2.delegate):
        return None
    if not actions_cover(t1.action, t2.action, a3):
        return None
    return Auth5(t1.issuer, t1.subject, d3, a3, t1.validity)


_RULES = {
    "R0": _r0,
    "R1": _r1,
    "R2": _make_r2(True),
    "R2'": _make_r2(False),
    "R3": _make_r3(True),
    "R3'": _make_r3(False),
    "R4a": _r4a,
    "R4b": _r4b,
    "R4c": _r4c,
    "R5": _r5,
    "R6": _make_r6(True),
    "R6'": _make_r6(False),
}
RULE_NAMES = tuple(_RULES)


def canonical_rule(rule: str) -> str:
    name = str(rule).replace("′", "'").replace("(", "").replace(")", "")
    if name.startswith("r"):
        name = "R" + name[1:]
    if name not in _RULES:
        raise UnknownRule(f"unknown rule {rule!r}")
    return name


def apply_rule(rule: str, t1=None, t2=None, *, target=None):
    """Apply one rule; None when premise shapes do not match or the result is empty.

    R0 takes ``target=(key, name)``, R5 takes ``target=p``; R4a/R4b take the
    desired interval and R4c the pair ``(D3, A3)``.  A missing second premise
    defaults to the first, which makes the one-premise weakening forms of R4
    available directly.
    """
    fn = _RULES[canonical_rule(rule)]
    if t2 is None:
        t2 = t1
    return fn(t1, t2, target)


# ---------------------------------------------------------------- derivations


@dataclass(frozen=True)
class Step:
    rule: str
    premises: tuple
    conclusion: object
    target: object = None
    source: object = None


@dataclass(frozen=True)
class Derivation:
    """Numbered steps; each premise index points at an earlier step."""

    steps: tuple
    mode: str = "exact"
    bound: Optional[int] = None

    @property
    def conclusion(self):
        return self.steps[-1].conclusion

    def __len__(self):
        return len(self.steps)

    def render(self) -> str:
        lines = []
        for i, s in enumerate(self.steps, 1):
            prem = ",".join(str(j + 1) for j in s.premises)
            lines.append(f"{i}: {s.rule} [{prem}] => {encode_tuple(s.conclusion)}")
        return "\n".join(lines)

    def replay(self) -> bool:
        """Re-apply every rule to its premises and compare conclusions."""
        for s in self.steps:
            if s.rule == "INPUT":
                continue
            prem = [self.steps[j].conclusion for j in s.premises]
            got = apply_rule(s.rule, *prem, target=s.target)
            if got != s.conclusion:
                return False
        return True


@dataclass(frozen=True)
class _Just:
    rule: str
    premises: tuple = ()
    target: object = None
    source: object = None


@dataclass(frozen=True)
class ClosureConfig:
    expr_len_bound: Optional[int] = None
    emit_bind3: bool = False


def tuple_size(t) -> int:
    if isinstance(t, Bind3):
        return max(len(leaves(t.lhs)), len(leaves(t.rhs)))
    return len(_subj(t))


def default_bound(T: Iterable, target=None) -> int:
    total = sum(tuple_size(t) for t in T)
    if target is not None:
        total += tuple_size(target)
    return max(total, 1)


def _prefixes(p):
    s = leaves(p)
    return [from_leaves(s[:i]) for i in range(1, len(s) + 1)]


def closure_expressions(T: Iterable, extra=()) -> list:
    """Fully qualified expressions for R5 seeds: prefixes of every subject,
    issuer keys, and ``k·n`` for every 4-tuple."""
    out = {}
    for t in list(T) + list(extra):
        if isinstance(t, (Name4, Auth5)):
            exprs = [t.issuer, t.subject]
            if isinstance(t, Name4):
                exprs.append(from_leaves((t.issuer, t.name)))
        elif isinstance(t, Bind3):
            exprs = [t.lhs, t.rhs]
        else:
            exprs = [t]
        for e in exprs:
            if is_fully_qualified(e):
                for q in _prefixes(e):
                    out.setdefault(q, None)
    return sorted(out, key=lambda p: (len(leaves(p)), repr(p)))


def _symbols(T: Iterable):
    keys, names = set(), set()
    for t in T:
        if isinstance(t, (Name4, Auth5)):
            keys.add(t.issuer)
            seq = _subj(t)
            if isinstance(t, Name4):
                names.add(t.name)
        elif isinstance(t, Bind3):
            seq = leaves(t.lhs) + leaves(t.rhs)
        else:
            seq = leaves(t)
        for x in seq:
            (keys if isinstance(x, Key) else names).add(x)
    return keys, names


class Closure:
    """A bounded closure of a tuple set under one rule set.

    ``tuples`` holds every member; ``derivation(t)`` rebuilds a derivation
    for a member from the recorded justifications.
    """

    def __init__(self, T, rs, cfg: Optional[ClosureConfig] = None, *, sources=None,
                 extra=(), target=None):
        self.rs = RuleSet.coerce(rs)
        cfg = cfg or ClosureConfig()
        inputs = sorted(set(T), key=encode_tuple)
        self.inputs = tuple(inputs)
        floor = max([tuple_size(t) for t in inputs] + [tuple_size(target) if target is not None else 0] + [1])
        if cfg.expr_len_bound is None:
            self.bound = max(default_bound(inputs, target), floor)
        else:
            if cfg.expr_len_bound < floor:
                raise BoundTooSmall(
                    f"bound {cfg.expr_len_bound} is below the largest input expression ({floor} leaves)"
                )
            self.bound = cfg.expr_len_bound
        self.emit_bind3 = cfg.emit_bind3
        self._members: dict = {}
        self._aux: dict = {}
        self._queue: deque = deque()
        self._n4_in: dict = {}
        self._n4_head: dict = {}
        self._a5_head: dict = {}
        self._deleg: dict = {}
        self._a5_issuer: dict = {}
        self._n4_groups: dict = {}
        self._a5_groups: dict = {}
        rules = self.rs.rules
        self._r2 = "R2'" if "R2'" in rules else "R2"
        self._r3 = "R3'" if "R3'" in rules else "R3"
        self._r6 = "R6'" if "R6'" in rules else "R6"
        self._r4 = "R4a" in rules

        sources = sources or {}
        for t in inputs:
            self._add(t, _Just("INPUT", source=sources.get(t)))
        if "R0" in rules:
            ext = list(extra) + ([target] if target is not None else [])
            keys, names = _symbols(list(inputs) + ext)
            for k in sorted(keys):
                for n in sorted(names):
                    self._add(apply_rule("R0", target=(k, n)), _Just("R0", target=(k, n)))
        self._saturate()
        if self.emit_bind3:
            ext = list(extra) + ([target] if target is not None else [])
            for p in closure_expressions(inputs, ext):
                self._add(Bind3(p, p, ALWAYS), _Just("R5", target=p))
            self._saturate()

    # -- public view

    @property
    def tuples(self) -> frozenset:
        return frozenset(self._members)

    def members(self) -> list:
        """Members in derivation order."""
        return list(self._members)

    def __contains__(self, t) -> bool:
        return t in self._members

    def __len__(self):
        return len(self._members)

    def derivation(self, t, mode="exact") -> Derivation:
        steps, index = [], {}
        self._linearize(t, steps, index)
        return Derivation(tuple(steps), mode, self.bound)

    def _just(self, t):
        j = self._members.get(t)
        return j if j is not None else self._aux[t]

    def _linearize(self, t, steps, index):
        # iterative post-order so long derivations cannot exhaust the stack
        stack = [(t, False)]
        while stack:
            node, expanded = stack.pop()
            if node in index:
                continue
            j = self._just(node)
            if not expanded:
                stack.append((node, True))
                for p in reversed(j.premises):
                    if p not in index:
                        stack.append((p, False))
                continue
            prem = tuple(index[p] for p in j.premises)
            index[node] = len(steps)
            steps.append(Step(j.rule, prem, node, j.target, j.source))

    # -- saturation

    def _add(self, t, just, aux=False):
        if t is None or t in self._members:
            return
        if tuple_size(t) > self.bound:
            return
        if aux:
            self._aux.setdefault(t, just)
            return
        # a tuple first built as a helper keeps its older justification,
        # which keeps the justification graph acyclic
        self._members[t] = self._aux.get(t, just)
        self._queue.append(t)

    def _fire(self, rule, t1, t2, target=None):
        out = apply_rule(rule, t1, t2, target=target)
        if out is not None:
            self._add(out, _Just(rule, (t1, t2), target))

    def _saturate(self):
        while self._queue:
            t = self._queue.popleft()
            if isinstance(t, Name4):
                self._process_name4(t)
            elif isinstance(t, Auth5):
                self._process_auth5(t)
            else:
                self._process_bind3(t)

    def _process_name4(self, t):
        key = (t.issuer, t.name)
        self._n4_in.setdefault(key, []).append(t)
        for t1 in list(self._n4_head.get(key, ())):
            self._fire(self._r2, t1, t)
        for t1 in list(self._a5_head.get(key, ())):
            self._fire(self._r3, t1, t)
        s = _subj(t)
        if len(s) >= 2:
            head = (s[0], s[1])
            self._n4_head.setdefault(head, []).append(t)
            for t2 in list(self._n4_in.get(head, ())):
                self._fire(self._r2, t, t2)
        if self._r4:
            self._merge_name4(t)

    def _process_auth5(self, t):
        s = _subj(t)
        if len(s) >= 2:
            head = (s[0], s[1])
            self._a5_head.setdefault(head, []).append(t)
            for t2 in list(self._n4_in.get(head, ())):
                self._fire(self._r3, t, t2)
        self._a5_issuer.setdefault(t.issuer, []).append(t)
        if len(s) == 1 and isinstance(s[0], Key) and t.delegate:
            self._deleg.setdefault(s[0], []).append(t)
            for t2 in list(self._a5_issuer.get(s[0], ())):
                self._fire("R1", t, t2)
        for t1 in list(self._deleg.get(t.issuer, ())):
            self._fire("R1", t1, t)
        if self._r4:
            self._merge_auth5(t)

    def _process_bind3(self, t):
        s = leaves(t.rhs)
        if len(s) >= 2:
            for t2 in list(self._n4_in.get((s[0], s[1]), ())):
                self._fire(self._r6, t, t2)

    # -- maximal R4 instances

    def _merge_name4(self, t):
        group = self._n4_groups.setdefault((t.issuer, t.name, _subj(t)), [])
        for u in list(group):
            if t.validity is EMPTY or u.validity is EMPTY or not _touch(t.validity, u.validity):
                continue
            hull = interval_hull(t.validity, u.validity)
            cand = Name4(t.issuer, t.name, t.subject, hull)
            if any(subsumes(g, cand) for g in group + [t]):
                continue
            self._fire("R4a", t, u, hull)
        group.append(t)

    def _weaken(self, t, d, a, v):
        """Return a tuple with (d, a, v) derived from ``t`` alone by R4."""
        if t.validity != v:
            w = apply_rule("R4b", t, t, target=v)
            self._add(w, _Just("R4b", (t, t), v), aux=True)
            t = w
        if t.delegate != d or t.action != a:
            w = apply_rule("R4c", t, t, target=(d, a))
            self._add(w, _Just("R4c", (t, t), (d, a)), aux=True)
            t = w
        return t

    def _merge_auth5(self, t):
        group = self._a5_groups.setdefault((t.issuer, _subj(t)), [])
        for u in list(group):
            if t.validity is EMPTY or u.validity is EMPTY:
                continue
            d = t.delegate and u.delegate
            # widen the interval over the shared actions
            if _touch(t.validity, u.validity):
                a = action_intersect(t.action, u.action)
                hull = interval_hull(t.validity, u.validity)
                cand = Auth5(t.issuer, t.subject, d, a, hull)
                if a.atoms and not any(subsumes(g, cand) for g in group + [t]):
                    w1 = self._weaken(t, d, a, t.validity)
                    w2 = self._weaken(u, d, a, u.validity)
                    self._fire("R4b", w1, w2, hull)
            # widen the actions over the shared interval
            v = interval_intersect(t.validity, u.validity)
            if v is not EMPTY:
                a = action_union(t.action, u.action)
                cand = Auth5(t.issuer, t.subject, d, a, v)
                if not any(subsumes(g, cand) for g in group + [t]):
                    w1 = self._weaken(t, t.delegate, t.action, v)
                    w2 = self._weaken(u, u.delegate, u.action, v)
                    self._fire("R4c", w1, w2, (d, a))
        group.append(t)

    # -- queries

    def find_subsuming(self, target):
        """First member (in derivation order) that subsumes ``target``."""
        for t in self._members:
            if subsumes(t, target):
                return t
        return None

    def derive(self, target, *, allow_subsumed=None) -> Optional[Derivation]:
        """Derivation of ``target`` from this closure, or None.

        Exact membership is tried first.  Under RS2 the target is also
        derived by covering it pointwise with members and combining them
        with R4.  Under RS0/RS1, point-valued naming targets and concrete
        authorization targets may instead be matched by a subsuming member
        (``allow_subsumed`` forces this on or off).
        """
        if target in self._members:
            return self.derivation(target, "exact")
        if self._r4:
            return self._derive_cover(target)
        if allow_subsumed is None:
            allow_subsumed = is_point_valued(target) or is_concrete(target)
        if allow_subsumed:
            t = self.find_subsuming(target)
            if t is not None:
                return self.derivation(t, "subsumed")
        return None

    def _derive_cover(self, target) -> Optional[Derivation]:
        if isinstance(target, Name4):
            if target.validity is EMPTY:
                return None
            s = _subj(target)
            pool = [t for t in self._members if isinstance(t, Name4) and t.issuer == target.issuer
                    and t.name == target.name and _subj(t) == s]
            chain = _cover(pool, target.validity)
            if chain is None:
                return None
            acc = chain[0]
            first = apply_rule("R4a", acc, acc, target=interval_intersect(acc.validity, target.validity))
            self._add(first, _Just("R4a", (acc, acc), first.validity), aux=True)
            acc = first
            for nxt in chain[1:]:
                v = interval_intersect(interval_hull(acc.validity, nxt.validity), target.validity)
                out = apply_rule("R4a", acc, nxt, target=v)
                self._add(out, _Just("R4a", (acc, nxt), v), aux=True)
                acc = out
            return self._finish(acc, target)
        if isinstance(target, Auth5):
            if target.validity is EMPTY:
                return None
            s = _subj(target)
            pool = [t for t in self._members if isinstance(t, Auth5) and t.issuer == target.issuer
                    and _subj(t) == s and (t.delegate or not target.delegate)]
            atoms = sorted(target.action.atoms, key=repr)
            pieces = []
            for x in atoms or [None]:
                single = ActionExpr(frozenset([x])) if x is not None else target.action
                usable = [t for t in pool if x is None or any(_atom_in(x, y) for y in t.action.atoms)]
                chain = _cover(usable, target.validity)
                if chain is None:
                    return None
                acc = None
                for nxt in chain:
                    w = self._weaken(nxt, target.delegate, single, nxt.validity)
                    if acc is None:
                        acc = self._weaken(w, target.delegate, single,
                                           interval_intersect(w.validity, target.validity))
                        continue
                    v = interval_intersect(interval_hull(acc.validity, w.validity), target.validity)
                    out = apply_rule("R4b", acc, w, target=v)
                    self._add(out, _Just("R4b", (acc, w), v), aux=True)
                    acc = out
                pieces.append(acc)
            acc = pieces[0]
            for nxt in pieces[1:]:
                a = action_union(acc.action, nxt.action)
                out = apply_rule("R4c", acc, nxt, target=(target.delegate, a))
                self._add(out, _Just("R4c", (acc, nxt), (target.delegate, a)), aux=True)
                acc = out
            if acc != target:
                acc = self._weaken(acc, target.delegate, target.action, target.validity)
            return self._finish(acc, target)
        return None

    def _finish(self, acc, target):
        if acc != target:
            return None
        if target in self._members:
            return self.derivation(target, "exact")
        return self.derivation(target, "r4-cover")


def _atom_in(x, y) -> bool:
    from .algebra import atom_subset

    return atom_subset(x, y)


def _cover(pool, v):
    idx = cover_sequence([t.validity for t in pool], v)
    if idx is None:
        return None
    return [pool[i] for i in idx]


def closure(T, rs, cfg: Optional[ClosureConfig] = None, *, sources=None, extra=()) -> Closure:
    return Closure(T, rs, cfg, sources=sources, extra=extra)


def is_point_valued(t) -> bool:
    return isinstance(t, Name4) and isinstance(t.validity, Range) and t.validity.is_point()


def is_concrete(t) -> bool:
    if not isinstance(t, (Name4, Auth5)) or not isinstance(t.validity, Range) or not t.validity.is_point():
        return False
    s = _subj(t)
    if len(s) != 1 or not isinstance(s[0], Key):
        return False
    if isinstance(t, Auth5):
        atoms = list(t.action.atoms)
        return len(atoms) == 1 and isinstance(atoms[0], Literal)
    return True


def derivable(T, target, rs, cfg: Optional[ClosureConfig] = None, *, sources=None) -> Optional[Derivation]:
    if not isinstance(target, (Name4, Auth5)):
        raise ModelError("derivability targets are 4- or 5-tuples")
    cl = Closure(T, rs, cfg, sources=sources, target=target)
    return cl.derive(target)


def decide_concrete(C, C_R, query):
    """Decide a concrete query with the RS0 closure of ``Tuples(C, C_R)``."""
    if not is_concrete(query):
        raise NotConcrete(
            "concrete queries have a key subject, a point interval and (for 5-tuples) one literal action"
        )
    cl = _rs0_closure(frozenset(C), frozenset(C_R))
    t = cl.find_subsuming(query)
    if t is None:
        return False, None
    return True, cl.derivation(t, "subsumed" if t != query else "exact")


@lru_cache(maxsize=64)
def _rs0_closure(C: frozenset, C_R: frozenset) -> Closure:
    # closures are immutable once built, so repeated queries share one
    srcs = tuples_with_sources(C, C_R)
    return Closure(srcs, RuleSet.RS0, sources=srcs)


def result_certificates(C, C_R, rs, cfg: Optional[ClosureConfig] = None, *, issue_times=None) -> frozenset:
    cfg = cfg or ClosureConfig()
    srcs = tuples_with_sources(C, C_R, issue_times=issue_times)
    cl = Closure(srcs, rs, cfg, sources=srcs)
    return maximal_tuples(cl.tuples, keep_bind3=cfg.emit_bind3)


def maximal_tuples(tuples, keep_bind3=False) -> frozenset:
    pool = [t for t in tuples if isinstance(t, (Name4, Auth5))]
    groups: dict = {}
    for t in pool:
        groups.setdefault((type(t), t.issuer, _subj(t)), []).append(t)
    out = set()
    for group in groups.values():
        for t in group:
            dominated = any(u != t and subsumes(u, t) and not subsumes(t, u) for u in group)
            if not dominated:
                out.add(t)
    # among mutually subsuming tuples keep one representative
    result = set()
    for t in sorted(out, key=encode_tuple):
        if not any(subsumes(u, t) for u in result):
            result.add(t)
    if keep_bind3:
        result |= {t for t in tuples if isinstance(t, Bind3)}
    return frozenset(result)
