"""Domain values: principals, certificates, tuples and formulas.

Everything here is an immutable value.  Interval and action types live in
:mod:`spkicalc.algebra` and are re-exported for convenience.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from functools import lru_cache
from typing import Optional, Union

from .algebra import (
    ALWAYS,
    EMPTY,
    INF,
    ActionExpr,
    EmptyInterval,
    Literal,
    Prefix,
    Range,
    ValidityInterval,
    action_subset,
    interval,
    interval_subset,
)
from .errors import ModelError, NotFullyQualified, RevokerMismatch

KEY_PREFIX = "k-"

__all__ = [
    "ALWAYS", "EMPTY", "INF", "ActionExpr", "EmptyInterval", "Literal", "Prefix",
    "Range", "ValidityInterval", "interval",
    "Key", "LocalName", "Dot", "PrincipalExpr", "leaves", "from_leaves", "dot",
    "normalize_principal", "is_fully_qualified",
    "Naming", "Auth", "Crl", "Certificate",
    "Bind3", "Name4", "Auth5", "Tuple",
    "Bound", "Issued", "Valid", "Perm", "Del", "NowIn", "Not", "And", "Formula",
    "implies", "formula_of_cert", "formula_of_tuple", "tuple_of_cert", "subsumes",
    "cert_keys", "cert_size",
]


# ---------------------------------------------------------------- principals


@dataclass(frozen=True, order=True)
class Key:
    id: str

    def __post_init__(self):
        if not isinstance(self.id, str) or not self.id.startswith(KEY_PREFIX) or len(self.id) <= 2:
            raise ModelError(f"key tokens must start with {KEY_PREFIX!r}: {self.id!r}")

    def __repr__(self):
        return self.id


@dataclass(frozen=True, order=True)
class LocalName:
    id: str

    def __post_init__(self):
        if not isinstance(self.id, str) or not self.id or self.id.startswith(KEY_PREFIX):
            raise ModelError(f"name tokens must be nonempty and not start with {KEY_PREFIX!r}: {self.id!r}")
        if any(ch.isspace() or ch in "()" for ch in self.id):
            raise ModelError(f"name token contains a delimiter: {self.id!r}")

    def __repr__(self):
        return self.id


@dataclass(frozen=True)
class Dot:
    head: "PrincipalExpr"
    tail: "PrincipalExpr"
    leaves: tuple = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        object.__setattr__(self, "leaves", leaves(self.head) + leaves(self.tail))

    def __repr__(self):
        return "·".join(map(repr, self.leaves))

    def __hash__(self):
        return hash(self.leaves)


PrincipalExpr = Union[Key, LocalName, Dot]


def leaves(p: PrincipalExpr) -> tuple:
    """The left-to-right sequence of Key/LocalName leaves of ``p``."""
    if isinstance(p, Dot):
        return p.leaves
    if isinstance(p, (Key, LocalName)):
        return (p,)
    raise ModelError(f"not a principal expression: {p!r}")


@lru_cache(maxsize=1 << 16)
def from_leaves(seq: tuple) -> PrincipalExpr:
    """Right-associated expression with the given nonempty leaf sequence."""
    if not seq:
        raise ModelError("a principal expression has at least one leaf")
    if len(seq) == 1:
        return seq[0]
    return Dot(seq[0], from_leaves(seq[1:]))


def dot(*parts: PrincipalExpr) -> PrincipalExpr:
    """Concatenate expressions, returning the right-associated form."""
    seq = ()
    for p in parts:
        seq += leaves(p)
    return from_leaves(seq)


def normalize_principal(p: PrincipalExpr) -> PrincipalExpr:
    return from_leaves(leaves(p))


def is_fully_qualified(p: PrincipalExpr) -> bool:
    seq = leaves(p)
    return isinstance(seq[0], Key) and all(isinstance(x, LocalName) for x in seq[1:])


def _require_fq(p, where):
    if not is_fully_qualified(p):
        raise NotFullyQualified(f"{where} must be a key followed by local names: {p!r}")
    return normalize_principal(p)


def _require_key(k, where):
    if not isinstance(k, Key):
        raise ModelError(f"{where} must be a key: {k!r}")


def _require_validity(v, where):
    if not isinstance(v, (Range, EmptyInterval)):
        raise ModelError(f"{where} must be a validity interval: {v!r}")


# ---------------------------------------------------------------- certificates


@dataclass(frozen=True)
class Naming:
    issuer: Key
    name: LocalName
    subject: PrincipalExpr
    validity: ValidityInterval = ALWAYS
    revoker: Optional[Key] = None

    def __post_init__(self):
        _require_key(self.issuer, "issuer")
        if not isinstance(self.name, LocalName):
            raise ModelError(f"name must be a local name: {self.name!r}")
        object.__setattr__(self, "subject", _require_fq(self.subject, "subject"))
        _require_validity(self.validity, "validity")
        if self.revoker is not None:
            _require_key(self.revoker, "revoker")


@dataclass(frozen=True)
class Auth:
    issuer: Key
    subject: PrincipalExpr
    delegate: bool
    action: ActionExpr
    validity: ValidityInterval = ALWAYS
    revoker: Optional[Key] = None

    def __post_init__(self):
        _require_key(self.issuer, "issuer")
        object.__setattr__(self, "subject", _require_fq(self.subject, "subject"))
        if not isinstance(self.delegate, bool):
            raise ModelError(f"delegate must be a boolean: {self.delegate!r}")
        if not isinstance(self.action, ActionExpr):
            raise ModelError(f"action must be an action expression: {self.action!r}")
        _require_validity(self.validity, "validity")
        if self.revoker is not None:
            _require_key(self.revoker, "revoker")


@dataclass(frozen=True)
class Crl:
    issuer: Key
    canceled: frozenset = frozenset()
    validity: ValidityInterval = ALWAYS

    def __post_init__(self):
        _require_key(self.issuer, "issuer")
        if not isinstance(self.canceled, frozenset):
            object.__setattr__(self, "canceled", frozenset(self.canceled))
        for c in self.canceled:
            if not isinstance(c, (Naming, Auth)):
                raise ModelError(f"a CRL lists naming or authorization certificates only: {c!r}")
            if c.revoker != self.issuer:
                raise RevokerMismatch(
                    f"canceled certificate is revocable by {c.revoker!r}, not by CRL issuer {self.issuer!r}"
                )
        _require_validity(self.validity, "validity")


Certificate = Union[Naming, Auth, Crl]


def cert_keys(c: Certificate) -> set:
    """Every key mentioned anywhere in ``c``."""
    out = {c.issuer}
    if isinstance(c, Crl):
        for x in c.canceled:
            out |= cert_keys(x)
        return out
    out.update(x for x in leaves(c.subject) if isinstance(x, Key))
    if c.revoker is not None:
        out.add(c.revoker)
    return out


# ---------------------------------------------------------------- tuples


@dataclass(frozen=True)
class Bind3:
    lhs: PrincipalExpr
    rhs: PrincipalExpr
    validity: ValidityInterval


@dataclass(frozen=True)
class Name4:
    issuer: Key
    name: LocalName
    subject: PrincipalExpr
    validity: ValidityInterval


@dataclass(frozen=True)
class Auth5:
    issuer: Key
    subject: PrincipalExpr
    delegate: bool
    action: ActionExpr
    validity: ValidityInterval


Tuple = Union[Bind3, Name4, Auth5]


# ---------------------------------------------------------------- formulas


@dataclass(frozen=True)
class Bound:
    p: PrincipalExpr
    q: PrincipalExpr


@dataclass(frozen=True)
class Issued:
    c: Certificate


@dataclass(frozen=True)
class Valid:
    c: Certificate


@dataclass(frozen=True)
class Perm:
    k: Key
    p: PrincipalExpr
    A: ActionExpr


@dataclass(frozen=True)
class Del:
    k: Key
    p: PrincipalExpr
    A: ActionExpr


@dataclass(frozen=True)
class NowIn:
    V: ValidityInterval


@dataclass(frozen=True)
class Not:
    f: "Formula"


@dataclass(frozen=True)
class And:
    left: "Formula"
    right: "Formula"


Formula = Union[Bound, Issued, Valid, Perm, Del, NowIn, Not, And]


def implies(a: Formula, b: Formula) -> Formula:
    return Not(And(a, Not(b)))


def formula_of_cert(c: Certificate) -> Formula:
    if isinstance(c, Naming):
        return implies(NowIn(c.validity), Bound(dot(c.issuer, c.name), c.subject))
    if isinstance(c, Auth):
        body = Perm(c.issuer, c.subject, c.action)
        if c.delegate:
            body = And(body, Del(c.issuer, c.subject, c.action))
        return implies(NowIn(c.validity), body)
    raise ModelError("CRLs have no associated formula")


def tuple_of_cert(c: Certificate) -> Tuple:
    if isinstance(c, Naming):
        return Name4(c.issuer, c.name, c.subject, c.validity)
    if isinstance(c, Auth):
        return Auth5(c.issuer, c.subject, c.delegate, c.action, c.validity)
    raise ModelError("CRLs have no tuple form")


def subsumes(t1: Tuple, t2: Tuple) -> bool:
    if isinstance(t1, Name4) and isinstance(t2, Name4):
        return (
            t1.issuer == t2.issuer
            and t1.name == t2.name
            and leaves(t1.subject) == leaves(t2.subject)
            and interval_subset(t2.validity, t1.validity)
        )
    if isinstance(t1, Auth5) and isinstance(t2, Auth5):
        return (
            t1.issuer == t2.issuer
            and leaves(t1.subject) == leaves(t2.subject)
            and interval_subset(t2.validity, t1.validity)
            and action_subset(t2.action, t1.action)
            and (t1.delegate or not t2.delegate)
        )
    return False


def formula_of_tuple(t: Tuple) -> Formula:
    """The formula a tuple asserts, read the same way as a certificate."""
    if isinstance(t, Name4):
        return implies(NowIn(t.validity), Bound(dot(t.issuer, t.name), t.subject))
    if isinstance(t, Auth5):
        body = Perm(t.issuer, t.subject, t.action)
        if t.delegate:
            body = And(body, Del(t.issuer, t.subject, t.action))
        return implies(NowIn(t.validity), body)
    if isinstance(t, Bind3):
        return implies(NowIn(t.validity), Bound(t.lhs, t.rhs))
    raise ModelError(f"not a tuple: {t!r}")


def cert_size(c: Certificate) -> int:
    """Length of a certificate viewed as a string of principal symbols."""
    if isinstance(c, Naming):
        return len(leaves(c.subject)) + 2
    if isinstance(c, Auth):
        return len(leaves(c.subject)) + 1
    raise ModelError("CRLs have no size in this sense")
