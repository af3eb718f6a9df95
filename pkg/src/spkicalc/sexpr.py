"""S-expression reading and canonical printing.

An S-expression is represented with plain Python values: a token is a
``str`` and a list is a ``tuple`` of S-expressions.  On top of the raw layer
sit decoders and canonical encoders for certificates, tuples, formulas and
run files.

Certificate grammar (canonical form)::

    (cert (issuer (name KEY ID)) (subject FQ) VALID [REVOKER])
    (cert (issuer KEY) (subject FQ) [(propagate)] (tag TAG) VALID [REVOKER])
    (crl (issuer KEY) (canceled CERT*) VALID)
    FQ      ::= KEY | (name KEY ID+)
    VALID   ::= (valid (not-before NAT) (not-after NAT|infinity)) | (valid empty)
    REVOKER ::= (revoker KEY)
    TAG     ::= (set ATOM*)
    ATOM    ::= STR | (path STR+) | (prefix STR+)

A bare ``STR`` atom is the one-element literal action ``(path STR)``.  The
last element of a ``prefix`` atom is matched as a string prefix.
"""

from __future__ import annotations

import hashlib
import re
from functools import lru_cache
from typing import Iterable, Union

from .algebra import EMPTY, INF, ActionExpr, EmptyInterval, Literal, Prefix, Range
from .errors import (
    NotFullyQualified,
    CodecError,
    EmptyInput,
    InvalidEncoding,
    MalformedCert,
    ModelError,
    OnlineTestUnsupported,
    TrailingInput,
    UnbalancedParens,
)
from .model import (
    KEY_PREFIX,
    is_fully_qualified,
    And,
    Auth,
    Auth5,
    Bind3,
    Bound,
    Crl,
    Del,
    Issued,
    Key,
    LocalName,
    Name4,
    Naming,
    Not,
    NowIn,
    Perm,
    Valid,
    formula_of_cert,
    from_leaves,
    implies,
    leaves,
)

SExpr = Union[str, tuple]

_WS = " \t\n\r"
_NAT = re.compile(r"[0-9]+")
_ONLINE_HEADS = {"online", "online-test", "reval", "one-time", "crl-check"}


# ---------------------------------------------------------------- raw layer


def _decode_text(data) -> str:
    if isinstance(data, str):
        return data
    try:
        return bytes(data).decode("utf-8")
    except UnicodeDecodeError as exc:
        raise InvalidEncoding("input is not valid UTF-8", exc.start) from None


def _read(text: str, pos: int):
    """Read one expression starting at a non-space position."""
    n = len(text)
    if text[pos] == ")":
        raise UnbalancedParens("unexpected ')'", pos)
    if text[pos] != "(":
        end = pos
        while end < n and text[end] not in _WS and text[end] not in "()":
            end += 1
        return text[pos:end], end
    # iterative list reader, so deep nesting cannot exhaust the stack
    stack = [(pos, [])]
    i = pos + 1
    while True:
        while i < n and text[i] in _WS:
            i += 1
        if i >= n:
            raise UnbalancedParens("unclosed '('", stack[-1][0])
        ch = text[i]
        if ch == "(":
            stack.append((i, []))
            i += 1
        elif ch == ")":
            _, items = stack.pop()
            done = tuple(items)
            i += 1
            if not stack:
                return done, i
            stack[-1][1].append(done)
        else:
            end = i
            while end < n and text[end] not in _WS and text[end] not in "()":
                end += 1
            stack[-1][1].append(text[i:end])
            i = end


def _skip(text: str, pos: int) -> int:
    while pos < len(text) and text[pos] in _WS:
        pos += 1
    return pos


def parse_sexpr(data) -> SExpr:
    """Parse exactly one S-expression from UTF-8 bytes (or a str)."""
    text = _decode_text(data)
    pos = _skip(text, 0)
    if pos >= len(text):
        raise EmptyInput(pos)
    expr, pos = _read(text, pos)
    pos = _skip(text, pos)
    if pos < len(text):
        if text[pos] == ")":
            raise TrailingInput("unmatched ')' after expression", pos)
        raise TrailingInput("more than one top-level expression", pos)
    return expr


def parse_all(data) -> list:
    """Parse a whitespace-separated sequence of S-expressions (possibly none)."""
    text = _decode_text(data)
    out = []
    pos = _skip(text, 0)
    while pos < len(text):
        expr, pos = _read(text, pos)
        out.append(expr)
        pos = _skip(text, pos)
    return out


def encode_sexpr(s: SExpr) -> str:
    if isinstance(s, str):
        return s
    return "(" + " ".join(encode_sexpr(x) for x in s) + ")"


# ---------------------------------------------------------------- helpers


def _is_list(s, head=None) -> bool:
    return isinstance(s, tuple) and (head is None or (len(s) > 0 and s[0] == head))


def _head(s):
    if isinstance(s, tuple) and s and isinstance(s[0], str):
        return s[0]
    return None


def _token(s, path, what) -> str:
    if not isinstance(s, str):
        raise MalformedCert(path, f"expected {what} token")
    return s


def _key(s, path) -> Key:
    tok = _token(s, path, "key")
    if not tok.startswith(KEY_PREFIX) or len(tok) <= len(KEY_PREFIX):
        raise MalformedCert(path, f"key tokens begin with {KEY_PREFIX!r}: {tok!r}")
    return Key(tok)


def _name(s, path) -> LocalName:
    tok = _token(s, path, "name")
    if tok.startswith(KEY_PREFIX):
        raise MalformedCert(path, f"local names may not begin with {KEY_PREFIX!r}: {tok!r}")
    try:
        return LocalName(tok)
    except ModelError as exc:
        raise MalformedCert(path, str(exc)) from None


def _leaf(tok: str):
    return Key(tok) if tok.startswith(KEY_PREFIX) and len(tok) > len(KEY_PREFIX) else _name(tok, "principal")


def decode_principal(s, path="principal"):
    """Any principal expression: a bare token or ``(name LEAF LEAF+)``."""
    if isinstance(s, str):
        if s == KEY_PREFIX:
            raise MalformedCert(path, "empty key token")
        return _leaf(s)
    if not _is_list(s, "name") or len(s) < 3:
        raise MalformedCert(path, "expected a token or (name X Y ...)")
    seq = []
    for i, x in enumerate(s[1:]):
        tok = _token(x, f"{path}/{i + 1}", "principal")
        if tok == KEY_PREFIX:
            raise MalformedCert(path, "empty key token")
        seq.append(_leaf(tok))
    return from_leaves(tuple(seq))


def encode_principal(p) -> SExpr:
    seq = leaves(p)
    if len(seq) == 1:
        return seq[0].id
    return ("name",) + tuple(x.id for x in seq)


def _nat(s, path) -> int:
    tok = _token(s, path, "natural number")
    if not _NAT.fullmatch(tok):
        raise MalformedCert(path, f"not a natural number: {tok!r}")
    return int(tok)


def decode_validity(s, path="valid"):
    if not _is_list(s, "valid"):
        raise MalformedCert(path, "expected (valid ...)")
    body = s[1:]
    if body == ("empty",):
        return EMPTY
    lo, hi = 0, INF
    i = 0
    for item in body:
        h = _head(item)
        if h in _ONLINE_HEADS:
            raise OnlineTestUnsupported(path, f"online test {h!r} is not supported")
    if i < len(body) and _head(body[i]) == "not-before":
        if len(body[i]) != 2:
            raise MalformedCert(f"{path}/not-before", "expected one time")
        lo = _nat(body[i][1], f"{path}/not-before")
        i += 1
    if i < len(body) and _head(body[i]) == "not-after":
        if len(body[i]) != 2:
            raise MalformedCert(f"{path}/not-after", "expected one time")
        hi = INF if body[i][1] == "infinity" else _nat(body[i][1], f"{path}/not-after")
        i += 1
    if i != len(body):
        raise MalformedCert(path, f"unexpected element {encode_sexpr(body[i])}")
    if lo > hi:
        raise MalformedCert(path, "not-before is later than not-after; write (valid empty)")
    return Range(lo, hi)


def encode_validity(v) -> SExpr:
    if isinstance(v, EmptyInterval):
        return ("valid", "empty")
    hi = "infinity" if v.hi == INF else str(v.hi)
    return ("valid", ("not-before", str(v.lo)), ("not-after", hi))


def _atom(s, path):
    if isinstance(s, str):
        try:
            return Literal((s,))
        except ValueError as exc:
            raise MalformedCert(path, str(exc)) from None
    h = _head(s)
    if h in ("path", "prefix") and len(s) >= 2:
        parts = tuple(_token(x, path, "action element") for x in s[1:])
        try:
            return Literal(parts) if h == "path" else Prefix(parts)
        except ValueError as exc:
            raise MalformedCert(path, str(exc)) from None
    raise MalformedCert(path, "expected an action atom")


def decode_actions(s, path="set") -> ActionExpr:
    if not _is_list(s, "set"):
        raise MalformedCert(path, "expected (set ATOM*)")
    return ActionExpr(frozenset(_atom(x, f"{path}/{i + 1}") for i, x in enumerate(s[1:])))


def _encode_atom(a) -> SExpr:
    if isinstance(a, Literal) and len(a.path) == 1:
        return a.path[0]
    return ("path" if isinstance(a, Literal) else "prefix",) + a.path


def encode_actions(A: ActionExpr) -> SExpr:
    atoms = sorted((_encode_atom(a) for a in A.atoms), key=encode_sexpr)
    return ("set",) + tuple(atoms)


# ---------------------------------------------------------------- certificates


def _field(items, i, head):
    if i < len(items) and _head(items[i]) == head:
        return items[i], i + 1
    return None, i


def _subject(s, path):
    if not _is_list(s, "subject") or len(s) != 2:
        raise MalformedCert(path, "expected (subject FQ)")
    p = decode_principal(s[1], path)
    if not is_fully_qualified(p):
        raise NotFullyQualified(f"{path}: subject must be a key followed by local names")
    return p


def decode_certificate(s: SExpr, path: str = "cert"):
    h = _head(s)
    if h == "crl":
        return _decode_crl(s, path)
    if h != "cert":
        raise MalformedCert(path, "expected (cert ...) or (crl ...)")
    items = s[1:]
    for item in items:
        if _head(item) in _ONLINE_HEADS:
            raise OnlineTestUnsupported(path, f"online test {_head(item)!r} is not supported")
    iss, i = _field(items, 0, "issuer")
    if iss is None or len(iss) != 2:
        raise MalformedCert(f"{path}/issuer", "expected (issuer KEY) or (issuer (name KEY ID))")
    subj, i = _field(items, i, "subject")
    if subj is None:
        raise MalformedCert(f"{path}/subject", "missing subject")
    subject = _subject(subj, f"{path}/subject")
    prop, i = _field(items, i, "propagate")
    if prop is not None and len(prop) != 1:
        raise MalformedCert(f"{path}/propagate", "(propagate) takes no arguments")
    tag, i = _field(items, i, "tag")
    valid, i = _field(items, i, "valid")
    validity = decode_validity(valid, f"{path}/valid") if valid is not None else Range(0, INF)
    rev, i = _field(items, i, "revoker")
    revoker = None
    if rev is not None:
        if len(rev) != 2:
            raise MalformedCert(f"{path}/revoker", "expected (revoker KEY)")
        revoker = _key(rev[1], f"{path}/revoker")
    if i != len(items):
        raise MalformedCert(path, f"unexpected field {encode_sexpr(items[i])}")

    if _is_list(iss[1], "name"):
        if len(iss[1]) != 3:
            raise MalformedCert(f"{path}/issuer", "expected (name KEY ID)")
        if prop is not None or tag is not None:
            raise MalformedCert(path, "naming certificates carry no propagate or tag field")
        issuer = _key(iss[1][1], f"{path}/issuer")
        name = _name(iss[1][2], f"{path}/issuer")
        return Naming(issuer, name, subject, validity, revoker)
    issuer = _key(iss[1], f"{path}/issuer")
    if tag is None:
        raise MalformedCert(f"{path}/tag", "authorization certificates need (tag TAG)")
    if len(tag) != 2:
        raise MalformedCert(f"{path}/tag", "expected (tag (set ...))")
    action = decode_actions(tag[1], f"{path}/tag")
    return Auth(issuer, subject, prop is not None, action, validity, revoker)


def _decode_crl(s, path):
    items = s[1:]
    iss, i = _field(items, 0, "issuer")
    if iss is None or len(iss) != 2:
        raise MalformedCert(f"{path}/issuer", "expected (issuer KEY)")
    issuer = _key(iss[1], f"{path}/issuer")
    canc, i = _field(items, i, "canceled")
    if canc is None:
        raise MalformedCert(f"{path}/canceled", "missing (canceled CERT*)")
    canceled = []
    for j, x in enumerate(canc[1:]):
        if _head(x) != "cert":
            raise MalformedCert(f"{path}/canceled/{j + 1}", "canceled entries are certificates")
        canceled.append(decode_certificate(x, f"{path}/canceled/{j + 1}"))
    valid, i = _field(items, i, "valid")
    validity = decode_validity(valid, f"{path}/valid") if valid is not None else Range(0, INF)
    if i != len(items):
        raise MalformedCert(path, f"unexpected field {encode_sexpr(items[i])}")
    return Crl(issuer, frozenset(canceled), validity)


def certificate_sexpr(c) -> SExpr:
    if isinstance(c, Crl):
        entries = sorted((certificate_sexpr(x) for x in c.canceled), key=encode_sexpr)
        return ("crl", ("issuer", c.issuer.id), ("canceled",) + tuple(entries), encode_validity(c.validity))
    out = []
    if isinstance(c, Naming):
        out.append(("issuer", ("name", c.issuer.id, c.name.id)))
        out.append(("subject", encode_principal(c.subject)))
    else:
        out.append(("issuer", c.issuer.id))
        out.append(("subject", encode_principal(c.subject)))
        if c.delegate:
            out.append(("propagate",))
        out.append(("tag", encode_actions(c.action)))
    out.append(encode_validity(c.validity))
    if c.revoker is not None:
        out.append(("revoker", c.revoker.id))
    return ("cert",) + tuple(out)


def encode_certificate(c) -> bytes:
    try:
        return _encode_certificate(c)
    except TypeError:  # unhashable input; let certificate_sexpr report it
        return encode_sexpr(certificate_sexpr(c)).encode("utf-8")


@lru_cache(maxsize=1 << 16)
def _encode_certificate(c) -> bytes:
    return encode_sexpr(certificate_sexpr(c)).encode("utf-8")


def cert_digest(c) -> str:
    return hashlib.sha256(encode_certificate(c)).hexdigest()


def decode_bundle(data) -> list:
    """Decode every top-level certificate in a bundle."""
    return [decode_certificate(s, f"cert[{i}]") for i, s in enumerate(parse_all(data))]


# ---------------------------------------------------------------- tuples


def _bool(s, path) -> bool:
    if s == "true":
        return True
    if s == "false":
        return False
    raise MalformedCert(path, "expected true or false")


def decode_tuple(s: SExpr, path="tuple"):
    h = _head(s)
    if h == "4tuple" and len(s) == 5:
        return Name4(_key(s[1], f"{path}/issuer"), _name(s[2], f"{path}/name"),
                     decode_principal(s[3], f"{path}/subject"), decode_validity(s[4], f"{path}/valid"))
    if h == "5tuple" and len(s) == 6:
        tag = s[4]
        if _is_list(tag, "tag") and len(tag) == 2:
            tag = tag[1]
        return Auth5(_key(s[1], f"{path}/issuer"), decode_principal(s[2], f"{path}/subject"),
                     _bool(s[3], f"{path}/delegate"), decode_actions(tag, f"{path}/tag"),
                     decode_validity(s[5], f"{path}/valid"))
    if h == "3tuple" and len(s) == 4:
        return Bind3(decode_principal(s[1], f"{path}/lhs"), decode_principal(s[2], f"{path}/rhs"),
                     decode_validity(s[3], f"{path}/valid"))
    raise MalformedCert(path, "expected (4tuple ...), (5tuple ...) or (3tuple ...)")


def tuple_sexpr(t) -> SExpr:
    if isinstance(t, Name4):
        return ("4tuple", t.issuer.id, t.name.id, encode_principal(t.subject), encode_validity(t.validity))
    if isinstance(t, Auth5):
        return ("5tuple", t.issuer.id, encode_principal(t.subject), "true" if t.delegate else "false",
                encode_actions(t.action), encode_validity(t.validity))
    if isinstance(t, Bind3):
        return ("3tuple", encode_principal(t.lhs), encode_principal(t.rhs), encode_validity(t.validity))
    raise CodecError(f"not a tuple: {t!r}")


def encode_tuple(t) -> str:
    try:
        return _encode_tuple(t)
    except TypeError:
        return encode_sexpr(tuple_sexpr(t))


@lru_cache(maxsize=1 << 16)
def _encode_tuple(t) -> str:
    return encode_sexpr(tuple_sexpr(t))


# ---------------------------------------------------------------- formulas


def decode_formula(s: SExpr, path="formula"):
    h = _head(s)
    n = len(s) if isinstance(s, tuple) else 0
    if h == "bound" and n == 3:
        return Bound(decode_principal(s[1], f"{path}/p"), decode_principal(s[2], f"{path}/q"))
    if h == "issued" and n == 2:
        return Issued(decode_certificate(s[1], f"{path}/cert"))
    if h in ("applicable", "valid") and n == 2 and _head(s[1]) in ("cert", "crl"):
        return Valid(decode_certificate(s[1], f"{path}/cert"))
    if h in ("perm", "del") and n == 4:
        cls = Perm if h == "perm" else Del
        return cls(_key(s[1], f"{path}/key"), decode_principal(s[2], f"{path}/p"),
                   decode_actions(s[3], f"{path}/tag"))
    if h == "now-in" and n == 2:
        return NowIn(decode_validity(s[1], f"{path}/valid"))
    if h == "not" and n == 2:
        return Not(decode_formula(s[1], f"{path}/not"))
    if h == "and" and n == 3:
        return And(decode_formula(s[1], f"{path}/and"), decode_formula(s[2], f"{path}/and"))
    if h == "implies" and n == 3:
        return implies(decode_formula(s[1], f"{path}/implies"), decode_formula(s[2], f"{path}/implies"))
    if h == "phi" and n == 2:
        c = decode_certificate(s[1], f"{path}/cert")
        try:
            return formula_of_cert(c)
        except ModelError as exc:
            raise MalformedCert(f"{path}/cert", str(exc)) from None
    raise MalformedCert(path, "unrecognized formula")


def formula_sexpr(f) -> SExpr:
    if isinstance(f, Bound):
        return ("bound", encode_principal(f.p), encode_principal(f.q))
    if isinstance(f, Issued):
        return ("issued", certificate_sexpr(f.c))
    if isinstance(f, Valid):
        return ("applicable", certificate_sexpr(f.c))
    if isinstance(f, (Perm, Del)):
        return ("perm" if isinstance(f, Perm) else "del", f.k.id, encode_principal(f.p), encode_actions(f.A))
    if isinstance(f, NowIn):
        return ("now-in", encode_validity(f.V))
    if isinstance(f, Not):
        return ("not", formula_sexpr(f.f))
    if isinstance(f, And):
        return ("and", formula_sexpr(f.left), formula_sexpr(f.right))
    raise CodecError(f"not a formula: {f!r}")


def encode_formula(f) -> str:
    return encode_sexpr(formula_sexpr(f))


# ---------------------------------------------------------------- runs


def decode_run_events(s: SExpr, path="run") -> dict:
    """Decode ``(run (at NAT CERT*)*)`` into a time -> certificates mapping."""
    if not _is_list(s, "run"):
        raise MalformedCert(path, "expected (run (at NAT CERT*)*)")
    events = {}
    for i, entry in enumerate(s[1:]):
        p = f"{path}/{i + 1}"
        if not _is_list(entry, "at") or len(entry) < 2:
            raise MalformedCert(p, "expected (at NAT CERT*)")
        t = _nat(entry[1], p)
        certs = [decode_certificate(x, f"{p}/{j + 2}") for j, x in enumerate(entry[2:])]
        events.setdefault(t, set()).update(certs)
    return {t: frozenset(cs) for t, cs in events.items()}


def run_sexpr(events) -> SExpr:
    out = ["run"]
    for t in sorted(events):
        certs = sorted((certificate_sexpr(c) for c in events[t]), key=encode_sexpr)
        out.append(("at", str(t)) + tuple(certs))
    return tuple(out)


def encode_run(events) -> str:
    return encode_sexpr(run_sexpr(events))


def decode_inputs(data) -> dict:
    """Decode a certificate bundle or a run file into time -> certificates.

    A bundle is read as everything issued at time 0.
    """
    exprs = parse_all(data)
    events: dict = {}
    for i, s in enumerate(exprs):
        if _head(s) == "run":
            for t, cs in decode_run_events(s, f"run[{i}]").items():
                events.setdefault(t, set()).update(cs)
        else:
            events.setdefault(0, set()).add(decode_certificate(s, f"cert[{i}]"))
    return {t: frozenset(cs) for t, cs in events.items()}


def iter_certificates(events) -> Iterable:
    for t in sorted(events):
        yield from events[t]
