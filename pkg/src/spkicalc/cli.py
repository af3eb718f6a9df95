"""Command-line front end.

Exit status is 0 for an affirmative answer or success, 1 for a negative
answer and 2 for bad input (usage, parse or consistency errors).
"""

from __future__ import annotations

import argparse
import io
import os
import sys
from typing import Optional, Sequence

from .algebra import ActionExpr, point, representative_actions
from .errors import InconsistentCRLs, SpkiError
from .model import (
    And, Auth, Auth5, Crl, Del, Issued, Key, LocalName, Name4, Not, Perm, Valid, tuple_of_cert,
)
from .reduction import (
    Closure,
    ClosureConfig,
    decide_concrete,
    find_crl_clash,
    maximal_tuples,
    tuples_with_sources,
)
from .semantics import Universe, entailment, formula_symbols, symbols
from .sexpr import (
    cert_digest,
    certificate_sexpr,
    decode_actions,
    decode_certificate,
    decode_formula,
    decode_inputs,
    decode_tuple,
    encode_certificate,
    encode_run,
    encode_sexpr,
    encode_tuple,
    parse_all,
    parse_sexpr,
)
from .witness import build_witness


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(message)


class _Ctx:
    def __init__(self, stdin: bytes):
        self.stdin = stdin
        self.out = io.StringIO()

    def read(self, path: str) -> bytes:
        if path == "-":
            if self.stdin is None:
                self.stdin = sys.stdin.buffer.read()
            return self.stdin
        try:
            with open(path, "rb") as fh:
                return fh.read()
        except OSError as exc:
            raise UsageError(f"cannot read {path}: {exc.strerror}") from None

    def arg(self, value: str) -> bytes:
        """Inline S-expression text, or ``@path`` for a file."""
        if value.startswith("@"):
            return self.read(value[1:])
        return value.encode("utf-8")

    def print(self, *parts):
        print(*parts, file=self.out)


def _load(ctx, files):
    """Certificates of every file, with their earliest issue times."""
    events = {}
    for f in files:
        for t, cs in decode_inputs(ctx.read(f)).items():
            events.setdefault(t, set()).update(cs)
    issue = {}
    for t in sorted(events):
        for c in events[t]:
            issue.setdefault(c, t)
    C = [c for c in issue if not isinstance(c, Crl)]
    C_R = [c for c in issue if isinstance(c, Crl)]
    return C, C_R, issue, events


def _key(text, flag):
    try:
        return Key(text)
    except SpkiError:
        raise UsageError(f"argument {flag}: not a key token: {text!r}") from None


def _name(text, flag):
    try:
        return LocalName(text)
    except SpkiError:
        raise UsageError(f"argument {flag}: not a local name: {text!r}") from None


def _atoms(ctx, texts, flag):
    out = set()
    for text in texts:
        try:
            out |= decode_actions(("set", parse_sexpr(text.encode("utf-8"))), flag).atoms
        except SpkiError as exc:
            raise UsageError(f"argument {flag}: {exc}") from None
    return out


# ---------------------------------------------------------------- commands


def cmd_parse(ctx, a):
    for f in a.files:
        events = decode_inputs(ctx.read(f))
        for t in sorted(events):
            for c in sorted(events[t], key=encode_certificate):
                kind = "crl" if isinstance(c, Crl) else "cert"
                ctx.print(f"{cert_digest(c)} {kind} {f}" + (f" at {t}" if t else ""))
    return 0


def cmd_canon(ctx, a):
    for s in parse_all(ctx.read(a.file)):
        if isinstance(s, tuple) and s and s[0] == "run":
            ctx.print(encode_run(decode_inputs(encode_sexpr(s).encode("utf-8"))))
        else:
            ctx.print(encode_sexpr(certificate_sexpr(decode_certificate(s))))
    return 0


def cmd_crl_check(ctx, a):
    _, C_R, _, _ = _load(ctx, a.files)
    clash = find_crl_clash(C_R)
    if clash is None:
        ctx.print(f"CONSISTENT ({len(C_R)} CRLs)")
        return 0
    ctx.print("INCONSISTENT")
    for c in clash:
        ctx.print(f"  {cert_digest(c)} {encode_certificate(c).decode()}")
    return 1


def _config(a, emit=False):
    return ClosureConfig(expr_len_bound=a.bound, emit_bind3=emit)


def cmd_reduce(ctx, a):
    C, C_R, issue, _ = _load(ctx, a.files)
    _check_crls(C_R)
    srcs = tuples_with_sources(C, C_R, issue_times=issue if a.clip_to_issue else None)
    cl = Closure(srcs, a.rules, _config(a, a.emit_3tuples), sources=srcs)
    ctx.print(f"; rules {a.rules} bound {cl.bound}")
    for t in sorted(maximal_tuples(cl.tuples, keep_bind3=a.emit_3tuples), key=encode_tuple):
        ctx.print(encode_tuple(t))
    return 0


def _concrete_query(ctx, a):
    issuer = _key(a.issuer, "--issuer")
    subject = _key(a.subject, "--subject")
    v = point(a.time)
    if a.name is not None:
        if a.action is not None:
            raise UsageError("argument --name: not allowed with --action")
        return Name4(issuer, _name(a.name, "--name"), subject, v)
    if a.action is None:
        raise UsageError("argument --action: one of --action or --name is required")
    return Auth5(issuer, subject, a.delegate, ActionExpr(_atoms(ctx, [a.action], "--action")), v)


def cmd_decide(ctx, a):
    C, C_R, _, _ = _load(ctx, a.files)
    query = _concrete_query(ctx, a)
    ok, deriv = decide_concrete(C, C_R, query)
    ctx.print(("TRUE " if ok else "FALSE ") + encode_tuple(query))
    if deriv is not None:
        ctx.print(deriv.render())
    return 0 if ok else 1


def cmd_resolve(ctx, a):
    C, C_R, _, _ = _load(ctx, a.files)
    issuer, name = _key(a.issuer, "--issuer"), _name(a.name, "--name")
    if a.keys:
        universe = sorted({_key(k, "--keys") for k in a.keys})
    else:
        universe = sorted(symbols(C + C_R)[0])
    found = []
    for k in universe:
        ok, _ = decide_concrete(C, C_R, Name4(issuer, name, k, point(a.time)))
        if ok:
            found.append(k)
    ctx.print(f"{issuer.id} {name.id} at {a.time}: " + (" ".join(k.id for k in found) or "(none)"))
    return 0 if found else 1


def cmd_prove(ctx, a):
    C, C_R, _, _ = _load(ctx, a.files)
    target = decode_tuple(parse_sexpr(ctx.arg(a.target)), "--target")
    if not isinstance(target, (Name4, Auth5)):
        raise UsageError("argument --target: expected a 4tuple or 5tuple")
    _check_crls(C_R)
    srcs = tuples_with_sources(C, C_R)
    cl = Closure(srcs, a.rules, _config(a), sources=srcs, target=target)
    deriv = cl.derive(target)
    if deriv is None:
        ctx.print(f"NOT DERIVABLE under {a.rules} (bound {cl.bound})")
        return 1
    ctx.print(f"DERIVABLE under {a.rules} ({deriv.mode}, bound {cl.bound})")
    ctx.print(deriv.render())
    return 0


def cmd_oracle(ctx, a):
    C, C_R, _, _ = _load(ctx, a.files)
    phi = decode_formula(parse_sexpr(ctx.arg(a.formula)), "--formula")
    _check_crls(C_R)
    keys, names = symbols(C + C_R)
    fk, fn = formula_symbols(phi)
    keys |= fk | {_key(k, "--keys") for k in a.keys}
    names |= fn | {_name(n, "--names") for n in a.names}
    atoms = _atoms(ctx, a.actions, "--actions")
    for c in C:
        if isinstance(c, Auth):
            atoms |= c.action.atoms
    atoms |= _formula_atoms(phi)
    universe = Universe(frozenset(keys), frozenset(names), representative_actions(atoms))
    verdict = entailment(C, C_R, phi, universe, method=a.method)
    ctx.print(verdict.render())
    for c in verdict.extra:
        ctx.print(f"  with {encode_certificate(c).decode()}")
    return 0 if verdict.entailed else 1


def _formula_atoms(phi) -> set:
    if isinstance(phi, (Perm, Del)):
        return set(phi.A.atoms)
    if isinstance(phi, (Issued, Valid)) and isinstance(phi.c, Auth):
        return set(phi.c.action.atoms)
    if isinstance(phi, Not):
        return _formula_atoms(phi.f)
    if isinstance(phi, And):
        return _formula_atoms(phi.left) | _formula_atoms(phi.right)
    return set()


def cmd_witness(ctx, a):
    C, C_R, _, _ = _load(ctx, a.files)
    c = decode_certificate(parse_sexpr(ctx.arg(a.target)), "--target")
    if isinstance(c, Crl):
        raise UsageError("argument --target: expected a naming or authorization certificate")
    supply = {_key(k, "--key-supply") for k in a.key_supply}
    w = build_witness(C, C_R, c, supply, bound=a.bound)
    if w is None:
        ctx.print("DERIVABLE " + encode_tuple(tuple_of_cert(c)))
        return 1
    ctx.print(f"WITNESS (key {w.key.id} time {w.time})")
    ctx.print(encode_run(w.run.events))
    return 0


# ---------------------------------------------------------------- wiring


def build_parser() -> argparse.ArgumentParser:
    p = _Parser(prog="spkicalc", description="SPKI/SDSI certificate calculus tools.")
    sub = p.add_subparsers(dest="command", required=True, parser_class=_Parser)

    def files(sp, many=True):
        # "*" so that files after a variadic flag can be reclaimed by _reclaim_files
        sp.add_argument("files", nargs="*" if many else None, metavar="FILE",
                        help="certificate bundle or run file ('-' for stdin)")

    def rules(sp):
        sp.add_argument("--rules", choices=["rs0", "rs1", "rs2"], default="rs0")
        sp.add_argument("--bound", type=int, default=None,
                        help="cap on principal-expression length (default: input size)")

    sp = sub.add_parser("parse", help="validate files and print certificate digests")
    files(sp)
    sp.set_defaults(fn=cmd_parse)

    sp = sub.add_parser("canon", help="re-print a file canonically")
    sp.add_argument("file", metavar="FILE")
    sp.set_defaults(fn=cmd_canon)

    sp = sub.add_parser("crl-check", help="check that CRLs from one issuer never overlap")
    files(sp)
    sp.set_defaults(fn=cmd_crl_check)

    sp = sub.add_parser("reduce", help="print the maximal tuples of the closure")
    rules(sp)
    sp.add_argument("--emit-3tuples", action="store_true")
    sp.add_argument("--clip-to-issue", action="store_true",
                    help="start each tuple's interval no earlier than its certificate's issue time")
    files(sp)
    sp.set_defaults(fn=cmd_reduce)

    sp = sub.add_parser("decide", help="decide a concrete naming or authorization query")
    sp.add_argument("--issuer", required=True)
    sp.add_argument("--subject", required=True)
    sp.add_argument("--action")
    sp.add_argument("--name")
    sp.add_argument("--time", type=int, required=True)
    sp.add_argument("--delegate", action="store_true")
    files(sp)
    sp.set_defaults(fn=cmd_decide)

    sp = sub.add_parser("resolve", help="list the keys a name is bound to at a time")
    sp.add_argument("--issuer", required=True)
    sp.add_argument("--name", required=True)
    sp.add_argument("--time", type=int, required=True)
    sp.add_argument("--keys", nargs="*", default=[])
    files(sp)
    sp.set_defaults(fn=cmd_resolve)

    sp = sub.add_parser("prove", help="derive a tuple and print the trace")
    sp.add_argument("--target", required=True, help="tuple S-expression or @file")
    rules(sp)
    files(sp)
    sp.set_defaults(fn=cmd_prove)

    sp = sub.add_parser("oracle", help="closed-semantics entailment over a finite universe")
    sp.add_argument("--formula", required=True, help="formula S-expression or @file")
    sp.add_argument("--keys", nargs="*", default=[])
    sp.add_argument("--names", nargs="*", default=[])
    sp.add_argument("--actions", nargs="*", default=[])
    sp.add_argument("--method", choices=["auto", "canonical", "chain"], default="auto")
    files(sp)
    sp.set_defaults(fn=cmd_oracle)

    sp = sub.add_parser("witness", help="build a run refuting a non-derivable certificate")
    sp.add_argument("--target", required=True, help="certificate S-expression or @file")
    sp.add_argument("--key-supply", nargs="+", required=True)
    sp.add_argument("--bound", type=int, default=None)
    files(sp)
    sp.set_defaults(fn=cmd_witness)
    return p


_VARIADIC = ("keys", "names", "actions", "key_supply")


def _reclaim_files(args):
    """Move trailing file arguments swallowed by a variadic flag back to FILE."""
    if not hasattr(args, "files") or isinstance(args.files, str):
        return
    if not args.files:
        for attr in _VARIADIC:
            vals = getattr(args, attr, None)
            if not vals:
                continue
            i = len(vals)
            while i > 0 and (vals[i - 1] == "-" or os.path.exists(vals[i - 1])):
                i -= 1
            if i < len(vals):
                args.files = vals[i:]
                setattr(args, attr, vals[:i])
                break
    if not args.files:
        raise UsageError("the following arguments are required: FILE")
    if getattr(args, "key_supply", None) == []:
        raise UsageError("argument --key-supply: expected at least one key")


def _check_crls(C_R):
    clash = find_crl_clash(C_R)
    if clash is not None:
        raise InconsistentCRLs(*clash)


def run_cli(argv: Sequence[str], stdin: Optional[bytes] = b"") -> tuple:
    """Run one command; return (exit status, stdout bytes, stderr bytes).

    ``stdin`` is what a ``-`` file argument reads; None reads the process's
    standard input on demand.
    """
    ctx = _Ctx(stdin)
    try:
        args = build_parser().parse_args(list(argv))
        _reclaim_files(args)
        if getattr(args, "time", None) is not None and args.time < 0:
            raise UsageError("argument --time: must be a natural number")
        if getattr(args, "bound", None) is not None and args.bound < 1:
            raise UsageError("argument --bound: must be positive")
        status = args.fn(ctx, args)
    except UsageError as exc:
        return 2, b"", f"spkicalc: {exc}\n".encode()
    except InconsistentCRLs as exc:
        lines = [f"spkicalc: InconsistentCRLs: {exc}"]
        lines += [f"  {encode_certificate(c).decode()}" for c in exc.pair]
        return 2, ctx.out.getvalue().encode(), ("\n".join(lines) + "\n").encode()
    except SpkiError as exc:
        return 2, ctx.out.getvalue().encode(), f"spkicalc: {type(exc).__name__}: {exc}\n".encode()
    return status, ctx.out.getvalue().encode(), b""


def main(argv: Optional[Sequence[str]] = None) -> int:
    argv = sys.argv[1:] if argv is None else argv
    status, out, err = run_cli(argv, None)
    sys.stdout.buffer.write(out)
    sys.stderr.buffer.write(err)
    return status


if __name__ == "__main__":
    sys.exit(main())
