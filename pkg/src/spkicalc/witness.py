"""Counter-model construction for non-derivable certificates.

Given certificates ``C``, CRLs ``C_R`` and a certificate ``c`` whose tuple is
not derivable, :func:`build_completeness_witness` builds a run that issues
everything in ``C ∪ C_R`` at time 0 together with extra certificates that
realize a term model of the bounded RS1 closure:

* time is cut into cells: every endpoint in play is a cell of its own and
  each nonempty gap between consecutive endpoints is another;
* within a cell ``W`` the closure expressions are grouped into classes of
  mutually bound expressions, and each class that holds no key gets a fresh
  key ``k_{x,W}`` from the supplied pool;
* for every ``p·n`` in the expression set bound to ``q`` throughout ``W``,
  the run issues ``(cert k_{p,W} n k_{q,W} W)``, and for every derived
  5-tuple from a key ``k`` to an expression ``q`` it issues the matching
  authorization to ``k_{q,W}``.

The run is then checked: it must issue all of ``C ∪ C_R`` and the formula of
``c`` must fail at some key and time.  A failed check raises
:class:`WitnessFailure`.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Iterable, Optional

from .algebra import INF, Range, interval_subset, representative_actions
from .errors import InconsistentCRLs, ModelError, SupplyTooSmall, WitnessFailure
from .model import (
    Auth,
    Auth5,
    Bind3,
    Crl,
    Issued,
    Key,
    Naming,
    cert_keys,
    cert_size,
    formula_of_cert,
    from_leaves,
    implies,
    leaves,
    tuple_of_cert,
)
from .reduction import (
    Closure,
    ClosureConfig,
    RuleSet,
    closure_expressions,
    find_crl_clash,
    tuples_with_sources,
)
from .semantics import (
    Universe,
    _formula_times,
    _order,
    conjunction,
    effective_horizon,
    eval_formula,
    make_run,
    minimal_interpretation,
    symbols,
)


@dataclass(frozen=True)
class Witness:
    """A run refuting ``c`` together with the refuting key and time."""

    run: object
    key: Key
    time: int
    fresh_keys: tuple


def time_cells(certs: Iterable) -> list:
    """Point cells at every endpoint plus the nonempty gaps between them."""
    pts = {0}
    for c in certs:
        for x in [c] + (list(c.canceled) if isinstance(c, Crl) else []):
            if isinstance(x.validity, Range):
                pts.add(x.validity.lo)
                if x.validity.hi != INF:
                    pts.add(x.validity.hi)
    pts = sorted(pts)
    cells = []
    for i, e in enumerate(pts):
        cells.append(Range(e, e))
        nxt = pts[i + 1] if i + 1 < len(pts) else INF
        if nxt == INF:
            cells.append(Range(e + 1, INF))
        elif nxt > e + 1:
            cells.append(Range(e + 1, nxt - 1))
    return cells


def _classes(exprs, binds):
    """Connected components of mutual binding among ``exprs``."""
    parent = {p: p for p in exprs}

    def find(x):
        while parent[x] != x:
            parent[x] = parent[parent[x]]
            x = parent[x]
        return x

    for p, q in binds:
        if p != q and (q, p) in binds and p in parent and q in parent:
            a, b = find(p), find(q)
            if a != b:
                parent[max(a, b, key=repr)] = min(a, b, key=repr)
    groups = {}
    for p in exprs:
        groups.setdefault(find(p), []).append(p)
    return list(groups.values())


def build_witness(C, C_R, c, key_supply, *, bound: Optional[int] = None) -> Optional[Witness]:
    """Like :func:`build_completeness_witness` but also reports where ``c`` fails."""
    C, C_R = list(C), list(C_R)
    if not isinstance(c, (Naming, Auth)):
        raise ModelError("the target must be a naming or authorization certificate")
    clash = find_crl_clash(C_R)
    if clash is not None:
        raise InconsistentCRLs(*clash)
    instance_keys = set(cert_keys(c))
    for x in C + C_R:
        instance_keys |= cert_keys(x)
    supply = set(key_supply)
    need = sum(cert_size(x) for x in C if not isinstance(x, Crl)) + cert_size(c)
    if len(supply | instance_keys) <= need:
        raise SupplyTooSmall(
            f"need more than {need} keys in the supply and the instance, have {len(supply | instance_keys)}"
        )

    target = tuple_of_cert(c)
    srcs = tuples_with_sources(C, C_R)
    cfg = ClosureConfig(expr_len_bound=bound)
    if Closure(srcs, RuleSet.RS2, cfg, sources=srcs, target=target).derive(target) is not None:
        return None

    S = closure_expressions(srcs, [target])
    cl = Closure(srcs, RuleSet.RS1, ClosureConfig(expr_len_bound=bound, emit_bind3=True),
                 sources=srcs, extra=S, target=target)
    in_S = set(S)
    fresh_pool = sorted(supply - instance_keys)
    cells = time_cells(C + C_R + [c])
    issued = []
    used = set()
    for W in cells:
        binds = {(t.lhs, t.rhs) for t in cl.tuples
                 if isinstance(t, Bind3) and interval_subset(W, t.validity)}
        kappa = {}
        fresh = iter(fresh_pool)
        for group in sorted(_classes(S, binds), key=lambda g: sorted(map(repr, g))):
            keys_in = [p for p in group if isinstance(p, Key)]
            if keys_in:
                for p in group:
                    kappa[p] = keys_in[0]
                continue
            try:
                k_new = next(fresh)
            except StopIteration:
                raise SupplyTooSmall(f"ran out of fresh keys in cell {W!r}") from None
            used.add(k_new)
            for p in group:
                kappa[p] = k_new
        for p, q in sorted(binds, key=repr):
            seq = leaves(p)
            if len(seq) < 2 or p not in in_S or q not in kappa:
                continue
            ph = from_leaves(seq[:-1])
            if ph not in kappa:
                continue
            issued.append(Naming(kappa[ph], seq[-1], kappa[q], W))
        for t in cl.tuples:
            if isinstance(t, Auth5) and t.subject in kappa and t.action.atoms \
                    and interval_subset(W, t.validity):
                issued.append(Auth(t.issuer, kappa[t.subject], t.delegate, t.action, W))

    run = make_run({0: set(C) | set(C_R) | set(issued)})
    k, tm = _refutation(run, C + C_R, c)
    if k is None:
        raise WitnessFailure(f"constructed run does not refute the target certificate {c!r}")
    return Witness(run, k, tm, tuple(sorted(used)))


def _universe_of(run, C, c):
    keys, names = symbols(list(run.certificates()) + [c])
    atoms = set()
    for x in list(run.certificates()) + [c]:
        if isinstance(x, Auth):
            atoms |= x.action.atoms
    return Universe(frozenset(keys), frozenset(names), representative_actions(atoms))


def _refutation(run, given, c):
    universe = _universe_of(run, given, c)
    interp = minimal_interpretation(run, universe)
    phi = implies(conjunction(Issued(x) for x in sorted(set(given), key=_order)), formula_of_cert(c))
    H = max(interp.horizon, effective_horizon(run, universe, _formula_times(phi, [])))
    for t in range(H + 1):
        for k in universe.sorted_keys():
            if not eval_formula(run, interp, k, t, phi):
                return k, t
    return None, None


def build_completeness_witness(C, C_R, c, key_supply, *, bound: Optional[int] = None):
    """Run on which ``C ∪ C_R`` is issued but ``c``'s formula fails, or None if derivable."""
    w = build_witness(C, C_R, c, key_supply, bound=bound)
    return None if w is None else w.run
