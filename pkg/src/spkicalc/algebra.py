"""Validity intervals and action expressions.

Times are natural numbers with a distinguished upper bound ``INF``.  An
interval is either a closed :class:`Range` or the distinguished
:data:`EMPTY` value; a ``Range`` with ``lo > hi`` is never constructed.

Action expressions are finite sets of atoms.  A :class:`Literal` atom denotes
exactly one literal action (a tuple of strings).  A :class:`Prefix` atom
``(p1, ..., pk)`` denotes every literal ``(a1, ..., ak)`` of the same length
with ``ai == pi`` for ``i < k`` and ``ak`` starting with ``pk``.  Atom
denotations are therefore pairwise nested or disjoint, which keeps
intersection closed and makes covering decidable one atom at a time.
"""

from __future__ import annotations

import math
import re
from dataclasses import dataclass
from typing import Iterable, Union

INF = math.inf

Action = tuple  # a literal action: tuple of strings


@dataclass(frozen=True, order=True)
class Range:
    lo: int
    hi: Union[int, float]

    def __post_init__(self):
        if isinstance(self.lo, bool) or not isinstance(self.lo, int) or self.lo < 0:
            raise ValueError(f"interval lower bound must be a natural number: {self.lo!r}")
        if self.hi != INF and (isinstance(self.hi, bool) or not isinstance(self.hi, int)):
            raise ValueError(f"interval upper bound must be a natural number or INF: {self.hi!r}")
        if self.lo > self.hi:
            raise ValueError(f"empty range [{self.lo},{self.hi}]; use EMPTY")

    def __repr__(self):
        hi = "inf" if self.hi == INF else self.hi
        return f"[{self.lo},{hi}]"

    def is_point(self) -> bool:
        return self.lo == self.hi


class EmptyInterval:
    """The empty validity interval.  Use the :data:`EMPTY` singleton."""

    _instance = None

    def __new__(cls):
        if cls._instance is None:
            cls._instance = super().__new__(cls)
        return cls._instance

    def __repr__(self):
        return "EMPTY"

    def __reduce__(self):
        return (EmptyInterval, ())

    def is_point(self) -> bool:
        return False


EMPTY = EmptyInterval()
ValidityInterval = Union[Range, EmptyInterval]
ALWAYS = Range(0, INF)


def interval(lo: int, hi) -> ValidityInterval:
    """Build ``[lo, hi]``, returning EMPTY when ``lo > hi``."""
    if lo > hi:
        return EMPTY
    return Range(lo, hi)


def point(t: int) -> Range:
    return Range(t, t)


def interval_intersect(v1: ValidityInterval, v2: ValidityInterval) -> ValidityInterval:
    if v1 is EMPTY or v2 is EMPTY:
        return EMPTY
    return interval(max(v1.lo, v2.lo), min(v1.hi, v2.hi))


def interval_contains(v: ValidityInterval, t: int) -> bool:
    if v is EMPTY:
        return False
    return v.lo <= t <= v.hi


def interval_subset(inner: ValidityInterval, outer: ValidityInterval) -> bool:
    """True iff every time in ``inner`` lies in ``outer``."""
    if inner is EMPTY:
        return True
    if outer is EMPTY:
        return False
    return outer.lo <= inner.lo and inner.hi <= outer.hi


def _touch(a: Range, b: Range) -> bool:
    # integer time: [1,2] and [3,4] leave no gap
    return a.lo <= b.hi + 1 and b.lo <= a.hi + 1


def interval_hull(v1: Range, v2: Range) -> Range:
    return Range(min(v1.lo, v2.lo), max(v1.hi, v2.hi))


def intervals_cover(v1: ValidityInterval, v2: ValidityInterval, v3: ValidityInterval) -> bool:
    """True iff ``v1 ∪ v2 ⊇ v3``."""
    if v3 is EMPTY:
        return True
    if interval_subset(v3, v1) or interval_subset(v3, v2):
        return True
    if v1 is EMPTY or v2 is EMPTY or not _touch(v1, v2):
        return False
    return interval_subset(v3, interval_hull(v1, v2))


def union_covers(pieces: Iterable[ValidityInterval], target: ValidityInterval) -> bool:
    """True iff the union of ``pieces`` contains every time in ``target``."""
    return cover_sequence(pieces, target) is not None


def cover_sequence(pieces: Iterable[ValidityInterval], target: ValidityInterval):
    """Pick pieces whose union contains ``target``, in sweep order.

    Returns a list of indices into ``pieces`` (as enumerated) such that each
    chosen piece overlaps or abuts the running prefix, or None when some
    time in ``target`` is uncovered.
    """
    if target is EMPTY:
        return []
    ranked = sorted(
        (p.lo, -p.hi if p.hi != INF else -INF, i, p)
        for i, p in enumerate(pieces)
        if p is not EMPTY and p.hi >= target.lo and p.lo <= target.hi
    )
    chosen = []
    reach = target.lo - 1  # last covered time
    j = 0
    while reach < target.hi:
        best = None
        while j < len(ranked) and ranked[j][0] <= reach + 1:
            cand = ranked[j][3]
            if best is None or cand.hi > best[1].hi:
                best = (ranked[j][2], cand)
            j += 1
        if best is None or best[1].hi <= reach:
            return None
        chosen.append(best[0])
        reach = best[1].hi
    return chosen


# ---------------------------------------------------------------- actions


@dataclass(frozen=True, order=True)
class Literal:
    path: tuple

    def __post_init__(self):
        _check_path(self.path)

    def __repr__(self):
        return "lit" + repr(self.path)


@dataclass(frozen=True, order=True)
class Prefix:
    path: tuple

    def __post_init__(self):
        _check_path(self.path)

    def __repr__(self):
        return "prefix" + repr(self.path)


Atom = Union[Literal, Prefix]
_DELIM = re.compile(r"[\s()]")


def _check_path(path):
    if not isinstance(path, tuple) or not path:
        raise ValueError("an action path is a nonempty tuple of strings")
    for part in path:
        if not isinstance(part, str) or not part or _DELIM.search(part):
            raise ValueError(f"bad action path element {part!r}")


@dataclass(frozen=True)
class ActionExpr:
    atoms: frozenset

    def __post_init__(self):
        if not isinstance(self.atoms, frozenset):
            object.__setattr__(self, "atoms", frozenset(self.atoms))
        for a in self.atoms:
            if not isinstance(a, (Literal, Prefix)):
                raise ValueError(f"not an action atom: {a!r}")

    @classmethod
    def of(cls, *items) -> "ActionExpr":
        """Convenience constructor: strings become one-element literals."""
        atoms = []
        for item in items:
            if isinstance(item, str):
                atoms.append(Literal((item,)))
            elif isinstance(item, tuple):
                atoms.append(Literal(item))
            else:
                atoms.append(item)
        return cls(frozenset(atoms))

    def __repr__(self):
        return "{" + ", ".join(map(repr, sorted(self.atoms, key=_atom_key))) + "}"

    def __bool__(self):
        return bool(self.atoms)

    def __contains__(self, act) -> bool:
        return action_member(act, self)


NO_ACTIONS = ActionExpr(frozenset())


def _atom_key(a: Atom):
    return (isinstance(a, Prefix), a.path)


def atom_member(act: Action, atom: Atom) -> bool:
    if isinstance(atom, Literal):
        return act == atom.path
    k = len(atom.path)
    return len(act) == k and act[:-1] == atom.path[:-1] and act[-1].startswith(atom.path[-1])


def action_member(act: Action, expr: ActionExpr) -> bool:
    return any(atom_member(act, a) for a in expr.atoms)


def atom_subset(a: Atom, b: Atom) -> bool:
    """aint(a) ⊆ aint(b)."""
    if isinstance(a, Literal):
        return atom_member(a.path, b)
    if isinstance(b, Literal):
        return False
    return (
        len(a.path) == len(b.path)
        and a.path[:-1] == b.path[:-1]
        and a.path[-1].startswith(b.path[-1])
    )


def atom_intersect(a: Atom, b: Atom):
    if atom_subset(a, b):
        return a
    if atom_subset(b, a):
        return b
    return None


def reduce_atoms(atoms: Iterable[Atom]) -> frozenset:
    """Drop atoms whose denotation lies inside another atom of the set."""
    atoms = set(atoms)
    keep = set()
    for a in atoms:
        if not any(b != a and atom_subset(a, b) for b in atoms):
            keep.add(a)
    return frozenset(keep)


def action_intersect(a1: ActionExpr, a2: ActionExpr) -> ActionExpr:
    out = []
    for x in a1.atoms:
        for y in a2.atoms:
            z = atom_intersect(x, y)
            if z is not None:
                out.append(z)
    return ActionExpr(reduce_atoms(out))


def action_union(a1: ActionExpr, a2: ActionExpr) -> ActionExpr:
    return ActionExpr(reduce_atoms(a1.atoms | a2.atoms))


def atom_covered(atom: Atom, expr: ActionExpr) -> bool:
    return any(atom_subset(atom, b) for b in expr.atoms)


def action_subset(a1: ActionExpr, a2: ActionExpr) -> bool:
    """aint(a1) ⊆ aint(a2)."""
    return all(atom_covered(x, a2) for x in a1.atoms)


def actions_cover(a1: ActionExpr, a2: ActionExpr, a3: ActionExpr) -> bool:
    """aint(a1) ∪ aint(a2) ⊇ aint(a3)."""
    return all(atom_covered(x, a1) or atom_covered(x, a2) for x in a3.atoms)


def action_equivalent(a1: ActionExpr, a2: ActionExpr) -> bool:
    return action_subset(a1, a2) and action_subset(a2, a1)


def representative_actions(atoms: Iterable[Atom]) -> frozenset:
    """Literal actions that separate every atom from its strict sub-atoms.

    For a literal atom the representative is the literal itself.  For a
    prefix atom it is a literal inside the prefix but outside every strictly
    smaller atom of the collection, so a finite sample of literals can tell
    whether the atom as a whole is covered.
    """
    atoms = set(atoms)
    reps = set()
    for a in atoms:
        if isinstance(a, Literal):
            reps.add(a.path)
            continue
        smaller = [b for b in atoms if b != a and atom_subset(b, a)]
        i = 0
        while True:
            cand = a.path[:-1] + (f"{a.path[-1]}~{i}",)
            if not any(atom_member(cand, b) for b in smaller):
                reps.add(cand)
                break
            i += 1
    return frozenset(reps)
