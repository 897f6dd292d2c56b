"""Deterministic enumeration of formulas by size.

Finite fragments stand in for the (infinite) subalgebras generated by a
set of atoms: a fragment is every formula up to some size over given
atoms and coordinates, in a fixed order (size first, then generation
order).  Trivial redundancies are skipped: ``top``/``bot`` inside compound
formulas (except ``bot`` as the consequent of a negation), repeated operands, the mirror image of a commutative pair and
quantifiers over coordinates the body does not use.
"""

from __future__ import annotations

import itertools
from typing import Callable, Iterable, Iterator

from .syntax import BOT, TOP, And, Atom, Bot, Cyl, Diag, Formula, Impl, Or, Top, UCyl, dim_set, make_literal


class Enumerator:
    def __init__(self, atoms: Iterable[Atom], indices: Iterable[int], *, diagonals: bool = True,
                 quantifiers: bool = True, connectives=(And, Or, Impl)):
        self.atoms = sorted(set(atoms), key=lambda a: (a.name, a.support))
        self.indices = sorted(set(indices))
        self.diagonals = diagonals
        self.quantifiers = quantifiers
        self.connectives = tuple(connectives)
        self._levels = {}
        self._rank = {}

    def _atomic(self):
        out = [TOP, BOT]
        for a in self.atoms:
            if not a.support:
                out.append(a)
                continue
            for args in itertools.product(self.indices, repeat=len(a.support)):
                out.append(make_literal(a, args))
        if self.diagonals:
            out.extend(Diag(i, j) for i, j in itertools.combinations(self.indices, 2))
        return out

    def level(self, n: int) -> list:
        """All formulas of exactly ``n`` nodes."""
        if n in self._levels:
            return self._levels[n]
        if n <= 0:
            out = []
        elif n == 1:
            out = self._atomic()
        else:
            out = []
            if self.quantifiers:
                for body in self.level(n - 1):
                    if isinstance(body, (Top, Bot)):
                        continue
                    free = dim_set(body)
                    for i in self.indices:
                        if i in free:
                            out.append(Cyl(i, body))
                            out.append(UCyl(i, body))
            for left_size in range(1, n - 1):
                lefts = [f for f in self.level(left_size) if not isinstance(f, (Top, Bot))]
                rights = [f for f in self.level(n - 1 - left_size) if not isinstance(f, (Top, Bot))]
                for op in self.connectives:
                    if op is Impl and n - 1 - left_size == 1:
                        out.extend(Impl(l, BOT) for l in lefts)  # negations
                    for l in lefts:
                        for r in rights:
                            if l == r:
                                continue
                            if op is not Impl and left_size == n - 1 - left_size and self._rank[l] > self._rank[r]:
                                continue
                            if op is not Impl and left_size > n - 1 - left_size:
                                continue
                            out.append(op(l, r))
        seen = set()
        uniq = []
        for f in out:
            if f not in seen:
                seen.add(f)
                uniq.append(f)
        for k, f in enumerate(uniq):
            self._rank.setdefault(f, (n, k))
        self._levels[n] = uniq
        return uniq

    def upto(self, max_size: int, keep: Callable[[Formula], bool] | None = None) -> Iterator[Formula]:
        for n in range(1, max_size + 1):
            for f in self.level(n):
                if keep is None or keep(f):
                    yield f

    def stream(self, keep: Callable[[Formula], bool] | None = None, max_size: int = 64) -> Iterator[Formula]:
        return self.upto(max_size, keep)


def fragment(atoms: Iterable[Atom], indices: Iterable[int], max_size: int, **kw) -> list:
    """The list of formulas of size at most ``max_size``."""
    return list(Enumerator(atoms, indices, **kw).upto(max_size))
