"""Variables, transformations, signatures and formula terms.

Coordinates (variables) are plain non-negative ints.  A formula is an
immutable tree of the node classes below; ``Subst(tau, body)`` reads
coordinate ``k`` of ``body`` from coordinate ``tau(k)`` of the ambient
assignment, so ``Subst({0: 5}, P)`` is ``P`` with its 0th coordinate
replaced by coordinate 5.
"""

from __future__ import annotations

import enum
import functools
import json
from dataclasses import dataclass
from typing import Iterable, Mapping

from .errors import DimensionOverflow, SignatureError

Var = int

DEFAULT_N_DIM = 4
DEFAULT_N_SPARE = 8


# ---------------------------------------------------------------------------
# transformations


@dataclass(frozen=True)
class Transformation:
    """A map on coordinates: a base pattern plus finitely many overrides.

    ``offset == 0`` is the identity base, ``offset > 0`` the shift
    ``i -> i + offset`` and ``offset < 0`` its left inverse, which sends
    ``i -> i + offset`` for ``i >= -offset`` and fixes the points below.
    """

    offset: int = 0
    overrides: tuple = ()

    def __post_init__(self):
        items = dict(self.overrides)
        for i, j in items.items():
            if i < 0 or j < 0:
                raise ValueError("transformations act on non-negative indices")
        canon = tuple(sorted((i, j) for i, j in items.items() if j != self._base(i)))
        object.__setattr__(self, "overrides", canon)
        object.__setattr__(self, "_table", dict(canon))

    @classmethod
    def identity(cls) -> "Transformation":
        return _IDENTITY

    @classmethod
    def shift(cls, k: int) -> "Transformation":
        if k < 0:
            raise ValueError("shift offset must be a natural number")
        return cls(k)

    @classmethod
    def from_mapping(cls, mapping: Mapping[int, int], offset: int = 0) -> "Transformation":
        return cls(offset, tuple(mapping.items()))

    def _base(self, i: int) -> int:
        if self.offset >= 0 or i >= -self.offset:
            return i + self.offset
        return i

    def __call__(self, i: int) -> int:
        return self._table.get(i, self._base(i))

    def is_finitary(self) -> bool:
        return self.offset == 0

    def moved(self) -> frozenset:
        if not self.is_finitary():
            raise ValueError("a shift moves infinitely many points")
        return frozenset(self._table)

    def image(self, indices: Iterable[int]) -> frozenset:
        return frozenset(self(i) for i in indices)

    def update(self, i: int, j: int) -> "Transformation":
        """``tau(i -> j)``: agree with ``tau`` except that ``i`` goes to ``j``."""
        table = dict(self._table)
        table[i] = j
        return Transformation(self.offset, tuple(table.items()))

    def restrict(self, indices: Iterable[int]) -> "Transformation":
        """The finitary transformation agreeing with ``self`` on ``indices``."""
        return Transformation(0, tuple((i, self(i)) for i in indices))

    def left_inverse(self) -> "Transformation":
        if self.overrides or self.offset < 0:
            raise ValueError("left inverses are provided for pure shifts only")
        return Transformation(-self.offset)

    def __repr__(self):
        parts = []
        if self.offset:
            parts.append(f"shift({self.offset})")
        parts.extend(f"{i}->{j}" for i, j in self.overrides)
        return "T[" + ", ".join(parts) + "]" if parts else "T[id]"


_IDENTITY = Transformation()


def compose(tau: Transformation, sigma: Transformation) -> Transformation:
    """Apply ``tau`` first, then ``sigma``: ``i -> sigma(tau(i))``.

    ``Subst(tau, Subst(sigma, f))`` denotes ``Subst(compose(sigma, tau), f)``.
    """
    offset = tau.offset + sigma.offset
    bound = 1 + abs(tau.offset) + abs(sigma.offset)
    for i, j in tau.overrides + sigma.overrides:
        bound = max(bound, 1 + i + j + abs(tau.offset) + abs(sigma.offset))
    table = {i: sigma(tau(i)) for i in range(bound)}
    return Transformation(offset, tuple(table.items()))


def single(k: int, j: int) -> Transformation:
    """The replacement ``k -> j`` (identity elsewhere)."""
    return Transformation(0, ((k, j),))


class SemigroupKind(enum.Enum):
    FINITE = "finite_transformations"
    STRONGLY_RICH = "strongly_rich"
    ALL_BOUNDED = "all_transformations_bounded"

    def admits(self, tau: Transformation) -> bool:
        if self is SemigroupKind.FINITE:
            return tau.is_finitary()
        return True


# ---------------------------------------------------------------------------
# formulas


class Formula:
    __slots__ = ()

    def __and__(self, other):
        return And(self, other)

    def __or__(self, other):
        return Or(self, other)

    def __rshift__(self, other):
        return Impl(self, other)

    def __str__(self):
        from .parse import print_formula

        return print_formula(self)


def _cached_hash(cls):
    """Replace the dataclass hash by one computed once per node."""
    plain = cls.__hash__

    def __hash__(self):
        try:
            return self.__dict__["_hash"]
        except KeyError:
            h = plain(self)
            object.__setattr__(self, "_hash", h)
            return h

    cls.__hash__ = __hash__
    return cls


@_cached_hash
@dataclass(frozen=True, repr=False)
class Atom(Formula):
    name: str
    support: tuple = ()

    def __post_init__(self):
        object.__setattr__(self, "support", tuple(sorted(set(self.support))))

    def __repr__(self):
        return f"Atom({self.name!r}, {self.support})"


@_cached_hash
@dataclass(frozen=True, repr=False)
class Top(Formula):
    def __repr__(self):
        return "TOP"


@_cached_hash
@dataclass(frozen=True, repr=False)
class Bot(Formula):
    def __repr__(self):
        return "BOT"


@_cached_hash
@dataclass(frozen=True)
class And(Formula):
    left: Formula
    right: Formula


@_cached_hash
@dataclass(frozen=True)
class Or(Formula):
    left: Formula
    right: Formula


@_cached_hash
@dataclass(frozen=True)
class Impl(Formula):
    left: Formula
    right: Formula


@_cached_hash
@dataclass(frozen=True)
class Cyl(Formula):
    """Existential quantification over one coordinate."""

    index: int
    body: Formula


@_cached_hash
@dataclass(frozen=True)
class UCyl(Formula):
    """Universal quantification over one coordinate."""

    index: int
    body: Formula


@_cached_hash
@dataclass(frozen=True)
class Subst(Formula):
    tau: Transformation
    body: Formula


@_cached_hash
@dataclass(frozen=True)
class Diag(Formula):
    i: int
    j: int


TOP = Top()
BOT = Bot()

BINARY = (And, Or, Impl)
QUANTIFIERS = (Cyl, UCyl)


def neg(f: Formula) -> Formula:
    return Impl(f, BOT)


def conj(fs: Iterable[Formula]) -> Formula:
    fs = list(fs)
    if not fs:
        return TOP
    out = fs[0]
    for f in fs[1:]:
        out = And(out, f)
    return out


def disj(fs: Iterable[Formula]) -> Formula:
    fs = list(fs)
    if not fs:
        return BOT
    out = fs[0]
    for f in fs[1:]:
        out = Or(out, f)
    return out


def s(k: int, j: int, f: Formula) -> Formula:
    """``s_j^k f``: replace coordinate ``k`` of ``f`` by ``j``."""
    return Subst(single(k, j), f)


def cyl_many(indices: Iterable[int], f: Formula) -> Formula:
    """Composite cylindrification over a finite set, innermost index last."""
    for i in sorted(indices, reverse=True):
        f = Cyl(i, f)
    return f


# ---------------------------------------------------------------------------
# signatures


@dataclass(frozen=True)
class Signature:
    atoms: tuple = ()  # ((name, support tuple), ...)
    kind: SemigroupKind = SemigroupKind.FINITE
    n_dim: int = DEFAULT_N_DIM
    n_spare: int = DEFAULT_N_SPARE

    def __post_init__(self):
        atoms = tuple(sorted((name, tuple(sorted(set(sup)))) for name, sup in dict(self.atoms).items()))
        object.__setattr__(self, "atoms", atoms)
        object.__setattr__(self, "_table", dict(atoms))
        if self.n_dim < 0 or self.n_spare < 0:
            raise SignatureError("budgets must be natural numbers")
        for name, sup in atoms:
            bad = [i for i in sup if i < 0 or i >= self.n_dim]
            if bad:
                raise SignatureError(f"support of {name} leaves the base window: {bad}")
            if len(sup) >= self.limit:
                raise SignatureError(f"support of {name} leaves no free coordinate")

    @classmethod
    def make(cls, atoms: Mapping[str, Iterable[int]] = (), kind="finite_transformations",
             n_dim=DEFAULT_N_DIM, n_spare=DEFAULT_N_SPARE) -> "Signature":
        atoms = dict(atoms)
        return cls(tuple((k, tuple(v)) for k, v in atoms.items()), SemigroupKind(kind), n_dim, n_spare)

    @property
    def limit(self) -> int:
        return self.n_dim + self.n_spare

    @property
    def spare(self) -> range:
        return range(self.n_dim, self.limit)

    def support(self, name: str) -> tuple:
        try:
            return self._table[name]
        except KeyError:
            raise SignatureError(f"unknown atom {name!r}") from None

    def atom(self, name: str) -> Atom:
        return Atom(name, self.support(name))

    def has_atom(self, name: str) -> bool:
        return name in self._table

    def dilate(self, block: int) -> "Signature":
        return Signature(self.atoms, self.kind, self.n_dim, self.n_spare + block)

    def with_atoms(self, atoms: Mapping[str, Iterable[int]]) -> "Signature":
        merged = dict(self._table)
        merged.update({k: tuple(v) for k, v in atoms.items()})
        return Signature(tuple(merged.items()), self.kind, self.n_dim, self.n_spare)

    def check_index(self, i: int):
        if not 0 <= i < self.limit:
            raise SignatureError(f"index {i} outside budget {self.limit}")

    def to_json(self) -> dict:
        return {
            "atoms": {name: list(sup) for name, sup in self.atoms},
            "kind": self.kind.value,
            "n_dim": self.n_dim,
            "n_spare": self.n_spare,
        }

    @classmethod
    def from_json(cls, data) -> "Signature":
        if isinstance(data, str):
            data = json.loads(data)
        atoms = data.get("atoms", {})
        if isinstance(atoms, list):
            atoms = {name: () for name in atoms}
        return cls.make(
            atoms,
            kind=data.get("kind", "finite_transformations"),
            n_dim=data.get("n_dim", DEFAULT_N_DIM),
            n_spare=data.get("n_spare", DEFAULT_N_SPARE),
        )


# ---------------------------------------------------------------------------
# structural queries


def dim_set(f: Formula, sig: Signature | None = None) -> frozenset:
    """Coordinates on which the meaning of ``f`` may depend."""
    if sig is None:
        return _dims(f)
    if isinstance(f, Atom):
        if sig is not None:
            if sig.support(f.name) != f.support:
                raise SignatureError(f"atom {f.name} used with support {f.support}")
        return frozenset(f.support)
    if isinstance(f, (Top, Bot)):
        return frozenset()
    if isinstance(f, Diag):
        return frozenset((f.i, f.j))
    if isinstance(f, BINARY):
        return dim_set(f.left, sig) | dim_set(f.right, sig)
    if isinstance(f, QUANTIFIERS):
        return dim_set(f.body, sig) - {f.index}
    if isinstance(f, Subst):
        return f.tau.image(dim_set(f.body, sig))
    raise TypeError(f"not a formula: {f!r}")


@functools.lru_cache(maxsize=1 << 18)
def _dims(f: Formula) -> frozenset:
    if isinstance(f, Atom):
        return frozenset(f.support)
    if isinstance(f, (Top, Bot)):
        return frozenset()
    if isinstance(f, Diag):
        return frozenset((f.i, f.j))
    if isinstance(f, BINARY):
        return _dims(f.left) | _dims(f.right)
    if isinstance(f, QUANTIFIERS):
        return _dims(f.body) - {f.index}
    if isinstance(f, Subst):
        return f.tau.image(_dims(f.body))
    raise TypeError(f"not a formula: {f!r}")


@functools.lru_cache(maxsize=1 << 18)
def all_indices(f: Formula) -> frozenset:
    """Every coordinate mentioned anywhere in ``f`` (binders included)."""
    if isinstance(f, Atom):
        return frozenset(f.support)
    if isinstance(f, (Top, Bot)):
        return frozenset()
    if isinstance(f, Diag):
        return frozenset((f.i, f.j))
    if isinstance(f, BINARY):
        return all_indices(f.left) | all_indices(f.right)
    if isinstance(f, QUANTIFIERS):
        return all_indices(f.body) | {f.index}
    if isinstance(f, Subst):
        inner = all_indices(f.body)
        return inner | f.tau.image(inner)
    raise TypeError(f"not a formula: {f!r}")


@functools.lru_cache(maxsize=1 << 18)
def atoms_of(f: Formula) -> frozenset:
    if isinstance(f, Atom):
        return frozenset((f.name,))
    if isinstance(f, (Top, Bot, Diag)):
        return frozenset()
    if isinstance(f, BINARY):
        return atoms_of(f.left) | atoms_of(f.right)
    return atoms_of(f.body)


def size(f: Formula) -> int:
    if isinstance(f, (Atom, Top, Bot, Diag)):
        return 1
    if isinstance(f, BINARY):
        return 1 + size(f.left) + size(f.right)
    return 1 + size(f.body)


def has_shift(f: Formula) -> bool:
    if isinstance(f, Subst):
        return not f.tau.is_finitary() or has_shift(f.body)
    if isinstance(f, BINARY):
        return has_shift(f.left) or has_shift(f.right)
    if isinstance(f, QUANTIFIERS):
        return has_shift(f.body)
    return False


def check_formula(f: Formula, sig: Signature):
    """Validate atoms, supports, indices and transformation kinds against ``sig``."""
    if isinstance(f, Atom):
        dim_set(f, sig)
    elif isinstance(f, Diag):
        sig.check_index(f.i)
        sig.check_index(f.j)
    elif isinstance(f, BINARY):
        check_formula(f.left, sig)
        check_formula(f.right, sig)
    elif isinstance(f, QUANTIFIERS):
        sig.check_index(f.index)
        check_formula(f.body, sig)
    elif isinstance(f, Subst):
        if not sig.kind.admits(f.tau):
            raise SignatureError(f"{f.tau!r} is not available in {sig.kind.value}")
        for i, j in f.tau.overrides:
            sig.check_index(i)
            sig.check_index(j)
        check_formula(f.body, sig)


def literal(f: Formula):
    """``(name, args)`` for an atom or a substituted atom in normal form."""
    if isinstance(f, Atom):
        return f.name, f.support
    if isinstance(f, Subst) and isinstance(f.body, Atom):
        return f.body.name, tuple(f.tau(r) for r in f.body.support)
    return None


def make_literal(atom: Atom, args: Iterable[int]) -> Formula:
    """The normal-form formula for ``atom`` applied to coordinates ``args``."""
    tau = Transformation(0, tuple(zip(atom.support, args)))
    return atom if not tau.overrides else Subst(tau, atom)


# ---------------------------------------------------------------------------
# substitution normal form


class _Fresh:
    def __init__(self, start: int, limit: int | None):
        self.start = start
        self.limit = limit

    def pick(self, avoid: frozenset) -> int:
        j = self.start
        while j in avoid:
            j += 1
        if self.limit is not None and j >= self.limit:
            raise DimensionOverflow(f"no spare index below {self.limit}")
        return j


def _push(f: Formula, tau: Transformation, fresh: _Fresh) -> Formula:
    if isinstance(f, Atom):
        if fresh.limit is not None:
            for r in f.support:
                if tau(r) >= fresh.limit:
                    raise DimensionOverflow(f"substitution sends {r} to {tau(r)}")
        return make_literal(f, [tau(r) for r in f.support])
    if isinstance(f, (Top, Bot)):
        return f
    if isinstance(f, Diag):
        return Diag(tau(f.i), tau(f.j))
    if isinstance(f, BINARY):
        return type(f)(_push(f.left, tau, fresh), _push(f.right, tau, fresh))
    if isinstance(f, Subst):
        return _push(f.body, compose(f.tau, tau), fresh)
    if isinstance(f, QUANTIFIERS):
        i = f.index
        free = dim_set(f.body) - {i}
        clash = tau.image(free)
        lam = i if i not in clash else fresh.pick(clash)
        return type(f)(lam, _push(f.body, tau.update(i, lam), fresh))
    raise TypeError(f"not a formula: {f!r}")


def normalize_subst(f: Formula, sig: Signature | None = None, *, fresh_from: int | None = None,
                    limit: int | None = None) -> Formula:
    """Push every substitution down to atoms and diagonals.

    Bound coordinates that would be captured are renamed to the smallest
    spare index (from ``sig.n_dim`` on) that is not in use.
    """
    if sig is not None:
        fresh_from = sig.n_dim if fresh_from is None else fresh_from
        limit = sig.limit if limit is None else limit
    if fresh_from is None:
        fresh_from = DEFAULT_N_DIM
    return _push(f, _IDENTITY, _Fresh(fresh_from, limit))


def instantiate(body: Formula, k: int, j: int, fresh_from: int = 0) -> Formula:
    """Normal form of ``s_j^k body`` with an unbounded fresh supply."""
    return _push(body, single(k, j), _Fresh(fresh_from, None))


def rename_indices(f: Formula, mapping: Mapping[int, int]) -> Formula:
    """Rename every coordinate (bound ones too) along an injective map."""
    if isinstance(f, Atom):
        return make_literal(f, [mapping[r] for r in f.support]) if f.support else f
    if isinstance(f, (Top, Bot)):
        return f
    if isinstance(f, Diag):
        return Diag(mapping[f.i], mapping[f.j])
    if isinstance(f, BINARY):
        return type(f)(rename_indices(f.left, mapping), rename_indices(f.right, mapping))
    if isinstance(f, QUANTIFIERS):
        return type(f)(mapping[f.index], rename_indices(f.body, mapping))
    if isinstance(f, Subst):
        lit = literal(f)
        if lit is not None:
            return make_literal(f.body, [mapping[a] for a in lit[1]])
        raise ValueError("rename_indices expects substitution normal form")
    raise TypeError(f"not a formula: {f!r}")


def is_normal(f: Formula) -> bool:
    if isinstance(f, Subst):
        return isinstance(f.body, (Atom, Diag)) and f.tau.is_finitary()
    if isinstance(f, BINARY):
        return is_normal(f.left) and is_normal(f.right)
    if isinstance(f, QUANTIFIERS):
        return is_normal(f.body)
    return True


def alpha_key(f: Formula, rename: Mapping[int, int] | None = None, _bound=()):
    """A hashable key identifying ``f`` up to renaming of bound coordinates.

    Free coordinates are passed through ``rename`` when given.  ``f`` must be
    in substitution normal form.
    """
    if rename is None and not _bound:
        return _plain_key(f)
    return _key(f, rename, _bound)


@functools.lru_cache(maxsize=1 << 18)
def _plain_key(f: Formula):
    return _key(f, None, ())


def _key(f, rename, _bound):
    if isinstance(f, (Top, Bot)):
        return (type(f).__name__,)

    def var(i):
        for depth in range(len(_bound) - 1, -1, -1):
            if _bound[depth] == i:
                return ("b", depth)
        return rename.get(i, i) if rename is not None else i

    lit = literal(f)
    if lit is not None:
        return ("A", lit[0], tuple(var(a) for a in lit[1]))
    if isinstance(f, Diag):
        return ("D", var(f.i), var(f.j))
    if isinstance(f, BINARY):
        return (type(f).__name__, _key(f.left, rename, _bound), _key(f.right, rename, _bound))
    if isinstance(f, QUANTIFIERS):
        return (type(f).__name__, _key(f.body, rename, _bound + (f.index,)))
    raise ValueError("alpha_key expects substitution normal form")
