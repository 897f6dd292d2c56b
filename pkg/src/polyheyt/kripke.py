"""Finite Kripke systems and their set algebras of monotone truth families.

A system has worlds under a preorder, a domain per world (monotone along
the order) and a dimension ``n``; the assignments of world ``k`` are all
maps ``range(n) -> X_k``.  A :class:`PropFamily` stores, per world, the set
of assignments at which it holds as a boolean vector over the encoded
assignment space ``universe ** n``.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass, field
from typing import Iterable, Mapping

import numpy as np

from .errors import DimensionOverflow, StructuralError, ValidationError
from .syntax import (
    And, Atom, Bot, Cyl, Diag, Formula, Impl, Or, Subst, Top, UCyl,
    Transformation, alpha_key, all_indices, dim_set, normalize_subst, single,
)

MAX_CELLS = 1 << 22


def _label_key(x):
    return (type(x).__name__, x)


class KripkeSystem:
    """Worlds, a preorder, monotone domains and a dimension."""

    def __init__(self, worlds, order, domains, dim: int):
        worlds = [str(w) for w in worlds]
        if not worlds:
            raise ValidationError("a Kripke system needs at least one world")
        if len(set(worlds)) != len(worlds):
            raise ValidationError("duplicate world names")
        if dim < 0:
            raise ValidationError("dimension must be a natural number")
        self.worlds = tuple(worlds)
        self.dim = dim
        pos = {w: k for k, w in enumerate(self.worlds)}
        W = len(worlds)
        leq = np.eye(W, dtype=bool)
        for a, b in order:
            try:
                leq[pos[str(a)], pos[str(b)]] = True
            except KeyError as exc:
                raise ValidationError(f"order mentions unknown world {exc.args[0]!r}") from None
        for k in range(W):
            leq |= leq[:, [k]] & leq[[k], :]
        self.leq = leq
        self.leq.setflags(write=False)

        if isinstance(domains, Mapping):
            try:
                domains = [domains[w] for w in self.worlds]
            except KeyError as exc:
                raise ValidationError(f"no domain for world {exc.args[0]!r}") from None
        domains = [list(d) for d in domains]
        if len(domains) != W:
            raise ValidationError("one domain per world is required")
        labels = sorted({x for d in domains for x in d}, key=_label_key)
        self.elements = tuple(labels)
        self._code = {x: k for k, x in enumerate(labels)}
        self.domains = tuple(frozenset(self._code[x] for x in d) for d in domains)
        for w, d in zip(self.worlds, self.domains):
            if not d:
                raise ValidationError(f"world {w} has an empty domain")
        for a in range(W):
            for b in range(W):
                if leq[a, b] and not self.domains[a] <= self.domains[b]:
                    raise ValidationError(
                        f"domains are not monotone: {self.worlds[a]} <= {self.worlds[b]}")
        self.universe = len(labels)
        self.size = self.universe ** dim
        if self.size * W > MAX_CELLS:
            raise ValidationError(f"assignment space too large ({self.size} per world)")
        self.shape = (self.universe,) * dim
        if dim:
            self.coords = np.indices(self.shape).reshape(dim, -1)
        else:
            self.coords = np.zeros((0, 1), dtype=np.int64)
        dom = np.zeros((W, self.universe), dtype=bool)
        for k, d in enumerate(self.domains):
            dom[k, sorted(d)] = True
        self.domain_mask = dom
        self.valid = dom[:, self.coords].all(axis=1) if dim else np.ones((W, 1), dtype=bool)
        self.valid.setflags(write=False)
        self.up = tuple(tuple(np.nonzero(leq[k])[0]) for k in range(W))
        self._key = (self.worlds, leq.tobytes(), self.domains, dim, self.elements)

    # -- identity ---------------------------------------------------------
    def __eq__(self, other):
        return self is other or (isinstance(other, KripkeSystem) and self._key == other._key)

    def __hash__(self):
        return hash(self._key)

    def __repr__(self):
        return f"KripkeSystem(worlds={list(self.worlds)}, dim={self.dim}, universe={self.universe})"

    @property
    def n_worlds(self):
        return len(self.worlds)

    def index(self, world) -> int:
        if isinstance(world, (int, np.integer)) and not isinstance(world, bool):
            return int(world)
        try:
            return self.worlds.index(str(world))
        except ValueError:
            raise ValidationError(f"unknown world {world!r}") from None

    def encode(self, x) -> int:
        """Position of the assignment ``x`` (a sequence of element labels)."""
        if len(x) != self.dim:
            raise ValidationError(f"assignment must have length {self.dim}")
        try:
            codes = [self._code[v] for v in x]
        except KeyError as exc:
            raise ValidationError(f"unknown element {exc.args[0]!r}") from None
        return int(np.ravel_multi_index(codes, self.shape)) if self.dim else 0

    def decode(self, a: int) -> tuple:
        return tuple(self.elements[c] for c in self.coords[:, a])

    def assignments(self, world) -> list:
        k = self.index(world)
        return [self.decode(a) for a in np.nonzero(self.valid[k])[0]]

    def leq_worlds(self, a, b) -> bool:
        return bool(self.leq[self.index(a), self.index(b)])

    # -- constants of the frame algebra ----------------------------------
    def family(self, values) -> "PropFamily":
        return PropFamily(self, np.asarray(values, dtype=bool) & self.valid)

    def top(self) -> "PropFamily":
        return PropFamily(self, self.valid.copy())

    def bot(self) -> "PropFamily":
        return PropFamily(self, np.zeros_like(self.valid))

    def diag(self, i: int, j: int) -> "PropFamily":
        self._check_coord(i)
        self._check_coord(j)
        return PropFamily(self, self.valid & (self.coords[i] == self.coords[j])[None, :])

    def _check_coord(self, i):
        if not 0 <= i < self.dim:
            raise DimensionOverflow(f"coordinate {i} outside dimension {self.dim}")

    def with_dim(self, dim: int) -> "KripkeSystem":
        order = [(a, b) for a in self.worlds for b in self.worlds if self.leq_worlds(a, b)]
        doms = [[self.elements[c] for c in sorted(d)] for d in self.domains]
        return KripkeSystem(self.worlds, order, doms, dim)

    def to_json(self) -> dict:
        edges = [[a, b] for a in self.worlds for b in self.worlds
                 if a != b and self.leq_worlds(a, b)]
        return {
            "worlds": list(self.worlds),
            "order": edges,
            "domains": {w: [self.elements[c] for c in sorted(d)]
                        for w, d in zip(self.worlds, self.domains)},
            "dim": self.dim,
        }

    @classmethod
    def from_json(cls, data) -> "KripkeSystem":
        if not isinstance(data, Mapping):
            raise ValidationError("frame must be a JSON object")
        try:
            return cls(data["worlds"], data.get("order", []), data["domains"], int(data.get("dim", 0)))
        except KeyError as exc:
            raise ValidationError(f"frame is missing {exc.args[0]!r}") from None


class PropFamily:
    """An element of the frame algebra: a monotone family of truth functions."""

    __slots__ = ("system", "values", "_hash")

    def __init__(self, system: KripkeSystem, values: np.ndarray):
        values = np.ascontiguousarray(values, dtype=bool)
        if values.shape != system.valid.shape:
            raise StructuralError("family does not match the system's assignment space")
        values.setflags(write=False)
        self.system = system
        self.values = values
        self._hash = None

    def __eq__(self, other):
        if not isinstance(other, PropFamily):
            return NotImplemented
        return self.system == other.system and np.array_equal(self.values, other.values)

    def __hash__(self):
        if self._hash is None:
            self._hash = hash((self.system, self.values.tobytes()))
        return self._hash

    def __and__(self, other):
        return meet(self, other)

    def __or__(self, other):
        return join(self, other)

    def __le__(self, other):
        _same(self, other)
        return not (self.values & ~other.values).any()

    def at(self, world, x) -> bool:
        S = self.system
        k = S.index(world)
        a = S.encode(x)
        if not S.valid[k, a]:
            raise ValidationError(f"{x} is not an assignment of world {S.worlds[k]}")
        return bool(self.values[k, a])

    def table(self) -> dict:
        S = self.system
        return {w: [list(S.decode(a)) for a in np.nonzero(self.values[k])[0]]
                for k, w in enumerate(S.worlds)}

    def is_monotone(self) -> bool:
        S = self.system
        v = self.values
        if (v & ~S.valid).any():
            return False
        for a in range(S.n_worlds):
            for b in S.up[a]:
                if (v[a] & ~v[b]).any():
                    return False
        return True

    def __repr__(self):
        return f"PropFamily({int(self.values.sum())} true cells over {self.system!r})"


def _same(*fams):
    first = fams[0].system
    for f in fams[1:]:
        if f.system is not first and f.system != first:
            raise StructuralError("operands live over different Kripke systems")
    return first


# ---------------------------------------------------------------------------
# operations of the frame algebra


def meet(f: PropFamily, g: PropFamily) -> PropFamily:
    S = _same(f, g)
    return PropFamily(S, f.values & g.values)


def join(f: PropFamily, g: PropFamily) -> PropFamily:
    S = _same(f, g)
    return PropFamily(S, f.values | g.values)


def impl(f: PropFamily, g: PropFamily) -> PropFamily:
    """``(f -> g)_k(x) = 1`` iff every later world ``k'`` has ``f_k'(x) <= g_k'(x)``."""
    S = _same(f, g)
    ok = ~f.values | g.values
    out = np.empty_like(S.valid)
    for k in range(S.n_worlds):
        out[k] = S.valid[k] & ok[list(S.up[k])].all(axis=0)
    return PropFamily(S, out)


def top(S: KripkeSystem) -> PropFamily:
    return S.top()


def bot(S: KripkeSystem) -> PropFamily:
    return S.bot()


def diag(S: KripkeSystem, i: int, j: int) -> PropFamily:
    return S.diag(i, j)


def _exists_along(S: KripkeSystem, row: np.ndarray, i: int, k: int) -> np.ndarray:
    grid = row.reshape(S.shape)
    dom = sorted(S.domains[k])
    sel = np.take(grid, dom, axis=i)
    return np.broadcast_to(sel.any(axis=i, keepdims=True), S.shape).reshape(-1)


def _forall_along(S: KripkeSystem, row: np.ndarray, i: int, k: int) -> np.ndarray:
    grid = row.reshape(S.shape)
    dom = sorted(S.domains[k])
    sel = np.take(grid, dom, axis=i)
    return np.broadcast_to(sel.all(axis=i, keepdims=True), S.shape).reshape(-1)


def cyl(i: int, f: PropFamily) -> PropFamily:
    """World-local existential over coordinate ``i``."""
    S = f.system
    S._check_coord(i)
    out = np.empty_like(S.valid)
    for k in range(S.n_worlds):
        out[k] = S.valid[k] & _exists_along(S, f.values[k], i, k)
    return PropFamily(S, out)


def ucyl(i: int, f: PropFamily) -> PropFamily:
    """Universal over coordinate ``i``, ranging over all later worlds' domains."""
    S = f.system
    S._check_coord(i)
    per_world = [_forall_along(S, f.values[k], i, k) for k in range(S.n_worlds)]
    out = np.empty_like(S.valid)
    for k in range(S.n_worlds):
        acc = S.valid[k].copy()
        for k2 in S.up[k]:
            acc &= per_world[k2]
        out[k] = acc
    return PropFamily(S, out)


def subst(tau: Transformation, f: PropFamily, relevant: Iterable[int] | None = None) -> PropFamily:
    """``(s_tau f)_k(x) = f_k(x o tau)``.

    Coordinates ``r`` with ``tau(r)`` outside the dimension are tolerated
    only when listed as irrelevant (not in ``relevant``); they keep ``x(r)``.
    """
    S = f.system
    n = S.dim
    relevant = set(range(n)) if relevant is None else set(relevant)
    rows = []
    for r in range(n):
        t = tau(r)
        if t < n:
            rows.append(S.coords[t])
        elif r in relevant:
            raise DimensionOverflow(f"substitution sends coordinate {r} to {t} >= {n}")
        else:
            rows.append(S.coords[r])
    if n:
        src = np.ravel_multi_index(np.stack(rows), S.shape)
    else:
        src = np.zeros(1, dtype=np.int64)
    return PropFamily(S, f.values[:, src] & S.valid)


def semantic_dims(f: PropFamily) -> frozenset:
    """Coordinates ``i`` with ``c_i f != f``."""
    return frozenset(i for i in range(f.system.dim) if cyl(i, f) != f)


# ---------------------------------------------------------------------------
# valuations and models


class Valuation:
    """Interpretation of atoms: per world, the set of argument tuples that hold.

    The arguments of an atom with support ``(r1, ..., rm)`` are the values
    of the assignment at those coordinates, in increasing order.
    """

    def __init__(self, system: KripkeSystem, relations: Mapping[str, Mapping]):
        self.system = system
        self.relations = {}
        self._tables = {}
        self._arity = {}
        for name, per_world in relations.items():
            if not isinstance(per_world, Mapping):
                per_world = dict(zip(system.worlds, per_world))
            rel = []
            arity = None
            for w in system.worlds:
                tuples = frozenset(tuple(t) for t in per_world.get(w, ()))
                for t in tuples:
                    if arity is None:
                        arity = len(t)
                    elif len(t) != arity:
                        raise ValidationError(f"atom {name} used with mixed arities")
                    k = system.index(w)
                    for v in t:
                        if v not in system._code or system._code[v] not in system.domains[k]:
                            raise ValidationError(f"atom {name} at {w}: {v!r} not in the domain")
                rel.append(tuples)
            extra = set(map(str, per_world)) - set(system.worlds)
            if extra:
                raise ValidationError(f"valuation of {name} mentions unknown worlds {sorted(extra)}")
            for a in range(system.n_worlds):
                for b in system.up[a]:
                    if not rel[a] <= rel[b]:
                        raise ValidationError(
                            f"valuation of {name} is not monotone: "
                            f"{system.worlds[a]} <= {system.worlds[b]}")
            self.relations[name] = tuple(rel)
            self._arity[name] = arity

    def table(self, name: str, arity: int) -> np.ndarray:
        key = (name, arity)
        if key not in self._tables:
            S = self.system
            if name not in self.relations:
                raise ValidationError(f"no valuation for atom {name!r}")
            if self._arity[name] not in (None, arity):
                raise ValidationError(
                    f"atom {name} has support of size {arity} but valuation arity {self._arity[name]}")
            tab = np.zeros((S.n_worlds, S.universe ** arity), dtype=bool)
            for k, tuples in enumerate(self.relations[name]):
                for t in tuples:
                    codes = [S._code[v] for v in t]
                    pos = int(np.ravel_multi_index(codes, (S.universe,) * arity)) if arity else 0
                    tab[k, pos] = True
            self._tables[key] = tab
        return self._tables[key]

    def to_json(self) -> dict:
        return {name: {w: sorted(list(t) for t in rel[k]) for k, w in enumerate(self.system.worlds)}
                for name, rel in self.relations.items()}


class Model:
    """A system with an atom valuation; evaluates formulas to families."""

    def __init__(self, system: KripkeSystem, valuation: Valuation | Mapping):
        if not isinstance(valuation, Valuation):
            valuation = Valuation(system, valuation)
        if valuation.system is not system and valuation.system != system:
            raise StructuralError("valuation belongs to another system")
        self.system = system
        self.valuation = valuation
        self._memo = {}

    def atom(self, a: Atom) -> PropFamily:
        S = self.system
        for r in a.support:
            S._check_coord(r)
        arity = len(a.support)
        tab = self.valuation.table(a.name, arity)
        if arity:
            idx = np.ravel_multi_index(S.coords[list(a.support)], (S.universe,) * arity)
        else:
            idx = np.zeros(S.size, dtype=np.int64)
        return PropFamily(S, tab[:, idx] & S.valid)

    def eval(self, f: Formula) -> PropFamily:
        hit = self._memo.get(f)
        if hit is not None:
            return hit
        S = self.system
        if isinstance(f, Atom):
            out = self.atom(f)
        elif isinstance(f, Top):
            out = S.top()
        elif isinstance(f, Bot):
            out = S.bot()
        elif isinstance(f, Diag):
            out = S.diag(f.i, f.j)
        elif isinstance(f, And):
            out = meet(self.eval(f.left), self.eval(f.right))
        elif isinstance(f, Or):
            out = join(self.eval(f.left), self.eval(f.right))
        elif isinstance(f, Impl):
            out = impl(self.eval(f.left), self.eval(f.right))
        elif isinstance(f, Cyl):
            out = cyl(f.index, self.eval(f.body))
        elif isinstance(f, UCyl):
            out = ucyl(f.index, self.eval(f.body))
        elif isinstance(f, Subst):
            out = subst(f.tau, self.eval(f.body), dim_set(f.body))
        else:
            raise TypeError(f"not a formula: {f!r}")
        self._memo[f] = out
        return out

    def holds(self, f: Formula, world, x) -> bool:
        """Direct recursive evaluation at one world and assignment.

        Independent of :meth:`eval`; used to cross-check it and to inspect
        frames whose full assignment space is large.
        """
        S = self.system
        k = S.index(world)
        codes = tuple(S._code[v] for v in x)
        if len(codes) != S.dim or any(c not in S.domains[k] for c in codes):
            raise ValidationError(f"{tuple(x)} is not an assignment of world {S.worlds[k]}")
        return self._holds(f, k, codes)

    def _holds(self, f, k, x) -> bool:
        S = self.system
        if isinstance(f, Top):
            return True
        if isinstance(f, Bot):
            return False
        if isinstance(f, Atom):
            t = tuple(S.elements[x[r]] for r in f.support)
            rel = self.valuation.relations.get(f.name)
            if rel is None:
                raise ValidationError(f"no valuation for atom {f.name!r}")
            return t in rel[k]
        if isinstance(f, Diag):
            return x[f.i] == x[f.j]
        if isinstance(f, And):
            return self._holds(f.left, k, x) and self._holds(f.right, k, x)
        if isinstance(f, Or):
            return self._holds(f.left, k, x) or self._holds(f.right, k, x)
        if isinstance(f, Impl):
            return all(not self._holds(f.left, k2, x) or self._holds(f.right, k2, x) for k2 in S.up[k])
        if isinstance(f, Cyl):
            i = f.index
            return any(self._holds(f.body, k, x[:i] + (u,) + x[i + 1:]) for u in sorted(S.domains[k]))
        if isinstance(f, UCyl):
            i = f.index
            return all(self._holds(f.body, k2, x[:i] + (u,) + x[i + 1:])
                       for k2 in S.up[k] for u in sorted(S.domains[k2]))
        if isinstance(f, Subst):
            rel = dim_set(f.body)
            y = []
            for r in range(S.dim):
                t = f.tau(r)
                if t < S.dim:
                    y.append(x[t])
                elif r in rel:
                    raise DimensionOverflow(f"substitution sends coordinate {r} to {t}")
                else:
                    y.append(x[r])
            return self._holds(f.body, k, tuple(y))
        raise TypeError(f"not a formula: {f!r}")


def evaluate(f: Formula, system: KripkeSystem, valuation) -> PropFamily:
    return Model(system, valuation).eval(f)


# ---------------------------------------------------------------------------
# enumeration and sampling of small systems


def enumerate_posets(n: int) -> list:
    """Partial orders on ``range(n)`` up to isomorphism, as sets of strict pairs."""
    pairs = [(a, b) for a in range(n) for b in range(n) if a != b]
    seen = set()
    out = []
    for bits in itertools.product((False, True), repeat=len(pairs)):
        rel = {p for p, on in zip(pairs, bits) if on}
        if any((b, a) in rel for a, b in rel):
            continue
        if any((a, c) not in rel for a, b in rel for b2, c in rel if b == b2 and a != c):
            continue
        canon = min(tuple(sorted((perm[a], perm[b]) for a, b in rel))
                    for perm in itertools.permutations(range(n)))
        if canon not in seen:
            seen.add(canon)
            out.append(sorted(rel))
    return out


def _monotone_choices(n_worlds, below, options_for):
    """Assignments ``w -> option`` with ``choice[a] <= choice[b]`` whenever ``a < b``."""

    def rec(w, acc):
        if w == n_worlds:
            yield tuple(acc)
            return
        need = frozenset().union(*[acc[a] for a in below[w]]) if below[w] else frozenset()
        for opt in options_for(w):
            if need <= opt:
                acc.append(opt)
                yield from rec(w + 1, acc)
                acc.pop()

    return rec(0, [])


def _topological(n, rel):
    order = []
    remaining = set(range(n))
    while remaining:
        for w in sorted(remaining):
            if not any((a, w) in rel for a in remaining if a != w):
                order.append(w)
                remaining.remove(w)
                break
    return order


def enumerate_systems(max_worlds: int, max_elems: int, dim: int):
    """Every system with at most the given worlds and elements, up to isomorphism."""
    for n in range(1, max_worlds + 1):
        for rel in enumerate_posets(n):
            rel = set(rel)
            topo = _topological(n, rel)
            pos = {w: k for k, w in enumerate(topo)}
            below = [[pos[a] for a in range(n) if (a, w) in rel] for w in topo]
            subsets = [frozenset(c) for r in range(1, max_elems + 1)
                       for c in itertools.combinations(range(max_elems), r)]
            seen = set()
            for doms in _monotone_choices(n, below, lambda w: subsets):
                used = sorted(set().union(*doms))
                if used != list(range(len(used))):
                    continue
                key = min(tuple(frozenset(p[e] for e in d) for d in doms)
                          for p in itertools.permutations(range(len(used))))
                if key in seen:
                    continue
                seen.add(key)
                names = [f"w{k}" for k in range(n)]
                order = [(names[pos[a]], names[pos[b]]) for a, b in rel]
                yield KripkeSystem(names, order, [sorted(d) for d in doms], dim)


def enumerate_valuations(system: KripkeSystem, atoms: Mapping[str, int], limit: int | None = None):
    """All valuations of the given atoms (name -> arity), monotone along the order."""
    S = system
    W = S.n_worlds
    below = [[a for a in range(W) if a != b and S.leq[a, b]] for b in range(W)]
    topo = sorted(range(W), key=lambda b: len(below[b]))
    per_atom = []
    for name, arity in sorted(atoms.items()):
        def options(w, arity=arity):
            k = topo[w]
            dom = sorted(S.elements[c] for c in S.domains[k])
            cells = list(itertools.product(dom, repeat=arity))
            return [frozenset(c) for r in range(len(cells) + 1) for c in itertools.combinations(cells, r)]
        pos = {k: t for t, k in enumerate(topo)}
        bl = [[pos[a] for a in below[topo[t]]] for t in range(W)]
        choices = []
        for ch in _monotone_choices(W, bl, options):
            choices.append({S.worlds[topo[t]]: ch[t] for t in range(W)})
        per_atom.append((name, choices))
    count = 0
    for combo in itertools.product(*[c for _, c in per_atom]):
        yield Valuation(S, {name: rel for (name, _), rel in zip(per_atom, combo)})
        count += 1
        if limit is not None and count >= limit:
            return


def enumerate_families(system: KripkeSystem, limit: int = 1 << 16):
    """All monotone families of a (tiny) system."""
    S = system
    W = S.n_worlds
    below = [[a for a in range(W) if a != b and S.leq[a, b]] for b in range(W)]
    topo = sorted(range(W), key=lambda b: len(below[b]))
    pos = {k: t for t, k in enumerate(topo)}
    bl = [[pos[a] for a in below[topo[t]]] for t in range(W)]

    def options(t):
        cells = list(np.nonzero(S.valid[topo[t]])[0])
        return [frozenset(c) for r in range(len(cells) + 1) for c in itertools.combinations(cells, r)]

    out = []
    for ch in _monotone_choices(W, bl, options):
        vals = np.zeros_like(S.valid)
        for t, cells in enumerate(ch):
            vals[topo[t], sorted(cells)] = True
        out.append(PropFamily(S, vals))
        if len(out) > limit:
            raise ValidationError("carrier too large to enumerate")
    return out


def random_system(rng: np.random.Generator, max_worlds: int, max_elems: int, dim: int) -> KripkeSystem:
    W = int(rng.integers(1, max_worlds + 1))
    edges = [(a, b) for a in range(W) for b in range(a + 1, W) if rng.random() < 0.5]
    doms = []
    for b in range(W):
        size = int(rng.integers(1, max_elems + 1))
        d = set(int(x) for x in rng.choice(max_elems, size=size, replace=False))
        doms.append(d)
    leq = np.eye(W, dtype=bool)
    for a, b in edges:
        leq[a, b] = True
    for k in range(W):
        leq |= leq[:, [k]] & leq[[k], :]
    for b in range(W):
        for a in range(b):
            if leq[a, b]:
                doms[b] |= doms[a]
    names = [f"w{k}" for k in range(W)]
    return KripkeSystem(names, [(names[a], names[b]) for a, b in edges], [sorted(d) for d in doms], dim)


def upward_close(system: KripkeSystem, values: np.ndarray) -> PropFamily:
    S = system
    v = np.asarray(values, dtype=bool) & S.valid
    out = np.zeros_like(v)
    for b in range(S.n_worlds):
        out[b] = S.valid[b] & v[S.leq[:, b]].any(axis=0)
    return PropFamily(S, out)


def random_family(system: KripkeSystem, rng: np.random.Generator, density: float | None = None) -> PropFamily:
    p = rng.random() if density is None else density
    seeds = rng.random(system.valid.shape) < p * 0.5
    return upward_close(system, seeds)


def random_valuation(system: KripkeSystem, rng: np.random.Generator, atoms: Mapping[str, int]) -> Valuation:
    S = system
    rels = {}
    for name, arity in sorted(atoms.items()):
        per = [set() for _ in S.worlds]
        for k in range(S.n_worlds):
            dom = sorted(S.elements[c] for c in S.domains[k])
            for t in itertools.product(dom, repeat=arity):
                if rng.random() < 0.35:
                    for k2 in S.up[k]:
                        per[k2].add(t)
        rels[name] = {w: per[k] for k, w in enumerate(S.worlds)}
    return Valuation(S, rels)


# ---------------------------------------------------------------------------
# diagonal quotient


class QuotientError(ValidationError):
    def __init__(self, message, triple=None):
        super().__init__(message)
        self.triple = triple


@dataclass
class DiagonalQuotient:
    """Per-world identification of elements whose diagonal lies in the theory."""

    system: KripkeSystem
    rep: dict  # world -> {element: representative}
    quotient: KripkeSystem

    def classes(self, world) -> list:
        groups = {}
        for e, r in self.rep[world].items():
            groups.setdefault(r, []).append(e)
        return [sorted(g) for _, g in sorted(groups.items())]

    def project(self, world, x) -> tuple:
        """``[x]``: replace every value by its class representative."""
        table = self.rep[world]
        return tuple(table[v] for v in x)

    def equivalent(self, world, x, y) -> bool:
        return self.project(world, x) == self.project(world, y)


def diag_relation(theory: Iterable[Formula], elements: Iterable[int]) -> dict:
    """``k ~ l`` iff ``d_kl`` (in either orientation) lies in the theory, or ``k == l``."""
    elements = sorted(elements)
    diags = {(f.i, f.j) for f in theory if isinstance(f, Diag)}
    return {k: {l for l in elements if k == l or (k, l) in diags or (l, k) in diags} for k in elements}


def check_equivalence(rel: Mapping[int, set]):
    """``None`` when ``rel`` is an equivalence, else an offending triple ``(k, l, u)``."""
    for k, ks in rel.items():
        if k not in ks:
            return (k, k, k)
        for l in ks:
            if k not in rel[l]:
                return (k, l, k)
            for u in rel[l]:
                if u not in ks:
                    return (k, l, u)
    return None


def diagonal_quotient(system: KripkeSystem, theory_per_world: Mapping) -> DiagonalQuotient:
    """Quotient each world's domain by the diagonals its theory contains.

    Domain elements are read as coordinate indices.  Raises
    :class:`QuotientError` with the offending triple when the relation is
    not transitive, and when the identification is not stable along the
    order (the quotient would not be a Kripke system).
    """
    S = system
    reps = {}
    for k, w in enumerate(S.worlds):
        elems = [S.elements[c] for c in sorted(S.domains[k])]
        rel = diag_relation(theory_per_world.get(w, ()), elems)
        bad = check_equivalence(rel)
        if bad is not None:
            raise QuotientError(f"~ is not an equivalence at {w}: {bad}", (w,) + bad)
        reps[w] = {e: min(rel[e]) for e in elems}
    for a in range(S.n_worlds):
        for b in S.up[a]:
            wa, wb = S.worlds[a], S.worlds[b]
            for e, r in reps[wa].items():
                if reps[wb][e] != r:
                    raise QuotientError(f"identification of {e} changes between {wa} and {wb}", (wa, wb, e, r))
    order = [(a, b) for a in S.worlds for b in S.worlds if S.leq_worlds(a, b)]
    doms = [sorted(set(reps[w].values())) for w in S.worlds]
    return DiagonalQuotient(S, reps, KripkeSystem(S.worlds, order, doms, S.dim))


# ---------------------------------------------------------------------------
# canonical evaluation


def theory_keys(theory: Iterable[Formula]) -> frozenset:
    return frozenset(alpha_key(f) for f in theory)


def substitute_assignment(p: Formula, x: Mapping[int, int]) -> Formula:
    """Normal form of ``s_{x u Id} p`` with binders kept clear of every index in sight."""
    tau = Transformation.from_mapping(dict(x))
    start = 1 + max(list(all_indices(p)) + list(dict(x).values()) + list(dict(x)) + [0])
    return normalize_subst(Subst(tau, p), fresh_from=start)


def psi_eval(p: Formula, world, x: Mapping[int, int] | None = None) -> int:
    """1 iff ``s_{x u Id} p`` belongs to the world's positive theory.

    ``world`` is anything with a ``contains`` test or a ``positive``
    collection of formulas (a matched pair), or such a collection itself;
    membership is up to renaming of bound coordinates.
    """
    q = substitute_assignment(p, x or {})
    member = getattr(world, "contains", None)
    if member is not None:
        return int(member(q))
    keys = getattr(world, "positive_keys", None)
    if keys is None:
        keys = theory_keys(getattr(world, "positive", world))
    return int(alpha_key(q) in keys)


# ---------------------------------------------------------------------------
# the substitution / diagonal lemma


@dataclass
class LemmaReport:
    k: int | None
    lam: int | None
    semantic: dict = field(default_factory=dict)
    derivable: dict | None = None

    @property
    def ok(self) -> bool:
        sem = all(self.semantic.values())
        der = self.derivable is None or all(v is True for v in self.derivable.values())
        return sem and der


def _preimage_is_self(t: Transformation, eta: int) -> bool:
    return t(eta) == eta and all(t(i) != eta for i in t.moved() if i != eta)


def pick_lambda(p: Formula, sigma: Transformation, tau: Transformation, limit: int) -> int:
    avoid = dim_set(p)
    for eta in range(limit):
        if eta not in avoid and _preimage_is_self(sigma, eta) and _preimage_is_self(tau, eta):
            return eta
    raise DimensionOverflow(f"no admissible fresh coordinate below {limit}")


def lemma_equations(p: Formula, sigma: Transformation, tau: Transformation, k: int, lam: int) -> dict:
    """The identities (a)-(d) and their chained consequence, as formula pairs."""
    sk, tk = sigma(k), tau(k)
    s_sig = Subst(sigma, p)
    s_lam = Subst(sigma.update(k, lam), p)
    s_tk = Subst(sigma.update(k, tk), p)
    d_lam = Diag(lam, sk)
    d_tk = Diag(tk, sk)
    back_s = Subst(single(lam, sk), s_lam)
    return {
        "a": (s_sig, back_s),
        "b": (Subst(single(lam, tk), And(d_lam, s_sig)), And(d_tk, s_sig)),
        "c": (Subst(single(lam, tk), And(d_lam, s_lam)), And(d_tk, s_tk)),
        "d": (And(d_lam, back_s), And(d_lam, s_lam)),
        "chain": (And(d_tk, s_sig), And(d_tk, s_tk)),
    }


def subst_diag_lemma_check(p: Formula, sigma: Transformation, tau: Transformation, models: Iterable[Model],
                           *, k: int | None = None, lam: int | None = None, depth: int | None = None,
                           limit: int | None = None) -> LemmaReport:
    """Check ``d_{tau k, sigma k} & s_sigma p = d_{tau k, sigma k} & s_{sigma(k -> tau k)} p``.

    Every intermediate identity is evaluated in each model; with ``depth``
    both directions of each identity are also sent to the prover.
    """
    models = list(models)
    if not sigma.is_finitary() or not tau.is_finitary():
        raise ValueError("the lemma concerns finitary transformations")
    J = sorted(i for i in sigma.moved() | tau.moved() if sigma(i) != tau(i))
    if not J:
        return LemmaReport(None, None, {"identity": True})
    if k is None:
        k = J[0]
    if limit is None:
        limit = min((m.system.dim for m in models), default=1 + max(all_indices(p) | {k, sigma(k), tau(k)}) + 4)
    if lam is None:
        lam = pick_lambda(p, sigma, tau, limit)
    eqs = lemma_equations(p, sigma, tau, k, lam)
    report = LemmaReport(k, lam)
    for name, (lhs, rhs) in eqs.items():
        report.semantic[name] = all(m.eval(lhs) == m.eval(rhs) for m in models)
    if depth is not None:
        from .prover import derives

        report.derivable = {}
        for name, (lhs, rhs) in eqs.items():
            there = derives([lhs], [rhs], depth, countermodels=False)
            back = derives([rhs], [lhs], depth, countermodels=False)
            report.derivable[name] = there.proved and back.proved
    return report


def diag_invariance_check(p: Formula, sigma: Transformation, tau: Transformation, models: Iterable[Model]) -> bool:
    """Where all ``d_{sigma i, tau i}`` hold, ``s_sigma p`` and ``s_tau p`` agree.

    Walks from ``sigma`` to ``tau`` one moved coordinate at a time, checking
    the chained identity at every step (the induction on the number of
    coordinates where they differ).
    """
    models = list(models)
    J = sorted(i for i in sigma.moved() | tau.moved() if sigma(i) != tau(i))
    guard = [Diag(sigma(i), tau(i)) for i in J]
    current = sigma
    for k in J:
        for m in models:
            lhs, rhs = lemma_equations(p, current, tau, k, 0)["chain"]
            if m.eval(lhs) != m.eval(rhs):
                return False
        current = current.update(k, tau(k))
    for m in models:
        g = m.system.top()
        for d in guard:
            g = meet(g, m.eval(d))
        if meet(g, m.eval(Subst(sigma, p))) != meet(g, m.eval(Subst(tau, p))):
            return False
    return True
