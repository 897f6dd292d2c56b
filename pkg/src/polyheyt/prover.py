"""Bounded derivability ``Gamma -> Delta`` and the relations built on it.

Proof search runs a multi-succedent intuitionistic sequent calculus
(Dragalin style) by iterative deepening: invertible rules are applied
eagerly and cost nothing, every other rule costs one unit of depth.
Equality is handled by closing the sequent under the diagonals on its
left.  Refutation is by explicit search for a finite Kripke countermodel,
re-checked by the evaluator.
"""

from __future__ import annotations

import functools
import itertools
from dataclasses import dataclass, field
from typing import Iterable

from .errors import ScopeError
from .kripke import KripkeSystem, Model, Valuation, enumerate_systems, enumerate_valuations
from .parse import print_formula, print_sequent
from .syntax import (
    BOT, TOP, And, Atom, Bot, Cyl, Diag, Formula, Impl, Or, Subst, Top, UCyl,
    all_indices, alpha_key, atoms_of, dim_set, instantiate, normalize_subst,
    rename_indices,
)

DEFAULT_DEPTH = 6

PROVED = "proved"
REFUTED = "refuted_by_countermodel"
EXHAUSTED = "depth_exhausted"


@dataclass(frozen=True)
class ProofNode:
    rule: str
    gamma: frozenset
    delta: frozenset
    premises: tuple = ()

    def to_json(self):
        return {
            "rule": self.rule,
            "sequent": print_sequent(_sorted(self.gamma), _sorted(self.delta)),
            "premises": [p.to_json() for p in self.premises],
        }

    def size(self) -> int:
        return 1 + sum(p.size() for p in self.premises)


@dataclass(frozen=True)
class Countermodel:
    """A world and assignment forcing every premise and no conclusion."""

    system: KripkeSystem
    valuation: Valuation
    world: str
    assignment: tuple
    renaming: tuple  # ((original index, coordinate), ...)

    def recheck(self, gamma: Iterable[Formula], delta: Iterable[Formula]) -> bool:
        """Re-evaluate the sequent in the model, independently of the search."""
        mapping = dict(self.renaming)
        model = Model(self.system, self.valuation)
        for f in gamma:
            g = rename_indices(_norm_all([f])[0], mapping)
            if not model.holds(g, self.world, self.assignment):
                return False
        for f in delta:
            g = rename_indices(_norm_all([f])[0], mapping)
            if model.holds(g, self.world, self.assignment):
                return False
        return True

    def to_json(self):
        return {
            "frame": self.system.to_json(),
            "valuation": self.valuation.to_json(),
            "world": self.world,
            "assignment": list(self.assignment),
            "coordinates": {str(i): c for i, c in self.renaming},
        }


@dataclass(frozen=True)
class ProofResult:
    status: str
    witness: object = None
    depth_used: int = 0

    def __post_init__(self):
        if self.status not in (PROVED, REFUTED, EXHAUSTED):
            raise ValueError(f"unknown status {self.status!r}")
        if self.status == EXHAUSTED and self.witness is not None:
            raise ValueError("an exhausted search carries no witness")

    @property
    def proved(self) -> bool:
        return self.status == PROVED

    @property
    def refuted(self) -> bool:
        return self.status == REFUTED

    @property
    def exhausted(self) -> bool:
        return self.status == EXHAUSTED

    def to_json(self):
        out = {"status": self.status, "depth_used": self.depth_used}
        if self.proved and self.witness is not None:
            out["trace"] = self.witness.to_json()
        elif self.refuted:
            out["countermodel"] = self.witness.to_json()
        return out


@functools.lru_cache(maxsize=1 << 18)
def _text(f: Formula) -> str:
    return print_formula(f)


def _norm_all(fs):
    fs = list(fs)
    start = 1 + max((max(all_indices(f), default=0) for f in fs), default=0)
    return [normalize_subst(f, fresh_from=start) for f in fs]


# ---------------------------------------------------------------------------
# equality closure


class _Classes:
    def __init__(self, gamma):
        self.parent = {}
        for f in gamma:
            if isinstance(f, Diag):
                self.union(f.i, f.j)

    def find(self, i):
        p = self.parent.get(i, i)
        if p == i:
            return i
        root = self.find(p)
        self.parent[i] = root
        return root

    def union(self, i, j):
        a, b = self.find(i), self.find(j)
        if a != b:
            self.parent[max(a, b)] = min(a, b)

    def rename(self):
        return _Renamer(self)


class _Renamer(dict):
    def __init__(self, classes):
        super().__init__()
        self.classes = classes

    def get(self, i, default=None):
        return self.classes.find(i)


def _closed(gamma, delta) -> str | None:
    if BOT in gamma:
        return "bot-left"
    if TOP in delta:
        return "top-right"
    if not gamma.isdisjoint(delta):
        return "axiom"
    classes, moved, ren, left = _left(gamma)
    for f in delta:
        if isinstance(f, Diag) and classes.find(f.i) == classes.find(f.j):
            return "eq-refl"
    for f in delta:
        if _rkey(f, moved, ren) in left:
            return "axiom"
    return None


def _rkey(f, moved, ren):
    # formulas without a renamed free index keep their cached plain key
    return alpha_key(f, ren) if moved and dim_set(f) & moved else alpha_key(f)


@functools.lru_cache(maxsize=1 << 14)
def _left(gamma):
    classes = _Classes(gamma)
    moved = frozenset(i for i in classes.parent if classes.find(i) != i)
    ren = classes.rename() if moved else None
    return classes, moved, ren, frozenset(_rkey(f, moved, ren) for f in gamma)


def _free(gamma, delta) -> frozenset:
    out = frozenset()
    for f in itertools.chain(gamma, delta):
        out |= dim_set(f)
    return out


def _fresh(gamma, delta) -> int:
    used = _free(gamma, delta)
    j = 0
    while j in used:
        j += 1
    return j


def _fresh_supply(gamma, delta) -> int:
    return 1 + max((max(all_indices(f), default=0) for f in itertools.chain(gamma, delta)), default=0)


@functools.lru_cache(maxsize=1 << 15)
def _sorted(fs):
    return tuple(sorted(fs, key=_text))


@functools.lru_cache(maxsize=1 << 16)
def _of(fs, kinds):
    """The members of ``fs`` of the given classes, in printed order."""
    return tuple(f for f in _sorted(fs) if isinstance(f, kinds))


def _inst(body, k, j, gamma, delta):
    # binders only need to avoid the images of the body's own free indices
    return _instance(body, k, j)


@functools.lru_cache(maxsize=1 << 16)
def _instance(body, k, j):
    return instantiate(body, k, j, fresh_from=j + 1)


# ---------------------------------------------------------------------------
# search


class _Search:
    def __init__(self):
        self.failed = {}  # sequent -> deepest depth known to fail
        self.nodes = 0

    def invertible(self, gamma, delta):
        """Apply invertible rules; return (list of open sequents, node builder)."""
        gamma, delta = frozenset(gamma), frozenset(delta)
        why = _closed(gamma, delta)
        if why is not None:
            return [], lambda subs: ProofNode(why, gamma, delta)
        known = None
        for f in _of(gamma, (Or, Cyl)):
            if known is None:
                known = {alpha_key(g) for g in gamma}
            if self._redundant(f, gamma, delta, known):
                return self._one("weaken-known", gamma, delta, gamma - {f}, delta)
        for f in _of(gamma, (Top, And, Or, Cyl, Impl)):
            if isinstance(f, Top):
                return self._one("top-left", gamma, delta, gamma - {f}, delta)
            if isinstance(f, And):
                return self._one("and-left", gamma, delta, (gamma - {f}) | {f.left, f.right}, delta)
            if isinstance(f, Or):
                rest = gamma - {f}
                return self._many("or-left", gamma, delta, [(rest | {f.left}, delta), (rest | {f.right}, delta)])
            if isinstance(f, Cyl):
                lam = _fresh(gamma, delta)
                inst = _inst(f.body, f.index, lam, gamma, delta)
                return self._one("exists-left", gamma, delta, (gamma - {f}) | {inst}, delta)
            if isinstance(f, Impl):
                a = f.left
                if isinstance(a, Bot):
                    return self._one("impl-left-vacuous", gamma, delta, gamma - {f}, delta)
                if isinstance(a, Top) or _closed(gamma - {f}, frozenset([a])):
                    return self._one("impl-left-known", gamma, delta, (gamma - {f}) | {f.right}, delta)
        for f in _of(delta, (Bot, Or, And, Impl, UCyl)):
            if isinstance(f, Bot):
                return self._one("bot-right", gamma, delta, gamma, delta - {f})
            if isinstance(f, Or):
                return self._one("or-right", gamma, delta, gamma, (delta - {f}) | {f.left, f.right})
            if isinstance(f, And):
                rest = delta - {f}
                return self._many("and-right", gamma, delta, [(gamma, rest | {f.left}), (gamma, rest | {f.right})])
            if len(delta) == 1 and isinstance(f, Impl):
                return self._one("impl-right", gamma, delta, gamma | {f.left}, frozenset([f.right]))
            if len(delta) == 1 and isinstance(f, UCyl):
                lam = _fresh(gamma, delta)
                inst = _inst(f.body, f.index, lam, gamma, delta)
                return self._one("forall-right", gamma, delta, gamma, frozenset([inst]))
        return None

    @staticmethod
    def _redundant(f, gamma, delta, known) -> bool:
        # a disjunction with a disjunct on the left, or an existential with an
        # instance on the left, follows from the rest of gamma
        if isinstance(f, Or):
            return alpha_key(f.left) in known or alpha_key(f.right) in known
        for t in sorted(_free(gamma, delta)):
            if alpha_key(_inst(f.body, f.index, t, gamma, delta)) in known:
                return True
        return False

    def _one(self, rule, gamma, delta, g2, d2):
        return self._many(rule, gamma, delta, [(g2, d2)])

    def _many(self, rule, gamma, delta, premises):
        subs = []
        builders = []
        for g2, d2 in premises:
            step = self.invertible(g2, d2)
            if step is None:
                subs.append((frozenset(g2), frozenset(d2)))
                builders.append(None)
            else:
                opened, build = step
                builders.append((len(opened), build))
                subs.extend(opened)

        def build(proofs):
            out = []
            pos = 0
            for b in builders:
                if b is None:
                    out.append(proofs[pos])
                    pos += 1
                else:
                    n, inner = b
                    out.append(inner(proofs[pos:pos + n]))
                    pos += n
            return ProofNode(rule, gamma, delta, tuple(out))

        return subs, build

    def prove(self, gamma, delta, depth):
        gamma, delta = frozenset(gamma), frozenset(delta)
        step = self.invertible(gamma, delta)
        if step is None:
            return self.choose(gamma, delta, depth)
        opened, build = step
        proofs = []
        for g2, d2 in opened:
            p = self.choose(g2, d2, depth)
            if p is None:
                return None
            proofs.append(p)
        return build(proofs)

    def choose(self, gamma, delta, depth):
        key = (gamma, delta)
        if self.failed.get(key, -1) >= depth:
            return None
        self.nodes += 1
        if depth > 0:
            for rule, premises in self.options(gamma, delta):
                proofs = []
                for g2, d2 in premises:
                    p = self.prove(g2, d2, depth - 1)
                    if p is None:
                        break
                    proofs.append(p)
                else:
                    return ProofNode(rule, gamma, delta, tuple(proofs))
        self.failed[key] = max(depth, self.failed.get(key, -1))
        return None

    def options(self, gamma, delta):
        terms = sorted(_free(gamma, delta)) or [0]
        single = len(delta) == 1
        for f in _of(delta, (Impl, UCyl)):
            if isinstance(f, Impl) and not single:
                yield "impl-right", [(gamma | {f.left}, frozenset([f.right]))]
            elif isinstance(f, UCyl) and not single:
                lam = _fresh(gamma, delta)
                yield "forall-right", [(gamma, frozenset([_inst(f.body, f.index, lam, gamma, delta)]))]
        for f in _of(gamma, Impl):
            if isinstance(f, Impl):
                if f.left in delta:
                    continue
                yield "impl-left", [(gamma, delta | {f.left}), ((gamma - {f}) | {f.right}, delta)]
        for f in _of(delta, Cyl):
            if isinstance(f, Cyl):
                for t in terms:
                    inst = _inst(f.body, f.index, t, gamma, delta)
                    if inst not in delta:
                        yield "exists-right", [(gamma, delta | {inst})]
        for f in _of(gamma, UCyl):
            if isinstance(f, UCyl):
                for t in terms:
                    inst = _inst(f.body, f.index, t, gamma, delta)
                    if inst not in gamma:
                        yield "forall-left", [(gamma | {inst}, delta)]


def prove(gamma, delta, depth: int):
    """Iterative deepening; returns ``(proof or None, depth at which it was found)``."""
    gamma = frozenset(_norm_all(gamma))
    delta = frozenset(_norm_all(delta))
    search = _Search()
    for d in range(depth + 1):
        p = search.prove(gamma, delta, d)
        if p is not None:
            return p, d
    return None, depth


# ---------------------------------------------------------------------------
# countermodels


def _signature_of(fs) -> dict:
    arity = {}
    for f in fs:
        _collect_atoms(f, arity)
    return arity


def _collect_atoms(f, out):
    if isinstance(f, Atom):
        out[f.name] = len(f.support)
    elif isinstance(f, (And, Or, Impl)):
        _collect_atoms(f.left, out)
        _collect_atoms(f.right, out)
    elif isinstance(f, (Cyl, UCyl, Subst)):
        _collect_atoms(f.body, out)


def compact(fs):
    """Rename all coordinates of normal-form formulas onto ``0..n-1``."""
    used = sorted(frozenset().union(*[all_indices(f) for f in fs]) if fs else ())
    mapping = {i: c for c, i in enumerate(used)}
    return [rename_indices(f, mapping) for f in fs], mapping


@dataclass
class ModelCache:
    """Finite models remembered across queries (frame, valuation)."""

    entries: list = field(default_factory=list)
    limit: int = 64
    _by_dim: dict = field(default_factory=dict)

    def add(self, cm: Countermodel):
        S = cm.system
        order = [(a, b) for a in S.worlds for b in S.worlds if S.leq_worlds(a, b)]
        doms = [[S.elements[c] for c in sorted(d)] for d in S.domains]
        entry = (S.worlds, tuple(order), tuple(map(tuple, doms)), cm.valuation.to_json())
        if entry not in self.entries:
            self.entries.append(entry)
            if len(self.entries) > self.limit:
                self.entries.pop(0)
            self._by_dim.clear()

    def models(self, dim: int):
        if dim not in self._by_dim:
            out = []
            for worlds, order, doms, rels in self.entries:
                S = KripkeSystem(worlds, order, doms, dim)
                out.append(Model(S, Valuation(S, rels)))
            self._by_dim[dim] = out
        return self._by_dim[dim]


def _falsify(model: Model, gamma, delta):
    S = model.system
    good = S.valid.copy()
    for f in gamma:
        good &= model.eval(f).values
        if not good.any():
            return None
    for f in delta:
        good &= ~model.eval(f).values
        if not good.any():
            return None
    k, a = map(int, next(zip(*good.nonzero())))
    return S.worlds[k], S.decode(a)


def _atoms_ok(model: Model, arity: dict) -> bool:
    rels = model.valuation.relations
    return all(name in rels and model.valuation._arity[name] in (None, n) for name, n in arity.items())


def find_countermodel(gamma, delta, *, max_worlds: int = 3, max_elems: int = 2, max_models: int = 3000,
                      cache: ModelCache | None = None) -> Countermodel | None:
    """Search small frames for a world and assignment refuting ``gamma |- delta``."""
    gamma = _norm_all(gamma)
    delta = _norm_all(delta)
    (cg, mapping) = compact(gamma + delta)
    g, d = cg[: len(gamma)], cg[len(gamma):]
    dim = len(mapping)
    arity = _signature_of(g + d)
    renaming = tuple(sorted(mapping.items()))
    if dim == 0 and not any(arity.values()):
        max_elems = 1  # nothing can see the domains
    if cache is not None:
        for model in cache.models(dim):
            if not _atoms_ok(model, arity):
                continue
            hit = _falsify(model, g, d)
            if hit is not None:
                return Countermodel(model.system, model.valuation, hit[0], hit[1], renaming)
    tried = 0
    for S in enumerate_systems(max_worlds, max_elems, dim):
        for val in enumerate_valuations(S, arity):
            tried += 1
            if tried > max_models:
                return None
            model = Model(S, val)
            hit = _falsify(model, g, d)
            if hit is not None:
                cm = Countermodel(S, val, hit[0], hit[1], renaming)
                if cache is not None:
                    cache.add(cm)
                return cm
    return None


# ---------------------------------------------------------------------------
# public relations


def derives(gamma: Iterable[Formula], delta: Iterable[Formula], depth: int = DEFAULT_DEPTH, *,
            countermodels: bool = True, cache: ModelCache | None = None, **search) -> ProofResult:
    """Tri-state check of ``Gamma -> Delta``.

    ``proved`` carries a proof tree, ``refuted_by_countermodel`` a finite
    model, and ``depth_exhausted`` means neither was found.
    """
    gamma, delta = list(gamma), list(delta)
    if countermodels and cache is not None and cache.entries:
        cm = find_countermodel(gamma, delta, max_models=0, cache=cache)
        if cm is not None:
            return ProofResult(REFUTED, cm, 0)
    proof, used = prove(gamma, delta, depth)
    if proof is not None:
        return ProofResult(PROVED, proof, used)
    if countermodels:
        cm = find_countermodel(gamma, delta, cache=cache, **search)
        if cm is not None:
            return ProofResult(REFUTED, cm, depth)
    return ProofResult(EXHAUSTED, None, depth)


@dataclass(frozen=True)
class Scope:
    """The generators (atoms) and, optionally, the coordinates a theory may use."""

    atoms: frozenset
    dims: frozenset | None = None

    def __init__(self, atoms=(), dims=None):
        object.__setattr__(self, "atoms", frozenset(atoms))
        object.__setattr__(self, "dims", None if dims is None else frozenset(dims))

    def contains(self, f: Formula) -> bool:
        if not atoms_of(f) <= self.atoms:
            return False
        return self.dims is None or dim_set(f) <= self.dims

    def __and__(self, other: "Scope") -> "Scope":
        if self.dims is None:
            dims = other.dims
        elif other.dims is None:
            dims = self.dims
        else:
            dims = self.dims & other.dims
        return Scope(self.atoms & other.atoms, dims)

    def to_json(self):
        out = {"atoms": sorted(self.atoms)}
        if self.dims is not None:
            out["dims"] = sorted(self.dims)
        return out


@dataclass(frozen=True)
class TheoryPair:
    gamma: frozenset
    delta: frozenset
    scope: Scope | None = None

    def __init__(self, gamma=(), delta=(), scope=None):
        object.__setattr__(self, "gamma", frozenset(gamma))
        object.__setattr__(self, "delta", frozenset(delta))
        object.__setattr__(self, "scope", scope)
        if scope is not None:
            for f in self.gamma | self.delta:
                if not scope.contains(f):
                    raise ScopeError(f"{_text(f)} lies outside the theory's scope")


def is_consistent(t: TheoryPair, depth: int = DEFAULT_DEPTH, **kw) -> ProofResult:
    """The derivation ``Gamma -> Delta``: consistent exactly when it is refuted."""
    return derives(t.gamma, t.delta, depth, **kw)


def is_complete(t: TheoryPair, fragment: Iterable[Formula], depth: int = DEFAULT_DEPTH, **kw) -> bool:
    """Consistent (certified by a countermodel) and covering the enumerated fragment."""
    keys = {alpha_key(f) for f in _norm_all(t.gamma | t.delta)}
    if any(alpha_key(f) not in keys for f in _norm_all(fragment)):
        return False
    return is_consistent(t, depth, **kw).refuted


def witness_indices(gamma) -> frozenset:
    return frozenset().union(*[all_indices(f) for f in gamma]) if gamma else frozenset()


def is_saturated(gamma: Iterable[Formula]) -> bool:
    """Every existential has an instance and every disjunction a disjunct in ``gamma``."""
    gamma = _norm_all(gamma)
    keys = {alpha_key(f) for f in gamma}
    candidates = sorted(witness_indices(gamma))
    for f in gamma:
        if isinstance(f, Cyl):
            if not any(alpha_key(instantiate(f.body, f.index, j, fresh_from=1 + max(candidates + [j])))
                       in keys for j in candidates):
                return False
        elif isinstance(f, Or):
            if alpha_key(f.left) not in keys and alpha_key(f.right) not in keys:
                return False
    return True


def separates(a: Formula, gamma, theta, lam, *, common: Scope | None = None, depth: int = DEFAULT_DEPTH,
              **kw) -> ProofResult:
    """``a`` separates ``Gamma`` from ``(Theta, Lambda)``: ``Gamma -> a`` and ``Theta + a -> Lambda``."""
    if common is not None and not common.contains(a):
        raise ScopeError(f"{_text(a)} is outside the common scope")
    first = derives(list(gamma), [a], depth, **kw)
    if not first.proved:
        return first
    second = derives(list(theta) + [a], list(lam), depth, **kw)
    if not second.proved:
        return second
    return ProofResult(PROVED, ProofNode("separation", frozenset(gamma), frozenset([a]),
                                         (first.witness, second.witness)),
                       max(first.depth_used, second.depth_used))


def find_separator(gamma, theta, lam, fragment: Iterable[Formula], depth: int = DEFAULT_DEPTH, *,
                   common: Scope | None = None, cache: ModelCache | None = None):
    """First enumerated separator, or ``None``; candidates outside ``common`` are skipped."""
    gamma, theta, lam = list(gamma), list(theta), list(lam)
    for a in fragment:
        if common is not None and not common.contains(a):
            continue
        if cache is not None and cache.entries:
            if find_countermodel(gamma, [a], max_models=0, cache=cache) is not None:
                continue
            if find_countermodel(theta + [a], lam, max_models=0, cache=cache) is not None:
                continue
        r = separates(a, gamma, theta, lam, depth=depth, countermodels=False)
        if r.proved:
            return a, r
    return None


def is_inseparable(gamma, theta, lam, fragment: Iterable[Formula], depth: int = DEFAULT_DEPTH, *,
                   common: Scope | None = None, cache: ModelCache | None = None) -> bool:
    """No enumerated candidate separates: an under-approximation of inseparability."""
    return find_separator(gamma, theta, lam, fragment, depth, common=common, cache=cache) is None
