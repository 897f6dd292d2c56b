"""Henkin saturation of inseparable triples and the canonical world tree.

A triple ``(Gamma, Theta, Lambda)`` lives over two vocabularies: ``Gamma``
over ``X1``, ``Theta`` and ``Lambda`` over ``X2``.  Saturation walks three
enumerations (formulas over the common vocabulary, over ``X1`` only and over
``X2`` only), deciding one formula per step and adding Henkin witnesses for
existentials.  Every decision is backed by a bounded certificate: no
separator in a small common fragment and no proof of ``Gamma + Theta ->
Lambda``.  The outcome seeds worlds of a canonical Kripke system.
"""

from __future__ import annotations

import dataclasses

import itertools
import json
from collections import deque
from dataclasses import dataclass, field
from typing import Iterable, Mapping

from .errors import DilationRequired, PolyheytError, ScopeError, ValidationError
from .fragments import Enumerator
from .kripke import KripkeSystem, Model, Valuation, diagonal_quotient, psi_eval
from .parse import print_formula
from .prover import ModelCache, Scope, TheoryPair, derives, find_separator
from .syntax import (
    And, Atom, Cyl, Diag, Formula, Impl, Or, Signature, Subst, UCyl, alpha_key, atoms_of, dim_set,
    instantiate, make_literal, normalize_subst, size,
)

DEFAULT_BLOCK = 4


class SeparationRefused(PolyheytError):
    """The initial triple is separable; ``separator`` is the witness (``None`` if the union is inconsistent)."""

    def __init__(self, message, separator=None, certificate=None):
        super().__init__(message)
        self.separator = separator
        self.certificate = certificate or {}


@dataclass
class SaturationConfig:
    depth: int = 2
    sep_bound: int = 1
    block: int = DEFAULT_BLOCK
    max_dilations: int = 8
    fragment_bound: int = 5


@dataclass(frozen=True)
class DilationStage:
    level: int
    added_indices: tuple
    signature: Signature

    def to_json(self):
        return {"level": self.level, "added_indices": list(self.added_indices),
                "n_spare": self.signature.n_spare}


@dataclass
class StepRecord:
    step: int
    case: str
    element: Formula | None
    branch: str
    witnesses: list = field(default_factory=list)  # (k, j, formula)
    certificate: dict = field(default_factory=dict)
    before: tuple = (0, 0, 0)
    after: tuple = (0, 0, 0)
    warning: str | None = None

    def to_json(self):
        return {
            "step": self.step,
            "case": self.case,
            "element": None if self.element is None else print_formula(self.element),
            "branch": self.branch,
            "witness": [print_formula(w) for _, _, w in self.witnesses],
            "fresh": [j for _, j, _ in self.witnesses],
            "certificate": self.certificate,
            "sizes": list(self.after),
            "warning": self.warning,
        }


def subformulas(f: Formula):
    yield f
    if isinstance(f, (And, Or, Impl)):
        yield from subformulas(f.left)
        yield from subformulas(f.right)
    elif isinstance(f, (Cyl, UCyl)):
        yield from subformulas(f.body)


def _closure(fs):
    seen = {}
    for f in fs:
        for g in subformulas(f):
            seen.setdefault(alpha_key(g), g)
    return sorted(seen.values(), key=lambda g: (size(g), print_formula(g)))


class _Stream:
    """Pending obligations first, then agenda formulas, then the fragment."""

    def __init__(self, agenda, enum: Enumerator, keep, bound: int):
        self.pending = deque()
        self.agenda = deque(agenda)
        self._gen = enum.upto(bound, keep)
        self.drawn = 0

    def push(self, f):
        self.pending.append(f)

    def draw(self):
        self.drawn += 1
        if self.pending:
            return self.pending.popleft()
        if self.agenda:
            return self.agenda.popleft()
        return next(self._gen, None)


class _Theory:
    """An ordered, append-only set of normal formulas."""

    def __init__(self, fs=()):
        self.items = []
        self.keys = set()
        for f in fs:
            self.add(f)

    def add(self, f):
        k = alpha_key(f)
        if k not in self.keys:
            self.keys.add(k)
            self.items.append(f)

    def __contains__(self, f):
        return alpha_key(f) in self.keys

    def __len__(self):
        return len(self.items)


class SaturationState:
    """``Gamma_i``, ``Theta_i``, ``Lambda_i`` with their streams and run log."""

    def __init__(self, gamma, theta, lam, *, x1, x2, signature: Signature, config: SaturationConfig | None = None,
                 agenda: Iterable[Formula] | None = None):
        self.config = config or SaturationConfig()
        self.signature = signature
        self.x1, self.x2 = Scope(x1), Scope(x2)
        self.common = self.x1 & self.x2
        norm = self.norm
        gamma, theta, lam = [norm(f) for f in gamma], [norm(f) for f in theta], [norm(f) for f in lam]
        for f in gamma:
            self._in_scope(f, self.x1, "Gamma")
        for f in theta + lam:
            self._in_scope(f, self.x2, "Theta/Lambda")
        self.gamma, self.theta, self.lam = _Theory(gamma), _Theory(theta), _Theory(lam)
        self.sigma = set()
        self.step = 0
        self.stages = [DilationStage(0, (), signature)]
        self.log: list[StepRecord] = []
        self.cache = ModelCache()
        self.witnessed = {}
        self.decided = {"a": set(), "b": set(), "c": set()}
        self.initial = (tuple(gamma), tuple(theta), tuple(lam))
        agenda = _closure(gamma + theta + lam) if agenda is None else _closure(norm(f) for f in agenda)
        base = range(signature.n_dim)
        common_atoms = self._atoms(self.common.atoms)
        x1_atoms, x2_atoms = self._atoms(self.x1.atoms), self._atoms(self.x2.atoms)
        bound = self.config.fragment_bound
        self.streams = {
            "a": _Stream([f for f in agenda if self.kind(f) == "a"], Enumerator(common_atoms, base), None, bound),
            "b": _Stream([f for f in agenda if self.kind(f) == "b"], Enumerator(x1_atoms, base),
                         lambda f: self.kind(f) == "b", bound),
            "c": _Stream([f for f in agenda if self.kind(f) == "c"], Enumerator(x2_atoms, base),
                         lambda f: self.kind(f) == "c", bound),
        }
        self._sep_enums = {}

    # -- helpers ----------------------------------------------------------
    def norm(self, f):
        return normalize_subst(f, fresh_from=self.signature.n_dim)

    def _atoms(self, names):
        return [self.signature.atom(n) for n in sorted(names)]

    @staticmethod
    def _in_scope(f, scope, where):
        if not scope.contains(f):
            raise ScopeError(f"{print_formula(f)} is not over the vocabulary of {where}")

    def kind(self, f) -> str | None:
        names = atoms_of(f)
        if names <= self.common.atoms:
            return "a"
        if names <= self.x1.atoms:
            return "b"
        if names <= self.x2.atoms:
            return "c"
        return None

    def sizes(self):
        return (len(self.gamma), len(self.theta), len(self.lam))

    def used_dims(self, extra=()):
        out = set()
        for f in [*self.gamma.items, *self.theta.items, *self.lam.items, *extra]:
            out |= dim_set(f)
        return out

    def fresh_index(self, extra=()) -> int:
        """Smallest spare index outside every dimension set in play."""
        used = self.used_dims(extra)
        for j in self.signature.spare:
            if j not in used:
                return j
        raise DilationRequired(f"no fresh index below {self.signature.limit}")

    def dilate(self):
        old = self.signature
        if len(self.stages) > self.config.max_dilations:
            raise DilationRequired("dilation limit reached")
        self.signature = old.dilate(self.config.block)
        self.stages.append(DilationStage(len(self.stages), tuple(range(old.limit, self.signature.limit)),
                                         self.signature))

    def witness(self, f: Cyl, extra=()):
        j = self.fresh_index([f, *extra])
        return f.index, j, instantiate(f.body, f.index, j, fresh_from=self.signature.limit)

    def witness_chain(self, f):
        """Witnesses for ``f`` and, in turn, for any existential witness."""
        out = []
        todo = [f]
        while todo:
            g = todo.pop(0)
            if not isinstance(g, Cyl):
                continue
            k, j, w = self.witness(g, [x for _, _, x in out])
            out.append((k, j, w))
            todo.append(w)
        return out

    def sep_fragment(self, *sets):
        used = set()
        for s in sets:
            for f in s:
                used |= dim_set(f)
        idx = tuple(sorted(i for i in used if i < self.signature.n_dim)) or (0,)
        if idx not in self._sep_enums:
            self._sep_enums[idx] = list(Enumerator(self._atoms(self.common.atoms), idx).upto(self.config.sep_bound))
        return self._sep_enums[idx]

    def certify(self, gamma, theta, lam) -> dict:
        """Bounded inseparability certificate for a candidate triple."""
        depth = self.config.depth
        union = derives(list(gamma) + list(theta), list(lam), depth, countermodels=False)
        cert = {"depth": depth, "union": union.status, "separator": None, "candidates": 0}
        if union.proved:
            cert["ok"] = False
            return cert
        frag = self.sep_fragment(gamma, theta, lam)
        cert["candidates"] = len(frag)
        hit = find_separator(gamma, theta, lam, frag, depth, common=self.common, cache=self.cache)
        if hit is not None:
            cert["separator"] = print_formula(hit[0])
        cert["ok"] = hit is None
        return cert

    def obligations(self, f):
        """Queue the parts of a newly accepted formula for decision."""
        parts = []
        if isinstance(f, (And, Or)):
            parts = [f.left, f.right]
        elif isinstance(f, Cyl) and alpha_key(f) not in self.witnessed:
            parts = [f]
        for p in parts:
            kind = self.kind(p)
            if kind is not None:
                self.streams[kind].push(p)

    def needs_witness(self, f) -> bool:
        return isinstance(f, Cyl) and alpha_key(f) not in self.witnessed and (f in self.gamma or f in self.theta)

    def is_decided(self, case, f) -> bool:
        k = alpha_key(f)
        if k in self.decided[case]:
            return True
        if case == "a":
            return (f in self.gamma and f in self.theta) or f in self.lam
        if case == "b":
            return f in self.gamma or k in self.sigma
        return f in self.theta or f in self.lam

    def to_json(self):
        return {
            "gamma": [print_formula(f) for f in self.gamma.items],
            "theta": [print_formula(f) for f in self.theta.items],
            "lambda": [print_formula(f) for f in self.lam.items],
            "stages": [s.to_json() for s in self.stages],
        }


def _apply(state: SaturationState, targets, f, chain):
    for t in targets:
        t.add(f)
        for _, _, w in chain:
            t.add(w)
    if chain:
        state.witnessed[alpha_key(f)] = chain[0]
        for g, (k, j, w) in zip([f] + [w for _, _, w in chain], chain):
            state.witnessed[alpha_key(g)] = (k, j, w)
    state.obligations(f)
    for _, _, w in chain:
        state.obligations(w)


def saturation_step(state: SaturationState) -> StepRecord:
    """Run step ``i = state.step + 1``; the residue of ``i`` mod 3 picks the stream.

    Raises :class:`DilationRequired` (leaving the state untouched) when a
    witness needs a fresh index and none is left at the current level.
    """
    i = state.step + 1
    case = "abc"[(i - 1) % 3]
    stream = state.streams[case]
    f = None
    while True:
        g = stream.draw()
        if g is None:
            break
        g = state.norm(g)
        if state.needs_witness(g) or not state.is_decided(case, g):
            f = g
            break
    before = state.sizes()
    if f is None:
        state.step = i
        rec = StepRecord(i, case, None, "exhausted", before=before, after=before)
        state.log.append(rec)
        return rec

    G, T, L = state.gamma, state.theta, state.lam
    if state.needs_witness(f):
        chain = state.witness_chain(f)
        targets = [t for t in (G, T) if f in t]
        _apply(state, targets, f, chain)
        state.step = i
        rec = StepRecord(i, case, f, "witness", chain, {}, before, state.sizes())
        state.log.append(rec)
        return rec

    chain = state.witness_chain(f) if isinstance(f, Cyl) else []
    extra = [f] + [w for _, _, w in chain]
    warning = None
    if case == "a":
        cert = state.certify(G.items + extra, T.items + extra, L.items)
        if cert["ok"]:
            branch, targets = "former", [G, T]
        else:
            cert2 = state.certify(G.items, T.items, L.items + [f])
            cert = {"former": cert, "latter": cert2, "ok": cert2["ok"]}
            branch, targets = ("latter", [L]) if cert2["ok"] else ("stuck", [])
    elif case == "b":
        cert = state.certify(G.items + extra, T.items, L.items)
        branch, targets = ("former", [G]) if cert["ok"] else ("separated", [])
    else:
        cert = state.certify(G.items, T.items + extra, L.items)
        if cert["ok"]:
            branch, targets = "former", [T]
        else:
            cert2 = state.certify(G.items, T.items, L.items + [f])
            cert = {"former": cert, "latter": cert2, "ok": cert2["ok"]}
            branch, targets = ("latter", [L]) if cert2["ok"] else ("stuck", [])

    if branch == "former":
        _apply(state, targets, f, chain)
    else:
        chain = []
        if branch == "latter":
            L.add(f)
        elif branch == "separated":
            state.sigma.add(alpha_key(f))
        else:
            warning = "neither branch certified at this depth; element left undecided"
    state.decided[case].add(alpha_key(f))
    state.step = i
    rec = StepRecord(i, case, f, branch, chain, cert, before, state.sizes(), warning)
    state.log.append(rec)
    return rec


@dataclass
class SaturationResult:
    state: SaturationState

    @property
    def gamma(self):
        return list(self.state.gamma.items)

    @property
    def theta(self):
        return list(self.state.theta.items)

    @property
    def lam(self):
        return list(self.state.lam.items)

    @property
    def delta(self):
        """``Lambda' ∩ Sg(X1 ∩ X2)``."""
        return [f for f in self.lam if self.state.common.contains(f)]

    @property
    def log(self):
        return self.state.log

    @property
    def signature(self):
        return self.state.signature

    def checks(self) -> dict:
        return saturation_checks(self.state)

    def to_json(self):
        out = self.state.to_json()
        out["delta"] = [print_formula(f) for f in self.delta]
        out["checks"] = self.checks()
        return out


def saturate(gamma, theta, lam, *, x1, x2, signature: Signature, budget: int = 50,
             config: SaturationConfig | None = None, agenda=None, log=None) -> SaturationResult:
    """Extend an inseparable triple by ``budget`` saturation steps.

    ``log`` may be a writable text stream receiving one JSON line per step.
    Raises :class:`SeparationRefused` when the initial triple is separable
    at the configured depth.
    """
    state = SaturationState(gamma, theta, lam, x1=x1, x2=x2, signature=signature, config=config, agenda=agenda)
    g0, t0, l0 = state.initial
    cert = state.certify(list(g0), list(t0), list(l0))
    if not cert["ok"]:
        raise SeparationRefused("the initial triple is separable", cert["separator"], cert)
    for _ in range(budget):
        try:
            rec = saturation_step(state)
        except DilationRequired:
            state.dilate()
            rec = saturation_step(state)
        if log is not None:
            log.write(json.dumps(rec.to_json(), sort_keys=True) + "\n")
    return SaturationResult(state)


def saturation_checks(state: SaturationState) -> dict:
    """Invariants of a finished run, recomputed from the log."""
    G, T, L = state.gamma.items, state.theta.items, state.lam.items
    chain_ok = True
    consistent_ok = True
    witness_ok = True
    prev = (len(state.initial[0]), len(state.initial[1]), len(state.initial[2]))
    initial_keys = [set(map(alpha_key, s)) for s in state.initial]
    for n, s in enumerate((G, T, L)):
        if not initial_keys[n] <= {alpha_key(f) for f in s}:
            chain_ok = False
    for rec in state.log:
        if any(b < a for a, b in zip(prev, rec.after)) or rec.before != prev:
            chain_ok = False
        prev = rec.after
        if rec.branch in ("former", "latter") and not rec.certificate.get("ok", False):
            consistent_ok = False
        if rec.branch in ("former", "witness") and isinstance(rec.element, Cyl):
            if not rec.witnesses:
                witness_ok = False
                continue
            used = set()
            b = rec.before
            for f in G[: b[0]] + T[: b[1]] + L[: b[2]]:
                used |= dim_set(f)
            k, j, w = rec.witnesses[0]
            if j in used or j < state.stages[0].signature.n_dim:
                witness_ok = False
            if k != rec.element.index or alpha_key(w) != alpha_key(
                    instantiate(rec.element.body, k, j, fresh_from=state.signature.limit + 64)):
                witness_ok = False
            # a set that receives the element later gets its own witness in that step
            a = rec.after
            homes = [s for s in (G[: a[0]], T[: a[1]]) if any(alpha_key(x) == alpha_key(rec.element) for x in s)]
            if not all(any(alpha_key(x) == alpha_key(w) for x in s) for s in homes):
                witness_ok = False
    gkeys = state.gamma.keys
    processed = [r for r in state.log if r.element is not None]
    open_disj = []
    for r in processed:
        f = r.element
        if isinstance(f, Or) and f in state.gamma:
            if alpha_key(f.left) not in gkeys and alpha_key(f.right) not in gkeys:
                open_disj.append(print_formula(f))
    unwitnessed = [print_formula(f) for f in G if isinstance(f, Cyl) and alpha_key(f) not in state.witnessed]
    uncovered = [print_formula(r.element) for r in processed
                 if r.case in ("a", "c") and r.branch != "stuck"
                 and r.element not in state.theta and r.element not in state.lam]
    final = derives(G + T, L, state.config.depth, countermodels=False)
    return {
        "chain_inclusion": chain_ok,
        "consistency_certificates": consistent_ok and not final.proved,
        "witness_property": witness_ok,
        "henkin_complete_processed": not uncovered,
        "open_disjunctions": open_disj,
        "unwitnessed_existentials": unwitnessed,
        "steps": len(state.log),
        "stuck": sum(r.branch == "stuck" for r in state.log),
        "dilations": len(state.stages) - 1,
    }


# ---------------------------------------------------------------------------
# matched pairs and the world tree


@dataclass
class MatchedPair:
    """A world: the saturated ``Gamma'`` and the pair ``(Theta', Lambda')``."""

    name: str
    level: int
    gamma: tuple
    theta: tuple
    lam: tuple
    signature: Signature
    parent: str | None = None
    reason: Formula | None = None
    common: Scope | None = None
    rep: dict = field(default_factory=dict)
    checks: dict = field(default_factory=dict)

    def __post_init__(self):
        self._plain = {alpha_key(f) for f in self.positive}
        self._closed = None

    @property
    def first(self) -> TheoryPair:
        return TheoryPair(self.gamma, ())

    @property
    def second(self) -> TheoryPair:
        return TheoryPair(self.theta, self.lam)

    @property
    def positive(self):
        seen = {}
        for f in self.gamma + self.theta:
            seen.setdefault(alpha_key(f), f)
        return list(seen.values())

    @property
    def positive_keys(self):
        return self._plain

    def set_classes(self, rep: Mapping[int, int]):
        self.rep = {k: v for k, v in rep.items() if k != v}
        self._closed = {alpha_key(f, self.rep) for f in self.positive}

    def contains(self, f: Formula) -> bool:
        """Membership up to bound renaming and the world's identification of indices."""
        if self._closed is None:
            return alpha_key(f) in self._plain
        return alpha_key(f, self.rep) in self._closed

    def to_json(self):
        return {
            "name": self.name,
            "level": self.level,
            "parent": self.parent,
            "reason": None if self.reason is None else print_formula(self.reason),
            "gamma": [print_formula(f) for f in self.gamma],
            "theta": [print_formula(f) for f in self.theta],
            "lambda": [print_formula(f) for f in self.lam],
            "classes": {str(k): v for k, v in sorted(self.rep.items())},
        }


@dataclass
class WorldTree:
    worlds: list
    children: dict
    partial: bool = False
    failures: list = field(default_factory=list)

    @property
    def root(self) -> MatchedPair:
        return self.worlds[0]

    def world(self, name) -> MatchedPair:
        for w in self.worlds:
            if w.name == name:
                return w
        raise KeyError(name)

    def ancestors(self, name):
        out = []
        w = self.world(name)
        while w.parent is not None:
            w = self.world(w.parent)
            out.append(w.name)
        return out

    def leq(self, a, b) -> bool:
        """``a <= b``: ``b`` descends from ``a`` (which implies inclusion and level order)."""
        return a == b or a in self.ancestors(b)

    def order_consistent(self) -> bool:
        """Every related pair also satisfies inclusion of theories and of levels."""
        for a in self.worlds:
            for b in self.worlds:
                if self.leq(a.name, b.name):
                    if a.level > b.level or not a.positive_keys <= b.positive_keys:
                        return False
        return True

    def to_json(self):
        return {
            "worlds": [w.to_json() for w in self.worlds],
            "children": {k: list(v) for k, v in self.children.items()},
            "partial": self.partial,
            "failures": self.failures,
        }


def _pair_from(result: SaturationResult, name, level, parent=None, reason=None) -> MatchedPair:
    st = result.state
    w = MatchedPair(name, level, tuple(st.gamma.items), tuple(st.theta.items), tuple(st.lam.items),
                    st.signature, parent, reason, st.common)
    w.checks = result.checks()
    return w


def build_world_tree(root: SaturationResult, *, budget: int = 20, config: SaturationConfig | None = None,
                     max_level: int = 2, max_worlds: int = 16, relevant: Iterable[Formula] | None = None) -> WorldTree:
    """Successor worlds for refuted implications and universals, level by level.

    ``relevant`` restricts successors to refuted formulas among the given
    ones (by default the subformulas of the root's initial sets); pass an
    empty list for no restriction.  Successors use union-only certificates
    (``sep_bound=0``) unless ``config`` says otherwise: by cut the union
    check already rules out every separator the prover could verify.
    """
    st = root.state
    config = config or dataclasses.replace(st.config, sep_bound=0)
    x1, x2 = st.x1.atoms, st.x2.atoms
    agenda = _closure([*st.initial[0], *st.initial[1], *st.initial[2]])
    if relevant is None:
        relevant = agenda
    rel_keys = {alpha_key(st.norm(f)) for f in relevant} if relevant else None
    first = _pair_from(root, "w0", 0)
    tree = WorldTree([first], {"w0": []})
    queue = deque([first])
    while queue:
        w = queue.popleft()
        if w.level >= max_level:
            continue
        for f in w.lam:
            if not isinstance(f, (Impl, UCyl)):
                continue
            if rel_keys is not None and alpha_key(f) not in rel_keys:
                continue
            if len(tree.worlds) >= max_worlds:
                tree.partial = True
                break
            if isinstance(f, Impl) and w.contains(f.left) and f.right in w.lam:
                continue  # the world itself refutes f
            sig = w.signature.dilate(config.block)
            inherited = [d for d in w.lam if not atoms_of(d)]
            if isinstance(f, Impl):
                theta = list(w.theta) + [f.left]
                goal = f.right
            else:
                k = w.signature.limit
                theta = list(w.theta)
                goal = instantiate(f.body, f.index, k, fresh_from=sig.limit)
            extra = [f.left] if isinstance(f, Impl) else []
            name = f"w{len(tree.worlds)}"
            try:
                try:
                    res = saturate(w.gamma, theta, [goal] + inherited, x1=x1, x2=x2, signature=sig,
                                   budget=budget, config=config, agenda=agenda + extra + [goal])
                except SeparationRefused:
                    if not inherited:
                        raise
                    res = saturate(w.gamma, theta, [goal], x1=x1, x2=x2, signature=sig,
                                   budget=budget, config=config, agenda=agenda + extra + [goal])
            except SeparationRefused as exc:
                tree.failures.append({"parent": w.name, "formula": print_formula(f), "reason": str(exc),
                                      "separator": exc.separator})
                tree.partial = True
                continue
            child = _pair_from(res, name, w.level + 1, w.name, f)
            tree.worlds.append(child)
            tree.children[w.name].append(name)
            tree.children[name] = []
            queue.append(child)
    return tree


# ---------------------------------------------------------------------------
# the canonical frame


@dataclass
class CanonicalFrame:
    tree: WorldTree
    system: KripkeSystem
    valuation: Valuation
    dim: int
    quotient: object

    @property
    def model(self) -> Model:
        return Model(self.system, self.valuation)

    def identity(self, world=None) -> tuple:
        """``[Id]``: coordinate ``i`` sent to the class of ``i``."""
        w = self.tree.world(world or self.tree.root.name)
        return tuple(w.rep.get(i, i) for i in range(self.dim))

    def to_json(self):
        return {"system": self.system.to_json(), "valuation": self.valuation.to_json(),
                "dim": self.dim, "tree": self.tree.to_json()}


def _provable(theory, goal, depth, memo):
    key = alpha_key(goal)
    if key not in memo:
        memo[key] = derives(theory, [goal], depth, countermodels=False).proved
    return memo[key]


def canonical_frame(tree: WorldTree, *, dim: int | None = None, depth: int = 1,
                    extra_elements: int = 0) -> CanonicalFrame:
    """The Kripke system whose worlds are the tree's matched pairs.

    A world's domain is its coordinate indices (the base window, every index
    in its theories, and its parent's domain) modulo the identification
    ``k ~ l`` iff ``d_kl`` is derivable from the positive theory.  An atom
    holds at a tuple of classes when the corresponding literal is derivable.
    """
    worlds = tree.worlds
    n_dim = worlds[0].signature.n_dim
    if dim is None:
        dim = n_dim
    elems = {}
    for w in worlds:
        d = set(range(max(dim, n_dim) + extra_elements))
        for f in list(w.positive) + list(w.lam):
            d |= dim_set(f)
        if w.parent is not None:
            d |= elems[w.parent]
        elems[w.name] = d
    order = [(a.name, b.name) for a in worlds for b in worlds if tree.leq(a.name, b.name)]
    memos = {}
    for w in worlds:
        # positive theories grow along the tree, so provable facts are inherited
        parent = memos.get(w.parent, {})
        memos[w.name] = {k: v for k, v in parent.items() if v}
    theories = {}
    for w in worlds:
        pos = w.positive
        dom = sorted(elems[w.name])
        diags = []
        cls = {k: k for k in dom}

        def find(k):
            while cls[k] != k:
                k = cls[k]
            return k

        for x in range(len(dom)):
            for y in range(x + 1, len(dom)):
                d = Diag(dom[x], dom[y])
                if find(dom[x]) == find(dom[y]):
                    continue  # already identified through a chain of diagonals
                if w.contains(d) or _provable(pos, d, depth, memos[w.name]):
                    cls[find(dom[y])] = find(dom[x])
        for x in range(len(dom)):
            for y in range(x + 1, len(dom)):
                if find(dom[x]) == find(dom[y]):
                    diags.append(Diag(dom[x], dom[y]))
        theories[w.name] = list(pos) + diags
    S = KripkeSystem([w.name for w in worlds], order, [sorted(elems[w.name]) for w in worlds], dim)
    q = diagonal_quotient(S, theories)
    for w in worlds:
        w.set_classes(q.rep[w.name])
    QS = q.quotient
    atoms = sorted({a for w in worlds for f in list(w.positive) + list(w.lam) for a in _atom_nodes(f)},
                   key=lambda a: (a.name, a.support))
    rels = {}
    for a in atoms:
        per = rels.setdefault(a.name, {})
        for k, w in enumerate(worlds):
            dom = sorted(QS.elements[c] for c in QS.domains[k])
            hold = set()
            for args in itertools.product(dom, repeat=len(a.support)):
                lit = make_literal(a, args)
                if w.contains(lit) or _provable(w.positive, lit, depth, memos[w.name]):
                    hold.add(tuple(args))
            per[w.name] = hold
    # provability is monotone along the tree; close upward to absorb depth effects
    for name, per in rels.items():
        for k, w in enumerate(worlds):
            for b in QS.up[k]:
                per[QS.worlds[b]] |= per[w.name]
    val = Valuation(QS, rels)
    return CanonicalFrame(tree, QS, val, dim, q)


def _atom_nodes(f):
    if isinstance(f, Atom):
        yield f
    elif isinstance(f, Subst):
        yield from _atom_nodes(f.body)
    elif isinstance(f, (And, Or, Impl)):
        yield from _atom_nodes(f.left)
        yield from _atom_nodes(f.right)
    elif isinstance(f, (Cyl, UCyl)):
        yield from _atom_nodes(f.body)


@dataclass
class TruthReport:
    psi: dict
    semantic: dict
    ok: bool

    def to_json(self):
        return {"psi": self.psi, "semantic": self.semantic, "ok": self.ok}


def verify_root(frame: CanonicalFrame, gamma0, theta0, lam0) -> TruthReport:
    """``psi_eval`` and the frame evaluator at the root and ``[Id]``.

    Positive seeds must get 1 from both, refuted seeds 0 from both.
    """
    root = frame.tree.root
    model = frame.model
    x = frame.identity()
    psi, sem = {}, {}
    ok = True
    norm = lambda f: normalize_subst(f, fresh_from=root.signature.n_dim)
    for want, fs in ((1, list(gamma0) + list(theta0)), (0, list(lam0))):
        for f in fs:
            f = norm(f)
            text = print_formula(f)
            p = psi_eval(f, root, {})
            try:
                s = int(model.holds(f, root.name, x))
            except (ValidationError, PolyheytError) as exc:
                s = f"error: {exc}"
            psi[text], sem[text] = p, s
            ok = ok and p == want and s == want
    return TruthReport(psi, sem, ok)


def psi_invariance(world: MatchedPair, p: Formula, domain: Iterable[int], dim: int, limit: int = 512) -> bool:
    """``psi_eval`` agrees on assignments that are coordinatewise ``~``-equivalent."""
    domain = sorted(domain)
    coords = sorted(dim_set(p))
    rep = lambda v: world.rep.get(v, v)
    seen = {}
    count = 0
    for values in itertools.product(domain, repeat=len(coords)):
        x = dict(zip(coords, values))
        cls = tuple(rep(v) for v in values)
        val = psi_eval(p, world, x)
        if cls in seen and seen[cls] != val:
            return False
        seen.setdefault(cls, val)
        count += 1
        if count >= limit:
            break
    return True
