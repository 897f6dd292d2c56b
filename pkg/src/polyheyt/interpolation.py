"""Interpolant search by enumeration of the common scope.

Candidates are the formulas over the shared atoms, in the order of
:class:`~polyheyt.fragments.Enumerator`, whose free coordinates are shared
by both sides.  A candidate survives when it sits between the premise and
the conclusion on every model in a pool of small finite models (random ones
plus every countermodel met so far); survivors are then certified by the
prover in both directions.  The first certified candidate is returned, so
results are minimal in enumeration order and reproducible.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import PreconditionError
from .fragments import Enumerator
from .kripke import Model, random_system, random_valuation
from .parse import print_formula
from .prover import DEFAULT_DEPTH, Scope, derives, find_countermodel
from .syntax import (
    Atom, Formula, SemigroupKind, Signature, Subst, Transformation, all_indices, atoms_of, dim_set,
    normalize_subst, size,
)


def common_scope(phi: Formula, psi: Formula) -> Scope:
    return Scope(atoms_of(phi) & atoms_of(psi), dim_set(phi) & dim_set(psi))


@dataclass
class VerifyReport:
    ok: bool
    reason: str  # "ok", "scope" or "proof"
    atoms_outside: list = field(default_factory=list)
    dims_outside: list = field(default_factory=list)
    left: str | None = None
    right: str | None = None

    def __bool__(self):
        return self.ok

    def to_json(self):
        out = {"ok": self.ok, "reason": self.reason}
        if self.reason == "scope":
            out["atoms_outside"] = self.atoms_outside
            out["dims_outside"] = self.dims_outside
        else:
            out["premise_to_interpolant"] = self.left
            out["interpolant_to_conclusion"] = self.right
        return out


def verify_interpolant(phi: Formula, a: Formula, psi: Formula, depth: int = DEFAULT_DEPTH) -> VerifyReport:
    """Scope conditions first (reported as ``"scope"``), then both derivations."""
    sc = common_scope(phi, psi)
    atoms_out = sorted(atoms_of(a) - sc.atoms)
    dims_out = sorted(dim_set(a) - sc.dims)
    if atoms_out or dims_out:
        return VerifyReport(False, "scope", atoms_out, dims_out)
    left = derives([phi], [a], depth, countermodels=False)
    right = derives([a], [psi], depth, countermodels=False)
    ok = left.proved and right.proved
    return VerifyReport(ok, "ok" if ok else "proof", left=left.status, right=right.status)


@dataclass
class InterpolationResult:
    phi: Formula
    psi: Formula
    interpolant: Formula | None
    bound: int
    depth: int
    enumerated: int = 0
    pruned: int = 0
    prover_checks: int = 0
    models: int = 0
    shift_tried: bool = False
    shift_used: bool = False
    certificates: dict = field(default_factory=dict)

    @property
    def found(self) -> bool:
        return self.interpolant is not None

    def stats(self):
        return {"enumerated": self.enumerated, "pruned_by_models": self.pruned,
                "prover_checks": self.prover_checks, "model_pool": self.models,
                "shift_tried": self.shift_tried, "shift_used": self.shift_used}

    def to_json(self):
        if self.found:
            return {"interpolant": print_formula(self.interpolant), "size": size(self.interpolant),
                    "certificates": self.certificates, "stats": self.stats()}
        return {"failure": "fragment exhausted", "bound": self.bound, "depth": self.depth,
                "stats": self.stats()}


class _Pool:
    """Finite models over a fixed number of coordinates, used to discard
    candidates that cannot be interpolants."""

    MEMO_CAP = 20000

    def __init__(self, phi, psi, dim, arities, n_random, rng):
        self.dim = dim
        self.arities = arities
        self.phi, self.psi = phi, psi
        self.entries = []
        for _ in range(n_random):
            S = random_system(rng, 3, 2, dim)
            self.add(Model(S, random_valuation(S, rng, arities)))

    def add(self, model: Model):
        P = model.eval(self.phi)
        Q = model.eval(self.psi)
        self.entries.append((model, P, Q))

    def add_countermodel(self, cm):
        # atom relations do not mention coordinates, so the frame works at any width
        S = cm.system.with_dim(self.dim)
        rels = {name: {w: rel[k] for k, w in enumerate(S.worlds)}
                for name, rel in cm.valuation.relations.items()}
        for name, arity in self.arities.items():
            if name not in rels:
                rels[name] = {}
        self.add(Model(S, rels))

    def admits(self, a: Formula) -> bool:
        for model, P, Q in self.entries:
            if len(model._memo) > self.MEMO_CAP:
                model._memo.clear()
            A = model.eval(a)
            if not (P <= A and A <= Q):
                return False
        return True


def _shifted(f: Formula, limit: int):
    """Shift-based variants of ``f``: the shift by one and its left inverse."""
    for tau in (Transformation.shift(1), Transformation(-1)):
        g = normalize_subst(Subst(tau, f), fresh_from=limit)
        if max(all_indices(g), default=0) < limit:
            yield g


def interpolate(phi: Formula, psi: Formula, depth: int = DEFAULT_DEPTH, bound: int = 7, *,
                signature: Signature | None = None, binders: int = 2, models: int = 24, seed: int = 0,
                countermodel_budget: int = 200, max_candidates: int | None = None) -> InterpolationResult:
    """Find ``a`` in the common scope with ``phi -> a`` and ``a -> psi``.

    Raises :class:`PreconditionError` if ``phi -> psi`` is not proved at
    ``depth``.  The fragment uses the shared coordinates plus one extra
    coordinate for binding, then again with up to ``binders`` extra ones.
    When the fragment up to ``bound`` is exhausted the result has no
    interpolant; that is a statement about the fragment only.
    """
    pre = derives([phi], [psi], depth)
    if not pre.proved:
        raise PreconditionError(f"premise does not derive the conclusion at depth {depth} ({pre.status})",
                                pre.status)
    sc = common_scope(phi, psi)
    shared = sorted(sc.dims)
    extra = []
    j = 0
    while len(extra) < binders:
        if j not in sc.dims:
            extra.append(j)
        j += 1
    indices = sorted(set(shared) | set(extra))  # the widest index set
    nodes = _atom_nodes(phi) | _atom_nodes(psi)
    atoms = sorted((x for x in nodes if x.name in sc.atoms), key=lambda x: (x.name, x.support))
    top = 1 + max([*all_indices(phi), *all_indices(psi), *indices,
                   *(i for x in nodes for i in x.support)], default=0)
    arities = {x.name: len(x.support) for x in nodes}
    rng = np.random.default_rng(seed)
    pool = _Pool(phi, psi, top, arities, models, rng)
    res = InterpolationResult(phi, psi, None, bound, depth)

    def keep(f):
        return dim_set(f) <= sc.dims

    def attempt(a) -> bool:
        res.enumerated += 1
        if not pool.admits(a):
            res.pruned += 1
            return False
        res.prover_checks += 1
        left = derives([phi], [a], depth, countermodels=False)
        if not left.proved:
            _learn(pool, [phi], [a], countermodel_budget)
            return False
        right = derives([a], [psi], depth, countermodels=False)
        if not right.proved:
            _learn(pool, [a], [psi], countermodel_budget)
            return False
        res.interpolant = a
        res.certificates = {"premise_to_interpolant": {"status": left.status, "depth_used": left.depth_used},
                            "interpolant_to_conclusion": {"status": right.status, "depth_used": right.depth_used}}
        return True

    def budget_left():
        return max_candidates is None or res.enumerated < max_candidates

    tried = set()
    for width in range(1, binders + 1):
        enum = Enumerator(atoms, sorted(set(shared) | set(extra[:width])))
        for a in enum.upto(bound, keep):
            if not budget_left() or res.found:
                break
            if a not in tried:
                tried.add(a)
                attempt(a)
        if res.found or not budget_left():
            break
    kind = signature.kind if signature is not None else SemigroupKind.FINITE
    if not res.found and kind is SemigroupKind.STRONGLY_RICH:
        res.shift_tried = True
        seen = set()
        for b in enum.upto(bound - 1):
            if not budget_left():
                break
            for a in _shifted(b, top):
                if a in seen or not keep(a):
                    continue
                seen.add(a)
                if attempt(a):
                    res.shift_used = True
                    break
            if res.found:
                break
    res.models = len(pool.entries)
    return res


def _atom_nodes(f: Formula) -> set:
    if isinstance(f, Atom):
        return {f}
    out = set()
    for child in getattr(f, "left", None), getattr(f, "right", None), getattr(f, "body", None):
        if child is not None:
            out |= _atom_nodes(child)
    return out


def _learn(pool: _Pool, gamma, delta, budget):
    if budget <= 0:
        return
    cm = find_countermodel(gamma, delta, max_models=budget)
    if cm is not None:
        pool.add_countermodel(cm)
