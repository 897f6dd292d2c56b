"""Neat reducts, dilations and the neat embedding of frame algebras.

A frame algebra is identified with its Kripke system: the carrier is every
monotone family over the system's assignment space.  For a window ``alpha``
inside the ambient coordinates ``range(beta)``:

* the neat reduct ``Nr_alpha`` of the ambient algebra is the set of
  families whose dimension set lies inside ``alpha``;
* the reduced system has the same worlds and domains and one coordinate per
  member of ``alpha`` (in increasing order);
* ``Psi(f)_k(y) = f_k(y restricted to alpha)`` embeds the reduced algebra
  into the ambient one, with image exactly ``Nr_alpha``.

Because assignments are all maps into the world's domain, every ambient
assignment restricts to an assignment of the reduced system, so ``Psi``
never needs the "zero elsewhere" clause of base-pattern assignment spaces.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass, field
from typing import Iterable, Sequence

import numpy as np

from .errors import StructuralError, ValidationError
from .kripke import (
    KripkeSystem, PropFamily, cyl, enumerate_families, impl, join, meet, random_family, semantic_dims,
    subst, ucyl,
)
from .syntax import single


@dataclass(frozen=True)
class DimensionWindow:
    """Retained coordinates ``alpha`` inside ``range(beta)``."""

    alpha: tuple
    beta: int

    def __init__(self, alpha: Iterable[int], beta: int):
        alpha = tuple(sorted(set(int(i) for i in alpha)))
        if beta < 0 or any(not 0 <= i < beta for i in alpha):
            raise ValidationError(f"window {list(alpha)} is not inside range({beta})")
        object.__setattr__(self, "alpha", alpha)
        object.__setattr__(self, "beta", int(beta))

    @property
    def fresh(self) -> tuple:
        return tuple(i for i in range(self.beta) if i not in self.alpha)

    @property
    def genuine(self) -> bool:
        return bool(self.fresh)

    def position(self, i: int) -> int:
        return self.alpha.index(i)

    def to_json(self):
        return {"alpha": list(self.alpha), "beta": self.beta}


def _same_frame(K: KripkeSystem, M: KripkeSystem) -> bool:
    return (K.worlds == M.worlds and np.array_equal(K.leq, M.leq)
            and K.elements == M.elements and K.domains == M.domains)


class _Window:
    """Index bookkeeping between a reduced system ``K`` and an ambient ``M``."""

    def __init__(self, K: KripkeSystem, M: KripkeSystem, window: DimensionWindow):
        if not _same_frame(K, M):
            raise StructuralError("the ambient system does not extend the reduced one "
                                  "(worlds, order and domains must agree)")
        if M.dim != window.beta or K.dim != len(window.alpha):
            raise StructuralError("window does not match the dimensions of the systems")
        self.K, self.M, self.window = K, M, window
        alpha = list(window.alpha)
        if K.dim:
            self.proj = np.ravel_multi_index(M.coords[alpha], K.shape) if alpha else np.zeros(M.size, dtype=np.int64)
        else:
            self.proj = np.zeros(M.size, dtype=np.int64)
        # a section of the projection per world: fresh coordinates take the least domain element
        self.section = np.zeros((K.n_worlds, K.size), dtype=np.int64)
        for k in range(K.n_worlds):
            low = min(K.domains[k])
            rows = np.full((M.dim, K.size), low, dtype=np.int64)
            for p, i in enumerate(alpha):
                rows[i] = K.coords[p]
            self.section[k] = np.ravel_multi_index(rows, M.shape) if M.dim else 0

    def lift(self, g: PropFamily) -> PropFamily:
        if g.system != self.K:
            raise StructuralError("element does not belong to the reduced algebra")
        return PropFamily(self.M, g.values[:, self.proj] & self.M.valid)

    def restrict(self, f: PropFamily) -> PropFamily:
        if f.system != self.M:
            raise StructuralError("element does not belong to the ambient algebra")
        out = np.zeros_like(self.K.valid)
        for k in range(self.K.n_worlds):
            out[k] = f.values[k, self.section[k]] & self.K.valid[k]
        return PropFamily(self.K, out)


def reduced_system(M: KripkeSystem, window: DimensionWindow) -> KripkeSystem:
    return M.with_dim(len(window.alpha))


class NeatReduct:
    """``Nr_alpha`` of the frame algebra of ``ambient`` and its isomorphism
    with the frame algebra of the reduced system."""

    def __init__(self, ambient: KripkeSystem, window: DimensionWindow):
        self.ambient = ambient
        self.window = window
        self.system = reduced_system(ambient, window)
        self._w = _Window(self.system, ambient, window)

    def contains(self, f: PropFamily) -> bool:
        return semantic_dims(f) <= set(self.window.alpha)

    def restrict(self, f: PropFamily) -> PropFamily:
        """``(f_k restricted to alpha)``; ``f`` must lie in the reduct."""
        if not self.contains(f):
            raise ValidationError(f"element depends on coordinates {sorted(semantic_dims(f) - set(self.window.alpha))}"
                                  f" outside the window")
        return self._w.restrict(f)

    def lift(self, g: PropFamily) -> PropFamily:
        return self._w.lift(g)

    def members(self, elements: Iterable[PropFamily]) -> list:
        return [f for f in elements if self.contains(f)]

    def check_isomorphism(self, reduced_elements: Iterable[PropFamily],
                          ambient_elements: Iterable[PropFamily] = ()) -> dict:
        """``restrict . lift = id`` on reduced elements and ``lift . restrict = id``
        on the reduct members among ``ambient_elements``."""
        left = bad_left = 0
        for g in reduced_elements:
            left += 1
            h = self.lift(g)
            if not self.contains(h) or self.restrict(h) != g:
                bad_left += 1
        right = bad_right = 0
        for f in ambient_elements:
            if not self.contains(f):
                continue
            right += 1
            if self.lift(self.restrict(f)) != f:
                bad_right += 1
        return {"left_checked": left, "left_failures": bad_left, "right_checked": right,
                "right_failures": bad_right, "ok": bad_left == 0 and bad_right == 0}


def neat_reduct(F: KripkeSystem, alpha: Iterable[int]) -> NeatReduct:
    return NeatReduct(F, DimensionWindow(alpha, F.dim))


# ---------------------------------------------------------------------------
# operations of a frame algebra, parametrised by its coordinates


@dataclass(frozen=True)
class Operation:
    name: str
    arity: int
    indices: tuple = ()

    def label(self) -> str:
        return self.name + ("(" + ",".join(map(str, self.indices)) + ")" if self.indices else "")

    def apply(self, S: KripkeSystem, args: Sequence[PropFamily], coords: Sequence[int]) -> PropFamily:
        """Apply at system ``S`` with abstract positions mapped through ``coords``."""
        ix = [coords[p] for p in self.indices]
        if self.name == "top":
            return S.top()
        if self.name == "bot":
            return S.bot()
        if self.name == "diag":
            return S.diag(*ix)
        if self.name == "meet":
            return meet(*args)
        if self.name == "join":
            return join(*args)
        if self.name == "impl":
            return impl(*args)
        if self.name == "cyl":
            return cyl(ix[0], args[0])
        if self.name == "ucyl":
            return ucyl(ix[0], args[0])
        if self.name == "subst":
            return subst(single(ix[0], ix[1]), args[0])
        raise ValueError(f"unknown operation {self.name}")


def operations(n: int) -> list:
    """Every operation symbol of an ``n``-dimensional frame algebra (with
    single replacements standing in for finitary substitutions)."""
    ops = [Operation("top", 0), Operation("bot", 0)]
    ops += [Operation("diag", 0, (p, q)) for p in range(n) for q in range(n) if p < q]
    ops += [Operation(name, 1, (p,)) for name in ("cyl", "ucyl") for p in range(n)]
    ops += [Operation("subst", 1, (p, q)) for p in range(n) for q in range(n) if p != q]
    ops += [Operation(name, 2) for name in ("meet", "join", "impl")]
    return ops


def _stack(fams: Sequence[PropFamily]) -> np.ndarray:
    return np.stack([f.values for f in fams]) if fams else np.zeros((0, 0, 0), dtype=bool)


def _batch_binary(name: str, S: KripkeSystem, A: np.ndarray, B: np.ndarray) -> np.ndarray:
    """``name`` applied to every pair: result shape ``(len(A), len(B), W, size)``."""
    a = A[:, None]
    b = B[None, :]
    if name == "meet":
        return a & b
    if name == "join":
        return a | b
    ok = ~a | b
    out = np.empty(ok.shape, dtype=bool)
    for k in range(S.n_worlds):
        out[:, :, k] = S.valid[k] & ok[:, :, list(S.up[k])].all(axis=2)
    return out


# ---------------------------------------------------------------------------
# the neat embedding


@dataclass
class EmbedReport:
    elements: int
    pairs: int
    injective: bool
    in_reduct: bool
    failures: dict = field(default_factory=dict)
    cross_checked: int = 0

    @property
    def ok(self) -> bool:
        return self.injective and self.in_reduct and not self.failures

    def to_json(self):
        return {"ok": self.ok, "elements": self.elements, "pairs": self.pairs, "injective": self.injective,
                "in_reduct": self.in_reduct, "failures": dict(sorted(self.failures.items())),
                "cross_checked": self.cross_checked}


class NeatEmbedding:
    """``Psi``: the frame algebra of ``K`` into ``Nr_alpha`` of that of ``M``."""

    def __init__(self, K: KripkeSystem, M: KripkeSystem, alpha: Iterable[int] | None = None):
        alpha = range(K.dim) if alpha is None else alpha
        self.window = DimensionWindow(alpha, M.dim)
        self.K, self.M = K, M
        self._w = _Window(K, M, self.window)
        self.reduct = NeatReduct(M, self.window)

    def __call__(self, g: PropFamily) -> PropFamily:
        return self._w.lift(g)

    def check(self, elements: Sequence[PropFamily], *, pairs: bool = True,
              rng: np.random.Generator | None = None, cross: int = 16) -> EmbedReport:
        """Homomorphism on every operation and element (and every pair when
        ``pairs``), injectivity, and image inside the reduct."""
        K, M, w = self.K, self.M, self._w
        alpha = self.window.alpha
        kc, mc = list(range(K.dim)), list(alpha)
        elements = list(dict.fromkeys(elements))
        images = [w.lift(g) for g in elements]
        failures = {}

        def fail(op, n=1):
            failures[op.label()] = failures.get(op.label(), 0) + n

        for op in operations(K.dim):
            if op.arity == 0:
                if w.lift(op.apply(K, (), kc)) != op.apply(M, (), mc):
                    fail(op)
            elif op.arity == 1:
                for g, h in zip(elements, images):
                    if w.lift(op.apply(K, (g,), kc)) != op.apply(M, (h,), mc):
                        fail(op)
        n_pairs = 0
        if pairs and elements:
            G = _stack(elements)
            H = _stack(images)
            for name in ("meet", "join", "impl"):
                lhs = _batch_binary(name, K, G, G)[..., w.proj] & M.valid
                rhs = _batch_binary(name, M, H, H)
                bad = int((lhs != rhs).any(axis=(2, 3)).sum())
                if bad:
                    failures[name] = bad
            n_pairs = len(elements) ** 2
            # the batched operations must agree with the algebra's own
            rng = rng or np.random.default_rng(0)
            cross_n = min(cross, n_pairs)
            for _ in range(cross_n):
                a, b = (int(x) for x in rng.integers(len(elements), size=2))
                for name, fn in (("meet", meet), ("join", join), ("impl", impl)):
                    got = _batch_binary(name, K, G[[a]], G[[b]])[0, 0]
                    if not np.array_equal(got, fn(elements[a], elements[b]).values):
                        failures["batch:" + name] = failures.get("batch:" + name, 0) + 1
        else:
            cross_n = 0
        injective = len(set(images)) == len(elements)
        in_reduct = all(self.reduct.contains(h) for h in images)
        return EmbedReport(len(elements), n_pairs, injective, in_reduct, failures, cross_n)


def neat_embed(K: KripkeSystem, M: KripkeSystem, alpha: Iterable[int] | None = None) -> NeatEmbedding:
    return NeatEmbedding(K, M, alpha)


# ---------------------------------------------------------------------------
# dilation and the roundtrip


def dilate_frame(S: KripkeSystem, block: int | Iterable[int]) -> KripkeSystem:
    """Add fresh coordinates ``S.dim, S.dim + 1, ...`` to ``S``."""
    if isinstance(block, int):
        block = range(S.dim, S.dim + block)
    block = sorted(set(block))
    if block != list(range(S.dim, S.dim + len(block))):
        raise ValidationError(f"fresh block must be {S.dim}, {S.dim + 1}, ... (got {block})")
    if not block:
        return S
    return S.with_dim(S.dim + len(block))


def _cylindrify(f: PropFamily, indices: Iterable[int]) -> PropFamily:
    for i in indices:
        f = cyl(i, f)
    return f


def roundtrip(S: KripkeSystem, block: int | Iterable[int] = 1, *, elements: Sequence[PropFamily] | None = None,
              samples: int = 32, seed: int = 0, alpha: Iterable[int] | None = None) -> dict:
    """``Nr_alpha(dilate(S))`` against ``S``: restrict . embed is the identity on
    ``elements`` (all of ``S``'s carrier by default) and embed . restrict is the
    identity on reduct members drawn from the dilated algebra.

    ``alpha`` places ``S``'s coordinates inside the dilated system; it
    defaults to ``0, ..., S.dim - 1``.
    """
    D = dilate_frame(S, block)
    emb = NeatEmbedding(S, D, alpha)
    if elements is None:
        elements = enumerate_families(S)
    rng = np.random.default_rng(seed)
    ambient = [_cylindrify(random_family(D, rng), emb.window.fresh) for _ in range(samples)]
    iso = emb.reduct.check_isomorphism(elements, ambient)
    hom = emb.check(elements, pairs=len(elements) <= 512, rng=rng)
    return {"ok": iso["ok"] and hom.ok and iso["right_checked"] == samples, "window": emb.window.to_json(),
            "isomorphism": iso, "embedding": hom.to_json()}


# ---------------------------------------------------------------------------
# products


@dataclass
class ProductReport:
    members: int
    product_size: int
    left_size: int
    right_size: int
    same_carrier: bool
    closed: bool
    checked_ops: int

    @property
    def ok(self):
        return self.same_carrier and self.closed

    def to_json(self):
        return {"ok": self.ok, "members": self.members, "product_size": self.product_size,
                "prod_nr": self.left_size, "nr_prod": self.right_size, "same_carrier": self.same_carrier,
                "closed": self.closed, "checked_ops": self.checked_ops}


def product_neat_commute_check(family: Sequence[KripkeSystem], alpha: Iterable[int], *,
                               carriers: Sequence[Sequence[PropFamily]] | None = None,
                               samples: int = 64, seed: int = 0) -> ProductReport:
    """``prod_i Nr_alpha B_i = Nr_alpha prod_i B_i`` under the identity on tuples.

    The left side takes tuples of reduct members; the right side takes the
    tuples of the product algebra fixed by every product cylindrification
    outside ``alpha``.  Closure of the common carrier under the product
    operations with indices in ``alpha`` is checked on sampled tuples.
    """
    family = list(family)
    alpha = tuple(sorted(set(alpha)))
    if not family:
        # both sides are the one-element algebra on the empty tuple
        return ProductReport(0, 1, 1, 1, True, True, 0)
    beta = family[0].dim
    if any(B.dim != beta for B in family):
        raise StructuralError("a product needs members of the same dimension")
    window = DimensionWindow(alpha, beta)
    if carriers is None:
        carriers = [enumerate_families(B) for B in family]
    carriers = [list(c) for c in carriers]
    reducts = [NeatReduct(B, window) for B in family]
    # left: each component in its own reduct
    left = [np.array([r.contains(f) for f in c], dtype=bool) for r, c in zip(reducts, carriers)]
    # right: product cylindrifications act componentwise; a tuple is fixed iff
    # every component is fixed
    fixed = [np.array([all(cyl(j, f) == f for j in window.fresh) for f in c], dtype=bool) for c in carriers]
    L = left[0]
    R = fixed[0]
    for a, b in zip(left[1:], fixed[1:]):
        L = np.multiply.outer(L, a)
        R = np.multiply.outer(R, b)
    same = bool(np.array_equal(L, R))
    rng = np.random.default_rng(seed)
    members = np.argwhere(L)
    closed = True
    checked = 0
    ops = [op for op in operations(len(alpha)) if op.arity]
    coords = list(alpha)
    for _ in range(min(samples, len(members)) if len(members) else 0):
        t = members[int(rng.integers(len(members)))]
        u = members[int(rng.integers(len(members)))]
        for op in ops:
            out = []
            for i, B in enumerate(family):
                args = (carriers[i][t[i]],) if op.arity == 1 else (carriers[i][t[i]], carriers[i][u[i]])
                out.append(op.apply(B, args, coords))
            checked += 1
            if not all(reducts[i].contains(o) for i, o in enumerate(out)):
                closed = False
    return ProductReport(len(family), int(np.prod([len(c) for c in carriers])), int(L.sum()), int(R.sum()),
                         same, closed, checked)


# ---------------------------------------------------------------------------
# subalgebras of reducts


def generate_subalgebra(generators: Iterable[PropFamily], ops: Sequence[Operation], coords: Sequence[int],
                        limit: int = 256) -> list:
    """Closure of ``generators`` under ``ops`` (breadth first, capped at ``limit``)."""
    gens = list(dict.fromkeys(generators))
    if not gens:
        return []
    S = gens[0].system
    out = list(gens)
    seen = set(out)
    for op in ops:
        if op.arity == 0:
            x = op.apply(S, (), coords)
            if x not in seen:
                seen.add(x)
                out.append(x)
    frontier = list(out)
    while frontier and len(out) < limit:
        new = []
        for op in ops:
            if op.arity == 1:
                cands = (op.apply(S, (f,), coords) for f in frontier)
            elif op.arity == 2:
                cands = (op.apply(S, (f, g), coords) for f in frontier for g in out)
            else:
                continue
            for x in cands:
                if x not in seen:
                    seen.add(x)
                    new.append(x)
                    if len(out) + len(new) >= limit:
                        break
            if len(out) + len(new) >= limit:
                break
        out.extend(new)
        frontier = new
    return out[:limit]


def s_closure_check(reduct: NeatReduct, generators: Iterable[PropFamily], limit: int = 128) -> dict:
    """Every element of the subalgebra generated inside the reduct is again a
    member, and is the embedding of its own restriction."""
    gens = [f for f in generators if reduct.contains(f)]
    ops = operations(len(reduct.window.alpha))
    sub = generate_subalgebra(gens, ops, list(reduct.window.alpha), limit)
    bad = [k for k, f in enumerate(sub) if not reduct.contains(f) or reduct.lift(reduct.restrict(f)) != f]
    return {"generated": len(sub), "failures": len(bad), "ok": not bad}


def family_pairs(systems: Sequence[KripkeSystem]):
    """Two-member families (with repetition) of the given systems."""
    return itertools.combinations_with_replacement(systems, 2)
