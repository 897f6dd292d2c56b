"""A deliberately naive Kripke evaluator used as a test oracle.

It reads only the raw structure of a frame (worlds, order, domains,
relations) and evaluates formulas by direct recursion on the forcing
clauses, one assignment at a time.  It shares no code with the vectorised
evaluator in ``polyheyt.kripke``.
"""

from __future__ import annotations

import itertools

from polyheyt.syntax import And, Atom, Bot, Cyl, Diag, Impl, Or, Subst, Top, UCyl


class Frame:
    def __init__(self, worlds, leq, domains, dim, relations):
        self.worlds = list(worlds)
        self.leq = set(leq)  # reflexive-transitive pairs (a, b) meaning a <= b
        self.domains = {w: sorted(d) for w, d in domains.items()}
        self.dim = dim
        self.relations = {name: {w: set(map(tuple, ts)) for w, ts in per.items()} for name, per in relations.items()}

    @classmethod
    def of(cls, system, valuation=None, dim=None):
        """Copy the structure of a ``KripkeSystem`` (and valuation) into plain sets."""
        S = system
        leq = {(a, b) for a in S.worlds for b in S.worlds if S.leq[S.worlds.index(a), S.worlds.index(b)]}
        doms = {w: [S.elements[c] for c in S.domains[k]] for k, w in enumerate(S.worlds)}
        rels = {}
        if valuation is not None:
            for name, rel in valuation.relations.items():
                rels[name] = {w: set(rel[k]) for k, w in enumerate(S.worlds)}
        return cls(S.worlds, leq, doms, S.dim if dim is None else dim, rels)

    def up(self, w):
        return [v for v in self.worlds if (w, v) in self.leq]

    def assignments(self, w):
        return itertools.product(self.domains[w], repeat=self.dim)

    def force(self, w, f, x) -> bool:
        x = tuple(x)
        if isinstance(f, Top):
            return True
        if isinstance(f, Bot):
            return False
        if isinstance(f, Atom):
            args = tuple(x[r] for r in f.support)
            return args in self.relations.get(f.name, {}).get(w, set())
        if isinstance(f, Diag):
            return x[f.i] == x[f.j]
        if isinstance(f, And):
            return self.force(w, f.left, x) and self.force(w, f.right, x)
        if isinstance(f, Or):
            return self.force(w, f.left, x) or self.force(w, f.right, x)
        if isinstance(f, Impl):
            return all(not self.force(v, f.left, x) or self.force(v, f.right, x) for v in self.up(w))
        if isinstance(f, Cyl):
            return any(self.force(w, f.body, _set(x, f.index, u)) for u in self.domains[w])
        if isinstance(f, UCyl):
            return all(self.force(v, f.body, _set(x, f.index, u)) for v in self.up(w) for u in self.domains[v])
        if isinstance(f, Subst):
            return self.force(w, f.body, tuple(x[f.tau(k)] for k in range(self.dim)))
        raise TypeError(f)

    def table(self, f):
        """``{world: set of assignments forcing f}``."""
        return {w: {x for x in self.assignments(w) if self.force(w, f, x)} for w in self.worlds}

    def entails(self, gamma, delta) -> bool:
        """Every world and assignment forcing all of ``gamma`` forces some of ``delta``."""
        for w in self.worlds:
            for x in self.assignments(w):
                if all(self.force(w, g, x) for g in gamma) and not any(self.force(w, d, x) for d in delta):
                    return False
        return True


def _set(x, i, u):
    y = list(x)
    y[i] = u
    return tuple(y)


def depends_on(frames, f, coords):
    """Coordinates among ``coords`` on which ``f`` actually depends in some frame."""
    out = set()
    for F in frames:
        for w in F.worlds:
            for x in F.assignments(w):
                v = F.force(w, f, x)
                for i in coords:
                    if i in out:
                        continue
                    for u in F.domains[w]:
                        if F.force(w, f, _set(x, i, u)) != v:
                            out.add(i)
                            break
    return out


def small_frames(dim, atoms, max_worlds=2, elements=(0, 1)):
    """Every frame with at most ``max_worlds`` worlds (as a chain or an
    antichain of two), nonempty monotone domains inside ``elements``, and
    every monotone valuation of ``atoms`` (name -> arity)."""
    shapes = [(["a"], set())]
    if max_worlds >= 2:
        shapes.append((["a", "b"], set()))
        shapes.append((["a", "b"], {("a", "b")}))
    subsets = [list(c) for r in range(1, len(elements) + 1) for c in itertools.combinations(elements, r)]
    for worlds, strict in shapes:
        leq = {(w, w) for w in worlds} | strict
        for doms in itertools.product(subsets, repeat=len(worlds)):
            D = dict(zip(worlds, doms))
            if any(not set(D[a]) <= set(D[b]) for a, b in leq):
                continue
            names = sorted(atoms)
            per_atom = []
            for name in names:
                per_atom.append(list(_monotone_relations(worlds, leq, D, atoms[name])))
            for choice in itertools.product(*per_atom):
                yield Frame(worlds, leq, D, dim, dict(zip(names, choice)))


def _monotone_relations(worlds, leq, D, arity):
    cells = {w: list(itertools.product(D[w], repeat=arity)) for w in worlds}
    options = {w: [set(c) for r in range(len(cells[w]) + 1) for c in itertools.combinations(cells[w], r)]
               for w in worlds}
    for pick in itertools.product(*(options[w] for w in worlds)):
        rel = dict(zip(worlds, pick))
        if all(rel[a] <= rel[b] for a, b in leq):
            yield rel
