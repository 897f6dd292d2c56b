"""Equational laws of polyadic Heyting algebras with diagonals, checked on
seeded random Kripke systems.

Every law is an equation between two families built from element variables
``x, y, z`` and coordinates ``i, j, k`` (pairwise distinct).  Inequalities
``a <= b`` are stated as ``a & b = a``.  A law whose coordinates do not fit
in a system's dimension is skipped for that system.
"""

from __future__ import annotations

from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from .kripke import cyl, impl, join, meet, random_family, random_system, subst, ucyl
from .syntax import Transformation, compose, single


@dataclass(frozen=True)
class Law:
    name: str
    group: str
    coords: int  # number of distinct coordinates used
    sides: Callable  # (S, x, y, z, i, j, k) -> (lhs, rhs)


def _le(a, b):
    return meet(a, b), a


def _laws():
    L = []

    def law(name, group, coords=0):
        def deco(fn):
            L.append(Law(name, group, coords, fn))
            return fn
        return deco

    # Heyting algebra
    law("meet_comm", "heyting")(lambda S, x, y, z, i, j, k: (meet(x, y), meet(y, x)))
    law("join_comm", "heyting")(lambda S, x, y, z, i, j, k: (join(x, y), join(y, x)))
    law("meet_assoc", "heyting")(lambda S, x, y, z, i, j, k: (meet(x, meet(y, z)), meet(meet(x, y), z)))
    law("join_assoc", "heyting")(lambda S, x, y, z, i, j, k: (join(x, join(y, z)), join(join(x, y), z)))
    law("absorb_meet", "heyting")(lambda S, x, y, z, i, j, k: (meet(x, join(x, y)), x))
    law("absorb_join", "heyting")(lambda S, x, y, z, i, j, k: (join(x, meet(x, y)), x))
    law("distributive", "heyting")(lambda S, x, y, z, i, j, k: (meet(x, join(y, z)), join(meet(x, y), meet(x, z))))
    law("top_unit", "heyting")(lambda S, x, y, z, i, j, k: (meet(x, S.top()), x))
    law("bot_unit", "heyting")(lambda S, x, y, z, i, j, k: (join(x, S.bot()), x))
    law("impl_self", "heyting")(lambda S, x, y, z, i, j, k: (impl(x, x), S.top()))
    law("modus_ponens", "heyting")(lambda S, x, y, z, i, j, k: (meet(x, impl(x, y)), meet(x, y)))
    law("impl_absorb", "heyting")(lambda S, x, y, z, i, j, k: (meet(impl(x, y), y), y))
    law("impl_meet", "heyting")(lambda S, x, y, z, i, j, k: (impl(x, meet(y, z)), meet(impl(x, y), impl(x, z))))
    law("impl_join_left", "heyting")(lambda S, x, y, z, i, j, k: (impl(join(x, y), z), meet(impl(x, z), impl(y, z))))
    law("curry", "heyting")(lambda S, x, y, z, i, j, k: (impl(meet(x, y), z), impl(x, impl(y, z))))

    # existential cylindrifications
    law("c_bot", "cylindric", 1)(lambda S, x, y, z, i, j, k: (cyl(i, S.bot()), S.bot()))
    law("c_inflationary", "cylindric", 1)(lambda S, x, y, z, i, j, k: _le(x, cyl(i, x)))
    law("c_meet", "cylindric", 1)(lambda S, x, y, z, i, j, k: (cyl(i, meet(x, cyl(i, y))), meet(cyl(i, x), cyl(i, y))))
    law("c_join", "cylindric", 1)(lambda S, x, y, z, i, j, k: (cyl(i, join(x, y)), join(cyl(i, x), cyl(i, y))))
    law("c_idempotent", "cylindric", 1)(lambda S, x, y, z, i, j, k: (cyl(i, cyl(i, x)), cyl(i, x)))
    law("c_commute", "cylindric", 2)(lambda S, x, y, z, i, j, k: (cyl(i, cyl(j, x)), cyl(j, cyl(i, x))))

    # universal cylindrifications
    law("q_top", "universal", 1)(lambda S, x, y, z, i, j, k: (ucyl(i, S.top()), S.top()))
    law("q_deflationary", "universal", 1)(lambda S, x, y, z, i, j, k: _le(ucyl(i, x), x))
    law("q_meet", "universal", 1)(lambda S, x, y, z, i, j, k: (ucyl(i, meet(x, y)), meet(ucyl(i, x), ucyl(i, y))))
    law("q_commute", "universal", 2)(lambda S, x, y, z, i, j, k: (ucyl(i, ucyl(j, x)), ucyl(j, ucyl(i, x))))
    law("q_of_c", "universal", 1)(lambda S, x, y, z, i, j, k: (ucyl(i, cyl(i, x)), cyl(i, x)))
    law("c_of_q", "universal", 1)(lambda S, x, y, z, i, j, k: (cyl(i, ucyl(i, x)), ucyl(i, x)))
    law("q_impl_closed", "universal", 1)(
        lambda S, x, y, z, i, j, k: (ucyl(i, impl(cyl(i, x), y)), impl(cyl(i, x), ucyl(i, y))))
    law("q_adjunction", "universal", 1)(
        lambda S, x, y, z, i, j, k: (ucyl(i, impl(x, ucyl(i, y))), impl(cyl(i, x), ucyl(i, y))))

    # finitary substitutions
    def rep(i, j):
        return single(i, j)

    law("s_meet", "substitution", 2)(
        lambda S, x, y, z, i, j, k: (subst(rep(i, j), meet(x, y)), meet(subst(rep(i, j), x), subst(rep(i, j), y))))
    law("s_join", "substitution", 2)(
        lambda S, x, y, z, i, j, k: (subst(rep(i, j), join(x, y)), join(subst(rep(i, j), x), subst(rep(i, j), y))))
    law("s_impl", "substitution", 2)(
        lambda S, x, y, z, i, j, k: (subst(rep(i, j), impl(x, y)), impl(subst(rep(i, j), x), subst(rep(i, j), y))))
    law("s_bot", "substitution", 2)(lambda S, x, y, z, i, j, k: (subst(rep(i, j), S.bot()), S.bot()))
    law("s_top", "substitution", 2)(lambda S, x, y, z, i, j, k: (subst(rep(i, j), S.top()), S.top()))
    law("s_identity", "substitution")(lambda S, x, y, z, i, j, k: (subst(Transformation.identity(), x), x))
    law("s_compose", "substitution", 3)(
        lambda S, x, y, z, i, j, k: (subst(rep(i, j), subst(rep(j, k), x)), subst(compose(rep(j, k), rep(i, j)), x)))
    law("s_swap_compose", "substitution", 3)(
        lambda S, x, y, z, i, j, k: (subst(rep(j, k), subst(rep(i, j), x)), subst(compose(rep(i, j), rep(j, k)), x)))
    law("s_on_bound", "substitution", 2)(lambda S, x, y, z, i, j, k: (subst(rep(i, j), cyl(i, x)), cyl(i, x)))
    law("s_past_c", "substitution", 3)(
        lambda S, x, y, z, i, j, k: (subst(rep(i, j), cyl(k, x)), cyl(k, subst(rep(i, j), x))))
    law("s_past_q", "substitution", 3)(
        lambda S, x, y, z, i, j, k: (subst(rep(i, j), ucyl(k, x)), ucyl(k, subst(rep(i, j), x))))

    # diagonals
    law("d_reflexive", "diagonal", 1)(lambda S, x, y, z, i, j, k: (S.diag(i, i), S.top()))
    law("d_symmetric", "diagonal", 2)(lambda S, x, y, z, i, j, k: (S.diag(i, j), S.diag(j, i)))
    law("d_through", "diagonal", 3)(
        lambda S, x, y, z, i, j, k: (cyl(k, meet(S.diag(i, k), S.diag(k, j))), S.diag(i, j)))
    law("d_transitive", "diagonal", 3)(
        lambda S, x, y, z, i, j, k: _le(meet(S.diag(i, k), S.diag(k, j)), S.diag(i, j)))
    law("d_leibniz", "diagonal", 2)(
        lambda S, x, y, z, i, j, k: _le(meet(S.diag(i, j), cyl(i, meet(S.diag(i, j), x))), x))
    law("s_by_diagonal", "diagonal", 2)(
        lambda S, x, y, z, i, j, k: (subst(rep(i, j), x), cyl(i, meet(S.diag(i, j), x))))
    law("d_substitution", "diagonal", 2)(
        lambda S, x, y, z, i, j, k: (meet(S.diag(i, j), x), meet(S.diag(i, j), subst(rep(i, j), x))))
    return L


LAWS = _laws()


@dataclass
class AxiomReport:
    systems: int
    instances: int
    per_law: dict
    failures: list = field(default_factory=list)

    @property
    def ok(self) -> bool:
        return not self.failures

    def to_json(self):
        return {"ok": self.ok, "systems": self.systems, "instances_per_system": self.instances,
                "laws": {name: {"checked": n} for name, n in sorted(self.per_law.items())},
                "failures": self.failures[:20], "failure_count": len(self.failures)}


def _check_one(args):
    seed, index, instances, max_worlds, max_elems, max_dim, names = args
    rng = np.random.default_rng([seed, index])
    dim = int(rng.integers(1, max_dim + 1))
    S = random_system(rng, max_worlds, max_elems, dim)
    laws = [law for law in LAWS if names is None or law.name in names]
    counts = {}
    failures = []
    for t in range(instances):
        x, y, z = (random_family(S, rng) for _ in range(3))
        coords = [int(c) for c in rng.permutation(dim)] + [None] * 3
        i, j, k = coords[:3]
        for law in laws:
            if law.coords > dim:
                continue
            lhs, rhs = law.sides(S, x, y, z, i, j, k)
            counts[law.name] = counts.get(law.name, 0) + 1
            if lhs != rhs:
                failures.append({"law": law.name, "system": index, "instance": t, "coords": [i, j, k][:law.coords],
                                 "frame": S.to_json()})
    return counts, failures


def check_axioms(frames: int = 200, instances: int = 20, seed: int = 0, *, max_worlds: int = 4, max_elems: int = 3,
                 max_dim: int = 4, laws=None, jobs: int = 1) -> AxiomReport:
    """Evaluate every law on ``frames`` random systems and ``instances`` random
    choices of elements and coordinates per system.

    System ``n`` draws from a generator seeded with ``(seed, n)``, so the
    outcome does not depend on ``jobs``.
    """
    names = None if laws is None else frozenset(laws)
    tasks = [(seed, n, instances, max_worlds, max_elems, max_dim, names) for n in range(frames)]
    if jobs > 1:
        with ProcessPoolExecutor(max_workers=jobs) as ex:
            results = list(ex.map(_check_one, tasks, chunksize=max(1, frames // (4 * jobs))))
    else:
        results = [_check_one(t) for t in tasks]
    per_law = {}
    failures = []
    for counts, fails in results:
        for name, n in counts.items():
            per_law[name] = per_law.get(name, 0) + n
        failures.extend(fails)
    return AxiomReport(frames, instances, per_law, failures)
