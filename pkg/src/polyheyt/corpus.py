"""Fixed problem sets used by the test-suite and the ``--corpus`` options.

Everything here is plain text in the S-expression grammar, parsed against
:data:`SIGNATURE` on demand.
"""

from __future__ import annotations

from dataclasses import dataclass

from .parse import parse_formula, parse_sequent
from .syntax import Signature

SIGNATURE = Signature.make({"A": [], "B": [], "C": [], "D": [], "E": [],
                            "P": [0], "Q": [0], "R": [0], "S": [0, 1]})


def formula(text: str):
    return parse_formula(text, SIGNATURE)


# ---------------------------------------------------------------------------
# interpolation: valid implications with partially disjoint vocabularies


@dataclass(frozen=True)
class InterpolationItem:
    name: str
    phi: str
    psi: str
    tags: tuple = ()
    hard: bool = False

    def parsed(self):
        return formula(self.phi), formula(self.psi)


INTERPOLATION = [
    InterpolationItem("conj-disj", "(and (atom A) (atom B))", "(or (atom A) (atom C))"),
    InterpolationItem("bot-premise", "bot", "(atom A)"),
    InterpolationItem("top-conclusion", "(atom A)", "top"),
    InterpolationItem("mp", "(and (atom A) (impl (atom A) (atom B)))", "(or (atom B) (atom C))"),
    InterpolationItem("weakening", "(atom A)", "(impl (atom B) (atom A))"),
    InterpolationItem("chain", "(and (impl (atom A) (atom B)) (impl (atom B) (atom C)))",
                      "(impl (atom A) (or (atom C) (atom D)))"),
    InterpolationItem("contradiction", "(and (atom A) (impl (atom A) bot))", "(atom B)"),
    InterpolationItem("no-common-atoms", "(atom B)", "(impl (atom A) (atom A))"),
    InterpolationItem("distribute", "(or (and (atom A) (atom B)) (and (atom A) (atom C)))", "(or (atom A) (atom D))"),
    InterpolationItem("double-negation-intro", "(atom A)", "(impl (impl (atom A) bot) bot)"),
    InterpolationItem("impl-strengthen", "(impl (atom A) (and (atom B) (atom C)))", "(impl (atom A) (or (atom B) (atom D)))"),
    InterpolationItem("conj-order", "(and (atom A) (and (atom B) (atom C)))", "(or (and (atom B) (atom A)) (atom D))"),
    InterpolationItem("neg-transfer", "(and (impl (atom A) bot) (atom C))", "(impl (atom A) (atom B))"),
    InterpolationItem("forall-conj", "(ucyl 0 (and (atom P) (atom Q)))", "(or (ucyl 0 (atom P)) (atom A))",
                      ("quantified",)),
    InterpolationItem("exists-weaken", "(cyl 0 (and (atom P) (atom Q)))", "(cyl 0 (or (atom P) (atom R)))",
                      ("quantified",)),
    InterpolationItem("exists-transfer", "(and (ucyl 0 (impl (atom P) (atom Q))) (cyl 0 (atom P)))",
                      "(cyl 0 (or (atom Q) (atom R)))", ("quantified",)),
    InterpolationItem("free-to-exists", "(and (atom P) (atom A))", "(cyl 0 (atom P))", ("quantified",)),
    InterpolationItem("forall-to-free", "(ucyl 0 (atom P))", "(or (atom P) (atom Q))", ("quantified",)),
    InterpolationItem("forall-mono", "(ucyl 0 (and (atom P) (atom R)))", "(ucyl 0 (or (atom P) (atom Q)))",
                      ("quantified",)),
    InterpolationItem("binary-forall", "(and (ucyl 1 (atom S)) (atom A))", "(subst ((1 0)) (atom S))",
                      ("quantified",)),
    InterpolationItem("diag-carry", "(and (diag 0 1) (atom A))", "(or (diag 0 1) (atom B))", ("diagonal",)),
    InterpolationItem("leibniz", "(and (atom P) (diag 0 1))", "(subst ((0 1)) (atom P))", ("diagonal",)),
    InterpolationItem("diag-exists", "(atom A)", "(cyl 1 (diag 0 1))", ("diagonal", "quantified")),
    InterpolationItem("leibniz-back", "(and (subst ((0 1)) (atom P)) (diag 0 1))", "(or (atom P) (atom C))",
                      ("diagonal",)),
    InterpolationItem("exists-diag", "(cyl 1 (and (diag 0 1) (subst ((0 1)) (atom P))))", "(or (atom P) (atom A))",
                      ("diagonal", "quantified")),
    InterpolationItem("diag-forall", "(and (ucyl 1 (impl (diag 0 1) (subst ((0 1)) (atom P)))) (atom B))",
                      "(or (atom P) (atom C))", ("diagonal", "quantified")),
    InterpolationItem("four-conj", "(and (and (atom A) (atom B)) (and (atom C) (atom D)))",
                      "(or (and (and (atom A) (atom B)) (and (atom C) (atom D))) (atom E))"),
    InterpolationItem("nested-impl", "(and (impl (atom A) (impl (atom B) (atom C))) (and (atom A) (atom D)))",
                      "(impl (atom B) (or (atom C) (atom E)))", hard=True),
    InterpolationItem("exists-forall", "(cyl 1 (ucyl 0 (atom S)))", "(ucyl 0 (cyl 1 (or (atom S) (atom Q))))",
                      ("quantified",), hard=True),
]


# ---------------------------------------------------------------------------
# saturation seeds: inseparable triples (Gamma over X1, Theta and Lambda over X2)


@dataclass(frozen=True)
class Seed:
    name: str
    gamma: tuple
    theta: tuple
    lam: tuple
    x1: tuple
    x2: tuple
    tags: tuple = ()

    def parsed(self):
        return ([formula(t) for t in self.gamma], [formula(t) for t in self.theta], [formula(t) for t in self.lam])

    @property
    def has_diagonal(self) -> bool:
        return any("diag" in t for t in self.gamma + self.theta + self.lam)

    @property
    def positive_universal(self) -> bool:
        return any("ucyl" in t for t in self.gamma + self.theta)


def _seed(name, gamma=(), theta=(), lam=(), x1="PQ", x2="QR", tags=()):
    return Seed(name, tuple(gamma), tuple(theta), tuple(lam), tuple(x1), tuple(x2), tuple(tags))


SEEDS = [
    _seed("exists-vs-impl", ["(cyl 0 (atom P))"], [], ["(impl (atom Q) (atom R))", "(atom Q)", "(ucyl 0 (atom R))"]),
    _seed("atoms", ["(atom P)"], [], ["(atom Q)"], "P", "Q"),
    _seed("disjunction", ["(or (atom P) (atom Q))"], [], ["(atom Q)"]),
    _seed("impl-theta", ["(impl (atom P) (atom Q))"], ["(atom Q)"], ["(atom P)"], "PQ", "PQR"),
    _seed("forall-or", ["(ucyl 0 (or (atom P) (atom Q)))"], [], ["(ucyl 0 (atom Q))"]),
    _seed("exists-and", ["(cyl 0 (and (atom P) (atom Q)))"], [], ["(cyl 0 (atom R))"]),
    _seed("diag-pair", ["(diag 0 1)"], [], ["(diag 0 2)"], "P", "Q"),
    _seed("leibniz", ["(and (atom P) (diag 0 1))"], [], ["(subst ((0 2)) (atom P))"], "PQ", "PR"),
    _seed("diag-chain", ["(diag 0 1)"], ["(diag 1 2)"], ["(atom R)"]),
    _seed("diag-exists", ["(cyl 1 (diag 0 1))"], [], ["(atom Q)"]),
    _seed("top-bot", ["top"], [], ["bot"], "P", "Q"),
    _seed("double-negation", ["(impl (impl (atom P) bot) bot)"], [], ["(atom P)"], "P", "PQ"),
    _seed("excluded-middle", ["(atom P)"], [], ["(or (atom Q) (impl (atom Q) bot))"]),
    _seed("forall-impl", ["(ucyl 0 (impl (atom P) (atom Q)))"], ["(cyl 0 (atom P))"], ["(ucyl 0 (atom Q))"],
          "PQ", "PQR"),
    _seed("theta-atom", ["(atom P)"], ["(atom R)"], ["(and (atom Q) (atom R))"]),
    _seed("exists-exists", ["(cyl 0 (atom P))"], [], ["(cyl 0 (atom Q))"]),
    _seed("forall-forall", ["(ucyl 0 (atom P))"], [], ["(ucyl 0 (atom R))"]),
    _seed("weak-or", ["(and (atom P) (atom Q))"], [], ["(or (atom R) (impl (atom Q) (atom R)))"]),
    _seed("negations", ["(impl (atom Q) bot)"], [], ["(impl (atom R) bot)"]),
    _seed("total-diag", ["(ucyl 0 (cyl 1 (diag 0 1)))"], [], ["(atom Q)"]),
    _seed("shifted-atoms", ["(subst ((0 1)) (atom P))"], [], ["(subst ((0 1)) (atom Q))"]),
    _seed("diag-vs-atom", ["(diag 0 1)"], [], ["(subst ((0 1)) (atom Q))"]),
    _seed("point-vs-other", [], ["(atom Q)"], ["(subst ((0 1)) (atom Q))"]),
    _seed("diag-or", ["(or (diag 0 1) (atom P))"], [], ["(atom R)"]),
    _seed("exists-leibniz", ["(cyl 1 (and (diag 0 1) (subst ((0 1)) (atom P))))"], [], ["(atom R)"]),
    _seed("impl-impl", ["(impl (atom P) (atom Q))"], [], ["(impl (atom R) (atom Q))"]),
    _seed("forall-back", ["(ucyl 0 (impl (atom Q) (atom P)))"], ["(cyl 0 (atom Q))"], ["(atom R)"]),
    _seed("two-exists", ["(and (cyl 0 (atom P)) (cyl 0 (atom Q)))"], [], ["(cyl 0 (and (atom Q) (atom R)))"]),
    _seed("or-quantifiers", ["(or (cyl 0 (atom P)) (ucyl 0 (atom Q)))"], [], ["(ucyl 0 (atom R))"]),
    _seed("impl-diag", ["(impl (atom P) (diag 0 1))"], [], ["(diag 0 1)"]),
    _seed("guarded-forall", ["(ucyl 1 (impl (diag 0 1) (atom P)))"], [], ["(atom Q)"]),
    _seed("theta-impl", ["(atom Q)"], ["(impl (atom Q) (atom R))"], ["(ucyl 0 (and (atom R) (atom Q)))"]),
]

# seeds for the canonical-model check: no positive universals
CANONICAL = ["exists-vs-impl", "atoms", "disjunction", "impl-theta", "exists-and", "diag-pair", "leibniz",
             "top-bot", "excluded-middle", "theta-atom", "exists-exists", "negations"]


def seed(name: str) -> Seed:
    for s in SEEDS:
        if s.name == name:
            return s
    raise KeyError(name)


# ---------------------------------------------------------------------------
# prover sequents (both provable and unprovable ones)


SEQUENTS = [
    "(atom A) |- (atom A)",
    "(and (atom A) (atom B)) |- (and (atom B) (atom A))",
    "(or (atom A) (atom B)) |- (or (atom B) (atom A))",
    "|- (impl (atom A) (impl (atom B) (atom A)))",
    "(impl (atom A) (atom B)) (impl (atom B) (atom C)) |- (impl (atom A) (atom C))",
    "|- (impl (atom A) (impl (impl (atom A) bot) bot))",
    "|- (impl (impl (impl (impl (atom A) bot) bot) bot) (impl (atom A) bot))",
    "|- (or (atom A) (impl (atom A) bot))",
    "|- (impl (impl (impl (atom A) bot) bot) (atom A))",
    "|- (impl (impl (impl (atom A) (atom B)) (atom A)) (atom A))",
    "|- (or (impl (atom A) (atom B)) (impl (atom B) (atom A)))",
    "(impl (and (atom A) (atom B)) (atom C)) |- (impl (atom A) (impl (atom B) (atom C)))",
    "(impl (atom A) (or (atom B) (atom C))) |- (or (impl (atom A) (atom B)) (impl (atom A) (atom C)))",
    "(ucyl 0 (atom P)) |- (atom P)",
    "(atom P) |- (cyl 0 (atom P))",
    "(ucyl 0 (atom P)) |- (cyl 0 (atom P))",
    "(cyl 0 (ucyl 1 (atom S))) |- (ucyl 1 (cyl 0 (atom S)))",
    "(ucyl 1 (cyl 0 (atom S))) |- (cyl 0 (ucyl 1 (atom S)))",
    "(cyl 0 (or (atom P) (atom Q))) |- (or (cyl 0 (atom P)) (cyl 0 (atom Q)))",
    "(ucyl 0 (or (atom P) (atom A))) |- (or (ucyl 0 (atom P)) (atom A))",
    "|- (impl (impl (ucyl 0 (atom P)) bot) (cyl 0 (impl (atom P) bot)))",
    "(cyl 0 (impl (atom P) bot)) |- (impl (ucyl 0 (atom P)) bot)",
    "(ucyl 0 (impl (atom P) (atom Q))) (cyl 0 (atom P)) |- (cyl 0 (atom Q))",
    "|- (diag 0 0)",
    "(diag 0 1) |- (diag 1 0)",
    "(diag 0 1) (diag 1 2) |- (diag 0 2)",
    "(diag 0 1) (atom P) |- (subst ((0 1)) (atom P))",
    "|- (cyl 1 (diag 0 1))",
    "|- (or (diag 0 1) (impl (diag 0 1) bot))",
    "(cyl 1 (and (diag 0 1) (subst ((0 1)) (atom P)))) |- (atom P)",
    "(atom P) |- (subst ((0 1)) (atom P))",
    "(impl (atom P) (atom Q)) |- (impl (subst ((0 1)) (atom P)) (subst ((0 1)) (atom Q)))",
]


def sequent(text: str):
    gamma, delta, _ = parse_sequent(text, SIGNATURE)
    return gamma, delta
