import pytest
from hypothesis import assume, given, settings
from hypothesis import strategies as st

from conftest import formulas, random_models
from oracle import Frame, small_frames
from polyheyt.errors import ScopeError
from polyheyt.fragments import fragment
from polyheyt.kripke import KripkeSystem, Model
from polyheyt.prover import (
    EXHAUSTED, PROVED, REFUTED, ProofResult, Scope, TheoryPair, derives, find_countermodel, is_complete,
    is_consistent, is_inseparable, is_saturated, separates,
)
from polyheyt.syntax import BOT, TOP, And, Atom, Cyl, Diag, Impl, Or, Subst, UCyl, all_indices, single

P, Q, R = Atom("P", ()), Atom("Q", ()), Atom("R", ())
P0 = Atom("P", (0,))


class TestDerives:
    def test_reflexive(self):
        assert derives([P], [P]).status == PROVED

    def test_diagonal_transitivity(self):
        r = derives([Diag(0, 1), Diag(1, 2)], [Diag(0, 2)])
        assert r.proved
        assert r.to_json()["trace"]["rule"]

    def test_distinct_atoms_refuted(self):
        r = derives([P], [Q])
        assert r.status == REFUTED
        assert r.witness.recheck([P], [Q])
        # the two-valued single world frame with P true and Q false
        F = Frame(["w"], {("w", "w")}, {"w": [0]}, 0, {"P": {"w": {()}}, "Q": {"w": set()}})
        assert F.force("w", P, ()) and not F.force("w", Q, ())
        cm = r.witness
        G = Frame.of(cm.system, cm.valuation)
        assert G.force(cm.world, P, cm.assignment) and not G.force(cm.world, Q, cm.assignment)

    def test_excluded_middle_not_proved(self):
        r = derives([], [Or(P, Impl(P, BOT))], depth=4)
        assert r.refuted

    def test_double_negation_elimination_refuted(self):
        from polyheyt.syntax import neg
        r = derives([neg(neg(P))], [P])
        assert r.refuted and r.witness.recheck([neg(neg(P))], [P])

    def test_quantifier_exchange(self):
        f = Cyl(1, UCyl(0, Atom("S", (0, 1))))
        g = UCyl(0, Cyl(1, Atom("S", (0, 1))))
        assert derives([f], [g]).proved
        assert not derives([g], [f]).proved

    def test_leibniz(self):
        f = And(Diag(0, 1), P0)
        assert derives([f], [Subst(single(0, 1), P0)]).proved

    def test_exhausted_is_not_a_verdict(self):
        r = derives([P], [Q], depth=0, countermodels=False)
        assert r.status == EXHAUSTED and r.witness is None
        assert "trace" not in r.to_json() and "countermodel" not in r.to_json()

    def test_status_exclusive(self):
        with pytest.raises(ValueError):
            ProofResult(EXHAUSTED, object())
        with pytest.raises(ValueError):
            ProofResult("maybe")

    def test_deterministic(self):
        a = derives([Diag(0, 1), Diag(1, 2)], [Diag(0, 2)]).to_json()
        b = derives([Diag(0, 1), Diag(1, 2)], [Diag(0, 2)]).to_json()
        assert a == b


class TestTheoryPairs:
    def test_inconsistent(self):
        assert is_consistent(TheoryPair([P], [P])).proved

    def test_consistent(self):
        assert is_consistent(TheoryPair([P], [Q])).refuted

    def test_empty_pair(self):
        assert is_consistent(TheoryPair([], [])).refuted

    def test_scope_checked(self):
        with pytest.raises(ScopeError):
            TheoryPair([P], [Q], scope=Scope({"P"}))

    FRAG = [P, Q, And(P, Q)]

    def test_complete(self):
        assert is_complete(TheoryPair([P, Q, And(P, Q)], []), self.FRAG)

    def test_missing_element(self):
        assert not is_complete(TheoryPair([P], [Q]), self.FRAG)

    def test_complete_but_inconsistent(self):
        t = TheoryPair([P, And(P, Q)], [Q])
        # oracle: every frame forcing P and P&Q forces Q, so the pair is inconsistent
        assert all(F.entails([P, And(P, Q)], [Q]) for F in small_frames(0, {"P": 0, "Q": 0}))
        assert not is_complete(t, self.FRAG)


class TestSaturated:
    def test_witness_present(self):
        assert is_saturated([Cyl(0, P0), Subst(single(0, 5), P0)])

    def test_witness_absent(self):
        assert not is_saturated([Cyl(0, P0)])

    def test_disjunction(self):
        assert is_saturated([Or(P, Q), P])
        assert not is_saturated([Or(P, Q)])


class TestSeparation:
    def test_top_separates(self):
        assert separates(TOP, [P], [Impl(TOP, Q)], [Q]).proved

    def test_scope_error(self):
        with pytest.raises(ScopeError):
            separates(P, [P], [], [P], common=Scope({"Q"}))

    def test_diagonal_separator(self):
        gamma, lam = [And(Diag(0, 1), P)], [Diag(0, 1)]
        assert separates(Diag(0, 1), gamma, [], lam).proved
        for F in small_frames(2, {"P": 0}):
            assert F.entails(gamma, [Diag(0, 1)]) and F.entails([Diag(0, 1)], lam)

    def test_separable(self):
        assert not is_inseparable([P], [], [P], [P], common=Scope({"P"}))

    def test_disjoint_atoms_inseparable(self):
        frag = fragment([], [], 5, diagonals=False, quantifiers=False)
        assert is_inseparable([P], [], [Q], frag, depth=4)
        # oracle: no fragment member is both implied by P and strong enough to give Q
        frames = list(small_frames(0, {"P": 0, "Q": 0}))
        for a in frag:
            assert not all(F.entails([P], [a]) and F.entails([a], [Q]) for F in frames)

    def test_bot_conclusion(self):
        # every consistent candidate leaves theta + a -> bot unprovable
        frag = [f for f in fragment([P], [], 3) if f != BOT]
        assert is_inseparable([], [], [BOT], frag, depth=4)


SMALL = formulas(coords=2, atoms=("P", "R"), max_leaves=4)
MODELS = random_models(30, 4, seed=21)


def _valid(gamma, delta):
    for m in MODELS:
        lhs = m.system.top()
        for g in gamma:
            lhs = lhs & m.eval(g)
        rhs = m.system.bot()
        for d in delta:
            rhs = rhs | m.eval(d)
        if not lhs <= rhs:
            return False
    return True


@settings(max_examples=60)
@given(st.lists(SMALL, max_size=2), st.lists(SMALL, min_size=1, max_size=2))
def test_soundness_on_random_models(gamma, delta):
    r = derives(gamma, delta, depth=4, countermodels=False)
    if r.proved:
        assume(max([0, *(i for f in gamma + delta for i in all_indices(f))]) < 4)
        assert _valid(gamma, delta)


@settings(max_examples=40)
@given(st.lists(SMALL, max_size=2), st.lists(SMALL, min_size=1, max_size=2), SMALL, SMALL)
def test_monotone_in_both_sides(gamma, delta, g, d):
    r = derives(gamma, delta, depth=3, countermodels=False)
    assume(r.proved)
    assert derives(gamma + [g], delta + [d], depth=3, countermodels=False).proved


@settings(max_examples=40)
@given(st.lists(SMALL, max_size=2), st.lists(SMALL, min_size=1, max_size=2))
def test_countermodels_recheck(gamma, delta):
    cm = find_countermodel(gamma, delta, max_models=300)
    if cm is not None:
        assert cm.recheck(gamma, delta)
        model = Model(cm.system, cm.valuation)
        assert isinstance(model.system, KripkeSystem)


def test_three_world_countermodel():
    # [DERIVED] the V-shaped frame: A everywhere above the root, B on one branch, C on the other
    A, B, C = Atom("A", ()), Atom("B", ()), Atom("C", ())
    gamma, delta = [Impl(A, Or(B, C))], [Or(Impl(A, B), Impl(A, C))]
    r = derives(gamma, delta)
    assert r.refuted and len(r.witness.system.worlds) == 3
    F = Frame.of(r.witness.system, r.witness.valuation)
    assert F.force(r.witness.world, gamma[0], ()) and not F.force(r.witness.world, delta[0], ())
