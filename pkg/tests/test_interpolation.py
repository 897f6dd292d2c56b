import pytest

from oracle import small_frames
from polyheyt.corpus import INTERPOLATION, SIGNATURE, formula as F
from polyheyt.errors import PreconditionError
from polyheyt.interpolation import common_scope, interpolate, verify_interpolant
from polyheyt.parse import print_formula
from polyheyt.prover import REFUTED
from polyheyt.syntax import BOT, TOP, atoms_of, dim_set

A, B = F("(atom A)"), F("(atom B)")


def _item(name):
    return next(i for i in INTERPOLATION if i.name == name).parsed()


def _oracle_between(phi, a, psi, atoms):
    return all(Fr.entails([phi], [a]) and Fr.entails([a], [psi]) for Fr in small_frames(0, atoms))


class TestExamples:
    def test_conjunction_disjunction(self):
        phi, psi = _item("conj-disj")
        r = interpolate(phi, psi, signature=SIGNATURE)
        assert r.interpolant == A
        assert _oracle_between(phi, A, psi, {"A": 0, "B": 0, "C": 0})

    def test_bot_premise(self):
        assert interpolate(BOT, A, signature=SIGNATURE).interpolant == BOT

    def test_top_conclusion(self):
        assert interpolate(A, TOP, signature=SIGNATURE).interpolant == TOP

    def test_chain(self):
        phi, psi = _item("chain")
        r = interpolate(phi, psi, signature=SIGNATURE)
        assert r.found and atoms_of(r.interpolant) <= {"A", "C"}
        assert verify_interpolant(phi, r.interpolant, psi)

    def test_quantified(self):
        phi, psi = _item("exists-transfer")
        r = interpolate(phi, psi, signature=SIGNATURE)
        assert r.found and atoms_of(r.interpolant) <= {"P", "Q"}
        assert dim_set(r.interpolant) <= common_scope(phi, psi).dims


class TestVerify:
    def test_scope_violation(self):
        rep = verify_interpolant(A, B, F("(or (atom B) (atom A))"))
        assert not rep and rep.reason == "scope" and rep.atoms_outside == ["B"]

    def test_dimension_violation(self):
        rep = verify_interpolant(F("(atom P)"), F("(subst ((0 1)) (atom P))"), F("(cyl 0 (atom P))"))
        assert rep.reason == "scope" and rep.dims_outside == [1]

    def test_proof_failure(self):
        phi, psi = _item("conj-disj")
        rep = verify_interpolant(phi, TOP, psi)
        assert rep.reason == "proof" and rep.to_json()["interpolant_to_conclusion"] != "proved"

    def test_good(self):
        phi, psi = _item("conj-disj")
        rep = verify_interpolant(phi, A, psi)
        assert rep.ok and rep.to_json()["premise_to_interpolant"] == "proved"


class TestFailure:
    def test_not_an_implication(self):
        with pytest.raises(PreconditionError) as info:
            interpolate(A, B, signature=SIGNATURE)
        assert info.value.status == REFUTED

    def test_bound_too_small(self):
        phi, psi = _item("chain")
        r = interpolate(phi, psi, bound=2, signature=SIGNATURE)
        assert not r.found
        j = r.to_json()
        assert j["failure"] == "fragment exhausted" and j["bound"] == 2

    def test_candidate_cap(self):
        phi, psi = _item("chain")
        r = interpolate(phi, psi, signature=SIGNATURE, max_candidates=1)
        assert not r.found and r.stats()["enumerated"] == 1


def test_deterministic():
    phi, psi = _item("distribute")
    a = interpolate(phi, psi, signature=SIGNATURE).to_json()
    b = interpolate(phi, psi, signature=SIGNATURE).to_json()
    assert a == b


def test_minimal_in_enumeration_order():
    phi, psi = _item("mp")
    r = interpolate(phi, psi, signature=SIGNATURE)
    assert print_formula(r.interpolant) == "(atom B)"
