import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from conftest import ATOMS, formulas
from polyheyt.corpus import INTERPOLATION, SEEDS, SEQUENTS, SIGNATURE
from polyheyt.errors import ParseError
from polyheyt.parse import parse_formula, parse_sequent, print_formula, print_sequent
from polyheyt.syntax import Atom, Cyl, Diag, Signature, Subst, Transformation, single

SIG = Signature.make(ATOMS, n_dim=3, n_spare=8)


def test_diag():
    assert parse_formula("(diag 0 1)") == Diag(0, 1)


def test_cyl():
    assert parse_formula("(cyl 0 (atom P))") == Cyl(0, Atom("P", ()))


def test_subst():
    f = parse_formula("(subst ((0 5)) (atom P))")
    assert f == Subst(single(0, 5), Atom("P", ()))
    assert f.tau(0) == 5 and f.tau(1) == 1


def test_signature_supplies_support():
    assert parse_formula("(atom S)", SIG) == Atom("S", (0, 1))


def test_shift_base():
    f = parse_formula("(subst ((0 3)) (shift 2) (atom P))")
    assert f.tau == Transformation(2, ((0, 3),))
    assert parse_formula(print_formula(f)) == f


def test_header():
    f = parse_formula('{"atoms": {"P": [1]}} (atom P)')
    assert f == Atom("P", (1,))


def test_sequent():
    gamma, delta, _ = parse_sequent("(diag 0 1) (diag 1 2) |- (diag 0 2)")
    assert gamma == [Diag(0, 1), Diag(1, 2)] and delta == [Diag(0, 2)]
    assert print_sequent(gamma, delta) == "(diag 0 1) (diag 1 2) |- (diag 0 2)"


def test_bare_formula_is_right_side():
    gamma, delta, _ = parse_sequent("(atom P)")
    assert gamma == [] and len(delta) == 1


@pytest.mark.parametrize("text, offset", [
    ("(and (atom P)", 0),
    ("(atom P))", 8),
    ("(frob 1 2)", 1),
    ("(diag 0)", 0),
    ("(diag x 1)", 6),
])
def test_syntax_errors_carry_position(text, offset):
    with pytest.raises(ParseError) as info:
        parse_formula(text)
    assert info.value.position == offset


def test_unknown_atom():
    with pytest.raises(ParseError, match="unknown atom"):
        parse_formula("(atom Z)", SIG)


def test_index_out_of_budget():
    with pytest.raises(ParseError, match="outside budget"):
        parse_formula("(diag 0 40)", SIG)


def test_two_turnstiles():
    with pytest.raises(ParseError):
        parse_sequent("|- (atom P) |-")


@settings(max_examples=500)
@given(formulas())
def test_print_then_parse(f):
    assert parse_formula(print_formula(f), SIG) == f


@given(formulas(), st.sampled_from([" ", "  ", "\n", "\t "]))
def test_parse_then_print_up_to_whitespace(f, ws):
    text = print_formula(f)
    spaced = text.replace(" ", ws).replace("(", "(" + ws)
    assert print_formula(parse_formula(spaced, SIG)) == text


def test_corpus_roundtrips():
    texts = [t for s in SEEDS for t in s.gamma + s.theta + s.lam]
    texts += [t for item in INTERPOLATION for t in (item.phi, item.psi)]
    for t in texts:
        f = parse_formula(t, SIGNATURE)
        assert print_formula(parse_formula(print_formula(f), SIGNATURE)) == print_formula(f)
    for t in SEQUENTS:
        g, d, _ = parse_sequent(t, SIGNATURE)
        assert parse_sequent(print_sequent(g, d), SIGNATURE)[:2] == (g, d)
