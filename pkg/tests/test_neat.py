import numpy as np
import pytest
from hypothesis import assume, given, settings
from hypothesis import strategies as st

from conftest import formulas
from oracle import Frame
from polyheyt.errors import StructuralError, ValidationError
from polyheyt.kripke import (
    KripkeSystem, Model, Valuation, cyl, enumerate_families, enumerate_systems, random_system, random_valuation,
)
from polyheyt.neat import (
    DimensionWindow, NeatEmbedding, dilate_frame, family_pairs, neat_embed, neat_reduct,
    product_neat_commute_check, roundtrip, s_closure_check,
)
from polyheyt.parse import parse_formula
from polyheyt.syntax import Signature, all_indices

CHAIN = KripkeSystem(["a", "b"], [("a", "b")], {"a": [0], "b": [0, 1]}, 2)


class TestWindow:
    def test_fresh(self):
        w = DimensionWindow([0, 2], 4)
        assert w.fresh == (1, 3) and w.genuine and w.position(2) == 1

    def test_outside(self):
        with pytest.raises(ValidationError):
            DimensionWindow([5], 3)

    def test_degenerate(self):
        assert not DimensionWindow(range(3), 3).genuine


class TestReduct:
    def test_membership(self):
        nr = neat_reduct(CHAIN, [0])
        assert nr.contains(CHAIN.top())
        assert not nr.contains(CHAIN.diag(0, 1))
        assert nr.contains(cyl(1, CHAIN.diag(0, 1)))

    def test_restrict_outside_window(self):
        with pytest.raises(ValidationError):
            neat_reduct(CHAIN, [0]).restrict(CHAIN.diag(0, 1))

    def test_isomorphism(self):
        nr = neat_reduct(CHAIN, [1])
        rep = nr.check_isomorphism(enumerate_families(nr.system), enumerate_families(CHAIN))
        assert rep["ok"] and rep["right_checked"] == rep["left_checked"]

    def test_s_closure(self):
        S = list(enumerate_systems(2, 2, 2))[-1]
        assert s_closure_check(neat_reduct(S, [0]), enumerate_families(S)[:40])["ok"]


class TestEmbedding:
    @pytest.mark.parametrize("a, b", [(1, 2), (2, 3)])
    def test_exhaustive_small_systems(self, a, b):
        for K in enumerate_systems(2, 2, a):
            rep = neat_embed(K, dilate_frame(K, b - a)).check(enumerate_families(K))
            assert rep.ok, rep.to_json()

    def test_nonstandard_window(self):
        K = CHAIN.with_dim(1)
        rep = roundtrip(K, 2, alpha=[2])
        assert rep["ok"] and rep["window"] == {"alpha": [2], "beta": 3}

    def test_mismatched_frames(self):
        other = KripkeSystem(["a"], [], {"a": [0]}, 2)
        with pytest.raises(StructuralError):
            NeatEmbedding(CHAIN.with_dim(1), other)

    def test_wrong_psi_is_detected(self):
        # mutation: read the retained coordinates in the wrong order
        K, M = CHAIN, dilate_frame(CHAIN, 1)
        emb = NeatEmbedding(K, M)
        emb._w.proj = np.ravel_multi_index(M.coords[[1, 0]], K.shape)
        assert not emb.check(enumerate_families(K)).ok

    def test_lift_matches_oracle_semantics(self):
        # [DERIVED] Psi(value in K) equals the value of the same formula in the dilated frame
        raw = {"P": {"a": [(0,)], "b": [(0,), (1,)]}, "S": {"a": [], "b": [(1, 0)]}}
        K, M = CHAIN, dilate_frame(CHAIN, 2)
        val = Valuation(K, raw)
        emb = neat_embed(K, M)
        sig = Signature.make({"P": [0], "S": [0, 1]}, n_dim=2)
        for text in ["(atom P)", "(cyl 0 (atom S))", "(impl (atom P) (diag 0 1))", "(ucyl 1 (atom S))"]:
            f = parse_formula(text, sig)
            small, big = Frame.of(K, val).table(f), Frame.of(M, val).table(f)
            for w in K.worlds:
                assert big[w] == {y for y in Frame.of(M).assignments(w) if y[:2] in small[w]}
            assert emb(Model(K, raw).eval(f)) == Model(M, raw).eval(f)


@settings(max_examples=40)
@given(formulas(coords=2, atoms=("P", "S"), max_leaves=5), st.integers(0, 3))
def test_psi_commutes_with_evaluation(f, k):
    rng = np.random.default_rng(k)
    K = random_system(rng, 2, 2, 2)
    M = dilate_frame(K, 1)
    v = random_valuation(K, rng, {"P": 1, "S": 2})
    raw = {name: {w: sorted(rel[k]) for k, w in enumerate(K.worlds)} for name, rel in v.relations.items()}
    assume(max(all_indices(f), default=0) < 2)
    assert neat_embed(K, M)(Model(K, raw).eval(f)) == Model(M, raw).eval(f)


class TestDilation:
    def test_adds_coordinates(self):
        assert dilate_frame(CHAIN, 3).dim == 5

    def test_block_must_follow(self):
        with pytest.raises(ValidationError):
            dilate_frame(CHAIN, [4])

    def test_roundtrip(self):
        for K in enumerate_systems(2, 2, 1):
            assert roundtrip(K, 2)["ok"]


class TestProducts:
    def test_pairs(self):
        systems = list(enumerate_systems(2, 2, 2))
        for B1, B2 in list(family_pairs(systems))[:30]:
            rep = product_neat_commute_check([B1, B2], [0])
            assert rep.ok and rep.left_size == rep.right_size

    def test_empty_family(self):
        rep = product_neat_commute_check([], [0])
        assert rep.ok and rep.product_size == 1

    def test_mixed_dimensions(self):
        with pytest.raises(StructuralError):
            product_neat_commute_check([CHAIN, CHAIN.with_dim(1)], [0])
