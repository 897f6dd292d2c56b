from polyheyt import axioms
from polyheyt.axioms import LAWS, Law, check_axioms
from polyheyt.kripke import KripkeSystem, PropFamily, impl, join

CHAIN = KripkeSystem(["a", "b"], [("a", "b")], {"a": [0], "b": [0, 1]}, 1)


def test_all_laws_hold():
    rep = check_axioms(frames=40, instances=8)
    assert rep.ok, rep.to_json()["failures"][:3]
    assert set(rep.per_law) == {law.name for law in LAWS}


def test_law_groups():
    groups = {law.group for law in LAWS}
    assert {"heyting"} < groups and len(LAWS) >= 40


def test_excluded_middle_is_caught(monkeypatch):
    bad = Law("excluded_middle", "classical", 0, lambda S, x, y, z, i, j, k: (join(x, impl(x, S.bot())), S.top()))
    monkeypatch.setattr(axioms, "LAWS", LAWS + [bad])
    rep = check_axioms(frames=30, instances=8, laws=["excluded_middle"])
    assert not rep.ok and {f["law"] for f in rep.failures} == {"excluded_middle"}
    # the two-world chain is the textbook counterexample
    up = CHAIN.top().values.copy()
    up[0] = False
    x = PropFamily(CHAIN, up)
    assert join(x, impl(x, CHAIN.bot())) != CHAIN.top()


def test_reproducible():
    assert check_axioms(frames=10, instances=4, seed=3).to_json() == check_axioms(frames=10, instances=4, seed=3).to_json()


def test_jobs_do_not_change_the_outcome():
    assert check_axioms(frames=16, instances=4, jobs=2).to_json() == check_axioms(frames=16, instances=4).to_json()
