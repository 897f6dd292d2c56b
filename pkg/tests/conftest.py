import os
import sys

import numpy as np
import pytest
from hypothesis import HealthCheck, settings
from hypothesis import strategies as st

sys.path.insert(0, os.path.dirname(__file__))

from polyheyt.kripke import Model, random_system, random_valuation  # noqa: E402
from polyheyt.syntax import (  # noqa: E402
    BOT, TOP, And, Atom, Cyl, Diag, Impl, Or, Subst, Transformation, UCyl,
)

settings.register_profile("default", deadline=None, suppress_health_check=[HealthCheck.too_slow])
settings.load_profile("default")

# atom name -> support
ATOMS = {"P": (0,), "Q": (1,), "R": (), "S": (0, 1)}
COORDS = 3  # formulas use coordinates 0..2


def atom(name):
    return Atom(name, ATOMS[name])


def transformations(coords=COORDS):
    pairs = st.dictionaries(st.integers(0, coords - 1), st.integers(0, coords - 1), max_size=2)
    return pairs.map(Transformation.from_mapping)


def formulas(coords=COORDS, atoms=tuple(ATOMS), max_leaves=8):
    idx = st.integers(0, coords - 1)
    leaves = st.one_of(
        st.sampled_from([atom(a) for a in atoms]),
        st.just(TOP), st.just(BOT),
        st.builds(Diag, idx, idx),
    )

    def extend(children):
        return st.one_of(
            st.builds(And, children, children),
            st.builds(Or, children, children),
            st.builds(Impl, children, children),
            st.builds(Cyl, idx, children),
            st.builds(UCyl, idx, children),
            st.builds(Subst, transformations(coords), children),
        )

    return st.recursive(leaves, extend, max_leaves=max_leaves)


def random_models(n, dim, seed=0, max_worlds=3, max_elems=2, atoms=None):
    rng = np.random.default_rng(seed)
    arities = {k: len(v) for k, v in (atoms or ATOMS).items()}
    out = []
    for _ in range(n):
        S = random_system(rng, max_worlds, max_elems, dim)
        out.append(Model(S, random_valuation(S, rng, arities)))
    return out


@pytest.fixture(scope="session")
def models5():
    return random_models(12, 5, seed=7)


def pytest_terminal_summary(terminalreporter):
    mod = sys.modules.get("test_acceptance")
    results = getattr(mod, "RESULTS", None)
    if not results:
        return
    terminalreporter.section("acceptance criteria")
    for n in sorted(results):
        terminalreporter.write_line(results[n])
