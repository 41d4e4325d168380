from __future__ import annotations

import itertools

import pytest
from hypothesis import strategies as st

from emtrace import groups
from emtrace.groups import FgAbGroup

ACCEPTANCE_GROUPS = [(2,), (3,), (4,), (6,), (2, 2), (2, 4), (3, 9)]
ACCEPTANCE_COEFFS = [(2,), (3,), (4,), (8,), (9,), (2, 4)]
ACCEPTANCE_PAIRS = list(itertools.product(ACCEPTANCE_GROUPS, ACCEPTANCE_COEFFS))
TWO_TORSION_FREE_GROUPS = [(3,), (9,), (15,), (3, 9)]


def grp(*moduli, free_rank=0) -> FgAbGroup:
    return FgAbGroup.from_moduli(moduli, free_rank)


def pair_id(pair) -> str:
    G, M = pair
    return "G" + "x".join(map(str, G)) + "-M" + "x".join(map(str, M))


@st.composite
def finite_groups(draw, max_factors=3, max_modulus=12):
    moduli = draw(st.lists(st.integers(2, max_modulus), min_size=0, max_size=max_factors))
    return FgAbGroup.from_moduli(moduli)


@st.composite
def fg_groups(draw, max_factors=3, max_modulus=12, max_rank=2):
    moduli = draw(st.lists(st.integers(2, max_modulus), min_size=0, max_size=max_factors))
    return FgAbGroup.from_moduli(moduli, draw(st.integers(0, max_rank)))


@st.composite
def elements(draw, G: FgAbGroup, spread=50):
    raw = [draw(st.integers(-spread, spread)) for _ in range(G.ngens)]
    return groups.reduce(G, raw)


# -- reference checks written directly from the defining identities ------------


def _plus(G, *xs):
    return groups.element_sum(G, xs)


def reference_violations(G, M, h, c) -> list[str]:
    """Slow, dictionary-based check of the pentagon and both hexagon identities.

    ``h`` and ``c`` are plain callables on element tuples; nothing from the
    vectorized verifier is reused.
    """
    E = groups.enumerate_elements(G)
    add, sub = (lambda *v: groups.element_sum(M, v)), (lambda a, b: groups.subtract(M, a, b))
    bad = []
    for g1, g2, g3, g4 in itertools.product(E, repeat=4):
        lhs = add(h(g1, g2, g3), h(g1, _plus(G, g2, g3), g4), h(g2, g3, g4))
        rhs = add(h(_plus(G, g1, g2), g3, g4), h(g1, g2, _plus(G, g3, g4)))
        if lhs != rhs:
            bad.append(f"pentagon {g1} {g2} {g3} {g4}")
    for x, y, z in itertools.product(E, repeat=3):
        lhs = add(h(y, z, x), c(x, _plus(G, y, z)), h(x, y, z))
        rhs = add(c(x, z), h(y, x, z), c(x, y))
        if lhs != rhs:
            bad.append(f"hexagon-1 {x} {y} {z}")
        lhs = sub(sub(c(_plus(G, x, y), z), h(z, x, y)), h(x, y, z))
        rhs = add(sub(c(x, z), h(x, z, y)), c(y, z))
        if lhs != rhs:
            bad.append(f"hexagon-2 {x} {y} {z}")
    return bad


@pytest.fixture
def rng():
    import numpy as np

    return np.random.default_rng(12345)


def pytest_terminal_summary(terminalreporter):
    """One PASS/FAIL line per acceptance criterion, after the usual report."""
    rows = {}
    for outcome in ("passed", "failed", "error"):
        for rep in terminalreporter.stats.get(outcome, []):
            nodeid = getattr(rep, "nodeid", "")
            if "test_acceptance.py::test_criterion_" not in nodeid:
                continue
            if outcome != "error" and rep.when != "call":
                continue
            name = nodeid.split("::")[-1]
            number = int(name.split("_")[2])
            title = " ".join(name.split("_")[3:])
            rows[number] = (outcome == "passed", title, rep.duration)
    if not rows:
        return
    terminalreporter.section("acceptance criteria")
    for number in sorted(rows):
        ok, title, duration = rows[number]
        terminalreporter.write_line(f"criterion {number:>2}: {'PASS' if ok else 'FAIL'}  {title}  ({duration:.1f}s)")
