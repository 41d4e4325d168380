import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from emtrace import cocycles, forms, groups
from emtrace.cocycles import Cochain2Table, StructuredCocycle, TabulatedCocycle
from emtrace.errors import BudgetExceeded, InfiniteGroupError, InvalidCoefficientError
from emtrace.forms import QuadraticFormParams

from conftest import grp, reference_violations


def test_base_cyclic_z2_z4():
    sc = cocycles.base_cyclic(2, (1,), grp(4))
    assert cocycles.eval_h(sc, (1,), (1,), (1,)) == (2,)
    assert cocycles.eval_c(sc, (1,), (1,)) == (1,)
    tc = cocycles.tabulate(sc)
    nonzero = np.argwhere(tc.h.any(axis=-1))
    assert nonzero.tolist() == [[1, 1, 1]]
    assert tc.h_at((1,), (1,), (1,)) == (2,)


def test_base_cyclic_z3_z3():
    sc = cocycles.base_cyclic(3, (1,), grp(3))
    tc = cocycles.tabulate(sc)
    assert not tc.h.any()
    assert tc.c_at((2,), (2,)) == (1,)


def test_base_cyclic_zero_and_constraint():
    assert cocycles.tabulate(cocycles.base_cyclic(4, (0,), grp(8))) == TabulatedCocycle.zero(grp(4), grp(8))
    with pytest.raises(InvalidCoefficientError):
        cocycles.base_cyclic(2, (1,), grp(3))


def test_from_quad_examples():
    assert cocycles.tabulate(cocycles.from_quad(QuadraticFormParams.zero(grp(2, 4), grp(8)))) == TabulatedCocycle.zero(
        grp(2, 4), grp(8)
    )
    q = QuadraticFormParams(grp(2), grp(4), diag_torsion=[(1,)])
    assert cocycles.from_quad(q) == cocycles.base_cyclic(2, (1,), grp(4))
    q = QuadraticFormParams(grp(2, 2), grp(2), cross_torsion=[(1,)])
    tc = cocycles.tabulate(cocycles.from_quad(q))
    assert not tc.h.any()
    for x in groups.iter_elements(q.domain):
        for y in groups.iter_elements(q.domain):
            assert tc.c_at(x, y) == ((x[0] * y[1]) % 2,)


def test_from_quad_rejects_invalid():
    with pytest.raises(InvalidCoefficientError):
        cocycles.from_quad(QuadraticFormParams(grp(2), grp(3), diag_torsion=[(1,)]))


def test_structured_cocycle_checks_carry():
    with pytest.raises(InvalidCoefficientError):
        StructuredCocycle(grp(2), grp(4), [(0,)], [[(1,)]])


@pytest.mark.parametrize(
    "G, M", [(grp(2), grp(4)), (grp(4), grp(8)), (grp(2, 2), grp(4)), (grp(3), grp(9)), (grp(6), grp(2, 4))]
)
def test_from_quad_against_reference_checker(G, M):
    """Closed-form evaluators, dense tables and verify all agree with the slow reference."""
    for q in forms.enumerate_quads(G, M):
        sc = cocycles.from_quad(q)
        h = lambda x, y, z: cocycles.eval_h(sc, x, y, z)  # noqa: E731
        c = lambda x, y: cocycles.eval_c(sc, x, y)  # noqa: E731
        assert reference_violations(G, M, h, c) == []
        tc = cocycles.tabulate(sc)
        for x in groups.iter_elements(G):
            assert tc.c_at(x, x) == forms.eval_quad(q, x)
            for y in groups.iter_elements(G):
                assert tc.c_at(x, y) == c(x, y)
                for z in groups.iter_elements(G):
                    assert tc.h_at(x, y, z) == h(x, y, z)
        assert cocycles.verify(tc).ok


def test_verify_substitution_example():
    # hexagon-1 at (1,1,1) for the carry cocycle on Z/2 with values in Z/4
    tc = cocycles.tabulate(cocycles.base_cyclic(2, (1,), grp(4)))
    h, c = tc.h_at, tc.c_at
    one = (1,)
    lhs = (h(one, one, one)[0] + c(one, (0,))[0] + h(one, one, one)[0]) % 4
    rhs = (c(one, one)[0] + h(one, one, one)[0] + c(one, one)[0]) % 4
    assert lhs == rhs == 0
    assert cocycles.verify(tc).ok


@pytest.mark.parametrize("slot", [(1, 1, 1), (0, 1, 1), (1, 0, 0)])
def test_verify_detects_corruption(slot):
    G, M = grp(2), grp(4)
    tc = cocycles.tabulate(cocycles.base_cyclic(2, (1,), M))
    h = tc.h.copy()
    h[slot] = (h[slot] + 1) % 4
    bad = TabulatedCocycle(G, M, h, tc.c)
    report = cocycles.verify(bad)
    assert not report.ok and report.violations
    ref = reference_violations(G, M, bad.h_at, bad.c_at)
    assert sum(report.counts.values()) == len(ref)


@settings(max_examples=40, deadline=None)
@given(st.data())
def test_verify_counts_match_reference_on_random_tables(data):
    G = data.draw(st.sampled_from([grp(2), grp(3), grp(2, 2)]))
    M = data.draw(st.sampled_from([grp(2), grp(3), grp(4)]))
    rng = np.random.default_rng(data.draw(st.integers(0, 2**32 - 1)))
    N = G.order
    tc = TabulatedCocycle(G, M, rng.integers(0, M.order, (N, N, N, 1)), rng.integers(0, M.order, (N, N, 1)))
    report = cocycles.verify(tc)
    assert sum(report.counts.values()) == len(reference_violations(G, M, tc.h_at, tc.c_at))


def test_verify_budget_and_infinite():
    tc = cocycles.tabulate(cocycles.from_quad(QuadraticFormParams.zero(grp(3, 9), grp(3))))
    with pytest.raises(BudgetExceeded):
        cocycles.verify(tc, max_domain=10)
    assert cocycles.verify(tc, max_domain=None, threads=4).ok
    with pytest.raises(InfiniteGroupError):
        cocycles.tabulate(cocycles.from_quad(QuadraticFormParams.zero(grp(free_rank=1), grp(3))))


def test_trace_examples():
    assert cocycles.trace(TabulatedCocycle.zero(grp(2, 2), grp(4))).values == ((0,),) * 4
    q = QuadraticFormParams(grp(2, 4, free_rank=1), grp(8), diag_torsion=[(4,), (1,)], mixed=[(4,), (6,)], diag_free=[(5,)])
    assert cocycles.trace(cocycles.from_quad(q)) == q


def test_coboundary_examples():
    G, M = grp(2), grp(2)
    assert cocycles.coboundary(Cochain2Table.zero(G, M)) == TabulatedCocycle.zero(G, M)
    k = Cochain2Table(G, M, [[[0], [0]], [[0], [1]]])  # k(x, y) = x y
    assert cocycles.coboundary(k) == TabulatedCocycle.zero(G, M)


@pytest.mark.parametrize("G, M", [(grp(2), grp(4)), (grp(3), grp(3)), (grp(2, 2), grp(2)), (grp(4), grp(2, 4))])
def test_coboundary_against_reference(G, M, rng):
    for _ in range(5):
        k = cocycles.random_cochain(G, M, rng)
        tc = cocycles.coboundary(k)
        assert reference_violations(G, M, tc.h_at, tc.c_at) == []
        assert not np.asarray(cocycles.trace(tc).values).any()


def test_opposite_antisymmetrization_fails_the_hexagons(rng):
    """Pins the sign convention: ``(delta k, k(x,y) - k(y,x))`` is generally not a cocycle."""
    G, M = grp(3), grp(3)
    k = cocycles.random_cochain(G, M, rng)
    tc = cocycles.coboundary(k)
    flipped = TabulatedCocycle(G, M, tc.h, -tc.c)
    assert cocycles.verify(tc).ok
    report = cocycles.verify(flipped)
    assert report.counts["pentagon"] == 0
    assert report.counts["hexagon-1"] > 0 and report.counts["hexagon-2"] > 0


def test_subtract_and_add(rng):
    G, M = grp(2, 2), grp(4)
    quads = forms.enumerate_quads(G, M)
    a = cocycles.tabulate(cocycles.from_quad(quads[5]))
    b = cocycles.tabulate(cocycles.from_quad(quads[17]))
    zero = TabulatedCocycle.zero(G, M)
    assert cocycles.subtract(a, a) == zero
    assert cocycles.subtract(a, zero) == a
    assert cocycles.add(cocycles.subtract(a, b), b) == a
    assert cocycles.verify(cocycles.subtract(a, b)).ok


def test_normal_form():
    tc = cocycles.tabulate(cocycles.base_cyclic(2, (1,), grp(4)))
    assert cocycles.normal_form_check(tc).ok
    one = (1,)
    assert tc.h_at(one, one, one) == groups.subtract(
        grp(4), groups.add(grp(4), tc.c_at(one, one), tc.c_at(one, one)), tc.c_at(one, (0,))
    )


def test_generic_coboundary_is_not_normal_form(rng):
    G, M = grp(3), grp(3)
    failures = sum(not cocycles.normal_form_check(cocycles.coboundary(cocycles.random_cochain(G, M, rng))).ok for _ in range(10))
    assert failures >= 9


def test_s_identity_on_corrupted_c():
    tc = cocycles.tabulate(cocycles.base_cyclic(4, (1,), grp(8)))
    assert cocycles.s_identity_check(tc).ok
    c = tc.c.copy()
    c[1, 2] += 1
    assert not cocycles.s_identity_check(TabulatedCocycle(tc.domain, tc.coeffs, tc.h, c)).ok


def test_free_domain_closed_form():
    q = QuadraticFormParams(grp(2, free_rank=1), grp(4), diag_torsion=[(1,)], diag_free=[(3,)], mixed=[(2,)])
    sc = cocycles.from_quad(q)
    rng = np.random.default_rng(7)
    G, M = q.domain, q.coeffs
    for _ in range(200):
        x, y, z = (groups.reduce(G, rng.integers(-6, 7, size=2)) for _ in range(3))
        h = lambda *a: cocycles.eval_h(sc, *a)  # noqa: E731
        c = lambda *a: cocycles.eval_c(sc, *a)  # noqa: E731
        lhs = groups.element_sum(M, [h(y, z, x), c(x, groups.add(G, y, z)), h(x, y, z)])
        rhs = groups.element_sum(M, [c(x, z), h(y, x, z), c(x, y)])
        assert lhs == rhs
        assert c(x, x) == forms.eval_quad(q, x)


@pytest.mark.parametrize("G, M", [(grp(2), grp(4)), (grp(3), grp(9)), (grp(2, 2), grp(2, 4))])
def test_verify_batch_matches_verify(G, M, rng):
    tables = [cocycles.coboundary(cocycles.random_cochain(G, M, rng)) for _ in range(6)]
    tables += [cocycles.tabulate(cocycles.from_quad(q)) for q in forms.enumerate_quads(G, M)[:4]]
    N = G.order
    tables += [
        TabulatedCocycle(G, M, rng.integers(0, 9, (N, N, N, M.ngens)), rng.integers(0, 9, (N, N, M.ngens)))
        for _ in range(4)
    ]
    counts = cocycles.verify_batch(tables)
    for tc, row in zip(tables, counts):
        rep = cocycles.verify(tc)
        assert row.tolist() == [rep.counts["pentagon"], rep.counts["hexagon-1"], rep.counts["hexagon-2"]]
