"""2-abelian 3-cocycles ``(h, c)``: closed forms, dense tables and verification.

A pair ``(h, c)`` with ``h: G^3 -> M`` and ``c: G^2 -> M`` is a 2-abelian
3-cocycle when ``h`` satisfies the pentagon (standard 3-cocycle) identity

    h(g1,g2,g3) + h(g1,g2+g3,g4) + h(g2,g3,g4) = h(g1+g2,g3,g4) + h(g1,g2,g3+g4)

and ``c`` satisfies the two hexagon identities

    h(y,z,x) + c(x,y+z) + h(x,y,z) = c(x,z) + h(y,x,z) + c(x,y)
   -h(z,x,y) + c(x+y,z) - h(x,y,z) = c(x,z) - h(x,z,y) + c(y,z).

:func:`from_quad` builds, for every quadratic form ``q``, an explicit cocycle
with trace ``q``: ``c`` is the upper-triangular coefficient matrix of ``q``
and ``h`` is a sum of per-factor carry cocycles ``x * n * m`` (charged when
``y + z`` wraps around ``n``).  Dense tables are indexed by
:func:`emtrace.groups.enumerate_elements` order with M-coordinates on the
last axis.
"""

from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from emtrace import forms, groups
from emtrace.errors import (
    BudgetExceeded,
    InfiniteGroupError,
    InvalidCoefficientError,
    MismatchError,
)
from emtrace.forms import QuadraticFormParams, QuadraticFormTable
from emtrace.groups import Element, FgAbGroup

DEFAULT_MAX_DOMAIN = 64


@dataclass(frozen=True)
class StructuredCocycle:
    """Closed-form cocycle: carry coefficients ``mu_i`` plus a ``c`` coefficient matrix.

    ``h(g, g', g'') = sum_i a_i [a'_i + a''_i >= n_i] mu_i`` and
    ``c(g, g') = sum_{a,b} g_a g'_b C[a][b]`` on canonical representatives.
    """

    domain: FgAbGroup
    coeffs: FgAbGroup
    carry: tuple[Element, ...]
    c_matrix: tuple[tuple[Element, ...], ...]

    def __post_init__(self):
        G, M = self.domain, self.coeffs
        k = len(G.torsion)
        carry = forms._reduce_all(M, self.carry, k, "carry")
        rows = tuple(self.c_matrix)
        if len(rows) != G.ngens:
            raise InvalidCoefficientError([f"c_matrix needs {G.ngens} rows"])
        C = tuple(forms._reduce_all(M, row, G.ngens, "c_matrix row") for row in rows)
        object.__setattr__(self, "carry", carry)
        object.__setattr__(self, "c_matrix", C)
        bad = []
        for i, n in enumerate(G.torsion):
            if not groups.is_killed_by(M, carry[i], n):
                bad.append(f"mu{i + 1}={list(carry[i])} not in M[{n}]")
            if groups.scale(M, n, C[i][i]) != carry[i]:
                bad.append(f"mu{i + 1} != n{i + 1} * C[{i + 1}][{i + 1}]")
            if not groups.is_killed_by(M, C[i][i], groups.gcd_2n_n2(n)):
                bad.append(f"C[{i + 1}][{i + 1}] not in M[{groups.gcd_2n_n2(n)}]")
        for a in range(G.ngens):
            for b in range(G.ngens):
                d = math.gcd(G.annihilator(a), G.annihilator(b))
                if a != b and d and not groups.is_killed_by(M, C[a][b], d):
                    bad.append(f"C[{a + 1}][{b + 1}]={list(C[a][b])} not in M[{d}]")
        if bad:
            raise InvalidCoefficientError(bad)

    @classmethod
    def zero(cls, domain: FgAbGroup, coeffs: FgAbGroup) -> "StructuredCocycle":
        s = domain.ngens
        return cls(domain, coeffs, [coeffs.zero] * len(domain.torsion), [[coeffs.zero] * s] * s)


class TabulatedCocycle:
    """Dense ``h`` (shape ``N,N,N,d``) and ``c`` (shape ``N,N,d``) tables."""

    def __init__(self, domain: FgAbGroup, coeffs: FgAbGroup, h: np.ndarray, c: np.ndarray):
        if not domain.is_finite:
            raise InfiniteGroupError("tabulated cocycles need a finite domain")
        N, d = domain.order, coeffs.ngens
        h = np.asarray(h, dtype=np.int64).reshape(N, N, N, d)
        c = np.asarray(c, dtype=np.int64).reshape(N, N, d)
        self.domain = domain
        self.coeffs = coeffs
        self.h = groups.reduce_array(coeffs, h.copy())
        self.c = groups.reduce_array(coeffs, c.copy())

    @classmethod
    def zero(cls, domain: FgAbGroup, coeffs: FgAbGroup) -> "TabulatedCocycle":
        N, d = domain.order, coeffs.ngens
        return cls(domain, coeffs, np.zeros((N, N, N, d)), np.zeros((N, N, d)))

    def h_at(self, x, y, z) -> Element:
        i = [groups.element_index(self.domain, g) for g in (x, y, z)]
        return tuple(int(v) for v in self.h[i[0], i[1], i[2]])

    def c_at(self, x, y) -> Element:
        i = [groups.element_index(self.domain, g) for g in (x, y)]
        return tuple(int(v) for v in self.c[i[0], i[1]])

    def __eq__(self, other):
        if not isinstance(other, TabulatedCocycle):
            return NotImplemented
        return (
            self.domain == other.domain
            and self.coeffs == other.coeffs
            and np.array_equal(self.h, other.h)
            and np.array_equal(self.c, other.c)
        )

    __hash__ = None

    def __repr__(self):
        return f"TabulatedCocycle({self.domain}, {self.coeffs})"


class Cochain2Table:
    """An arbitrary 2-cochain ``k: G^2 -> M`` as a dense ``(N, N, d)`` array."""

    def __init__(self, domain: FgAbGroup, coeffs: FgAbGroup, values: np.ndarray):
        if not domain.is_finite:
            raise InfiniteGroupError("cochain tables need a finite domain")
        N = domain.order
        v = np.asarray(values, dtype=np.int64).reshape(N, N, coeffs.ngens)
        self.domain = domain
        self.coeffs = coeffs
        self.values = groups.reduce_array(coeffs, v.copy())

    @classmethod
    def zero(cls, domain, coeffs) -> "Cochain2Table":
        N = domain.order
        return cls(domain, coeffs, np.zeros((N, N, coeffs.ngens)))

    def __eq__(self, other):
        if not isinstance(other, Cochain2Table):
            return NotImplemented
        return (self.domain, self.coeffs) == (other.domain, other.coeffs) and np.array_equal(
            self.values, other.values
        )

    __hash__ = None


def random_cochain(
    domain: FgAbGroup, coeffs: FgAbGroup, rng: np.random.Generator, spread: int = 16
) -> Cochain2Table:
    """Uniform random 2-cochain; free coefficient coordinates are drawn from ``[-spread, spread]``."""
    N, d = domain.order, coeffs.ngens
    hi = np.array([n for n in coeffs.torsion] + [2 * spread + 1] * coeffs.free_rank, dtype=np.int64)
    lo = np.array([0] * len(coeffs.torsion) + [-spread] * coeffs.free_rank, dtype=np.int64)
    raw = rng.integers(0, hi, size=(N, N, d)) + lo if d else np.zeros((N, N, 0), np.int64)
    return Cochain2Table(domain, coeffs, raw)


def base_cyclic(n: int, m: Sequence[int], coeffs: FgAbGroup) -> StructuredCocycle:
    """The carry cocycle ``(h_{nm}, c_m)`` on ``Z/n``."""
    m = groups.reduce(coeffs, m)
    d = groups.gcd_2n_n2(n)
    if not groups.is_killed_by(coeffs, m, d):
        raise InvalidCoefficientError([f"m={list(m)} not in M[{d}]"])
    G = FgAbGroup.cyclic(n)
    return StructuredCocycle(G, coeffs, [groups.scale(coeffs, n, m)], [[m]])


def from_quad(q: QuadraticFormParams) -> StructuredCocycle:
    """Explicit normal-form cocycle whose trace is ``q``."""
    bad = forms.validate_params(q)
    if bad:
        raise InvalidCoefficientError(bad)
    G, M = q.domain, q.coeffs
    carry = [groups.scale(M, n, m) for n, m in zip(G.torsion, q.diag_torsion)]
    return StructuredCocycle(G, M, carry, q.upper())


def eval_h(sc: StructuredCocycle, x, y, z) -> Element:
    G, M = sc.domain, sc.coeffs
    x, y, z = (groups.reduce(G, g) for g in (x, y, z))
    total = [0] * M.ngens
    for i, n in enumerate(G.torsion):
        if x[i] and y[i] + z[i] >= n:
            for t, v in enumerate(sc.carry[i]):
                total[t] += x[i] * v
    return groups.reduce(M, total)


def eval_c(sc: StructuredCocycle, x, y) -> Element:
    G, M = sc.domain, sc.coeffs
    return forms._eval_matrix(M, sc.c_matrix, groups.reduce(G, x), groups.reduce(G, y))


def tabulate(sc: StructuredCocycle) -> TabulatedCocycle:
    G, M = sc.domain, sc.coeffs
    if not G.is_finite:
        raise InfiniteGroupError(f"cannot tabulate over the infinite group {G}")
    idx = groups.finite_index(G)
    E = idx.coords
    N, s, d = idx.size, G.ngens, M.ngens
    mods = np.array(G.torsion, dtype=np.int64).reshape(1, 1, s) if s else np.zeros((1, 1, 0), np.int64)
    wrap = (E[:, None, :] + E[None, :, :]) >= mods  # (y, z, slot)
    mu = np.array(sc.carry, dtype=np.int64).reshape(s, d)
    h = np.einsum("xi,yzi,id->xyzd", E, wrap.astype(np.int64), mu)
    C = np.array(sc.c_matrix, dtype=np.int64).reshape(s, s, d)
    c = np.einsum("xa,yb,abd->xyd", E, E, C)
    return TabulatedCocycle(G, M, h.reshape(N, N, N, d), c)


def trace(cocycle):
    """``q(x) = c(x, x)``; params for a structured cocycle, a table for a tabulated one."""
    if isinstance(cocycle, StructuredCocycle):
        G, M, C = cocycle.domain, cocycle.coeffs, cocycle.c_matrix
        s = G.ngens
        U = [
            [C[a][a] if a == b else groups.add(M, C[a][b], C[b][a]) for b in range(s)]
            for a in range(s)
        ]
        return QuadraticFormParams.from_upper(G, M, U)
    N = cocycle.domain.order
    diag = cocycle.c[np.arange(N), np.arange(N)]
    return QuadraticFormTable(cocycle.domain, cocycle.coeffs, [tuple(map(int, v)) for v in diag])


def coboundary(k: Cochain2Table) -> TabulatedCocycle:
    """The 2-abelian coboundary of ``k``.

    ``h = delta k`` with ``delta k(x,y,z) = k(y,z) - k(x+y,z) + k(x,y+z) - k(x,y)``
    and ``c(x, y) = k(y, x) - k(x, y)``.  With the hexagon identities in the
    orientation used by :func:`verify`, this sign of the antisymmetrization is
    the one that makes every coboundary a cocycle; ``k(x,y) - k(y,x)`` fails
    both hexagons for generic ``k``.
    """
    A = groups.finite_index(k.domain).add
    v = k.values
    N = len(v)
    X = np.arange(N).reshape(N, 1, 1)
    Y = np.arange(N).reshape(1, N, 1)
    Z = np.arange(N).reshape(1, 1, N)
    h = v[Y, Z] - v[A[X, Y], Z] + v[X, A[Y, Z]] - v[X, Y]
    c = v.transpose(1, 0, 2) - v
    return TabulatedCocycle(k.domain, k.coeffs, h, c)


def _same_shape(a: TabulatedCocycle, b: TabulatedCocycle) -> None:
    if (a.domain, a.coeffs) != (b.domain, b.coeffs):
        raise MismatchError("cocycles live on different groups")


def subtract(a: TabulatedCocycle, b: TabulatedCocycle) -> TabulatedCocycle:
    _same_shape(a, b)
    return TabulatedCocycle(a.domain, a.coeffs, a.h - b.h, a.c - b.c)


def add(a: TabulatedCocycle, b: TabulatedCocycle) -> TabulatedCocycle:
    _same_shape(a, b)
    return TabulatedCocycle(a.domain, a.coeffs, a.h + b.h, a.c + b.c)


@dataclass
class Violation:
    identity: str
    args: tuple[Element, ...]

    def __str__(self):
        return f"{self.identity} fails at {', '.join(str(a) for a in self.args)}"


@dataclass
class VerificationReport:
    """Outcome of an exhaustive identity check.

    ``counts`` maps identity name to the number of failing instances;
    ``violations`` keeps the first few in canonical order.
    """

    checked: dict[str, int] = field(default_factory=dict)
    counts: dict[str, int] = field(default_factory=dict)
    violations: list[Violation] = field(default_factory=list)

    @property
    def ok(self) -> bool:
        return not any(self.counts.values())

    def __bool__(self):
        return self.ok

    def summary(self) -> str:
        parts = [f"{name}: {self.counts[name]}/{self.checked[name]} failing" for name in self.checked]
        return ("ok; " if self.ok else "FAILED; ") + ", ".join(parts)


def _record(report, name, bad, elements, limit):
    report.checked[name] = report.checked.get(name, 0) + bad.size
    hits = np.argwhere(bad)
    report.counts[name] = report.counts.get(name, 0) + len(hits)
    for row in hits:
        if len(report.violations) >= limit:
            break
        report.violations.append(Violation(name, tuple(elements[i] for i in row)))


def _check_domain(G: FgAbGroup, max_domain: int | None) -> None:
    if not G.is_finite:
        raise InfiniteGroupError(f"cannot verify over the infinite group {G}")
    if max_domain is not None and G.order > max_domain:
        raise BudgetExceeded(G.order, max_domain, "domain order")


def _compact(M: FgAbGroup, arr: np.ndarray) -> np.ndarray:
    """Narrow reduced tables so the identity sums (at most 6 terms) cannot overflow."""
    if M.free_rank or not M.torsion:
        return arr
    top = 6 * max(M.torsion)
    if top < 2**7:
        return arr.astype(np.int8)
    if top < 2**15:
        return arr.astype(np.int16)
    return arr


def _failing(M: FgAbGroup, arr: np.ndarray) -> np.ndarray:
    """``arr != 0`` in ``M``, collapsed over the coordinate axis."""
    bad = np.zeros(arr.shape[:-1], dtype=bool)
    for i in range(M.ngens):
        col = arr[..., i]
        bad |= (col % M.torsion[i] if i < len(M.torsion) else col) != 0
    return bad


def _pentagon_slice(h, A, M, g1):
    # every lookup is a block gather along one leading axis; result indexed [g2, g3, g4]
    hg = h[g1]
    lhs = hg[:, :, None] + hg[A] + h
    rhs = h[A[g1]] + hg[:, A]
    return _failing(M, lhs - rhs)


def pentagon_violations(tc: TabulatedCocycle, threads: int = 1) -> np.ndarray:
    """Boolean ``(N, N, N, N)`` mask of failing 3-cocycle identity instances."""
    A = groups.finite_index(tc.domain).add
    N = len(A)
    h = _compact(tc.coeffs, tc.h)
    work = lambda g1: _pentagon_slice(h, A, tc.coeffs, g1)  # noqa: E731
    if threads > 1 and N > 1:
        with ThreadPoolExecutor(threads) as pool:
            slices = list(pool.map(work, range(N)))
    else:
        slices = [work(g1) for g1 in range(N)]
    return np.stack(slices) if slices else np.zeros((0, 0, 0, 0), bool)


def hexagon_violations(tc: TabulatedCocycle) -> tuple[np.ndarray, np.ndarray]:
    """Boolean ``(N, N, N)`` masks for the two compatibility identities."""
    A = groups.finite_index(tc.domain).add
    h, c, M = tc.h, tc.c, tc.coeffs
    N = len(A)
    X = np.arange(N).reshape(N, 1, 1)
    Y = np.arange(N).reshape(1, N, 1)
    Z = np.arange(N).reshape(1, 1, N)
    first = h[Y, Z, X] + c[X, A[Y, Z]] + h[X, Y, Z] - c[X, Z] - h[Y, X, Z] - c[X, Y]
    second = -h[Z, X, Y] + c[A[X, Y], Z] - h[X, Y, Z] - c[X, Z] + h[X, Z, Y] - c[Y, Z]
    return _failing(M, first), _failing(M, second)


def verify(
    tc: TabulatedCocycle,
    max_reports: int = 16,
    max_domain: int | None = DEFAULT_MAX_DOMAIN,
    threads: int = 1,
) -> VerificationReport:
    """Check every instance of the pentagon and both hexagon identities."""
    _check_domain(tc.domain, max_domain)
    elements = groups.finite_index(tc.domain).elements
    report = VerificationReport()
    _record(report, "pentagon", pentagon_violations(tc, threads), elements, max_reports)
    first, second = hexagon_violations(tc)
    _record(report, "hexagon-1", first, elements, max_reports)
    _record(report, "hexagon-2", second, elements, max_reports)
    return report


def verify_batch(tables: Sequence[TabulatedCocycle], threads: int = 1) -> np.ndarray:
    """Failing-instance counts for many tables on one ``(G, M)`` at once.

    Returns an int array of shape ``(len(tables), 3)`` with columns
    pentagon, hexagon-1, hexagon-2; a row of zeros means that table is a
    cocycle.  Same identities as :func:`verify`, evaluated with the batch
    on a trailing axis so the index arithmetic is shared.
    """
    if not tables:
        return np.zeros((0, 3), dtype=np.int64)
    G, M = tables[0].domain, tables[0].coeffs
    for t in tables:
        _same_shape(tables[0], t)
    _check_domain(G, None)
    B = len(tables)
    h = _compact(M, np.stack([t.h for t in tables], axis=-2))  # (N, N, N, B, d)
    c = _compact(M, np.stack([t.c for t in tables], axis=-2))  # (N, N, B, d)
    A = groups.finite_index(G).add
    N = len(A)
    work = lambda g1: _pentagon_slice(h, A, M, g1).reshape(-1, B).sum(axis=0)  # noqa: E731
    if threads > 1 and N > 1:
        with ThreadPoolExecutor(threads) as pool:
            pent = sum(pool.map(work, range(N)))
    else:
        pent = sum(work(g1) for g1 in range(N))
    X = np.arange(N).reshape(N, 1, 1)
    Y = np.arange(N).reshape(1, N, 1)
    Z = np.arange(N).reshape(1, 1, N)
    first = h[Y, Z, X] + c[X, A[Y, Z]] + h[X, Y, Z] - c[X, Z] - h[Y, X, Z] - c[X, Y]
    second = -h[Z, X, Y] + c[A[X, Y], Z] - h[X, Y, Z] - c[X, Z] + h[X, Z, Y] - c[Y, Z]
    hex1 = _failing(M, first).reshape(-1, B).sum(axis=0)
    hex2 = _failing(M, second).reshape(-1, B).sum(axis=0)
    return np.stack([np.asarray(pent).reshape(B), hex1, hex2], axis=1).astype(np.int64)


def normal_form_check(
    tc: TabulatedCocycle, max_reports: int = 16, max_domain: int | None = DEFAULT_MAX_DOMAIN
) -> VerificationReport:
    """``h(x,y,z) = c(x,y) + c(x,z) - c(x,y+z)`` and ``h(z,x,y) = c(x+y,z) - c(x,z) - c(y,z)``."""
    _check_domain(tc.domain, max_domain)
    idx = groups.finite_index(tc.domain)
    A, h, c, M = idx.add, tc.h, tc.c, tc.coeffs
    N = idx.size
    X = np.arange(N).reshape(N, 1, 1)
    Y = np.arange(N).reshape(1, N, 1)
    Z = np.arange(N).reshape(1, 1, N)
    first = h[X, Y, Z] - c[X, Y] - c[X, Z] + c[X, A[Y, Z]]
    second = h[Z, X, Y] - c[A[X, Y], Z] + c[X, Z] + c[Y, Z]
    report = VerificationReport()
    _record(report, "normal-form-1", _failing(M, first), idx.elements, max_reports)
    _record(report, "normal-form-2", _failing(M, second), idx.elements, max_reports)
    return report


def s_identity_check(tc: TabulatedCocycle, max_reports: int = 16) -> VerificationReport:
    """``c(x,y) + c(y,x)`` equals the polarization of the trace at every pair."""
    idx = groups.finite_index(tc.domain)
    c, M = tc.c, tc.coeffs
    N = idx.size
    q = c[np.arange(N), np.arange(N)]
    b = q[idx.add] - q[:, None] - q[None, :]
    diff = _failing(M, c + c.transpose(1, 0, 2) - b)
    report = VerificationReport()
    _record(report, "s-identity", diff, idx.elements, max_reports)
    return report
