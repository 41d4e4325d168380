"""Quadratic and bilinear forms ``G -> M`` on finitely generated abelian groups.

A quadratic form on ``G = Z/n_1 + ... + Z/n_k + Z^r`` is stored through its
coefficient tuple: for ``g = (a_1, ..., a_k, x_1, ..., x_r)``

    q(g) = sum a_i^2 m_i + sum_{i<j} a_i a_j b_ij
         + sum x_j^2 l_j + sum_{j<l} x_j x_l f_jl + sum a_i x_j t_ij

with ``m_i in M[gcd(2 n_i, n_i^2)]``, ``b_ij in M[gcd(n_i, n_j)]`` and
``t_ij in M[n_i]``.  Every quadratic form has exactly one such expression, so
the tuple doubles as a normal form and :func:`fit_params` can recover it from
a value table.

Internally the tuple is often handled as an upper-triangular slot matrix
``U`` (see :meth:`QuadraticFormParams.upper`), with ``U[a][a]`` the diagonal
coefficient of slot ``a`` and ``U[a][b]`` (``a < b``) the coefficient of
``g_a g_b``.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass
from typing import Iterator, Sequence

import numpy as np

from emtrace import groups
from emtrace.errors import (
    DimensionError,
    DomainError,
    InfiniteGroupError,
    InvalidCoefficientError,
    MismatchError,
    NotQuadraticError,
)
from emtrace.groups import Element, FgAbGroup


def _pairs(k: int) -> list[tuple[int, int]]:
    return list(itertools.combinations(range(k), 2))


def _ann_gcd(a: int, b: int) -> int:
    """Annihilator shared by two slots; 0 (no constraint) only for two free slots."""
    return math.gcd(a, b)


def _reduce_all(M: FgAbGroup, values, expected: int, name: str) -> tuple[Element, ...]:
    values = tuple(values)
    if len(values) != expected:
        raise DimensionError(f"{name}: expected {expected} entries, got {len(values)}")
    return tuple(groups.reduce(M, v) for v in values)


@dataclass(frozen=True)
class QuadraticFormParams:
    """Coefficients of a quadratic form.

    ``cross_torsion`` runs over pairs ``i < j`` in lexicographic order, as
    does ``cross_free``; ``mixed`` is torsion-major (``t_ij`` at ``i * r + j``).
    """

    domain: FgAbGroup
    coeffs: FgAbGroup
    diag_torsion: tuple[Element, ...] = None
    cross_torsion: tuple[Element, ...] = None
    diag_free: tuple[Element, ...] = None
    cross_free: tuple[Element, ...] = None
    mixed: tuple[Element, ...] = None

    def __post_init__(self):
        G, M = self.domain, self.coeffs
        k, r = len(G.torsion), G.free_rank
        sizes = {
            "diag_torsion": k,
            "cross_torsion": k * (k - 1) // 2,
            "diag_free": r,
            "cross_free": r * (r - 1) // 2,
            "mixed": k * r,
        }
        for name, size in sizes.items():
            raw = getattr(self, name)
            if raw is None:
                raw = [M.zero] * size
            object.__setattr__(self, name, _reduce_all(M, raw, size, name))

    @classmethod
    def zero(cls, domain: FgAbGroup, coeffs: FgAbGroup) -> "QuadraticFormParams":
        return cls(domain, coeffs)

    @classmethod
    def from_upper(cls, domain: FgAbGroup, coeffs: FgAbGroup, upper) -> "QuadraticFormParams":
        """Inverse of :meth:`upper`; entries below the diagonal are ignored."""
        k, r = len(domain.torsion), domain.free_rank
        return cls(
            domain,
            coeffs,
            diag_torsion=[upper[i][i] for i in range(k)],
            cross_torsion=[upper[i][j] for i, j in _pairs(k)],
            diag_free=[upper[k + j][k + j] for j in range(r)],
            cross_free=[upper[k + j][k + l] for j, l in _pairs(r)],
            mixed=[upper[i][k + j] for i in range(k) for j in range(r)],
        )

    def upper(self) -> list[list[Element]]:
        k, r = len(self.domain.torsion), self.domain.free_rank
        s = k + r
        U = [[self.coeffs.zero] * s for _ in range(s)]
        for i in range(k):
            U[i][i] = self.diag_torsion[i]
        for (i, j), v in zip(_pairs(k), self.cross_torsion):
            U[i][j] = v
        for j in range(r):
            U[k + j][k + j] = self.diag_free[j]
        for (j, l), v in zip(_pairs(r), self.cross_free):
            U[k + j][k + l] = v
        for i in range(k):
            for j in range(r):
                U[i][k + j] = self.mixed[i * r + j]
        return U

    def __add__(self, other: "QuadraticFormParams") -> "QuadraticFormParams":
        if (self.domain, self.coeffs) != (other.domain, other.coeffs):
            raise MismatchError("cannot add forms on different groups")
        M = self.coeffs
        U, V = self.upper(), other.upper()
        W = [[groups.add(M, u, v) for u, v in zip(ru, rv)] for ru, rv in zip(U, V)]
        return QuadraticFormParams.from_upper(self.domain, M, W)

    def labelled(self) -> list[tuple[str, Element]]:
        """``(label, value)`` for every coefficient, 1-based labels."""
        k, r = len(self.domain.torsion), self.domain.free_rank
        out = [(f"m{i + 1}", v) for i, v in enumerate(self.diag_torsion)]
        out += [(f"b{i + 1}{j + 1}", v) for (i, j), v in zip(_pairs(k), self.cross_torsion)]
        out += [(f"l{j + 1}", v) for j, v in enumerate(self.diag_free)]
        out += [(f"f{j + 1}{l + 1}", v) for (j, l), v in zip(_pairs(r), self.cross_free)]
        out += [
            (f"t{i + 1}{j + 1}", self.mixed[i * r + j]) for i in range(k) for j in range(r)
        ]
        return out


@dataclass(frozen=True)
class BilinearFormMatrix:
    """A biadditive map ``left x right -> M`` given by its values on basis pairs.

    ``right`` defaults to ``domain``.  Each entry must be killed by the
    modulus of both of its slots (free slots impose nothing).
    """

    domain: FgAbGroup
    coeffs: FgAbGroup
    entries: tuple[tuple[Element, ...], ...]
    right: FgAbGroup = None

    def __post_init__(self):
        if self.right is None:
            object.__setattr__(self, "right", self.domain)
        rows = tuple(self.entries)
        if len(rows) != self.domain.ngens:
            raise DimensionError(f"expected {self.domain.ngens} rows, got {len(rows)}")
        fixed = tuple(
            _reduce_all(self.coeffs, row, self.right.ngens, "bilinear row") for row in rows
        )
        object.__setattr__(self, "entries", fixed)
        bad = self.violations()
        if bad:
            raise InvalidCoefficientError(bad)

    @classmethod
    def zero(cls, domain, coeffs, right=None) -> "BilinearFormMatrix":
        right = domain if right is None else right
        rows = [[coeffs.zero] * right.ngens for _ in range(domain.ngens)]
        return cls(domain, coeffs, rows, right)

    def violations(self) -> list[str]:
        out = []
        for a, row in enumerate(self.entries):
            for b, v in enumerate(row):
                d = _ann_gcd(self.domain.annihilator(a), self.right.annihilator(b))
                if d and not groups.is_killed_by(self.coeffs, v, d):
                    out.append(f"C[{a + 1}][{b + 1}]={list(v)} not in M[{d}]")
        return out


@dataclass(frozen=True)
class QuadraticFormTable:
    """Values of a map ``G -> M`` on a finite ``G``, in enumeration order."""

    domain: FgAbGroup
    coeffs: FgAbGroup
    values: tuple[Element, ...]

    def __post_init__(self):
        if not self.domain.is_finite:
            raise InfiniteGroupError("quadratic form tables need a finite domain")
        object.__setattr__(
            self, "values", _reduce_all(self.coeffs, self.values, self.domain.order, "table")
        )

    def __call__(self, x: Sequence[int]) -> Element:
        return self.values[groups.element_index(self.domain, x)]

    def array(self) -> np.ndarray:
        return np.array(self.values, dtype=np.int64).reshape(len(self.values), self.coeffs.ngens)

    def violations(self, limit: int = 16) -> list[str]:
        """Failures of the quadratic-form axioms, checked exhaustively."""
        M = self.coeffs
        idx = groups.finite_index(self.domain)
        V = self.array()
        out = []
        if any(V[0]):
            out.append("q(0) != 0")
        sym = groups.reduce_array(M, V[idx.neg] - V)
        for x in np.flatnonzero(sym.any(axis=-1))[:limit]:
            out.append(f"q(-x) != q(x) at x={idx.elements[x]}")
        b = groups.reduce_array(M, V[idx.add] - V[:, None] - V[None, :])
        # b(x + x', y) - b(x, y) - b(x', y) for every (x, x', y)
        lin = groups.reduce_array(M, b[idx.add] - b[:, None, :] - b[None, :, :])
        for x, x2, y in np.argwhere(lin.any(axis=-1))[: max(0, limit - len(out))]:
            e = idx.elements
            out.append(f"b_q not additive at x={e[x]}, x'={e[x2]}, y={e[y]}")
        return out[:limit]


@dataclass(frozen=True)
class DirectSumSplit:
    """A quadratic form on ``G1 + G2`` as (cross bilinear form, form on G1, form on G2)."""

    cross: BilinearFormMatrix
    left: QuadraticFormParams
    right: QuadraticFormParams

    def __post_init__(self):
        if (self.cross.domain, self.cross.right) != (self.left.domain, self.right.domain):
            raise MismatchError("cross form must be defined on left x right")
        if not self.cross.coeffs == self.left.coeffs == self.right.coeffs:
            raise MismatchError("coefficient groups differ")


def _eval_upper(M: FgAbGroup, U, x: Sequence[int]) -> Element:
    s = len(x)
    total = [0] * M.ngens
    for a in range(s):
        if not x[a]:
            continue
        for b in range(a, s):
            w = x[a] * x[b]
            if w:
                for t, v in enumerate(U[a][b]):
                    total[t] += w * v
    return groups.reduce(M, total)


def eval_quad(q: QuadraticFormParams, x: Sequence[int]) -> Element:
    x = groups.reduce(q.domain, x)
    return _eval_upper(q.coeffs, q.upper(), x)


def assoc_bilinear(q: QuadraticFormParams, x: Sequence[int], y: Sequence[int]) -> Element:
    """Polarization ``b_q(x, y) = q(x + y) - q(x) - q(y)``."""
    G, M = q.domain, q.coeffs
    s = eval_quad(q, groups.add(G, x, y))
    return groups.subtract(M, s, groups.add(M, eval_quad(q, x), eval_quad(q, y)))


def _eval_matrix(M: FgAbGroup, C, x: Sequence[int], y: Sequence[int]) -> Element:
    total = [0] * M.ngens
    for a, xa in enumerate(x):
        if not xa:
            continue
        for b, yb in enumerate(y):
            w = xa * yb
            if w:
                for t, v in enumerate(C[a][b]):
                    total[t] += w * v
    return groups.reduce(M, total)


def eval_bilinear(c: BilinearFormMatrix, x: Sequence[int], y: Sequence[int]) -> Element:
    return _eval_matrix(c.coeffs, c.entries, groups.reduce(c.domain, x), groups.reduce(c.right, y))


def coefficient_constraints(q: QuadraticFormParams) -> list[tuple[str, Element, int]]:
    """``(label, value, d)`` for every coefficient that must lie in ``M[d]``."""
    G = q.domain
    k, r = len(G.torsion), G.free_rank
    n = G.torsion
    out = [(f"m{i + 1}", v, groups.gcd_2n_n2(n[i])) for i, v in enumerate(q.diag_torsion)]
    out += [
        (f"b{i + 1}{j + 1}", v, math.gcd(n[i], n[j]))
        for (i, j), v in zip(_pairs(k), q.cross_torsion)
    ]
    out += [(f"t{i + 1}{j + 1}", q.mixed[i * r + j], n[i]) for i in range(k) for j in range(r)]
    return out


def validate_params(q: QuadraticFormParams, check_well_defined: bool = False) -> list[str]:
    """Return the violated torsion constraints (empty list means valid).

    With ``check_well_defined`` and a finite domain, additionally confirm
    ``q(x + n_i e_i) = q(x)`` on raw, unreduced coordinates.
    """
    M = q.coeffs
    out = [
        f"{label}={list(v)} not in M[{d}]"
        for label, v, d in coefficient_constraints(q)
        if not groups.is_killed_by(M, v, d)
    ]
    if check_well_defined and q.domain.is_finite and not out:
        U = q.upper()
        for x in groups.iter_elements(q.domain):
            base = _eval_upper(M, U, x)
            for i, n in enumerate(q.domain.torsion):
                shifted = list(x)
                shifted[i] += n
                if _eval_upper(M, U, shifted) != base:
                    out.append(f"q not well defined at x={x}, shift by n{i + 1}")
    return out


def _slot_maps(G1: FgAbGroup, G2: FgAbGroup) -> tuple[list[int], list[int]]:
    k1, k2, r1 = len(G1.torsion), len(G2.torsion), G1.free_rank
    s1 = [a if a < k1 else k2 + a for a in range(G1.ngens)]
    s2 = [k1 + b if b < k2 else k1 + r1 + b for b in range(G2.ngens)]
    return s1, s2


def phi(split: DirectSumSplit) -> QuadraticFormParams:
    """Assemble ``f(g1, g2) + q1(g1) + q2(g2)`` on ``G1 + G2``."""
    G1, G2, M = split.left.domain, split.right.domain, split.left.coeffs
    G = groups.direct_sum(G1, G2)
    s1, s2 = _slot_maps(G1, G2)
    U = [[M.zero] * G.ngens for _ in range(G.ngens)]
    for smap, part in ((s1, split.left.upper()), (s2, split.right.upper())):
        for a, row in enumerate(part):
            for b, v in enumerate(row[a:], start=a):
                U[smap[a]][smap[b]] = v
    for a, row in enumerate(split.cross.entries):
        for b, v in enumerate(row):
            i, j = sorted((s1[a], s2[b]))
            U[i][j] = groups.add(M, U[i][j], v)
    return QuadraticFormParams.from_upper(G, M, U)


def psi(q: QuadraticFormParams, split_point: tuple[int, int]) -> DirectSumSplit:
    """Split ``q`` along ``G1 = (first k1 torsion, first r1 free)`` and the rest."""
    G, M = q.domain, q.coeffs
    k1, r1 = split_point
    if not (0 <= k1 <= len(G.torsion) and 0 <= r1 <= G.free_rank):
        raise DomainError(f"invalid split point {split_point} for {G}")
    G1 = FgAbGroup(G.torsion[:k1], r1)
    G2 = FgAbGroup(G.torsion[k1:], G.free_rank - r1)
    s1, s2 = _slot_maps(G1, G2)
    U = q.upper()

    def restrict(smap, H):
        V = [[U[smap[a]][smap[b]] if a <= b else M.zero for b in range(H.ngens)] for a in range(H.ngens)]
        return QuadraticFormParams.from_upper(H, M, V)

    cross = [[U[min(i, j)][max(i, j)] for j in s2] for i in s1]
    return DirectSumSplit(BilinearFormMatrix(G1, M, cross, G2), restrict(s1, G1), restrict(s2, G2))


def iter_quads(G: FgAbGroup, M: FgAbGroup) -> Iterator[QuadraticFormParams]:
    if not G.is_finite:
        raise InfiniteGroupError(f"Quad({G}, M) has free parameters and cannot be enumerated")
    k = len(G.torsion)
    n = G.torsion
    diag = [groups.torsion_subgroup_elements(M, groups.gcd_2n_n2(ni)) for ni in n]
    cross = [groups.torsion_subgroup_elements(M, math.gcd(n[i], n[j])) for i, j in _pairs(k)]
    for choice in itertools.product(*diag, *cross):
        yield QuadraticFormParams(G, M, diag_torsion=choice[:k], cross_torsion=choice[k:])


def enumerate_quads(G: FgAbGroup, M: FgAbGroup) -> list[QuadraticFormParams]:
    """All quadratic forms on a finite ``G``; finite even for infinite ``M``."""
    return list(iter_quads(G, M))


def count_quads(G: FgAbGroup, M: FgAbGroup) -> int:
    if not G.is_finite:
        raise InfiniteGroupError(f"Quad({G}, M) is infinite")
    n = G.torsion
    sizes = [groups.gcd_2n_n2(ni) for ni in n] + [math.gcd(n[i], n[j]) for i, j in _pairs(len(n))]
    return math.prod(len(groups.torsion_subgroup_elements(M, d)) for d in sizes)


def tabulate_quad(q: QuadraticFormParams) -> QuadraticFormTable:
    U = q.upper()
    values = [_eval_upper(q.coeffs, U, x) for x in groups.iter_elements(q.domain)]
    return QuadraticFormTable(q.domain, q.coeffs, values)


def fit_params(t: QuadraticFormTable) -> QuadraticFormParams:
    """Recover the unique coefficient tuple of a quadratic form table."""
    G, M = t.domain, t.coeffs
    k = len(G.torsion)
    e = [G.basis(i) for i in range(k)]
    diag = [t(e[i]) for i in range(k)]
    cross = []
    for i, j in _pairs(k):
        s = t(groups.add(G, e[i], e[j]))
        cross.append(groups.subtract(M, s, groups.add(M, diag[i], diag[j])))
    q = QuadraticFormParams(G, M, diag_torsion=diag, cross_torsion=cross)
    bad = validate_params(q)
    if bad:
        raise NotQuadraticError("fitted coefficients violate constraints: " + "; ".join(bad))
    U = q.upper()
    for x, v in zip(groups.iter_elements(G), t.values):
        if _eval_upper(M, U, x) != v:
            raise NotQuadraticError(f"table is not quadratic: residual at x={x}")
    return q
