"""When is a quadratic form the trace ``x -> c(x, x)`` of a bilinear form?

For ``q`` on a finitely generated ``G`` the answer is decided by the
two-torsion character ``theta(q)``: one value ``2^a * q(u e_i)`` for every even
factor ``Z/n_i`` with ``n_i = 2^a u`` (``u`` odd).  These values always lie in
``M[2]`` and ``q`` is a trace exactly when all of them vanish.  This module
also covers symmetric forms, i.e. homomorphisms ``G -> M[2]``, whose
cocycles have ``h = 0`` and ``c(x, y) + c(y, x) = 0``.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass

from emtrace import forms, groups
from emtrace.cocycles import StructuredCocycle, TabulatedCocycle
from emtrace.errors import InvalidCoefficientError, NotRepresentableError, NotSymmetricError
from emtrace.forms import BilinearFormMatrix, QuadraticFormParams
from emtrace.groups import Element, FgAbGroup, TorsionWitness


@dataclass(frozen=True)
class TwoTorsionCharacter:
    """Values of ``x -> |x| q(x)`` on generators of ``G_2 / 2 G_2``."""

    witnesses: tuple[TorsionWitness, ...]
    values: tuple[Element, ...]

    @property
    def is_zero(self) -> bool:
        return not any(any(v) for v in self.values)


@dataclass(frozen=True)
class SymmetricQuadSpec:
    """A homomorphism ``G -> M[2]``: one ``M[2]`` value per torsion and free slot."""

    domain: FgAbGroup
    coeffs: FgAbGroup
    diag_torsion: tuple[Element, ...]
    diag_free: tuple[Element, ...]

    def __post_init__(self):
        G, M = self.domain, self.coeffs
        m = forms._reduce_all(M, self.diag_torsion, len(G.torsion), "diag_torsion")
        l = forms._reduce_all(M, self.diag_free, G.free_rank, "diag_free")
        object.__setattr__(self, "diag_torsion", m)
        object.__setattr__(self, "diag_free", l)
        bad = [f"m{i + 1} not in M[2]" for i, v in enumerate(m) if not groups.is_killed_by(M, v, 2)]
        bad += [f"l{j + 1} not in M[2]" for j, v in enumerate(l) if not groups.is_killed_by(M, v, 2)]
        bad += [
            f"m{i + 1} must vanish on odd factor Z/{n}"
            for i, (n, v) in enumerate(zip(G.torsion, m))
            if n % 2 and any(v)
        ]
        if bad:
            raise InvalidCoefficientError(bad)

    def as_params(self) -> QuadraticFormParams:
        return QuadraticFormParams(
            self.domain, self.coeffs, diag_torsion=self.diag_torsion, diag_free=self.diag_free
        )


def _require_valid(q: QuadraticFormParams) -> None:
    bad = forms.validate_params(q)
    if bad:
        raise InvalidCoefficientError(bad)


def theta(q: QuadraticFormParams) -> TwoTorsionCharacter:
    _require_valid(q)
    M = q.coeffs
    wits = tuple(groups.two_primary_generators(q.domain))
    values = tuple(groups.scale(M, w.order, forms.eval_quad(q, w.generator)) for w in wits)
    return TwoTorsionCharacter(wits, values)


def is_trace_of_bilinear(q: QuadraticFormParams) -> bool:
    return theta(q).is_zero


def bilinear_witness(q: QuadraticFormParams) -> BilinearFormMatrix:
    """The upper-triangular bilinear form whose diagonal is ``q``.

    Raises :class:`NotRepresentableError` carrying ``theta(q)`` when no
    bilinear form has trace ``q``.
    """
    obstruction = theta(q)
    if not obstruction.is_zero:
        raise NotRepresentableError(obstruction)
    # with theta(q) = 0 every diagonal m_i is already killed by n_i
    return BilinearFormMatrix(q.domain, q.coeffs, q.upper())


def forgetful_image_order(G: FgAbGroup, M: FgAbGroup) -> int:
    """``|Hom(G_2 / 2 G_2, M)| = |M[2]| ** (number of even invariant factors)``."""
    even = sum(1 for n in groups.canonicalize(G).torsion if n % 2 == 0)
    return len(groups.torsion_subgroup_elements(M, 2)) ** even


def classify_symmetric(q: QuadraticFormParams) -> SymmetricQuadSpec:
    """Return the :class:`SymmetricQuadSpec` of ``q`` or raise :class:`NotSymmetricError`."""
    _require_valid(q)
    M = q.coeffs
    offenders = [
        f"{label}={list(v)}"
        for label, v in q.labelled()
        if label[0] in "bft" and any(v)
    ]
    for i, (n, v) in enumerate(zip(q.domain.torsion, q.diag_torsion)):
        if not groups.is_killed_by(M, v, 2) or (n % 2 and any(v)):
            offenders.append(f"m{i + 1}={list(v)} (b_q(e{i + 1}, e{i + 1}) = 2 m{i + 1} != 0)")
    for j, v in enumerate(q.diag_free):
        if not groups.is_killed_by(M, v, 2):
            offenders.append(f"l{j + 1}={list(v)} (2 l{j + 1} != 0)")
    if offenders:
        raise NotSymmetricError(offenders)
    return SymmetricQuadSpec(q.domain, M, q.diag_torsion, q.diag_free)


def symmetric_rep(s: SymmetricQuadSpec) -> StructuredCocycle:
    """The cocycle ``(0, c)`` with diagonal ``c``."""
    G, M = s.domain, s.coeffs
    k = len(G.torsion)
    diag = list(s.diag_torsion) + list(s.diag_free)
    C = [[diag[a] if a == b else M.zero for b in range(G.ngens)] for a in range(G.ngens)]
    return StructuredCocycle(G, M, [M.zero] * k, C)


def is_symmetric_cocycle(tc: TabulatedCocycle) -> bool:
    s = groups.reduce_array(tc.coeffs, tc.c + tc.c.transpose(1, 0, 2))
    return not s.any()


def iter_symmetric_specs(G: FgAbGroup, M: FgAbGroup):
    """Every homomorphism ``G -> M[2]``; free slots range over ``M[2]`` too."""
    m2 = groups.torsion_subgroup_elements(M, 2)
    slots = [m2 if n % 2 == 0 else [M.zero] for n in G.torsion]
    slots += [m2] * G.free_rank
    k = len(G.torsion)
    for choice in itertools.product(*slots):
        yield SymmetricQuadSpec(G, M, choice[:k], choice[k:])
