"""Finitely generated abelian groups and their elements.

A group is stored as a list of cyclic torsion moduli ``n_1, ..., n_k`` (each
at least 2) followed by a free rank ``r``.  Elements are plain tuples of
``k + r`` integers; the torsion coordinates are always kept in ``[0, n_i)``.
That canonical choice of representatives matters: the carry cocycle in
:mod:`emtrace.cocycles` reads them directly.

>>> G = FgAbGroup.from_moduli([4, 0])
>>> G
FgAbGroup(torsion=(4,), free_rank=1)
>>> reduce(G, (7, -2))
(3, -2)
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass
from functools import lru_cache
from typing import Iterator, Sequence

import numpy as np

from emtrace.errors import DimensionError, DomainError, InfiniteGroupError

Element = tuple[int, ...]

INFINITE = math.inf


@dataclass(frozen=True)
class FgAbGroup:
    """``Z/n_1 + ... + Z/n_k + Z^r``."""

    torsion: tuple[int, ...] = ()
    free_rank: int = 0

    def __post_init__(self):
        object.__setattr__(self, "torsion", tuple(int(n) for n in self.torsion))
        if any(n < 2 for n in self.torsion):
            raise DomainError(f"torsion moduli must be >= 2, got {self.torsion}")
        if self.free_rank < 0:
            raise DomainError(f"free rank must be >= 0, got {self.free_rank}")

    @classmethod
    def from_moduli(cls, moduli: Sequence[int], free_rank: int = 0) -> "FgAbGroup":
        """Build from raw moduli where 0 means a copy of Z and 1 is dropped."""
        torsion = []
        for n in moduli:
            n = int(n)
            if n < 0:
                raise DomainError(f"negative modulus {n}")
            if n == 0:
                free_rank += 1
            elif n > 1:
                torsion.append(n)
        return cls(tuple(torsion), free_rank)

    @classmethod
    def cyclic(cls, n: int) -> "FgAbGroup":
        return cls.from_moduli([n])

    @classmethod
    def parse(cls, text: str, free_rank: int = 0) -> "FgAbGroup":
        """Parse a comma separated modulus list such as ``"4,6"`` or ``"2,0"``."""
        text = text.strip()
        if not text:
            return cls((), free_rank)
        try:
            moduli = [int(tok) for tok in text.split(",")]
        except ValueError as exc:
            raise DomainError(f"cannot parse group descriptor {text!r}") from exc
        return cls.from_moduli(moduli, free_rank)

    @property
    def ngens(self) -> int:
        return len(self.torsion) + self.free_rank

    @property
    def is_finite(self) -> bool:
        return self.free_rank == 0

    @property
    def order(self) -> int | float:
        return math.prod(self.torsion) if self.is_finite else INFINITE

    @property
    def is_canonical(self) -> bool:
        t = self.torsion
        return all(t[i + 1] % t[i] == 0 for i in range(len(t) - 1))

    @property
    def zero(self) -> Element:
        return (0,) * self.ngens

    def basis(self, slot: int) -> Element:
        e = [0] * self.ngens
        e[slot] = 1
        return tuple(e)

    def annihilator(self, slot: int) -> int:
        """Modulus of a coordinate slot; 0 for a free slot."""
        return self.torsion[slot] if slot < len(self.torsion) else 0

    def __str__(self):
        parts = [f"Z/{n}" for n in self.torsion]
        if self.free_rank == 1:
            parts.append("Z")
        elif self.free_rank > 1:
            parts.append(f"Z^{self.free_rank}")
        return " + ".join(parts) if parts else "0"


@dataclass(frozen=True)
class TorsionWitness:
    """A generator ``u * e_i`` of the 2-primary part of factor ``i``."""

    factor_index: int
    generator: Element
    order: int


def direct_sum(G1: FgAbGroup, G2: FgAbGroup) -> FgAbGroup:
    """``G1 + G2`` with slots ordered (torsion1, torsion2, free1, free2)."""
    return FgAbGroup(G1.torsion + G2.torsion, G1.free_rank + G2.free_rank)


def canonicalize(G: FgAbGroup) -> FgAbGroup:
    """Invariant-factor form: torsion moduli form an ascending divisibility chain."""
    mods = sorted(G.torsion)
    changed = True
    while changed:
        changed = False
        for i, j in itertools.combinations(range(len(mods)), 2):
            a, b = mods[i], mods[j]
            if b % a:
                g = math.gcd(a, b)
                mods[i], mods[j] = g, a * b // g
                mods = sorted(n for n in mods if n != 1)
                changed = True
                break
    return FgAbGroup(tuple(mods), G.free_rank)


def _check(G: FgAbGroup, x: Sequence[int]) -> None:
    if len(x) != G.ngens:
        raise DimensionError(f"expected {G.ngens} coordinates for {G}, got {len(x)}")


def reduce(G: FgAbGroup, raw: Sequence[int]) -> Element:
    _check(G, raw)
    k = len(G.torsion)
    return tuple(int(v) % n for v, n in zip(raw[:k], G.torsion)) + tuple(int(v) for v in raw[k:])


def add(G: FgAbGroup, x: Sequence[int], y: Sequence[int]) -> Element:
    _check(G, x)
    _check(G, y)
    return reduce(G, [a + b for a, b in zip(x, y)])


def negate(G: FgAbGroup, x: Sequence[int]) -> Element:
    _check(G, x)
    return reduce(G, [-a for a in x])


def subtract(G: FgAbGroup, x: Sequence[int], y: Sequence[int]) -> Element:
    return add(G, x, negate(G, y))


def scale(G: FgAbGroup, n: int, x: Sequence[int]) -> Element:
    _check(G, x)
    return reduce(G, [n * a for a in x])


def element_sum(G: FgAbGroup, xs) -> Element:
    total = [0] * G.ngens
    for x in xs:
        for i, a in enumerate(x):
            total[i] += a
    return reduce(G, total)


def is_zero(x: Sequence[int]) -> bool:
    return not any(x)


def element_order(G: FgAbGroup, x: Sequence[int]) -> int | float:
    _check(G, x)
    k = len(G.torsion)
    if any(x[k:]):
        return INFINITE
    return math.lcm(1, *(n // math.gcd(n, a) for n, a in zip(G.torsion, x)))


def gcd_2n_n2(n: int) -> int:
    """``gcd(2n, n^2)``: ``n`` for odd ``n`` and ``2n`` for even ``n``."""
    if n < 1:
        raise DomainError(f"gcd_2n_n2 needs n >= 1, got {n}")
    return n if n % 2 else 2 * n


def is_killed_by(M: FgAbGroup, m: Sequence[int], d: int) -> bool:
    """Membership test for ``M[d]``."""
    if d < 1:
        raise DomainError(f"annihilator must be positive, got {d}")
    return is_zero(scale(M, d, m))


def torsion_subgroup_elements(M: FgAbGroup, d: int) -> list[Element]:
    """All ``m`` in ``M`` with ``d * m = 0``, in lexicographic order."""
    if d < 1:
        raise DomainError(f"annihilator must be positive, got {d}")
    axes = []
    for n in M.torsion:
        step = n // math.gcd(n, d)
        axes.append(range(0, n, step))
    axes.extend([(0,)] * M.free_rank)
    return [tuple(p) for p in itertools.product(*axes)]


def two_primary_generators(G: FgAbGroup) -> list[TorsionWitness]:
    out = []
    for i, n in enumerate(G.torsion):
        if n % 2:
            continue
        two_part = n & -n
        g = [0] * G.ngens
        g[i] = n // two_part
        out.append(TorsionWitness(i, tuple(g), two_part))
    return out


def iter_elements(G: FgAbGroup) -> Iterator[Element]:
    if not G.is_finite:
        raise InfiniteGroupError(f"cannot enumerate the infinite group {G}")
    return (tuple(p) for p in itertools.product(*(range(n) for n in G.torsion)))


def enumerate_elements(G: FgAbGroup) -> list[Element]:
    """Mixed-radix lexicographic order, last coordinate fastest."""
    return list(iter_elements(G))


def element_index(G: FgAbGroup, x: Sequence[int]) -> int:
    idx = 0
    for n, a in zip(G.torsion, reduce(G, x)):
        idx = idx * n + a
    return idx


class FiniteIndex:
    """Dense lookup tables for a finite group: coordinates, sum and negation by index."""

    def __init__(self, G: FgAbGroup):
        self.group = G
        self.elements = enumerate_elements(G)
        self.size = len(self.elements)
        self.coords = np.array(self.elements, dtype=np.int64).reshape(self.size, G.ngens)
        self.index = {x: i for i, x in enumerate(self.elements)}
        radix = np.ones(G.ngens, dtype=np.int64)
        for i in range(G.ngens - 2, -1, -1):
            radix[i] = radix[i + 1] * G.torsion[i + 1]
        self.radix = radix
        s = self.coords[:, None, :] + self.coords[None, :, :]
        self.add = self.encode(s)
        self.neg = self.encode(-self.coords)

    def encode(self, arr: np.ndarray) -> np.ndarray:
        """Map coordinate arrays (last axis) to element indices."""
        if self.group.ngens == 0:
            return np.zeros(arr.shape[:-1], dtype=np.int64)
        mods = np.array(self.group.torsion, dtype=np.int64)
        return (np.mod(arr, mods) * self.radix).sum(axis=-1)


@lru_cache(maxsize=64)
def finite_index(G: FgAbGroup) -> FiniteIndex:
    return FiniteIndex(G)


def reduce_array(M: FgAbGroup, arr: np.ndarray) -> np.ndarray:
    """Reduce the torsion coordinates (last axis) of an integer array in place."""
    # one scalar modulus per column is much faster than a broadcast modulus vector
    for i, n in enumerate(M.torsion):
        arr[..., i] %= n
    return arr
