"""Brute-force ground truth on small finite instances.

Everything here is exhaustive: coboundary witnesses are found by walking
every 2-cochain ``k: G^2 -> M`` in canonical order, bilinear trace witnesses
by walking every admissible entry matrix, and cocycles by a depth-first
search over all table entries.  None of it relies on the closed forms in
:mod:`emtrace.cocycles` beyond the shared table layout, so agreement between
the two is a meaningful check.

Canonical cochain order: ``k`` is the digit string ``(k(g_0,g_0), k(g_0,g_1),
..., k(g_{N-1},g_{N-1}))`` read in base ``|M|`` with the last pair fastest,
each digit indexing :func:`emtrace.groups.enumerate_elements` of ``M``.
"""

from __future__ import annotations

import itertools
import logging
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np

from emtrace import cocycles, forms, groups, represent
from emtrace.cocycles import Cochain2Table, TabulatedCocycle
from emtrace.errors import BudgetExceeded, InfiniteGroupError, MismatchError
from emtrace.forms import BilinearFormMatrix, QuadraticFormParams, QuadraticFormTable
from emtrace.groups import FgAbGroup

log = logging.getLogger(__name__)

COHOMOLOGOUS = "cohomologous"
NOT_COHOMOLOGOUS = "not-cohomologous-exhaustive"
BUDGET_EXCEEDED = "budget-exceeded"

# rows * row length per numpy batch
_BATCH_CELLS = 1 << 22


@dataclass(frozen=True)
class SearchBudget:
    max_candidates: int = 10**7
    max_violation_reports: int = 16

    def __post_init__(self):
        if self.max_candidates < 1:
            raise ValueError("max_candidates must be >= 1")


@dataclass
class CohomologyVerdict:
    status: str
    witness: Cochain2Table | None = None
    candidates: int = 0

    @property
    def cohomologous(self) -> bool:
        return self.status == COHOMOLOGOUS


@dataclass
class CocycleEnumeration:
    """All 2-abelian 3-cocycles on ``(G, M)`` plus DFS statistics."""

    cocycles: list[TabulatedCocycle]
    nodes: int
    order: str

    def __len__(self):
        return len(self.cocycles)

    def __iter__(self):
        return iter(self.cocycles)

    def __getitem__(self, i):
        return self.cocycles[i]


@dataclass
class SeparationResult:
    ok: bool
    forms: int
    pairs_checked: int
    counterexample: tuple[QuadraticFormParams, QuadraticFormParams] | None = None
    witness: Cochain2Table | None = None


def _finite_pair(G: FgAbGroup, M: FgAbGroup) -> None:
    if not G.is_finite:
        raise InfiniteGroupError(f"oracle needs a finite domain, got {G}")
    if not M.is_finite:
        raise InfiniteGroupError(f"oracle needs finite coefficients, got {M}")


def _row_dtype(M: FgAbGroup):
    top = max(M.torsion, default=1)
    return np.int8 if top <= 127 else np.int16 if top <= 32767 else np.int64


def _encode_rows(M: FgAbGroup, rows: np.ndarray) -> np.ndarray:
    """View each reduced row as one opaque void scalar (hashable via ``bytes``)."""
    rows = np.ascontiguousarray(rows.astype(_row_dtype(M)))
    return rows.view(np.dtype((np.void, rows.dtype.itemsize * rows.shape[1]))).ravel()


def _flatten(tc: TabulatedCocycle) -> np.ndarray:
    return np.concatenate([tc.h.ravel(), tc.c.ravel()])


class CoboundaryEngine:
    """Batch evaluation of ``k -> (delta k, Alt k)`` over cochain index ranges."""

    def __init__(self, G: FgAbGroup, M: FgAbGroup):
        _finite_pair(G, M)
        self.G, self.M = G, M
        self.index = groups.finite_index(G)
        self.m_elements = np.array(groups.enumerate_elements(M), dtype=np.int64).reshape(
            M.order, M.ngens
        )
        self.N = self.index.size
        self.slots = self.N * self.N
        self.total = M.order**self.slots
        self.row_len = (self.N**3 + self.N**2) * M.ngens
        self.powers = [M.order ** (self.slots - 1 - s) for s in range(self.slots)]
        self.batch = max(1, _BATCH_CELLS // max(1, self.row_len))

    def digits(self, start: int, stop: int) -> np.ndarray:
        """Cochain digit arrays ``(stop - start, N*N)`` for canonical indices."""
        base = self.M.order
        if self.total < 2**62:
            idx = np.arange(start, stop, dtype=np.int64)
            pw = np.array(self.powers, dtype=np.int64)
            return (idx[:, None] // pw[None, :]) % base
        out = np.empty((stop - start, self.slots), dtype=np.int64)
        for r, i in enumerate(range(start, stop)):
            for s in range(self.slots - 1, -1, -1):
                i, out[r, s] = divmod(i, base)
        return out

    def values(self, digits: np.ndarray) -> np.ndarray:
        return self.m_elements[digits].reshape(len(digits), self.N, self.N, self.M.ngens)

    def rows(self, values: np.ndarray) -> np.ndarray:
        A = self.index.add
        N = self.N
        X = np.arange(N).reshape(N, 1, 1)
        Y = np.arange(N).reshape(1, N, 1)
        Z = np.arange(N).reshape(1, 1, N)
        v = values
        h = v[:, Y, Z] - v[:, A[X, Y], Z] + v[:, X, A[Y, Z]] - v[:, X, Y]
        c = v.transpose(0, 2, 1, 3) - v  # same convention as cocycles.coboundary
        flat = np.concatenate([h.reshape(len(v), -1, self.M.ngens), c.reshape(len(v), -1, self.M.ngens)], axis=1)
        return groups.reduce_array(self.M, flat).reshape(len(v), -1)

    def cochain(self, i: int) -> Cochain2Table:
        return Cochain2Table(self.G, self.M, self.values(self.digits(i, i + 1))[0])

    def chunks(self):
        return [(s, min(s + self.batch, self.total)) for s in range(0, self.total, self.batch)]

    def check_budget(self, budget: SearchBudget) -> None:
        if self.total > budget.max_candidates:
            raise BudgetExceeded(self.total, budget.max_candidates, "2-cochains")

    def first_match(self, target: np.ndarray, threads: int = 1) -> int | None:
        """Smallest canonical cochain index whose coboundary equals ``target``."""

        def scan(span):
            rows = self.rows(self.values(self.digits(*span)))
            hit = np.flatnonzero((rows == target[None, :]).all(axis=1))
            return span[0] + int(hit[0]) if len(hit) else None

        spans = self.chunks()
        if threads <= 1:
            for span in spans:
                found = scan(span)
                if found is not None:
                    return found
            return None
        with ThreadPoolExecutor(threads) as pool:
            for w in range(0, len(spans), threads):
                hits = [f for f in pool.map(scan, spans[w : w + threads]) if f is not None]
                if hits:
                    return min(hits)
        return None

    def image(self, threads: int = 1) -> dict[bytes, int]:
        """Every coboundary (as row bytes) mapped to its first cochain index."""

        def scan(span):
            keys = _encode_rows(self.M, self.rows(self.values(self.digits(*span))))
            uniq, first = np.unique(keys, return_index=True)
            return [(u.tobytes(), span[0] + int(f)) for u, f in zip(uniq, first)]

        spans = self.chunks()
        if threads > 1:
            with ThreadPoolExecutor(threads) as pool:
                parts = list(pool.map(scan, spans))
        else:
            parts = [scan(s) for s in spans]
        out: dict[bytes, int] = {}
        for part in parts:
            for key, i in part:
                out.setdefault(key, i)
        return out


def _verified_witness(engine: CoboundaryEngine, i: int, diff: TabulatedCocycle) -> Cochain2Table:
    k = engine.cochain(i)
    if cocycles.coboundary(k) != diff:
        raise AssertionError(f"coboundary witness {i} failed re-verification")
    return k


def cohomologous(
    a: TabulatedCocycle,
    b: TabulatedCocycle,
    budget: SearchBudget = SearchBudget(),
    threads: int = 1,
) -> CohomologyVerdict:
    """Decide ``a ~ b`` by searching every 2-cochain ``k`` with ``a - b = d(k)``."""
    if (a.domain, a.coeffs) != (b.domain, b.coeffs):
        raise MismatchError("cocycles live on different groups")
    engine = CoboundaryEngine(a.domain, a.coeffs)
    if engine.total > budget.max_candidates:
        return CohomologyVerdict(BUDGET_EXCEEDED, candidates=engine.total)
    diff = cocycles.subtract(a, b)
    found = engine.first_match(_flatten(diff), threads)
    if found is None:
        return CohomologyVerdict(NOT_COHOMOLOGOUS, candidates=engine.total)
    return CohomologyVerdict(COHOMOLOGOUS, _verified_witness(engine, found, diff), found + 1)


def bilinear_candidate_count(G: FgAbGroup, M: FgAbGroup) -> int:
    """Number of entry matrices :func:`exhaustive_representable` would scan."""
    if not G.is_finite:
        raise InfiniteGroupError("exhaustive search needs a finite domain")
    n = G.torsion
    return math.prod(
        len(groups.torsion_subgroup_elements(M, math.gcd(a, b))) for a in n for b in n
    )


def exhaustive_representable(
    q: QuadraticFormTable, budget: SearchBudget = SearchBudget()
) -> BilinearFormMatrix | None:
    """First entry matrix (canonical order) whose diagonal equals ``q``, else ``None``."""
    G, M = q.domain, q.coeffs
    if not G.is_finite:
        raise InfiniteGroupError("exhaustive search needs a finite domain")
    s = G.ngens
    pairs = [(a, b) for a in range(s) for b in range(s)]
    options = [
        np.array(
            groups.torsion_subgroup_elements(M, math.gcd(G.torsion[a], G.torsion[b])), dtype=np.int64
        ).reshape(-1, M.ngens)
        for a, b in pairs
    ]
    total = math.prod(len(o) for o in options)
    if total > budget.max_candidates:
        raise BudgetExceeded(total, budget.max_candidates, "bilinear candidates")
    E = groups.finite_index(G).coords
    weights = np.stack([E[:, a] * E[:, b] for a, b in pairs], axis=1) if pairs else np.zeros((len(E), 0), np.int64)
    target = q.array()
    sizes = [len(o) for o in options]
    powers = [math.prod(sizes[p + 1 :]) for p in range(len(sizes))]
    step = max(1, _BATCH_CELLS // max(1, len(E) * max(1, M.ngens) * max(1, len(pairs))))
    for start in range(0, total, step):
        idx = np.arange(start, min(start + step, total), dtype=np.int64)
        traces = np.zeros((len(idx), len(E), M.ngens), dtype=np.int64)
        for p in range(len(pairs)):
            entry = options[p][(idx // powers[p]) % sizes[p]]  # (B, d)
            traces += weights[None, :, p, None] * entry[:, None, :]
        groups.reduce_array(M, traces)
        hit = np.flatnonzero((traces == target[None]).all(axis=(1, 2)))
        if len(hit):
            i = int(idx[hit[0]])
            rows = [[None] * s for _ in range(s)]
            for p, (a, b) in enumerate(pairs):
                rows[a][b] = tuple(int(v) for v in options[p][(i // powers[p]) % sizes[p]])
            C = BilinearFormMatrix(G, M, rows)
            if any(forms.eval_bilinear(C, x, x) != q(x) for x in groups.iter_elements(G)):
                raise AssertionError("bilinear witness failed re-verification")
            return C
    return None


class _Dfs:
    """Depth-first assignment of every ``h`` and ``c`` entry with early equation checks."""

    def __init__(self, G: FgAbGroup, M: FgAbGroup, order: str):
        idx = groups.finite_index(G)
        N, A = idx.size, idx.add.tolist()
        self.G, self.M, self.N = G, M, N
        self.melts = groups.enumerate_elements(M)
        mindex = {m: i for i, m in enumerate(self.melts)}
        self.madd = [[mindex[groups.add(M, x, y)] for y in self.melts] for x in self.melts]
        exponent = math.lcm(1, *M.torsion)
        self.exponent = exponent
        self.smul = [[mindex[groups.scale(M, s, x)] for x in self.melts] for s in range(exponent)]
        hv = list(itertools.product(range(N), repeat=3))
        cv = list(itertools.product(range(N), repeat=2))
        if order == "c-first":
            names = [("c", v) for v in cv] + [("h", v) for v in hv]
        elif order == "h-first":
            names = [("h", v) for v in hv] + [("c", v) for v in cv]
        else:
            raise ValueError(f"unknown search order {order!r}")
        self.names = names
        pos = {nm: i for i, nm in enumerate(names)}
        H = lambda a, b, c: pos["h", (a, b, c)]  # noqa: E731
        Cc = lambda a, b: pos["c", (a, b)]  # noqa: E731
        eqs = []
        R = range(N)
        for g1, g2, g3, g4 in itertools.product(R, repeat=4):
            eqs.append([(H(g1, g2, g3), 1), (H(g1, A[g2][g3], g4), 1), (H(g2, g3, g4), 1),
                        (H(A[g1][g2], g3, g4), -1), (H(g1, g2, A[g3][g4]), -1)])
        for x, y, z in itertools.product(R, repeat=3):
            eqs.append([(H(y, z, x), 1), (Cc(x, A[y][z]), 1), (H(x, y, z), 1),
                        (Cc(x, z), -1), (H(y, x, z), -1), (Cc(x, y), -1)])
            eqs.append([(H(z, x, y), -1), (Cc(A[x][y], z), 1), (H(x, y, z), -1),
                        (Cc(x, z), -1), (H(x, z, y), 1), (Cc(y, z), -1)])
        self.attached = [[] for _ in names]
        for terms in eqs:
            coef = {}
            for v, s in terms:
                coef[v] = coef.get(v, 0) + s
            coef = {v: s % exponent for v, s in coef.items() if s % exponent}
            if coef:
                self.attached[max(coef)].append(tuple(coef.items()))

    def run(self, prefix: tuple[int, ...], node_limit: int):
        nv, nm = len(self.names), len(self.melts)
        vals = [0] * nv
        vals[: len(prefix)] = prefix
        madd, smul, attached = self.madd, self.smul, self.attached
        found = []
        nodes = 0

        def holds(i):
            for eq in attached[i]:
                acc = 0
                for v, s in eq:
                    acc = madd[acc][smul[s][vals[v]]]
                if acc:
                    return False
            return True

        def rec(i):
            nonlocal nodes
            if i == nv:
                found.append(tuple(vals))
                return
            for v in range(nm):
                nodes += 1
                if nodes > node_limit:
                    raise BudgetExceeded(nodes, node_limit, "DFS nodes")
                vals[i] = v
                if holds(i):
                    rec(i + 1)

        for i in range(len(prefix)):
            if not holds(i):
                return found, nodes
        rec(len(prefix))
        return found, nodes

    def to_cocycle(self, assignment) -> TabulatedCocycle:
        N, d = self.N, self.M.ngens
        h = np.zeros((N, N, N, d), dtype=np.int64)
        c = np.zeros((N, N, d), dtype=np.int64)
        for (kind, args), v in zip(self.names, assignment):
            (h if kind == "h" else c)[args] = self.melts[v]
        return TabulatedCocycle(self.G, self.M, h, c)


def _canonical_key(tc: TabulatedCocycle):
    return tuple(_flatten(tc).tolist())


def enumerate_cocycles(
    G: FgAbGroup,
    M: FgAbGroup,
    budget: SearchBudget = SearchBudget(),
    order: str = "h-first",
    threads: int = 1,
) -> CocycleEnumeration:
    """Every pair ``(h, c)`` satisfying the pentagon and both hexagons.

    The budget caps DFS nodes, not the raw table space.  ``order`` picks
    which table is assigned first; the result set and its order do not
    depend on it (or on ``threads``), only the node count does.
    """
    _finite_pair(G, M)
    dfs = _Dfs(G, M, order)
    limit = budget.max_candidates
    if threads > 1 and dfs.names:
        prefixes = [(v,) for v in range(len(dfs.melts))]
        with ThreadPoolExecutor(threads) as pool:
            parts = list(pool.map(lambda p: dfs.run(p, limit), prefixes))
        found = [a for part, _ in parts for a in part]
        nodes = len(prefixes) + sum(n for _, n in parts)
    else:
        found, nodes = dfs.run((), limit)
    if nodes > limit:
        raise BudgetExceeded(nodes, limit, "DFS nodes")
    log.debug("enumerate_cocycles(%s, %s, %s): %d nodes, %d cocycles", G, M, order, nodes, len(found))
    tables = sorted((dfs.to_cocycle(a) for a in set(found)), key=_canonical_key)
    return CocycleEnumeration(tables, nodes, order)


def _class_count_from(engine: CoboundaryEngine, cocycle_list, threads: int = 1) -> int:
    """Count cosets of the coboundary image among ``cocycle_list``.

    Sweeps the list in order; each unassigned cocycle ``a`` claims every
    member of ``a + B``.  Since the image ``B`` is a subgroup this is the
    same partition a pairwise union-find would produce.
    """
    M = engine.M
    dtype = _row_dtype(M)
    image = engine.image(threads)
    B = np.stack([np.frombuffer(key, dtype=dtype) for key in image]).astype(np.int64)
    flat = [_flatten(tc) for tc in cocycle_list]
    where = {}
    if flat:
        for i, key in enumerate(_encode_rows(M, np.stack(flat))):
            where[key.tobytes()] = i
    label = [-1] * len(flat)
    classes = 0
    for i, row in enumerate(flat):
        if label[i] >= 0:
            continue
        coset = groups.reduce_array(M, (row[None, :] + B).reshape(len(B), -1, M.ngens))
        for key in _encode_rows(M, coset.reshape(len(B), -1)):
            j = where.get(key.tobytes())
            if j is None:
                raise AssertionError("cocycle set is not closed under adding coboundaries")
            label[j] = classes
        classes += 1
    return classes


def class_count(
    G: FgAbGroup, M: FgAbGroup, budget: SearchBudget = SearchBudget(), threads: int = 1
) -> int:
    """Number of cohomology classes among all enumerated cocycles."""
    engine = CoboundaryEngine(G, M)
    engine.check_budget(budget)
    found = enumerate_cocycles(G, M, budget, threads=threads)
    return _class_count_from(engine, found.cocycles, threads)


def separate_all_quads(
    G: FgAbGroup, M: FgAbGroup, budget: SearchBudget = SearchBudget(), threads: int = 1
) -> SeparationResult:
    """Check that distinct quadratic forms give non-cohomologous cocycles.

    The full coboundary image is enumerated once (every cochain visited) and
    each ordered pair ``(q, q')`` is then a membership test on
    ``from_quad(q) - from_quad(q')``.
    """
    engine = CoboundaryEngine(G, M)
    engine.check_budget(budget)
    quads = forms.enumerate_quads(G, M)
    tables = [cocycles.tabulate(cocycles.from_quad(q)) for q in quads]
    image = engine.image(threads)
    checked = 0
    for (i, a), (j, b) in itertools.permutations(enumerate(tables), 2):
        checked += 1
        diff = cocycles.subtract(a, b)
        key = _encode_rows(M, _flatten(diff)[None, :])[0].tobytes()
        if key in image:
            witness = _verified_witness(engine, image[key], diff)
            return SeparationResult(False, len(quads), checked, (quads[i], quads[j]), witness)
    return SeparationResult(True, len(quads), checked)


def representability_agreement(
    G: FgAbGroup, M: FgAbGroup, budget: SearchBudget = SearchBudget()
) -> list[tuple[QuadraticFormParams, bool, bool]]:
    """``(q, criterion, search)`` for every form where the two disagree."""
    out = []
    for q in forms.iter_quads(G, M):
        criterion = represent.is_trace_of_bilinear(q)
        found = exhaustive_representable(forms.tabulate_quad(q), budget) is not None
        if criterion != found:
            out.append((q, criterion, found))
    return out
