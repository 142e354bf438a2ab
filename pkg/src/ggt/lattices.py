"""Exact integer lattice algebra: normal forms, saturation, free abelian
pushouts and abelianizations of graphs of free abelian groups.

Matrices are lists of rows of Python ints.  Nothing here touches floats.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

Matrix = list


class TorsionError(ArithmeticError):
    """Raised when a quotient that should be free abelian has torsion."""

    def __init__(self, divisors):
        self.divisors = tuple(divisors)
        super().__init__(f"torsion in quotient, elementary divisors {list(self.divisors)}")


class DegenerateError(ValueError):
    pass


# ----------------------------------------------------------------- helpers


def zeros(m: int, n: int) -> Matrix:
    return [[0] * n for _ in range(m)]


def identity(n: int) -> Matrix:
    return [[int(i == j) for j in range(n)] for i in range(n)]


def copy(a: Sequence[Sequence[int]]) -> Matrix:
    return [list(r) for r in a]


def shape(a: Sequence[Sequence[int]], ncols: int | None = None):
    m = len(a)
    n = len(a[0]) if m else (ncols or 0)
    return m, n


def matmul(a, b, inner: int | None = None) -> Matrix:
    m = len(a)
    k = len(a[0]) if m else (inner or len(b))
    n = len(b[0]) if b else 0
    out = zeros(m, n)
    for i in range(m):
        ai = a[i]
        oi = out[i]
        for t in range(k):
            x = ai[t]
            if x:
                bt = b[t]
                for j in range(n):
                    oi[j] += x * bt[j]
    return out


def transpose(a, ncols: int | None = None) -> Matrix:
    m, n = shape(a, ncols)
    return [[a[i][j] for i in range(m)] for j in range(n)]


def columns(a) -> list:
    return [tuple(c) for c in transpose(a)]


def from_columns(cols, nrows: int) -> Matrix:
    if not cols:
        return [[] for _ in range(nrows)]
    return [[c[i] for c in cols] for i in range(nrows)]


def block_diag(*blocks) -> Matrix:
    rows = sum(len(b) for b in blocks)
    cols = sum((len(b[0]) if b else 0) for b in blocks)
    out = zeros(rows, cols)
    r = c = 0
    for b in blocks:
        for i, row in enumerate(b):
            for j, x in enumerate(row):
                out[r + i][c + j] = x
        r += len(b)
        c += len(b[0]) if b else 0
    return out


def det(a) -> int:
    """Exact determinant by fraction-free elimination (Bareiss)."""
    n = len(a)
    if n == 0:
        return 1
    m = copy(a)
    sign, prev = 1, 1
    for k in range(n - 1):
        if m[k][k] == 0:
            for i in range(k + 1, n):
                if m[i][k]:
                    m[k], m[i] = m[i], m[k]
                    sign = -sign
                    break
            else:
                return 0
        for i in range(k + 1, n):
            for j in range(k + 1, n):
                m[i][j] = (m[i][j] * m[k][k] - m[i][k] * m[k][j]) // prev
        prev = m[k][k]
    return sign * m[n - 1][n - 1]


# ------------------------------------------------------------ normal forms


def hnf(m: Sequence[Sequence[int]], with_transform: bool = False):
    """Column-style Hermite normal form H = m U (U unimodular).

    Pivot rows strictly increase with the column index, pivots are positive,
    entries left of a pivot lie in [0, pivot), and zero columns come last.
    """
    h = copy(m)
    rows, cols = shape(h)
    u = identity(cols)

    def colop(dst, src, q):  # col_dst -= q col_src
        if q:
            for r in range(rows):
                h[r][dst] -= q * h[r][src]
            for r in range(cols):
                u[r][dst] -= q * u[r][src]

    def swap(a, b):
        if a != b:
            for r in range(rows):
                h[r][a], h[r][b] = h[r][b], h[r][a]
            for r in range(cols):
                u[r][a], u[r][b] = u[r][b], u[r][a]

    def negate(a):
        for r in range(rows):
            h[r][a] = -h[r][a]
        for r in range(cols):
            u[r][a] = -u[r][a]

    c = 0
    for i in range(rows):
        if c >= cols:
            break
        while True:
            nz = [j for j in range(c, cols) if h[i][j]]
            if not nz:
                break
            p = min(nz, key=lambda j: (abs(h[i][j]), j))
            swap(c, p)
            done = True
            for j in range(c + 1, cols):
                if h[i][j]:
                    colop(j, c, h[i][j] // h[i][c])
                    if h[i][j]:
                        done = False
            if done:
                break
        if c < cols and h[i][c]:
            if h[i][c] < 0:
                negate(c)
            for j in range(c):
                colop(j, c, h[i][j] // h[i][c])
            c += 1
    if with_transform:
        return h, u
    return h


def row_hnf(m: Sequence[Sequence[int]], ncols: int | None = None) -> Matrix:
    """Row-style Hermite normal form (left unimodular action), zero rows
    dropped."""
    t = hnf(transpose(m, ncols))
    out = transpose(t, len(m))
    return [r for r in out if any(r)]


def snf(m: Sequence[Sequence[int]], ncols: int | None = None):
    """Smith normal form: returns (U, D, V) with U m V = D, U and V
    unimodular and the diagonal of D a nonnegative divisibility chain."""
    a = copy(m)
    rows, cols = shape(a, ncols)
    if rows and not cols:
        a = [[] for _ in range(rows)]
    u = identity(rows)
    v = identity(cols)

    def rowop(dst, src, q):  # row_dst -= q row_src
        if q:
            a[dst] = [x - q * y for x, y in zip(a[dst], a[src])]
            u[dst] = [x - q * y for x, y in zip(u[dst], u[src])]

    def colop(dst, src, q):
        if q:
            for r in range(rows):
                a[r][dst] -= q * a[r][src]
            for r in range(cols):
                v[r][dst] -= q * v[r][src]

    def rowswap(i, j):
        if i != j:
            a[i], a[j] = a[j], a[i]
            u[i], u[j] = u[j], u[i]

    def colswap(i, j):
        if i != j:
            for r in range(rows):
                a[r][i], a[r][j] = a[r][j], a[r][i]
            for r in range(cols):
                v[r][i], v[r][j] = v[r][j], v[r][i]

    for t in range(min(rows, cols)):
        while True:
            best = None
            for i in range(t, rows):
                for j in range(t, cols):
                    x = a[i][j]
                    if x and (best is None or abs(x) < best[0]):
                        best = (abs(x), i, j)
            if best is None:
                break
            _, i, j = best
            rowswap(t, i)
            colswap(t, j)
            p = a[t][t]
            clean = True
            for i in range(t + 1, rows):
                if a[i][t]:
                    rowop(i, t, a[i][t] // p)
                    if a[i][t]:
                        clean = False
            for j in range(t + 1, cols):
                if a[t][j]:
                    colop(j, t, a[t][j] // p)
                    if a[t][j]:
                        clean = False
            if not clean:
                continue
            bad = None
            for i in range(t + 1, rows):
                for j in range(t + 1, cols):
                    if a[i][j] % p:
                        bad = i
                        break
                if bad is not None:
                    break
            if bad is None:
                break
            rowop(t, bad, -1)
        if t < rows and t < cols and a[t][t] < 0:
            a[t] = [-x for x in a[t]]
            u[t] = [-x for x in u[t]]
    return u, a, v


def diagonal(d) -> list:
    return [d[i][i] for i in range(min(len(d), len(d[0]) if d else 0))]


def elementary_divisors(m, ncols: int | None = None) -> list:
    _, d, _ = snf(m, ncols)
    return [x for x in diagonal(d) if x]


def rank(m, ncols: int | None = None) -> int:
    return len(elementary_divisors(m, ncols))


def solve(a, b, ncols: int | None = None):
    """Integer solution x of a x = b, or None."""
    rows, cols = shape(a, ncols)
    u, d, v = snf(a, cols)
    ub = [sum(u[i][k] * b[k] for k in range(rows)) for i in range(rows)]
    y = [0] * cols
    for i in range(rows):
        di = d[i][i] if i < cols else 0
        if di:
            if ub[i] % di:
                return None
            y[i] = ub[i] // di
        elif ub[i]:
            return None
    return [sum(v[r][k] * y[k] for k in range(cols)) for r in range(cols)]


def kernel(a, ncols: int | None = None) -> Matrix:
    """Basis of the integer kernel as columns of the returned matrix."""
    rows, cols = shape(a, ncols)
    _, d, v = snf(a, cols)
    r = len([x for x in diagonal(d) if x]) if rows else 0
    keep = [[v[i][j] for j in range(r, cols)] for i in range(cols)]
    return keep


def right_inverse(p, ncols: int | None = None) -> Matrix:
    """Integer S with p S = I for a surjective p (all divisors 1)."""
    rows, cols = shape(p, ncols)
    u, d, v = snf(p, cols)
    divs = diagonal(d)
    if len(divs) < rows or any(x != 1 for x in divs[:rows]):
        raise ValueError("matrix is not surjective over Z")
    vm = [row[:rows] for row in v]
    return matmul(vm, u, rows)


# ------------------------------------------------------------- data types


@dataclass(frozen=True)
class Lattice:
    rank: int

    def __post_init__(self):
        if self.rank < 0:
            raise ValueError("negative rank")


@dataclass(frozen=True)
class LatticeMap:
    """Homomorphism Z^cols -> Z^rows as an integer matrix."""

    matrix: tuple
    rows: int
    cols: int

    @classmethod
    def of(cls, rows_list, nrows: int | None = None, ncols: int | None = None) -> "LatticeMap":
        m = tuple(tuple(int(x) for x in r) for r in rows_list)
        r = len(m) if nrows is None else nrows
        c = (len(m[0]) if m else 0) if ncols is None else ncols
        if len(m) != r or any(len(row) != c for row in m):
            raise ValueError("inconsistent matrix shape")
        return cls(m, r, c)

    @classmethod
    def from_columns(cls, cols, nrows: int) -> "LatticeMap":
        return cls.of(from_columns(cols, nrows), nrows, len(cols))

    @classmethod
    def identity(cls, n: int) -> "LatticeMap":
        return cls.of(identity(n), n, n)

    def as_list(self) -> Matrix:
        return [list(r) for r in self.matrix]

    def columns(self) -> list:
        return [tuple(self.matrix[i][j] for i in range(self.rows)) for j in range(self.cols)]

    def apply(self, vec) -> tuple:
        return tuple(sum(self.matrix[i][j] * vec[j] for j in range(self.cols)) for i in range(self.rows))

    def compose(self, other: "LatticeMap") -> "LatticeMap":
        """self after other."""
        if other.rows != self.cols:
            raise ValueError("shape mismatch in composition")
        return LatticeMap.of(matmul(self.as_list(), other.as_list(), self.cols), self.rows, other.cols)

    def is_injective(self) -> bool:
        return rank(self.as_list(), self.cols) == self.cols

    def preimage(self, vec):
        """x with self(x) = vec, or None."""
        return solve(self.as_list(), list(vec), self.cols)


@dataclass(frozen=True)
class AbelianDiagram:
    nodes: tuple
    arrows: tuple  # (source index, target index, LatticeMap)

    def __post_init__(self):
        for s, t, f in self.arrows:
            if f.cols != self.nodes[s].rank or f.rows != self.nodes[t].rank:
                raise ValueError(f"arrow {s}->{t} has shape {f.rows}x{f.cols}")


# ------------------------------------------------------------- operations


def saturate(sub: LatticeMap) -> LatticeMap:
    """Inclusion of the minimal direct factor containing the image."""
    if not sub.is_injective():
        raise ValueError("saturate needs an injective map")
    n, k = sub.rows, sub.cols
    if k == 0:
        return LatticeMap.of([[] for _ in range(n)], n, 0)
    u, _, _ = snf(sub.as_list(), k)
    uinv = _unimodular_inverse(u)
    cols = [[uinv[i][j] for i in range(n)] for j in range(k)]
    basis = hnf(from_columns(cols, n))
    return LatticeMap.of([row[:k] for row in basis], n, k)


def _unimodular_inverse(u) -> Matrix:
    n = len(u)
    out = zeros(n, n)
    for j in range(n):
        e = [int(i == j) for i in range(n)]
        x = solve(u, e, n)
        for i in range(n):
            out[i][j] = x[i]
    return out


def is_saturated(sub: LatticeMap) -> bool:
    divs = elementary_divisors(sub.as_list(), sub.cols)
    return len(divs) == sub.cols and all(d == 1 for d in divs)


def _quotient(relations, n: int, strict: bool):
    """Projection Z^n -> Z^n / span(relations) in row-HNF coordinates.

    ``relations`` is a list of vectors.  With ``strict`` torsion raises,
    otherwise it is divided out (the relation lattice is saturated).
    """
    rel = from_columns(relations, n) if relations else [[] for _ in range(n)]
    ncols = len(relations)
    if ncols:
        u, d, _ = snf(rel, ncols)
        divs = [x for x in diagonal(d) if x]
        tors = [x for x in divs if x > 1]
        if tors and strict:
            raise TorsionError(tors)
        r = len(divs)
    else:
        u, r = identity(n), 0
    proj = [list(row) for row in u[r:]]
    if not proj:
        return []
    return row_hnf(proj, n)


def pushout_free_abelian(i1: LatticeMap, i2: LatticeMap):
    """Pushout of A1 <- C -> A2 among free abelian groups.

    Returns ``(M, j1, j2)``.  M is the Z-span of A1 and A2 inside the
    rational pushout, i.e. the quotient by the saturated relation lattice.
    """
    if i1.cols != i2.cols:
        raise ValueError("the two maps have different sources")
    if i1.cols == 0:
        raise DegenerateError("the common subgroup has rank 0")
    if not (i1.is_injective() and i2.is_injective()):
        raise ValueError("pushout legs must be injective")
    a1, a2, c = i1.rows, i2.rows, i1.cols
    rels = []
    for j in range(c):
        rels.append(tuple(i1.matrix[i][j] for i in range(a1)) + tuple(-i2.matrix[i][j] for i in range(a2)))
    proj = _quotient(rels, a1 + a2, strict=False)
    m = len(proj)
    j1 = LatticeMap.of([row[:a1] for row in proj], m, a1)
    j2 = LatticeMap.of([row[a1:] for row in proj], m, a2)
    return Lattice(m), j1, j2


def abelianize_diagram(d: AbelianDiagram, graph_rank: int):
    """Abelianization of the fundamental group of a graph of free abelian
    groups.  Edge groups are nodes with two outgoing arrows.

    Returns ``(Lattice, legs)`` with one leg per node followed by the leg of
    the free part Z^graph_rank.  Raises TorsionError on torsion.
    """
    if graph_rank < 0:
        raise ValueError("negative graph rank")
    offsets, n = [], 0
    for node in d.nodes:
        offsets.append(n)
        n += node.rank
    rels = []
    for s, t, f in d.arrows:
        for j in range(f.cols):
            v = [0] * n
            v[offsets[s] + j] += 1
            for i in range(f.rows):
                v[offsets[t] + i] -= f.matrix[i][j]
            rels.append(tuple(v))
    proj = _quotient(rels, n, strict=True)
    m = len(proj)
    total = m + graph_rank
    legs = []
    for node, off in zip(d.nodes, offsets):
        rows = [row[off : off + node.rank] for row in proj] + [[0] * node.rank for _ in range(graph_rank)]
        legs.append(LatticeMap.of(rows, total, node.rank))
    free = [[0] * graph_rank for _ in range(m)] + identity(graph_rank)
    legs.append(LatticeMap.of(free, total, graph_rank))
    return Lattice(total), legs


def betti_number(nodes: int, arrows: int, components: int = 1) -> int:
    return arrows - nodes + components


def complete_basis(sub: LatticeMap) -> Matrix:
    """Unimodular matrix whose first columns are those of a saturated
    inclusion ``sub``."""
    n, k = sub.rows, sub.cols
    if k == 0:
        return identity(n)
    if not is_saturated(sub):
        raise ValueError("only a direct factor extends to a basis")
    u, _, _ = snf(sub.as_list(), k)
    uinv = _unimodular_inverse(u)
    out = [list(sub.matrix[i]) + [uinv[i][j] for j in range(k, n)] for i in range(n)]
    if abs(det(out)) != 1:
        raise ArithmeticError("basis completion is not unimodular")
    return out


def inverse_unimodular(a) -> Matrix:
    if abs(det(a)) != 1:
        raise ValueError("matrix is not unimodular")
    return _unimodular_inverse(a)
