"""Exact rational linear algebra on small dense matrices.

Matrices are lists of rows whose entries are ints or ``Fraction``.  Nothing
here touches floating point, so rank and null-space answers are exact.
"""

from __future__ import annotations

from fractions import Fraction
from math import gcd
from typing import Sequence

Matrix = list[list[Fraction]]


def to_fractions(rows: Sequence[Sequence]) -> Matrix:
    return [[Fraction(v) for v in row] for row in rows]


def transpose(rows: Sequence[Sequence]) -> Matrix:
    if not rows:
        return []
    return [list(col) for col in zip(*rows)]


def bareiss_rank(rows: Sequence[Sequence[int]]) -> int:
    """Rank of an integer matrix by fraction-free (Bareiss) elimination."""
    a = [[int(v) for v in row] for row in rows]
    if not a or not a[0]:
        return 0
    nrows, ncols = len(a), len(a[0])
    rank = 0
    prev = 1
    for col in range(ncols):
        pivot = next((i for i in range(rank, nrows) if a[i][col] != 0), None)
        if pivot is None:
            continue
        a[rank], a[pivot] = a[pivot], a[rank]
        p = a[rank][col]
        for i in range(rank + 1, nrows):
            for j in range(col + 1, ncols):
                # exact division is guaranteed by Sylvester's identity
                a[i][j] = (p * a[i][j] - a[i][col] * a[rank][j]) // prev
            a[i][col] = 0
        prev = p
        rank += 1
        if rank == nrows:
            break
    return rank


def rref(rows: Sequence[Sequence]) -> tuple[Matrix, list[int]]:
    """Reduced row echelon form and pivot columns."""
    a = to_fractions(rows)
    if not a:
        return [], []
    nrows, ncols = len(a), len(a[0])
    pivots: list[int] = []
    r = 0
    for col in range(ncols):
        pivot = next((i for i in range(r, nrows) if a[i][col] != 0), None)
        if pivot is None:
            continue
        a[r], a[pivot] = a[pivot], a[r]
        pv = a[r][col]
        a[r] = [v / pv for v in a[r]]
        for i in range(nrows):
            if i != r and a[i][col] != 0:
                factor = a[i][col]
                a[i] = [vi - factor * vr for vi, vr in zip(a[i], a[r])]
        pivots.append(col)
        r += 1
        if r == nrows:
            break
    return a, pivots


def rank(rows: Sequence[Sequence]) -> int:
    if all(Fraction(v).denominator == 1 for row in rows for v in row):
        return bareiss_rank(rows)
    return len(rref(rows)[1])


def nullspace(rows: Sequence[Sequence], ncols: int | None = None) -> Matrix:
    """Basis of the right null space, one vector per entry, from the RREF."""
    if ncols is None:
        ncols = len(rows[0]) if rows else 0
    if not rows:
        return [[Fraction(int(i == j)) for j in range(ncols)] for i in range(ncols)]
    red, pivots = rref(rows)
    free = [j for j in range(ncols) if j not in pivots]
    basis = []
    for fj in free:
        v = [Fraction(0)] * ncols
        v[fj] = Fraction(1)
        for i, pj in enumerate(pivots):
            v[pj] = -red[i][fj]
        basis.append(v)
    return basis


def left_nullspace_rref(rows: Sequence[Sequence], nrows: int) -> Matrix:
    """Left null space of an ``nrows``-row matrix, as rows of an RREF matrix."""
    basis = nullspace(transpose(rows), nrows) if rows and rows[0] else nullspace([], nrows)
    if not basis:
        return []
    red, pivots = rref(basis)
    return red[: len(pivots)]


def independent_columns(rows: Sequence[Sequence]) -> list[int]:
    """Lexicographically first maximal set of linearly independent columns."""
    return rref(rows)[1] if rows else []


def solve(a: Sequence[Sequence], b: Sequence[Sequence]) -> Matrix:
    """Exact solution X of A X = B for A with independent columns.

    Raises ``ValueError`` when B is not in the column space of A.
    """
    a = to_fractions(a)
    b = to_fractions(b)
    nrows = len(a)
    ncols = len(a[0]) if a else 0
    nrhs = len(b[0]) if b else 0
    aug = [a[i] + b[i] for i in range(nrows)]
    red, pivots = rref(aug)
    if any(p >= ncols for p in pivots):
        raise ValueError("right-hand side is not in the column space")
    if len(pivots) < ncols:
        raise ValueError("matrix has dependent columns")
    x = [[Fraction(0)] * nrhs for _ in range(ncols)]
    for i, pj in enumerate(pivots):
        x[pj] = red[i][ncols:]
    return x


def inverse(a: Sequence[Sequence]) -> Matrix:
    n = len(a)
    eye = [[Fraction(int(i == j)) for j in range(n)] for i in range(n)]
    return solve(a, eye)


def matmul(a: Sequence[Sequence], b: Sequence[Sequence]) -> Matrix:
    bt = transpose(b)
    return [[sum((Fraction(x) * y for x, y in zip(row, col)), Fraction(0)) for col in bt] for row in a]


def primitive(vec: Sequence) -> list[int]:
    """Scale a rational vector to coprime integers, keeping its sign."""
    fr = [Fraction(v) for v in vec]
    den = 1
    for v in fr:
        den = den * v.denominator // gcd(den, v.denominator)
    ints = [int(v * den) for v in fr]
    g = 0
    for v in ints:
        g = gcd(g, abs(v))
    return [v // g for v in ints] if g else ints


def particular_solution(a: Sequence[Sequence], b: Sequence) -> list[Fraction]:
    """One exact solution x of A x = b (free variables set to zero).

    Raises ``ValueError`` when the system is inconsistent.
    """
    a = to_fractions(a)
    ncols = len(a[0]) if a else 0
    aug = [row + [Fraction(bi)] for row, bi in zip(a, b)]
    red, pivots = rref(aug)
    if ncols in pivots:
        raise ValueError("system is inconsistent")
    x = [Fraction(0)] * ncols
    for i, pj in enumerate(pivots):
        x[pj] = red[i][ncols]
    return x
