"""Small dense linear algebra over exact rationals.

Used for morphism injectivity/rank checks, preimage solving in colimit
canonicalization, first-layer generation ranks, and the exact positive
semidefiniteness test behind Carnot-Caratheodory 1-Lipschitz
certificates. Matrices are lists of lists of Fractions; sizes here are
tiny (basis dimensions), so Gaussian elimination is plenty.
"""

from __future__ import annotations

from fractions import Fraction


def _clone(mat):
    return [[Fraction(x) for x in row] for row in mat]


def rref(mat):
    """Reduced row echelon form; returns (rref_matrix, pivot_columns)."""
    m = _clone(mat)
    if not m:
        return m, []
    rows, cols = len(m), len(m[0])
    pivots = []
    r = 0
    for c in range(cols):
        pivot = next((i for i in range(r, rows) if m[i][c] != 0), None)
        if pivot is None:
            continue
        m[r], m[pivot] = m[pivot], m[r]
        pv = m[r][c]
        m[r] = [x / pv for x in m[r]]
        for i in range(rows):
            if i != r and m[i][c] != 0:
                f = m[i][c]
                m[i] = [a - f * b for a, b in zip(m[i], m[r])]
        pivots.append(c)
        r += 1
        if r == rows:
            break
    return m, pivots


def rank(mat):
    return len(rref(mat)[1])


def solve(mat, rhs):
    """Solve mat @ x = rhs exactly; returns x or None if inconsistent.

    When the system is underdetermined, free variables are set to zero.
    """
    if not mat:
        return [] if all(b == 0 for b in rhs) else None
    rows, cols = len(mat), len(mat[0])
    aug = [list(mat[i]) + [Fraction(rhs[i])] for i in range(rows)]
    reduced, pivots = rref(aug)
    if cols in pivots:  # pivot in the augmented column: inconsistent
        return None
    x = [Fraction(0)] * cols
    for i, c in enumerate(pivots):
        x[c] = reduced[i][cols]
    return x


def is_psd(mat):
    """Exact test that a symmetric rational matrix is positive semidefinite.

    Recursive congruence elimination: a symmetric M is PSD iff the
    top-left diagonal entry is nonnegative, its row/column vanish when it
    is zero, and the Schur complement is PSD.
    """
    m = _clone(mat)
    n = len(m)
    for i in range(n):
        assert len(m[i]) == n, "matrix must be square"
        for j in range(i):
            assert m[i][j] == m[j][i], "matrix must be symmetric"
    for k in range(n):
        d = m[k][k]
        if d < 0:
            return False
        if d == 0:
            if any(m[k][j] != 0 for j in range(k + 1, n)):
                return False
            continue
        for i in range(k + 1, n):
            f = m[i][k] / d
            for j in range(k + 1, n):
                m[i][j] -= f * m[k][j]
            m[i][k] = Fraction(0)
    return True
