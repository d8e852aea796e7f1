"""Tropical checks and the 2 x n -> 3 x n lift.

A subtree-weight vector w lies in the tropical hypersurface of the three-term
Plücker relation p_Rij p_Rkl - p_Rik p_Rjl + p_Ril p_Rjk exactly when the
maximum of w_Rij + w_Rkl, w_Rik + w_Rjl, w_Ril + w_Rjk is attained twice;
:func:`trop_membership` runs that test over all R and quartets.

The lift sends column (a, b) of a 2 x n matrix to (a^2, ab, b) (``row3 =
"linear"``) or to the Veronese column (a^2, ab, b^2) (``row3 = "square"``).
For the Veronese form every 3 x 3 minor factors as the product of the three
2 x 2 minors of the source columns; the linear form only does so in special
cases (for instance when all b are equal), which
:func:`verify_minor_factorization` makes visible.
"""

from __future__ import annotations

from dataclasses import dataclass
from itertools import combinations

from .mdissim import ConditionReport, MMap, max_twice_report
from .tree_core import WeightedTree

ROW3_FORMS = ("linear", "square")


def trop_membership(mmap: MMap, limit: int | None = None) -> ConditionReport:
    """Is ``mmap`` in Trop of every three-term Plücker relation?

    ``passed`` means member; each violation names a relation (R, quartet) whose
    maximum is attained only once.
    """
    return max_twice_report(mmap, limit)


def _columns(matrix) -> list[tuple]:
    rows = [list(r) for r in matrix]
    if not rows or any(len(r) != len(rows[0]) for r in rows):
        raise ValueError("matrix rows must have equal length")
    return [tuple(r[c] for r in rows) for c in range(len(rows[0]))]


def _plain(x):
    # numpy scalars -> Python numbers, so Fractions and floats mix predictably
    return x.item() if hasattr(x, "item") else x


@dataclass(frozen=True)
class LiftedMatrix:
    source: tuple
    lifted: tuple
    row3: str = "linear"

    @property
    def n(self) -> int:
        return len(self.source[0])


def lift(X, row3: str = "linear") -> LiftedMatrix:
    """Lift a 2 x n matrix to 3 x n, column by column."""
    if row3 not in ROW3_FORMS:
        raise ValueError(f"row3 must be one of {ROW3_FORMS}, got {row3!r}")
    rows = [tuple(_plain(x) for x in r) for r in X]
    if len(rows) != 2:
        raise ValueError("source matrix must have 2 rows")
    a, b = rows
    if len(a) != len(b) or len(a) < 3:
        raise ValueError("source matrix must be 2 x n with n >= 3")
    third = b if row3 == "linear" else tuple(y * y for y in b)
    lifted = (tuple(x * x for x in a), tuple(x * y for x, y in zip(a, b)), third)
    return LiftedMatrix((a, b), lifted, row3)


def det2(u, v):
    return u[0] * v[1] - v[0] * u[1]


def det3(a, b, c):
    """Determinant of the 3 x 3 matrix with columns a, b, c."""
    return (
        a[0] * (b[1] * c[2] - c[1] * b[2])
        - b[0] * (a[1] * c[2] - c[1] * a[2])
        + c[0] * (a[1] * b[2] - b[1] * a[2])
    )


def plucker_minors(matrix) -> dict:
    """All maximal minors p_abc of a 3 x n matrix, keyed by sorted index triples."""
    cols = _columns([[_plain(x) for x in r] for r in matrix])
    if len(matrix) != 3 or len(cols) < 3:
        raise ValueError("need a 3 x n matrix with n >= 3")
    return {(a, b, c): det3(cols[a], cols[b], cols[c]) for a, b, c in combinations(range(len(cols)), 3)}


def _relative(residual, scale):
    if scale == 0:
        return 0 if residual == 0 else float("inf")
    return abs(residual) / scale


def plucker_residuals(matrix) -> list[tuple]:
    """Three-term relations with |R| = 1 evaluated on the minors of ``matrix``.

    Returns ``(r, (i, j, k, l), residual, relative)`` for every r and every
    increasing quartet avoiding r; empty when n < 5.
    """
    cols = _columns([[_plain(x) for x in row] for row in matrix])
    n = len(cols)
    out = []
    for r in range(n):
        rest = [t for t in range(n) if t != r]
        for i, j, k, l in combinations(rest, 4):
            t1 = det3(cols[r], cols[i], cols[j]) * det3(cols[r], cols[k], cols[l])
            t2 = det3(cols[r], cols[i], cols[k]) * det3(cols[r], cols[j], cols[l])
            t3 = det3(cols[r], cols[i], cols[l]) * det3(cols[r], cols[j], cols[k])
            res = t1 - t2 + t3
            out.append((r, (i, j, k, l), res, _relative(res, abs(t1) + abs(t2) + abs(t3))))
    return out


def minor_factorization_residuals(X, row3: str = "linear") -> list[tuple]:
    """``((a, b, c), p_abc(lift X), p_ab p_ac p_bc, relative residual)`` per triple."""
    L = lift(X, row3)
    a_row, b_row = L.source
    src = list(zip(a_row, b_row))
    cols = list(zip(*L.lifted))
    out = []
    for a, b, c in combinations(range(len(src)), 3):
        big = det3(cols[a], cols[b], cols[c])
        prod = det2(src[a], src[b]) * det2(src[a], src[c]) * det2(src[b], src[c])
        out.append(((a, b, c), big, prod, _relative(big - prod, max(abs(big), abs(prod)))))
    return out


def verify_minor_factorization(X, row3: str = "linear"):
    """Largest relative residual of p_abc(lift X) - p_ab(X) p_ac(X) p_bc(X).

    Exactly 0 for rational input when the factorization holds.
    """
    return max(r[3] for r in minor_factorization_residuals(X, row3))


def verify_triple_identity(tree: WeightedTree) -> bool:
    """d(a,b) + d(a,c) + d(b,c) == 2 w([abc]) for every leaf triple."""
    tol = tree.mode.eps
    idx = range(tree.n)
    for a, b, c in combinations(idx, 3):
        ab = tree.subtree_weight_mask((1 << a) | (1 << b))
        ac = tree.subtree_weight_mask((1 << a) | (1 << c))
        bc = tree.subtree_weight_mask((1 << b) | (1 << c))
        abc = tree.subtree_weight_mask((1 << a) | (1 << b) | (1 << c))
        if abs(ab + ac + bc - 2 * abc) > tol:
            return False
    return True
