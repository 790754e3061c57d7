"""Blocked LU factorization with partial pivoting, GEMM-driven updates.

The packed result holds the unit-lower factor strictly below the
diagonal and the upper factor on and above it; ``piv[i]`` is the row
exchanged with row i at step i (so ``piv[i] >= i``).

Two organizations are provided.  The pivoted path factors each
full-height panel with the right-looking scalar routine, applies the
panel's row interchanges across the rest of the matrix, solves the
panel's row block of the upper factor, and updates the trailing matrix
through the GEMM backend with alpha = -1, beta = 1.  The no-pivot path
instead follows the textbook block sequence (factor the diagonal block,
two triangular solves, GEMM update), which is only safe for matrices
that need no row exchanges, such as diagonally dominant ones.

Scalar update arithmetic is fixed: one rounding for the product and one
for the subtraction, columns left to right, rows top to bottom.
"""

from __future__ import annotations

from dataclasses import dataclass

from . import _kernels
from . import quadfp
from .matrix import DimensionError, Matrix, TransposeFlag, mat_new
from .quadfp import QuadFloat
from .rgemm import GemmBackend, rgemm
from .systolic import reference_gemm

MINUS_ONE = quadfp.qneg(quadfp.ONE)


class SingularMatrixError(ArithmeticError):
    """Exactly zero pivot; ``column`` is the global column that failed."""

    def __init__(self, column: int):
        super().__init__(f"exactly zero pivot in column {column}")
        self.column = column


@dataclass
class LuFactors:
    lu: Matrix
    piv: list[int]
    block_b: int


def _elem_offset(a: Matrix, i: int, j: int) -> int:
    return a.offset + i + j * a.ld


def _factor_panel(a: Matrix, pivot: bool, col_offset: int) -> list[int]:
    """Right-looking scalar LU of a (rows x cols) panel, in place.

    Row interchanges stay within the panel's columns; the returned pivot
    indices are panel-relative.
    """
    m, n = a.rows, a.cols
    piv = []
    for j in range(min(m, n)):
        if pivot:
            p = j + _kernels.iamax(a.data, _elem_offset(a, j, j), m - j, 1)
        else:
            p = j
        piv.append(p)
        pivot_val = a.get(p, j)
        if quadfp.is_zero(pivot_val):
            raise SingularMatrixError(col_offset + j)
        a.swap_rows(j, p)
        below = m - j - 1
        if below > 0:
            _kernels.scal_div(a.data, _elem_offset(a, j + 1, j), below, 1, pivot_val)
            right = n - j - 1
            if right > 0:
                _kernels.rank1_sub(
                    a.data, _elem_offset(a, j + 1, j + 1), a.ld, below, right,
                    a.data, _elem_offset(a, j + 1, j), 1,
                    a.data, _elem_offset(a, j, j + 1), a.ld)
    return piv


def getrf_unblocked(a: Matrix, pivot: bool = True) -> LuFactors:
    """Scalar right-looking LU of a square matrix, in place."""
    if a.rows != a.cols:
        raise DimensionError(f"LU needs a square matrix, got {a.rows}x{a.cols}")
    piv = _factor_panel(a, pivot, 0)
    return LuFactors(lu=a, piv=piv, block_b=1)


def trsm_unit_lower(l11: Matrix, a12: Matrix) -> Matrix:
    """Solve L11 * X = A12 in place; L11 is unit lower triangular.

    Forward substitution, eliminating one solved row from all later rows
    at a time, which gives each element its updates in ascending order.
    """
    b, w = a12.rows, a12.cols
    if l11.rows != l11.cols or l11.rows != b:
        raise DimensionError("triangular factor does not match the right-hand side")
    for t in range(b):
        below = b - t - 1
        if below > 0 and w > 0:
            _kernels.rank1_sub(
                a12.data, _elem_offset(a12, t + 1, 0), a12.ld, below, w,
                l11.data, _elem_offset(l11, t + 1, t), 1,
                a12.data, _elem_offset(a12, t, 0), a12.ld)
    return a12


def trsm_upper_right(u11: Matrix, a21: Matrix) -> Matrix:
    """Solve X * U11 = A21 in place; U11 is upper triangular.

    Columns are finished left to right: divide by the diagonal, then
    eliminate the solved column from the columns to its right.
    """
    h, b = a21.rows, a21.cols
    if u11.rows != u11.cols or u11.cols != b:
        raise DimensionError("triangular factor does not match the right-hand side")
    for t in range(b):
        d = u11.get(t, t)
        if quadfp.is_zero(d):
            raise SingularMatrixError(t)
        if h > 0:
            _kernels.scal_div(a21.data, _elem_offset(a21, 0, t), h, 1, d)
        right = b - t - 1
        if right > 0 and h > 0:
            _kernels.rank1_sub(
                a21.data, _elem_offset(a21, 0, t + 1), a21.ld, h, right,
                a21.data, _elem_offset(a21, 0, t), 1,
                u11.data, _elem_offset(u11, t, t + 1), u11.ld)
    return a21


def getrf_blocked(a: Matrix, block_b: int = 108,
                  backend: GemmBackend | None = None,
                  pivot: bool = True) -> LuFactors:
    """Blocked LU of a square matrix in place; trailing updates run as GEMM."""
    if a.rows != a.cols:
        raise DimensionError(f"LU needs a square matrix, got {a.rows}x{a.cols}")
    if block_b < 1:
        raise DimensionError(f"block size must be >= 1, got {block_b}")
    if backend is None:
        backend = GemmBackend.reference()
    n = a.rows
    piv: list[int] = []
    for j in range(0, n, block_b):
        jb = min(block_b, n - j)
        rest = n - j - jb
        if pivot:
            panel = a.window(j, j, n - j, jb)
            local = _factor_panel(panel, True, j)
            piv.extend(j + p for p in local)
            left = a.window(0, 0, n, j) if j > 0 else None
            right = a.window(0, j + jb, n, rest) if rest > 0 else None
            for i, p in enumerate(local):
                if p != i:
                    if left is not None:
                        left.swap_rows(j + i, j + p)
                    if right is not None:
                        right.swap_rows(j + i, j + p)
        else:
            a11 = a.window(j, j, jb, jb)
            _factor_panel(a11, False, j)
            piv.extend(range(j, j + jb))
            if rest > 0:
                trsm_upper_right(a.window(j, j, jb, jb), a.window(j + jb, j, rest, jb))
        if rest > 0:
            trsm_unit_lower(a.window(j, j, jb, jb), a.window(j, j + jb, jb, rest))
            l21 = a.window(j + jb, j, rest, jb)
            u12 = a.window(j, j + jb, jb, rest)
            a22 = a.window(j + jb, j + jb, rest, rest)
            rgemm(TransposeFlag.NO_TRANSPOSE, TransposeFlag.NO_TRANSPOSE,
                  rest, rest, jb, MINUS_ONE, l21, l21.ld, u12, u12.ld,
                  quadfp.ONE, a22, a22.ld, backend)
    return LuFactors(lu=a, piv=piv, block_b=block_b)


# ---------------------------------------------------------------------------
# Reconstruction helpers (verification and benchmarking)
# ---------------------------------------------------------------------------


def unpack_l(f: LuFactors) -> Matrix:
    n = f.lu.rows
    out = mat_new(n, n)
    for i in range(n):
        out.set(i, i, quadfp.ONE)
        for j in range(i):
            out.set(i, j, f.lu.get(i, j))
    return out


def unpack_u(f: LuFactors) -> Matrix:
    n = f.lu.rows
    out = mat_new(n, n)
    for j in range(n):
        for i in range(j + 1):
            out.set(i, j, f.lu.get(i, j))
    return out


def apply_piv(a: Matrix, piv: list[int]) -> Matrix:
    """P*A: the recorded row exchanges applied to a copy of A, in order."""
    out = a.copy()
    for i, p in enumerate(piv):
        out.swap_rows(i, p)
    return out


def reconstruction_residual(original: Matrix, f: LuFactors) -> QuadFloat:
    """Mean absolute difference between P*A and L*U."""
    from .rgemm import e_l1

    pa = apply_piv(original, f.piv)
    prod = reference_gemm(unpack_l(f), unpack_u(f))
    return e_l1(pa, prod)
