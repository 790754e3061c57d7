"""GEMM with the standard BLAS calling convention: C <- alpha*op(A)*op(B) + beta*C.

The multiply kernel only ever sees plain (non-transposed) operands:
transposes are materialized host-side into scratch copies before
dispatch, and the alpha/beta combination is applied host-side after it,
one rounding per term in the fixed order add(mul(alpha, AB), mul(beta, C)).
Zero-valued alpha or beta drops its term entirely (BLAS overwrite
semantics) rather than multiplying through, so beta = 0 never reads C.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional

import numpy as np

from . import _kernels
from . import quadfp
from .matrix import DimensionError, Matrix, TransposeFlag
from .quadfp import MaddMode, QuadFloat
from .systolic import ArrayConfig, reference_gemm, simulate_gemm


class ArgumentError(ValueError):
    """Bad rgemm argument; ``index`` is its 1-based position in the call."""

    def __init__(self, index: int, message: str):
        super().__init__(f"argument {index}: {message}")
        self.index = index


@dataclass(frozen=True)
class GemmBackend:
    """Kernel selection: the plain reference loop or the tiled array."""

    kind: str
    cfg: Optional[ArrayConfig] = None
    madd_mode: MaddMode = MaddMode.TWO_ROUNDINGS

    @classmethod
    def reference(cls, madd_mode: MaddMode = MaddMode.TWO_ROUNDINGS) -> "GemmBackend":
        return cls("reference", None, madd_mode)

    @classmethod
    def systolic(cls, cfg: ArrayConfig) -> "GemmBackend":
        return cls("systolic", cfg, cfg.madd_mode)

    def run(self, a: Matrix, b: Matrix) -> Matrix:
        if self.kind == "systolic":
            assert self.cfg is not None
            return simulate_gemm(self.cfg, a, b).c_prime
        return reference_gemm(a, b, self.madd_mode)


def _transposed_copy(a: Matrix) -> Matrix:
    """Materialize A^T (host-side transpose before kernel dispatch)."""
    arr = a.data[2 * a.offset:2 * (a.offset + a.ld * a.cols)]
    cube = arr.reshape(a.cols, a.ld, 2)[:, :a.rows, :]
    flat = np.ascontiguousarray(cube.transpose(1, 0, 2)).reshape(-1)
    return Matrix(a.cols, a.rows, a.cols, flat)


def rgemm(transa: TransposeFlag, transb: TransposeFlag,
          m: int, n: int, k: int,
          alpha: QuadFloat, a: Matrix, lda: int,
          b: Matrix, ldb: int,
          beta: QuadFloat, c: Matrix, ldc: int,
          backend: GemmBackend) -> Matrix:
    """Mirror of the 13-argument multiprecision GEMM interface.

    ``lda``/``ldb``/``ldc`` exist for interface parity and must match the
    leading dimensions of the backing matrices.
    """
    if not isinstance(transa, TransposeFlag):
        raise ArgumentError(1, f"bad transpose flag {transa!r}")
    if not isinstance(transb, TransposeFlag):
        raise ArgumentError(2, f"bad transpose flag {transb!r}")
    if m < 0:
        raise ArgumentError(3, f"m = {m} is negative")
    if n < 0:
        raise ArgumentError(4, f"n = {n} is negative")
    if k < 0:
        raise ArgumentError(5, f"k = {k} is negative")
    nrowa, ncola = (m, k) if transa is TransposeFlag.NO_TRANSPOSE else (k, m)
    nrowb, ncolb = (k, n) if transb is TransposeFlag.NO_TRANSPOSE else (n, k)
    if a.rows < nrowa or a.cols < ncola:
        raise ArgumentError(7, f"a is {a.rows}x{a.cols}, needs {nrowa}x{ncola}")
    if lda != a.ld or lda < max(1, nrowa):
        raise ArgumentError(8, f"lda = {lda} invalid for {nrowa} rows (matrix ld {a.ld})")
    if b.rows < nrowb or b.cols < ncolb:
        raise ArgumentError(9, f"b is {b.rows}x{b.cols}, needs {nrowb}x{ncolb}")
    if ldb != b.ld or ldb < max(1, nrowb):
        raise ArgumentError(10, f"ldb = {ldb} invalid for {nrowb} rows (matrix ld {b.ld})")
    if c.rows < m or c.cols < n:
        raise ArgumentError(12, f"c is {c.rows}x{c.cols}, needs {m}x{n}")
    if ldc != c.ld or ldc < max(1, m):
        raise ArgumentError(13, f"ldc = {ldc} invalid for {m} rows (matrix ld {c.ld})")

    if m == 0 or n == 0:
        return c
    alpha_zero = quadfp.is_zero(alpha)
    beta_zero = quadfp.is_zero(beta)
    if alpha_zero or k == 0:
        if beta == quadfp.ONE:
            return c
        cw = c if (c.rows, c.cols) == (m, n) else c.window(0, 0, m, n)
        if beta_zero:
            for j in range(n):
                for i in range(m):
                    cw.set(i, j, quadfp.POS_ZERO)
        else:
            _kernels.scale_add(cw.data, cw.offset, cw.data, cw.offset,
                               m, n, cw.ld, cw.ld, quadfp.ONE, beta, 2)
        return c

    op_a = a if transa is TransposeFlag.NO_TRANSPOSE else _transposed_copy(a)
    op_b = b if transb is TransposeFlag.NO_TRANSPOSE else _transposed_copy(b)
    if (op_a.rows, op_a.cols) != (m, k):
        op_a = op_a.window(0, 0, m, k)
    if (op_b.rows, op_b.cols) != (k, n):
        op_b = op_b.window(0, 0, k, n)
    ab = backend.run(op_a, op_b)

    cw = c if (c.rows, c.cols) == (m, n) else c.window(0, 0, m, n)
    mode = 1 if beta_zero else 0
    _kernels.scale_add(cw.data, cw.offset, ab.data, ab.offset,
                       m, n, cw.ld, ab.ld, alpha, beta, mode)
    return c


def e_l1(c_f: Matrix, c_r: Matrix) -> QuadFloat:
    """Mean absolute elementwise difference of two square matrices.

    Accumulated in binary128 over row-major index order; the division by
    n^2 (exact in binary64, widened) happens last.
    """
    if (c_f.rows, c_f.cols) != (c_r.rows, c_r.cols):
        raise DimensionError(
            f"shape mismatch: {c_f.rows}x{c_f.cols} vs {c_r.rows}x{c_r.cols}")
    if c_f.rows != c_f.cols:
        raise DimensionError(f"e_l1 needs square matrices, got {c_f.rows}x{c_f.cols}")
    n = c_f.rows
    if n == 0:
        return quadfp.POS_ZERO
    total = _kernels.el1_sum(c_f.data, c_f.offset, c_r.data, c_r.offset,
                             n, n, c_f.ld, c_r.ld)
    return quadfp.qdiv(total, quadfp.from_f64(float(n * n)))
