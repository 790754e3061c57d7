# cython: boundscheck=False, wraparound=False
"""Bindings for the binary128 bulk kernels.

Values cross this boundary as 128-bit integer patterns (Python ints) or
as flat numpy uint64 arrays holding little-endian (lo, hi) limb pairs in
column-major element order.
"""

from libc.stdint cimport uint64_t, uintptr_t

cdef extern from "quad_kernels.h":
    void qk_add1(const uint64_t *a, const uint64_t *b, uint64_t *out) nogil
    void qk_mul1(const uint64_t *a, const uint64_t *b, uint64_t *out) nogil
    void qk_div1(const uint64_t *a, const uint64_t *b, uint64_t *out) nogil
    void qk_madd1(const uint64_t *a, const uint64_t *b, const uint64_t *c,
                  uint64_t *out, int fused) nogil
    void qk_gemm_block(uint64_t *c, const uint64_t *a, const uint64_t *b,
                       long lda, long ldb, long ldc,
                       long i0, long i1, long j0, long j1, long p0, long p1,
                       int fused) nogil
    void qk_scale_add(uint64_t *c, const uint64_t *ab,
                      long rows, long cols, long ldc, long ldab,
                      const uint64_t *alpha, const uint64_t *beta, int mode) nogil
    void qk_el1_sum(const uint64_t *x, const uint64_t *y,
                    long rows, long cols, long ldx, long ldy, uint64_t *out) nogil
    long qk_iamax(const uint64_t *x, long n, long stride) nogil
    void qk_scal_div(uint64_t *x, long n, long stride, const uint64_t *piv) nogil
    void qk_rank1_sub(uint64_t *a, long lda, long rows, long cols,
                      const uint64_t *col, long col_stride,
                      const uint64_t *row, long row_stride) nogil
    void qk_axpy_sub(uint64_t *y, long n, long ystride,
                     const uint64_t *x, long xstride, const uint64_t *alpha) nogil
    void qk_widen_f64(const double *src, uint64_t *dst, long n) nogil

MASK64 = (1 << 64) - 1


cdef inline uint64_t *base(uint64_t[::1] buf, long elem) except NULL:
    cdef uint64_t *p = &buf[2 * elem]
    if (<uintptr_t>p) & 15:
        raise ValueError("binary128 buffer must be 16-byte aligned")
    return p


cdef inline void put(uint64_t *dst, object pattern):
    dst[0] = <uint64_t>(pattern & MASK64)
    dst[1] = <uint64_t>(pattern >> 64)


cdef inline object take(const uint64_t *src):
    return (<object>int(src[1]) << 64) | int(src[0])


def op_add(a, b):
    cdef uint64_t x[2], y[2], out[2]
    put(x, a); put(y, b)
    qk_add1(x, y, out)
    return take(out)


def op_mul(a, b):
    cdef uint64_t x[2], y[2], out[2]
    put(x, a); put(y, b)
    qk_mul1(x, y, out)
    return take(out)


def op_div(a, b):
    cdef uint64_t x[2], y[2], out[2]
    put(x, a); put(y, b)
    qk_div1(x, y, out)
    return take(out)


def op_madd(a, b, c, bint fused):
    cdef uint64_t x[2], y[2], z[2], out[2]
    put(x, a); put(y, b); put(z, c)
    qk_madd1(x, y, z, out, fused)
    return take(out)


def gemm_block(uint64_t[::1] c, long c_off, uint64_t[::1] a, long a_off,
               uint64_t[::1] b, long b_off,
               long lda, long ldb, long ldc,
               long i0, long i1, long j0, long j1, long p0, long p1,
               bint fused):
    cdef uint64_t *cp = base(c, c_off)
    cdef uint64_t *ap = base(a, a_off)
    cdef uint64_t *bp = base(b, b_off)
    with nogil:
        qk_gemm_block(cp, ap, bp, lda, ldb, ldc, i0, i1, j0, j1, p0, p1, fused)


def scale_add(uint64_t[::1] c, long c_off, uint64_t[::1] ab, long ab_off,
              long rows, long cols, long ldc, long ldab,
              alpha, beta, int mode):
    cdef uint64_t al[2], be[2]
    put(al, alpha); put(be, beta)
    cdef uint64_t *cp = base(c, c_off)
    cdef uint64_t *abp = base(ab, ab_off)
    with nogil:
        qk_scale_add(cp, abp, rows, cols, ldc, ldab, al, be, mode)


def el1_sum(uint64_t[::1] x, long x_off, uint64_t[::1] y, long y_off,
            long rows, long cols, long ldx, long ldy):
    cdef uint64_t out[2]
    cdef uint64_t *xp = base(x, x_off)
    cdef uint64_t *yp = base(y, y_off)
    with nogil:
        qk_el1_sum(xp, yp, rows, cols, ldx, ldy, out)
    return take(out)


def iamax(uint64_t[::1] x, long offset, long n, long stride):
    cdef uint64_t *xp = base(x, offset)
    cdef long r
    with nogil:
        r = qk_iamax(xp, n, stride)
    return r


def scal_div(uint64_t[::1] x, long offset, long n, long stride, piv):
    cdef uint64_t d[2]
    put(d, piv)
    cdef uint64_t *xp = base(x, offset)
    with nogil:
        qk_scal_div(xp, n, stride, d)


def rank1_sub(uint64_t[::1] a, long offset, long lda, long rows, long cols,
              uint64_t[::1] col, long col_off, long col_stride,
              uint64_t[::1] row, long row_off, long row_stride):
    cdef uint64_t *ap = base(a, offset)
    cdef uint64_t *cp = base(col, col_off)
    cdef uint64_t *rp = base(row, row_off)
    with nogil:
        qk_rank1_sub(ap, lda, rows, cols, cp, col_stride, rp, row_stride)


def axpy_sub(uint64_t[::1] y, long y_off, long n, long ystride,
             uint64_t[::1] x, long x_off, long xstride, alpha):
    cdef uint64_t al[2]
    put(al, alpha)
    cdef uint64_t *yp = base(y, y_off)
    cdef uint64_t *xp = base(x, x_off)
    with nogil:
        qk_axpy_sub(yp, n, ystride, xp, xstride, al)


def widen_f64(double[::1] src, uint64_t[::1] dst):
    if 2 * src.shape[0] != dst.shape[0]:
        raise ValueError("destination must hold two limbs per source value")
    cdef uint64_t *dp = base(dst, 0)
    cdef long n = src.shape[0]
    with nogil:
        qk_widen_f64(&src[0], dp, n)
