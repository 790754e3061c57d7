#ifndef QUAD_KERNELS_H
#define QUAD_KERNELS_H

#include <stdint.h>

/* All matrix arguments are column-major arrays of 16-byte binary128
 * words stored as consecutive little-endian uint64 pairs; leading
 * dimensions count elements, not limbs.  Buffers must be 16-byte
 * aligned. */

void qk_add1(const uint64_t *a, const uint64_t *b, uint64_t *out);
void qk_mul1(const uint64_t *a, const uint64_t *b, uint64_t *out);
void qk_div1(const uint64_t *a, const uint64_t *b, uint64_t *out);
void qk_madd1(const uint64_t *a, const uint64_t *b, const uint64_t *c,
              uint64_t *out, int fused);

void qk_gemm_block(uint64_t *c, const uint64_t *a, const uint64_t *b,
                   long lda, long ldb, long ldc,
                   long i0, long i1, long j0, long j1, long p0, long p1,
                   int fused);
void qk_scale_add(uint64_t *c, const uint64_t *ab,
                  long rows, long cols, long ldc, long ldab,
                  const uint64_t *alpha, const uint64_t *beta, int mode);
void qk_el1_sum(const uint64_t *x, const uint64_t *y,
                long rows, long cols, long ldx, long ldy, uint64_t *out);

long qk_iamax(const uint64_t *x, long n, long stride);
void qk_scal_div(uint64_t *x, long n, long stride, const uint64_t *piv);
void qk_rank1_sub(uint64_t *a, long lda, long rows, long cols,
                  const uint64_t *col, long col_stride,
                  const uint64_t *row, long row_stride);
void qk_axpy_sub(uint64_t *y, long n, long ystride,
                 const uint64_t *x, long xstride, const uint64_t *alpha);

void qk_widen_f64(const double *src, uint64_t *dst, long n);

#endif
