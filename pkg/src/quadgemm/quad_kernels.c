/* Bulk binary128 kernels.
 *
 * Add/mul/div lean on the compiler's __float128 soft-float (correctly
 * rounded, nearest-even), wrapped so NaN results follow the package
 * policy: propagate the first NaN operand quieted, canonical quiet NaN
 * for invalid operations.  The fused multiply-add is implemented here
 * with 512-bit integer arithmetic because libquadmath's fmaq is an
 * order of magnitude too slow for matrix work.
 */

#include <stdint.h>
#include <string.h>

#include "quad_kernels.h"

typedef __float128 q128;
typedef unsigned __int128 u128;

#define SIGN_BIT ((u128)1 << 127)
#define FRAC_MASK (((u128)1 << 112) - 1)
#define EXP_MASK ((u128)0x7FFF << 112)
#define QUIET_BIT ((u128)1 << 111)
#define IMPLICIT ((u128)1 << 112)
#define CANON_NAN (EXP_MASK | QUIET_BIT)
#define EMIN (-16382)
#define EMAX 16383
#define BIAS 16383

static inline u128 bits_of(q128 x) { u128 u; memcpy(&u, &x, 16); return u; }
static inline q128 quad_of(u128 u) { q128 x; memcpy(&x, &u, 16); return x; }

static inline int is_nan_b(u128 u) { return (u & ~SIGN_BIT) > EXP_MASK; }
static inline int is_inf_b(u128 u) { return (u & ~SIGN_BIT) == EXP_MASK; }
static inline int is_zero_b(u128 u) { return (u & ~SIGN_BIT) == 0; }

/* ------------------------------------------------------------------ */
/* Policy-wrapped elementary operations                                */
/* ------------------------------------------------------------------ */

static inline u128 nan_policy2(u128 a, u128 b) {
    if (is_nan_b(a)) return a | QUIET_BIT;
    if (is_nan_b(b)) return b | QUIET_BIT;
    return CANON_NAN;
}

static inline q128 q_add(q128 a, q128 b) {
    q128 r = a + b;
    u128 rb = bits_of(r);
    if (is_nan_b(rb)) return quad_of(nan_policy2(bits_of(a), bits_of(b)));
    return r;
}

static inline q128 q_mul(q128 a, q128 b) {
    q128 r = a * b;
    u128 rb = bits_of(r);
    if (is_nan_b(rb)) return quad_of(nan_policy2(bits_of(a), bits_of(b)));
    return r;
}

static inline q128 q_div(q128 a, q128 b) {
    q128 r = a / b;
    u128 rb = bits_of(r);
    if (is_nan_b(rb)) return quad_of(nan_policy2(bits_of(a), bits_of(b)));
    return r;
}

static inline q128 q_neg(q128 a) { return quad_of(bits_of(a) ^ SIGN_BIT); }
static inline q128 q_abs(q128 a) { return quad_of(bits_of(a) & ~SIGN_BIT); }
static inline q128 q_sub(q128 a, q128 b) { return q_add(a, q_neg(b)); }

/* ------------------------------------------------------------------ */
/* 512-bit helpers for the fused multiply-add                          */
/* ------------------------------------------------------------------ */

typedef struct { u128 w[4]; } w512; /* little-endian limbs */

static inline void w_zero(w512 *x) { x->w[0] = x->w[1] = x->w[2] = x->w[3] = 0; }

/* x = v << s, 0 <= s < 384 */
static inline void w_from_shifted(w512 *x, u128 v, int s) {
    int limb = s >> 7, off = s & 127;
    w_zero(x);
    x->w[limb] = v << off;
    if (off && limb < 3) x->w[limb + 1] = v >> (128 - off);
}

/* x = (hi:lo) << s, value < 2^226, 0 <= s < 286 */
static inline void w_from2_shifted(w512 *x, u128 hi, u128 lo, int s) {
    w512 t;
    w_from_shifted(x, lo, s);
    w_from_shifted(&t, hi, s); /* then move up 128 bits */
    x->w[1] |= t.w[0];
    x->w[2] |= t.w[1];
    x->w[3] |= t.w[2];
}

static inline void w_add(w512 *x, const w512 *y) {
    u128 carry = 0;
    for (int i = 0; i < 4; i++) {
        u128 s = x->w[i] + y->w[i];
        u128 c1 = s < x->w[i];
        s += carry;
        carry = c1 | (s < carry);
        x->w[i] = s;
    }
}

static inline void w_sub(w512 *x, const w512 *y) { /* requires x >= y */
    u128 borrow = 0;
    for (int i = 0; i < 4; i++) {
        u128 d = x->w[i] - y->w[i];
        u128 b1 = x->w[i] < y->w[i];
        u128 d2 = d - borrow;
        borrow = b1 | (d < borrow);
        x->w[i] = d2;
    }
}

static inline int w_cmp(const w512 *x, const w512 *y) {
    for (int i = 3; i >= 0; i--) {
        if (x->w[i] != y->w[i]) return x->w[i] < y->w[i] ? -1 : 1;
    }
    return 0;
}

static inline int w_is_zero(const w512 *x) {
    return !(x->w[0] | x->w[1] | x->w[2] | x->w[3]);
}

static inline int msb128(u128 v) {
    uint64_t hi = (uint64_t)(v >> 64);
    if (hi) return 127 - __builtin_clzll(hi);
    return 63 - __builtin_clzll((uint64_t)v);
}

static inline int w_msb(const w512 *x) {
    for (int i = 3; i >= 0; i--)
        if (x->w[i]) return 128 * i + msb128(x->w[i]);
    return -1;
}

static inline int w_bit(const w512 *x, long k) {
    if (k < 0 || k >= 512) return 0;
    return (int)((x->w[k >> 7] >> (k & 127)) & 1);
}

static inline int w_any_below(const w512 *x, long k) {
    if (k <= 0) return 0;
    if (k >= 512) return !w_is_zero(x);
    long limb = k >> 7, off = k & 127;
    for (long i = 0; i < limb; i++)
        if (x->w[i]) return 1;
    return off ? ((x->w[limb] & (((u128)1 << off) - 1)) != 0) : 0;
}

/* W >> drop, valid while the result fits in 128 bits */
static inline u128 w_extract(const w512 *x, long drop) {
    if (drop >= 512) return 0;
    long limb = drop >> 7, off = drop & 127;
    u128 lo = x->w[limb] >> off;
    if (off && limb < 3) lo |= x->w[limb + 1] << (128 - off);
    if (off && limb < 2) {
        /* bits beyond 128 from limb+2 would only matter if result > 128 bits;
           callers guarantee the extracted value fits. */
    }
    return lo;
}

/* ------------------------------------------------------------------ */
/* Fused multiply-add, correctly rounded                               */
/* ------------------------------------------------------------------ */

static inline u128 pack_bits(int sign, long e_field, u128 frac) {
    return ((u128)(sign != 0) << 127) | ((u128)e_field << 112) | frac;
}

/* Round (-1)^sign * W * 2^grid to binary128, W nonzero. */
static u128 round_pack_w(int sign, const w512 *W, long grid) {
    int msb = w_msb(W);
    long msb_exp = grid + msb;
    long drop;
    int subnormal = msb_exp < EMIN;
    if (subnormal)
        drop = (long)msb + 1 - 113 + (EMIN - msb_exp);
    else
        drop = (long)msb + 1 - 113;
    u128 q;
    if (drop <= 0) {
        q = W->w[0] << -drop; /* exact; value narrower than 113 bits */
    } else {
        q = w_extract(W, drop);
        int rb = w_bit(W, drop - 1);
        if (rb && (w_any_below(W, drop - 1) || (q & 1))) q += 1;
    }
    if (subnormal) {
        if (q == 0) return (u128)(sign != 0) << 127;
        if (q <= FRAC_MASK) return pack_bits(sign, 0, q);
        return pack_bits(sign, 1, 0); /* rounded up to the smallest normal */
    }
    long e_out = msb_exp;
    if (q >> 113) { q >>= 1; e_out += 1; }
    if (e_out > EMAX) return pack_bits(sign, 0x7FFF, 0);
    return pack_bits(sign, e_out + BIAS, q & FRAC_MASK);
}

/* Decode finite nonzero: significand normalized to [2^112, 2^113). */
static inline void dec_fin(u128 u, int *sign, long *msb_exp, u128 *sig) {
    *sign = (int)(u >> 127);
    long ef = (long)((u >> 112) & 0x7FFF);
    u128 f = u & FRAC_MASK;
    if (ef == 0) {
        int sh = 112 - msb128(f);
        *msb_exp = EMIN - sh;
        *sig = f << sh;
    } else {
        *msb_exp = ef - BIAS;
        *sig = f | IMPLICIT;
    }
}

/* 113x113 -> 226-bit product as (hi:lo). */
static inline void mul113(u128 a, u128 b, u128 *hi, u128 *lo) {
    u128 a0 = (uint64_t)a, a1 = a >> 64;
    u128 b0 = (uint64_t)b, b1 = b >> 64;
    u128 m00 = a0 * b0, m01 = a0 * b1, m10 = a1 * b0, m11 = a1 * b1;
    u128 mid = m01 + m10; /* <= 2^114, no overflow */
    u128 l = m00 + (mid << 64);
    u128 carry = (l < m00);
    *lo = l;
    *hi = m11 + (mid >> 64) + carry;
}

static q128 q_fma(q128 qa, q128 qb, q128 qc) {
    u128 a = bits_of(qa), b = bits_of(qb), c = bits_of(qc);
    if (is_nan_b(a)) return quad_of(a | QUIET_BIT);
    if (is_nan_b(b)) return quad_of(b | QUIET_BIT);
    if (is_nan_b(c)) return quad_of(c | QUIET_BIT);
    int sp = (int)((a ^ b) >> 127);
    if (is_inf_b(a) || is_inf_b(b)) {
        if (is_zero_b(a) || is_zero_b(b)) return quad_of(CANON_NAN);
        if (is_inf_b(c) && (int)(c >> 127) != sp) return quad_of(CANON_NAN);
        return quad_of(((u128)sp << 127) | EXP_MASK);
    }
    if (is_inf_b(c)) return qc;
    if (is_zero_b(a) || is_zero_b(b)) {
        if (is_zero_b(c)) {
            int sc = (int)(c >> 127);
            return quad_of((u128)(sp == sc ? sp : 0) << 127);
        }
        return qc;
    }
    int sa_, sb_, sc_;
    long ea, eb, ec;
    u128 ma, mb, mc;
    dec_fin(a, &sa_, &ea, &ma);
    dec_fin(b, &sb_, &eb, &mb);
    u128 phi, plo;
    mul113(ma, mb, &phi, &plo);
    long p_lsb = (ea - 112) + (eb - 112);
    int p_bits = phi ? 128 + msb128(phi) + 1 : msb128(plo) + 1;
    long p_msb = p_lsb + p_bits - 1;
    if (is_zero_b(c)) {
        w512 W;
        w_from2_shifted(&W, phi, plo, 0);
        return quad_of(round_pack_w(sp, &W, p_lsb));
    }
    dec_fin(c, &sc_, &ec, &mc);
    long c_lsb = ec - 112;
    w512 W;
    if (ec < p_lsb - 2) {
        /* c entirely below the guard range of the product: sticky fold */
        w_from2_shifted(&W, phi, plo, 2);
        if (sp == sc_) W.w[0] |= 1;
        else { w512 one; w_from_shifted(&one, 1, 0); w_sub(&W, &one); }
        return quad_of(round_pack_w(sp, &W, p_lsb - 2));
    }
    if (p_msb < c_lsb - 2) {
        w_from_shifted(&W, mc << 2, 0);
        if (sp == sc_) W.w[0] |= 1;
        else { w512 one; w_from_shifted(&one, 1, 0); w_sub(&W, &one); }
        return quad_of(round_pack_w(sc_, &W, c_lsb - 2));
    }
    /* overlapping: exact signed sum on the common grid */
    long grid = p_lsb < c_lsb ? p_lsb : c_lsb;
    w512 P, C;
    w_from2_shifted(&P, phi, plo, (int)(p_lsb - grid));
    w_from_shifted(&C, mc, (int)(c_lsb - grid));
    int sign;
    if (sp == sc_) {
        w_add(&P, &C);
        sign = sp;
    } else {
        int cmp = w_cmp(&P, &C);
        if (cmp == 0) return quad_of(0); /* exact cancellation: +0 */
        if (cmp > 0) { w_sub(&P, &C); sign = sp; }
        else { w_sub(&C, &P); P = C; sign = sc_; }
    }
    return quad_of(round_pack_w(sign, &P, grid));
}

static inline q128 q_madd(q128 a, q128 b, q128 c, int fused) {
    if (fused) return q_fma(a, b, c);
    return q_add(q_mul(a, b), c);
}

/* ------------------------------------------------------------------ */
/* Exported single-value entry points (pattern in, pattern out)        */
/* ------------------------------------------------------------------ */

static inline u128 ld(const uint64_t *p) { return ((u128)p[1] << 64) | p[0]; }
static inline void st(uint64_t *p, u128 v) { p[0] = (uint64_t)v; p[1] = (uint64_t)(v >> 64); }

void qk_add1(const uint64_t *a, const uint64_t *b, uint64_t *out) {
    st(out, bits_of(q_add(quad_of(ld(a)), quad_of(ld(b)))));
}

void qk_mul1(const uint64_t *a, const uint64_t *b, uint64_t *out) {
    st(out, bits_of(q_mul(quad_of(ld(a)), quad_of(ld(b)))));
}

void qk_div1(const uint64_t *a, const uint64_t *b, uint64_t *out) {
    st(out, bits_of(q_div(quad_of(ld(a)), quad_of(ld(b)))));
}

void qk_madd1(const uint64_t *a, const uint64_t *b, const uint64_t *c,
              uint64_t *out, int fused) {
    st(out, bits_of(q_madd(quad_of(ld(a)), quad_of(ld(b)), quad_of(ld(c)), fused)));
}

/* ------------------------------------------------------------------ */
/* Matrix kernels (column-major, leading dimension in elements)        */
/* ------------------------------------------------------------------ */

void qk_gemm_block(uint64_t *c, const uint64_t *a, const uint64_t *b,
                   long lda, long ldb, long ldc,
                   long i0, long i1, long j0, long j1, long p0, long p1,
                   int fused) {
    const q128 *A = (const q128 *)a;
    const q128 *B = (const q128 *)b;
    q128 *C = (q128 *)c;
    for (long j = j0; j < j1; j++) {
        for (long i = i0; i < i1; i++) {
            q128 acc = C[i + j * ldc];
            const q128 *ap = &A[i + p0 * lda];
            const q128 *bp = &B[p0 + j * ldb];
            if (fused) {
                for (long p = p0; p < p1; p++) {
                    acc = q_fma(*ap, *bp, acc);
                    ap += lda; bp += 1;
                }
            } else {
                for (long p = p0; p < p1; p++) {
                    acc = q_add(q_mul(*ap, *bp), acc);
                    ap += lda; bp += 1;
                }
            }
            C[i + j * ldc] = acc;
        }
    }
}

/* c(i,j) = alpha*ab(i,j) + beta*c(i,j); mode 1 drops the beta term,
 * mode 2 drops the alpha term. */
void qk_scale_add(uint64_t *c, const uint64_t *ab,
                  long rows, long cols, long ldc, long ldab,
                  const uint64_t *alpha, const uint64_t *beta, int mode) {
    q128 *C = (q128 *)c;
    const q128 *AB = (const q128 *)ab;
    q128 al = quad_of(ld(alpha)), be = quad_of(ld(beta));
    for (long j = 0; j < cols; j++) {
        for (long i = 0; i < rows; i++) {
            q128 *cp = &C[i + j * ldc];
            if (mode == 1)
                *cp = q_mul(al, AB[i + j * ldab]);
            else if (mode == 2)
                *cp = q_mul(be, *cp);
            else
                *cp = q_add(q_mul(al, AB[i + j * ldab]), q_mul(be, *cp));
        }
    }
}

/* Row-major accumulation of sum |x(i,j) - y(i,j)|. */
void qk_el1_sum(const uint64_t *x, const uint64_t *y,
                long rows, long cols, long ldx, long ldy, uint64_t *out) {
    const q128 *X = (const q128 *)x;
    const q128 *Y = (const q128 *)y;
    q128 acc = 0.0Q;
    for (long i = 0; i < rows; i++) {
        for (long j = 0; j < cols; j++) {
            q128 d = q_sub(X[i + j * ldx], Y[i + j * ldy]);
            acc = q_add(acc, q_abs(d));
        }
    }
    st(out, bits_of(acc));
}

long qk_iamax(const uint64_t *x, long n, long stride) {
    const q128 *X = (const q128 *)x;
    long best = 0;
    q128 cur = q_abs(X[0]);
    for (long i = 1; i < n; i++) {
        q128 v = q_abs(X[i * stride]);
        if (v > cur) { cur = v; best = i; }
    }
    return best;
}

void qk_scal_div(uint64_t *x, long n, long stride, const uint64_t *piv) {
    q128 *X = (q128 *)x;
    q128 d = quad_of(ld(piv));
    for (long i = 0; i < n; i++)
        X[i * stride] = q_div(X[i * stride], d);
}

/* a(i,j) -= col(i) * row(j): the right-looking LU trailing update. */
void qk_rank1_sub(uint64_t *a, long lda, long rows, long cols,
                  const uint64_t *col, long col_stride,
                  const uint64_t *row, long row_stride) {
    q128 *A = (q128 *)a;
    const q128 *Cv = (const q128 *)col;
    const q128 *Rv = (const q128 *)row;
    for (long j = 0; j < cols; j++) {
        q128 r = Rv[j * row_stride];
        for (long i = 0; i < rows; i++) {
            q128 *ap = &A[i + j * lda];
            *ap = q_sub(*ap, q_mul(Cv[i * col_stride], r));
        }
    }
}

void qk_axpy_sub(uint64_t *y, long n, long ystride,
                 const uint64_t *x, long xstride, const uint64_t *alpha) {
    q128 *Y = (q128 *)y;
    const q128 *X = (const q128 *)x;
    q128 al = quad_of(ld(alpha));
    for (long i = 0; i < n; i++) {
        q128 *yp = &Y[i * ystride];
        *yp = q_sub(*yp, q_mul(al, X[i * xstride]));
    }
}

void qk_widen_f64(const double *src, uint64_t *dst, long n) {
    q128 *D = (q128 *)dst;
    for (long i = 0; i < n; i++)
        D[i] = (q128)src[i];
}
