"""Independent checker for binary128 arithmetic, used by tests and selftest.

Every operation here recomputes the exact mathematical result with
unbounded Python integers and rounds it with a remainder-comparison
nearest-even rule.  The code shares nothing with quadfp, so agreement
between the two is a meaningful check rather than a tautology.
"""

from __future__ import annotations

from typing import Optional

_PREC = 113
_EMIN = -16382
_EMAX = 16383
_BIAS = 16383
_FRAC = (1 << 112) - 1
_SIGN = 1 << 127
_INF = 0x7FFF << 112
_QUIET = 1 << 111
_NAN = _INF | _QUIET

# A finite value is ('fin', sign, m, e) meaning (-1)^sign * m * 2^e with
# m >= 0 an arbitrary integer.  Non-finite: ('inf', sign) / ('nan', sign, payload).


def exact_decode(bits: int):
    sign = bits >> 127
    ef = (bits >> 112) & 0x7FFF
    frac = bits & _FRAC
    if ef == 0x7FFF:
        if frac:
            return ("nan", sign, frac)
        return ("inf", sign)
    if ef == 0:
        return ("fin", sign, frac, _EMIN - 112)
    return ("fin", sign, frac | (1 << 112), ef - _BIAS - 112)


def round_to_bits(sign: int, m: int, e: int, prec: int = _PREC,
                  emin: int = _EMIN, emax: int = _EMAX) -> tuple[int, int, bool]:
    """Round (-1)^sign * m * 2^e to a binary format.

    Returns (significand, lsb_exponent, overflowed).  The significand is in
    units of 2^lsb_exponent; overflow means the magnitude rounds to infinity.
    """
    if m == 0:
        return 0, emin - (prec - 1), False
    top = m.bit_length() - 1
    value_exp = e + top
    lsb = max(value_exp - (prec - 1), emin - (prec - 1))
    shift = lsb - e
    if shift <= 0:
        q = m << -shift
        return _carry_fix(q, lsb, prec, emax)
    q, rem = divmod(m, 1 << shift)
    twice = rem << 1
    half = 1 << shift
    if twice > half or (twice == half and q & 1):
        q += 1
    return _carry_fix(q, lsb, prec, emax)


def _carry_fix(q: int, lsb: int, prec: int, emax: int) -> tuple[int, int, bool]:
    if q.bit_length() > prec:
        q >>= 1
        lsb += 1
    if lsb + prec - 1 > emax:
        return 0, 0, True
    return q, lsb, False


def _pack(sign: int, q: int, lsb: int, overflow: bool) -> int:
    if overflow:
        return (sign << 127) | _INF
    if q == 0:
        return sign << 127
    if q.bit_length() <= 112:
        # Subnormal: lsb is pinned at _EMIN - 112 by round_to_bits.
        return (sign << 127) | q
    ef = lsb + 112 + _BIAS
    return (sign << 127) | (ef << 112) | (q & _FRAC)


def _round_pack(sign: int, m: int, e: int) -> int:
    return _pack(sign, *round_to_bits(sign, m, e))


def _first_nan(*vals) -> Optional[int]:
    for v in vals:
        if v[0] == "nan":
            return (v[1] << 127) | _INF | v[2] | _QUIET
    return None


def oracle_add(a_bits: int, b_bits: int) -> int:
    a = exact_decode(a_bits)
    b = exact_decode(b_bits)
    nan = _first_nan(a, b)
    if nan is not None:
        return nan
    if a[0] == "inf":
        if b[0] == "inf" and a[1] != b[1]:
            return _NAN
        return a_bits
    if b[0] == "inf":
        return b_bits
    _, sa, ma, ea = a
    _, sb, mb, eb = b
    if ma == 0 and mb == 0:
        return (sa & sb) << 127
    e = min(ea, eb)
    v = (ma << (ea - e)) * (1 - 2 * sa) + (mb << (eb - e)) * (1 - 2 * sb)
    if v == 0:
        return 0
    return _round_pack(1 if v < 0 else 0, abs(v), e)


def oracle_mul(a_bits: int, b_bits: int) -> int:
    a = exact_decode(a_bits)
    b = exact_decode(b_bits)
    nan = _first_nan(a, b)
    if nan is not None:
        return nan
    sign = (a_bits ^ b_bits) >> 127
    if a[0] == "inf" or b[0] == "inf":
        if (a[0] == "fin" and a[2] == 0) or (b[0] == "fin" and b[2] == 0):
            return _NAN
        return (sign << 127) | _INF
    if a[2] == 0 or b[2] == 0:
        return sign << 127
    return _round_pack(sign, a[2] * b[2], a[3] + b[3])


def oracle_div(a_bits: int, b_bits: int) -> int:
    a = exact_decode(a_bits)
    b = exact_decode(b_bits)
    nan = _first_nan(a, b)
    if nan is not None:
        return nan
    sign = (a_bits ^ b_bits) >> 127
    if a[0] == "inf":
        if b[0] == "inf":
            return _NAN
        return (sign << 127) | _INF
    if b[0] == "inf":
        return sign << 127
    if b[2] == 0:
        if a[2] == 0:
            return _NAN
        return (sign << 127) | _INF
    if a[2] == 0:
        return sign << 127
    _, _, ma, ea = a
    _, _, mb, eb = b
    # Quotient to PREC + 3 significant bits, then a round-to-odd sticky:
    # exact nearest-even of the true quotient follows from the wider value.
    lift = _PREC + 3 + mb.bit_length() - ma.bit_length()
    if lift < 0:
        lift = 0
    q, rem = divmod(ma << lift, mb)
    e = ea - eb - lift
    if rem:
        q = (q << 1) | 1
        e -= 1
    return _round_pack(sign, q, e)


def oracle_fma(a_bits: int, b_bits: int, c_bits: int) -> int:
    a = exact_decode(a_bits)
    b = exact_decode(b_bits)
    c = exact_decode(c_bits)
    nan = _first_nan(a, b, c)
    if nan is not None:
        return nan
    sp = ((a_bits ^ b_bits) >> 127) & 1
    if a[0] == "inf" or b[0] == "inf":
        if (a[0] == "fin" and a[2] == 0) or (b[0] == "fin" and b[2] == 0):
            return _NAN
        if c[0] == "inf" and c[1] != sp:
            return _NAN
        return (sp << 127) | _INF
    if c[0] == "inf":
        return c_bits
    _, _, ma, ea = a
    _, _, mb, eb = b
    _, sc, mc, ec = c
    if ma == 0 or mb == 0:
        if mc == 0:
            return (sp << 127) if sp == sc else 0
        return c_bits
    e = min(ea + eb, ec)
    v = (ma * mb << (ea + eb - e)) * (1 - 2 * sp)
    if mc:
        v += (mc << (ec - e)) * (1 - 2 * sc)
    if v == 0:
        return 0
    return _round_pack(1 if v < 0 else 0, abs(v), e)


def oracle_to_f64(q_bits: int) -> int:
    """Round a binary128 pattern to binary64, returned as a 64-bit pattern."""
    v = exact_decode(q_bits)
    if v[0] == "nan":
        payload = v[2] >> 60
        return (v[1] << 63) | (0x7FF << 52) | payload | (1 << 51)
    if v[0] == "inf":
        return (v[1] << 63) | (0x7FF << 52)
    _, s, m, e = v
    if m == 0:
        return s << 63
    q, lsb, over = round_to_bits(s, m, e, prec=53, emin=-1022, emax=1023)
    if over:
        return (s << 63) | (0x7FF << 52)
    if q == 0:
        return s << 63
    if q.bit_length() <= 52:
        return (s << 63) | q
    ef = lsb + 52 + 1023
    return (s << 63) | (ef << 52) | (q & ((1 << 52) - 1))
