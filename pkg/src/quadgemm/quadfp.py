"""Software IEEE 754 binary128 arithmetic on 128-bit integer patterns.

All operations are pure functions of bit patterns (Python ints in
[0, 2**128)).  Rounding is round-to-nearest, ties-to-even; Inf and NaN
propagate as values and nothing traps.  NaN policy: invalid operations
produce the canonical quiet NaN; NaN operands propagate first-operand-wins
with the quiet bit forced on.
"""

from __future__ import annotations

import struct
from enum import Enum
from typing import Optional

QuadFloat = int  # 128-bit pattern: 1 sign, 15 exponent (bias 16383), 112 fraction

# ---------------------------------------------------------------------------
# Format constants
# ---------------------------------------------------------------------------

MASK128: int = (1 << 128) - 1
SIGN_MASK: int = 1 << 127
FRAC_BITS: int = 112
FRAC_MASK: int = (1 << 112) - 1
IMPLICIT_BIT: int = 1 << 112
EXP_FIELD_MASK: int = 0x7FFF
EXP_BIAS: int = 16383
EXP_MIN: int = -16382          # smallest normal exponent (of the MSB)
EXP_MAX: int = 16383           # largest normal exponent
QUIET_BIT: int = 1 << 111

POS_ZERO: QuadFloat = 0
NEG_ZERO: QuadFloat = SIGN_MASK
POS_INF: QuadFloat = 0x7FFF << 112
NEG_INF: QuadFloat = SIGN_MASK | POS_INF
CANONICAL_NAN: QuadFloat = POS_INF | QUIET_BIT
ONE: QuadFloat = (EXP_BIAS << 112)
MAX_FINITE: QuadFloat = (0x7FFE << 112) | FRAC_MASK
MIN_SUBNORMAL: QuadFloat = 1


class MaddMode(Enum):
    """Rounding discipline of the multiply-add step."""

    TWO_ROUNDINGS = "two-roundings"   # round(round(a*b) + c)
    FUSED = "fused"                   # single rounding of the exact a*b + c


class HexFloatParseError(ValueError):
    """Malformed hex-float literal; ``position`` is the offending index."""

    def __init__(self, message: str, position: int):
        super().__init__(f"{message} (at position {position})")
        self.position = position


# ---------------------------------------------------------------------------
# Classification and bit-level helpers
# ---------------------------------------------------------------------------


def encode(sign: int, exp_field: int, frac: int) -> QuadFloat:
    return (sign << 127) | (exp_field << 112) | frac


def decode(x: QuadFloat) -> tuple[int, int, int]:
    """Split a pattern into (sign, exponent field, fraction field)."""
    return x >> 127, (x >> 112) & EXP_FIELD_MASK, x & FRAC_MASK


def is_nan(x: QuadFloat) -> bool:
    return (x & ~SIGN_MASK) > POS_INF


def is_inf(x: QuadFloat) -> bool:
    return (x & ~SIGN_MASK) == POS_INF


def is_zero(x: QuadFloat) -> bool:
    return (x & ~SIGN_MASK) == 0


def is_finite(x: QuadFloat) -> bool:
    return ((x >> 112) & EXP_FIELD_MASK) != EXP_FIELD_MASK


def is_subnormal(x: QuadFloat) -> bool:
    return ((x >> 112) & EXP_FIELD_MASK) == 0 and (x & FRAC_MASK) != 0


def _quiet(x: QuadFloat) -> QuadFloat:
    return x | QUIET_BIT


def _propagate_nan(*ops: QuadFloat) -> QuadFloat:
    for x in ops:
        if is_nan(x):
            return _quiet(x)
    raise AssertionError("no NaN operand")


def _decode_finite(x: QuadFloat) -> tuple[int, int, int]:
    """Decode finite nonzero to (sign, msb_exp, sig) with sig in [2^112, 2^113)."""
    s = x >> 127
    e = (x >> 112) & EXP_FIELD_MASK
    f = x & FRAC_MASK
    if e == 0:
        shift = 113 - f.bit_length()
        return s, EXP_MIN - shift, f << shift
    return s, e - EXP_BIAS, f | IMPLICIT_BIT


# ---------------------------------------------------------------------------
# Rounding core
# ---------------------------------------------------------------------------

# The rounder takes the magnitude as an integer significand whose lowest bit
# may be a jammed sticky.  Callers guarantee at least two bits between the
# 113-bit target and any jam, which keeps nearest-even decisions exact.


def _round_sig(sig: int, drop: int) -> int:
    """Shift ``sig`` right by ``drop`` rounding to nearest, ties to even."""
    if drop <= 0:
        return sig << -drop
    q = sig >> drop
    rb = (sig >> (drop - 1)) & 1
    if rb and ((sig & ((1 << (drop - 1)) - 1)) or (q & 1)):
        q += 1
    return q


def _round_pack(sign: int, msb_exp: int, sig: int) -> QuadFloat:
    """Round (-1)^sign * sig * 2^(msb_exp - bitlen(sig) + 1) to binary128."""
    if sig == 0:
        return sign << 127
    width = sig.bit_length()
    if msb_exp < EXP_MIN:
        # Subnormal regime: quantum is fixed at 2^(EXP_MIN - 112).
        drop = width - 113 + (EXP_MIN - msb_exp)
        q = _round_sig(sig, drop)
        if q == 0:
            return sign << 127
        if q <= FRAC_MASK:
            return encode(sign, 0, q)
        # Rounded up into the smallest normal.
        return encode(sign, 1, 0)
    drop = width - 113
    q = _round_sig(sig, drop)
    e = msb_exp
    if q >> 113:
        q >>= 1
        e += 1
    if e > EXP_MAX:
        return encode(sign, EXP_FIELD_MASK, 0)
    return encode(sign, e + EXP_BIAS, q & FRAC_MASK)


# ---------------------------------------------------------------------------
# Arithmetic
# ---------------------------------------------------------------------------

_ADD_GUARD = 3  # guard bits carried through addition


def qadd(a: QuadFloat, b: QuadFloat) -> QuadFloat:
    """Correctly rounded sum."""
    if is_nan(a) or is_nan(b):
        return _propagate_nan(a, b)
    if is_inf(a):
        if is_inf(b) and (a ^ b) & SIGN_MASK:
            return CANONICAL_NAN
        return a
    if is_inf(b):
        return b
    if is_zero(a):
        if is_zero(b):
            return a & b & SIGN_MASK  # -0 only when both are -0
        return b
    if is_zero(b):
        return a
    s1, e1, m1 = _decode_finite(a)
    s2, e2, m2 = _decode_finite(b)
    if (e1, m1) < (e2, m2):
        s1, e1, m1, s2, e2, m2 = s2, e2, m2, s1, e1, m1
    d = e1 - e2
    x = m1 << _ADD_GUARD
    if d == 0:
        y = m2 << _ADD_GUARD
    elif d <= 115:
        shifted = m2 << _ADD_GUARD
        y = shifted >> d
        if shifted & ((1 << d) - 1):
            y |= 1
    else:
        y = 1  # entirely sticky
    if s1 == s2:
        total = x + y
    else:
        total = x - y
        if total == 0:
            return POS_ZERO
    return _round_pack(s1, e1 + total.bit_length() - 116, total)


def qmul(a: QuadFloat, b: QuadFloat) -> QuadFloat:
    """Correctly rounded product."""
    if is_nan(a) or is_nan(b):
        return _propagate_nan(a, b)
    sign = ((a ^ b) >> 127) & 1
    if is_inf(a) or is_inf(b):
        if is_zero(a) or is_zero(b):
            return CANONICAL_NAN
        return (sign << 127) | POS_INF
    if is_zero(a) or is_zero(b):
        return sign << 127
    s1, e1, m1 = _decode_finite(a)
    s2, e2, m2 = _decode_finite(b)
    prod = m1 * m2  # exact, 225 or 226 bits
    return _round_pack(sign, e1 + e2 + prod.bit_length() - 225, prod)


def qdiv(a: QuadFloat, b: QuadFloat) -> QuadFloat:
    """Correctly rounded quotient."""
    if is_nan(a) or is_nan(b):
        return _propagate_nan(a, b)
    sign = ((a ^ b) >> 127) & 1
    if is_inf(a):
        if is_inf(b):
            return CANONICAL_NAN
        return (sign << 127) | POS_INF
    if is_inf(b):
        return sign << 127
    if is_zero(b):
        if is_zero(a):
            return CANONICAL_NAN
        return (sign << 127) | POS_INF
    if is_zero(a):
        return sign << 127
    s1, e1, m1 = _decode_finite(a)
    s2, e2, m2 = _decode_finite(b)
    quot, rem = divmod(m1 << 115, m2)  # quotient has 115 or 116 bits
    if rem:
        quot |= 1
    return _round_pack(sign, e1 - e2 - 115 + quot.bit_length() - 1, quot)


def qmadd(a: QuadFloat, b: QuadFloat, c: QuadFloat,
          mode: MaddMode = MaddMode.TWO_ROUNDINGS) -> QuadFloat:
    """Multiply-add: two-roundings computes round(round(a*b)+c), fused rounds once."""
    if mode is MaddMode.TWO_ROUNDINGS:
        return qadd(qmul(a, b), c)
    if is_nan(a) or is_nan(b) or is_nan(c):
        return _propagate_nan(a, b, c)
    sp = ((a ^ b) >> 127) & 1
    if is_inf(a) or is_inf(b):
        if is_zero(a) or is_zero(b):
            return CANONICAL_NAN
        if is_inf(c) and (c >> 127) != sp:
            return CANONICAL_NAN
        return (sp << 127) | POS_INF
    if is_inf(c):
        return c
    if is_zero(a) or is_zero(b):
        if is_zero(c):
            sc = c >> 127
            return (sp & sc) << 127 if sp != sc else (sp << 127)
        return c
    s1, e1, m1 = _decode_finite(a)
    s2, e2, m2 = _decode_finite(b)
    prod = m1 * m2
    p_lsb = e1 - 112 + e2 - 112
    p_msb = p_lsb + prod.bit_length() - 1
    if is_zero(c):
        return _round_pack(sp, p_msb, prod)
    sc, ec, mc = _decode_finite(c)
    c_lsb = ec - 112
    if ec < p_lsb - 2:
        # c lies entirely below the product's guard range: fold to a sticky.
        mag = (prod << 2) | 1 if sp == sc else (prod << 2) - 1
        return _round_pack(sp, p_lsb - 2 + mag.bit_length() - 1, mag)
    if p_msb < c_lsb - 2:
        mag = (mc << 2) | 1 if sp == sc else (mc << 2) - 1
        return _round_pack(sc, c_lsb - 2 + mag.bit_length() - 1, mag)
    grid = min(p_lsb, c_lsb)
    v1 = prod << (p_lsb - grid)
    v2 = mc << (c_lsb - grid)
    total = (v1 if sp == 0 else -v1) + (v2 if sc == 0 else -v2)
    if total == 0:
        return POS_ZERO
    sign = 1 if total < 0 else 0
    mag = abs(total)
    return _round_pack(sign, grid + mag.bit_length() - 1, mag)


def qneg(a: QuadFloat) -> QuadFloat:
    return a ^ SIGN_MASK


def qabs(a: QuadFloat) -> QuadFloat:
    return a & ~SIGN_MASK


def qcmp(a: QuadFloat, b: QuadFloat) -> Optional[int]:
    """-1/0/+1 ordering of finite-or-inf values, None if either is NaN."""
    if is_nan(a) or is_nan(b):
        return None
    ka = _order_key(a)
    kb = _order_key(b)
    return (ka > kb) - (ka < kb)


def _order_key(x: QuadFloat) -> int:
    mag = x & ~SIGN_MASK
    return -mag if x >> 127 else mag


# ---------------------------------------------------------------------------
# Conversions
# ---------------------------------------------------------------------------

_F64_BIAS = 1023
_F64_FRAC = 52


def from_f64(x: float) -> QuadFloat:
    """Exact widening of a binary64 value (every binary64 is representable)."""
    bits = struct.unpack("<Q", struct.pack("<d", x))[0]
    s = bits >> 63
    e = (bits >> 52) & 0x7FF
    f = bits & ((1 << 52) - 1)
    if e == 0x7FF:
        if f == 0:
            return (s << 127) | POS_INF
        return (s << 127) | POS_INF | (f << 60) | QUIET_BIT
    if e == 0:
        if f == 0:
            return s << 127
        # Subnormal binary64 values are normal in binary128.
        shift = 53 - f.bit_length()
        exp = -1022 - shift
        return encode(s, exp + EXP_BIAS, ((f << shift) << 60) & FRAC_MASK)
    return encode(s, e - _F64_BIAS + EXP_BIAS, f << 60)


def to_f64(q: QuadFloat) -> float:
    """Round a binary128 value to the nearest binary64."""
    s, e, f = decode(q)
    if e == EXP_FIELD_MASK:
        if f == 0:
            bits = (s << 63) | (0x7FF << 52)
        else:
            payload = f >> 60
            bits = (s << 63) | (0x7FF << 52) | payload | (1 << 51)
        return struct.unpack("<d", struct.pack("<Q", bits))[0]
    if is_zero(q):
        return -0.0 if s else 0.0
    _, msb_exp, sig = _decode_finite(q)
    if msb_exp < -1022:
        # Subnormal target; m == 2^52 after round-up is the smallest normal,
        # whose pattern the plain OR below already forms.
        drop = sig.bit_length() - 53 + (-1022 - msb_exp)
        bits = (s << 63) | _round_sig(sig, drop)
        return struct.unpack("<d", struct.pack("<Q", bits))[0]
    m = _round_sig(sig, sig.bit_length() - 53)
    exp = msb_exp
    if m >> 53:
        m >>= 1
        exp += 1
    if exp > 1023:
        bits = (s << 63) | (0x7FF << 52)
    else:
        bits = (s << 63) | ((exp + _F64_BIAS) << 52) | (m & ((1 << 52) - 1))
    return struct.unpack("<d", struct.pack("<Q", bits))[0]


# ---------------------------------------------------------------------------
# Lossless text form
# ---------------------------------------------------------------------------


def format_hexfloat(q: QuadFloat) -> str:
    """Render a pattern as a hex-float literal; parse_hexfloat inverts it."""
    s, e, f = decode(q)
    sign = "-" if s else ""
    if e == EXP_FIELD_MASK:
        if f == 0:
            return sign + "inf"
        if q & ~SIGN_MASK == CANONICAL_NAN:
            return sign + "nan"
        return sign + f"nan(0x{f:x})"
    if e == 0 and f == 0:
        return sign + "0x0p+0"
    if e == 0:
        frac_hex = f"{f:028x}".rstrip("0")
        return sign + f"0x0.{frac_hex}p-16382"
    exp = e - EXP_BIAS
    exp_str = f"p+{exp}" if exp >= 0 else f"p{exp}"
    if f == 0:
        return sign + "0x1" + exp_str
    frac_hex = f"{f:028x}".rstrip("0")
    return sign + f"0x1.{frac_hex}{exp_str}"


_HEX_DIGITS = "0123456789abcdefABCDEF"


def parse_hexfloat(text: str) -> QuadFloat:
    """Parse a hex-float literal, correctly rounding inexact values.

    Also accepts the special spellings produced by format_hexfloat:
    inf, nan and nan(0x...), each optionally signed.
    """
    pos = 0
    n = len(text)
    sign = 0
    if pos < n and text[pos] in "+-":
        sign = 1 if text[pos] == "-" else 0
        pos += 1
    rest = text[pos:].lower()
    if rest == "inf" or rest == "infinity":
        return (sign << 127) | POS_INF
    if rest == "nan":
        return (sign << 127) | CANONICAL_NAN
    if rest.startswith("nan(0x") and rest.endswith(")"):
        payload_str = rest[6:-1]
        try:
            payload = int(payload_str, 16)
        except ValueError:
            raise HexFloatParseError("bad NaN payload", pos + 6) from None
        if not 0 < payload <= FRAC_MASK:
            raise HexFloatParseError("NaN payload out of range", pos + 6)
        return (sign << 127) | POS_INF | payload
    if text[pos:pos + 2].lower() != "0x":
        raise HexFloatParseError("expected '0x'", pos)
    pos += 2
    int_start = pos
    while pos < n and text[pos] in _HEX_DIGITS:
        pos += 1
    int_digits = text[int_start:pos]
    frac_digits = ""
    if pos < n and text[pos] == ".":
        pos += 1
        frac_start = pos
        while pos < n and text[pos] in _HEX_DIGITS:
            pos += 1
        frac_digits = text[frac_start:pos]
    if not int_digits and not frac_digits:
        raise HexFloatParseError("expected hex digits", int_start)
    if pos >= n or text[pos] not in "pP":
        raise HexFloatParseError("expected 'p' exponent marker", pos)
    pos += 1
    exp_start = pos
    if pos < n and text[pos] in "+-":
        pos += 1
    if pos >= n or not text[pos].isdigit():
        raise HexFloatParseError("expected exponent digits", pos)
    while pos < n and text[pos].isdigit():
        pos += 1
    if pos != n:
        raise HexFloatParseError("trailing characters", pos)
    exp2 = int(text[exp_start:pos])
    mant = int(int_digits + frac_digits, 16) if (int_digits + frac_digits) else 0
    if mant == 0:
        return sign << 127
    exp2 -= 4 * len(frac_digits)
    return _round_pack(sign, exp2 + mant.bit_length() - 1, mant)
