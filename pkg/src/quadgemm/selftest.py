"""Built-in verification: oracle conformance, tiling invariance, LU residuals.

Reduced-size editions of the heaviest correctness gates, runnable from
the command line on an installed package.  The full-size versions live
in the test suite.
"""

from __future__ import annotations

import random
import time
from dataclasses import dataclass
from typing import Callable

from . import _kernels, oracle, quadfp
from .lu import getrf_blocked, getrf_unblocked, reconstruction_residual
from .matrix import mat_random
from .quadfp import MaddMode
from .rgemm import GemmBackend
from .systolic import ArrayConfig, reference_gemm, simulate_gemm

DIRECTED_PATTERNS: list[int] = [
    quadfp.POS_ZERO, quadfp.NEG_ZERO,
    quadfp.ONE, quadfp.qneg(quadfp.ONE),
    quadfp.POS_INF, quadfp.NEG_INF,
    quadfp.CANONICAL_NAN, quadfp.CANONICAL_NAN | 0xDEAD,
    quadfp.SIGN_MASK | quadfp.CANONICAL_NAN,
    quadfp.MIN_SUBNORMAL, quadfp.MIN_SUBNORMAL | quadfp.SIGN_MASK,
    quadfp.FRAC_MASK,                      # largest subnormal
    quadfp.encode(0, 1, 0),                # smallest normal
    quadfp.MAX_FINITE, quadfp.MAX_FINITE | quadfp.SIGN_MASK,
    quadfp.encode(0, 16383, 1),            # 1 + ulp
    quadfp.encode(0, 16383 - 113, 0),      # 2^-113: the tie against 1.0
    quadfp.encode(1, 16383 - 113, 0),
    quadfp.encode(0, 16383 + 112, 0),      # 2^112: integer-boundary scale
    quadfp.from_f64(3.0), quadfp.from_f64(-1.5), quadfp.from_f64(0.1),
]


@dataclass
class CheckResult:
    name: str
    ok: bool
    detail: str
    seconds: float


def _check_op_conformance(samples: int, seed: int) -> CheckResult:
    t0 = time.perf_counter()
    rng = random.Random(seed)
    mism = 0
    total = 0

    def one(a: int, b: int, c: int) -> None:
        nonlocal mism, total
        cases = (
            (quadfp.qadd(a, b), _kernels.op_add(a, b), oracle.oracle_add(a, b)),
            (quadfp.qmul(a, b), _kernels.op_mul(a, b), oracle.oracle_mul(a, b)),
            (quadfp.qdiv(a, b), _kernels.op_div(a, b), oracle.oracle_div(a, b)),
            (quadfp.qmadd(a, b, c, MaddMode.FUSED), _kernels.op_madd(a, b, c, True),
             oracle.oracle_fma(a, b, c)),
        )
        for soft, engine, want in cases:
            total += 1
            if soft != want or engine != want:
                mism += 1

    for p in DIRECTED_PATTERNS:
        for q in DIRECTED_PATTERNS:
            one(p, q, quadfp.ONE)
            one(p, q, quadfp.NEG_ZERO)
    for _ in range(samples):
        one(rng.getrandbits(128), rng.getrandbits(128), rng.getrandbits(128))
    dt = time.perf_counter() - t0
    return CheckResult(
        "arithmetic-conformance", mism == 0,
        f"{total} op evaluations vs exact-integer oracle, {mism} mismatches", dt)


def _check_tiling_invariance(shapes: int, seed: int) -> CheckResult:
    t0 = time.perf_counter()
    rng = random.Random(seed)
    configs = [
        ArrayConfig(1, 1, 4, 200.0),
        ArrayConfig(4, 2, 8, 200.0),
        ArrayConfig(8, 8, 32, 200.0),
    ]
    bad = 0
    for _ in range(shapes):
        m, n, k = (rng.randint(1, 48) for _ in range(3))
        a = mat_random(m, k, seed=rng.getrandbits(63))
        b = mat_random(k, n, seed=rng.getrandbits(63))
        want = reference_gemm(a, b, MaddMode.FUSED).patterns()
        for cfg in configs:
            got = simulate_gemm(cfg, a, b).c_prime.patterns()
            if got != want:
                bad += 1
    dt = time.perf_counter() - t0
    return CheckResult(
        "tiling-invariance", bad == 0,
        f"{shapes} shapes x {len(configs)} configurations, {bad} mismatches", dt)


def _check_lu(seed: int) -> CheckResult:
    t0 = time.perf_counter()
    worst = 0.0
    notes = []
    for n, b in ((64, 32), (128, 32), (128, 64)):
        orig = mat_random(n, n, seed=seed + n + b)
        work = orig.copy()
        fac = getrf_blocked(work, block_b=b, backend=GemmBackend.reference())
        res = quadfp.to_f64(reconstruction_residual(orig, fac))
        worst = max(worst, res)
        notes.append(f"n={n},b={b}:{res:.2e}")
    orig = mat_random(64, 64, seed=seed)
    w1, w2 = orig.copy(), orig.copy()
    f1 = getrf_unblocked(w1)
    f2 = getrf_blocked(w2, block_b=64)
    identical = f1.piv == f2.piv and w1.patterns() == w2.patterns()
    ok = worst <= 1e-29 and identical
    dt = time.perf_counter() - t0
    return CheckResult(
        "lu-reconstruction", ok,
        f"residuals {' '.join(notes)}; blocked(b>=n) identical: {identical}", dt)


def run_selftest(samples: int = 10000, shapes: int = 12, seed: int = 20240801,
                 emit: Callable[[str], None] = print) -> bool:
    checks = (
        _check_op_conformance(samples, seed),
        _check_tiling_invariance(shapes, seed + 1),
        _check_lu(seed + 2),
    )
    all_ok = True
    for c in checks:
        emit(f"{'PASS' if c.ok else 'FAIL'}  {c.name}  [{c.seconds:.1f}s]  {c.detail}")
        all_ok &= c.ok
    return all_ok
