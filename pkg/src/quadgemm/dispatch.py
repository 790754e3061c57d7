"""Per-call accelerator offload policy plus GEMM call-trace tooling.

A call goes to the accelerator when the output is square (m = n) or the
work product m*n*k exceeds the policy threshold.  Traces capture the
full 13-argument call shape (everything but the matrix payloads) so the
policy can be studied offline against real call mixes.

Trace file format (".rgtrace"): a header line "RGTRACE1", then one call
per line with tab-separated fields

    transa  transb  m  n  k  lda  ldb  ldc  alpha  beta

where the flags are single characters N/T and alpha/beta are hex-float
literals.  Record ordinals are implicit in line order.
"""

from __future__ import annotations

from dataclasses import dataclass, field, replace
from typing import Iterable, Optional, TextIO

from . import quadfp
from .matrix import TransposeFlag, mat_random, splitmix64
from .perfmodel import HOST_GFLOPS_DEFAULT, accel_gemm_seconds, host_gemm_seconds
from .quadfp import QuadFloat
from .rgemm import GemmBackend, rgemm
from .systolic import ArrayConfig

TRACE_HEADER = "RGTRACE1"


class TraceParseError(ValueError):
    """Malformed trace file; ``line`` is the 1-based offending line number."""

    def __init__(self, message: str, line: int):
        super().__init__(f"line {line}: {message}")
        self.line = line


@dataclass(frozen=True)
class GemmCallRecord:
    transa: TransposeFlag
    transb: TransposeFlag
    m: int
    n: int
    k: int
    lda: int
    ldb: int
    ldc: int
    alpha: QuadFloat
    beta: QuadFloat
    timestamp: int = 0

    def work_product(self) -> int:
        return self.m * self.n * self.k

    def fully_square_packed(self) -> bool:
        """n = m = k = lda = ldb = ldc, the shape the array likes best."""
        return (self.m == self.n == self.k ==
                self.lda == self.ldb == self.ldc)


@dataclass(frozen=True)
class DispatchPolicy:
    n_min: int = 10**6

    def __post_init__(self) -> None:
        if self.n_min < 1:
            raise ValueError(f"n_min must be >= 1, got {self.n_min}")


def should_offload(rec: GemmCallRecord, policy: DispatchPolicy) -> bool:
    """True when the call is worth sending to the accelerator."""
    return rec.m == rec.n or rec.work_product() > policy.n_min


# ---------------------------------------------------------------------------
# Trace I/O
# ---------------------------------------------------------------------------


class TraceRecorder:
    """Serialized appender; emits the header before the first record."""

    def __init__(self, sink: TextIO):
        self._sink = sink
        self._count = 0

    def record(self, rec: GemmCallRecord) -> None:
        if self._count == 0:
            self._sink.write(TRACE_HEADER + "\n")
        self._sink.write(format_record(rec) + "\n")
        self._count += 1


def format_record(rec: GemmCallRecord) -> str:
    return "\t".join([
        rec.transa.value, rec.transb.value,
        str(rec.m), str(rec.n), str(rec.k),
        str(rec.lda), str(rec.ldb), str(rec.ldc),
        quadfp.format_hexfloat(rec.alpha), quadfp.format_hexfloat(rec.beta),
    ])


def trace_record(sink: TextIO, rec: GemmCallRecord) -> None:
    """Append one record line (header handled by TraceRecorder or caller)."""
    sink.write(format_record(rec) + "\n")


def trace_save(path: str, records: Iterable[GemmCallRecord]) -> None:
    with open(path, "w") as fh:
        recorder = TraceRecorder(fh)
        for rec in records:
            recorder.record(rec)
        if recorder._count == 0:
            fh.write(TRACE_HEADER + "\n")


def trace_load(path: str) -> list[GemmCallRecord]:
    records: list[GemmCallRecord] = []
    with open(path) as fh:
        first = fh.readline()
        if first == "":
            return records  # zero-byte file counts as an empty trace
        if first.strip() != TRACE_HEADER:
            raise TraceParseError(f"expected header {TRACE_HEADER!r}", 1)
        for lineno, line in enumerate(fh, start=2):
            line = line.strip()
            if not line:
                continue
            parts = line.split("\t")
            if len(parts) != 10:
                raise TraceParseError(f"expected 10 fields, got {len(parts)}", lineno)
            try:
                flags = [TransposeFlag(parts[0]), TransposeFlag(parts[1])]
                dims = [int(p) for p in parts[2:8]]
                alpha = quadfp.parse_hexfloat(parts[8])
                beta = quadfp.parse_hexfloat(parts[9])
            except (ValueError, KeyError) as exc:
                raise TraceParseError(str(exc), lineno) from None
            if any(d < 0 for d in dims[:3]):
                raise TraceParseError("negative dimension", lineno)
            records.append(GemmCallRecord(
                flags[0], flags[1], *dims, alpha, beta,
                timestamp=len(records)))
    return records


# ---------------------------------------------------------------------------
# Replay
# ---------------------------------------------------------------------------


@dataclass
class ReplayReport:
    n_calls: int
    offloaded: int
    square_packed: int
    decisions: list[bool] = field(repr=False)
    modeled_seconds: Optional[float] = None
    executed: bool = False

    @property
    def offload_fraction(self) -> float:
        return self.offloaded / self.n_calls if self.n_calls else 0.0


def _validate_record(rec: GemmCallRecord, index: int) -> None:
    nrowa = rec.m if rec.transa is TransposeFlag.NO_TRANSPOSE else rec.k
    nrowb = rec.k if rec.transb is TransposeFlag.NO_TRANSPOSE else rec.n
    problems = []
    if rec.lda < max(1, nrowa):
        problems.append(f"lda {rec.lda} < {max(1, nrowa)}")
    if rec.ldb < max(1, nrowb):
        problems.append(f"ldb {rec.ldb} < {max(1, nrowb)}")
    if rec.ldc < max(1, rec.m):
        problems.append(f"ldc {rec.ldc} < {max(1, rec.m)}")
    if problems:
        raise ValueError(f"call {index}: " + "; ".join(problems))


def replay(trace: list[GemmCallRecord], policy: DispatchPolicy,
           accel_cfg: Optional[ArrayConfig] = None,
           host_gflops: float = HOST_GFLOPS_DEFAULT,
           execute: bool = False,
           backends: Optional[tuple[GemmBackend, GemmBackend]] = None,
           seed: int = 0) -> ReplayReport:
    """Run the policy over a trace; optionally execute every call.

    Dry runs validate argument shapes and accumulate the two-cost model
    (host rate vs modeled accelerator time) when ``accel_cfg`` is given.
    Execution synthesizes operands from the documented random stream.
    """
    decisions = []
    square_packed = 0
    modeled = 0.0 if accel_cfg is not None else None
    for idx, rec in enumerate(trace):
        _validate_record(rec, idx)
        off = should_offload(rec, policy)
        decisions.append(off)
        if rec.fully_square_packed():
            square_packed += 1
        if modeled is not None:
            if off:
                modeled += accel_gemm_seconds(accel_cfg, rec.m, rec.n, rec.k)
            else:
                modeled += host_gemm_seconds(rec.m, rec.n, rec.k, host_gflops)
        if execute:
            if backends is None:
                raise ValueError("execute=True needs (host, accel) backends")
            host_be, accel_be = backends
            nrowa = rec.m if rec.transa is TransposeFlag.NO_TRANSPOSE else rec.k
            ncola = rec.k if rec.transa is TransposeFlag.NO_TRANSPOSE else rec.m
            nrowb = rec.k if rec.transb is TransposeFlag.NO_TRANSPOSE else rec.n
            ncolb = rec.n if rec.transb is TransposeFlag.NO_TRANSPOSE else rec.k
            call_seed = splitmix64(seed ^ (idx + 1))
            a = mat_random(nrowa, ncola, rec.lda, seed=call_seed)
            b = mat_random(nrowb, ncolb, rec.ldb, seed=call_seed ^ 1)
            c = mat_random(rec.m, rec.n, rec.ldc, seed=call_seed ^ 2)
            try:
                rgemm(rec.transa, rec.transb, rec.m, rec.n, rec.k,
                      rec.alpha, a, rec.lda, b, rec.ldb,
                      rec.beta, c, rec.ldc,
                      accel_be if off else host_be)
            except ValueError as exc:
                raise ValueError(f"call {idx}: {exc}") from exc
    return ReplayReport(
        n_calls=len(trace), offloaded=sum(decisions),
        square_packed=square_packed, decisions=decisions,
        modeled_seconds=modeled, executed=execute)


# ---------------------------------------------------------------------------
# Synthetic trace
# ---------------------------------------------------------------------------


def synthesize_sdp_trace(seed: int = 2024, problems: int = 40,
                         iterations: int = 4) -> list[GemmCallRecord]:
    """Synthetic call mix shaped like an interior-point solver's GEMM use.

    This is generated data, not a recording of any real solver run.  Each
    synthetic problem contributes per-iteration calls dominated by
    non-square shapes with padded leading dimensions, a handful of padded
    square calls, and a single fully packed square call per problem.
    """
    one = quadfp.ONE
    zero = quadfp.POS_ZERO
    minus_one = quadfp.qneg(one)
    recs: list[GemmCallRecord] = []
    state = seed

    def draw(lo: int, hi: int) -> int:
        nonlocal state
        state = (state + 0x9E3779B97F4A7C15) & ((1 << 64) - 1)
        return lo + splitmix64(state) % (hi - lo + 1)

    for p in range(problems):
        base = draw(24, 320)
        block = draw(4, 40)
        for it in range(iterations):
            pad = draw(0, 12)
            # dense square multiply with padded storage
            recs.append(GemmCallRecord(
                TransposeFlag.NO_TRANSPOSE, TransposeFlag.NO_TRANSPOSE,
                base, base, base, base + pad, base + pad, base + pad,
                one, zero))
            # one fully packed square call per problem, first iteration only
            if it == 0:
                recs.append(GemmCallRecord(
                    TransposeFlag.NO_TRANSPOSE, TransposeFlag.NO_TRANSPOSE,
                    base, base, base, base, base, base, one, zero))
            # tall-skinny and wide updates around the block structure
            recs.append(GemmCallRecord(
                TransposeFlag.TRANSPOSE, TransposeFlag.NO_TRANSPOSE,
                base, block, base, base + pad, base + pad, base + draw(0, 8),
                one, one))
            recs.append(GemmCallRecord(
                TransposeFlag.NO_TRANSPOSE, TransposeFlag.NO_TRANSPOSE,
                block, base, base, block + draw(0, 8), base + pad, block + draw(0, 8),
                minus_one, one))
            recs.append(GemmCallRecord(
                TransposeFlag.NO_TRANSPOSE, TransposeFlag.TRANSPOSE,
                base, base, block, base + pad, base + pad, base + pad,
                one, one))
            # small clean-up products
            recs.append(GemmCallRecord(
                TransposeFlag.NO_TRANSPOSE, TransposeFlag.NO_TRANSPOSE,
                block, block, base, block + draw(0, 4), base + pad,
                block + draw(0, 4), one, zero))
    return [replace(r, timestamp=i) for i, r in enumerate(recs)]
