"""Functional and analytic simulator of the PR x PC multiply-add array.

The array computes C' = A*B exactly: every output element accumulates
acc <- madd(A(i,p), B(p,j), acc) strictly in p order from +0.0, so the
result is bit-identical for every array geometry and equals the plain
triple-loop reference.  What the geometry changes is the cost model.

Cost model (committed here; all counts are deterministic functions of
the configuration and shape):

  row panels    RP = ceil(m / p_r)
  column panels CP = ceil(n / p_c)
  depth chunks  KC = ceil(k / m_tile)
  passes        = RP * KC * CP      (one buffered A panel vs one B panel)

  cycles = RP*CP*k                  every output tile runs k madd steps
         + passes * (p_r + p_c)     feed-pipeline fill per pass
         + RP*CP * (p_r * p_c)      draining each output tile through
                                    the serial drain chain

  dram_bytes = n_byte * ( m*k * ceil(n / (p_c*m_tile))     A loads
                        + k*n * ceil(m / (p_r*m_tile))     B loads
                        + m*n )                            C' store

With m_tile = 1 and aligned shapes the byte model consumes exactly
p_r + p_c words per compute cycle, the feed rate the bandwidth
requirement formula assumes; growing m_tile only ever reduces traffic.
"""

from __future__ import annotations

from dataclasses import dataclass
from math import ceil

from . import _kernels
from .matrix import DimensionError, Matrix, mat_new
from .quadfp import MaddMode


class ConfigError(ValueError):
    """Invalid array configuration."""


@dataclass(frozen=True)
class ArrayConfig:
    """Geometry and clock of one accelerator design point."""

    p_r: int
    p_c: int
    m_tile: int
    f_mhz: float
    n_byte: int = 16
    madd_mode: MaddMode = MaddMode.FUSED

    def __post_init__(self) -> None:
        if self.p_r < 1 or self.p_c < 1:
            raise ConfigError(f"PE grid {self.p_r}x{self.p_c} must be at least 1x1")
        if self.m_tile < 1:
            raise ConfigError(f"memory tile depth {self.m_tile} must be >= 1")
        if not self.f_mhz > 0:
            raise ConfigError(f"clock {self.f_mhz} MHz must be positive")
        if self.n_byte < 1:
            raise ConfigError(f"word size {self.n_byte} must be >= 1 byte")


@dataclass(frozen=True)
class TilePass:
    """One buffered A panel streamed against one B panel.

    The A panel covers rows [i0, i1) and depth [p0, p1); the B panel
    covers depth [p0, p1) and columns [j0, j1).
    """

    i0: int
    i1: int
    j0: int
    j1: int
    p0: int
    p1: int


@dataclass
class SimReport:
    c_prime: Matrix
    cycles: int
    dram_bytes: int
    t_exec_model: float
    achieved_gflops_model: float


def tile_schedule(cfg: ArrayConfig, m: int, n: int, k: int) -> list[TilePass]:
    """Pass list covering the (m, n, k) iteration space exactly once.

    Order is row panel, then depth chunk, then column panel, so each
    output element sees its depth range in ascending order.
    """
    passes = []
    for i0 in range(0, m, cfg.p_r):
        i1 = min(i0 + cfg.p_r, m)
        for p0 in range(0, k, cfg.m_tile):
            p1 = min(p0 + cfg.m_tile, k)
            for j0 in range(0, n, cfg.p_c):
                j1 = min(j0 + cfg.p_c, n)
                passes.append(TilePass(i0, i1, j0, j1, p0, p1))
    return passes


def model_costs(cfg: ArrayConfig, m: int, n: int, k: int) -> tuple[int, int]:
    """(cycles, dram_bytes) of one C' = A*B run under the cost model."""
    rp = ceil(m / cfg.p_r)
    cp = ceil(n / cfg.p_c)
    kc = ceil(k / cfg.m_tile)
    n_passes = rp * kc * cp
    cycles = rp * cp * k + n_passes * (cfg.p_r + cfg.p_c) + rp * cp * (cfg.p_r * cfg.p_c)
    loads_a = m * k * ceil(n / (cfg.p_c * cfg.m_tile))
    loads_b = k * n * ceil(m / (cfg.p_r * cfg.m_tile))
    dram_bytes = cfg.n_byte * (loads_a + loads_b + m * n)
    return cycles, dram_bytes


def model_t_exec(cfg: ArrayConfig, m: int, n: int, k: int) -> float:
    cycles, _ = model_costs(cfg, m, n, k)
    return cycles / (cfg.f_mhz * 1e6)


def reference_gemm(a: Matrix, b: Matrix,
                   mode: MaddMode = MaddMode.TWO_ROUNDINGS) -> Matrix:
    """Canonical triple loop: per element, madd over p = 0..k-1 from +0.0."""
    if a.cols != b.rows:
        raise DimensionError(
            f"inner dimensions disagree: {a.rows}x{a.cols} times {b.rows}x{b.cols}")
    m, k, n = a.rows, a.cols, b.cols
    c = mat_new(m, n)
    if m and n and k:
        _kernels.gemm_block(c.data, c.offset, a.data, a.offset, b.data, b.offset,
                            a.ld, b.ld, c.ld, 0, m, 0, n, 0, k,
                            mode is MaddMode.FUSED)
    return c


def simulate_gemm(cfg: ArrayConfig, a: Matrix, b: Matrix) -> SimReport:
    """Run C' = A*B through the tile schedule and report modeled costs."""
    if a.cols != b.rows:
        raise DimensionError(
            f"inner dimensions disagree: {a.rows}x{a.cols} times {b.rows}x{b.cols}")
    m, k, n = a.rows, a.cols, b.cols
    c = mat_new(m, n)
    fused = cfg.madd_mode is MaddMode.FUSED
    if m and n and k:
        for tp in tile_schedule(cfg, m, n, k):
            _kernels.gemm_block(c.data, c.offset, a.data, a.offset, b.data, b.offset,
                                a.ld, b.ld, c.ld,
                                tp.i0, tp.i1, tp.j0, tp.j1, tp.p0, tp.p1, fused)
    cycles, dram_bytes = model_costs(cfg, m, n, k)
    t_exec = cycles / (cfg.f_mhz * 1e6)
    gflops = (2.0 * m * n * k / (t_exec * 1e9)) if t_exec > 0 else 0.0
    return SimReport(c_prime=c, cycles=cycles, dram_bytes=dram_bytes,
                     t_exec_model=t_exec, achieved_gflops_model=gflops)
