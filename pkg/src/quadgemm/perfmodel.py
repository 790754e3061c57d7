"""Closed-form throughput and bandwidth models for the multiply-add array.

Units are decimal throughout: GFlops = 1e9 flops/s, GB/s = 1e9 bytes/s.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from fractions import Fraction
from importlib import resources

from .systolic import ArrayConfig, model_t_exec


@dataclass(frozen=True)
class BoardSpec:
    """An accelerator board: identity plus DRAM bandwidth in GB/s."""

    name: str
    bandwidth_gbs: float

    def __post_init__(self) -> None:
        if not self.bandwidth_gbs > 0:
            raise ValueError(f"board {self.name}: bandwidth must be positive")


def f_peak(cfg: ArrayConfig) -> float:
    """Peak throughput in GFlops: two flops per PE per cycle."""
    return 2.0 * cfg.p_r * cfg.p_c * cfg.f_mhz * 1e6 / 1e9


def f_perf(m: int, n: int, k: int, t_exec_seconds: float) -> float:
    """Achieved GFlops of one C' = A*B run taking t_exec_seconds."""
    if t_exec_seconds <= 0:
        raise ValueError(f"execution time must be positive, got {t_exec_seconds}")
    return 2.0 * m * n * k / (t_exec_seconds * 1e9)


def b_req(cfg: ArrayConfig) -> float:
    """DRAM bandwidth in GB/s needed to feed p_r + p_c words per cycle."""
    return (cfg.p_r + cfg.p_c) * cfg.f_mhz * 1e6 * cfg.n_byte / 1e9


def bandwidth_ceiling(cfg: ArrayConfig, board: BoardSpec) -> float:
    """Throughput ceiling in GFlops once board bandwidth caps the feed rate.

    An optimistic bound: peak scaled by the fraction of the required
    bandwidth the board can supply, clamped at peak.
    """
    return f_peak(cfg) * min(1.0, board.bandwidth_gbs / b_req(cfg))


def lu_flops(n: int) -> int:
    """Exact flop count of an n x n LU factorization: 2n^3/3 - n^2/2 + 5n/6."""
    if n < 1:
        raise ValueError(f"matrix order must be >= 1, got {n}")
    total = Fraction(2 * n**3, 3) - Fraction(n**2, 2) + Fraction(5 * n, 6)
    assert total.denominator == 1
    return int(total)


def f_perf_lu(n: int, t_exec_seconds: float) -> float:
    """LU GFlops under the conventional 2n^3/3 operation count."""
    if t_exec_seconds <= 0:
        raise ValueError(f"execution time must be positive, got {t_exec_seconds}")
    return 2.0 * n**3 / (3.0 * t_exec_seconds * 1e9)


# ---------------------------------------------------------------------------
# Dispatch two-cost model
# ---------------------------------------------------------------------------

# Plateau of the reference 20-thread CPU Rgemm on large matrices; the
# host side of a dispatch decision is modeled as this flat rate.
HOST_GFLOPS_DEFAULT = 0.65


def host_gemm_seconds(m: int, n: int, k: int,
                      host_gflops: float = HOST_GFLOPS_DEFAULT) -> float:
    if host_gflops <= 0:
        raise ValueError("host rate must be positive")
    return 2.0 * m * n * k / (host_gflops * 1e9)


def accel_gemm_seconds(cfg: ArrayConfig, m: int, n: int, k: int) -> float:
    return model_t_exec(cfg, m, n, k)


# ---------------------------------------------------------------------------
# Bundled boards
# ---------------------------------------------------------------------------


def bundled_boards() -> dict[str, BoardSpec]:
    raw = resources.files("quadgemm.data").joinpath("boards.json").read_text()
    entries = json.loads(raw)["boards"]
    return {e["name"]: BoardSpec(e["name"], e["bandwidth_gbs"]) for e in entries}
