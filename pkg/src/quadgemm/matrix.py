"""Dense binary128 matrices with BLAS-style column-major addressing.

Element (i, j) of a matrix lives at element offset ``offset + i + j*ld``
in a flat numpy uint64 buffer holding two little-endian limbs per value.
A Matrix may be a window into a larger shared buffer (nonzero offset),
which is how submatrix operations avoid copies.

Random fills use SplitMix64 (Steele, Lea & Flood's published mixer) so
test matrices are reproducible from a single 64-bit seed in any
implementation language: draw k for element (i, j) is mix64(seed +
(k+1)*GAMMA) with k = j*rows + i, mapped to [0, 1) via the top 53 bits.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from enum import Enum
from typing import Callable

import numpy as np

from . import _kernels
from . import quadfp
from .quadfp import QuadFloat


class DimensionError(ValueError):
    """Shape or leading-dimension constraint violated."""


class TransposeFlag(Enum):
    NO_TRANSPOSE = "N"
    TRANSPOSE = "T"


_SPLITMIX_GAMMA = 0x9E3779B97F4A7C15
_MASK64 = (1 << 64) - 1


def splitmix64(state: int) -> int:
    """One output of the SplitMix64 mixer for the given raw state."""
    z = state & _MASK64
    z = ((z ^ (z >> 30)) * 0xBF58476D1CE4E5B9) & _MASK64
    z = ((z ^ (z >> 27)) * 0x94D049BB133111EB) & _MASK64
    return z ^ (z >> 31)


def _uniform_block(seed: int, start: int, count: int) -> np.ndarray:
    """Draws start..start+count-1 of the [0,1) stream, as float64."""
    idx = np.arange(start + 1, start + count + 1, dtype=np.uint64)
    with np.errstate(over="ignore"):
        z = (np.uint64(seed) + idx * np.uint64(_SPLITMIX_GAMMA)).astype(np.uint64)
        z = (z ^ (z >> np.uint64(30))) * np.uint64(0xBF58476D1CE4E5B9)
        z = (z ^ (z >> np.uint64(27))) * np.uint64(0x94D049BB133111EB)
        z = z ^ (z >> np.uint64(31))
    return (z >> np.uint64(11)).astype(np.float64) * 2.0**-53


@dataclass
class Matrix:
    """rows x cols binary128 matrix over a (possibly shared) limb buffer."""

    rows: int
    cols: int
    ld: int
    data: np.ndarray = field(repr=False)
    offset: int = 0

    def __post_init__(self) -> None:
        if self.rows < 0 or self.cols < 0:
            raise DimensionError("negative dimension")
        if self.ld < self.rows:
            raise DimensionError(
                f"leading dimension {self.ld} < row count {self.rows}")
        need = self.offset + ((self.cols - 1) * self.ld + self.rows if self.cols else 0)
        if self.data.ndim != 1 or self.data.dtype != np.uint64:
            raise DimensionError("backing buffer must be a flat uint64 array")
        if self.data.shape[0] < 2 * need:
            raise DimensionError("backing buffer too small")

    # -- element access (patterns are plain ints) --

    def _idx(self, i: int, j: int) -> int:
        if not (0 <= i < self.rows and 0 <= j < self.cols):
            raise IndexError(f"({i}, {j}) outside {self.rows}x{self.cols}")
        return self.offset + i + j * self.ld

    def get(self, i: int, j: int) -> QuadFloat:
        e = 2 * self._idx(i, j)
        return int(self.data[e]) | (int(self.data[e + 1]) << 64)

    def set(self, i: int, j: int, pattern: QuadFloat) -> None:
        e = 2 * self._idx(i, j)
        self.data[e] = pattern & _MASK64
        self.data[e + 1] = pattern >> 64

    def patterns(self) -> list[QuadFloat]:
        """Logical elements in column-major order (padding excluded)."""
        return [self.get(i, j) for j in range(self.cols) for i in range(self.rows)]

    def copy(self, ld: int | None = None) -> "Matrix":
        """Deep copy into a fresh buffer, optionally changing the leading dimension."""
        new_ld = self.ld if ld is None else ld
        out = mat_new(self.rows, self.cols, new_ld)
        for j in range(self.cols):
            src = 2 * (self.offset + j * self.ld)
            dst = 2 * (j * new_ld)
            out.data[dst:dst + 2 * self.rows] = self.data[src:src + 2 * self.rows]
        return out

    def window(self, r0: int, c0: int, rows: int, cols: int) -> "Matrix":
        """Shared-buffer view of the block starting at (r0, c0)."""
        if r0 + rows > self.rows or c0 + cols > self.cols or r0 < 0 or c0 < 0:
            raise DimensionError("window outside the matrix")
        return Matrix(rows, cols, self.ld, self.data,
                      self.offset + r0 + c0 * self.ld)

    def swap_rows(self, i: int, p: int) -> None:
        if i == p:
            return
        if not (0 <= i < self.rows and 0 <= p < self.rows):
            raise IndexError(f"rows {i}, {p} outside {self.rows}")
        stop = 2 * (self.offset + self.ld * self.cols)
        for limb in (0, 1):
            si = self.data[2 * (self.offset + i) + limb:stop:2 * self.ld]
            sp = self.data[2 * (self.offset + p) + limb:stop:2 * self.ld]
            tmp = si.copy()
            si[:] = sp
            sp[:] = tmp


def mat_new(rows: int, cols: int, ld: int | None = None,
            fill: QuadFloat = quadfp.POS_ZERO) -> Matrix:
    """Fresh matrix with every logical element set to ``fill``."""
    if ld is None:
        ld = rows
    if ld < rows:
        raise DimensionError(f"leading dimension {ld} < row count {rows}")
    buf = np.zeros(2 * ld * cols, dtype=np.uint64)
    m = Matrix(rows, cols, ld, buf)
    if fill != quadfp.POS_ZERO:
        lo = fill & _MASK64
        hi = fill >> 64
        for j in range(cols):
            e = 2 * j * ld
            m.data[e:e + 2 * rows:2] = lo
            m.data[e + 1:e + 2 * rows:2] = hi
    return m


def mat_random(rows: int, cols: int, ld: int | None = None,
               seed: int = 0) -> Matrix:
    """Matrix of uniform [0, 1) draws from the documented SplitMix64 stream."""
    m = mat_new(rows, cols, ld)
    if rows == 0 or cols == 0:
        return m
    for j in range(cols):
        vals = _uniform_block(seed, j * rows, rows)
        e = 2 * j * m.ld
        _kernels.widen_f64(vals, m.data[e:e + 2 * rows])
    return m


def mat_identity(n: int, ld: int | None = None) -> Matrix:
    m = mat_new(n, n, ld)
    for i in range(n):
        m.set(i, i, quadfp.ONE)
    return m


def mat_view_transposed(a: Matrix, flag: TransposeFlag
                        ) -> tuple[int, int, Callable[[int, int], QuadFloat]]:
    """(rows, cols, accessor) for op(A); no data is copied."""
    if flag is TransposeFlag.NO_TRANSPOSE:
        return a.rows, a.cols, a.get
    return a.cols, a.rows, lambda i, j: a.get(j, i)


def mat_equal(a: Matrix, b: Matrix) -> bool:
    """Bitwise equality of logical elements (padding ignored)."""
    if (a.rows, a.cols) != (b.rows, b.cols):
        return False
    return all(x == y for x, y in zip(a.patterns(), b.patterns()))


# ---------------------------------------------------------------------------
# File formats
# ---------------------------------------------------------------------------

# Binary "QMAT1": a 24-byte header -- the 6-byte magic "QMAT1\0" padded
# with two zero bytes to 8, then u32 rows/cols/ld/reserved, all
# little-endian -- followed by ld*cols 16-byte little-endian binary128
# words in column-major buffer order (padding rows included verbatim).

_QMAT_MAGIC = b"QMAT1\0\0\0"


def save_qmat1(path: str, m: Matrix) -> None:
    import struct as _struct

    flat = m if m.offset == 0 and m.data.shape[0] >= 2 * m.ld * m.cols else m.copy()
    with open(path, "wb") as fh:
        fh.write(_QMAT_MAGIC)
        fh.write(_struct.pack("<IIII", m.rows, m.cols, flat.ld, 0))
        fh.write(flat.data[:2 * flat.ld * flat.cols].tobytes())


def load_qmat1(path: str) -> Matrix:
    import struct as _struct

    with open(path, "rb") as fh:
        magic = fh.read(8)
        if magic != _QMAT_MAGIC:
            raise ValueError(f"{path}: not a QMAT1 file")
        rows, cols, ld, _ = _struct.unpack("<IIII", fh.read(16))
        raw = fh.read(16 * ld * cols)
    if len(raw) != 16 * ld * cols:
        raise ValueError(f"{path}: truncated QMAT1 payload")
    buf = np.frombuffer(raw, dtype="<u8").astype(np.uint64)
    return Matrix(rows, cols, ld, buf)


def save_text(path: str, m: Matrix) -> None:
    """Text form: a "rows cols" line, then one hex-float per line, column-major."""
    with open(path, "w") as fh:
        fh.write(f"{m.rows} {m.cols}\n")
        for j in range(m.cols):
            for i in range(m.rows):
                fh.write(quadfp.format_hexfloat(m.get(i, j)) + "\n")


def load_text(path: str) -> Matrix:
    with open(path) as fh:
        header = fh.readline().split()
        if len(header) != 2:
            raise ValueError(f"{path}: expected 'rows cols' header line")
        rows, cols = int(header[0]), int(header[1])
        m = mat_new(rows, cols)
        for j in range(cols):
            for i in range(rows):
                line = fh.readline()
                if not line:
                    raise ValueError(f"{path}: truncated matrix body")
                m.set(i, j, quadfp.parse_hexfloat(line.strip()))
    return m
