"""Benchmark output: versioned CSV, aligned console tables, digests, figures.

Every CSV starts with a "# schema: <name> v<rev>" comment line followed
by the header row.  Digests are sha256 over the schema line, the header,
and every non-timing cell, so reruns of a deterministic benchmark match
even though wall-clock columns differ.
"""

from __future__ import annotations

import hashlib
import sys
from dataclasses import dataclass, field
from typing import Sequence, TextIO


@dataclass
class ReportTable:
    schema: str
    columns: list[str]
    rows: list[list] = field(default_factory=list)
    timing_columns: frozenset = frozenset()

    def add(self, *values) -> None:
        if len(values) != len(self.columns):
            raise ValueError(f"row with {len(values)} cells in a "
                             f"{len(self.columns)}-column table")
        self.rows.append(list(values))


def _cell(v) -> str:
    if isinstance(v, float):
        return repr(v)
    return str(v)


def write_csv(path: str, table: ReportTable) -> None:
    with open(path, "w") as fh:
        fh.write(f"# schema: {table.schema}\n")
        fh.write(",".join(table.columns) + "\n")
        for row in table.rows:
            fh.write(",".join(_cell(v) for v in row) + "\n")


def print_table(table: ReportTable, out: TextIO = sys.stdout) -> None:
    cells = [[_cell(v) for v in row] for row in table.rows]
    widths = [max([len(c)] + [len(r[i]) for r in cells])
              for i, c in enumerate(table.columns)]
    line = "  ".join(c.rjust(w) for c, w in zip(table.columns, widths))
    out.write(line + "\n")
    out.write("-" * len(line) + "\n")
    for r in cells:
        out.write("  ".join(c.rjust(w) for c, w in zip(r, widths)) + "\n")


def digest(table: ReportTable) -> str:
    """sha256 over the schema, header, and all non-timing cells."""
    keep = [i for i, c in enumerate(table.columns) if c not in table.timing_columns]
    h = hashlib.sha256()
    h.update(table.schema.encode())
    h.update("\x1f".join(table.columns[i] for i in keep).encode())
    for row in table.rows:
        h.update(b"\n")
        h.update("\x1f".join(_cell(row[i]) for i in keep).encode())
    return h.hexdigest()


def render_figure(path: str, table: ReportTable, x: str, ys: Sequence[str],
                  series: str | None = None, logx: bool = False,
                  logy: bool = False, title: str | None = None) -> None:
    """Line plot of one or more y columns against x, one PNG per table.

    With ``series`` set, rows are grouped by that column and each group
    becomes its own line per y column.
    """
    import matplotlib
    matplotlib.use("Agg")
    import matplotlib.pyplot as plt

    ix = table.columns.index(x)
    iys = [table.columns.index(y) for y in ys]
    fig, ax = plt.subplots(figsize=(7, 4.5))
    groups: dict = {}
    if series is None:
        groups[None] = table.rows
    else:
        isr = table.columns.index(series)
        for row in table.rows:
            groups.setdefault(row[isr], []).append(row)
    for key, rows in groups.items():
        usable = [r for r in rows if _is_number(r[ix])]
        xs = [r[ix] for r in usable]
        for y, iy in zip(ys, iys):
            pts = [(xv, r[iy]) for xv, r in zip(xs, usable) if _is_number(r[iy])]
            if not pts:
                continue
            label = y if key is None else (f"{key}" if len(ys) == 1 else f"{key} {y}")
            ax.plot([p[0] for p in pts], [p[1] for p in pts],
                    marker="o", markersize=3, label=label)
    if logx:
        ax.set_xscale("log", base=2)
    if logy:
        ax.set_yscale("log")
    ax.set_xlabel(x)
    ax.set_ylabel(", ".join(ys))
    if title:
        ax.set_title(title)
    if len(groups) > 1 or len(ys) > 1:
        ax.legend(fontsize=8)
    ax.grid(True, alpha=0.3)
    fig.tight_layout()
    fig.savefig(path, dpi=120)
    plt.close(fig)


def _is_number(v) -> bool:
    return isinstance(v, (int, float)) and not isinstance(v, bool)
