"""Result tables: per-benchmark rows, averages, CSV and aligned text."""

from __future__ import annotations

import csv
import io
from dataclasses import dataclass
from typing import Sequence

RESULTS_HEADER = ("benchmark", "classes", "accuracy", "f1_weighted", "achieved_speedup_pct",
                  "ideal_speedup_pct", "replays", "energy_overhead_pct")


@dataclass(frozen=True)
class ResultRow:
    benchmark: str
    classes: int
    accuracy: float            # fraction
    f1_weighted: float         # fraction
    achieved_speedup_pct: float
    ideal_speedup_pct: float
    replays: float
    energy_overhead_pct: float
    instructions: int = 1      # weight for the instruction-weighted average


def _mean(rows, attr, weights=None):
    vals = [getattr(r, attr) for r in rows]
    if weights is None:
        return sum(vals) / len(vals)
    return sum(v * w for v, w in zip(vals, weights)) / sum(weights)


def average_rows(rows: Sequence[ResultRow]) -> list[ResultRow]:
    """Per class count: the plain mean over benchmarks and the instruction-weighted mean."""
    out = []
    for c in sorted({r.classes for r in rows}):
        block = [r for r in rows if r.classes == c]
        w = [r.instructions for r in block]
        for name, weights in (("average", None), ("weighted_average", w)):
            vals = {a: _mean(block, a, weights) for a in RESULTS_HEADER[2:]}
            out.append(ResultRow(name, c, instructions=sum(w), **vals))
    return out


def _cells(r: ResultRow, summary: bool) -> list[str]:
    replays = f"{r.replays:.1f}" if summary else str(int(r.replays))
    return [r.benchmark, str(r.classes), f"{100 * r.accuracy:.1f}", f"{100 * r.f1_weighted:.1f}",
            f"{r.achieved_speedup_pct:.1f}", f"{r.ideal_speedup_pct:.1f}", replays,
            f"{r.energy_overhead_pct:.1f}"]


def emit_results_table(rows: Sequence[ResultRow]) -> tuple[str, str]:
    """Return (csv_text, aligned_text). Accuracy and F1 are printed as percentages."""
    if not rows:
        raise ValueError("no result rows")
    body = [_cells(r, False) for r in rows]
    avg = [_cells(r, True) for r in average_rows(rows)]
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(RESULTS_HEADER)
    w.writerows(body + avg)
    return buf.getvalue(), format_table(RESULTS_HEADER, body, avg)


def format_table(header, body, footer=()) -> str:
    table = [list(header)] + [list(r) for r in body] + [list(r) for r in footer]
    widths = [max(len(row[i]) for row in table) for i in range(len(header))]

    def line(row):
        cells = [row[0].ljust(widths[0])] + [c.rjust(wd) for c, wd in zip(row[1:], widths[1:])]
        return "  ".join(cells).rstrip()

    rule = "  ".join("-" * wd for wd in widths)
    out = [line(table[0]), rule] + [line(r) for r in body]
    if footer:
        out.append(rule)
        out += [line(r) for r in footer]
    return "\n".join(out) + "\n"


def csv_text(header, rows) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    w.writerows(rows)
    return buf.getvalue()
