"""Execution profiling, outlier filtering and ML feature extraction."""

from __future__ import annotations

import csv
import io
import logging
from dataclasses import dataclass, replace
from typing import Iterable, Sequence

import numpy as np

from .delay import ClassBoundaries, DelayModelConfig, classify_delay, delay_with_history
from .isa import (DEFAULT_MAX_STEPS, DEFAULT_MEM_WORDS, EXECUTE_OPS, MASK32, OP_KIND,
                  Opcode, Program, run_reference)

log = logging.getLogger(__name__)

FEATURE_NAMES = ("op_kind", "msb_a", "msb_b", "toggles_a", "toggles_b", "popcount_prev_result")
N_FEATURES = {"summary": 6, "bits": 6 + 64}
CSV_HEADER = ("seq", "op", "a", "b", "a_prev", "b_prev", "prev_result", "result",
              "delay_ns", "class")


@dataclass(frozen=True, slots=True)
class ProfileRecord:
    seq: int
    op: Opcode
    a: int
    b: int
    a_prev: int
    b_prev: int
    prev_result: int
    result: int
    delay: float
    true_class: int


def profile_program(program: Program, cfg: DelayModelConfig, bounds: ClassBoundaries,
                    max_steps: int = DEFAULT_MAX_STEPS,
                    mem_words: int = DEFAULT_MEM_WORDS) -> list[ProfileRecord]:
    """One record per execute-unit event, in retirement order."""
    records: list[ProfileRecord] = []
    hist = [0, 0, 0]  # a_prev, b_prev, prev_result

    def on_event(_pc, ins, a, b, result):
        d = delay_with_history(ins.op, a, b, hist[0], hist[1], cfg)
        records.append(ProfileRecord(len(records), ins.op, a, b, hist[0], hist[1], hist[2],
                                     result, d, classify_delay(d, bounds)))
        hist[0], hist[1], hist[2] = a, b, result

    run_reference(program, max_steps=max_steps, mem_words=mem_words, trace=on_event)
    return records


def eliminate_outliers(records: Sequence[ProfileRecord],
                       t_wc: float = 4.0) -> tuple[list[ProfileRecord], int]:
    """Drop records with delay outside (0, t_wc] or a non-execute opcode.

    Returns the kept records and the number dropped.
    """
    kept = [r for r in records
            if r.op in EXECUTE_OPS and 0.0 < r.delay <= t_wc]
    dropped = len(records) - len(kept)
    if dropped:
        log.info("eliminated %d outlier record(s)", dropped)
    return kept, dropped


def extract_features(r: ProfileRecord, mode: str = "summary") -> tuple[int, ...]:
    # must not read r.result or r.delay: the prediction precedes execution
    f = (int(OP_KIND[r.op]), r.a.bit_length(), r.b.bit_length(),
         (r.a ^ r.a_prev).bit_count(), (r.b ^ r.b_prev).bit_count(),
         r.prev_result.bit_count())
    if mode == "bits":
        f += tuple((r.a >> i) & 1 for i in range(32)) + tuple((r.b >> i) & 1 for i in range(32))
    elif mode != "summary":
        raise ValueError(f"unknown feature mode {mode!r}")
    return f


_KIND_LUT = np.zeros(len(Opcode), dtype=np.int32)
for _op, _kind in OP_KIND.items():
    _KIND_LUT[_op] = _kind


def feature_matrix(ops, a, b, a_prev, b_prev, prev_result, mode: str = "summary") -> np.ndarray:
    """Vectorised :func:`extract_features` over operand columns."""
    a = np.asarray(a, dtype=np.uint64)
    b = np.asarray(b, dtype=np.uint64)
    cols = [
        _KIND_LUT[np.asarray(ops, dtype=np.int64)],
        _msb1(a), _msb1(b),
        np.bitwise_count(a ^ np.asarray(a_prev, dtype=np.uint64)),
        np.bitwise_count(b ^ np.asarray(b_prev, dtype=np.uint64)),
        np.bitwise_count(np.asarray(prev_result, dtype=np.uint64)),
    ]
    X = np.stack([np.asarray(c, dtype=np.int32) for c in cols], axis=1)
    if mode == "bits":
        shifts = np.arange(32, dtype=np.uint64)
        abits = ((a[:, None] >> shifts) & np.uint64(1)).astype(np.int32)
        bbits = ((b[:, None] >> shifts) & np.uint64(1)).astype(np.int32)
        X = np.concatenate([X, abits, bbits], axis=1)
    elif mode != "summary":
        raise ValueError(f"unknown feature mode {mode!r}")
    return X


def _msb1(x: np.ndarray) -> np.ndarray:
    out = np.zeros(x.shape, dtype=np.int32)
    v = x.copy()
    for s in (16, 8, 4, 2, 1):
        hi = v >> np.uint64(s)
        m = hi != 0
        out[m] += s
        v = np.where(m, hi, v)
    out += (v != 0)
    return out


def records_to_arrays(records: Sequence[ProfileRecord]) -> dict[str, np.ndarray]:
    n = len(records)
    cols = {k: np.empty(n, dtype=np.uint64) for k in ("a", "b", "a_prev", "b_prev",
                                                       "prev_result", "result")}
    ops = np.empty(n, dtype=np.int32)
    delay = np.empty(n, dtype=np.float64)
    cls = np.empty(n, dtype=np.int32)
    for i, r in enumerate(records):
        ops[i] = r.op
        cols["a"][i] = r.a
        cols["b"][i] = r.b
        cols["a_prev"][i] = r.a_prev
        cols["b_prev"][i] = r.b_prev
        cols["prev_result"][i] = r.prev_result
        cols["result"][i] = r.result
        delay[i] = r.delay
        cls[i] = r.true_class
    return dict(op=ops, delay=delay, true_class=cls, **cols)


def records_features(records: Sequence[ProfileRecord], mode: str = "summary") -> np.ndarray:
    if not records:
        return np.zeros((0, N_FEATURES[mode]), dtype=np.int32)
    c = records_to_arrays(records)
    return feature_matrix(c["op"], c["a"], c["b"], c["a_prev"], c["b_prev"],
                          c["prev_result"], mode)


def relabel(records: Iterable[ProfileRecord], bounds: ClassBoundaries) -> list[ProfileRecord]:
    """Re-derive true classes for a different boundary set."""
    return [replace(r, true_class=classify_delay(r.delay, bounds)) for r in records]


# ---------------------------------------------------------------------------
# CSV


def write_profile_csv(records: Iterable[ProfileRecord], fh) -> None:
    w = csv.writer(fh, lineterminator="\n")
    w.writerow(CSV_HEADER)
    for r in records:
        w.writerow((r.seq, r.op.name, f"0x{r.a:08x}", f"0x{r.b:08x}", f"0x{r.a_prev:08x}",
                    f"0x{r.b_prev:08x}", f"0x{r.prev_result:08x}", f"0x{r.result:08x}",
                    f"{r.delay:.4f}", r.true_class))


def profile_csv_text(records: Iterable[ProfileRecord]) -> str:
    buf = io.StringIO()
    write_profile_csv(records, buf)
    return buf.getvalue()


def read_profile_csv(fh) -> list[ProfileRecord]:
    reader = csv.reader(fh)
    header = next(reader, None)
    if header is None or tuple(h.strip() for h in header) != CSV_HEADER:
        raise ValueError(f"bad profile header: {header}")
    out = []
    for lineno, row in enumerate(reader, start=2):
        if not row:
            continue
        try:
            seq, op, *hexes, delay, cls = row
            vals = [int(h, 16) & MASK32 for h in hexes]
            out.append(ProfileRecord(int(seq), Opcode[op.strip().upper()], *vals,
                                     float(delay), int(cls)))
        except (ValueError, KeyError) as exc:
            raise ValueError(f"profile line {lineno}: {exc}") from None
    return out
