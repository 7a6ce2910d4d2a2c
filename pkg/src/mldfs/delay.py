"""Execute-unit delay model and delay classes.

Stands in for gate-level timing: delay depends on the operation, its
operands (carry-chain length, operand magnitude, shift amount) and on how many
operand bits toggled since the previous execute-unit event. The model is
calibrated so that the worst case is exactly ``t_wc``.
"""

from __future__ import annotations

import math
from bisect import bisect_left
from dataclasses import asdict, dataclass, fields

import numpy as np

from . import _core
from .isa import MASK32, Opcode

# standard class boundary sets, keyed by class count (ns, worst case 4.0)
STANDARD_BOUNDS = {
    2: (2.2, 4.0),
    3: (1.8, 2.6, 4.0),
    4: (1.0, 2.0, 3.0, 4.0),
}

DELAY_FAMILY = {
    Opcode.ADD: _core.FAM_ADD, Opcode.ADDI: _core.FAM_ADD,
    Opcode.LW: _core.FAM_ADD, Opcode.SW: _core.FAM_ADD,
    Opcode.SUB: _core.FAM_SUB, Opcode.SLT: _core.FAM_SUB,
    Opcode.BEQ: _core.FAM_SUB, Opcode.BNE: _core.FAM_SUB,
    Opcode.MUL: _core.FAM_MUL,
    Opcode.AND: _core.FAM_LOGIC, Opcode.OR: _core.FAM_LOGIC,
    Opcode.XOR: _core.FAM_LOGIC, Opcode.NOR: _core.FAM_LOGIC,
    Opcode.SLL: _core.FAM_SHIFT, Opcode.SRL: _core.FAM_SHIFT, Opcode.SRA: _core.FAM_SHIFT,
}

_CALIBRATION_TOL = 1e-9


class UnsupportedOpcode(ValueError):
    pass


@dataclass(frozen=True)
class DelayModelConfig:
    t_wc: float = 4.0
    add_base: float = 0.4
    add_slope: float = 0.1125
    mul_base: float = 0.4
    mul_slope: float = 3.6 / 62
    logic_delay: float = 0.4
    shift_base: float = 0.4
    shift_slope: float = 0.06
    history_weight: float = 0.3

    def __post_init__(self):
        for f in fields(self):
            if not getattr(self, f.name) > 0:
                raise ValueError(f"{f.name} must be > 0")
        if abs(self.add_base + 32 * self.add_slope - self.t_wc) > _CALIBRATION_TOL:
            raise ValueError("add_base + 32*add_slope must equal t_wc")
        if abs(self.mul_base + 62 * self.mul_slope - self.t_wc) > _CALIBRATION_TOL:
            raise ValueError("mul_base + 62*mul_slope must equal t_wc")

    @property
    def params(self) -> tuple[float, ...]:
        return (self.t_wc, self.add_base, self.add_slope, self.mul_base, self.mul_slope,
                self.logic_delay, self.shift_base, self.shift_slope, self.history_weight)

    @property
    def min_delay(self) -> float:
        """Smallest delay any execute op can have (zero toggles)."""
        return min(self.add_base, self.mul_base, self.logic_delay, self.shift_base)

    def to_dict(self) -> dict:
        return asdict(self)


@dataclass(frozen=True)
class ClassBoundaries:
    """Upper edges of the delay classes; class k covers (uppers[k-1], uppers[k]]."""

    uppers: tuple[float, ...]

    def __post_init__(self):
        ups = tuple(float(u) for u in self.uppers)
        object.__setattr__(self, "uppers", ups)
        if not ups:
            raise ValueError("at least one class boundary required")
        if any(not math.isfinite(u) or u <= 0 for u in ups):
            raise ValueError("boundaries must be finite and positive")
        if any(b <= a for a, b in zip(ups, ups[1:])):
            raise ValueError(f"boundaries must be strictly ascending: {ups}")

    @classmethod
    def parse(cls, text: str) -> "ClassBoundaries":
        return cls(tuple(float(t) for t in text.split(",") if t.strip()))

    @classmethod
    def standard(cls, n_classes: int) -> "ClassBoundaries":
        return cls(STANDARD_BOUNDS[n_classes])

    @property
    def n_classes(self) -> int:
        return len(self.uppers)

    @property
    def t_wc(self) -> float:
        return self.uppers[-1]

    def interval(self, k: int) -> tuple[float, float]:
        lo = 0.0 if k == 0 else self.uppers[k - 1]
        return lo, self.uppers[k]

    def __str__(self) -> str:
        return ",".join(f"{u:g}" for u in self.uppers)


def carry_chain_length(a: int, b: int) -> int:
    """Longest carry propagation run of ``a + b`` (32-bit)."""
    return _core.carry_chain(a & MASK32, b & MASK32)


def msb1(x: int) -> int:
    return (x & MASK32).bit_length()


def _family(op: Opcode) -> int:
    try:
        return DELAY_FAMILY[op]
    except KeyError:
        raise UnsupportedOpcode(f"{op.name} is not an execute-unit operation") from None


def raw_delay(op: Opcode, a: int, b: int, cfg: DelayModelConfig = DelayModelConfig()) -> float:
    """Delay with no switching-history contribution."""
    return _core.delay_scalar(_family(op), a & MASK32, b & MASK32,
                              a & MASK32, b & MASK32, cfg.params)


def delay_with_history(op: Opcode, a: int, b: int, a_prev: int, b_prev: int,
                       cfg: DelayModelConfig = DelayModelConfig()) -> float:
    return _core.delay_scalar(_family(op), a & MASK32, b & MASK32,
                              a_prev & MASK32, b_prev & MASK32, cfg.params)


def delay_batch(ops, a, b, a_prev, b_prev, cfg: DelayModelConfig = DelayModelConfig()) -> np.ndarray:
    """Vectorised :func:`delay_with_history` over arrays of opcodes/operands."""
    fam = np.array([_family(Opcode(int(o))) for o in np.asarray(ops).ravel()], dtype=np.int32)
    return _core.delay_batch(fam, a, b, a_prev, b_prev, cfg.params)


def classify_delay(d: float, bounds: ClassBoundaries) -> int:
    if not 0.0 <= d <= bounds.t_wc:
        raise ValueError(f"delay {d} outside [0, {bounds.t_wc}]")
    return bisect_left(bounds.uppers, d)


def classify_batch(d, bounds: ClassBoundaries) -> np.ndarray:
    d = np.asarray(d, dtype=np.float64)
    if d.size and (d.min() < 0.0 or d.max() > bounds.t_wc):
        raise ValueError("delay outside [0, t_wc]")
    return np.searchsorted(np.asarray(bounds.uppers), d, side="left").astype(np.int32)
