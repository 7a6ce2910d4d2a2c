"""Synthetic training sets, random test programs and the kernel benchmark suite."""

from __future__ import annotations

import struct
import zlib
from dataclasses import dataclass
from importlib import resources
from typing import Callable

import numpy as np

from .delay import ClassBoundaries, DelayModelConfig, classify_delay, delay_with_history
from .isa import (DEFAULT_MEM_WORDS, EXECUTE_OPS, MASK32, Instruction, MachineState, Opcode,
                  Program, alu, operands, parse_program, step, to_signed)
from .profiler import ProfileRecord

DEFAULT_TEST_SIZE = 100_000
LARGE_TEST_SIZE = 1_000_000

RANDOM_PROGRAM_OPS = (Opcode.ADD, Opcode.SUB, Opcode.ADDI, Opcode.AND, Opcode.OR,
                      Opcode.XOR, Opcode.NOR, Opcode.SLL, Opcode.SRL, Opcode.SRA,
                      Opcode.SLT, Opcode.MUL)
_DATASET_OPS = tuple(sorted(EXECUTE_OPS))
# loads and stores of the balanced generator stay in a randomly initialised
# region, so loads keep feeding fresh values into the register file
DATA_REGION_WORDS = 1024
# ops whose results lose entropy (MUL accumulates trailing zeros, SLT yields 0/1)
# only write the lower half of the register file, keeping r16..r31 random
_LOSSY_OPS = frozenset({Opcode.AND, Opcode.SLL, Opcode.SRL, Opcode.SRA, Opcode.SLT, Opcode.MUL})


class UnreachableClass(ValueError):
    def __init__(self, k: int, interval: tuple[float, float], reason: str):
        self.k = k
        self.interval = interval
        super().__init__(f"class {k} {interval} unreachable: {reason}")


@dataclass(frozen=True)
class GenSpec:
    n_per_class: int = 3000
    n_classes: int = 2
    seed: int = 0
    max_attempts_per_sample: int = 10_000
    targeted_fraction: float = 0.5

    def __post_init__(self):
        if self.n_per_class < 1:
            raise ValueError("n_per_class must be >= 1")


def check_reachable(cfg: DelayModelConfig, bounds: ClassBoundaries) -> None:
    lo_all, hi_all = cfg.min_delay, cfg.t_wc
    for k in range(bounds.n_classes):
        lo, hi = bounds.interval(k)
        if hi < lo_all:
            raise UnreachableClass(k, (lo, hi), f"minimum oracle delay is {lo_all:g} ns")
        if lo >= hi_all:
            raise UnreachableClass(k, (lo, hi), f"maximum oracle delay is {hi_all:g} ns")


def _chain_operand(a: int, length: int, rng: np.random.Generator) -> int | None:
    """An operand b such that a + b has a carry chain of exactly ``length``."""
    if length == 0:
        return int(rng.integers(0, 1 << 32)) & ~a & MASK32
    starts = [i for i in range(33 - length)
              if (a >> i) & 1 and (i + length == 32 or not (a >> (i + length)) & 1)]
    if not starts:
        return None
    i = starts[int(rng.integers(len(starts)))]
    b = 1 << i
    for j in range(i + 1, i + length):
        if not (a >> j) & 1:
            b |= 1 << j
    return b


class _Generator:
    """Rejection sampler that walks a live machine state."""

    def __init__(self, spec: GenSpec, cfg: DelayModelConfig, bounds: ClassBoundaries,
                 mem_words: int):
        self.spec, self.cfg, self.bounds = spec, cfg, bounds
        self.mem_words = mem_words
        self.rng = np.random.default_rng(spec.seed)
        self.reg_init = {r: int(self.rng.integers(0, 1 << 32)) for r in range(1, 32)}
        region = min(DATA_REGION_WORDS, mem_words)
        self.region = region
        self.data_init = {i: int(v) for i, v in enumerate(
            self.rng.integers(0, 1 << 32, size=region, dtype=np.uint64))}
        prog = Program([], data_init=self.data_init, reg_init=self.reg_init)
        self.state = MachineState.initial(prog, mem_words)
        self.hist = (0, 0, 0)

    def _random(self, index: int) -> Instruction:
        rng = self.rng
        op = _DATASET_OPS[int(rng.integers(len(_DATASET_OPS)))]
        rd = int(rng.integers(1, 16 if op in _LOSSY_OPS else 32))
        rs = int(rng.integers(0, 32))
        rt = int(rng.integers(0, 32))
        if op is Opcode.ADDI:
            return Instruction(op, rd=rd, rs=rs, imm=to_signed(int(rng.integers(0, 1 << 32))))
        if op in (Opcode.SLL, Opcode.SRL, Opcode.SRA):
            return Instruction(op, rd=rd, rs=rs, imm=int(rng.integers(0, 32)))
        if op in (Opcode.LW, Opcode.SW):
            addr = int(rng.integers(0, self.region))
            imm = to_signed((addr - self.state.regs[rs]) & MASK32)
            if op is Opcode.LW:
                return Instruction(op, rd=rd, rs=rs, imm=imm)
            return Instruction(op, rs=rs, rt=rt, imm=imm)
        if op in (Opcode.BEQ, Opcode.BNE):
            # target is the fall-through index, keeping the program straight-line
            return Instruction(op, rs=rs, rt=rt, target=index + 1)
        return Instruction(op, rd=rd, rs=rs, rt=rt)

    def _targeted(self, k: int) -> Instruction | None:
        """An instruction aimed at class k: a long-propagate ADDI or a high-MSB MUL."""
        if self.rng.random() < 0.5:
            return self._targeted_add(k) or self._targeted_mul(k)
        return self._targeted_mul(k) or self._targeted_add(k)

    def _targeted_add(self, k: int) -> Instruction | None:
        rng, cfg = self.rng, self.cfg
        lo, hi = self.bounds.interval(k)
        # the toggle term adds between 0 and history_weight
        lengths = [L for L in range(33)
                   if lo - cfg.history_weight < cfg.add_base + cfg.add_slope * L <= hi]
        if not lengths:
            return None
        for rs in rng.permutation(np.arange(1, 32)):
            for L in rng.permutation(lengths):
                b = _chain_operand(self.state.regs[rs], int(L), rng)
                if b is not None:
                    return Instruction(Opcode.ADDI, rd=int(rng.integers(1, 32)), rs=int(rs),
                                       imm=to_signed(b))
        return None

    def _targeted_mul(self, k: int) -> Instruction | None:
        cfg = self.cfg
        lo, hi = self.bounds.interval(k)
        msb = np.array([v.bit_length() for v in self.state.regs])
        tot = cfg.mul_base + cfg.mul_slope * (msb[:, None] + msb[None, :])
        rs, rt = np.nonzero((tot > lo - cfg.history_weight) & (tot <= hi))
        if len(rs) == 0:
            return None
        j = int(self.rng.integers(len(rs)))
        return Instruction(Opcode.MUL, rd=int(self.rng.integers(1, 16)), rs=int(rs[j]), rt=int(rt[j]))

    def run(self) -> tuple[list[ProfileRecord], Program]:
        spec, bounds = self.spec, self.bounds
        need = [spec.n_per_class] * bounds.n_classes
        records: list[ProfileRecord] = []
        instrs: list[Instruction] = []
        while any(need):
            open_classes = [c for c in range(bounds.n_classes) if need[c]]
            target = open_classes[int(self.rng.integers(len(open_classes)))]
            for _attempt in range(spec.max_attempts_per_sample):
                ins = None
                # class 0 is what random instructions mostly land in; only the
                # slower classes need steering
                if target > 0 and self.rng.random() < spec.targeted_fraction:
                    ins = self._targeted(target)
                if ins is None:
                    ins = self._random(len(instrs))
                a, b = operands(ins, self.state.regs)
                d = delay_with_history(ins.op, a, b, self.hist[0], self.hist[1], self.cfg)
                c = classify_delay(d, bounds)
                if c == target:
                    break
            else:
                raise UnreachableClass(target, bounds.interval(target),
                                       f"no sample after {spec.max_attempts_per_sample} attempts")
            need[c] -= 1
            res = alu(ins.op, a, b)
            records.append(ProfileRecord(len(records), ins.op, a, b, *self.hist, res, d, c))
            instrs.append(ins)
            self.state.pc = len(instrs) - 1
            step(ins, self.state)
            self.hist = (a, b, res)
        prog = Program(instrs, data_init=dict(self.data_init), reg_init=dict(self.reg_init),
                       name=f"balanced_{bounds.n_classes}c_s{spec.seed}")
        return records, prog


def gen_balanced_dataset(spec: GenSpec, cfg: DelayModelConfig, bounds: ClassBoundaries,
                         mem_words: int = DEFAULT_MEM_WORDS) -> tuple[list[ProfileRecord], Program]:
    """Exactly ``n_per_class`` profile records per delay class.

    The records are the execution profile of the returned straight-line
    program: profiling that program reproduces them.
    """
    if spec.n_classes != bounds.n_classes:
        raise ValueError("GenSpec.n_classes does not match the boundaries")
    check_reachable(cfg, bounds)
    return _Generator(spec, cfg, bounds, mem_words).run()


def gen_random_program(n: int, seed: int) -> Program:
    """``n`` uniformly drawn ALU/shift/MUL instructions over random registers."""
    if n < 1:
        raise ValueError("n must be >= 1")
    rng = np.random.default_rng(seed)
    ops = rng.integers(0, len(RANDOM_PROGRAM_OPS), size=n)
    rd = rng.integers(1, 32, size=n)
    rs = rng.integers(0, 32, size=n)
    rt = rng.integers(0, 32, size=n)
    imm = rng.integers(0, 1 << 32, size=n, dtype=np.uint64)
    shamt = rng.integers(0, 32, size=n)
    reg_init = {r: int(v) for r, v in zip(range(1, 32), rng.integers(0, 1 << 32, size=31,
                                                                        dtype=np.uint64))}
    instrs = []
    for i in range(n):
        op = RANDOM_PROGRAM_OPS[ops[i]]
        if op is Opcode.ADDI:
            instrs.append(Instruction(op, rd=int(rd[i]), rs=int(rs[i]), imm=to_signed(int(imm[i]))))
        elif op in (Opcode.SLL, Opcode.SRL, Opcode.SRA):
            instrs.append(Instruction(op, rd=int(rd[i]), rs=int(rs[i]), imm=int(shamt[i])))
        else:
            instrs.append(Instruction(op, rd=int(rd[i]), rs=int(rs[i]), rt=int(rt[i])))
    return Program(instrs, reg_init=reg_init, name=f"random_{n}_s{seed}")


# ---------------------------------------------------------------------------
# Kernel suite


@dataclass
class Kernel:
    name: str
    program: Program
    check: Callable[[MachineState], bool]
    postcondition: str


def _words(prog: Program, start: int, n: int) -> list[int]:
    return [prog.data_init.get(start + i, 0) for i in range(n)]


def _check_fib(prog):
    return lambda s: s.regs[2] == 144


def _check_matmul(prog):
    A = np.array(_words(prog, 0, 64), dtype=object).reshape(8, 8)
    B = np.array(_words(prog, 64, 64), dtype=object).reshape(8, 8)
    C = [int(v) & MASK32 for v in (A.dot(B)).ravel()]
    return lambda s: s.mem[128:192] == C


def _check_crc(prog):
    data = struct.pack("<4I", *_words(prog, 0, 4))
    want = zlib.crc32(data) & MASK32
    return lambda s: s.mem[100] == want


def _check_sort(prog):
    want = sorted(_words(prog, 0, 16), key=to_signed)
    return lambda s: s.mem[0:16] == want


def _check_popcount(prog):
    want = sum(w.bit_count() for w in _words(prog, 0, 8))
    return lambda s: s.mem[200] == want


def _check_fir(prog):
    x = [to_signed(v) for v in _words(prog, 0, 40)]
    h = [to_signed(v) for v in _words(prog, 64, 8)]
    want = [sum(h[k] * x[n - k] for k in range(8)) & MASK32 for n in range(7, 40)]
    return lambda s: s.mem[128:161] == want


_KERNELS = (
    ("fir", _check_fir, "y[n] = sum h[k] x[n-k] at words 128..160"),
    ("matmul", _check_matmul, "C = A x B (mod 2^32) at words 128..191; A is identity so C = B"),
    ("crc", _check_crc, "word 100 = zlib.crc32 of words 0..3 (little-endian)"),
    ("bubble_sort", _check_sort, "words 0..15 sorted ascending (signed)"),
    ("fibonacci", _check_fib, "r2 = fib(12) = 144"),
    ("popcount", _check_popcount, "word 200 = total set bits of words 0..7"),
)


def kernel_source(name: str) -> str:
    return resources.files("mldfs.kernels").joinpath(f"{name}.asm").read_text()


def kernel_suite() -> dict[str, Kernel]:
    out = {}
    for name, make_check, post in _KERNELS:
        prog = parse_program(kernel_source(name), name=name)
        out[name] = Kernel(name, prog, make_check(prog), post)
    return out
