"""Mini MIPS-like ISA: instruction model, assembler and reference interpreter.

Memory is word-addressed: ``LW r2, 4(r1)`` reads word ``r1 + 4``. There are no
branch delay slots, exceptions or coprocessors.

Assembly syntax, one statement per line::

    # comment
    loop:                       label (may share a line with an instruction)
    ADD  r3, r1, r2             R-type: ADD SUB AND OR XOR NOR SLT MUL
    ADDI r3, r1, -7             32-bit signed (or 0x...) immediate
    SLL  r3, r1, 4              shifts take a 0..31 immediate amount
    LW   r3, 8(r1)
    SW   r3, 8(r1)              stores r3
    BEQ  r1, r2, loop
    J    loop
    NOP
    .data 100 1, 2, 0xff        consecutive words starting at address 100
    .reg  r5 0xdeadbeef         initial register value
"""

from __future__ import annotations

import enum
import re
from dataclasses import dataclass, field

MASK32 = 0xFFFFFFFF
NUM_REGS = 32
DEFAULT_MEM_WORDS = 65536
DEFAULT_MAX_STEPS = 10_000_000


class Opcode(enum.IntEnum):
    ADD = 0
    SUB = 1
    ADDI = 2
    AND = 3
    OR = 4
    XOR = 5
    NOR = 6
    SLL = 7
    SRL = 8
    SRA = 9
    SLT = 10
    MUL = 11
    LW = 12
    SW = 13
    BEQ = 14
    BNE = 15
    J = 16
    NOP = 17


class OpKind(enum.IntEnum):
    """Execute-unit operation class, used as the first ML feature."""

    LOGIC = 0
    SHIFT = 1
    ADDSUB = 2
    MUL = 3
    MEMADDR = 4
    CMP = 5


R_TYPE = frozenset({Opcode.ADD, Opcode.SUB, Opcode.AND, Opcode.OR, Opcode.XOR,
                    Opcode.NOR, Opcode.SLT, Opcode.MUL})
SHIFTS = frozenset({Opcode.SLL, Opcode.SRL, Opcode.SRA})
BRANCHES = frozenset({Opcode.BEQ, Opcode.BNE})
# opcodes that produce an execute-unit event (everything but J and NOP)
EXECUTE_OPS = frozenset(op for op in Opcode if op not in (Opcode.J, Opcode.NOP))

OP_KIND = {
    Opcode.AND: OpKind.LOGIC, Opcode.OR: OpKind.LOGIC,
    Opcode.XOR: OpKind.LOGIC, Opcode.NOR: OpKind.LOGIC,
    Opcode.SLL: OpKind.SHIFT, Opcode.SRL: OpKind.SHIFT, Opcode.SRA: OpKind.SHIFT,
    Opcode.ADD: OpKind.ADDSUB, Opcode.SUB: OpKind.ADDSUB, Opcode.ADDI: OpKind.ADDSUB,
    Opcode.MUL: OpKind.MUL,
    Opcode.LW: OpKind.MEMADDR, Opcode.SW: OpKind.MEMADDR,
    Opcode.SLT: OpKind.CMP, Opcode.BEQ: OpKind.CMP, Opcode.BNE: OpKind.CMP,
}


class AsmError(ValueError):
    """Assembly error carrying the source location (1-based line and column)."""

    def __init__(self, message: str, line: int = 0, column: int = 0):
        self.message = message
        self.line = line
        self.column = column
        super().__init__(f"line {line}, col {column}: {message}")


class MemoryAccessError(RuntimeError):
    pass


class StepLimitExceeded(RuntimeError):
    """Raised when a program does not halt within ``max_steps`` retirements."""

    def __init__(self, steps: int, state: "MachineState | None" = None):
        self.steps = steps
        self.state = state
        super().__init__(f"step limit exceeded after {steps} steps")


@dataclass(frozen=True, slots=True)
class Instruction:
    op: Opcode
    rd: int = 0
    rs: int = 0
    rt: int = 0
    imm: int = 0
    target: int | None = None
    label: str | None = None
    line: int = 0

    def __post_init__(self):
        for name in ("rd", "rs", "rt"):
            r = getattr(self, name)
            if not 0 <= r < NUM_REGS:
                raise ValueError(f"{name}={r} out of range")
        if not -(1 << 31) <= self.imm <= MASK32:
            raise ValueError(f"immediate {self.imm} does not fit in 32 bits")

    @property
    def dest(self) -> int:
        """Destination register, 0 if the instruction writes none."""
        if self.op in R_TYPE or self.op in SHIFTS or self.op in (Opcode.ADDI, Opcode.LW):
            return self.rd
        return 0

    @property
    def sources(self) -> tuple[int, ...]:
        op = self.op
        if op in R_TYPE or op in BRANCHES or op is Opcode.SW:
            return (self.rs, self.rt)
        if op in SHIFTS or op in (Opcode.ADDI, Opcode.LW):
            return (self.rs,)
        return ()

    def __str__(self) -> str:
        op = self.op
        name = op.name
        tgt = self.label if self.label is not None else str(self.target)
        if op in R_TYPE:
            return f"{name} r{self.rd}, r{self.rs}, r{self.rt}"
        if op in SHIFTS or op is Opcode.ADDI:
            return f"{name} r{self.rd}, r{self.rs}, {self.imm}"
        if op is Opcode.LW:
            return f"LW r{self.rd}, {self.imm}(r{self.rs})"
        if op is Opcode.SW:
            return f"SW r{self.rt}, {self.imm}(r{self.rs})"
        if op in BRANCHES:
            return f"{name} r{self.rs}, r{self.rt}, {tgt}"
        if op is Opcode.J:
            return f"J {tgt}"
        return "NOP"


@dataclass
class Program:
    instructions: list[Instruction]
    data_init: dict[int, int] = field(default_factory=dict)
    reg_init: dict[int, int] = field(default_factory=dict)
    labels: dict[str, int] = field(default_factory=dict)
    name: str = "program"

    def __len__(self) -> int:
        return len(self.instructions)

    def to_text(self) -> str:
        """Render back to assembly accepted by :func:`parse_program`."""
        at: dict[int, list[str]] = {}
        for lab, idx in self.labels.items():
            at.setdefault(idx, []).append(lab)
        out = []
        for r, v in sorted(self.reg_init.items()):
            out.append(f".reg r{r} 0x{v & MASK32:08x}")
        for addr, v in sorted(self.data_init.items()):
            out.append(f".data {addr} 0x{v & MASK32:08x}")
        for idx, ins in enumerate(self.instructions):
            for lab in at.get(idx, ()):
                out.append(f"{lab}:")
            out.append(str(ins))
        for lab in at.get(len(self.instructions), ()):
            out.append(f"{lab}:")
        return "\n".join(out) + "\n"


@dataclass
class MachineState:
    regs: list[int]
    mem: list[int]
    pc: int = 0

    @classmethod
    def initial(cls, program: Program | None = None,
                mem_words: int = DEFAULT_MEM_WORDS) -> "MachineState":
        regs = [0] * NUM_REGS
        mem = [0] * mem_words
        if program is not None:
            for r, v in program.reg_init.items():
                if r:
                    regs[r] = v & MASK32
            for addr, v in program.data_init.items():
                if not 0 <= addr < mem_words:
                    raise MemoryAccessError(f"data address {addr} out of bounds")
                mem[addr] = v & MASK32
        return cls(regs, mem, 0)

    def copy(self) -> "MachineState":
        return MachineState(list(self.regs), list(self.mem), self.pc)

    def arch_equal(self, other: "MachineState") -> bool:
        return self.regs == other.regs and self.mem == other.mem


# ---------------------------------------------------------------------------
# Assembler

_REG_RE = re.compile(r"^[rR$](\d+)$")
_MEM_RE = re.compile(r"^(.+)\((.+)\)$")
_LABEL_RE = re.compile(r"^[A-Za-z_.][A-Za-z0-9_.]*$")

_OPERAND_COUNT = {**{op: 3 for op in R_TYPE | SHIFTS | BRANCHES | {Opcode.ADDI}},
                  Opcode.LW: 2, Opcode.SW: 2, Opcode.J: 1, Opcode.NOP: 0}


def _parse_reg(tok: str, line: int, col: int) -> int:
    m = _REG_RE.match(tok)
    if not m:
        raise AsmError(f"expected register, got {tok!r}", line, col)
    r = int(m.group(1))
    if r >= NUM_REGS:
        raise AsmError(f"register r{r} out of range", line, col)
    return r


def _parse_int(tok: str, line: int, col: int) -> int:
    try:
        v = int(tok, 0)
    except ValueError:
        raise AsmError(f"expected integer, got {tok!r}", line, col) from None
    if not -(1 << 31) <= v <= MASK32:
        raise AsmError(f"immediate {tok} does not fit in 32 bits", line, col)
    return v


def _split_operands(text: str, base_col: int) -> list[tuple[str, int]]:
    """Split on commas, returning (token, 1-based column) pairs."""
    out = []
    pos = 0
    for part in text.split(","):
        stripped = part.strip()
        if stripped:
            out.append((stripped, base_col + pos + part.index(stripped) + 1))
        else:
            out.append(("", base_col + pos + 1))
        pos += len(part) + 1
    return out


def parse_program(text: str, name: str = "program") -> Program:
    """Assemble ``text`` into a :class:`Program` with resolved branch targets."""
    pending: list[tuple[Opcode, dict, str | None, int, int]] = []
    labels: dict[str, int] = {}
    data_init: dict[int, int] = {}
    reg_init: dict[int, int] = {}

    for lineno, raw in enumerate(text.splitlines(), start=1):
        body = raw.split("#", 1)[0].rstrip()
        col0 = len(body) - len(body.lstrip())
        body = body.strip()
        while body:
            # leading labels
            m = re.match(r"^([A-Za-z_.][A-Za-z0-9_.]*)\s*:", body)
            if not m:
                break
            lab = m.group(1)
            if lab in labels:
                raise AsmError(f"duplicate label {lab!r}", lineno, col0 + 1)
            labels[lab] = len(pending)
            consumed = m.end()
            rest = body[consumed:]
            col0 += consumed + (len(rest) - len(rest.lstrip()))
            body = rest.strip()
        if not body:
            continue

        m = re.match(r"^(\S+)(\s*)(.*)$", body)
        mnemonic, gap, rest = m.group(1), m.group(2), m.group(3)
        rest_col = col0 + len(mnemonic) + len(gap)
        upper = mnemonic.upper()

        if upper == ".DATA":
            toks = rest.replace(",", " ").split()
            if len(toks) < 2:
                raise AsmError(".data needs an address and at least one value", lineno, rest_col + 1)
            addr = _parse_int(toks[0], lineno, rest_col + 1)
            if addr < 0:
                raise AsmError("negative data address", lineno, rest_col + 1)
            for k, tok in enumerate(toks[1:]):
                data_init[addr + k] = _parse_int(tok, lineno, rest_col + 1) & MASK32
            continue
        if upper == ".REG":
            toks = rest.replace(",", " ").split()
            if len(toks) != 2:
                raise AsmError(".reg needs a register and a value", lineno, rest_col + 1)
            r = _parse_reg(toks[0], lineno, rest_col + 1)
            reg_init[r] = _parse_int(toks[1], lineno, rest_col + 1) & MASK32
            continue

        try:
            op = Opcode[upper]
        except KeyError:
            raise AsmError(f"unknown opcode {mnemonic!r}", lineno, col0 + 1) from None

        operands = _split_operands(rest, rest_col) if rest else []
        want = _OPERAND_COUNT[op]
        if len(operands) != want:
            raise AsmError(f"{op.name} expects {want} operands, got {len(operands)}",
                           lineno, col0 + 1)
        fields: dict = {}
        target_label = None
        if op in R_TYPE:
            (d, cd), (s, cs), (t, ct) = operands
            fields = dict(rd=_parse_reg(d, lineno, cd), rs=_parse_reg(s, lineno, cs),
                          rt=_parse_reg(t, lineno, ct))
        elif op is Opcode.ADDI:
            (d, cd), (s, cs), (i, ci) = operands
            fields = dict(rd=_parse_reg(d, lineno, cd), rs=_parse_reg(s, lineno, cs),
                          imm=_parse_int(i, lineno, ci))
        elif op in SHIFTS:
            (d, cd), (s, cs), (i, ci) = operands
            amt = _parse_int(i, lineno, ci)
            if not 0 <= amt < 32:
                raise AsmError(f"shift amount {amt} not in 0..31", lineno, ci)
            fields = dict(rd=_parse_reg(d, lineno, cd), rs=_parse_reg(s, lineno, cs), imm=amt)
        elif op in (Opcode.LW, Opcode.SW):
            (d, cd), (addr, ca) = operands
            m = _MEM_RE.match(addr)
            if not m:
                raise AsmError(f"expected imm(reg), got {addr!r}", lineno, ca)
            imm = _parse_int(m.group(1).strip() or "0", lineno, ca)
            base = _parse_reg(m.group(2).strip(), lineno, ca)
            reg = _parse_reg(d, lineno, cd)
            fields = dict(rs=base, imm=imm, **({"rd": reg} if op is Opcode.LW else {"rt": reg}))
        elif op in BRANCHES:
            (s, cs), (t, ct), (lab, cl) = operands
            fields = dict(rs=_parse_reg(s, lineno, cs), rt=_parse_reg(t, lineno, ct))
            target_label = (lab, cl)
        elif op is Opcode.J:
            target_label = operands[0]
        pending.append((op, fields, target_label, lineno, col0 + 1))

    instructions = []
    for op, fields, target_label, lineno, _col in pending:
        target = None
        label = None
        if target_label is not None:
            label, col = target_label
            if label not in labels:
                if re.fullmatch(r"\d+", label):
                    target = int(label)
                    if target > len(pending):
                        raise AsmError(f"branch target {target} out of range", lineno, col)
                    label = None
                else:
                    if not _LABEL_RE.match(label):
                        raise AsmError(f"bad label {label!r}", lineno, col)
                    raise AsmError(f"unresolved label {label!r}", lineno, col)
            else:
                target = labels[label]
        instructions.append(Instruction(op, target=target, label=label, line=lineno, **fields))
    return Program(instructions, data_init, reg_init, labels, name)


# ---------------------------------------------------------------------------
# Semantics


def to_signed(v: int) -> int:
    return v - (1 << 32) if v & 0x80000000 else v


def operands(ins: Instruction, regs: list[int]) -> tuple[int, int]:
    """Execute-unit input operands (a, b) for ``ins`` given register values."""
    op = ins.op
    if op in R_TYPE or op in BRANCHES:
        return regs[ins.rs], regs[ins.rt]
    if op in SHIFTS:
        return regs[ins.rs], ins.imm
    if op in (Opcode.ADDI, Opcode.LW, Opcode.SW):
        return regs[ins.rs], ins.imm & MASK32
    return 0, 0


def alu(op: Opcode, a: int, b: int) -> int:
    """Execute-unit output: ALU value, memory address, or branch-taken flag."""
    if op in (Opcode.ADD, Opcode.ADDI, Opcode.LW, Opcode.SW):
        return (a + b) & MASK32
    if op is Opcode.SUB:
        return (a - b) & MASK32
    if op is Opcode.AND:
        return a & b
    if op is Opcode.OR:
        return a | b
    if op is Opcode.XOR:
        return a ^ b
    if op is Opcode.NOR:
        return ~(a | b) & MASK32
    if op is Opcode.SLL:
        return (a << (b & 31)) & MASK32
    if op is Opcode.SRL:
        return a >> (b & 31)
    if op is Opcode.SRA:
        return (to_signed(a) >> (b & 31)) & MASK32
    if op is Opcode.SLT:
        return int(to_signed(a) < to_signed(b))
    if op is Opcode.MUL:
        return (a * b) & MASK32
    if op is Opcode.BEQ:
        return int(a == b)
    if op is Opcode.BNE:
        return int(a != b)
    raise ValueError(f"{op.name} has no execute-unit operation")


def step(ins: Instruction, state: MachineState) -> int | None:
    """Execute ``ins`` in place on ``state``; return the execute-unit output."""
    op = ins.op
    regs = state.regs
    next_pc = state.pc + 1
    if op is Opcode.NOP:
        state.pc = next_pc
        return None
    if op is Opcode.J:
        state.pc = ins.target
        return None
    a, b = operands(ins, regs)
    result = alu(op, a, b)
    if op is Opcode.LW or op is Opcode.SW:
        if result >= len(state.mem):
            raise MemoryAccessError(f"address {result} out of bounds (line {ins.line})")
        if op is Opcode.LW:
            if ins.rd:
                regs[ins.rd] = state.mem[result]
        else:
            state.mem[result] = regs[ins.rt]
    elif op in BRANCHES:
        if result:
            next_pc = ins.target
    elif ins.rd:
        regs[ins.rd] = result
    state.pc = next_pc
    return result


def exec_instruction(ins: Instruction, state: MachineState) -> tuple[int | None, MachineState]:
    """Functional form of :func:`step`; ``state`` is left untouched."""
    new = state.copy()
    return step(ins, new), new


def run_reference(program: Program, max_steps: int = DEFAULT_MAX_STEPS,
                  mem_words: int = DEFAULT_MEM_WORDS,
                  trace=None) -> tuple[MachineState, int]:
    """Run ``program`` sequentially until it falls off the end.

    ``trace``, if given, is called as ``trace(index, instruction, a, b, result)``
    for every execute-unit event, before the state update.
    """
    state = MachineState.initial(program, mem_words)
    instrs = program.instructions
    n = len(instrs)
    retired = 0
    while state.pc < n:
        if retired >= max_steps:
            raise StepLimitExceeded(retired, state)
        ins = instrs[state.pc]
        if trace is not None and ins.op in EXECUTE_OPS:
            a, b = operands(ins, state.regs)
            trace(state.pc, ins, a, b, alu(ins.op, a, b))
        step(ins, state)
        retired += 1
    return state, retired
