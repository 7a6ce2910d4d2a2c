"""Cycle-level in-order pipeline with per-instruction clock period selection.

Stages: IF, ID, ML x ml_stages, EXE, MEM, WB. Operands are read in EXE with
forwarding from the instruction in MEM (ALU results) and through a
write-before-read register file from WB. A load followed by a dependent
instruction costs one bubble. Branches are predicted not taken and resolved
in EXE; J redirects from ID.

Each cycle's clock period is chosen by the instruction in EXE: the upper edge
of its (predicted) delay class, or the fastest period when EXE holds a bubble,
NOP or J. An instruction whose true delay exceeds its period is caught by
double sampling and replayed at the worst-case period, costing
``replay_cycles`` extra worst-case cycles while the pipeline holds.

Timing never changes functional behaviour, so the cycle loop only records the
EXE event sequence; classification and time/energy accounting run on the
recorded events afterwards.
"""

from __future__ import annotations

import json
from dataclasses import asdict, dataclass, field

import numpy as np

from .delay import ClassBoundaries, DelayModelConfig, classify_batch, delay_batch
from .isa import (DEFAULT_MAX_STEPS, DEFAULT_MEM_WORDS, EXECUTE_OPS, OP_KIND,
                  MachineState, MemoryAccessError, Opcode, OpKind, Program,
                  StepLimitExceeded, alu, operands)
from .profiler import feature_matrix

MODES = ("baseline", "oracle", "predicted")
BASE_DEPTH = 5

_LW, _SW, _J, _NOP = Opcode.LW, Opcode.SW, Opcode.J, Opcode.NOP
_BEQ, _BNE = Opcode.BEQ, Opcode.BNE


@dataclass
class SimPolicy:
    mode: str = "baseline"
    replay_cycles: int = 4
    ml_stages: int = 1
    # force the slowest class when an operand comes from the instruction in EXE
    conservative_deps: bool = True

    def __post_init__(self):
        if self.mode not in MODES:
            raise ValueError(f"unknown mode {self.mode!r}")
        if self.replay_cycles < 0:
            raise ValueError("replay_cycles must be >= 0")
        if self.ml_stages < 0:
            raise ValueError("ml_stages must be >= 0")

    @property
    def stages_in_use(self) -> int:
        return 0 if self.mode == "baseline" else self.ml_stages


@dataclass
class EnergyConfig:
    e_logic: float = 1.0
    e_shift: float = 1.5
    e_addsub: float = 2.0
    e_mul: float = 6.0
    e_memaddr: float = 2.0
    e_cmp: float = 2.0
    p_leak: float = 0.5     # pJ per ns
    e_ml: float = 0.0       # pJ per classification

    def __post_init__(self):
        for k, v in asdict(self).items():
            if v < 0:
                raise ValueError(f"{k} must be >= 0")

    def e_dyn(self, kind: OpKind) -> float:
        return getattr(self, "e_" + OpKind(kind).name.lower())

    def dyn_table(self) -> np.ndarray:
        return np.array([self.e_dyn(k) for k in OpKind])


@dataclass
class SimReport:
    program: str
    mode: str
    n_classes: int
    pipeline_depth: int
    retired: int
    exe_events: int
    cycles: int
    total_time: float
    exe_time: float
    replays: int
    violations: int
    stall_cycles: int
    flushed: int
    conservative: int
    classifications: int
    kind_counts: list[int]
    replay_kind_counts: list[int]
    pred_hist: list[int]
    true_hist: list[int]
    energy: float = 0.0

    def to_json(self) -> str:
        return json.dumps(asdict(self), sort_keys=True)

    @classmethod
    def from_json(cls, text: str) -> "SimReport":
        return cls(**json.loads(text))

    CSV_FIELDS = ("program", "mode", "n_classes", "retired", "cycles", "total_time",
                  "exe_time", "replays", "violations", "stall_cycles", "energy")

    def csv_row(self) -> str:
        vals = []
        for k in self.CSV_FIELDS:
            v = getattr(self, k)
            vals.append(f"{v:.4f}" if isinstance(v, float) else str(v))
        return ",".join(vals)


@dataclass
class SimResult:
    report: SimReport
    state: MachineState
    # per EXE event, in order
    ops: np.ndarray = field(repr=False)
    delay: np.ndarray = field(repr=False)
    true_class: np.ndarray = field(repr=False)
    pred_class: np.ndarray = field(repr=False)
    # classifier output before the conservative dependency override
    model_class: np.ndarray = field(repr=False)
    replayed: np.ndarray = field(repr=False)


class _Slot:
    __slots__ = ("ins", "dest", "value", "addr", "store")

    def __init__(self, ins):
        self.ins = ins
        self.dest = ins.dest
        self.value = 0
        self.addr = 0
        self.store = 0


def run_pipeline(program: Program, ml_stages: int, max_steps: int = DEFAULT_MAX_STEPS,
                 mem_words: int = DEFAULT_MEM_WORDS):
    """Functional cycle loop. Returns (final state, cycle stats, EXE events).

    Events are columns op, a, b, result and ``dependent`` (an operand came from
    the instruction that was in EXE while this one was being classified).
    """
    state = MachineState.initial(program, mem_words)
    regs, memory = state.regs, state.mem
    instrs = program.instructions
    n = len(instrs)
    IF, ID = 0, 1
    EXE = 2 + ml_stages
    MEM, WB = EXE + 1, EXE + 2
    last_front = EXE - 1
    pipe: list[_Slot | None] = [None] * (WB + 1)
    fetch_pc = 0

    ev_op: list[int] = []
    ev_a: list[int] = []
    ev_b: list[int] = []
    ev_res: list[int] = []
    ev_dep: list[bool] = []
    idle_cycles = cycles = retired = stalls = flushed = 0
    pending_dep = False  # dependency flag of the instruction now in EXE

    if n:
        pipe[IF] = _Slot(instrs[0])
        fetch_pc = 1

    while True:
        if fetch_pc >= n and not any(pipe):
            break
        cycles += 1

        # WB
        w = pipe[WB]
        if w is not None:
            if w.dest:
                regs[w.dest] = w.value
            retired += 1
            if retired > max_steps:
                state.pc = fetch_pc
                raise StepLimitExceeded(retired - 1, state)

        # MEM
        m = pipe[MEM]
        if m is not None:
            op = m.ins.op
            if op is _LW:
                m.value = memory[m.addr]
            elif op is _SW:
                memory[m.addr] = m.store

        # EXE
        x = pipe[EXE]
        taken_target = None
        if x is not None and x.ins.op in EXECUTE_OPS:
            ins = x.ins
            op = ins.op
            # forwarding: MEM holds the previous EXE result (never a load, see stall below)
            fwd = m if (m is not None and m.dest and m.ins.op is not _LW) else None
            if fwd is not None:
                saved = regs[fwd.dest]
                regs[fwd.dest] = fwd.value
                a, b = operands(ins, regs)
                store = regs[ins.rt] if op is _SW else 0
                regs[fwd.dest] = saved
            else:
                a, b = operands(ins, regs)
                store = regs[ins.rt] if op is _SW else 0
            res = alu(op, a, b)
            if op is _LW or op is _SW:
                if res >= mem_words:
                    raise MemoryAccessError(f"address {res} out of bounds (line {ins.line})")
                x.addr = res
                x.store = store
            elif op is _BEQ or op is _BNE:
                if res:
                    taken_target = ins.target
            else:
                x.value = res
            ev_op.append(op)
            ev_a.append(a)
            ev_b.append(b)
            ev_res.append(res)
            ev_dep.append(pending_dep)
        else:
            idle_cycles += 1

        # advance
        if taken_target is not None:
            flushed += sum(1 for s in pipe[:EXE] if s is not None)
            fetch_pc = taken_target
            nxt = None
            if fetch_pc < n:
                nxt = _Slot(instrs[fetch_pc])
                fetch_pc += 1
            pipe = [nxt] + [None] * (EXE - 1) + [None] + pipe[EXE:WB]
            pending_dep = False
            continue

        y = pipe[last_front]
        srcs = tuple(r for r in y.ins.sources if r) if y is not None else ()
        if srcs and x is not None and x.ins.op is _LW and x.dest in srcs:
            # load-use: hold the front end, bubble into EXE
            stalls += 1
            pipe = pipe[:EXE] + [None] + pipe[EXE:WB]
            continue

        dep = False
        if srcs:
            dep = (x is not None and x.dest != 0 and x.dest in srcs) or \
                  (m is not None and m.ins.op is _LW and m.dest in srcs)
        pending_dep = dep
        d = pipe[ID]
        if d is not None and d.ins.op is _J:
            if pipe[IF] is not None:
                flushed += 1
                pipe[IF] = None
            fetch_pc = d.ins.target
        nxt = None
        if fetch_pc < n:
            nxt = _Slot(instrs[fetch_pc])
            fetch_pc += 1
        pipe = [nxt] + pipe[:WB]

    state.pc = fetch_pc
    stats = dict(cycles=cycles, retired=retired, stalls=stalls, flushed=flushed,
                 idle_cycles=idle_cycles)
    events = dict(op=np.array(ev_op, dtype=np.int32),
                  a=np.array(ev_a, dtype=np.uint64), b=np.array(ev_b, dtype=np.uint64),
                  result=np.array(ev_res, dtype=np.uint64),
                  dependent=np.array(ev_dep, dtype=bool))
    return state, stats, events


def _history(col: np.ndarray) -> np.ndarray:
    prev = np.zeros_like(col)
    prev[1:] = col[:-1]
    return prev


def simulate(program: Program, policy: SimPolicy, model=None,
             delay_cfg: DelayModelConfig = DelayModelConfig(),
             bounds: ClassBoundaries | None = None,
             energy_cfg: EnergyConfig | None = None,
             max_steps: int = DEFAULT_MAX_STEPS,
             mem_words: int = DEFAULT_MEM_WORDS) -> SimResult:
    if bounds is None:
        bounds = model.boundaries if model is not None else ClassBoundaries((delay_cfg.t_wc,))
    energy_cfg = energy_cfg or EnergyConfig()
    if abs(bounds.t_wc - delay_cfg.t_wc) > 1e-12:
        raise ValueError("last class boundary must equal t_wc")
    if policy.mode == "predicted":
        if model is None:
            raise ValueError("predicted mode needs a model")
        if model.n_classes != bounds.n_classes:
            raise ValueError(f"model has {model.n_classes} classes, boundaries "
                             f"{bounds.n_classes}")

    k = policy.stages_in_use
    state, st, ev = run_pipeline(program, k, max_steps, mem_words)
    C = bounds.n_classes
    t_wc = delay_cfg.t_wc
    ops = ev["op"]
    n_ev = ops.shape[0]
    a_prev, b_prev, r_prev = _history(ev["a"]), _history(ev["b"]), _history(ev["result"])
    delays = delay_batch(ops, ev["a"], ev["b"], a_prev, b_prev, delay_cfg) \
        if n_ev else np.zeros(0)
    true_cls = classify_batch(delays, bounds)

    conservative = 0
    model_cls = None
    if policy.mode == "baseline":
        pred = np.full(n_ev, C - 1, dtype=np.int32)
    elif policy.mode == "oracle":
        pred = true_cls.copy()
    else:
        if n_ev:
            X = feature_matrix(ops, ev["a"], ev["b"], a_prev, b_prev, r_prev, model.feature_mode)
            pred = np.asarray(model.predict_batch(X), dtype=np.int32)
        else:
            pred = np.zeros(0, dtype=np.int32)
        model_cls = pred
        if policy.conservative_deps:
            dep = ev["dependent"]
            conservative = int((dep & (pred != C - 1)).sum())
            pred = np.where(dep, C - 1, pred).astype(np.int32)

    ups = np.asarray(bounds.uppers)
    replayed = true_cls > pred
    replays = int(replayed.sum())
    if policy.mode == "baseline":
        period = np.full(n_ev, t_wc)
        idle_period = t_wc
    else:
        period = ups[pred]
        idle_period = ups[0]
    charged = period + np.where(replayed, policy.replay_cycles * t_wc, 0.0)
    exe_time = float(charged.sum())
    total_time = exe_time + st["idle_cycles"] * idle_period

    kind_of = np.zeros(len(Opcode), dtype=np.int32)
    for o, kd in OP_KIND.items():
        kind_of[o] = kd
    ev_kind = kind_of[ops] if n_ev else np.zeros(0, dtype=np.int32)
    report = SimReport(
        program=program.name,
        mode=policy.mode,
        n_classes=C,
        pipeline_depth=BASE_DEPTH + k,
        retired=st["retired"],
        exe_events=n_ev,
        cycles=st["cycles"] + replays * policy.replay_cycles,
        total_time=total_time,
        exe_time=exe_time,
        replays=replays,
        violations=replays,
        stall_cycles=st["stalls"],
        flushed=st["flushed"],
        conservative=conservative,
        classifications=n_ev if k > 0 else 0,
        kind_counts=np.bincount(ev_kind, minlength=len(OpKind)).tolist(),
        replay_kind_counts=np.bincount(ev_kind[replayed], minlength=len(OpKind)).tolist(),
        pred_hist=np.bincount(pred, minlength=C).tolist(),
        true_hist=np.bincount(true_cls, minlength=C).tolist(),
    )
    report.energy = compute_energy(report, energy_cfg)
    if model_cls is None:
        model_cls = pred
    return SimResult(report, state, ops, delays, true_cls, pred, model_cls, replayed)


def compute_speedup(base: SimReport, other: SimReport, exe_only: bool = False) -> float:
    if base.retired != other.retired or base.exe_events != other.exe_events:
        raise ValueError("reports cover different executions")
    if exe_only:
        return 100.0 * (base.exe_time / other.exe_time - 1.0)
    return 100.0 * (base.total_time / other.total_time - 1.0)


def compute_energy(report: SimReport, cfg: EnergyConfig) -> float:
    """Dynamic energy (doubled for replays) + leakage over the run + ML stage energy."""
    dyn = cfg.dyn_table()
    kc = np.asarray(report.kind_counts, dtype=np.float64)
    rc = np.asarray(report.replay_kind_counts, dtype=np.float64)
    return float((dyn * (kc + rc)).sum() + cfg.p_leak * report.total_time
                 + report.classifications * cfg.e_ml)


def energy_overhead(policy_report: SimReport, base_report: SimReport) -> float:
    return 100.0 * (policy_report.energy - base_report.energy) / base_report.energy


def instruction_energy(kind: OpKind, period: float, replayed: bool, cfg: EnergyConfig,
                       replay_cycles: int = 4, t_wc: float = 4.0) -> float:
    """Energy charged to a single execute event (no ML stage share)."""
    charged = period + (replay_cycles * t_wc if replayed else 0.0)
    return cfg.e_dyn(kind) * (2 if replayed else 1) + cfg.p_leak * charged
