import numpy as np
import pytest

from mldfs.delay import ClassBoundaries, DelayModelConfig
from mldfs.isa import OpKind, StepLimitExceeded, parse_program, run_reference
from mldfs.ml import HyperParams, TrainedForest, Tree
from mldfs.pipeline import (EnergyConfig, SimPolicy, SimReport, compute_energy,
                            compute_speedup, energy_overhead, instruction_energy, simulate)

B2 = ClassBoundaries.standard(2)
CFG = DelayModelConfig()


def const_model(cls, bounds=B2, n_features=6):
    counts = np.zeros((1, bounds.n_classes), dtype=np.int64)
    counts[0, cls] = 1
    t = Tree(np.array([-1], np.int32), np.zeros(1), np.array([-1], np.int32),
             np.array([-1], np.int32), counts)
    return TrainedForest(bounds, [t], HyperParams(n_estimators=1), n_features)


def sim(src, mode, model=None, **kw):
    prog = parse_program(src) if isinstance(src, str) else src
    return simulate(prog, SimPolicy(mode, **kw), model, CFG, B2)


# independent registers, so there are no back-to-back dependencies
AND_PROG = "".join(f"AND r{i % 10 + 1}, r{i % 10 + 11}, r{i % 10 + 21}\n" for i in range(40))
# all true class 1: 0xFFFFFFFF + 1 has a 32-bit carry chain
SLOW_PROG = ".reg r20 -1\n.reg r21 1\n" + "ADD r1, r20, r21\n" * 30


def test_baseline_fill_drain():
    r = sim(AND_PROG, "baseline").report
    assert r.pipeline_depth == 5
    assert r.cycles == 40 + 4
    assert r.total_time == pytest.approx((40 + 5 - 1) * 4.0)
    assert r.classifications == 0


def test_oracle_fast_program():
    r = sim(AND_PROG, "oracle").report
    assert r.replays == 0 and r.true_hist == [40, 0]
    assert r.exe_time == pytest.approx(40 * 2.2)
    assert r.total_time == pytest.approx((40 + 6 - 1) * 2.2)


def test_sabotage_replays_every_slow_instruction():
    res = sim(SLOW_PROG, "predicted", const_model(0), conservative_deps=False)
    r = res.report
    assert r.true_hist == [0, 30]
    assert r.replays == r.violations == 30
    assert r.replay_kind_counts[OpKind.ADDSUB] == 30
    assert r.cycles == 30 + 5 + 30 * 4
    assert r.exe_time == pytest.approx(30 * (2.2 + 16.0))


def test_violations_match_post_hoc_scan():
    prog = parse_program(SLOW_PROG + AND_PROG)
    res = simulate(prog, SimPolicy("predicted"), const_model(0), CFG, B2)
    ups = np.asarray(B2.uppers)
    assert res.report.violations == int((res.delay > ups[res.pred_class]).sum())


def test_oracle_never_replays_and_bounds_predicted():
    prog = parse_program(SLOW_PROG + AND_PROG)
    o = simulate(prog, SimPolicy("oracle"), None, CFG, B2).report
    for cls in (0, 1):
        p = simulate(prog, SimPolicy("predicted"), const_model(cls), CFG, B2).report
        assert o.replays == 0
        assert o.total_time <= p.total_time + 1e-9


def test_load_use_stall():
    r = sim(".data 5 9\nLW r1, 5(r0)\nADD r2, r1, r1\n", "baseline").report
    assert r.stall_cycles == 1
    assert r.cycles == 2 + 4 + 1
    r = sim(".data 5 9\nLW r1, 5(r0)\nADD r2, r3, r3\n", "baseline").report
    assert r.stall_cycles == 0


def test_forwarding_chain():
    src = "ADDI r1, r0, 1\nADD r2, r1, r1\nADD r3, r2, r1\nSW r3, 0(r2)\nLW r4, 0(r2)\nADD r5, r4, r3\n"
    for mode in ("baseline", "oracle"):
        res = sim(src, mode)
        ref, _ = run_reference(parse_program(src))
        assert res.state.arch_equal(ref)
        assert res.state.regs[5] == 6


def test_taken_branch_penalty():
    taken = "BEQ r0, r0, t\nADDI r1, r0, 1\nADDI r2, r0, 2\nt: ADDI r3, r0, 3\n"
    r0 = sim(taken, "baseline").report
    # 2 retired; the branch resolves in EXE (stage 3), so 2 wrong-path slots are flushed
    assert r0.retired == 2 and r0.flushed == 2
    assert r0.cycles == 2 + 4 + 2
    r1 = sim(taken, "oracle", ml_stages=2).report
    # only three instructions follow the branch (the target is refetched)
    assert r1.flushed == 3
    assert r1.cycles == 2 + 6 + 4


def test_jump_bubble():
    r = sim("J t\nADDI r1, r0, 1\nt: ADDI r2, r0, 2\n", "baseline").report
    assert r.retired == 2 and r.flushed == 1
    assert r.cycles == 2 + 4 + 1


def test_conservative_dependency_rule():
    src = ".reg r2 5\nADD r1, r2, r2\nADD r3, r1, r1\nADD r4, r2, r2\n"
    res = sim(src, "predicted", const_model(0))
    assert res.model_class.tolist() == [0, 0, 0]
    assert res.pred_class.tolist() == [0, 1, 0]
    assert res.report.conservative == 1
    res = sim(src, "predicted", const_model(0), conservative_deps=False)
    assert res.pred_class.tolist() == [0, 0, 0]


def test_load_in_mem_is_conservative():
    src = ".data 0 3\nLW r1, 0(r0)\nADD r5, r6, r6\nADD r3, r1, r1\n"
    res = sim(src, "predicted", const_model(0))
    assert res.pred_class.tolist() == [0, 0, 1]


def test_errors():
    with pytest.raises(ValueError):
        sim(AND_PROG, "predicted")
    with pytest.raises(ValueError):
        simulate(parse_program(AND_PROG), SimPolicy("predicted"), const_model(0),
                 CFG, ClassBoundaries.standard(3))
    with pytest.raises(ValueError):
        SimPolicy("fast")
    with pytest.raises(ValueError):
        SimPolicy("oracle", replay_cycles=-1)
    with pytest.raises(StepLimitExceeded):
        simulate(parse_program("l: J l\n"), SimPolicy(), None, CFG, B2, max_steps=100)


class TestEnergy:
    def test_instruction_examples(self):
        e = EnergyConfig()
        assert instruction_energy(OpKind.ADDSUB, 4.0, False, e) == pytest.approx(4.0)
        assert instruction_energy(OpKind.ADDSUB, 2.2, False, e) == pytest.approx(3.1)
        assert 1 - 3.1 / 4.0 == pytest.approx(0.225)
        assert instruction_energy(OpKind.ADDSUB, 2.2, True, e) == pytest.approx(13.1)

    def test_report_energy(self):
        e = EnergyConfig(e_ml=0.5)
        r = sim(SLOW_PROG, "predicted", const_model(0), conservative_deps=False).report
        want = 2.0 * 30 * 2 + 0.5 * r.total_time + 0.5 * 30
        assert compute_energy(r, e) == pytest.approx(want)

    def test_overhead(self):
        b = sim(AND_PROG, "baseline").report
        o = sim(AND_PROG, "oracle").report
        assert energy_overhead(b, b) == 0.0
        assert energy_overhead(o, b) < 0

    def test_validation(self):
        with pytest.raises(ValueError):
            EnergyConfig(p_leak=-1)


def test_speedup():
    b = sim(AND_PROG, "baseline").report
    o = sim(AND_PROG, "oracle").report
    assert compute_speedup(b, b) == 0.0
    assert compute_speedup(b, o) == pytest.approx(100 * (44 * 4.0 / (45 * 2.2) - 1))
    assert compute_speedup(b, o, exe_only=True) == pytest.approx(100 * (4.0 / 2.2 - 1))
    other = sim(SLOW_PROG, "baseline").report
    with pytest.raises(ValueError):
        compute_speedup(b, other)


def test_report_serialization_is_stable():
    a = sim(SLOW_PROG + AND_PROG, "predicted", const_model(0)).report
    b = sim(SLOW_PROG + AND_PROG, "predicted", const_model(0)).report
    assert a.to_json() == b.to_json()
    assert SimReport.from_json(a.to_json()) == a
    assert a.csv_row().split(",")[0] == "program"
