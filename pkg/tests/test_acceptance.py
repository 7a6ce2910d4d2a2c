"""Acceptance criteria, one test each.

Every test records a PASS/FAIL line (collected in the terminal summary) before
asserting, so a failing criterion is reported with its measured values.
"""

import filecmp
import time
from pathlib import Path

import numpy as np
import pytest

from mldfs import _core
from mldfs.cli import run_all
from mldfs.config import RunConfig
from mldfs.delay import ClassBoundaries, DelayModelConfig, classify_delay, delay_batch, \
    delay_with_history
from mldfs.isa import EXECUTE_OPS, Instruction, Opcode, Program, run_reference
from mldfs.ml import Dataset, estimate_static_speedup, evaluate, train
from mldfs.ml.nn import init_params, loss_and_grads
from mldfs.pipeline import SimPolicy, compute_speedup, simulate
from mldfs.workloads import gen_balanced_dataset, gen_random_program, kernel_suite

from oracles import ripple_carry_chain

pytestmark = pytest.mark.acceptance

CFG = DelayModelConfig()
M32 = 0xFFFFFFFF


@pytest.fixture(scope="module")
def full_run(tmp_path_factory):
    """A complete default run-all (all class counts); timed."""
    out = tmp_path_factory.mktemp("run_a")
    t0 = time.perf_counter()
    summary = run_all(RunConfig.load(), out)
    return out, summary, time.perf_counter() - t0


def _row(summary, bench, C):
    return next(r for r in summary["rows"] if r.benchmark == bench and r.classes == C)


def test_01_oracle_calibration(record_criterion):
    t0 = time.perf_counter()
    rng = np.random.default_rng(0)
    n = 1_000_000
    ops = np.array(sorted(EXECUTE_OPS), dtype=np.int32)[rng.integers(0, len(EXECUTE_OPS), n)]
    a, b, ap, bp = (rng.integers(0, 1 << 32, n, dtype=np.uint64).astype(np.uint32)
                    for _ in range(4))
    # bias a quarter of the operands towards long carries and wide products
    a[: n // 4] |= np.uint32(0xFFFF0000)
    b[: n // 4] = np.uint32(1)
    d = delay_batch(ops, a, b, ap, bp, CFG)
    worst = [
        (Opcode.ADD, M32, 1, M32, 1),            # carry through all 32 bits
        (Opcode.ADD, M32, 1, 0, M32 - 1),         # plus maximal toggling
        (Opcode.SUB, M32, M32, 0, 0),
        (Opcode.MUL, M32, M32, 0, 0),            # widest product
        (Opcode.SLL, M32, 31, 0, 0),             # all five shift-amount bits set
        (Opcode.AND, M32, M32, 0, 0),            # 64 toggles on a logic op
    ]
    wd = [delay_with_history(op, x, y, xp, yp, CFG) for op, x, y, xp, yp in worst]
    hi, lo = max(float(d.max()), max(wd)), min(float(d.min()), min(wd))
    dt = time.perf_counter() - t0
    ok = hi == 4.0 and lo >= 0.4 and dt < 10
    record_criterion(1, ok, f"max={hi!r} min={lo:.4f} in {dt:.2f}s")
    assert ok


def test_02_carry_chain_equivalence(record_criterion):
    a8, b8 = np.meshgrid(np.arange(256, dtype=np.uint32), np.arange(256, dtype=np.uint32))
    a8, b8 = a8.ravel(), b8.ravel()
    got8 = _core.carry_chain_batch(a8, b8)
    bad = sum(int(g) != ripple_carry_chain(int(x), int(y)) for x, y, g in zip(a8, b8, got8))
    rng = np.random.default_rng(1)
    a = rng.integers(0, 1 << 32, 100_000, dtype=np.uint64).astype(np.uint32)
    b = rng.integers(0, 1 << 32, 100_000, dtype=np.uint64).astype(np.uint32)
    got = _core.carry_chain_batch(a, b)
    bad += sum(int(g) != ripple_carry_chain(int(x), int(y)) for x, y, g in zip(a, b, got))
    record_criterion(2, bad == 0, f"{bad} mismatches over {a8.size + a.size} pairs "
                                  f"({_core.BACKEND_NAME} backend)")
    assert bad == 0


def test_03_boundary_conformance(record_criterion):
    cases = {
        2: [(0.0, 0), (2.2, 0), (2.2000001, 1), (4.0, 1)],
        3: [(1.8, 0), (1.80001, 1), (2.6, 1), (2.60001, 2), (4.0, 2)],
        4: [(1.0, 0), (1.00001, 1), (2.0, 1), (2.00001, 2), (3.0, 2), (3.00001, 3), (4.0, 3)],
    }
    uppers = {2: (2.2, 4.0), 3: (1.8, 2.6, 4.0), 4: (1.0, 2.0, 3.0, 4.0)}
    wrong = []
    for C, cs in cases.items():
        b = ClassBoundaries.standard(C)
        if b.uppers != uppers[C]:
            wrong.append((C, b.uppers))
        wrong += [(C, d, k) for d, k in cs if classify_delay(d, b) != k]
    record_criterion(3, not wrong, f"{sum(map(len, cases.values()))} boundary cases, "
                                   f"wrong={wrong}")
    assert not wrong


def test_04_closed_form_speedup(record_criterion):
    t0 = time.perf_counter()
    prog = gen_random_program(50_000, 11)
    b = ClassBoundaries.standard(4)
    base = simulate(prog, SimPolicy("baseline"), None, CFG, b)
    orc = simulate(prog, SimPolicy("oracle", ml_stages=1), None, CFG, b)
    sim = compute_speedup(base.report, orc.report)
    closed = estimate_static_speedup(orc.true_class, orc.true_class, b)
    dt = time.perf_counter() - t0
    ok = abs(sim - closed) <= 1.0 and dt < 30
    record_criterion(4, ok, f"simulated {sim:.3f}% vs closed form {closed:.3f}% "
                            f"(diff {abs(sim - closed):.3f} pp) in {dt:.1f}s")
    assert ok


def test_05_trend_reproduction(full_run, record_criterion):
    _, summary, _ = full_run
    r = {C: _row(summary, "random", C) for C in (2, 3, 4)}
    ideal = {C: r[C].ideal_speedup_pct for C in r}
    energy = {C: r[C].energy_overhead_pct for C in r}
    speed_ok = ideal[4] > ideal[3] > 0 and ideal[4] > ideal[2]
    energy_ok = energy[4] > energy[3] > energy[2] and energy[2] < 0
    detail = ("ideal speed-up % " + " ".join(f"C{C}={ideal[C]:.1f}" for C in ideal)
              + f" [{'ok' if speed_ok else 'bad'}]; energy overhead % "
              + " ".join(f"C{C}={energy[C]:.1f}" for C in energy)
              + f" [{'ok' if energy_ok else 'bad'}]")
    record_criterion(5, speed_ok and energy_ok, detail)
    assert speed_ok, detail
    assert energy_ok, detail


def test_06_classifier_quality(record_criterion):
    cfg = RunConfig.load()
    b = cfg.bounds(2)
    tr, _ = gen_balanced_dataset(cfg.gen_spec(2), CFG, b)
    te, _ = gen_balanced_dataset(cfg.gen_spec(2, test=True), CFG, b)
    res = {}
    for mode in ("summary", "bits"):
        hp = cfg.hyper(2)
        assert hp.n_estimators == 10
        m = train(Dataset.from_records(tr, 2, mode), hp, b)
        test_d = Dataset.from_records(te, 2, mode)
        res[mode] = (evaluate(m, test_d), np.bincount(test_d.y).max() / len(test_d))
    (ms, maj), (mb, _) = res["summary"], res["bits"]
    ok = (ms.accuracy >= 0.85 and mb.accuracy >= 0.90 and ms.accuracy - maj >= 0.30
          and abs(ms.f1_weighted - ms.accuracy) <= 0.05
          and abs(mb.f1_weighted - mb.accuracy) <= 0.05)
    record_criterion(6, ok, f"summary acc={ms.accuracy:.4f} f1={ms.f1_weighted:.4f}; bits "
                            f"acc={mb.accuracy:.4f} f1={mb.f1_weighted:.4f}; majority={maj:.2f}")
    assert ok


class _Always:
    """Sabotage classifier: always the fastest class."""

    feature_mode = "summary"

    def __init__(self, bounds):
        self.boundaries = bounds
        self.n_classes = bounds.n_classes

    def predict_batch(self, X):
        return np.zeros(len(X), dtype=np.int32)


def _all_slow_program(n):
    ins = [Instruction(Opcode.ADD, rd=3, rs=1, rt=2) for _ in range(n)]
    return Program(ins, reg_init={1: M32, 2: 1}, name="all_slow")


def test_07_replay_correctness(record_criterion):
    b = ClassBoundaries.standard(2)
    pol = SimPolicy("predicted", ml_stages=1, conservative_deps=False)
    sab = _Always(b)
    mixed = simulate(gen_random_program(20_000, 5), pol, sab, CFG, b)
    slow_true = int((mixed.true_class > 0).sum())
    slow = _all_slow_program(2000)
    base = simulate(slow, SimPolicy("baseline"), None, CFG, b)
    bad = simulate(slow, pol, sab, CFG, b)
    sp = compute_speedup(base.report, bad.report)
    closed = estimate_static_speedup(bad.pred_class, bad.true_class, b)
    ok = (mixed.report.replays == slow_true and bad.report.replays == 2000
          and int(bad.true_class.min()) == 1 and sp < 0 and abs(sp - closed) < 1.0)
    record_criterion(7, ok, f"replays {mixed.report.replays} == true-slow {slow_true}; "
                            f"all-slow speed-up {sp:.2f}% (closed form {closed:.2f}%)")
    assert ok


def test_08_architectural_equivalence(full_run, record_criterion):
    _, summary, _ = full_run
    progs = {n: k.program for n, k in kernel_suite().items()}
    progs["random"] = gen_random_program(RunConfig.load().test_size, 2)
    mismatches, runs = [], 0
    for name, prog in progs.items():
        ref, retired = run_reference(prog)
        for C, model in summary["models"].items():
            stages = summary["netlists"][C].stages
            for mode in ("baseline", "oracle", "predicted"):
                res = simulate(prog, SimPolicy(mode, ml_stages=stages), model, CFG,
                               model.boundaries)
                runs += 1
                if not res.state.arch_equal(ref) or res.report.retired != retired:
                    mismatches.append((name, C, mode))
    record_criterion(8, not mismatches, f"{runs} simulations, mismatches={mismatches}")
    assert not mismatches


class _Fixed:
    """Returns predetermined labels; row i of X holds the index i."""

    def __init__(self, preds):
        self.preds = np.asarray(preds)

    def predict_batch(self, X):
        return self.preds[np.asarray(X)[:, 0]]


METRIC_FIXTURES = [
    # y_true, y_pred, classes, accuracy, weighted F1 (by hand)
    ([0, 0, 1, 1], [0, 1, 1, 1], 2, 0.75, (2 / 3 + 4 / 5) / 2),       # 0.7333...
    ([0, 1, 2], [0, 1, 2], 3, 1.0, 1.0),
    ([0, 1], [1, 0], 2, 0.0, 0.0),
    ([0, 0, 0, 1], [0, 0, 0, 0], 2, 0.75, 9 / 14),
    ([0, 0, 1, 1, 2, 2], [0, 1, 1, 2, 2, 0], 3, 0.5, 0.5),
    ([0, 1, 2, 3, 3, 3], [0, 1, 1, 3, 3, 2], 4, 4 / 6, 61 / 90),
]


def test_09_metric_oracle(record_criterion):
    worst = 0.0
    for yt, yp, C, acc, f1 in METRIC_FIXTURES:
        d = Dataset(np.arange(len(yt))[:, None], yt, C)
        m = evaluate(_Fixed(yp), d)
        worst = max(worst, abs(m.accuracy - acc), abs(m.f1_weighted - f1))
    ok = worst <= 1e-9
    record_criterion(9, ok, f"{len(METRIC_FIXTURES)} fixtures, max deviation {worst:.2e}")
    assert ok


def _central_diff(params, X, y, eps=1e-6):
    out = {}
    for name, w in params.items():
        g = np.empty_like(w)
        flat, gflat = w.reshape(-1), g.reshape(-1)
        for i in range(flat.size):
            keep = flat[i]
            flat[i] = keep + eps
            up = loss_and_grads(params, X, y)[0]
            flat[i] = keep - eps
            down = loss_and_grads(params, X, y)[0]
            flat[i] = keep
            gflat[i] = (up - down) / (2 * eps)
        out[name] = g
    return out


def test_10_nn_gradient_check(record_criterion):
    rng = np.random.default_rng(10)
    worst = 0.0
    for _ in range(10):
        n_in, n_h, n_out, n = (int(rng.integers(2, 7)), int(rng.integers(2, 9)),
                               int(rng.integers(2, 5)), int(rng.integers(3, 12)))
        p = init_params(n_in, n_h, n_out, rng)
        X = rng.normal(size=(n, n_in))
        y = rng.integers(0, n_out, size=n)
        _, g = loss_and_grads(p, X, y)
        num = _central_diff(p, X, y)
        worst = max(worst, max(float(np.abs(g[k] - num[k]).max()) for k in p))
    ok = worst < 1e-4
    record_criterion(10, ok, f"10 instances, max |backprop - finite difference| = {worst:.2e}")
    assert ok


def _tree_files(root: Path):
    return sorted(p.relative_to(root) for p in root.rglob("*") if p.is_file())


def test_11_determinism(full_run, tmp_path, record_criterion):
    out_a, _, _ = full_run
    out_b = tmp_path / "run_b"
    run_all(RunConfig.load(), out_b)
    fa, fb = _tree_files(out_a), _tree_files(out_b)
    _, diff, errs = filecmp.cmpfiles(out_a, out_b, [str(f) for f in fa], shallow=False)
    ok = fa == fb and not diff and not errs
    record_criterion(11, ok, f"{len(fa)} artifacts compared, differing={diff + errs}")
    assert ok


def test_12_end_to_end_desk_scale(tmp_path, record_criterion):
    cfg = RunConfig.load(None, ["boundaries.classes=[2]"])
    t0 = time.perf_counter()
    summary = run_all(cfg, tmp_path)
    dt = time.perf_counter() - t0
    names = {r.benchmark for r in summary["rows"]}
    ok = dt < 300 and {"random", *kernel_suite()} <= names
    record_criterion(12, ok, f"2-class run-all in {dt:.1f}s ({len(names)} benchmarks)")
    assert ok
