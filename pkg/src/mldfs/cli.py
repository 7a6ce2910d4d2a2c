"""Command line front end.

Subcommands follow the design flow: ``gen`` and ``profile`` produce profile
CSVs, ``train`` fits a classifier, ``compile`` prices it as a comparator
network, ``simulate`` runs a program through the pipeline, ``evaluate``
scores a model on a profile, and ``run-all`` chains everything with the
retraining loop and writes the result tables.
"""

from __future__ import annotations

import argparse
import json
import logging
import sys
import time
from pathlib import Path

from . import BACKEND_NAME, __version__
from .codegen import ClassifierNetlist, compile_forest, netlist_report
from .config import ConfigError, RunConfig
from .delay import ClassBoundaries
from .isa import Program, StepLimitExceeded, parse_program
from .ml import (Dataset, HyperParams, estimate_static_speedup, evaluate, load_model,
                 metrics_from_labels, train)
from .ml.forest import TrainedForest
from .ml.serialize import dumps_model
from .pipeline import compute_speedup, energy_overhead, simulate
from .profiler import (eliminate_outliers, profile_csv_text, profile_program,
                       read_profile_csv, relabel)
from .report import ResultRow, csv_text, emit_results_table, format_table
from .workloads import gen_balanced_dataset, gen_random_program, kernel_suite

log = logging.getLogger("mldfs")

EXIT_LOOP_EXHAUSTED = 3


class PhaseError(RuntimeError):
    def __init__(self, phase: str, err: Exception | str):
        self.phase = phase
        super().__init__(f"{phase}: {err}")


def _classes(cfg: RunConfig, args) -> int:
    return args.classes if args.classes is not None else cfg.classes[0]


def load_program(target: str, cfg: RunConfig) -> Program:
    """A path to an .asm file, a kernel name, or ``random`` / ``random:N``."""
    p = Path(target)
    if p.is_file():
        return parse_program(p.read_text(), name=p.stem)
    kernels = kernel_suite()
    if target in kernels:
        return kernels[target].program
    if target == "random" or target.startswith("random:"):
        n = int(target.split(":", 1)[1]) if ":" in target else cfg.test_size
        return gen_random_program(n, cfg["seeds"]["program"])
    raise ValueError(f"no such program or kernel: {target!r}")


def _write(path: Path, text: str) -> None:
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(text)


def _emit(text: str, out) -> None:
    if out:
        _write(Path(out), text)
    else:
        sys.stdout.write(text)


# ---------------------------------------------------------------------------
# single-step subcommands


def cmd_profile(args, cfg: RunConfig) -> int:
    C = _classes(cfg, args)
    prog = load_program(args.program, cfg)
    s = cfg["sim"]
    recs = profile_program(prog, cfg.delay, cfg.bounds(C), s["max_steps"], s["mem_words"])
    kept, dropped = eliminate_outliers(recs, cfg.delay.t_wc)
    if dropped:
        log.warning("dropped %d outlier records", dropped)
    _emit(profile_csv_text(kept), args.output)
    return 0


def cmd_gen(args, cfg: RunConfig) -> int:
    C = _classes(cfg, args)
    spec = cfg.gen_spec(C, test=args.test)
    recs, prog = gen_balanced_dataset(spec, cfg.delay, cfg.bounds(C), cfg["sim"]["mem_words"])
    _emit(profile_csv_text(recs), args.output)
    if args.asm:
        _write(Path(args.asm), prog.to_text())
    return 0


def _read_dataset(path, bounds: ClassBoundaries, mode: str) -> Dataset:
    with open(path, newline="") as fh:
        recs = read_profile_csv(fh)
    recs, dropped = eliminate_outliers(recs, bounds.t_wc)
    if dropped:
        log.warning("%s: dropped %d outlier records", path, dropped)
    return Dataset.from_records(relabel(recs, bounds), bounds.n_classes, mode)


def cmd_train(args, cfg: RunConfig) -> int:
    C = _classes(cfg, args)
    hp = cfg.hyper(C, args.n_estimators)
    d = _read_dataset(args.profile, cfg.bounds(C), hp.features)
    model = train(d, hp, cfg.bounds(C))
    _emit(dumps_model(model), args.output)
    return 0


def _netlist_for(model, cfg: RunConfig) -> ClassifierNetlist | None:
    if not isinstance(model, TrainedForest):
        return None
    cg = cfg["codegen"]
    return compile_forest(model, model.boundaries, cg["t_cmp"], cg["e_cmp"])


def cmd_compile(args, cfg: RunConfig) -> int:
    model = load_model(args.model)
    nl = _netlist_for(model, cfg)
    if nl is None:
        raise ValueError("only random-forest models compile to a comparator network")
    print(netlist_report(nl))
    if args.output:
        _write(Path(args.output), nl.to_json() + "\n")
    return 0


def cmd_simulate(args, cfg: RunConfig) -> int:
    prog = load_program(args.program, cfg)
    model = load_model(args.model) if args.model else None
    if args.policy == "predicted" and model is None:
        raise ValueError("--policy predicted needs --model")
    if model is not None:
        bounds = model.boundaries
    else:
        bounds = cfg.bounds(_classes(cfg, args))
    nl = _netlist_for(model, cfg) if model is not None else None
    stages = nl.stages if nl else 1
    e_ml = nl.e_per_classification if nl else 0.0
    s = cfg["sim"]
    res = simulate(prog, cfg.policy(args.policy, stages), model, cfg.delay, bounds,
                   cfg.energy(e_ml), s["max_steps"], s["mem_words"])
    print(res.report.to_json())
    return 0


def cmd_evaluate(args, cfg: RunConfig) -> int:
    model = load_model(args.model)
    d = _read_dataset(args.profile, model.boundaries, model.feature_mode)
    m = evaluate(model, d)
    preds = model.predict_batch(d.X)
    est = estimate_static_speedup(preds, d.y, model.boundaries, cfg["sim"]["replay_cycles"])
    print(f"accuracy={m.accuracy:.4f} f1_weighted={m.f1_weighted:.4f} "
          f"estimated_speedup={est:.1f}%")
    print("confusion (rows true, cols predicted):")
    for row in m.confusion:
        print("  " + " ".join(f"{int(v):7d}" for v in row))
    return 0


# ---------------------------------------------------------------------------
# run-all


class LoopExhausted(RuntimeError):
    pass


def _design_loop(cfg: RunConfig, C: int, train_d: Dataset, test_d: Dataset, bounds):
    """Retrain with more estimators until the accuracy and speed-up floors are met."""
    lp = cfg["loop"]
    hp = cfg.hyper(C)
    n_est = hp.n_estimators
    for it in range(1, lp["max_iterations"] + 1):
        hp_i = HyperParams(**{**hp.to_dict(), "n_estimators": n_est})
        model = train(train_d, hp_i, bounds)
        m = evaluate(model, test_d)
        est = estimate_static_speedup(model.predict_batch(test_d.X), test_d.y, bounds,
                                      cfg["sim"]["replay_cycles"])
        log.info("  [%d classes] iteration %d: n_estimators=%d accuracy=%.4f est. speed-up=%.1f%%",
                 C, it, n_est, m.accuracy, est)
        if m.accuracy >= lp["accuracy_floor"] and est >= lp["speedup_floor"]:
            return model, m, est, it
        n_est *= lp["estimator_growth"]
    raise LoopExhausted(f"loop exhausted after {lp['max_iterations']} iterations")


def _table_row(C, algo, desc, m, est):
    return [str(C), algo, desc, f"{100 * m.accuracy:.1f}", f"{100 * m.f1_weighted:.1f}",
            f"{est:.1f}"]


def run_all(cfg: RunConfig, out: Path) -> dict:
    """Phases 1-3 for every configured class count. Returns a summary dict."""
    dc, s, w = cfg.delay, cfg["sim"], cfg["workload"]
    out.mkdir(parents=True, exist_ok=True)

    # Phase 1: profiles
    try:
        benches: dict[str, Program] = {"random": gen_random_program(cfg.test_size,
                                                                    cfg["seeds"]["program"])}
        suite = kernel_suite()
        for name in w["kernels"]:
            if name not in suite:
                raise ValueError(f"unknown kernel {name!r}")
            benches[name] = suite[name].program
        data = {}
        for C in cfg.classes:
            b = cfg.bounds(C)
            tr, _ = gen_balanced_dataset(cfg.gen_spec(C), dc, b, s["mem_words"])
            te, _ = gen_balanced_dataset(cfg.gen_spec(C, test=True), dc, b, s["mem_words"])
            _write(out / "profiles" / f"train_c{C}.csv", profile_csv_text(tr))
            _write(out / "profiles" / f"test_c{C}.csv", profile_csv_text(te))
            data[C] = (tr, te)
        # benchmark profiles do not depend on the class count apart from the label
        C0 = cfg.classes[0]
        for name, prog in benches.items():
            recs = profile_program(prog, dc, cfg.bounds(C0), s["max_steps"], s["mem_words"])
            _write(out / "profiles" / f"{name}.csv", profile_csv_text(recs))
    except (ValueError, StepLimitExceeded, OSError) as e:
        raise PhaseError("phase 1 (profiling)", e) from e
    log.info("phase 1 done: %d benchmarks, class counts %s", len(benches), cfg.classes)

    # Phase 2: train / evaluate / compile, with the feedback loop
    models, netlists, table1 = {}, {}, []
    try:
        hp0 = cfg.hyper(cfg.classes[0])
        for C in cfg.classes:
            b = cfg.bounds(C)
            tr, te = data[C]
            train_d = Dataset.from_records(tr, C, hp0.features)
            test_d = Dataset.from_records(te, C, hp0.features)
            model, m, est, iters = _design_loop(cfg, C, train_d, test_d, b)
            models[C] = model
            desc = (f"n_estimators={model.hyper.n_estimators}" if model.algo == "rf"
                    else f"h1={model.hyper.nn_hidden} h2={C}")
            table1.append(_table_row(C, model.algo, desc, m, est))
            # the other algorithm, for the classifier comparison table
            other = "nn" if model.algo == "rf" else "rf"
            hp_o = HyperParams(**{**cfg.hyper(C).to_dict(), "algo": other})
            mo = train(train_d, hp_o, b)
            mo_m = evaluate(mo, test_d)
            mo_est = estimate_static_speedup(mo.predict_batch(test_d.X), test_d.y, b,
                                             s["replay_cycles"])
            desc_o = (f"n_estimators={hp_o.n_estimators}" if other == "rf"
                      else f"h1={hp_o.nn_hidden} h2={C}")
            table1.append(_table_row(C, other, desc_o, mo_m, mo_est))
            _write(out / f"model_c{C}.json", dumps_model(model))
            nl = _netlist_for(model, cfg)
            netlists[C] = nl
            if nl is not None:
                _write(out / f"netlist_c{C}.json", nl.to_json() + "\n")
                _write(out / f"netlist_c{C}.txt", netlist_report(nl) + "\n")
            log.info("phase 2 [%d classes]: %d iteration(s), accuracy %.4f%s", C, iters,
                     m.accuracy, f", {netlist_report(nl)}" if nl else "")
    except LoopExhausted:
        raise
    except (ValueError, ArithmeticError) as e:
        raise PhaseError("phase 2 (training)", e) from e
    header1 = ("classes", "algo", "hyperparameters", "accuracy", "f1_weighted",
               "est_speedup_pct")
    _write(out / "classifiers.csv", csv_text(header1, table1))
    _write(out / "classifiers.txt", format_table(header1, table1))

    # Phase 3: simulate every benchmark under the three policies
    rows: list[ResultRow] = []
    exe_only = []
    reports = []
    try:
        for C in cfg.classes:
            model, nl, b = models[C], netlists[C], cfg.bounds(C)
            stages = nl.stages if nl else 1
            ecfg = cfg.energy(nl.e_per_classification if nl else 0.0)
            for name, prog in benches.items():
                res = {}
                for mode in ("baseline", "oracle", "predicted"):
                    res[mode] = simulate(prog, cfg.policy(mode, stages), model, dc, b, ecfg,
                                         s["max_steps"], s["mem_words"])
                    rep = res[mode].report
                    reports.append({"benchmark": name, "classes": C, **json.loads(rep.to_json())})
                base, orc, pred = (res[k].report for k in ("baseline", "oracle", "predicted"))
                pr = res["predicted"]
                m = metrics_from_labels(pr.true_class, pr.model_class, C)
                rows.append(ResultRow(name, C, m.accuracy, m.f1_weighted,
                                      compute_speedup(base, pred), compute_speedup(base, orc),
                                      pred.replays, energy_overhead(pred, base),
                                      instructions=pred.exe_events))
                exe_only.append((compute_speedup(base, pred, exe_only=True),
                                 compute_speedup(base, orc, exe_only=True)))
    except (ValueError, StepLimitExceeded) as e:
        raise PhaseError("phase 3 (simulation)", e) from e

    csv_out, text_out = emit_results_table(rows)
    _write(out / "results.csv", csv_out)
    _write(out / "results.txt", text_out)
    _write(out / "speedup_by_benchmark.csv", csv_text(
        ("benchmark", "classes", "achieved_speedup_pct", "ideal_speedup_pct",
         "achieved_exe_speedup_pct", "ideal_exe_speedup_pct"),
        [[r.benchmark, r.classes, f"{r.achieved_speedup_pct:.1f}", f"{r.ideal_speedup_pct:.1f}",
          f"{ea:.1f}", f"{ei:.1f}"] for r, (ea, ei) in zip(rows, exe_only)]))
    _write(out / "accuracy_by_benchmark.csv", csv_text(
        ("benchmark", "classes", "accuracy"),
        [[r.benchmark, r.classes, f"{100 * r.accuracy:.1f}"] for r in rows]))
    _write(out / "sim_reports.json", json.dumps(reports, indent=1, sort_keys=True) + "\n")
    return {"rows": rows, "models": models, "netlists": netlists, "results_text": text_out,
            "classifiers_text": format_table(header1, table1)}


def cmd_run_all(args, cfg: RunConfig) -> int:
    out = Path(args.output or cfg["output"]["dir"])
    t0 = time.perf_counter()
    try:
        summary = run_all(cfg, out)
    except LoopExhausted as e:
        print(f"phase 2 (training): {e}", file=sys.stderr)
        return EXIT_LOOP_EXHAUSTED
    sys.stdout.write(summary["classifiers_text"] + "\n" + summary["results_text"])
    log.info("run-all finished in %.1f s; artifacts in %s", time.perf_counter() - t0, out)
    return 0


# ---------------------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="mldfs", description=__doc__.splitlines()[0])
    p.add_argument("--version", action="version",
                   version=f"%(prog)s {__version__} (kernels: {BACKEND_NAME})")
    p.add_argument("-c", "--config", help="TOML run configuration")
    p.add_argument("--set", action="append", default=[], metavar="SECTION.KEY=VALUE",
                   help="override a configuration value (repeatable)")
    p.add_argument("-v", "--verbose", action="store_true")
    # the same options are accepted after the subcommand name
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("-c", "--config", dest="config_local", help=argparse.SUPPRESS)
    common.add_argument("--set", action="append", default=[], dest="set_local",
                        metavar="SECTION.KEY=VALUE", help="override a configuration value")
    common.add_argument("-v", "--verbose", dest="verbose_local", action="store_true",
                        help=argparse.SUPPRESS)
    sub = p.add_subparsers(dest="cmd", required=True)

    def classes_opt(sp):
        sp.add_argument("--classes", type=int, help="class-count experiment (default: first configured)")

    sp = sub.add_parser("profile", parents=[common], help="profile a program into a CSV")
    sp.add_argument("program", help="assembly file, kernel name, or random[:N]")
    sp.add_argument("-o", "--output")
    classes_opt(sp)
    sp.set_defaults(func=cmd_profile)

    sp = sub.add_parser("gen", parents=[common], help="generate a balanced synthetic profile")
    sp.add_argument("-o", "--output")
    sp.add_argument("--asm", help="also write the generating program")
    sp.add_argument("--test", action="store_true", help="use the held-out size and seed")
    classes_opt(sp)
    sp.set_defaults(func=cmd_gen)

    sp = sub.add_parser("train", parents=[common], help="train a classifier on a profile CSV")
    sp.add_argument("profile")
    sp.add_argument("-o", "--output")
    sp.add_argument("--n-estimators", type=int)
    classes_opt(sp)
    sp.set_defaults(func=cmd_train)

    sp = sub.add_parser("compile", parents=[common], help="comparator-network cost of a forest model")
    sp.add_argument("model")
    sp.add_argument("-o", "--output", help="write the netlist as JSON")
    sp.set_defaults(func=cmd_compile)

    sp = sub.add_parser("simulate", parents=[common], help="run a program through the pipeline")
    sp.add_argument("program", help="assembly file, kernel name, or random[:N]")
    sp.add_argument("--policy", choices=("baseline", "oracle", "predicted"), default="predicted")
    sp.add_argument("--model")
    classes_opt(sp)
    sp.set_defaults(func=cmd_simulate)

    sp = sub.add_parser("evaluate", parents=[common], help="score a model on a profile CSV")
    sp.add_argument("model")
    sp.add_argument("profile")
    sp.set_defaults(func=cmd_evaluate)

    sp = sub.add_parser("run-all", parents=[common], help="full flow with the retraining loop")
    sp.add_argument("-o", "--output", help="artifact directory (default: output.dir)")
    sp.add_argument("--classes", type=int, nargs="+", help="class counts to run")
    sp.add_argument("--large-test", action="store_true",
                    help="use the 1,000,000-instruction test benchmark")
    sp.set_defaults(func=cmd_run_all)
    return p


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose or args.verbose_local else logging.WARNING,
                        format="%(message)s")
    overrides = list(args.set) + list(args.set_local)
    config = args.config_local or args.config
    if args.cmd == "run-all":
        if args.classes:
            overrides.append(f"boundaries.classes={args.classes}")
        if args.large_test:
            overrides.append("workload.large_test=true")
    try:
        cfg = RunConfig.load(config, overrides)
        return args.func(args, cfg)
    except (ConfigError, PhaseError, ValueError, OSError, StepLimitExceeded) as e:
        print(f"mldfs: error: {e}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
