import pytest

from mldfs.config import ConfigError, RunConfig, parse_override
from mldfs.delay import ClassBoundaries, DelayModelConfig
from mldfs.pipeline import EnergyConfig
from mldfs.report import RESULTS_HEADER, ResultRow, average_rows, emit_results_table


class TestConfig:
    def test_defaults(self):
        cfg = RunConfig.load()
        assert cfg.delay == DelayModelConfig()
        assert cfg.classes == [2, 3, 4]
        for c in (2, 3, 4):
            assert cfg.bounds(c) == ClassBoundaries.standard(c)
        assert cfg.hyper(2).n_estimators == 10
        assert cfg.hyper(3).n_estimators == 100
        assert cfg.hyper(2).feature_subsample is None
        assert cfg.energy(0.25) == EnergyConfig(e_ml=0.25)
        assert cfg.test_size == 100_000
        assert cfg.gen_spec(2).n_per_class == 3000

    def test_file_and_overrides(self, tmp_path):
        f = tmp_path / "run.toml"
        f.write_text('[hyper]\nmax_depth = 4\n[boundaries]\nclasses = [2]\nc2 = "2.0,4.0"\n')
        cfg = RunConfig.load(f, ["hyper.max_depth=6", "output.dir=out2",
                                 "workload.large_test=true"])
        assert cfg.hyper(2).max_depth == 6
        assert cfg.bounds(2).uppers == (2.0, 4.0)
        assert cfg["output"]["dir"] == "out2"
        assert cfg.test_size == 1_000_000

    def test_parse_override(self):
        assert parse_override("a.b=3") == (["a", "b"], 3)
        assert parse_override("a.b=[2, 3]") == (["a", "b"], [2, 3])
        assert parse_override("a.b=word") == (["a", "b"], "word")
        with pytest.raises(ConfigError):
            parse_override("novalue")

    @pytest.mark.parametrize("overrides", [
        ["hyper.nope=1"], ["nosection.x=1"], ['boundaries.c2="2.2,3.9"'],
        ["delay.add_slope=0.2"], ["boundaries.classes=[5]"], ["hyper.max_depth=0"],
    ])
    def test_invalid(self, overrides):
        with pytest.raises(ConfigError):
            RunConfig.load(None, overrides)

    def test_bad_file(self, tmp_path):
        f = tmp_path / "bad.toml"
        f.write_text("[hyper\n")
        with pytest.raises(ConfigError):
            RunConfig.load(f)
        f.write_text("[bogus]\nx = 1\n")
        with pytest.raises(ConfigError):
            RunConfig.load(f)


def row(name="b", c=2, acc=1.0, f1=1.0, ach=50.0, ideal=50.0, rep=0, en=-10.0, n=100):
    return ResultRow(name, c, acc, f1, ach, ideal, rep, en, n)


class TestReport:
    def test_golden(self):
        csv_out, text = emit_results_table([row("fir", n=100), row("crc", acc=0.5, f1=0.25,
                                                                    ach=10.0, rep=3, n=300)])
        assert csv_out == (
            "benchmark,classes,accuracy,f1_weighted,achieved_speedup_pct,ideal_speedup_pct,"
            "replays,energy_overhead_pct\n"
            "fir,2,100.0,100.0,50.0,50.0,0,-10.0\n"
            "crc,2,50.0,25.0,10.0,50.0,3,-10.0\n"
            "average,2,75.0,62.5,30.0,50.0,1.5,-10.0\n"
            "weighted_average,2,62.5,43.8,20.0,50.0,2.2,-10.0\n")
        lines = text.splitlines()
        assert lines[0].split() == list(RESULTS_HEADER)
        assert len({len(x) for x in lines[:2]}) == 1

    def test_perfect_single(self):
        csv_out, _ = emit_results_table([row()])
        assert csv_out.splitlines()[1] == "b,2,100.0,100.0,50.0,50.0,0,-10.0"

    def test_empty(self):
        with pytest.raises(ValueError):
            emit_results_table([])

    def test_average_is_mean(self):
        rows = [row("a", acc=0.9, ach=10.0), row("b", acc=0.7, ach=30.0)]
        avg = average_rows(rows)[0]
        assert avg.benchmark == "average"
        assert avg.accuracy == pytest.approx(0.8) and avg.achieved_speedup_pct == 20.0

    def test_blocks_per_class_count(self):
        rows = [row("a", c=2), row("a", c=4, ach=5.0)]
        avgs = average_rows(rows)
        assert [(r.benchmark, r.classes) for r in avgs] == [
            ("average", 2), ("weighted_average", 2), ("average", 4), ("weighted_average", 4)]

    def test_byte_stable(self):
        rows = [row("x", acc=1 / 3), row("y", en=2 / 3)]
        assert emit_results_table(rows) == emit_results_table(list(rows))
