import csv
import io
import json
from importlib import resources

import jsonschema
import pytest

from testroll.cli import RunConfig, main, parse_config


def schema(name):
    return json.loads(resources.files("testroll.schemas").joinpath(name).read_text())


def run(capsys, *argv):
    code = main(list(argv) + ["-q"])
    out = capsys.readouterr().out
    return code, out


def rows(text):
    return list(csv.reader(io.StringIO(text)))


class TestRecommend:
    def test_wmb_grid(self, capsys):
        code, out = run(capsys, "recommend", "--criterion", "wmb-grid", "--epsilon", "0.01", "--N", "1000")
        assert code == 0
        rep = json.loads(out)
        jsonschema.validate(rep, schema("recommendation.schema.json"))
        assert rep["mStar"] == 332
        assert rep["fraction"] == 0.332
        assert {rep["leastFavorable"]["mu1"], rep["leastFavorable"]["mu0"]} == {0.49, 0.5}
        assert rep["trace"][-1]["m"] == 332

    def test_gaussian_wmb(self, capsys):
        code, out = run(capsys, "recommend", "--criterion", "gaussian-wmb", "--N", "300")
        rep = json.loads(out)
        jsonschema.validate(rep, schema("recommendation.schema.json"))
        assert code == 0 and rep["mStar"] == 100

    def test_minimax(self, capsys):
        code, out = run(capsys, "recommend", "--criterion", "minimax-regret", "--N", "500")
        rep = json.loads(out)
        jsonschema.validate(rep, schema("recommendation.schema.json"))
        assert code == 0 and rep["mStar"] == 32

    def test_normal_approx(self, capsys):
        code, out = run(capsys, "recommend", "--criterion", "wmb-normal-approx", "--N", "1000")
        assert json.loads(out)["mStar"] == 334

    def test_relative_regret_warns(self, capsys):
        code, out = run(capsys, "recommend", "--criterion", "relative-regret", "--N", "40", "--grid-step", "0.05")
        rep = json.loads(out)
        jsonschema.validate(rep, schema("recommendation.schema.json"))
        assert code == 0
        assert rep["degeneracyWarning"] is True

    def test_csv(self, capsys):
        code, out = run(capsys, "recommend", "--criterion", "wmb-normal-approx", "--N", "12", "--format", "csv")
        assert rows(out) == [["criterion", "N", "mStar", "fraction", "mu1", "mu0", "feasible"],
                             ["wmb-normal-approx", "12", "4", "0.333333", "", "", "1"]]

    def test_output_file(self, capsys, tmp_path):
        path = tmp_path / "rec.json"
        code, out = run(capsys, "recommend", "--criterion", "gaussian-wmb", "--N", "30", "--output", str(path))
        assert code == 0 and out == ""
        assert json.loads(path.read_text())["mStar"] == 10

    def test_infeasible_exit(self, capsys, monkeypatch):
        from testroll import cli
        from testroll.search import DesignRecommendation
        monkeypatch.setattr(cli, "wmb_sample_size",
                            lambda N, grid, cfg: DesignRecommendation("wmb-grid", N, None, False))
        code, out = run(capsys, "recommend", "--criterion", "wmb-grid", "--epsilon", "0.01", "--N", "10")
        assert code == 2
        rep = json.loads(out)
        jsonschema.validate(rep, schema("recommendation.schema.json"))
        assert rep["feasible"] is False and rep["mStar"] is None


class TestErrors:
    @pytest.mark.parametrize("argv", [
        ["recommend", "--N", "501"],
        ["recommend", "--criterion", "wmb-grid", "--N", "100"],
        ["recommend", "--criterion", "wmb-grid", "--epsilon", "0", "--N", "100"],
        ["recommend", "--criterion", "wmb-grid", "--epsilon", "-0.1", "--N", "100"],
        ["recommend", "--criterion", "nonsense", "--N", "100"],
        ["recommend", "--model", "gaussian", "--criterion", "minimax-regret", "--N", "100"],
        ["recommend", "--N", "100", "--workers", "0"],
        ["recommend"],
        ["frobnicate"],
        ["simulate", "--N", "10", "--m", "4"],
    ])
    def test_config_errors_exit_one(self, capsys, argv):
        assert main(argv + ["-q"]) == 1

    def test_bad_config_file(self, capsys, tmp_path):
        p = tmp_path / "c.json"
        p.write_text('{"N": 100, "bogus": 1}')
        assert main(["recommend", "--config", str(p), "-q"]) == 1
        p.write_text("not json")
        assert main(["recommend", "--config", str(p), "-q"]) == 1


class TestConfig:
    def test_round_trip(self):
        cfg = RunConfig(command="table", N=500, epsilon=0.01, N_list=[200, 500], suites=["hoeffding"])
        again = RunConfig.from_dict(json.loads(json.dumps(cfg.to_dict())))
        assert again == cfg

    def test_file_with_override(self, tmp_path):
        p = tmp_path / "c.json"
        p.write_text(json.dumps({"criterion": "wmb-grid", "epsilon": 0.01, "N": 500, "workers": 2}))
        cfg, _ = parse_config(["recommend", "--config", str(p), "--N", "1000"])
        assert cfg.N == 1000 and cfg.epsilon == 0.01 and cfg.workers == 2
        assert cfg.command == "recommend"

    def test_config_file_drives_run(self, capsys, tmp_path):
        p = tmp_path / "c.json"
        p.write_text(json.dumps({"criterion": "wmb-grid", "epsilon": 0.01, "N": 500}))
        code, out = run(capsys, "recommend", "--config", str(p))
        assert code == 0 and json.loads(out)["mStar"] == 188

    def test_boolean_flags(self):
        cfg, _ = parse_config(["recommend", "--N", "10", "--no-refine", "--no-prune", "--bisect"])
        assert (cfg.refine, cfg.prune, cfg.bisect) == (False, False, True)


class TestTable:
    def test_table1_subset(self, capsys):
        code, out = run(capsys, "table", "table1", "--N-list", "200", "500")
        assert code == 0
        assert rows(out) == [["N", "m", "fraction"], ["200", "18", "0.090"], ["500", "32", "0.064"]]

    def test_table2_single(self, capsys):
        code, out = run(capsys, "table", "table2", "--N-list", "1000", "--epsilon", "0.01")
        assert rows(out) == [["epsilon", "N", "m", "fraction", "mu0", "mu1"],
                             ["0.01", "1000", "332", "0.332", "0.500", "0.490"]]

    def test_checkpoint_resume(self, capsys, tmp_path):
        ck = tmp_path / "ck.jsonl"
        _, first = run(capsys, "table", "table2", "--N-list", "500", "--epsilon", "0.01", "--checkpoint", str(ck))
        assert len(ck.read_text().splitlines()) == 1
        # tamper with the stored row: a resumed run must reuse it rather than recompute
        rec = json.loads(ck.read_text())
        rec["row"]["m"] = 4242
        ck.write_text(json.dumps(rec) + "\n")
        _, second = run(capsys, "table", "table2", "--N-list", "500", "--epsilon", "0.01", "--checkpoint", str(ck))
        assert rows(second)[1][2] == "4242"
        assert rows(first)[1][2] == "188"

    def test_bit_stable_across_workers(self, capsys):
        _, a = run(capsys, "table", "table2", "--N-list", "200", "500", "--epsilon", "0.005")
        _, b = run(capsys, "table", "table2", "--N-list", "200", "500", "--epsilon", "0.005", "--workers", "3")
        assert a == b

    def test_json(self, capsys):
        code, out = run(capsys, "table", "table1", "--N-list", "200", "--format", "json")
        assert json.loads(out)["rows"][0]["m"] == 18


class TestFigure:
    def test_fig2_crossing(self, capsys):
        code, out = run(capsys, "figure", "fig2", "--N", "500", "--epsilon", "0.01")
        table = rows(out)[1:]
        assert code == 0
        crossing = [r for r in table if r[2] == "1"]
        assert len(crossing) == 1 and crossing[0][0] == "188"
        idx = table.index(crossing[0])
        assert float(table[idx - 1][1]) > 1.0 >= float(crossing[0][1])
        assert int(table[-1][0]) == 498

    def test_fig1b_minimiser(self, capsys):
        code, out = run(capsys, "figure", "fig1b", "--N", "500")
        table = [(int(m), float(v)) for m, v in rows(out)[1:]]
        assert min(table, key=lambda r: (r[1], r[0]))[0] == 32

    def test_fig1a_columns(self, capsys):
        code, out = run(capsys, "figure", "fig1a", "--N", "100")
        t = rows(out)
        assert t[0] == ["m", "mu1", "mu0"] and len(t) == 52

    def test_figA_tends_to_half(self, capsys):
        code, out = run(capsys, "figure", "figA", "--N", "500")
        dev = {}
        for m, eps, v in rows(out)[1:]:
            dev[eps] = max(dev.get(eps, 0.0), abs(float(v) - 0.5))
        assert dev["0.01"] > dev["0.001"] > dev["0.0001"]


class TestValidate:
    def test_suites(self, capsys):
        code, out = run(capsys, "validate", "--suite", "exact-identity", "--suite", "gaussian-closed-form",
                        "--suite", "hoeffding")
        rep = json.loads(out)
        jsonschema.validate(rep, schema("validation.schema.json"))
        assert code == 0 and rep["passed"]
        metrics = {s["suite"]: s["metrics"] for s in rep["suites"]}
        assert metrics["exact-identity"]["max_abs_deviation"] < 1e-12
        assert metrics["gaussian-closed-form"]["max_argmax_deviation"] < 1e-8

    def test_montecarlo_suite(self, capsys):
        code, out = run(capsys, "validate", "--suite", "montecarlo", "--seed", "42")
        rep = json.loads(out)
        jsonschema.validate(rep, schema("validation.schema.json"))
        assert code == 0
        assert rep["suites"][0]["metrics"]["within"] >= 19


class TestSimulate:
    def test_bernoulli(self, capsys):
        code, out = run(capsys, "simulate", "--N", "10", "--m", "4", "--mu1", "0.7", "--mu0", "0.3",
                        "--replications", "100000", "--seed", "3")
        rep = json.loads(out)
        jsonschema.validate(rep, schema("simulation.schema.json"))
        assert code == 0
        assert abs(rep["mean"] - rep["exact"]) <= 4 * rep["stdError"]

    def test_gaussian_regret(self, capsys):
        code, out = run(capsys, "simulate", "--model", "gaussian", "--tau", "0.2", "--N", "200", "--m", "100",
                        "--quantity", "regret", "--replications", "20000")
        rep = json.loads(out)
        jsonschema.validate(rep, schema("simulation.schema.json"))
        assert rep["exact"] is None

    def test_reproducible(self, capsys):
        argv = ["simulate", "--N", "20", "--m", "6", "--mu1", "0.5", "--mu0", "0.4", "--replications", "5000",
                "--seed", "11", "--format", "csv"]
        assert run(capsys, *argv) == run(capsys, *argv)
