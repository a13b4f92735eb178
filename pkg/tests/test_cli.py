import json

import numpy as np
import pytest

from spvote import dataset_io as dio
from spvote.baselines import copeland
from spvote.cli import aggregate_profile, main
from spvote.experiments import ExperimentConfig, run_sample_complexity, simulate_reports
from spvote.identifiability import cmm_g2_condition
from spvote.models import ModelSpec

HEADER = ",".join(dio.PROFILE_HEADER) + "\n"
FIXTURE = HEADER + "d,q,a,0>1>2,rank,0>1>2\nd,q,b,0>2>1,rank,0>2>1\nd,q,c,1>0>2,rank,1>0>2\n"


def run(capsys, *argv):
    code = main([str(a) for a in argv])
    out, err = capsys.readouterr()
    return code, out, err


def lines(out):
    return [json.loads(line) for line in out.splitlines()]


@pytest.fixture
def model_path(tmp_path):
    path = tmp_path / "model.json"
    dio.save_model(ModelSpec.cmm((0.5, 0.3, 0.2), (0.05, 0.1, 0.3), 3, (2, 0, 1)), path)
    return path


@pytest.fixture
def fixture_path(tmp_path):
    path = tmp_path / "profiles.csv"
    path.write_text(FIXTURE)
    return path


class TestExitCodes:
    def test_help(self, capsys):
        assert run(capsys, "--help")[0] == 0

    def test_usage_errors(self, capsys):
        assert run(capsys)[0] == 1
        assert run(capsys, "simulate", "--bogus")[0] == 1
        assert run(capsys, "aggregate", "--rule", "plurality", "--in", "x")[0] == 1

    def test_invalid_input(self, capsys, tmp_path):
        bad = tmp_path / "bad.csv"
        bad.write_text(HEADER + "d,q,a,2>2>1,top,1\n")
        code, _, err = run(capsys, "aggregate", "--rule", "borda", "--in", bad)
        assert code == 1 and "line 2" in err

    def test_missing_file_is_runtime_error(self, capsys, tmp_path):
        assert run(capsys, "aggregate", "--rule", "borda", "--in", tmp_path / "nope.csv")[0] == 2

    def test_unwritable_output(self, capsys, model_path, tmp_path):
        code = run(capsys, "simulate", "--model", model_path, "--n", 5, "--seed", 0,
                   "--out", tmp_path / "missing" / "dir" / "p.csv")[0]
        assert code == 2

    def test_threads_positive(self, capsys, model_path, tmp_path):
        assert run(capsys, "simulate", "--model", model_path, "--n", 5, "--seed", 0,
                   "--out", tmp_path / "p.csv", "--threads", 0)[0] == 1


class TestSimulate:
    def test_matches_library_and_is_deterministic(self, capsys, model_path, tmp_path):
        a, b = tmp_path / "a.csv", tmp_path / "b.csv"
        for path in (a, b):
            assert run(capsys, "simulate", "--model", model_path, "--n", 30, "--seed", 4, "--out", path)[0] == 0
        assert a.read_bytes() == b.read_bytes()
        votes, preds = simulate_reports(dio.load_model(model_path), 30, 4)
        assert a.read_text() == dio.profiles_to_csv(dio.modal_profile_from_votes(votes, preds))

    def test_seed_required(self, capsys, model_path, tmp_path):
        assert run(capsys, "simulate", "--model", model_path, "--n", 3, "--out", tmp_path / "p.csv")[0] == 1


class TestAggregate:
    def test_copeland_fixture(self, capsys, fixture_path):
        code, out, _ = run(capsys, "aggregate", "--rule", "copeland", "--in", fixture_path)
        (doc,) = lines(out)
        assert code == 0 and doc["winner"] == "0>1>2"
        assert doc["scores"] == {"0": 2.0, "1": 1.0, "2": 0.0}
        assert doc["diagnostics"]["n"] == 3

    @pytest.mark.parametrize("rule", ["sp-modal", "borda", "copeland"])
    def test_thin_wrapper(self, capsys, fixture_path, rule):
        _, out, _ = run(capsys, "aggregate", "--rule", rule, "--in", fixture_path)
        profile = dio.load_profiles(fixture_path)[("d", "q")]
        assert lines(out) == [json.loads(json.dumps(aggregate_profile(profile, rule), sort_keys=True))]

    def test_global_ids_and_selection(self, capsys, tmp_path):
        path = tmp_path / "p.csv"
        path.write_text(HEADER + "d,q1,a,9>4,top,9\nd,q1,b,9>4,top,9\nd,q2,a,4>9,top,4\n")
        code, out, _ = run(capsys, "aggregate", "--rule", "borda", "--in", path, "--question", "q1")
        assert code == 0 and [d["winner"] for d in lines(out)] == ["9>4"]
        assert run(capsys, "aggregate", "--rule", "borda", "--in", path, "--question", "zz")[0] == 1

    def test_partial_sp(self, capsys, tmp_path):
        path = tmp_path / "p.csv"
        rows = []
        for q, subset in enumerate([(0, 1, 2), (1, 2, 3)]):
            text = ">".join(map(str, subset))
            for i in range(3):
                rows.append(f"d,q{q},v{i},{text},rank,{text}")
        path.write_text(HEADER + "\n".join(rows) + "\n")
        code, out, _ = run(capsys, "aggregate", "--rule", "partial-sp", "--in", path, "--universe", 4)
        assert code == 0 and lines(out)[0]["winner"] == "0>1>2>3"


class TestCheck:
    def test_example(self, capsys):
        code, out, _ = run(capsys, "check-identifiability", "--lemma", "cmm2", "--p1", 0.4,
                           "--phi", "0.1,0.9", "--m", 3)
        (doc,) = lines(out)
        assert code == 0
        assert doc == json.loads(json.dumps(cmm_g2_condition(0.4, 0.1, 0.9, 3).to_dict(), sort_keys=True))

    def test_verify_adds_ratio(self, capsys):
        _, out, _ = run(capsys, "check-identifiability", "--lemma", "cmm2", "--p1", 0.4,
                        "--phi", "0.1,0.9", "--m", 3, "--verify")
        assert lines(out)[0]["separation_ratio"] > 1

    def test_model_file_and_mismatch(self, capsys, model_path):
        code, out, _ = run(capsys, "check-identifiability", "--lemma", "cmmg", "--model", model_path, "--s", 2)
        assert code == 0 and "lhs" in lines(out)[0]
        assert run(capsys, "check-identifiability", "--lemma", "cmm2", "--model", model_path)[0] == 1

    def test_cmpl_flags(self, capsys):
        code, out, _ = run(capsys, "check-identifiability", "--lemma", "cmplg", "--p", "0.5,0.5",
                           "--theta", "0.6,0.3,0.1;0.4,0.35,0.25")
        assert code == 0 and lines(out)[0]["satisfied"] is False

    def test_invalid_parameters(self, capsys):
        assert run(capsys, "check-identifiability", "--lemma", "cmm2", "--p1", 0.7,
                   "--phi", "0.1,0.9", "--m", 3)[0] == 1
        assert run(capsys, "check-identifiability", "--lemma", "cmm2", "--p1", 0.4)[0] == 1
        assert run(capsys, "check-identifiability", "--lemma", "cmm2", "--phi", "a,b")[0] == 1


class TestExperiment:
    def test_matches_library_and_threads(self, capsys, tmp_path):
        cfg = ExperimentConfig(ModelSpec.cmm((0.5, 0.5), (0.2, 0.8), 3), ("sp-modal", "copeland"),
                               (5, 10), 8, 50, 0.9, 0)
        cfg_path = tmp_path / "c.json"
        dio.save_experiment_config(cfg, cfg_path)
        outs = []
        for threads in (1, 3):
            out = tmp_path / f"r{threads}.csv"
            assert run(capsys, "experiment", "--config", cfg_path, "--out", out, "--seed", 6,
                       "--threads", threads)[0] == 0
            outs.append(out.read_bytes())
        assert outs[0] == outs[1]
        expected = run_sample_complexity(ExperimentConfig(**{**cfg.__dict__, "seed": 6}))
        assert outs[0].decode() == dio.results_to_csv(expected)

    def test_real_data(self, capsys, tmp_path, fixture_path):
        truth = tmp_path / "t.csv"
        dio.save_ground_truths({("d", "q"): (0, 1, 2)}, truth)
        cfg = tmp_path / "c.json"
        cfg.write_text(json.dumps({"aggregators": ["copeland", "sp-modal"], "sample_sizes": [2, 3],
                                   "trials": 4, "bootstrap_reps": 20}))
        out = tmp_path / "r.csv"
        code = run(capsys, "experiment", "--config", cfg, "--out", out, "--profiles", fixture_path,
                   "--truth", truth, "--seed", 1)[0]
        assert code == 0
        assert [r.aggregator for r in dio.load_results(out).rows] == ["copeland"] * 2 + ["sp-modal"] * 2

    def test_real_data_rejects_sp_full(self, capsys, tmp_path, fixture_path):
        truth = tmp_path / "t.csv"
        dio.save_ground_truths({("d", "q"): (0, 1, 2)}, truth)
        cfg = tmp_path / "c.json"
        cfg.write_text(json.dumps({"aggregators": ["sp-full"], "sample_sizes": [2]}))
        assert run(capsys, "experiment", "--config", cfg, "--out", tmp_path / "r.csv",
                   "--profiles", fixture_path, "--truth", truth, "--seed", 1)[0] == 1


class TestInfer:
    def test_runs_and_writes_summary(self, capsys, model_path, tmp_path):
        prof = tmp_path / "p.csv"
        run(capsys, "simulate", "--model", model_path, "--n", 60, "--seed", 1, "--out", prof)
        truth = tmp_path / "t.csv"
        dio.save_ground_truths({("synthetic", "q0"): (2, 0, 1)}, truth)
        cfg = tmp_path / "mc.json"
        cfg.write_text(json.dumps({"mcmc": {"chains": 2, "iterations": 400, "warmup": 100}}))
        out = tmp_path / "post.csv"
        code, stdout, _ = run(capsys, "infer", "--model", "cmm-exact", "--in", prof, "--truth", truth,
                              "--G", 2, "--config", cfg, "--out", out, "--seed", 2)
        assert code == 0
        assert lines(stdout)[0]["draws"] == 600
        assert out.read_text().splitlines()[0] == ",".join(dio.POSTERIOR_HEADER)

    def test_bad_config_field(self, capsys, fixture_path, tmp_path):
        truth = tmp_path / "t.csv"
        dio.save_ground_truths({("d", "q"): (0, 1, 2)}, truth)
        cfg = tmp_path / "mc.json"
        cfg.write_text(json.dumps({"mcmc": {"thin": 3}}))
        assert run(capsys, "infer", "--model", "cmm", "--in", fixture_path, "--truth", truth, "--G", 2,
                   "--config", cfg, "--out", tmp_path / "o.csv", "--seed", 0)[0] == 1


class TestPredictFull:
    def test_two_subsets(self, capsys, tmp_path):
        rows = []
        for q, subset in enumerate([(0, 1, 2), (2, 3, 4)]):
            for i in range(20):
                rows.append(f"d,q{q},v{i},{'>'.join(map(str, subset))},top,{subset[0]}")
        prof = tmp_path / "p.csv"
        prof.write_text(HEADER + "\n".join(rows) + "\n")
        truth = tmp_path / "t.csv"
        dio.save_ground_truths({("d", "q0"): (0, 1, 2), ("d", "q1"): (2, 3, 4)}, truth)
        cfg = tmp_path / "mc.json"
        cfg.write_text(json.dumps({"mcmc": {"chains": 2, "iterations": 400, "warmup": 100}}))
        code, out, _ = run(capsys, "predict-full", "--in", prof, "--truth", truth, "--G", 1, "--bootstrap", 30,
                           "--config", cfg, "--votes-only", "--reference", "0>1>2>3>4", "--seed", 0)
        assert code == 0
        doc = lines(out)[0]
        assert sum(doc["distribution"].values()) == pytest.approx(1.0)
        assert sum(doc["kt_histogram"].values()) == 30

    def test_uncovered_universe(self, capsys, tmp_path, fixture_path):
        truth = tmp_path / "t.csv"
        dio.save_ground_truths({("d", "q"): (0, 1, 2)}, truth)
        cfg = tmp_path / "mc.json"
        cfg.write_text(json.dumps({"mcmc": {"chains": 1, "iterations": 50, "warmup": 10}}))
        assert run(capsys, "predict-full", "--in", fixture_path, "--truth", truth, "--G", 1, "--universe", 5,
                   "--config", cfg, "--bootstrap", 5, "--seed", 0)[0] == 1
