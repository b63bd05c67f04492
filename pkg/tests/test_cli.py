import json

import numpy as np
from click.testing import CliRunner

from coopcast.cli import main

from conftest import base_model_doc, bsc

SIM_ARGS = ["--eps", "2.0", "--eps1", "0.9", "--delta", "2.0", "--delta1", "0.9",
            "--eps-codebook", "0.2", "--no-validate-params"]


def run_cli(args):
    return CliRunner().invoke(main, args, catch_exceptions=False)


def mode2_model_doc(rho=0.1, p_chan=0.05) -> dict:
    j = np.zeros((2, 1, 2))
    for x in range(2):
        for v in range(2):
            j[x, 0, v] = 0.5 * ((1 - rho) if v == x else rho)
    return {
        "alphabets": {"X": 2, "Y": [1], "W": 2, "U": [2], "V": [2]},
        "source_pmf": j.flatten().tolist(),
        "channel": bsc(p_chan).flatten().tolist(),
        "kappa": {"num": 1, "den": 1},
    }


class TestRegionCommand:
    def test_feasible_exit_zero(self, model_file, tmp_path):
        res = run_cli(["region", "tuncel", model_file, "--out", str(tmp_path / "o")])
        assert res.exit_code == 0
        doc = json.loads((tmp_path / "o" / "verdict.json").read_text())
        assert doc["feasible"] is True
        assert (tmp_path / "o" / "manifest.json").exists()

    def test_infeasible_exit_one(self, tmp_path):
        doc = base_model_doc()
        doc["source_pmf"] = [0.5, 0.0, 0.0, 0.5]  # Y = X exactly
        doc["channel"] = [0.5, 0.5, 0.5, 0.5]     # useless channel
        doc["source_pmf"] = [0.25, 0.25, 0.25, 0.25]  # no side information
        mf = tmp_path / "m.json"
        mf.write_text(json.dumps(doc))
        res = run_cli(["region", "tuncel", str(mf), "--out", str(tmp_path / "o")])
        assert res.exit_code == 1

    def test_malformed_model_exit_two(self, tmp_path):
        mf = tmp_path / "bad.json"
        mf.write_text("{broken")
        res = run_cli(["region", "tuncel", str(mf), "--out", str(tmp_path / "o")])
        assert res.exit_code == 2

    def test_mode1_zero_rate_reduction(self, model_file, tmp_path):
        res = run_cli(["region", "mode1", model_file, "--rates", "0.0",
                       "--out", str(tmp_path / "o")])
        assert res.exit_code == 0  # the base model is Tuncel-feasible

    def test_mode2_binary_example_inside(self, tmp_path):
        mf = tmp_path / "m2.json"
        mf.write_text(json.dumps(mode2_model_doc()))
        res = run_cli(["region", "mode2", str(mf), "--rates", "0.75",
                       "--out", str(tmp_path / "o")])
        assert res.exit_code == 0
        res2 = run_cli(["region", "mode2", str(mf), "--rates", "0.2",
                        "--out", str(tmp_path / "o2")])
        assert res2.exit_code == 1

    def test_list_unique_split(self, model_file, tmp_path):
        res = run_cli(["region", "list-unique", model_file, "--exponents", "0.3",
                       "--list-set", "1", "--out", str(tmp_path / "o")])
        assert res.exit_code in (0, 1)
        assert (tmp_path / "o" / "verdict.json").exists()


class TestCapacityCommand:
    def test_helper_zero_rate_compound(self, model_file, tmp_path):
        import oracles

        res = run_cli(["capacity", "helper", model_file, "--rates", "0.0",
                       "--out", str(tmp_path / "o")])
        assert res.exit_code == 0
        doc = json.loads((tmp_path / "o" / "capacity.json").read_text())
        assert abs(doc["value"] - oracles.I_BSC_01_UNIFORM) < 1e-3

    def test_bidirectional_symmetric(self, tmp_path):
        doc = {
            "alphabets": {"X": 2, "Y": [2, 2], "W": 2, "U": [2, 2]},
            "source_pmf": (np.full((2, 2, 2), 1 / 8)).flatten().tolist(),
            "channel": np.einsum("wu,wt->wut", bsc(0.1), bsc(0.1)).flatten().tolist(),
            "quantizers": [[0, 1], [0, 1]],
            "kappa": {"num": 1, "den": 1},
        }
        mf = tmp_path / "m.json"
        mf.write_text(json.dumps(doc))
        res = run_cli(["capacity", "bidirectional", str(mf), "--rates", "0.2,0.2",
                       "--points", "5", "--out", str(tmp_path / "o")])
        assert res.exit_code == 0
        rows = (tmp_path / "o" / "curve.csv").read_text().strip().split("\n")
        assert rows[0] == "rate,value"
        assert len(rows) > 1


class TestSimulateCommand:
    def test_seed_required(self, model_file):
        res = CliRunner().invoke(main, ["simulate", "list", model_file, "--ns", "8",
                                        "--exponents", "0.1"])
        assert res.exit_code == 2

    def test_repeat_identical(self, model_file, tmp_path):
        args = ["simulate", "list", model_file, "--ns", "8", "--trials", "10",
                "--seed", "7", "--exponents", "0.1"] + SIM_ARGS
        run_cli(args + ["--out", str(tmp_path / "a")])
        run_cli(args + ["--out", str(tmp_path / "b")])
        for name in ("results.csv", "results.json"):
            assert (tmp_path / "a" / name).read_bytes() == (tmp_path / "b" / name).read_bytes()

    def test_thread_invariance(self, model_file, tmp_path):
        args = ["simulate", "list", model_file, "--ns", "8", "--trials", "12",
                "--seed", "7", "--exponents", "0.1"] + SIM_ARGS
        run_cli(args + ["--threads", "1", "--out", str(tmp_path / "t1")])
        run_cli(args + ["--threads", "4", "--out", str(tmp_path / "t4")])
        for name in ("results.csv", "results.json"):
            assert (tmp_path / "t1" / name).read_bytes() == (tmp_path / "t4" / name).read_bytes()

    def test_csv_header_contract(self, model_file, tmp_path):
        args = ["simulate", "list", model_file, "--ns", "8", "--trials", "5",
                "--seed", "3", "--exponents", "0.1"] + SIM_ARGS
        run_cli(args + ["--out", str(tmp_path / "o")])
        head = (tmp_path / "o" / "results.csv").read_text().split("\n")[0]
        assert head == ("n_s,n_c,scheme,receiver,trials,errors,rate,"
                        "ci_lo,ci_hi,list_miss,list_overflow")

    def test_trial_log_written(self, model_file, tmp_path):
        args = ["simulate", "list", model_file, "--ns", "8", "--trials", "6",
                "--seed", "3", "--exponents", "0.1", "--trial-log"] + SIM_ARGS
        run_cli(args + ["--out", str(tmp_path / "o")])
        lines = (tmp_path / "o" / "trials.jsonl").read_text().strip().split("\n")
        assert len(lines) == 6
        assert json.loads(lines[0])["trial"] == 0

    def test_codebook_guard_exit_two(self, model_file, tmp_path):
        args = ["simulate", "list", model_file, "--ns", "64", "--trials", "2",
                "--seed", "3", "--exponents", "0.1"] + SIM_ARGS
        res = run_cli(args + ["--out", str(tmp_path / "o")])
        assert res.exit_code == 2

    def test_validated_defaults_run(self, model_file, tmp_path):
        res = run_cli(["simulate", "list", model_file, "--ns", "8", "--trials", "5",
                       "--seed", "3", "--out", str(tmp_path / "o")])
        assert res.exit_code == 0


class TestSweepCommand:
    def test_singleton(self, model_file, tmp_path):
        args = ["sweep", "list", model_file, "--axis", "n_s", "--values", "8",
                "--ns", "8", "--trials", "4", "--seed", "2",
                "--exponents", "0.1"] + SIM_ARGS
        res = run_cli(args + ["--out", str(tmp_path / "o")])
        assert res.exit_code == 0
        rows = (tmp_path / "o" / "results.csv").read_text().strip().split("\n")
        assert rows[0].endswith(",axis,value")
        assert len(rows) == 2

    def test_multi_value(self, model_file, tmp_path):
        args = ["sweep", "list", model_file, "--axis", "D", "--values", "0.1,0.3",
                "--ns", "8", "--trials", "4", "--seed", "2"] + SIM_ARGS
        res = run_cli(args + ["--out", str(tmp_path / "o")])
        assert res.exit_code == 0
        rows = (tmp_path / "o" / "results.csv").read_text().strip().split("\n")
        assert len(rows) == 3


class TestOracleCommand:
    def test_rows_match_formula(self, tmp_path):
        import coopcast as cc

        res = run_cli(["oracle", "binary-example", "--rho", "0.1", "--grid", "10",
                       "--out", str(tmp_path / "o")])
        assert res.exit_code == 0
        rows = (tmp_path / "o" / "curve.csv").read_text().strip().split("\n")
        assert rows[0] == "rate,value" and len(rows) == 11
        for line in rows[1:]:
            r, v = (float(t) for t in line.split(","))
            alpha = cc.binary_entropy_inv(1.0 - r)
            assert abs(v - cc.binary_entropy(cc.binary_convolution(alpha, 0.1))) < 1e-6

    def test_rho_zero(self, tmp_path):
        res = run_cli(["oracle", "binary-example", "--rho", "0.0", "--grid", "4",
                       "--out", str(tmp_path / "o")])
        assert res.exit_code == 0

    def test_bad_rho(self, tmp_path):
        res = run_cli(["oracle", "binary-example", "--rho", "0.9",
                       "--out", str(tmp_path / "o")])
        assert res.exit_code == 2
