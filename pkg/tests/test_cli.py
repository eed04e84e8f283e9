import json
import subprocess
import sys

import numpy as np
import pytest

from enrichedfp import cli

RUN = [sys.executable, "-m", "enrichedfp.cli"]


def run_cli(*args, cwd=None):
    return subprocess.run(RUN + list(args), capture_output=True, text=True, cwd=cwd)


def write_json(path, payload):
    path.write_text(json.dumps(payload))
    return str(path)


@pytest.fixture
def reflection_json(tmp_path):
    return write_json(tmp_path / "reflection.json", {"variant": "reflection_1d"})


@pytest.fixture
def scale_third_json(tmp_path):
    return write_json(
        tmp_path / "scale3.json",
        {"variant": "scale_1d", "c": 1.0 / 3.0, "domain": [0.0, 1.0]},
    )


@pytest.fixture
def sfp_json(tmp_path):
    return write_json(
        tmp_path / "sfp.json",
        {
            "type": "sfp",
            "C": {"variant": "box", "lower": [0, 0], "upper": [1, 1]},
            "Q": {"variant": "box", "lower": [2, 2], "upper": [3, 3]},
            "A": [[2, 0], [0, 2]],
            "gamma": 0.25,
        },
    )


class TestDemo:
    def test_demo_runs_clean(self, tmp_path):
        out = tmp_path / "demo"
        result = run_cli("demo", "--out", str(out), "--seed", "0")
        assert result.returncode == cli.EXIT_OK, result.stderr
        for name in ("trace.csv", "trace_picard.csv", "summary.json", "certificate.json"):
            assert (out / name).exists()
        summary = json.loads((out / "summary.json").read_text())
        assert summary["averaged"]["status"] == "converged"
        assert summary["averaged"]["iterations"] <= 25
        assert summary["picard"]["status"] == "max_iter_reached"
        assert summary["picard_orbit"] == [0.0, 1.0]
        assert summary["worst_bound_excess"] <= 0.0
        assert "plain lam=1" in result.stdout


class TestCertify:
    def test_scale_third_separation(self, tmp_path, scale_third_json):
        out = tmp_path / "cert"
        result = run_cli(
            "certify", "--input", scale_third_json, "--out", str(out), "--seed", "0",
            "--k-grid", "0",
        )
        assert result.returncode == cli.EXIT_OK
        cert = json.loads((out / "certificate.json").read_text())
        assert cert["kannan"]["feasible"] is False
        assert cert["kannan"]["rate"] >= 0.5
        assert cert["bianchini"]["feasible"] is True
        assert abs(cert["bianchini"]["rate"] - 0.5) <= 1e-12

    def test_uncertifiable_map_exits_4(self, tmp_path):
        mapping = write_json(
            tmp_path / "half.json",
            {"variant": "scale_1d", "c": 0.5, "domain": [0.0, 1.0]},
        )
        result = run_cli("certify", "--input", mapping, "--out", str(tmp_path / "o"))
        assert result.returncode == cli.EXIT_CERT_INFEASIBLE


class TestSolve:
    def test_auto_lambda_converges(self, tmp_path, reflection_json):
        out = tmp_path / "solve"
        result = run_cli(
            "solve", "--input", reflection_json, "--out", str(out),
            "--lambda", "auto", "--x0", "0.1", "--tol", "1e-10",
        )
        assert result.returncode == cli.EXIT_OK, result.stderr
        assert (out / "certificate.json").exists()
        summary = json.loads((out / "summary.json").read_text())
        assert summary["status"] == "converged"
        assert abs(summary["final_point"][0] - 0.5) <= 1e-9

    def test_max_iter_exit_code(self, tmp_path, reflection_json):
        result = run_cli(
            "solve", "--input", reflection_json, "--out", str(tmp_path / "o"),
            "--lambda", "1.0", "--x0", "0", "--max-iter", "50",
            "--stop-rule", "step_norm",
        )
        assert result.returncode == cli.EXIT_MAX_ITER

    def test_diverged_exit_code(self, tmp_path):
        mapping = write_json(tmp_path / "double.json", {"variant": "scale_1d", "c": 2.0})
        result = run_cli(
            "solve", "--input", mapping, "--out", str(tmp_path / "o"),
            "--lambda", "1.0", "--x0", "1.0", "--max-iter", "100000",
            "--stop-rule", "step_norm",
        )
        assert result.returncode == cli.EXIT_DIVERGED

    def test_auto_refused_exit_code(self, tmp_path):
        mapping = write_json(
            tmp_path / "half.json", {"variant": "scale_1d", "c": 0.5, "domain": [0.0, 1.0]}
        )
        result = run_cli(
            "solve", "--input", mapping, "--out", str(tmp_path / "o"), "--lambda", "auto",
        )
        assert result.returncode == cli.EXIT_CERT_INFEASIBLE


class TestSfpVip:
    def test_sfp_standard(self, tmp_path, sfp_json):
        out = tmp_path / "sfp"
        result = run_cli(
            "sfp", "--input", sfp_json, "--out", str(out),
            "--lambda", "0.5", "--x0", "0,0", "--tol", "1e-10", "--max-iter", "500",
        )
        assert result.returncode == cli.EXIT_OK, result.stderr
        summary = json.loads((out / "summary.json").read_text())
        assert summary["feasible"] is True
        assert summary["residual_q"] <= 1e-8
        assert np.allclose(summary["final_point"], [1.0, 1.0], atol=1e-8)

    def test_sfp_infeasible_exit_code(self, tmp_path):
        instance = write_json(
            tmp_path / "degenerate.json",
            {
                "type": "sfp",
                "C": {"variant": "box", "lower": [0], "upper": [0]},
                "Q": {"variant": "box", "lower": [1], "upper": [1]},
                "A": [[1]],
                "gamma": 0.5,
            },
        )
        result = run_cli(
            "sfp", "--input", instance, "--out", str(tmp_path / "o"),
            "--lambda", "0.5", "--x0", "0",
        )
        assert result.returncode == cli.EXIT_SFP_INFEASIBLE
        summary = json.loads((tmp_path / "o" / "summary.json").read_text())
        assert summary["status"] == "converged"
        assert summary["feasible"] is False

    def test_sfp_auto_lambda_certifies_over_c(self, tmp_path, sfp_json):
        # the projection operator is constant on C, so estimation certifies
        # (k=0, rate=0) and auto mode runs plain iteration to the solution
        out = tmp_path / "sfp_auto"
        result = run_cli(
            "sfp", "--input", sfp_json, "--out", str(out),
            "--lambda", "auto", "--x0", "0,0",
        )
        assert result.returncode == cli.EXIT_OK, result.stderr
        summary = json.loads((out / "summary.json").read_text())
        assert summary["lambda"] == 1.0
        assert np.allclose(summary["final_point"], [1.0, 1.0], atol=1e-8)

    def test_vip_auto_lambda_refused_when_uncertifiable(self, tmp_path):
        instance = write_json(
            tmp_path / "vip.json",
            {
                "type": "vip",
                "C": {"variant": "box", "lower": [0], "upper": [2]},
                "G": {"variant": "affine", "matrix": [[1]], "offset": [-1]},
                "gamma": 0.5,
            },
        )
        result = run_cli(
            "vip", "--input", instance, "--out", str(tmp_path / "o"),
            "--lambda", "auto", "--x0", "0",
        )
        assert result.returncode == cli.EXIT_CERT_INFEASIBLE
        assert "refused" in result.stderr

    def test_vip_loose_tolerance_fails_residual_check(self, tmp_path):
        # a crude solve tolerance leaves the iterate ~1e-2 from the solution,
        # so the sampled inequality residual falls below -1e-8: distinct exit
        instance = write_json(
            tmp_path / "vip.json",
            {
                "type": "vip",
                "C": {"variant": "box", "lower": [0], "upper": [2]},
                "G": {"variant": "affine", "matrix": [[1]], "offset": [-1]},
                "gamma": 0.5,
            },
        )
        result = run_cli(
            "vip", "--input", instance, "--out", str(tmp_path / "o"),
            "--lambda", "1.0", "--x0", "0", "--tol", "1e-2",
        )
        assert result.returncode == cli.EXIT_VI_RESIDUAL
        summary = json.loads((tmp_path / "o" / "summary.json").read_text())
        assert summary["status"] == "converged"
        assert summary["vi_ok"] is False

    def test_vip_line(self, tmp_path):
        instance = write_json(
            tmp_path / "vip.json",
            {
                "type": "vip",
                "C": {"variant": "box", "lower": [0], "upper": [2]},
                "G": {"variant": "affine", "matrix": [[1]], "offset": [-1]},
                "gamma": 0.5,
            },
        )
        out = tmp_path / "vip_out"
        result = run_cli(
            "vip", "--input", instance, "--out", str(out),
            "--lambda", "1.0", "--x0", "0", "--tol", "1e-10",
        )
        assert result.returncode == cli.EXIT_OK, result.stderr
        summary = json.loads((out / "summary.json").read_text())
        assert abs(summary["final_point"][0] - 1.0) <= 1e-8
        assert summary["vi_ok"] is True
        assert summary["monotone_satisfied"] is True


class TestErrors:
    def test_ragged_matrix_rows_field_message(self, tmp_path):
        instance = write_json(
            tmp_path / "bad.json",
            {
                "type": "sfp",
                "C": {"variant": "box", "lower": [0, 0], "upper": [1, 1]},
                "Q": {"variant": "box", "lower": [2, 2], "upper": [3, 3]},
                "A": [[2, 0], [0]],
                "gamma": 0.25,
            },
        )
        result = run_cli("sfp", "--input", instance, "--out", str(tmp_path / "o"))
        assert result.returncode == cli.EXIT_CONFIG_ERROR
        assert "instance.A" in result.stderr
        assert "inconsistent lengths" in result.stderr

    def test_missing_input(self, tmp_path):
        result = run_cli("solve", "--out", str(tmp_path / "o"))
        assert result.returncode == cli.EXIT_CONFIG_ERROR
        assert "no input" in result.stderr

    def test_malformed_json_reports_path(self, tmp_path):
        bad = tmp_path / "broken.json"
        bad.write_text("{not json")
        result = run_cli("solve", "--input", str(bad), "--out", str(tmp_path / "o"))
        assert result.returncode == cli.EXIT_CONFIG_ERROR
        assert "broken.json" in result.stderr


class TestBench:
    def test_reflection_sweep(self, tmp_path, reflection_json):
        out = tmp_path / "bench"
        result = run_cli(
            "bench", "--input", reflection_json, "--out", str(out),
            "--x0", "0.0", "--tol", "1e-8", "--max-iter", "500",
        )
        assert result.returncode == cli.EXIT_OK, result.stderr
        rows = (out / "bench.csv").read_text().strip().splitlines()[1:]
        parsed = [row.split(",") for row in rows]
        lambdas = [float(r[0]) for r in parsed]
        assert lambdas == sorted(lambdas)
        summary = json.loads((out / "summary.json").read_text())
        # the error factor |1 - 2 lam| vanishes at lam = 0.5: one step
        assert summary["fastest_lambda"] == 0.5
        by_lambda = {float(r[0]): (int(r[1]), bool(int(r[2]))) for r in parsed}
        assert by_lambda[0.5] == (1, True)
        assert by_lambda[1.0][1] is False  # period-2 orbit never converges
        assert summary["non_convergent"] == [1.0]

    def test_scale_half_prefers_full_step(self, tmp_path):
        mapping = write_json(
            tmp_path / "half.json", {"variant": "scale_1d", "c": 0.5, "domain": [0.0, 1.0]}
        )
        config = write_json(
            tmp_path / "bench.json",
            {"fixed_point": [0.0], "x0": [1.0], "solver": {"tol": 1e-8, "max_iter": 500}},
        )
        out = tmp_path / "bench_out"
        result = run_cli("bench", "--input", mapping, "--config", config, "--out", str(out))
        assert result.returncode == cli.EXIT_OK, result.stderr
        summary = json.loads((out / "summary.json").read_text())
        assert summary["fastest_lambda"] == 1.0
        assert summary["non_convergent"] == []

    def test_loose_tolerance_zero_iterations(self, tmp_path, reflection_json):
        out = tmp_path / "bench0"
        result = run_cli(
            "bench", "--input", reflection_json, "--out", str(out),
            "--x0", "0.4", "--tol", "10.0",
        )
        assert result.returncode == cli.EXIT_OK
        rows = (out / "bench.csv").read_text().strip().splitlines()[1:]
        assert all(int(row.split(",")[1]) == 0 for row in rows)


class TestDeterminism:
    def test_solve_outputs_byte_identical(self, tmp_path, reflection_json):
        config = write_json(
            tmp_path / "run.json",
            {
                "x0": [0.0],
                "solver": {"lambda": 2.0 / 3.0, "tol": 1e-10, "max_iter": 100, "rate": 1.0 / 3.0},
                "sample": {"seed": 0},
            },
        )
        outs = []
        for tag in ("a", "b"):
            out = tmp_path / tag
            result = run_cli(
                "solve", "--input", reflection_json, "--config", config, "--out", str(out)
            )
            assert result.returncode == cli.EXIT_OK
            outs.append(out)
        a, b = outs
        assert (a / "trace.csv").read_bytes() == (b / "trace.csv").read_bytes()
        sa = json.loads((a / "summary.json").read_text())
        sb = json.loads((b / "summary.json").read_text())
        assert "timestamp" in sa
        sa.pop("timestamp")
        sb.pop("timestamp")
        assert json.dumps(sa, sort_keys=True) == json.dumps(sb, sort_keys=True)

    def test_sfp_outputs_byte_identical(self, tmp_path, sfp_json):
        outs = []
        for tag in ("a", "b"):
            out = tmp_path / tag
            result = run_cli(
                "sfp", "--input", sfp_json, "--out", str(out),
                "--lambda", "0.5", "--x0", "0,0", "--seed", "7",
            )
            assert result.returncode == cli.EXIT_OK
            outs.append(out)
        a, b = outs
        assert (a / "trace.csv").read_bytes() == (b / "trace.csv").read_bytes()
        assert (a / "certificate.json").read_bytes() == (b / "certificate.json").read_bytes()
        sa = json.loads((a / "summary.json").read_text())
        sb = json.loads((b / "summary.json").read_text())
        sa.pop("timestamp")
        sb.pop("timestamp")
        assert json.dumps(sa, sort_keys=True) == json.dumps(sb, sort_keys=True)
