import json
import math

import numpy as np
import pytest

from speckleqi import thermal_state
from speckleqi.cli import PRESETS, CurveRecord, SweepSpec, main


def run_cli(*argv):
    return main(list(argv))


def read_csv(path):
    lines = path.read_text().strip().splitlines()
    header = lines[0].split(",")
    rows = [dict(zip(header, line.split(","))) for line in lines[1:]]
    return header, rows


class TestTypes:
    def test_sweep_spec_rejects_empty(self):
        with pytest.raises(ValueError):
            SweepSpec(axis="M", values=(), fixed={})

    def test_sweep_spec_rejects_non_increasing(self):
        with pytest.raises(ValueError):
            SweepSpec(axis="M", values=(1.0, 1.0, 2.0), fixed={})

    def test_log_range_single_point(self):
        spec = SweepSpec.log_range("M", 3.0, 5.0, 1, fixed={})
        assert spec.values == (1000.0,)

    def test_curve_record_defaults(self):
        rec = CurveRecord(receiver="sfg", point=1.0, metric="p_error", value=0.1)
        assert rec.ci_low is None and rec.ci_high is None


class TestPresets:
    def test_caption_parameters(self):
        for name in ("fig2a", "fig2b", "fig3a", "fig3b"):
            p = PRESETS[name].params
            assert p["kappa_bar"] == 0.01
            assert p["N_B"] == 20.0
            assert p["epsilon"] == 0.01
            assert p["pi0"] == 0.5
        assert PRESETS["fig2a"].params["N_S"] == 1e-4
        assert PRESETS["fig2a"].params["M"] == 10 ** 8.5
        assert PRESETS["fig2b"].params["N_S"] == 1e-2
        assert PRESETS["fig2b"].params["M"] == 10 ** 6.5


class TestRocCommand:
    def test_fig2a_vertex_row(self, tmp_path):
        out = tmp_path / "roc.csv"
        assert run_cli("roc", "--preset", "fig2a", "--out", str(out)) == 0
        _, rows = read_csv(out)
        vertex = [r for r in rows if r["receiver"] == "sfg"
                  and r["point_kind"] == "vertex" and r["threshold"] == "0"]
        assert len(vertex) == 1
        assert float(vertex[0]["p_false_alarm"]) == pytest.approx(2.3020550252356094e-4,
                                                                  rel=1e-12)
        assert float(vertex[0]["p_detect"]) == pytest.approx(0.9399517491329434, rel=1e-12)
        kinds = {r["point_kind"] for r in rows}
        assert kinds == {"vertex", "randomized", "continuous"}

    def test_fig2b_vertex_row(self, tmp_path):
        out = tmp_path / "roc.csv"
        run_cli("roc", "--preset", "fig2b", "--out", str(out))
        _, rows = read_csv(out)
        vertex = [r for r in rows if r["point_kind"] == "vertex" and r["threshold"] == "0"]
        assert float(vertex[0]["p_false_alarm"]) == pytest.approx(2.2507594416123242e-2,
                                                                  rel=1e-12)

    def test_degenerate_point_gives_diagonals(self, tmp_path):
        cfg = tmp_path / "c.json"
        cfg.write_text('{"M": 1, "N_S": 1e-4, "N_B": 20, "kappa_bar": 0.01}')
        out = tmp_path / "roc.csv"
        assert run_cli("roc", "--config", str(cfg), "--out", str(out)) == 0
        _, rows = read_csv(out)
        for r in rows:
            p_f, p_d = float(r["p_false_alarm"]), float(r["p_detect"])
            assert p_d == pytest.approx(p_f, abs=1e-6)

    def test_receiver_filter_and_json(self, tmp_path):
        out = tmp_path / "roc.json"
        assert run_cli("roc", "--preset", "fig2a", "--receivers", "sfg",
                       "--format", "json", "--out", str(out)) == 0
        payload = json.loads(out.read_text())
        assert all(rec["receiver"] == "sfg" for rec in payload)

    def test_unknown_receiver_is_invalid_parameter(self, tmp_path):
        assert run_cli("roc", "--preset", "fig2a", "--receivers", "opa") == 3


class TestBayesSweepCommand:
    def test_fig3a_row_at_log10m_8p5(self, tmp_path):
        out = tmp_path / "sweep.csv"
        assert run_cli("bayes-sweep", "--preset", "fig3a", "--out", str(out)) == 0
        _, rows = read_csv(out)
        row = [r for r in rows if abs(float(r["log10_M"]) - 8.5) < 1e-9][0]
        assert float(row["p_error_sfg"]) == pytest.approx(0.030139228184790062, rel=1e-12)
        assert float(row["p_error_ci"]) == pytest.approx(0.10661078173957317, rel=1e-12)
        assert float(row["p_error_sfg_limit"]) == pytest.approx(0.02974174357598774,
                                                                rel=1e-12)

    def test_fig3b_threshold_jump_marker(self, tmp_path):
        out = tmp_path / "sweep.csv"
        run_cli("bayes-sweep", "--preset", "fig3b", "--out", str(out))
        _, rows = read_csv(out)
        jumps = [r for r in rows if r["threshold_jump"] == "1"]
        assert jumps, "expected the threshold-increment marker inside the preset range"
        first = jumps[0]
        assert first["sfg_threshold"] == "1"
        # the jump happens where the threshold first leaves 0
        earlier = [r for r in rows if float(r["M"]) < float(first["M"])]
        assert all(r["sfg_threshold"] == "0" for r in earlier)

    def test_fig3a_jump_in_range_too(self, tmp_path):
        out = tmp_path / "sweep.csv"
        run_cli("bayes-sweep", "--preset", "fig3a", "--out", str(out))
        _, rows = read_csv(out)
        assert any(r["threshold_jump"] == "1" for r in rows)

    def test_single_point_sweep(self, tmp_path):
        out = tmp_path / "sweep.csv"
        assert run_cli("bayes-sweep", "--preset", "fig3a", "--log10-start", "8.5",
                       "--log10-stop", "8.5", "--points", "1", "--out", str(out)) == 0
        _, rows = read_csv(out)
        assert len(rows) == 1

    def test_asymptotic_blank_below_validity(self, tmp_path):
        out = tmp_path / "sweep.csv"
        run_cli("bayes-sweep", "--preset", "fig3b", "--log10-start", "3",
                "--log10-stop", "5", "--points", "5", "--out", str(out))
        _, rows = read_csv(out)
        assert rows[0]["p_error_ci_asymptotic"] == ""

    def test_byte_identical_reruns(self, tmp_path):
        a, b = tmp_path / "a.csv", tmp_path / "b.csv"
        run_cli("bayes-sweep", "--preset", "fig3a", "--out", str(a))
        run_cli("bayes-sweep", "--preset", "fig3a", "--out", str(b))
        assert a.read_bytes() == b.read_bytes()

    def test_json_long_format(self, tmp_path):
        out = tmp_path / "sweep.json"
        run_cli("bayes-sweep", "--preset", "fig3a", "--points", "3",
                "--format", "json", "--out", str(out))
        payload = json.loads(out.read_text())
        keys = {(r["receiver"], r["point"], r["metric"]) for r in payload}
        assert len(keys) == len(payload)  # one record per (receiver, point, metric)


class TestSnrCommand:
    def test_fig2a_values(self, tmp_path):
        out = tmp_path / "snr.csv"
        assert run_cli("snr", "--preset", "fig2a", "--out", str(out)) == 0
        _, rows = read_csv(out)
        row = rows[0]
        assert float(row["opa_snr_fading"]) == pytest.approx(1.7550250639866717e-10,
                                                             rel=1e-12)
        assert float(row["ci_snr"]) == pytest.approx(0.09967917999913548, rel=1e-12)
        assert float(row["opa_snr_known"]) == pytest.approx(15.811388300841898, rel=1e-12)
        assert float(row["ratio_known_to_fading"]) == pytest.approx(9.009209398369011e10,
                                                                    rel=1e-9)
        assert row["opa_in_window"] == "1"

    def test_fig2b_recomputes(self, tmp_path):
        out = tmp_path / "snr.csv"
        run_cli("snr", "--preset", "fig2b", "--out", str(out))
        _, rows = read_csv(out)
        assert float(rows[0]["opa_gain_minus_one"]) == pytest.approx(5e-3, rel=1e-12)

    def test_near_zero_intensity_collapses_everything(self, tmp_path):
        cfg = tmp_path / "c.json"
        cfg.write_text('{"M": 1e8, "N_S": 1e-4, "N_B": 20, "kappa_bar": 1e-150}')
        out = tmp_path / "snr.csv"
        run_cli("snr", "--config", str(cfg), "--out", str(out))
        _, rows = read_csv(out)
        assert float(rows[0]["opa_snr_fading"]) == pytest.approx(0.0, abs=1e-300)
        assert float(rows[0]["opa_snr_known"]) == pytest.approx(0.0, abs=1e-140)
        assert float(rows[0]["ci_snr"]) == pytest.approx(0.0, abs=1e-140)


class TestExitCodes:
    def test_unreadable_config(self):
        assert run_cli("roc", "--config", "/nonexistent/path.json") == 2

    def test_invalid_parameter_names_field(self, tmp_path, capsys):
        cfg = tmp_path / "c.json"
        cfg.write_text('{"M": -5, "N_S": 1e-4, "N_B": 20, "kappa_bar": 0.01}')
        assert run_cli("roc", "--config", str(cfg)) == 3
        assert "M" in capsys.readouterr().err

    def test_unknown_preset(self):
        assert run_cli("roc", "--preset", "fig9z") == 2


class TestValidateCommand:
    def test_default_run_passes(self, tmp_path):
        out = tmp_path / "report.json"
        assert run_cli("validate", "--trials", "150", "--out", str(out)) == 0
        report = json.loads(out.read_text())
        assert report["all_pass"]
        assert all(c["passed"] for c in report["checks"])

    def test_injected_bad_mean_count_fails_weld(self, tmp_path):
        out = tmp_path / "report.json"
        assert run_cli("validate", "--only", "thermal-weld", "--inject-bad-n0",
                       "--out", str(out)) == 1
        report = json.loads(out.read_text())
        assert not report["all_pass"]

    def test_only_concavity_with_trials(self, tmp_path):
        out = tmp_path / "report.json"
        assert run_cli("validate", "--only", "helstrom-concavity", "--trials", "1000",
                       "--out", str(out)) == 0
        report = json.loads(out.read_text())
        (check,) = report["checks"]
        # measured is -min_slack; the concavity slack never dips below -1e-9
        assert check["measured"] <= 1e-9

    def test_unknown_check_rejected(self):
        assert run_cli("validate", "--only", "nonsense") == 3


class TestOracleCommand:
    def test_npy_states(self, tmp_path):
        r0, r1 = tmp_path / "r0.npy", tmp_path / "r1.npy"
        np.save(r0, thermal_state(0.0, 40).data)
        np.save(r1, thermal_state(1.0, 40, trace_deficit_tol=1e-5).data)
        out = tmp_path / "report.json"
        assert run_cli("oracle", "--rho0", str(r0), "--rho1", str(r1),
                       "--out", str(out)) == 0
        report = json.loads(out.read_text())
        assert report["helstrom_error"] == pytest.approx(0.25, abs=1e-9)
        assert report["qcb_exponent"] == pytest.approx(math.log(2), abs=1e-6)

    def test_json_states(self, tmp_path):
        r0, r1 = tmp_path / "r0.json", tmp_path / "r1.json"
        r0.write_text(json.dumps({"re": [[1.0, 0.0], [0.0, 0.0]]}))
        r1.write_text(json.dumps({"re": [[0.0, 0.0], [0.0, 1.0]]}))
        out = tmp_path / "report.json"
        assert run_cli("oracle", "--rho0", str(r0), "--rho1", str(r1),
                       "--out", str(out)) == 0
        report = json.loads(out.read_text())
        assert report["helstrom_error"] == pytest.approx(0.0, abs=1e-12)

    def test_non_hermitian_rejected(self, tmp_path):
        bad = tmp_path / "bad.json"
        bad.write_text(json.dumps({"re": [[0.5, 0.4], [0.0, 0.5]]}))
        good = tmp_path / "good.json"
        good.write_text(json.dumps({"re": [[0.5, 0.0], [0.0, 0.5]]}))
        assert run_cli("oracle", "--rho0", str(bad), "--rho1", str(good)) == 3

    def test_missing_file(self, tmp_path):
        good = tmp_path / "good.json"
        good.write_text(json.dumps({"re": [[1.0]]}))
        assert run_cli("oracle", "--rho0", str(tmp_path / "no.npy"),
                       "--rho1", str(good)) == 2
