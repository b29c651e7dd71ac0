import json
import math
from pathlib import Path

import pytest

from airsnet.cli import main
from airsnet.config import ConfigError, dbm_to_watts, effective_dict, parse_config
from airsnet.experiments import run_experiment


FAST_VALIDATE = [
    "--set", "validate_m_iu_list=[1,2]",
    "--set", "validate_n_list=[16]",
    "--set", "validate_d_bi_m=[100]",
    "--set", "validate_d_iu_m=[30]",
    "--set", "validate_p_f_w=[0.01]",
    "--set", "n_mc_model=20000",
    "--set", "n_mc_physical=20000",
    "--set", "pf_grid_w=[0.001,0.01,0.1,1.0]",
]


class TestParseConfig:
    def test_empty_file_gives_paper_baseline(self, tmp_path):
        path = tmp_path / "empty.json"
        path.write_text("")
        cfg = parse_config(str(path))
        net = cfg.network
        assert net.alpha == 3.0
        assert net.power.p_t == 1.0
        assert net.geometry.l == 200.0
        assert net.power.sigma2 == pytest.approx(1e-11)
        assert net.power.sigma_f2 == pytest.approx(1e-10)

    def test_dbm_conversion(self, tmp_path):
        path = tmp_path / "c.json"
        path.write_text(json.dumps({"sigma2_dbm": -80}))
        cfg = parse_config(str(path))
        assert cfg.network.power.sigma2 == pytest.approx(1e-11, rel=1e-12)
        assert any("sigma2_dbm" in note for note in cfg.conversions)
        assert dbm_to_watts(-70.0) == pytest.approx(1e-10, rel=1e-12)

    def test_geometry_invariant_violation(self, tmp_path):
        path = tmp_path / "c.json"
        path.write_text(json.dumps({"l_in_m": 150, "l_out_m": 100}))
        with pytest.raises(ConfigError):
            parse_config(str(path))

    def test_unknown_key_rejected(self, tmp_path):
        path = tmp_path / "c.json"
        path.write_text(json.dumps({"banana": 1}))
        with pytest.raises(ConfigError, match="banana"):
            parse_config(str(path))

    def test_watts_and_dbm_conflict(self, tmp_path):
        path = tmp_path / "c.json"
        path.write_text(json.dumps({"sigma2_w": 1e-11, "sigma2_dbm": -80}))
        with pytest.raises(ConfigError, match="not both"):
            parse_config(str(path))

    def test_nonpositive_rejected(self):
        with pytest.raises(ConfigError):
            parse_config(None, ["p_t_w=-1"])

    def test_overrides_apply(self):
        cfg = parse_config(None, ["n_elements=32", "m_iu=2.0"])
        assert cfg.network.geometry.n_elements == 32
        assert cfg.network.m_iu == 2.0

    def test_bad_override_syntax(self):
        with pytest.raises(ConfigError):
            parse_config(None, ["n_elements"])

    def test_density_divisor_check_at_dispatch(self):
        cfg = parse_config(None, ["density_m_list=[5]", "n_total_elements=12"],
                           experiment="density-sweep")
        with pytest.raises(ConfigError, match="valid divisors"):
            run_experiment(cfg)


class TestGlqTable:
    def test_order_one(self, capsys):
        assert main(["glq-table", "--order", "1"]) == 0
        lines = capsys.readouterr().out.strip().splitlines()
        assert lines[0] == "index,node,weight"
        idx, node, weight = lines[1].split(",")
        assert (idx, float(node), float(weight)) == ("1", 1.0, 1.0)

    def test_order_two_nodes(self, capsys):
        assert main(["glq-table", "--order", "2"]) == 0
        lines = capsys.readouterr().out.strip().splitlines()
        nodes = [float(line.split(",")[1]) for line in lines[1:]]
        assert nodes[0] == pytest.approx(2.0 - math.sqrt(2.0), abs=1e-12)
        assert nodes[1] == pytest.approx(2.0 + math.sqrt(2.0), abs=1e-12)

    def test_order_twenty_weights_sum(self, capsys):
        assert main(["glq-table", "--order", "20"]) == 0
        lines = capsys.readouterr().out.strip().splitlines()
        total = sum(float(line.split(",")[2]) for line in lines[1:])
        assert abs(total - 1.0) <= 1e-12

    def test_out_of_range(self, capsys):
        assert main(["glq-table", "--order", "65"]) == 2


class TestDumpDist:
    def test_direct(self, capsys):
        assert main(["dump-dist", "--kind", "direct", "--set", "d_bu_m=100"]) == 0
        obj = json.loads(capsys.readouterr().out)
        assert len(obj) == 1
        assert obj[0]["beta"] == 1.0
        assert obj[0]["xi"] == pytest.approx(1e9, rel=1e-9)

    def test_cascaded(self, capsys):
        assert main(["dump-dist", "--kind", "cascaded"]) == 0
        obj = json.loads(capsys.readouterr().out)
        assert len(obj) == 20
        assert all(set(c) == {"epsilon", "beta", "xi"} for c in obj)


class TestCliRuns:
    def test_validate_outputs_and_exit(self, tmp_path, capsys):
        out = tmp_path / "run"
        code = main(["validate", "--out", str(out), "--seed", "5"] + FAST_VALIDATE)
        # the passive-baseline gap check is a known-red finding, so the
        # validation gate reports failure overall
        assert code == 1
        assert (out / "results.csv").exists()
        assert (out / "summary.json").exists()
        assert (out / "config.echo.json").exists()
        summary = json.loads((out / "summary.json").read_text())
        checks = summary["checks"]
        assert checks["glq_exactness"]["passed"]
        assert checks["closed_vs_quadrature"]["passed"]
        assert checks["model_mc_agreement"]["passed"]
        assert checks["physical_gap_shrinks"]["passed"]
        assert checks["budget_shape"]["passed"]
        assert not checks["passive_baseline"]["gap_shrinks"]
        assert checks["passive_baseline"]["quadrupling_exact"]

    def test_byte_identical_rerun(self, tmp_path):
        args = ["mean-snr-vs-pf", "--seed", "9", "--set", "n_mc_model=5000",
                "--set", "pf_grid_w=[0.001,0.01,0.1]"]
        out1, out2 = tmp_path / "a", tmp_path / "b"
        assert main(args + ["--out", str(out1)]) == 0
        assert main(args + ["--out", str(out2)]) == 0
        assert (out1 / "results.csv").read_bytes() == (out2 / "results.csv").read_bytes()
        assert (out1 / "config.echo.json").read_bytes() == (out2 / "config.echo.json").read_bytes()

    def test_thread_count_does_not_change_bytes(self, tmp_path):
        base = ["density-sweep", "--seed", "3",
                "--set", "n_total_elements=32",
                "--set", "density_m_list=[1,2,4]",
                "--set", "sweep_n_drops=6", "--set", "sweep_n_fading=2",
                "--set", "k_ues=8"]
        out1, out2 = tmp_path / "t1", tmp_path / "t2"
        assert main(base + ["--threads", "1", "--out", str(out1)]) == 0
        assert main(base + ["--threads", "3", "--out", str(out2)]) == 0
        assert (out1 / "results.csv").read_bytes() == (out2 / "results.csv").read_bytes()

    def test_echo_round_trip(self, tmp_path):
        out1 = tmp_path / "r1"
        assert main(["mean-snr-vs-pf", "--seed", "21", "--out", str(out1),
                     "--set", "n_mc_model=5000",
                     "--set", "pf_grid_w=[0.01,0.1]"]) == 0
        out2 = tmp_path / "r2"
        assert main(["mean-snr-vs-pf", "--config", str(out1 / "config.echo.json"),
                     "--out", str(out2)]) == 0
        assert (out1 / "results.csv").read_bytes() == (out2 / "results.csv").read_bytes()

    def test_csv_schema(self, tmp_path):
        out = tmp_path / "r"
        assert main(["mean-snr-vs-pf", "--out", str(out), "--set", "n_mc_model=2000",
                     "--set", "pf_grid_w=[0.01,0.1]"]) == 0
        text = (out / "results.csv").read_text(encoding="utf-8")
        lines = text.splitlines()
        assert lines[0] == "experiment,swept_name,swept_value,metric,method,value,std_error"
        assert all(len(line.split(",")) == 7 for line in lines[1:])
        assert "\r" not in text

    def test_association_compare_smoke(self, tmp_path):
        out = tmp_path / "assoc"
        code = main(["association-compare", "--out", str(out), "--seed", "2",
                     "--set", "assoc_n_list=[16]", "--set", "assoc_n_drops=30",
                     "--set", "k_ues=10"])
        assert code == 0
        summary = json.loads((out / "summary.json").read_text())
        assert "n16" in summary
        assert summary["n16"]["ratio_nearest_over_best"] > 0.5

    def test_ring_sweep_smoke(self, tmp_path):
        out = tmp_path / "ring"
        code = main(["ring-sweep", "--out", str(out),
                     "--set", "ring_l_in_grid_m=[100]",
                     "--set", "ring_l_out_grid_m=[130]",
                     "--set", "ring_metric=achievable_rate"])
        assert code == 0
        summary = json.loads((out / "summary.json").read_text())
        assert summary["best_l_in"] == 100.0

    def test_bad_config_exit_code(self, tmp_path):
        bad = tmp_path / "bad.json"
        bad.write_text(json.dumps({"l_in_m": -5}))
        assert main(["validate", "--config", str(bad), "--out", str(tmp_path / "x")]) == 2


class TestMeanSnrVsPfShape:
    def test_increasing_with_decreasing_slopes(self, tmp_path):
        cfg = parse_config(None, ["n_mc_model=2000"], experiment="mean-snr-vs-pf")
        rows, summary, code = run_experiment(cfg)
        assert code == 0
        assert summary["strictly_increasing"]
        assert summary["slopes_strictly_decreasing"]

    def test_effective_dict_round_trips_through_json(self):
        cfg = parse_config(None, ["sigma2_dbm=-80"])
        d = effective_dict(cfg)
        blob = json.dumps(d)
        assert json.loads(blob) == d
