import numpy as np
import pytest

from immwind import ConfigError, load_config, parse_config, format_config
from immwind.cli import main
from immwind.config import ExperimentConfig


class TestParsing:
    def test_defaults_round_trip(self):
        cfg = ExperimentConfig()
        assert parse_config(format_config(cfg)) == cfg

    def test_custom_round_trip(self):
        cfg = ExperimentConfig(
            scenario="above",
            v_op=14.5,
            seeds=(3, 1, 4),
            q_wind_std=0.123,
            mu0=(0.5, 0.25, 0.25),
            out_dir="results",
        )
        assert parse_config(format_config(cfg)) == cfg

    def test_comments_and_blank_lines(self):
        cfg = parse_config("# a comment\n\nscenario = above  # trailing\n")
        assert cfg.scenario == "above"

    def test_unknown_key_is_error(self):
        with pytest.raises(ConfigError, match="unknown key"):
            parse_config("not_a_key = 3\n")

    def test_duplicate_key_is_error(self):
        with pytest.raises(ConfigError, match="duplicate"):
            parse_config("dt = 0.05\ndt = 0.02\n")

    def test_bad_number_reports_line(self):
        with pytest.raises(ConfigError, match="line 2"):
            parse_config("scenario = below\ndt = fast\n")

    def test_missing_equals(self):
        with pytest.raises(ConfigError, match="key = value"):
            parse_config("just some words\n")

    def test_mu0_needs_three_entries(self):
        with pytest.raises(ConfigError, match="mu0"):
            parse_config("mu0 = 0.5,0.5\n")

    def test_auto_values(self):
        cfg = parse_config("v_op = auto\nq_wind_std = auto\n")
        assert cfg.v_op is None
        assert cfg.q_wind_std is None


class TestValidation:
    def test_default_config_is_valid(self):
        ExperimentConfig().validate()

    @pytest.mark.parametrize(
        "overrides, fragment",
        [
            (dict(scenario="sideways"), "scenario"),
            (dict(turbulence_intensity=0.9), "turbulence_intensity"),
            (dict(seeds=()), "seed"),
            (dict(schedule="sine"), "schedule"),
            (dict(pi_stay=1.5), "pi_stay"),
            (dict(mu0=(0.9, 0.2, 0.2)), "mu0"),
            (dict(r_std=0.0), "r_std"),
            (dict(settle_s=700.0), "settle_s"),
            (dict(hist_bins=0), "hist_bins"),
            (dict(dt=0.5), "dt"),
            (dict(tau_rated=-1.0), "tau_rated"),
            (dict(delta_cp=-0.1), "delta_cp"),
        ],
    )
    def test_violations_reported(self, overrides, fragment):
        with pytest.raises(ConfigError, match=fragment):
            ExperimentConfig(**overrides).validate()

    def test_scenario_defaults(self):
        assert ExperimentConfig(scenario="below").effective_v_op() == 8.0
        assert ExperimentConfig(scenario="above").effective_v_op() == 15.0
        assert ExperimentConfig(scenario="above", v_op=12.0).effective_v_op() == 12.0

    def test_auto_wind_noise_scales_with_scenario(self):
        q_below = ExperimentConfig(scenario="below").effective_q_wind_std()
        q_above = ExperimentConfig(scenario="above").effective_q_wind_std()
        assert q_above == pytest.approx(q_below * 15.0 / 8.0, rel=1e-12)
        assert ExperimentConfig(turbulence_intensity=0.0).effective_q_wind_std() > 0.0

    def test_transition_matrix(self):
        pi = ExperimentConfig(pi_stay=0.99).transition()
        np.testing.assert_allclose(pi.sum(axis=1), np.ones(3), atol=1e-15)
        assert pi[0, 0] == 0.99


class TestSurfaceSelection:
    def test_builtin_choices(self):
        from immwind import AnalyticCpSurface, GridCpSurface

        assert isinstance(ExperimentConfig(cp_table="builtin-grid").surface(), GridCpSurface)
        assert isinstance(
            ExperimentConfig(cp_table="builtin-analytic").surface(), AnalyticCpSurface
        )

    def test_csv_path(self, tmp_path):
        from immwind import default_grid_surface

        path = tmp_path / "table.csv"
        default_grid_surface().to_csv(path)
        surf = ExperimentConfig(cp_table=str(path)).surface()
        assert surf.evaluate(8.0, 0.0) == pytest.approx(
            default_grid_surface().evaluate(8.0, 0.0), rel=1e-12
        )

    def test_missing_file(self):
        with pytest.raises(ConfigError, match="not found"):
            ExperimentConfig(cp_table="/nonexistent/table.csv").surface()


def write_tiny_config(path, **overrides):
    cfg = ExperimentConfig(duration_s=40.0, seeds=(1,), settle_s=10.0, **overrides)
    path.write_text(format_config(cfg), encoding="utf-8")
    return cfg


class TestCli:
    def test_validate_ok(self, tmp_path, capsys):
        cfg_path = tmp_path / "exp.cfg"
        write_tiny_config(cfg_path)
        assert main(["validate", "--config", str(cfg_path)]) == 0
        assert "OK" in capsys.readouterr().out

    def test_validate_rejects_bad_config(self, tmp_path, capsys):
        cfg_path = tmp_path / "exp.cfg"
        cfg_path.write_text("pi_stay = 1.7\n", encoding="utf-8")
        assert main(["validate", "--config", str(cfg_path)]) == 1
        assert "pi_stay" in capsys.readouterr().err

    def test_validate_rejects_unknown_key(self, tmp_path, capsys):
        cfg_path = tmp_path / "exp.cfg"
        cfg_path.write_text("mystery = 1\n", encoding="utf-8")
        assert main(["validate", "--config", str(cfg_path)]) == 1

    def test_missing_config_file(self, tmp_path, capsys):
        assert main(["run", "--config", str(tmp_path / "nope.cfg")]) == 1

    def test_run_writes_outputs(self, tmp_path, capsys):
        cfg_path = tmp_path / "exp.cfg"
        write_tiny_config(cfg_path, out_dir=str(tmp_path / "out"))
        assert main(["run", "--config", str(cfg_path)]) == 0
        out = tmp_path / "out"
        for name in ("summary.csv", "timeseries_1.csv", "hist_1.csv", "config_echo.txt"):
            assert (out / name).exists()

    def test_run_overrides(self, tmp_path):
        cfg_path = tmp_path / "exp.cfg"
        write_tiny_config(cfg_path, out_dir=str(tmp_path / "ignored"))
        out = tmp_path / "ovr"
        code = main(
            ["run", "--config", str(cfg_path), "--seed", "5", "--seed", "6",
             "--out", str(out), "--scenario", "above", "--schedule", "walk",
             "--delta-cp", "0.02"]
        )
        assert code == 0
        assert (out / "timeseries_5.csv").exists()
        assert (out / "timeseries_6.csv").exists()
        echoed = load_config(out / "config_echo.txt")
        assert echoed.scenario == "above"
        assert echoed.schedule == "walk"
        assert echoed.delta_cp == 0.02
        assert echoed.seeds == (5, 6)

    def test_sweep_creates_per_delta_dirs(self, tmp_path):
        cfg_path = tmp_path / "exp.cfg"
        write_tiny_config(cfg_path, out_dir=str(tmp_path / "sweep"))
        code = main(["sweep", "--config", str(cfg_path), "--delta-cp-list", "0.02,0.04"])
        assert code == 0
        assert (tmp_path / "sweep" / "delta_cp_0.02" / "summary.csv").exists()
        assert (tmp_path / "sweep" / "delta_cp_0.04" / "summary.csv").exists()

    def test_sweep_rejects_bad_list(self, tmp_path, capsys):
        cfg_path = tmp_path / "exp.cfg"
        write_tiny_config(cfg_path)
        assert main(["sweep", "--config", str(cfg_path), "--delta-cp-list", "a,b"]) == 1
