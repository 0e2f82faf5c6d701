import json
from pathlib import Path

import pytest

import beamshadow as bs
from beamshadow.distortion import DistortionSpec, FingerSpec
from beamshadow.experiment import (
    ExperimentConfig,
    config_from_dict,
    config_from_yaml,
    config_to_yaml,
    default_config,
    default_scenarios,
    resolve_workers,
    run_experiment,
)


def tiny_config(n_scenarios=1, **overrides):
    scen = {
        "grip-a": DistortionSpec(
            mode="combined",
            fingers=(FingerSpec(90.0, 255.0, 40.0, 12.0),),
            phase_std_deg=35.0,
            amp_std_db=1.0,
            corr_length_deg=20.0,
            seed=21,
        ),
        "grip-b": DistortionSpec(
            mode="phase-screen",
            phase_std_deg=50.0,
            amp_std_db=1.5,
            corr_length_deg=15.0,
            seed=22,
        ),
    }
    names = list(scen)[:n_scenarios]
    kwargs = dict(
        theta_step_deg=15.0,
        phi_step_deg=15.0,
        b_values=(2,),
        scenarios={k: scen[k] for k in names},
    )
    kwargs.update(overrides)
    return ExperimentConfig(**kwargs)


def all_files(root):
    return sorted(p.relative_to(root) for p in Path(root).rglob("*") if p.is_file())


class TestScenarioCatalogue:
    def test_default_scenarios(self):
        scen = default_scenarios()
        assert set(scen) == {
            "tight-grip-one-finger",
            "tight-grip-two-finger",
            "loose-grip-one-finger",
            "loose-grip-two-finger",
        }
        for spec in scen.values():
            assert spec.mode == "combined"
        # tight grips press harder than loose ones
        assert (
            scen["tight-grip-one-finger"].fingers[0].depth_db
            > scen["loose-grip-one-finger"].fingers[0].depth_db
        )
        assert len(scen["tight-grip-two-finger"].fingers) == 2

    def test_default_config_uses_them(self):
        cfg = default_config()
        assert set(cfg.scenarios) == set(default_scenarios())
        assert cfg.b_values == (2, 3)


class TestConfigValidation:
    def test_scenario_names_must_be_path_safe(self):
        with pytest.raises(ValueError, match="directory name"):
            tiny_config(scenarios={"bad name!": DistortionSpec(mode="identity")})

    def test_b_values_required(self):
        with pytest.raises(ValueError, match="b_values"):
            tiny_config(b_values=())

    def test_needs_scenarios(self):
        with pytest.raises(ValueError, match="scenario"):
            tiny_config(scenarios={})

    def test_unknown_top_level_key_rejected(self):
        data = tiny_config().to_dict()
        data["zap"] = 1
        with pytest.raises(ValueError, match="zap"):
            config_from_dict(data)

    def test_unknown_nested_keys_rejected(self):
        data = tiny_config().to_dict()
        data["array"]["zap"] = 1
        with pytest.raises(ValueError, match="zap"):
            config_from_dict(data)
        data = tiny_config().to_dict()
        data["scenarios"]["grip-a"]["zap"] = 1
        with pytest.raises(ValueError, match="zap"):
            config_from_dict(data)

    def test_null_only_for_nullable_keys(self):
        data = tiny_config().to_dict()
        data["seed"] = None
        data["n_beams"] = None
        config_from_dict(data)  # fine
        data["g1_db"] = None
        with pytest.raises(ValueError, match="g1_db"):
            config_from_dict(data)


class TestConfigSerialization:
    def test_dict_round_trip(self):
        cfg = tiny_config(2, seed=9, n_beams=8)
        assert config_from_dict(cfg.to_dict()) == cfg

    def test_yaml_round_trip(self, tmp_path):
        cfg = tiny_config(2)
        path = tmp_path / "cfg.yaml"
        config_to_yaml(cfg, path)
        assert config_from_yaml(path) == cfg

    def test_yaml_of_default_config_round_trips(self, tmp_path):
        cfg = default_config()
        path = tmp_path / "cfg.yaml"
        config_to_yaml(cfg, path)
        assert config_from_yaml(path) == cfg


class TestResolveWorkers:
    def test_explicit_argument_wins(self, monkeypatch):
        monkeypatch.setenv("BEAMSHADOW_THREADS", "7")
        assert resolve_workers(3) == 3

    def test_env_variable(self, monkeypatch):
        monkeypatch.setenv("BEAMSHADOW_THREADS", "2")
        assert resolve_workers() == 2

    def test_default_is_bounded(self, monkeypatch):
        monkeypatch.delenv("BEAMSHADOW_THREADS", raising=False)
        assert 1 <= resolve_workers() <= 4


@pytest.fixture(scope="module")
def run_dir(tmp_path_factory):
    out = tmp_path_factory.mktemp("run")
    report = run_experiment(tiny_config(2), out)
    return out, report


class TestRunExperiment:
    def test_expected_files_exist(self, run_dir):
        out, _ = run_dir
        names = {str(p) for p in all_files(out)}
        assert "report.json" in names
        assert "free.field" in names
        for scen in ("grip-a", "grip-b"):
            assert f"{scen}/blocked.field" in names
            assert f"{scen}/distortion.dist" in names
            assert f"{scen}/gain_map_mrc.csv" in names
            assert f"{scen}/gain_map_directional.csv" in names
            assert f"{scen}/gain_map_enh_phase_b2.csv" in names
            assert f"{scen}/gain_map_enh_phase_amp_b2.csv" in names
            assert f"{scen}/coverage.csv" in names
            assert f"{scen}/cdf_optimal_gain_blocked_dbi.csv" in names

    def test_report_structure(self, run_dir):
        out, _ = run_dir
        data = json.loads((out / "report.json").read_text())
        assert data["format"] == "beamshadow-report v1"
        assert data["roi"]["area_fraction"] == pytest.approx(210.0 / 360.0, abs=1e-12)
        assert data["grid"] == {
            "n_theta": 12,
            "n_phi": 24,
            "theta_step_deg": 15.0,
            "phi_step_deg": 15.0,
        }
        assert set(data["scenarios"]) == {"grip-a", "grip-b"}

    def test_improvement_plus_gap_closes_to_loss(self, run_dir):
        out, _ = run_dir
        data = json.loads((out / "report.json").read_text())
        for scen in data["scenarios"].values():
            assert scen["consistency_max_abs_residual_db"] <= 1e-9

    def test_sample_counts_cover_the_roi(self, run_dir):
        out, _ = run_dir
        data = json.loads((out / "report.json").read_text())
        n_roi = data["roi"]["n_directions"]
        for scen in data["scenarios"].values():
            for cdf in scen["beamforming_cdfs_db"].values():
                assert cdf["unweighted"]["n_samples"] == n_roi

    def test_percentile_keys_are_stable_strings(self, run_dir):
        out, _ = run_dir
        data = json.loads((out / "report.json").read_text())
        cdf = data["scenarios"]["grip-a"]["beamforming_cdfs_db"]["optimal_gain_blocked_dbi"]
        assert set(cdf["unweighted"]["percentiles"]) == {"10.0", "50.0", "80.0", "90.0"}

    def test_phase_mixing_section(self, run_dir):
        out, _ = run_dir
        data = json.loads((out / "report.json").read_text())
        mixing = data["scenarios"]["grip-a"]["phase_mixing_deg_per_5deg"]
        assert set(mixing) == {"free", "blocked"}
        assert set(mixing["free"]) == {"0-1", "0-2", "0-3", "1-2", "1-3", "2-3"}

    def test_rerun_is_byte_identical(self, run_dir, tmp_path):
        out, _ = run_dir
        again = tmp_path / "again"
        run_experiment(tiny_config(2), again)
        assert all_files(out) == all_files(again)
        for rel in all_files(out):
            assert (out / rel).read_bytes() == (again / rel).read_bytes(), rel

    def test_threaded_run_is_byte_identical(self, run_dir, tmp_path, monkeypatch):
        out, _ = run_dir
        monkeypatch.setenv("BEAMSHADOW_THREADS", "2")
        threaded = tmp_path / "threaded"
        run_experiment(tiny_config(2), threaded)
        for rel in all_files(out):
            assert (out / rel).read_bytes() == (threaded / rel).read_bytes(), rel


class TestSeedOverride:
    def test_override_shifts_scenario_seeds(self, tmp_path):
        out = tmp_path / "seeded"
        run_experiment(tiny_config(2), out, seed=7)
        data = json.loads((out / "report.json").read_text())
        assert data["effective_seed"] == 7
        seeds = [data["scenarios"][n]["seed"] for n in ("grip-a", "grip-b")]
        assert seeds == [7 * 1009, 7 * 1009 + 1]

    def test_no_override_keeps_scenario_seeds(self, tmp_path):
        out = tmp_path / "plain"
        run_experiment(tiny_config(2), out)
        data = json.loads((out / "report.json").read_text())
        assert data["scenarios"]["grip-a"]["seed"] == 21
        assert data["scenarios"]["grip-b"]["seed"] == 22

    def test_different_seeds_change_results(self, tmp_path):
        a = tmp_path / "a"
        b = tmp_path / "b"
        run_experiment(tiny_config(1), a, seed=1)
        run_experiment(tiny_config(1), b, seed=2)
        assert (a / "grip-a/blocked.field").read_bytes() != (
            b / "grip-a/blocked.field"
        ).read_bytes()
