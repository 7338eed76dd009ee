"""Tests for config loading, unit resolution, curve assembly, scenario
execution, manifests, and sweeps."""

import json
import math
import warnings

import numpy as np
import pytest

from entbath.liouvillian import term_audit
from entbath.scenarios import (
    BOLTZMANN_HZ_PER_K,
    ConfigError,
    ScenarioConfig,
    bundled_config_path,
    check_scenario,
    late_time_negativity,
    load_config,
    plan_curves,
    run_scenario,
    sweep_scenario,
)

UNIT_TOL = 1e-12
PREPARATION_TOL = 1e-12

TINY_HORIZON = 2.0e5
TINY_STRIDE = 5.0e4


def dressed_raw(scenario="fig3_nondegenerate", **extra):
    """A small unit-anchored config for the filtered-machine scenarios."""
    raw = {
        "scenario": scenario,
        "system": {
            "ancilla_frequency": "10 GHz",
            "resonator_frequencies": ["5 MHz", "2.5 MHz"],
            "alpha": 0.2,
        },
        "baths": {
            "hot": {
                "temperature": "300 K",
                "coupling": "500 kHz",
                "filter_center": "9.9925 GHz",
                "filter_width": "500 kHz",
            },
            "cold": {
                "temperature": "65 mK",
                "coupling": "500 kHz",
                "filter_center": "10 GHz",
                "filter_width": "500 kHz",
            },
            "local1": {"temperature": "0.1 K", "coupling": "100 Hz"},
            "local2": {"temperature": "0.1 K", "coupling": "100 Hz"},
        },
        "initial": {"kind": "ground"},
        "truncation": 3,
        "horizon": TINY_HORIZON,
        "stride": TINY_STRIDE,
        "tolerance": 1.0e-8,
        "output_dir": "unused",
    }
    raw.update(extra)
    return raw


def fig2_raw(**extra):
    raw = {
        "scenario": "fig2_comparison",
        "system": {
            "ancilla_frequency": 1.0,
            "resonator_frequencies": [1.0, 1.0],
            "alpha": 0.2,
        },
        "machine_rates": {"dent": 0.1, "arenz_c": 0.1, "arenz_d": 0.1},
        "initial": {"kind": "ground"},
        "truncation": 4,
        "horizon": 2 * math.pi,
        "stride": math.pi / 10,
        "output_dir": "unused",
    }
    raw.update(extra)
    return raw


class TestUnitResolution:
    def test_frequencies_scale_by_the_ancilla_anchor(self):
        config = load_config(dressed_raw())
        assert config.system.omega_a == 1.0
        assert config.ancilla_frequency_hz == 10e9
        assert config.system.omega == pytest.approx((5e-4, 2.5e-4), rel=UNIT_TOL)
        assert config.baths.hot.coupling == pytest.approx(5e-5, rel=UNIT_TOL)
        assert config.baths.hot.filter.center == pytest.approx(0.99925, rel=UNIT_TOL)
        assert config.baths.local1.coupling == pytest.approx(1e-8, rel=UNIT_TOL)

    def test_temperatures_use_exact_boltzmann_over_planck(self):
        assert BOLTZMANN_HZ_PER_K == pytest.approx(2.0836619e10, rel=1e-7)
        config = load_config(dressed_raw())
        expected_300k = 300.0 * BOLTZMANN_HZ_PER_K / 10e9
        assert config.baths.hot.temperature == pytest.approx(
            expected_300k, rel=UNIT_TOL
        )
        assert config.baths.cold.temperature == pytest.approx(
            0.065 * BOLTZMANN_HZ_PER_K / 10e9, rel=UNIT_TOL
        )

    def test_bare_numbers_pass_through_unchanged(self):
        config = load_config(fig2_raw())
        assert config.system.omega == (1.0, 1.0)
        assert config.machine_rates["dent"] == 0.1

    def test_unit_suffix_without_anchor_is_rejected(self):
        raw = fig2_raw()
        raw["machine_rates"]["dent"] = "1 kHz"
        with pytest.raises(ConfigError, match="ancilla frequency"):
            load_config(raw)

    def test_unknown_unit_is_rejected(self):
        raw = dressed_raw()
        raw["baths"]["hot"]["temperature"] = "300 parsec"
        with pytest.raises(ConfigError, match="unknown temperature unit"):
            load_config(raw)

    def test_malformed_quantity_is_rejected_with_path(self):
        raw = dressed_raw()
        raw["system"]["resonator_frequencies"][0] = "five MHz"
        with pytest.raises(ConfigError, match=r"resonator_frequencies\[0\]"):
            load_config(raw)


class TestValidation:
    def test_unknown_top_level_key(self):
        with pytest.raises(ConfigError, match="unknown key.*'mystery'"):
            load_config(dressed_raw(mystery=1))

    def test_unknown_scenario(self):
        with pytest.raises(ConfigError, match="scenario"):
            load_config(dressed_raw(scenario="fig99"))

    def test_missing_baths_for_dressed_scenario(self):
        raw = dressed_raw()
        del raw["baths"]
        with pytest.raises(ConfigError, match="baths"):
            load_config(raw)

    def test_fig2_requires_machine_rates(self):
        raw = fig2_raw()
        del raw["machine_rates"]
        with pytest.raises(ConfigError, match="machine_rates"):
            load_config(raw)

    def test_hot_cold_baths_require_filters(self):
        raw = dressed_raw()
        del raw["baths"]["hot"]["filter_center"]
        del raw["baths"]["hot"]["filter_width"]
        with pytest.raises(ConfigError, match="baths.hot"):
            load_config(raw)

    def test_truncation_floor(self):
        with pytest.raises(ConfigError, match="at least 3"):
            load_config(dressed_raw(truncation=2))

    def test_stride_cannot_exceed_horizon(self):
        with pytest.raises(ConfigError, match="stride"):
            load_config(dressed_raw(stride=2 * TINY_HORIZON))

    def test_record_window_must_fit_horizon(self):
        raw = dressed_raw(
            record_windows=[
                {"start": 0.0, "stop": 2 * TINY_HORIZON, "stride": 1e4}
            ]
        )
        with pytest.raises(ConfigError, match=r"record_windows\[0\]"):
            load_config(raw)

    def test_family_keys_are_scenario_specific(self):
        with pytest.raises(ConfigError, match="thermal_occupations"):
            load_config(dressed_raw(thermal_occupations=[1.0]))
        raw = fig2_raw(hot_temperatures=[1.0])
        with pytest.raises(ConfigError, match="hot_temperatures"):
            load_config(raw)

    def test_thermal_start_requires_occupations(self):
        raw = dressed_raw()
        raw["initial"] = {"kind": "thermal"}
        with pytest.raises(ConfigError, match="occupations"):
            load_config(raw)

    def test_json_syntax_error_reports_line_and_column(self, tmp_path):
        path = tmp_path / "broken.json"
        path.write_text('{\n  "scenario": oops\n}\n')
        with pytest.raises(ConfigError, match=r"broken\.json:2:15"):
            load_config(path)

    def test_temperature_hierarchy_violation_warns_but_loads(self):
        raw = dressed_raw()
        raw["baths"]["local1"]["temperature"] = "0.05 K"
        raw["baths"]["local2"]["temperature"] = "0.05 K"
        with pytest.warns(UserWarning, match="T_h > T_i > T_c"):
            config = load_config(raw)
        assert config.warnings
        assert isinstance(config, ScenarioConfig)

    def test_well_ordered_temperatures_do_not_warn(self):
        with warnings.catch_warnings():
            warnings.simplefilter("error")
            load_config(dressed_raw())


class TestOverrides:
    def test_dotted_override_reaches_nested_entries(self):
        config = load_config(
            dressed_raw(), overrides=("baths.hot.temperature=70 K", "truncation=4")
        )
        assert config.truncation == 4
        assert config.baths.hot.temperature == pytest.approx(
            70.0 * BOLTZMANN_HZ_PER_K / 10e9, rel=UNIT_TOL
        )

    def test_override_values_parse_as_json(self):
        config = load_config(
            dressed_raw(), overrides=('hot_temperatures=["1 K"]',)
        )
        assert config.hot_temperatures == pytest.approx(
            (BOLTZMANN_HZ_PER_K / 10e9,), rel=UNIT_TOL
        )

    def test_override_path_must_exist(self):
        with pytest.raises(ConfigError, match="no such config entry"):
            load_config(dressed_raw(), overrides=("baths.warm.temperature=1",))

    def test_override_requires_key_value_form(self):
        with pytest.raises(ConfigError, match="key=value"):
            load_config(dressed_raw(), overrides=("truncation",))


class TestCurveAssembly:
    def test_fig3_builds_one_curve_per_hot_temperature(self):
        config = load_config(dressed_raw(hot_temperatures=["1 K", "300 K"]))
        plans = plan_curves(config)
        assert [p.label for p in plans] == ["Th_1K", "Th_300K"]
        hot_rates = [
            [t for t in term_audit(p.liouvillian) if t["bath"] == "hot"]
            for p in plans
        ]
        absorb_1k = next(t["rate"] for t in hot_rates[0] if t["frequency"] < 0)
        absorb_300k = next(t["rate"] for t in hot_rates[1] if t["frequency"] < 0)
        assert absorb_300k > absorb_1k

    def test_fig5_prepares_thermal_resonators_in_the_local_frame(self):
        raw = dressed_raw(
            scenario="fig5_thermal", thermal_occupations=[1.0, 2.0], truncation=8
        )
        raw["initial"] = {"kind": "thermal", "occupations": [1.0, 1.0]}
        config = load_config(raw)
        plans = plan_curves(config)
        assert [p.label for p in plans] == ["nbar_1", "nbar_2"]
        for plan, nbar in zip(plans, (1.0, 2.0)):
            en, n1, n2, _ = plan.observer(0.0, plan.initial_state.matrix)
            truncated = sum(
                k * (nbar / (1 + nbar)) ** k for k in range(8)
            ) / sum((nbar / (1 + nbar)) ** k for k in range(8))
            assert n1 == pytest.approx(truncated, abs=1e-6)
            assert n2 == pytest.approx(truncated, abs=1e-6)
            assert en == pytest.approx(0.0, abs=PREPARATION_TOL)

    def test_fig2_attaches_the_free_hamiltonian_to_both_machines(self):
        config = load_config(fig2_raw())
        plans = plan_curves(config)
        assert [p.label for p in plans] == ["dent", "arenz"]
        for plan in plans:
            assert plan.liouvillian.hamiltonian is not None
            rho = plan.initial_state.matrix
            drho = plan.liouvillian.apply(rho)
            assert np.trace(drho) == pytest.approx(0.0, abs=1e-14)

    def test_fig2_ground_start_is_vacuum(self):
        config = load_config(fig2_raw())
        plan = plan_curves(config)[0]
        rho = plan.initial_state.matrix
        assert rho[0, 0] == pytest.approx(1.0, abs=PREPARATION_TOL)
        assert np.sum(np.abs(rho)) == pytest.approx(1.0, abs=PREPARATION_TOL)

    def test_custom_sweep_picks_builder_from_frequency_pattern(self):
        nondeg = load_config(dressed_raw(scenario="custom_sweep"))
        deg_raw = dressed_raw(scenario="custom_sweep")
        deg_raw["system"]["resonator_frequencies"] = ["5 MHz", "5 MHz"]
        deg_raw["baths"]["hot"]["filter_center"] = "9.99 GHz"
        deg = load_config(deg_raw)
        labels_nondeg = {t["label"] for t in term_audit(plan_curves(nondeg)[0].liouvillian)}
        labels_deg = {t["label"] for t in term_audit(plan_curves(deg)[0].liouvillian)}
        assert labels_nondeg != labels_deg

    def test_dressed_start_differs_from_local_start(self):
        config = load_config(dressed_raw(hot_temperatures=None))
        plan = plan_curves(config)[0]
        rho = plan.initial_state.matrix
        population = float(np.max(np.diag(rho).real))
        assert 0.9 < population < 1.0
        assert np.trace(rho).real == pytest.approx(1.0, abs=1e-12)
        off_block = np.abs(rho - np.diag(np.diag(rho))).max()
        assert off_block > 0  # dressing correlates ancilla and resonators


@pytest.fixture(scope="module")
def tiny_run(tmp_path_factory):
    out = tmp_path_factory.mktemp("tiny_fig3")
    config = load_config(dressed_raw(hot_temperatures=["1 K", "300 K"]))
    return run_scenario(config, out_dir=out)


class TestRunAndManifest:
    def test_outputs_exist_and_follow_schema(self, tiny_run):
        for filename in ("Th_1K.csv", "Th_300K.csv", "manifest.json"):
            assert (tiny_run.output_dir / filename).is_file()
        header = (tiny_run.output_dir / "Th_1K.csv").read_text().splitlines()[0]
        assert header == "t,EN,n1,n2,na,trace_err,min_eig"

    def test_manifest_echoes_units_and_rates(self, tiny_run):
        manifest = json.loads((tiny_run.output_dir / "manifest.json").read_text())
        assert manifest["resolved"]["ancilla_frequency_hz"] == 10e9
        assert manifest["resolved"]["baths"]["hot"]["filter_center"] == pytest.approx(
            0.99925
        )
        assert manifest["integrator"]["method"] == "RK45"
        assert set(manifest["term_audit"]) == {"Th_1K", "Th_300K"}
        assert manifest["effective_rates"]["Th_300K"]["dominance"]["dominant"] is True

    def test_manifest_reruns_bit_identically(self, tiny_run, tmp_path):
        rerun = run_scenario(
            load_config(tiny_run.output_dir / "manifest.json"), out_dir=tmp_path
        )
        for filename in ("Th_1K.csv", "Th_300K.csv"):
            assert (tmp_path / filename).read_bytes() == (
                tiny_run.output_dir / filename
            ).read_bytes()

    def test_trace_and_positivity_stay_within_limits(self, tiny_run):
        data = np.genfromtxt(
            tiny_run.output_dir / "Th_300K.csv", delimiter=",", names=True
        )
        assert np.max(np.abs(data["trace_err"])) < 1e-8
        assert np.min(data["min_eig"]) > -1e-6

    def test_record_windows_merge_into_the_grid(self, tmp_path):
        raw = dressed_raw(
            hot_temperatures=None,
            record_windows=[{"start": 1.0e5, "stop": 1.2e5, "stride": 5.0e3}],
        )
        result = run_scenario(load_config(raw), out_dir=tmp_path)
        times = result.trajectories["Th_300K"].times
        base = np.arange(0, TINY_HORIZON + TINY_STRIDE / 2, TINY_STRIDE)
        window = 1.0e5 + 5.0e3 * np.arange(5)
        expected = np.unique(np.concatenate([base, window]))
        assert times == pytest.approx(expected)

    def test_truncation_override_is_folded_into_manifest(self, tmp_path):
        config = load_config(dressed_raw(hot_temperatures=None))
        result = run_scenario(config, out_dir=tmp_path, truncation=4)
        manifest = json.loads((result.output_dir / "manifest.json").read_text())
        assert manifest["config"]["truncation"] == 4
        assert manifest["resolved"]["truncation"] == 4

    def test_check_reports_terms_without_integrating(self):
        config = load_config(dressed_raw(hot_temperatures=["1 K"]))
        report = check_scenario(config)
        assert report["scenario"] == "fig3_nondegenerate"
        terms = report["curves"]["Th_1K"]["terms"]
        assert any(t["bath"] == "hot" for t in terms)
        assert report["curves"]["Th_1K"]["initial_trace_error"] < 1e-12


class TestSweep:
    def test_alpha_sweep_rows_are_input_ordered(self, tmp_path):
        config = load_config(dressed_raw(scenario="custom_sweep"))
        result = sweep_scenario(config, "alpha", [0.2, 0.05], out_dir=tmp_path)
        assert [row["value"] for row in result.rows] == [0.2, 0.05]
        text = (tmp_path / "sweep_summary.csv").read_text().splitlines()
        assert text[0] == "axis,value,peak_EN,late_EN,dominance_margin"
        assert len(text) == 3
        assert (tmp_path / "point_00.csv").is_file()
        assert (tmp_path / "point_01.csv").is_file()

    def test_temperature_axis_takes_kelvin_for_anchored_configs(self, tmp_path):
        config = load_config(dressed_raw(scenario="custom_sweep"))
        result = sweep_scenario(config, "T_h", [70.0], out_dir=tmp_path)
        row = result.rows[0]
        assert row["axis"] == "T_h"
        assert math.isfinite(row["dominance_margin"])

    def test_family_fields_are_cleared_per_point(self, tmp_path):
        config = load_config(dressed_raw(hot_temperatures=["1 K", "300 K"]))
        result = sweep_scenario(config, "T_h", [300.0], out_dir=tmp_path)
        assert len(result.rows) == 1

    def test_axis_aliases_and_unknown_axis(self, tmp_path):
        config = load_config(dressed_raw(scenario="custom_sweep"))
        result = sweep_scenario(config, "Th", [300.0], out_dir=tmp_path)
        assert result.axis == "T_h"
        with pytest.raises(ConfigError, match="unknown sweep axis"):
            sweep_scenario(config, "temperature", [1.0], out_dir=tmp_path)

    def test_truncation_axis_requires_integers(self, tmp_path):
        config = load_config(dressed_raw(scenario="custom_sweep"))
        with pytest.raises(ConfigError, match="integers"):
            sweep_scenario(config, "N", [3.5], out_dir=tmp_path)

    def test_late_time_metric_uses_trailing_quarter(self):
        times = np.linspace(0.0, 100.0, 101)
        values = np.where(times >= 75.0, 2.0, 0.0)
        trajectory = type(
            "T", (), {"times": times, "log_negativity": values}
        )()
        assert late_time_negativity(trajectory, 100.0) == pytest.approx(2.0)


class TestBundledConfigs:
    @pytest.mark.parametrize(
        "name",
        [
            "fig2_comparison",
            "fig3_nondegenerate",
            "fig4_degenerate",
            "fig5_thermal",
        ],
    )
    def test_bundled_configs_load_and_assemble(self, name):
        with warnings.catch_warnings():
            warnings.simplefilter("ignore")
            config = load_config(bundled_config_path(name))
            plans = plan_curves(config, truncation=3)
        assert config.scenario == name
        assert plans

    def test_bundled_lookup_reports_available_names(self):
        with pytest.raises(ConfigError, match="fig3_nondegenerate"):
            bundled_config_path("fig99")

    def test_bundled_dressed_family_matches_flagship_parameters(self):
        with warnings.catch_warnings():
            warnings.simplefilter("ignore")
            config = load_config(bundled_config_path("fig3_nondegenerate"))
        assert config.system.alpha == (0.2, 0.2)
        assert config.truncation == 10
        assert config.hot_temperature_labels == ("1K", "70K", "300K")
