"""Scenario config loading, execution, and report emission tests."""

import copy
import json
from pathlib import Path

import pytest
import yaml

from oansim.errors import ConfigError
from oansim.scenarios import (ScenarioConfig, builtin_config_path,
                              emit_reports, load_config, run_scenario)

MINI = {
    "name": "mini",
    "seed": 77,
    "sample_rate": 64.0e9,
    "center_freq": 193.4e12,
    "overlay_style": "subcarrier_tunnels",
    "wdm": {"channel_offsets": [0.0]},
    "digital": {"occupied_bandwidth": 2.0e9, "qam_order": 4, "if_freq": 7.0e9,
                "pilot_spacing": 16},
    "tunnels": [],
    "uplink": {"drive_depth": 0.5, "rof": None},
    "devices": {"drive_depth": 0.12, "tx_power_dbm": 3.0},
    "spans": {"feeder_km": 20.0, "distribution_km": 5.0},
    "onu": {"broadband_passband_fraction": 0.995,
            "pd": {"responsivity": 1.0, "thermal_noise_psd": 1.0e-22,
                   "include_shot": True}},
    "sweep": {"rx_power_dbm": [-6.0, 0.0], "bits_per_point": 4000,
              "top_bits": 4000, "burst_symbols": 60},
    "output": "reports",
}


def mini_config(tmp_path, **overrides):
    raw = copy.deepcopy(MINI)
    raw.update(overrides)
    p = tmp_path / "mini.yaml"
    p.write_text(yaml.safe_dump(raw))
    return load_config(p)


# ---------------------------------------------------------------- loading


def test_shipped_config_echoes_two_channels_at_100ghz():
    cfg = load_config(builtin_config_path("scenario_a"))
    plan = cfg.plan()
    assert plan.n_channels == 2
    spacing = plan.channels[1].center_freq - plan.channels[0].center_freq
    assert spacing == pytest.approx(100e9)


def test_shipped_scenario_b_loads():
    cfg = load_config(builtin_config_path("scenario_b"))
    assert cfg.style == "adjacent_rf"
    assert len(cfg.raw["rf_channels"]) == 5


def test_missing_file_and_unknown_builtin():
    with pytest.raises(ConfigError):
        load_config("/nonexistent/path.yaml")
    with pytest.raises(ConfigError):
        builtin_config_path("scenario_z")


def test_empty_file_lists_required_sections(tmp_path):
    p = tmp_path / "empty.yaml"
    p.write_text("")
    with pytest.raises(ConfigError, match="required sections"):
        load_config(p)


def test_parse_error_reported(tmp_path):
    p = tmp_path / "bad.yaml"
    p.write_text("foo: [unclosed")
    with pytest.raises(ConfigError, match="parse error"):
        load_config(p)


def test_overlapping_slots_rejected(tmp_path):
    with pytest.raises(ConfigError, match="overlap"):
        mini_config(tmp_path, wdm={"channel_offsets": [0.0, 30.0e9]})


def test_seed_must_be_integer(tmp_path):
    with pytest.raises(ConfigError, match="seed"):
        mini_config(tmp_path, seed="abc")


def test_unknown_overlay_style_rejected(tmp_path):
    with pytest.raises(ConfigError, match="overlay_style"):
        mini_config(tmp_path, overlay_style="mesh")


def test_defaults_echoed_into_manifest(tmp_path):
    cfg = mini_config(tmp_path)
    # values never mentioned in the file arrive resolved from defaults
    assert cfg.raw["onu"]["carrier_tap_fraction"] == 0.25
    assert cfg.raw["fec_threshold"] == 3.8e-3


# ---------------------------------------------------------------- running


@pytest.fixture(scope="module")
def mini_report(tmp_path_factory):
    cfg = mini_config(tmp_path_factory.mktemp("cfg"))
    return run_scenario(cfg)


def test_mini_run_structure(mini_report):
    assert mini_report["name"] == "mini"
    assert mini_report["seed"] == 77
    assert len(mini_report["points"]) == 2
    for point in mini_report["points"]:
        assert set(point["signals"]) == {"ch0:digital", "uplink:digital"}
        for sig in point["signals"].values():
            assert sig["bits"] >= 4000
    # manifest carries the fully resolved config
    assert mini_report["config"]["devices"]["tx_power_dbm"] == 3.0


def test_mini_run_reaches_low_ber(mini_report):
    top = mini_report["points"][-1]
    assert all(s["passes_fec"] for s in top["signals"].values())


def test_run_deterministic_byte_identical(tmp_path):
    cfg = mini_config(tmp_path)
    a = run_scenario(cfg)
    b = run_scenario(cfg)
    assert json.dumps(a, sort_keys=True) == json.dumps(b, sort_keys=True)


def test_seed_changes_report(tmp_path):
    a = run_scenario(mini_config(tmp_path))
    b = run_scenario(mini_config(tmp_path, seed=78))
    assert json.dumps(a["points"], sort_keys=True) != \
        json.dumps(b["points"], sort_keys=True)


def test_descending_sweep_rejected(tmp_path):
    cfg = mini_config(tmp_path)
    with pytest.raises(ConfigError, match="ascending"):
        run_scenario(cfg, sweep_override=[0.0, -6.0])


# ---------------------------------------------------------------- reports


def test_emit_reports_files_and_roundtrip(mini_report, tmp_path):
    paths = emit_reports(mini_report, tmp_path)
    names = {Path(p).name for p in paths}
    assert names == {"mini_metrics.json", "mini_waterfall.csv",
                     "mini_spectrum.csv"}
    loaded = json.loads((tmp_path / "mini_metrics.json").read_text())
    assert loaded == json.loads(json.dumps(mini_report, sort_keys=True))

    waterfall = (tmp_path / "mini_waterfall.csv").read_text().splitlines()
    assert waterfall[0] == "signal,rx_power_dbm,ber"
    assert len(waterfall) == 1 + 2 * 2  # 2 signals x 2 points

    spectrum = (tmp_path / "mini_spectrum.csv").read_text().splitlines()
    assert spectrum[0] == "freq_hz,psd_dbm_per_hz"
    assert len(spectrum) > 100


def test_waterfall_monotone_non_increasing(mini_report):
    by_signal = {}
    for point in mini_report["points"]:
        for name, sig in point["signals"].items():
            by_signal.setdefault(name, []).append(sig["ber"])
    for name, series in by_signal.items():
        assert series == sorted(series, reverse=True) or \
            max(series) - min(series) < 5e-4


def test_emit_reports_json_only(mini_report, tmp_path):
    paths = emit_reports(mini_report, tmp_path, formats=("json",))
    assert len(paths) == 1 and str(paths[0]).endswith(".json")


def test_emit_reports_unwritable_path(mini_report):
    with pytest.raises(ConfigError, match="output directory"):
        emit_reports(mini_report, "/proc/forbidden/dir")
