"""Command-line interface tests: subcommands, outputs, exit codes."""

import copy
import json

import pytest
import yaml

from oansim.cli import main
from oansim.scenarios import DATA_DIR

MINI = {
    "name": "cli_mini",
    "seed": 5,
    "sample_rate": 64.0e9,
    "center_freq": 193.4e12,
    "wdm": {"channel_offsets": [0.0]},
    "digital": {"occupied_bandwidth": 2.0e9, "if_freq": 7.0e9},
    "uplink": {"drive_depth": 0.5},
    "devices": {"drive_depth": 0.12, "tx_power_dbm": 3.0},
    "spans": {"feeder_km": 20.0, "distribution_km": 5.0},
    "onu": {"broadband_passband_fraction": 0.995},
    "sweep": {"rx_power_dbm": [-3.0], "bits_per_point": 3000,
              "top_bits": 3000, "burst_symbols": 40},
}


@pytest.fixture
def mini_path(tmp_path):
    p = tmp_path / "cli_mini.yaml"
    p.write_text(yaml.safe_dump(MINI))
    return p


def test_run_writes_reports(mini_path, tmp_path, capsys):
    out = tmp_path / "out"
    code = main(["run", "--config", str(mini_path), "--out", str(out)])
    assert code == 0
    assert (out / "cli_mini_metrics.json").exists()
    assert (out / "cli_mini_waterfall.csv").exists()
    assert "cli_mini" in capsys.readouterr().out


def test_run_format_json_only(mini_path, tmp_path):
    out = tmp_path / "out"
    assert main(["run", "--config", str(mini_path), "--out", str(out),
                 "--format", "json"]) == 0
    assert (out / "cli_mini_metrics.json").exists()
    assert not (out / "cli_mini_waterfall.csv").exists()


def test_seed_override_lands_in_report(mini_path, tmp_path):
    out = tmp_path / "out"
    assert main(["run", "--config", str(mini_path), "--out", str(out),
                 "--seed", "99"]) == 0
    report = json.loads((out / "cli_mini_metrics.json").read_text())
    assert report["seed"] == 99


def test_sweep_overrides_power_axis(mini_path, tmp_path):
    out = tmp_path / "out"
    assert main(["sweep", "--config", str(mini_path), "--out", str(out),
                 "--rx-power", "-2", "--format", "json"]) == 0
    report = json.loads((out / "cli_mini_metrics.json").read_text())
    assert [p["rx_power_dbm"] for p in report["points"]] == [-2.0]


def test_missing_config_exits_2(capsys):
    assert main(["run", "--config", "/no/such/file.yaml"]) == 2
    assert "configuration error" in capsys.readouterr().err


def test_invalid_config_exits_2(tmp_path, capsys):
    raw = copy.deepcopy(MINI)
    raw["seed"] = "not-an-int"
    p = tmp_path / "bad.yaml"
    p.write_text(yaml.safe_dump(raw))
    assert main(["run", "--config", str(p)]) == 2


def test_simulation_error_exits_3(tmp_path, capsys):
    # an amplifier config this absurd starves the network unit of carrier
    raw = copy.deepcopy(MINI)
    raw["onu"] = dict(raw["onu"], min_residual_carrier_dbm=100.0)
    p = tmp_path / "starved.yaml"
    p.write_text(yaml.safe_dump(raw))
    assert main(["run", "--config", str(p)]) == 3
    assert "simulation error" in capsys.readouterr().err


def test_budget_builtin_example(tmp_path, capsys):
    out = tmp_path / "bud"
    assert main(["budget", "--config", "budget_example",
                 "--out", str(out)]) == 0
    report = json.loads((out / "access_tree_budget.json").read_text())
    assert report["comp"][0]["passes"]
    got = capsys.readouterr().out
    assert "expansion 61.44x" in got


def test_budget_bad_service_exits_2(tmp_path):
    p = tmp_path / "bad_budget.yaml"
    p.write_text(yaml.safe_dump({
        "name": "x",
        "nodes": [{"id": "a", "kind": "central_office"},
                  {"id": "b", "kind": "onu"}],
        "links": [{"from": "a", "to": "b", "length_km": 1.0}],
        "latency": [{"path": ["a", "b"], "service": "warp_drive"}],
    }))
    assert main(["budget", "--config", str(p)]) == 2


def test_devices_csv(tmp_path):
    out = tmp_path / "dev"
    assert main(["devices", "--config", "scenario_a", "--out", str(out),
                 "--points", "101"]) == 0
    lines = (out / "scenario_a_ring_response.csv").read_text().splitlines()
    assert lines[0] == "freq_hz,through_db,drop_db,phase_rad"
    assert len(lines) == 102
    # deepest through-port notch sits mid-sweep, on resonance
    rows = [line.split(",") for line in lines[1:]]
    through = [float(r[1]) for r in rows]
    assert 40 <= through.index(min(through)) <= 60


def test_builtin_name_resolution(tmp_path):
    out = tmp_path / "dev"
    assert main(["devices", "--config", "scenario_b", "--out", str(out),
                 "--points", "11"]) == 0
    assert (out / "scenario_b_ring_response.csv").exists()
