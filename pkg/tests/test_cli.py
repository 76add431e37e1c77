import json

import pytest

from mmwcover import cli, data, scene
from conftest import write_scenario


def run(*argv):
    return cli.main(list(argv))


def test_validate_bundled_corridor(capsys):
    assert run("validate", str(data.scenario_path("corridor_ncr"))) == 0
    out = capsys.readouterr().out
    assert "candidate positions: 808" in out
    assert "invariants: ok" in out


def test_validate_malformed_json_exit_2(tmp_path, capsys):
    bad = tmp_path / "bad.json"
    bad.write_text('{"bounds": {', encoding="utf-8")
    assert run("validate", str(bad)) == 2
    assert "line" in capsys.readouterr().err


def test_validate_missing_file_exit_2(tmp_path):
    assert run("validate", str(tmp_path / "nope.json")) == 2


def test_validate_bs_inside_building_exit_1(tmp_path, capsys):
    path = write_scenario(tmp_path / "s.json", buildings=[
        {"footprint": [[0, 40], [10, 40], [10, 60], [0, 60]], "height": 20}])
    assert run("validate", str(path)) == 1
    assert "bs.position" in capsys.readouterr().err


def heatmap_args(path, out, *extra):
    return ("heatmap", "--scenario", str(path), "--out", str(out),
            "--mode", "ncr-aided", "--seed", "7", "--gamma-th", "0,5,10",
            "--shadowing-std", "0", *extra)


def test_heatmap_csv_layout(tmp_path):
    out = tmp_path / "out"
    assert run(*heatmap_args(data.scenario_path("corridor_ncr"), out)) == 0
    lines = (out / "heatmap.csv").read_text().splitlines()
    assert lines[0] == "x,y,z,snr_db,served_at_0dB,served_at_5dB,served_at_10dB,chosen_link"
    assert len(lines) == 1 + 808
    links = {row.split(",")[-1] for row in lines[1:]}
    assert links <= {"direct", "relay", "none"}
    meta = json.loads((out / "heatmap_meta.json").read_text())
    assert meta["mode"] == "ncr-aided"
    assert meta["seed"] == 7


def test_heatmap_rerun_byte_identical(tmp_path):
    out1, out2 = tmp_path / "a", tmp_path / "b"
    run(*heatmap_args(data.scenario_path("corridor_ncr"), out1))
    run(*heatmap_args(data.scenario_path("corridor_ncr"), out2, "--jobs", "2"))
    assert (out1 / "heatmap.csv").read_bytes() == (out2 / "heatmap.csv").read_bytes()
    assert (out1 / "heatmap_meta.json").read_bytes() == (out2 / "heatmap_meta.json").read_bytes()


def test_sweep_row_count_and_monotone_columns(tmp_path):
    out = tmp_path / "sweep"
    code = run("sweep", "--scenario", str(data.scenario_path("corridor_ncr")),
               "--relay", "ncr", "--param", "ncr-e2e-gain-db",
               "--values", "60,70,80,90,100", "--gamma-th", "0,5,10",
               "--out", str(out), "--shadowing-std", "0")
    assert code == 0
    lines = (out / "sweep.csv").read_text().splitlines()
    assert lines[0] == "param_value,gamma_th_db,p_c_relay_only,p_c_relay_aided"
    assert len(lines) == 1 + 5 * 3
    rows = [line.split(",") for line in lines[1:]]
    for row in rows:
        only, aided = float(row[2]), float(row[3])
        assert 0.0 <= only <= aided <= 1.0


def test_sweep_unknown_parameter_rejected(tmp_path, capsys):
    with pytest.raises(SystemExit):
        run("sweep", "--scenario", str(data.scenario_path("corridor_ncr")),
            "--relay", "ncr", "--param", "panel-count",
            "--values", "1", "--out", str(tmp_path / "x"))


def test_metadata_reference_defaults(tmp_path):
    # a scenario that leaves every capability field unset resolves to the
    # reference defaults and the sidecar echoes them bit-exactly
    ncr_doc = {
        "bounds": {"min": [0, 0], "max": [100, 100]},
        "buildings": [],
        "bs": {"position": [5, 50, 6]},
        "relay": {"kind": "ncr", "position": [50, 50, 4], "panel_az_deg": [180, 0]},
        "grid": {"spacing": 25, "ue_height": 1.5},
    }
    path = tmp_path / "defaults.json"
    path.write_text(json.dumps(ncr_doc), encoding="utf-8")
    out = tmp_path / "out"
    assert run("heatmap", "--scenario", str(path), "--out", str(out),
               "--mode", "direct") == 0
    meta = json.loads((out / "heatmap_meta.json").read_text())
    assert meta["carrier_hz"] == 28e9
    assert meta["bandwidth_hz"] == 200e6
    assert meta["bs"]["tx_power_dbm"] == 35.0
    assert meta["bs"]["array"] == {"nh": 16, "nv": 12}
    assert meta["bs"]["position"][2] == 6.0
    assert meta["relay"]["position"][2] == 4.0
    assert meta["relay"]["panels"] == {"nh": 12, "nv": 6}
    assert meta["relay"]["amp_gain_db"] == 55.0
    assert meta["relay"]["max_e2e_gain_db"] == 92.0
    assert meta["relay"]["noise_figure_db"] == 8.0
    assert meta["relay"]["min_panel_separation_deg"] == 120.0
    assert meta["ue"]["height_m"] == 1.5
    assert meta["ue"]["noise_figure_db"] == 10.0
    assert meta["blockage"]["blocker_height_m"] == 1.7
    assert meta["blockage"]["blocker_density_per_m2"] == 4e-3
    assert meta["blockage"]["blocker_speed_mps"] == 15.0
    assert meta["blockage"]["blockage_duration_s"] == 5.0


def test_metadata_ris_defaults(tmp_path):
    ris_doc = {
        "bounds": {"min": [0, 0], "max": [100, 100]},
        "buildings": [],
        "bs": {"position": [5, 50, 6]},
        "relay": {"kind": "ris", "position": [95, 50, 4], "boresight_az_deg": 180},
        "grid": {"spacing": 25, "ue_height": 1.5},
    }
    path = tmp_path / "ris.json"
    path.write_text(json.dumps(ris_doc), encoding="utf-8")
    out = tmp_path / "out"
    assert run("heatmap", "--scenario", str(path), "--out", str(out),
               "--mode", "direct") == 0
    meta = json.loads((out / "heatmap_meta.json").read_text())
    assert meta["relay"]["elements"] == {"mh": 200, "mv": 200}
    assert meta["relay"]["directivity_q"] == 0.029


def test_reference_defaults_flag_overrides_scenario(tmp_path):
    # scenario with downsized panels; the flag restores the reference values
    doc = json.loads(data.scenario_path("corridor_ncr").read_text())
    doc["relay"]["panels"] = {"nh": 2, "nv": 2}
    doc["relay"]["amp_gain_db"] = 10.0
    doc["grid"]["spacing"] = 30
    path = tmp_path / "small.json"
    path.write_text(json.dumps(doc), encoding="utf-8")
    out = tmp_path / "out"
    assert run("heatmap", "--scenario", str(path), "--out", str(out),
               "--mode", "direct", "--reference-defaults") == 0
    meta = json.loads((out / "heatmap_meta.json").read_text())
    assert meta["relay"]["panels"] == {"nh": 12, "nv": 6}
    assert meta["relay"]["amp_gain_db"] == 55.0


def test_floats_serialized_9_significant_digits():
    assert cli._fmt(0.123456789123) == "0.123456789"
    assert cli._fmt(float("-inf")) == "-inf"
    assert cli._fmt(5.0) == "5"
    assert cli._fmt(192) == "192"
