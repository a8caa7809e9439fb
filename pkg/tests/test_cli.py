import json
import os

import pytest

from nliphoton.cli import (
    EXIT_CHECK_FAILURE,
    EXIT_CONFIG_ERROR,
    EXIT_IO_ERROR,
    EXIT_OK,
    main,
)

SMALL_CFG = """
grid.points = 192
run.n_pulses = 150000
run.seed = 77
filter.signal_bandwidth_nm = 1.5
filter.idler_bandwidth_nm = 1.5
source.mean_pairs_per_pulse = 0.04
source.raman_signal_mean = 0.002
run.hom_delays_ps = -6, -3, -1.5, 0, 1.5, 3, 6
sweep.pump_fwhms_nm = 1.0
sweep.smf_lengths_m = 20.0
sweep.stages = 2, 3
"""


@pytest.fixture()
def small_cfg(tmp_path):
    path = tmp_path / "small.cfg"
    path.write_text(SMALL_CFG)
    return str(path)


def run_cli(*argv):
    return main(list(argv))


def load_report(out_dir, command):
    with open(os.path.join(out_dir, command, "report.json")) as fh:
        return json.load(fh)


def test_version_exits_zero(capsys):
    with pytest.raises(SystemExit) as exc:
        run_cli("--version")
    assert exc.value.code == 0
    assert capsys.readouterr().out.strip()


def test_unknown_command_exits_two():
    with pytest.raises(SystemExit) as exc:
        run_cli("frobnicate")
    assert exc.value.code == 2


def test_jsi_outputs_and_determinism(tmp_path, small_cfg):
    out_a = str(tmp_path / "a")
    out_b = str(tmp_path / "b")
    assert run_cli("jsi", "--config", small_cfg, "--out", out_a) == EXIT_OK
    assert run_cli("jsi", "--config", small_cfg, "--out", out_b) == EXIT_OK

    for out in (out_a, out_b):
        names = sorted(os.listdir(os.path.join(out, "jsi")))
        assert names == ["jsi.csv", "manifest.json", "report.json"]

    csv_a = open(os.path.join(out_a, "jsi", "jsi.csv")).read()
    csv_b = open(os.path.join(out_b, "jsi", "jsi.csv")).read()
    assert csv_a == csv_b

    # identical up to the output-directory echo in the config block
    rep_a = load_report(out_a, "jsi")
    rep_b = load_report(out_b, "jsi")
    rep_a["config"].pop("run.out_dir")
    rep_b["config"].pop("run.out_dir")
    assert rep_a == rep_b

    man_a = json.load(open(os.path.join(out_a, "jsi", "manifest.json")))
    man_b = json.load(open(os.path.join(out_b, "jsi", "manifest.json")))
    # the creation timestamp is the only non-deterministic field
    man_a.pop("created_utc")
    man_b.pop("created_utc")
    man_a["config"].pop("run.out_dir")
    man_b["config"].pop("run.out_dir")
    assert man_a == man_b
    assert man_a["command"] == "jsi"
    assert "jsi.csv" in man_a["outputs"]


def test_schmidt_and_islands_reports(tmp_path, small_cfg):
    out = str(tmp_path / "out")
    assert run_cli("schmidt", "--config", small_cfg, "--out", out) == EXIT_OK
    rep = load_report(out, "schmidt")
    assert rep["filtered"]["mode_number"] == pytest.approx(1.04, abs=0.02)
    assert rep["heralding"]["h_s_spectral"] > 0.9

    assert run_cli("islands", "--config", small_cfg, "--out", out) == EXIT_OK
    rep = load_report(out, "islands")
    assert rep["n_islands"] >= 3
    first = rep["islands"][0]
    assert first["centroid_signal_nm"] == pytest.approx(1553.7, abs=0.5)
    assert first["centroid_idler_nm"] == pytest.approx(1543.8, abs=0.5)


def test_design_csv(tmp_path, small_cfg):
    out = str(tmp_path / "out")
    assert run_cli("design", "--config", small_cfg, "--out", out) == EXIT_OK
    lines = open(os.path.join(out, "design", "design.csv")).read().splitlines()
    header = lines[0].split(",")
    assert header[0] == "pump_fwhm_nm"
    assert "composite_score" in header
    assert len(lines) == 3  # two stage counts swept


def test_simulate_and_analyze_round_trip(tmp_path, small_cfg):
    out = str(tmp_path / "out")
    assert run_cli("simulate", "--config", small_cfg, "--out", out) == EXIT_OK
    rep = load_report(out, "simulate")
    assert rep["true_coincidences"] > 0
    counts_path = os.path.join(out, "simulate", "counts.json")
    assert run_cli("analyze", counts_path, "--config", small_cfg,
                   "--out", out) == EXIT_OK
    rep = load_report(out, "analyze")
    assert rep["experiment"] == "coincidence"
    assert rep["klyshko_heralding_estimate"] > 0.5


def test_sweep_and_power_fit(tmp_path, small_cfg):
    out = str(tmp_path / "out")
    assert run_cli("simulate", "--sweep", "--config", small_cfg,
                   "--out", out) == EXIT_OK
    sweep_path = os.path.join(out, "simulate", "sweep.json")
    payload = json.load(open(sweep_path))
    assert payload["experiment"] == "power_sweep"
    assert len(payload["points"]) >= 3
    assert run_cli("analyze", sweep_path, "--config", small_cfg,
                   "--out", out) == EXIT_OK
    rep = load_report(out, "analyze")
    assert rep["experiment"] == "power_sweep"
    assert "linear_coefficient" in rep["power_fit"]


def test_hbt_and_hom_commands(tmp_path, small_cfg):
    out = str(tmp_path / "out")
    assert run_cli("hbt", "--config", small_cfg, "--out", out) == EXIT_OK
    rep = load_report(out, "hbt")
    assert rep["g2_heralded"]["value"] < 1.0
    assert rep["g2_unheralded"]["value"] > 1.0

    assert run_cli("hom", "--config", small_cfg, "--out", out) == EXIT_OK
    rep = load_report(out, "hom")
    assert 0.0 < rep["visibility"]["v_raw"] <= 1.0
    hom_csv = open(os.path.join(out, "hom", "hom.csv")).read().splitlines()
    assert hom_csv[0] == "delay_s,fourfold,n_pulses"
    assert len(hom_csv) == 8  # seven configured delays

    counts_path = os.path.join(out, "hom", "counts.json")
    assert run_cli("analyze", counts_path, "--config", small_cfg,
                   "--out", out) == EXIT_OK
    assert load_report(out, "analyze")["experiment"] == "hom"


def test_seed_flag_changes_counts(tmp_path, small_cfg):
    out_a = str(tmp_path / "a")
    out_b = str(tmp_path / "b")
    assert run_cli("simulate", "--config", small_cfg, "--out", out_a,
                   "--seed", "7") == EXIT_OK
    assert run_cli("simulate", "--config", small_cfg, "--out", out_b,
                   "--seed", "8") == EXIT_OK
    a = json.load(open(os.path.join(out_a, "simulate", "counts.json")))
    b = json.load(open(os.path.join(out_b, "simulate", "counts.json")))
    assert a["seed"] != b["seed"]
    assert a["singles_signal"] != b["singles_signal"]


def test_config_error_exit_code(tmp_path):
    bad = tmp_path / "bad.cfg"
    bad.write_text("bogus.key = 1\n")
    assert run_cli("jsi", "--config", str(bad),
                   "--out", str(tmp_path / "o")) == EXIT_CONFIG_ERROR


def test_missing_config_exit_code(tmp_path):
    assert run_cli("jsi", "--config", str(tmp_path / "nope.cfg"),
                   "--out", str(tmp_path / "o")) == EXIT_IO_ERROR


def test_unwritable_output_exit_code(tmp_path, small_cfg):
    blocker = tmp_path / "blocked"
    blocker.write_text("a file, not a directory")
    assert run_cli("jsi", "--config", small_cfg,
                   "--out", str(blocker / "sub")) == EXIT_IO_ERROR


def test_analyze_rejects_garbage_input(tmp_path, small_cfg):
    path = tmp_path / "junk.json"
    path.write_text("{\"what\": 1}")
    assert run_cli("analyze", str(path), "--config", small_cfg,
                   "--out", str(tmp_path / "o")) == EXIT_CONFIG_ERROR


def test_reproduce_passes_and_reports(tmp_path, small_cfg):
    out = str(tmp_path / "out")
    code = run_cli("reproduce", "--config", small_cfg, "--seed", "20260817",
                   "--out", out)
    assert code == EXIT_OK
    rep = load_report(out, "reproduce")
    assert rep["all_passed"] is True
    assert len(rep["results"]) == 9
    assert all(c["passed"] for c in rep["results"])
