import json

import pytest

from nliphoton import ConfigurationError
from nliphoton.config import DEFAULTS, OUTPUT_DIR_ENV, JobConfig, parse_config_text


def test_defaults_build_without_file():
    cfg = JobConfig.build()
    assert cfg["nli.stages"] == 3
    assert cfg["run.seed"] == 12345
    assert cfg["filter.signal_center_nm"] == pytest.approx(1553.7)


def test_parse_updates_and_coerces_types():
    text = """
    # a comment
    nli.stages = 4
    pump_unused_blank_line_above = skipped
    """
    # build a valid snippet separately; the bogus key must raise
    with pytest.raises(ConfigurationError):
        parse_config_text(text)
    values = parse_config_text("""
    nli.stages = 4
    nli.pump_fwhm_nm = 0.5
    run.n_pulses = 2000000
    nli.theta_mode = "exact"
    sweep.stages = 2, 3
    """)
    assert values["nli.stages"] == 4
    assert isinstance(values["nli.stages"], int)
    assert values["nli.pump_fwhm_nm"] == pytest.approx(0.5)
    assert values["nli.theta_mode"] == "exact"
    assert values["sweep.stages"] == (2, 3)


def test_parse_rejects_unknown_duplicate_and_malformed():
    with pytest.raises(ConfigurationError, match="line 1"):
        parse_config_text("bogus.key = 1")
    with pytest.raises(ConfigurationError, match="duplicate"):
        parse_config_text("nli.stages = 3\nnli.stages = 4")
    with pytest.raises(ConfigurationError):
        parse_config_text("nli.stages 3")
    with pytest.raises(ConfigurationError):
        parse_config_text("nli.stages = not_a_number")


def test_flag_overrides_beat_config(tmp_path):
    path = tmp_path / "run.cfg"
    path.write_text("run.seed = 777\nrun.threads = 2\n")
    cfg = JobConfig.build(config_path=str(path), seed=42, threads=8,
                          out_dir="elsewhere")
    assert cfg["run.seed"] == 42
    assert cfg["run.threads"] == 8
    assert cfg["run.out_dir"] == "elsewhere"
    with pytest.raises(ConfigurationError):
        JobConfig.build(threads=0)


def test_resolved_is_json_serializable():
    resolved = JobConfig.build().resolved()
    text = json.dumps(resolved)
    back = json.loads(text)
    assert back["nli.stages"] == 3
    assert back["sweep.stages"] == [2, 3, 4]
    assert sorted(back) == list(back)


def test_builders_produce_consistent_objects():
    cfg = JobConfig.build()
    nli = cfg.nli_config()
    assert nli.stages == cfg["nli.stages"]
    assert nli.dsf.length_m == pytest.approx(cfg["nli.dsf_length_m"])
    assert nli.pump.fwhm_nm == pytest.approx(cfg["nli.pump_fwhm_nm"])

    grid = cfg.frequency_grid()
    assert grid.signal_omega.shape == (cfg["grid.points"],)

    filt = cfg.filter_spec()
    assert filt.signal_center_nm == pytest.approx(cfg["filter.signal_center_nm"])

    det = cfg.detector("signal")
    assert det.efficiency == pytest.approx(cfg["detectors.efficiency_signal"])
    assert det.dead_time_s == pytest.approx(cfg["detectors.dead_time_us"] * 1e-6)
    with pytest.raises(ConfigurationError):
        cfg.detector("neither")

    delays = cfg.hom_delays_s()
    assert min(delays) == pytest.approx(min(cfg["run.hom_delays_ps"]) * 1e-12)

    kwargs = cfg.source_kwargs()
    assert kwargs["mean_pairs_per_pulse"] == pytest.approx(
        cfg["source.mean_pairs_per_pulse"])


def test_output_dir_precedence(tmp_path, monkeypatch):
    import os

    monkeypatch.delenv(OUTPUT_DIR_ENV, raising=False)
    assert JobConfig.build().output_dir() == os.path.join(os.getcwd(),
                                                          "nliphoton-out")
    monkeypatch.setenv(OUTPUT_DIR_ENV, str(tmp_path / "env"))
    assert JobConfig.build().output_dir() == str(tmp_path / "env")
    path = tmp_path / "cfg.cfg"
    path.write_text(f"run.out_dir = {tmp_path / 'from-config'}\n")
    assert JobConfig.build(config_path=str(path)).output_dir() == \
        str(tmp_path / "from-config")
    cfg = JobConfig.build(config_path=str(path), out_dir=str(tmp_path / "flag"))
    assert cfg.output_dir() == str(tmp_path / "flag")


def test_unknown_key_lookup_raises():
    with pytest.raises(ConfigurationError):
        JobConfig.build()["nli.not_a_key"]


def test_defaults_cover_all_builder_keys():
    # every DEFAULTS key belongs to a known section
    sections = {"nli", "grid", "filter", "source", "detectors", "sweep", "run"}
    assert {k.split(".")[0] for k in DEFAULTS} == sections
