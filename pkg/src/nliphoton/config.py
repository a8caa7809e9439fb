"""Run configuration: flat ``section.key = value`` files with typed defaults.

Every tunable has a default here, so an empty (or absent) file is a
valid configuration describing the reference three-stage source. Unknown
keys are rejected rather than ignored; a typo should fail loudly, not
silently fall back to a default. The fully resolved mapping is echoed
into every output so results stay interpretable on their own.
"""

from __future__ import annotations

import os
from dataclasses import dataclass, field

from .counting import DetectorSpec
from .errors import ConfigurationError
from .spectral import (DsfSpec, FilterSpec, FrequencyGrid, NliConfig,
                       PumpSpec, SmfSpec)

DEFAULTS = {
    # nonlinear interferometer geometry and pump
    "nli.stages": 3,
    "nli.dsf_length_m": 150.0,
    "nli.zero_dispersion_nm": 1548.5,
    "nli.dispersion_slope_ps_nm2_km": 0.075,
    "nli.nonlinear_coefficient_per_w_km": 2.0,
    "nli.smf_length_m": 20.0,
    "nli.smf_dispersion_ps_nm_km": 17.0,
    "nli.theta_mode": "approximate",
    "nli.pump_center_nm": 1548.8,
    "nli.pump_fwhm_nm": 1.0,
    "nli.pump_peak_power_w": 0.35,
    "nli.pump_average_power_uw": 51.5,
    "nli.repetition_rate_mhz": 36.8,
    # joint-spectrum evaluation window
    "grid.lo_nm": 1535.0,
    "grid.hi_nm": 1562.0,
    "grid.points": 512,
    # collection filters
    "filter.signal_center_nm": 1553.7,
    "filter.signal_bandwidth_nm": 1.0,
    "filter.idler_center_nm": 1543.8,
    "filter.idler_bandwidth_nm": 1.0,
    "filter.in_band_transmission": 1.0,
    "filter.out_of_band_extinction_db": 110.0,
    # counting model of the source
    "source.mean_pairs_per_pulse": 0.05,
    "source.raman_signal_mean": 0.0,
    "source.raman_idler_mean": 0.0,
    "source.transmission_signal": 1.0,
    "source.transmission_idler": 1.0,
    "source.coherence_time_ps": 3.0,
    # detectors
    "detectors.efficiency_signal": 0.15,
    "detectors.efficiency_idler": 0.15,
    "detectors.dark_count_probability": 0.0,
    "detectors.dead_time_us": 0.0,
    # design sweep ranges
    "sweep.pump_fwhms_nm": (0.5, 0.7, 1.0, 1.5),
    "sweep.smf_lengths_m": (11.0, 20.0),
    "sweep.stages": (2, 3, 4),
    "sweep.bandwidths_nm": (0.5, 1.0, 1.5),
    "sweep.powers_uw": (20.0, 30.0, 40.0, 51.5, 60.0),
    # execution
    "run.n_pulses": 1_000_000,
    "run.seed": 12345,
    "run.threads": 1,
    "run.out_dir": "",
    "run.hom_delays_ps": (-6.0, -4.0, -2.5, -1.5, -1.0, -0.5, 0.0,
                          0.5, 1.0, 1.5, 2.5, 4.0, 6.0),
}

OUTPUT_DIR_ENV = "NLIPHOTON_OUT"


def _coerce(key: str, text: str):
    """Parse ``text`` to the type of the default for ``key``."""
    default = DEFAULTS[key]
    text = text.strip()
    if len(text) >= 2 and text[0] == text[-1] and text[0] in "'\"":
        text = text[1:-1]
    try:
        if isinstance(default, bool):
            low = text.lower()
            if low not in ("true", "false"):
                raise ValueError("expected true or false")
            return low == "true"
        if isinstance(default, int):
            return int(text)
        if isinstance(default, float):
            return float(text)
        if isinstance(default, tuple):
            parts = [p.strip() for p in text.split(",") if p.strip()]
            if not parts:
                raise ValueError("expected a comma-separated list")
            elem = type(default[0]) if default else float
            return tuple(elem(p) for p in parts)
        return text
    except ValueError as exc:
        raise ConfigurationError(
            f"bad value for {key!r}: {text!r} ({exc})") from exc


def parse_config_text(text: str) -> dict:
    """Parse ``key = value`` lines; '#' starts a comment."""
    out = {}
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigurationError(
                f"config line {lineno}: expected 'key = value', got {raw!r}")
        key, value = (s.strip() for s in line.split("=", 1))
        if key not in DEFAULTS:
            raise ConfigurationError(f"config line {lineno}: unknown key {key!r}")
        if key in out:
            raise ConfigurationError(f"config line {lineno}: duplicate key {key!r}")
        out[key] = _coerce(key, value)
    return out


@dataclass
class JobConfig:
    """Resolved configuration for one command invocation."""

    values: dict = field(default_factory=dict)

    @classmethod
    def build(cls, config_path: str | None = None, seed: int | None = None,
              threads: int | None = None, out_dir: str | None = None) -> "JobConfig":
        values = dict(DEFAULTS)
        if config_path is not None:
            with open(config_path, "r", encoding="utf-8") as fh:
                values.update(parse_config_text(fh.read()))
        if seed is not None:
            values["run.seed"] = int(seed)
        if threads is not None:
            if threads < 1:
                raise ConfigurationError("threads must be >= 1")
            values["run.threads"] = int(threads)
        if out_dir is not None:
            values["run.out_dir"] = str(out_dir)
        return cls(values=values)

    def __getitem__(self, key: str):
        if key not in self.values:
            raise ConfigurationError(f"unknown config key {key!r}")
        return self.values[key]

    def resolved(self) -> dict:
        """Full key -> value mapping (tuples as lists for JSON)."""
        return {k: list(v) if isinstance(v, tuple) else v
                for k, v in sorted(self.values.items())}

    # --- builders -------------------------------------------------------

    def nli_config(self) -> NliConfig:
        return NliConfig(
            stages=self["nli.stages"],
            dsf=DsfSpec(
                length_m=self["nli.dsf_length_m"],
                zero_dispersion_nm=self["nli.zero_dispersion_nm"],
                dispersion_slope_ps_nm2_km=self["nli.dispersion_slope_ps_nm2_km"],
                nonlinear_coefficient_per_w_km=self["nli.nonlinear_coefficient_per_w_km"]),
            smf=SmfSpec(
                length_m=self["nli.smf_length_m"],
                dispersion_ps_nm_km=self["nli.smf_dispersion_ps_nm_km"]),
            pump=PumpSpec(
                center_nm=self["nli.pump_center_nm"],
                fwhm_nm=self["nli.pump_fwhm_nm"],
                peak_power_w=self["nli.pump_peak_power_w"],
                average_power_w=self["nli.pump_average_power_uw"] * 1e-6,
                repetition_rate_hz=self["nli.repetition_rate_mhz"] * 1e6),
            theta_mode=self["nli.theta_mode"])

    def frequency_grid(self) -> FrequencyGrid:
        return FrequencyGrid.from_wavelength_window(
            lo_nm=self["grid.lo_nm"], hi_nm=self["grid.hi_nm"],
            points=self["grid.points"])

    def filter_spec(self) -> FilterSpec:
        return FilterSpec(
            signal_center_nm=self["filter.signal_center_nm"],
            signal_bandwidth_nm=self["filter.signal_bandwidth_nm"],
            idler_center_nm=self["filter.idler_center_nm"],
            idler_bandwidth_nm=self["filter.idler_bandwidth_nm"],
            in_band_transmission=self["filter.in_band_transmission"],
            out_of_band_extinction_db=self["filter.out_of_band_extinction_db"])

    def detector(self, arm: str) -> DetectorSpec:
        if arm not in ("signal", "idler"):
            raise ConfigurationError("detector arm must be 'signal' or 'idler'")
        eff = self["detectors.efficiency_signal"] if arm == "signal" \
            else self["detectors.efficiency_idler"]
        return DetectorSpec(
            efficiency=eff,
            dark_count_probability=self["detectors.dark_count_probability"],
            dead_time_s=self["detectors.dead_time_us"] * 1e-6,
            gate_rate_hz=self["nli.repetition_rate_mhz"] * 1e6)

    def source_kwargs(self) -> dict:
        """Counting-model parameters that do not come from the spectrum."""
        return {
            "mean_pairs_per_pulse": self["source.mean_pairs_per_pulse"],
            "raman_signal_mean": self["source.raman_signal_mean"],
            "raman_idler_mean": self["source.raman_idler_mean"],
            "channel_transmission_signal": self["source.transmission_signal"],
            "channel_transmission_idler": self["source.transmission_idler"],
            "coherence_time_s": self["source.coherence_time_ps"] * 1e-12,
            "reference_power_w": self["nli.pump_average_power_uw"] * 1e-6,
            "repetition_rate_hz": self["nli.repetition_rate_mhz"] * 1e6,
        }

    def hom_delays_s(self) -> list:
        return [d * 1e-12 for d in self["run.hom_delays_ps"]]

    def output_dir(self) -> str:
        """Explicit flag/config value, else environment, else ./nliphoton-out."""
        if self["run.out_dir"]:
            return self["run.out_dir"]
        env = os.environ.get(OUTPUT_DIR_ENV, "").strip()
        if env:
            return env
        return os.path.join(os.getcwd(), "nliphoton-out")


__all__ = ["DEFAULTS", "OUTPUT_DIR_ENV", "JobConfig", "parse_config_text"]
