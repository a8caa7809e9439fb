"""Island detection, scoring, and design-space sweeps for the interferometer.

The engineered joint spectrum of an N-stage source breaks into discrete
"islands" along the energy-conservation anti-diagonal wherever the
per-period phase hits a multiple of pi. Collecting one round island with
matched rectangular filters yields a near-factorable, and therefore
spectrally pure, pair source. This module finds those islands, measures
how round they are, picks filter bandwidths, and sweeps the design knobs
(pump bandwidth, spacer length, stage count).
"""

from __future__ import annotations

from dataclasses import dataclass, replace
from itertools import product

import numpy as np
from scipy import ndimage

from .errors import ConfigurationError
from .modal import heralding_efficiencies, schmidt_decompose
from .spectral import (
    FrequencyGrid,
    Jsf,
    NliConfig,
    apply_filter,
    centered_filter,
    compute_jsf,
    pump_envelope,
)

# segmentation defaults: threshold relative to the global JSI maximum,
# minimum mass that separates a real island from a secondary-lobe sliver
DEFAULT_THRESHOLD = 0.1
DEFAULT_MIN_MASS = 0.005


@dataclass
class IslandReport:
    """One detected JSI island.

    ``index`` orders islands by increasing centroid detuning |w_s - w_i|
    (m = 1 is the innermost collection island). ``extent_nm`` is the
    axis-aligned full width of the above-half-maximum core; ``roundness``
    is the ratio (minor/major) of the rms widths of that core along its
    principal axes, 1 for a circular island. ``island_mass`` is the
    fraction of total |F|^2 carried by the island. The ``filtered_*``
    fields are filled by :func:`score_island`.
    """

    index: int
    centroid_nm: tuple
    extent_nm: tuple
    roundness: float
    island_mass: float
    detuning_rad_s: float
    filtered_mode_number: float | None = None
    filtered_h_s: float | None = None
    filtered_h_i: float | None = None
    best_bandwidth_nm: float | None = None
    best_score: float | None = None

    def to_report(self) -> dict:
        return {
            "index": self.index,
            "centroid_signal_nm": self.centroid_nm[0],
            "centroid_idler_nm": self.centroid_nm[1],
            "extent_signal_nm": self.extent_nm[0],
            "extent_idler_nm": self.extent_nm[1],
            "roundness": self.roundness,
            "island_mass": self.island_mass,
            "detuning_rad_s": self.detuning_rad_s,
            "filtered_mode_number": self.filtered_mode_number,
            "filtered_h_s": self.filtered_h_s,
            "filtered_h_i": self.filtered_h_i,
            "best_bandwidth_nm": self.best_bandwidth_nm,
            "best_score": self.best_score,
        }


@dataclass
class DesignPoint:
    """One evaluated corner of the design space."""

    pump_fwhm_nm: float
    smf_length_m: float
    stages: int
    island_index: int
    centroid_nm: tuple
    bandwidth_nm: float
    mode_number: float
    h_s: float
    h_i: float
    island_mass: float
    roundness: float

    @property
    def composite_score(self) -> float:
        """Documented scalar objective: h_s * h_i * island_mass / M."""
        return self.h_s * self.h_i * self.island_mass / self.mode_number

    def to_row(self) -> dict:
        return {
            "pump_fwhm_nm": self.pump_fwhm_nm,
            "smf_length_m": self.smf_length_m,
            "stages": self.stages,
            "island_index": self.island_index,
            "centroid_signal_nm": self.centroid_nm[0],
            "centroid_idler_nm": self.centroid_nm[1],
            "bandwidth_nm": self.bandwidth_nm,
            "mode_number": self.mode_number,
            "h_s": self.h_s,
            "h_i": self.h_i,
            "island_mass": self.island_mass,
            "roundness": self.roundness,
            "composite_score": self.composite_score,
        }


def _components(mask: np.ndarray):
    """8-connected components of a boolean mask."""
    labels, n = ndimage.label(mask, structure=np.ones((3, 3), dtype=int))
    return labels, n


def _half_max_stats(inten, comp_mask, sig_nm, idl_nm, omega_s, omega_i):
    """Centroid, extents, and principal-axis roundness of one component."""
    core = comp_mask & (inten >= 0.5 * inten[comp_mask].max())
    rows, cols = np.nonzero(core)
    w = inten[rows, cols]
    w = w / w.sum()
    # work in omega so both axes share units; convert the answer back
    xs = omega_s[rows]
    ys = omega_i[cols]
    mx = float(w @ xs)
    my = float(w @ ys)
    cov = np.zeros((2, 2))
    cov[0, 0] = float(w @ (xs - mx) ** 2)
    cov[1, 1] = float(w @ (ys - my) ** 2)
    cov[0, 1] = cov[1, 0] = float(w @ ((xs - mx) * (ys - my)))
    evals = np.linalg.eigvalsh(cov)
    evals = np.clip(evals, 0.0, None)
    if evals[1] <= 0:
        roundness = 1.0  # single-cell core
    else:
        roundness = float(np.sqrt(evals[0] / evals[1]))
    d_sig = abs(sig_nm[1] - sig_nm[0]) if len(sig_nm) > 1 else 0.0
    d_idl = abs(idl_nm[1] - idl_nm[0]) if len(idl_nm) > 1 else 0.0
    extent = (float(sig_nm[rows].max() - sig_nm[rows].min()) + d_sig,
              float(idl_nm[cols].max() - idl_nm[cols].min()) + d_idl)
    return extent, roundness


def detect_islands(jsf: Jsf, threshold_fraction: float = DEFAULT_THRESHOLD,
                   min_mass_fraction: float = DEFAULT_MIN_MASS,
                   exclude_degenerate: bool = True,
                   fold_mirror: bool = True) -> list[IslandReport]:
    """Segment the JSI into islands and rank them by detuning.

    Pixels above ``threshold_fraction`` of the global maximum are grouped
    by 8-connectivity. Components lighter than ``min_mass_fraction`` of
    the total mass are dropped (they are secondary interference lobes,
    not collection islands). With ``exclude_degenerate`` the component
    straddling the w_s = w_i diagonal is dropped too: it is the
    frequency-degenerate band, useless for heralding. Mirror-image twins
    (the spectrum is exchange symmetric) are folded onto the
    signal-red-of-idler side when ``fold_mirror`` is set. An all-zero or
    fully sub-threshold JSI returns an empty list.
    """
    if not 0.0 < threshold_fraction < 1.0:
        raise ConfigurationError("threshold_fraction must be in (0, 1)")
    inten = jsf.intensity
    peak = inten.max()
    if peak <= 0.0:
        return []
    labels, n = _components(inten >= threshold_fraction * peak)
    if n == 0:
        return []

    omega_s = jsf.grid.signal_omega
    omega_i = jsf.grid.idler_omega
    sig_nm = jsf.grid.signal_nm
    idl_nm = jsf.grid.idler_nm
    total_mass = inten.sum()

    found = []
    for lab in range(1, n + 1):
        comp = labels == lab
        mass = float(inten[comp].sum() / total_mass)
        if mass < min_mass_fraction:
            continue
        rows, cols = np.nonzero(comp)
        w = inten[rows, cols]
        w = w / w.sum()
        cen_sig = float(w @ sig_nm[rows])
        cen_idl = float(w @ idl_nm[cols])
        det_vals = omega_s[rows] - omega_i[cols]
        straddles = det_vals.min() <= 0.0 <= det_vals.max()
        detuning = abs(float(w @ omega_s[rows]) - float(w @ omega_i[cols]))
        extent, roundness = _half_max_stats(inten, comp, sig_nm, idl_nm,
                                            omega_s, omega_i)
        found.append(dict(centroid=(cen_sig, cen_idl), extent=extent,
                          roundness=roundness, mass=mass, detuning=detuning,
                          straddles=straddles))

    non_degenerate = [f for f in found if not f["straddles"]]
    if exclude_degenerate and non_degenerate:
        found = non_degenerate

    if fold_mirror:
        kept = []
        used = [False] * len(found)
        for i, f in enumerate(found):
            if used[i]:
                continue
            for j in range(i + 1, len(found)):
                g = found[j]
                if used[j]:
                    continue
                # mirror twin: centroids swap under signal<->idler exchange
                if (abs(f["centroid"][0] - g["centroid"][1]) < 0.5 * (f["extent"][0] + g["extent"][1])
                        and abs(f["centroid"][1] - g["centroid"][0]) < 0.5 * (f["extent"][1] + g["extent"][0])
                        and abs(f["detuning"] - g["detuning"]) < 0.2 * max(f["detuning"], g["detuning"], 1.0)):
                    used[j] = True
                    if g["centroid"][0] > f["centroid"][0]:
                        f = g
                    break
            kept.append(f)
        found = kept

    found.sort(key=lambda f: f["detuning"])
    return [
        IslandReport(index=m, centroid_nm=f["centroid"], extent_nm=f["extent"],
                     roundness=f["roundness"], island_mass=f["mass"],
                     detuning_rad_s=f["detuning"])
        for m, f in enumerate(found, start=1)
    ]


def score_island(jsf: Jsf, island: IslandReport,
                 bandwidths_nm=(0.5, 1.0, 1.5)) -> IslandReport:
    """Evaluate filter choices centered on an island.

    For each candidate bandwidth a rectangular dual-band filter centered
    on the island centroid is applied; the filtered mode number M and the
    spectral heralding efficiencies are computed, and the bandwidth
    maximizing h_s * h_i / M is recorded on the returned report.
    """
    bandwidths_nm = list(bandwidths_nm)
    if not bandwidths_nm:
        raise ConfigurationError("need at least one candidate bandwidth")
    best = None
    for bw in bandwidths_nm:
        filt = centered_filter(island.centroid_nm[0], island.centroid_nm[1], bw)
        filtered = apply_filter(jsf, filt)
        if filtered.metadata["pass_probability"] <= 0.0:
            raise ConfigurationError("filter does not overlap the island")
        m = schmidt_decompose(filtered).mode_number
        h = heralding_efficiencies(jsf, filt)
        score = h.h_s_spectral * h.h_i_spectral / m
        if best is None or score > best[0]:
            best = (score, bw, m, h)
    score, bw, m, h = best
    return replace(island, filtered_mode_number=m, filtered_h_s=h.h_s_spectral,
                   filtered_h_i=h.h_i_spectral, best_bandwidth_nm=bw,
                   best_score=score)


def roundest_island(islands: list[IslandReport]) -> IslandReport:
    """The island with the largest roundness (ties broken by lower index)."""
    if not islands:
        raise ConfigurationError("no islands detected")
    return max(islands, key=lambda isl: (isl.roundness, -isl.index))


def inter_island_contrast(jsf: Jsf, islands: list[IslandReport] | None = None) -> float:
    """Valley-to-peak intensity contrast between the first two islands.

    The valley statistic is the mean JSI over pixels whose detuning lies
    strictly between the m=1 and m=2 island centroids while staying on
    the live energy-conservation ridge (pump envelope >= 0.5), divided by
    the m=1 island peak. Sharper inter-island suppression (more stages)
    makes this smaller. The pointwise minimum is useless here since the
    interference factor has exact zeros between islands at every N.
    """
    if islands is None:
        islands = detect_islands(jsf)
    if len(islands) < 2:
        raise ConfigurationError("need at least two islands for a contrast")
    cfg = jsf.metadata.get("config")
    if cfg is None:
        raise ConfigurationError("jsf metadata lacks the configuration echo")
    from .spectral import PumpSpec  # local to avoid import noise at module top

    pump = PumpSpec(**cfg["pump"])
    omega_s = jsf.grid.signal_omega[:, None]
    omega_i = jsf.grid.idler_omega[None, :]
    env = pump_envelope(omega_s, omega_i, pump)
    det = np.abs(omega_s - omega_i)
    lo, hi = sorted((islands[0].detuning_rad_s, islands[1].detuning_rad_s))
    valley = (env >= 0.5) & (det > lo) & (det < hi)
    if not valley.any():
        raise ConfigurationError("no valley pixels between the first two islands")
    inten = jsf.intensity
    ridge = (env >= 0.5) & (np.abs(det - islands[0].detuning_rad_s)
                            < 0.25 * (hi - lo))
    island_peak = float(inten[ridge].max())
    return float(inten[valley].mean() / island_peak)


def sweep_design(base_config: NliConfig, grid: FrequencyGrid,
                 pump_fwhms_nm, smf_lengths_m, stages_list,
                 bandwidths_nm=(0.5, 1.0, 1.5),
                 island_choice: str = "roundest") -> list[DesignPoint]:
    """Exhaustive sweep over (pump bandwidth, spacer length, stage count).

    Every combination is evaluated on the given grid: islands are
    detected, one island is selected (``island_choice`` is "roundest" or
    an integer index m), and filter bandwidths are scored on it. The
    returned table is sorted by the composite score h_s*h_i*island_mass/M,
    descending, with deterministic tie-breaking, regardless of evaluation
    order.
    """
    pump_fwhms_nm = list(pump_fwhms_nm)
    smf_lengths_m = list(smf_lengths_m)
    stages_list = list(stages_list)
    if not pump_fwhms_nm or not smf_lengths_m or not stages_list:
        raise ConfigurationError("sweep ranges must be non-empty")

    points = []
    for fwhm, length, stages in product(pump_fwhms_nm, smf_lengths_m, stages_list):
        cfg = replace(base_config,
                      pump=replace(base_config.pump, fwhm_nm=fwhm),
                      smf=replace(base_config.smf, length_m=length),
                      stages=stages)
        jsf = compute_jsf(grid, cfg)
        islands = detect_islands(jsf)
        if not islands:
            continue
        if island_choice == "roundest":
            target = roundest_island(islands)
        else:
            idx = int(island_choice)
            matches = [isl for isl in islands if isl.index == idx]
            if not matches:
                continue
            target = matches[0]
        scored = score_island(jsf, target, bandwidths_nm)
        points.append(DesignPoint(
            pump_fwhm_nm=fwhm, smf_length_m=length, stages=stages,
            island_index=scored.index, centroid_nm=scored.centroid_nm,
            bandwidth_nm=scored.best_bandwidth_nm,
            mode_number=scored.filtered_mode_number,
            h_s=scored.filtered_h_s, h_i=scored.filtered_h_i,
            island_mass=scored.island_mass, roundness=scored.roundness))

    points.sort(key=lambda p: (-p.composite_score, p.pump_fwhm_nm,
                               p.smf_length_m, p.stages))
    return points


__all__ = [
    "IslandReport", "DesignPoint", "detect_islands", "score_island",
    "roundest_island", "inter_island_contrast", "sweep_design",
]
