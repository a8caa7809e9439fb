import numpy as np
import pytest

from nliphoton import (
    ConfigurationError,
    DsfSpec,
    Jsf,
    NliConfig,
    PumpSpec,
    SmfSpec,
    compute_jsf,
    default_grid,
    detect_islands,
    inter_island_contrast,
    roundest_island,
    score_island,
    sweep_design,
)
from nliphoton.units import NM, omega_from_wavelength


def reference_config(**overrides):
    kwargs = dict(
        stages=3,
        dsf=DsfSpec(length_m=150.0, zero_dispersion_nm=1548.5,
                    dispersion_slope_ps_nm2_km=0.075,
                    nonlinear_coefficient_per_w_km=2.0),
        smf=SmfSpec(length_m=20.0, dispersion_ps_nm_km=17.0),
        pump=PumpSpec(center_nm=1548.8, fwhm_nm=1.0, peak_power_w=0.35),
        theta_mode="approximate",
    )
    kwargs.update(overrides)
    return NliConfig(**kwargs)


@pytest.fixture(scope="module")
def reference_islands():
    jsf = compute_jsf(default_grid(512), reference_config())
    return jsf, detect_islands(jsf)


# --------------------------------------------------------- segmentation


def test_synthetic_blob_detection():
    # two mirror Gaussian blobs off the diagonal plus one degenerate blob:
    # mirror folding keeps one island, the degenerate blob is dropped
    grid = default_grid(256)
    c_hi = omega_from_wavelength(1554.0 * NM)
    c_lo = omega_from_wavelength(1543.6 * NM)
    c_0 = omega_from_wavelength(1548.8 * NM)
    sig = 5e11  # ~0.6 nm, several grid cells wide
    ws = grid.signal_omega[:, None]
    wi = grid.idler_omega[None, :]

    def blob(cs, ci):
        return np.exp(-((ws - cs) ** 2 + (wi - ci) ** 2) / (2.0 * sig**2))

    amp = blob(c_hi, c_lo) + blob(c_lo, c_hi) + 0.8 * blob(c_0, c_0)
    jsf = Jsf(grid=grid, amplitude=amp)

    islands = detect_islands(jsf)
    assert len(islands) == 1
    got = islands[0]
    assert got.centroid_nm[0] == pytest.approx(1554.0, abs=0.02)
    assert got.centroid_nm[1] == pytest.approx(1543.6, abs=0.02)
    assert got.roundness == pytest.approx(1.0, abs=0.05)

    unfolded = detect_islands(jsf, fold_mirror=False)
    assert len(unfolded) == 2
    with_degenerate = detect_islands(jsf, exclude_degenerate=False,
                                     fold_mirror=False)
    assert len(with_degenerate) == 3


def test_blank_jsi_yields_no_islands():
    grid = default_grid(64)
    assert detect_islands(Jsf(grid=grid, amplitude=np.zeros(grid.shape))) == []


def test_threshold_validation():
    grid = default_grid(64)
    jsf = Jsf(grid=grid, amplitude=np.ones(grid.shape))
    with pytest.raises(ConfigurationError):
        detect_islands(jsf, threshold_fraction=0.0)


# ------------------------------------------------------ reference layout


def test_reference_island_count_and_first_centroid(reference_islands):
    _, islands = reference_islands
    assert len(islands) == 7
    first = islands[0]
    assert first.index == 1
    assert first.centroid_nm[0] == pytest.approx(1553.644, abs=0.02)
    assert first.centroid_nm[1] == pytest.approx(1543.985, abs=0.02)


def test_islands_ordered_by_detuning(reference_islands):
    _, islands = reference_islands
    detunings = [isl.detuning_rad_s for isl in islands]
    assert all(lo < hi for lo, hi in zip(detunings, detunings[1:]))
    assert [isl.index for isl in islands] == list(range(1, len(islands) + 1))


def test_reference_roundness_profile(reference_islands):
    _, islands = reference_islands
    r = {isl.index: isl.roundness for isl in islands}
    assert r[1] == pytest.approx(0.660, abs=0.02)
    assert r[2] == pytest.approx(0.941, abs=0.02)
    assert r[3] == pytest.approx(0.875, abs=0.02)
    assert roundest_island(islands).index == 2


def test_exact_phase_mode_shifts_centroid_slightly(reference_islands):
    _, islands = reference_islands
    exact = detect_islands(compute_jsf(default_grid(512),
                                       reference_config(theta_mode="exact")))
    d_sig = exact[0].centroid_nm[0] - islands[0].centroid_nm[0]
    assert 0.01 < abs(d_sig) < 0.15


def test_island_detuning_invariant_under_pump_center_shift(reference_islands):
    # the interference phase depends only on the detuning, so moving the
    # pump center relocates islands in wavelength but not in detuning
    _, islands = reference_islands
    shifted = detect_islands(compute_jsf(
        default_grid(512),
        reference_config(pump=PumpSpec(center_nm=1549.0, fwhm_nm=1.0,
                                       peak_power_w=0.35))))
    for a, b in zip(islands[:3], shifted[:3]):
        assert b.detuning_rad_s == pytest.approx(a.detuning_rad_s, rel=5e-3)
    assert shifted[0].centroid_nm[0] > islands[0].centroid_nm[0]


def test_island_spacing_follows_inverse_sqrt_spacer_length(reference_islands):
    _, islands = reference_islands
    short = detect_islands(compute_jsf(
        default_grid(512),
        reference_config(smf=SmfSpec(length_m=11.0, dispersion_ps_nm_km=17.0))))
    ratio = short[0].detuning_rad_s / islands[0].detuning_rad_s
    assert ratio == pytest.approx(np.sqrt(20.0 / 11.0), rel=0.02)


# ---------------------------------------------------------------- scoring


def test_score_island_reports_best_bandwidth(reference_islands):
    jsf, islands = reference_islands
    scored = score_island(jsf, islands[0], bandwidths_nm=(0.5, 1.0, 1.5))
    assert scored.best_bandwidth_nm in (0.5, 1.0, 1.5)
    assert scored.filtered_mode_number >= 1.0
    assert 0.0 < scored.filtered_h_s <= 1.0
    assert 0.0 < scored.filtered_h_i <= 1.0
    assert scored.best_score == pytest.approx(
        scored.filtered_h_s * scored.filtered_h_i / scored.filtered_mode_number,
        rel=1e-12)
    with pytest.raises(ConfigurationError):
        score_island(jsf, islands[0], bandwidths_nm=())


def test_wider_bandwidth_raises_heralding_lowers_purity(reference_islands):
    jsf, islands = reference_islands
    narrow = score_island(jsf, islands[0], bandwidths_nm=(0.75,))
    wide = score_island(jsf, islands[0], bandwidths_nm=(1.5,))
    assert wide.filtered_h_s > narrow.filtered_h_s
    assert wide.filtered_mode_number > narrow.filtered_mode_number


# --------------------------------------------------------------- contrast


def test_contrast_decreases_with_stage_count():
    grid = default_grid(512)
    vals = []
    for stages in (2, 3, 4):
        jsf = compute_jsf(grid, reference_config(stages=stages))
        vals.append(inter_island_contrast(jsf))
    assert all(hi >= lo - 1e-12 for hi, lo in zip(vals, vals[1:]))
    assert vals[0] > vals[-1]
    # valley suppression deepens with stage count; anchor the reference
    assert vals[1] == pytest.approx(0.235, abs=0.02)


def test_contrast_needs_two_islands():
    grid = default_grid(256)
    jsf = compute_jsf(grid, reference_config())
    with pytest.raises(ConfigurationError):
        inter_island_contrast(jsf, islands=detect_islands(jsf)[:1])


# ------------------------------------------------------------------ sweep


def test_sweep_covers_grid_and_sorts_by_score():
    points = sweep_design(reference_config(), default_grid(256),
                          pump_fwhms_nm=(1.0, 1.5), smf_lengths_m=(11.0, 20.0),
                          stages_list=(2, 3))
    assert len(points) == 8
    combos = {(p.pump_fwhm_nm, p.smf_length_m, p.stages) for p in points}
    assert len(combos) == 8
    scores = [p.composite_score for p in points]
    assert all(hi >= lo - 1e-15 for hi, lo in zip(scores, scores[1:]))


def test_sweep_wider_pump_prefers_inner_island():
    # a wider pump stretches islands along the energy axis, so the
    # roundest island moves inward (smaller index)
    points = sweep_design(reference_config(), default_grid(256),
                          pump_fwhms_nm=(0.5, 1.5), smf_lengths_m=(20.0,),
                          stages_list=(3,))
    by_fwhm = {p.pump_fwhm_nm: p for p in points}
    assert by_fwhm[1.5].island_index <= by_fwhm[0.5].island_index


def test_sweep_island_index_selection():
    points = sweep_design(reference_config(), default_grid(256),
                          pump_fwhms_nm=(1.0,), smf_lengths_m=(20.0,),
                          stages_list=(3,), island_choice=2)
    assert len(points) == 1
    assert points[0].island_index == 2


def test_sweep_rejects_empty_ranges():
    with pytest.raises(ConfigurationError):
        sweep_design(reference_config(), default_grid(128), (), (20.0,), (3,))
