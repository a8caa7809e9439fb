import numpy as np
import pytest

from nliphoton import (
    ConfigurationError,
    FilterSpec,
    Jsf,
    centered_filter,
    default_grid,
    g2_heralded_prediction,
    g2_unheralded_prediction,
    geometric_schmidt_weights,
    heralding_efficiencies,
    predicted_hom_visibility,
    schmidt_decompose,
)
from nliphoton.units import NM, omega_from_wavelength, wavelength_from_omega

CENTER_S = omega_from_wavelength(1553.7 * NM)
CENTER_I = omega_from_wavelength(1543.8 * NM)


def gaussian_jsf(a, b, grid=None):
    """exp(-a nu_plus^2 - b nu_minus^2) around the reference band centers."""
    grid = grid or default_grid(384)
    nu_s = grid.signal_omega[:, None] - CENTER_S
    nu_i = grid.idler_omega[None, :] - CENTER_I
    amp = np.exp(-a * (nu_s + nu_i) ** 2 - b * (nu_s - nu_i) ** 2)
    norm = np.sqrt(np.sum(np.abs(amp) ** 2) * grid.cell_area)
    return Jsf(grid=grid, amplitude=amp / norm)


# ------------------------------------------------------- schmidt spectrum


def test_separable_gaussian_is_single_mode():
    result = schmidt_decompose(gaussian_jsf(a=1e-23, b=1e-23))
    assert result.mode_number - 1.0 < 1e-6
    assert result.purity == pytest.approx(1.0, abs=1e-6)


@pytest.mark.parametrize("ratio,points", [(4.0, 384), (9.0, 384), (25.0, 1024)])
def test_correlated_gaussian_matches_analytic_mode_number(ratio, points):
    # for exp(-a nu_plus^2 - b nu_minus^2) the Schmidt number is
    # (a + b) / (2 sqrt(a b)); independent of overall scale. The narrow
    # anti-diagonal at large ratios needs the finer grid to resolve.
    scale = 2e11
    a = 1.0 / (2.0 * scale**2)
    b = ratio / (2.0 * scale**2)
    expected = (a + b) / (2.0 * np.sqrt(a * b))
    result = schmidt_decompose(gaussian_jsf(a, b, grid=default_grid(points)))
    assert result.mode_number == pytest.approx(expected, rel=1e-2)


def test_schmidt_weights_are_normalized_and_descending():
    result = schmidt_decompose(gaussian_jsf(a=1e-23, b=9e-23))
    assert result.weights.sum() == pytest.approx(1.0, rel=1e-12)
    assert np.all(np.diff(result.weights) <= 1e-15)
    assert result.mode_number == pytest.approx(1.0 / result.purity, rel=1e-12)


def test_schmidt_modes_are_orthonormal():
    result = schmidt_decompose(gaussian_jsf(a=1.0 / (2 * 4e22), b=9.0 / (2 * 4e22)))
    for modes in (result.signal_modes, result.idler_modes):
        gram = np.conj(modes) @ modes.T
        assert np.allclose(gram, np.eye(modes.shape[0]), atol=1e-10)


def test_schmidt_reconstruction_from_modes():
    # weights + mode functions reconstruct the matrix up to the stored
    # truncation tail (1e-6 in weight, so ~1e-3 in amplitude)
    jsf = gaussian_jsf(a=1.0 / (2 * 4e22), b=4.0 / (2 * 4e22))
    result = schmidt_decompose(jsf)
    sv = np.sqrt(result.weights[: result.signal_modes.shape[0]])
    rebuilt = (result.signal_modes.T * sv) @ result.idler_modes
    scale = np.sqrt(np.sum(np.abs(jsf.amplitude) ** 2))
    assert np.max(np.abs(rebuilt * scale - jsf.amplitude)) < 1e-3 * np.max(
        np.abs(jsf.amplitude))


# ------------------------------------------------------------- heralding


def test_full_band_filter_gives_unit_heralding():
    jsf = gaussian_jsf(a=1e-23, b=4e-23)
    filt = centered_filter(1553.7, 1543.8, 30.0)
    report = heralding_efficiencies(jsf, filt)
    assert report.h_s_spectral == pytest.approx(1.0, abs=1e-9)
    assert report.h_i_spectral == pytest.approx(1.0, abs=1e-9)
    assert report.pair_pass_probability == pytest.approx(1.0, abs=1e-9)


def test_half_band_on_uniform_separable_amplitude():
    # a flat separable amplitude with a signal band covering exactly half
    # the signal cells: the signal photon passes with probability 1/2, so
    # h_s (signal survival given the idler passed its full band) is 1/2
    # while h_i stays 1
    grid = default_grid(256)
    jsf = Jsf(grid=grid, amplitude=np.ones(grid.shape))
    w = grid.signal_omega
    dw = w[1] - w[0]
    w_mid = 0.5 * ((w[0] - dw / 2.0) + (w[-1] + dw / 2.0))
    lo_nm = wavelength_from_omega(w[-1] + dw / 2.0) / NM
    hi_nm = wavelength_from_omega(w_mid) / NM
    filt = FilterSpec(signal_center_nm=(lo_nm + hi_nm) / 2.0,
                      signal_bandwidth_nm=hi_nm - lo_nm,
                      idler_center_nm=1548.5, idler_bandwidth_nm=60.0)
    report = heralding_efficiencies(jsf, filt)
    assert report.h_s_spectral == pytest.approx(0.5, abs=1e-6)
    assert report.h_i_spectral == pytest.approx(1.0, abs=1e-9)
    assert report.pair_pass_probability == pytest.approx(0.5, abs=1e-6)


def test_heralding_monotone_in_bandwidth():
    jsf = gaussian_jsf(a=1e-23, b=4e-23)
    values = [heralding_efficiencies(jsf, centered_filter(1553.7, 1543.8, bw)).h_s_spectral
              for bw in (0.25, 0.5, 1.0, 2.0, 4.0)]
    assert all(lo <= hi + 1e-12 for lo, hi in zip(values, values[1:]))


def test_heralding_off_band_raises():
    jsf = gaussian_jsf(a=1e-23, b=4e-23)
    with pytest.raises(ConfigurationError):
        heralding_efficiencies(jsf, centered_filter(1536.0, 1561.0, 0.05))


# ------------------------------------------------------------ visibility


def test_self_visibility_equals_purity():
    result = schmidt_decompose(gaussian_jsf(a=1.0 / (2 * 4e22), b=9.0 / (2 * 4e22)))
    v0 = predicted_hom_visibility(result, result, 0.0)
    assert v0 == pytest.approx(result.purity, abs=1e-9)


def test_visibility_decays_with_delay():
    result = schmidt_decompose(gaussian_jsf(a=1.0 / (2 * 4e22), b=4.0 / (2 * 4e22)))
    delays = np.array([0.0, 1e-12, 2e-12, 5e-12, 50e-12])
    vals = [predicted_hom_visibility(result, result, t) for t in delays]
    assert all(lo >= hi - 1e-12 for lo, hi in zip(vals, vals[1:]))
    assert vals[-1] < 0.1 * vals[0]


def test_visibility_grid_mismatch_raises():
    a = schmidt_decompose(gaussian_jsf(a=1e-23, b=4e-23, grid=default_grid(128)))
    b = schmidt_decompose(gaussian_jsf(a=1e-23, b=4e-23, grid=default_grid(256)))
    with pytest.raises(ConfigurationError):
        predicted_hom_visibility(a, b)


# ------------------------------------------------------------ predictions


def test_g2_predictions():
    assert g2_unheralded_prediction(1.0) == pytest.approx(2.0)
    assert g2_unheralded_prediction(1.04) == pytest.approx(1.0 + 1.0 / 1.04)
    got = g2_heralded_prediction(0.043, 0.91, 0.905, 1.04)
    assert got == pytest.approx(2.0 * 0.043 / (0.91 * 0.905) * (1.0 + 1.0 / 1.04),
                                rel=1e-12)
    with pytest.raises(ConfigurationError):
        g2_unheralded_prediction(0.5)
    with pytest.raises(ConfigurationError):
        g2_heralded_prediction(0.043, 0.0, 0.9, 1.04)


# ------------------------------------------------------- geometric ladder


@pytest.mark.parametrize("m", [1.0, 1.04, 1.5, 2.0, 5.0])
def test_geometric_weights_realize_mode_number(m):
    lam = geometric_schmidt_weights(m)
    assert lam.sum() == pytest.approx(1.0, rel=1e-12)
    assert np.all(lam >= 0)
    k = 1.0 / np.sum(lam**2)
    assert k == pytest.approx(m, rel=1e-9)


def test_geometric_weights_single_mode_shortcut():
    lam = geometric_schmidt_weights(1.0)
    assert lam.shape == (1,)
    assert lam[0] == 1.0
    with pytest.raises(ConfigurationError):
        geometric_schmidt_weights(0.99)
