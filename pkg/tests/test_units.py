import numpy as np
import pytest

from nliphoton import units


def test_wavelength_omega_round_trip():
    wl = np.array([1535.0, 1548.8, 1562.0]) * units.NM
    assert np.allclose(units.wavelength_from_omega(units.omega_from_wavelength(wl)), wl,
                       rtol=1e-15)


def test_pump_sigma_from_fwhm_known_value():
    # 1 nm FWHM at 1548.8 nm, converted to an angular-frequency std dev
    sigma = units.pump_sigma_from_fwhm(1548.8e-9, 1.0e-9)
    assert sigma == pytest.approx(3.3347e11, rel=1e-4)


def test_pump_sigma_scales_linearly_with_fwhm():
    s1 = units.pump_sigma_from_fwhm(1548.8e-9, 0.5e-9)
    s2 = units.pump_sigma_from_fwhm(1548.8e-9, 1.5e-9)
    assert s2 / s1 == pytest.approx(3.0, rel=1e-6)


def test_beta2_dual_path_agreement():
    # k'' from the slope should match the conversion applied to
    # D(lambda) = S0 * (lambda - lambda0) at the pump, computed
    # independently: k'' = lambda^2 D / (2 pi c). pytest.approx needs
    # abs=0 here or its default absolute floor swamps 1e-29 magnitudes.
    lam_p = 1548.8e-9
    lam_0 = 1548.5e-9
    slope = 0.075
    beta2 = units.beta2_from_dispersion_slope(lam_p, lam_0, slope)
    d_si = units.dispersion_slope_si(slope) * (lam_p - lam_0)
    expected = lam_p**2 * d_si / (units.TWO_PI * units.C_LIGHT)
    assert beta2 == pytest.approx(expected, rel=1e-12, abs=0.0)


def test_beta2_frozen_reference_value():
    # positive k'' above the zero-dispersion wavelength; combined with
    # the -2 gamma P shift this puts the phase-matched detuning at a
    # finite value, which is what creates the sinc ridge
    beta2 = units.beta2_from_dispersion_slope(1548.8e-9, 1548.5e-9, 0.075)
    assert beta2 == pytest.approx(2.8653e-29, rel=1e-4, abs=0.0)
    below = units.beta2_from_dispersion_slope(1548.2e-9, 1548.5e-9, 0.075)
    assert below < 0.0


def test_dispersion_si_conversion():
    # 17 ps/(nm km) in SI s/m^2
    assert units.dispersion_si(17.0) == pytest.approx(17.0e-12 / (1e-9 * 1e3), rel=1e-15)


def test_gamma_si_conversion():
    assert units.gamma_si(2.0) == pytest.approx(2.0e-3, rel=1e-15)


def test_fwhm_to_sigma_constant():
    assert units.FWHM_TO_SIGMA == pytest.approx(np.sqrt(8.0 * np.log(2.0)), rel=1e-12)
