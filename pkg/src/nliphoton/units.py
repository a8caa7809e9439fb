"""Physical constants and unit conversions.

All internal computation runs in SI (rad/s, m, s, W). Fiber-optics
quantities are usually quoted in mixed lab units (nm, ps, km); the
converters below are the single place where those units are translated,
so every formula elsewhere can assume SI.
"""

from __future__ import annotations

import math

C_LIGHT = 299_792_458.0  # vacuum speed of light, m/s
TWO_PI = 2.0 * math.pi

NM = 1e-9
PS = 1e-12
KM = 1e3
US = 1e-6

# intensity FWHM of a Gaussian = 2*sqrt(2 ln 2) * sigma
FWHM_TO_SIGMA = 2.0 * math.sqrt(2.0 * math.log(2.0))


def omega_from_wavelength(wavelength_m):
    """Angular frequency (rad/s) for a vacuum wavelength in meters."""
    return TWO_PI * C_LIGHT / wavelength_m


def wavelength_from_omega(omega_rad_s):
    """Vacuum wavelength (m) for an angular frequency in rad/s."""
    return TWO_PI * C_LIGHT / omega_rad_s


def pump_sigma_from_fwhm(center_wavelength_m: float, fwhm_wavelength_m: float) -> float:
    """Gaussian spectral width sigma (rad/s) from an intensity-FWHM bandwidth.

    The bandwidth is interpreted as the intensity full width at half
    maximum of a Gaussian pulse spectrum, measured in wavelength. The
    corresponding angular-frequency FWHM is (2 pi c / lambda^2) * d_lambda
    and sigma = FWHM / (2 sqrt(2 ln 2)).
    """
    fwhm_omega = TWO_PI * C_LIGHT / center_wavelength_m**2 * fwhm_wavelength_m
    return fwhm_omega / FWHM_TO_SIGMA


def dispersion_si(dispersion_ps_per_nm_km: float) -> float:
    """Convert a dispersion parameter D from ps/(nm km) to s/m^2."""
    return dispersion_ps_per_nm_km * PS / (NM * KM)


def dispersion_slope_si(slope_ps_per_nm2_km: float) -> float:
    """Convert a dispersion slope dD/d(lambda) from ps/(nm^2 km) to s/m^3."""
    return slope_ps_per_nm2_km * PS / (NM**2 * KM)


def beta2_from_dispersion_slope(
    pump_wavelength_m: float,
    zero_dispersion_wavelength_m: float,
    slope_ps_per_nm2_km: float,
) -> float:
    """Second-order dispersion k'' (s^2/m) of a fiber near its zero-dispersion point.

    The dispersion parameter is modeled as D(lambda) = S * (lambda - lambda_zd),
    linear in wavelength with slope S, and converted through
    k'' = lambda^2 D / (2 pi c) evaluated at the pump wavelength. The sign
    follows that expression directly: positive when the pump sits on the
    long-wavelength side of the zero-dispersion point.
    """
    slope = dispersion_slope_si(slope_ps_per_nm2_km)
    d_at_pump = slope * (pump_wavelength_m - zero_dispersion_wavelength_m)
    return pump_wavelength_m**2 / (TWO_PI * C_LIGHT) * d_at_pump


def gamma_si(gamma_per_w_km: float) -> float:
    """Convert a nonlinear coefficient from 1/(W km) to 1/(W m)."""
    return gamma_per_w_km / KM
