"""Schmidt structure, purity, heralding efficiency, and visibility predictions.

A biphoton amplitude F(w_s, w_i) factors through its singular value
decomposition into orthonormal signal/idler mode pairs with weights
lambda_k. The mode number M = 1 / sum(lambda_k^2) measures how many
effective pair modes the source emits; M = 1 is a factorable, spectrally
pure source. Heralding efficiencies are conditional band-membership
probabilities of |F|^2.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import ConfigurationError
from .spectral import FilterSpec, Jsf, band_coverage

# mode functions are stored until the cumulative weight reaches 1 minus this tail
_TRUNCATION_TAIL = 1e-6


@dataclass
class SchmidtResult:
    """Schmidt spectrum of a joint amplitude.

    ``weights`` sum to 1 (descending). ``signal_modes[k]`` and
    ``idler_modes[k]`` are the leading discretized mode functions, unit
    vectors on the stored omega axes; the list is truncated once the
    cumulative weight reaches 1 - 1e-6 while ``purity`` and
    ``mode_number`` always use the full spectrum.
    """

    weights: np.ndarray
    purity: float
    mode_number: float
    signal_modes: np.ndarray
    idler_modes: np.ndarray
    signal_omega: np.ndarray
    idler_omega: np.ndarray

    def to_report(self) -> dict:
        return {
            "weights": [float(w) for w in self.weights],
            "purity": self.purity,
            "mode_number": self.mode_number,
            "modes_kept": int(self.signal_modes.shape[0]),
        }


@dataclass
class HeraldingReport:
    """Spectral (band-membership) heralding efficiencies.

    h_s_spectral: probability the signal photon falls in its band given
    the idler landed in the idler band; h_i_spectral is the mirror case.
    ``pair_pass_probability`` is the probability both photons pass.
    """

    h_s_spectral: float
    h_i_spectral: float
    pair_pass_probability: float

    def to_report(self) -> dict:
        return {
            "h_s_spectral": self.h_s_spectral,
            "h_i_spectral": self.h_i_spectral,
            "pair_pass_probability": self.pair_pass_probability,
        }


def schmidt_decompose(jsf: Jsf) -> SchmidtResult:
    """Singular value decomposition of the (cell-weighted) amplitude matrix.

    Weights are lambda_k = s_k^2 / sum s^2, purity = sum lambda^2 and
    mode_number = 1/purity. Works on filtered amplitudes too; the overall
    norm cancels.
    """
    if jsf.norm_squared <= 0.0:
        raise ConfigurationError("cannot decompose a zero-norm amplitude")
    # the cell measure sqrt(dw_s dw_i) makes the matrix an L2 discretization;
    # for a uniform grid it only rescales the singular values
    u, s, vh = np.linalg.svd(jsf.amplitude, full_matrices=False)
    lam = s**2
    lam = lam / lam.sum()
    purity = float(np.sum(lam**2))
    keep = int(np.searchsorted(np.cumsum(lam), 1.0 - _TRUNCATION_TAIL) + 1)
    keep = min(keep, lam.size)
    return SchmidtResult(
        weights=lam,
        purity=purity,
        mode_number=1.0 / purity,
        signal_modes=u[:, :keep].T.copy(),
        idler_modes=vh[:keep].conj().copy(),
        signal_omega=jsf.grid.signal_omega,
        idler_omega=jsf.grid.idler_omega,
    )


def heralding_efficiencies(jsf_unfiltered: Jsf, filt: FilterSpec) -> HeraldingReport:
    """Band-membership heralding efficiencies from |F|^2 masses.

    Uses ideal (unit-transmission, infinite-extinction) band indicators
    with fractional cell coverage; filter loss belongs to the counting
    model, not here. h_s = P(signal in band and idler in band) / P(idler
    in band), and symmetrically for h_i.
    """
    inten = jsf_unfiltered.intensity * jsf_unfiltered.grid.cell_area
    total = inten.sum()
    if total <= 0:
        raise ConfigurationError("zero-norm amplitude")
    cov_s = band_coverage(jsf_unfiltered.grid.signal_omega, *filt.signal_band_nm())
    cov_i = band_coverage(jsf_unfiltered.grid.idler_omega, *filt.idler_band_nm())
    mass_both = float(cov_s @ inten @ cov_i) / total
    mass_signal = float(cov_s @ inten.sum(axis=1)) / total
    mass_idler = float(inten.sum(axis=0) @ cov_i) / total
    if mass_signal <= 0 or mass_idler <= 0:
        raise ConfigurationError("heralding band carries no spectral mass")
    return HeraldingReport(
        h_s_spectral=mass_both / mass_idler,
        h_i_spectral=mass_both / mass_signal,
        pair_pass_probability=mass_both,
    )


def predicted_hom_visibility(a: SchmidtResult, b: SchmidtResult, delay_s: float = 0.0) -> float:
    """Overlap of the two heralded signal states at a relative delay.

    Each heralded photon is the Schmidt-weight mixture of its signal
    modes; the delayed source picks up a linear spectral phase
    exp(j w tau). Returns Tr[rho_a rho_b(tau)], which for two copies of
    the same decomposition at tau = 0 equals the purity (V = 1/M).
    """
    if a.signal_omega.shape != b.signal_omega.shape or \
            not np.allclose(a.signal_omega, b.signal_omega):
        raise ConfigurationError("visibility prediction needs identical signal grids")
    ka = a.signal_modes.shape[0]
    kb = b.signal_modes.shape[0]
    phase = np.exp(1j * b.signal_omega * delay_s)
    # overlap matrix O[k, l] = <psi_a_k | exp(j w tau) | psi_b_l>
    overlap = np.conj(a.signal_modes) @ (phase[None, :] * b.signal_modes).T
    wa = a.weights[:ka]
    wb = b.weights[:kb]
    v = float(np.real(wa @ (np.abs(overlap) ** 2) @ wb))
    return v


def g2_heralded_prediction(collected_pair_rate: float, h_s: float, h_i: float,
                           mode_number: float) -> float:
    """Heralded second-order correlation of a weak multimode pair source.

    g2 = (2 R_c / (h_s h_i)) (1 + 1/M) with R_c the collected pair rate
    per pulse. Multi-pair emission makes this grow linearly with rate and
    thermal bunching adds the (1 + 1/M) factor.
    """
    if collected_pair_rate < 0:
        raise ConfigurationError("pair rate must be >= 0")
    if h_s * h_i <= 0:
        raise ConfigurationError("heralding efficiencies must be positive")
    return 2.0 * collected_pair_rate / (h_s * h_i) * (1.0 + 1.0 / mode_number)


def g2_unheralded_prediction(mode_number: float) -> float:
    """Unheralded intensity correlation of one arm: g2 = 1 + 1/M."""
    if mode_number < 1.0:
        raise ConfigurationError("mode number must be >= 1")
    return 1.0 + 1.0 / mode_number


def geometric_schmidt_weights(mode_number: float, n_modes: int | None = None) -> np.ndarray:
    """Geometric weight ladder lambda_k ~ q^k realizing a target mode number.

    q = (M - 1)/(M + 1) gives sum(lambda^2) = 1/M exactly for the infinite
    ladder; enough modes are kept that the truncated ladder reproduces M
    to better than 1e-9 relative.
    """
    if mode_number < 1.0:
        raise ConfigurationError("mode number must be >= 1")
    if mode_number == 1.0:
        return np.array([1.0])
    q = (mode_number - 1.0) / (mode_number + 1.0)
    if n_modes is None:
        n_modes = max(4, int(np.ceil(np.log(1e-12) / np.log(q))))
    k = np.arange(n_modes)
    lam = (1.0 - q) * q**k
    return lam / lam.sum()


__all__ = [
    "SchmidtResult", "HeraldingReport", "schmidt_decompose",
    "heralding_efficiencies", "predicted_hom_visibility",
    "g2_heralded_prediction", "g2_unheralded_prediction",
    "geometric_schmidt_weights",
]
