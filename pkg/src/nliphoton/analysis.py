"""Estimators that turn raw counts into physical figures of merit.

Each estimator is the inverse of a mechanism in the counting model:
power-law separation of linear background from quadratic pair scattering,
accidental subtraction, Klyshko heralding, split-arm second-order
correlations with error propagation, background unmixing of intensity
correlations, dip fitting, and the staged visibility correction.

Counts go in, numbers with uncertainties come out; nothing here touches
the random number generator except the optional multi-pair correction,
which re-runs the fourfold simulation under a counterfactual setting.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field

import numpy as np
from scipy.optimize import curve_fit

from .errors import ConfigurationError


@dataclass(frozen=True)
class QuadraticFit:
    """Singles rate decomposed as linear + quadratic in pump power."""

    linear_coefficient: float
    quadratic_coefficient: float
    linear_stderr: float
    quadratic_stderr: float

    def predict(self, power_w: float) -> float:
        return (self.linear_coefficient * power_w
                + self.quadratic_coefficient * power_w**2)

    def to_report(self) -> dict:
        return {"linear_coefficient": self.linear_coefficient,
                "quadratic_coefficient": self.quadratic_coefficient,
                "linear_stderr": self.linear_stderr,
                "quadratic_stderr": self.quadratic_stderr}


def fit_singles_power(data) -> QuadraticFit:
    """Weighted least squares of counts = c1*P + c2*P**2 through the origin.

    ``data`` is a sequence of (power, counts) pairs. Weights are Poisson
    (1/max(counts, 1)). Raman scattering feeds the linear term, pair
    scattering the quadratic one. Needs at least two distinct positive
    powers; a single power level cannot separate the two terms.
    """
    pts = [(float(p), float(n)) for p, n in data]
    if len(pts) < 2:
        raise ConfigurationError("need at least two (power, counts) points")
    powers = np.array([p for p, _ in pts])
    counts = np.array([n for _, n in pts])
    if np.any(powers < 0) or np.any(counts < 0):
        raise ConfigurationError("powers and counts must be non-negative")
    if len(set(powers[powers > 0])) < 2:
        raise ConfigurationError(
            "need two distinct positive powers to separate linear and "
            "quadratic terms")
    design = np.column_stack([powers, powers**2])
    w = 1.0 / np.maximum(counts, 1.0)
    sw = np.sqrt(w)
    a = design * sw[:, None]
    if np.linalg.matrix_rank(a) < 2:
        raise ConfigurationError("power design matrix is rank deficient")
    coef, *_ = np.linalg.lstsq(a, counts * sw, rcond=None)
    cov = np.linalg.inv(a.T @ a)
    return QuadraticFit(
        linear_coefficient=float(coef[0]),
        quadratic_coefficient=float(coef[1]),
        linear_stderr=float(np.sqrt(cov[0, 0])),
        quadratic_stderr=float(np.sqrt(cov[1, 1])))


def true_coincidence(coincidences_same_pulse: float,
                     coincidences_adjacent_pulse: float) -> float:
    """Accidental-subtracted coincidences (same-pulse minus adjacent-pulse).

    A negative result is statistically possible at low rates and is
    returned as is (flagged with a warning), never clamped, so that
    averaging stays unbiased.
    """
    if coincidences_same_pulse < 0 or coincidences_adjacent_pulse < 0:
        raise ConfigurationError("coincidence counts must be non-negative")
    diff = float(coincidences_same_pulse) - float(coincidences_adjacent_pulse)
    if diff < 0:
        warnings.warn("accidental-subtracted coincidences are negative; "
                      "keeping the unbiased value", stacklevel=2)
    return diff


def heralding_from_counts(true_coincidences: float, detector_efficiency: float,
                          heralding_singles: float) -> float:
    """Klyshko heralding efficiency of one arm.

    ``true_coincidences`` over ``heralding_singles`` (the background-
    corrected singles of the other arm), divided out by this arm's
    detector efficiency. Values above 1 indicate inconsistent inputs and
    are flagged but returned.
    """
    if not 0.0 < detector_efficiency <= 1.0:
        raise ConfigurationError("detector_efficiency must be in (0, 1]")
    if heralding_singles <= 0:
        raise ConfigurationError("heralding_singles must be positive")
    h = float(true_coincidences) / (detector_efficiency * float(heralding_singles))
    if h > 1.0:
        warnings.warn(f"heralding efficiency {h:.3f} exceeds 1; inputs are "
                      "inconsistent with a physical efficiency", stacklevel=2)
    return h


@dataclass(frozen=True)
class G2Estimate:
    """Second-order correlation value with a counting-statistics error."""

    value: float
    stderr: float

    def __float__(self) -> float:
        return self.value

    def to_report(self) -> dict:
        return {"value": self.value, "stderr": self.stderr}


def g2_from_hbt(n_herald: int, n_12: int, n_13: int, n_123: int) -> G2Estimate:
    """Heralded second-order correlation from split-arm tallies.

    g2 = N123 * N1 / (N12 * N13) with the herald as detector 1. The
    uncertainty sums relative Poisson variances of the four tallies,
    which is dominated by the (small) triple count.
    """
    for name, v in (("n_herald", n_herald), ("n_12", n_12),
                    ("n_13", n_13), ("n_123", n_123)):
        if v < 0 or int(v) != v:
            raise ConfigurationError(f"{name} must be a non-negative integer")
    if n_herald == 0 or n_12 == 0 or n_13 == 0:
        raise ConfigurationError(
            "g2 is undefined without herald and two-fold counts")
    value = n_123 * n_herald / (n_12 * n_13)
    relvar = 1.0 / max(n_123, 1) + 1.0 / n_herald + 1.0 / n_12 + 1.0 / n_13
    scale = value if n_123 > 0 else n_herald / (n_12 * n_13)
    return G2Estimate(value=float(value),
                      stderr=float(scale * math.sqrt(relvar)))


def g2_unheralded_from_hbt(singles_2: int, singles_3: int, pairs_23: int,
                           n_pulses: int) -> G2Estimate:
    """Unheralded cross-arm intensity correlation of a split beam.

    g2 = N23 * n / (N2 * N3) for pulsed acquisition over n gates.
    """
    if singles_2 <= 0 or singles_3 <= 0 or n_pulses <= 0:
        raise ConfigurationError("need positive arm singles and pulse count")
    if pairs_23 < 0:
        raise ConfigurationError("pairs_23 must be non-negative")
    value = pairs_23 * n_pulses / (singles_2 * singles_3)
    relvar = 1.0 / max(pairs_23, 1) + 1.0 / singles_2 + 1.0 / singles_3
    scale = value if pairs_23 > 0 else n_pulses / (singles_2 * singles_3)
    return G2Estimate(value=float(value),
                      stderr=float(scale * math.sqrt(relvar)))


_RAMAN_G2 = {"poissonian": 1.0, "thermal": 2.0}


def raman_correct_g2s(g2_measured, raman_fraction: float,
                      raman_mode: str = "poissonian") -> G2Estimate:
    """Undo background dilution of an unheralded intensity correlation.

    The measured field is a mixture of the pair-scattering field and an
    independent background holding a fraction f of the counts:

        g2_meas = (1-f)^2 g2_pairs + f^2 g2_bg + 2 f (1-f)

    Solving for g2_pairs with g2_bg = 1 (Poissonian background) or 2
    (thermal background). The identity holds at f = 0.
    """
    if not 0.0 <= raman_fraction < 1.0:
        raise ConfigurationError("raman_fraction must lie in [0, 1)")
    if raman_mode not in _RAMAN_G2:
        raise ConfigurationError(
            f"raman_mode must be one of {sorted(_RAMAN_G2)}")
    g_bg = _RAMAN_G2[raman_mode]
    if isinstance(g2_measured, G2Estimate):
        g, err = g2_measured.value, g2_measured.stderr
    else:
        g, err = float(g2_measured), 0.0
    f = raman_fraction
    value = (g - g_bg * f**2 - 2.0 * f * (1.0 - f)) / (1.0 - f) ** 2
    return G2Estimate(value=float(value), stderr=float(err / (1.0 - f) ** 2))


@dataclass(frozen=True)
class HomDipFit:
    """Gaussian dip fit C(tau) = baseline * (1 - V exp(-tau^2 / 2 w^2))."""

    visibility: float
    visibility_stderr: float
    width_s: float
    width_stderr: float
    baseline: float
    baseline_stderr: float
    reduced_chi2: float

    def predict(self, delay_s):
        tau = np.asarray(delay_s, dtype=float)
        return self.baseline * (1.0 - self.visibility
                                * np.exp(-tau**2 / (2.0 * self.width_s**2)))

    def to_report(self) -> dict:
        return {"visibility": self.visibility,
                "visibility_stderr": self.visibility_stderr,
                "width_s": self.width_s, "width_stderr": self.width_stderr,
                "baseline": self.baseline,
                "baseline_stderr": self.baseline_stderr,
                "reduced_chi2": self.reduced_chi2}


def _dip_model(tau, baseline, visibility, width):
    return baseline * (1.0 - visibility * np.exp(-tau**2 / (2.0 * width**2)))


def fit_hom_dip(scan) -> HomDipFit:
    """Fit a Gaussian dip to fourfold counts versus delay.

    ``scan`` is a sequence of (delay_s, counts) pairs or dicts with
    ``delay_s`` and ``fourfold`` keys (the shape the simulator emits).
    At least five points are required (three parameters plus margin).
    Non-convergence raises with the attempted starting point in the
    message.
    """
    rows = []
    for row in scan:
        if isinstance(row, dict):
            rows.append((float(row["delay_s"]), float(row["fourfold"])))
        else:
            tau, c = row
            rows.append((float(tau), float(c)))
    if len(rows) < 5:
        raise ConfigurationError("dip fit needs at least five scan points")
    tau = np.array([t for t, _ in rows])
    counts = np.array([c for _, c in rows])
    if np.any(counts < 0):
        raise ConfigurationError("counts must be non-negative")
    if counts.max() <= 0:
        raise ConfigurationError("dip fit needs nonzero counts")
    span = tau.max() - tau.min()
    if span <= 0:
        raise ConfigurationError("scan delays must not all coincide")
    # fit in normalized coordinates so all three parameters are O(1);
    # raw delays (~1e-12 s) and counts (~1e4) otherwise ruin the
    # optimizer's trust-region scaling
    t_scale = span / 2.0
    c_scale = float(counts.max())
    t = tau / t_scale
    y = counts / c_scale
    sigma = np.sqrt(np.maximum(counts, 1.0)) / c_scale
    outer = np.argsort(np.abs(tau))[-max(3, len(tau) // 3):]
    baseline0 = max(float(np.median(y[outer])), 1e-3)
    vis0 = float(np.clip(1.0 - y.min() / baseline0, 0.05, 0.99))
    p0 = (baseline0, vis0, 0.25)
    try:
        popt, pcov = curve_fit(
            _dip_model, t, y, p0=p0, sigma=sigma, absolute_sigma=True,
            bounds=([0.0, 0.0, 1e-4], [np.inf, 1.5, 10.0]), maxfev=20000)
    except (RuntimeError, ValueError) as exc:
        raise ConfigurationError(
            f"dip fit failed to converge (normalized start point baseline="
            f"{p0[0]:.3g}, visibility={p0[1]:.3g}, width={p0[2]:.3g}): "
            f"{exc}") from exc
    perr = np.sqrt(np.diag(pcov))
    if not np.all(np.isfinite(popt)):
        raise ConfigurationError("dip fit returned non-finite parameters")
    resid = (y - _dip_model(t, *popt)) / sigma
    dof = max(len(rows) - 3, 1)
    return HomDipFit(
        visibility=float(popt[1]),
        visibility_stderr=float(perr[1]) if np.isfinite(perr[1]) else 0.0,
        width_s=float(popt[2] * t_scale),
        width_stderr=float(perr[2] * t_scale) if np.isfinite(perr[2]) else 0.0,
        baseline=float(popt[0] * c_scale),
        baseline_stderr=float(perr[0] * c_scale) if np.isfinite(perr[0]) else 0.0,
        reduced_chi2=float(np.sum(resid**2) / dof))


def multipair_visibility_shift(source_a, source_b, delays_s, det_h1, det_h2,
                               det_2, det_3, n_pulses, seed, overlap=None,
                               condition_on_heralds: bool = False):
    """Visibility penalty from multi-pair emission, by paired simulation.

    Runs the fourfold scan twice with identical seeds: once with the
    leading multi-pair term and once under the single-pair counterfactual.
    Returns (shift, stderr) where shift = V_single_pair - V_multi_pair
    is the amount to add back. The common random numbers cancel most of
    the Monte Carlo noise; the quoted error is the conservative
    quadrature sum of the two fit errors.
    """
    from .counting import simulate_hom

    fits = []
    for max_pairs in (2, 1):
        rec = simulate_hom(source_a, source_b, delays_s, det_h1, det_h2,
                           det_2, det_3, n_pulses, seed, overlap=overlap,
                           max_pairs=max_pairs,
                           condition_on_heralds=condition_on_heralds)
        fits.append(fit_hom_dip(rec.fourfold))
    shift = fits[1].visibility - fits[0].visibility
    err = math.hypot(fits[0].visibility_stderr, fits[1].visibility_stderr)
    return float(shift), float(err)


@dataclass(frozen=True)
class VisibilityReport:
    """Dip visibility at successive correction stages.

    ``raw`` is the fitted value, ``raman_corrected`` removes the
    background floor, ``multipair_corrected`` additionally removes the
    multi-pair penalty. Reported values are clipped to [0, 1]; the
    unclipped numbers live in ``diagnostics``.
    """

    v_raw: float
    v_raw_stderr: float
    v_raman_corrected: float
    v_raman_stderr: float
    v_multipair_corrected: float
    v_multipair_stderr: float
    dip_width_s: float
    diagnostics: dict = field(default_factory=dict)

    def to_report(self) -> dict:
        return {"v_raw": self.v_raw, "v_raw_stderr": self.v_raw_stderr,
                "v_raman_corrected": self.v_raman_corrected,
                "v_raman_stderr": self.v_raman_stderr,
                "v_multipair_corrected": self.v_multipair_corrected,
                "v_multipair_stderr": self.v_multipair_stderr,
                "dip_width_s": self.dip_width_s,
                "diagnostics": dict(self.diagnostics)}


def correct_visibility(v_raw, raman_background_fraction_per_arm=(0.0, 0.0),
                       multipair_shift=None, v_raw_stderr: float = 0.0,
                       dip_width_s: float = 0.0) -> VisibilityReport:
    """Staged correction of a fitted dip visibility.

    Background clicks on the two splitter arms (fractions b2, b3 of each
    arm's counts) contribute a flat coincidence floor that dilutes the
    dip; removing it rescales V by 1 / ((1-b2)(1-b3)). ``multipair_shift``
    is the additive single-pair counterfactual correction, either a
    (shift, stderr) tuple (e.g. from :func:`multipair_visibility_shift`)
    or a bare float. With zero background and no shift all three stages
    coincide with the raw value.
    """
    if isinstance(v_raw, HomDipFit):
        fit = v_raw
        v_raw, v_raw_stderr = fit.visibility, fit.visibility_stderr
        dip_width_s = fit.width_s
    b2, b3 = raman_background_fraction_per_arm
    for name, b in (("b2", b2), ("b3", b3)):
        if not 0.0 <= b < 1.0:
            raise ConfigurationError(
                f"background fraction {name} must lie in [0, 1)")
    factor = 1.0 / ((1.0 - b2) * (1.0 - b3))
    v_raman = v_raw * factor
    e_raman = v_raw_stderr * factor
    if multipair_shift is None:
        shift, shift_err = 0.0, 0.0
    elif isinstance(multipair_shift, (tuple, list)):
        shift, shift_err = float(multipair_shift[0]), float(multipair_shift[1])
    else:
        shift, shift_err = float(multipair_shift), 0.0
    v_mp = v_raman + shift
    e_mp = math.hypot(e_raman, shift_err)
    diagnostics = {"v_raman_unclipped": v_raman, "v_multipair_unclipped": v_mp,
                   "background_fractions": [b2, b3],
                   "multipair_shift": shift, "multipair_shift_stderr": shift_err}
    return VisibilityReport(
        v_raw=float(np.clip(v_raw, 0.0, 1.0)),
        v_raw_stderr=float(v_raw_stderr),
        v_raman_corrected=float(np.clip(v_raman, 0.0, 1.0)),
        v_raman_stderr=float(e_raman),
        v_multipair_corrected=float(np.clip(v_mp, 0.0, 1.0)),
        v_multipair_stderr=float(e_mp),
        dip_width_s=float(dip_width_s),
        diagnostics=diagnostics)


__all__ = [
    "QuadraticFit", "fit_singles_power", "true_coincidence",
    "heralding_from_counts", "G2Estimate", "g2_from_hbt",
    "g2_unheralded_from_hbt", "raman_correct_g2s", "HomDipFit",
    "fit_hom_dip", "multipair_visibility_shift", "VisibilityReport",
    "correct_visibility",
]
