"""Design and verification toolkit for staged fiber photon-pair sources.

Five layers, importable separately:

- :mod:`nliphoton.spectral`: joint spectral amplitudes of a multi-stage
  nonlinear interferometer, filters, grids.
- :mod:`nliphoton.modal`: Schmidt decomposition, purity, heralding, and
  closed-form correlation predictions.
- :mod:`nliphoton.design`: island detection, scoring, and design sweeps.
- :mod:`nliphoton.counting`: Monte Carlo photon counting experiments.
- :mod:`nliphoton.analysis`: estimators from counts back to physics.

:mod:`nliphoton.checks` ties them together into a reproducible
verification suite, also reachable as ``nliphoton reproduce``.
"""

__version__ = "0.1.0"

from .analysis import (G2Estimate, HomDipFit, QuadraticFit, VisibilityReport,
                       correct_visibility, fit_hom_dip, fit_singles_power,
                       g2_from_hbt, g2_unheralded_from_hbt,
                       heralding_from_counts, multipair_visibility_shift,
                       raman_correct_g2s, true_coincidence)
from .counting import (CountsRecord, DetectorSpec, SourceModel,
                       default_overlap, draw_pulse,
                       herald_coincidence_probability,
                       hom_background_click_fractions,
                       hom_fourfold_probability, simulate_coincidence_run,
                       simulate_hbt, simulate_hom, simulate_power_sweep)
from .design import (DesignPoint, IslandReport, detect_islands,
                     inter_island_contrast, roundest_island, score_island,
                     sweep_design)
from .errors import ConfigurationError
from .modal import (HeraldingReport, SchmidtResult, g2_heralded_prediction,
                    g2_unheralded_prediction, geometric_schmidt_weights,
                    heralding_efficiencies, predicted_hom_visibility,
                    schmidt_decompose)
from .spectral import (DsfSpec, FilterSpec, FrequencyGrid, Jsf, NliConfig,
                       PumpSpec, SmfSpec, apply_filter, centered_filter,
                       compute_jsf, default_grid, delta_k,
                       interference_factor, pump_envelope, theta)

__all__ = [
    "__version__", "ConfigurationError",
    # spectral
    "PumpSpec", "DsfSpec", "SmfSpec", "NliConfig", "FrequencyGrid",
    "FilterSpec", "Jsf", "compute_jsf", "apply_filter", "centered_filter",
    "default_grid", "pump_envelope", "delta_k", "theta",
    "interference_factor",
    # modal
    "SchmidtResult", "HeraldingReport", "schmidt_decompose",
    "heralding_efficiencies", "predicted_hom_visibility",
    "g2_heralded_prediction", "g2_unheralded_prediction",
    "geometric_schmidt_weights",
    # design
    "IslandReport", "DesignPoint", "detect_islands", "score_island",
    "roundest_island", "inter_island_contrast", "sweep_design",
    # counting
    "SourceModel", "DetectorSpec", "CountsRecord", "draw_pulse",
    "simulate_coincidence_run", "simulate_power_sweep", "simulate_hbt",
    "simulate_hom", "hom_fourfold_probability",
    "herald_coincidence_probability", "default_overlap",
    "hom_background_click_fractions",
    # analysis
    "QuadraticFit", "fit_singles_power", "true_coincidence",
    "heralding_from_counts", "G2Estimate", "g2_from_hbt",
    "g2_unheralded_from_hbt", "raman_correct_g2s", "HomDipFit",
    "fit_hom_dip", "multipair_visibility_shift", "VisibilityReport",
    "correct_visibility",
]
