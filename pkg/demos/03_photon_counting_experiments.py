"""Monte Carlo photon counting at a realistic operating point.

Builds a counting model from the filtered reference spectrum, then runs
three virtual experiments: a coincidence run (Klyshko heralding), a
split-arm correlation run (heralded and unheralded g2), and a pump-power
sweep separating the linear background from the quadratic pair signal.

Run:  python3 demos/03_photon_counting_experiments.py
"""

import numpy as np

from nliphoton import (
    DetectorSpec,
    DsfSpec,
    NliConfig,
    PumpSpec,
    SmfSpec,
    SourceModel,
    apply_filter,
    centered_filter,
    compute_jsf,
    default_grid,
    detect_islands,
    fit_singles_power,
    g2_from_hbt,
    g2_heralded_prediction,
    g2_unheralded_from_hbt,
    g2_unheralded_prediction,
    heralding_efficiencies,
    heralding_from_counts,
    schmidt_decompose,
    simulate_coincidence_run,
    simulate_hbt,
    simulate_power_sweep,
    true_coincidence,
)

SEED = 20260817
N_PULSES = 4_000_000


def build_source():
    cfg = NliConfig(
        stages=3,
        dsf=DsfSpec(length_m=150.0, zero_dispersion_nm=1548.5,
                    dispersion_slope_ps_nm2_km=0.075,
                    nonlinear_coefficient_per_w_km=2.0),
        smf=SmfSpec(length_m=20.0, dispersion_ps_nm_km=17.0),
        pump=PumpSpec(center_nm=1548.8, fwhm_nm=1.0, peak_power_w=0.35),
    )
    jsf = compute_jsf(default_grid(512), cfg)
    island = detect_islands(jsf)[0]
    filt = centered_filter(island.centroid_nm[0], island.centroid_nm[1], 1.5)
    schmidt = schmidt_decompose(apply_filter(jsf, filt))
    herald = heralding_efficiencies(jsf, filt)
    src = SourceModel.from_modal(
        schmidt, herald,
        mean_pairs_per_pulse=0.05,
        raman_signal_mean=0.004,
        raman_idler_mean=0.004,
        channel_transmission_signal=0.83,
        channel_transmission_idler=0.83,
        reference_power_w=51.5e-6,
    )
    print(f"source: M = {src.mode_number:.3f}, "
          f"spectral heralding = ({src.spectral_heralding[0]:.3f}, "
          f"{src.spectral_heralding[1]:.3f})")
    return src


def coincidence_demo(src):
    det = DetectorSpec(efficiency=0.15)
    rec = simulate_coincidence_run(src, det, det, N_PULSES, seed=SEED,
                                   threads=4)
    c_true = true_coincidence(rec.coincidences_same_pulse,
                              rec.coincidences_adjacent_pulse)
    klyshko = heralding_from_counts(c_true, det.efficiency, rec.singles_idler)
    print("\ncoincidence run")
    print(f"  singles: {rec.singles_signal} / {rec.singles_idler}")
    print(f"  same-pulse {rec.coincidences_same_pulse}, "
          f"adjacent {rec.coincidences_adjacent_pulse}")
    expected = src.spectral_heralding[0] * src.channel_transmission_signal
    print(f"  Klyshko signal heralding {klyshko:.3f} "
          f"(band x transmission = {expected:.3f})")


def hbt_demo(src):
    det = DetectorSpec(efficiency=0.15)
    rec = simulate_hbt(src, det, det, det, N_PULSES, seed=SEED, threads=4)
    h = rec.hbt
    heralded = g2_from_hbt(h["n_herald"], h["n_12"], h["n_13"], h["n_123"])
    unheralded = g2_unheralded_from_hbt(h["singles_2"], h["singles_3"],
                                        h["pairs_23"], rec.n_pulses)
    mu_coll = (src.mean_pairs_per_pulse * src.spectral_heralding[0]
               * src.spectral_heralding[1])
    print("\nsplit-arm correlation run")
    print(f"  heralded   g2 = {heralded.value:.4f} +- {heralded.stderr:.4f} "
          f"(prediction {g2_heralded_prediction(mu_coll, *src.spectral_heralding, src.mode_number):.4f})")
    print(f"  unheralded g2 = {unheralded.value:.4f} +- {unheralded.stderr:.4f} "
          f"(prediction {g2_unheralded_prediction(src.mode_number):.4f})")


def power_sweep_demo(src):
    det = DetectorSpec(efficiency=0.15)
    p0 = src.reference_power_w
    powers = [f * p0 for f in (0.4, 0.6, 0.8, 1.0, 1.2)]
    sweep = simulate_power_sweep(src, det, det, powers, N_PULSES // 2,
                                 seed=SEED, threads=4)
    fit = fit_singles_power([(p, rec.singles_signal) for p, rec in sweep])
    print("\npump power sweep (signal arm)")
    for p, rec in sweep:
        print(f"  {p * 1e6:6.1f} uW: {rec.singles_signal} singles")
    at_p0 = (fit.linear_coefficient * p0, fit.quadratic_coefficient * p0**2)
    frac = at_p0[0] / (at_p0[0] + at_p0[1])
    print(f"  linear (background) share at the reference power: {frac:.2%}")


def main():
    np.set_printoptions(precision=4)
    src = build_source()
    coincidence_demo(src)
    hbt_demo(src)
    power_sweep_demo(src)


if __name__ == "__main__":
    main()
