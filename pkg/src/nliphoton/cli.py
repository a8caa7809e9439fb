"""Command-line interface.

Every subcommand writes into its own directory under the output root
(``--out``, else ``run.out_dir``, else the environment variable, else
``./nliphoton-out``): a ``manifest.json`` naming the produced files and
echoing the fully resolved configuration, plus JSON reports and CSV
tables. Apart from the manifest timestamp, outputs are byte-identical
across reruns with the same configuration and seed.

Exit codes: 0 success, 1 verification failure (``reproduce``),
2 configuration error, 3 I/O error.
"""

from __future__ import annotations

import argparse
import json
import os
import sys
from dataclasses import replace
from datetime import datetime, timezone

import numpy as np

from . import __version__, analysis, checks, counting, design, modal, spectral
from .config import OUTPUT_DIR_ENV, JobConfig
from .errors import ConfigurationError

EXIT_OK = 0
EXIT_CHECK_FAILURE = 1
EXIT_CONFIG_ERROR = 2
EXIT_IO_ERROR = 3


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="nliphoton",
        description="Design and Monte Carlo verification of multi-stage "
                    "fiber interferometer photon-pair sources.")
    parser.add_argument("--version", action="version", version=__version__)
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", metavar="PATH",
                        help="key = value configuration file")
    common.add_argument("--out", metavar="DIR",
                        help=f"output root (default: $" + OUTPUT_DIR_ENV
                             + " or ./nliphoton-out)")
    common.add_argument("--seed", type=int, metavar="U64",
                        help="override run.seed")
    common.add_argument("--threads", type=int, metavar="N",
                        help="override run.threads")
    sub = parser.add_subparsers(dest="command", required=True)
    sub.add_parser("jsi", parents=[common],
                   help="joint spectral intensity on the configured grid")
    sub.add_parser("schmidt", parents=[common],
                   help="Schmidt analysis before and after filtering")
    sub.add_parser("islands", parents=[common],
                   help="detect and score interference islands")
    sub.add_parser("design", parents=[common],
                   help="sweep design parameters and rank operating points")
    p = sub.add_parser("simulate", parents=[common],
                       help="Monte Carlo coincidence run")
    p.add_argument("--sweep", action="store_true",
                   help="also run the configured pump-power sweep")
    sub.add_parser("hbt", parents=[common],
                   help="Monte Carlo split-arm correlation run")
    sub.add_parser("hom", parents=[common],
                   help="Monte Carlo fourfold interference scan")
    p = sub.add_parser("analyze", parents=[common],
                       help="estimate physics quantities from a counts file")
    p.add_argument("input", help="counts.json or sweep.json from a previous run")
    sub.add_parser("reproduce", parents=[common],
                   help="run the built-in verification suite")
    return parser


def _json_default(o):
    if isinstance(o, np.ndarray):
        return o.tolist()
    if isinstance(o, (np.integer,)):
        return int(o)
    if isinstance(o, (np.floating,)):
        return float(o)
    raise TypeError(f"not JSON serializable: {type(o)}")


def _dump_json(payload: dict) -> str:
    return json.dumps(payload, sort_keys=True, indent=2,
                      default=_json_default) + "\n"


def _finish(cfg: JobConfig, command: str, files: dict, report: dict) -> str:
    """Write output files, report.json, and manifest.json; return the dir."""
    job_dir = os.path.join(cfg.output_dir(), command)
    os.makedirs(job_dir, exist_ok=True)
    files = dict(files)
    files["report.json"] = _dump_json(
        {"command": command, "config": cfg.resolved(), **report})
    files["manifest.json"] = _dump_json({
        "command": command,
        "created_utc": datetime.now(timezone.utc).isoformat(),
        "config": cfg.resolved(),
        "outputs": sorted(name for name in files if name != "manifest.json")})
    for name, content in files.items():
        with open(os.path.join(job_dir, name), "w", encoding="utf-8") as fh:
            fh.write(content)
    return job_dir


def _spectral_chain(cfg: JobConfig):
    """Shared pipeline: joint spectrum, filter, modal and band analysis."""
    jsf = spectral.compute_jsf(cfg.frequency_grid(), cfg.nli_config())
    filt = cfg.filter_spec()
    filtered = spectral.apply_filter(jsf, filt)
    schmidt = modal.schmidt_decompose(filtered)
    herald = modal.heralding_efficiencies(jsf, filt)
    return jsf, filt, filtered, schmidt, herald


def _source_from_config(cfg: JobConfig):
    _, _, _, schmidt, herald = _spectral_chain(cfg)
    source = counting.SourceModel.from_modal(schmidt, herald,
                                             **cfg.source_kwargs())
    return source, schmidt, herald


def _cmd_jsi(cfg: JobConfig, args) -> int:
    jsf = spectral.compute_jsf(cfg.frequency_grid(), cfg.nli_config())
    intensity = jsf.intensity
    peak = np.unravel_index(int(np.argmax(intensity)), intensity.shape)
    report = {
        "norm_squared": jsf.norm_squared,
        "peak_signal_nm": float(jsf.grid.signal_nm[peak[0]]),
        "peak_idler_nm": float(jsf.grid.idler_nm[peak[1]]),
        "warnings": jsf.metadata.get("warnings", []),
    }
    job_dir = _finish(cfg, "jsi", {"jsi.csv": spectral.jsi_to_csv(jsf)}, report)
    print(f"jsi: wrote {job_dir}")
    return EXIT_OK


def _cmd_schmidt(cfg: JobConfig, args) -> int:
    jsf, filt, filtered, schmidt_filtered, herald = _spectral_chain(cfg)
    schmidt_full = modal.schmidt_decompose(jsf)
    k = max(schmidt_full.weights.size, schmidt_filtered.weights.size, 16)
    lines = ["mode_index,unfiltered_weight,filtered_weight"]
    for i in range(min(k, 64)):
        wu = schmidt_full.weights[i] if i < schmidt_full.weights.size else 0.0
        wf = schmidt_filtered.weights[i] if i < schmidt_filtered.weights.size else 0.0
        lines.append(f"{i},{wu:.12e},{wf:.12e}")
    report = {
        "unfiltered": schmidt_full.to_report(),
        "filtered": schmidt_filtered.to_report(),
        "heralding": herald.to_report(),
        "filter_pass_probability": filtered.metadata.get("pass_probability"),
    }
    job_dir = _finish(cfg, "schmidt",
                      {"weights.csv": "\n".join(lines) + "\n"}, report)
    print(f"schmidt: mode number {schmidt_filtered.mode_number:.4f} "
          f"(unfiltered {schmidt_full.mode_number:.2f}); wrote {job_dir}")
    return EXIT_OK


def _cmd_islands(cfg: JobConfig, args) -> int:
    jsf = spectral.compute_jsf(cfg.frequency_grid(), cfg.nli_config())
    islands = design.detect_islands(jsf)
    scored = [design.score_island(jsf, isl, cfg["sweep.bandwidths_nm"])
              for isl in islands]
    report = {"n_islands": len(scored),
              "islands": [isl.to_report() for isl in scored]}
    if len(islands) >= 2:
        report["inter_island_contrast"] = design.inter_island_contrast(jsf, islands)
    job_dir = _finish(cfg, "islands", {}, report)
    print(f"islands: found {len(scored)}; wrote {job_dir}")
    return EXIT_OK


_DESIGN_CSV_FIELDS = ["pump_fwhm_nm", "smf_length_m", "stages", "island_index",
                      "centroid_signal_nm", "centroid_idler_nm",
                      "bandwidth_nm", "mode_number", "h_s", "h_i",
                      "island_mass", "roundness", "composite_score"]


def _cmd_design(cfg: JobConfig, args) -> int:
    points = design.sweep_design(
        cfg.nli_config(), cfg.frequency_grid(),
        pump_fwhms_nm=cfg["sweep.pump_fwhms_nm"],
        smf_lengths_m=cfg["sweep.smf_lengths_m"],
        stages_list=cfg["sweep.stages"],
        bandwidths_nm=cfg["sweep.bandwidths_nm"])
    lines = [",".join(_DESIGN_CSV_FIELDS)]
    for pt in points:
        row = pt.to_row()
        lines.append(",".join(_format_cell(row[f]) for f in _DESIGN_CSV_FIELDS))
    report = {"n_points": len(points),
              "best": points[0].to_row() if points else None}
    job_dir = _finish(cfg, "design", {"design.csv": "\n".join(lines) + "\n"},
                      report)
    print(f"design: ranked {len(points)} operating points; wrote {job_dir}")
    return EXIT_OK


def _format_cell(v) -> str:
    if isinstance(v, float):
        return f"{v:.9g}"
    return str(v)


def _cmd_simulate(cfg: JobConfig, args) -> int:
    source, schmidt, herald = _source_from_config(cfg)
    det_s, det_i = cfg.detector("signal"), cfg.detector("idler")
    rec = counting.simulate_coincidence_run(
        source, det_s, det_i, cfg["run.n_pulses"], cfg["run.seed"],
        threads=cfg["run.threads"])
    c_true = analysis.true_coincidence(rec.coincidences_same_pulse,
                                       rec.coincidences_adjacent_pulse)
    report = {
        "mode_number": schmidt.mode_number,
        "heralding": herald.to_report(),
        "true_coincidences": c_true,
        "klyshko_heralding_estimate": (
            analysis.heralding_from_counts(c_true, det_s.efficiency,
                                           rec.singles_idler)
            if rec.singles_idler > 0 and c_true > 0 else None),
    }
    files = {"counts.json": rec.to_json() + "\n"}
    if getattr(args, "sweep", False):
        template = replace(source,
                           reference_power_w=cfg["nli.pump_average_power_uw"] * 1e-6)
        sweep = counting.simulate_power_sweep(
            template, det_s, det_i,
            [u * 1e-6 for u in cfg["sweep.powers_uw"]],
            cfg["run.n_pulses"], cfg["run.seed"], threads=cfg["run.threads"])
        files["sweep.json"] = _dump_json(
            {"experiment": "power_sweep",
             "points": [{"power_w": p, "record": json.loads(r.to_json())}
                        for p, r in sweep]})
        fit = analysis.fit_singles_power(
            [(p, r.singles_signal) for p, r in sweep])
        report["power_fit"] = fit.to_report()
    job_dir = _finish(cfg, "simulate", files, report)
    print(f"simulate: {rec.coincidences_same_pulse} coincidences in "
          f"{rec.n_pulses} pulses; wrote {job_dir}")
    return EXIT_OK


def _cmd_hbt(cfg: JobConfig, args) -> int:
    source, schmidt, herald = _source_from_config(cfg)
    det_h = cfg.detector("idler")
    det_a = det_b = cfg.detector("signal")
    rec = counting.simulate_hbt(source, det_h, det_a, det_b,
                                cfg["run.n_pulses"], cfg["run.seed"],
                                threads=cfg["run.threads"])
    h = rec.hbt
    report = {"mode_number": schmidt.mode_number}
    if h["n_12"] > 0 and h["n_13"] > 0:
        est = analysis.g2_from_hbt(h["n_herald"], h["n_12"], h["n_13"],
                                   h["n_123"])
        report["g2_heralded"] = est.to_report()
        pair_rate = (source.mean_pairs_per_pulse
                     * herald.h_s_spectral * herald.h_i_spectral)
        report["g2_heralded_predicted"] = modal.g2_heralded_prediction(
            pair_rate, herald.h_s_spectral, herald.h_i_spectral,
            schmidt.mode_number)
    if h["singles_2"] > 0 and h["singles_3"] > 0:
        report["g2_unheralded"] = analysis.g2_unheralded_from_hbt(
            h["singles_2"], h["singles_3"], h["pairs_23"],
            rec.n_pulses).to_report()
        report["g2_unheralded_predicted"] = modal.g2_unheralded_prediction(
            schmidt.mode_number)
    job_dir = _finish(cfg, "hbt", {"counts.json": rec.to_json() + "\n"}, report)
    print(f"hbt: heralds {h['n_herald']}, triples {h['n_123']}; wrote {job_dir}")
    return EXIT_OK


def _cmd_hom(cfg: JobConfig, args) -> int:
    source, schmidt, herald = _source_from_config(cfg)
    det = cfg.detector("signal")
    det_h = cfg.detector("idler")
    delays = cfg.hom_delays_s()
    rec = counting.simulate_hom(source, source, delays, det_h, det_h, det, det,
                                cfg["run.n_pulses"], cfg["run.seed"],
                                condition_on_heralds=True)
    fit = analysis.fit_hom_dip(rec.fourfold)
    fractions = counting.hom_background_click_fractions(source, source, det, det)
    shift = analysis.multipair_visibility_shift(
        replace(source, raman_signal_mean=0.0),
        replace(source, raman_signal_mean=0.0),
        delays, det_h, det_h, det, det, cfg["run.n_pulses"], cfg["run.seed"],
        condition_on_heralds=True)
    report_obj = analysis.correct_visibility(
        fit, raman_background_fraction_per_arm=fractions, multipair_shift=shift)
    report = {"fit": fit.to_report(),
              "visibility": report_obj.to_report(),
              "predicted_ideal_visibility": schmidt.purity}
    job_dir = _finish(cfg, "hom",
                      {"hom.csv": rec.fourfold_csv(),
                       "counts.json": rec.to_json() + "\n"}, report)
    print(f"hom: raw visibility {report_obj.v_raw:.3f} -> corrected "
          f"{report_obj.v_multipair_corrected:.3f}; wrote {job_dir}")
    return EXIT_OK


def _cmd_analyze(cfg: JobConfig, args) -> int:
    with open(args.input, "r", encoding="utf-8") as fh:
        text = fh.read()
    payload = json.loads(text)
    report: dict = {"input": os.path.basename(args.input)}
    if isinstance(payload, dict) and payload.get("experiment") == "power_sweep":
        data = [(pt["power_w"], pt["record"]["singles_signal"])
                for pt in payload["points"]]
        report["experiment"] = "power_sweep"
        report["power_fit"] = analysis.fit_singles_power(data).to_report()
    else:
        rec = counting.CountsRecord.from_json(text)
        experiment = rec.metadata.get("experiment", "coincidence")
        report["experiment"] = experiment
        if experiment == "hom":
            fit = analysis.fit_hom_dip(rec.fourfold)
            report["fit"] = fit.to_report()
            report["visibility"] = analysis.correct_visibility(fit).to_report()
        elif experiment == "hbt":
            h = rec.hbt
            report["g2_heralded"] = analysis.g2_from_hbt(
                h["n_herald"], h["n_12"], h["n_13"], h["n_123"]).to_report()
            report["g2_unheralded"] = analysis.g2_unheralded_from_hbt(
                h["singles_2"], h["singles_3"], h["pairs_23"],
                rec.n_pulses).to_report()
        else:
            c_true = analysis.true_coincidence(
                rec.coincidences_same_pulse, rec.coincidences_adjacent_pulse)
            report["true_coincidences"] = c_true
            det_s = cfg.detector("signal")
            if rec.singles_idler > 0:
                report["klyshko_heralding_estimate"] = \
                    analysis.heralding_from_counts(max(c_true, 0.0),
                                                   det_s.efficiency,
                                                   rec.singles_idler)
    job_dir = _finish(cfg, "analyze", {}, report)
    print(f"analyze: wrote {job_dir}")
    return EXIT_OK


def _cmd_reproduce(cfg: JobConfig, args) -> int:
    results = checks.run_all(seed=cfg["run.seed"], progress=print)
    report = {"all_passed": all(r.passed for r in results),
              "results": [r.to_report() for r in results]}
    job_dir = _finish(cfg, "reproduce", {}, report)
    n_pass = sum(r.passed for r in results)
    print(f"reproduce: {n_pass}/{len(results)} checks passed; wrote {job_dir}")
    return EXIT_OK if report["all_passed"] else EXIT_CHECK_FAILURE


_COMMANDS = {
    "jsi": _cmd_jsi,
    "schmidt": _cmd_schmidt,
    "islands": _cmd_islands,
    "design": _cmd_design,
    "simulate": _cmd_simulate,
    "hbt": _cmd_hbt,
    "hom": _cmd_hom,
    "analyze": _cmd_analyze,
    "reproduce": _cmd_reproduce,
}


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        cfg = JobConfig.build(config_path=args.config, seed=args.seed,
                              threads=args.threads, out_dir=args.out)
        return _COMMANDS[args.command](cfg, args)
    except ConfigurationError as exc:
        print(f"configuration error: {exc}", file=sys.stderr)
        return EXIT_CONFIG_ERROR
    except ValueError as exc:
        print(f"invalid input: {exc}", file=sys.stderr)
        return EXIT_CONFIG_ERROR
    except OSError as exc:
        print(f"i/o error: {exc}", file=sys.stderr)
        return EXIT_IO_ERROR


if __name__ == "__main__":
    sys.exit(main())
