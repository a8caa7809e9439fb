"""Monte Carlo photon counting for heralded pair sources.

The stochastic model of one source: pair number in Schmidt mode k is
thermal with mean mu*lambda_k (independent across modes), spontaneous
Raman background photons are Poissonian in each band, each photon then
survives an independent thinning chain (band membership, lumped channel
transmission, detector efficiency), and threshold detectors click on
any surviving photon or a dark count, with an optional dead time after
each click.

Three experiments are simulated: a two-detector coincidence run (same
pulse and adjacent pulse), a split-arm HBT run for second-order
correlations, and a two-source fourfold Hong-Ou-Mandel delay scan. For
speed the per-pulse click probabilities are evaluated in closed form
(exact for threshold detectors) and only the clicks themselves are
sampled; the HOM scan enumerates the per-pulse fourfold probability
exactly, including two-photon interference at the splitter, and samples
a binomial count per delay.

Reproducibility: every batch of pulses derives its generator from
(seed, batch index, stream), so results are bit-exact for a given
(configuration, seed, batch size) regardless of worker count, and
aggregation is order independent.
"""

from __future__ import annotations

import json
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass, field, fields as _dc_fields, replace

import numpy as np

from .errors import ConfigurationError
from .modal import HeraldingReport, SchmidtResult

BATCH_PULSES = 1_000_000

# substream ids (seed, batch, stream) so that toggling one physics term
# leaves the other draws untouched (common random numbers)
_PAIR_STREAM = 0
_CLICK_STREAM = 1
_HOM_STREAM = 2

# pair-mode means below this are dropped from sampling (P(n>=1) ~ 1e-10)
_NEGLIGIBLE_MODE_MEAN = 1e-10


def _stream_rng(seed: int, batch_index: int, stream: int) -> np.random.Generator:
    return np.random.Generator(np.random.PCG64(
        np.random.SeedSequence((int(seed), int(batch_index), int(stream)))))


@dataclass(frozen=True)
class SourceModel:
    """Stochastic description of one heralded pair source.

    ``mean_pairs_per_pulse`` is the total pair generation rate mu before
    any filtering or loss. ``schmidt_weights`` set the thermal mode
    structure (the default single mode gives g2 = 2 statistics).
    ``spectral_heralding`` is the probability that the signal (idler)
    photon of a generated pair falls inside its collection band;
    ``channel_transmission_*`` lumps splice, filter insertion, and path
    losses up to the detector (or up to the interferometer input in the
    fourfold experiment). ``reference_power_w`` anchors power scaling:
    pairs scale quadratically, Raman linearly, in average pump power.
    """

    mean_pairs_per_pulse: float
    schmidt_weights: np.ndarray = field(default_factory=lambda: np.array([1.0]))
    raman_signal_mean: float = 0.0
    raman_idler_mean: float = 0.0
    channel_transmission_signal: float = 1.0
    channel_transmission_idler: float = 1.0
    spectral_heralding: tuple = (1.0, 1.0)
    reference_power_w: float | None = None
    repetition_rate_hz: float = 36.8e6
    coherence_time_s: float = 3e-12

    def __post_init__(self):
        if not 0.0 <= self.mean_pairs_per_pulse <= 0.5:
            raise ConfigurationError(
                "mean_pairs_per_pulse must lie in [0, 0.5]: the pair-amplitude "
                "model is perturbative (small gain)")
        w = np.asarray(self.schmidt_weights, dtype=float).ravel()
        if w.size == 0 or np.any(w < 0) or w.sum() <= 0:
            raise ConfigurationError("schmidt_weights must be non-negative, nonzero")
        object.__setattr__(self, "schmidt_weights", w / w.sum())
        for name in ("raman_signal_mean", "raman_idler_mean"):
            if getattr(self, name) < 0:
                raise ConfigurationError(f"{name} must be >= 0")
        for name in ("channel_transmission_signal", "channel_transmission_idler"):
            if not 0.0 <= getattr(self, name) <= 1.0:
                raise ConfigurationError(f"{name} must be in [0, 1]")
        hs, hi = self.spectral_heralding
        if not (0.0 <= hs <= 1.0 and 0.0 <= hi <= 1.0):
            raise ConfigurationError("spectral_heralding values must be in [0, 1]")
        if self.coherence_time_s <= 0:
            raise ConfigurationError("coherence_time_s must be > 0")

    @property
    def mode_number(self) -> float:
        return 1.0 / float(np.sum(self.schmidt_weights**2))

    @property
    def purity(self) -> float:
        return float(np.sum(self.schmidt_weights**2))

    def at_power(self, average_power_w: float) -> "SourceModel":
        """Rescale to a new average pump power.

        Pair rate goes as power squared, Raman rates linearly.
        """
        if self.reference_power_w is None or self.reference_power_w <= 0:
            raise ConfigurationError("at_power needs a positive reference_power_w")
        r = average_power_w / self.reference_power_w
        return replace(self,
                       mean_pairs_per_pulse=self.mean_pairs_per_pulse * r**2,
                       raman_signal_mean=self.raman_signal_mean * r,
                       raman_idler_mean=self.raman_idler_mean * r,
                       reference_power_w=average_power_w)

    @classmethod
    def from_modal(cls, schmidt: SchmidtResult, heralding: HeraldingReport,
                   mean_pairs_per_pulse: float, **kwargs) -> "SourceModel":
        """Build a counting model from spectral analysis results."""
        return cls(mean_pairs_per_pulse=mean_pairs_per_pulse,
                   schmidt_weights=np.asarray(schmidt.weights),
                   spectral_heralding=(heralding.h_s_spectral,
                                       heralding.h_i_spectral),
                   **kwargs)


@dataclass(frozen=True)
class DetectorSpec:
    """Gated threshold single-photon detector."""

    efficiency: float = 0.15
    dark_count_probability: float = 0.0
    dead_time_s: float = 0.0
    gate_rate_hz: float = 36.8e6

    def __post_init__(self):
        if not 0.0 <= self.efficiency <= 1.0:
            raise ConfigurationError("efficiency must be in [0, 1]")
        if not 0.0 <= self.dark_count_probability < 1.0:
            raise ConfigurationError("dark_count_probability must be in [0, 1)")
        if self.dead_time_s < 0 or self.gate_rate_hz <= 0:
            raise ConfigurationError("dead_time_s >= 0 and gate_rate_hz > 0 required")

    @property
    def dead_gates(self) -> int:
        """Dead time quantized to whole gates."""
        return int(round(self.dead_time_s * self.gate_rate_hz))


@dataclass
class CountsRecord:
    """Counts from one simulated run, JSON round-trippable.

    ``hbt`` holds the split-arm tallies (herald arm 1, transmitted arm 2,
    reflected arm 3): heralded coincidences n_12, n_13, the triple n_123,
    and the unheralded arm singles/pairs for intensity correlations.
    ``fourfold`` is a list of per-delay dicts for HOM scans.
    """

    n_pulses: int
    seed: int
    singles_signal: int = 0
    singles_idler: int = 0
    coincidences_same_pulse: int = 0
    coincidences_adjacent_pulse: int = 0
    hbt: dict | None = None
    fourfold: list | None = None
    metadata: dict = field(default_factory=dict)

    def __post_init__(self):
        for name in ("n_pulses", "singles_signal", "singles_idler",
                     "coincidences_same_pulse", "coincidences_adjacent_pulse"):
            v = getattr(self, name)
            if int(v) != v or v < 0:
                raise ConfigurationError(f"{name} must be a non-negative integer")
            setattr(self, name, int(v))
        cmax = min(self.singles_signal, self.singles_idler)
        if self.coincidences_same_pulse > cmax or \
                self.coincidences_adjacent_pulse > cmax:
            raise ConfigurationError("coincidences cannot exceed singles")
        if self.hbt is not None:
            h = self.hbt
            if h["n_12"] > min(h["n_herald"], h["singles_2"]) or \
                    h["n_13"] > min(h["n_herald"], h["singles_3"]) or \
                    h["n_123"] > min(h["n_12"], h["n_13"]):
                raise ConfigurationError("HBT tallies are inconsistent")

    def to_json(self) -> str:
        def default(o):
            if isinstance(o, np.ndarray):
                return o.tolist()
            if isinstance(o, (np.integer,)):
                return int(o)
            if isinstance(o, (np.floating,)):
                return float(o)
            raise TypeError(f"not JSON serializable: {type(o)}")
        return json.dumps(asdict(self), sort_keys=True, indent=2, default=default)

    @classmethod
    def from_json(cls, text: str) -> "CountsRecord":
        d = json.loads(text)
        if not isinstance(d, dict):
            raise ConfigurationError("counts payload must be a JSON object")
        known = {f.name for f in _dc_fields(cls)}
        unknown = sorted(set(d) - known)
        if unknown:
            raise ConfigurationError(f"unknown counts fields: {unknown}")
        if "n_pulses" not in d or "seed" not in d:
            raise ConfigurationError("counts payload needs n_pulses and seed")
        return cls(**d)

    def fourfold_csv(self) -> str:
        """HOM scan as CSV with columns delay_s, fourfold, n_pulses."""
        if self.fourfold is None:
            raise ConfigurationError("record carries no fourfold scan")
        lines = ["delay_s,fourfold,n_pulses"]
        for row in self.fourfold:
            lines.append(f"{row['delay_s']:.12e},{row['fourfold']},{row['n_pulses']}")
        return "\n".join(lines) + "\n"


@dataclass
class PulseOccupancy:
    """Photon content of one pump pulse before any loss."""

    pairs_per_mode: np.ndarray
    raman_signal: int
    raman_idler: int

    @property
    def total_pairs(self) -> int:
        return int(self.pairs_per_mode.sum())


def draw_pulse(source: SourceModel, rng: np.random.Generator) -> PulseOccupancy:
    """Sample the photon occupancy of a single pulse.

    Reference implementation of the source statistics; the batched
    simulators reproduce exactly these marginals but sample clicks
    directly from closed-form probabilities.
    """
    means = source.mean_pairs_per_pulse * source.schmidt_weights
    pairs = rng.geometric(1.0 / (1.0 + means)) - 1
    return PulseOccupancy(
        pairs_per_mode=pairs.astype(np.int64),
        raman_signal=int(rng.poisson(source.raman_signal_mean)),
        raman_idler=int(rng.poisson(source.raman_idler_mean)),
    )


def _sampled_mode_means(source: SourceModel) -> np.ndarray:
    means = source.mean_pairs_per_pulse * source.schmidt_weights
    return means[means > _NEGLIGIBLE_MODE_MEAN]


def _draw_pair_totals(source: SourceModel, rng: np.random.Generator,
                      n: int) -> np.ndarray:
    """Total pair number per pulse for a batch (sum of thermal modes)."""
    means = _sampled_mode_means(source)
    total = np.zeros(n, dtype=np.int64)
    for m in means:
        total += rng.geometric(1.0 / (1.0 + m), size=n) - 1
    return total


def _apply_dead_time(clicks: np.ndarray, dead_gates: int) -> np.ndarray:
    """Greedy dead-time pruning: a kept click blanks the next dead_gates gates.

    State resets at batch boundaries (the batch is ~3000x longer than the
    10 us dead window at typical gate rates, so the edge effect is
    negligible); this keeps batches independent and aggregation order
    free.
    """
    if dead_gates <= 0 or not clicks.any():
        return clicks
    keep = np.zeros_like(clicks)
    last = -dead_gates - 1
    for i in np.flatnonzero(clicks).tolist():
        if i - last > dead_gates:
            keep[i] = True
            last = i
    return keep


def _detection_rates(source: SourceModel, det: DetectorSpec, arm: str):
    """(per-pair-photon click prob, mean detected Raman) for one arm."""
    if arm == "signal":
        t = source.channel_transmission_signal
        h = source.spectral_heralding[0]
        nu = source.raman_signal_mean
    else:
        t = source.channel_transmission_idler
        h = source.spectral_heralding[1]
        nu = source.raman_idler_mean
    return h * t * det.efficiency, nu * t * det.efficiency


def _batch_sizes(n_pulses: int, batch_pulses: int):
    full, rem = divmod(int(n_pulses), int(batch_pulses))
    sizes = [batch_pulses] * full
    if rem:
        sizes.append(rem)
    return sizes


def _run_batches(worker, n_pulses: int, threads: int, batch_pulses: int):
    sizes = _batch_sizes(n_pulses, batch_pulses)
    if threads <= 1 or len(sizes) <= 1:
        results = [worker(b, size) for b, size in enumerate(sizes)]
    else:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            results = list(pool.map(worker, range(len(sizes)), sizes))
    return results


def simulate_coincidence_run(source: SourceModel, det_signal: DetectorSpec,
                             det_idler: DetectorSpec, n_pulses: int, seed: int,
                             threads: int = 1,
                             batch_pulses: int = BATCH_PULSES) -> CountsRecord:
    """Two-detector run: singles, same-pulse and adjacent-pulse coincidences.

    The accidental estimate pairs the signal click of pulse t with the
    idler click of pulse t+1, as done with a delayed coincidence window.
    """
    if n_pulses < 1:
        raise ConfigurationError("n_pulses must be >= 1")
    beta_s, nu_s = _detection_rates(source, det_signal, "signal")
    beta_i, nu_i = _detection_rates(source, det_idler, "idler")
    dark_s = det_signal.dark_count_probability
    dark_i = det_idler.dark_count_probability

    def worker(batch_index, size):
        n_pairs = _draw_pair_totals(source, _stream_rng(seed, batch_index, _PAIR_STREAM), size)
        u = _stream_rng(seed, batch_index, _CLICK_STREAM).random((2, size))
        p_s = 1.0 - (1.0 - dark_s) * math.exp(-nu_s) * (1.0 - beta_s) ** n_pairs
        p_i = 1.0 - (1.0 - dark_i) * math.exp(-nu_i) * (1.0 - beta_i) ** n_pairs
        clicks_s = _apply_dead_time(u[0] < p_s, det_signal.dead_gates)
        clicks_i = _apply_dead_time(u[1] < p_i, det_idler.dead_gates)
        return (int(clicks_s.sum()), int(clicks_i.sum()),
                int(np.sum(clicks_s & clicks_i)),
                int(np.sum(clicks_s[:-1] & clicks_i[1:])))

    parts = _run_batches(worker, n_pulses, threads, batch_pulses)
    ns, ni, cc, cacc = (sum(p[k] for p in parts) for k in range(4))
    return CountsRecord(
        n_pulses=int(n_pulses), seed=int(seed),
        singles_signal=ns, singles_idler=ni,
        coincidences_same_pulse=cc, coincidences_adjacent_pulse=cacc,
        metadata={"experiment": "coincidence",
                  "source": _source_echo(source),
                  "det_signal": asdict(det_signal),
                  "det_idler": asdict(det_idler)})


def simulate_power_sweep(source_template: SourceModel, det_signal: DetectorSpec,
                         det_idler: DetectorSpec, powers_w, n_pulses: int,
                         seed: int, threads: int = 1):
    """One coincidence run per average pump power.

    Pair rate scales as power squared and Raman rates linearly, anchored
    at the template's reference power. Returns a list of
    (power_w, CountsRecord).
    """
    powers_w = list(powers_w)
    if not powers_w:
        raise ConfigurationError("powers_w must be non-empty")
    out = []
    for i, p in enumerate(powers_w):
        src = source_template.at_power(p)
        sub_seed = int(np.random.SeedSequence((int(seed), 10_000 + i)).generate_state(1)[0])
        rec = simulate_coincidence_run(src, det_signal, det_idler, n_pulses,
                                       sub_seed, threads=threads)
        rec.metadata["average_power_w"] = p
        out.append((p, rec))
    return out


def simulate_hbt(source: SourceModel, det_herald: DetectorSpec,
                 det_a: DetectorSpec, det_b: DetectorSpec, n_pulses: int,
                 seed: int, threads: int = 1,
                 batch_pulses: int = BATCH_PULSES) -> CountsRecord:
    """HBT run: idler heralds, signal split 50/50 onto two detectors.

    Tallies the herald singles N1, the heralded two-folds N12 and N13,
    the triple N123, and the unheralded arm statistics needed for the
    unheralded intensity correlation.
    """
    if n_pulses < 1:
        raise ConfigurationError("n_pulses must be >= 1")
    beta_h, nu_h = _detection_rates(source, det_herald, "idler")
    # per pair photon: survive band and channel, pick an arm, get detected
    alpha = source.spectral_heralding[0] * source.channel_transmission_signal
    c2 = 0.5 * alpha * det_a.efficiency
    c3 = 0.5 * alpha * det_b.efficiency
    raman_at_bs = source.raman_signal_mean * source.channel_transmission_signal
    nu2 = 0.5 * raman_at_bs * det_a.efficiency
    nu3 = 0.5 * raman_at_bs * det_b.efficiency
    dh, d2, d3 = (det_herald.dark_count_probability,
                  det_a.dark_count_probability, det_b.dark_count_probability)

    def worker(batch_index, size):
        n_pairs = _draw_pair_totals(source, _stream_rng(seed, batch_index, _PAIR_STREAM), size)
        u = _stream_rng(seed, batch_index, _CLICK_STREAM).random((2, size))
        p_h = 1.0 - (1.0 - dh) * math.exp(-nu_h) * (1.0 - beta_h) ** n_pairs
        no2 = (1.0 - d2) * math.exp(-nu2) * (1.0 - c2) ** n_pairs
        no3 = (1.0 - d3) * math.exp(-nu3) * (1.0 - c3) ** n_pairs
        no23 = (1.0 - d2) * (1.0 - d3) * math.exp(-nu2 - nu3) \
            * (1.0 - c2 - c3) ** n_pairs
        # joint click pattern of the two split arms from one uniform:
        # [no2&no3 | no2&c3 | c2&no3 | c2&c3]
        p01 = no2 - no23
        p10 = no3 - no23
        uu = u[1]
        clicks_h = _apply_dead_time(u[0] < p_h, det_herald.dead_gates)
        clicks_2 = _apply_dead_time(uu >= no23 + p01, det_a.dead_gates)
        clicks_3 = _apply_dead_time((uu >= no23) & (uu < no23 + p01)
                                    | (uu >= no23 + p01 + p10), det_b.dead_gates)
        return (int(clicks_h.sum()),
                int(np.sum(clicks_h & clicks_2)),
                int(np.sum(clicks_h & clicks_3)),
                int(np.sum(clicks_h & clicks_2 & clicks_3)),
                int(clicks_2.sum()), int(clicks_3.sum()),
                int(np.sum(clicks_2 & clicks_3)))

    parts = _run_batches(worker, n_pulses, threads, batch_pulses)
    nh, n12, n13, n123, s2, s3, p23 = (sum(p[k] for p in parts) for k in range(7))
    return CountsRecord(
        n_pulses=int(n_pulses), seed=int(seed),
        singles_signal=s2 + s3, singles_idler=nh,
        hbt={"n_herald": nh, "n_12": n12, "n_13": n13, "n_123": n123,
             "singles_2": s2, "singles_3": s3, "pairs_23": p23},
        metadata={"experiment": "hbt", "source": _source_echo(source),
                  "det_herald": asdict(det_herald),
                  "det_a": asdict(det_a), "det_b": asdict(det_b)})


# ---------------------------------------------------------------------------
# fourfold HOM scan


def _pair_number_probs(source: SourceModel, max_pairs: int) -> np.ndarray:
    """P(total pairs = n), n = 0..max_pairs, renormalized after truncation.

    Exact elementary-symmetric expansion of independent per-mode thermal
    (geometric) distributions.
    """
    means = source.mean_pairs_per_pulse * source.schmidt_weights
    q = means / (1.0 + means)
    p0 = float(np.prod(1.0 - q))
    s1 = float(q.sum())
    s2 = float((q**2).sum())
    probs = [p0, p0 * s1, p0 * 0.5 * (s1**2 + s2)][: max_pairs + 1]
    probs = np.asarray(probs)
    return probs / probs.sum()


def _port_distribution(k1: int, k2: int, xi: float) -> dict:
    """Photon-number distribution at the two outputs of a 50/50 splitter.

    k1 photons enter port a (all mutually indistinguishable), k2 enter
    port b (mutually indistinguishable, pairwise overlap xi with the
    port-a photons). Exact bosonic calculation: the port-b mode is
    decomposed onto the port-a mode and an orthogonal remainder, the
    creation-operator polynomial is expanded, and |amplitude|^2 weights
    are collected per total (n_out1, n_out2). Returns a dict mapping
    (n_out1, n_out2) -> probability.
    """
    xi = float(np.clip(xi, 0.0, 1.0))
    s = math.sqrt(xi) / math.sqrt(2.0)
    t = math.sqrt(1.0 - xi) / math.sqrt(2.0)
    r = 1.0 / math.sqrt(2.0)
    # monomials over creation ops (out1_a, out2_a, out1_perp, out2_perp)
    poly = {(0, 0, 0, 0): 1.0}

    def multiply(poly, terms):
        out = {}
        for mono, coeff in poly.items():
            for delta, c in terms:
                key = (mono[0] + delta[0], mono[1] + delta[1],
                       mono[2] + delta[2], mono[3] + delta[3])
                out[key] = out.get(key, 0.0) + coeff * c
        return out

    for _ in range(k1):  # a -> (out1 + out2)/sqrt(2)
        poly = multiply(poly, [((1, 0, 0, 0), r), ((0, 1, 0, 0), r)])
    for _ in range(k2):  # b -> (out1 - out2)/sqrt(2), partially overlapping
        poly = multiply(poly, [((1, 0, 0, 0), s), ((0, 1, 0, 0), -s),
                               ((0, 0, 1, 0), t), ((0, 0, 0, 1), -t)])
    norm = math.factorial(k1) * math.factorial(k2)
    dist: dict = {}
    for (a1, a2, b1, b2), coeff in poly.items():
        p = coeff * coeff * (math.factorial(a1) * math.factorial(a2)
                             * math.factorial(b1) * math.factorial(b2)) / norm
        key = (a1 + b1, a2 + b2)
        dist[key] = dist.get(key, 0.0) + p
    return dist


def _herald_click_probs(source: SourceModel, det: DetectorSpec, n_max: int):
    beta, nu = _detection_rates(source, det, "idler")
    base = (1.0 - det.dark_count_probability) * math.exp(-nu)
    return [1.0 - base * (1.0 - beta) ** n for n in range(n_max + 1)]


def _heralded_input_weights(source: SourceModel, det_herald: DetectorSpec,
                            max_pairs: int) -> np.ndarray:
    """W[k] = P(k signal photons reach the splitter AND the herald fires)."""
    probs = _pair_number_probs(source, max_pairs)
    herald = _herald_click_probs(source, det_herald, max_pairs)
    alpha = source.spectral_heralding[0] * source.channel_transmission_signal
    w = np.zeros(max_pairs + 1)
    for n in range(max_pairs + 1):
        for k in range(n + 1):
            w[k] += probs[n] * math.comb(n, k) * alpha**k \
                * (1.0 - alpha) ** (n - k) * herald[n]
    return w


def hom_fourfold_probability(source_a: SourceModel, source_b: SourceModel,
                             det_h1: DetectorSpec, det_h2: DetectorSpec,
                             det_2: DetectorSpec, det_3: DetectorSpec,
                             xi: float, max_pairs: int = 2) -> float:
    """Exact per-pulse fourfold probability at mutual overlap xi.

    Enumerates heralded splitter-input configurations (k1, k2) of the two
    sources, folds in two-photon interference through the exact output
    port distribution, treats Raman photons at the splitter inputs as
    distinguishable classical background (Poisson statistics marginalized
    in closed form), and applies dark counts on the output detectors.
    """
    wa = _heralded_input_weights(source_a, det_h1, max_pairs)
    wb = _heralded_input_weights(source_b, det_h2, max_pairs)
    eta2, eta3 = det_2.efficiency, det_3.efficiency
    rho = (source_a.raman_signal_mean * source_a.channel_transmission_signal
           + source_b.raman_signal_mean * source_b.channel_transmission_signal)
    f2 = (1.0 - det_2.dark_count_probability) * math.exp(-0.5 * rho * eta2)
    f3 = (1.0 - det_3.dark_count_probability) * math.exp(-0.5 * rho * eta3)
    # Raman photons thin independently into the two arms, so the joint
    # no-click factor is the product of the marginals
    f23 = f2 * f3
    p4 = 0.0
    for k1 in range(len(wa)):
        for k2 in range(len(wb)):
            dist = _port_distribution(k1, k2, xi)
            no2 = sum(p * (1.0 - eta2) ** nc for (nc, nd), p in dist.items())
            no3 = sum(p * (1.0 - eta3) ** nd for (nc, nd), p in dist.items())
            no23 = sum(p * (1.0 - eta2) ** nc * (1.0 - eta3) ** nd
                       for (nc, nd), p in dist.items())
            p4 += wa[k1] * wb[k2] * (1.0 - f2 * no2 - f3 * no3 + f23 * no23)
    return float(p4)


def herald_coincidence_probability(source_a: SourceModel, source_b: SourceModel,
                                   det_h1: DetectorSpec, det_h2: DetectorSpec,
                                   max_pairs: int = 2) -> float:
    """Probability per pulse that both heralds fire (delay independent)."""
    return float(_heralded_input_weights(source_a, det_h1, max_pairs).sum()
                 * _heralded_input_weights(source_b, det_h2, max_pairs).sum())


def default_overlap(source_a: SourceModel, source_b: SourceModel):
    """Mutual overlap xi(tau) for aligned Schmidt ladders.

    xi(0) = sum_k lambda_a_k lambda_b_k (equal to the purity for two
    copies of the same source) with a Gaussian falloff on the geometric
    mean coherence time.
    """
    la, lb = source_a.schmidt_weights, source_b.schmidt_weights
    k = min(la.size, lb.size)
    xi0 = float(np.sum(la[:k] * lb[:k]))
    width = math.sqrt(source_a.coherence_time_s * source_b.coherence_time_s)

    def xi(tau_s: float) -> float:
        return xi0 * math.exp(-(tau_s**2) / (2.0 * width**2))

    return xi


def simulate_hom(source_a: SourceModel, source_b: SourceModel, delays_s,
                 det_h1: DetectorSpec, det_h2: DetectorSpec,
                 det_2: DetectorSpec, det_3: DetectorSpec,
                 n_pulses: int, seed: int, overlap=None,
                 max_pairs: int = 2,
                 condition_on_heralds: bool = False) -> CountsRecord:
    """Fourfold HOM delay scan between two heralded sources.

    For each delay the exact per-pulse fourfold probability is computed
    (see :func:`hom_fourfold_probability`) and the count is drawn
    binomially, which is the exact counting distribution for independent
    pulses. ``overlap`` may be a callable tau -> xi; by default the
    aligned-ladder overlap of the two sources is used. ``max_pairs``
    truncates the per-source pair number (2 keeps the leading multi-pair
    contamination; 1 simulates the no-multi-pair counterfactual).

    With ``condition_on_heralds`` each trial is a pulse on which both
    heralds fired, i.e. counts are drawn at probability p4 / P(H1, H2).
    The raw fourfold probability at realistic efficiencies is ~1e-10 per
    pulse, so unconditioned scans of feasible length contain no counts;
    conditioning removes the herald factor, which is delay independent
    and therefore drops out of the visibility.
    """
    delays_s = [float(d) for d in delays_s]
    if not delays_s:
        raise ConfigurationError("delays_s must be non-empty")
    if max_pairs not in (1, 2):
        raise ConfigurationError("max_pairs must be 1 or 2")
    xi_fn = overlap if overlap is not None else default_overlap(source_a, source_b)
    scale = 1.0
    if condition_on_heralds:
        ph = herald_coincidence_probability(source_a, source_b, det_h1,
                                            det_h2, max_pairs)
        if ph <= 0:
            raise ConfigurationError(
                "herald coincidence probability is zero; cannot condition")
        scale = 1.0 / ph
    rows = []
    for d_index, tau in enumerate(delays_s):
        p4 = hom_fourfold_probability(source_a, source_b, det_h1, det_h2,
                                      det_2, det_3, xi_fn(tau), max_pairs)
        rng = _stream_rng(seed, d_index, _HOM_STREAM)
        count = int(rng.binomial(int(n_pulses), min(p4 * scale, 1.0)))
        rows.append({"delay_s": tau, "fourfold": count,
                     "n_pulses": int(n_pulses)})
    return CountsRecord(
        n_pulses=int(n_pulses) * len(delays_s), seed=int(seed),
        fourfold=rows,
        metadata={"experiment": "hom", "max_pairs": max_pairs,
                  "condition_on_heralds": bool(condition_on_heralds),
                  "source_a": _source_echo(source_a),
                  "source_b": _source_echo(source_b)})


def hom_background_click_fractions(source_a: SourceModel, source_b: SourceModel,
                                   det_2: DetectorSpec, det_3: DetectorSpec,
                                   max_pairs: int = 2):
    """Fraction of splitter-arm clicks caused by Raman background.

    Computed from the same closed forms the scan uses: the arm click
    probability with and without the Raman term. Feeds the
    background-floor visibility correction.
    """
    fracs = []
    for det, which in ((det_2, 2), (det_3, 3)):
        eta = det.efficiency
        total = _arm_click_probability(source_a, source_b, det, which, max_pairs,
                                       include_raman=True)
        pairs_only = _arm_click_probability(source_a, source_b, det, which,
                                            max_pairs, include_raman=False)
        fracs.append(0.0 if total <= 0 else max(0.0, 1.0 - pairs_only / total))
    return tuple(fracs)


def _arm_click_probability(source_a, source_b, det, which, max_pairs,
                           include_raman):
    """Unconditional click probability of one splitter output arm."""
    eta = det.efficiency
    rho = (source_a.raman_signal_mean * source_a.channel_transmission_signal
           + source_b.raman_signal_mean * source_b.channel_transmission_signal)
    raman_fac = math.exp(-0.5 * rho * eta) if include_raman else 1.0
    dark_fac = 1.0 - det.dark_count_probability

    def arm_survival(source):
        # P(a pair photon of this source does NOT click this arm) per photon
        alpha = source.spectral_heralding[0] * source.channel_transmission_signal
        return 1.0 - 0.5 * alpha * eta

    no_click = dark_fac * raman_fac
    for source in (source_a, source_b):
        probs = _pair_number_probs(source, max_pairs)
        surv = arm_survival(source)
        no_click *= sum(p * surv**n for n, p in enumerate(probs))
    return 1.0 - no_click


def _source_echo(source: SourceModel) -> dict:
    d = asdict(source)
    d["schmidt_weights"] = [float(x) for x in source.schmidt_weights]
    d["spectral_heralding"] = list(source.spectral_heralding)
    return d


__all__ = [
    "SourceModel", "DetectorSpec", "CountsRecord", "PulseOccupancy",
    "draw_pulse", "simulate_coincidence_run", "simulate_power_sweep",
    "simulate_hbt", "simulate_hom", "hom_fourfold_probability",
    "herald_coincidence_probability", "hom_background_click_fractions",
    "default_overlap", "BATCH_PULSES",
]
