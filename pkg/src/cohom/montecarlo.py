"""Event-level simulation of the four-detector coincidence bench.

Each simulated event is one doubly-bunched pair: two photons sharing a
coherence slot, a common detuning draw ``delta_f`` (the up-tagged photon
is shifted by +delta_f, the down-tagged one by -delta_f) and a common
random optical phase.  The joint path assignment of the two photons at
the first splitter (the *sector*) is sampled uniformly; conditioned on
its path tag, each photon propagates to the detectors with the
coefficients supplied by :mod:`cohom.optics`.

Two simulation modes:

``amplitude``
    Two-photon pairing sums.  The detector-pair outcome of every event
    is drawn from the bosonic probability table built from the joint
    amplitudes ``A(a->Di) A(b->Dj) + A(a->Dj) A(b->Di)``; the cross-port
    cancellation makes D1-D3 (and D2-D4) coincidences impossible for
    cross-path pairs, so any surviving counts come from same-path
    leakage (removed by the heterodyne filter) or injected accidentals.

``classical``
    Independent per-detector intensity sampling: every detector clicks
    with probability ``mean_photon_number * I_k(delta_f) / I0`` per
    slot.  This reproduces the classical coherent-light correlation
    floor g2 = 0.5 and calibrates the quantum-vs-classical contrast.

Runs are deterministic: pairs are partitioned into fixed-size chunks,
one spawned RNG substream per chunk, and chunk results are merged by
integer addition, so serial and parallel execution are bit-identical.
"""

from __future__ import annotations

import cmath
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, replace
from enum import Enum
from typing import NamedTuple

import numpy as np

from .analytic import local_intensity
from .optics import PathTag, detector_path_coefficients

CHUNK_SIZE = 32768

DETECTORS = (1, 2, 3, 4)
DETECTOR_PAIRS = ((1, 2), (1, 3), (1, 4), (2, 3), (2, 4), (3, 4))

#: Unordered two-photon detector outcomes; (k, k) means both photons at D_k.
OUTCOMES = (
    (1, 1), (1, 2), (1, 3), (1, 4),
    (2, 2), (2, 3), (2, 4),
    (3, 3), (3, 4),
    (4, 4),
)

_I_IDX = np.array([i - 1 for i, _ in OUTCOMES])
_J_IDX = np.array([j - 1 for _, j in OUTCOMES])
_DIAGONAL = _I_IDX == _J_IDX

_SQRT2 = math.sqrt(2.0)
_MODES = ("amplitude", "classical")


class ConfigError(ValueError):
    """Invalid run parameter; ``field`` names the offending parameter."""

    def __init__(self, field: str, message: str):
        super().__init__(f"{field}: {message}")
        self.field = field


class PairSector(Enum):
    """Joint path assignment of the two photons at the first splitter."""

    UD = (PathTag.U, PathTag.D)
    DU = (PathTag.D, PathTag.U)
    UU = (PathTag.U, PathTag.U)
    DD = (PathTag.D, PathTag.D)

    @property
    def path_1(self) -> PathTag:
        return self.value[0]

    @property
    def path_2(self) -> PathTag:
        return self.value[1]

    @property
    def is_cross_path(self) -> bool:
        """True when the photons carry opposite detuning signs."""
        return self.value[0] is not self.value[1]


SECTORS = (PairSector.UD, PairSector.DU, PairSector.UU, PairSector.DD)
_SECTOR_CROSS = np.array([s.is_cross_path for s in SECTORS])


def _require(field: str, ok: bool, message: str) -> None:
    if not ok:
        raise ConfigError(field, message)


@dataclass(frozen=True)
class RunConfig:
    """All physical and numerical parameters of one simulation run.

    Angular quantities are in rad/s, times in seconds.  ``mean_photon_number``
    is the per-slot click scale used by classical mode (amplitude mode always
    propagates exactly one pair per event).
    """

    sigma_f: float
    tau1: float
    tau2: float
    mean_photon_number: float = 0.1
    n_pairs: int = 100_000
    higher_order_ratio: float = 0.01
    pulse_sigma: float = 1e-9
    coincidence_window: float = 8e-9
    seed: int = 0
    mode: str = "amplitude"
    heterodyne_filter: bool = True

    def __post_init__(self):
        _require("sigma_f", math.isfinite(self.sigma_f) and self.sigma_f >= 0,
                 "must be finite and >= 0")
        _require("tau1", math.isfinite(self.tau1) and self.tau1 >= 0,
                 "must be finite and >= 0")
        _require("tau2", math.isfinite(self.tau2) and self.tau2 >= 0,
                 "must be finite and >= 0")
        _require("mean_photon_number",
                 math.isfinite(self.mean_photon_number)
                 and self.mean_photon_number > 0,
                 "must be finite and > 0")
        _require("n_pairs", isinstance(self.n_pairs, int) and self.n_pairs >= 1,
                 "must be an integer >= 1")
        _require("higher_order_ratio",
                 0.0 <= self.higher_order_ratio < 1.0, "must lie in [0, 1)")
        _require("pulse_sigma",
                 math.isfinite(self.pulse_sigma) and self.pulse_sigma >= 0,
                 "must be finite and >= 0")
        _require("coincidence_window",
                 math.isfinite(self.coincidence_window)
                 and self.coincidence_window > 0,
                 "must be finite and > 0")
        _require("seed", isinstance(self.seed, int) and self.seed >= 0,
                 "must be a non-negative integer")
        _require("mode", self.mode in _MODES, f"must be one of {_MODES}")
        if self.mode == "classical":
            # Bernoulli click probability mu * I_k / I0 must not exceed 1
            # at the fringe maximum I_k = I0.
            _require("mean_photon_number", self.mean_photon_number <= 1.0,
                     "must be <= 1 in classical mode (click probability)")


@dataclass(frozen=True)
class PairEvent:
    """One doubly-bunched pair with its joint detector-outcome amplitudes."""

    delta_f: float
    global_phase: float
    sector: PairSector
    joint_amplitudes: dict

    def outcome_probabilities(self) -> dict:
        """Normalized probability of each unordered detector outcome.

        Double occupations carry the bosonic weight |A|^2 / 2 (the pairing
        sum double-counts the identical-mode term); the total over all
        outcomes then normalizes to one.
        """
        weights = {}
        for (i, j), amp in self.joint_amplitudes.items():
            q = abs(amp) ** 2
            if i == j:
                q /= 2.0
            weights[(i, j)] = q
        total = sum(weights.values())
        return {pair: q / total for pair, q in weights.items()}


def sample_detuning(rng, sigma_f, size=None):
    """Draw detunings from Normal(0, sigma_f^2) truncated at +/-4 sigma.

    Rejection sampling keeps the Gaussian shape inside the truncation
    bound; results are deterministic for a given generator state.  With
    ``size=None`` a single float is returned.
    """
    if sigma_f == 0.0:
        return 0.0 if size is None else np.zeros(int(size))
    n = 1 if size is None else int(size)
    out = rng.normal(0.0, sigma_f, n)
    bound = 4.0 * sigma_f
    bad = np.abs(out) > bound
    while bad.any():
        out[bad] = rng.normal(0.0, sigma_f, int(bad.sum()))
        bad = np.abs(out) > bound
    return float(out[0]) if size is None else out


def pair_amplitudes(delta_f, tau1, tau2, global_phase, sector) -> PairEvent:
    """Joint two-photon amplitudes for one pair in a given path sector.

    Each photon, conditioned on its path tag, reaches detector k with the
    bench coefficient for that tag (renormalized by sqrt(2): one tag holds
    half the single-photon norm).  The unordered outcome (Di, Dj) gets the
    exchange-symmetrized pairing sum; the shared global phase multiplies
    both photons and cancels in every probability.
    """
    coeffs = detector_path_coefficients(delta_f, tau1, tau2)
    common = cmath.exp(1j * global_phase)
    psi_1 = {k: _SQRT2 * coeffs[k][sector.path_1] * common for k in DETECTORS}
    psi_2 = {k: _SQRT2 * coeffs[k][sector.path_2] * common for k in DETECTORS}
    amps = {}
    for i, j in OUTCOMES:
        amps[(i, j)] = psi_1[i] * psi_2[j] + psi_1[j] * psi_2[i]
    return PairEvent(delta_f, global_phase, sector, amps)


def outcome_probability_table(delta_f, tau1, tau2, global_phase, sector):
    """Vectorized outcome probabilities, one row per event.

    ``delta_f`` and ``global_phase`` may be arrays of the same shape; the
    result has one trailing axis over :data:`OUTCOMES`.  The detuning and
    phase enter only as unit-modulus factors, so the structural zeros of
    the pairing sums (the anticorrelated detector pairs) stay exactly
    zero for every event.
    """
    delta_f = np.asarray(delta_f, dtype=float)
    phase = np.asarray(global_phase, dtype=float)
    base = detector_path_coefficients(0.0, tau1, tau2)
    by_path = {
        p: _SQRT2 * np.array([base[k][p] for k in DETECTORS])
        for p in (PathTag.U, PathTag.D)
    }
    a1 = by_path[sector.path_1]
    a2 = by_path[sector.path_2]
    bracket = a1[_I_IDX] * a2[_J_IDX] + a1[_J_IDX] * a2[_I_IDX]

    up = np.exp(1j * delta_f * (tau1 + tau2))
    arm = {PathTag.U: up, PathTag.D: np.conj(up)}
    w = arm[sector.path_1] * arm[sector.path_2] * np.exp(2j * phase)
    q = np.abs(bracket * w[..., None]) ** 2
    q[..., _DIAGONAL] /= 2.0
    return q / q.sum(axis=-1, keepdims=True)


def detector_convolve(true_time, rng, pulse_sigma, size=None):
    """Smear arrival times with the Gaussian electrical-pulse jitter."""
    shape = np.shape(true_time) if size is None else size
    result = np.asarray(true_time, dtype=float) + rng.normal(0.0, pulse_sigma, shape)
    return float(result) if result.ndim == 0 else result


def postselect(sector, outcome, delta_t, config) -> bool:
    """Coincidence post-selection predicate for one sampled outcome.

    Keeps only two-detector outcomes whose time stamps fall inside the
    coincidence window; with the heterodyne filter on, same-path pairs
    (equal detuning signs, hence no beat note) are discarded as well.
    """
    i, j = outcome
    if i == j:
        return False
    if abs(delta_t) > config.coincidence_window:
        return False
    if config.heterodyne_filter and not sector.is_cross_path:
        return False
    return True


@dataclass
class CountsAccumulator:
    """Integer tallies of one run (or one mergeable slice of a run)."""

    singles: dict
    coincidences: dict
    histogram: dict
    n_generated: int = 0
    n_postselected: int = 0

    @staticmethod
    def empty() -> "CountsAccumulator":
        return CountsAccumulator(
            singles={k: 0 for k in DETECTORS},
            coincidences={p: 0 for p in DETECTOR_PAIRS},
            histogram={},
        )

    def merge(self, other: "CountsAccumulator") -> "CountsAccumulator":
        """Add another accumulator into this one (commutative on ints)."""
        for k, v in other.singles.items():
            self.singles[k] = self.singles.get(k, 0) + v
        for p, v in other.coincidences.items():
            self.coincidences[p] = self.coincidences.get(p, 0) + v
        for b, v in other.histogram.items():
            self.histogram[b] = self.histogram.get(b, 0) + v
        self.n_generated += other.n_generated
        self.n_postselected += other.n_postselected
        return self

    def total_coincidences(self) -> int:
        return sum(self.coincidences.values())


class G2Estimate(NamedTuple):
    value: float
    stderr: float


def g2_estimate(counts: CountsAccumulator, pair) -> G2Estimate:
    """Normalized coincidence estimate C_ij * N / (s_i * s_j) with error.

    N is the number of generated slots, so statistically independent
    detectors give exactly 1 and the classical mode gives 0.5.  The
    standard error combines the Poisson/binomial fluctuations of the
    coincidence and singles counts; with zero coincidences the one-count
    resolution N / (s_i * s_j) is reported instead of a zero error bar.
    Undefined estimates (a dead detector) are returned as NaN.
    """
    i, j = sorted(pair)
    c = counts.coincidences[(i, j)]
    s_i = counts.singles[i]
    s_j = counts.singles[j]
    n = counts.n_generated
    if s_i == 0 or s_j == 0:
        return G2Estimate(math.nan, math.nan)
    value = c * n / (s_i * s_j)
    if c == 0:
        return G2Estimate(0.0, n / (s_i * s_j))
    stderr = value * math.sqrt(1.0 / c + 1.0 / s_i + 1.0 / s_j)
    return G2Estimate(value, stderr)


def _inject_accidentals(config, rng, n_slots, acc) -> None:
    """Higher-order bunching as uniform accidental two-detector hits.

    Each contaminated slot deposits one extra photon pair on a uniformly
    chosen detector pair; both photons always raise the singles counters,
    and the coincidence registers when the jittered stamps stay inside
    the window.  Accidentals carry no beat-note information, so the
    heterodyne filter does not remove them.
    """
    n_acc = int(rng.binomial(n_slots, config.higher_order_ratio))
    pick = rng.integers(0, len(DETECTOR_PAIRS), n_acc)
    times = detector_convolve(np.zeros((n_acc, 2)), rng, config.pulse_sigma)
    ok = np.abs(times[:, 0] - times[:, 1]) <= config.coincidence_window
    for p, (i, j) in enumerate(DETECTOR_PAIRS):
        hit = pick == p
        n_hit = int(np.count_nonzero(hit))
        acc.singles[i] += n_hit
        acc.singles[j] += n_hit
        acc.coincidences[(i, j)] += int(np.count_nonzero(hit & ok))


def _amplitude_chunk(config, rng, n) -> CountsAccumulator:
    """Simulate n pair events in amplitude (pairing-sum) mode."""
    acc = CountsAccumulator.empty()
    delta = sample_detuning(rng, config.sigma_f, n)
    phase = rng.uniform(0.0, 2.0 * math.pi, n)
    sector_idx = rng.integers(0, len(SECTORS), n)
    pick = rng.random(n)
    times = detector_convolve(np.zeros((n, 2)), rng, config.pulse_sigma)

    outcome = np.empty(n, dtype=np.intp)
    for s, sector in enumerate(SECTORS):
        mask = sector_idx == s
        if not mask.any():
            continue
        prob = outcome_probability_table(
            delta[mask], config.tau1, config.tau2, phase[mask], sector)
        cdf = np.cumsum(prob, axis=1)
        # index of the CDF interval holding the uniform draw; zero-width
        # (zero-probability) intervals are unreachable by construction
        idx = (pick[mask, None] >= cdf).sum(axis=1)
        outcome[mask] = np.minimum(idx, len(OUTCOMES) - 1)

    i_det = _I_IDX[outcome]
    j_det = _J_IDX[outcome]
    for k in range(4):
        acc.singles[k + 1] += int(
            np.count_nonzero(i_det == k) + np.count_nonzero(j_det == k))

    within = np.abs(times[:, 0] - times[:, 1]) <= config.coincidence_window
    allowed = within & (i_det != j_det)
    if config.heterodyne_filter:
        allowed &= _SECTOR_CROSS[sector_idx]
    acc.n_postselected += int(np.count_nonzero(allowed))
    for o, (i, j) in enumerate(OUTCOMES):
        if i == j:
            continue
        acc.coincidences[(i, j)] += int(np.count_nonzero(allowed & (outcome == o)))
    acc.n_generated += n

    _inject_accidentals(config, rng, n, acc)
    return acc


def _classical_chunk(config, rng, n) -> CountsAccumulator:
    """Simulate n slots in classical intensity-sampling mode."""
    acc = CountsAccumulator.empty()
    delta = sample_detuning(rng, config.sigma_f, n)
    prob = np.stack(
        [config.mean_photon_number
         * local_intensity(k, delta, config.tau1, config.tau2)
         for k in DETECTORS],
        axis=1,
    )
    clicks = rng.random((n, 4)) < prob
    times = detector_convolve(np.zeros((n, 4)), rng, config.pulse_sigma)

    for k in range(4):
        acc.singles[k + 1] += int(np.count_nonzero(clicks[:, k]))

    any_pair = np.zeros(n, dtype=bool)
    for i, j in DETECTOR_PAIRS:
        sel = (
            clicks[:, i - 1]
            & clicks[:, j - 1]
            & (np.abs(times[:, i - 1] - times[:, j - 1])
               <= config.coincidence_window)
        )
        acc.coincidences[(i, j)] += int(np.count_nonzero(sel))
        any_pair |= sel
    acc.n_postselected += int(np.count_nonzero(any_pair))
    acc.n_generated += n

    _inject_accidentals(config, rng, n, acc)
    return acc


def _chunk_sizes(n_pairs: int) -> list:
    sizes = [CHUNK_SIZE] * (n_pairs // CHUNK_SIZE)
    if n_pairs % CHUNK_SIZE:
        sizes.append(n_pairs % CHUNK_SIZE)
    return sizes


def simulate_run(config: RunConfig, workers: int = 1) -> CountsAccumulator:
    """Run the full simulation described by ``config``.

    Events are processed in fixed-size chunks, one spawned RNG substream
    per chunk; the chunk results are merged by integer addition, so the
    outcome is bit-identical for any ``workers`` count and across reruns
    with the same config.
    """
    sizes = _chunk_sizes(config.n_pairs)
    streams = np.random.SeedSequence(config.seed).spawn(len(sizes))
    kernel = _amplitude_chunk if config.mode == "amplitude" else _classical_chunk

    def run_chunk(idx: int) -> CountsAccumulator:
        return kernel(config, np.random.default_rng(streams[idx]), sizes[idx])

    if workers <= 1:
        parts = [run_chunk(i) for i in range(len(sizes))]
    else:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            parts = list(pool.map(run_chunk, range(len(sizes))))

    total = CountsAccumulator.empty()
    for part in parts:
        total.merge(part)
    total.histogram[config.tau2 - config.tau1] = total.total_coincidences()
    return total


@dataclass(frozen=True)
class ScanPoint:
    """One scan position: the delay difference, its config, its counts."""

    tau21: float
    config: RunConfig
    counts: CountsAccumulator


def scan_tau21(config: RunConfig, tau21_values, workers: int = 1) -> list:
    """Simulate a sweep of the delay difference tau21 = tau2 - tau1.

    Each point runs at tau2 = tau1 + tau21 with an independent seed
    derived from the base seed, so the whole scan is reproducible and
    points may execute in parallel; results are returned in scan order.
    """
    values = [float(v) for v in tau21_values]
    children = np.random.SeedSequence(config.seed).spawn(max(len(values), 1))
    point_configs = []
    for value, child in zip(values, children):
        point_seed = int(child.generate_state(1, np.uint64)[0])
        point_configs.append(
            replace(config, tau2=config.tau1 + value, seed=point_seed))

    if workers <= 1:
        counts = [simulate_run(c) for c in point_configs]
    else:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            counts = list(pool.map(simulate_run, point_configs))
    return [
        ScanPoint(tau21=v, config=c, counts=k)
        for v, c, k in zip(values, point_configs, counts)
    ]
