"""Delayed-superposition key distribution over a balanced interferometer.

The sender encodes each bit in one of two orthogonal superpositions of two
time-separated wave-packets and injects it into a balanced Mach-Zehnder
interferometer whose first delay line sits at the sender and second at the
receiver.  Because the second packet enters the channel only after the first
has already arrived, the two packets never coexist in the open channel; an
eavesdropper therefore either randomizes the receiver's detector statistics
or breaks the publicly checked arrival-time relation ``t_r = t_s + tau + T``.

Mode layout (one shared registry):

* path ``"a"`` -- the arm whose delay line sits at the receiver; its packet
  crosses the channel first, at timebin 0.
* path ``"b"`` -- the arm delayed at the sender; its packet crosses one delay
  quantum later.

Detector labels follow the deterministic correspondence: with the package's
i-on-reflection splitter convention a photon injected on port ``a`` (bit 0)
exits entirely on the ``b``-side output port, which is therefore wired as
``D0``; the ``a``-side output port is ``D1``.

Interferometer imperfection is one Gaussian phase kick per round on arm
``a``; its standard deviation maps to fringe visibility as
``V = exp(-sigma^2 / 2)`` and to an error rate of ``(1 - V) / 2``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace
from typing import Dict, List, Optional, Sequence, Tuple

import numpy as np

from . import attacks
from .attacks import AttackKind, AttackStrategy
from .optics import (
    ModeRegistry,
    PhotonState,
    apply_beamsplitter,
    apply_delay,
    apply_phase,
)
from .photonics import DetectionEvent, DetectorModel, SourceModel, dark_click, emit
from .seeding import rng_from, spawn_round_seeds

GV_REGISTRY = ModeRegistry(("a", "b"))

ARM_CHANNEL = "a"
ARM_DELAYED = "b"

# Output-port wiring (see module docstring).
PORT_TO_DETECTOR = {ARM_DELAYED: "D0", ARM_CHANNEL: "D1"}
DETECTOR_FOR_BIT = {0: "D0", 1: "D1"}


class GvError(Exception):
    """Base class for protocol-level errors."""


class ConfigInvalid(GvError):
    """A configuration violates the protocol's validity constraints."""


class NoData(GvError):
    """An estimator was asked to run on an empty sample."""


@dataclass(frozen=True)
class GvConfig:
    """One experiment's timing, noise and hardware parameters.

    ``tau`` (the storage/delay time) must exceed the one-way travel time so
    the two wave-packets are never simultaneously in the channel, and the
    timing tolerance must cover at least three sigma of detector jitter so
    the filter does not throw away honest rounds.
    """

    tau: float = 2e-9
    travel_time: float = 1e-9
    phase_offset: float = 0.0
    phase_noise_sigma: float = 0.0
    detector_d0: DetectorModel = field(default_factory=DetectorModel)
    detector_d1: DetectorModel = field(default_factory=DetectorModel)
    source: SourceModel = field(default_factory=SourceModel)
    timing_tolerance: float = 1e-9

    def __post_init__(self) -> None:
        if self.tau <= 0:
            raise ConfigInvalid(f"tau must be positive, got {self.tau}")
        if self.travel_time < 0:
            raise ConfigInvalid(f"travel_time must be non-negative, got {self.travel_time}")
        if self.tau <= self.travel_time:
            raise ConfigInvalid(
                f"tau ({self.tau}) must exceed the travel time ({self.travel_time}); "
                "otherwise both wave-packets would coexist in the channel"
            )
        if self.phase_noise_sigma < 0:
            raise ConfigInvalid(f"phase_noise_sigma must be non-negative, got {self.phase_noise_sigma}")
        jitter = max(self.detector_d0.jitter_sigma, self.detector_d1.jitter_sigma)
        if self.timing_tolerance < 3.0 * jitter:
            raise ConfigInvalid(
                f"timing_tolerance ({self.timing_tolerance}) must cover 3 jitter sigmas ({3 * jitter})"
            )

    @property
    def detectors(self) -> Dict[str, DetectorModel]:
        return {"D0": self.detector_d0, "D1": self.detector_d1}

    def expected_arrival(self, t_s: float) -> float:
        return t_s + self.tau + self.travel_time


def ideal_config() -> GvConfig:
    """Noiseless reference: unit-efficiency detectors, no darks, no jitter."""
    det = DetectorModel(efficiency=1.0, dark_rate=0.0, jitter_sigma=0.0)
    return GvConfig(detector_d0=det, detector_d1=det)


def sigma_for_visibility(visibility: float) -> float:
    """Phase-noise sigma that produces a given fringe visibility.

    Averaging the fringe over a Gaussian phase kick contracts it by
    ``exp(-sigma^2/2)``, so ``sigma = sqrt(-2 ln V)``.
    """
    if not 0.0 < visibility <= 1.0:
        raise ConfigInvalid(f"visibility must lie in (0, 1], got {visibility}")
    return math.sqrt(-2.0 * math.log(visibility))


def reference_noise_config(visibility: float = 0.86) -> GvConfig:
    """A representative noisy bench: 60% detectors, 300 ps jitter, reduced fringe contrast."""
    det = DetectorModel(efficiency=0.6, dark_rate=100.0, jitter_sigma=300e-12, gate_window=1e-9)
    return GvConfig(
        phase_noise_sigma=sigma_for_visibility(visibility),
        detector_d0=det,
        detector_d1=det,
    )


@dataclass(frozen=True)
class GvRound:
    """One transmission: what was sent, what clicked, and when."""

    bit_sent: int
    t_s: float
    t_r: Optional[float]
    detector_fired: Optional[str]
    accepted: bool
    is_dark: bool = False

    @property
    def correct(self) -> Optional[bool]:
        if self.detector_fired is None:
            return None
        return self.detector_fired == DETECTOR_FOR_BIT[self.bit_sent]


def prepare_gv_state(bit: int) -> PhotonState:
    """The orthogonal signal state for one bit: ``(|a> + (-1)^bit |b>) / sqrt(2)``.

    Both wave-packets sit at timebin 0 here; the physical round applies the
    two delay lines.  This presentation differs from direct injection into
    the splitter port (:func:`inject_gv_state`) only by a fixed quarter-wave
    phase on arm ``b`` and a global phase, neither of which is observable.
    """
    if bit not in (0, 1):
        raise GvError(f"bit must be 0 or 1, got {bit!r}")
    amp = 1.0 / math.sqrt(2.0)
    sign = 1.0 if bit == 0 else -1.0
    return PhotonState(
        GV_REGISTRY,
        {
            (ARM_CHANNEL, "H", 0): amp,
            (ARM_DELAYED, "H", 0): sign * amp,
        },
    )


def inject_gv_state(bit: int) -> PhotonState:
    """The state right after the input splitter for injection port ``S_bit``."""
    if bit not in (0, 1):
        raise GvError(f"bit must be 0 or 1, got {bit!r}")
    port = ARM_CHANNEL if bit == 0 else ARM_DELAYED
    return apply_beamsplitter(PhotonState.single(GV_REGISTRY, port), ARM_CHANNEL, ARM_DELAYED)


def _channel_state(bit: int) -> PhotonState:
    """State during transit: packet ``b`` already held one delay quantum."""
    return apply_delay(inject_gv_state(bit), ARM_DELAYED, 1)


def _port_probabilities(state: PhotonState) -> Dict[Tuple[str, int], float]:
    """Output-port click candidates keyed by (detector, timebin)."""
    probs: Dict[Tuple[str, int], float] = {}
    for mode, p in state.mode_probabilities().items():
        key = (PORT_TO_DETECTOR[mode.path], mode.timebin)
        probs[key] = probs.get(key, 0.0) + p
    return probs


def run_gv_round(
    config: GvConfig,
    bit: int,
    rng_seed,
    attack: Optional[AttackStrategy] = None,
) -> Tuple[GvRound, Optional[object]]:
    """Simulate one full round: emission, interferometer, channel, detection.

    Pipeline: inject into port ``S_bit`` -> input splitter -> packet ``b``
    held in the sender's delay line while packet ``a`` transits (the attack
    hook sits here, in the channel) -> packet ``a`` held in the receiver's
    delay line -> output splitter -> detectors.  In the ideal configuration
    detector ``D_bit`` fires with the detector efficiency and the click lands
    exactly at ``t_s + tau + T``.

    Returns the round record and Eve's per-round record (None when she did
    not interact).
    """
    if bit not in (0, 1):
        raise GvError(f"bit must be 0 or 1, got {bit!r}")
    rng = rng_from(rng_seed)
    emission = emit(config.source, rng)
    t_s = emission.herald_time
    eve_record: Optional[object] = None

    delivered = emission.n_photons
    if attack is not None and attack.kind is AttackKind.BEAM_SPLITTER_TAP:
        tap = attacks.beam_splitter_tap(emission, attack.reflectivity, rng)
        eve_record = tap
        delivered = tap.n_delivered

    clicks: List[DetectionEvent] = []
    for _ in range(delivered):
        state = _channel_state(bit)
        if attack is not None and attacks.interacts(attack, rng):
            if attack.kind is AttackKind.INTERCEPT_RESEND:
                state, eve_record = attacks.intercept_packet(state, rng, ARM_CHANNEL)
            elif attack.kind is AttackKind.GV_STORE_FORWARD:
                basis = (_channel_state(0), _channel_state(1))
                state, eve_record = attacks.store_and_forward(
                    state, basis, (ARM_CHANNEL, ARM_DELAYED), attack.hold_bins, rng
                )
        else:
            # Keep the per-round stream aligned with attack-free runs.
            pass
        state = apply_delay(state, ARM_CHANNEL, 1)
        phi = config.phase_offset
        if config.phase_noise_sigma > 0:
            phi += rng.normal(0.0, config.phase_noise_sigma)
        if phi != 0.0:
            state = apply_phase(state, ARM_CHANNEL, phi)
        state = apply_beamsplitter(state, ARM_CHANNEL, ARM_DELAYED)

        # One photon produces at most one click: walk the candidate ports.
        u = rng.random()
        cumulative = 0.0
        for (det_id, timebin), p in sorted(_port_probabilities(state).items()):
            model = config.detectors[det_id]
            cumulative += p * model.efficiency
            if u < cumulative:
                t_true = t_s + timebin * config.tau + config.travel_time
                t_click = t_true
                if model.jitter_sigma > 0:
                    t_click += rng.normal(0.0, model.jitter_sigma)
                clicks.append(DetectionEvent(det_id, max(t_click, 0.0), is_dark=False))
                break

    gate_center = config.expected_arrival(t_s)
    for det_id, model in config.detectors.items():
        event = dark_click(det_id, model, gate_center, rng)
        if event is not None:
            clicks.append(event)

    if not clicks:
        return GvRound(bit, t_s, None, None, accepted=False), eve_record

    real = [c for c in clicks if not c.is_dark]
    winner = min(real, key=lambda c: c.time_tag) if real else min(clicks, key=lambda c: c.time_tag)
    accepted = abs(winner.time_tag - gate_center) <= config.timing_tolerance
    return (
        GvRound(bit, t_s, winner.time_tag, winner.detector_id, accepted=accepted, is_dark=winner.is_dark),
        eve_record,
    )


@dataclass
class GvBatch:
    """A batch of independent rounds plus Eve's per-round records."""

    rounds: List[GvRound]
    eve_records: List[Optional[object]]
    config: GvConfig


def run_gv_batch(
    config: GvConfig,
    n_rounds: int,
    seed: int,
    attack: Optional[AttackStrategy] = None,
    bits: Optional[Sequence[int]] = None,
) -> GvBatch:
    """Run ``n_rounds`` independent rounds from one master seed.

    Each round gets its own child seed (see :mod:`oqkd.seeding`), and the
    random S0/S1 choice is drawn from the round's own generator unless an
    explicit bit sequence is supplied.
    """
    if n_rounds < 1:
        raise ConfigInvalid(f"n_rounds must be at least 1, got {n_rounds}")
    if bits is not None and len(bits) != n_rounds:
        raise ConfigInvalid(f"got {len(bits)} bits for {n_rounds} rounds")
    rounds: List[GvRound] = []
    records: List[Optional[object]] = []
    for i, child in enumerate(spawn_round_seeds(seed, n_rounds)):
        rng = np.random.default_rng(child)
        bit = int(bits[i]) if bits is not None else int(rng.integers(0, 2))
        rnd, record = run_gv_round(config, bit, rng, attack)
        rounds.append(rnd)
        records.append(record)
    return GvBatch(rounds=rounds, eve_records=records, config=config)


def timing_filter(rounds: Sequence[GvRound], config: GvConfig) -> Tuple[List[GvRound], List[GvRound]]:
    """Partition rounds by the public arrival-time test.

    Keeps clicks with ``|t_r - t_s - tau - T| <= timing_tolerance`` (boundary
    ties accepted); everything else -- wrong-time clicks and rounds with no
    click at all are excluded from the accepted list, and clicked rounds that
    fail the test are flagged as potential eavesdropping evidence.
    """
    accepted: List[GvRound] = []
    discarded: List[GvRound] = []
    for rnd in rounds:
        if rnd.t_r is None:
            discarded.append(rnd)
            continue
        delta = abs(rnd.t_r - config.expected_arrival(rnd.t_s))
        if delta <= config.timing_tolerance:
            accepted.append(rnd if rnd.accepted else replace(rnd, accepted=True))
        else:
            discarded.append(rnd)
    return accepted, discarded


@dataclass(frozen=True)
class Estimate:
    """A point estimate with its one-sigma uncertainty."""

    value: float
    sigma: float


def _binomial_estimate(k: int, n: int) -> Estimate:
    p = k / n
    return Estimate(p, math.sqrt(max(p * (1.0 - p), 1.0 / n) / n))


def gv_qber(rounds: Sequence[GvRound]) -> Estimate:
    """Wrong-detector clicks over all clicks, with a binomial error bar."""
    clicked = [r for r in rounds if r.detector_fired is not None]
    if not clicked:
        raise NoData("no accepted clicks to estimate an error rate from")
    wrong = sum(1 for r in clicked if not r.correct)
    return _binomial_estimate(wrong, len(clicked))


@dataclass
class FringeScan:
    """Monte Carlo fringe: counts per detector at each scanned phase."""

    phases: List[float]
    counts_d0: List[int]
    counts_d1: List[int]
    rounds_per_point: int

    def rows(self) -> List[Tuple[float, int, int]]:
        return list(zip(self.phases, self.counts_d0, self.counts_d1))


def fringe_scan(
    config: GvConfig,
    phase_grid: Sequence[float],
    rounds_per_point: int,
    seed: int,
    bit: int = 0,
) -> FringeScan:
    """Scan the interferometer phase and histogram clicks per detector."""
    if len(phase_grid) == 0:
        raise ConfigInvalid("phase grid must not be empty")
    counts0: List[int] = []
    counts1: List[int] = []
    point_seeds = np.random.SeedSequence(int(seed)).spawn(len(phase_grid))
    for phase, child in zip(phase_grid, point_seeds):
        cfg = replace(config, phase_offset=config.phase_offset + float(phase))
        c0 = c1 = 0
        for round_child in child.spawn(rounds_per_point):
            rnd, _ = run_gv_round(cfg, bit, np.random.default_rng(round_child))
            if rnd.accepted and rnd.detector_fired == "D0":
                c0 += 1
            elif rnd.accepted and rnd.detector_fired == "D1":
                c1 += 1
        counts0.append(c0)
        counts1.append(c1)
    return FringeScan(list(map(float, phase_grid)), counts0, counts1, rounds_per_point)


def fit_visibility(phases: Sequence[float], counts: Sequence[int]) -> Estimate:
    """Fringe visibility from a sinusoid least-squares fit.

    Fits ``counts = A + B cos(phi) + C sin(phi)`` and reports
    ``V = sqrt(B^2 + C^2) / A`` -- the (max - min)/(max + min) contrast of the
    fitted fringe -- with the error propagated from the fit covariance.
    """
    phases = np.asarray(phases, dtype=float)
    counts = np.asarray(counts, dtype=float)
    if phases.size < 4:
        raise NoData("need at least 4 scan points to fit a fringe")
    design = np.column_stack([np.ones_like(phases), np.cos(phases), np.sin(phases)])
    coef, residuals, rank, _ = np.linalg.lstsq(design, counts, rcond=None)
    a, b, c = coef
    if a <= 0:
        raise NoData("fitted fringe has non-positive mean count")
    dof = max(phases.size - 3, 1)
    if residuals.size:
        s2 = float(residuals[0]) / dof
    else:
        s2 = float(np.sum((counts - design @ coef) ** 2)) / dof
    cov = s2 * np.linalg.inv(design.T @ design)
    amp = math.hypot(b, c)
    v = amp / a
    if amp == 0.0:
        return Estimate(0.0, math.sqrt(cov[1, 1] + cov[2, 2]) / a)
    grad = np.array([-amp / (a * a), b / (amp * a), c / (amp * a)])
    sigma = math.sqrt(max(float(grad @ cov @ grad), 0.0))
    return Estimate(v, sigma)


@dataclass
class GvSummary:
    """Batch-level statistics: acceptance, error rate, per-detector counts."""

    n_rounds: int
    n_accepted: int
    n_discarded: int
    qber: Optional[Estimate]
    counts: Dict[str, int]

    def as_dict(self) -> Dict[str, object]:
        return {
            "n_rounds": self.n_rounds,
            "n_accepted": self.n_accepted,
            "n_discarded": self.n_discarded,
            "qber": None if self.qber is None else self.qber.value,
            "qber_sigma": None if self.qber is None else self.qber.sigma,
            "counts": dict(self.counts),
        }


def gv_summary(batch: GvBatch) -> GvSummary:
    accepted, discarded = timing_filter(batch.rounds, batch.config)
    counts: Dict[str, int] = {"D0": 0, "D1": 0}
    for rnd in accepted:
        counts[rnd.detector_fired] = counts.get(rnd.detector_fired, 0) + 1
    try:
        qber = gv_qber(accepted)
    except NoData:
        qber = None
    return GvSummary(
        n_rounds=len(batch.rounds),
        n_accepted=len(accepted),
        n_discarded=len(discarded),
        qber=qber,
        counts=counts,
    )
