"""Stochastic models of the heralded photon source and avalanche detectors.

The source emits photon pairs at exponentially distributed intervals; the
herald arm announces each emission, and the signal photon reaches the optics
with the configured coupling efficiency.  Multi-photon emissions (probability
``p_multi``) are modeled as two classically independent photons: each one
traverses the optics and the detectors on its own, with no two-photon
interference.  That is sufficient for tap-attack accounting at the source
qualities considered here.

Detectors click with probability ``efficiency * arrival_probability``, smear
the click time with Gaussian jitter, and add independent dark counts inside
the gate window.  Dead time and afterpulsing are ignored: at the count rates
simulated here (hundreds of clicks per acquisition) they are negligible.

All sampling takes an explicit ``numpy`` generator; nothing here keeps state.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Optional, Tuple

import numpy as np

from .optics import PhotonState, apply_hwp

P_MULTI_MAX = 0.1


class HardwareError(Exception):
    """Base class for source/detector model errors."""


class InvalidProbability(HardwareError):
    """An arrival probability fell outside [0, 1]."""


class InsufficientCounts(HardwareError):
    """Too few counts to form the requested estimate."""


@dataclass(frozen=True)
class SourceModel:
    """Heralded pair source: rate, multi-photon fraction, coupling.

    ``p_multi`` is capped at 0.1; beyond that the independent-photon picture
    of multi-photon emissions stops being a sensible approximation.
    """

    herald_rate: float = 9.0
    p_multi: float = 0.0
    coupling_efficiency: float = 1.0
    herald_window: float = 1e-9

    def __post_init__(self) -> None:
        if self.herald_rate <= 0:
            raise HardwareError(f"herald_rate must be positive, got {self.herald_rate}")
        if not 0.0 <= self.p_multi <= P_MULTI_MAX:
            raise HardwareError(f"p_multi must lie in [0, {P_MULTI_MAX}], got {self.p_multi}")
        if not 0.0 <= self.coupling_efficiency <= 1.0:
            raise HardwareError(f"coupling_efficiency must lie in [0, 1], got {self.coupling_efficiency}")
        if self.herald_window <= 0:
            raise HardwareError(f"herald_window must be positive, got {self.herald_window}")


@dataclass(frozen=True)
class DetectorModel:
    """Threshold single-photon detector: efficiency, darks, jitter, gate."""

    efficiency: float = 1.0
    dark_rate: float = 0.0
    jitter_sigma: float = 0.0
    gate_window: float = 1e-9

    def __post_init__(self) -> None:
        if not 0.0 <= self.efficiency <= 1.0:
            raise HardwareError(f"efficiency must lie in [0, 1], got {self.efficiency}")
        if self.dark_rate < 0:
            raise HardwareError(f"dark_rate must be non-negative, got {self.dark_rate}")
        if self.jitter_sigma < 0:
            raise HardwareError(f"jitter_sigma must be non-negative, got {self.jitter_sigma}")
        if self.gate_window <= 0:
            raise HardwareError(f"gate_window must be positive, got {self.gate_window}")

    @property
    def dark_probability(self) -> float:
        """Probability of a dark click inside one gate window."""
        return min(1.0, self.dark_rate * self.gate_window)


@dataclass(frozen=True)
class DetectionEvent:
    """A click: which detector, when, and (simulation truth) whether dark.

    The ``is_dark`` flag exists so analyses can compute background-subtracted
    quantities; protocol logic itself never reads it.
    """

    detector_id: str
    time_tag: float
    is_dark: bool = False

    def __post_init__(self) -> None:
        if self.time_tag < 0:
            raise HardwareError(f"time_tag must be non-negative, got {self.time_tag}")


@dataclass(frozen=True)
class EmissionEvent:
    """One heralded emission: how many signal photons made it into the optics."""

    n_photons: int
    herald_time: float


def emit(source: SourceModel, rng: np.random.Generator, t_prev: float = 0.0) -> EmissionEvent:
    """Draw the next heralded emission after ``t_prev``.

    Herald times follow an exponential-interarrival process at
    ``herald_rate``; with probability ``p_multi`` the emission carries two
    photons, and each photon independently survives coupling into the optics
    with probability ``coupling_efficiency``.
    """
    herald_time = t_prev + rng.exponential(1.0 / source.herald_rate)
    n_emitted = 2 if rng.random() < source.p_multi else 1
    n_coupled = 0
    for _ in range(n_emitted):
        if rng.random() < source.coupling_efficiency:
            n_coupled += 1
    return EmissionEvent(n_photons=n_coupled, herald_time=herald_time)


def detect(
    arrival_probability: float,
    true_time: float,
    model: DetectorModel,
    rng: np.random.Generator,
) -> Optional[DetectionEvent]:
    """Sample one gate of a single detector.

    A signal click occurs with probability ``efficiency * arrival_probability``
    at ``true_time`` plus Gaussian jitter.  Independently, a dark click may
    fire anywhere inside the gate window centered on ``true_time``.  When both
    occur the signal click wins (the detector fires once and the earlier,
    causally real avalanche is the one recorded).
    """
    if not 0.0 <= arrival_probability <= 1.0:
        raise InvalidProbability(f"arrival probability must lie in [0, 1], got {arrival_probability}")
    signal = rng.random() < model.efficiency * arrival_probability
    dark = rng.random() < model.dark_probability
    if signal:
        t = true_time
        if model.jitter_sigma > 0:
            t += rng.normal(0.0, model.jitter_sigma)
        return DetectionEvent("det", max(t, 0.0), is_dark=False)
    if dark:
        t = true_time + (rng.random() - 0.5) * model.gate_window
        return DetectionEvent("det", max(t, 0.0), is_dark=True)
    return None


def dark_click(
    detector_id: str,
    model: DetectorModel,
    gate_center: float,
    rng: np.random.Generator,
) -> Optional[DetectionEvent]:
    """Sample an independent dark click for one detector's gate, if any."""
    if rng.random() < model.dark_probability:
        t = gate_center + (rng.random() - 0.5) * model.gate_window
        return DetectionEvent(detector_id, max(t, 0.0), is_dark=True)
    return None


def measure_polarization(
    state: PhotonState,
    path: str,
    basis_angle: float,
    rng: np.random.Generator,
) -> Tuple[int, PhotonState]:
    """Projective polarization measurement on one path, in a rotated basis.

    The basis is the (H, V) pair rotated by ``basis_angle``; the outcome bit
    is 0 for the rotated-H eigenstate and 1 for rotated-V.  Returns the
    outcome and the collapsed (re-prepared) eigenstate on the same path, which
    is exactly what an intercept-resend receiver emits.
    """
    rotated = apply_hwp(state, path, -basis_angle)
    p_h = 0.0
    p_v = 0.0
    for mode, amp in rotated.amplitudes.items():
        if mode.path == path:
            weight = amp.real * amp.real + amp.imag * amp.imag
            if mode.pol == "H":
                p_h += weight
            else:
                p_v += weight
    total = p_h + p_v
    if total <= 0.0:
        raise HardwareError(f"no amplitude on path {path!r} to measure")
    bit = 1 if rng.random() < p_v / total else 0
    eigen = PhotonState.single(state.registry, path, "V" if bit else "H", timebin=0)
    return bit, apply_hwp(eigen, path, basis_angle)


@dataclass(frozen=True)
class G2Estimate:
    """Heralded second-order correlation estimate with Poissonian error."""

    value: float
    sigma: float


def estimate_g2(n_herald: int, n_c1: int, n_c2: int, n_triple: int) -> G2Estimate:
    """Standard heralded coincidence estimator ``g2 = n_triple * n_herald / (n_c1 * n_c2)``.

    The error bar combines the Poisson fluctuations of all four counters; with
    zero triples it falls back to the one-count upper scale.
    """
    if n_herald <= 0 or n_c1 <= 0 or n_c2 <= 0:
        raise InsufficientCounts(
            f"need positive herald and singles counts, got herald={n_herald}, c1={n_c1}, c2={n_c2}"
        )
    if n_triple < 0:
        raise InsufficientCounts(f"triple count cannot be negative, got {n_triple}")
    scale = n_herald / (n_c1 * n_c2)
    value = n_triple * scale
    if n_triple == 0:
        return G2Estimate(0.0, scale)
    rel = math.sqrt(1.0 / n_triple + 1.0 / n_herald + 1.0 / n_c1 + 1.0 / n_c2)
    return G2Estimate(value, value * rel)


def simulate_g2_counts(
    source: SourceModel,
    detector_efficiency: float,
    n_emissions: int,
    seed: int,
) -> Tuple[int, int, int, int]:
    """Monte Carlo the split-detector correlation measurement of one source.

    Every heralded emission sends its coupled photons onto a 50:50 splitter
    monitored by two detectors of the given efficiency; returns the
    ``(n_herald, n_c1, n_c2, n_triple)`` counts that feed :func:`estimate_g2`.
    Vectorized, and deterministic for a fixed seed.
    """
    if not 0.0 <= detector_efficiency <= 1.0:
        raise HardwareError(f"detector efficiency must lie in [0, 1], got {detector_efficiency}")
    rng = np.random.default_rng(np.random.SeedSequence(int(seed)))
    n = int(n_emissions)
    emitted = np.where(rng.random(n) < source.p_multi, 2, 1)
    coupled = rng.binomial(emitted, source.coupling_efficiency)
    # Each coupled photon independently picks an output arm and fires its
    # detector with probability eta; a click means >= 1 photon detected there.
    p_each = 0.5 * detector_efficiency
    hits_c1 = rng.binomial(coupled, p_each)
    hits_c2 = rng.binomial(coupled - hits_c1, p_each / (1.0 - p_each) if p_each < 1.0 else 1.0)
    click1 = hits_c1 > 0
    click2 = hits_c2 > 0
    return n, int(click1.sum()), int(click2.sum()), int((click1 & click2).sum())
