"""Pluggable eavesdropper strategies and their information accounting.

A strategy is an immutable configuration injected into a protocol run; the
channel-level operations here are pure given a generator.  The no-attack
strategy is the exact identity: protocol batches with ``AttackStrategy.none()``
consume randomness identically to attack-free runs, so statistics match
bit for bit under the same seed.

Three channel mechanisms are modeled:

* intercept-resend -- Eve measures the in-flight state (a polarization basis
  for prepare-and-measure rounds, a wave-packet presence measurement for the
  delayed-superposition channel) and forwards the eigenstate she found;
* store-and-forward -- Eve captures the leading wave-packet, waits for its
  delayed partner, reads the bit by interfering the pair in her own copy of
  the receiver, and retransmits a perfect replacement that is necessarily
  late by the hold time;
* beam-splitter tap -- Eve taps the channel with a weak splitter and learns a
  bit only when a multi-photon emission lets her keep a photon while the
  receiver still gets one.

The time-shift attack is not a channel transformation at all: it exploits
detector-efficiency asymmetry, and is represented the way it enters the
security margin, through the mutual-information increment ``delta_i_ae``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from enum import Enum
from typing import Dict, Mapping, Optional, Sequence, Tuple

import numpy as np

from .optics import PhotonState, apply_delay, inner_product
from .photonics import DetectorModel, EmissionEvent, measure_polarization


class AttackError(Exception):
    """Base class for attack-model errors."""


class OutOfDomain(AttackError):
    """A security-formula input left its valid domain."""


class AttackKind(Enum):
    NONE = "none"
    INTERCEPT_RESEND = "intercept-resend"
    BEAM_SPLITTER_TAP = "beam-splitter-tap"
    TIME_SHIFT = "time-shift"
    GV_STORE_FORWARD = "store-forward"


BASIS_POLICIES = ("random", "rectilinear", "diagonal")


@dataclass(frozen=True)
class AttackStrategy:
    """Tagged eavesdropper configuration injected into a simulated channel.

    ``interaction_rate`` is the fraction of rounds Eve touches at all; every
    mechanism-specific field is read only by its own kind.
    """

    kind: AttackKind = AttackKind.NONE
    basis_policy: str = "random"
    reflectivity: float = 0.0
    hold_bins: int = 1
    eta_shift: Mapping[str, float] = field(default_factory=dict)
    interaction_rate: float = 1.0

    def __post_init__(self) -> None:
        if self.basis_policy not in BASIS_POLICIES:
            raise AttackError(f"basis_policy must be one of {BASIS_POLICIES}, got {self.basis_policy!r}")
        if not 0.0 <= self.reflectivity <= 1.0:
            raise AttackError(f"reflectivity must lie in [0, 1], got {self.reflectivity}")
        if self.hold_bins < 0:
            raise AttackError(f"hold_bins must be non-negative, got {self.hold_bins}")
        if not 0.0 <= self.interaction_rate <= 1.0:
            raise AttackError(f"interaction_rate must lie in [0, 1], got {self.interaction_rate}")

    @classmethod
    def none(cls) -> "AttackStrategy":
        return cls(kind=AttackKind.NONE)

    @classmethod
    def intercept_resend(cls, basis_policy: str = "random", interaction_rate: float = 1.0) -> "AttackStrategy":
        return cls(kind=AttackKind.INTERCEPT_RESEND, basis_policy=basis_policy, interaction_rate=interaction_rate)

    @classmethod
    def beam_splitter_tap(cls, reflectivity: float) -> "AttackStrategy":
        return cls(kind=AttackKind.BEAM_SPLITTER_TAP, reflectivity=reflectivity)

    @classmethod
    def store_forward(cls, hold_bins: int = 1, interaction_rate: float = 1.0) -> "AttackStrategy":
        return cls(kind=AttackKind.GV_STORE_FORWARD, hold_bins=hold_bins, interaction_rate=interaction_rate)

    @classmethod
    def time_shift(cls, eta_shift: Mapping[str, float]) -> "AttackStrategy":
        return cls(kind=AttackKind.TIME_SHIFT, eta_shift=dict(eta_shift))


@dataclass(frozen=True)
class InterceptRecord:
    """What Eve saw in one intercept-resend round."""

    basis_angle: float
    bit: int


@dataclass(frozen=True)
class PacketInterceptRecord:
    """Presence measurement on one wave-packet of a delayed superposition."""

    found: bool


@dataclass(frozen=True)
class StoreForwardRecord:
    """Joint measurement outcome after holding the leading packet."""

    bit: int
    hold_bins: int


@dataclass(frozen=True)
class TapRecord:
    """Photon bookkeeping for one tapped emission."""

    n_emitted: int
    n_captured: int
    n_delivered: int

    @property
    def learned_bit(self) -> bool:
        """Eve reads the bit without being noticed: she kept a photon and so did Bob."""
        return self.n_captured >= 1 and self.n_delivered >= 1

    @property
    def induced_loss(self) -> bool:
        return self.n_delivered < self.n_emitted


def intercept_resend(
    state: PhotonState,
    basis_policy: str,
    rng: np.random.Generator,
    path: str = "q",
) -> Tuple[PhotonState, InterceptRecord]:
    """Measure the in-flight polarization and resend the eigenstate found.

    The policy picks Eve's measurement basis: the rectilinear (H/V) basis, the
    diagonal one, or a fresh coin flip per round.  Matching Alice's basis
    reveals the bit exactly and leaves no trace; a mismatch randomizes both
    Eve's record and what the receiver later measures.
    """
    if basis_policy == "rectilinear":
        angle = 0.0
    elif basis_policy == "diagonal":
        angle = math.pi / 4
    elif basis_policy == "random":
        angle = 0.0 if rng.random() < 0.5 else math.pi / 4
    else:
        raise AttackError(f"unknown basis policy {basis_policy!r}")
    bit, resent = measure_polarization(state, path, angle, rng)
    return resent, InterceptRecord(basis_angle=angle, bit=bit)


def intercept_packet(
    state: PhotonState,
    rng: np.random.Generator,
    packet_path: str,
) -> Tuple[PhotonState, PacketInterceptRecord]:
    """Destructively test one wave-packet for the photon and resend on a hit.

    Only the packet currently in the channel is accessible.  Finding the
    photon collapses the superposition onto that packet (Eve retransmits a
    fresh, correctly timed copy); not finding it leaves the photon entirely
    in the partner packet.  Either way the phase coherence between the two
    packets is destroyed, which is what the receiver's interferometer sees.
    """
    p_found = state.path_probability(packet_path)
    packet_modes = [m for m in state.amplitudes if m.path == packet_path]
    if rng.random() < p_found:
        mode = packet_modes[0]
        resent = PhotonState(state.registry, {mode: 1.0 + 0.0j}, loss_weight=state.loss_weight * 0.0)
        return resent, PacketInterceptRecord(found=True)
    remaining = {m: a for m, a in state.amplitudes.items() if m.path != packet_path}
    survive = sum((a.real * a.real + a.imag * a.imag) for a in remaining.values())
    if survive <= 0.0:
        # Photon was certainly in the measured packet; the branch above fires
        # with probability 1 in that case, so this only guards degenerate input.
        raise AttackError(f"no amplitude left outside path {packet_path!r}")
    scale = 1.0 / math.sqrt(survive)
    collapsed = PhotonState(
        state.registry,
        {m: a * scale for m, a in remaining.items()},
    )
    return collapsed, PacketInterceptRecord(found=False)


def store_and_forward(
    state: PhotonState,
    basis_states: Sequence[PhotonState],
    hold_paths: Sequence[str],
    hold_bins: int,
    rng: np.random.Generator,
) -> Tuple[PhotonState, StoreForwardRecord]:
    """Hold the leading packet, read the bit jointly, resend late.

    ``basis_states`` are the two orthogonal channel states the sender uses;
    Eve projects onto them (a perfect measurement once she holds both
    packets), then retransmits the state she found with every packet delayed
    by ``hold_bins`` timebins.  The receiver's timing check is what catches
    the delay.  ``hold_bins == 0`` degenerates to the identity: without
    holding the leading packet Eve never has both packets at once.
    """
    if hold_bins == 0:
        return state, StoreForwardRecord(bit=-1, hold_bins=0)
    overlaps = [abs(inner_product(b, state)) ** 2 for b in basis_states]
    total = sum(overlaps)
    if total <= 0.0:
        raise AttackError("channel state has no overlap with the signal basis")
    bit = 1 if rng.random() < overlaps[1] / total else 0
    resent = basis_states[bit]
    for path in hold_paths:
        resent = apply_delay(resent, path, hold_bins)
    return resent, StoreForwardRecord(bit=bit, hold_bins=hold_bins)


def beam_splitter_tap(
    emission: EmissionEvent,
    reflectivity: float,
    rng: np.random.Generator,
) -> TapRecord:
    """Route each photon of one emission through Eve's tap splitter.

    Each photon is independently captured with probability ``reflectivity``.
    A captured photon feeds a duplicate of the receiver, so Eve reads the bit
    whenever she captures at least one photon -- but the round only stays
    unnoticed (and only produces a key bit) if the receiver kept one too,
    which requires a multi-photon emission.
    """
    if not 0.0 <= reflectivity <= 1.0:
        raise AttackError(f"reflectivity must lie in [0, 1], got {reflectivity}")
    captured = 0
    for _ in range(emission.n_photons):
        if rng.random() < reflectivity:
            captured += 1
    return TapRecord(
        n_emitted=emission.n_photons,
        n_captured=captured,
        n_delivered=emission.n_photons - captured,
    )


def delta_i_ae(eta: float, p_d2: float, p_e2: float) -> float:
    """Mutual-information increment Eve gains from non-unit detector efficiency.

    ``(1 - eta) / (2 eta) * (p_d2 - p_e2)``: the leverage a time-shift attacker
    extracts from the control detector's click statistics when the receiver's
    detectors miss a fraction ``1 - eta`` of photons.
    """
    if not 0.0 < eta <= 1.0:
        raise OutOfDomain(f"detector efficiency must lie in (0, 1], got {eta}")
    if p_e2 > p_d2:
        raise OutOfDomain(f"expect p_e2 <= p_d2, got p_e2={p_e2} > p_d2={p_d2}")
    if p_d2 < 0.0 or p_e2 < 0.0:
        raise OutOfDomain("click probabilities must be non-negative")
    return (1.0 - eta) / (2.0 * eta) * (p_d2 - p_e2)


def time_shift(
    detectors: Mapping[str, DetectorModel],
    eta_shift: Mapping[str, float],
) -> Tuple[Dict[str, DetectorModel], float]:
    """Apply Eve's per-detector efficiency bias and report the η she exploits.

    ``eta_shift`` multiplies each named detector's efficiency (a shift into a
    low-efficiency time slot can only lose photons, so factors lie in (0, 1]).
    Returns the modified detector set and the effective efficiency to feed
    :func:`delta_i_ae` -- conservatively, the worst shifted detector.
    """
    shifted: Dict[str, DetectorModel] = {}
    for name, det in detectors.items():
        factor = eta_shift.get(name, 1.0)
        if not 0.0 < factor <= 1.0:
            raise OutOfDomain(f"eta shift for {name!r} must lie in (0, 1], got {factor}")
        eta = det.efficiency * factor
        if eta <= 0.0:
            raise OutOfDomain(f"shifted efficiency for {name!r} must stay positive")
        shifted[name] = DetectorModel(
            efficiency=eta,
            dark_rate=det.dark_rate,
            jitter_sigma=det.jitter_sigma,
            gate_window=det.gate_window,
        )
    if not shifted:
        raise OutOfDomain("time_shift needs at least one detector")
    eta_effective = min(det.efficiency for det in shifted.values())
    return shifted, eta_effective


def interacts(strategy: Optional[AttackStrategy], rng: np.random.Generator) -> bool:
    """Decide whether Eve touches this round at all.

    Draws from ``rng`` even for the no-attack strategy so that attacked and
    attack-free batches consume the stream identically round by round; with
    ``AttackStrategy.none()`` the outcome is always False.
    """
    u = rng.random()
    if strategy is None or strategy.kind is AttackKind.NONE:
        return False
    return u < strategy.interaction_rate
