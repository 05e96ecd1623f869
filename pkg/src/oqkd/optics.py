"""Single-excitation state vectors over labeled optical modes.

A mode is a (path, polarization, timebin) triple; a :class:`PhotonState` maps
modes to complex amplitudes plus a scalar ``loss_weight`` holding probability
mass already absorbed by lossy elements.  All element applications are pure
functions (state in, new state out) and, except for :func:`apply_loss`,
norm-preserving.

Conventions, fixed globally for the whole package:

* Beam splitter: 50:50, unitary ``[[1, i], [i, 1]] / sqrt(2)`` on the two
  acted paths -- transmission keeps the amplitude real, reflection multiplies
  by ``i``.
* Polarizing beam splitter: H transmits with unit amplitude, V reflects with
  amplitude ``i`` (same reflection phase as the beam splitter).
* Half-wave plate at angle ``theta``: rotates the (H, V) amplitude pair by
  the standard rotation matrix ``[[cos t, -sin t], [sin t, cos t]]``.
* Time is discrete: one timebin equals the protocol delay quantum; optical
  delays shift the timebin index, sub-bin jitter belongs to detection.

States are plain dense maps over a registry of at most 64 declared paths;
desk-scale interferometers never need more, so no sparse tricks are used.
Randomness never enters this module.
"""

from __future__ import annotations

import math
from typing import Dict, Iterable, Mapping, NamedTuple, Optional, Sequence, Tuple

NORM_TOL = 1e-9
MAX_PATHS = 64
POLARIZATIONS = ("H", "V")

_INV_SQRT2 = 1.0 / math.sqrt(2.0)


class OpticsError(Exception):
    """Base class for optical-model errors."""


class UnknownPath(OpticsError):
    """A path identifier is not declared in the experiment's mode registry."""


class IdenticalPorts(OpticsError):
    """A two-port element was given the same path twice."""


class RegistryMismatch(OpticsError):
    """Two states built over different mode registries were combined."""


class InvalidMode(OpticsError):
    """A mode label carries an unknown polarization or a negative timebin."""


class NormViolation(OpticsError):
    """Total probability left the unit budget beyond tolerance."""


class ModeLabel(NamedTuple):
    """One optical mode: a path identifier, a polarization and a timebin."""

    path: str
    pol: str = "H"
    timebin: int = 0

    def validate(self) -> None:
        if self.pol not in POLARIZATIONS:
            raise InvalidMode(f"polarization must be one of {POLARIZATIONS}, got {self.pol!r}")
        if not isinstance(self.timebin, int) or self.timebin < 0:
            raise InvalidMode(f"timebin must be a non-negative integer, got {self.timebin!r}")


class ModeRegistry:
    """The finite set of path identifiers declared for one experiment."""

    def __init__(self, paths: Iterable[str]):
        ordered: list[str] = []
        for p in paths:
            if p not in ordered:
                ordered.append(p)
        if not ordered:
            raise OpticsError("a registry needs at least one path")
        if len(ordered) > MAX_PATHS:
            raise OpticsError(f"registry limited to {MAX_PATHS} paths, got {len(ordered)}")
        self.paths: Tuple[str, ...] = tuple(ordered)
        self._set = frozenset(ordered)

    def __contains__(self, path: str) -> bool:
        return path in self._set

    def __eq__(self, other: object) -> bool:
        return isinstance(other, ModeRegistry) and self._set == other._set

    def __hash__(self) -> int:
        return hash(self._set)

    def __repr__(self) -> str:
        return f"ModeRegistry({list(self.paths)!r})"

    def require(self, path: str) -> None:
        if path not in self._set:
            raise UnknownPath(f"path {path!r} is not registered (have {sorted(self._set)})")


class PhotonState:
    """A single-photon amplitude map plus the probability mass already lost.

    ``sum(|amplitude|^2) + loss_weight == 1`` within :data:`NORM_TOL` for any
    physical state.  ``normalized=False`` marks intermediate algebraic states
    (superpositions with arbitrary coefficients) for which the check is
    skipped; element applications propagate the flag.
    """

    __slots__ = ("registry", "amplitudes", "loss_weight", "normalized")

    def __init__(
        self,
        registry: ModeRegistry,
        amplitudes: Mapping[ModeLabel, complex],
        loss_weight: float = 0.0,
        normalized: bool = True,
    ):
        amps: Dict[ModeLabel, complex] = {}
        for mode, amp in amplitudes.items():
            if not isinstance(mode, ModeLabel):
                mode = ModeLabel(*mode)
            mode.validate()
            registry.require(mode.path)
            if amp != 0:
                amps[mode] = complex(amp)
        if loss_weight < -NORM_TOL:
            raise NormViolation(f"loss_weight must be non-negative, got {loss_weight}")
        self.registry = registry
        self.amplitudes = amps
        self.loss_weight = float(loss_weight)
        self.normalized = bool(normalized)
        if normalized:
            self._check_norm()

    @classmethod
    def single(cls, registry: ModeRegistry, path: str, pol: str = "H", timebin: int = 0) -> "PhotonState":
        """A photon occupying exactly one mode with unit amplitude."""
        return cls(registry, {ModeLabel(path, pol, timebin): 1.0 + 0.0j})

    @classmethod
    def vacuum(cls, registry: ModeRegistry) -> "PhotonState":
        """The fully absorbed state: no amplitude anywhere, all mass lost."""
        return cls(registry, {}, loss_weight=1.0)

    def _check_norm(self) -> None:
        err = self.norm_error()
        if err > NORM_TOL:
            raise NormViolation(f"norm drifted by {err:.3e} (> {NORM_TOL})")

    def norm_error(self) -> float:
        """Absolute deviation of total probability (amplitudes + loss) from 1."""
        total = sum((amp.real * amp.real + amp.imag * amp.imag) for amp in self.amplitudes.values())
        return abs(total + self.loss_weight - 1.0)

    def probability(self) -> float:
        """Total probability carried by live amplitudes (excludes loss_weight)."""
        return sum((amp.real * amp.real + amp.imag * amp.imag) for amp in self.amplitudes.values())

    def path_probability(self, path: str) -> float:
        """Probability of finding the photon anywhere on one path."""
        self.registry.require(path)
        return sum(
            (amp.real * amp.real + amp.imag * amp.imag)
            for mode, amp in self.amplitudes.items()
            if mode.path == path
        )

    def mode_probabilities(self) -> Dict[ModeLabel, float]:
        return {
            mode: amp.real * amp.real + amp.imag * amp.imag
            for mode, amp in self.amplitudes.items()
        }

    def amplitude(self, path: str, pol: str = "H", timebin: int = 0) -> complex:
        return self.amplitudes.get(ModeLabel(path, pol, timebin), 0.0 + 0.0j)

    def __repr__(self) -> str:
        terms = ", ".join(
            f"({m.path},{m.pol},t={m.timebin}): {a:.4g}" for m, a in sorted(self.amplitudes.items())
        )
        return f"PhotonState({{{terms}}}, loss={self.loss_weight:.4g})"


def superpose(terms: Sequence[Tuple[complex, PhotonState]]) -> PhotonState:
    """Linear combination ``sum(c_k * state_k)``; result is not renormalized."""
    if not terms:
        raise OpticsError("superpose needs at least one term")
    registry = terms[0][1].registry
    amps: Dict[ModeLabel, complex] = {}
    for coeff, state in terms:
        if state.registry != registry:
            raise RegistryMismatch("superposed states must share one mode registry")
        for mode, amp in state.amplitudes.items():
            amps[mode] = amps.get(mode, 0.0 + 0.0j) + complex(coeff) * amp
    return PhotonState(registry, amps, loss_weight=0.0, normalized=False)


def _rebuild(state: PhotonState, amps: Dict[ModeLabel, complex], loss: Optional[float] = None) -> PhotonState:
    return PhotonState(
        state.registry,
        amps,
        loss_weight=state.loss_weight if loss is None else loss,
        normalized=state.normalized,
    )


def apply_beamsplitter(state: PhotonState, in1: str, in2: str) -> PhotonState:
    """Mix the two acted paths with the 50:50 unitary ``[[1, i], [i, 1]]/sqrt(2)``.

    Amplitudes with identical polarization and timebin on ``in1``/``in2`` mix;
    everything else (other paths, or wave-packets sitting in different
    timebins) passes through untouched, so packets that do not overlap in time
    simply do not interfere.
    """
    state.registry.require(in1)
    state.registry.require(in2)
    if in1 == in2:
        raise IdenticalPorts(f"beam splitter ports must differ, got {in1!r} twice")
    new: Dict[ModeLabel, complex] = {}
    pairs: Dict[Tuple[str, int], list] = {}
    for mode, amp in state.amplitudes.items():
        if mode.path == in1 or mode.path == in2:
            slot = pairs.setdefault((mode.pol, mode.timebin), [0.0 + 0.0j, 0.0 + 0.0j])
            slot[0 if mode.path == in1 else 1] = amp
        else:
            new[mode] = amp
    for (pol, tb), (a1, a2) in pairs.items():
        b1 = (a1 + 1j * a2) * _INV_SQRT2
        b2 = (1j * a1 + a2) * _INV_SQRT2
        if b1 != 0:
            new[ModeLabel(in1, pol, tb)] = b1
        if b2 != 0:
            new[ModeLabel(in2, pol, tb)] = b2
    return _rebuild(state, new)


def apply_pbs(state: PhotonState, in_path: str, transmit_path: str, reflect_path: str) -> PhotonState:
    """Route H amplitude to ``transmit_path`` and V amplitude (times i) to ``reflect_path``."""
    for p in (in_path, transmit_path, reflect_path):
        state.registry.require(p)
    new: Dict[ModeLabel, complex] = {}
    for mode, amp in state.amplitudes.items():
        if mode.path != in_path:
            new[mode] = new.get(mode, 0.0 + 0.0j) + amp
            continue
        if mode.pol == "H":
            target = ModeLabel(transmit_path, "H", mode.timebin)
            new[target] = new.get(target, 0.0 + 0.0j) + amp
        else:
            target = ModeLabel(reflect_path, "V", mode.timebin)
            new[target] = new.get(target, 0.0 + 0.0j) + 1j * amp
    return _rebuild(state, {m: a for m, a in new.items() if a != 0})


def apply_hwp(state: PhotonState, path: str, theta: float) -> PhotonState:
    """Rotate the (H, V) amplitudes on one path by the angle ``theta``."""
    state.registry.require(path)
    if not math.isfinite(theta):
        raise OpticsError(f"rotation angle must be finite, got {theta!r}")
    c, s = math.cos(theta), math.sin(theta)
    new: Dict[ModeLabel, complex] = {}
    bins: Dict[int, list] = {}
    for mode, amp in state.amplitudes.items():
        if mode.path == path:
            slot = bins.setdefault(mode.timebin, [0.0 + 0.0j, 0.0 + 0.0j])
            slot[0 if mode.pol == "H" else 1] = amp
        else:
            new[mode] = amp
    for tb, (ah, av) in bins.items():
        bh = c * ah - s * av
        bv = s * ah + c * av
        if bh != 0:
            new[ModeLabel(path, "H", tb)] = bh
        if bv != 0:
            new[ModeLabel(path, "V", tb)] = bv
    return _rebuild(state, new)


def apply_delay(state: PhotonState, path: str, bins: int) -> PhotonState:
    """Shift every amplitude on one path forward in time by ``bins`` timebins."""
    state.registry.require(path)
    if not isinstance(bins, int) or bins < 0:
        raise OpticsError(f"delay must be a non-negative integer number of bins, got {bins!r}")
    if bins == 0:
        return state
    new: Dict[ModeLabel, complex] = {}
    for mode, amp in state.amplitudes.items():
        if mode.path == path:
            new[ModeLabel(path, mode.pol, mode.timebin + bins)] = amp
        else:
            new[mode] = amp
    return _rebuild(state, new)


def apply_phase(state: PhotonState, path: str, phi: float) -> PhotonState:
    """Multiply every amplitude on one path by ``exp(i * phi)``."""
    state.registry.require(path)
    if not math.isfinite(phi):
        raise OpticsError(f"phase must be finite, got {phi!r}")
    factor = complex(math.cos(phi), math.sin(phi))
    new: Dict[ModeLabel, complex] = {}
    for mode, amp in state.amplitudes.items():
        new[mode] = factor * amp if mode.path == path else amp
    return _rebuild(state, new)


def apply_mirror(state: PhotonState, in_path: str, out_path: str) -> PhotonState:
    """Redirect all amplitude from one path onto another, phases untouched."""
    state.registry.require(in_path)
    state.registry.require(out_path)
    if in_path == out_path:
        return state
    new: Dict[ModeLabel, complex] = {}
    for mode, amp in state.amplitudes.items():
        target = ModeLabel(out_path, mode.pol, mode.timebin) if mode.path == in_path else mode
        new[target] = new.get(target, 0.0 + 0.0j) + amp
    return _rebuild(state, {m: a for m, a in new.items() if a != 0})


def apply_loss(state: PhotonState, path: str, transmission: float) -> PhotonState:
    """Attenuate one path, moving the removed probability into ``loss_weight``.

    The only non-unitary element: amplitudes scale by ``sqrt(transmission)``
    and the |amplitude|^2 mass removed is added to the loss budget, to be
    resolved stochastically at detection time.
    """
    state.registry.require(path)
    if not 0.0 <= transmission <= 1.0:
        raise OpticsError(f"transmission must lie in [0, 1], got {transmission!r}")
    scale = math.sqrt(transmission)
    lost = 0.0
    new: Dict[ModeLabel, complex] = {}
    for mode, amp in state.amplitudes.items():
        if mode.path == path:
            lost += (1.0 - transmission) * (amp.real * amp.real + amp.imag * amp.imag)
            if scale != 0.0:
                new[mode] = amp * scale
        else:
            new[mode] = amp
    return _rebuild(state, new, loss=state.loss_weight + lost)


def inner_product(s1: PhotonState, s2: PhotonState) -> complex:
    """Hermitian inner product ``<s1|s2>`` over the amplitude maps.

    The loss budget carries no phase information and is excluded.  Both
    states must be built over the same mode registry.
    """
    if s1.registry != s2.registry:
        raise RegistryMismatch("inner product requires states over the same registry")
    small, large = (s1.amplitudes, s2.amplitudes)
    if len(small) > len(large):
        total = 0.0 + 0.0j
        for mode, amp in large.items():
            other = small.get(mode)
            if other is not None:
                total += amp.conjugate() * other
        return total
    total = 0.0 + 0.0j
    for mode, amp in small.items():
        other = large.get(mode)
        if other is not None:
            total += amp.conjugate() * other
    return total


def cloneable_overlap_values() -> Tuple[float, float]:
    """Overlaps for which a universal copier could exist.

    Copying two states unitarily forces their overlap x to satisfy x = x^2;
    this solves that fixed-point equation and returns its only roots, 0 and 1:
    exact copying is possible only for orthogonal or identical states.
    """
    # x^2 - x = 0, solved by the quadratic formula with a=1, b=-1, c=0.
    a, b, c = 1.0, -1.0, 0.0
    disc = math.sqrt(b * b - 4.0 * a * c)
    roots = sorted(((-b - disc) / (2.0 * a), (-b + disc) / (2.0 * a)))
    return (roots[0], roots[1])


def is_cloneable_overlap(x: complex, tol: float = 1e-9) -> bool:
    """True when an overlap value is a fixed point of x = x^2 within ``tol``."""
    return abs(x - x * x) <= tol
