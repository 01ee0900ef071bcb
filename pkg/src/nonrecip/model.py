"""Domain types for three-mode parametrically pumped devices.

A device is three resonant modes plus up to three pairwise pumped processes
(photon gain at the pair's sum frequency, or unity-photon-gain conversion at
the difference frequency).  Validation assigns each scattering channel a
conjugation flag: a conversion process links channels of equal conjugation,
a gain process links opposite ones, so the coupling graph must admit a
2-coloring.  All frequencies and decay rates are ordinary frequencies
(omega/2pi) in Hz; coupling strengths are the dimensionless ratios
rho_ij = |g_ij|^2 / (kappa_i * kappa_j); phases are radians in [0, 2pi).
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass, replace
from typing import Iterable, Mapping, Optional

from .errors import (
    DeviceValidationError,
    DuplicatePairError,
    FrustratedConjugationError,
    GainAboveThresholdError,
    TopologyError,
)

TWO_PI = 2.0 * math.pi


class ProcessKind(enum.Enum):
    GAIN = "gain"
    CONVERSION = "conversion"


def _canonical_pair(pair: Iterable[str]) -> tuple[str, str]:
    names = tuple(pair)
    if len(names) != 2 or names[0] == names[1]:
        raise DeviceValidationError(f"coupling pair must name two distinct modes, got {names!r}")
    return tuple(sorted(names))  # type: ignore[return-value]


def wrap_phase(phi: float) -> float:
    """Wrap an angle to [0, 2pi)."""
    return float(phi) % TWO_PI


def wrap_signed(phi: float) -> float:
    """Wrap an angle to (-pi, pi]."""
    w = wrap_phase(phi)
    return w - TWO_PI if w > math.pi else w


@dataclass(frozen=True)
class ModeSpec:
    """One resonant mode: name, resonance frequency (Hz) and energy decay rate (Hz)."""

    name: str
    resonance_freq: float
    kappa: float

    def __post_init__(self):
        if not self.name or not str(self.name).strip():
            raise DeviceValidationError("mode name must be a non-empty identifier")
        if not (self.resonance_freq > 0):
            raise DeviceValidationError(f"mode {self.name}: resonance_freq must be > 0")
        if not (self.kappa > 0):
            raise DeviceValidationError(f"mode {self.name}: kappa must be > 0")


@dataclass(frozen=True)
class PumpedCoupling:
    """A pairwise parametric process.

    rho is the dimensionless pump strength |g|^2/(kappa_i kappa_j); gain
    processes require rho < 1 (below self-oscillation), conversions admit any
    rho >= 0 (full conversion at rho = 1, over-coupled beyond).  The phase is
    the pump phase referred to the common clock, stored wrapped to [0, 2pi).
    """

    pair: tuple[str, str]
    kind: ProcessKind
    rho: float
    phase: float = 0.0

    def __post_init__(self):
        object.__setattr__(self, "pair", _canonical_pair(self.pair))
        object.__setattr__(self, "kind", ProcessKind(self.kind))
        object.__setattr__(self, "rho", float(self.rho))
        object.__setattr__(self, "phase", wrap_phase(self.phase))
        if not math.isfinite(self.rho) or self.rho < 0:
            raise DeviceValidationError(f"coupling {self.pair}: rho must be finite and >= 0")
        if self.kind is ProcessKind.GAIN and self.rho >= 1.0:
            raise GainAboveThresholdError(
                f"GainAboveThreshold: gain coupling {self.pair} has rho={self.rho:g} >= 1 "
                "(at or beyond parametric self-oscillation)"
            )


@dataclass(frozen=True)
class DeviceConfig:
    """Raw device description: exactly three modes, up to three couplings."""

    modes: tuple[ModeSpec, ...]
    couplings: tuple[PumpedCoupling, ...] = ()
    pump_detuning_tolerance: float = 10e6

    def __post_init__(self):
        object.__setattr__(self, "modes", tuple(self.modes))
        object.__setattr__(self, "couplings", tuple(self.couplings))


@dataclass(frozen=True)
class ChannelFrame:
    """Per-channel conjugation bookkeeping of a validated device.

    Conjugated channels carry the conjugate envelope (idler side of a gain
    process); they enter the photon-flux metric with sign -1 and respond at
    detuning -delta relative to their carrier.
    """

    names: tuple[str, str, str]
    conjugated: tuple[bool, bool, bool]
    carrier_freqs: tuple[float, float, float]

    def index(self, name: str) -> int:
        return self.names.index(name)

    def is_conjugated(self, name: str) -> bool:
        return self.conjugated[self.index(name)]

    @property
    def detuning_signs(self) -> tuple[int, int, int]:
        return tuple(-1 if c else +1 for c in self.conjugated)  # type: ignore[return-value]

    def sign(self, name: str) -> int:
        return -1 if self.is_conjugated(name) else +1

    def flipped(self) -> "ChannelFrame":
        """Globally flipped assignment (the other valid 2-coloring)."""
        return ChannelFrame(self.names, tuple(not c for c in self.conjugated), self.carrier_freqs)


class PhaseConvention(enum.Enum):
    CIRCULATOR = "circulator"
    DIRECTIONAL_AMP = "directional_amp"


@dataclass(frozen=True)
class TotalPumpPhase:
    """Signed sum of the three pump phases around the mode loop.

    Acts as an artificial gauge flux: it is the only phase combination the
    scattering magnitudes depend on.  The value is stored wrapped to (-pi, pi].
    """

    value: float
    convention: PhaseConvention

    def __post_init__(self):
        object.__setattr__(self, "value", wrap_signed(self.value))


@dataclass(frozen=True)
class ValidatedDevice:
    """A device whose couplings satisfy every structural invariant.

    Modes are sorted by name; couplings are sorted by pair.  Immutable; safe
    to share across parallel workers.
    """

    modes: tuple[ModeSpec, ModeSpec, ModeSpec]
    couplings: tuple[PumpedCoupling, ...]
    frame: ChannelFrame
    pump_detuning_tolerance: float = 10e6

    @property
    def mode_names(self) -> tuple[str, str, str]:
        return tuple(m.name for m in self.modes)  # type: ignore[return-value]

    @property
    def kappas(self) -> tuple[float, float, float]:
        return tuple(m.kappa for m in self.modes)  # type: ignore[return-value]

    def index(self, name: str) -> int:
        return self.mode_names.index(name)

    def mode(self, name: str) -> ModeSpec:
        return self.modes[self.index(name)]

    def coupling_for(self, pair: Iterable[str]) -> Optional[PumpedCoupling]:
        key = tuple(sorted(pair))
        for c in self.couplings:
            if c.pair == key:
                return c
        return None

    @property
    def config(self) -> DeviceConfig:
        return DeviceConfig(self.modes, self.couplings, self.pump_detuning_tolerance)

    @property
    def is_circulator(self) -> bool:
        return len(self.couplings) == 3 and all(
            c.kind is ProcessKind.CONVERSION for c in self.couplings
        )

    @property
    def is_directional_amp(self) -> bool:
        kinds = sorted(c.kind.value for c in self.couplings)
        return len(self.couplings) == 3 and kinds == ["conversion", "gain", "gain"]


def conversion_head(device: ValidatedDevice, pair: Iterable[str]) -> str:
    """Reference mode of a conversion pair for the phase-orientation convention.

    In the name-sorted triple (m1, m2, m3) the head is m1 for pairs {m1,m2}
    and {m1,m3}, and m3 for {m2,m3}.  This choice makes the documented signed
    phase sums exact gauge invariants of the dynamics matrix.
    """
    names = device.mode_names
    key = tuple(sorted(pair))
    if key == (names[0], names[1]) or key == (names[0], names[2]):
        return names[0]
    if key == (names[1], names[2]):
        return names[2]
    raise DeviceValidationError(f"pair {key!r} does not belong to device modes {names!r}")


def directional_amp_parts(device: ValidatedDevice) -> tuple[tuple[str, str], str, str, str]:
    """Decompose a directional-amplifier device.

    Returns (conversion_pair, head, other, idler) where idler is the
    doubly-gain-coupled mode and head/other split the conversion pair per
    the phase-orientation convention.
    """
    if not device.is_directional_amp:
        raise TopologyError(
            "device is not a directional amplifier (needs one conversion and two gains)"
        )
    conv = next(c for c in device.couplings if c.kind is ProcessKind.CONVERSION)
    idler = next(n for n in device.mode_names if n not in conv.pair)
    head = conversion_head(device, conv.pair)
    other = conv.pair[0] if conv.pair[1] == head else conv.pair[1]
    return conv.pair, head, other, idler


def phase_signs(device: ValidatedDevice) -> dict[tuple[str, str], int]:
    """Sign with which each coupling's phase enters the total pump phase."""
    names = device.mode_names
    pairs = {c.pair for c in device.couplings}
    all_pairs = {
        (names[0], names[1]),
        (names[0], names[2]),
        (names[1], names[2]),
    }
    if pairs != all_pairs:
        raise TopologyError("total pump phase requires one process on every mode pair")
    if device.is_circulator:
        return {
            (names[0], names[1]): -1,
            (names[0], names[2]): +1,
            (names[1], names[2]): +1,
        }
    if device.is_directional_amp:
        conv_pair, head, _other, idler = directional_amp_parts(device)
        signs = {conv_pair: +1}
        for c in device.couplings:
            if c.kind is ProcessKind.GAIN:
                signs[c.pair] = -1 if head in c.pair else +1
        return signs
    raise TopologyError("total pump phase defined only for circulator or directional-amp devices")


def total_pump_phase(device: ValidatedDevice) -> TotalPumpPhase:
    """Signed sum of the stored coupling phases for the device's topology."""
    signs = phase_signs(device)
    value = sum(signs[c.pair] * c.phase for c in device.couplings)
    convention = (
        PhaseConvention.CIRCULATOR if device.is_circulator else PhaseConvention.DIRECTIONAL_AMP
    )
    return TotalPumpPhase(value, convention)


def with_total_phase(device: ValidatedDevice, value: float) -> ValidatedDevice:
    """Device with all coupling phases zeroed except the first pair, set so the
    total pump phase equals ``value``.  Gauge freedom makes this representative
    of every phase split with the same signed sum."""
    signs = phase_signs(device)
    control = device.couplings[0].pair
    new = []
    for c in device.couplings:
        phi = signs[control] * value if c.pair == control else 0.0
        new.append(replace(c, phase=wrap_phase(phi)))
    return validate_device(DeviceConfig(device.modes, tuple(new), device.pump_detuning_tolerance))


def with_coupling(
    device: ValidatedDevice,
    pair: Iterable[str],
    rho: Optional[float] = None,
    phase: Optional[float] = None,
) -> ValidatedDevice:
    """Copy of the device with one coupling's rho and/or phase replaced."""
    key = tuple(sorted(pair))
    new = []
    found = False
    for c in device.couplings:
        if c.pair == key:
            found = True
            c = replace(
                c,
                rho=c.rho if rho is None else rho,
                phase=c.phase if phase is None else wrap_phase(phase),
            )
        new.append(c)
    if not found:
        raise DeviceValidationError(f"device has no coupling on pair {key!r}")
    return validate_device(DeviceConfig(device.modes, tuple(new), device.pump_detuning_tolerance))


def _assign_conjugation(
    names: tuple[str, str, str], couplings: tuple[PumpedCoupling, ...]
) -> tuple[bool, bool, bool]:
    # 2-coloring: conversion edges keep the class, gain edges flip it.  Each
    # component is anchored on its alphabetically first mode, which also pins
    # the global flip (first device mode ends up un-conjugated).
    color: dict[str, bool] = {}
    adj: dict[str, list[tuple[str, bool]]] = {n: [] for n in names}
    for c in couplings:
        flip = c.kind is ProcessKind.GAIN
        a, b = c.pair
        adj[a].append((b, flip))
        adj[b].append((a, flip))
    for start in names:  # sorted order: component anchors are alphabetical minima
        if start in color:
            continue
        color[start] = False
        stack = [start]
        while stack:
            u = stack.pop()
            for v, flip in adj[u]:
                want = color[u] ^ flip
                if v not in color:
                    color[v] = want
                    stack.append(v)
                elif color[v] != want:
                    raise FrustratedConjugationError(
                        "FrustratedConjugation: no consistent conjugation assignment exists "
                        f"for couplings {[f'{c.kind.value}{c.pair}' for c in couplings]}"
                    )
    return tuple(color[n] for n in names)  # type: ignore[return-value]


def validate_device(config: DeviceConfig) -> ValidatedDevice:
    """Check every structural invariant and return an immutable device.

    Rejects duplicate pairs, non-member pairs, gain couplings at rho >= 1
    (enforced by PumpedCoupling itself) and coupling graphs with no
    consistent conjugation 2-coloring.  Idempotent: re-validating a
    ValidatedDevice's config yields an equivalent device.
    """
    if len(config.modes) != 3:
        raise DeviceValidationError(f"device needs exactly 3 modes, got {len(config.modes)}")
    modes = tuple(sorted(config.modes, key=lambda m: m.name))
    names = tuple(m.name for m in modes)
    if len(set(names)) != 3:
        raise DeviceValidationError(f"mode names must be pairwise distinct, got {names!r}")
    freqs = [m.resonance_freq for m in modes]
    if len({f for f in freqs}) != 3:
        raise DeviceValidationError("mode resonance frequencies must be pairwise distinct")

    if len(config.couplings) > 3:
        raise DeviceValidationError("at most three pairwise couplings are possible")
    seen: set[tuple[str, str]] = set()
    for c in config.couplings:
        if not set(c.pair) <= set(names):
            raise DeviceValidationError(
                f"coupling pair {c.pair!r} references modes outside {names!r}"
            )
        if c.pair in seen:
            raise DuplicatePairError(
                f"DuplicatePair: more than one process declared on pair {c.pair!r}"
            )
        seen.add(c.pair)
    couplings = tuple(sorted(config.couplings, key=lambda c: c.pair))

    conjugated = _assign_conjugation(names, couplings)  # type: ignore[arg-type]
    frame = ChannelFrame(
        names=names,  # type: ignore[arg-type]
        conjugated=conjugated,
        carrier_freqs=tuple(m.resonance_freq for m in modes),  # type: ignore[arg-type]
    )
    tol = float(config.pump_detuning_tolerance)
    if not (tol >= 0):
        raise DeviceValidationError("pump_detuning_tolerance must be >= 0")
    return ValidatedDevice(modes, couplings, frame, tol)  # type: ignore[arg-type]


def pump_frequency_for(coupling: PumpedCoupling, modes: Iterable[ModeSpec]) -> float:
    """Pump frequency that drives a coupling: sum of the two mode frequencies
    for gain, absolute difference for conversion (all ordinary Hz)."""
    by_name = {m.name: m for m in modes}
    try:
        fi = by_name[coupling.pair[0]].resonance_freq
        fj = by_name[coupling.pair[1]].resonance_freq
    except KeyError as exc:
        raise DeviceValidationError(f"coupling pair {coupling.pair!r} not among modes") from exc
    if coupling.kind is ProcessKind.GAIN:
        return fi + fj
    return abs(fi - fj)


def _pump_vector(coupling: PumpedCoupling, device: ValidatedDevice) -> tuple[int, int, int]:
    # Integer combination of mode frequencies making up the pump frequency.
    i, j = (device.index(n) for n in coupling.pair)
    v = [0, 0, 0]
    if coupling.kind is ProcessKind.GAIN:
        v[i] = v[j] = 1
    else:
        fi = device.modes[i].resonance_freq
        fj = device.modes[j].resonance_freq
        hi, lo = (i, j) if fi >= fj else (j, i)
        v[hi], v[lo] = 1, -1
    return tuple(v)  # type: ignore[return-value]


def check_pump_closure(
    device: ValidatedDevice, declared_pumps: Mapping[str, float]
) -> list[str]:
    """Warnings for declared pump frequencies.

    A pump declared for mode m drives the coupling of the other two modes.
    Warns when a declared pump deviates from the matched frequency by more
    than the device tolerance, and when the triple closure relation among the
    three declared pumps fails.  Deliberate small offsets are legitimate, so
    these are warnings, never errors.
    """
    warnings: list[str] = []
    tol = device.pump_detuning_tolerance
    names = set(device.mode_names)
    declared: dict[tuple[str, str], float] = {}
    for c in device.couplings:
        spectator = next(iter(names - set(c.pair)))
        if spectator not in declared_pumps:
            continue
        f_declared = float(declared_pumps[spectator])
        declared[c.pair] = f_declared
        f_matched = pump_frequency_for(c, device.modes)
        off = abs(f_declared - f_matched)
        if off > tol:
            warnings.append(
                f"pump on {spectator} ({c.kind.value} {c.pair}): declared {f_declared:g} Hz "
                f"is {off:g} Hz from the matched frequency {f_matched:g} Hz "
                f"(tolerance {tol:g} Hz)"
            )
    if len(declared) == 3:
        coups = list(device.couplings)
        vectors = [_pump_vector(c, device) for c in coups]
        for t2 in (+1, -1):
            for t3 in (+1, -1):
                ts = (1, t2, t3)
                if all(
                    sum(t * v[k] for t, v in zip(ts, vectors)) == 0 for k in range(3)
                ):
                    resid = abs(sum(t * declared[c.pair] for t, c in zip(ts, coups)))
                    if resid > tol:
                        terms = " ".join(
                            f"{'+' if t > 0 else '-'}p{c.pair}" for t, c in zip(ts, coups)
                        )
                        warnings.append(
                            f"pump closure {terms} = {resid:g} Hz exceeds tolerance {tol:g} Hz"
                        )
                    return warnings
    return warnings
