"""Figures of merit derived from scattering matrices.

Match, isolation and insertion loss are amplitude ratios (20 log10); gains
and noise ratios are power ratios (10 log10).  Noise quantities assume
vacuum (half a photon) incident on every channel and a perfectly stiff pump,
so the scattering is lossless and S Sigma S^dag = Sigma is the conservation
law being monitored.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass
from typing import Mapping

import numpy as np

from .cmt import ScatteringMatrix, SweepResult
from .errors import DomainError, EmptyBandError, TopologyError
from .model import TotalPumpPhase, ValidatedDevice, directional_amp_parts

DB_FLOOR = -320.0  # amplitude dB assigned to an exact zero


def to_db(x: float) -> float:
    """Power ratio to dB."""
    if not (x > 0):
        raise DomainError(f"to_db requires a positive power ratio, got {x:g}")
    return 10.0 * math.log10(x)


def amp_db(x: float) -> float:
    """Amplitude ratio to dB (20 log10)."""
    if not (x > 0):
        raise DomainError(f"amp_db requires a positive amplitude, got {x:g}")
    return 20.0 * math.log10(x)


def _amp_db_floored(x: float) -> float:
    return amp_db(x) if x > 10 ** (DB_FLOOR / 20.0) else DB_FLOOR


class Role(enum.Enum):
    SIGNAL = "signal"
    IDLER = "idler"
    VACUUM = "vacuum"


@dataclass(frozen=True)
class PortRole:
    """Bijective map from mode names to directional-amplifier port roles."""

    roles: Mapping[str, Role]

    def __post_init__(self):
        object.__setattr__(self, "roles", dict(self.roles))
        if sorted(r.value for r in self.roles.values()) != ["idler", "signal", "vacuum"]:
            raise DomainError("PortRole must assign signal, idler and vacuum exactly once")

    def __getitem__(self, mode: str) -> Role:
        return self.roles[mode]

    def mode_for(self, role: Role) -> str:
        return next(n for n, r in self.roles.items() if r is role)

    @property
    def signal(self) -> str:
        return self.mode_for(Role.SIGNAL)

    @property
    def idler(self) -> str:
        return self.mode_for(Role.IDLER)

    @property
    def vacuum(self) -> str:
        return self.mode_for(Role.VACUUM)


class CirculationSense(enum.Enum):
    CW = "cw"  # first -> second -> third mode in name order
    CCW = "ccw"
    NONE = "none"


def _cycle_pairs(names: tuple[str, str, str]):
    a, b, c = names
    forward = ((b, a), (c, b), (a, c))  # transmission out <- in along a->b->c->a
    reverse = ((a, b), (b, c), (c, a))
    return forward, reverse


def circulation_sense(
    s: ScatteringMatrix, isolation_margin_db: float = 10.0
) -> CirculationSense:
    """Sense of circulation of a conversion-coupled device.

    CW means the weakest forward transmission along the name cycle
    (a->b->c->a) still exceeds the strongest reverse one by at least the
    isolation margin (power dB); CCW is the transposed condition.
    """
    forward, reverse = _cycle_pairs(s.mode_names)
    margin = 10 ** (isolation_margin_db / 20.0)  # amplitude ratio for a power-dB margin
    fwd = [s.magnitude(o, i) for o, i in forward]
    rev = [s.magnitude(o, i) for o, i in reverse]
    if min(fwd) >= max(rev) * margin:
        return CirculationSense.CW
    if min(rev) >= max(fwd) * margin:
        return CirculationSense.CCW
    return CirculationSense.NONE


def circulation_order(s: ScatteringMatrix, isolation_margin_db: float = 10.0):
    """Mode names in propagation order, or None when there is no circulation."""
    sense = circulation_sense(s, isolation_margin_db)
    if sense is CirculationSense.NONE:
        return None
    names = s.mode_names
    return names if sense is CirculationSense.CW else names[::-1]


def _contiguous_band(deltas: np.ndarray, ok: np.ndarray, center: int) -> float:
    lo = center
    while lo > 0 and ok[lo - 1]:
        lo -= 1
    hi = center
    while hi < len(ok) - 1 and ok[hi + 1]:
        hi += 1
    return float(deltas[hi] - deltas[lo])


def circulator_bandwidth(
    sweep: SweepResult, match_db: float = -10.0, loss_db: float = 1.0
) -> float:
    """Width of the contiguous band around zero detuning where every input
    match is at or below ``match_db`` and every forward insertion loss is at
    or below ``loss_db``.

    Raises EmptyBandError when the center point already fails.
    """
    device = sweep.device
    if not device.is_circulator:
        raise TopologyError("circulator_bandwidth requires an all-conversion device")
    if len(sweep) == 0:
        raise EmptyBandError("empty sweep")
    center = sweep.center_index
    sense = circulation_sense(sweep.matrix_at(center))
    if sense is CirculationSense.NONE:
        raise EmptyBandError("no circulation at zero detuning")
    forward, reverse = _cycle_pairs(device.mode_names)
    fwd_pairs = forward if sense is CirculationSense.CW else reverse
    names = device.mode_names
    match_ok = np.ones(len(sweep), dtype=bool)
    loss_ok = np.ones(len(sweep), dtype=bool)
    match_lin = 10 ** (match_db / 20.0)
    loss_lin = 10 ** (-loss_db / 20.0)
    for n in names:
        match_ok &= sweep.magnitudes(n, n) <= match_lin
    for o, i in fwd_pairs:
        loss_ok &= sweep.magnitudes(o, i) >= loss_lin
    ok = match_ok & loss_ok
    if not ok[center]:
        raise EmptyBandError("criteria fail at zero detuning")
    return _contiguous_band(sweep.deltas, ok, center)


def gain_bandwidth_3db(sweep: SweepResult, from_mode: str, to_mode: str) -> float:
    """Width of the contiguous band around zero detuning where the power
    transmission |S_{to,from}|^2 stays within 3 dB of its center value."""
    if len(sweep) == 0:
        raise EmptyBandError("empty sweep")
    p = sweep.magnitudes(to_mode, from_mode) ** 2
    center = sweep.center_index
    if p[center] <= 0.0:
        raise EmptyBandError(f"no transmission {from_mode}->{to_mode} at zero detuning")
    ok = p >= p[center] / 2.0
    return _contiguous_band(sweep.deltas, ok, center)


def nvr(s: ScatteringMatrix) -> dict[str, float]:
    """Noise visibility ratio per output port, dB.

    Vacuum-driven output noise with pumps on, referenced to the pumps-off
    baseline: NVR_i = 10 log10(sum_j |S_ij|^2).
    """
    total = np.sum(np.abs(s.entries) ** 2, axis=1)
    return {n: 10.0 * math.log10(float(total[k])) for k, n in enumerate(s.mode_names)}


def added_noise(s: ScatteringMatrix, signal_port: str, output_port: str) -> float:
    """Input-referred added noise (photons) of the signal_port -> output_port path.

    Half a photon per non-signal channel feeding the output row, divided by
    the forward power gain.
    """
    out = s.index(output_port)
    sig = s.index(signal_port)
    row = np.abs(s.entries[out]) ** 2
    denom = float(row[sig])
    if denom <= 0.0:
        raise DomainError(f"no forward gain {signal_port}->{output_port}")
    return float(0.5 * (np.sum(row) - row[sig]) / denom)


def symplectic_defect(s: ScatteringMatrix) -> float:
    """Largest |element| of S Sigma S^dag - Sigma; zero for a lossless device."""
    sigma = np.diag(s.frame.detuning_signs).astype(complex)
    defect = s.entries @ sigma @ s.entries.conj().T - sigma
    return float(np.max(np.abs(defect)))


def role_map(device: ValidatedDevice, phi_tot) -> PortRole:
    """Port roles of a directional amplifier at a given total pump phase.

    The idler is the doubly-gain-coupled mode.  Among the conversion pair the
    signal port is the phase-reference (head) mode when sin(phi_tot) > 0 and
    the other mode when sin(phi_tot) < 0; changing phi_tot by pi therefore
    swaps signal and vacuum with the idler unchanged.  At sin(phi_tot) = 0
    the device is not directional and the head-mode assignment is returned
    by convention.
    """
    _pair, head, other, idler = directional_amp_parts(device)
    value = phi_tot.value if isinstance(phi_tot, TotalPumpPhase) else float(phi_tot)
    if math.sin(value) >= 0.0:
        signal, vac = head, other
    else:
        signal, vac = other, head
    return PortRole({signal: Role.SIGNAL, vac: Role.VACUUM, idler: Role.IDLER})
