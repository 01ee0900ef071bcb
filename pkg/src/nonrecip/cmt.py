"""Coupled-mode input-output scattering kernel and its closed-form oracles.

The frequency-domain dynamics matrix M(delta) acts on channel envelopes
(conjugate envelopes on conjugated channels); the scattering matrix follows
from input-output theory as S = K M^{-1} K - I with K = diag(sqrt(kappa)).
Everything is expressed in ordinary frequencies (Hz), so the mode
susceptibility is (kappa/2 - i*delta)^{-1}.

Closed forms provided as independent oracles:
  sqrt(G) = (1+rho)/(1-rho)          zero-detuning gain of one pumped pair
  C = 4*rho/(1+rho)^2                zero-detuning conversion coefficient
  S_bb = -1 + 2(rho_ac-1)/(rho_ac+rho_bc-rho_ab-1)
                                     on-resonance input match of the
                                     two-gain + one-conversion configuration
  C_min = 1 - 1/G                    directionality threshold
"""

from __future__ import annotations

import math
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from functools import cached_property

import numpy as np

from .errors import DomainError, SingularMatrixError
from .model import (
    ChannelFrame,
    ProcessKind,
    ValidatedDevice,
    conversion_head,
)

_DET_TOL = 1e-12  # on the dimensionless (normalized) dynamics matrix


def gain_coefficient(rho: float) -> float:
    """Zero-detuning photon-number gain G of a single gain process."""
    if not (0.0 <= rho < 1.0):
        raise DomainError(f"gain rho must satisfy 0 <= rho < 1, got {rho:g}")
    return ((1.0 + rho) / (1.0 - rho)) ** 2


def conversion_coefficient(rho: float) -> float:
    """Zero-detuning conversion coefficient C in [0, 1] of a single conversion."""
    if rho < 0:
        raise DomainError(f"conversion rho must be >= 0, got {rho:g}")
    return 4.0 * rho / (1.0 + rho) ** 2


def rho_for_gain(gain: float) -> float:
    """Inverse of gain_coefficient: rho = (sqrt(G)-1)/(sqrt(G)+1)."""
    if not (gain >= 1.0):
        raise DomainError(f"gain must be >= 1, got {gain:g}")
    s = math.sqrt(gain)
    return (s - 1.0) / (s + 1.0)


def rho_for_conversion(c: float) -> float:
    """Inverse of conversion_coefficient, under-coupled branch (rho <= 1).

    Algebraically (2 - C - 2*sqrt(1-C))/C, evaluated in the cancellation-free
    form C/(2 - C + 2*sqrt(1-C)).
    """
    if not (0.0 <= c <= 1.0):
        raise DomainError(f"conversion coefficient must be in [0, 1], got {c:g}")
    if c == 0.0:
        return 0.0
    return c / (2.0 - c + 2.0 * math.sqrt(1.0 - c))


def directionality_threshold(gain: float) -> float:
    """Minimum conversion coefficient for a directional amplifier: 1 - 1/G."""
    if not (gain >= 1.0):
        raise DomainError(f"gain must be >= 1, got {gain:g}")
    return 1.0 - 1.0 / gain


def sbb_closed_form(rho_ab: float, rho_bc: float, rho_ac: float) -> float:
    """On-resonance input match of the two-gain + one-conversion device.

    Conversion on (a, b) with strength rho_ab, gains on (a, c) and (b, c),
    total pump phase +-pi/2.  Real by construction.
    """
    den = rho_ac + rho_bc - rho_ab - 1.0
    if abs(den) < 1e-14:
        raise DomainError("sbb_closed_form pole: rho_ac + rho_bc - rho_ab = 1")
    return -1.0 + 2.0 * (rho_ac - 1.0) / den


@dataclass(frozen=True)
class ScatteringMatrix:
    """3x3 complex scattering matrix at one probe detuning.

    Rows/columns follow the device's name-sorted mode order; entry (i, j) is
    the transfer from an input on channel j to the output of channel i.
    Satisfies photon-flux conservation S Sigma S^dag = Sigma with
    Sigma = diag(+1 un-conjugated / -1 conjugated).
    """

    delta: float
    entries: np.ndarray
    frame: ChannelFrame

    @property
    def mode_names(self) -> tuple[str, str, str]:
        return self.frame.names

    def index(self, name: str) -> int:
        return self.frame.index(name)

    def element(self, out_mode: str, in_mode: str) -> complex:
        return complex(self.entries[self.index(out_mode), self.index(in_mode)])

    def magnitude(self, out_mode: str, in_mode: str) -> float:
        return abs(self.element(out_mode, in_mode))

    def db(self, out_mode: str, in_mode: str) -> float:
        """Magnitude in dB (20 log10); -inf for an exact zero."""
        m = self.magnitude(out_mode, in_mode)
        return 20.0 * math.log10(m) if m > 0 else -math.inf


@dataclass(frozen=True)
class SweepResult:
    """Scattering matrices over an ordered detuning grid."""

    deltas: np.ndarray
    entries: np.ndarray  # shape (n, 3, 3)
    device: ValidatedDevice

    def __len__(self) -> int:
        return len(self.deltas)

    def matrix_at(self, index: int) -> ScatteringMatrix:
        return ScatteringMatrix(float(self.deltas[index]), self.entries[index], self.device.frame)

    @cached_property
    def matrices(self) -> tuple[ScatteringMatrix, ...]:
        return tuple(self.matrix_at(i) for i in range(len(self)))

    @property
    def center_index(self) -> int:
        """Grid point closest to zero detuning."""
        if len(self.deltas) == 0:
            raise DomainError("empty sweep has no center point")
        return int(np.argmin(np.abs(self.deltas)))

    def magnitudes(self, out_mode: str, in_mode: str) -> np.ndarray:
        i = self.device.index(out_mode)
        j = self.device.index(in_mode)
        return np.abs(self.entries[:, i, j])


def _coupling_entries(device: ValidatedDevice) -> np.ndarray:
    """Off-diagonal (delta-independent) part of the dynamics matrix, in Hz."""
    kappas = device.kappas
    sig = device.frame.detuning_signs
    off = np.zeros((3, 3), dtype=complex)
    for c in device.couplings:
        i, j = (device.index(n) for n in c.pair)
        g = math.sqrt(c.rho * kappas[i] * kappas[j]) / 2.0
        phase = np.exp(1j * c.phase)
        if c.kind is ProcessKind.CONVERSION:
            p = device.index(conversion_head(device, c.pair))
            q = j if p == i else i
            if sig[i] == +1:  # both channels un-conjugated
                off[p, q] = 1j * g / phase
                off[q, p] = 1j * g * phase
            else:  # both channels conjugated: conjugate envelope equations
                off[p, q] = -1j * g * phase
                off[q, p] = -1j * g / phase
        else:
            u, v = (i, j) if sig[i] == +1 else (j, i)
            off[u, v] = 1j * g / phase
            off[v, u] = -1j * g * phase
    return off


def _dynamics_batch(device: ValidatedDevice, deltas: np.ndarray) -> np.ndarray:
    off = _coupling_entries(device)
    kappas = np.asarray(device.kappas)
    m = np.broadcast_to(off, (len(deltas), 3, 3)).copy()
    diag = kappas / 2.0 - 1j * deltas[:, None]
    m[:, np.arange(3), np.arange(3)] = diag
    return m


def build_dynamics_matrix(device: ValidatedDevice, delta: float) -> np.ndarray:
    """Frequency-domain dynamics matrix M(delta), ordinary-frequency units.

    Diagonal kappa_m/2 - i*delta (channel envelopes share the probe detuning;
    on a conjugated channel the envelope is the conjugate wave, physically at
    -delta from its carrier).  Off-diagonal entries carry sqrt(rho_ij kappa_i
    kappa_j)/2 with the pump phase, conjugated on conjugated-channel rows.
    """
    return _dynamics_batch(device, np.asarray([float(delta)]))[0]


def _solve_batch(device: ValidatedDevice, deltas: np.ndarray) -> np.ndarray:
    if len(deltas) == 0:
        return np.zeros((0, 3, 3), dtype=complex)
    m = _dynamics_batch(device, deltas)
    kappas = np.asarray(device.kappas)
    root_k = np.sqrt(kappas)
    # dimensionless determinant check: N = 2 K^-1 M K^-1 has O(1) entries
    scale = np.outer(root_k, root_k) / 2.0
    dets = np.linalg.det(m / scale)
    bad = np.abs(dets) < _DET_TOL
    if np.any(bad):
        raise SingularMatrixError(float(deltas[int(np.argmax(bad))]))
    s = root_k[None, :, None] * np.linalg.inv(m) * root_k[None, None, :]
    s[:, np.arange(3), np.arange(3)] -= 1.0
    return s


def scattering_at(device: ValidatedDevice, delta: float) -> ScatteringMatrix:
    """Scattering matrix S(delta) = K M(delta)^{-1} K - I, K = diag(sqrt(kappa)).

    Raises SingularMatrixError at a parametric oscillation point.
    """
    entries = _solve_batch(device, np.asarray([float(delta)]))[0]
    return ScatteringMatrix(float(delta), entries, device.frame)


def _thread_count() -> int:
    raw = os.environ.get("NONRECIP_THREADS", "")
    try:
        return max(0, int(raw))
    except ValueError:
        return 0


def sweep(device: ValidatedDevice, deltas) -> SweepResult:
    """One scattering matrix per grid point; pure function of its inputs.

    The grid must be strictly increasing.  Points are independent; when the
    NONRECIP_THREADS environment variable is a positive integer the batch is
    split across that many threads, with results bit-identical to the serial
    evaluation.
    """
    grid = np.asarray(deltas, dtype=float)
    if grid.ndim != 1:
        raise DomainError("detuning grid must be one-dimensional")
    if len(grid) > 1 and not np.all(np.diff(grid) > 0):
        raise DomainError("detuning grid must be strictly increasing")
    threads = _thread_count()
    if threads > 1 and len(grid) >= 2 * threads:
        chunks = np.array_split(np.arange(len(grid)), threads)
        out = np.empty((len(grid), 3, 3), dtype=complex)
        with ThreadPoolExecutor(max_workers=threads) as pool:
            futures = [(idx, pool.submit(_solve_batch, device, grid[idx])) for idx in chunks]
            for idx, fut in futures:
                out[idx] = fut.result()
    else:
        out = _solve_batch(device, grid)
    return SweepResult(grid, out, device)
