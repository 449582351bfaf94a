"""Normal modes of a point-coupled device and their field profiles.

The n-th normal mode at frequency w is the classical solution obtained by
driving input port n: a plane wave on mode n before the device and the
S-weighted plane waves on every mode after it,

    <a_m(x) b_n^dag(w)> = exp(i w (x - x0_m)) * (delta_mn  if x < x0_m,  S_mn  if x > x0_m).

`decompose_wavepacket` evaluates the normal-mode spectra of a single-photon
envelope and `reconstruct_wavepacket` inverts them.
"""
from __future__ import annotations

import warnings
from dataclasses import dataclass

import numpy as np

from .device_algebra import UnitaryScatteringMatrix
from .errors import DimensionMismatch, GridOverflow, IndexOutOfRange
from .wave_propagation import Wavepacket

# Relative envelope amplitude tolerated at the grid edges before the grid
# counts as truncating the support.
EDGE_TOL = 1e-8
# Limits the (n_points x n_omega) phase matrix held in memory at once.
_CHUNK = 512


@dataclass(frozen=True, eq=False)
class NormalModeBasis:
    scattering: UnitaryScatteringMatrix
    offsets: np.ndarray = None

    def __post_init__(self):
        n = self.scattering.n_modes
        off = np.zeros(n) if self.offsets is None else np.asarray(self.offsets, dtype=float)
        if off.shape != (n,):
            raise DimensionMismatch(f"offsets must have length {n}")
        object.__setattr__(self, "offsets", off)

    @property
    def n_modes(self) -> int:
        return self.scattering.n_modes


@dataclass(frozen=True)
class FieldProfileSample:
    normal_index: int
    mode: int
    x: float
    omega: float
    amplitude: complex


def profile(basis: NormalModeBasis, normal_index: int, mode: int, x: float, omega: float) -> complex:
    """Field of normal mode `normal_index` on physical mode `mode` at position x.

    Indices are 0-based. Exactly at the device the two one-sided values are
    averaged.
    """
    n = basis.n_modes
    if not (0 <= normal_index < n and 0 <= mode < n):
        raise IndexOutOfRange(f"indices ({normal_index}, {mode}) outside 0..{n - 1}")
    rel = x - basis.offsets[mode]
    phase = np.exp(1j * omega * rel)
    before = 1.0 if mode == normal_index else 0.0
    after = basis.scattering.entries[mode, normal_index]
    if rel < 0:
        return complex(phase * before)
    if rel > 0:
        return complex(phase * after)
    return complex(phase * 0.5 * (before + after))


def profile_samples(
    basis: NormalModeBasis, positions, omegas
) -> list[FieldProfileSample]:
    out = []
    for omega in omegas:
        for n in range(basis.n_modes):
            for m in range(basis.n_modes):
                for x in positions:
                    out.append(FieldProfileSample(n, m, float(x), float(omega), profile(basis, n, m, x, omega)))
    return out


def dft_omega_grid(w: Wavepacket) -> np.ndarray:
    """Frequency grid dual to the wavepacket's position grid."""
    return 2 * np.pi * np.fft.fftfreq(w.n_points, d=w.dx)


def _check_omega_grid(omega: np.ndarray) -> float:
    if omega.ndim != 1 or omega.size < 2:
        raise ValueError("omega_grid must be a 1-D array with at least two points")
    steps = np.diff(np.sort(omega))
    d_omega = steps.min()
    if not np.allclose(steps, d_omega, rtol=1e-8, atol=0):
        raise ValueError("omega_grid must be uniform")
    return float(d_omega)


def _is_dft_grid(omega: np.ndarray, w: Wavepacket) -> bool:
    return omega.shape == (w.n_points,) and np.allclose(omega, dft_omega_grid(w), rtol=0, atol=1e-12)


def _half_line_transform(
    env: np.ndarray, rel: np.ndarray, mask: np.ndarray, omega: np.ndarray, dx: float,
    fft: bool = False,
) -> np.ndarray:
    """sum_x exp(-i w rel) env(x) dx / sqrt(2 pi) over the masked samples."""
    if fft:
        # rel = rel[0] + j dx and omega is the DFT-dual grid, so the sum is an FFT
        masked = np.where(mask, env, 0)
        return np.exp(-1j * omega * rel[0]) * np.fft.fft(masked) * (dx / np.sqrt(2 * np.pi))
    r = rel[mask]
    f = env[mask] * (dx / np.sqrt(2 * np.pi))
    out = np.empty(omega.size, dtype=complex)
    for start in range(0, omega.size, _CHUNK):
        w = omega[start:start + _CHUNK]
        out[start:start + _CHUNK] = np.exp(-1j * np.outer(w, r)) @ f
    return out


@dataclass(frozen=True, eq=False)
class NormalModeSpectra:
    """Normal-mode amplitudes b_n(omega), shape (n_modes, n_omega)."""

    omega: np.ndarray
    spectra: np.ndarray
    reconstruction_error: float = float("nan")


def decompose_wavepacket(
    basis: NormalModeBasis, w: Wavepacket, omega_grid=None
) -> NormalModeSpectra:
    """Project mode envelopes onto the device's normal modes.

    b_n(w) = int_{x < x0_n} e^{-iw(x - x0_n)} a_n(x) dx/sqrt(2pi)
             + sum_m conj(S_mn) int_{x >= x0_m} e^{-iw(x - x0_m)} a_m(x) dx/sqrt(2pi)

    The integrals are uniform-grid sums with the sample at x0 counted on the
    downstream side; with the dual DFT frequency grid (the default) and device
    offsets on the position grid the transform pair is exact. The returned `reconstruction_error` is the max
    absolute roundtrip error on the input grid.

    Raises:
        GridOverflow: if an envelope does not decay before the grid edges.
    """
    if basis.n_modes != w.mode_count:
        raise DimensionMismatch(f"basis has {basis.n_modes} modes, wavepacket has {w.mode_count}")
    omega = dft_omega_grid(w) if omega_grid is None else np.asarray(omega_grid, dtype=float)
    _check_omega_grid(omega)
    env = w.envelopes
    scale = np.max(np.abs(env))
    if scale > 0 and np.max(np.abs(env[:, [0, -1]])) > EDGE_TOL * scale:
        raise GridOverflow("envelope is not negligible at the grid edges")

    x = w.grid
    steps = (basis.offsets - w.x_min) / w.dx
    if np.any(np.abs(steps - np.rint(steps)) > 1e-6):
        # The split point then falls between samples and modes no longer
        # transform on a common lattice; the roundtrip is only approximate.
        warnings.warn("device offsets are not on the wavepacket grid", stacklevel=2)
    s = basis.scattering.entries
    n = basis.n_modes
    fft = _is_dft_grid(omega, w)
    upstream = np.empty((n, omega.size), dtype=complex)
    downstream = np.empty((n, omega.size), dtype=complex)
    for m in range(n):
        rel = x - basis.offsets[m]
        before = rel < -0.5 * w.dx
        upstream[m] = _half_line_transform(env[m], rel, before, omega, w.dx, fft)
        downstream[m] = _half_line_transform(env[m], rel, ~before, omega, w.dx, fft)
    spectra = upstream + s.conj().T @ downstream
    result = NormalModeSpectra(omega, spectra)
    err = float(np.max(np.abs(reconstruct_wavepacket(basis, result, w).envelopes - env)))
    return NormalModeSpectra(omega, spectra, err)


def reconstruct_wavepacket(
    basis: NormalModeBasis, spectra: NormalModeSpectra, like: Wavepacket
) -> Wavepacket:
    """Rebuild position envelopes on `like`'s grid from normal-mode spectra.

    a_n(x) = int dw/sqrt(2pi) e^{iw(x - x0_n)} * (b_n(w) upstream, sum_m S_nm b_m(w) downstream)
    """
    omega = spectra.omega
    d_omega = _check_omega_grid(omega)
    s = basis.scattering.entries
    mixed = s @ spectra.spectra
    x = like.grid
    out = np.zeros((basis.n_modes, x.size), dtype=complex)
    weight = d_omega / np.sqrt(2 * np.pi)
    fft = _is_dft_grid(omega, like)
    for m in range(basis.n_modes):
        rel = x - basis.offsets[m]
        before = rel < -0.5 * like.dx
        if fft:
            phase = np.exp(1j * omega * rel[0]) * (x.size * weight)
            up = np.fft.ifft(phase * spectra.spectra[m])
            down = np.fft.ifft(phase * mixed[m])
            out[m] = np.where(before, up, down)
            continue
        for start in range(0, x.size, _CHUNK):
            sl = slice(start, start + _CHUNK)
            phases = np.exp(1j * np.outer(rel[sl], omega)) * weight
            out[m, sl] = np.where(before[sl], phases @ spectra.spectra[m], phases @ mixed[m])
    return like.with_envelopes(out)


def emitter_coupling_coefficient(
    basis: NormalModeBasis,
    normal_index: int,
    omega: float,
    emitter_positions,
    rates,
) -> complex:
    """Coefficient of a point emitter's coupling to one normal mode.

    An emitter coupling with sqrt(rate_m) to physical mode m at position x_m
    couples to normal mode n with sum_m sqrt(rate_m) * profile(n, m, x_m, omega).
    """
    return complex(
        sum(
            np.sqrt(rate) * profile(basis, normal_index, m, x, omega)
            for m, (x, rate) in enumerate(zip(emitter_positions, rates))
        )
    )
