"""Shift-and-scatter propagation of classical mode envelopes through a device.

Positions are in units of time (unit group velocity). After a time tau every
envelope is translated by tau; the part of the translated envelope that
crossed the device during the window, i.e. displaced coordinate
0 < x - x0 < tau, is additionally mixed by the scattering matrix.
"""
from __future__ import annotations

import warnings
from dataclasses import dataclass, field

import numpy as np

from .device_algebra import UnitaryScatteringMatrix
from .errors import DimensionMismatch, GridOverflow

# Relative amplitude below which envelope samples count as outside the support.
SUPPORT_TOL = 1e-12


@dataclass(frozen=True, eq=False)
class Wavepacket:
    """Per-mode complex envelopes on a uniform grid shared by all modes.

    Attributes:
        x_min: position of the first grid sample.
        dx: grid spacing.
        envelopes: complex array of shape (mode_count, n_points).
        device_offsets: per-mode device coordinate x0, length mode_count.
    """

    x_min: float
    dx: float
    envelopes: np.ndarray
    device_offsets: np.ndarray = field(default=None)

    def __post_init__(self):
        env = np.atleast_2d(np.array(self.envelopes, dtype=complex))
        if env.ndim != 2 or env.shape[1] < 2:
            raise ValueError("envelopes must have shape (mode_count, n_points >= 2)")
        if not self.dx > 0:
            raise ValueError("dx must be positive")
        offsets = self.device_offsets
        offsets = np.zeros(env.shape[0]) if offsets is None else np.array(offsets, dtype=float)
        if offsets.shape != (env.shape[0],):
            raise DimensionMismatch(
                f"device_offsets has length {offsets.size}, expected {env.shape[0]}"
            )
        norm = self.norm_squared_of(env, self.dx)
        if not np.isfinite(norm):
            raise ValueError("envelope squared-norm is not finite")
        object.__setattr__(self, "envelopes", env)
        object.__setattr__(self, "device_offsets", offsets)

    @staticmethod
    def norm_squared_of(env: np.ndarray, dx: float) -> float:
        return float(np.sum(np.abs(env) ** 2) * dx)

    @property
    def mode_count(self) -> int:
        return self.envelopes.shape[0]

    @property
    def n_points(self) -> int:
        return self.envelopes.shape[1]

    @property
    def grid(self) -> np.ndarray:
        return self.x_min + self.dx * np.arange(self.n_points)

    @property
    def x_max(self) -> float:
        return self.x_min + self.dx * (self.n_points - 1)

    def norm_squared(self) -> float:
        return self.norm_squared_of(self.envelopes, self.dx)

    def offset_indices(self) -> np.ndarray:
        """Device offsets as grid-index displacements from x_min."""
        return np.rint((self.device_offsets - self.x_min) / self.dx).astype(int)

    def with_envelopes(self, envelopes: np.ndarray) -> "Wavepacket":
        return Wavepacket(self.x_min, self.dx, envelopes, self.device_offsets)


@dataclass(frozen=True)
class PropagationWindow:
    t0: float
    tau: float

    def __post_init__(self):
        if not self.tau >= 0:
            raise ValueError("tau must be nonnegative")


def _steps(length: float, dx: float, what: str) -> int:
    n = int(np.rint(length / dx))
    if abs(n * dx - length) > dx / 100:
        warnings.warn(
            f"{what} = {length} is not a multiple of dx = {dx}; rounded to {n * dx}",
            stacklevel=3,
        )
    return n


def _support_mask(env: np.ndarray) -> np.ndarray:
    scale = np.max(np.abs(env)) if env.size else 0.0
    if scale == 0:
        return np.zeros(env.shape, dtype=bool)
    return np.abs(env) > SUPPORT_TOL * scale


def propagate(w: Wavepacket, s: UnitaryScatteringMatrix, window: PropagationWindow) -> Wavepacket:
    """Evolve envelopes from t0 to t0 + tau through the device.

    At displaced coordinate x relative to each mode's x0 the output is the input
    taken at x - tau, multiplied by I outside [0, tau], by S strictly inside and
    by (I + S)/2 on the two edge samples.

    Raises:
        DimensionMismatch: if the device and wavepacket mode counts differ.
        GridOverflow: if the translated support would leave the grid.
    """
    if s.n_modes != w.mode_count:
        raise DimensionMismatch(f"device has {s.n_modes} modes, wavepacket has {w.mode_count}")
    shift = _steps(window.tau, w.dx, "tau")
    offsets = w.offset_indices()
    if np.any(np.abs(w.x_min + offsets * w.dx - w.device_offsets) > w.dx / 100):
        warnings.warn("device offsets rounded to the nearest grid sample", stacklevel=2)

    n_modes, n_pts = w.envelopes.shape
    if shift >= n_pts or np.any(_support_mask(w.envelopes)[:, n_pts - shift:]):
        raise GridOverflow(f"shifting by {shift} samples moves the envelope past x_max = {w.x_max}")
    if shift == 0:
        return w.with_envelopes(w.envelopes.copy())

    # rel[i] is the displaced coordinate (in samples) shared by all modes at
    # output index offsets[m] + rel; sources live at offsets[m] + rel - shift.
    smat = s.entries
    half = 0.5 * (np.eye(n_modes) + smat)
    out = np.zeros_like(w.envelopes)
    out[:, shift:] = w.envelopes[:, : n_pts - shift]

    rel = np.arange(shift + 1)
    src = offsets[:, None] + rel[None, :] - shift
    dst = offsets[:, None] + rel[None, :]
    src_ok = (src >= 0) & (src < n_pts)
    vec = np.where(src_ok, w.envelopes[np.arange(n_modes)[:, None], np.clip(src, 0, n_pts - 1)], 0)
    mixed = smat @ vec
    mixed[:, [0, shift]] = half @ vec[:, [0, shift]]
    inside = (dst >= 0) & (dst < n_pts)
    rows, cols = np.nonzero(inside)
    out[rows, dst[rows, cols]] = mixed[rows, cols]
    return w.with_envelopes(out)
