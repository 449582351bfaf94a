"""Classical scattering matrices and point-coupling matrices of linear-optical devices.

A device acting on N propagating modes is described either by a unitary
scattering matrix S or by a Hermitian coupling matrix V. The two are related
by the Cayley transform

    S = (I - iV/2) (I + iV/2)^{-1},      V = -U diag(2 tan(phi/2)) U^dagger,

where S = U diag(exp(i phi)) U^dagger.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import scipy.linalg

from .errors import NonRepresentableDevice, PointCoupleError

UNITARITY_TOL = 1e-10
HERMITICITY_TOL = 1e-10
EIGENPHASE_GUARD = 1e-6


def _as_square(entries, name: str) -> np.ndarray:
    m = np.array(entries, dtype=complex)
    if m.ndim == 0:
        m = m.reshape(1, 1)
    if m.ndim != 2 or m.shape[0] != m.shape[1] or m.shape[0] < 1:
        raise ValueError(f"{name} must be a non-empty square matrix, got shape {m.shape}")
    if not np.all(np.isfinite(m)):
        raise ValueError(f"{name} has non-finite entries")
    return m


@dataclass(frozen=True, eq=False)
class UnitaryScatteringMatrix:
    """Unitary N x N matrix mapping incoming to outgoing mode amplitudes."""

    entries: np.ndarray
    tol: float = UNITARITY_TOL

    def __post_init__(self):
        m = _as_square(self.entries, "scattering matrix")
        m.setflags(write=False)
        object.__setattr__(self, "entries", m)
        residual = np.linalg.norm(m.conj().T @ m - np.eye(m.shape[0]))
        if residual > self.tol:
            raise ValueError(f"scattering matrix is not unitary: ||S^dag S - I||_F = {residual:.3e}")

    @property
    def n_modes(self) -> int:
        return self.entries.shape[0]

    def __matmul__(self, other: "UnitaryScatteringMatrix") -> "UnitaryScatteringMatrix":
        return UnitaryScatteringMatrix(self.entries @ other.entries, tol=max(self.tol, other.tol))

    def __repr__(self) -> str:
        return f"UnitaryScatteringMatrix(n_modes={self.n_modes})"


@dataclass(frozen=True, eq=False)
class CouplingMatrix:
    """Hermitian matrix of point-coupling strengths V (rates, unit group velocity)."""

    entries: np.ndarray
    tol: float = HERMITICITY_TOL

    def __post_init__(self):
        m = _as_square(self.entries, "coupling matrix")
        m.setflags(write=False)
        object.__setattr__(self, "entries", m)
        residual = np.linalg.norm(m - m.conj().T)
        if residual > self.tol:
            raise ValueError(f"coupling matrix is not Hermitian: ||V - V^dag||_F = {residual:.3e}")

    @property
    def n_modes(self) -> int:
        return self.entries.shape[0]

    def __repr__(self) -> str:
        return f"CouplingMatrix(n_modes={self.n_modes})"


@dataclass(frozen=True, eq=False)
class EigenphaseDecomposition:
    """S = U diag(exp(i phases)) U^dagger with U unitary and phases in (-pi, pi]."""

    unitary_basis: np.ndarray
    phases: np.ndarray

    def reconstruct(self) -> np.ndarray:
        u = self.unitary_basis
        return (u * np.exp(1j * self.phases)) @ u.conj().T


def eigenphases(s: UnitaryScatteringMatrix) -> EigenphaseDecomposition:
    """Eigendecomposition of a unitary matrix with an orthonormal eigenbasis.

    The complex Schur form of a normal matrix is diagonal, so the Schur vectors
    are an orthonormal eigenbasis even inside degenerate eigenspaces, where a
    general eigensolver is free to return non-orthogonal vectors.
    """
    t, z = scipy.linalg.schur(s.entries, output="complex")
    lam = np.diag(t)
    phases = np.angle(lam)
    # np.angle maps the negative real axis to +pi or -pi depending on the sign of zero.
    phases = np.where(phases <= -np.pi, phases + 2 * np.pi, phases)
    u, r = np.linalg.qr(z)
    # Z is unitary up to rounding, so R is a diagonal of unit-modulus phases.
    d = np.diag(r)
    u = u * (d / np.abs(d))
    return EigenphaseDecomposition(unitary_basis=u, phases=phases)


def scattering_from_coupling(v: CouplingMatrix) -> UnitaryScatteringMatrix:
    """Cayley transform S = (I - iV/2)(I + iV/2)^{-1}."""
    n = v.n_modes
    eye = np.eye(n)
    plus = eye + 0.5j * v.entries
    minus = eye - 0.5j * v.entries
    # S A = B  <=>  A^T S^T = B^T
    s = np.linalg.solve(plus.T, minus.T).T
    residual = np.linalg.norm(s @ plus - minus)
    if residual > 1e-10 * max(1.0, np.linalg.norm(plus)):
        raise PointCoupleError(f"Cayley transform residual {residual:.3e} exceeds tolerance")
    return UnitaryScatteringMatrix(s, tol=max(UNITARITY_TOL, 1e-13 * np.linalg.cond(plus)))


def coupling_from_scattering(
    s: UnitaryScatteringMatrix, eigenphase_guard: float = EIGENPHASE_GUARD
) -> CouplingMatrix:
    """Inverse Cayley transform V = -U diag(2 tan(phi/2)) U^dagger.

    Raises:
        NonRepresentableDevice: if an eigenphase lies within `eigenphase_guard`
            of pi, where tan(phi/2) diverges.
    """
    dec = eigenphases(s)
    distance = np.pi - np.abs(dec.phases)
    if np.any(distance < eigenphase_guard):
        worst = dec.phases[np.argmin(distance)]
        raise NonRepresentableDevice(
            f"eigenphase {worst:.12g} is within {eigenphase_guard:g} rad of pi; "
            "no finite point coupling reproduces this device"
        )
    u = dec.unitary_basis
    v = -(u * (2 * np.tan(dec.phases / 2))) @ u.conj().T
    v = 0.5 * (v + v.conj().T)
    return CouplingMatrix(v)


def phase_shifter(phase: float) -> UnitaryScatteringMatrix:
    """Single-mode device imparting exp(i*phase)."""
    if not np.isfinite(phase):
        raise ValueError("phase must be finite")
    return UnitaryScatteringMatrix([[np.exp(1j * phase)]])


def beam_splitter(theta: float, phi: float) -> UnitaryScatteringMatrix:
    """Two-mode beam splitter [[cos t, sin t e^{i phi}], [-sin t e^{-i phi}, cos t]]."""
    if not (np.isfinite(theta) and np.isfinite(phi)):
        raise ValueError("theta and phi must be finite")
    c, s = np.cos(theta), np.sin(theta)
    return UnitaryScatteringMatrix(
        [[c, s * np.exp(1j * phi)], [-s * np.exp(-1j * phi), c]]
    )


def circulator() -> UnitaryScatteringMatrix:
    """Three-port circulator as a cyclic permutation matrix."""
    return UnitaryScatteringMatrix([[0, 1, 0], [0, 0, 1], [1, 0, 0]])
