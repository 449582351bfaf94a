"""Open-boundary matrix product state with a tracked orthogonality center.

Site tensors have shape (left bond, physical, right bond). Sites carry labels
so that callers can find a site after it has been swapped around the chain.
Every two-site split is an SVD whose singular values below an absolute
threshold are discarded; the discarded weight is accumulated.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Hashable, Sequence

import numpy as np
import scipy.linalg

from .errors import BondExplosion

DEFAULT_BOND_CAP = 256


def truncated_svd(mat: np.ndarray, tol: float, cap: int):
    """SVD keeping singular values >= tol (at least one).

    Returns:
        (u, s, vh, discarded) where discarded is the sum of squared dropped
        singular values.

    Raises:
        BondExplosion: if more than `cap` singular values survive.
    """
    try:
        u, s, vh = scipy.linalg.svd(mat, full_matrices=False, lapack_driver="gesdd")
    except np.linalg.LinAlgError:
        u, s, vh = scipy.linalg.svd(mat, full_matrices=False, lapack_driver="gesvd")
    keep = max(1, int(np.count_nonzero(s >= tol)))
    if keep > cap:
        raise BondExplosion(f"bond dimension {keep} exceeds cap {cap}")
    discarded = float(np.sum(s[keep:] ** 2))
    return u[:, :keep], s[:keep], vh[:keep], discarded


@dataclass(eq=False)
class MatrixProductState:
    tensors: list[np.ndarray]
    labels: list[Hashable]
    center: int = 0
    tol: float = 0.0
    bond_cap: int = DEFAULT_BOND_CAP
    discarded_weight: float = 0.0
    max_bond_seen: int = field(default=1)
    last_norm: float = 1.0

    def __post_init__(self):
        if len(self.tensors) != len(self.labels):
            raise ValueError("one label per site required")
        if len(set(self.labels)) != len(self.labels):
            raise ValueError("site labels must be unique")
        self.max_bond_seen = max(self.max_bond_seen, self.max_bond())

    @classmethod
    def product(
        cls, local_states: Sequence[np.ndarray], labels: Sequence[Hashable], **kwargs
    ) -> "MatrixProductState":
        tensors = []
        for v in local_states:
            v = np.asarray(v, dtype=complex)
            tensors.append((v / np.linalg.norm(v)).reshape(1, -1, 1))
        return cls(tensors, list(labels), center=0, **kwargs)

    def __len__(self) -> int:
        return len(self.tensors)

    def position(self, label: Hashable) -> int:
        return self.labels.index(label)

    def local_dims(self) -> list[int]:
        return [t.shape[1] for t in self.tensors]

    def bond_dims(self) -> list[int]:
        return [t.shape[2] for t in self.tensors[:-1]]

    def max_bond(self) -> int:
        return max(self.bond_dims(), default=1)

    # canonical form --------------------------------------------------------

    def move_center(self, target: int) -> None:
        """Shift the orthogonality center with exact QR steps."""
        while self.center < target:
            i = self.center
            a = self.tensors[i]
            chi_l, d, chi_r = a.shape
            q, r = np.linalg.qr(a.reshape(chi_l * d, chi_r))
            self.tensors[i] = q.reshape(chi_l, d, -1)
            self.tensors[i + 1] = np.tensordot(r, self.tensors[i + 1], axes=(1, 0))
            self.center += 1
        while self.center > target:
            i = self.center
            a = self.tensors[i]
            chi_l, d, chi_r = a.shape
            q, r = np.linalg.qr(a.reshape(chi_l, d * chi_r).T)
            self.tensors[i] = q.T.reshape(-1, d, chi_r)
            self.tensors[i - 1] = np.tensordot(self.tensors[i - 1], r.T, axes=(2, 0))
            self.center -= 1

    def norm(self) -> float:
        return float(np.linalg.norm(self.tensors[self.center]))

    def normalize(self) -> float:
        """Rescale to unit norm; returns the norm before rescaling."""
        n = self.norm()
        self.tensors[self.center] = self.tensors[self.center] / n
        self.last_norm = n
        return n

    # local updates ---------------------------------------------------------

    def _split(self, theta: np.ndarray, start: int, center_at: int) -> None:
        """Write an n-site block back as n site tensors via successive SVDs.

        `center_at` is the absolute site index that ends up holding the
        singular values.
        """
        n_sites = theta.ndim - 2
        chi_l = theta.shape[0]
        dims = theta.shape[1:-1]
        chi_r = theta.shape[-1]
        # Sweep left-to-right up to the center, then right-to-left down to it.
        rest = theta.reshape(chi_l, -1)
        left_sites = []
        for j in range(center_at - start):
            d = dims[j]
            rest = rest.reshape(rest.shape[0] * d, -1)
            u, s, vh, w = truncated_svd(rest, self.tol, self.bond_cap)
            self.discarded_weight += w
            left_sites.append(u.reshape(-1, d, u.shape[1]))
            rest = s[:, None] * vh
        # rest now spans sites center_at..start+n_sites-1 with the right bond.
        remaining = dims[center_at - start:]
        rest = rest.reshape((rest.shape[0],) + tuple(remaining) + (chi_r,))
        right_sites = []
        for j in range(len(remaining) - 1, 0, -1):
            d = remaining[j]
            mat = rest.reshape(-1, d * rest.shape[-1])
            u, s, vh, w = truncated_svd(mat, self.tol, self.bond_cap)
            self.discarded_weight += w
            right_sites.append(vh.reshape(vh.shape[0], d, -1))
            rest = (u * s).reshape(rest.shape[:-2] + (-1,))
        center_tensor = rest.reshape(rest.shape[0], remaining[0], -1)
        new = left_sites + [center_tensor] + right_sites[::-1]
        assert len(new) == n_sites
        self.tensors[start:start + n_sites] = new
        self.center = center_at
        self.max_bond_seen = max(self.max_bond_seen, self.max_bond())

    def _block(self, start: int, n_sites: int) -> np.ndarray:
        if not start <= self.center < start + n_sites:
            self.move_center(min(max(self.center, start), start + n_sites - 1))
        theta = self.tensors[start]
        for j in range(1, n_sites):
            theta = np.tensordot(theta, self.tensors[start + j], axes=(-1, 0))
        return theta

    def apply_gate(
        self, start: int, gate: np.ndarray, n_sites: int, center_at: int | None = None
    ) -> None:
        """Apply a dense unitary on sites start..start+n_sites-1 (row-major leg order)."""
        theta = self._block(start, n_sites)
        shape = theta.shape
        dims = shape[1:-1]
        mat = theta.reshape(shape[0], int(np.prod(dims)), shape[-1])
        mat = np.einsum("ij,ajb->aib", gate, mat)
        if center_at is None:
            center_at = start + n_sites - 1
        self._split(mat.reshape(shape), start, center_at)

    def swap(self, i: int, center_right: bool = True) -> None:
        """Exchange sites i and i+1 (tensors and labels)."""
        theta = self._block(i, 2).transpose(0, 2, 1, 3)
        self._split(theta, i, i + 1 if center_right else i)
        self.labels[i], self.labels[i + 1] = self.labels[i + 1], self.labels[i]

    def move_site(self, src: int, dst: int) -> None:
        """Carry the site at `src` to `dst` through adjacent swaps."""
        while src < dst:
            self.swap(src, center_right=True)
            src += 1
        while src > dst:
            self.swap(src - 1, center_right=False)
            src -= 1

    def insert_site(self, i: int, local_state: np.ndarray, label: Hashable) -> None:
        """Insert a product-state site before position i.

        The new tensor is the identity on the bond it splits, so it is both a
        left and a right isometry and the canonical form is preserved.
        """
        if label in self.labels:
            raise ValueError(f"label {label!r} already present")
        v = np.asarray(local_state, dtype=complex)
        v = v / np.linalg.norm(v)
        chi = self.tensors[i].shape[0] if i < len(self.tensors) else self.tensors[-1].shape[2]
        tensor = np.einsum("ab,s->asb", np.eye(chi), v)
        self.tensors.insert(i, tensor)
        self.labels.insert(i, label)
        if self.center >= i:
            self.center += 1

    # measurements ----------------------------------------------------------

    def expect_local(self, i: int, op: np.ndarray) -> complex:
        """<op> on site i for a normalized state."""
        self.move_center(i)
        a = self.tensors[i]
        return complex(np.einsum("asb,st,atb->", a.conj(), op, a))

    def expect_sum(self, ops: dict[int, np.ndarray]) -> complex:
        """<sum_i op_i> over the given sites by a single transfer-matrix sweep."""
        env0 = np.ones((1, 1), dtype=complex)
        env1 = np.zeros((1, 1), dtype=complex)
        for i, a in enumerate(self.tensors):
            new0 = np.einsum("xy,xsa,ysb->ab", env0, a.conj(), a)
            new1 = np.einsum("xy,xsa,ysb->ab", env1, a.conj(), a)
            if i in ops:
                new1 = new1 + np.einsum("xy,xsa,st,ytb->ab", env0, a.conj(), ops[i], a)
            env0, env1 = new0, new1
        return complex(env1[0, 0] / env0[0, 0])

    def to_dense(self) -> np.ndarray:
        """Full state vector in site order (small chains only)."""
        psi = self.tensors[0]
        for a in self.tensors[1:]:
            psi = np.tensordot(psi, a, axes=(-1, 0))
        return psi.reshape(-1)
