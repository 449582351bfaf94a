"""Scattering of K-photon Fock wavepackets by a frequency-independent device.

States are stored as symmetric first-quantized amplitudes psi over ordered
tuples of (mode, frequency) slots, one value per multiset. A multiset M with
occupation numbers m_i stands for K!/prod(m_i!) ordered tuples, so

    norm^2 = sum_M |psi_M|^2 * K!/prod(m_i!)

and the amplitude of the normalized occupation-basis state |M> is
psi_M * sqrt(K!/prod(m_i!)).

Frequencies are discrete labels. The device conserves each photon's frequency,
and each creation operator transforms as a^dag_mu(w) -> sum_j S[j, mu] a^dag_j(w).
"""
from __future__ import annotations

import itertools
import math
from collections import Counter
from dataclasses import dataclass
from typing import Iterable, Mapping

import numpy as np

from .device_algebra import UnitaryScatteringMatrix
from .errors import DimensionMismatch, UnknownFrequencyLabel

Slot = tuple[int, float]
Multiset = tuple[Slot, ...]


def canonical(slots: Iterable[Slot]) -> Multiset:
    return tuple(sorted((int(m), float(w)) for m, w in slots))


def multiplicity(ms: Multiset) -> int:
    """Number of ordered tuples represented by the multiset."""
    count = math.factorial(len(ms))
    for occ in Counter(ms).values():
        count //= math.factorial(occ)
    return count


@dataclass(frozen=True, eq=False)
class FockWavepacketState:
    mode_count: int
    frequency_labels: tuple[float, ...]
    amplitudes: Mapping[Multiset, complex]

    def __post_init__(self):
        labels = tuple(sorted({float(w) for w in self.frequency_labels}))
        amps: dict[Multiset, complex] = {}
        k = None
        for key, value in self.amplitudes.items():
            ms = canonical(key)
            if k is None:
                k = len(ms)
            elif len(ms) != k:
                raise ValueError("all amplitude keys must have the same photon count")
            for mode, w in ms:
                if not 0 <= mode < self.mode_count:
                    raise DimensionMismatch(f"mode {mode} outside 0..{self.mode_count - 1}")
                if w not in labels:
                    raise UnknownFrequencyLabel(w)
            amps[ms] = amps.get(ms, 0) + complex(value)
        object.__setattr__(self, "frequency_labels", labels)
        object.__setattr__(self, "amplitudes", amps)

    @property
    def photon_count(self) -> int:
        for key in self.amplitudes:
            return len(key)
        return 0

    @classmethod
    def vacuum(cls, mode_count: int) -> "FockWavepacketState":
        return cls(mode_count, (), {(): 1.0})

    @classmethod
    def from_fock(
        cls, mode_count: int, coefficients: Mapping[Iterable[Slot], complex]
    ) -> "FockWavepacketState":
        """Build from coefficients on normalized occupation-basis states."""
        amps = {}
        labels = set()
        for key, c in coefficients.items():
            ms = canonical(key)
            labels.update(w for _, w in ms)
            amps[ms] = amps.get(ms, 0) + complex(c) / math.sqrt(multiplicity(ms))
        return cls(mode_count, tuple(labels), amps)

    @classmethod
    def product(cls, mode_count: int, photons: Iterable[Slot]) -> "FockWavepacketState":
        """The state prod_l a^dag_{mode_l}(w_l) |vac>, normalized."""
        return cls.from_fock(mode_count, {canonical(photons): 1.0})

    def fock_amplitude(self, ms: Iterable[Slot]) -> complex:
        key = canonical(ms)
        return self.amplitudes.get(key, 0j) * math.sqrt(multiplicity(key))

    def fock_coefficients(self) -> dict[Multiset, complex]:
        return {ms: self.fock_amplitude(ms) for ms in self.amplitudes}

    def norm_squared(self) -> float:
        return float(sum(abs(a) ** 2 * multiplicity(ms) for ms, a in self.amplitudes.items()))

    def normalized(self) -> "FockWavepacketState":
        n = math.sqrt(self.norm_squared())
        return FockWavepacketState(
            self.mode_count, self.frequency_labels, {k: v / n for k, v in self.amplitudes.items()}
        )

    def distance(self, other: "FockWavepacketState") -> float:
        """Max absolute difference of occupation-basis coefficients."""
        keys = set(self.amplitudes) | set(other.amplitudes)
        return max(
            (abs(self.fock_amplitude(k) - other.fock_amplitude(k)) for k in keys), default=0.0
        )


@dataclass(frozen=True)
class CoincidenceQuery:
    outcome: Multiset

    def __init__(self, outcome: Iterable[Slot]):
        object.__setattr__(self, "outcome", canonical(outcome))


def scatter_state(state: FockWavepacketState, s: UnitaryScatteringMatrix) -> FockWavepacketState:
    """Apply the device's quantum scattering matrix to a Fock wavepacket.

    Device coordinates are taken as x0 = 0 for every mode. For each frequency
    pattern the amplitude is a rank-K tensor over mode indices; the device acts
    as S on every tensor axis.

    Raises:
        DimensionMismatch: if the state and device mode counts differ.
    """
    if s.n_modes != state.mode_count:
        raise DimensionMismatch(f"device has {s.n_modes} modes, state has {state.mode_count}")
    k = state.photon_count
    n = state.mode_count
    if k == 0:
        return FockWavepacketState(n, state.frequency_labels, dict(state.amplitudes))

    # Group by the sorted frequency tuple; the slot order within a group is that
    # frequency tuple, and the tensor index along slot l is the mode of slot l.
    blocks: dict[tuple[float, ...], np.ndarray] = {}
    for ms in state.amplitudes:
        freqs = tuple(sorted(w for _, w in ms))
        if freqs in blocks:
            continue
        tensor = np.zeros((n,) * k, dtype=complex)
        for modes in itertools.product(range(n), repeat=k):
            tensor[modes] = state.amplitudes.get(canonical(zip(modes, freqs)), 0j)
        blocks[freqs] = tensor

    out: dict[Multiset, complex] = {}
    for freqs, tensor in blocks.items():
        for axis in range(k):
            tensor = np.moveaxis(np.tensordot(s.entries, tensor, axes=([1], [axis])), 0, axis)
        for modes in itertools.product(range(n), repeat=k):
            key = canonical(zip(modes, freqs))
            if key not in out:
                out[key] = tensor[modes]
    return FockWavepacketState(n, state.frequency_labels, out)


def coincidence_probability(output: FockWavepacketState, q: CoincidenceQuery) -> float:
    """Probability of detecting exactly the photons listed in the query.

    Raises:
        DimensionMismatch: if the query size differs from the photon count.
        UnknownFrequencyLabel: if the query names a frequency the state lacks.
    """
    if len(q.outcome) != output.photon_count:
        raise DimensionMismatch(
            f"query has {len(q.outcome)} photons, state has {output.photon_count}"
        )
    for mode, w in q.outcome:
        if w not in output.frequency_labels:
            raise UnknownFrequencyLabel(w)
        if not 0 <= mode < output.mode_count:
            raise DimensionMismatch(f"mode {mode} outside 0..{output.mode_count - 1}")
    return abs(output.fock_amplitude(q.outcome)) ** 2


@dataclass(frozen=True)
class PermutationTerm:
    permutation: tuple[int, ...]
    coefficient: complex
    delta_offsets: np.ndarray


def position_matrix_element(
    s: UnitaryScatteringMatrix,
    offsets,
    out_positions,
    out_modes,
    in_positions,
    in_modes,
) -> list[PermutationTerm]:
    """Position-domain K-photon matrix element of the quantum scattering matrix.

    For every permutation P of the K input photons returns the coefficient
    prod_l S[mu_l, mu'_{P l}] and the arguments of the delta functions,
    (x_l - x0[mu_l]) - (x'_{P l} - x0[mu'_{P l}]). The element is the sum over
    terms whose delta arguments all vanish.
    """
    offsets = np.asarray(offsets, dtype=float)
    out_positions = np.asarray(out_positions, dtype=float)
    in_positions = np.asarray(in_positions, dtype=float)
    out_modes = [int(m) for m in out_modes]
    in_modes = [int(m) for m in in_modes]
    k = len(out_modes)
    if not (len(in_modes) == k == out_positions.size == in_positions.size):
        raise DimensionMismatch("input and output must list the same number of photons")
    if offsets.shape != (s.n_modes,):
        raise DimensionMismatch(f"offsets must have length {s.n_modes}")
    for m in out_modes + in_modes:
        if not 0 <= m < s.n_modes:
            raise DimensionMismatch(f"mode {m} outside 0..{s.n_modes - 1}")

    terms = []
    for perm in itertools.permutations(range(k)):
        coeff = complex(np.prod([s.entries[out_modes[l], in_modes[perm[l]]] for l in range(k)]))
        delta = np.array(
            [
                (out_positions[l] - offsets[out_modes[l]])
                - (in_positions[perm[l]] - offsets[in_modes[perm[l]]])
                for l in range(k)
            ]
        )
        terms.append(PermutationTerm(perm, coeff, delta))
    return terms
