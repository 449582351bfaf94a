"""Time-bin MPS simulation of a two-level emitter in front of a (partial) mirror.

The emitter couples with rates gamma_plus / gamma_minus to the forward and
backward waveguide modes at distance t_d from a beam-splitter mirror. After
discretizing time in steps dt, the waveguide becomes a chain of time bins,
each holding one forward and one backward oscillator. Step k applies the
unitary exp(-i H[k+1, k]) to the emitter, bin k and, once the feedback loop
is closed (k > n_d), the backward bin emitted 2 n_d steps earlier.

Chain layout ("conveyor"): pre-padded vacuum bins and every bin still inside
the feedback loop sit to the left of the emitter in time order; at step k the
new bin is inserted directly left of the emitter and the delayed bin
k - 2 n_d is swapped rightwards across the loop to sit directly right of it.
Used delayed bins therefore pile up to the right of the emitter and never have
to be swapped back.

The mirror is described by its 2x2 scattering matrix. `mirror_order` selects
which physical mode is port 1 of `beam_splitter(theta, phi)`:

* ``"backward_forward"`` (default): the mirror Hamiltonian
  2i tan(theta/2) [e^{i phi} a_+ a_-^dag - h.c.] couples a_-^dag to a_+, i.e.
  port 1 is the backward mode; backward light reflects into the forward mode
  with amplitude -sin(theta) e^{-i phi}.
* ``"forward_backward"``: port 1 is the forward mode; the reflection amplitude
  is sin(theta) e^{i phi}.
"""
from __future__ import annotations

import logging
import math
import os
from dataclasses import asdict, dataclass, field
from typing import Callable, Union

import numpy as np

from .device_algebra import UnitaryScatteringMatrix, beam_splitter
from .errors import ConfigError
from .mps import DEFAULT_BOND_CAP, MatrixProductState

log = logging.getLogger(__name__)

EMITTER = "emitter"
MIRROR_ORDERS = ("backward_forward", "forward_backward")


@dataclass(frozen=True)
class NoDrive:
    kind: str = field(default="none", init=False)

    def __call__(self, t: float) -> float:
        return 0.0


@dataclass(frozen=True)
class ExponentialDrive:
    """Omega(t) = omega0 * exp(-alpha t) for t >= 0."""

    omega0: float
    alpha: float
    kind: str = field(default="exponential", init=False)

    def __post_init__(self):
        for name in ("omega0", "alpha"):
            value = getattr(self, name)
            if isinstance(value, complex) or not np.isfinite(value):
                raise ConfigError(f"drive.{name}", "must be a finite real number")

    def __call__(self, t: float) -> float:
        return self.omega0 * math.exp(-self.alpha * t) if t >= 0 else 0.0


@dataclass(frozen=True)
class TableDrive:
    """Sampled Omega(t), linearly interpolated and zero outside the table."""

    times: tuple[float, ...]
    values: tuple[float, ...]
    kind: str = field(default="table", init=False)

    def __post_init__(self):
        t = np.asarray(self.times)
        v = np.asarray(self.values)
        if np.iscomplexobj(v) or np.iscomplexobj(t):
            raise ConfigError("drive.values", "complex drive amplitudes are not supported")
        if t.ndim != 1 or t.shape != v.shape or t.size < 2:
            raise ConfigError("drive.times", "times and values must be equal-length 1-D lists (>= 2)")
        if np.any(np.diff(t) <= 0):
            raise ConfigError("drive.times", "must be strictly increasing")
        object.__setattr__(self, "times", tuple(float(x) for x in t))
        object.__setattr__(self, "values", tuple(float(x) for x in v))

    def __call__(self, t: float) -> float:
        return float(np.interp(t, self.times, self.values, left=0.0, right=0.0))


Drive = Union[NoDrive, ExponentialDrive, TableDrive]


@dataclass(frozen=True)
class FeedbackConfig:
    """Physical and numerical parameters; rates in units of gamma, times in 1/gamma."""

    gamma_plus: float = 0.5
    gamma_minus: float = 0.5
    delta_e: float = 0.0
    omega0_td: float = math.pi
    gamma_td: float = 2.0
    theta: float = math.pi / 2
    phi: float = 0.0
    drive: Drive = field(default_factory=NoDrive)
    dt: float = 0.05
    schmidt_tol: float = 0.01
    bin_dim: int = 2
    t_end: float = 10.0
    initial: str = "excited"
    bond_cap: int = DEFAULT_BOND_CAP
    mirror_order: str = "backward_forward"

    def __post_init__(self):
        reals = ("gamma_plus", "gamma_minus", "delta_e", "omega0_td", "gamma_td",
                 "theta", "phi", "dt", "schmidt_tol", "t_end")
        for name in reals:
            value = getattr(self, name)
            if isinstance(value, (complex, bool)) or not isinstance(value, (int, float)):
                raise ConfigError(name, f"must be a real number, got {value!r}")
            if not math.isfinite(value):
                raise ConfigError(name, "must be finite")
        if self.gamma_plus < 0 or self.gamma_minus < 0:
            raise ConfigError("gamma_plus", "decay rates must be nonnegative")
        if abs(self.gamma_plus + self.gamma_minus - 1.0) > 1e-9:
            raise ConfigError(
                "gamma_minus", "gamma_plus + gamma_minus must equal 1 (rates are in units of gamma)"
            )
        if not self.dt > 0:
            raise ConfigError("dt", "must be positive")
        if not 0 < self.schmidt_tol < 1:
            raise ConfigError("schmidt_tol", "must lie in (0, 1)")
        if not isinstance(self.bin_dim, int) or self.bin_dim < 2:
            raise ConfigError("bin_dim", "must be an integer >= 2")
        if not self.gamma_td > 0:
            raise ConfigError("gamma_td", "must be positive")
        if self.n_d < 1:
            raise ConfigError("dt", f"delay gamma_td = {self.gamma_td} is shorter than one step")
        if not self.t_end > 0:
            raise ConfigError("t_end", "must be positive")
        if self.initial not in ("excited", "ground"):
            raise ConfigError("initial", "must be 'excited' or 'ground'")
        if not isinstance(self.bond_cap, int) or self.bond_cap < 1:
            raise ConfigError("bond_cap", "must be a positive integer")
        if self.mirror_order not in MIRROR_ORDERS:
            raise ConfigError("mirror_order", f"must be one of {MIRROR_ORDERS}")
        if not isinstance(self.drive, (NoDrive, ExponentialDrive, TableDrive)):
            raise ConfigError("drive", f"unsupported drive {self.drive!r}")

    @property
    def n_d(self) -> int:
        """Delay in whole steps, floor(t_d / dt)."""
        return int(math.floor(self.gamma_td / self.dt + 1e-9))

    @property
    def n_steps(self) -> int:
        return int(round(self.t_end / self.dt))

    @property
    def delay_residual(self) -> float:
        """t_d - n_d * dt: the part of the delay lost to the time grid."""
        return self.gamma_td - self.n_d * self.dt

    def mirror(self) -> UnitaryScatteringMatrix:
        return beam_splitter(self.theta, self.phi)

    def mirror_amplitudes(self) -> tuple[complex, complex]:
        """(forward transmission, backward-to-forward reflection) of the mirror."""
        s = self.mirror().entries
        fwd, bwd = (0, 1) if self.mirror_order == "forward_backward" else (1, 0)
        return complex(s[fwd, fwd]), complex(s[fwd, bwd])

    def to_dict(self) -> dict:
        d = asdict(self)
        d["drive"] = drive_to_dict(self.drive)
        return d


def drive_to_dict(drive: Drive) -> dict:
    if isinstance(drive, ExponentialDrive):
        return {"kind": "exponential", "omega0": drive.omega0, "alpha": drive.alpha}
    if isinstance(drive, TableDrive):
        return {"kind": "table", "times": list(drive.times), "values": list(drive.values)}
    return {"kind": "none"}


def drive_from_dict(d) -> Drive:
    if d is None:
        return NoDrive()
    if not isinstance(d, dict):
        raise ConfigError("drive", "must be an object with a 'kind' key")
    kind = d.get("kind", "none")
    if kind == "none":
        return NoDrive()
    if kind == "exponential":
        if "omega0" not in d:
            raise ConfigError("drive.omega0", "required for an exponential drive")
        if "alpha" not in d:
            raise ConfigError("drive.alpha", "required for an exponential drive")
        return ExponentialDrive(d["omega0"], d["alpha"])
    if kind == "table":
        return TableDrive(tuple(d.get("times", ())), tuple(d.get("values", ())))
    raise ConfigError("drive.kind", f"unknown drive kind {kind!r}")


def config_from_dict(d: dict) -> FeedbackConfig:
    known = set(FeedbackConfig.__dataclass_fields__)
    unknown = set(d) - known
    if unknown:
        raise ConfigError(sorted(unknown)[0], "unknown config field")
    kwargs = dict(d)
    if "drive" in kwargs:
        kwargs["drive"] = drive_from_dict(kwargs["drive"])
    if "bond_cap" not in kwargs and os.environ.get("POINTCOUPLE_BOND_CAP"):
        try:
            kwargs["bond_cap"] = int(os.environ["POINTCOUPLE_BOND_CAP"])
        except ValueError:
            raise ConfigError("POINTCOUPLE_BOND_CAP", "must be an integer") from None
    return FeedbackConfig(**kwargs)


# gate construction -----------------------------------------------------------


@dataclass(frozen=True)
class GateCoefficients:
    """Coefficients of the integrated Hamiltonian H[k+1, k].

    H = detuning s^dag s + drive (s + s^dag)
        + s^dag (forward A_+[k] + backward A_-[k] + delayed A_-[k - 2 n_d]) + h.c.
    """

    detuning: float
    drive: float
    forward: complex
    backward: complex
    delayed: complex | None


def rotating_frame_coupling(config: FeedbackConfig, k: int) -> GateCoefficients:
    if k < 0:
        raise ValueError("step index must be nonnegative")
    dt = config.dt
    g_fwd = math.sqrt(config.gamma_plus * dt) * np.exp(1j * config.omega0_td)
    g_bwd = math.sqrt(config.gamma_minus * dt) * np.exp(-1j * config.omega0_td)
    drive = config.drive(k * dt) * dt
    if k <= config.n_d:
        return GateCoefficients(config.delta_e * dt, drive, g_fwd, g_bwd, None)
    transmission, reflection = config.mirror_amplitudes()
    return GateCoefficients(
        config.delta_e * dt, drive, g_fwd * transmission, g_bwd, g_fwd * reflection
    )


def ladder(dim: int) -> np.ndarray:
    return np.diag(np.sqrt(np.arange(1, dim)), 1).astype(complex)


SIGMA = np.array([[0, 1], [0, 0]], dtype=complex)  # |g><e| with |g> = 0, |e> = 1


def bin_operators(bin_dim: int) -> tuple[np.ndarray, np.ndarray]:
    """(A_+, A_-) on a bin site with local basis |n_+> (x) |n_->."""
    a = ladder(bin_dim)
    eye = np.eye(bin_dim)
    return np.kron(a, eye), np.kron(eye, a)


@dataclass(frozen=True, eq=False)
class BinGate:
    """Dense unitary on (bin_k, emitter) or (bin_k, emitter, delayed bin), in that leg order."""

    k: int
    unitary: np.ndarray
    n_sites: int


def _embed(ops: list[np.ndarray]) -> np.ndarray:
    out = ops[0]
    for op in ops[1:]:
        out = np.kron(out, op)
    return out


def gate_hamiltonian(coeffs: GateCoefficients, bin_dim: int) -> np.ndarray:
    a_fwd, a_bwd = bin_operators(bin_dim)
    d = bin_dim * bin_dim
    i_bin = np.eye(d)
    i_e = np.eye(2)
    sig = SIGMA
    three = coeffs.delayed is not None
    if three:
        site = lambda b, e, old: _embed([b, e, old])  # noqa: E731
    else:
        site = lambda b, e, old=None: _embed([b, e])  # noqa: E731

    h = coeffs.detuning * site(i_bin, sig.conj().T @ sig, i_bin)
    h = h + coeffs.drive * site(i_bin, sig + sig.conj().T, i_bin)
    field_op = coeffs.forward * site(a_fwd, i_e, i_bin) + coeffs.backward * site(a_bwd, i_e, i_bin)
    if three:
        field_op = field_op + coeffs.delayed * site(i_bin, i_e, a_bwd)
    raise_e = site(i_bin, sig.conj().T, i_bin)
    coupling = raise_e @ field_op
    h = h + coupling + coupling.conj().T
    return 0.5 * (h + h.conj().T)


def build_gate(config: FeedbackConfig, k: int, coeffs: GateCoefficients | None = None) -> BinGate:
    """exp(-i H[k+1, k]) by Hermitian eigendecomposition."""
    if coeffs is None:
        coeffs = rotating_frame_coupling(config, k)
    h = gate_hamiltonian(coeffs, config.bin_dim)
    evals, evecs = np.linalg.eigh(h)
    u = (evecs * np.exp(-1j * evals)) @ evecs.conj().T
    return BinGate(k, u, 3 if coeffs.delayed is not None else 2)


# simulation ------------------------------------------------------------------


def initial_state(config: FeedbackConfig) -> MatrixProductState:
    """Emitter plus 2 n_d pre-padded vacuum bins labelled -2 n_d .. -1."""
    d = config.bin_dim ** 2
    vac = np.zeros(d)
    vac[0] = 1.0
    emitter = np.array([0.0, 1.0]) if config.initial == "excited" else np.array([1.0, 0.0])
    n_pad = 2 * config.n_d
    labels = list(range(-n_pad, 0)) + [EMITTER]
    mps = MatrixProductState.product(
        [vac] * n_pad + [emitter], labels, tol=config.schmidt_tol, bond_cap=config.bond_cap
    )
    mps.move_center(len(mps) - 1)
    return mps


def _vacuum(bin_dim: int) -> np.ndarray:
    v = np.zeros(bin_dim ** 2)
    v[0] = 1.0
    return v


def step(
    mps: MatrixProductState,
    config: FeedbackConfig,
    k: int,
    gate: BinGate | None = None,
) -> MatrixProductState:
    """Advance the state from t = k dt to (k + 1) dt in place and return it.

    The norm before renormalization is left in ``mps.last_norm``.
    """
    if gate is None:
        gate = build_gate(config, k)
    e = mps.position(EMITTER)
    mps.insert_site(e, _vacuum(config.bin_dim), k)
    e += 1
    if gate.n_sites == 2:
        mps.apply_gate(e - 1, gate.unitary, 2, center_at=e)
    else:
        old = mps.position(k - 2 * config.n_d)
        mps.move_center(old)
        mps.move_site(old, e)
        # the delayed bin now sits right of the emitter, which moved to e - 1
        mps.apply_gate(e - 2, gate.unitary, 3, center_at=e - 1)
    mps.normalize()
    return mps


@dataclass
class FeedbackRun:
    """One row per sample time t = k dt, k = 0..n_steps."""

    t: np.ndarray
    abs_eps: np.ndarray
    pop: np.ndarray
    discarded_weight: np.ndarray
    max_bond: np.ndarray
    norm_deficit: np.ndarray
    photon_number: np.ndarray | None
    metadata: dict

    CSV_COLUMNS = ("t", "abs_eps", "pop", "discarded_weight", "max_bond")

    def to_csv(self) -> str:
        lines = [",".join(self.CSV_COLUMNS)]
        for row in zip(self.t, self.abs_eps, self.pop, self.discarded_weight, self.max_bond):
            t, a, p, w, b = row
            lines.append(f"{t:.17g},{a:.17g},{p:.17g},{w:.17g},{int(b)}")
        return "\n".join(lines) + "\n"


def _photon_number(mps: MatrixProductState, number_op: np.ndarray) -> float:
    ops = {i: number_op for i, lab in enumerate(mps.labels) if lab != EMITTER}
    return float(mps.expect_sum(ops).real)


def run(
    config: FeedbackConfig,
    track_photons: bool = False,
    progress: Callable[[int, int], None] | None = None,
) -> FeedbackRun:
    """Simulate up to t_end and record |eps(t)| = sqrt(<s^dag s>) every step.

    Args:
        config: simulation parameters.
        track_photons: also record the total photon number in all bins
            (one full-chain contraction per step).
        progress: optional callback progress(k, n_steps).
    """
    mps = initial_state(config)
    n_steps = config.n_steps
    pop_op = SIGMA.conj().T @ SIGMA
    a_fwd, a_bwd = bin_operators(config.bin_dim)
    number_op = a_fwd.conj().T @ a_fwd + a_bwd.conj().T @ a_bwd

    t = np.arange(n_steps + 1) * config.dt
    pop = np.empty(n_steps + 1)
    discarded = np.empty(n_steps + 1)
    max_bond = np.empty(n_steps + 1, dtype=int)
    deficit = np.zeros(n_steps + 1)
    photons = np.empty(n_steps + 1) if track_photons else None

    def record(i):
        pop[i] = mps.expect_local(mps.position(EMITTER), pop_op).real
        discarded[i] = mps.discarded_weight
        max_bond[i] = mps.max_bond()
        if photons is not None:
            photons[i] = _photon_number(mps, number_op)

    record(0)
    static = isinstance(config.drive, NoDrive)
    gates: dict[bool, BinGate] = {}
    for k in range(n_steps):
        if static:
            branch = k > config.n_d
            if branch not in gates:
                gates[branch] = build_gate(config, k)
            gate = gates[branch]
        else:
            gate = build_gate(config, k)
        step(mps, config, k, gate)
        deficit[k + 1] = 1.0 - mps.last_norm ** 2
        record(k + 1)
        if progress is not None:
            progress(k + 1, n_steps)

    pop = np.clip(pop, 0.0, None)
    metadata = {
        "n_d": config.n_d,
        "effective_delay": config.n_d * config.dt,
        "delay_residual": config.delay_residual,
        "n_steps": n_steps,
        "final_sites": len(mps),
        "final_norm": mps.norm(),
    }
    return FeedbackRun(t, np.sqrt(pop), pop, discarded, max_bond, deficit, photons, metadata)
