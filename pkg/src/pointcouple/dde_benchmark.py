"""Delay-differential-equation oracle for the single-excitation feedback problem.

With one excitation and vacuum initial fields, the excited-state amplitude obeys

    d eps/dt = -(gamma/2) eps(t) - sqrt(gamma_+ gamma_-) e^{2 i omega0 t_d} r eps(t - 2 t_d),

with eps(0) = 1 and eps(t) = 0 for t < 0, where r is the mirror amplitude for
backward light reflected into the forward mode. The equation is integrated
with classical RK4 on a fixed grid; delayed values between stored samples come
from cubic Hermite interpolation using the stored derivatives.
"""
from __future__ import annotations

import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, replace

import numpy as np

from .errors import ConfigError
from .feedback_mps import MIRROR_ORDERS, FeedbackConfig, run


@dataclass(frozen=True)
class DdeParams:
    gamma: float = 1.0
    t_d: float = 2.0
    omega0_td: float = math.pi
    phi: float = 0.0
    dt_ode: float = 0.001
    t_end: float = 10.0
    theta: float = math.pi / 2
    gamma_plus_fraction: float = 0.5
    mirror_order: str = "backward_forward"

    def __post_init__(self):
        for name in ("gamma", "t_d", "dt_ode", "t_end"):
            if not getattr(self, name) > 0:
                raise ConfigError(name, "must be positive")
        if self.dt_ode > self.t_d / 10:
            raise ConfigError("dt_ode", "must not exceed t_d / 10")
        if not 0 <= self.gamma_plus_fraction <= 1:
            raise ConfigError("gamma_plus_fraction", "must lie in [0, 1]")
        if self.mirror_order not in MIRROR_ORDERS:
            raise ConfigError("mirror_order", f"must be one of {MIRROR_ORDERS}")

    @classmethod
    def from_feedback(cls, config: FeedbackConfig, dt_ode: float = 0.001) -> "DdeParams":
        return cls(
            gamma=1.0,
            t_d=config.gamma_td,
            omega0_td=config.omega0_td,
            phi=config.phi,
            dt_ode=dt_ode,
            t_end=config.t_end,
            theta=config.theta,
            gamma_plus_fraction=config.gamma_plus,
            mirror_order=config.mirror_order,
        )

    def reflection(self) -> complex:
        """Backward-to-forward mirror amplitude, written out in closed form."""
        if self.mirror_order == "forward_backward":
            return math.sin(self.theta) * complex(math.cos(self.phi), math.sin(self.phi))
        return -math.sin(self.theta) * complex(math.cos(self.phi), -math.sin(self.phi))

    def feedback_coefficient(self) -> complex:
        gp = self.gamma_plus_fraction * self.gamma
        gm = self.gamma - gp
        return math.sqrt(gp * gm) * np.exp(2j * self.omega0_td) * self.reflection()


@dataclass(frozen=True, eq=False)
class AmplitudeTrace:
    t: np.ndarray
    eps: np.ndarray

    @property
    def abs_eps(self) -> np.ndarray:
        return np.abs(self.eps)

    def abs_at(self, times) -> np.ndarray:
        return np.interp(times, self.t, np.abs(self.eps))


def _hermite(y0, y1, m0, m1, h, s):
    s2 = s * s
    s3 = s2 * s
    return ((2 * s3 - 3 * s2 + 1) * y0 + (s3 - 2 * s2 + s) * h * m0
            + (-2 * s3 + 3 * s2) * y1 + (s3 - s2) * h * m1)


def solve_dde(p: DdeParams) -> AmplitudeTrace:
    """Fixed-step RK4 solution of the feedback DDE on t in [0, t_end]."""
    h = p.dt_ode
    n = int(round(p.t_end / h))
    lag = 2 * p.t_d
    decay = 0.5 * p.gamma
    fb = p.feedback_coefficient()

    eps = np.zeros(n + 1, dtype=complex)
    deriv = np.zeros(n + 1, dtype=complex)
    eps[0] = 1.0
    deriv[0] = -decay

    def delayed(t: float, i_max: int, from_left: bool) -> complex:
        """eps(t - lag) using samples 0..i_max; exact zero before t = lag."""
        s = t - lag
        if s < -1e-12 * h or (from_left and s < 1e-12 * h):
            return 0j
        x = max(s, 0.0) / h
        j = min(int(math.floor(x + 1e-9)), i_max)
        frac = x - j
        if frac <= 1e-9 or j == i_max:
            return eps[j] if j < i_max or frac <= 1e-9 else eps[i_max]
        return _hermite(eps[j], eps[j + 1], deriv[j], deriv[j + 1], h, frac)

    def f(y, d):
        return -decay * y - fb * d

    for i in range(n):
        t = i * h
        # A stage sitting exactly on the t = lag jump takes the limit from inside its step.
        d0 = delayed(t, i, from_left=False)
        dm = delayed(t + 0.5 * h, i, from_left=False)
        d1 = delayed(t + h, i, from_left=True)
        y = eps[i]
        k1 = f(y, d0)
        k2 = f(y + 0.5 * h * k1, dm)
        k3 = f(y + 0.5 * h * k2, dm)
        k4 = f(y + h * k3, d1)
        eps[i + 1] = y + h * (k1 + 2 * k2 + 2 * k3 + k4) / 6
        deriv[i + 1] = f(eps[i + 1], delayed(t + h, i, from_left=False))
    return AmplitudeTrace(np.arange(n + 1) * h, eps)


@dataclass(frozen=True)
class SweepRow:
    dt: float
    schmidt_tol: float
    max_abs_deviation: float
    final_abs_eps: float
    max_bond: int
    flagged: bool


@dataclass
class SweepTable:
    rows: list[SweepRow]
    monotone_in_dt: dict[float, bool]
    threshold: float

    CSV_COLUMNS = ("dt", "schmidt_tol", "max_abs_deviation", "final_abs_eps", "max_bond", "flagged")

    def row(self, dt: float, tol: float) -> SweepRow:
        for r in self.rows:
            if math.isclose(r.dt, dt) and math.isclose(r.schmidt_tol, tol):
                return r
        raise KeyError((dt, tol))

    def to_csv(self) -> str:
        lines = [",".join(self.CSV_COLUMNS)]
        for r in self.rows:
            lines.append(
                f"{r.dt:.17g},{r.schmidt_tol:.17g},{r.max_abs_deviation:.17g},"
                f"{r.final_abs_eps:.17g},{r.max_bond},{int(r.flagged)}"
            )
        return "\n".join(lines) + "\n"


def max_deviation(config: FeedbackConfig, oracle: AmplitudeTrace) -> tuple[float, "object"]:
    result = run(config)
    dev = float(np.max(np.abs(result.abs_eps - oracle.abs_at(result.t))))
    return dev, result


def _sweep_entry(args):
    config, oracle = args
    dev, result = max_deviation(config, oracle)
    return dev, float(result.abs_eps[-1]), int(result.max_bond.max())


def convergence_sweep(
    base: FeedbackConfig,
    dts,
    tols,
    threshold: float = 0.05,
    dt_ode: float = 0.001,
    workers: int = 1,
) -> SweepTable:
    """Max |(|eps_MPS| - |eps_DDE|)| over [0, t_end] for every (dt, tol) pair.

    Rows whose deviation exceeds `threshold` are flagged. Whether the
    deviation shrinks with dt at fixed tolerance is reported per tolerance,
    not enforced.
    """
    if abs(base.theta - math.pi / 2) > 1e-12:
        raise ConfigError("theta", "the convergence sweep needs an ideal mirror (theta = pi/2)")
    if not isinstance(base.drive, type(FeedbackConfig().drive)):
        raise ConfigError("drive", "the oracle covers the undriven case only")
    if base.delta_e != 0:
        raise ConfigError("delta_e", "the oracle assumes a resonant emitter (delta_e = 0)")
    if base.initial != "excited":
        raise ConfigError("initial", "the oracle assumes an initially excited emitter")
    oracle = solve_dde(DdeParams.from_feedback(base, dt_ode=dt_ode))
    jobs = [(float(dt), float(tol)) for dt in dts for tol in tols]
    configs = [(replace(base, dt=dt, schmidt_tol=tol), oracle) for dt, tol in jobs]
    if workers > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            results = list(pool.map(_sweep_entry, configs))
    else:
        results = [_sweep_entry(c) for c in configs]

    rows = [
        SweepRow(dt, tol, dev, final, bond, dev > threshold)
        for (dt, tol), (dev, final, bond) in zip(jobs, results)
    ]
    monotone = {}
    for tol in sorted({float(t) for t in tols}):
        devs = [r.max_abs_deviation for r in sorted(rows, key=lambda r: -r.dt) if r.schmidt_tol == tol]
        monotone[tol] = all(b <= a + 1e-12 for a, b in zip(devs, devs[1:]))
    return SweepTable(rows, monotone, threshold)
