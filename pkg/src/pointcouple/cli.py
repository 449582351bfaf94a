"""Command-line front end: `pointcouple <subcommand> ...`.

Exit codes: 0 success, 1 runtime error, 2 invalid configuration or input.
Every output file is written atomically and accompanied by
`<output>.manifest.json` describing the run.
"""
from __future__ import annotations

import argparse
import hashlib
import json
import logging
import sys
import time
from dataclasses import asdict, dataclass, field
from importlib.metadata import PackageNotFoundError, version
from pathlib import Path
from typing import Any, Sequence

import numpy as np

from . import formats
from .dde_benchmark import convergence_sweep
from .device_algebra import (
    CouplingMatrix,
    UnitaryScatteringMatrix,
    coupling_from_scattering,
    scattering_from_coupling,
)
from .errors import ConfigError, PointCoupleError
from .feedback_mps import config_from_dict, run
from .fock_scattering import scatter_state
from .normal_modes import NormalModeBasis, profile_samples
from .wave_propagation import propagate

log = logging.getLogger("pointcouple")

MANIFEST_SUFFIX = ".manifest.json"


def tool_version() -> str:
    try:
        return version("artifact")
    except PackageNotFoundError:
        return "unknown"


def config_hash(documents: dict[str, Any]) -> str:
    """sha256 of the canonical JSON of every parsed input document."""
    canon = json.dumps(documents, sort_keys=True, separators=(",", ":"))
    return hashlib.sha256(canon.encode()).hexdigest()


@dataclass
class RunManifest:
    subcommand: str
    config_paths: list[str]
    output_paths: list[str]
    tool_version: str
    config_hash: str
    duration_s: float
    extra: dict = field(default_factory=dict)

    def to_json(self) -> str:
        return formats.dumps(asdict(self))


class _Context:
    """Collects inputs and writes outputs plus their manifest."""

    def __init__(self, args: argparse.Namespace):
        self.args = args
        self.inputs: dict[str, Any] = {}
        self.start = time.perf_counter()

    def load(self, path: str, role: str) -> Any:
        doc = formats.load_json(path)
        self.inputs[role] = doc
        return doc

    def emit(self, text: str, extra: dict | None = None) -> None:
        out = self.args.out
        if out is None:
            sys.stdout.write(text)
            return
        formats.atomic_write(out, text)
        manifest = RunManifest(
            subcommand=self.args.command,
            config_paths=[str(Path(p)) for p in self._input_paths()],
            output_paths=[str(Path(out))],
            tool_version=tool_version(),
            config_hash=config_hash(self.inputs),
            duration_s=time.perf_counter() - self.start,
            extra=extra or {},
        )
        formats.atomic_write(str(out) + MANIFEST_SUFFIX, manifest.to_json())
        log.info("wrote %s", out)

    def _input_paths(self) -> list[str]:
        return [p for p in (getattr(self.args, k, None) for k in ("config", "device", "state", "sweep")) if p]


def _require(args, name: str) -> str:
    value = getattr(args, name)
    if value is None:
        raise ConfigError(f"--{name}", "is required for this subcommand")
    return value


def _scattering(doc) -> UnitaryScatteringMatrix:
    dev = formats.device_from_json(doc)
    return dev if isinstance(dev, UnitaryScatteringMatrix) else scattering_from_coupling(dev)


# subcommands -----------------------------------------------------------------


def cmd_device(args, ctx: _Context) -> None:
    dev = formats.device_from_json(ctx.load(_require(args, "device"), "device"))
    if args.to_coupling:
        s = dev if isinstance(dev, UnitaryScatteringMatrix) else scattering_from_coupling(dev)
        result: UnitaryScatteringMatrix | CouplingMatrix = coupling_from_scattering(s)
    else:
        result = dev if isinstance(dev, UnitaryScatteringMatrix) else scattering_from_coupling(dev)
    ctx.emit(formats.dumps(formats.device_to_json(result, clean=1e-12)))


def cmd_propagate(args, ctx: _Context) -> None:
    s = _scattering(ctx.load(_require(args, "device"), "device"))
    w = formats.wavepacket_from_json(ctx.load(_require(args, "state"), "state"))
    window = formats.window_from_json(ctx.load(_require(args, "config"), "config"))
    if w.mode_count != s.n_modes:
        raise ConfigError("envelopes", f"wavepacket has {w.mode_count} modes, device has {s.n_modes}")
    out = propagate(w, s, window)
    ctx.emit(formats.dumps(formats.wavepacket_to_json(out)), {"norm_squared": out.norm_squared()})


def cmd_scatter(args, ctx: _Context) -> None:
    s = _scattering(ctx.load(_require(args, "device"), "device"))
    state = formats.fock_from_json(ctx.load(_require(args, "state"), "state"), s.n_modes)
    out = scatter_state(state.normalized(), s)
    ctx.emit(formats.dumps(formats.fock_to_json(out, drop_below=1e-15)))


def cmd_normal_modes(args, ctx: _Context) -> None:
    s = _scattering(ctx.load(_require(args, "device"), "device"))
    omegas = formats.parse_float_list(_require(args, "omega"), "--omega")
    positions = formats.parse_float_list(_require(args, "positions"), "--positions")
    offsets = None
    if args.offsets is not None:
        offsets = formats.parse_float_list(args.offsets, "--offsets")
        if len(offsets) != s.n_modes:
            raise ConfigError("--offsets", f"expected {s.n_modes} values")
    basis = NormalModeBasis(s, None if offsets is None else np.array(offsets))
    ctx.emit(formats.profile_csv(profile_samples(basis, positions, omegas)))


def _progress(quiet: bool):
    if quiet:
        return None
    every = {"next": 0.0}

    def report(k: int, n: int) -> None:
        if k / n >= every["next"] or k == n:
            log.info("step %d / %d", k, n)
            every["next"] = k / n + 0.1

    return report


def cmd_feedback(args, ctx: _Context) -> None:
    config = _feedback_config(ctx.load(_require(args, "config"), "config"))
    result = run(config, progress=_progress(args.quiet))
    meta = dict(result.metadata)
    meta["config"] = config.to_dict()
    ctx.emit(result.to_csv(), meta)


def _feedback_config(doc):
    if not isinstance(doc, dict):
        raise ConfigError("config", "expected a JSON object")
    return config_from_dict(doc)


def cmd_benchmark(args, ctx: _Context) -> None:
    base = _feedback_config(ctx.load(_require(args, "config"), "config"))
    sweep = ctx.load(_require(args, "sweep"), "sweep")
    if not isinstance(sweep, dict):
        raise ConfigError("sweep", "expected a JSON object")
    allowed = {"dts", "tols", "threshold", "dt_ode", "workers"}
    unknown = set(sweep) - allowed
    if unknown:
        raise ConfigError(f"sweep.{sorted(unknown)[0]}", "unknown sweep field")
    dts = sweep.get("dts", [base.dt])
    tols = sweep.get("tols", [base.schmidt_tol])
    for name, values in (("dts", dts), ("tols", tols)):
        if not isinstance(values, list) or not values:
            raise ConfigError(f"sweep.{name}", "expected a non-empty list of numbers")
    table = convergence_sweep(
        base,
        dts,
        tols,
        threshold=float(sweep.get("threshold", 0.05)),
        dt_ode=float(sweep.get("dt_ode", 0.001)),
        workers=int(sweep.get("workers", 1)),
    )
    for r in table.rows:
        if r.flagged:
            log.warning("dt=%g tol=%g deviates by %.3g (> %g)", r.dt, r.schmidt_tol,
                        r.max_abs_deviation, table.threshold)
    ctx.emit(table.to_csv(), {"monotone_in_dt": {str(k): v for k, v in table.monotone_in_dt.items()}})


COMMANDS = {
    "device": cmd_device,
    "propagate": cmd_propagate,
    "scatter": cmd_scatter,
    "normal-modes": cmd_normal_modes,
    "feedback": cmd_feedback,
    "benchmark": cmd_benchmark,
}


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="pointcouple", description=__doc__.splitlines()[0])
    parser.add_argument("--version", action="version", version=tool_version())
    sub = parser.add_subparsers(dest="command", required=True)

    def add(name: str, help_text: str, *flags: str) -> argparse.ArgumentParser:
        p = sub.add_parser(name, help=help_text)
        p.add_argument("--out", help="output file (default: stdout)")
        p.add_argument("--quiet", action="store_true", help="suppress progress messages")
        for flag in flags:
            p.add_argument(f"--{flag}")
        return p

    p = add("device", "convert between scattering and coupling matrices")
    p.add_argument("device_path", nargs="?", help="device JSON (same as --device)")
    p.add_argument("--device")
    mode = p.add_mutually_exclusive_group(required=True)
    mode.add_argument("--to-coupling", action="store_true")
    mode.add_argument("--to-scattering", action="store_true")

    add("propagate", "propagate a wavepacket through a device", "device", "state", "config")
    add("scatter", "scatter a Fock state", "device", "state")
    add("normal-modes", "tabulate normal-mode field profiles", "device", "omega", "positions", "offsets")
    add("feedback", "emitter-mirror feedback simulation", "config")
    add("benchmark", "MPS versus delay-equation convergence table", "config", "sweep")
    return parser


def dispatch(argv: Sequence[str] | None = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return 2 if exc.code else 0
    if args.command == "device" and args.device is None:
        args.device = args.device_path
    logging.basicConfig(
        level=logging.WARNING if args.quiet else logging.INFO,
        format="%(name)s: %(message)s",
        stream=sys.stderr,
        force=True,
    )
    ctx = _Context(args)
    try:
        COMMANDS[args.command](args, ctx)
    except ConfigError as exc:
        print(f"pointcouple {args.command}: invalid input: {exc}", file=sys.stderr)
        return 2
    except (PointCoupleError, ArithmeticError, ValueError, OSError) as exc:
        print(f"pointcouple {args.command}: error: {exc}", file=sys.stderr)
        return 1
    return 0


def main() -> None:
    sys.exit(dispatch())


if __name__ == "__main__":
    main()
