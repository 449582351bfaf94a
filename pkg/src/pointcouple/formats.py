"""JSON and CSV formats shared by the command-line tools.

Complex numbers are written as {"re": float, "im": float}. Every reader raises
ConfigError naming the offending field, so callers can report it directly.
"""
from __future__ import annotations

import csv
import io
import json
import math
import os
import tempfile
from pathlib import Path
from typing import Any

import numpy as np

from .device_algebra import CouplingMatrix, UnitaryScatteringMatrix
from .errors import ConfigError
from .fock_scattering import FockWavepacketState, canonical
from .normal_modes import FieldProfileSample
from .wave_propagation import PropagationWindow, Wavepacket


def complex_to_json(z: complex) -> dict:
    z = complex(z)
    return {"re": z.real, "im": z.imag}


def complex_from_json(d: Any, where: str) -> complex:
    if isinstance(d, (int, float)) and not isinstance(d, bool):
        return complex(d)
    if not isinstance(d, dict) or set(d) - {"re", "im"} or "re" not in d:
        raise ConfigError(where, 'expected {"re": float, "im": float}')
    try:
        return complex(float(d["re"]), float(d.get("im", 0.0)))
    except (TypeError, ValueError):
        raise ConfigError(where, "re/im must be numbers") from None


def matrix_to_json(m: np.ndarray) -> list:
    return [[complex_to_json(z) for z in row] for row in np.asarray(m)]


def matrix_from_json(rows: Any, where: str) -> np.ndarray:
    if not isinstance(rows, list) or not rows or not all(isinstance(r, list) for r in rows):
        raise ConfigError(where, "expected a non-empty list of rows")
    return np.array(
        [[complex_from_json(z, f"{where}[{i}][{j}]") for j, z in enumerate(row)]
         for i, row in enumerate(rows)],
        dtype=complex,
    )


def load_json(path: str | os.PathLike) -> Any:
    p = Path(path)
    try:
        text = p.read_text()
    except OSError as exc:
        raise ConfigError(str(p), f"cannot read file ({exc.strerror or exc})") from None
    try:
        return json.loads(text)
    except json.JSONDecodeError as exc:
        raise ConfigError(str(p), f"invalid JSON: {exc}") from None


def dumps(obj: Any) -> str:
    return json.dumps(obj, indent=2, sort_keys=True) + "\n"


def atomic_write(path: str | os.PathLike, text: str) -> None:
    """Write via a temporary file in the target directory plus rename."""
    p = Path(path)
    p.parent.mkdir(parents=True, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=p.parent, prefix=f".{p.name}.", suffix=".tmp")
    try:
        with os.fdopen(fd, "w", newline="") as fh:
            fh.write(text)
        os.replace(tmp, p)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


# devices ---------------------------------------------------------------------


def device_from_json(d: Any) -> UnitaryScatteringMatrix | CouplingMatrix:
    if not isinstance(d, dict):
        raise ConfigError("device", "expected a JSON object")
    present = [k for k in ("scattering_matrix", "coupling_matrix") if k in d]
    if len(present) != 1:
        raise ConfigError("device", "exactly one of scattering_matrix / coupling_matrix is required")
    unknown = set(d) - {"n_modes", "scattering_matrix", "coupling_matrix"}
    if unknown:
        raise ConfigError(sorted(unknown)[0], "unknown device field")
    key = present[0]
    m = matrix_from_json(d[key], key)
    if m.ndim != 2 or m.shape[0] != m.shape[1]:
        raise ConfigError(key, "matrix must be square")
    if "n_modes" in d and d["n_modes"] != m.shape[0]:
        raise ConfigError("n_modes", f"is {d['n_modes']} but the matrix is {m.shape[0]} x {m.shape[0]}")
    try:
        return UnitaryScatteringMatrix(m) if key == "scattering_matrix" else CouplingMatrix(m)
    except ValueError as exc:
        raise ConfigError(key, str(exc)) from None


def device_to_json(dev: UnitaryScatteringMatrix | CouplingMatrix, clean: float = 0.0) -> dict:
    """Serialize a device; real/imaginary parts below `clean` are written as 0."""
    key = "scattering_matrix" if isinstance(dev, UnitaryScatteringMatrix) else "coupling_matrix"
    m = np.array(dev.entries)
    if clean > 0:
        m = np.where(np.abs(m.real) < clean, 0.0, m.real) + 1j * np.where(np.abs(m.imag) < clean, 0.0, m.imag)
    return {"n_modes": dev.n_modes, key: matrix_to_json(m)}


# wavepackets -----------------------------------------------------------------


def wavepacket_to_json(w: Wavepacket) -> dict:
    return {
        "x_min": w.x_min,
        "dx": w.dx,
        "device_offsets": [float(x) for x in w.device_offsets],
        "envelopes": matrix_to_json(w.envelopes),
    }


def wavepacket_from_json(d: Any) -> Wavepacket:
    if not isinstance(d, dict):
        raise ConfigError("wavepacket", "expected a JSON object")
    for key in ("x_min", "dx", "envelopes"):
        if key not in d:
            raise ConfigError(key, "required wavepacket field")
    unknown = set(d) - {"x_min", "dx", "envelopes", "device_offsets"}
    if unknown:
        raise ConfigError(sorted(unknown)[0], "unknown wavepacket field")
    env = matrix_from_json(d["envelopes"], "envelopes")
    try:
        return Wavepacket(float(d["x_min"]), float(d["dx"]), env, d.get("device_offsets"))
    except (TypeError, ValueError) as exc:
        raise ConfigError("wavepacket", str(exc)) from None


def window_from_json(d: Any) -> PropagationWindow:
    if not isinstance(d, dict) or "tau" not in d:
        raise ConfigError("tau", "propagation config needs a 'tau' entry")
    unknown = set(d) - {"t0", "tau"}
    if unknown:
        raise ConfigError(sorted(unknown)[0], "unknown propagation field")
    try:
        return PropagationWindow(float(d.get("t0", 0.0)), float(d["tau"]))
    except (TypeError, ValueError) as exc:
        raise ConfigError("tau", str(exc)) from None


# Fock states -----------------------------------------------------------------


def fock_from_json(d: Any, mode_count: int | None = None) -> FockWavepacketState:
    """Parse the occupation-number format.

    `photons` lists the single-photon slots; each term's `occupancy[i]` is the
    number of photons in slot i and `amp` the coefficient of the normalized
    occupation-basis state.
    """
    if not isinstance(d, dict) or "photons" not in d or "terms" not in d:
        raise ConfigError("state", "expected an object with 'photons' and 'terms'")
    unknown = set(d) - {"photons", "terms", "n_modes"}
    if unknown:
        raise ConfigError(sorted(unknown)[0], "unknown state field")
    slots = []
    for i, p in enumerate(d["photons"]):
        where = f"photons[{i}]"
        if not isinstance(p, dict) or set(p) != {"mode", "freq"}:
            raise ConfigError(where, 'expected {"mode": int, "freq": float}')
        if not isinstance(p["mode"], int) or isinstance(p["mode"], bool):
            raise ConfigError(f"{where}.mode", "must be an integer")
        slots.append((p["mode"], float(p["freq"])))
    if len(set(slots)) != len(slots):
        raise ConfigError("photons", "slots must be distinct")
    n = d.get("n_modes", mode_count)
    if n is None:
        n = max((m for m, _ in slots), default=-1) + 1
    if mode_count is not None and n != mode_count:
        raise ConfigError("n_modes", f"state has {n} modes, device has {mode_count}")
    coeffs = {}
    for i, term in enumerate(d["terms"]):
        where = f"terms[{i}]"
        if not isinstance(term, dict) or set(term) != {"occupancy", "amp"}:
            raise ConfigError(where, "expected {'occupancy': [...], 'amp': {...}}")
        occ = term["occupancy"]
        if (not isinstance(occ, list) or len(occ) != len(slots)
                or not all(isinstance(o, int) and o >= 0 for o in occ)):
            raise ConfigError(f"{where}.occupancy", f"expected {len(slots)} nonnegative integers")
        key = canonical(s for s, o in zip(slots, occ) for _ in range(o))
        if key in coeffs:
            raise ConfigError(f"{where}.occupancy", "duplicate occupation pattern")
        coeffs[key] = complex_from_json(term["amp"], f"{where}.amp")
    if not coeffs:
        raise ConfigError("terms", "at least one term is required")
    try:
        state = FockWavepacketState.from_fock(n, coeffs)
    except (ValueError, KeyError) as exc:
        raise ConfigError("state", str(exc)) from None
    if state.norm_squared() == 0:
        raise ConfigError("terms", "state has zero norm")
    return state


def fock_to_json(state: FockWavepacketState, drop_below: float = 0.0) -> dict:
    slots = [(m, w) for w in state.frequency_labels for m in range(state.mode_count)]
    index = {s: i for i, s in enumerate(slots)}
    terms = []
    for key in sorted(state.amplitudes):
        amp = state.fock_amplitude(key)
        if abs(amp) <= drop_below:
            continue
        occ = [0] * len(slots)
        for slot in key:
            occ[index[slot]] += 1
        terms.append({"occupancy": occ, "amp": complex_to_json(amp)})
    return {
        "n_modes": state.mode_count,
        "photons": [{"mode": m, "freq": w} for m, w in slots],
        "terms": terms,
    }


# CSV -------------------------------------------------------------------------


def profile_csv(samples: list[FieldProfileSample]) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(["normal_index", "mode", "x", "omega", "re", "im"])
    for s in samples:
        writer.writerow([s.normal_index, s.mode, f"{s.x:.17g}", f"{s.omega:.17g}",
                         f"{s.amplitude.real:.17g}", f"{s.amplitude.imag:.17g}"])
    return buf.getvalue()


def parse_float_list(text: str, where: str) -> list[float]:
    try:
        values = [float(x) for x in text.split(",") if x.strip()]
    except ValueError:
        raise ConfigError(where, f"expected comma-separated numbers, got {text!r}") from None
    if not values or not all(math.isfinite(v) for v in values):
        raise ConfigError(where, "expected at least one finite number")
    return values
