"""JSON file formats for pulses, scattering functions, frame reports and designs."""

from __future__ import annotations

import json
import math
from pathlib import Path

import numpy as np

from .channel import ScatteringFunction
from .frames import FrameReport
from .tfcore import Pulse


class FormatError(ValueError):
    """A file does not follow the expected JSON layout."""


def _load(path) -> object:
    path = Path(path)
    try:
        text = path.read_text()
    except OSError as exc:
        raise FormatError(f"{path}: cannot read ({exc.strerror})") from None
    try:
        return json.loads(text)
    except json.JSONDecodeError as exc:
        raise FormatError(f"{path}: invalid JSON at line {exc.lineno} column {exc.colno}: {exc.msg}") from None


def _dump(obj, path) -> None:
    Path(path).write_text(json.dumps(obj, indent=1, allow_nan=True) + "\n")


def pulse_to_json(p: Pulse) -> dict:
    return {"L": p.L, "label": p.label,
            "samples": [[float(z.real), float(z.imag)] for z in p.samples]}


def pulse_from_json(obj, where: str = "pulse") -> Pulse:
    if not isinstance(obj, dict) or not {"L", "samples"} <= obj.keys():
        raise FormatError(f"{where}: expected an object with 'L' and 'samples'")
    try:
        arr = np.asarray(obj["samples"], dtype=float)
        L = int(obj["L"])
    except (TypeError, ValueError) as exc:
        raise FormatError(f"{where}: malformed samples ({exc})") from None
    if arr.ndim != 2 or arr.shape[1] != 2:
        raise FormatError(f"{where}: samples must be a list of [re, im] pairs")
    if arr.shape[0] != L:
        raise FormatError(f"{where}: 'L' is {L} but {arr.shape[0]} samples given")
    x = arr[:, 0] + 1j * arr[:, 1]
    # decimal round trip can move the norm by a few ulps
    if abs(np.linalg.norm(x) - 1.0) > 1e-9:
        raise FormatError(f"{where}: pulse is not unit norm ({np.linalg.norm(x)!r})")
    return Pulse(x, str(obj.get("label", "")), normalize=True)


def write_pulse(p: Pulse, path) -> None:
    _dump(pulse_to_json(p), path)


def read_pulse(path) -> Pulse:
    return pulse_from_json(_load(path), str(path))


def scattering_to_json(C: ScatteringFunction) -> dict:
    return {"L": C.L, "atoms": [{"tau": int(t), "nu": int(n), "weight": float(w)}
                                for t, n, w in zip(C.taus, C.nus, C.weights)]}


def scattering_from_json(obj, where: str = "scattering") -> ScatteringFunction:
    if not isinstance(obj, dict) or not {"L", "atoms"} <= obj.keys():
        raise FormatError(f"{where}: expected an object with 'L' and 'atoms'")
    try:
        atoms = [(a["tau"], a["nu"], a["weight"]) for a in obj["atoms"]]
        return ScatteringFunction.from_atoms(int(obj["L"]), atoms)
    except (KeyError, TypeError) as exc:
        raise FormatError(f"{where}: malformed atom list ({exc})") from None
    except ValueError as exc:
        raise FormatError(f"{where}: {exc}") from None


def write_scattering(C: ScatteringFunction, path) -> None:
    _dump(scattering_to_json(C), path)


def read_scattering(path) -> ScatteringFunction:
    return scattering_from_json(_load(path), str(path))


def frame_report_from_json(obj) -> FrameReport:
    return FrameReport(float(obj["A"]), float(obj["B"]), float(obj["epsilon"]),
                       bool(obj["is_frame"]), bool(obj["is_tight"]))


def json_safe(x):
    """Replace non-finite floats by strings so the output is strict JSON."""
    if isinstance(x, float) and not math.isfinite(x):
        return "inf" if x > 0 else ("-inf" if x < 0 else "nan")
    if isinstance(x, dict):
        return {k: json_safe(v) for k, v in x.items()}
    if isinstance(x, (list, tuple)):
        return [json_safe(v) for v in x]
    return x


def write_json(obj, path) -> None:
    Path(path).write_text(json.dumps(json_safe(obj), indent=1) + "\n")
