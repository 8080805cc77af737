"""
Curve specification files
=========================

A curve is described by a ``[curve]`` table::

    [curve]
    kind = "circle"        # radius, center
    kind = "torus_knot"    # N, M, R, r
    kind = "tuned_writhe"  # target (float or "p/q")
    kind = "fourier"       # constant, cos, sin (rows of 3 numbers per harmonic)

Sampled curves export to CSV with columns ``s,x,y,z,tx,ty,tz``.
"""
from __future__ import annotations

import io
from fractions import Fraction

import numpy as np

try:
    import tomllib
except ModuleNotFoundError:  # Python < 3.11
    import tomli as tomllib

from .curves import (
    ArcLoop, FourierLoop, GeometryError, arclength_resample, make_circle, make_torus_knot,
    tune_writhe,
)

__all__ = ["CurveSpecError", "parse_curve_spec", "load_curve_spec", "curve_from_spec",
           "dump_curve_spec", "fourier_spec", "samples_csv"]


class CurveSpecError(ValueError):
    """Malformed or inconsistent curve specification."""


def parse_curve_spec(text: str) -> dict:
    try:
        data = tomllib.loads(text)
    except tomllib.TOMLDecodeError as exc:
        raise CurveSpecError(f"malformed TOML: {exc}") from exc
    if "curve" not in data or not isinstance(data["curve"], dict):
        raise CurveSpecError("missing [curve] table")
    return data


def load_curve_spec(path) -> dict:
    with open(path, "rb") as fh:
        return parse_curve_spec(fh.read().decode("utf-8"))


def _vector(value, name, length=3):
    arr = np.asarray(value, dtype=float)
    if arr.shape != (length,):
        raise CurveSpecError(f"{name} must have {length} entries")
    return arr


def curve_from_spec(spec: dict, nodes: int = 512) -> ArcLoop:
    """Build the resampled curve described by the ``[curve]`` table."""
    c = spec["curve"] if "curve" in spec else spec
    kind = c.get("kind")
    try:
        if kind == "circle":
            loop = make_circle(float(c.get("radius", 1.0)), _vector(c.get("center", [0, 0, 0]), "center"))
            return arclength_resample(loop, nodes)
        if kind == "torus_knot":
            loop = make_torus_knot(int(c["N"]), int(c["M"]), float(c.get("R", 4.0)), float(c.get("r", 1.0)))
            return arclength_resample(loop, nodes)
        if kind == "tuned_writhe":
            target = c["target"]
            target = float(Fraction(target)) if isinstance(target, str) else float(target)
            return tune_writhe(target, n=nodes)
        if kind == "fourier":
            cos = np.asarray(c["cos"], dtype=float)
            sin = np.asarray(c["sin"], dtype=float)
            loop = FourierLoop(_vector(c.get("constant", [0, 0, 0]), "constant"), cos, sin)
            return arclength_resample(loop, nodes)
    except KeyError as exc:
        raise CurveSpecError(f"curve kind {kind!r} needs parameter {exc.args[0]!r}") from exc
    except GeometryError as exc:
        raise CurveSpecError(str(exc)) from exc
    raise CurveSpecError(f"unknown curve kind {kind!r}")


def _fmt(x) -> str:
    if isinstance(x, str):
        return '"' + x.replace("\\", "\\\\").replace('"', '\\"') + '"'
    if isinstance(x, bool):
        return "true" if x else "false"
    if isinstance(x, (int, np.integer)):
        return str(int(x))
    return repr(float(x))


def _fmt_value(v) -> str:
    if isinstance(v, (list, tuple, np.ndarray)):
        return "[" + ", ".join(_fmt_value(u) for u in v) + "]"
    return _fmt(v)


def dump_curve_spec(table: dict) -> str:
    """Serialise a ``[curve]`` table; floats use their shortest round-trip form."""
    lines = ["[curve]"]
    for key, value in table.items():
        if isinstance(value, np.ndarray):
            value = value.tolist()
        lines.append(f"{key} = {_fmt_value(value)}")
    return "\n".join(lines) + "\n"


def fourier_spec(loop: FourierLoop) -> dict:
    return {"kind": "fourier", "constant": loop.constant.tolist(),
            "cos": loop.cos_coeffs.tolist(), "sin": loop.sin_coeffs.tolist()}


def samples_csv(curve: ArcLoop) -> str:
    buf = io.StringIO()
    buf.write("s,x,y,z,tx,ty,tz\n")
    for s, p, t in zip(curve.s_nodes, curve.position, curve.d1):
        buf.write(",".join(repr(float(v)) for v in (s, *p, *t)) + "\n")
    return buf.getvalue()
