"""
Command-line front end
======================

``knotflux <command> [options]`` runs one computation and prints a JSON
report with the tolerances and node counts used, the result payload and a
pass/fail entry per internal check.

Exit codes: 0 when every check passes, 2 when a check fails (the report is
still written), 1 for usage errors and violated preconditions.

Reports are byte-deterministic for fixed arguments: keys are sorted and
floats use their shortest round-trip form.  Wall time is the one
nondeterministic field, so it is only added (and echoed on standard error)
when ``--timing`` is given.
"""
from __future__ import annotations

import argparse
import hashlib
import json
import math
import os
import sys
import time
from fractions import Fraction

import numpy as np

from . import cables, curve_io, magnetics, model2d, specflow
from .cables import _ordered_map
from .curves import (
    GeometryError, TubularPoint, closed_parallel_frame, reach_estimate, rotated_frame,
    tubular_map, zero_linking_frame,
)
from .quadrature import QuadConfig, QuadratureError, default_config

__all__ = ["run", "main", "UsageError"]

COMMANDS = ("curve", "frame", "link", "writhe", "cwf", "bs", "expand", "cable", "model2d",
            "dnm", "sf", "critical", "torus-diagram")


class UsageError(Exception):
    """Bad command line or violated precondition (exit code 1)."""


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(message)


# ---------------------------------------------------------------------------
# Parsing helpers
# ---------------------------------------------------------------------------

def _floats(text: str) -> list[float]:
    try:
        return [float(v) for v in text.split(",") if v.strip()]
    except ValueError as exc:
        raise argparse.ArgumentTypeError(f"expected comma-separated numbers, got {text!r}") from exc


def _pair(text: str) -> specflow.CablePair:
    try:
        n, m = (int(v) for v in text.split(","))
        return specflow.CablePair(n, m)
    except ValueError as exc:
        raise argparse.ArgumentTypeError(f"expected coprime N,M with N >= 2, got {text!r}: {exc}") from exc


def _point(text: str) -> list[float]:
    vals = _floats(text)
    if len(vals) != 3:
        raise argparse.ArgumentTypeError("a point needs three coordinates")
    return vals


def _window(text: str) -> tuple[int, int]:
    try:
        a, b = (int(v) for v in text.split(","))
    except ValueError as exc:
        raise argparse.ArgumentTypeError("expected integers lo,hi") from exc
    if a > b:
        raise argparse.ArgumentTypeError("window must satisfy lo <= hi")
    return a, b


def _jsonable(obj):
    if isinstance(obj, Fraction):
        return str(obj)
    if isinstance(obj, (np.floating, np.integer, np.bool_)):
        return obj.item()
    if isinstance(obj, np.ndarray):
        return obj.tolist()
    if isinstance(obj, (set, frozenset, tuple)):
        return list(obj)
    raise TypeError(f"cannot serialise {type(obj).__name__}")


def _clean(obj):
    """Replace non-finite floats with strings so the JSON stays standard."""
    if isinstance(obj, dict):
        return {str(k): _clean(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_clean(v) for v in obj]
    if isinstance(obj, (float, np.floating)):
        x = float(obj)
        return x if math.isfinite(x) else repr(x)
    if isinstance(obj, np.ndarray):
        return _clean(obj.tolist())
    return obj


def _check(name: str, value, passed: bool, tol=None) -> dict:
    return {"name": name, "value": value, "tolerance": tol, "pass": bool(passed)}


# ---------------------------------------------------------------------------
# Shared option groups
# ---------------------------------------------------------------------------

def _add_common(p: argparse.ArgumentParser):
    p.add_argument("--rel-tol", type=float, default=None, help="relative tolerance of adaptive rules")
    p.add_argument("--nodes", type=int, default=None, help="curve resampling node count")
    p.add_argument("--jobs", type=int, default=1, help="worker threads for parameter sweeps")
    p.add_argument("--json", dest="json_path", default=None, help="also write the report here")
    p.add_argument("--csv", dest="csv_path", default=None, help="write per-sample series here")
    p.add_argument("--svg", dest="svg_path", default=None, help="write a plot here")
    p.add_argument("--timing", action="store_true", help="print wall time on standard error")


def _add_frame(p):
    p.add_argument("--frame", choices=("zero", "parallel"), default="zero")
    p.add_argument("--turns", type=int, default=0, help="extra full rotations of the frame")


def _build_parser() -> _Parser:
    parser = _Parser(prog="knotflux", description="Magnetic knot geometry and spectral-flow toolkit")
    sub = parser.add_subparsers(dest="command", parser_class=_Parser)
    sub.required = True

    p = sub.add_parser("curve", help="resample a curve and report its geometry")
    p.add_argument("--curve", required=True)
    p.add_argument("--write-toml", default=None, help="write the curve as a Fourier spec")
    _add_common(p)

    p = sub.add_parser("frame", help="moving frame along a curve")
    p.add_argument("--curve", required=True)
    _add_frame(p)
    _add_common(p)

    p = sub.add_parser("link", help="Gauss linking number of two curves")
    p.add_argument("--curve", required=True)
    p.add_argument("--other", required=True)
    _add_common(p)

    p = sub.add_parser("writhe", help="writhe of a curve")
    p.add_argument("--curve", required=True)
    _add_common(p)

    p = sub.add_parser("cwf", help="linking = twist + writhe for a framed curve")
    p.add_argument("--curve", required=True)
    _add_frame(p)
    _add_common(p)

    p = sub.add_parser("bs", help="Biot-Savart field at points and circulation along a loop")
    p.add_argument("--curve", required=True)
    p.add_argument("--point", type=_point, action="append", default=[])
    p.add_argument("--other", default=None, help="loop for the circulation check")
    _add_common(p)

    p = sub.add_parser("expand", help="near-curve expansion residuals")
    p.add_argument("--curve", required=True)
    p.add_argument("--node", type=int, default=0, help="node index of the base point")
    p.add_argument("--theta", type=float, default=0.3)
    p.add_argument("--rho-list", type=_floats, default=None,
                   help="distances as fractions of the length (default 1e-3..1e-2)")
    _add_common(p)

    p = sub.add_parser("cable", help="adapted cable identities and writhe convergence")
    p.add_argument("--cable", default=None, help="TOML file with a [cable] table")
    p.add_argument("--curve", default=None, help="base curve (default: writhe-tuned to M/N)")
    p.add_argument("--pair", type=_pair, default=None)
    p.add_argument("--eta-list", type=_floats, default=None,
                   help="cable radii (default: reach/50..reach/5)")
    p.add_argument("--gauge", action="store_true", help="also run the gauge circulation check")
    _add_common(p)

    p = sub.add_parser("model2d", help="planar solenoid norms and Bessel limit")
    p.add_argument("--n", type=int, required=True)
    p.add_argument("--alpha", type=float, required=True)
    p.add_argument("--k", type=int, default=0)
    p.add_argument("--eta-list", type=_floats, default=None)
    _add_common(p)

    p = sub.add_parser("dnm", help="delta(N,M), D(N,M) and the comb identity")
    p.add_argument("--pair", type=_pair, required=True)
    _add_common(p)

    p = sub.add_parser("sf", help="spectral flow of cable classes")
    p.add_argument("--pair", type=_pair, default=None)
    p.add_argument("--tower", default=None, help='cable tower, e.g. "2,3;3,5"')
    p.add_argument("--base-sf", type=int, default=0)
    p.add_argument("--writhe", type=float, default=None)
    _add_common(p)

    p = sub.add_parser("critical", help="critical eigenvalues of the collapsed family")
    p.add_argument("--pair", type=_pair, required=True)
    p.add_argument("--t", type=float, default=1.0)
    p.add_argument("--alpha-a", type=float, default=0.0)
    p.add_argument("--l-tilde", type=float, default=2 * math.pi)
    p.add_argument("--parity", choices=("even", "odd"), default=None)
    p.add_argument("--m-window", type=_window, default=(-5, 5))
    _add_common(p)

    p = sub.add_parser("torus-diagram", help="effective flux torus with critical points")
    p.add_argument("--pair", type=_pair, required=True)
    _add_common(p)
    return parser


# ---------------------------------------------------------------------------
# Context
# ---------------------------------------------------------------------------

class _Context:
    def __init__(self, args, digest):
        self.args = args
        self.digest = digest
        base = default_config()
        rel = args.rel_tol if args.rel_tol is not None else base.rel_tol
        nodes = args.nodes if args.nodes is not None else base.base_nodes
        if not rel > 0:
            raise UsageError("--rel-tol must be positive")
        if nodes < 64 or nodes % 2:
            raise UsageError("--nodes must be an even number >= 64")
        self.cfg = QuadConfig(rel_tol=rel, abs_tol=base.abs_tol, max_depth=base.max_depth, base_nodes=nodes)
        self.nodes = nodes
        self.csv = None
        self.svg = None

    def curve(self, path):
        return curve_io.curve_from_spec(curve_io.load_curve_spec(path), self.nodes)

    def frame(self, curve):
        a = self.args
        fr = zero_linking_frame(curve) if a.frame == "zero" else closed_parallel_frame(curve)
        return rotated_frame(fr, a.turns) if a.turns else fr

    def tolerances(self):
        return {"rel_tol": self.cfg.rel_tol, "abs_tol": self.cfg.abs_tol,
                "max_depth": self.cfg.max_depth, "nodes": self.nodes}


def _digest(argv, args) -> str:
    h = hashlib.sha256()
    h.update("\0".join(argv).encode())
    for key in ("curve", "other", "cable"):
        path = getattr(args, key, None)
        if path and os.path.exists(path):
            with open(path, "rb") as fh:
                h.update(fh.read())
    return h.hexdigest()


# ---------------------------------------------------------------------------
# SVG helpers
# ---------------------------------------------------------------------------

def _svg(width, height, body) -> str:
    return (f'<svg xmlns="http://www.w3.org/2000/svg" width="{width}" height="{height}" '
            f'viewBox="0 0 {width} {height}">\n<rect width="100%" height="100%" fill="white"/>\n'
            + "".join(body) + "</svg>\n")


def _polyline(points, color="black", width=1.5, closed=False) -> str:
    pts = " ".join(f"{x:.3f},{y:.3f}" for x, y in points)
    tag = "polygon" if closed else "polyline"
    return f'<{tag} points="{pts}" fill="none" stroke="{color}" stroke-width="{width}"/>\n'


def _circle(x, y, r, fill="none", stroke="black") -> str:
    return f'<circle cx="{x:.3f}" cy="{y:.3f}" r="{r:.3f}" fill="{fill}" stroke="{stroke}"/>\n'


def _text(x, y, s, size=12) -> str:
    return f'<text x="{x:.3f}" y="{y:.3f}" font-size="{size}" font-family="sans-serif">{s}</text>\n'


class _Box:
    """Affine map of a data rectangle onto the drawing area."""

    def __init__(self, xlim, ylim, size=400, pad=40):
        self.xlim, self.ylim, self.size, self.pad = xlim, ylim, size, pad

    def __call__(self, x, y):
        (x0, x1), (y0, y1) = self.xlim, self.ylim
        w = self.size - 2 * self.pad
        return (self.pad + (x - x0) / (x1 - x0) * w, self.size - self.pad - (y - y0) / (y1 - y0) * w)


def _square_limits(xy, margin=0.05):
    lo, hi = xy.min(axis=0), xy.max(axis=0)
    c = 0.5 * (lo + hi)
    half = 0.5 * float(np.max(hi - lo)) * (1 + margin) or 1.0
    return (c[0] - half, c[0] + half), (c[1] - half, c[1] + half)


def _curve_svg(curve) -> str:
    xy = curve.position[:, :2]
    box = _Box(*_square_limits(xy))
    pts = [box(x, y) for x, y in xy]
    return _svg(400, 400, [_polyline(pts, closed=True), _text(10, 20, "xy projection")])


def _loglog_svg(xs, ys, slope) -> str:
    lx, ly = np.log10(xs), np.log10(ys)
    box = _Box((lx.min() - 0.1, lx.max() + 0.1), (ly.min() - 0.2, ly.max() + 0.2))
    body = [_polyline([box(a, b) for a, b in zip(lx, ly)], "steelblue")]
    body += [_circle(*box(a, b), 3, "steelblue", "steelblue") for a, b in zip(lx, ly)]
    body.append(_text(50, 30, f"fitted slope {slope:.4f}"))
    return _svg(400, 400, body)


def _cassini_curves(N, eta, levels, samples=720):
    """Polar branches of ``|w^N - eta^N| = q`` for each level ``q``."""
    out = []
    phi = 2 * math.pi * np.arange(samples + 1) / samples
    bN = eta**N
    for q in levels:
        disc = q * q - (bN * np.sin(N * phi)) ** 2
        for sign in (1.0, -1.0):
            rN = bN * np.cos(N * phi) + sign * np.sqrt(np.maximum(disc, 0.0))
            ok = (disc >= 0) & (rN > 0)
            r = np.where(ok, np.abs(rN) ** (1.0 / N), np.nan)
            out.append(np.stack([r * np.cos(phi), r * np.sin(phi)], axis=1))
    return out


def _cassini_svg(N, eta, markers, title) -> str:
    lim = 2.2 * eta
    box = _Box((-lim, lim), (-lim, lim))
    body = []
    for branch in _cassini_curves(N, eta, [eta**N * f for f in (0.3, 0.8, 1.0, 1.5, 3.0)]):
        seg = []
        for x, y in branch:
            if np.isnan(x):
                if len(seg) > 1:
                    body.append(_polyline(seg, "gray", 1.0))
                seg = []
            else:
                seg.append(box(x, y))
        if len(seg) > 1:
            body.append(_polyline(seg, "gray", 1.0))
    for x, y in markers:
        body.append(_circle(*box(x, y), 4, "crimson", "crimson"))
    body.append(_text(10, 20, title))
    return _svg(400, 400, body)


# ---------------------------------------------------------------------------
# Commands
# ---------------------------------------------------------------------------

def _cmd_curve(ctx):
    a = ctx.args
    spec = curve_io.load_curve_spec(a.curve)
    curve = curve_io.curve_from_spec(spec, ctx.nodes)
    chk = curve.check()
    result = {"kind": spec["curve"].get("kind"), "length": curve.length, "nodes": curve.n,
              "harmonics": curve.loop.harmonics, "reach": reach_estimate(curve), "residuals": chk}
    checks = [_check(k, v, v < 1e-8, 1e-8) for k, v in sorted(chk.items())]
    if a.write_toml:
        with open(a.write_toml, "w", encoding="utf-8") as fh:
            fh.write(curve_io.dump_curve_spec(curve_io.fourier_spec(curve.loop)))
    ctx.csv = curve_io.samples_csv(curve)
    ctx.svg = _curve_svg(curve)
    return result, checks


def _cmd_frame(ctx):
    curve = ctx.curve(ctx.args.curve)
    fr = ctx.frame(curve)
    chk = fr.check()
    wr = magnetics.writhe(curve)
    tw = magnetics.twist(curve, fr)
    result = {"frame": ctx.args.frame, "turns": ctx.args.turns, "rate": fr.rate,
              "total_torsion": fr.total_torsion, "twist": tw, "writhe": wr,
              "pushoff_link": fr.pushoff_link, "residuals": chk}
    checks = [_check(k, v, v < 1e-8, 1e-8) for k, v in sorted(chk.items())]
    if ctx.args.frame == "zero" and not ctx.args.turns:
        val = abs(fr.total_torsion + 2 * math.pi * wr)
        checks.append(_check("torsion_plus_writhe", val, val < 1e-6, 1e-6))
    rows = ["s,Sx,Sy,Sz,Nx,Ny,Nz,tau,kappa_g,kappa_n"]
    for i in range(curve.n):
        vals = [curve.s_nodes[i], *fr.S[i], *fr.N[i], fr.tau[i], fr.kappa_g[i], fr.kappa_n[i]]
        rows.append(",".join(repr(float(v)) for v in vals))
    ctx.csv = "\n".join(rows) + "\n"
    return result, checks


def _cmd_link(ctx):
    c1 = ctx.curve(ctx.args.curve)
    c2 = ctx.curve(ctx.args.other)
    res = magnetics.linking_number(c1, c2, check=False)
    result = {"link": res.value, "raw": res.raw, "residual": res.residual, "nodes": list(res.nodes)}
    return result, [_check("integer_residual", res.residual, res.residual < 1e-5, 1e-5)]


def _cmd_writhe(ctx):
    curve = ctx.curve(ctx.args.curve)
    wr = magnetics.writhe(curve)
    return {"writhe": wr, "nodes": curve.n, "length": curve.length}, [
        _check("finite", wr, math.isfinite(wr))]


def _cmd_cwf(ctx):
    curve = ctx.curve(ctx.args.curve)
    fr = ctx.frame(curve)
    res = magnetics.cwf_check(curve, fr)
    result = dict(res, frame=ctx.args.frame, turns=ctx.args.turns)
    return result, [_check("link_minus_twist_writhe", res["residual"], res["residual"] < 1e-6, 1e-6)]


def _cmd_bs(ctx):
    a = ctx.args
    curve = ctx.curve(a.curve)
    fld = magnetics.BiotSavartField(curve, 1.0, ctx.cfg)
    fields = _ordered_map(lambda p: magnetics.biot_savart(fld, np.array(p)).tolist(), a.point, a.jobs)
    result = {"points": a.point, "field": fields}
    checks = []
    if a.other:
        loop = ctx.curve(a.other)
        circ = magnetics.circulation(fld, loop)
        lk = magnetics.linking_number(loop, curve).value
        result.update(circulation=circ, link=lk)
        checks.append(_check("circulation_minus_link", abs(circ - lk), abs(circ - lk) < 1e-5, 1e-5))
    return result, checks


def _cmd_expand(ctx):
    a = ctx.args
    curve = ctx.curve(a.curve)
    fr = zero_linking_frame(curve)
    if not 0 <= a.node < curve.n:
        raise UsageError("--node must index a curve node")
    s0 = float(curve.s_nodes[a.node])
    rho_frac = np.asarray(a.rho_list if a.rho_list else np.geomspace(1e-3, 1e-2, 5))
    rho = rho_frac * curve.length
    res = magnetics.expansion_slope(curve, fr, s0, a.theta, rho, ctx.cfg)
    fld = magnetics.BiotSavartField(curve, 1.0, ctx.cfg.tightened() if res["tightened"] else ctx.cfg)
    rows = ["rho,abs_A,abs_predicted,residual"]
    for r, resid in zip(rho, res["residuals"]):
        p = TubularPoint(s0, float(r), a.theta)
        field = magnetics.biot_savart(fld, tubular_map(curve, fr, p))
        pred = magnetics.near_field_predicted(curve, fr, p, fld.cfg)
        rows.append(",".join(repr(float(v)) for v in (r, np.linalg.norm(field), np.linalg.norm(pred), resid)))
    ctx.csv = "\n".join(rows) + "\n"
    ctx.svg = _loglog_svg(rho, np.array(res["residuals"]), res["slope"])
    result = dict(res, s0=s0, node=a.node, theta=a.theta, length=curve.length)
    return result, [_check("residual_slope", res["slope"], res["slope"] >= 0.9, 0.9)]


def _cable_inputs(ctx):
    a = ctx.args
    pair, etas, base_path, curve_table = a.pair, a.eta_list, a.curve, None
    if a.cable:
        with open(a.cable, "rb") as fh:
            try:
                data = curve_io.tomllib.loads(fh.read().decode("utf-8"))
            except curve_io.tomllib.TOMLDecodeError as exc:
                raise curve_io.CurveSpecError(f"malformed TOML: {exc}") from exc
        table = data.get("cable")
        if not isinstance(table, dict):
            raise curve_io.CurveSpecError("missing [cable] table")
        if pair is None and "N" in table:
            pair = specflow.CablePair(int(table["N"]), int(table["M"]))
        if etas is None and "eta_list" in table:
            etas = [float(v) for v in table["eta_list"]]
        if base_path is None and "base" in table:
            base_path = os.path.join(os.path.dirname(os.path.abspath(a.cable)), table["base"])
        if base_path is None and "curve" in data:
            curve_table = data
    if pair is None:
        raise UsageError("cable needs --pair or N, M in the cable file")
    if base_path:
        base = ctx.curve(base_path)
    elif curve_table:
        base = curve_io.curve_from_spec(curve_table, ctx.nodes)
    else:
        base = curve_io.curve_from_spec({"curve": {"kind": "tuned_writhe", "target": f"{pair.M}/{pair.N}"}},
                                        ctx.nodes)
    return pair, etas, base


def _cmd_cable(ctx):
    a = ctx.args
    pair, etas, base = _cable_inputs(ctx)
    N, M = pair.N, pair.M
    fr = zero_linking_frame(base)
    reach = reach_estimate(base)
    wr0 = magnetics.writhe(base)
    if etas is None:
        etas = np.geomspace(reach / 50, reach / 5, 4).tolist()

    def one(eta):
        cab = cables.build_adapted_cable(base, fr, N, M, eta, base_writhe=wr0, reach=reach)
        wr = magnetics.writhe(cab.curve)
        lk = magnetics.linking_number(base, cab.curve)
        return cab, dict(cab.checks, eta=eta, writhe=wr, link=lk.value, link_raw=lk.raw,
                         nodes=cab.curve.n, length=cab.curve.length)

    built = _ordered_map(one, etas, a.jobs)
    per_eta = [row for _, row in built]
    fit = cables.fit_writhe_remainder(etas, [r["writhe"] for r in per_eta], N * N * wr0)
    checks = []
    for r in per_eta:
        e = r["eta"]
        checks.append(_check(f"length_error[eta={e!r}]", r["length_error"], r["length_error"] < 1e-8, 1e-8))
        checks.append(_check(f"tangent_cross[eta={e!r}]", r["tangent_cross"], r["tangent_cross"] < 1e-8, 1e-8))
        checks.append(_check(f"link[eta={e!r}]", r["link"], r["link"] == M, 0))
    checks.append(_check("writhe_offset_error", fit["offset_error"], fit["offset_error"] < 1e-3, 1e-3))
    if max(etas) / min(etas) >= 10 * (1 - 1e-12):
        ex = fit["remainder_exponent"]
        checks.append(_check("writhe_remainder_exponent", ex, abs(ex - 1.0) <= 0.15, 0.15))
    result = {"pair": [N, M], "base_length": base.length, "base_writhe": wr0, "reach": reach,
              "cables": per_eta, "writhe_fit": fit}
    if a.gauge:
        cab = built[len(built) // 2][0]
        g = cables.cable_gauge_circulation_check(cab, cfg=ctx.cfg)
        result["gauge"] = dict(g, eta=cab.eta)
        checks.append(_check("gauge_residual", g["residual"], g["residual"] < 1e-4, 1e-4))
        checks.append(_check("theta_winding", g["winding"], g["winding"] == M, 0))
    cab = built[0][0]
    n = base.n
    strands = [cab.eta * np.array([cab.U[j * n] @ fr.S[0], cab.U[j * n] @ fr.N[0]]) for j in range(N)]
    # strands sit at angles -I0 + 2 pi k / N; the Cassinians are drawn in the rotated plane
    rot = np.exp(1j * cab.I0[0])
    markers = [((complex(*p) * rot).real, (complex(*p) * rot).imag) for p in strands]
    ctx.svg = _cassini_svg(N, cab.eta, markers, f"cross-section s=0, eta={cab.eta:.4g}")
    return result, checks


def _model2d_regime(N, alpha, k):
    margin = N * alpha - k
    if abs(margin - 1.0) < 1e-12:
        return "log"
    return "bounded" if margin < 1 else "power"


def _cmd_model2d(ctx):
    a = ctx.args
    N, alpha, k = a.n, a.alpha, a.k
    cfg0 = model2d.SolenoidConfig(N, 0.0, alpha)
    if not 0 <= k < N:
        raise UsageError("--k must lie in 0..N-1")
    etas = a.eta_list or np.geomspace(1e-4, 1e-2, 5).tolist()
    if min(etas) <= 0:
        raise UsageError("eta values must be positive")
    norms = model2d.g_norm_table(N, alpha, k, etas, a.jobs)
    slope, _ = magnetics.fit_loglog_slope(etas, norms)
    regime = _model2d_regime(N, alpha, k)
    expected = k + 1 - N * alpha if regime == "power" else 0.0
    result = {"N": N, "alpha": alpha, "k": k, "E": cfg0.E, "e": cfg0.e, "eta": etas, "norm": norms,
              "norm_at_zero": model2d.g_norm(cfg0, k), "exponent": slope, "regime": regime,
              "expected_exponent": expected}
    checks = []
    span = math.log10(max(etas) / min(etas))
    if span >= 1.5 - 1e-12:
        if regime == "power":
            checks.append(_check("divergence_exponent", slope, abs(slope - expected) <= 0.1, 0.1))
        elif regime == "bounded":
            checks.append(_check("bounded_exponent", slope, abs(slope) <= 0.1, 0.1))
        else:
            order = np.argsort(etas)
            sq = np.array(norms)[order] ** 2
            lg = np.log(1.0 / np.array(etas)[order])
            growth = np.diff(sq) / np.diff(lg)
            checks.append(_check("log_growth_positive", float(growth.min()), bool(np.all(growth > 0)), 0))
    if k == cfg0.E and cfg0.e > 1e-12:
        valid = [e for e in etas if 10 * e < 1]
        dist = model2d.limit_profile_distance(N, alpha, sorted(valid, reverse=True))
        result["limit_profile_distance"] = dist
        result["C_e"] = model2d.C_a(cfg0.e)
        ok = all(d2 <= 1.1 * d1 for d1, d2 in zip(dist, dist[1:]))
        checks.append(_check("limit_distance_nonincreasing", dist, ok, 0.1))
    rows = ["eta,norm,local_slope"]
    order = np.argsort(etas)
    se, sn = np.array(etas)[order], np.array(norms)[order]
    for i in range(len(se)):
        if len(se) > 1:
            j0, j1 = (i, i + 1) if i + 1 < len(se) else (i - 1, i)
            loc = math.log(sn[j1] / sn[j0]) / math.log(se[j1] / se[j0])
        else:
            loc = float("nan")
        rows.append(",".join(repr(float(v)) for v in (se[i], sn[i], loc)))
    ctx.csv = "\n".join(rows) + "\n"
    eta_plot = max(etas)
    markers = [(eta_plot * math.cos(2 * math.pi * j / N), eta_plot * math.sin(2 * math.pi * j / N))
               for j in range(N)]
    ctx.svg = _cassini_svg(N, eta_plot, markers, f"Cassinians, N={N}, eta={eta_plot:.3g}")
    return result, checks


def _pair_summary(pair):
    D = specflow.d_count(pair)
    comb = specflow.comb_identity(pair)
    crossings = specflow.homotopy_crossings(pair)
    out = {"pair": [pair.N, pair.M], "D": D, "delta": specflow.delta_nm(pair), "comb_identity": comb,
           "crossings": {"cable": crossings[0], "base": crossings[1]}}
    checks = [_check(f"comb_identity[{pair.N},{pair.M}]", comb, comb == 0, 0)]
    if pair.N > pair.M:
        closed = specflow.d_closed(pair)
        out["D_closed"] = closed
        checks.append(_check(f"D_closed[{pair.N},{pair.M}]", closed, closed == D, 0))
    checks.append(_check(f"crossings_base[{pair.N},{pair.M}]", crossings[1], crossings[1] == D, 0))
    return out, checks


def _cmd_dnm(ctx):
    return _pair_summary(ctx.args.pair)


def _cmd_sf(ctx):
    a = ctx.args
    if (a.pair is None) == (a.tower is None):
        raise UsageError("give exactly one of --pair and --tower")
    if a.tower is not None:
        try:
            tower = specflow.parse_tower(a.tower)
        except ValueError as exc:
            raise UsageError(f"malformed tower: {exc}") from exc
        base_sf = 0
    else:
        tower = [a.pair]
        base_sf = a.base_sf
    sf = base_sf
    pairs, checks = [], []
    for pair in tower:
        summary, chk = _pair_summary(pair)
        summary["intermediate_sf"] = specflow.intermediate_sf(pair, sf)
        sf = specflow.sf_cable_class(sf, pair)
        pairs.append(summary)
        checks += chk
    result = {"class_sf": sf, "pairs": pairs, "base_sf": base_sf}
    if pairs:
        last = pairs[-1]
        result.update(D=last["D"], delta=last["delta"], comb_identity=last["comb_identity"],
                      crossings=last["crossings"])
    if a.writhe is not None:
        result["realization_sf"] = specflow.sf_realization(sf, a.writhe)
        result["writhe"] = a.writhe
    return result, checks


def _cmd_critical(ctx):
    a = ctx.args
    pair = a.pair
    even = (a.parity or ("even" if pair.eps else "odd")) == "even"
    spec = specflow.CriticalEigSet(pair.N, pair.M, a.t, a.alpha_a, a.l_tilde, even, a.m_window)
    vals = specflow.critical_eigenvalues(spec)
    rows = ["k,m,lambda"]
    kmax = math.floor(Fraction(a.t).limit_denominator(10**12) * pair.N) if a.t > 0 else 0
    labelled = []
    for k in range(kmax):
        for m in range(a.m_window[0], a.m_window[1] + 1):
            lam = (-2 * math.pi * (pair.M / pair.N) * (pair.N * a.t - k - 0.5) + 2 * math.pi * a.alpha_a
                   + (math.pi if even else 0.0) + 2 * math.pi * m) / a.l_tilde
            labelled.append((lam, k, m))
    for lam, k, m in sorted(labelled):
        rows.append(f"{k},{m},{lam!r}")
    ctx.csv = "\n".join(rows) + "\n"
    result = {"pair": [pair.N, pair.M], "t": a.t, "alpha_a": a.alpha_a, "l_tilde": a.l_tilde,
              "parity": "even" if even else "odd", "m_window": list(a.m_window), "eigenvalues": vals,
              "window_note": "m ranges over all integers; only the window is listed"}
    checks = []
    if a.t == 1.0 and vals:
        limit = specflow.critical_limit_set(pair.N, pair.M, a.alpha_a, a.l_tilde, even,
                                            vals[0] - 1e-9, vals[-1] + 1e-9)
        lim = np.array(limit)
        dev = max(float(np.min(np.abs(lim - v))) for v in vals)
        checks.append(_check("limit_set_membership", dev, dev < 1e-12, 1e-12))
    return result, checks


def _cmd_torus_diagram(ctx):
    pair = ctx.args.pair
    N, M = pair.N, pair.M
    cable = specflow.critical_flux_sets(pair, "cable")
    base = specflow.critical_flux_sets(pair, "base")
    cable_pts = [(x, Fraction(1)) for x in cable.points(0, M)]
    base_pts = [(x, t) for t in base.t_values for x in base.points(0, M)]
    crossings = specflow.homotopy_crossings(pair)
    box = _Box((-0.2, M + 0.2), (-0.2, 1.2), size=480)
    body = [_polyline([box(0, 0), box(M, 0), box(M, 1), box(0, 1)], "lightgray", 1.0, closed=True),
            _polyline([box(0, 0), box(M, 1)], "navy", 2.0),
            _polyline([box(0, 0), box(0, 1), box(M, 1)], "darkgreen", 2.0)]
    for x, t in base_pts:
        body.append(_circle(*box(float(x), float(t)), 5, "lightgray", "gray"))
    for x, t in cable_pts:
        body.append(_circle(*box(float(x), float(t)), 7, "none", "crimson"))
    body.append(_text(10, 20, f"({N},{M}): cable points {crossings[0]}, base points above L {crossings[1]}"))
    ctx.svg = _svg(480, 480, body)
    result = {"pair": [N, M], "cable_points": [[x, t] for x, t in cable_pts],
              "base_points": [[x, t] for x, t in base_pts],
              "crossings": {"cable": crossings[0], "base": crossings[1]},
              "loop_L": "alpha_a = M t", "loop_Lambda": "t from 0 to 1 at alpha_a = 0, then alpha_a from 0 to M at t = 1"}
    checks = [_check("cable_count", crossings[0], crossings[0] == M * N, 0),
              _check("base_count", crossings[1], crossings[1] == specflow.d_count(pair), 0)]
    return result, checks


_HANDLERS = {
    "curve": _cmd_curve, "frame": _cmd_frame, "link": _cmd_link, "writhe": _cmd_writhe,
    "cwf": _cmd_cwf, "bs": _cmd_bs, "expand": _cmd_expand, "cable": _cmd_cable,
    "model2d": _cmd_model2d, "dnm": _cmd_dnm, "sf": _cmd_sf, "critical": _cmd_critical,
    "torus-diagram": _cmd_torus_diagram,
}


def _write(path, text):
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write(text)


def run(argv=None, stdout=None, stderr=None) -> int:
    """Run one command; returns the exit code."""
    argv = list(sys.argv[1:] if argv is None else argv)
    stdout = stdout or sys.stdout
    stderr = stderr or sys.stderr
    start = time.perf_counter()
    try:
        args = _build_parser().parse_args(argv)
        ctx = _Context(args, _digest(argv, args))
        result, checks = _HANDLERS[args.command](ctx)
    except UsageError as exc:
        stderr.write(f"knotflux: usage error: {exc}\n")
        return 1
    except (curve_io.CurveSpecError, GeometryError, specflow.SpectralFlowError, ValueError,
            OSError) as exc:
        stderr.write(f"knotflux: precondition violated: {exc}\n")
        return 1
    except (QuadratureError, RuntimeError) as exc:
        stderr.write(f"knotflux: numerical failure: {exc}\n")
        return 2
    passed = all(c["pass"] for c in checks)
    report = {"command": args.command, "argv": argv, "input_digest": ctx.digest,
              "tolerances": ctx.tolerances(), "result": result, "checks": checks,
              "status": "ok" if passed else "check_failed"}
    if args.timing:
        report["wall_time_s"] = round(time.perf_counter() - start, 3)
    text = json.dumps(_clean(json.loads(json.dumps(report, default=_jsonable, allow_nan=True))),
                      sort_keys=True, indent=2, allow_nan=False) + "\n"
    stdout.write(text)
    if args.json_path:
        _write(args.json_path, text)
    if args.csv_path and ctx.csv is not None:
        _write(args.csv_path, ctx.csv)
    if args.svg_path and ctx.svg is not None:
        _write(args.svg_path, ctx.svg)
    if args.timing:
        stderr.write(f"wall time {report['wall_time_s']:.3f} s\n")
    return 0 if passed else 2


def main() -> None:
    sys.exit(run())


if __name__ == "__main__":
    main()
