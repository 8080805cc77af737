"""
Adapted cable knots
===================

An ``(N, M)`` cable around a framed base curve ``g0`` with writhe ``M/N`` is
realised as ``g_eta(s) = g0([s]) + eta U(s)`` for ``s`` in ``[0, N l)``, where
``U`` is the parallel-transported normal

    U = cos(I0) S - sin(I0) N,    V = T x U = sin(I0) S + cos(I0) N,

and ``I0(s) = int_0^s tau`` is the integrated relative torsion of the zero
framing.  Because ``I0(l) = -2 pi M/N``, ``U`` returns to itself after ``N``
turns and the cable tangent stays parallel to the base tangent.

The module also evaluates the complex functions ``p = e^{-i N I0} P(z e^{i I0})``
with ``P(z) = z^N - eta^N`` in tubular coordinates ``z = rho e^{i theta}``,
and the discrete Fourier folding of functions along the cable.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .curves import (
    ArcLoop, FourierLoop, GeometryError, MovingFrame, arclength_resample,
    reach_estimate, tubular_invert,
)
from .magnetics import BiotSavartField, circulation, fit_loglog_slope, linking_number, writhe
from .quadrature import QuadConfig, default_config

__all__ = [
    "AdaptedCable",
    "CassiniValue",
    "integrated_torsion",
    "build_adapted_cable",
    "cable_writhe",
    "cable_writhe_convergence",
    "fit_writhe_remainder",
    "cassini_eval",
    "theta_winding",
    "cable_gauge_circulation_check",
    "n_fold_decompose",
    "roots_of_unity_sum",
]

TWO_PI = 2.0 * math.pi


def _periodic_antiderivative(values, period):
    """``int_0^s f`` at uniform nodes for periodic samples ``f``; also the mean."""
    n = len(values)
    coef = np.fft.rfft(values) / n
    mean = coef[0].real
    k = np.arange(1, len(coef))
    s = period * np.arange(n) / n
    omega = TWO_PI * k / period
    c = coef[1:].copy()
    if n % 2 == 0:
        c[-1] *= 0.5  # Nyquist term counted once
    # int of 2 Re(c e^{i w s}) is 2 Re(c (e^{i w s} - 1) / (i w))
    phase = np.exp(1j * np.outer(s, omega))
    periodic = 2.0 * ((phase - 1.0) @ (c / (1j * omega))).real
    return mean * s + periodic, mean


def integrated_torsion(curve: ArcLoop, frame: MovingFrame, s=None):
    """``I0(s) = int_0^s tau`` for ``s`` anywhere on the real line.

    The periodic part of ``tau`` is integrated spectrally from the node
    samples; ``I0(s + l) = I0(s) + I0(l)``.  With ``s=None`` the values at the
    nodes are returned.
    """
    ell = curve.length
    nodes, mean = _periodic_antiderivative(np.asarray(frame.tau, dtype=float), ell)
    if s is None:
        return nodes
    s = np.atleast_1d(np.asarray(s, dtype=float))
    turns = np.floor(s / ell)
    r = s - turns * ell
    # trigonometric interpolation of the periodic part
    periodic = nodes - mean * curve.s_nodes
    coef = np.fft.rfft(periodic) / len(periodic)
    k = np.arange(len(coef))
    w = np.full(len(coef), 2.0)
    w[0] = 1.0
    if len(periodic) % 2 == 0:
        w[-1] = 1.0
    vals = (np.exp(1j * TWO_PI * np.outer(r, k) / ell) @ (w * coef)).real
    return mean * s + vals


@dataclass(frozen=True, eq=False)
class AdaptedCable:
    """``(N, M)`` cable of radius ``eta`` around a framed base curve.

    Attributes
    ----------
    base, frame : ArcLoop, MovingFrame
    N, M : int
    eta : float
    s : ndarray
        Base arclengths ``s_j = j l / n`` for ``j < N n``.
    I0, U, V : ndarray
        Integrated torsion and the normal pair along ``s``.  The torsion is
        shifted by the constant ``-defect / l`` that makes ``I0(l) = -2 pi M/N``
        exact; the defect is of the size of the writhe mismatch.
    curve : ArcLoop
        The cable, resampled at uniform arclength ``u``.
    u_of_s : ndarray
        Cable arclength at each ``s_j``.
    checks : dict
        Residuals of the defining identities.
    """

    base: ArcLoop
    frame: MovingFrame
    N: int
    M: int
    eta: float
    s: np.ndarray = field(repr=False)
    I0: np.ndarray = field(repr=False)
    U: np.ndarray = field(repr=False)
    V: np.ndarray = field(repr=False)
    curve: ArcLoop = field(repr=False)
    u_of_s: np.ndarray = field(repr=False)
    checks: dict = field(default_factory=dict)

    @property
    def zeta(self) -> complex:
        return complex(np.exp(2j * math.pi * self.M / self.N))

    @property
    def total_torsion(self) -> float:
        return float(integrated_torsion(self.base, self.frame, self.base.length)[0])


def roots_of_unity_sum(N: int, M: int) -> complex:
    """``sum_k zeta^k`` for ``zeta = exp(2 pi i M / N)`` (zero when N does not divide M)."""
    z = np.exp(2j * math.pi * M / N)
    return complex(np.sum(z ** np.arange(N)))


def build_adapted_cable(base: ArcLoop, frame: MovingFrame, N: int, M: int, eta: float,
                        nodes: int | None = None, base_writhe: float | None = None,
                        reach: float | None = None) -> AdaptedCable:
    """Assemble the cable curve and verify its identities.

    Parameters
    ----------
    base : ArcLoop
        Base curve with writhe ``M/N``.
    frame : MovingFrame
        Zero-linking frame of ``base``.
    N, M : int
        Coprime cable data, ``N >= 1``.
    eta : float
        Cable radius, below half the reach of ``base``.
    nodes : int, optional
        Node count of the resampled cable; defaults to a value resolving the
        strand separation ``2 eta sin(pi/N)``.
    """
    if math.gcd(N, M) != 1 or N < 1:
        raise GeometryError("N and M must be coprime with N >= 1")
    wr = writhe(base) if base_writhe is None else base_writhe
    if abs(wr - M / N) > 1e-5:
        raise GeometryError(f"base writhe {wr:.8f} differs from M/N = {M / N:.8f}")
    reach = reach_estimate(base) if reach is None else reach
    if not 0 < eta < reach / 2:
        raise GeometryError("eta must lie in (0, reach/2)")
    n = base.n
    ell = base.length
    idx = np.arange(N * n)
    s = ell * idx / n
    I0 = integrated_torsion(base, frame, s)
    # spread the small holonomy defect so U closes after exactly N turns
    defect = float(integrated_torsion(base, frame, ell)[0]) + TWO_PI * M / N
    I0 = I0 - defect * s / ell
    j = idx % n
    c, sn = np.cos(I0)[:, None], np.sin(I0)[:, None]
    S, Nv = frame.S[j], frame.N[j]
    U = c * S - sn * Nv
    V = sn * S + c * Nv
    T = base.d1[j]
    pts = base.position[j] + eta * U
    loop = FourierLoop.from_samples(pts)

    # tangent colinearity and the speed factor m = 1 - eta <g0'', U>
    t = TWO_PI * idx / (N * n)
    dX = loop.derivative(t, 1) * (TWO_PI / (N * ell))
    speed = np.linalg.norm(dX, axis=1)
    colinear = float(np.max(np.linalg.norm(np.cross(dX / speed[:, None], T), axis=1)))
    m_pred = 1.0 - eta * np.sum(base.d2[j] * U, axis=1)
    m_err = float(np.max(np.abs(speed - m_pred)))

    # rotation law U(s + l) = cos(phi) U + sin(phi) V with phi = 2 pi M / N
    phi = TWO_PI * M / N
    shifted = np.roll(U, -n, axis=0)
    rot = float(np.max(np.linalg.norm(shifted - (math.cos(phi) * U + math.sin(phi) * V), axis=1)))
    perp = float(max(np.max(np.abs(np.sum(U * T, axis=1))),
                     np.max(np.abs(np.linalg.norm(U, axis=1) - 1.0)),
                     np.max(np.linalg.norm(V - np.cross(T, U), axis=1))))

    # strand separation inside each cross-section
    sep = math.inf
    if N > 1:
        strands = U.reshape(N, n, 3)
        for a in range(N):
            for b in range(a + 1, N):
                sep = min(sep, float(np.min(np.linalg.norm(strands[a] - strands[b], axis=1))) * eta)
        expected = 2 * eta * math.sin(math.pi / N)
        if sep < 0.8 * expected or sep < eta / 10:
            raise GeometryError("cable strands intersect")
    if nodes is None:
        gap = 2 * eta * math.sin(math.pi / N) if N > 1 else reach
        nodes = N * n
        while N * ell / nodes > gap / 3:
            nodes *= 2
    cable = arclength_resample(loop, nodes)
    u_of_s = loop.arclength(t)
    length_err = abs(cable.length - N * ell)
    checks = {
        "length_error": float(length_err),
        "tangent_cross": colinear,
        "speed_factor_error": m_err,
        "rotation_law": rot,
        "frame_error": perp,
        "strand_separation": sep,
        "holonomy_defect": abs(defect),
    }
    for arr in (s, I0, U, V, u_of_s):
        arr.setflags(write=False)
    return AdaptedCable(base, frame, N, M, float(eta), s, I0, U, V, cable, u_of_s, checks)


def cable_writhe(cable: AdaptedCable) -> float:
    return writhe(cable.curve)


def cable_writhe_convergence(base: ArcLoop, frame: MovingFrame, N: int, M: int, eta_list,
                             jobs: int = 1) -> dict:
    """Writhe of cables over ``eta_list`` against the limit ``N^2 Wr(base)``.

    Fits ``Wr(g_eta) = a + C eta`` by least squares and reports the offset
    error ``|a - N^2 Wr(base)|`` and the log-log exponent of the remainder
    ``|Wr(g_eta) - N^2 Wr(base)|``.
    """
    eta = np.asarray(eta_list, dtype=float)
    if eta.max() / eta.min() < 10 * (1 - 1e-12):
        raise ValueError("eta list must span at least one decade")
    wr0 = writhe(base)
    reach = reach_estimate(base)
    if eta.max() >= reach / 4:
        raise GeometryError("eta values must stay below reach/4")

    def one(e):
        return cable_writhe(build_adapted_cable(base, frame, N, M, float(e), base_writhe=wr0, reach=reach))

    values = _ordered_map(one, eta.tolist(), jobs)
    return fit_writhe_remainder(eta, values, N * N * wr0)


def fit_writhe_remainder(eta, values, limit: float) -> dict:
    """Linear fit ``a + C eta`` of cable writhes and the log-log exponent of
    ``|Wr - limit|``."""
    eta = np.asarray(eta, dtype=float)
    values = np.asarray(values, dtype=float)
    C, a = np.polyfit(eta, values, 1)
    remainder = np.abs(values - limit)
    exponent, _ = fit_loglog_slope(eta, np.maximum(remainder, np.finfo(float).tiny))
    return {"eta": eta.tolist(), "writhe": values.tolist(), "limit": float(limit),
            "offset": float(a), "offset_error": float(abs(a - limit)), "slope_C": float(C),
            "remainder": remainder.tolist(), "remainder_exponent": float(exponent)}


def _ordered_map(func, items, jobs: int):
    """Map preserving input order; threads only change the schedule."""
    if jobs <= 1 or len(items) < 2:
        return [func(x) for x in items]
    from concurrent.futures import ThreadPoolExecutor
    with ThreadPoolExecutor(max_workers=jobs) as pool:
        return list(pool.map(func, items))


# ---------------------------------------------------------------------------
# Cassinian functions
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class CassiniValue:
    p: complex
    q: float
    theta: float
    s: float
    rho: float
    angle: float
    I0: float


def _cassini_from_coords(N, eta, s, rho, angle, I0):
    z = rho * np.exp(1j * angle)
    w = z * np.exp(1j * I0)
    return np.exp(-1j * N * I0) * (w ** N - eta ** N)


def cassini_eval(cable: AdaptedCable, x, reach: float | None = None) -> CassiniValue:
    """``p_eta``, ``q_eta = |p_eta|`` and ``theta_eta = arg p_eta`` at ``x``."""
    tp = tubular_invert(cable.base, cable.frame, x, reach)
    I0 = float(integrated_torsion(cable.base, cable.frame, tp.s)[0])
    p = complex(_cassini_from_coords(cable.N, cable.eta, tp.s, tp.rho, tp.theta, I0))
    q = abs(p)
    if q < 1e-12:
        raise GeometryError("point lies on the cable")
    return CassiniValue(p, q, math.atan2(p.imag, p.real), tp.s, tp.rho, tp.theta, I0)


def theta_winding(cable: AdaptedCable, path, tol: float = 1e-3) -> int:
    """Number of turns of ``theta_eta`` along a closed path (rows of points).

    Consecutive samples must be close enough for the phase increments to stay
    below ``pi``; the total is rounded after checking it is integral.
    """
    reach = reach_estimate(cable.base)
    ps = np.array([cassini_eval(cable, x, reach).p for x in path] + [cassini_eval(cable, path[0], reach).p])
    inc = np.angle(ps[1:] / ps[:-1])
    if np.max(np.abs(inc)) > 0.5 * math.pi:
        raise GeometryError("path sampling too coarse for phase unwrapping")
    turns = math.fsum(inc.tolist()) / TWO_PI
    if abs(turns - round(turns)) > tol:
        raise GeometryError(f"phase winding {turns:.6f} is not integral")
    return int(round(turns))


def cable_gauge_circulation_check(cable: AdaptedCable, samples: int = 4096,
                                  cfg: QuadConfig | None = None) -> dict:
    """Compare ``2 pi`` times the cable field circulation along the base with
    the winding of ``theta_eta`` along the base.

    Both equal ``2 pi M``; the residual measures their difference.
    """
    cfg = cfg or default_config()
    base = cable.base
    path_curve = arclength_resample(base.loop, samples)
    turns = theta_winding(cable, path_curve.position)
    circ = circulation(BiotSavartField(cable.curve, 1.0, cfg), base)
    return {"circulation": float(circ), "winding": turns,
            "residual": abs(TWO_PI * circ - TWO_PI * turns),
            "link": linking_number(base, cable.curve).value}


def n_fold_decompose(values, N: int, M: int) -> np.ndarray:
    """Split samples over ``[0, N l)`` into ``N`` twisted-periodic parts.

    ``f_k(s) = (1/N) sum_j zeta^{-kj} f(s + j l)`` with ``zeta = e^{2 pi i M/N}``
    satisfies ``f_k(s + l) = zeta^k f_k(s)`` and ``sum_k f_k = f``.

    Returns an array of shape ``(N,) + values.shape``.
    """
    f = np.asarray(values)
    m = f.shape[0]
    if m % N:
        raise ValueError("sample count must be divisible by N")
    step = m // N
    zeta = np.exp(2j * math.pi * M / N)
    out = np.zeros((N,) + f.shape, dtype=complex)
    for k in range(N):
        for j in range(N):
            out[k] += zeta ** (-k * j) * np.roll(f, -j * step, axis=0)
    return out / N
