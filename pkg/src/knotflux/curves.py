"""
Closed space curves
===================

Trigonometric-polynomial loops, their uniform-arclength resampling, moving
frames along them (parallel transport closed up by a uniform rotation, and
the zero-linking framing), tubular coordinates, reach estimates, and the
writhe-tuned unknot family.

Conventions
-----------
Frames are right-handed triples ``(T, S, N)``.  The relative torsion of a
frame is ``tau = <S', N>`` (prime = arclength derivative), so a frame obtained
from a reference frame ``(P, Q)`` by the rotation angle ``psi`` has
``tau = psi' + <P', Q>``.  Twist is ``(1/2pi) * int tau ds``.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from fractions import Fraction
from functools import cached_property

import numpy as np

from .quadrature import exact_sum

__all__ = [
    "FourierLoop",
    "ArcLoop",
    "MovingFrame",
    "ZeroLinkFrame",
    "TubularPoint",
    "GeometryError",
    "make_circle",
    "make_torus_knot",
    "tuned_family",
    "arclength_resample",
    "closed_parallel_frame",
    "rotated_frame",
    "zero_linking_frame",
    "tubular_map",
    "tubular_invert",
    "reach_estimate",
    "gauss_linking_samples",
    "writhe_samples",
    "tune_writhe",
]

TWO_PI = 2.0 * math.pi


class GeometryError(ValueError):
    """Raised when a geometric precondition fails."""


def _fibonacci_sphere(count: int) -> np.ndarray:
    i = np.arange(count) + 0.5
    z = 1.0 - i / count  # upper hemisphere only: e and -e are equivalent
    r = np.sqrt(1.0 - z * z)
    phi = i * math.pi * (3.0 - math.sqrt(5.0))
    return np.stack([r * np.cos(phi), r * np.sin(phi), z], axis=1)


def _sin_minus_identity(x) -> np.ndarray:
    """``sin(x) - x`` accurate for small arguments."""
    x = np.asarray(x, dtype=float)
    out = np.sin(x) - x
    small = np.abs(x) < 0.5
    if np.any(small):
        xs = x[small]
        x2 = xs * xs
        term = -xs * x2 / 6.0
        acc = term.copy()
        for j in range(2, 9):
            term = -term * x2 / ((2 * j) * (2 * j + 1))
            acc += term
        out[small] = acc
    return out


def _pow2_at_least(m: int) -> int:
    return 1 << max(0, int(math.ceil(math.log2(max(m, 1)))))


@dataclass(frozen=True, eq=False)
class FourierLoop:
    """Closed curve ``gamma(t) = c + sum_k a_k cos(kt) + b_k sin(kt)``.

    Parameters
    ----------
    constant : array_like, shape (3,)
    cos_coeffs, sin_coeffs : array_like, shape (K, 3)
        Row ``k-1`` holds the coefficients of harmonic ``k``.
    """

    constant: np.ndarray
    cos_coeffs: np.ndarray
    sin_coeffs: np.ndarray

    def __post_init__(self):
        c = np.asarray(self.constant, dtype=float).reshape(3)
        a = np.atleast_2d(np.asarray(self.cos_coeffs, dtype=float))
        b = np.atleast_2d(np.asarray(self.sin_coeffs, dtype=float))
        if a.shape != b.shape or a.ndim != 2 or a.shape[1] != 3 or a.shape[0] < 1:
            raise GeometryError("harmonic arrays must have shape (K, 3) with K >= 1")
        for arr in (c, a, b):
            arr.setflags(write=False)
        object.__setattr__(self, "constant", c)
        object.__setattr__(self, "cos_coeffs", a)
        object.__setattr__(self, "sin_coeffs", b)
        t = TWO_PI * np.arange(max(256, 8 * a.shape[0])) / max(256, 8 * a.shape[0])
        speed = np.linalg.norm(self.derivative(t, 1), axis=1)
        if not np.min(speed) > 1e-12 * max(1.0, float(np.max(speed))):
            raise GeometryError("curve has (near) zero speed")

    @property
    def harmonics(self) -> int:
        return self.cos_coeffs.shape[0]

    @classmethod
    def from_samples(cls, points, trim: float = 1e-16) -> "FourierLoop":
        """Trigonometric interpolant of samples at ``t_j = 2 pi j / m``.

        Harmonics whose magnitude is below ``trim`` times the largest one are
        dropped from the tail.  The Nyquist term of an even ``m`` is split
        evenly so the interpolant stays real.
        """
        pts = np.asarray(points, dtype=float)
        m = pts.shape[0]
        coef = np.fft.rfft(pts, axis=0) / m
        kmax = (m - 1) // 2
        a = 2.0 * coef[1:kmax + 1].real
        b = -2.0 * coef[1:kmax + 1].imag
        if m % 2 == 0:
            a = np.vstack([a, coef[m // 2].real[None, :]])
            b = np.vstack([b, np.zeros((1, 3))])
        mag = np.max(np.abs(a), axis=1) + np.max(np.abs(b), axis=1)
        big = np.nonzero(mag > trim * np.max(mag))[0]
        keep = int(big[-1]) + 1 if big.size else 1
        return cls(coef[0].real, a[:keep], b[:keep])

    @classmethod
    def from_function(cls, func, max_harmonic: int) -> "FourierLoop":
        """Exact coefficients of a trigonometric polynomial given as a callable."""
        m = 2 * max_harmonic + 2
        t = TWO_PI * np.arange(m) / m
        loop = cls.from_samples(func(t), trim=1e-15)
        return loop

    @classmethod
    def fit_points(cls, points, harmonics: int) -> "FourierLoop":
        """Least-squares truncated series through a closed point cloud.

        Points are assumed ordered and parametrised by cumulative chord
        length mapped to ``[0, 2 pi)``.
        """
        pts = np.asarray(points, dtype=float)
        chords = np.linalg.norm(np.roll(pts, -1, axis=0) - pts, axis=1)
        t = TWO_PI * np.concatenate([[0.0], np.cumsum(chords)[:-1]]) / chords.sum()
        k = np.arange(1, harmonics + 1)
        basis = np.hstack([np.ones((len(t), 1)), np.cos(np.outer(t, k)), np.sin(np.outer(t, k))])
        sol, *_ = np.linalg.lstsq(basis, pts, rcond=None)
        return cls(sol[0], sol[1:harmonics + 1], sol[harmonics + 1:])

    def derivative(self, t, order: int = 0) -> np.ndarray:
        """``d^order gamma / dt^order`` at the parameters ``t``; shape (m, 3)."""
        t = np.atleast_1d(np.asarray(t, dtype=float))
        k = np.arange(1, self.harmonics + 1, dtype=float)
        out = np.empty((t.size, 3))
        # phase shift by order*pi/2 turns derivatives into plain evaluations
        fac = k ** order
        ca = self.cos_coeffs * fac[:, None]
        sb = self.sin_coeffs * fac[:, None]
        shift = order * math.pi / 2
        for start in range(0, t.size, 2048):
            tt = t[start:start + 2048]
            arg = np.outer(tt, k) + shift
            out[start:start + 2048] = np.cos(arg) @ ca + np.sin(arg) @ sb
        if order == 0:
            out += self.constant
        return out

    def __call__(self, t) -> np.ndarray:
        return self.derivative(t, 0)

    def difference(self, t1, t0) -> np.ndarray:
        """``gamma(t1) - gamma(t0)`` without cancellation for close parameters."""
        t1 = np.atleast_1d(np.asarray(t1, dtype=float))
        t0 = np.broadcast_to(np.asarray(t0, dtype=float), t1.shape)
        k = np.arange(1, self.harmonics + 1, dtype=float)
        out = np.empty((t1.size, 3))
        for start in range(0, t1.size, 2048):
            sl = slice(start, start + 2048)
            half = 0.5 * np.outer(t1[sl] - t0[sl], k)
            avg = 0.5 * np.outer(t1[sl] + t0[sl], k)
            sh = np.sin(half)
            out[sl] = (-2.0 * np.sin(avg) * sh) @ self.cos_coeffs + (2.0 * np.cos(avg) * sh) @ self.sin_coeffs
        return out

    def local_increments(self, t, t0: float):
        """Cancellation-free increments around ``t0``.

        Returns ``(D, R, E)`` with ``D = gamma(t) - gamma(t0)``,
        ``R = D - gamma'(t0) (t - t0)`` and ``E = gamma'(t) - gamma'(t0)``.
        """
        t = np.atleast_1d(np.asarray(t, dtype=float))
        k = np.arange(1, self.harmonics + 1, dtype=float)
        ck, sk = np.cos(k * t0), np.sin(k * t0)
        D = np.empty((t.size, 3))
        R = np.empty((t.size, 3))
        E = np.empty((t.size, 3))
        a, b = self.cos_coeffs, self.sin_coeffs
        for start in range(0, t.size, 2048):
            sl = slice(start, start + 2048)
            x = np.outer(t[sl] - t0, k)
            cm = -2.0 * np.sin(0.5 * x) ** 2
            sn = np.sin(x)
            sm = _sin_minus_identity(x)
            D[sl] = (ck * cm - sk * sn) @ a + (sk * cm + ck * sn) @ b
            R[sl] = (ck * cm - sk * sm) @ a + (sk * cm + ck * sm) @ b
            E[sl] = (-(sk * cm + ck * sn) * k) @ a + ((ck * cm - sk * sn) * k) @ b
        return D, R, E

    def transformed(self, matrix=None, shift=None, scale: float = 1.0) -> "FourierLoop":
        """Image under ``x -> scale * matrix @ x + shift``."""
        mat = np.eye(3) if matrix is None else np.asarray(matrix, dtype=float)
        sh = np.zeros(3) if shift is None else np.asarray(shift, dtype=float)
        return FourierLoop(scale * mat @ self.constant + sh,
                           scale * self.cos_coeffs @ mat.T, scale * self.sin_coeffs @ mat.T)

    def reversed(self) -> "FourierLoop":
        """Same curve traversed backwards (``t -> -t``)."""
        return FourierLoop(self.constant, self.cos_coeffs, -self.sin_coeffs)

    def shifted(self, dt: float) -> "FourierLoop":
        """Reparametrisation ``t -> t + dt`` (moves the base point)."""
        k = np.arange(1, self.harmonics + 1)[:, None]
        c, s = np.cos(k * dt), np.sin(k * dt)
        return FourierLoop(self.constant, self.cos_coeffs * c + self.sin_coeffs * s,
                           self.sin_coeffs * c - self.cos_coeffs * s)

    @cached_property
    def _arclength_series(self):
        """Fourier data of the speed, used for the cumulative length."""
        m = _pow2_at_least(max(1024, 16 * self.harmonics))
        while True:
            t = TWO_PI * np.arange(m) / m
            speed = np.linalg.norm(self.derivative(t, 1), axis=1)
            coef = np.fft.rfft(speed) / m
            tail = np.max(np.abs(coef[3 * len(coef) // 4:]))
            if tail < 1e-16 * abs(coef[0].real) or m >= 1 << 18:
                break
            m *= 2
        mag = np.abs(coef[1:])
        big = np.nonzero(mag > 1e-18 * abs(coef[0].real))[0]
        keep = int(big[-1]) + 1 if big.size else 0
        c = coef[1:keep + 1]
        return coef[0].real, 2.0 * c.real, -2.0 * c.imag

    @property
    def length(self) -> float:
        return TWO_PI * self._arclength_series[0]

    def arclength(self, t) -> np.ndarray:
        """Cumulative length ``s(t) = int_0^t |gamma'|``."""
        t = np.atleast_1d(np.asarray(t, dtype=float))
        mean, a, b = self._arclength_series
        if a.size == 0:
            return mean * t
        k = np.arange(1, a.size + 1, dtype=float)
        out = mean * t
        for start in range(0, t.size, 2048):
            arg = np.outer(t[start:start + 2048], k)
            out[start:start + 2048] += np.sin(arg) @ (a / k) + (1.0 - np.cos(arg)) @ (b / k)
        return out

    def speed(self, t) -> np.ndarray:
        return np.linalg.norm(self.derivative(t, 1), axis=1)

    def parameter_at(self, s, tol: float = 1e-14, max_iter: int = 60) -> np.ndarray:
        """Invert ``s(t)`` by bracketed Newton iteration (vectorised)."""
        s = np.atleast_1d(np.asarray(s, dtype=float))
        ell = self.length
        turns = np.floor(s / ell)
        target = s - turns * ell
        lo = np.zeros_like(target)
        hi = np.full_like(target, TWO_PI)
        t = TWO_PI * target / ell
        resid = np.full_like(target, np.inf)
        for _ in range(max_iter):
            val = self.arclength(t) - target
            resid = np.abs(val)
            lo = np.where(val < 0, t, lo)
            hi = np.where(val > 0, t, hi)
            if np.all(resid <= tol * ell):
                break
            step = val / self.speed(t)
            tn = t - step
            bad = (tn <= lo) | (tn >= hi)
            t = np.where(bad, 0.5 * (lo + hi), tn)
        if np.max(resid) > 1e-10 * ell:
            raise GeometryError(f"arclength inversion failed, worst residual {np.max(resid):.3e}")
        return t + TWO_PI * turns


def _arclength_jets(loop: FourierLoop, t) -> tuple[np.ndarray, ...]:
    """Position and first three arclength derivatives at parameters ``t``."""
    g0 = loop.derivative(t, 0)
    g1 = loop.derivative(t, 1)
    g2 = loop.derivative(t, 2)
    g3 = loop.derivative(t, 3)
    v = np.linalg.norm(g1, axis=1)[:, None]
    dv = np.sum(g1 * g2, axis=1)[:, None] / v
    ddv = (np.sum(g2 * g2, axis=1)[:, None] + np.sum(g1 * g3, axis=1)[:, None]) / v - dv * dv / v
    d1 = g1 / v
    d2 = g2 / v**2 - g1 * dv / v**3
    d3 = g3 / v**3 - 3.0 * g2 * dv / v**4 - g1 * ddv / v**4 + 3.0 * g1 * dv * dv / v**5
    return g0, d1, d2, d3


@dataclass(frozen=True, eq=False)
class ArcLoop:
    """A :class:`FourierLoop` sampled at ``n`` points of uniform arclength.

    Attributes
    ----------
    loop : FourierLoop
        Underlying exact curve; arbitrary points are evaluated through it.
    length : float
    t_nodes : ndarray, shape (n,)
        Loop parameters of the nodes ``s_i = i * length / n``.
    position, d1, d2, d3 : ndarray, shape (n, 3)
        ``gamma`` and its first three arclength derivatives at the nodes.
    """

    loop: FourierLoop
    length: float
    t_nodes: np.ndarray
    position: np.ndarray
    d1: np.ndarray
    d2: np.ndarray
    d3: np.ndarray

    @property
    def n(self) -> int:
        return self.t_nodes.size

    @property
    def s_nodes(self) -> np.ndarray:
        return self.length * np.arange(self.n) / self.n

    @property
    def spacing(self) -> float:
        return self.length / self.n

    def jets_at_s(self, s):
        """``(gamma, gamma', gamma'', gamma''')`` at arbitrary arclengths."""
        return _arclength_jets(self.loop, self.loop.parameter_at(s))

    def jets_at_t(self, t):
        return _arclength_jets(self.loop, t)

    def resampled(self, n: int) -> "ArcLoop":
        return arclength_resample(self.loop, n)

    def check(self) -> dict:
        """Residuals of the arclength identities at the nodes."""
        unit = np.max(np.abs(np.linalg.norm(self.d1, axis=1) - 1.0))
        orth = np.max(np.abs(np.sum(self.d1 * self.d2, axis=1)))
        third = np.max(np.abs(np.sum(self.d1 * self.d3, axis=1) + np.sum(self.d2 * self.d2, axis=1)))
        closing = float(np.linalg.norm(self.loop(TWO_PI)[0] - self.loop(0.0)[0]))
        return {"unit_speed": float(unit), "orthogonality": float(orth),
                "third_order": float(third), "closure": closing}


def arclength_resample(loop: FourierLoop, n: int = 512) -> ArcLoop:
    """Nodes at uniform arclength with exact chain-rule derivatives.

    Parameters
    ----------
    loop : FourierLoop
    n : int
        Even node count, at least 64.
    """
    if n < 64 or n % 2:
        raise GeometryError("node count must be even and >= 64")
    ell = loop.length
    s = ell * np.arange(n) / n
    t = loop.parameter_at(s)
    g0, d1, d2, d3 = _arclength_jets(loop, t)
    for arr in (t, g0, d1, d2, d3):
        arr.setflags(write=False)
    return ArcLoop(loop, ell, t, g0, d1, d2, d3)


def make_circle(radius: float = 1.0, center=(0.0, 0.0, 0.0)) -> FourierLoop:
    """Circle of the given radius in a plane parallel to ``xy``."""
    if not radius > 0:
        raise GeometryError("radius must be positive")
    return FourierLoop(center, [[radius, 0.0, 0.0]], [[0.0, radius, 0.0]])


def make_torus_knot(N: int, M: int, R: float = 4.0, r: float = 1.0) -> FourierLoop:
    """``((R + r cos Mt) cos Nt, (R + r cos Mt) sin Nt, -r sin Mt)``.

    The sign of ``z`` makes the knot right-handed: it links the
    counter-clockwise core circle of radius ``R`` ``M`` times and has positive
    writhe.
    """
    if math.gcd(N, M) != 1:
        raise GeometryError("N and M must be coprime")
    if N < 2 or M < 1:
        raise GeometryError("need N >= 2 and M >= 1")
    if not 0 < r < R:
        raise GeometryError("need 0 < r < R")

    def f(t):
        return np.stack([(R + r * np.cos(M * t)) * np.cos(N * t),
                         (R + r * np.cos(M * t)) * np.sin(N * t),
                         -r * np.sin(M * t)], axis=1)

    return FourierLoop.from_function(f, N + M)


def tuned_family(a: float) -> FourierLoop:
    """``((1 + |a| cos 3t) cos t, (1 + |a| cos 3t) sin t, a sin 3t)``.

    The sign of ``a`` only flips the height, so the writhe is odd in ``a``;
    with the orientation conventions used here ``a > 0`` gives negative
    writhe.  The attainable range is roughly ``|Wr| < 2.07``.
    """
    b = abs(a)
    if b >= 1.0:
        raise GeometryError("family parameter must satisfy |a| < 1")

    def f(t):
        return np.stack([(1 + b * np.cos(3 * t)) * np.cos(t),
                         (1 + b * np.cos(3 * t)) * np.sin(t),
                         a * np.sin(3 * t)], axis=1)

    return FourierLoop.from_function(f, 4)


# ---------------------------------------------------------------------------
# Gauss double integrals on samples
# ---------------------------------------------------------------------------

def gauss_linking_samples(x1, dx1, x2, dx2, block: int = 512) -> float:
    """``(1/4pi) sum_ij <dx1_i x dx2_j, x1_i - x2_j> / |x1_i - x2_j|^3``.

    ``dx`` already carries the quadrature weights (tangent times spacing).
    """
    rows = []
    for start in range(0, len(x1), block):
        d = x1[start:start + block, None, :] - x2[None, :, :]
        cr = np.cross(dx1[start:start + block, None, :], dx2[None, :, :])
        num = np.einsum("ijk,ijk->ij", cr, d)
        rows.append((num / np.linalg.norm(d, axis=2) ** 3).sum(axis=1))
    return math.fsum(np.concatenate(rows).tolist()) / (4.0 * math.pi)


def writhe_samples(x, dx, block: int = 512) -> float:
    """Writhe double sum with the diagonal set to zero."""
    n = len(x)
    rows = []
    for start in range(0, n, block):
        i = np.arange(start, min(start + block, n))
        d = x[i, None, :] - x[None, :, :]
        cr = np.cross(dx[i, None, :], dx[None, :, :])
        num = np.einsum("ijk,ijk->ij", cr, d)
        dist3 = np.linalg.norm(d, axis=2) ** 3
        dist3[np.arange(len(i)), i] = 1.0
        val = num / dist3
        val[np.arange(len(i)), i] = 0.0
        rows.append(val.sum(axis=1))
    return math.fsum(np.concatenate(rows).tolist()) / (4.0 * math.pi)


def _writhe_of_arc(curve: ArcLoop) -> float:
    """Writhe of a uniformly sampled curve with the diagonal kink corrected.

    Near the diagonal the integrand behaves like ``|u| det(g', g'', g''') / 12``
    with ``u = s2 - s1``.  The generalised Euler-Maclaurin expansion of the
    trapezoid rule for such a kink gives the ``h^2 / 72`` row correction,
    which restores fourth-order convergence.
    """
    h = curve.spacing
    base = writhe_samples(curve.position, curve.d1 * h)
    triple = np.einsum("ij,ij->i", curve.d1, np.cross(curve.d2, curve.d3))
    return float(base + h**3 * math.fsum(triple.tolist()) / (72.0 * 4.0 * math.pi))


# ---------------------------------------------------------------------------
# Reach
# ---------------------------------------------------------------------------

def reach_estimate(curve: ArcLoop) -> float:
    """Conservative tube radius: curvature bound and half the self-distance.

    The self-distance is the minimum over node pairs separated by at least
    ``pi / max curvature`` along the curve (closer pairs are governed by the
    curvature bound).
    """
    kmax = float(np.max(np.linalg.norm(curve.d2, axis=1)))
    curv_bound = 1.0 / kmax if kmax > 0 else math.inf
    sep = math.pi / kmax if kmax > 0 else curve.length / 2
    n = curve.n
    gap = int(math.ceil(sep / curve.spacing))
    best = math.inf
    if 2 * gap < n:
        x = curve.position
        for start in range(0, n, 512):
            i = np.arange(start, min(start + 512, n))
            d = np.linalg.norm(x[i, None, :] - x[None, :, :], axis=2)
            lag = np.abs(i[:, None] - np.arange(n)[None, :])
            lag = np.minimum(lag, n - lag)
            d[lag < gap] = np.inf
            best = min(best, float(d.min()))
    return min(curv_bound, 0.5 * best)


# ---------------------------------------------------------------------------
# Frames
# ---------------------------------------------------------------------------

def _reference_direction(loop: FourierLoop) -> np.ndarray:
    """Direction staying as far as possible from the tangent indicatrix."""
    m = _pow2_at_least(max(2048, 16 * loop.harmonics))
    t = TWO_PI * np.arange(m) / m
    tan = loop.derivative(t, 1)
    tan /= np.linalg.norm(tan, axis=1)[:, None]
    # coordinate axes first: planar curves get their exact normal
    cand = np.vstack([np.eye(3)[::-1], _fibonacci_sphere(4000)])
    worst = np.empty(len(cand))
    for start in range(0, len(cand), 500):
        dots = cand[start:start + 500] @ tan.T
        worst[start:start + 500] = 1.0 - np.max(dots * dots, axis=1)
    return cand[int(np.argmax(worst))]


def _reference_frame(loop: FourierLoop, e: np.ndarray, t):
    """Projected reference frame ``(P, Q)`` and its torsion ``<P', Q>``."""
    _, d1, d2, _ = _arclength_jets(loop, t)
    et = d1 @ e
    w2 = 1.0 - et * et
    p = (e[None, :] - et[:, None] * d1) / np.sqrt(w2)[:, None]
    q = np.cross(d1, p)
    txe = np.cross(d1, np.broadcast_to(e, d1.shape))
    tau_p = -et * np.sum(d2 * txe, axis=1) / w2
    return p, q, tau_p


@dataclass(frozen=True, eq=False)
class _TorsionIntegral:
    """``F(t) = int_0^t tau_P(t') |gamma'(t')| dt'`` as mean rate plus series."""

    mean: float
    a: np.ndarray
    b: np.ndarray

    def __call__(self, t) -> np.ndarray:
        t = np.atleast_1d(np.asarray(t, dtype=float))
        out = self.mean * t
        if self.a.size:
            k = np.arange(1, self.a.size + 1, dtype=float)
            for start in range(0, t.size, 2048):
                arg = np.outer(t[start:start + 2048], k)
                out[start:start + 2048] += np.sin(arg) @ (self.a / k) + (1.0 - np.cos(arg)) @ (self.b / k)
        return out

    @property
    def total(self) -> float:
        return TWO_PI * self.mean


def _torsion_integral(loop: FourierLoop, e: np.ndarray) -> _TorsionIntegral:
    m = _pow2_at_least(max(4096, 16 * loop.harmonics))
    while True:
        t = TWO_PI * np.arange(m) / m
        _, _, tau_p = _reference_frame(loop, e, t)
        g = tau_p * loop.speed(t)
        coef = np.fft.rfft(g) / m
        scale = max(float(np.max(np.abs(g))), 1e-300)
        if np.max(np.abs(coef[3 * len(coef) // 4:])) < 1e-15 * scale or m >= 1 << 18:
            break
        m *= 2
    mag = np.abs(coef[1:])
    big = np.nonzero(mag > 1e-17 * scale)[0]
    keep = int(big[-1]) + 1 if big.size else 0
    c = coef[1:keep + 1]
    return _TorsionIntegral(float(coef[0].real), 2.0 * c.real, -2.0 * c.imag)


@dataclass(frozen=True, eq=False)
class MovingFrame:
    """Closed normal frame ``S = cos(psi) P + sin(psi) Q`` with constant torsion.

    The angle is ``psi(t) = rate * s(t) - F(t) + offset`` where ``F`` integrates
    the torsion of the projected reference frame, so the relative torsion of
    ``(S, N)`` is the constant ``rate``.

    Attributes
    ----------
    curve : ArcLoop
    S, N : ndarray, shape (n, 3)
        Frame vectors at the nodes.
    tau, kappa_g, kappa_n : ndarray, shape (n,)
        Relative torsion and the curvature components ``<gamma'', S>``,
        ``<gamma'', N>`` at the nodes.
    pushoff_link : int
        Linking number of the curve with its pushoff along ``S``.
    """

    curve: ArcLoop
    reference: np.ndarray
    rate: float
    offset: float
    torsion_integral: _TorsionIntegral = field(repr=False)
    S: np.ndarray = field(repr=False)
    N: np.ndarray = field(repr=False)
    tau: np.ndarray = field(repr=False)
    kappa_g: np.ndarray = field(repr=False)
    kappa_n: np.ndarray = field(repr=False)
    pushoff_link: int = 0

    @property
    def total_torsion(self) -> float:
        return self.rate * self.curve.length

    def angle_at_t(self, t) -> np.ndarray:
        s = self.curve.loop.arclength(t)
        return self.rate * s - self.torsion_integral(t) + self.offset

    def at_t(self, t):
        """``(T, S, N)`` at loop parameters ``t``."""
        loop = self.curve.loop
        t = np.atleast_1d(np.asarray(t, dtype=float))
        p, q, _ = _reference_frame(loop, self.reference, t)
        psi = self.angle_at_t(t)
        c, s = np.cos(psi)[:, None], np.sin(psi)[:, None]
        S = c * p + s * q
        N = -s * p + c * q
        T = np.cross(S, N)
        return T, S, N

    def at_s(self, s):
        return self.at_t(self.curve.loop.parameter_at(s))

    def curvatures_at_s(self, s):
        """``(kappa_g, kappa_n, tau)`` at arbitrary arclengths."""
        t = self.curve.loop.parameter_at(s)
        _, d1, d2, _ = _arclength_jets(self.curve.loop, t)
        _, S, N = self.at_t(t)
        return np.sum(d2 * S, axis=1), np.sum(d2 * N, axis=1), np.full(t.size, self.rate)

    def check(self) -> dict:
        c = self.curve
        T = c.d1
        gram = [np.sum(T * self.S, axis=1), np.sum(T * self.N, axis=1), np.sum(self.S * self.N, axis=1),
                np.linalg.norm(self.S, axis=1) - 1.0, np.linalg.norm(self.N, axis=1) - 1.0]
        hand = np.sum(np.cross(T, self.S) * self.N, axis=1) - 1.0
        _, S_end, _ = self.at_t(TWO_PI)
        curv = self.kappa_g**2 + self.kappa_n**2 - np.sum(c.d2 * c.d2, axis=1)
        return {
            "orthonormality": float(max(np.max(np.abs(g)) for g in gram)),
            "right_handed": float(np.max(np.abs(hand))),
            "periodicity": float(np.linalg.norm(S_end[0] - self.S[0])),
            "curvature_split": float(np.max(np.abs(curv))),
        }


class ZeroLinkFrame(MovingFrame):
    """A :class:`MovingFrame` whose pushoff does not link the curve."""


def _build_frame(curve: ArcLoop, e, rate, offset, integral, cls=MovingFrame, link=0):
    loop = curve.loop
    t = curve.t_nodes
    p, q, _ = _reference_frame(loop, e, t)
    psi = rate * curve.s_nodes - integral(t) + offset
    c, s = np.cos(psi)[:, None], np.sin(psi)[:, None]
    S = c * p + s * q
    N = -s * p + c * q
    kg = np.sum(curve.d2 * S, axis=1)
    kn = np.sum(curve.d2 * N, axis=1)
    tau = np.full(curve.n, rate)
    for arr in (S, N, kg, kn, tau):
        arr.setflags(write=False)
    return cls(curve, e, rate, offset, integral, S, N, tau, kg, kn, int(link))


def closed_parallel_frame(curve: ArcLoop) -> MovingFrame:
    """Parallel transport frame closed up by the smallest uniform rotation.

    The holonomy of parallel transport is wrapped to ``(-pi, pi]`` and spread
    uniformly along the curve, so ``|Tw| <= 1/2``.
    """
    e = _reference_direction(curve.loop)
    integral = _torsion_integral(curve.loop, e)
    holonomy = -integral.total
    wrapped = holonomy - TWO_PI * round(holonomy / TWO_PI)
    rate = -wrapped / curve.length
    frame = _build_frame(curve, e, rate, 0.0, integral)
    link = pushoff_linking(frame)
    return _build_frame(curve, e, rate, 0.0, integral, link=round(link))


def rotated_frame(frame: MovingFrame, turns: int) -> MovingFrame:
    """Add ``turns`` full uniform rotations of ``S`` about the tangent."""
    curve = frame.curve
    rate = frame.rate + TWO_PI * turns / curve.length
    return _build_frame(curve, frame.reference, rate, frame.offset, frame.torsion_integral,
                        link=frame.pushoff_link + turns)


def pushoff_linking(frame: MovingFrame, eps: float | None = None, check: bool = True) -> float:
    """Gauss linking number of the curve with ``gamma + eps S``."""
    curve = frame.curve
    if eps is None:
        eps = 0.5 * reach_estimate(curve)
    loop = curve.loop
    vmax = float(np.max(loop.speed(TWO_PI * np.arange(256) / 256)))
    m = _pow2_at_least(max(256, int(math.ceil(4.0 * TWO_PI * vmax / eps))))
    t = TWO_PI * np.arange(m) / m
    x = loop(t)
    dx = loop.derivative(t, 1) * (TWO_PI / m)
    _, S, _ = frame.at_t(t)
    # pushoff tangent: d/dt (gamma + eps S)
    dS = _spectral_derivative(S) * (TWO_PI / m)
    y = x + eps * S
    dy = dx + eps * dS
    value = gauss_linking_samples(x, dx, y, dy)
    if check and abs(value - round(value)) > 1e-3:
        raise GeometryError(f"pushoff linking {value:.6f} is not close to an integer")
    return value


def _spectral_derivative(values) -> np.ndarray:
    """Derivative w.r.t. the sample index angle of periodic samples."""
    m = values.shape[0]
    coef = np.fft.fft(values, axis=0)
    k = np.fft.fftfreq(m, d=1.0 / m)
    if m % 2 == 0:
        k[m // 2] = 0.0
    deriv = np.fft.ifft(coef * (1j * k)[:, None], axis=0).real
    return deriv


def zero_linking_frame(curve: ArcLoop) -> ZeroLinkFrame:
    """Closed parallel frame corrected by ``-pushoff_link`` full turns.

    The result has constant relative torsion, periodic ``(S, N)``, a pushoff
    that does not link the curve, and ``int tau ds = -2 pi Wr``.
    """
    par = closed_parallel_frame(curve)
    rate = par.rate - TWO_PI * par.pushoff_link / curve.length
    frame = _build_frame(curve, par.reference, rate, par.offset, par.torsion_integral, ZeroLinkFrame, 0)
    residual = pushoff_linking(frame)
    if round(residual) != 0:
        raise GeometryError("zero-framing correction failed")
    return frame


# ---------------------------------------------------------------------------
# Tubular coordinates
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class TubularPoint:
    """Coordinates ``(s, rho, theta)`` around a framed curve."""

    s: float
    rho: float
    theta: float

    def h(self, frame: MovingFrame) -> float:
        kg, kn, _ = frame.curvatures_at_s(self.s)
        return float(1.0 - self.rho * (kg[0] * math.cos(self.theta) + kn[0] * math.sin(self.theta)))


def tubular_map(curve: ArcLoop, frame: MovingFrame, p: TubularPoint) -> np.ndarray:
    """``gamma(s) + rho (cos(theta) S(s) + sin(theta) N(s))``."""
    t = curve.loop.parameter_at(p.s)
    _, S, N = frame.at_t(t)
    x = curve.loop(t)[0]
    return x + p.rho * (math.cos(p.theta) * S[0] + math.sin(p.theta) * N[0])


def _foot_parameter(loop: FourierLoop, x, t0: float) -> float:
    """Newton on ``<x - gamma(t), gamma'(t)> = 0`` started at ``t0``."""
    t = t0
    for _ in range(50):
        g0 = loop(t)[0]
        g1 = loop.derivative(t, 1)[0]
        g2 = loop.derivative(t, 2)[0]
        d = x - g0
        f = d @ g1
        fp = -g1 @ g1 + d @ g2
        if fp >= 0:  # not a local minimum of the distance; fall back
            break
        step = f / fp
        t -= step
        if abs(step) < 1e-15:
            return t
    # golden-section refinement of the distance near t0
    h = 0.05
    lo, hi = t0 - h, t0 + h
    phi = (math.sqrt(5) - 1) / 2
    for _ in range(200):
        a = hi - phi * (hi - lo)
        b = lo + phi * (hi - lo)
        if np.linalg.norm(x - loop(a)[0]) < np.linalg.norm(x - loop(b)[0]):
            hi = b
        else:
            lo = a
    return 0.5 * (lo + hi)


def tubular_invert(curve: ArcLoop, frame: MovingFrame, x, reach: float | None = None) -> TubularPoint:
    """Nearest-point projection onto the curve and angle in the frame."""
    x = np.asarray(x, dtype=float)
    if reach is None:
        reach = reach_estimate(curve)
    loop = curve.loop
    dist = np.linalg.norm(curve.position - x, axis=1)
    i = int(np.argmin(dist))
    # other local minima of the node distance that compete with the best one
    n = curve.n
    prev, nxt = np.roll(dist, 1), np.roll(dist, -1)
    local = np.nonzero((dist <= prev) & (dist <= nxt))[0]
    t = _foot_parameter(loop, x, float(curve.t_nodes[i]))
    rho = float(np.linalg.norm(x - loop(t)[0]))
    for j in local:
        lag = min(abs(j - i), n - abs(j - i))
        if lag > 2 and dist[j] - rho < 1e-9 * curve.length:
            tj = _foot_parameter(loop, x, float(curve.t_nodes[j]))
            rj = float(np.linalg.norm(x - loop(tj)[0]))
            sep = abs(loop.arclength(tj)[0] - loop.arclength(t)[0])
            sep = min(sep, curve.length - sep)
            if abs(rj - rho) < 1e-9 * curve.length and sep > 1e-6 * curve.length:
                raise GeometryError("ambiguous nearest-point projection")
    if rho >= reach:
        raise GeometryError("point lies beyond the reach of the curve")
    t = float(np.mod(t, TWO_PI))
    s = float(loop.arclength(t)[0])
    _, S, N = frame.at_t(t)
    d = x - loop(t)[0]
    theta = math.atan2(float(d @ N[0]), float(d @ S[0]))
    return TubularPoint(s, rho, theta)


# ---------------------------------------------------------------------------
# Writhe tuning
# ---------------------------------------------------------------------------

def _family_writhe(a: float, n: int) -> float:
    return _writhe_of_arc(arclength_resample(tuned_family(a), n))


def tune_writhe(target, n: int = 512, tol: float = 1e-6, return_parameter: bool = False):
    """Member of :func:`tuned_family` whose writhe equals ``target``.

    Secant iteration on the family parameter.  Returns the resampled curve
    (and the parameter if requested).
    """
    target = float(Fraction(target)) if isinstance(target, (str, Fraction)) else float(target)
    if abs(target) >= 3:
        raise GeometryError("target writhe outside the family range")
    if target == 0:
        a = 0.0
    else:
        sign = -1.0 if target > 0 else 1.0
        goal = abs(target)
        # coarse low-resolution scan for a bracket, then secant with bisection safeguard
        grid = np.linspace(0.05, 0.98, 32)
        vals = [-_family_writhe(g, 128) for g in grid]
        idx = next((i for i, v in enumerate(vals) if v >= goal), None)
        if idx is None:
            raise GeometryError("target writhe outside the family range")
        lo, hi = (grid[idx - 1], vals[idx - 1]) if idx > 0 else (0.0, 0.0), (grid[idx], vals[idx])
        a0, w0 = lo
        a1, w1 = hi
        blo, bhi = a0, a1
        for _ in range(60):
            if abs(w1 - goal) < 0.1 * tol:
                break
            if w1 == w0:
                raise GeometryError("secant iteration stagnated")
            a2 = a1 - (w1 - goal) * (a1 - a0) / (w1 - w0)
            if not blo < a2 < bhi:
                a2 = 0.5 * (blo + bhi)
            w2 = -_family_writhe(a2, n)
            if w2 < goal:
                blo = a2
            else:
                bhi = a2
            a0, w0, a1, w1 = a1, w1, a2, w2
        else:
            raise GeometryError("secant iteration did not converge")
        a = sign * a1
    curve = arclength_resample(tuned_family(a), n)
    wr = _writhe_of_arc(curve)
    if abs(wr - target) > tol:
        raise GeometryError(f"tuned writhe {wr} misses target {target}")
    return (curve, a) if return_parameter else curve
