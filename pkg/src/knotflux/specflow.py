"""
Spectral-flow bookkeeping
=========================

Exact rational arithmetic for the counts that govern the spectral flow of
magnetic cable knots, the critical flux sets and eigenvalues met along the
deformation loops, the conformal data of the three-sphere chart, and a
one-dimensional effective spectrum checked against its quantisation rule.

For a coprime pair ``(N, M)`` write ``eps = 1`` when ``MN`` is even, else
``0``, and ``eps_bar = 1 - eps``.  The offset ``delta(N, M)`` is the
representative in ``(0, 1)`` of ``(M/N - eps)/2`` and

    D(N, M) = #{(k, j) : 1 <= k <= N, 0 <= j < M, j + delta < M k / N}.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction

import numpy as np

from .curves import ArcLoop, MovingFrame
from .quadrature import exact_sum

__all__ = [
    "CablePair",
    "ResidueClass",
    "CriticalEigSet",
    "SpectrumCheck",
    "SpectralFlowError",
    "delta_nm",
    "d_count",
    "d_closed",
    "comb_identity",
    "sf_cable_class",
    "sf_tower",
    "sf_realization",
    "intermediate_sf",
    "critical_flux_sets",
    "homotopy_crossings",
    "stereographic",
    "omega",
    "s3_length",
    "conformal_switch",
    "critical_eigenvalues",
    "critical_limit_set",
    "effective_spectrum",
    "parse_tower",
]

TWO_PI = 2.0 * math.pi


class SpectralFlowError(ValueError):
    """Raised when a spectral flow is undefined or an identity fails."""


@dataclass(frozen=True)
class CablePair:
    """Coprime cable data ``(N, M)`` with ``N >= 2`` and ``M >= 1``."""

    N: int
    M: int

    def __post_init__(self):
        if self.N < 2 or self.M < 1:
            raise ValueError("need N >= 2 and M >= 1")
        if math.gcd(self.N, self.M) != 1:
            raise ValueError("N and M must be coprime")

    @property
    def eps(self) -> int:
        return 1 if (self.M * self.N) % 2 == 0 else 0

    @property
    def eps_bar(self) -> int:
        return 1 - self.eps


def parse_tower(text: str) -> list[CablePair]:
    """``"2,3;3,5"`` to a list of pairs; an empty string is the unknot."""
    text = text.strip()
    if not text:
        return []
    out = []
    for item in text.split(";"):
        n, m = (int(v) for v in item.split(","))
        out.append(CablePair(n, m))
    return out


def delta_nm(pair: CablePair) -> Fraction:
    """Representative in ``(0, 1)`` of ``(M/N - eps)/2`` modulo one."""
    raw = Fraction(1, 2) * (Fraction(pair.M, pair.N) - pair.eps)
    return raw - math.floor(raw)


def d_count(pair: CablePair) -> int:
    """Double-sum count ``D(N, M)`` in exact arithmetic.

    With ``c = 2 N delta`` an integer, ``j + delta < M k / N`` reads
    ``j < (2 M k - c) / (2 N)``, so each ``k`` contributes a clamped ceiling.
    """
    N, M = pair.N, pair.M
    c = 2 * N * delta_nm(pair)
    if c.denominator != 1:
        raise SpectralFlowError("2 N delta is not an integer")
    c = int(c)
    count = 0
    for k in range(1, N + 1):
        q, r = divmod(2 * M * k - c, 2 * N)
        if r == 0 and 0 <= q < M:
            raise SpectralFlowError("tie in the critical-point count")
        count += min(max(q + (r > 0), 0), M)
    return count


def d_closed(pair: CablePair) -> int:
    """Closed form of ``D(N, M)`` for ``N > M``."""
    if pair.N <= pair.M:
        raise ValueError("closed form requires N > M")
    MN = pair.M * pair.N
    return MN // 2 if MN % 2 == 0 else (pair.M + 1) * pair.N // 2


def _floor_term(pair: CablePair) -> int:
    return pair.N * math.floor(Fraction(1, 2) * (pair.eps - Fraction(pair.M, pair.N)))


def _half_term(pair: CablePair) -> int:
    twice = (pair.M - pair.eps_bar) * pair.N
    if twice % 2:
        raise SpectralFlowError("half term is not an integer")
    return twice // 2


def comb_identity(pair: CablePair) -> int:
    """``N floor((eps - M/N)/2) + D(N, M) - (M - eps_bar) N / 2``; zero for coprime pairs."""
    return _floor_term(pair) + d_count(pair) - _half_term(pair)


def sf_cable_class(base_sf: int, pair: CablePair) -> int:
    """Spectral flow of the cable class: ``N`` times that of the base."""
    return pair.N * int(base_sf)


def sf_tower(tower) -> int:
    """Fold :func:`sf_cable_class` outward from the unknot (spectral flow 0)."""
    sf = 0
    for pair in tower:
        sf = sf_cable_class(sf, pair)
    return sf


def intermediate_sf(pair: CablePair, base_sf: int) -> int:
    """Spectral flow assembled from the crossing counts; checked against ``N * base_sf``."""
    value = pair.N * int(base_sf) + _floor_term(pair) + d_count(pair) - _half_term(pair)
    if value != sf_cable_class(base_sf, pair):
        raise SpectralFlowError("intermediate formula disagrees with the cable class")
    return value


def sf_realization(class_sf: int, writhe: float, guard: float = 1e-3) -> int:
    """``class_sf + floor((1 - Wr)/2)``, undefined when ``Wr`` is an odd integer."""
    nearest_odd = 2 * round((writhe - 1.0) / 2.0) + 1
    if abs(writhe - nearest_odd) < guard:
        raise SpectralFlowError(f"writhe {writhe} is within {guard} of the odd integer {nearest_odd}")
    return int(class_sf) + math.floor(0.5 * (1.0 - writhe))


# ---------------------------------------------------------------------------
# Critical fluxes
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class ResidueClass:
    """The set ``residue + modulus * Z`` of rationals, with ``0 <= residue < modulus``."""

    residue: Fraction
    modulus: Fraction
    t_values: tuple = ()

    @classmethod
    def of(cls, value: Fraction, modulus: Fraction, t_values=()) -> "ResidueClass":
        value = Fraction(value)
        modulus = Fraction(modulus)
        return cls(value - modulus * math.floor(value / modulus), modulus, tuple(t_values))

    def contains(self, x) -> bool:
        q = (Fraction(x) - self.residue) / self.modulus
        return q.denominator == 1

    def points(self, lo, hi) -> list[Fraction]:
        """Members in ``[lo, hi)``."""
        lo, hi = Fraction(lo), Fraction(hi)
        first = math.ceil((lo - self.residue) / self.modulus)
        out = []
        x = self.residue + first * self.modulus
        while x < hi:
            out.append(x)
            x += self.modulus
        return out


def critical_flux_sets(pair: CablePair, branch: str, parity: str | None = None) -> ResidueClass:
    """Critical auxiliary fluxes along the deformation loops.

    Parameters
    ----------
    branch : {"cable", "base"}
        ``cable``: the collapsed cable at ``t = 1``; ``base``: the base curve at
        ``t`` in ``{1/N, ..., 1}``.
    parity : {"even", "odd"}, optional
        Defaults to the parity of ``MN``.  The odd variants use
        ``Wr = MN`` for the cable and ``Wr = M/N`` for the base.
    """
    N, M = pair.N, pair.M
    parity = parity or ("even" if pair.eps else "odd")
    if branch not in ("cable", "base") or parity not in ("even", "odd"):
        raise ValueError("unknown branch or parity")
    if branch == "cable":
        t_values = (Fraction(1),)
        if parity == "even":
            return ResidueClass.of(Fraction(1, 2) * (M - Fraction(1, N)), Fraction(1, N), t_values)
        return ResidueClass.of(Fraction(M * N, 2 * N), Fraction(1, N), t_values)
    t_values = tuple(Fraction(k, N) for k in range(1, N + 1))
    if parity == "even":
        return ResidueClass.of(Fraction(1, 2) * (Fraction(M, N) - 1), Fraction(1), t_values)
    return ResidueClass.of(Fraction(M, 2 * N), Fraction(1), t_values)


def _orientation(M: int, alpha: Fraction, t: Fraction) -> Fraction:
    """Cross product of the segment ``(0,0)->(M,1)`` with ``(alpha, t)``."""
    return M * t - alpha


def homotopy_crossings(pair: CablePair) -> tuple[int, int]:
    """Critical points crossed when deforming the loops on the effective torus.

    The cable count enumerates the critical fluxes of the collapsed cable in
    ``{1} x [0, M)``.  The base count collects the base critical points
    ``(alpha, t) = (j + delta, k/N)`` lying strictly above the segment from
    ``(0, 0)`` to ``(M, 1)``.
    """
    N, M = pair.N, pair.M
    cable = critical_flux_sets(pair, "cable", "even" if pair.eps else "odd")
    cable_count = len(cable.points(0, M))
    base = critical_flux_sets(pair, "base")
    base_count = 0
    for t in base.t_values:
        for alpha in base.points(0, M):
            side = _orientation(M, alpha, t)
            if side == 0:
                raise SpectralFlowError("critical point on the deformation segment")
            base_count += side > 0
    return cable_count, base_count


# ---------------------------------------------------------------------------
# Three-sphere chart
# ---------------------------------------------------------------------------

def stereographic(x) -> np.ndarray:
    """Inverse stereographic chart ``R^3 -> S^3 in C^2``; rows map to rows."""
    x = np.asarray(x, dtype=float)
    r2 = np.sum(x * x, axis=-1)
    d = r2 + 1.0
    z0 = 2.0 * (x[..., 0] + 1j * x[..., 1]) / d
    z1 = (2.0 * x[..., 2] + 1j * (r2 - 1.0)) / d
    return np.stack([z0, z1], axis=-1)


def omega(x) -> np.ndarray | float:
    """Conformal factor ``2 / (1 + |x|^2)``."""
    x = np.asarray(x, dtype=float)
    out = 2.0 / (1.0 + np.sum(x * x, axis=-1))
    return float(out) if np.ndim(out) == 0 else out


def s3_length(curve: ArcLoop) -> float:
    """Length of the curve in the round metric: ``int Omega(gamma(s)) ds``."""
    return exact_sum(omega(curve.position)) * curve.spacing


def conformal_switch(x) -> np.ndarray:
    """Conformal map exchanging the vertical axis and the horizontal unit circle.

    ``x -> (2 x3, |x|^2 - 1, 2 x1) / |e2 - x|^2`` with ``e2 = (0, 1, 0)``.
    """
    x = np.asarray(x, dtype=float)
    e2 = np.array([0.0, 1.0, 0.0])
    d = np.sum((x - e2) ** 2, axis=-1)
    if np.any(d == 0):
        raise ValueError("the point e2 is sent to infinity")
    r2 = np.sum(x * x, axis=-1)
    return np.stack([2.0 * x[..., 2], r2 - 1.0, 2.0 * x[..., 0]], axis=-1) / d[..., None]


# ---------------------------------------------------------------------------
# Critical eigenvalues and the effective spectrum
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class CriticalEigSet:
    """Parameters of the critical eigenvalue set of the collapsed family."""

    N: int
    M: int
    t: float
    alpha_a: float
    l_tilde: float
    even: bool = True
    m_window: tuple = (-5, 5)

    def __post_init__(self):
        if not self.l_tilde > 0:
            raise ValueError("S^3 length must be positive")
        if self.t > 1:
            raise ValueError("t must lie in (0, 1]")


def critical_eigenvalues(spec: CriticalEigSet) -> list[float]:
    """Sorted critical eigenvalues over ``0 <= k < floor(N t)`` and the ``m`` window.

    ``lambda = (-2 pi (M/N)(N t - k - 1/2) + 2 pi alpha_a + pi [even] + 2 pi m) / l_tilde``.
    """
    if spec.t <= 0:
        return []
    N, M = spec.N, spec.M
    kmax = math.floor(Fraction(spec.t).limit_denominator(10**12) * N)
    shift = math.pi if spec.even else 0.0
    vals = []
    for k in range(kmax):
        for m in range(spec.m_window[0], spec.m_window[1] + 1):
            num = -TWO_PI * (M / N) * (N * spec.t - k - 0.5) + TWO_PI * spec.alpha_a + shift + TWO_PI * m
            vals.append(num / spec.l_tilde)
    return sorted(vals)


def critical_limit_set(N: int, M: int, alpha_a: float, l_tilde: float, even: bool,
                       lo: float, hi: float) -> list[float]:
    """Members in ``[lo, hi]`` of the ``t -> 1`` limit of the critical set.

    ``(M pi + N pi [even] + 2 pi N alpha_a + 2 pi m) / (N l_tilde)``, ``m`` in ``Z``.
    """
    base = M * math.pi + (N * math.pi if even else 0.0) + TWO_PI * N * alpha_a
    step = TWO_PI / (N * l_tilde)
    m0 = math.ceil((lo - base / (N * l_tilde)) / step)
    out = []
    m = m0
    while True:
        v = (base + TWO_PI * m) / (N * l_tilde)
        if v > hi:
            break
        out.append(v)
        m += 1
    return out


@dataclass(frozen=True)
class SpectrumCheck:
    formula: list
    matrix: list
    residual: float
    l_tilde: float
    total_torsion: float
    m_window: tuple


def effective_spectrum(curve: ArcLoop, frame: MovingFrame, c: float, alpha_a: float,
                       m_window=(-5, 5), tol: float = 1e-6) -> SpectrumCheck:
    """Eigenvalues of ``i e' + (c tau + 2 pi alpha_a / l) e = lambda Omega e`` with
    antiperiodic ``e``.

    Two independent computations are compared: the quantisation rule
    ``lambda_m = (c int tau + 2 pi alpha_a + pi + 2 pi m) / l_tilde`` and a dense
    Fourier discretisation on the antiperiodic modes ``exp(i (j + 1/2) 2 pi s / l)``
    solved as a symmetric-definite problem.
    """
    n = curve.n
    ell = curve.length
    w = omega(curve.position)
    l_tilde = s3_length(curve)
    tau = np.asarray(frame.tau, dtype=float)
    total_tau = exact_sum(tau) * curve.spacing
    ms = np.arange(m_window[0], m_window[1] + 1)
    formula = (c * total_tau + TWO_PI * alpha_a + math.pi + TWO_PI * ms) / l_tilde

    # antiperiodic derivative: twist by exp(-i pi s / l), differentiate spectrally
    s = curve.s_nodes
    wave = (np.fft.fftfreq(n, d=1.0 / n) + 0.5) * (TWO_PI / ell)
    F = np.fft.fft(np.eye(n), axis=0)
    twist = np.exp(1j * math.pi * s / ell)
    # D = T^* F^{-1} diag(i k) F T with T = diag(exp(-i pi s / l))
    D = (twist[:, None] * np.fft.ifft(1j * wave[:, None] * (F * np.conj(twist)[None, :]), axis=0))
    A = 1j * D + np.diag(c * tau + TWO_PI * alpha_a / ell)
    A = 0.5 * (A + A.conj().T)
    scale = 1.0 / np.sqrt(w)
    H = scale[:, None] * A * scale[None, :]
    eig = np.linalg.eigvalsh(H)
    matched = []
    for lam in formula:
        matched.append(float(eig[np.argmin(np.abs(eig - lam))]))
    residual = float(np.max(np.abs(np.array(matched) - formula)))
    if residual > tol:
        raise SpectralFlowError(f"matrix and formula spectra differ by {residual:.2e}")
    return SpectrumCheck(formula.tolist(), matched, residual, float(l_tilde), float(total_tau),
                         tuple(m_window))
