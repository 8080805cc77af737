"""
Planar N-solenoid model
=======================

``N`` Aharonov-Bohm solenoids of flux ``2 pi alpha`` sit at the roots
``eta zeta^k`` of ``z^N = eta^N``.  The spin-down singular functions

    g_k(z) = chi(|z|) conj(z)^k Q(z)^{-alpha},    Q(z) = |z^N - eta^N|,

are square integrable for ``eta > 0``; as ``eta -> 0`` their norms stay
bounded iff ``N alpha - k < 1``.  In the borderline index ``k = floor(N alpha)``
the suitably corrected profile converges to ``K_e(r) e^{-i E theta}`` with
``e = N alpha - E``, normalised by

    C_a = 2 pi int_0^inf r (K_a(r)^2 + K_{1-a}(r)^2) dr.

Angular integrals of ``Q^{-p}`` are reduced exactly with

    (1/2 pi) int_0^{2 pi} (a^2 + b^2 - 2ab cos t)^{-p} dt
        = max(a, b)^{-2p} 2F1(p, p; 1; (min/max)^2),

which leaves one-dimensional radial integrals.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy import special

from .magnetics import fit_loglog_slope
from .quadrature import QuadConfig, adaptive_interval, adaptive_interval_info

__all__ = [
    "SolenoidConfig",
    "chi",
    "cassini_modulus",
    "singular_basis",
    "angular_mean",
    "g_norm",
    "g_norm_table",
    "norm_exponent",
    "bessel_K",
    "C_a",
    "limit_profile_distance",
]

TWO_PI = 2.0 * math.pi
_RADIAL_CFG = QuadConfig(rel_tol=1e-10, abs_tol=1e-300, max_depth=50)


@dataclass(frozen=True)
class SolenoidConfig:
    """Solenoid data ``N``, ``eta`` and flux fraction ``alpha``."""

    N: int
    eta: float
    alpha: float

    def __post_init__(self):
        if self.N < 2:
            raise ValueError("N must be at least 2")
        if not 0.0 < self.alpha < 1.0:
            raise ValueError("alpha must lie in (0, 1)")
        if self.eta < 0:
            raise ValueError("eta must be non-negative")

    @property
    def E(self) -> int:
        return math.floor(self.N * self.alpha)

    @property
    def e(self) -> float:
        return self.N * self.alpha - self.E

    @property
    def positions(self) -> np.ndarray:
        return self.eta * np.exp(2j * math.pi * np.arange(self.N) / self.N)


def chi(r) -> np.ndarray:
    """Radial cutoff: one on the unit disk, zero beyond radius 2, quintic in between."""
    x = np.clip(np.asarray(r, dtype=float) - 1.0, 0.0, 1.0)
    return 1.0 - x**3 * (10.0 - 15.0 * x + 6.0 * x**2)


def cassini_modulus(cfg: SolenoidConfig, z) -> np.ndarray:
    """``Q(z) = |z^N - eta^N|``."""
    z = np.asarray(z, dtype=complex)
    return np.abs(z**cfg.N - cfg.eta**cfg.N)


def singular_basis(cfg: SolenoidConfig, k: int, z) -> np.ndarray:
    """``g_k(z) = chi(|z|) conj(z)^k Q(z)^{-alpha}`` (spin-down component)."""
    if not 0 <= k < cfg.N:
        raise ValueError("k must lie in 0..N-1")
    z = np.asarray(z, dtype=complex)
    return chi(np.abs(z)) * np.conj(z) ** k * cassini_modulus(cfg, z) ** (-cfg.alpha)


def _hyp_symmetric(power: float, z, one_minus_z) -> np.ndarray:
    """``2F1(power, power; 1; z)`` with ``1 - z`` supplied separately.

    Near ``z = 1`` the connection formula to ``1 - z`` keeps the singular
    factor ``(1 - z)^{1 - 2 power}`` accurate; ``power = 1/2`` is the complete
    elliptic integral ``2 K(z) / pi``.
    """
    z = np.asarray(z, dtype=float)
    w = np.asarray(one_minus_z, dtype=float)
    out = np.empty(np.broadcast(z, w).shape)
    z, w = np.broadcast_arrays(z, w)
    near = w < 0.5
    out[~near] = special.hyp2f1(power, power, 1.0, z[~near])
    if np.any(near):
        wn = w[near]
        if abs(power - 0.5) < 1e-14:
            out[near] = 2.0 / math.pi * special.ellipkm1(wn)
        else:
            g = special.gamma
            c1 = g(1.0 - 2 * power) / g(1.0 - power) ** 2
            c2 = g(2 * power - 1.0) / g(power) ** 2
            out[near] = (c1 * special.hyp2f1(power, power, 2 * power, wn)
                         + c2 * wn ** (1.0 - 2 * power)
                         * special.hyp2f1(1.0 - power, 1.0 - power, 2.0 - 2 * power, wn))
    return out


def angular_mean(a, b, power: float, gap=None) -> np.ndarray:
    """``(1/2pi) int (a^2 + b^2 - 2ab cos t)^{-power} dt`` for ``a, b >= 0``.

    ``gap = |a - b|`` may be passed when it is known more accurately than
    the difference of ``a`` and ``b``.
    """
    a = np.asarray(a, dtype=float)
    b = np.asarray(b, dtype=float)
    hi = np.maximum(a, b)
    lo = np.minimum(a, b)
    gap = hi - lo if gap is None else np.asarray(gap, dtype=float)
    z = (lo / hi) ** 2
    one_minus_z = gap * (hi + lo) / hi**2
    return hi ** (-2.0 * power) * _hyp_symmetric(power, z, one_minus_z)


def _power_gap(r, d, eta: float, N: int) -> np.ndarray:
    """``|r^N - eta^N|`` for ``r = eta +- d`` without cancellation."""
    return d * sum(r**j * eta ** (N - 1 - j) for j in range(N))


def _offset_breaks(length: float, eta: float) -> list[float]:
    pts = []
    d = eta / 4.0
    while d > eta * 1e-4:
        if d < length:
            pts.append(d)
        d /= 4.0
    d = eta
    while d < length:
        pts.append(d)
        d *= 4.0
    if length > 1.0 - eta > 0:
        pts.append(1.0 - eta)
    return sorted(set(pts))


def g_norm(cfg: SolenoidConfig, k: int, quad: QuadConfig | None = None) -> float:
    """``L^2`` norm of ``g_k``; ``inf`` when ``eta = 0`` and the norm diverges.

    The angular integral over each circle is exact.  The radial integral is
    split at the solenoid radius and written in the offset ``d = |r - eta|``
    on both sides, so the singular factor is resolved in relative precision.
    """
    if not 0 <= k < cfg.N:
        raise ValueError("k must lie in 0..N-1")
    quad = quad or _RADIAL_CFG
    N, eta, alpha = cfg.N, cfg.eta, cfg.alpha
    if eta == 0.0:
        p = 2 * k + 1 - 2 * N * alpha
        if p <= -1.0:
            return math.inf
        outer = adaptive_interval(lambda r: chi(r) ** 2 * r**p, 1.0, 2.0, quad)
        return math.sqrt(TWO_PI * (1.0 / (p + 1.0) + outer))
    if eta >= 2.0:
        raise ValueError("eta must be below the cutoff radius 2")
    bN = eta**N

    # d = v^p turns the d^{1 - 2 alpha} singularity into a smooth factor
    power = max(2, math.ceil(2.0 / (2.0 - 2.0 * alpha)))

    def side(sign):
        def f(v):
            d = v**power
            r = eta + sign * d
            gap = _power_gap(r, d, eta, N)
            jac = power * v ** (power - 1)
            return chi(r) ** 2 * r ** (2 * k + 1) * angular_mean(r**N, bN, alpha, gap) * jac
        return f

    total = 0.0
    for sign, length in ((-1.0, eta), (1.0, 2.0 - eta)):
        brk = _offset_breaks(length, eta)
        if sign > 0 and eta < 1.0:
            brk = sorted(set(brk + [1.0 - eta]))
        brk = [b ** (1.0 / power) for b in brk]
        top = length ** (1.0 / power)
        res = adaptive_interval_info(side(sign), 0.0, top, quad, breakpoints=brk)
        if not res.converged:
            res = adaptive_interval_info(side(sign), 0.0, top, quad, breakpoints=brk,
                                         initial_pieces=4)
            if not res.converged:
                raise RuntimeError(f"radial quadrature did not converge (error {res.error:.2e})")
        total += res.value
    return math.sqrt(TWO_PI * total)


def g_norm_table(N: int, alpha: float, k: int, eta_list, jobs: int = 1) -> list[float]:
    """``g_norm`` over ``eta_list``, in input order."""
    from .cables import _ordered_map
    return _ordered_map(lambda e: g_norm(SolenoidConfig(N, float(e), alpha), k), list(eta_list), jobs)


def norm_exponent(N: int, alpha: float, k: int, eta_list, jobs: int = 1) -> float:
    """Least-squares slope of ``log g_norm`` against ``log eta``.

    For ``N alpha - k > 1`` the slope approaches ``k + 1 - N alpha``; in the
    convergent case it approaches zero.
    """
    eta = np.asarray(eta_list, dtype=float)
    if np.log10(eta.max() / eta.min()) < 1.5 - 1e-12:
        raise ValueError("eta list must span at least 1.5 decades")
    norms = g_norm_table(N, alpha, k, eta, jobs)
    slope, _ = fit_loglog_slope(eta, norms)
    return float(slope)


def bessel_K(a: float, x) -> np.ndarray | float:
    """Modified Bessel function of the second kind ``K_a(x)``, ``0 < a < 1``."""
    if not 0.0 < a < 1.0:
        raise ValueError("order must lie strictly between 0 and 1")
    x = np.asarray(x, dtype=float)
    if np.any(x <= 0):
        raise ValueError("argument must be positive")
    out = special.kv(a, x)
    return float(out) if out.ndim == 0 else out


def _bessel_square_head(a: float, terms: int = 30) -> float:
    """``int_0^1 r K_a(r)^2 dr`` from the ascending series of ``I_{+-a}``.

    ``K_a = pi (I_{-a} - I_a) / (2 sin pi a)`` and every product of two
    power series integrates termwise: ``int_0^1 r (r/2)^p dr = 2^{-p}/(p+2)``.
    """
    m = np.arange(terms)
    lgm = special.gammaln(m + 1.0)

    def coeffs(nu):
        return np.exp(-lgm - special.gammaln(m + nu + 1.0))

    total = []
    for mu, nu, w in ((-a, -a, 1.0), (-a, a, -2.0), (a, a, 1.0)):
        cm, cn = coeffs(mu), coeffs(nu)
        p = 2.0 * (m[:, None] + m[None, :]) + mu + nu
        total.append(w * np.sum(np.outer(cm, cn) * 2.0 ** (-p) / (p + 2.0)))
    scale = (math.pi / (2.0 * math.sin(math.pi * a))) ** 2
    return scale * math.fsum(total)


def C_a(a: float, quad: QuadConfig | None = None) -> float:
    """``2 pi int_0^inf r (K_a^2 + K_{1-a}^2) dr``.

    The singular part near the origin is integrated from the series on
    ``[0, 1]``; the exponentially decaying tail is adaptive on ``[1, 60]``.
    """
    if not 0.0 < a < 1.0:
        raise ValueError("a must lie in (0, 1)")
    quad = quad or QuadConfig(rel_tol=1e-13, abs_tol=1e-300)
    head = _bessel_square_head(a) + _bessel_square_head(1.0 - a)
    tail = adaptive_interval(
        lambda r: r * (special.kv(a, r) ** 2 + special.kv(1.0 - a, r) ** 2), 1.0, 60.0, quad,
        breakpoints=(2.0, 5.0, 10.0, 20.0), transform=False)
    return TWO_PI * (head + tail)


def _excess_series(x2, power: float, terms: int = 40) -> np.ndarray:
    """``2F1(power, power; 1; x2) - 1`` for small ``x2``."""
    m = np.arange(1, terms + 1)
    c = np.exp(2.0 * (special.gammaln(power + m) - special.gammaln(power) - special.gammaln(m + 1.0)))
    return np.power.outer(np.asarray(x2, dtype=float), m) @ c


def limit_profile_distance(N: int, alpha: float, eta_list) -> list[float]:
    """Distance from the corrected, normalised profile to its Bessel limit.

    For ``k = E`` the profile is ``e^{-iE theta}(K_e(r) - C r^{-e}) + C conj(z)^E Q^{-alpha}``
    with ``C = Gamma(e) / 2^{1-e}``; after division by ``sqrt(C_e)`` its
    distance to ``C_e^{-1/2} e^{-iE theta} K_e(r)`` is computed on the annulus
    ``10 eta <= |z| <= 1``.  The difference reduces to
    ``C e^{-iE theta} r^E (Q^{-alpha} - r^{-N alpha})`` whose angular mean square
    is an exact hypergeometric excess.
    """
    cfg = SolenoidConfig(N, 0.0, alpha)
    E, e = cfg.E, cfg.e
    if e <= 1e-12:
        raise ValueError("fractional part of N alpha must be positive")
    C = math.gamma(e) / 2.0 ** (1.0 - e)
    norm = C / math.sqrt(C_a(e))
    out = []
    for eta in np.asarray(eta_list, dtype=float):
        if 10.0 * eta >= 1.0:
            raise ValueError("annulus 10 eta <= r <= 1 is empty")
        bN = eta**N

        def integrand(r):
            x2 = (bN / r**N) ** 2
            excess = _excess_series(x2, alpha) - 2.0 * _excess_series(x2, 0.5 * alpha)
            return r ** (2 * E + 1 - 2 * N * alpha) * excess

        val = adaptive_interval(integrand, 10.0 * eta, 1.0, _RADIAL_CFG,
                                breakpoints=10.0 * eta * 4.0 ** np.arange(1, 12), transform=False)
        out.append(norm * math.sqrt(TWO_PI * val))
    return out
