import math

import mpmath
import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from scipy import integrate, special

from knotflux.model2d import (
    C_a, SolenoidConfig, angular_mean, bessel_K, cassini_modulus, chi, g_norm, g_norm_table,
    limit_profile_distance, norm_exponent, singular_basis,
)

ETAS = np.geomspace(1e-4, 1e-2, 5)


def _direct_norm(N, alpha, k, eta):
    """Plain 2D polar quadrature of |g_k|^2 over one angular sector, times N."""
    def inner(theta):
        def f(r):
            z = r * np.exp(1j * theta)
            return r * abs(singular_basis(SolenoidConfig(N, eta, alpha), k, z)) ** 2
        return integrate.quad(f, 0.0, 2.0, points=[eta, 1.0], limit=400, epsabs=1e-13, epsrel=1e-11)[0]
    val = integrate.quad(inner, 0.0, 2 * math.pi / N, limit=400, epsabs=1e-12, epsrel=1e-10)[0]
    return math.sqrt(N * val)


# ---------------------------------------------------------------------------
# Cutoff and Cassinian modulus
# ---------------------------------------------------------------------------

def test_chi_plateau_and_support():
    r = np.linspace(0, 3, 301)
    c = chi(r)
    assert np.all(c[r <= 1] == 1.0) and np.all(c[r >= 2] == 0.0)
    assert np.all(np.diff(c) <= 0)


def test_singular_basis_vanishes_outside_cutoff():
    cfg = SolenoidConfig(3, 0.01, 0.4)
    z = 2.5 * np.exp(1j * np.linspace(0, 6, 7))
    assert np.all(singular_basis(cfg, 1, z) == 0)


def test_cassini_modulus_at_origin():
    for N, eta in [(2, 0.5), (3, 0.25), (5, 0.125)]:
        assert cassini_modulus(SolenoidConfig(N, eta, 0.5), 0.0) == eta**N


@settings(max_examples=40)
@given(st.integers(2, 5), st.floats(-1.5, 1.5), st.floats(-1.5, 1.5))
def test_cassini_modulus_is_rotation_invariant(N, x, y):
    # dyadic eta and the rotation z -> zeta z in exact arithmetic: z^N is unchanged
    cfg = SolenoidConfig(N, 0.25, 0.5)
    z = complex(x, y)
    w = complex(mpmath.mpc(z) * mpmath.exp(2j * mpmath.pi / N))
    assert abs(cassini_modulus(cfg, w) - cassini_modulus(cfg, z)) <= 1e-14 * max(1.0, abs(z) ** N)


def test_angular_mean_matches_direct_quadrature():
    for a, b, p in [(0.3, 0.7, 0.3), (0.5, 0.501, 0.8), (1.0, 0.2, 0.5)]:
        direct = integrate.quad(lambda t: (a * a + b * b - 2 * a * b * math.cos(t)) ** (-p), 0, 2 * math.pi,
                                limit=400, epsabs=1e-14, epsrel=1e-12)[0] / (2 * math.pi)
        assert abs(angular_mean(a, b, p) - direct) < 1e-9 * direct


# ---------------------------------------------------------------------------
# Norms of the singular basis
# ---------------------------------------------------------------------------

@pytest.mark.parametrize("N,alpha,k,eta", [(2, 0.3, 0, 1e-2), (3, 0.4, 1, 0.05), (2, 0.45, 1, 0.1)])
def test_g_norm_matches_direct_oracle(N, alpha, k, eta):
    assert abs(g_norm(SolenoidConfig(N, eta, alpha), k) - _direct_norm(N, alpha, k, eta)) < 1e-7


def test_convergent_norm_approaches_limit():
    limit = g_norm(SolenoidConfig(2, 0.0, 0.3), 0)
    assert math.isfinite(limit)
    for eta in (1e-2, 1e-3):
        assert abs(g_norm(SolenoidConfig(2, eta, 0.3), 0) / limit - 1.0) < 0.01


def test_divergent_norm_grows():
    vals = g_norm_table(2, 0.9, 0, [1e-2, 1e-3, 1e-4])
    assert vals[0] < vals[1] < vals[2]
    assert math.isinf(g_norm(SolenoidConfig(2, 0.0, 0.9), 0))


@pytest.mark.parametrize("k", [0, 1, 2])
def test_plateau_lower_bound(k):
    val = g_norm(SolenoidConfig(3, 0.0, 1e-9), k)
    assert val**2 >= math.pi / (k + 1)
    assert val**2 < math.pi / (k + 1) + 2 * math.pi * 1.0 * (2 ** (2 * k + 2) - 1) / (2 * k + 2)


@pytest.mark.parametrize("N,alpha,k,expected", [(2, 0.9, 0, -0.8), (3, 0.8, 0, -1.4), (2, 0.6, 1, 0.0)])
def test_norm_exponent_examples(N, alpha, k, expected):
    assert abs(norm_exponent(N, alpha, k, ETAS) - expected) < 0.1


def test_norm_exponent_needs_span():
    with pytest.raises(ValueError):
        norm_exponent(2, 0.9, 0, [1e-3, 1e-2])


TRICHOTOMY = [
    (2, 0.3, 0), (2, 0.5, 0), (2, 0.9, 0), (2, 0.9, 1), (2, 0.7, 1),
    (3, 0.2, 0), (3, 0.5, 0), (3, 2.0 / 3.0, 1), (3, 0.9, 1), (3, 0.9, 2), (3, 1.0 / 3.0, 0),
]


@pytest.mark.parametrize("N,alpha,k", TRICHOTOMY)
def test_divergence_trichotomy(N, alpha, k):
    excess = N * alpha - k
    norms = np.array(g_norm_table(N, alpha, k, ETAS))
    if abs(excess - 1.0) < 1e-12:
        # logarithmic: norm^2 grows linearly in log(1/eta) with a stable rate
        x = np.log(1.0 / ETAS)
        rates = np.diff(norms**2) / np.diff(x)
        assert np.all(rates > 0)
        assert np.ptp(rates) < 0.1 * np.mean(rates)
    else:
        slope = np.polyfit(np.log(ETAS), np.log(norms), 1)[0]
        expected = k + 1 - N * alpha if excess > 1 else 0.0
        assert abs(slope - expected) < 0.1


# ---------------------------------------------------------------------------
# Bessel profile
# ---------------------------------------------------------------------------

@pytest.mark.parametrize("x", [0.1, 1.0, 10.0])
def test_bessel_half_closed_form(x):
    exact = math.sqrt(math.pi / (2 * x)) * math.exp(-x)
    assert abs(bessel_K(0.5, x) / exact - 1.0) < 1e-10


@pytest.mark.parametrize("a", [0.5, 0.77, 0.9])
def test_bessel_small_argument(a):
    x = 1e-4
    lead = math.gamma(a) / 2 ** (1 - a) * x ** (-a)
    assert abs(bessel_K(a, x) / lead - 1.0) < 1e-4


@pytest.mark.parametrize("a", [0.1, 0.3, 0.5, 0.77])
def test_bessel_small_argument_correction(a):
    # the relative correction -Gamma(1-a)/Gamma(1+a) (x/2)^{2a} exceeds 1e-4
    # at x = 1e-4 once a < 1/2, so compare with the two-term expansion
    x = 1e-4
    lead = math.gamma(a) / 2 ** (1 - a) * x ** (-a)
    corr = -math.gamma(1 - a) / math.gamma(1 + a) * (x / 2) ** (2 * a)
    assert abs(bessel_K(a, x) / lead - 1.0 - corr) < 1e-6


@pytest.mark.parametrize("a", [0.2, 0.5, 0.9])
def test_bessel_wronskian(a):
    x = np.array([0.05, 0.5, 2.0, 9.0, 20.0])
    K = bessel_K(a, x)
    dK = -bessel_K(1 - a, x) - a / x * K  # K_a' = -K_{a-1} - (a/x) K_a and K_{a-1} = K_{1-a}
    W = special.iv(a, x) * dK - special.ivp(a, x) * K
    assert np.max(np.abs(W * x + 1.0)) < 1e-8


def test_bessel_monotone_and_guarded():
    x = np.geomspace(1e-3, 30, 200)
    assert np.all(np.diff(bessel_K(0.3, x)) < 0)
    with pytest.raises(ValueError):
        bessel_K(1.0, 1.0)


def test_bessel_against_mpmath():
    for a, x in [(0.3, 0.7), (0.6, 12.0), (0.95, 3.0)]:
        assert abs(bessel_K(a, x) / float(mpmath.besselk(a, x)) - 1.0) < 1e-10


def test_C_half_is_pi_squared():
    assert abs(C_a(0.5) - math.pi**2) < 1e-6


@pytest.mark.parametrize("a", [0.1, 0.3, 0.45])
def test_C_a_is_symmetric(a):
    assert abs(C_a(a) - C_a(1 - a)) < 1e-10


def test_C_a_agrees_with_closed_form():
    assert abs(C_a(0.3) - math.pi**2 / math.sin(0.3 * math.pi)) < 1e-6


def test_C_a_against_mpmath_oracle():
    a = 0.3
    with mpmath.workdps(25):
        val = 2 * mpmath.pi * mpmath.quad(
            lambda r: r * (mpmath.besselk(a, r) ** 2 + mpmath.besselk(1 - a, r) ** 2), [0, 1, 10, mpmath.inf])
    assert abs(C_a(a) - float(val)) < 1e-8


@pytest.mark.parametrize("alpha", [0.8, 0.55])
def test_limit_profile_distance_decreases(alpha):
    d = limit_profile_distance(2, alpha, [1e-2, 3e-3, 1e-3])
    assert all(b <= 1.1 * a for a, b in zip(d, d[1:]))
    assert d[-1] < d[0]


def test_limit_profile_requires_fractional_part():
    with pytest.raises(ValueError):
        limit_profile_distance(2, 0.5, [1e-3])
    with pytest.raises(ValueError):
        limit_profile_distance(2, 0.8, [0.2])
