"""Acceptance criteria 1-11.

Each test carries ``@pytest.mark.criterion(n)``; the terminal summary prints
one PASS/FAIL line per criterion.  Run on its own with

    pytest tests/test_acceptance.py -v
"""
import io
import json
import math
import random
import re
import subprocess
import sys
import time
from pathlib import Path

import numpy as np
import pytest

from knotflux import cables, model2d
from knotflux.cables import _ordered_map
from knotflux.cli import run
from knotflux.curves import FourierLoop, arclength_resample, make_circle, rotated_frame
from knotflux.magnetics import (
    BiotSavartField, circulation, cwf_check, expansion_slope, linking_number, writhe,
)
from knotflux.model2d import C_a, SolenoidConfig, bessel_K, g_norm_table
from knotflux.specflow import (
    CablePair, CriticalEigSet, comb_identity, critical_eigenvalues, d_closed, d_count,
    effective_spectrum, intermediate_sf, sf_tower,
)

from conftest import (
    base_writhe, cable, cable_convergence, cable_link, circle, gauge_check, parallel_frame, reach,
    trefoil, tuned, zero_frame,
)

PAIRS = [(2, 3), (3, 2)]


def _circle(radius=1.0, center=(0.0, 0.0, 0.0), n=512, plane="xy"):
    loop = make_circle(radius, center)
    if plane == "xz":
        rot = np.array([[1.0, 0, 0], [0, 0, 1.0], [0, -1.0, 0]])
        c = np.asarray(center, dtype=float)
        loop = loop.transformed(rot, c - rot @ c)
    return arclength_resample(loop, n)


# ---------------------------------------------------------------------------
# 1. Combinatorial exactness
# ---------------------------------------------------------------------------

@pytest.mark.criterion(1)
def test_c1_combinatorial_exactness():
    start = time.perf_counter()
    for N in range(2, 51):
        for M in range(1, N):
            if math.gcd(N, M) == 1:
                pair = CablePair(N, M)
                assert d_count(pair) == d_closed(pair)
    for N in range(2, 51):
        for M in range(1, 51):
            if math.gcd(N, M) == 1:
                assert comb_identity(CablePair(N, M)) == 0
    assert d_count(CablePair(3, 2)) == 3 and d_count(CablePair(5, 3)) == 10
    assert time.perf_counter() - start < 5.0


# ---------------------------------------------------------------------------
# 2. Spectral-flow reproduction
# ---------------------------------------------------------------------------

@pytest.mark.criterion(2)
def test_c2_spectral_flow():
    assert sf_tower([CablePair(2, 3)]) == 0
    rng = random.Random(2024)
    cases = 0
    while cases < 200:
        N, M = rng.randint(2, 60), rng.randint(1, 60)
        if math.gcd(N, M) != 1:
            continue
        base = rng.randint(-50, 50)
        assert intermediate_sf(CablePair(N, M), base) == N * base
        cases += 1


# ---------------------------------------------------------------------------
# 3. Gauss-link integer recovery
# ---------------------------------------------------------------------------

@pytest.mark.criterion(3)
def test_c3_link_recovery():
    start = time.perf_counter()
    res = linking_number(trefoil(1024), _circle(4.0, n=1024))
    assert res.value == 3 and res.residual < 1e-5
    hopf = linking_number(_circle(), _circle(1.0, (1.0, 0.0, 0.0), plane="xz"))
    assert abs(hopf.value) == 1 and hopf.residual < 1e-5
    assert time.perf_counter() - start < 10.0


# ---------------------------------------------------------------------------
# 4. CWF theorem
# ---------------------------------------------------------------------------

@pytest.mark.criterion(4)
@pytest.mark.parametrize("case", ["circle_rotating", "trefoil_parallel", "tuned_zero"])
def test_c4_cwf(case):
    if case == "circle_rotating":
        c = circle(512)
        fr = rotated_frame(zero_frame(c), 3)
    elif case == "trefoil_parallel":
        c = trefoil(512)
        fr = parallel_frame(c)
    else:
        c = tuned(1.5)
        fr = zero_frame(c)
    res = cwf_check(c, fr, base_writhe(c))
    assert res["residual"] < 1e-6


@pytest.mark.criterion(4)
@pytest.mark.parametrize("name", ["circle", "trefoil", "tuned_3/2", "tuned_2/3"])
def test_c4_zero_frame_torsion(name):
    c = {"circle": lambda: circle(512), "trefoil": lambda: trefoil(512),
         "tuned_3/2": lambda: tuned(1.5), "tuned_2/3": lambda: tuned(2.0 / 3.0)}[name]()
    assert abs(zero_frame(c).total_torsion + 2 * math.pi * base_writhe(c)) < 1e-6


# ---------------------------------------------------------------------------
# 5. Circulation equals linking
# ---------------------------------------------------------------------------

def _meridian(curve, frame, node, radius, n=256):
    phi = 2 * math.pi * np.arange(n) / n
    pts = curve.position[node] + radius * (np.cos(phi)[:, None] * frame.S[node]
                                           + np.sin(phi)[:, None] * frame.N[node])
    return arclength_resample(FourierLoop.from_samples(pts), n)


def _configuration(name):
    if name == "trefoil_meridian":
        c = trefoil(512)
        return c, _meridian(c, zero_frame(c), 100, 0.2 * reach(c))
    if name == "trefoil_core":
        return trefoil(512), _circle(4.0, n=512)
    if name == "trefoil_pushoff":
        c = trefoil(512)
        pts = c.position + 0.1 * reach(c) * zero_frame(c).S
        return c, arclength_resample(FourierLoop.from_samples(pts), 512)
    if name == "hopf":
        return _circle(), _circle(1.0, (1.0, 0.0, 0.0), plane="xz")
    return circle(512), _circle(0.7, (3.0, 0.5, 0.2), n=256)


@pytest.mark.criterion(5)
@pytest.mark.parametrize("name", ["trefoil_meridian", "trefoil_core", "trefoil_pushoff", "hopf", "separated"])
def test_c5_circulation_is_linking(name):
    source, loop = _configuration(name)
    circ = circulation(BiotSavartField(source), loop)
    lk = linking_number(loop, source).value
    assert abs(circ - lk) < 1e-5


# ---------------------------------------------------------------------------
# 6. Near-field expansion
# ---------------------------------------------------------------------------

@pytest.mark.criterion(6)
@pytest.mark.parametrize("name", ["circle", "trefoil", "tuned"])
def test_c6_expansion_slope(name):
    c = {"circle": lambda: circle(512), "trefoil": lambda: trefoil(512), "tuned": lambda: tuned(1.5)}[name]()
    fr = zero_frame(c)
    start = time.perf_counter()
    rho = np.geomspace(1e-3, 1e-2, 5) * c.length
    for node, theta in ((0, 0.3), (c.n // 3, 2.1)):
        res = expansion_slope(c, fr, float(c.s_nodes[node]), theta, rho)
        assert res["slope"] >= 0.9
    assert time.perf_counter() - start < 60.0


# ---------------------------------------------------------------------------
# 7. Adapted cable identities
# ---------------------------------------------------------------------------

@pytest.mark.criterion(7)
@pytest.mark.parametrize("NM", PAIRS)
def test_c7_cable_identities(NM):
    N, M = NM
    cab = cable(N, M, 0.02)
    assert abs(cab.curve.length - N * cab.base.length) < 1e-8
    assert cab.checks["tangent_cross"] < 1e-8
    assert cable_link(N, M, 0.02) == M


@pytest.mark.criterion(7)
@pytest.mark.parametrize("NM", PAIRS)
def test_c7_writhe_offset(NM):
    fit = cable_convergence(*NM)
    assert fit["eta"][-1] / fit["eta"][0] >= 10 * (1 - 1e-12)
    assert fit["offset_error"] < 1e-3


@pytest.mark.criterion(7)
@pytest.mark.parametrize("NM", PAIRS)
def test_c7_writhe_remainder_exponent(NM):
    # the cable writhe equals N^2 Wr(base) for every eta, so the remainder is
    # quadrature noise rather than a first-order term
    fit = cable_convergence(*NM)
    assert abs(fit["remainder_exponent"] - 1.0) <= 0.15, (
        f"remainders {fit['remainder']} give exponent {fit['remainder_exponent']:.3f}")


# ---------------------------------------------------------------------------
# 8. Cable gauge exactness
# ---------------------------------------------------------------------------

@pytest.mark.criterion(8)
@pytest.mark.parametrize("NM", PAIRS)
def test_c8_gauge_exactness(NM):
    N, M = NM
    res = gauge_check(N, M, 0.02)
    assert res["residual"] < 1e-4
    assert res["winding"] == M


# ---------------------------------------------------------------------------
# 9. Planar model trichotomy
# ---------------------------------------------------------------------------

ETAS = np.geomspace(1e-4, 1e-2, 5)
GRID = [(N, alpha, k) for N in (2, 3) for alpha in (0.2, 0.45, 0.7, 0.9) for k in range(N)]
GRID += [(2, 0.5, 0), (3, 1.0 / 3.0, 0), (3, 2.0 / 3.0, 1)]


@pytest.mark.criterion(9)
@pytest.mark.parametrize("N,alpha,k", GRID)
def test_c9_trichotomy(N, alpha, k):
    excess = N * alpha - k
    norms = np.array(g_norm_table(N, alpha, k, ETAS))
    slope = np.polyfit(np.log(ETAS), np.log(norms), 1)[0]
    if excess < 1 - 1e-12:
        assert abs(slope) < 0.1
        assert math.isfinite(model2d.g_norm(SolenoidConfig(N, 0.0, alpha), k))
    elif excess > 1 + 1e-12:
        assert abs(slope - (k + 1 - N * alpha)) < 0.1
    else:
        rates = np.diff(norms**2) / np.diff(np.log(1.0 / ETAS))
        assert np.all(rates > 0) and np.ptp(rates) < 0.1 * np.mean(rates)


@pytest.mark.criterion(9)
def test_c9_bessel_constants():
    assert abs(C_a(0.5) - math.pi**2) < 1e-6
    for x in (0.1, 1.0, 10.0):
        assert abs(bessel_K(0.5, x) / (math.sqrt(math.pi / (2 * x)) * math.exp(-x)) - 1.0) < 1e-10


# ---------------------------------------------------------------------------
# 10. Effective spectrum
# ---------------------------------------------------------------------------

@pytest.mark.criterion(10)
@pytest.mark.parametrize("name", ["circle", "tuned"])
def test_c10_effective_spectrum(name):
    c = circle(512) if name == "circle" else tuned(1.5)
    assert c.n == 512
    res = effective_spectrum(c, zero_frame(c), 1.5, 0.2)
    assert res.residual < 1e-6


@pytest.mark.criterion(10)
def test_c10_critical_instance():
    vals = critical_eigenvalues(CriticalEigSet(2, 3, 1.0, 0.0, 2 * math.pi, True, (0, 0)))
    assert vals[0] == -1.75


# ---------------------------------------------------------------------------
# 11. Determinism
# ---------------------------------------------------------------------------

def _cli_bytes(argv):
    out = io.StringIO()
    code = run(argv, out, io.StringIO())
    return code, out.getvalue()


@pytest.mark.criterion(11)
def test_c11_cli_runs_are_identical(tmp_path):
    spec = tmp_path / "trefoil.toml"
    spec.write_text('[curve]\nkind = "torus_knot"\nN = 2\nM = 3\nR = 4.0\nr = 1.0\n')
    for argv in (["writhe", "--curve", str(spec), "--nodes", "256"],
                 ["critical", "--pair", "5,3", "--t", "0.8"],
                 ["sf", "--tower", "2,3;3,5", "--writhe", "2.0"]):
        assert _cli_bytes(argv) == _cli_bytes(argv)


@pytest.mark.criterion(11)
def test_c11_jobs_do_not_change_results():
    argv = ["model2d", "--n", "3", "--alpha", "0.8", "--k", "0"]
    one = json.loads(_cli_bytes(argv + ["--jobs", "1"])[1])
    four = json.loads(_cli_bytes(argv + ["--jobs", "4"])[1])
    assert one["result"] == four["result"] and one["checks"] == four["checks"]
    assert g_norm_table(2, 0.9, 0, ETAS, jobs=1) == g_norm_table(2, 0.9, 0, ETAS, jobs=3)
    items = list(range(12))
    assert _ordered_map(lambda x: x * x, items, 1) == _ordered_map(lambda x: x * x, items, 5)


@pytest.mark.criterion(11)
def test_c11_test_output_is_reproducible():
    here = Path(__file__).parent
    cmd = [sys.executable, "-m", "pytest", str(here / "test_specflow.py"), "-q", "-p", "no:cacheprovider"]

    def once():
        proc = subprocess.run(cmd, capture_output=True, text=True, cwd=here.parent, check=False)
        assert proc.returncode == 0
        return re.sub(r" in [0-9.]+s( \([0-9:]+\))?", "", proc.stdout)

    assert once() == once()


if __name__ == "__main__":
    sys.exit(pytest.main([__file__, "-v"]))
