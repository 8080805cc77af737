import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from knotflux import magnetics
from knotflux.curves import (
    FourierLoop, GeometryError, TubularPoint, arclength_resample, closed_parallel_frame,
    make_circle, make_torus_knot, pushoff_linking, reach_estimate, rotated_frame, tubular_invert,
    tubular_map, tune_writhe, zero_linking_frame,
)

from conftest import circle, parallel_frame, reach, trefoil, tuned, zero_frame


# ---------------------------------------------------------------------------
# Loops and resampling
# ---------------------------------------------------------------------------

def test_unit_circle_basic_geometry():
    c = circle(256)
    assert abs(c.length - 2 * math.pi) < 1e-12
    assert np.max(np.abs(np.linalg.norm(c.d2, axis=1) - 1.0)) < 1e-10
    assert np.allclose(make_circle(1.0)(0.0)[0], [1.0, 0.0, 0.0], atol=1e-15)
    assert abs(magnetics.writhe(c)) < 1e-10


def test_circle_scaling():
    assert abs(make_circle(2.0).length - 4 * math.pi) < 1e-12


def test_circle_center_offset():
    loop = make_circle(0.5, (1.0, 2.0, 3.0))
    assert np.allclose(loop(0.0)[0], [1.5, 2.0, 3.0])


def test_torus_knot_profile():
    loop = make_torus_knot(2, 3, 4.0, 1.0)
    t = np.linspace(0, 2 * math.pi, 7)
    expected = np.stack([(4 + np.cos(3 * t)) * np.cos(2 * t), (4 + np.cos(3 * t)) * np.sin(2 * t),
                         -np.sin(3 * t)], axis=1)
    assert np.allclose(loop(t), expected, atol=1e-13)


def test_torus_knot_preconditions():
    with pytest.raises(GeometryError):
        make_torus_knot(2, 4)
    with pytest.raises(GeometryError):
        make_torus_knot(2, 3, 1.0, 2.0)


def test_arclength_identities_on_trefoil():
    chk = trefoil(512).check()
    assert chk["unit_speed"] < 1e-9
    assert chk["orthogonality"] < 1e-7
    assert chk["third_order"] < 1e-7
    assert chk["closure"] < 1e-9


def test_trefoil_length_self_convergence():
    assert abs(trefoil(512).length - trefoil(1024).length) < 1e-10


def test_resample_rejects_odd_or_small_counts():
    with pytest.raises(GeometryError):
        arclength_resample(make_circle(), 63)
    with pytest.raises(GeometryError):
        arclength_resample(make_circle(), 129)


def test_zero_speed_loop_is_rejected():
    with pytest.raises(GeometryError):
        FourierLoop(np.zeros(3), np.zeros((1, 3)), np.zeros((1, 3)))


def test_point_cloud_fit_converges_spectrally():
    # the fit is parametrised by chord length, so compare geometry, not coefficients
    loop = make_torus_knot(3, 2)
    pts = loop(2 * math.pi * np.arange(400) / 400)
    chords = np.linalg.norm(np.roll(pts, -1, axis=0) - pts, axis=1)
    tc = 2 * math.pi * np.concatenate([[0.0], np.cumsum(chords)[:-1]]) / chords.sum()
    errs = []
    for h in (10, 20, 40):
        fitted = FourierLoop.fit_points(pts, h)
        errs.append(float(np.max(np.linalg.norm(fitted(tc) - pts, axis=1))))
    assert errs[0] > errs[1] > errs[2]
    assert errs[2] < 1e-9
    assert abs(FourierLoop.fit_points(pts, 40).length - loop.length) < 1e-10


def test_doubling_nodes_is_stable():
    a, b = trefoil(512), trefoil(1024)
    assert abs(a.length - b.length) < 1e-8
    assert abs(magnetics.writhe(a) - magnetics.writhe(b)) < 1e-8
    fa, fb = zero_frame(a), zero_frame(b)
    assert np.max(np.abs(fa.tau - fb.tau[::2])) < 1e-8


# ---------------------------------------------------------------------------
# Frames
# ---------------------------------------------------------------------------

CURVES = {"circle": lambda: circle(512), "trefoil": lambda: trefoil(512), "tuned": lambda: tuned(1.5)}


@pytest.mark.parametrize("name", sorted(CURVES))
@pytest.mark.parametrize("kind", ["zero", "parallel"])
def test_frame_invariants(name, kind):
    curve = CURVES[name]()
    fr = zero_frame(curve) if kind == "zero" else parallel_frame(curve)
    chk = fr.check()
    assert chk["orthonormality"] < 1e-8
    assert chk["right_handed"] < 1e-8
    assert chk["periodicity"] < 1e-8
    assert chk["curvature_split"] < 1e-7


@pytest.mark.parametrize("name", sorted(CURVES))
def test_zero_frame_total_torsion_is_minus_two_pi_writhe(name):
    curve = CURVES[name]()
    fr = zero_frame(curve)
    assert abs(fr.total_torsion + 2 * math.pi * magnetics.writhe(curve)) < 1e-6
    assert round(pushoff_linking(fr)) == 0
    assert fr.pushoff_link == 0


def test_circle_zero_frame_is_planar():
    fr = zero_frame(circle(512))
    assert np.max(np.abs(fr.tau)) < 1e-12
    # one curvature component is constant 1 and the other vanishes
    kg, kn = np.abs(fr.kappa_g), np.abs(fr.kappa_n)
    assert min(np.max(np.abs(kg - 1.0)), np.max(np.abs(kn - 1.0))) < 1e-10
    assert min(np.max(kg), np.max(kn)) < 1e-10


def test_rotated_frame_adds_turns():
    c = circle(512)
    fr = rotated_frame(zero_frame(c), 2)
    assert fr.pushoff_link == 2
    assert round(pushoff_linking(fr)) == 2
    assert abs(magnetics.twist(c, fr) - 2.0) < 1e-12


# ---------------------------------------------------------------------------
# Tubular coordinates
# ---------------------------------------------------------------------------

def test_axis_points_map_to_curve():
    c = trefoil(512)
    fr = zero_frame(c)
    x = tubular_map(c, fr, TubularPoint(float(c.s_nodes[17]), 0.0, 1.1))
    assert np.allclose(x, c.position[17], atol=1e-12)


def test_circle_inversion_example():
    c = circle(512)
    tp = tubular_invert(c, zero_frame(c), np.array([1.1, 0.0, 0.0]))
    assert abs(tp.rho - 0.1) < 1e-12
    assert min(tp.s, c.length - tp.s) < 1e-12


def test_tubular_round_trip_1000_points():
    c = trefoil(512)
    fr = zero_frame(c)
    r = reach(c)
    rng = np.random.default_rng(7)
    s = rng.uniform(0, c.length, 1000)
    rho = rng.uniform(0.01, 0.45, 1000) * r
    th = rng.uniform(-math.pi, math.pi, 1000)
    worst = 0.0
    for si, ri, ti in zip(s, rho, th):
        x = tubular_map(c, fr, TubularPoint(float(si), float(ri), float(ti)))
        y = tubular_map(c, fr, tubular_invert(c, fr, x, r))
        worst = max(worst, float(np.linalg.norm(y - x)))
    assert worst < 1e-9


@settings(max_examples=60)
@given(st.floats(0, 1, exclude_max=True), st.floats(0.01, 0.45), st.floats(-math.pi, math.pi))
def test_tubular_invert_recovers_coordinates(sf, rf, th):
    c = tuned(1.5)
    fr = zero_frame(c)
    r = reach(c)
    p = TubularPoint(sf * c.length, rf * r, th)
    q = tubular_invert(c, fr, tubular_map(c, fr, p), r)
    ds = (q.s - p.s + c.length / 2) % c.length - c.length / 2
    dth = (q.theta - p.theta + math.pi) % (2 * math.pi) - math.pi
    assert abs(ds) < 1e-9 and abs(q.rho - p.rho) < 1e-9 and abs(dth) < 1e-8


def test_invert_outside_reach_raises():
    c = circle(512)
    with pytest.raises(GeometryError):
        tubular_invert(c, zero_frame(c), np.array([0.0, 0.0, 0.0]))


# ---------------------------------------------------------------------------
# Reach
# ---------------------------------------------------------------------------

def test_reach_of_unit_circle():
    assert abs(reach_estimate(circle(512)) - 1.0) < 0.02


def test_reach_of_trefoil_is_stable():
    a, b = reach_estimate(trefoil(512)), reach_estimate(trefoil(1024))
    assert a > 0
    assert abs(a - b) < 0.05 * b


def test_reach_of_pinched_curve_is_distance_dominated():
    d = 0.05

    def f(t):
        return np.stack([np.cos(t), np.sin(t) * (d + (1 - d) * np.cos(t) ** 2), 0 * t], axis=1)

    curve = arclength_resample(FourierLoop.from_function(f, 3), 1024)
    kmax = float(np.max(np.linalg.norm(curve.d2, axis=1)))
    r = reach_estimate(curve)
    assert r < 0.5 / kmax
    assert abs(r - d) < 0.05 * d


# ---------------------------------------------------------------------------
# Writhe tuning
# ---------------------------------------------------------------------------

def test_tune_zero_is_circle():
    curve, a = tune_writhe(0, return_parameter=True)
    assert a == 0.0
    assert np.max(np.abs(np.linalg.norm(curve.position[:, :2], axis=1) - np.linalg.norm(curve.position[0, :2]))) < 1e-12


@pytest.mark.parametrize("target", [1.5, 2.0 / 3.0, -0.5])
def test_tuned_writhe_hits_target(target):
    assert abs(magnetics.writhe(tuned(target)) - target) < 1e-6


def test_tune_writhe_accepts_fraction_strings():
    assert abs(magnetics.writhe(tune_writhe("2/3")) - 2.0 / 3.0) < 1e-6


def test_tune_writhe_out_of_range():
    with pytest.raises(GeometryError):
        tune_writhe(5.0)
