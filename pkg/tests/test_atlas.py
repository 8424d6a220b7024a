from __future__ import annotations

from fractions import Fraction

import numpy as np
import pytest

from lagsurgery.atlas import (
    build_cpn_model,
    build_rotation_lagrangian,
    chart_inverse,
    chart_map,
    circle_profile,
    clifford_chekanov_cobordisms,
    composite_example,
    conormal_patch,
    figure_eight,
    monotonicity_budget,
    profile_double_points,
    random_profile,
    resolve_figure_eight,
    so_n_safety_check,
    torus_area_plan,
)
from lagsurgery.core import PlanarCurve, SymplecticForm, enclosed_area, omega_eval
from lagsurgery.errors import ParameterError
from lagsurgery.topology import ManifoldDescriptor, P_atom, Q_atom, product_atom


# -- rotation Lagrangians -------------------------------------------------------------


def test_random_profiles_are_lagrangian():
    rng = np.random.default_rng(2024)
    for _ in range(50):
        rot = build_rotation_lagrangian(random_profile(rng))
        rep = rot.verify(grid=24, tol=1e-8)
        assert rep.passed, rep
        assert rot.area_param > 0


def test_rotation_patch_formula():
    rot = build_rotation_lagrangian(circle_profile(2.0, 0.5))
    u = np.array([[0.7, 1.1]])
    z = rot.profile(u[:, 0])[0]
    x1, x2, y1, y2 = rot.patch.evaluate(u)[0]
    assert x1 + 1j * y1 == pytest.approx(z * np.exp(1.1j))
    assert x2 + 1j * y2 == pytest.approx(z * np.exp(-1.1j))
    # Tangent vectors pair to zero under omega.
    J = rot.patch.jacobian(u)[0]
    assert abs(omega_eval(SymplecticForm(2), J[:, 0], J[:, 1])) < 1e-12


def test_circle_area_parameter():
    rot = build_rotation_lagrangian(circle_profile(2.0, 0.5, samples=4096))
    assert rot.area_param == pytest.approx(0.5 * np.pi * 0.25, rel=1e-5)


def test_circle_off_origin_is_embedded():
    assert len(profile_double_points(circle_profile(2.0, 0.5))) == 0


def test_circle_meeting_its_negative():
    # |z - 0.3| = 0.5 meets |z + 0.3| = 0.5 at (0, +-0.4).
    pts = profile_double_points(circle_profile(0.3, 0.5, samples=4096))
    assert len(pts) == 2
    assert np.allclose(sorted(pts[:, 1]), [-0.4, 0.4], atol=1e-5)
    assert np.allclose(pts[:, 0], 0.0, atol=1e-9)


def test_whitney_rotation_is_lagrangian():
    f8 = resolve_figure_eight()
    rot = build_rotation_lagrangian(f8.whitney, loops=f8.lobes, symmetric=True)
    assert rot.verify(grid=32, tol=1e-8).passed
    assert rot.area_param == pytest.approx(2.0 / 3.0, rel=1e-4)


def test_degenerate_profile_rejected():
    with pytest.raises(ParameterError):
        build_rotation_lagrangian(PlanarCurve.closed_from(np.zeros((8, 2))))


# -- figure-eight and tori -----------------------------------------------------------------


def test_figure_eight_lobe_area():
    g = figure_eight(1.5)
    s = np.linspace(0, np.pi, 20001)
    lobe = PlanarCurve(g(s), closed=True)
    assert abs(enclosed_area(lobe)) == pytest.approx(2 * 1.5**2 / 3, rel=1e-7)


@pytest.mark.parametrize("scale,cut", [(1.0, 0.1), (2.0, 0.05), (0.5, 0.2)])
def test_figure_eight_resolutions(scale, cut):
    f8 = resolve_figure_eight(scale, cut)
    assert f8.winding_pattern("clifford") == [1]
    assert f8.winding_pattern("chekanov") == [0, 0]
    assert f8.crossings("clifford") == 0 and f8.crossings("chekanov") == 0
    assert f8.A_chekanov < f8.A_whitney < f8.A_clifford
    assert f8.A_whitney == pytest.approx(2 * scale**2 / 3, rel=1e-3)


def test_figure_eight_resolution_tori_lagrangian():
    f8 = resolve_figure_eight()
    for curve in f8.clifford + f8.chekanov:
        assert build_rotation_lagrangian(curve).verify(grid=24, tol=1e-8).passed


def test_cut_validation():
    with pytest.raises(ParameterError):
        resolve_figure_eight(cut=0.7)


def test_torus_area_plan():
    assert torus_area_plan(1.0, "clifford", 1.5).feasible
    assert not torus_area_plan(1.0, "chekanov", 1.5).feasible
    assert torus_area_plan(1.0, "chekanov", 0.5).feasible
    assert not torus_area_plan(1.0, "clifford", 1.0).feasible
    with pytest.raises(ParameterError):
        torus_area_plan(1.0, "round", 2.0)
    with pytest.raises(ParameterError):
        torus_area_plan(-1.0, "clifford", 2.0)


def test_area_plan_matches_construction():
    f8 = resolve_figure_eight()
    A = f8.A_whitney
    assert torus_area_plan(A, "clifford", f8.A_clifford).feasible
    assert torus_area_plan(A, "chekanov", f8.A_chekanov).feasible
    assert not torus_area_plan(A, "clifford", f8.A_chekanov).feasible


def test_cobordism_claims():
    assert clifford_chekanov_cobordisms(1.0, 1.0) == []
    assert clifford_chekanov_cobordisms(1.5, 1.0) == []
    cobs = clifford_chekanov_cobordisms(0.5, 1.5)
    assert len(cobs) == 3
    assert all(c.descriptor.handles == ((2, 1), (1, 1)) and c.descriptor.consistent() for c in cobs)


# -- CP^n chart and conormal model ----------------------------------------------------------


def test_chart_base_point():
    assert np.allclose(chart_map([0, 0, 0, 1]), 0.0)
    assert np.allclose(chart_map([0, 0, 0, -2]), 0.0)


def test_chart_radius_tends_to_half_pi():
    radii = []
    for c in (1e-2, 1e-4, 1e-6):
        x = np.array([1.0, 1.0, 0.0, c])
        radii.append(float(np.linalg.norm(chart_map(x))))
    assert all(r < np.pi / 2 for r in radii)
    assert np.all(np.diff(radii) > 0)
    assert np.pi / 2 - radii[-1] < 1e-5


def test_chart_inverse_roundtrip():
    rng = np.random.default_rng(5)
    x = rng.normal(size=(200, 5))
    x[:, -1] = np.abs(x[:, -1]) + 0.05
    u = x / np.linalg.norm(x, axis=1, keepdims=True)
    assert np.allclose(chart_inverse(chart_map(x)), u, atol=1e-10)
    # Projective invariance: scaling by -3 gives the same chart point.
    assert np.allclose(chart_map(-3 * x), chart_map(x))


def test_chart_rejects_hyperplane_and_outside():
    with pytest.raises(ParameterError):
        chart_map([1.0, 0.0, 0.0])
    with pytest.raises(ParameterError):
        chart_inverse([2.0, 0.0])


def test_conormal_n3():
    model = build_cpn_model(3, 0.5)
    rep = model.verify(grid=12, tol=1e-8)
    assert rep.passed and rep.max_residual < 1e-8
    pts = model.conormal.evaluate(model.conormal.grid(6))
    x, y = pts[:, :3], pts[:, 3:]
    assert np.allclose(np.linalg.norm(x, axis=1), 0.5)
    # Covectors are normal to the sphere and shorter than pi/2.
    cross = np.linalg.norm(np.cross(x, y), axis=1)
    assert np.all(cross < 1e-12) and np.all(np.linalg.norm(y, axis=1) < np.pi / 2)


@pytest.mark.parametrize("n", [2, 4, 6])
def test_conormal_lagrangian_other_dims(n):
    assert build_cpn_model(n, 0.4).verify(grid=6, tol=1e-8).passed


def test_conormal_validation():
    with pytest.raises(ParameterError):
        conormal_patch(3, 1.0)
    with pytest.raises(ParameterError):
        build_cpn_model(1, 0.5)


def test_slice_curves():
    segs = build_cpn_model(5, 2 / 3).slice_curves()
    assert len(segs) == 2
    assert np.allclose(np.abs(segs[0].points[:, 0]), 2 / 3)


# -- monotonicity budget ---------------------------------------------------------------------------


def test_budget_n5_k2():
    b = monotonicity_budget(5, 2)
    assert b.r_monotone == Fraction(2, 3)
    assert b.eta_L_pi == Fraction(1, 6)
    assert b.required_area_pi == Fraction(1, 3)
    assert b.feasible and b.feasible_upper_pi == Fraction(2, 3)


def test_budget_n6_k3():
    b = monotonicity_budget(6, 3)
    assert b.r_monotone == Fraction(5, 7)
    assert b.required_area_pi == Fraction(2, 7)
    assert b.maslov2_disc_area_pi == Fraction(2, 7)


def test_budget_n7_k4():
    assert monotonicity_budget(7, 4).required_area_pi == Fraction(1, 4)


@pytest.mark.parametrize("n,k", [(4, 2), (5, 1), (5, 3), (3, 0)])
def test_budget_hypothesis(n, k):
    with pytest.raises(ParameterError, match="2 <= k <= n-3"):
        monotonicity_budget(n, k)


def test_budget_identities():
    for n in range(5, 13):
        for k in range(2, n - 2):
            b = monotonicity_budget(n, k)
            assert b.required_area_pi / b.eta_L_pi == n - k - 1
            assert 2 * b.eta_L_pi == 1 - b.r_monotone == b.maslov2_disc_area_pi
            assert b.eta_ambient_pi == 2 * b.eta_L_pi == Fraction(2, n + 1)
            assert b.required_area_pi < b.r_monotone


def test_budget_json():
    d = monotonicity_budget(5, 2).to_dict()
    assert d["required_omega_sigma"]["pi_multiple"] == "1/3"
    assert d["required_omega_sigma"]["value"] == pytest.approx(np.pi / 3)


# -- SO(n) safety and composites --------------------------------------------------------------------


def _segment(p0, p1, m=101):
    t = np.linspace(0, 1, m)[:, None]
    return PlanarCurve((1 - t) * np.asarray(p0, float) + t * np.asarray(p1, float))


def test_safety_vertical_segment():
    seg = _segment([0, 0.1], [0, 2])
    for c in (0.01, 1.0, 100.0):
        assert so_n_safety_check(c, seg).passed


def test_safety_horizontal_tail():
    tail = _segment([0.1, 0.5], [3, 0.5])
    v = so_n_safety_check(1.0, tail)
    assert not v.passed and v.worst_point == pytest.approx([3.0, 0.5])
    # Shrinking c(eps) eventually lets the same curve pass.
    assert so_n_safety_check(0.1, tail).passed


def test_safety_exclusion_and_validation():
    # Slope condition fails only near the start, within radius 0.07 of the origin.
    seg = _segment([0.05, 0.01], [0, 1])
    assert not so_n_safety_check(1.0, seg).passed
    assert so_n_safety_check(1.0, seg, exclude_radius=0.08).passed
    with pytest.raises(ParameterError):
        so_n_safety_check(0.0, seg)


@pytest.mark.parametrize("n", range(5, 10))
def test_composite_example(n):
    for k in range(2, n - 2):
        top = product_atom(k + 1, n - k - 1)
        assert composite_example(n, k, "P") == ManifoldDescriptor.of(top, P_atom(n), P_atom(n))
        assert composite_example(n, k, "Q") == ManifoldDescriptor.of(top, P_atom(n), Q_atom(n))
