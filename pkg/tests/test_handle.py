from __future__ import annotations

import numpy as np
import pytest

from lagsurgery.core import enclosed_area, find_double_points, transversality_gap, verify_lagrangian
from lagsurgery.errors import ParameterError
from lagsurgery.handle import (
    X0_RANGE,
    HandleParams,
    build_handle,
    check_cylindricity,
    double_point_frames,
    end_model,
    scan_singular_locus,
    singular_locus,
    teardrop_curve,
)


@pytest.fixture(scope="module")
def g20():
    return build_handle(HandleParams(2, 0, 0.1, 0.1))


@pytest.fixture(scope="module")
def g31():
    return build_handle(HandleParams(3, 1, 0.1, 0.1))


# -- parameters and formulas ---------------------------------------------------------


def test_params_validation():
    with pytest.raises(ParameterError):
        HandleParams(2, 2)
    with pytest.raises(ParameterError):
        HandleParams(2, 0, epsilon=-1)
    with pytest.raises(ParameterError):
        HandleParams(2, 0, delta=0.5)


def test_rho_slope_violation_is_named():
    with pytest.raises(ParameterError, match="rho"):
        build_handle(HandleParams(2, 0, rho_profile="smoothstep"))


def test_f_examples(g20):
    assert g20.f([[0.0, 1.2, 0.0]])[0] == pytest.approx(0.44, abs=1e-14)
    assert g20.f([[1.0, 0.0, 0.0]])[0] == pytest.approx(0.1, abs=1e-14)


def test_dF_vanishes_on_core_line(g31):
    u = np.zeros((5, 4))
    u[:, 0] = np.linspace(0.9, 1.5, 5)
    assert np.all(g31.dF(u) == 0.0)


@pytest.mark.parametrize("n,k", [(2, 0), (3, 1), (4, 2)])
def test_dF_matches_finite_difference(n, k):
    g = build_handle(HandleParams(n, k))
    rng = np.random.default_rng(3)
    u = rng.uniform(-1.3, 1.3, size=(400, n + 1))
    u[:, 0] = rng.uniform(-0.4, 1.4, 400)
    u = u[g.f(u) > 1e-3][:40]
    h = 1e-6
    fd = np.stack(
        [(g.F(u + h * e) - g.F(u - h * e)) / (2 * h) for e in np.eye(n + 1)],
        axis=1,
    )
    assert np.abs(fd - g.dF(u)).max() < 1e-6


def test_dF_vanishes_at_boundary(g20):
    # Points approaching {f = 0} along x1 at x0 = 0: f = x1^2 - 1.
    x1 = 1.0 + np.logspace(-12, -2, 6)
    u = np.stack([np.zeros_like(x1), x1, np.zeros_like(x1)], axis=1)
    d = np.linalg.norm(g20.dF(u), axis=1)
    assert np.all(np.diff(d) > 0) and d[0] < 1e-5


# -- Lagrangian sheets ---------------------------------------------------------------


@pytest.mark.parametrize("n,k", [(1, 0), (2, 0), (2, 1), (3, 0), (3, 1), (3, 2)])
def test_sheets_are_lagrangian(n, k):
    g = build_handle(HandleParams(n, k))
    grid = 12 if n <= 2 else 8
    for patch in g.sheets:
        rep = verify_lagrangian(patch, grid, tol=1e-8)
        assert rep.passed, rep


@pytest.mark.parametrize("n,k", [(4, 1), (5, 2)])
def test_sheets_are_lagrangian_higher_dim(n, k):
    g = build_handle(HandleParams(n, k))
    for patch in g.sheets:
        assert verify_lagrangian(patch, 5, tol=1e-8).passed


# -- ends ------------------------------------------------------------------------------


def test_lambda_contains_sphere(g31):
    end = end_model(g31, "Lambda")
    th = np.linspace(0, 2 * np.pi, 50)
    x = np.stack([np.cos(th), np.sin(th), np.zeros_like(th)], axis=1)
    assert np.allclose(end.f(x), 0.0, atol=1e-14)
    # dF ~ sqrt(f), so rounding of f at the 1e-16 level shows up as 1e-8.
    assert np.abs(end.dF(x)).max() < 1e-7


def test_lambda_prime_slice_formula(g31):
    end = end_model(g31, "Lambda'")
    xn = np.linspace(0, np.sqrt(0.1), 30)[:-1]
    pts = end.slice_n(xn, +1)
    assert np.allclose(np.abs(pts[:, 1]), 3 * np.sqrt(0.1 - xn**2) * xn, atol=1e-12)


def test_lambda_is_embedded(g20):
    end = end_model(g20, "Lambda")
    a, b = end.sheet(+1, f_min=1e-3), end.sheet(-1, f_min=1e-3)
    assert find_double_points(a, b, 15, 1e-10) == []


def test_lambda_prime_has_one_double_point(g20):
    end = end_model(g20, "Lambda'")
    a, b = end.sheet(+1, f_min=1e-3), end.sheet(-1, f_min=1e-3)
    pts = find_double_points(a, b, 15, 1e-10)
    assert len(pts) == 1
    assert np.allclose(pts[0].point.as_vector(), 0.0, atol=1e-8)


def test_unknown_end(g20):
    with pytest.raises(ParameterError):
        end_model(g20, "Lambda''")


# -- singular locus --------------------------------------------------------------------


def test_singular_locus_n3(g31):
    scan = scan_singular_locus(g31, tol=1e-4)
    assert len(scan.points) > 0 and scan.max_offset <= 1e-4
    assert scan.x0_min >= 0.9 - 1e-4
    for q in scan.points:
        assert np.linalg.norm(q.x[1:]) < 1e-4 and np.linalg.norm(q.y) < 1e-4


def test_singular_locus_low_x0_empty(g31):
    assert scan_singular_locus(g31, x0_bounds=(X0_RANGE[0], 0.1)).points == []
    assert scan_singular_locus(g31, x0_bounds=(X0_RANGE[0], 0.89)).points == []


def test_singular_locus_large_r_empty(g31):
    mask = lambda u: np.sum(u[:, 1:3] ** 2, axis=1) > 0.5  # noqa: E731
    assert singular_locus(g31, extra_mask=mask) == []


# -- frames at the double point -------------------------------------------------------


def test_double_point_frames_n2():
    g = build_handle(HandleParams(2, 0, 0.1, 0.1))
    lp, lm = double_point_frames(g)
    s = 3 * np.sqrt(0.1)
    assert np.allclose(lp.X, np.eye(2))
    assert np.allclose(lp.Y, np.diag([s, -s]), atol=1e-12)
    assert np.allclose(lm.Y, -lp.Y)


@pytest.mark.parametrize("n,k,eps", [(2, 0, 0.1), (3, 1, 0.05), (4, 2, 0.2), (5, 0, 0.1)])
def test_double_point_frames_transverse(n, k, eps):
    lp, lm = double_point_frames(build_handle(HandleParams(n, k, eps)))
    assert transversality_gap(lp, lm) > 0.1


def test_frames_are_limits_of_sheet_jacobians(g31):
    end = end_model(g31, "Lambda'")
    lp, _ = double_point_frames(g31)
    # Central differences of the + sheet at the double point.
    h = 1e-5
    fd = np.stack(
        [(end.dF(h * e[None]) - end.dF(-h * e[None]))[0] / (2 * h) for e in np.eye(3)],
        axis=1,
    )
    assert np.abs(fd - lp.Y).max() < 1e-6


# -- cylindricity ---------------------------------------------------------------------------


def test_cylindricity_point_example(g31):
    # r^2 = 1.3 >= 1 + 2 eps: no dx0 component.
    u = np.array([[0.5, np.sqrt(1.3), 0.0, 0.1]])
    assert g31.dF(u)[0, 0] == 0.0


@pytest.mark.parametrize("n,k", [(2, 0), (3, 1), (3, 0)])
def test_cylindricity(n, k):
    rep = check_cylindricity(build_handle(HandleParams(n, k)), samples=9, tol=1e-9)
    assert rep.passed, rep.details
    assert rep.details["outside_samples"] > 0 and rep.details["inside_samples"] > 0


# -- teardrop ---------------------------------------------------------------------------------


@pytest.mark.parametrize("eps,area", [(0.04, 0.016), (0.01, 0.002), (0.1, 2 * 0.1**1.5)])
def test_teardrop_area(eps, area):
    c = teardrop_curve(build_handle(HandleParams(3, 1, eps)))
    assert enclosed_area(c) == pytest.approx(area, rel=1e-6)
    assert enclosed_area(c.reversed()) == pytest.approx(-area, rel=1e-6)


def test_teardrop_needs_s_coordinate():
    with pytest.raises(ParameterError):
        teardrop_curve(build_handle(HandleParams(2, 1)))
