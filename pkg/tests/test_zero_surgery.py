from __future__ import annotations

import numpy as np
import pytest

from lagsurgery.core import LagrangianFrame, crossing_count, verify_lagrangian
from lagsurgery.core.symplectic import symplectic_matrix
from lagsurgery.errors import ParameterError
from lagsurgery.handle import HandleParams, build_handle, double_point_frames, end_model
from lagsurgery.topology import euler_after_surgery, zero_surgery_euler_change
from lagsurgery.zero_surgery import (
    EtaPair,
    ResolutionChoice,
    SurgeryCurve,
    desingularization_model,
    loop_winding_of_resolution,
    maslov_of_resolution,
    resolution_map,
    resolve_double_point,
    so_orbit_hausdorff,
    surgery_model,
)


@pytest.fixture(scope="module")
def lam31():
    return end_model(build_handle(HandleParams(3, 1)), "Lambda'")


# -- the surgery curve and h_gamma ---------------------------------------------------


def test_surgery_curve_conditions():
    c = SurgeryCurve(0.1)
    t = np.linspace(-0.3, 0.3, 601)
    a, b = c.point(t).T
    assert np.allclose(a[t <= -0.1], t[t <= -0.1]) and np.all(b[t <= -0.1] == 0)
    assert np.allclose(b[t >= 0.1], t[t >= 0.1]) and np.all(a[t >= 0.1] == 0)
    mid = np.abs(t) < 0.099
    assert np.all(a[mid] < 0) and np.all(b[mid] > 0)
    assert crossing_count(c.curve) == 0


def test_surgery_curve_rejects_bad_profiles():
    with pytest.raises(ParameterError):
        SurgeryCurve(-1.0)
    kappa = 0.1
    good = SurgeryCurve(kappa)

    def bump(t):
        # Compactly supported in |t| < kappa / 2 with peak exp(-1).
        s = 2 * np.asarray(t, dtype=float) / kappa
        inside = np.abs(s) < 1
        return np.where(inside, np.exp(-1 / np.where(inside, 1 - s**2, 1.0)), 0.0)

    def bad_b(t, nu=0):
        # Pushes b below zero near t = 0 while keeping the flat ends.
        if nu:
            h = 1e-7
            return (bad_b(t + h) - bad_b(t - h)) / (2 * h)
        return good.b(t) * (1 - 3 * bump(t))

    with pytest.raises(ParameterError, match="a\\(t\\) < 0 < b\\(t\\)"):
        SurgeryCurve(kappa, b=bad_b)


def test_surgery_model_flat_point():
    kappa = 0.05
    patch = surgery_model(SurgeryCurve(kappa), 2)
    # phi = 0 is the point e_1 of the circle.
    p = patch.evaluate(np.array([[-2 * kappa, 0.0]]))[0]
    assert np.allclose(p, [-2 * kappa, 0.0, 0.0, 0.0], atol=1e-15)


def test_surgery_model_outside_ball_is_coordinate_planes():
    kappa = 0.05
    patch = surgery_model(SurgeryCurve(kappa), 3)
    pts = patch.evaluate(patch.grid(9))
    far = np.linalg.norm(pts, axis=1) > kappa * 1.0001
    x, y = pts[far, :3], pts[far, 3:]
    on_planes = (np.linalg.norm(x, axis=1) < 1e-15) | (np.linalg.norm(y, axis=1) < 1e-15)
    assert np.all(on_planes)


@pytest.mark.parametrize("n", [2, 3, 4])
def test_surgery_model_lagrangian(n):
    patch = surgery_model(SurgeryCurve(0.05), n)
    assert verify_lagrangian(patch, 10 if n < 4 else 6, tol=1e-8).passed


def test_so2_orbit():
    assert so_orbit_hausdorff(SurgeryCurve(0.05)) < 1e-6


def test_surgery_model_needs_n2():
    with pytest.raises(ParameterError):
        surgery_model(SurgeryCurve(0.05), 1)


# -- resolution map -------------------------------------------------------------------


def test_resolution_map_symplectic():
    slopes = np.array([0.9, -0.9, 0.4])
    J = symplectic_matrix(3)
    for s in (+1, -1):
        Phi = resolution_map(slopes, s)
        assert np.allclose(Phi.T @ J @ Phi, J, atol=1e-14)
    with pytest.raises(ParameterError):
        resolution_map(np.array([1.0, 0.0]), 1)


# -- resolved end --------------------------------------------------------------------------


@pytest.mark.parametrize("sign,components", [(+1, 1), (-1, 2)])
def test_resolved_slice(lam31, sign, components):
    res = resolve_double_point(lam31, ResolutionChoice(sign))
    summ = res.summary()
    assert summ["slice_components"] == components
    assert summ["slice_crossings"] == 0
    om, tear = summ["omega_sigma"], summ["teardrop_area"]
    assert om == pytest.approx(tear + res.alpha_signed(), abs=1e-15)
    assert summ["alpha"] < tear


@pytest.mark.parametrize("sign", [+1, -1])
def test_resolved_end_embedded_and_lagrangian(lam31, sign):
    res = resolve_double_point(lam31, ResolutionChoice(sign))
    assert res.double_point_scan() == []
    assert all(r.passed for r in res.verify(grid=8, tol=1e-8))


def test_resolved_end_unchanged_outside_ball(lam31):
    res = resolve_double_point(lam31, ResolutionChoice(+1))
    assert res.outside_ball_hausdorff() < 1e-9


@pytest.mark.parametrize("sign", [+1, -1])
def test_small_alpha_limit(lam31, sign):
    tear = 2 * 0.1**1.5
    areas = [resolve_double_point(lam31, ResolutionChoice(sign, kappa=k)).omega_sigma() for k in (0.02, 0.005, 0.001)]
    errs = np.abs(np.array(areas) - tear)
    assert errs[-1] < 5e-3 * tear
    assert errs[-1] < errs[0]


def test_alpha_target(lam31):
    res = resolve_double_point(lam31, ResolutionChoice("+", alpha=1e-4))
    assert abs(res.alpha_signed()) == pytest.approx(1e-4, rel=1e-4)
    with pytest.raises(ParameterError):
        resolve_double_point(lam31, ResolutionChoice("+", alpha=1.0))


def test_kappa_too_large(lam31):
    with pytest.raises(ParameterError):
        resolve_double_point(lam31, ResolutionChoice(+1, kappa=0.2))


def test_only_lambda_prime_resolves():
    with pytest.raises(ParameterError):
        resolve_double_point(end_model(build_handle(HandleParams(2, 0)), "Lambda"), ResolutionChoice(1))


def test_choice_names():
    assert ResolutionChoice("plus").sign == 1 and ResolutionChoice("Φ₋").sign == -1
    with pytest.raises(ParameterError):
        ResolutionChoice("sideways")
    with pytest.raises(ParameterError):
        ResolutionChoice(1, alpha=-1.0)


# -- Maslov indices -------------------------------------------------------------------------


@pytest.mark.parametrize("n,k,sign,mu", [(3, 1, -1, 0), (3, 1, +1, 1), (5, 2, +1, 2), (2, 0, -1, 1), (4, 0, +1, 3)])
def test_maslov_examples(n, k, sign, mu):
    assert maslov_of_resolution(HandleParams(n, k), ResolutionChoice(sign)) == mu


@pytest.mark.parametrize("n,k", [(2, 0), (3, 0), (3, 1), (4, 2)])
def test_plus_loop_winding_even(n, k):
    assert loop_winding_of_resolution(HandleParams(n, k), ResolutionChoice(+1)) % 2 == 0


def test_maslov_independent_of_corner_size():
    p = HandleParams(3, 0)
    mus = {maslov_of_resolution(p, ResolutionChoice(-1, kappa=k)) for k in (0.01, 0.025, 0.04)}
    assert mus == {1}


def test_maslov_excludes_top_index():
    with pytest.raises(ParameterError):
        maslov_of_resolution(HandleParams(4, 3), ResolutionChoice(+1))


def test_euler_consistency_of_zero_surgery():
    # D^1 x S^{n-1} replaces S^0 x D^{n-1}: chi changes by chi(S^{n-1}) - 2,
    # which is the k = 0 case of the surgery formula.
    for n in range(2, 9):
        assert zero_surgery_euler_change(n) == euler_after_surgery(0, n, 0)


# -- desingularization -------------------------------------------------------------------------


@pytest.mark.parametrize("kappa", [0.02, 0.05, 0.1])
def test_desingularization(kappa):
    lp, lm = double_point_frames(build_handle(HandleParams(2, 0)))
    rep = desingularization_model(EtaPair(), (lm, lp), SurgeryCurve(kappa))
    assert rep.passed
    assert len(rep.double_points) > 0
    xs = [float(dp.point.x[0]) for dp in rep.double_points]
    assert min(xs) >= -rep.flat_width
    assert rep.crossings == 0 and rep.fibre_crossings == 0
    assert rep.hausdorff_outside < 1e-9


def test_desingularization_rejects_parallel_frames():
    f = LagrangianFrame(np.eye(2), np.zeros((2, 2)))
    with pytest.raises(ParameterError):
        desingularization_model(EtaPair(), (f, f), SurgeryCurve(0.05))


def test_eta_pair_validation():
    with pytest.raises(ParameterError):
        EtaPair(x_range=(0.0, 1.0))
    with pytest.raises(ParameterError):
        EtaPair(y_profile=lambda x, nu=0: np.ones_like(np.asarray(x, dtype=float)))
