"""The immersed Lagrangian handle Gamma and its ends Lambda, Lambda'.

Gamma lives in T*R^{n+1} with coordinates ``(x0, x_1..x_n; y0, y_1..y_n)``.
It is the union of the graphs of ``+dF`` and ``-dF`` over the region
``U = {f >= 0}``, where

    f(x0, x) = r^2 + sigma(x0) rho(r^2) - s^2 - 1,   F = f^(3/2),

with ``r^2 = x_1^2 + ... + x_{k+1}^2`` and ``s^2 = x_{k+2}^2 + ... + x_n^2``.
Freezing ``x0 = 0`` gives the embedded end Lambda.  Freezing ``x0 = 1``
gives the end Lambda', which has one transverse double point at ``x = 0``.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import List, Optional, Tuple

import numpy as np

from .core.curves import PlanarCurve
from .core.intersect import DoublePointSearch, find_double_points
from .core.maslov import LagrangianFrame
from .core.symplectic import LagrangianPatch, PhasePoint, VerificationReport
from .errors import ModelViolation, ParameterError
from .profiles import make_rho, make_sigma

F_MIN = 1e-6
X0_RANGE = (-0.5, 1.5)


@dataclass(frozen=True)
class HandleParams:
    """Parameters (n, k, eps, delta) and named profile choices."""

    n: int
    k: int
    epsilon: float = 0.1
    delta: float = 0.1
    sigma_profile: str = "sharp"
    rho_profile: str = "plateau"

    def __post_init__(self):
        if int(self.n) != self.n or self.n < 1:
            raise ParameterError(f"n must be an integer >= 1, got {self.n}")
        if int(self.k) != self.k or not 0 <= self.k <= self.n - 1:
            raise ParameterError(f"k must satisfy 0 <= k <= n-1, got k={self.k}, n={self.n}")
        if not (np.isfinite(self.epsilon) and self.epsilon > 0):
            raise ParameterError(f"epsilon must be > 0, got {self.epsilon}")
        if not (0 < self.delta < 0.5):
            raise ParameterError(f"delta must lie in (0, 1/2), got {self.delta}")

    @property
    def n_r(self) -> int:
        """Number of r-coordinates (k+1)."""
        return self.k + 1

    def to_dict(self) -> dict:
        return {
            "n": self.n,
            "k": self.k,
            "epsilon": self.epsilon,
            "delta": self.delta,
            "sigma_profile": self.sigma_profile,
            "rho_profile": self.rho_profile,
        }


def validate_profiles(params: HandleParams, samples: int = 20001) -> None:
    """Check the sigma and rho conditions on dense samples.

    Raises
    ------
    ParameterError
        Naming the first violated condition.
    """
    eps, delta = params.epsilon, params.delta
    sigma = make_sigma(params.sigma_profile, eps, delta)
    rho = make_rho(params.rho_profile, eps)
    x0 = np.linspace(-1.0, 2.0, samples)
    s0, s1 = sigma(x0), sigma(x0, 1)
    if np.any(s0[x0 <= delta] != 0.0):
        raise ParameterError("sigma condition violated: sigma(x0) = 0 for x0 <= delta")
    if np.any(s0[x0 >= 1 - delta] != 1.0 + eps):
        raise ParameterError("sigma condition violated: sigma(x0) = 1 + eps for x0 >= 1 - delta")
    # sigma is flat at both ends, so sigma' underflows to 0 within a tiny
    # distance of delta and 1 - delta; test strict positivity just inside.
    pad = 1e-3 * (1 - 2 * delta)
    mid = (x0 > delta + pad) & (x0 < 1 - delta - pad)
    if np.any(s1[mid] <= 0) or np.any(s1 < 0):
        raise ParameterError("sigma condition violated: sigma' > 0 on (delta, 1 - delta)")
    q = np.linspace(0.0, 2.0 + 4 * eps, samples)
    r0, r1 = rho(q), rho(q, 1)
    if rho(0.0) != 1.0 or rho(0.0, 1) != 0.0:
        raise ParameterError("rho condition violated: rho = 1 near 0")
    if np.any(r0[q >= 1 + 2 * eps] != 0.0):
        raise ParameterError("rho condition violated: rho(r^2) = 0 for r^2 >= 1 + 2 eps")
    if np.any(r1 > 0):
        raise ParameterError("rho condition violated: rho' <= 0")
    if np.any(r1 <= -1.0 / (1.0 + eps)):
        raise ParameterError(
            f"rho condition violated: rho' > -1/(1+eps) (min rho' = {r1.min():.4f}, bound {-1 / (1 + eps):.4f})"
        )


def power_graph_frame(f, g, H, sign: float) -> Tuple[np.ndarray, np.ndarray]:
    """Tangent frame of the graph of ``sign * d(f^(3/2))`` that stays finite at f = 0.

    The graph frame ``[I; sign * Hess F]`` is rescaled along the unit normal
    ``v = grad f / |grad f|`` by ``sqrt(f)``.  The span is unchanged for
    f > 0 and the limit exists on ``{f = 0}``, where both sheets share the
    same tangent plane.

    Parameters
    ----------
    f : float
        Value of f (>= 0).
    g : ndarray (m,)
        Gradient of f (nonzero).
    H : ndarray (m, m)
        Hessian of f.
    sign : {+1, -1}
        Sheet.
    """
    m = g.size
    rf = np.sqrt(max(f, 0.0))
    gn = np.linalg.norm(g)
    if gn == 0.0:
        if f <= 0:
            raise ParameterError("critical point of f on the boundary")
        X = np.eye(m)
        Y = sign * 1.5 * rf * H
        return X, Y
    v = g / gn
    D = np.eye(m) - (1.0 - rf) * np.outer(v, v)
    Y = sign * (1.5 * rf * H @ D + 0.75 * np.outer(g, g))
    return D, Y


class HandleGeometry:
    """Gamma for given parameters, with analytic f, dF and Hess F.

    Parameter arrays ``u`` have shape (m, n+1) with ``u[:, 0] = x0``.
    """

    def __init__(self, params: HandleParams, x_max: float = 1.5, f_min: float = F_MIN):
        validate_profiles(params)
        self.params = params
        self.sigma = make_sigma(params.sigma_profile, params.epsilon, params.delta)
        self.rho = make_rho(params.rho_profile, params.epsilon)
        self.x_max = float(x_max)
        self.f_min = float(f_min)
        self.sheets = (self.sheet(+1), self.sheet(-1))

    # -- scalar geometry -------------------------------------------------
    def split(self, x: np.ndarray):
        kr = self.params.n_r
        return np.sum(x[:, :kr] ** 2, axis=1), np.sum(x[:, kr:] ** 2, axis=1)

    def f(self, u) -> np.ndarray:
        u = np.atleast_2d(np.asarray(u, dtype=float))
        r2, s2 = self.split(u[:, 1:])
        return r2 + self.sigma(u[:, 0]) * self.rho(r2) - s2 - 1.0

    def f_grad_hess(self, u):
        """Return ``f``, ``grad f`` (m, n+1) and ``Hess f`` (m, n+1, n+1)."""
        u = np.atleast_2d(np.asarray(u, dtype=float))
        m, d = u.shape
        kr = self.params.n_r
        x0, x = u[:, 0], u[:, 1:]
        r2, s2 = self.split(x)
        sg, sg1, sg2 = self.sigma(x0), self.sigma(x0, 1), self.sigma(x0, 2)
        rh, rh1, rh2 = self.rho(r2), self.rho(r2, 1), self.rho(r2, 2)
        f = r2 + sg * rh - s2 - 1.0
        g = np.empty((m, d))
        g[:, 0] = sg1 * rh
        g[:, 1 : 1 + kr] = 2.0 * x[:, :kr] * (1.0 + sg * rh1)[:, None]
        g[:, 1 + kr :] = -2.0 * x[:, kr:]
        H = np.zeros((m, d, d))
        H[:, 0, 0] = sg2 * rh
        cross = 2.0 * (sg1 * rh1)[:, None] * x[:, :kr]
        H[:, 0, 1 : 1 + kr] = cross
        H[:, 1 : 1 + kr, 0] = cross
        xr = x[:, :kr]
        H[:, 1 : 1 + kr, 1 : 1 + kr] = (4.0 * sg * rh2)[:, None, None] * xr[:, :, None] * xr[:, None, :]
        idx_r = np.arange(1, 1 + kr)
        H[:, idx_r, idx_r] += (2.0 * (1.0 + sg * rh1))[:, None]
        idx_s = np.arange(1 + kr, d)
        H[:, idx_s, idx_s] = -2.0
        return f, g, H

    def F(self, u) -> np.ndarray:
        return np.clip(self.f(u), 0.0, None) ** 1.5

    def dF(self, u) -> np.ndarray:
        f, g, _ = self.f_grad_hess(u)
        return 1.5 * np.sqrt(np.clip(f, 0.0, None))[:, None] * g

    def hessF(self, u) -> np.ndarray:
        f, g, H = self.f_grad_hess(u)
        return _power_hessian(f, g, H)

    def in_region(self, u) -> np.ndarray:
        return self.f(u) >= 0.0

    # -- patches -----------------------------------------------------------
    def domain(self):
        n = self.params.n
        lo = np.concatenate([[X0_RANGE[0]], np.full(n, -self.x_max)])
        hi = np.concatenate([[X0_RANGE[1]], np.full(n, self.x_max)])
        return lo, hi

    def sheet(self, sign: int, f_min: Optional[float] = None, extra_mask=None, box=None) -> LagrangianPatch:
        """Graph of ``sign * dF`` over ``{f >= f_min}`` as a patch in T*R^{n+1}."""
        fm = self.f_min if f_min is None else f_min
        lo, hi = self.domain() if box is None else box

        def mask(u):
            ok = self.f(u) >= fm
            if extra_mask is not None:
                ok &= extra_mask(u)
            return ok

        return _graph(self.dF, self.hessF, lo, hi, sign, f"Gamma{'+' if sign > 0 else '-'}", mask)


def _power_hessian(f, g, H):
    fp = np.clip(f, 0.0, None)
    rf = np.sqrt(fp)
    with np.errstate(divide="ignore", invalid="ignore"):
        inv = np.where(fp > 0, 1.0 / np.where(fp > 0, rf, 1.0), 0.0)
    return 0.75 * inv[:, None, None] * g[:, :, None] * g[:, None, :] + 1.5 * rf[:, None, None] * H


def _graph(grad, hess, lo, hi, sign, label, mask) -> LagrangianPatch:
    d = len(lo)

    def func(u):
        return np.concatenate([u, sign * grad(u)], axis=1)

    def jac(u):
        Hs = hess(u)
        eye = np.broadcast_to(np.eye(d), Hs.shape)
        return np.concatenate([eye, sign * Hs], axis=1)

    return LagrangianPatch(lo, hi, func, d, jac=jac, label=label, mask=mask)


def build_handle(params: HandleParams, **kw) -> HandleGeometry:
    """Validate the profiles and build Gamma."""
    return HandleGeometry(params, **kw)


@dataclass
class EndModel:
    """Lambda (x0 = 0) or Lambda' (x0 = 1): graphs of ``+-dF_c`` over ``{f_c >= 0}``."""

    which: str
    geom: HandleGeometry
    x0: float
    patches: Tuple[LagrangianPatch, LagrangianPatch] = field(init=False)

    def __post_init__(self):
        self.patches = (self.sheet(+1), self.sheet(-1))

    @property
    def n(self) -> int:
        return self.geom.params.n

    def _lift(self, x):
        x = np.atleast_2d(np.asarray(x, dtype=float))
        return np.concatenate([np.full((len(x), 1), self.x0), x], axis=1)

    def f(self, x) -> np.ndarray:
        return self.geom.f(self._lift(x))

    def f_grad_hess(self, x):
        f, g, H = self.geom.f_grad_hess(self._lift(x))
        return f, g[:, 1:], H[:, 1:, 1:]

    def F(self, x):
        return np.clip(self.f(x), 0.0, None) ** 1.5

    def dF(self, x):
        f, g, _ = self.f_grad_hess(x)
        return 1.5 * np.sqrt(np.clip(f, 0.0, None))[:, None] * g

    def hessF(self, x):
        f, g, H = self.f_grad_hess(x)
        return _power_hessian(f, g, H)

    def sheet(self, sign: int, f_min: Optional[float] = None, extra_mask=None, box=None) -> LagrangianPatch:
        fm = self.geom.f_min if f_min is None else f_min
        xm = self.geom.x_max
        lo, hi = (np.full(self.n, -xm), np.full(self.n, xm)) if box is None else box

        def mask(x):
            ok = self.f(x) >= fm
            if extra_mask is not None:
                ok &= extra_mask(x)
            return ok

        return _graph(self.dF, self.hessF, lo, hi, sign, f"{self.which}{'+' if sign > 0 else '-'}", mask)

    def frame(self, x, sign: int) -> LagrangianFrame:
        """Tangent frame of the ``sign`` sheet at x, finite up to the seam."""
        f, g, H = self.f_grad_hess(x)
        X, Y = power_graph_frame(float(f[0]), g[0], H[0], sign)
        return LagrangianFrame(X, Y, check=False)

    def slice_n(self, xn, sign: int) -> np.ndarray:
        """Points ``(x_n, y_n)`` of the ``sign`` sheet over ``x = x_n e_n``."""
        xn = np.asarray(xn, dtype=float)
        x = np.zeros((xn.size, self.n))
        x[:, -1] = xn
        return np.stack([xn, sign * self.dF(x)[:, -1]], axis=1)


def end_model(geom: HandleGeometry, which: str) -> EndModel:
    """Return Lambda (``which`` in {"L", "Lambda"}) or Lambda' ({"L'", "Lambda'"})."""
    key = which.replace("′", "'").strip()
    if key in ("L", "Lambda", "Λ"):
        return EndModel("Lambda", geom, 0.0)
    if key in ("L'", "Lambda'", "Λ'"):
        return EndModel("Lambda'", geom, 1.0)
    raise ParameterError(f"unknown end {which!r}; use 'Lambda' or \"Lambda'\"")


@dataclass
class LocusScan:
    """Result of a singular-locus scan of Gamma."""

    points: List[PhasePoint]
    unrefined: int
    left_domain: int
    candidates: int
    x0_min: Optional[float]
    x0_max: Optional[float]
    max_offset: float

    def to_dict(self) -> dict:
        return {
            "count": len(self.points),
            "unrefined": self.unrefined,
            "left_domain": self.left_domain,
            "candidates": self.candidates,
            "x0_min": self.x0_min,
            "x0_max": self.x0_max,
            "max_offset": self.max_offset,
        }


def scan_singular_locus(
    geom: HandleGeometry,
    tol: float = 1e-4,
    seed_grid: int = 9,
    refine_tol: float = 1e-10,
    f_scan: float = 1e-3,
    x0_bounds: Optional[Tuple[float, float]] = None,
    extra_mask=None,
    max_refine: int = 400,
) -> LocusScan:
    """Double points of Gamma with their distance from the predicted locus.

    The predicted locus is ``{x0 >= 1 - delta, x = 0, y = 0, y0 = 0}``.

    Raises
    ------
    ModelViolation
        If a refined double point lies farther than ``tol`` from it.
    """
    p = geom.params
    lo, hi = geom.domain()
    lo, hi = lo.copy(), hi.copy()
    if x0_bounds is not None:
        lo[0], hi[0] = x0_bounds
    a = geom.sheet(+1, f_min=f_scan, extra_mask=extra_mask, box=(lo, hi))
    b = geom.sheet(-1, f_min=f_scan, extra_mask=extra_mask, box=(lo, hi))
    search: DoublePointSearch = find_double_points(
        a, b, seed_grid, refine_tol, max_refine=max_refine, return_search=True
    )
    pts = [dp.point for dp in search.refined]
    worst = 0.0
    x0s = []
    for q in pts:
        off = max(
            max(0.0, (1 - p.delta) - q.x[0]),
            float(np.linalg.norm(q.x[1:])),
            float(np.linalg.norm(q.y[1:])),
            abs(float(q.y[0])),
        )
        worst = max(worst, off)
        x0s.append(float(q.x[0]))
    scan = LocusScan(
        points=pts,
        unrefined=len(search.unrefined),
        left_domain=search.left_domain,
        candidates=search.candidates,
        x0_min=min(x0s) if x0s else None,
        x0_max=max(x0s) if x0s else None,
        max_offset=worst,
    )
    if worst > tol:
        raise ModelViolation(f"double point off the predicted singular locus by {worst:.3e} (tol {tol})")
    return scan


def singular_locus(geom: HandleGeometry, tol: float = 1e-4, **kw) -> List[PhasePoint]:
    """Refined double points of Gamma, asserted to lie on the predicted locus."""
    return scan_singular_locus(geom, tol, **kw).points


def double_point_frames(geom: HandleGeometry) -> Tuple[LagrangianFrame, LagrangianFrame]:
    """Tangent frames (lambda+, lambda-) of Lambda' at its double point x = 0."""
    end = end_model(geom, "Lambda'")
    x = np.zeros((1, end.n))
    H = end.hessF(x)[0]
    eye = np.eye(end.n)
    return LagrangianFrame(eye, H), LagrangianFrame(eye, -H)


def check_cylindricity(geom: HandleGeometry, samples=9, tol: float = 1e-9) -> VerificationReport:
    """Check the cylindrical structure of Gamma outside U_0.

    For sheet samples with ``r^2 >= 1 + 2 eps`` the ``dx0`` component of dF
    must vanish and dF must not depend on x0 (compared against x0 in
    {-0.5, 0.5, 1.5}).  Samples with ``r^2 < 1 + 2 eps`` must satisfy
    ``s^2 < 2 eps`` and ``|y|^2 < 6 sqrt(2 eps)(1 + 4 eps)``, where y is the
    momentum in T*R^n.  Margins are reported as ratios to these bounds.
    """
    p = geom.params
    eps = p.epsilon
    q_cut = 1.0 + 2.0 * eps
    ybound = 6.0 * np.sqrt(2.0 * eps) * (1.0 + 4.0 * eps)
    patch = geom.sheets[0]
    worst_cyl, worst_cyl_pt = 0.0, None
    worst_s, worst_y, worst_in_pt = 0.0, 0.0, None
    n_out = n_in = 0
    ref_x0 = np.array([-0.5, 0.5, 1.5])
    for u in patch.iter_grid(samples):
        r2, s2 = geom.split(u[:, 1:])
        out = r2 >= q_cut
        if np.any(out):
            uo = u[out]
            n_out += len(uo)
            d = geom.dF(uo)
            dev = np.abs(d[:, 0])
            for c in ref_x0:
                v = uo.copy()
                v[:, 0] = c
                dev = np.maximum(dev, np.abs(geom.dF(v) - d).max(axis=1))
            i = int(np.argmax(dev))
            if dev[i] >= worst_cyl:
                worst_cyl, worst_cyl_pt = float(dev[i]), uo[i].tolist()
        inn = ~out
        if np.any(inn):
            ui = u[inn]
            n_in += len(ui)
            y = geom.dF(ui)[:, 1:]
            rs = s2[inn] / (2 * eps)
            ry = np.sum(y**2, axis=1) / ybound
            j = int(np.argmax(np.maximum(rs, ry)))
            if max(rs[j], ry[j]) >= max(worst_s, worst_y):
                worst_in_pt = ui[j].tolist()
            worst_s = max(worst_s, float(rs.max()))
            worst_y = max(worst_y, float(ry.max()))
    passed = worst_cyl <= tol and worst_s < 1.0 and worst_y < 1.0
    return VerificationReport(
        name="cylindricity",
        passed=bool(passed),
        max_residual=worst_cyl,
        tol=tol,
        samples=n_out + n_in,
        worst_point=worst_cyl_pt,
        details={
            "outside_samples": n_out,
            "inside_samples": n_in,
            "s2_over_bound": worst_s,
            "y2_over_bound": worst_y,
            "worst_inside_point": worst_in_pt,
        },
    )


def teardrop_curve(geom: HandleGeometry, points: int = 4097) -> PlanarCurve:
    """One lobe of the slice of Lambda' with T*R_n, counterclockwise.

    The lobe runs out along the + sheet ``y = -3 sqrt(eps - x^2) x`` for
    ``x in [0, sqrt(eps)]`` and back along the - sheet.  Its area is
    ``2 eps^(3/2)``.
    """
    p = geom.params
    if p.k > p.n - 2:
        raise ParameterError("teardrop slice needs k <= n-2 (an s-coordinate x_n)")
    end = end_model(geom, "Lambda'")
    half = max(points // 2, 8)
    # x_n = sqrt(f(0)) sin(u) resolves the vertical tangent at the tip.
    tip = float(np.sqrt(end.f(np.zeros((1, p.n)))[0]))
    u = np.linspace(0.0, 0.5 * np.pi, half + 1)
    xn = tip * np.sin(u)
    lower = end.slice_n(xn, +1)
    upper = end.slice_n(xn[::-1], -1)
    pts = np.vstack([lower, upper[1:]])
    pts[-1] = pts[0]
    return PlanarCurve(pts, closed=True, label="teardrop")
