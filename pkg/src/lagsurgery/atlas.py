"""Worked families: rotation Lagrangians in C^2 and the CP^n family L_r.

Rotation Lagrangians
    ``L_gamma = {(gamma(e^{is}) e^{it}, gamma(e^{is}) e^{-it})}`` for a closed
    profile curve gamma in C.  The figure-eight gives the Whitney sphere.
    Its two resolutions give the Clifford pattern (one curve around the origin)
    and the Chekanov pattern (two curves that do not enclose it).

CP^n family
    In the chart ``D^n(1) x D^n(pi/2)`` the Lagrangian L_r is the conormal
    bundle of the radius r sphere, truncated at covector length pi/2.
    Monotonicity data is exact and stored as rational multiples of pi.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from fractions import Fraction
from typing import List, Optional, Sequence, Tuple

import numpy as np
from scipy.interpolate import CubicSpline
from scipy.optimize import brentq

from .core.curves import PlanarCurve, concat_paths, crossing_points, enclosed_area, winding_number
from .core.symplectic import LagrangianPatch, VerificationReport, verify_lagrangian
from .errors import ModelViolation, ParameterError
from .topology import CobordismDescriptor, ManifoldDescriptor
from .zero_surgery import sphere_chart, _sphere_box

TWO_PI = 2.0 * np.pi


# ---------------------------------------------------------------------------
# Rotation Lagrangians
# ---------------------------------------------------------------------------


def periodic_spline(curve: PlanarCurve) -> CubicSpline:
    """Periodic cubic spline through a closed polyline, parameter in [0, 2 pi]."""
    if not curve.closed:
        raise ParameterError("profile curve must be closed")
    p = curve.points
    seg = np.linalg.norm(np.diff(p, axis=0), axis=1)
    if seg.sum() <= 0.0:
        raise ParameterError("profile curve has zero length")
    keep = np.concatenate([[True], seg > 1e-14 * seg.sum()])
    p = p[keep]
    seg = np.linalg.norm(np.diff(p, axis=0), axis=1)
    if len(p) < 4:
        raise ParameterError("profile curve needs at least three distinct points")
    s = np.concatenate([[0.0], np.cumsum(seg)])
    s *= TWO_PI / s[-1]
    p = p.copy()
    p[-1] = p[0]
    return CubicSpline(s, p, bc_type="periodic")


@dataclass
class RotationLagrangian:
    """Rotation of a profile curve, with the area parameter A.

    ``A`` is half the area bounded by the profile, summed over the loops in
    ``loops``.  These default to the profile itself.  For the figure-eight
    they are its two lobes.
    """

    gamma: PlanarCurve
    patch: LagrangianPatch
    area_param: float
    loops: Tuple[PlanarCurve, ...] = ()
    spline: Optional[CubicSpline] = None

    def profile(self, s, nu: int = 0) -> np.ndarray:
        """Complex values of the spline profile (or its derivative)."""
        v = self.spline(np.asarray(s, dtype=float), nu)
        return v[..., 0] + 1j * v[..., 1]

    def verify(self, grid: int = 24, tol: float = 1e-8) -> VerificationReport:
        return verify_lagrangian(self.patch, grid, tol=tol)


def build_rotation_lagrangian(
    gamma: PlanarCurve,
    loops: Optional[Sequence[PlanarCurve]] = None,
    symmetric: bool = False,
    label: str = "",
) -> RotationLagrangian:
    """Patch ``(s, t) -> (gamma(s) e^{it}, gamma(s) e^{-it})`` in T*R^2 = C^2.

    Coordinates are ``(x1, x2, y1, y2)`` with ``z_j = x_j + i y_j``.  Points
    with ``gamma(s) = 0`` are masked out, because the whole t-circle collapses
    there (a polar-coordinate singularity of the parametrization, not of L).
    For an origin-symmetric profile (``symmetric=True``) the image is covered
    twice, and ``(s, t) ~ (s + pi, t + pi)`` is declared as an equivalence.

    Raises
    ------
    ParameterError
        For open or degenerate (zero-length) profiles.
    """
    spl = periodic_spline(gamma)
    scale = float(np.abs(gamma.points).max())

    def z_of(s, nu=0):
        v = spl(s, nu)
        return v[:, 0] + 1j * v[:, 1]

    def func(u):
        z = z_of(u[:, 0])
        e = np.exp(1j * u[:, 1])
        z1, z2 = z * e, z * np.conj(e)
        return np.stack([z1.real, z2.real, z1.imag, z2.imag], axis=1)

    def jac(u):
        z = z_of(u[:, 0])
        dz = z_of(u[:, 0], 1)
        e = np.exp(1j * u[:, 1])
        ds1, ds2 = dz * e, dz * np.conj(e)
        dt1, dt2 = 1j * z * e, -1j * z * np.conj(e)
        cols = []
        for a, b in ((ds1, ds2), (dt1, dt2)):
            cols.append(np.stack([a.real, b.real, a.imag, b.imag], axis=1))
        return np.stack(cols, axis=2)

    def mask(u):
        return np.abs(z_of(u[:, 0])) > 1e-6 * scale

    eqs: tuple = ()
    if symmetric:
        eqs = (lambda u: np.stack([np.mod(u[:, 0] + np.pi, TWO_PI), np.mod(u[:, 1] + np.pi, TWO_PI)], axis=1),)
    patch = LagrangianPatch(
        np.zeros(2),
        np.full(2, TWO_PI),
        func,
        2,
        jac=jac,
        label=label or f"rotation:{gamma.label or 'gamma'}",
        mask=mask,
        periods=(TWO_PI, TWO_PI),
        equivalences=eqs,
    )
    loops = tuple(loops) if loops is not None else (gamma,)
    area = 0.5 * sum(abs(enclosed_area(c)) for c in loops)
    return RotationLagrangian(gamma, patch, area, loops, spl)


def circle_profile(center: float, radius: float, samples: int = 1024) -> PlanarCurve:
    """Circle of the given radius centred at ``center`` on the real axis."""
    th = np.linspace(0.0, TWO_PI, samples, endpoint=False)
    pts = np.stack([center + radius * np.cos(th), radius * np.sin(th)], axis=1)
    return PlanarCurve.closed_from(pts, label="circle")


def random_profile(rng: np.random.Generator, modes: int = 4, samples: int = 512) -> PlanarCurve:
    """Random smooth closed curve avoiding the origin (a perturbed off-centre circle)."""
    th = np.linspace(0.0, TWO_PI, samples, endpoint=False)
    r = np.ones_like(th)
    for j in range(1, modes + 1):
        r += rng.uniform(-0.15, 0.15) / j * np.cos(j * th + rng.uniform(0, TWO_PI))
    c = rng.uniform(1.5, 3.0) * np.exp(1j * rng.uniform(0, TWO_PI))
    z = c + r * np.exp(1j * th)
    return PlanarCurve.closed_from(np.stack([z.real, z.imag], axis=1), label="random")


def profile_double_points(curve: PlanarCurve) -> np.ndarray:
    """Profile points producing double points of ``L_gamma``.

    Two parameters have the same image iff ``gamma(s') = +-gamma(s)``, so
    these are the crossings of gamma with itself and with ``-gamma``.  Do not
    use this on origin-symmetric profiles, where ``-gamma`` coincides with
    gamma.
    """
    neg = PlanarCurve(-curve.points, curve.closed, curve.label)
    pts = crossing_points([curve, neg])
    if len(pts) == 0:
        return pts
    # Keep one representative of each +- pair, on the original curve.
    return np.unique(np.round(np.vstack([pts, -pts]), 9), axis=0)


# ---------------------------------------------------------------------------
# Figure-eight and its two resolutions
# ---------------------------------------------------------------------------


def figure_eight(scale: float = 1.0):
    """``gamma(s) = scale (sin s, sin s cos s)``: origin-symmetric, double point at 0.

    Each lobe bounds area ``2 scale^2 / 3``.  The right lobe (s in (0, pi)) is
    clockwise and the left lobe is counterclockwise.
    """

    def g(s, nu: int = 0):
        s = np.asarray(s, dtype=float)
        if nu == 0:
            return scale * np.stack([np.sin(s), 0.5 * np.sin(2 * s)], axis=-1)
        if nu == 1:
            return scale * np.stack([np.cos(s), np.cos(2 * s)], axis=-1)
        raise ValueError("nu must be 0 or 1")

    return g


def _hermite(p0, t0, p1, t1, samples: int) -> np.ndarray:
    tau = np.linspace(0.0, 1.0, samples)[:, None]
    h00 = 2 * tau**3 - 3 * tau**2 + 1
    h10 = tau**3 - 2 * tau**2 + tau
    h01 = -2 * tau**3 + 3 * tau**2
    h11 = tau**3 - tau**2
    return h00 * p0 + h10 * t0 + h01 * p1 + h11 * t1


@dataclass
class FigureEightResolution:
    """The Whitney profile, its lobes, and the two resolved profiles."""

    scale: float
    cut: float
    whitney: PlanarCurve
    lobes: Tuple[PlanarCurve, PlanarCurve]
    clifford: Tuple[PlanarCurve, ...]
    chekanov: Tuple[PlanarCurve, ...]

    @property
    def A_whitney(self) -> float:
        return 0.5 * sum(abs(enclosed_area(c)) for c in self.lobes)

    @property
    def A_clifford(self) -> float:
        return 0.5 * sum(abs(enclosed_area(c)) for c in self.clifford)

    @property
    def A_chekanov(self) -> float:
        return 0.5 * sum(abs(enclosed_area(c)) for c in self.chekanov)

    def winding_pattern(self, which: str) -> List[int]:
        curves = {"clifford": self.clifford, "chekanov": self.chekanov}[which]
        return sorted(abs(winding_number(c)) for c in curves)

    def crossings(self, which: str) -> int:
        curves = {"clifford": self.clifford, "chekanov": self.chekanov}[which]
        return int(len(crossing_points(list(curves))))

    def summary(self) -> dict:
        return {
            "scale": self.scale,
            "cut_radius": self.cut,
            "A_whitney": self.A_whitney,
            "A_clifford": self.A_clifford,
            "A_chekanov": self.A_chekanov,
            "winding_clifford": self.winding_pattern("clifford"),
            "winding_chekanov": self.winding_pattern("chekanov"),
            "crossings_clifford": self.crossings("clifford"),
            "crossings_chekanov": self.crossings("chekanov"),
            "ordering_ok": bool(self.A_chekanov < self.A_whitney < self.A_clifford),
        }


def resolve_figure_eight(scale: float = 1.0, cut: float = 0.1, samples: int = 1024) -> FigureEightResolution:
    """Cut the figure-eight inside the disc of radius ``cut * scale`` and reconnect.

    Near the origin the branch through s = 0 runs from the third to the first
    quadrant, and the branch through s = pi runs from the fourth to the second.
    Joining the ends with cubic Hermite arcs in the two possible ways gives

    * Chekanov: fourth -> first and third -> second quadrant, closing each
      lobe on its own (two curves, neither around the origin);
    * Clifford: fourth -> third and second -> first, reversing the left lobe
      (one curve around the origin).

    The construction is symmetric under ``z -> -z``.
    """
    if not 0.0 < cut < 0.5:
        raise ParameterError("cut must lie in (0, 0.5)")
    g = figure_eight(scale)
    # |gamma(s)| = scale |sin s| sqrt(1 + cos^2 s) is increasing on [0, pi/2].
    sh = brentq(lambda s: np.linalg.norm(g(s)) - cut * scale, 1e-12, np.pi / 2)
    m = samples // 2
    right = g(np.linspace(sh, np.pi - sh, m))
    left = g(np.linspace(np.pi + sh, TWO_PI - sh, m))
    full = g(np.linspace(0.0, TWO_PI, samples, endpoint=False))
    whitney = PlanarCurve.closed_from(full, label="whitney")
    lobe_r = PlanarCurve.closed_from(g(np.linspace(0.0, np.pi, m, endpoint=False)), label="lobe+")
    lobe_l = PlanarCurve.closed_from(g(np.linspace(np.pi, TWO_PI, m, endpoint=False)), label="lobe-")

    step = np.linalg.norm(right[1] - right[0])

    def join(p0, d0, p1, d1):
        L = np.linalg.norm(p1 - p0)
        k = max(8, int(np.ceil(L / step)))
        t0 = d0 / np.linalg.norm(d0) * L
        t1 = d1 / np.linalg.norm(d1) * L
        return _hermite(p0, t0, p1, t1, k)

    dA_in, dA_out = g(TWO_PI - sh, 1), g(sh, 1)
    dB_in, dB_out = g(np.pi - sh, 1), g(np.pi + sh, 1)
    # Chekanov: each lobe closes on itself.
    ch_r = concat_paths([right, join(right[-1], dB_in, right[0], dA_out)], label="chekanov+")
    ch_l = concat_paths([left, join(left[-1], dA_in, left[0], dB_out)], label="chekanov-")
    # Clifford: right lobe, bottom connector, reversed left lobe, top connector.
    rev = left[::-1]
    cl = concat_paths(
        [right, join(right[-1], dB_in, rev[0], -dA_in), rev, join(rev[-1], -dB_out, right[0], dA_out)],
        label="clifford",
    )
    return FigureEightResolution(scale, cut * scale, whitney, (lobe_r, lobe_l), (cl,), (ch_r, ch_l))


@dataclass(frozen=True)
class AreaPlan:
    """Verdict of the area inequality for obtaining a torus from a Whitney sphere."""

    A_whitney: float
    target: str
    A_target: float
    feasible: bool
    reason: str

    def to_dict(self) -> dict:
        return dict(self.__dict__)


def torus_area_plan(A_whitney: float, target: str, A_target: float) -> AreaPlan:
    """0-surgery on ``S^2_Wh(A)`` yields ``T_Cl(A')`` iff ``A' > A`` and ``T_Ch(A'')`` iff ``A'' < A``."""
    if A_whitney <= 0 or A_target <= 0:
        raise ParameterError("areas must be positive")
    t = target.lower()
    if t in ("clifford", "cl"):
        ok = A_target > A_whitney
        why = "Clifford tori from 0-surgery are larger: need A' > A"
        name = "clifford"
    elif t in ("chekanov", "ch"):
        ok = A_target < A_whitney
        why = "Chekanov tori from 0-surgery are smaller: need A'' < A"
        name = "chekanov"
    else:
        raise ParameterError(f"target must be 'clifford' or 'chekanov', got {target!r}")
    return AreaPlan(float(A_whitney), name, float(A_target), bool(ok), why)


@dataclass(frozen=True)
class TorusCobordism:
    source: str
    target: str
    descriptor: CobordismDescriptor

    def to_dict(self) -> dict:
        return {"source": self.source, "target": self.target, "handles": [list(h) for h in self.descriptor.handles]}


def clifford_chekanov_cobordisms(A_small: float, A_large: float) -> List[TorusCobordism]:
    """Cobordisms ``T(A'') ~> T(A')`` through a Whitney sphere with ``A'' < A < A'``.

    Returns an empty list unless ``A'' < A'``: there is no claim when the
    areas are equal.
    """
    if A_small <= 0 or A_large <= 0:
        raise ParameterError("areas must be positive")
    if not A_small < A_large:
        return []
    T2 = ManifoldDescriptor.parse("T2")
    desc = CobordismDescriptor(T2, T2, ((2, 1), (1, 1)))
    pairs = [("chekanov", "clifford"), ("clifford", "clifford"), ("chekanov", "chekanov")]
    return [
        TorusCobordism(f"T_{a}({A_small:g})", f"T_{b}({A_large:g})", desc) for a, b in pairs
    ]


# ---------------------------------------------------------------------------
# CP^n
# ---------------------------------------------------------------------------


def _representative(x) -> np.ndarray:
    """Unit representative with ``x_{n+1} > 0`` of points in ``RP^n - RP^{n-1}``."""
    x = np.atleast_2d(np.asarray(x, dtype=float))
    if np.any(x[:, -1] == 0.0):
        raise ParameterError("point lies on RP^{n-1} (last homogeneous coordinate is zero)")
    x = x * np.sign(x[:, -1:])
    return x / np.linalg.norm(x, axis=1, keepdims=True)


def chart_map(x) -> np.ndarray:
    """``[x_1 : ... : x_{n+1}] -> arcsin(|x'|) x'`` with ``x' = (x_1, ..., x_n)``.

    Homogeneous coordinates are normalized first (unit length, ``x_{n+1} > 0``).
    The image norm ``rho arcsin(rho)``, ``rho = |x'|``, increases from 0 to pi/2.
    """
    u = _representative(x)
    xp = u[:, :-1]
    rho = np.clip(np.linalg.norm(xp, axis=1, keepdims=True), 0.0, 1.0)
    return np.arcsin(rho) * xp


def chart_inverse(v, tol: float = 1e-14) -> np.ndarray:
    """Unit representative ``(x', x_{n+1})`` with ``x_{n+1} > 0`` of a chart point."""
    v = np.atleast_2d(np.asarray(v, dtype=float))
    nv = np.linalg.norm(v, axis=1)
    if np.any(nv >= np.pi / 2):
        raise ParameterError("chart points must lie in the open disc of radius pi/2")
    rho = np.empty_like(nv)
    for i, target in enumerate(nv):
        if target == 0.0:
            rho[i] = 0.0
        else:
            rho[i] = brentq(lambda r: r * np.arcsin(r) - target, 0.0, 1.0, xtol=tol)
    with np.errstate(invalid="ignore", divide="ignore"):
        direction = np.where(nv[:, None] > 0, v / nv[:, None], 0.0)
    xp = rho[:, None] * direction
    last = np.sqrt(np.clip(1.0 - rho**2, 0.0, None))
    return np.concatenate([xp, last[:, None]], axis=1)


def conormal_patch(n: int, r: float, margin: float = 1e-3, angle_margin: float = 0.05) -> LagrangianPatch:
    """``(N*S^{n-1}(r))_{<pi/2}``: ``(phi, tau) -> (r theta(phi), tau theta(phi))``.

    ``|tau| <= pi/2 - margin`` keeps the covectors inside the open disc.  The
    polar angles stay ``angle_margin`` away from 0 and pi, where the
    hyperspherical chart degenerates (its Jacobian scales like a product of
    sines, so corners of the box would look like immersion failures).
    """
    if n < 2:
        raise ParameterError("the CP^n model needs n >= 2")
    if not 0.0 < r < 1.0:
        raise ParameterError(f"r must lie in (0, 1), got {r}")
    slo, shi = _sphere_box(n, angle_margin)
    lo = np.concatenate([slo, [-np.pi / 2 + margin]])
    hi = np.concatenate([shi, [np.pi / 2 - margin]])

    def func(u):
        th, _ = sphere_chart(u[:, :-1])
        return np.concatenate([r * th, u[:, -1:] * th], axis=1)

    def jac(u):
        th, dth = sphere_chart(u[:, :-1])
        tau = u[:, -1][:, None, None]
        top = np.concatenate([r * dth, np.zeros(th.shape + (1,))], axis=2)
        bot = np.concatenate([tau * dth, th[:, :, None]], axis=2)
        return np.concatenate([top, bot], axis=1)

    periods = [None] * (n - 2) + [TWO_PI, None]
    return LagrangianPatch(lo, hi, func, n, jac=jac, label=f"conormal:n={n},r={r:g}", periods=periods)


@dataclass
class CPnChartModel:
    n: int
    r: float
    conormal: LagrangianPatch

    @staticmethod
    def chart_map(x) -> np.ndarray:
        return chart_map(x)

    @staticmethod
    def chart_inverse(v) -> np.ndarray:
        return chart_inverse(v)

    def verify(self, grid: int = 9, tol: float = 1e-8, max_points: int = 200_000, seed: int = 0) -> VerificationReport:
        """Lagrangian check on the full grid, or on random samples when the grid is too large."""
        d = self.conormal.dim
        if grid**d <= max_points:
            return verify_lagrangian(self.conormal, grid, tol=tol)
        rng = np.random.default_rng(seed)
        lo, hi = self.conormal.lower, self.conormal.upper
        pts = lo + (hi - lo) * rng.random((min(max_points, 20_000), d))
        return verify_lagrangian(self.conormal, grid, tol=tol, points=pts)

    def slice_curves(self) -> List[PlanarCurve]:
        """``L_r`` in the ``(x_n, y_n)`` slice: the two segments ``x_n = +-r``."""
        y = np.linspace(-np.pi / 2, np.pi / 2, 65)
        return [PlanarCurve(np.stack([np.full_like(y, s * self.r), y], axis=1), label=f"L_r{'+-'[i]}") for i, s in enumerate((1, -1))]


def build_cpn_model(n: int, r: float) -> CPnChartModel:
    """Chart model of ``L_r`` near a fibre of ``D*(RP^n - RP^{n-1})``."""
    return CPnChartModel(int(n), float(r), conormal_patch(int(n), float(r)))


@dataclass(frozen=True)
class MonotonicityBudget:
    """Monotonicity data for L_r in CP^n, with areas as exact multiples of pi.

    ``*_pi`` fields are Fractions q meaning q * pi.
    """

    n: int
    k: int
    eta_ambient_pi: Fraction
    eta_L_pi: Fraction
    r_monotone: Fraction
    required_area_pi: Fraction
    maslov2_disc_area_pi: Fraction

    @property
    def feasible_upper_pi(self) -> Fraction:
        return self.r_monotone

    @property
    def feasible(self) -> bool:
        return Fraction(0) < self.required_area_pi < self.feasible_upper_pi

    def to_dict(self) -> dict:
        def q(x: Fraction):
            return {"pi_multiple": str(x), "value": float(x) * np.pi}

        return {
            "n": self.n,
            "k": self.k,
            "r_monotone": str(self.r_monotone),
            "eta_ambient": q(self.eta_ambient_pi),
            "eta_L": q(self.eta_L_pi),
            "required_omega_sigma": q(self.required_area_pi),
            "feasible_range": ["0", q(self.feasible_upper_pi)],
            "maslov2_disc_area": q(self.maslov2_disc_area_pi),
            "feasible": self.feasible,
        }


def monotonicity_budget(n: int, k: int) -> MonotonicityBudget:
    """Exact budget for k-antisurgery plus 0-surgery on the monotone L_r.

    Raises
    ------
    ParameterError
        Unless ``2 <= k <= n-3``, the hypothesis under which the construction
        preserves monotonicity.
    """
    n, k = int(n), int(k)
    if not 2 <= k <= n - 3:
        raise ParameterError(f"monotone CP^n examples need 2 <= k <= n-3, got n={n}, k={k}")
    eta_amb = Fraction(2, n + 1)
    eta_L = eta_amb / 2
    r = Fraction(n - 1, n + 1)
    b = MonotonicityBudget(n, k, eta_amb, eta_L, r, eta_L * (n - k - 1), 1 - r)
    if not b.feasible:
        raise ModelViolation(f"budget infeasible for n={n}, k={k}")
    return b


@dataclass(frozen=True)
class SafetyVerdict:
    passed: bool
    c_epsilon: float
    worst_point: Optional[List[float]]
    worst_margin: float
    checked: int

    def to_dict(self) -> dict:
        return dict(self.__dict__)


def so_n_safety_check(c_epsilon: float, gamma_plus: PlanarCurve, exclude_radius: float = 0.0) -> SafetyVerdict:
    """Check ``|y| > c |x|`` on the samples of gamma_+ outside ``|p| <= exclude_radius``.

    The margin reported is ``min(|y| - c |x|)``; the check passes when it is
    positive.  ``c(eps)`` is supplied by the caller.
    """
    if c_epsilon <= 0:
        raise ParameterError("c_epsilon must be positive")
    p = gamma_plus.points
    sel = np.linalg.norm(p, axis=1) > exclude_radius
    q = p[sel]
    if len(q) == 0:
        return SafetyVerdict(True, float(c_epsilon), None, float("inf"), 0)
    margin = np.abs(q[:, 1]) - c_epsilon * np.abs(q[:, 0])
    i = int(np.argmin(margin))
    return SafetyVerdict(bool(margin[i] > 0), float(c_epsilon), q[i].tolist(), float(margin[i]), int(len(q)))


def composite_example(n: int, k: int, resolution: str = "P") -> ManifoldDescriptor:
    """``L_r^natural`` for ``L_r = S^1 x S^{n-1}``: k-antisurgery, then 0-surgery."""
    from .topology import apply_surgery

    L = ManifoldDescriptor.parse(f"S1xS{n - 1}")
    return apply_surgery(L, k, resolution)
