"""Lagrangian 0-surgery: the local model h_gamma and the resolution of Lambda'.

The classical model glues the curve ``gamma = (a, b)`` into the two planes
``R^n x {0}`` and ``{0} x R^n`` of T*R^n through

    h_gamma(t, theta) = (a(t) theta, b(t) theta),   theta in S^{n-1}.

The double point of Lambda' at the origin is resolved by transporting this
model with a linear symplectic map ``Phi_+-`` that sends ``R^n x {0}`` to the
tangent plane of one sheet and ``{0} x R^n`` to the other.  Before gluing,
Lambda' is made linear near the origin by blending the generating function
``F_1 = F(1, .)`` into its quadratic Taylor polynomial on a small annulus.

The module also provides the curve-level model of the desingularized
cobordism ``W`` (the eta curves) used for the trace cobordism.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, List, Optional, Sequence, Tuple

import numpy as np

from .core.curves import PlanarCurve, concat_paths, crossing_count, enclosed_area, hausdorff
from .core.intersect import DoublePoint, find_double_points
from .core.maslov import FrameLoop, LagrangianFrame, plane_winding, principal_gap, transversality_gap
from .core.symplectic import LagrangianPatch, VerificationReport, symplectic_matrix, verify_lagrangian
from .errors import ModelViolation, ParameterError
from .handle import (
    EndModel,
    HandleParams,
    _graph,
    _power_hessian,
    build_handle,
    double_point_frames,
    end_model,
)
from .profiles import eta_profile, ramp, smoothstep

ANGLE_MARGIN = 1e-3


# ---------------------------------------------------------------------------
# The surgery curve and the model h_gamma
# ---------------------------------------------------------------------------


def _default_a(kappa):
    def a(t, nu=0):
        s = -np.asarray(t, dtype=float) / kappa
        if nu == 0:
            return -kappa * ramp(s)
        if nu == 1:
            return ramp(s, 1)
        return -ramp(s, 2) / kappa

    return a


def _default_b(kappa):
    def b(t, nu=0):
        s = np.asarray(t, dtype=float) / kappa
        if nu == 0:
            return kappa * ramp(s)
        if nu == 1:
            return ramp(s, 1)
        return ramp(s, 2) / kappa

    return b


@dataclass
class SurgeryCurve:
    """Embedded curve ``gamma = (a, b)`` in T*R used by 0-surgery.

    The default profile is ``a(t) = -kappa m(-t/kappa)`` and
    ``b(t) = kappa m(t/kappa)`` with the smooth ramp ``m`` of
    :func:`lagsurgery.profiles.ramp`.  Since ``m'(s) + m'(-s) = 1`` the sum
    ``a' + b'`` is identically 1, so the curve is embedded.

    Parameters
    ----------
    kappa : float
        Size of the corner region.
    a, b : callable, optional
        Custom components with signature ``f(t, nu=0)`` returning the value
        (``nu = 0``) or first derivative (``nu = 1``).
    samples : int
        Number of points in :attr:`curve`, sampled on ``[-2 kappa, 2 kappa]``.

    Raises
    ------
    ParameterError
        If the curve violates the flat-end or quadrant conditions.
    """

    kappa: float
    a: Optional[Callable] = None
    b: Optional[Callable] = None
    samples: int = 2049
    curve: PlanarCurve = field(init=False, repr=False)

    def __post_init__(self):
        if not (np.isfinite(self.kappa) and self.kappa > 0):
            raise ParameterError(f"kappa must be > 0, got {self.kappa}")
        if self.a is None:
            self.a = _default_a(self.kappa)
        if self.b is None:
            self.b = _default_b(self.kappa)
        self.validate()
        t = np.linspace(-2 * self.kappa, 2 * self.kappa, self.samples)
        self.curve = PlanarCurve(np.stack([self.a(t), self.b(t)], axis=1), label="gamma")

    def point(self, t) -> np.ndarray:
        t = np.asarray(t, dtype=float)
        return np.stack([self.a(t), self.b(t)], axis=-1)

    def velocity(self, t) -> np.ndarray:
        t = np.asarray(t, dtype=float)
        return np.stack([self.a(t, 1), self.b(t, 1)], axis=-1)

    def validate(self, samples: int = 8001) -> None:
        k = self.kappa
        t = np.linspace(-3 * k, 3 * k, samples)
        a, b = self.a(t), self.b(t)
        scale = 1e-12 * k
        lo, hi = t <= -k, t >= k
        if np.any(np.abs(a[lo] - t[lo]) > scale) or np.any(np.abs(b[lo]) > scale):
            raise ParameterError("surgery curve must equal (t, 0) for t <= -kappa")
        if np.any(np.abs(a[hi]) > scale) or np.any(np.abs(b[hi] - t[hi]) > scale):
            raise ParameterError("surgery curve must equal (0, t) for t >= kappa")
        mid = ~(lo | hi)
        # The flat profile underflows to 0 next to +-kappa, so strictness is
        # only testable as a <= 0 <= b with gamma != 0.
        if np.any(a[mid] > 0) or np.any(b[mid] < 0) or np.any(np.hypot(a[mid], b[mid]) == 0):
            raise ParameterError("surgery curve must satisfy a(t) < 0 < b(t) on (-kappa, kappa)")
        v = self.velocity(t)
        if np.any(np.hypot(v[:, 0], v[:, 1]) == 0):
            raise ParameterError("surgery curve is not immersed")
        if crossing_count(PlanarCurve(np.stack([a, b], axis=1))) != 0:
            raise ParameterError("surgery curve is not embedded")


def sphere_chart(phi: np.ndarray) -> Tuple[np.ndarray, np.ndarray]:
    """Hyperspherical coordinates on S^{n-1} and their derivatives.

    ``theta_1 = cos phi_1``, ``theta_j = sin phi_1 ... sin phi_{j-1} cos phi_j``
    and ``theta_n = sin phi_1 ... sin phi_{n-1}``.

    Returns
    -------
    theta : ndarray (m, n)
    dtheta : ndarray (m, n, n-1)
    """
    phi = np.atleast_2d(np.asarray(phi, dtype=float))
    m, d = phi.shape
    n = d + 1
    s, c = np.sin(phi), np.cos(phi)
    theta = np.empty((m, n))
    dtheta = np.zeros((m, n, d))
    for j in range(n):
        factors = [s[:, i] for i in range(min(j, d))]
        last = c[:, j] if j < d else None
        base = np.prod(factors, axis=0) if factors else np.ones(m)
        theta[:, j] = base * last if last is not None else base
        for k in range(min(j, d)):
            prod = np.ones(m)
            for i in range(min(j, d)):
                prod = prod * (c[:, i] if i == k else s[:, i])
            dtheta[:, j, k] = prod * last if last is not None else prod
        if j < d:
            dtheta[:, j, j] = -base * s[:, j]
    return theta, dtheta


def _sphere_box(n: int, margin: float = ANGLE_MARGIN):
    lo = [margin] * (n - 2) + [0.0]
    hi = [np.pi - margin] * (n - 2) + [2 * np.pi]
    return np.array(lo), np.array(hi)


def _handle_patch(curve: SurgeryCurve, n: int, Phi: np.ndarray, t_max: float, label: str) -> LagrangianPatch:
    """Patch ``(t, phi) -> Phi(a(t) theta, b(t) theta)``."""
    slo, shi = _sphere_box(n)
    lo = np.concatenate([[-t_max], slo])
    hi = np.concatenate([[t_max], shi])
    PhiT = np.asarray(Phi, dtype=float).T

    def func(u):
        t = u[:, 0]
        th, _ = sphere_chart(u[:, 1:])
        v = np.concatenate([curve.a(t)[:, None] * th, curve.b(t)[:, None] * th], axis=1)
        return v @ PhiT

    def jac(u):
        t = u[:, 0]
        th, dth = sphere_chart(u[:, 1:])
        a, b = curve.a(t), curve.b(t)
        da, db = curve.a(t, 1), curve.b(t, 1)
        cols = [np.concatenate([da[:, None] * th, db[:, None] * th], axis=1)]
        for k in range(n - 1):
            cols.append(np.concatenate([a[:, None] * dth[:, :, k], b[:, None] * dth[:, :, k]], axis=1))
        J = np.stack(cols, axis=2)  # (m, 2n, n)
        return np.einsum("ij,mjk->mik", np.asarray(Phi, dtype=float), J)

    periods = [None] * (n - 1) + [2 * np.pi]
    return LagrangianPatch(lo, hi, func, n, jac=jac, label=label, periods=periods)


def surgery_model(curve: SurgeryCurve, n: int, t_range: Optional[float] = None) -> LagrangianPatch:
    """Image patch of ``h_gamma : R x S^{n-1} -> T*R^n``.

    Parameters are ``(t, phi_1, ..., phi_{n-1})`` with hyperspherical angles.
    The polar angles stay ``1e-3`` away from the coordinate poles so that the
    chart is an immersion on the whole box.

    Parameters
    ----------
    curve : SurgeryCurve
    n : int
        Dimension (>= 2).
    t_range : float, optional
        Half-length of the t interval (default ``2 kappa``).
    """
    if int(n) != n or n < 2:
        raise ParameterError(f"surgery_model needs n >= 2, got {n}")
    if not isinstance(curve, SurgeryCurve):
        raise ParameterError("surgery_model expects a SurgeryCurve")
    curve.validate()
    t_max = 2 * curve.kappa if t_range is None else float(t_range)
    return _handle_patch(curve, int(n), np.eye(2 * n), t_max, "h_gamma")


def so_orbit_hausdorff(curve: SurgeryCurve, t_samples: int = 101, angle_samples: int = 64) -> float:
    """Hausdorff distance between h_gamma (n = 2) and the SO(2)-orbit of gamma.

    The orbit is generated by rotating ``gamma`` in ``T*R_1 x {0}`` with
    ``A(x, y) = (A x, A y)``; the patch is evaluated through its own chart.
    """
    patch = surgery_model(curve, 2)
    t = np.linspace(-2 * curve.kappa, 2 * curve.kappa, t_samples)
    psi = np.linspace(0.0, 2 * np.pi, angle_samples, endpoint=False)
    T, P = np.meshgrid(t, psi, indexing="ij")
    pts = patch.evaluate(np.stack([T.ravel(), P.ravel()], axis=1))
    g = curve.point(t)
    orbit = []
    for ang in psi:
        R = np.array([[np.cos(ang), -np.sin(ang)], [np.sin(ang), np.cos(ang)]])
        x = (R @ np.stack([g[:, 0], np.zeros_like(t)])).T
        y = (R @ np.stack([g[:, 1], np.zeros_like(t)])).T
        orbit.append(np.concatenate([x, y], axis=1))
    return hausdorff(pts, np.concatenate(orbit))


# ---------------------------------------------------------------------------
# Resolution of the double point of Lambda'
# ---------------------------------------------------------------------------

_SIGN_NAMES = {"+": 1, "-": -1, "plus": 1, "minus": -1, "phi+": 1, "phi-": -1, "Φ+": 1, "Φ-": -1, "Φ₊": 1, "Φ₋": -1}


@dataclass(frozen=True)
class ResolutionChoice:
    """Which resolution to perform and how large the corner region is.

    Parameters
    ----------
    sign : {+1, -1, "+", "-"}
        ``Phi_+`` identifies ``R^n x {0}`` with the ``+dF`` sheet,
        ``Phi_-`` with the ``-dF`` sheet.
    alpha : float, optional
        Target area adjustment.  The corner size is solved for it.
    kappa : float, optional
        Corner size (the ball ``B_kappa`` containing the transported curve).
        Default ``eps / 4``.  Ignored when ``alpha`` is given.
    """

    sign: object
    alpha: Optional[float] = None
    kappa: Optional[float] = None

    def __post_init__(self):
        s = self.sign
        if isinstance(s, str):
            key = s.strip().lower() if s.strip().lower() in _SIGN_NAMES else s.strip()
            if key not in _SIGN_NAMES:
                raise ParameterError(f"unknown resolution sign {s!r}; use '+' or '-'")
            s = _SIGN_NAMES[key]
        if s not in (1, -1):
            raise ParameterError(f"resolution sign must be +1 or -1, got {self.sign!r}")
        object.__setattr__(self, "sign", int(s))
        if self.alpha is not None and not (np.isfinite(self.alpha) and self.alpha > 0):
            raise ParameterError(f"alpha must be > 0, got {self.alpha}")
        if self.kappa is not None and not (np.isfinite(self.kappa) and self.kappa > 0):
            raise ParameterError(f"kappa must be > 0, got {self.kappa}")

    @property
    def name(self) -> str:
        return "Phi+" if self.sign > 0 else "Phi-"


def resolution_map(slopes: np.ndarray, sign: int) -> np.ndarray:
    """Linear symplectic ``Phi_+-`` for tangent planes ``lambda_+- = graph(+-diag(slopes))``.

    Factor i sends ``e_1`` to ``c (1, sign * p_i)`` (a vector of
    ``lambda_sign``) and ``e_2`` to ``-sign * sgn(p_i) c (1, -sign * p_i)``
    (a vector of ``lambda_-sign``), with ``c = 1/sqrt(2|p_i|)`` so that the
    factor has determinant 1.

    Returns
    -------
    ndarray (2n, 2n)
        Matrix in ``(x_1..x_n, y_1..y_n)`` coordinates.
    """
    p = np.asarray(slopes, dtype=float)
    if np.any(p == 0):
        raise ParameterError("the two sheets are not transverse (zero slope)")
    n = p.size
    c = 1.0 / np.sqrt(2.0 * np.abs(p))
    Phi = np.zeros((2 * n, 2 * n))
    i = np.arange(n)
    Phi[i, i] = c
    Phi[n + i, i] = sign * p * c
    e2 = -sign * np.sign(p) * c
    Phi[i, n + i] = e2
    Phi[n + i, n + i] = -sign * p * e2
    return Phi


@dataclass
class ResolvedEnd:
    """The resolved end Lambda^natural near the former double point.

    It consists of two graph patches ``+-dF~`` over ``{|x| >= R1}`` and the
    transported model ``Phi o h_gamma`` over ``|t| <= T``.  Here ``F~``
    equals ``F_1`` outside ``|x| = R2`` and its quadratic Taylor polynomial
    ``Q`` inside ``|x| = R1``.
    """

    end: EndModel
    choice: ResolutionChoice
    kappa: float
    Phi: np.ndarray
    curve: SurgeryCurve
    R1: float
    R2: float
    T: float
    points: int = 512
    patches: Tuple[LagrangianPatch, ...] = field(init=False, repr=False)

    def __post_init__(self):
        x0 = np.zeros((1, self.end.n))
        self._F0 = float(self.end.F(x0)[0])
        self._H0 = self.end.hessF(x0)[0]
        self.patches = (self.sheet(+1), self.sheet(-1), self.handle_patch())

    def __iter__(self):
        return iter(self.patches)

    # -- geometry ----------------------------------------------------------
    @property
    def n(self) -> int:
        return self.end.n

    @property
    def epsilon(self) -> float:
        return self.end.geom.params.epsilon

    @property
    def kappa_model(self) -> float:
        return self.curve.kappa

    @property
    def scale(self) -> float:
        """x-radius per unit of t on the flat parts of the handle."""
        return float(np.abs(self.Phi[0, 0]))

    def _blend(self, x):
        x = np.atleast_2d(np.asarray(x, dtype=float))
        q = np.sum(x**2, axis=1)
        width = self.R2**2 - self.R1**2
        u = (q - self.R1**2) / width
        chi = smoothstep(u)
        chi1 = smoothstep(u, nu=1) / width
        chi2 = smoothstep(u, nu=2) / width**2
        return x, q, chi, chi1, chi2

    def F(self, x) -> np.ndarray:
        x, _, chi, _, _ = self._blend(x)
        F1 = self.end.F(x)
        Q = self._F0 + 0.5 * np.einsum("mi,ij,mj->m", x, self._H0, x)
        return np.where(chi >= 1.0, F1, Q + chi * (F1 - Q))

    def dF(self, x) -> np.ndarray:
        x, _, chi, chi1, _ = self._blend(x)
        F1 = self.end.F(x)
        g1 = self.end.dF(x)
        Q = self._F0 + 0.5 * np.einsum("mi,ij,mj->m", x, self._H0, x)
        gQ = x @ self._H0
        D, gD = F1 - Q, g1 - gQ
        val = gQ + chi[:, None] * gD + 2.0 * (chi1 * D)[:, None] * x
        return np.where((chi >= 1.0)[:, None], g1, val)

    def hessF(self, x) -> np.ndarray:
        x, _, chi, chi1, chi2 = self._blend(x)
        f, g, H = self.end.f_grad_hess(x)
        F1 = np.clip(f, 0.0, None) ** 1.5
        g1 = 1.5 * np.sqrt(np.clip(f, 0.0, None))[:, None] * g
        H1 = _power_hessian(f, g, H)
        Q = self._F0 + 0.5 * np.einsum("mi,ij,mj->m", x, self._H0, x)
        gQ = x @ self._H0
        D, gD, HD = F1 - Q, g1 - gQ, H1 - self._H0
        outer = gD[:, :, None] * x[:, None, :]
        val = (
            self._H0
            + chi[:, None, None] * HD
            + 2.0 * chi1[:, None, None] * (outer + np.swapaxes(outer, 1, 2))
            + D[:, None, None]
            * (4.0 * chi2[:, None, None] * x[:, :, None] * x[:, None, :] + 2.0 * chi1[:, None, None] * np.eye(self.n))
        )
        return np.where((chi >= 1.0)[:, None, None], H1, val)

    def sheet(self, sign: int, f_min: Optional[float] = None, box=None) -> LagrangianPatch:
        """Graph of ``sign * dF~`` over ``{f >= f_min, |x| >= R1}``."""
        geom = self.end.geom
        fm = geom.f_min if f_min is None else f_min
        xm = geom.x_max
        lo, hi = (np.full(self.n, -xm), np.full(self.n, xm)) if box is None else box
        R1sq = self.R1**2

        def mask(x):
            return (self.end.f(x) >= fm) & (np.sum(x**2, axis=1) >= R1sq)

        label = f"Lambda#{'+' if sign > 0 else '-'}"
        return _graph(self.dF, self.hessF, lo, hi, sign, label, mask)

    def handle_patch(self, t_max: Optional[float] = None) -> LagrangianPatch:
        return _handle_patch(self.curve, self.n, self.Phi, self.T if t_max is None else t_max, "Phi h_gamma")

    # -- slice in T*R_n ------------------------------------------------------
    def _require_slice(self):
        p = self.end.geom.params
        if p.k > p.n - 2:
            raise ParameterError("the T*R_n slice needs 0 <= k <= n-2")

    @property
    def tip(self) -> float:
        return float(np.sqrt(self.end.f(np.zeros((1, self.n)))[0]))

    def _xs(self, side: int, outward: bool) -> np.ndarray:
        u0 = np.arcsin(min(self.R1 / self.tip, 1.0))
        u = np.linspace(u0, 0.5 * np.pi, self.points)
        xs = self.tip * np.sin(u)
        xs[0] = self.R1
        xs = side * xs
        return xs if outward else xs[::-1]

    def _graph_points(self, xs, sign):
        x = np.zeros((len(xs), self.n))
        x[:, -1] = xs
        ys = sign * self.dF(x)[:, -1]
        # At the tip the momentum vanishes exactly.
        ys[np.abs(np.abs(xs) - self.tip) == 0] = 0.0
        return np.stack([xs, ys], axis=1)

    def _handle_points(self, theta_n: int, t_from: float, t_to: float):
        t = np.linspace(t_from, t_to, self.points)
        g = self.curve.point(t) * theta_n
        n = self.n
        X = self.Phi[n - 1, n - 1] * g[:, 0] + self.Phi[n - 1, 2 * n - 1] * g[:, 1]
        Y = self.Phi[2 * n - 1, n - 1] * g[:, 0] + self.Phi[2 * n - 1, 2 * n - 1] * g[:, 1]
        return np.stack([X, Y], axis=1)

    def loop_segments(self) -> List[Tuple[str, tuple]]:
        """The loop l_-+ as a list of ``(kind, data)`` segments.

        ``("graph", (side, sign, outward))`` runs along the ``sign`` sheet over
        ``x_n`` on the ``side`` half-axis.  ``("handle", (theta_n, t0, t1))``
        runs along ``Phi o h_gamma(., theta_n e_n)``.
        """
        self._require_slice()
        T = self.T
        if self.choice.sign < 0:
            # Right lobe, counterclockwise.
            return [
                ("graph", (+1, +1, True)),
                ("graph", (+1, -1, False)),
                ("handle", (-1, -T, T)),
            ]
        return [
            ("graph", (+1, +1, True)),
            ("graph", (+1, -1, False)),
            ("handle", (+1, T, -T)),
            ("graph", (-1, +1, True)),
            ("graph", (-1, -1, False)),
            ("handle", (-1, T, -T)),
        ]

    def _segment_points(self, kind, data):
        if kind == "graph":
            side, sign, outward = data
            return self._graph_points(self._xs(side, outward), sign)
        theta_n, t0, t1 = data
        return self._handle_points(theta_n, t0, t1)

    def loop_curve(self) -> PlanarCurve:
        """The loop l_- (right lobe) or l_+ (both lobes) in T*R_n."""
        pts = [self._segment_points(k, d) for k, d in self.loop_segments()]
        return concat_paths(pts, closed=True, label="l+" if self.choice.sign > 0 else "l-")

    def slice_curves(self) -> List[PlanarCurve]:
        """All closed components of ``Lambda^natural`` meeting ``T*R_n`` near the origin."""
        self._require_slice()
        if self.choice.sign > 0:
            return [self.loop_curve()]
        T = self.T
        left = [
            self._graph_points(self._xs(-1, True), +1),
            self._graph_points(self._xs(-1, False), -1),
            self._handle_points(+1, -T, T),
        ]
        return [self.loop_curve(), concat_paths(left, closed=True, label="left lobe")]

    def omega_sigma(self) -> float:
        """Symplectic area of the positive generator sigma."""
        area = enclosed_area(self.loop_curve())
        return area / 2.0 if self.choice.sign > 0 else area

    def alpha_signed(self) -> float:
        """Measured ``omega(sigma) - 2 eps^(3/2)``."""
        return self.omega_sigma() - 2.0 * self.epsilon**1.5

    # -- frames and Maslov index --------------------------------------------
    def _graph_planes(self, xs: np.ndarray, sign: int):
        m, n = len(xs), self.n
        x = np.zeros((m, n))
        x[:, -1] = xs
        X = np.broadcast_to(np.eye(n), (m, n, n)).copy()
        Y = np.empty((m, n, n))
        inner = np.abs(xs) < self.R2
        if np.any(inner):
            Y[inner] = sign * self.hessF(x[inner])
        outer = ~inner
        if np.any(outer):
            f, g, H = self.end.f_grad_hess(x[outer])
            rf = np.sqrt(np.clip(f, 0.0, None))
            v = g / np.linalg.norm(g, axis=1)[:, None]
            D = np.eye(n) - (1.0 - rf)[:, None, None] * v[:, :, None] * v[:, None, :]
            X[outer] = D
            Y[outer] = sign * (1.5 * rf[:, None, None] * (H @ D) + 0.75 * g[:, :, None] * g[:, None, :])
        return X, Y

    def _handle_planes(self, t: np.ndarray, theta_n: int):
        n = self.n
        a, b = self.curve.a(t), self.curve.b(t)
        da, db = self.curve.a(t, 1), self.curve.b(t, 1)
        P, Qm = self.Phi[:, :n], self.Phi[:, n:]
        # Column j is a Phi e_j + b Phi f_j, the last one uses (a', b').
        ca = np.repeat(a[:, None], n, axis=1)
        cb = np.repeat(b[:, None], n, axis=1)
        ca[:, -1] = theta_n * da
        cb[:, -1] = theta_n * db
        M = P[None] * ca[:, None, :] + Qm[None] * cb[:, None, :]
        return M[:, :n], M[:, n:]

    def loop_planes(self) -> Tuple[np.ndarray, np.ndarray]:
        """Stacked tangent frames ``(X, Y)`` of Lambda^natural along the loop."""
        Xs, Ys = [], []
        for kind, data in self.loop_segments():
            if kind == "graph":
                side, sign, outward = data
                X, Y = self._graph_planes(self._xs(side, outward), sign)
            else:
                theta_n, t0, t1 = data
                X, Y = self._handle_planes(np.linspace(t0, t1, self.points), theta_n)
            Xs.append(X)
            Ys.append(Y)
        return np.concatenate(Xs), np.concatenate(Ys)

    def loop_frames(self) -> FrameLoop:
        """Tangent planes of Lambda^natural along the loop as a FrameLoop."""
        X, Y = self.loop_planes()
        return FrameLoop([LagrangianFrame(x, y, check=False) for x, y in zip(X, Y)], close_tol=1e-6)

    def loop_winding(self) -> float:
        X, Y = self.loop_planes()
        first = LagrangianFrame(X[0], Y[0], check=False)
        last = LagrangianFrame(X[-1], Y[-1], check=False)
        if principal_gap(first, last) > 1e-6:
            raise ModelViolation("loop frames do not close up")
        return plane_winding(X, Y)

    # -- checks ----------------------------------------------------------------
    def double_point_scan(self, seed_grid: int = 9, tol: float = 1e-10, f_min: float = 1e-3):
        """Double points of Lambda^natural between and within its patches.

        Coincidences on the gluing seam (graph at ``|x| = R1`` against the
        handle at ``|t| = T``) are the same point of the manifold and are
        discarded.
        """
        geom = self.end.geom
        box = (np.full(self.n, -geom.x_max), np.full(self.n, geom.x_max))
        plus, minus = self.sheet(+1, f_min, box), self.sheet(-1, f_min, box)
        handle = self.handle_patch()
        pieces = [plus, minus, handle]
        seam = 1e-6
        found: List[Tuple[str, DoublePoint]] = []
        for i in range(3):
            for j in range(i, 3):
                pa, pb = pieces[i], pieces[j]
                pts = find_double_points(pa, pb, seed_grid, tol)
                for dp in pts:
                    if j == 2 and i < 2:
                        on_seam = abs(np.linalg.norm(dp.param_a) - self.R1) < seam * max(self.R1, 1.0) and abs(
                            abs(dp.param_b[0]) - self.T
                        ) < seam * max(self.T, 1.0)
                        if on_seam:
                            continue
                    found.append((f"{pa.label}/{pb.label}", dp))
        return found

    def outside_ball_hausdorff(self, grid: int = 15, radius: Optional[float] = None) -> float:
        """Hausdorff distance between Lambda' and Lambda^natural outside ``B_{2 kappa}``."""
        r = 2 * self.kappa if radius is None else radius
        geom = self.end.geom
        xs = np.linspace(-geom.x_max, geom.x_max, grid)
        # Include points inside the blend annulus and near the origin.
        fine = np.linspace(-3 * self.R2, 3 * self.R2, grid)
        axes = np.unique(np.concatenate([xs, fine]))
        mesh = np.stack(np.meshgrid(*([axes] * self.n), indexing="ij"), axis=-1).reshape(-1, self.n)
        mesh = mesh[self.end.f(mesh) >= 0.0]
        orig, new = [], []
        for s in (+1, -1):
            p_old = np.concatenate([mesh, s * self.end.dF(mesh)], axis=1)
            keep_new = np.sum(mesh**2, axis=1) >= self.R1**2
            p_new = np.concatenate([mesh[keep_new], s * self.dF(mesh[keep_new])], axis=1)
            orig.append(p_old[np.linalg.norm(p_old, axis=1) > r])
            new.append(p_new[np.linalg.norm(p_new, axis=1) > r])
        hp = self.handle_patch()
        hpts = hp.evaluate(hp.grid(grid))
        new.append(hpts[np.linalg.norm(hpts, axis=1) > r])
        return hausdorff(np.concatenate(orig), np.concatenate(new))

    def verify(self, grid: int = 9, tol: float = 1e-8) -> List[VerificationReport]:
        return [verify_lagrangian(p, grid, tol) for p in self.patches]

    def summary(self) -> dict:
        out = {
            "resolution": self.choice.name,
            "kappa": self.kappa,
            "kappa_model": self.kappa_model,
            "R1": self.R1,
            "R2": self.R2,
            "T": self.T,
        }
        p = self.end.geom.params
        if p.k <= p.n - 2:
            om = self.omega_sigma()
            a = self.alpha_signed()
            out.update(
                {
                    "omega_sigma": om,
                    "teardrop_area": 2.0 * self.epsilon**1.5,
                    "alpha": abs(a),
                    "alpha_sign": "+" if a > 0 else "-",
                    "slice_components": len(self.slice_curves()),
                    "slice_crossings": crossing_count(self.slice_curves()),
                }
            )
        return out


def _radii(end: EndModel, Phi: np.ndarray, kappa: float):
    slopes = np.diag(end.hessF(np.zeros((1, end.n)))[0])
    a_max = float(np.abs(slopes).max())
    norm = float(np.linalg.norm(Phi, 2))
    kappa_m = kappa / norm
    c = float(np.abs(Phi[0, 0]))
    R1 = 1.1 * c * kappa_m
    T = R1 / c
    R2 = 1.9 * kappa / np.sqrt(1.0 + 1.1 * a_max**2)
    return kappa_m, R1, R2, T


def _build(end: EndModel, sign: int, kappa: float, choice: ResolutionChoice, points: int) -> ResolvedEnd:
    H0 = end.hessF(np.zeros((1, end.n)))[0]
    if np.abs(H0 - np.diag(np.diag(H0))).max() > 1e-12 * np.abs(H0).max():
        raise ModelViolation("tangent planes at the double point do not split into factors")
    Phi = resolution_map(np.diag(H0), sign)
    kappa_m, R1, R2, T = _radii(end, Phi, kappa)
    tip = float(np.sqrt(end.f(np.zeros((1, end.n)))[0]))
    if 2 * kappa > 0.5 * tip or R2 > 0.5 * tip:
        raise ParameterError(
            f"kappa = {kappa:.4g} too large: B_2kappa must stay well inside the teardrop (tip at {tip:.4g})"
        )
    if R2 <= 1.15 * R1:
        raise ParameterError("gluing annulus is too thin for these slopes")
    curve = SurgeryCurve(kappa_m)
    return ResolvedEnd(end, choice, kappa, Phi, curve, R1, R2, T, points)


def resolve_double_point(end: EndModel, choice: ResolutionChoice, points: int = 512) -> ResolvedEnd:
    """Replace a neighbourhood of the double point of Lambda' by the 0-surgery model.

    Parameters
    ----------
    end : EndModel
        Lambda' (``end_model(geom, "Lambda'")``).
    choice : ResolutionChoice
        Resolution sign and either ``alpha`` or ``kappa``.
    points : int
        Samples per segment of the slice loops (and frame loops).

    Raises
    ------
    ParameterError
        If ``end`` is not Lambda', if kappa is too large for the gluing
        region, or if the requested alpha cannot be reached.
    """
    if end.which != "Lambda'":
        raise ParameterError("only Lambda' has a double point to resolve")
    if not isinstance(choice, ResolutionChoice):
        raise ParameterError("choice must be a ResolutionChoice")
    eps = end.geom.params.epsilon
    if choice.alpha is None:
        kappa = eps / 4.0 if choice.kappa is None else choice.kappa
        return _build(end, choice.sign, kappa, choice, points)
    if choice.alpha >= 2 * eps**1.5:
        raise ParameterError(f"alpha = {choice.alpha} must be below the teardrop area 2 eps^(3/2)")
    if end.geom.params.k > end.geom.params.n - 2:
        raise ParameterError("alpha is measured in the T*R_n slice, which needs k <= n-2")
    tip = float(np.sqrt(end.f(np.zeros((1, end.n)))[0]))
    hi = 0.25 * tip * (1 - 1e-9)
    lo = hi * 1e-4

    def measured(kap):
        return abs(_build(end, choice.sign, kap, choice, points).alpha_signed())

    if measured(hi) < choice.alpha:
        raise ParameterError(f"alpha = {choice.alpha} exceeds the largest adjustment {measured(hi):.4g}")
    if measured(lo) > choice.alpha:
        raise ParameterError(f"alpha = {choice.alpha} is below the resolution of the slice quadrature")
    for _ in range(60):
        mid = np.sqrt(lo * hi)
        if measured(mid) < choice.alpha:
            lo = mid
        else:
            hi = mid
        if hi / lo < 1 + 1e-6:
            break
    return _build(end, choice.sign, np.sqrt(lo * hi), choice, points)


def maslov_of_resolution(params: HandleParams, choice: ResolutionChoice, points: int = 512) -> int:
    """Maslov index of the positive generator sigma after resolving Lambda'.

    The loop ``l_-`` (for ``Phi_-``) is the right lobe, counterclockwise.
    The loop ``l_+`` (for ``Phi_+``) runs once around both lobes and
    represents twice the generator, so its winding is halved.

    Raises
    ------
    ParameterError
        If ``k = n - 1`` or the winding of ``l_+`` is odd.
    RefinementNeeded
        If the frame loop is too coarse.
    """
    if params.k > params.n - 2:
        raise ParameterError("the Maslov computation needs 0 <= k <= n-2")
    geom = build_handle(params)
    res = resolve_double_point(end_model(geom, "Lambda'"), choice, points)
    w = res.loop_winding()
    k = int(round(w))
    if abs(w - k) > 1e-6:
        raise ModelViolation(f"loop winding {w} is not an integer")
    if choice.sign > 0:
        if k % 2:
            raise ModelViolation(f"winding of l+ is odd ({k}); it must be twice the generator")
        return k // 2
    return k


def loop_winding_of_resolution(params: HandleParams, choice: ResolutionChoice, points: int = 512) -> int:
    """Raw integer winding of the loop l_-+ (not halved)."""
    geom = build_handle(params)
    res = resolve_double_point(end_model(geom, "Lambda'"), choice, points)
    return int(round(res.loop_winding()))


# ---------------------------------------------------------------------------
# Desingularization model W and its curve-level resolution
# ---------------------------------------------------------------------------


@dataclass
class EtaPair:
    """The curves ``eta_+-(x) = (x, +-y(x))`` in T*R.

    Parameters
    ----------
    y_profile : callable
        ``y(x, nu=0)`` with ``y > 0`` for x < 0 and ``y = 0`` for x >= 0.
    x_range : (float, float)
        Sampled interval.
    samples : int
        Points per curve.
    """

    y_profile: Callable = eta_profile
    x_range: Tuple[float, float] = (-1.0, 1.0)
    samples: int = 4001
    curves: Tuple[PlanarCurve, PlanarCurve] = field(init=False, repr=False)

    def __post_init__(self):
        lo, hi = self.x_range
        if not lo < 0 < hi:
            raise ParameterError("x_range must contain 0 in its interior")
        x = self.xs
        y = np.asarray(self.y_profile(x), dtype=float)
        if np.any(y[x >= 0] != 0) or np.any(y[x < 0] < 0):
            raise ParameterError("y must vanish on x >= 0 and be >= 0")
        self.curves = (
            PlanarCurve(np.stack([x, y], axis=1), label="eta+"),
            PlanarCurve(np.stack([x, -y], axis=1), label="eta-"),
        )

    @property
    def xs(self) -> np.ndarray:
        return np.linspace(self.x_range[0], self.x_range[1], self.samples)

    def y(self, x, nu: int = 0):
        return self.y_profile(x, nu=nu) if nu else self.y_profile(x)

    def flat_width(self, tol: float) -> float:
        """Largest w with ``2 y(-w) <= tol``: below this the two curves agree to tol."""
        lo, hi = 0.0, -self.x_range[0]
        if 2 * float(self.y(-hi)) <= tol:
            return hi
        for _ in range(200):
            mid = 0.5 * (lo + hi)
            if 2 * float(self.y(-mid)) <= tol:
                lo = mid
            else:
                hi = mid
        return lo


def _w_patch(eta: EtaPair, frame: LagrangianFrame, sign: int, box: float) -> LagrangianPatch:
    n = frame.n
    X, Y = frame.X, frame.Y
    lo = np.concatenate([[eta.x_range[0]], np.full(n, -box)])
    hi = np.concatenate([[eta.x_range[1]], np.full(n, box)])

    def func(u):
        x, v = u[:, 0], u[:, 1:]
        return np.concatenate([x[:, None], v @ X.T, sign * eta.y(x)[:, None], v @ Y.T], axis=1)

    def jac(u):
        m = len(u)
        J = np.zeros((m, 2 * (n + 1), n + 1))
        J[:, 0, 0] = 1.0
        J[:, n + 1, 0] = sign * eta.y(u[:, 0], 1)
        J[:, 1 : n + 1, 1:] = X
        J[:, n + 2 :, 1:] = Y
        return J

    return LagrangianPatch(lo, hi, func, n + 1, jac=jac, label=f"W{'+' if sign > 0 else '-'}")


def splice_frame_map(minus: LagrangianFrame, plus: LagrangianFrame) -> np.ndarray:
    """Linear symplectic map sending ``R^n x 0`` to lambda_- and ``0 x R^n`` to lambda_+."""
    n = minus.n
    J = symplectic_matrix(n)
    A, B = minus.matrix, plus.matrix
    M = A.T @ J @ B
    return np.hstack([A, B @ np.linalg.inv(M)])


@dataclass
class DesingularizationReport:
    """Result of :func:`desingularization_model`."""

    double_points: List[DoublePoint]
    locus_offset: float
    flat_width: float
    window: float
    spliced: PlanarCurve
    crossings: int
    hausdorff_outside: float
    fibre_crossings: int
    fibre_lagrangian: VerificationReport
    w_lagrangian: List[VerificationReport]

    @property
    def passed(self) -> bool:
        return (
            self.locus_offset <= self.flat_width
            and self.crossings == 0
            and self.hausdorff_outside < 1e-9
            and self.fibre_crossings == 0
            and self.fibre_lagrangian.passed
            and all(r.passed for r in self.w_lagrangian)
        )

    def to_dict(self) -> dict:
        xs = [float(dp.point.x[0]) for dp in self.double_points]
        return {
            "double_points": len(self.double_points),
            "double_point_x_range": [min(xs), max(xs)] if xs else None,
            "locus_offset": self.locus_offset,
            "flat_width": self.flat_width,
            "window": self.window,
            "crossings": self.crossings,
            "hausdorff_outside": self.hausdorff_outside,
            "fibre_crossings": self.fibre_crossings,
            "fibre_lagrangian": self.fibre_lagrangian.to_dict(),
            "w_lagrangian": [r.to_dict() for r in self.w_lagrangian],
            "passed": self.passed,
        }


def desingularization_model(
    eta: EtaPair,
    frames: Sequence[LagrangianFrame],
    curve: SurgeryCurve,
    *,
    tol: float = 1e-10,
    seed_grid: int = 9,
    box: float = 1.0,
    window: Optional[float] = None,
) -> DesingularizationReport:
    """Build W, check its singular locus and resolve it at curve level.

    ``W = eta_+ x lambda_+  u  eta_- x lambda_-`` is built as two patches in
    T*R x T*R^n.  Its double points are located by grid scan and must lie on
    ``{x >= 0, v = 0}``.  A refined point at ``-flat_width <= x < 0`` is
    accepted: there ``2 y(x) <= tol``, so the two curves coincide to the
    scan tolerance.

    The resolved slice replaces the half-line of double points by a cap.
    It follows ``eta_+`` up to ``x = -w``, turns around on the parabola
    ``x = -w + A (y_w^2 - y^2)`` and returns along ``eta_-``.  The value of
    A makes the joins C^1.  The fibre over ``x >> 0`` is ``lambda_- #
    lambda_+``, the image of h_gamma under a map sending the coordinate
    planes to ``lambda_-+``.

    Parameters
    ----------
    eta : EtaPair
    frames : (lambda_-, lambda_+)
        Transverse Lagrangian frames in T*R^n.
    curve : SurgeryCurve
        Surgery curve for the fibre; its kappa is the default window.
    tol : float
        Refinement tolerance of the double-point scan.
    window : float, optional
        Half-width w of the splice (default ``curve.kappa``).

    Raises
    ------
    ParameterError
        If the frames are not transverse.
    ModelViolation
        If a double point lies off the predicted locus or the spliced slice
        has a crossing.
    """
    minus, plus = frames
    if transversality_gap(minus, plus) <= 1e-9:
        raise ParameterError("lambda_- and lambda_+ are not transverse")
    n = minus.n
    wp, wm = _w_patch(eta, plus, +1, box), _w_patch(eta, minus, -1, box)
    w_reports = [verify_lagrangian(p, 7, 1e-8) for p in (wp, wm)]
    dps = find_double_points(wp, wm, seed_grid, tol)
    flat = eta.flat_width(tol)
    offset = 0.0
    for dp in dps:
        x = float(dp.point.x[0])
        off = max(max(0.0, -x), float(np.linalg.norm(dp.point.x[1:])), float(np.linalg.norm(dp.point.y[1:])))
        offset = max(offset, off)
    if offset > flat:
        raise ModelViolation(f"W double point off the locus {{x >= 0, v = 0}} by {offset:.3e}")

    w = curve.kappa if window is None else float(window)
    xs = eta.xs
    left = xs[xs <= -w]
    if left[-1] != -w:
        left = np.append(left, -w)
    yw = float(eta.y(-w))
    dy = float(eta.y(-w, 1))
    if yw <= 0 or dy >= 0:
        raise ParameterError("eta profile must be positive and decreasing at the splice point")
    A = -1.0 / (2.0 * yw * dy)
    ys = np.linspace(yw, -yw, 801)
    cap = np.stack([-w + A * (yw**2 - ys**2), ys], axis=1)
    up = np.stack([left, eta.y(left)], axis=1)
    down = np.stack([left[::-1], -eta.y(left[::-1])], axis=1)
    spliced = PlanarCurve(np.vstack([up, cap[1:-1], down]), label="W# slice")
    crossings = crossing_count(spliced)
    if crossings:
        raise ModelViolation(f"spliced slice has {crossings} crossings")
    outside = spliced.points[spliced.points[:, 0] <= -w]
    ref = np.vstack([eta.curves[0].points, eta.curves[1].points])
    ref = ref[ref[:, 0] <= -w]
    # Both clouds sample eta on x <= -w, including the exact endpoints at -w.
    ref = np.vstack([ref, [[-w, yw], [-w, -yw]]])
    h_out = hausdorff(outside, ref)

    Phi = splice_frame_map(minus, plus)
    fibre = _handle_patch(curve, n, Phi, 2 * curve.kappa, "lambda-#lambda+") if n >= 2 else None
    if fibre is not None:
        fibre_report = verify_lagrangian(fibre, 9, 1e-8)
    else:
        fibre_report = VerificationReport("lambda-#lambda+", True, 0.0, 1e-8, 0)
    # Slice of the fibre through the last basis direction, in the
    # transported symplectic basis (Phi e_n, Phi f_n).
    t = np.linspace(-2 * curve.kappa, 2 * curve.kappa, 801)
    g = curve.point(t)
    basis = np.stack([Phi[:, n - 1], Phi[:, 2 * n - 1]], axis=1)
    fibre_curves = []
    for s in (+1, -1):
        amb = s * (g[:, :1] * Phi[:, n - 1] + g[:, 1:] * Phi[:, 2 * n - 1])
        coords = np.linalg.lstsq(basis, amb.T, rcond=None)[0].T
        fibre_curves.append(PlanarCurve(coords, label=f"gamma{'+' if s > 0 else '-'}"))
    return DesingularizationReport(
        double_points=dps,
        locus_offset=offset,
        flat_width=flat,
        window=w,
        spliced=spliced,
        crossings=crossings,
        hausdorff_outside=h_out,
        fibre_crossings=crossing_count(fibre_curves),
        fibre_lagrangian=fibre_report,
        w_lagrangian=w_reports,
    )


def lambda_prime_slice(end: EndModel, points: int = 1024) -> List[PlanarCurve]:
    """Figure-eight slice of Lambda' with T*R_n as its two lobes."""
    from .handle import teardrop_curve

    right = teardrop_curve(end.geom, 2 * points + 1)
    left = PlanarCurve(-right.points, closed=True, label="teardrop (left)")
    return [right, left]
