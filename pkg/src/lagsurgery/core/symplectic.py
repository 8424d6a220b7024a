"""Linear symplectic algebra and numerical Lagrangian verification.

Points of the cotangent bundle T*R^N are stored as flat vectors
``(x_1, ..., x_N, y_1, ..., y_N)``.  The symplectic form is always the
standard one, ``omega = sum_i dx_i ^ dy_i``.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, Iterator, Optional, Sequence

import numpy as np

from ..errors import DimensionError, ParameterError

ArrayMap = Callable[[np.ndarray], np.ndarray]


@dataclass(frozen=True, eq=False)
class PhasePoint:
    """A point of T*R^N given by its position ``x`` and momentum ``y``."""

    x: np.ndarray
    y: np.ndarray

    def __post_init__(self):
        x = np.atleast_1d(np.asarray(self.x, dtype=float))
        y = np.atleast_1d(np.asarray(self.y, dtype=float))
        if x.ndim != 1 or x.shape != y.shape or x.size < 1:
            raise DimensionError(
                f"position and momentum must be equal-length vectors, got {x.shape} and {y.shape}"
            )
        object.__setattr__(self, "x", x)
        object.__setattr__(self, "y", y)

    def __eq__(self, other) -> bool:
        if not isinstance(other, PhasePoint):
            return NotImplemented
        return bool(np.array_equal(self.x, other.x) and np.array_equal(self.y, other.y))

    __hash__ = None

    @property
    def N(self) -> int:
        return self.x.size

    def as_vector(self) -> np.ndarray:
        return np.concatenate([self.x, self.y])

    @classmethod
    def from_vector(cls, v) -> "PhasePoint":
        v = np.asarray(v, dtype=float)
        if v.ndim != 1 or v.size % 2:
            raise DimensionError(f"phase vector must have even length, got shape {v.shape}")
        half = v.size // 2
        return cls(v[:half], v[half:])

    def to_dict(self) -> dict:
        return {"x": [float(t) for t in self.x], "y": [float(t) for t in self.y]}


@dataclass(frozen=True)
class SymplecticForm:
    """The standard symplectic form on T*R^N."""

    N: int

    def __post_init__(self):
        if int(self.N) < 1:
            raise DimensionError("N must be at least 1")

    def __call__(self, u, v):
        return omega_eval(self, u, v)


def _as_tangent(u) -> np.ndarray:
    if isinstance(u, PhasePoint):
        return u.as_vector()
    return np.asarray(u, dtype=float)


def omega_eval(form: SymplecticForm, u, v):
    """Evaluate ``omega(u, v) = sum_i (u.x_i v.y_i - u.y_i v.x_i)``.

    Parameters
    ----------
    form : SymplecticForm
        The form on T*R^N.
    u, v : array_like or PhasePoint
        Tangent vectors of length 2N.  Leading batch dimensions are allowed
        and broadcast against each other.

    Returns
    -------
    float or numpy.ndarray
        The pairing, one value per batch entry.
    """
    a = _as_tangent(u)
    b = _as_tangent(v)
    n2 = 2 * form.N
    if a.shape[-1] != n2 or b.shape[-1] != n2:
        raise DimensionError(
            f"tangent vectors must have length {n2}, got {a.shape[-1]} and {b.shape[-1]}"
        )
    N = form.N
    val = np.sum(a[..., :N] * b[..., N:] - a[..., N:] * b[..., :N], axis=-1)
    if np.ndim(val) == 0:
        return float(val)
    return val


def symplectic_matrix(N: int) -> np.ndarray:
    """Matrix ``J0`` with ``omega(u, v) = u @ J0 @ v`` in (x, y) coordinates."""
    eye = np.eye(N)
    zero = np.zeros((N, N))
    return np.block([[zero, eye], [-eye, zero]])


@dataclass(frozen=True)
class LagrangianPatch:
    """A parametrized piece of an immersed submanifold of T*R^N.

    Parameters
    ----------
    lower, upper : array_like
        Corners of the parameter box (length d).
    func : callable
        Vectorized map ``(m, d) -> (m, 2N)``.
    N : int
        Half the ambient dimension.
    jac : callable, optional
        Vectorized analytic Jacobian ``(m, d) -> (m, 2N, d)``.  When absent a
        central finite difference with step ``fd_step * (upper - lower)`` is
        used.
    mask : callable, optional
        Vectorized predicate ``(m, d) -> (m,)`` marking the valid part of the
        box.  Used for domains such as ``{f >= f_min}`` that are not boxes.
    periods : sequence, optional
        Per-axis period (or None) used when measuring parameter distances.
    equivalences : sequence of callables, optional
        Maps ``(m, d) -> (m, d)`` sending a parameter to another parameter
        with the same image by construction (for example a double cover).
    """

    lower: np.ndarray
    upper: np.ndarray
    func: ArrayMap
    N: int
    jac: Optional[ArrayMap] = None
    fd_step: float = 1e-5
    label: str = ""
    mask: Optional[Callable[[np.ndarray], np.ndarray]] = None
    periods: Optional[Sequence[Optional[float]]] = None
    equivalences: tuple = field(default_factory=tuple)

    def __post_init__(self):
        lo = np.atleast_1d(np.asarray(self.lower, dtype=float))
        hi = np.atleast_1d(np.asarray(self.upper, dtype=float))
        if lo.shape != hi.shape or lo.ndim != 1:
            raise DimensionError("domain corners must be vectors of equal length")
        if np.any(hi < lo):
            raise ParameterError("domain box has upper < lower")
        if lo.size > self.N:
            raise DimensionError(f"patch dimension {lo.size} exceeds N = {self.N}")
        object.__setattr__(self, "lower", lo)
        object.__setattr__(self, "upper", hi)

    @property
    def dim(self) -> int:
        return self.lower.size

    def evaluate(self, u) -> np.ndarray:
        u = np.atleast_2d(np.asarray(u, dtype=float))
        return np.asarray(self.func(u), dtype=float)

    def point(self, u) -> PhasePoint:
        return PhasePoint.from_vector(self.evaluate(np.asarray(u, dtype=float)[None, :])[0])

    def jacobian(self, u) -> np.ndarray:
        u = np.atleast_2d(np.asarray(u, dtype=float))
        if self.jac is not None:
            return np.asarray(self.jac(u), dtype=float)
        return finite_difference_jacobian(self.func, u, self.fd_step * (self.upper - self.lower))

    def valid(self, u) -> np.ndarray:
        u = np.atleast_2d(np.asarray(u, dtype=float))
        inside = np.all((u >= self.lower - 1e-12) & (u <= self.upper + 1e-12), axis=1)
        if self.mask is not None:
            inside &= np.asarray(self.mask(u), dtype=bool)
        return inside

    def param_distance(self, u, v) -> np.ndarray:
        """Distance between parameter arrays, honouring periods and equivalences."""
        u = np.atleast_2d(np.asarray(u, dtype=float))
        v = np.atleast_2d(np.asarray(v, dtype=float))
        best = self._raw_distance(u, v)
        for eq in self.equivalences:
            best = np.minimum(best, self._raw_distance(np.asarray(eq(u), dtype=float), v))
        return best

    def _raw_distance(self, u, v):
        diff = np.abs(u - v)
        if self.periods is not None:
            for i, p in enumerate(self.periods):
                if p:
                    d = np.mod(diff[:, i], p)
                    diff[:, i] = np.minimum(d, p - d)
        return np.linalg.norm(diff, axis=1)

    def iter_grid(self, resolution, chunk: int = 200_000) -> Iterator[np.ndarray]:
        """Yield chunks of the full tensor grid (endpoints included), masked."""
        res = _resolution_tuple(resolution, self.dim)
        axes = [np.linspace(lo, hi, r) for lo, hi, r in zip(self.lower, self.upper, res)]
        total = int(np.prod(res))
        for start in range(0, total, chunk):
            idx = np.unravel_index(np.arange(start, min(start + chunk, total)), res)
            pts = np.stack([ax[i] for ax, i in zip(axes, idx)], axis=1)
            if self.mask is not None:
                pts = pts[np.asarray(self.mask(pts), dtype=bool)]
            if len(pts):
                yield pts

    def grid(self, resolution) -> np.ndarray:
        chunks = list(self.iter_grid(resolution))
        if not chunks:
            return np.zeros((0, self.dim))
        return np.concatenate(chunks, axis=0)


def _resolution_tuple(resolution, d: int) -> tuple:
    if np.isscalar(resolution):
        res = (int(resolution),) * d
    else:
        res = tuple(int(r) for r in resolution)
    if len(res) != d or min(res) < 1:
        raise ParameterError(f"grid resolution {resolution!r} does not fit a {d}-dimensional box")
    return res


def finite_difference_jacobian(func: ArrayMap, u: np.ndarray, steps) -> np.ndarray:
    """Central-difference Jacobian of a vectorized map, shape ``(m, out, d)``."""
    u = np.atleast_2d(np.asarray(u, dtype=float))
    steps = np.broadcast_to(np.asarray(steps, dtype=float), (u.shape[1],))
    cols = []
    for i in range(u.shape[1]):
        h = steps[i] if steps[i] > 0 else 1e-6
        e = np.zeros(u.shape[1])
        e[i] = h
        cols.append((np.asarray(func(u + e)) - np.asarray(func(u - e))) / (2 * h))
    return np.stack(cols, axis=-1)


@dataclass
class VerificationReport:
    """Outcome of a numerical verification over a sample set."""

    name: str
    passed: bool
    max_residual: float
    tol: float
    samples: int
    worst_point: Optional[list] = None
    immersion_failures: int = 0
    worst_immersion_point: Optional[list] = None
    min_rank_ratio: Optional[float] = None
    details: dict = field(default_factory=dict)

    @property
    def immersion_ok(self) -> bool:
        return self.immersion_failures == 0

    def to_dict(self) -> dict:
        return {
            "name": self.name,
            "passed": bool(self.passed),
            "max_residual": float(self.max_residual),
            "tol": float(self.tol),
            "samples": int(self.samples),
            "worst_point": self.worst_point,
            "immersion_failures": int(self.immersion_failures),
            "worst_immersion_point": self.worst_immersion_point,
            "min_rank_ratio": None if self.min_rank_ratio is None else float(self.min_rank_ratio),
            "details": self.details,
        }


def verify_lagrangian(
    patch: LagrangianPatch,
    grid,
    tol: float = 1e-8,
    rank_tol: float = 1e-9,
    points: Optional[np.ndarray] = None,
) -> VerificationReport:
    """Check that ``omega`` vanishes on the tangent spaces of a patch.

    Parameters
    ----------
    patch : LagrangianPatch
        The immersion to test (dimension d <= N; d < N checks isotropy).
    grid : int or sequence of int
        Samples per axis of the parameter box.
    tol : float
        Pass threshold for ``max |omega(d_i psi, d_j psi)|`` over i < j.
    rank_tol : float
        A sample whose Jacobian has ``sigma_min / sigma_max < rank_tol`` is an
        immersion failure.  These are counted separately from the Lagrangian
        residual and make the report fail.
    points : ndarray, optional
        Explicit sample parameters replacing the grid.

    Returns
    -------
    VerificationReport
    """
    if tol <= 0:
        raise ParameterError("tol must be positive")
    N, d = patch.N, patch.dim
    worst, worst_pt, count = 0.0, None, 0
    bad_rank, bad_pt, min_ratio = 0, None, np.inf
    iu = np.triu_indices(d, 1)
    chunks = [points] if points is not None else patch.iter_grid(grid)
    for pts in chunks:
        J = patch.jacobian(pts)
        X, Y = J[:, :N, :], J[:, N:, :]
        count += len(pts)
        if d > 1:
            Om = np.einsum("mki,mkj->mij", X, Y) - np.einsum("mki,mkj->mij", Y, X)
            res = np.abs(Om[:, iu[0], iu[1]]).max(axis=1)
            res = np.where(np.isfinite(res), res, np.inf)
            i = int(np.argmax(res))
            if res[i] > worst or worst_pt is None:
                worst, worst_pt = float(res[i]), pts[i].tolist()
        gram = np.einsum("mki,mkj->mij", J, J)
        ev = np.linalg.eigvalsh(gram)
        with np.errstate(divide="ignore", invalid="ignore"):
            ratio = np.sqrt(np.clip(ev[:, 0], 0, None) / ev[:, -1])
        ratio = np.where(np.isfinite(ratio), ratio, 0.0)
        fails = ratio < rank_tol
        bad_rank += int(fails.sum())
        j = int(np.argmin(ratio))
        if ratio[j] < min_ratio:
            min_ratio = float(ratio[j])
            if fails[j]:
                bad_pt = pts[j].tolist()
    if count == 0:
        raise ParameterError(f"no valid samples for patch {patch.label!r}")
    return VerificationReport(
        name=f"lagrangian:{patch.label}",
        passed=bool(worst < tol and bad_rank == 0),
        max_residual=worst,
        tol=tol,
        samples=count,
        worst_point=worst_pt,
        immersion_failures=bad_rank,
        worst_immersion_point=bad_pt,
        min_rank_ratio=min_ratio,
    )


def graph_patch(
    grad: ArrayMap,
    hess: Optional[ArrayMap],
    lower,
    upper,
    sign: float = 1.0,
    label: str = "graph",
    mask=None,
) -> LagrangianPatch:
    """Patch ``x -> (x, sign * grad(x))`` for a function with gradient ``grad``."""
    lower = np.atleast_1d(np.asarray(lower, dtype=float))
    n = lower.size

    def func(u):
        return np.concatenate([u, sign * grad(u)], axis=1)

    jac = None
    if hess is not None:

        def jac(u):
            H = hess(u)
            eye = np.broadcast_to(np.eye(n), H.shape)
            return np.concatenate([eye, sign * H], axis=1)

    return LagrangianPatch(lower, upper, func, n, jac=jac, label=label, mask=mask)
