"""Lagrangian frames, transversality and the Maslov index of frame loops."""

from __future__ import annotations

from dataclasses import dataclass
from typing import List, Sequence

import numpy as np

from ..errors import DimensionError, ParameterError, RefinementNeeded


@dataclass(frozen=True)
class LagrangianFrame:
    """A Lagrangian plane in T*R^n spanned by the columns of ``[X; Y]``.

    Parameters
    ----------
    X, Y : array_like
        Real ``n x n`` matrices.
    check : bool
        Validate rank and the Lagrangian condition ``X^T Y - Y^T X = 0``.
    tol : float
        Relative tolerance for the validation.
    """

    X: np.ndarray
    Y: np.ndarray
    check: bool = True
    tol: float = 1e-8

    def __post_init__(self):
        X = np.atleast_2d(np.asarray(self.X, dtype=float))
        Y = np.atleast_2d(np.asarray(self.Y, dtype=float))
        if X.shape != Y.shape or X.shape[0] != X.shape[1]:
            raise DimensionError(f"frame blocks must be square and equal, got {X.shape}, {Y.shape}")
        object.__setattr__(self, "X", X)
        object.__setattr__(self, "Y", Y)
        if self.check:
            M = self.matrix
            s = np.linalg.svd(M, compute_uv=False)
            if s[-1] <= self.tol * max(s[0], 1e-300):
                raise ParameterError("frame columns are linearly dependent")
            # Lagrangian defect of the orthonormalized span.
            Q, _ = np.linalg.qr(M)
            n = X.shape[0]
            Xq, Yq = Q[:n], Q[n:]
            defect = np.abs(Xq.T @ Yq - Yq.T @ Xq).max()
            if defect > self.tol:
                raise ParameterError(f"frame is not Lagrangian (defect {defect:.3e})")

    @property
    def n(self) -> int:
        return self.X.shape[0]

    @property
    def matrix(self) -> np.ndarray:
        return np.vstack([self.X, self.Y])

    @classmethod
    def from_columns(cls, cols, **kw) -> "LagrangianFrame":
        """Build a frame from ``n`` column vectors of length ``2n``."""
        M = np.column_stack([np.asarray(c, dtype=float) for c in cols])
        n = M.shape[1]
        if M.shape[0] != 2 * n:
            raise DimensionError("need n vectors of length 2n")
        return cls(M[:n], M[n:], **kw)


def transversality_gap(a: LagrangianFrame, b: LagrangianFrame) -> float:
    """Smallest singular value of ``[[X_a, X_b], [Y_a, Y_b]]``.

    Positive exactly when the two planes are transverse.  The value depends
    on the chosen spanning columns, so compare it only between frames built
    the same way.
    """
    if a.n != b.n:
        raise DimensionError("frames have different dimensions")
    M = np.hstack([a.matrix, b.matrix])
    return float(np.linalg.svd(M, compute_uv=False)[-1])


@dataclass
class FrameLoop:
    """A closed discretized path of Lagrangian frames (first equals last)."""

    frames: List[LagrangianFrame]
    close_tol: float = 1e-8

    def __post_init__(self):
        if len(self.frames) < 2:
            raise ParameterError("a loop needs at least two frames")
        ns = {f.n for f in self.frames}
        if len(ns) != 1:
            raise DimensionError("frames in a loop must share the dimension n")
        if principal_gap(self.frames[0], self.frames[-1]) > self.close_tol:
            raise ParameterError("loop is not closed: first and last frames span different planes")

    @property
    def n(self) -> int:
        return self.frames[0].n

    def reversed(self) -> "FrameLoop":
        return FrameLoop(list(reversed(self.frames)), self.close_tol)


def principal_gap(a: LagrangianFrame, b: LagrangianFrame) -> float:
    """Largest principal angle between the two planes (radians)."""
    Qa, _ = np.linalg.qr(a.matrix)
    Qb, _ = np.linalg.qr(b.matrix)
    s = np.linalg.svd(Qa.T @ Qb, compute_uv=False)
    return float(np.arccos(np.clip(s.min(), -1.0, 1.0)))


def det_squared_phases(X, Y) -> np.ndarray:
    """Unit complex numbers ``det(U)^2`` for stacked frames ``[X; Y]``.

    ``U = Z (Z* Z)^(-1/2)`` with ``Z = X + iY`` is the unitary representing
    the plane.  Since ``det (Z* Z)^(1/2) = |det Z|`` this equals
    ``(det Z / |det Z|)^2``, so no matrix square root is needed.  The value
    depends only on the plane, not on the spanning columns.
    """
    X = np.asarray(X, dtype=float)
    Y = np.asarray(Y, dtype=float)
    Z = X + 1j * Y
    d = np.linalg.det(Z)
    scale = np.linalg.norm(Z.reshape(Z.shape[:-2] + (-1,)), axis=-1) ** Z.shape[-1]
    if np.any(np.abs(d) <= 1e-300 + 1e-14 * scale):
        raise ParameterError("degenerate frame: columns do not span a Lagrangian plane")
    u = d / np.abs(d)
    return u * u


def _det_squared_phase(frame: LagrangianFrame) -> complex:
    return complex(det_squared_phases(frame.X, frame.Y))


def plane_winding(X, Y, max_step: float = np.pi / 2) -> float:
    """Winding of ``det(U)^2`` along stacked frames ``X, Y`` of shape (m, n, n).

    Raises
    ------
    RefinementNeeded
        If two consecutive frames differ in phase by ``max_step`` or more.
    """
    phases = det_squared_phases(X, Y)
    steps = np.angle(phases[1:] / phases[:-1])
    big = np.abs(steps) >= max_step
    if np.any(big):
        i = int(np.argmax(big))
        raise RefinementNeeded(
            f"phase jump {steps[i]:.3f} rad between frames {i} and {i + 1}; refine the loop"
        )
    return float(steps.sum() / (2 * np.pi))


def maslov_winding(loop: FrameLoop, max_step: float = np.pi / 2) -> float:
    """Total continuous change of ``arg det(U)^2`` divided by 2 pi.

    Raises
    ------
    RefinementNeeded
        If two consecutive frames differ in phase by ``max_step`` or more.
    """
    X = np.stack([f.X for f in loop.frames])
    Y = np.stack([f.Y for f in loop.frames])
    return plane_winding(X, Y, max_step)


def maslov_index(loop: FrameLoop) -> int:
    """Maslov index of a closed frame loop.

    The convention is fixed so that the half turn
    ``theta -> span(cos(theta) dx + sin(theta) dy)``, ``theta in [0, pi]``,
    in T*R has index +1.
    """
    w = maslov_winding(loop)
    k = int(round(w))
    if abs(w - k) > 1e-6:
        raise RefinementNeeded(f"winding {w} is not an integer; loop not closed or too coarse")
    return k


def line_frame(theta: float) -> LagrangianFrame:
    """Frame of the line at angle ``theta`` in T*R."""
    return LagrangianFrame([[np.cos(theta)]], [[np.sin(theta)]])


def direct_sum(frames: Sequence[LagrangianFrame]) -> LagrangianFrame:
    """Block-diagonal direct sum of frames (factors in coordinate order)."""
    n = sum(f.n for f in frames)
    X = np.zeros((n, n))
    Y = np.zeros((n, n))
    i = 0
    for f in frames:
        X[i : i + f.n, i : i + f.n] = f.X
        Y[i : i + f.n, i : i + f.n] = f.Y
        i += f.n
    return LagrangianFrame(X, Y, check=False)
