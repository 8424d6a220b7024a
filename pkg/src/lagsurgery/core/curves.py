"""Planar polylines: signed area, winding numbers, crossings, distances."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Iterable, List, Sequence

import numpy as np
from scipy.spatial import cKDTree

from ..errors import DimensionError, ParameterError


@dataclass(frozen=True)
class PlanarCurve:
    """Polyline in one factor T*R, coordinates ``(x, y)``.

    A closed curve repeats its first point at the end.
    """

    points: np.ndarray
    closed: bool = False
    label: str = ""

    def __post_init__(self):
        p = np.asarray(self.points, dtype=float)
        if p.ndim != 2 or p.shape[1] != 2 or len(p) < 2:
            raise DimensionError(f"expected an (m, 2) array with m >= 2, got {p.shape}")
        if self.closed and np.linalg.norm(p[0] - p[-1]) > 1e-12 * max(1.0, np.abs(p).max()):
            raise ParameterError("closed curve must repeat its first point at the end")
        object.__setattr__(self, "points", p)

    @classmethod
    def closed_from(cls, pts, label: str = "") -> "PlanarCurve":
        """Close an open point list by appending its first point."""
        p = np.asarray(pts, dtype=float)
        return cls(np.vstack([p, p[:1]]), closed=True, label=label)

    def reversed(self) -> "PlanarCurve":
        return PlanarCurve(self.points[::-1].copy(), self.closed, self.label)

    @property
    def length(self) -> float:
        return float(np.linalg.norm(np.diff(self.points, axis=0), axis=1).sum())


def enclosed_area(curve: PlanarCurve) -> float:
    """Signed shoelace area, counterclockwise positive."""
    if not curve.closed:
        raise ParameterError("enclosed_area needs a closed curve")
    x, y = curve.points[:-1, 0], curve.points[:-1, 1]
    x1, y1 = curve.points[1:, 0], curve.points[1:, 1]
    return float(0.5 * np.sum(x * y1 - x1 * y))


def winding_number(curve: PlanarCurve, center=(0.0, 0.0)) -> int:
    """Winding number of a closed curve around ``center`` by angle summation."""
    if not curve.closed:
        raise ParameterError("winding number needs a closed curve")
    p = curve.points - np.asarray(center, dtype=float)
    if np.min(np.linalg.norm(p, axis=1)) == 0.0:
        raise ParameterError("curve passes through the centre")
    ang = np.arctan2(p[:, 1], p[:, 0])
    d = np.diff(ang)
    d = (d + np.pi) % (2 * np.pi) - np.pi
    return int(round(d.sum() / (2 * np.pi)))


def _segments(curves: Sequence[PlanarCurve]):
    segs, owner, index = [], [], []
    for c_id, c in enumerate(curves):
        p = c.points
        segs.append(np.stack([p[:-1], p[1:]], axis=1))
        owner.append(np.full(len(p) - 1, c_id))
        index.append(np.arange(len(p) - 1))
    return np.concatenate(segs), np.concatenate(owner), np.concatenate(index)


def crossing_points(curves: Sequence[PlanarCurve]) -> np.ndarray:
    """Proper crossings between the segments of a family of polylines.

    Segments adjacent along the same curve (including the wrap-around pair of
    a closed curve) are not compared.  Only proper crossings (strictly
    interior to both segments) are counted.  Crossings that a polyline makes
    with itself at a shared vertex are therefore not reported.

    Candidate pairs come from a KD-tree on segment midpoints: two segments
    can only meet if their midpoints are closer than the longest segment.

    Returns
    -------
    numpy.ndarray
        ``(c, 2)`` array of crossing locations.
    """
    if isinstance(curves, PlanarCurve):
        curves = [curves]
    S, owner, idx = _segments(curves)
    nseg = np.array([len(c.points) - 1 for c in curves])
    closed = np.array([c.closed for c in curves])
    P, Q = S[:, 0], S[:, 1]
    D = Q - P
    lengths = np.linalg.norm(D, axis=1)
    reach = float(lengths.max()) * (1 + 1e-9)
    if reach == 0.0:
        return np.zeros((0, 2))
    pairs = cKDTree(0.5 * (P + Q)).query_pairs(reach, output_type="ndarray")
    if len(pairs) == 0:
        return np.zeros((0, 2))
    ii, jj = pairs[:, 0], pairs[:, 1]
    same = owner[ii] == owner[jj]
    gap = np.abs(idx[ii] - idx[jj])
    adjacent = same & (gap <= 1)
    wrap = same & closed[owner[ii]] & (gap == nseg[owner[ii]] - 1)
    keep = ~(adjacent | wrap)
    ii, jj = ii[keep], jj[keep]
    d1, d2 = D[ii], D[jj]
    r = P[jj] - P[ii]
    den = d1[:, 0] * d2[:, 1] - d1[:, 1] * d2[:, 0]
    ok = np.abs(den) > 1e-300
    with np.errstate(divide="ignore", invalid="ignore"):
        t = (r[:, 0] * d2[:, 1] - r[:, 1] * d2[:, 0]) / den
        u = (r[:, 0] * d1[:, 1] - r[:, 1] * d1[:, 0]) / den
    eps = 1e-12
    hit = ok & (t > eps) & (t < 1 - eps) & (u > eps) & (u < 1 - eps)
    return P[ii[hit]] + t[hit, None] * d1[hit]


def crossing_count(curves) -> int:
    return int(len(crossing_points(curves)))


def hausdorff(a: np.ndarray, b: np.ndarray) -> float:
    """Symmetric Hausdorff distance between two point clouds.

    Exact nearest-neighbour distances come from KD-trees, which stay fast
    when the two clouds (nearly) coincide.
    """
    a = np.asarray(a, dtype=float)
    b = np.asarray(b, dtype=float)
    if len(a) == 0 and len(b) == 0:
        return 0.0
    if len(a) == 0 or len(b) == 0:
        return float("inf")
    ab = cKDTree(b).query(a, k=1)[0].max()
    ba = cKDTree(a).query(b, k=1)[0].max()
    return float(max(ab, ba))


def concat_paths(paths: Iterable[np.ndarray], closed: bool = True, label: str = "") -> PlanarCurve:
    """Join polyline pieces end to end, dropping duplicated junction points."""
    pieces: List[np.ndarray] = []
    for p in paths:
        p = np.asarray(p, dtype=float)
        if pieces and np.linalg.norm(pieces[-1][-1] - p[0]) < 1e-12:
            p = p[1:]
        pieces.append(p)
    pts = np.concatenate(pieces)
    if closed and np.linalg.norm(pts[0] - pts[-1]) > 1e-12:
        pts = np.vstack([pts, pts[:1]])
    elif closed:
        pts[-1] = pts[0]
    return PlanarCurve(pts, closed=closed, label=label)
