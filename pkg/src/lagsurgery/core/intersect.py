"""Double points between (or within) parametrized patches.

The search has three stages.  Both patches are sampled on a seed grid and
image points are paired by nearest-neighbour queries.  Promising pairs are
then refined by batched bounded least squares on ``psi_a(u) - psi_b(v)``.  Finally,
results closer than ``10 * tol`` in the ambient space are merged.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import List, Optional

import numpy as np
from scipy.spatial import cKDTree

from ..errors import DimensionError
from .symplectic import LagrangianPatch, PhasePoint


@dataclass
class DoublePoint:
    """A point hit by two parameter values.

    Iterating yields ``(param_a, param_b, point)`` so the object unpacks like
    the plain triple.
    """

    param_a: np.ndarray
    param_b: np.ndarray
    point: PhasePoint
    residual: float
    refined: bool = True

    def __iter__(self):
        yield self.param_a
        yield self.param_b
        yield self.point


@dataclass
class DoublePointSearch:
    """Full search record: accepted points plus bookkeeping counts."""

    points: List[DoublePoint]
    candidates: int
    refined_runs: int
    left_domain: int

    @property
    def refined(self) -> List[DoublePoint]:
        return [p for p in self.points if p.refined]

    @property
    def unrefined(self) -> List[DoublePoint]:
        return [p for p in self.points if not p.refined]


def _cell_radius(patch: LagrangianPatch, seeds: np.ndarray, res) -> np.ndarray:
    """Half the image diameter of a grid cell around each seed."""
    res = np.broadcast_to(np.asarray(res), (patch.dim,))
    h = (patch.upper - patch.lower) / np.maximum(res - 1, 1)
    J = patch.jacobian(seeds)
    col = np.linalg.norm(J, axis=1)  # (m, d)
    r = 0.5 * (col * h).sum(axis=1)
    return np.where(np.isfinite(r), r, np.inf)


def _candidate_pairs(patch_a, patch_b, ua, ub, pa, pb, ra, rb, same, k, sep, slack, approx=0.0):
    """Candidate seed pairs as arrays ``(i, j, score)``, unique per pair.

    Queries run in both directions so the candidate set does not depend on
    argument order.  ``approx`` is passed to ``cKDTree.query`` as ``eps``;
    approximate neighbours are enough for seeding because every candidate
    is refined afterwards.
    """
    I, Jx, S = [], [], []

    def scan(p_from, p_to, r_from, r_to, swap):
        tree = cKDTree(p_to)
        kk = min(k, len(p_to))
        dist, idx = tree.query(p_from, k=kk, eps=approx)
        dist = dist.reshape(len(p_from), kk)
        idx = idx.reshape(len(p_from), kk)
        i = np.repeat(np.arange(len(p_from)), kk)
        j = idx.ravel()
        dd = dist.ravel()
        scale = r_from[i] + r_to[j]
        ok = dd < slack * scale
        ia, jb = (j, i) if swap else (i, j)
        if same:
            ok &= patch_a.param_distance(ua[ia], ub[jb]) > sep
            ia, jb = np.minimum(ia, jb), np.maximum(ia, jb)
        I.append(ia[ok])
        Jx.append(jb[ok])
        S.append(dd[ok] / np.maximum(scale[ok], 1e-300))

    scan(pa, pb, ra, rb, False)
    scan(pb, pa, rb, ra, True)
    i = np.concatenate(I)
    j = np.concatenate(Jx)
    sc = np.concatenate(S)
    if len(i) == 0:
        return i, j, sc
    order = np.lexsort((j, i, sc))
    i, j, sc = i[order], j[order], sc[order]
    _, first = np.unique(np.stack([i, j], axis=1), axis=0, return_index=True)
    first = np.sort(first)
    return i[first], j[first], sc[first]


def find_double_points(
    patch_a: LagrangianPatch,
    patch_b: LagrangianPatch,
    seed_grid=11,
    tol: float = 1e-9,
    *,
    k_neighbours: int = 4,
    slack: float = 1.0,
    max_refine: int = 5000,
    voxel: Optional[float] = None,
    separation: Optional[float] = None,
    unrefined_below: Optional[float] = None,
    approx: float = 0.5,
    return_search: bool = False,
):
    """Locate points where ``psi_a(u) = psi_b(v)``.

    Parameters
    ----------
    patch_a, patch_b : LagrangianPatch
        Patches in the same ambient space.  Passing the same object twice
        searches for self-intersections.  Parameter pairs closer than
        ``separation`` (measured with the patch's periods and equivalences)
        are then ignored.
    seed_grid : int or sequence
        Seed samples per axis.  Use odd counts so that box centres are seeds.
    tol : float
        Residual ``|psi_a(u) - psi_b(v)|`` accepted as a double point.
    slack : float
        Coarse acceptance factor relative to the local image cell size.
    max_refine : int
        Maximum number of least-squares refinements.  Candidates are
        deduplicated on an ambient voxel grid and ranked by coarse distance.
    voxel : float, optional
        Voxel size for deduplicating candidates (default: half the smallest
        seed spacing).
    unrefined_below : float, optional
        Stalled refinements with residual below this value are reported as
        unrefined points (default ``max(100 tol, 1e-6)``).  Larger stalled
        residuals are local minima of the distance, not double points.
    approx : float
        Relative slack for the approximate nearest-neighbour seeding query
        (0 gives exact neighbours).
    return_search : bool
        Return the full :class:`DoublePointSearch` instead of the list.

    Returns
    -------
    list of DoublePoint or DoublePointSearch
        Points whose refinement converged have ``refined=True``.  Points whose
        refinement stalled with a residual below ``unrefined_below`` are kept
        with ``refined=False``.  Refinements that leave either patch's valid
        domain are discarded and counted in ``left_domain``.
    """
    if patch_a.N != patch_b.N:
        raise DimensionError("patches live in different ambient dimensions")
    same = patch_a is patch_b
    ua = patch_a.grid(seed_grid)
    ub = ua if same else patch_b.grid(seed_grid)
    empty = DoublePointSearch([], 0, 0, 0)
    if len(ua) == 0 or len(ub) == 0:
        return empty if return_search else []
    pa, pb = patch_a.evaluate(ua), patch_b.evaluate(ub)
    ra = _cell_radius(patch_a, ua, seed_grid)
    rb = ra if same else _cell_radius(patch_b, ub, seed_grid)
    if separation is None:
        res = np.broadcast_to(np.asarray(seed_grid), (patch_a.dim,))
        h = (patch_a.upper - patch_a.lower) / np.maximum(res - 1, 1)
        separation = 2.0 * float(np.linalg.norm(h))
    pairs = _candidate_pairs(
        patch_a, patch_b, ua, ub, pa, pb, ra, rb, same, k_neighbours + (4 if same else 0), separation, slack, approx
    )
    ci, cj, _ = pairs
    if len(ci) == 0:
        return empty if return_search else []
    mids = 0.5 * (pa[ci] + pb[cj])
    if voxel is None:
        ha = (patch_a.upper - patch_a.lower) / np.maximum(np.broadcast_to(np.asarray(seed_grid), (patch_a.dim,)) - 1, 1)
        hb = (patch_b.upper - patch_b.lower) / np.maximum(np.broadcast_to(np.asarray(seed_grid), (patch_b.dim,)) - 1, 1)
        voxel = 0.5 * float(min(ha[ha > 0].min(initial=1.0), hb[hb > 0].min(initial=1.0)))
    cells = np.floor(mids / voxel).astype(np.int64)
    _, keep = np.unique(cells, axis=0, return_index=True)
    keep = np.sort(keep)[:max_refine]
    ia, ib = ci[keep], cj[keep]

    da = patch_a.dim
    lo = np.concatenate([patch_a.lower, patch_b.lower])
    hi = np.concatenate([patch_a.upper, patch_b.upper])
    span = np.where(hi > lo, hi - lo, 1.0)
    Z0 = np.concatenate([ua[ia], ub[ib]], axis=1)
    Z0 = np.clip(Z0, lo + 1e-10 * span, hi - 1e-10 * span)
    Z, R = refine_pairs(patch_a, patch_b, Z0, lo, hi, tol)

    found: List[DoublePoint] = []
    stall_cut = max(100.0 * tol, 1e-6) if unrefined_below is None else unrefined_below
    U, V = Z[:, :da], Z[:, da:]
    ok_dom = patch_a.valid(U) & patch_b.valid(V)
    left = int(np.sum(~ok_dom))
    if same:
        ok_dom &= patch_a.param_distance(U, V) >= 0.25 * separation
    pts = 0.5 * (patch_a.evaluate(U) + patch_b.evaluate(V))
    for z_i in np.nonzero(ok_dom)[0]:
        r = float(R[z_i])
        if r < stall_cut:
            found.append(DoublePoint(U[z_i], V[z_i], PhasePoint.from_vector(pts[z_i]), r, r < tol))

    merged = _merge(found, 10 * tol)
    search = DoublePointSearch(merged, len(ci), len(ia), left)
    return search if return_search else merged


def _merge(points: List[DoublePoint], radius: float) -> List[DoublePoint]:
    out: List[DoublePoint] = []
    for flag in (True, False):
        group = sorted((p for p in points if p.refined is flag), key=lambda p: p.residual)
        kept: List[DoublePoint] = []
        for p in group:
            v = p.point.as_vector()
            if any(np.linalg.norm(v - q.point.as_vector()) <= radius for q in kept):
                continue
            kept.append(p)
        out.extend(kept)
    return out


def refine_pairs(patch_a, patch_b, Z0, lo, hi, tol, max_iter: int = 200):
    """Batched box-constrained Levenberg-Marquardt on ``psi_a(u) - psi_b(v)``.

    All candidate pairs are iterated together, which avoids per-point call
    overhead.  Each pair keeps its own damping parameter, and steps are
    clipped to the parameter box.  A pair stops when its residual drops
    below ``1e-3 tol``, when its damping blows up, when accepted steps stop
    making relative progress, or when it has left a patch's valid domain
    (checked every 10 iterations).

    Returns
    -------
    Z : ndarray
        Final parameters ``(u, v)`` per pair.
    R : ndarray
        Final residual norms.
    """
    da = patch_a.dim
    Z = np.array(Z0, dtype=float)
    B, D = Z.shape

    def resid(z):
        return patch_a.evaluate(z[:, :da]) - patch_b.evaluate(z[:, da:])

    r = resid(Z)
    cost = np.einsum("ij,ij->i", r, r)
    lam = np.full(B, 1e-3)
    active = np.isfinite(cost)
    target = (1e-3 * tol) ** 2
    for it in range(max_iter):
        if it and it % 10 == 0:
            # Pairs that have wandered out of a patch's valid domain are
            # discarded by the caller anyway; stop iterating them.
            live = np.nonzero(active)[0]
            ok = patch_a.valid(Z[live, :da]) & patch_b.valid(Z[live, da:])
            active[live[~ok]] = False
        idx = np.nonzero(active & (cost > target))[0]
        if len(idx) == 0:
            break
        z = Z[idx]
        J = np.concatenate([patch_a.jacobian(z[:, :da]), -patch_b.jacobian(z[:, da:])], axis=2)
        A = np.einsum("bki,bkj->bij", J, J)
        g = np.einsum("bki,bk->bi", J, r[idx])
        dg = np.einsum("bii->bi", A)
        floor = 1e-12 * np.maximum(dg.max(axis=1), 1e-300)
        M = A + (lam[idx, None] * dg + floor[:, None])[:, :, None] * np.eye(D)
        try:
            step = np.linalg.solve(M, -g[:, :, None])[:, :, 0]
        except np.linalg.LinAlgError:
            step = np.stack([np.linalg.lstsq(Mi, -gi, rcond=None)[0] for Mi, gi in zip(M, g)])
        z_new = np.clip(z + step, lo, hi)
        r_new = resid(z_new)
        c_new = np.einsum("ij,ij->i", r_new, r_new)
        better = np.isfinite(c_new) & (c_new < cost[idx])
        bi = idx[better]
        Z[bi] = z_new[better]
        r[bi] = r_new[better]
        small = np.abs(step[better]).max(axis=1) < 1e-15 * (1 + np.abs(z[better]).max(axis=1))
        # Stagnation: an accepted step that barely lowers the cost means a
        # local minimum (or a plateau of near-misses), not a root.
        small |= c_new[better] > (1.0 - 1e-6) * cost[bi]
        cost[bi] = c_new[better]
        lam[bi] = np.maximum(lam[bi] / 3.0, 1e-12)
        wi = idx[~better]
        lam[wi] *= 4.0
        active[wi[lam[wi] > 1e10]] = False
        active[bi[small]] = False
    return Z, np.sqrt(cost)
