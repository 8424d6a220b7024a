"""Symbolic topology bookkeeping for antisurgery and 0-surgery.

Manifolds are connected sums of atoms from a small vocabulary:

* ``S^a x S^b`` (closed, ``a >= b >= 1``; ``S^1 x S^{n-1}`` is written P^n),
* ``S^a x D^b`` (with boundary),
* ``P^n = S^1 x S^{n-1}`` and ``Q^n``, the mapping torus of an orientation
  reversing involution of ``S^{n-1}``,
* ``S^n``, the unit of the connected sum (kept only when it is the sole atom).

Descriptors are normal-formed so that equality is syntactic.  No relations
between atoms are applied.  For example ``N # P^n`` and ``N # Q^n`` agree
for non-orientable N, but are kept distinct here, as written in the
construction.  Homology is tracked as free ranks only.
"""

from __future__ import annotations

import re
from collections import Counter
from dataclasses import dataclass
from fractions import Fraction
from typing import Dict, Iterable, List, Optional, Tuple

import numpy as np

from .errors import ModelViolation, NotRepresentable, ParameterError


def _chi_sphere(d: int) -> int:
    return 1 + (-1) ** d


@dataclass(frozen=True, order=True)
class Atom:
    """One connected summand.  ``kind`` is one of SxS, SxD, P, Q, S."""

    kind: str
    a: int = 0
    b: int = 0

    @property
    def dim(self) -> int:
        return self.a + self.b

    @property
    def chi(self) -> int:
        if self.kind == "SxS":
            return _chi_sphere(self.a) * _chi_sphere(self.b)
        if self.kind == "SxD":
            return _chi_sphere(self.a)
        if self.kind in ("P", "Q"):
            return 0
        return _chi_sphere(self.a)

    @property
    def orientable(self) -> bool:
        return self.kind != "Q"

    @property
    def b1(self) -> int:
        if self.kind == "SxS":
            return int(self.a == 1) + int(self.b == 1)
        if self.kind == "SxD":
            return int(self.a == 1)
        if self.kind == "P":
            return 2 if self.dim == 2 else 1
        if self.kind == "Q":
            return 1
        return 0

    @property
    def closed(self) -> bool:
        return self.kind != "SxD"

    def label(self) -> str:
        if self.kind == "SxS":
            return f"S{self.a}xS{self.b}"
        if self.kind == "SxD":
            return f"S{self.a}xD{self.b}"
        if self.kind in ("P", "Q"):
            return f"{self.kind}{self.dim}"
        return f"S{self.a}"


# Normal-form order: products, then P, Q and the unit; larger factors first.
_KIND_ORDER = {"SxS": 0, "SxD": 1, "P": 2, "Q": 3, "S": 4}


def _atom_key(at: Atom):
    return (_KIND_ORDER[at.kind], -at.a, -at.b)


def sphere_atom(n: int) -> Atom:
    return Atom("S", n, 0)


def P_atom(n: int) -> Atom:
    return Atom("P", 1, n - 1)


def Q_atom(n: int) -> Atom:
    return Atom("Q", 1, n - 1)


def product_atom(a: int, b: int) -> Atom:
    """``S^a x S^b`` in normal form (``S^1 x S^{n-1}`` becomes P^n)."""
    if a < 1 or b < 1:
        raise ParameterError("sphere factors must have dimension >= 1 (use the unit S^n otherwise)")
    if a == 1 or b == 1:
        return P_atom(a + b)
    return Atom("SxS", max(a, b), min(a, b))


def disc_product_atom(a: int, b: int) -> Atom:
    """``S^a x D^b``."""
    if a < 0 or b < 0:
        raise ParameterError("dimensions must be non-negative")
    return Atom("SxD", a, b)


@dataclass(frozen=True)
class ManifoldDescriptor:
    """Formal connected sum of atoms, all of dimension ``dim``."""

    dim: int
    atoms: Tuple[Atom, ...]

    def __post_init__(self):
        n = int(self.dim)
        if n < 2:
            raise ParameterError("descriptors need dimension >= 2")
        atoms = list(self.atoms)
        for at in atoms:
            if at.dim != n:
                raise ParameterError(f"atom {at.label()} has dimension {at.dim}, expected {n}")
        rest = [a for a in atoms if a.kind != "S"]
        atoms = sorted(rest, key=_atom_key) if rest else [sphere_atom(n)]
        object.__setattr__(self, "dim", n)
        object.__setattr__(self, "atoms", tuple(atoms))

    # -- constructors ---------------------------------------------------------
    @classmethod
    def of(cls, *atoms: Atom) -> "ManifoldDescriptor":
        if not atoms:
            raise ParameterError("need at least one atom")
        return cls(atoms[0].dim, tuple(atoms))

    @classmethod
    def sphere(cls, n: int) -> "ManifoldDescriptor":
        return cls(n, (sphere_atom(n),))

    @classmethod
    def parse(cls, text: str) -> "ManifoldDescriptor":
        """Parse expressions such as ``"(S3xS2) # 2P5"``, ``"T2"`` or ``"S1xS2"``."""
        parts = [p.strip() for p in text.split("#")]
        atoms: List[Atom] = []
        for part in parts:
            m = re.fullmatch(r"(\d*)\s*\(?\s*([A-Za-z0-9x]+)\s*\)?", part)
            if not m:
                raise ParameterError(f"cannot parse summand {part!r}")
            count = int(m.group(1)) if m.group(1) else 1
            atoms.extend([_parse_atom(m.group(2))] * count)
        if not atoms:
            raise ParameterError("empty expression")
        return cls(atoms[0].dim, tuple(atoms))

    # -- invariants ---------------------------------------------------------------
    @property
    def chi(self) -> int:
        m = len(self.atoms)
        return sum(a.chi for a in self.atoms) - (m - 1) * _chi_sphere(self.dim)

    @property
    def orientable(self) -> bool:
        return all(a.orientable for a in self.atoms)

    @property
    def b1(self) -> int:
        return sum(a.b1 for a in self.atoms)

    @property
    def closed(self) -> bool:
        return all(a.closed for a in self.atoms)

    @property
    def expression(self) -> str:
        counts = Counter(self.atoms)
        out = []
        for at in sorted(counts, key=_atom_key):
            c = counts[at]
            lab = at.label()
            if at.kind in ("SxS", "SxD"):
                lab = f"({lab})"
            out.append(f"{c}{lab}" if c > 1 else lab)
        return " # ".join(out)

    def __str__(self) -> str:
        return self.expression

    def connect(self, *atoms: Atom) -> "ManifoldDescriptor":
        return ManifoldDescriptor(self.dim, self.atoms + tuple(atoms))

    def to_dict(self) -> dict:
        counts = Counter(self.atoms)
        return {
            "dim": self.dim,
            "expression": self.expression,
            "atoms": [
                {"kind": at.kind, "a": at.a, "b": at.b, "label": at.label(), "count": counts[at]}
                for at in sorted(counts, key=_atom_key)
            ],
            "chi": self.chi,
            "orientable": self.orientable,
            "b1": self.b1,
        }


def _parse_atom(tok: str) -> Atom:
    tok = tok.strip()
    m = re.fullmatch(r"S(\d+)xS(\d+)", tok)
    if m:
        return product_atom(int(m.group(1)), int(m.group(2)))
    m = re.fullmatch(r"S(\d+)xD(\d+)", tok)
    if m:
        return disc_product_atom(int(m.group(1)), int(m.group(2)))
    m = re.fullmatch(r"D(\d+)xS(\d+)", tok)
    if m:
        return disc_product_atom(int(m.group(2)), int(m.group(1)))
    m = re.fullmatch(r"([PQTS])(\d+)", tok)
    if m:
        kind, n = m.group(1), int(m.group(2))
        if kind == "T":
            if n != 2:
                raise ParameterError("only T2 is in the vocabulary (as P2)")
            return P_atom(2)
        if kind == "S":
            return sphere_atom(n)
        return P_atom(n) if kind == "P" else Q_atom(n)
    raise ParameterError(f"unknown atom {tok!r}")


# ---------------------------------------------------------------------------
# Euler characteristic and orientation
# ---------------------------------------------------------------------------


def _check_nk(n: int, k: int) -> None:
    if int(n) != n or n < 1:
        raise ParameterError(f"n must be a positive integer, got {n}")
    if int(k) != k or not 0 <= k <= n - 1:
        raise ParameterError(f"k must satisfy 0 <= k <= n-1, got k={k}, n={n}")


def euler_after_surgery(chi_L: int, n: int, k: int) -> int:
    """``chi(L') = chi(L) + (-1)^(k+1) + (-1)^(n-k-1)`` for k-surgery on an n-manifold."""
    _check_nk(n, k)
    return int(chi_L) + (-1) ** (k + 1) + (-1) ** (n - k - 1)


def zero_surgery_euler_change(n: int) -> int:
    """``chi(D^1 x S^{n-1}) - chi(S^0 x D^n)``: the change from gluing in the 0-surgery handle."""
    return _chi_sphere(n - 1) - 2


@dataclass(frozen=True)
class OrientationSign:
    """Intersection index, change-of-basis determinant and orientability verdict."""

    intersection_index: int
    determinant: float
    orientable_resolution: str

    def __iter__(self):
        yield self.intersection_index
        yield self.determinant
        yield self.orientable_resolution


def tangent_basis(n: int, k: int) -> np.ndarray:
    """Columns ``o_+`` then ``o_-`` in the symplectic basis ``(x1, y1, ..., xn, yn)``.

    ``o_+`` is ``dx_i + dy_i`` for i <= k+1 and ``dx_i - dy_i`` otherwise; ``o_-``
    has the opposite signs (the slopes ``3 f_1(0)^(1/2)`` normalized to 1).
    """
    _check_nk(n, k)
    M = np.zeros((2 * n, 2 * n))
    for i in range(n):
        s = 1.0 if i <= k else -1.0
        M[2 * i, i] = 1.0
        M[2 * i + 1, i] = s
        M[2 * i, n + i] = 1.0
        M[2 * i + 1, n + i] = -s
    return M


def orientation_sign(n: int, k: int, rtol: float = 1e-9) -> OrientationSign:
    """Orientation data of the double point of Lambda' and the 0-surgery verdict.

    The determinant of the basis ``o_+ + o_-`` against the symplectic basis is
    computed numerically and checked against ``(-1)^(n(n-1)/2 + k + 1) 2^n``.
    The intersection index ``Lambda'_- . Lambda'_+`` is ``(-1)^(n(n-1)/2 + k)``.
    The verdict is ``"yes"`` (orientable, n even and k odd), ``"no"`` (n even,
    k even) or ``"choice"`` (n odd, both resolutions realizable).

    Raises
    ------
    ModelViolation
        If the numerical determinant disagrees with the closed form.
    """
    _check_nk(n, k)
    det = float(np.linalg.det(tangent_basis(n, k)))
    expected = (-1) ** (n * (n - 1) // 2 + k + 1) * 2.0**n
    if abs(det - expected) > rtol * abs(expected):
        raise ModelViolation(f"determinant {det} differs from {expected}")
    # Orient Lambda'_+ by o_+ and Lambda'_- by the opposite of o_-: one sign flip.
    index = -int(np.sign(det))
    if n % 2:
        verdict = "choice"
    else:
        verdict = "yes" if k % 2 else "no"
    return OrientationSign(index, det, verdict)


def lagrangian_resolution(n: int, k: int, resolution: Optional[str] = None) -> str:
    """Resolution summand (``"P"`` or ``"Q"``) produced by the Lagrangian construction.

    For even n it is forced (P for odd k, Q for even k).  For odd n both occur,
    and the caller must choose.

    Raises
    ------
    ParameterError
        If n is odd and no choice is given, or if the choice contradicts the
        forced one for even n.
    """
    _check_nk(n, k)
    if n % 2 == 0:
        forced = "P" if k % 2 else "Q"
        if resolution not in (None, "auto", forced):
            raise ParameterError(f"for even n = {n} and k = {k} the resolution is forced to {forced}")
        return forced
    if resolution in (None, "auto"):
        raise ParameterError("for odd n the resolution (P or Q) must be chosen explicitly")
    if resolution not in ("P", "Q"):
        raise ParameterError(f"resolution must be 'P' or 'Q', got {resolution!r}")
    return resolution


# ---------------------------------------------------------------------------
# Surgery on descriptors
# ---------------------------------------------------------------------------

SURGERY_MODES = ("trivial", "factor")


def apply_surgery(
    desc: ManifoldDescriptor,
    k: int,
    resolution: Optional[str] = None,
    mode: Optional[str] = None,
) -> ManifoldDescriptor:
    """Abstract k-surgery, optionally followed by the 0-surgery resolution.

    Parameters
    ----------
    desc : ManifoldDescriptor
    k : int
        Index of the surgery (``0 <= k <= n-1``).
    resolution : {None, "none", "P", "Q", "auto"}
        After the k-surgery, add ``# P^n`` or ``# Q^n`` (the 0-surgery that
        removes the double point).  ``"auto"`` uses the Lagrangian verdict,
        which requires an explicit choice for odd n.
    mode : {"trivial", "factor"}, optional
        ``"trivial"`` surgers a sphere inside a ball, adding
        ``S^{k+1} x S^{n-k-1}``.  ``"factor"`` surgers the core sphere of a
        summand: ``S^k x S^{n-k}`` (or P^n) becomes ``S^n`` and ``S^k x D^{n-k}``
        becomes ``S^{n-k-1} x D^{k+1}``.  The default is ``"trivial"`` for
        k < n-1 and ``"factor"`` for k = n-1.

    Raises
    ------
    NotRepresentable
        If the excision has no expression in the atom vocabulary.
    """
    n = desc.dim
    _check_nk(n, k)
    if mode is None:
        mode = "trivial" if k < n - 1 else "factor"
    if mode not in SURGERY_MODES:
        raise ParameterError(f"mode must be one of {SURGERY_MODES}")
    atoms = list(desc.atoms)
    if mode == "trivial":
        if k == n - 1:
            raise NotRepresentable("surgery on a trivial (n-1)-sphere disconnects the manifold")
        new = atoms + [product_atom(k + 1, n - k - 1)]
    else:
        new = _factor_surgery(atoms, n, k)
    out = ManifoldDescriptor(n, tuple(new))
    if resolution in (None, "none"):
        return out
    res = lagrangian_resolution(n, k, resolution) if resolution == "auto" else resolution
    if res not in ("P", "Q"):
        raise ParameterError(f"resolution must be None, 'P', 'Q' or 'auto', got {resolution!r}")
    return out.connect(P_atom(n) if res == "P" else Q_atom(n))


def _factor_surgery(atoms: List[Atom], n: int, k: int) -> List[Atom]:
    for i, at in enumerate(atoms):
        if at.kind == "SxD" and at.a == k:
            return atoms[:i] + [disc_product_atom(n - k - 1, k + 1)] + atoms[i + 1 :]
    for i, at in enumerate(atoms):
        if at.kind in ("SxS", "P") and k in (at.a, at.b) and k >= 1:
            return atoms[:i] + atoms[i + 1 :] + [sphere_atom(n)]
    raise NotRepresentable(f"no summand with an S^{k} factor to surger in {ManifoldDescriptor(n, tuple(atoms))}")


def composite_surgery(desc: ManifoldDescriptor, k: int, resolution: str = "auto") -> ManifoldDescriptor:
    """k-antisurgery followed by removal of the double point (the L -> L^natural passage)."""
    return apply_surgery(desc, k, resolution)


def homology_transition(n: int, k: int, h1_rank_L: int, h2_rel_rank_L: int) -> Tuple[int, int]:
    """Ranks of ``H_1(L^natural)`` and ``H_2(M, L^natural)``; both gain one free summand.

    Raises
    ------
    ParameterError
        Unless ``2 <= k <= n-3`` (the hypothesis of the rank statement).
    """
    if not 2 <= k <= n - 3:
        raise ParameterError(f"homology transition needs 2 <= k <= n-3, got k={k}, n={n}")
    return int(h1_rank_L) + 1, int(h2_rel_rank_L) + 1


# ---------------------------------------------------------------------------
# Trace cobordisms
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class CobordismDescriptor:
    """Cobordism built from ``L x [0, 1]`` by attaching handles in order.

    ``from_end`` is L, ``to_end`` is the surgered manifold.  As a Lagrangian
    cobordism it is read as ``to_end ~> from_end``.
    """

    from_end: ManifoldDescriptor
    to_end: ManifoldDescriptor
    handles: Tuple[Tuple[int, int], ...]

    def __post_init__(self):
        n = self.from_end.dim
        if self.to_end.dim != n:
            raise ParameterError("ends must have the same dimension")
        for idx, count in self.handles:
            if not 0 <= idx <= n + 1 or count < 0:
                raise ParameterError(f"handle ({idx}, {count}) out of range for dimension {n + 1}")

    @property
    def chi(self) -> int:
        return self.from_end.chi + sum(count * (-1) ** idx for idx, count in self.handles)

    def consistent(self) -> bool:
        """Euler characteristic bookkeeping of the ends against the handles."""
        chi = self.from_end.chi
        n = self.from_end.dim
        for idx, count in self.handles:
            for _ in range(count):
                chi = euler_after_surgery(chi, n, idx - 1)
        ok = chi == self.to_end.chi
        if n % 2 == 0 and self.from_end.closed and self.to_end.closed:
            ok &= self.from_end.chi + self.to_end.chi == 2 * self.chi
        return bool(ok)

    def to_dict(self) -> dict:
        return {
            "from_end": self.from_end.to_dict(),
            "to_end": self.to_end.to_dict(),
            "handles": [list(h) for h in self.handles],
            "chi": self.chi,
            "consistent": self.consistent(),
        }


def trace_descriptor(L: ManifoldDescriptor, k: int, resolution: Optional[str] = "auto") -> CobordismDescriptor:
    """Trace of k-antisurgery followed by 0-surgery: a (k+1)-handle then a 1-handle."""
    target = apply_surgery(L, k, resolution)
    return CobordismDescriptor(L, target, ((k + 1, 1), (1, 1)))


def monotone_cobordism_flag(eta_L: Fraction, eta_natural: Fraction, h1_ambient_zero: bool) -> bool:
    """Recorded predicate: equal monotonicity constants and ``H_1(M) = 0``.

    The homological argument behind it is not verified here.
    """
    return bool(h1_ambient_zero) and Fraction(eta_L) == Fraction(eta_natural)
