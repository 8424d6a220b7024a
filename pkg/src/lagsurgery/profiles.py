"""C-infinity profile functions built from the exp(-1/t) mollifier.

All functions are vectorized and return exact constants (0 or 1) outside
their transition intervals, so identities such as ``rho = 0`` hold exactly
rather than up to rounding.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.special import expit

from .errors import ParameterError

# Gauss-Legendre nodes on [0, 1] for integrating the smoothstep.
_GL_X, _GL_W = np.polynomial.legendre.leggauss(64)
_GL_X = 0.5 * (_GL_X + 1.0)
_GL_W = 0.5 * _GL_W


def smoothstep(t, c: float = 1.0, nu: int = 0):
    """Flat smoothstep ``S_c`` and its derivatives.

    ``S_c(t) = expit(c * (1/(1-t) - 1/t))`` on (0, 1), 0 for t <= 0 and 1 for
    t >= 1.  For c = 1 this equals ``psi(t) / (psi(t) + psi(1-t))`` with
    ``psi(t) = exp(-1/t)``.  Smaller ``c`` gives a steeper transition near
    the endpoints and a flatter middle.  Every ``S_c`` satisfies
    ``S_c(t) + S_c(1-t) = 1``.

    Parameters
    ----------
    t : array_like
        Evaluation points.
    c : float
        Steepness parameter (> 0).
    nu : {0, 1, 2}
        Derivative order.
    """
    t = np.asarray(t, dtype=float)
    inside = (t > 0.0) & (t < 1.0)
    ti = np.where(inside, t, 0.5)
    with np.errstate(over="ignore"):
        # Subnormal t overflows 1/t to inf; expit saturates correctly.
        z = c * (1.0 / (1.0 - ti) - 1.0 / ti)
    s = expit(z)
    if nu == 0:
        return np.where(inside, s, np.where(t >= 1.0, 1.0, 0.0))
    sc = expit(-z)  # 1 - S computed without cancellation
    q = s * sc
    z1 = c * (1.0 / (1.0 - ti) ** 2 + 1.0 / ti**2)
    if nu == 1:
        return np.where(inside, q * z1, 0.0)
    if nu == 2:
        z2 = c * (2.0 / (1.0 - ti) ** 3 - 2.0 / ti**3)
        val = q * (sc - s) * z1**2 + q * z2
        return np.where(inside, val, 0.0)
    raise ValueError("nu must be 0, 1 or 2")


def smoothstep_integral(t, c: float = 1.0):
    """``R_c(t) = integral_0^t S_c``.  Equals ``t - 1/2`` for t >= 1."""
    t = np.asarray(t, dtype=float)
    tc = np.clip(t, 0.0, 1.0)
    nodes = tc[..., None] * _GL_X
    inner = tc * np.sum(_GL_W * smoothstep(nodes, c), axis=-1)
    return np.where(t >= 1.0, t - 0.5, np.where(t <= 0.0, 0.0, inner))


def ramp(s, nu: int = 0):
    """Smooth ramp ``m`` with ``m = 0`` for s <= -1, ``m(s) = s`` for s >= 1.

    ``m'(s) = S((s+1)/2)`` so m is increasing, positive on (-1, inf) and
    ``m'(s) + m'(-s) = 1``.
    """
    s = np.asarray(s, dtype=float)
    u = 0.5 * (s + 1.0)
    if nu == 0:
        return 2.0 * smoothstep_integral(u)
    if nu == 1:
        return smoothstep(u)
    if nu == 2:
        return 0.5 * smoothstep(u, nu=1)
    raise ValueError("nu must be 0, 1 or 2")


@dataclass(frozen=True)
class SigmaProfile:
    """``sigma(x0) = (1+eps) * S_c((x0 - delta) / (1 - 2 delta))``."""

    epsilon: float
    delta: float
    steepness: float = 0.1

    def __call__(self, x0, nu: int = 0):
        w = 1.0 - 2.0 * self.delta
        t = (np.asarray(x0, dtype=float) - self.delta) / w
        return (1.0 + self.epsilon) * smoothstep(t, self.steepness, nu) / w**nu


@dataclass(frozen=True)
class RhoPlateau:
    """Plateau-slope cutoff with ``-1/(1+eps) < rho' <= 0`` by construction.

    The slope is ``rho'(q) = -B(q) / I_B``.  Here ``B`` is a smooth plateau
    that rises on ``[q_a, q_a + w]``, equals 1 in the middle and falls on
    ``[q_b - w, q_b]``, with ``q_b = 1 + 2 eps`` and ``q_a = w = eps/4``.  Its
    integral is ``I_B = q_b - q_a - w = 1 + 1.5 eps``, which exceeds
    ``1 + eps``, so ``|rho'| <= 1/I_B < 1/(1+eps)``.
    """

    epsilon: float

    @property
    def q_a(self) -> float:
        return self.epsilon / 4.0

    @property
    def width(self) -> float:
        return self.epsilon / 4.0

    @property
    def q_b(self) -> float:
        return 1.0 + 2.0 * self.epsilon

    @property
    def integral(self) -> float:
        return self.q_b - self.q_a - self.width

    def __call__(self, q, nu: int = 0):
        q = np.asarray(q, dtype=float)
        w, ib = self.width, self.integral
        u1 = (q - self.q_a) / w
        u2 = (q - self.q_b + w) / w
        if nu == 0:
            val = 1.0 - (w / ib) * (smoothstep_integral(u1) - smoothstep_integral(u2))
            return np.where(q >= self.q_b, 0.0, np.where(q <= self.q_a, 1.0, val))
        if nu == 1:
            return -(smoothstep(u1) - smoothstep(u2)) / ib
        if nu == 2:
            return -(smoothstep(u1, nu=1) - smoothstep(u2, nu=1)) / (w * ib)
        raise ValueError("nu must be 0, 1 or 2")


@dataclass(frozen=True)
class RhoSmoothstep:
    """Direct cutoff ``rho = 1 - S((q - q0) / (1 + 2 eps - q0))``.

    Kept as a selectable profile because its slope bound fails for every
    eps > 0 (max |rho'| = 2/(1 + 2 eps - q0)).  Validation rejects it with a
    parameter error.
    """

    epsilon: float
    q0: float = 0.25

    def __call__(self, q, nu: int = 0):
        w = 1.0 + 2.0 * self.epsilon - self.q0
        t = (np.asarray(q, dtype=float) - self.q0) / w
        if nu == 0:
            return 1.0 - smoothstep(t)
        return -smoothstep(t, nu=nu) / w**nu


SIGMA_PROFILES = {
    "sharp": lambda eps, delta: SigmaProfile(eps, delta, 0.1),
    "smoothstep": lambda eps, delta: SigmaProfile(eps, delta, 1.0),
}

RHO_PROFILES = {
    "plateau": lambda eps: RhoPlateau(eps),
    "smoothstep": lambda eps: RhoSmoothstep(eps),
}


def make_sigma(name: str, epsilon: float, delta: float):
    try:
        return SIGMA_PROFILES[name](epsilon, delta)
    except KeyError:
        raise ParameterError(f"unknown sigma profile {name!r}; choose from {sorted(SIGMA_PROFILES)}") from None


def make_rho(name: str, epsilon: float):
    try:
        return RHO_PROFILES[name](epsilon)
    except KeyError:
        raise ParameterError(f"unknown rho profile {name!r}; choose from {sorted(RHO_PROFILES)}") from None


def eta_profile(x, scale: float = 0.05, nu: int = 0):
    """``y(x) = exp(-scale/|x|)`` for x < 0 and 0 for x >= 0 (and derivatives)."""
    x = np.asarray(x, dtype=float)
    neg = x < 0
    xi = np.where(neg, x, -1.0)
    e = np.exp(scale / xi)
    if nu == 0:
        val = e
    elif nu == 1:
        val = -scale / xi**2 * e
    elif nu == 2:
        val = (scale**2 / xi**4 + 2.0 * scale / xi**3) * e
    else:
        raise ValueError("nu must be 0, 1 or 2")
    return np.where(neg, val, 0.0)
