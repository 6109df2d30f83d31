"""Admissible exponent pairs, the dispersive decay weight and discrete mixed norms."""

from dataclasses import dataclass
from fractions import Fraction
import math
import numbers

import numpy as np

from .errors import CausticError, SpecError

__all__ = [
    "ExponentPair",
    "is_admissible",
    "endpoint",
    "decay_weight",
    "weak_l1_check",
    "WeakL1Result",
    "mixed_norm",
    "SHARP",
    "NONSHARP",
    "INADMISSIBLE",
    "FORBIDDEN",
]

SHARP = "sharp"
NONSHARP = "nonsharp"
INADMISSIBLE = "inadmissible"
FORBIDDEN = "forbidden_endpoint"

EQ_TOL = 1e-12
MESH_MAX = 1e-3


@dataclass(frozen=True)
class ExponentPair:
    q: float
    r: float
    sigma: float
    sharp: bool

    def __post_init__(self):
        if not (self.q >= 2 and self.r >= 2):
            raise SpecError("exponents must satisfy q, r >= 2")


def _recip(v):
    if isinstance(v, numbers.Rational):
        return Fraction(1, 1) / Fraction(v)
    if math.isinf(v):
        return Fraction(0)
    return 1.0 / float(v)


def _exact(*vals):
    return all(isinstance(v, numbers.Rational) or (isinstance(v, float) and math.isinf(v)) for v in vals)


def is_admissible(q, r, sigma):
    """Classify ``(q, r)`` against ``1/q + sigma/r <= sigma/2``.

    Returns one of ``"sharp"``, ``"nonsharp"``, ``"inadmissible"`` or
    ``"forbidden_endpoint"`` (the excluded triple ``(2, inf, 1)``).  Integer
    and ``Fraction`` inputs are compared exactly, floats to a relative
    tolerance of 1e-12.
    """
    if not sigma > 0:
        raise SpecError(f"sigma must be positive, got {sigma}")
    if q < 2 or r < 2:
        return INADMISSIBLE
    if q == 2 and math.isinf(r) and sigma == 1:
        return FORBIDDEN
    lhs = _recip(q) + sigma * _recip(r)
    rhs = sigma / 2 if not isinstance(sigma, numbers.Rational) else Fraction(sigma) / 2
    if _exact(q, r, sigma):
        diff = Fraction(lhs) - Fraction(rhs)
        if diff == 0:
            return SHARP
        return NONSHARP if diff < 0 else INADMISSIBLE
    diff = float(lhs) - float(rhs)
    if abs(diff) <= EQ_TOL * max(1.0, abs(float(rhs))):
        return SHARP
    return NONSHARP if diff < 0 else INADMISSIBLE


def endpoint(sigma):
    """Sharp endpoint pair ``(2, 2 sigma / (sigma - 1))`` for ``sigma > 1``."""
    if not sigma > 1:
        raise SpecError(f"endpoint pair needs sigma > 1, got {sigma}")
    if isinstance(sigma, numbers.Rational):
        r = Fraction(2) * Fraction(sigma) / (Fraction(sigma) - 1)
        r = int(r) if r.denominator == 1 else r
    else:
        r = 2.0 * sigma / (sigma - 1.0)
    return ExponentPair(2, r, sigma, True)


def decay_weight(omegas, deltas, k, delta_cut, C, t):
    """Decay weight with one hyperbolic axis ``k`` and trigonometric others.

    ``w(t) = C / |t|`` for ``|t| <= delta_cut`` and otherwise
    ``C (exp(-omega_k |t|) prod_{j != k} 1 / (2 pi |sin(omega_j t)|))^(1/d)``.
    Vectorized over ``t``.
    """
    omegas = [float(w) for w in omegas]
    deltas = [int(v) for v in deltas]
    d = len(omegas)
    if len(deltas) != d or not 0 <= k < d:
        raise SpecError("omegas and deltas must have one entry per axis and k must index an axis")
    if deltas[k] != -1 or any(deltas[j] != 1 for j in range(d) if j != k):
        raise SpecError("axis k must be hyperbolic (delta = -1) and all others trigonometric (+1)")
    if delta_cut <= 0:
        raise SpecError("delta_cut must be positive")
    tt = np.asarray(t, dtype=float)
    a = np.abs(tt)
    if np.any(a == 0):
        raise SpecError("weight is singular at t = 0")
    far = a > delta_cut
    prod = np.exp(-omegas[k] * a)
    for j in range(d):
        if j == k:
            continue
        s = np.abs(np.sin(omegas[j] * tt))
        if np.any(far & (s == 0)):
            raise CausticError("decay weight evaluated exactly at a zero of sin(omega_j t)")
        with np.errstate(divide="ignore"):
            prod = prod / (2 * np.pi * s)
    with np.errstate(divide="ignore"):
        out = np.where(far, C * prod ** (1.0 / d), C / a)
    return float(out) if out.ndim == 0 else out


@dataclass(frozen=True)
class WeakL1Result:
    lambdas: np.ndarray
    products: np.ndarray
    slope: float
    bounded: bool

    def __iter__(self):
        return iter((self.lambdas, self.products))


def weak_l1_check(t, w, lambdas=None, slope_tol=0.5):
    """Distribution-function products ``lambda * |{w > lambda}|``.

    ``t`` is an increasing sample mesh with spacing at most 1e-3 and ``w``
    the weight at those points; each sample stands for the cell between the
    neighbouring midpoints.  The products are judged bounded when the
    log-log slope of the nonzero products against ``lambda`` stays below
    ``slope_tol`` (a linearly growing product has slope one).
    """
    t = np.asarray(t, dtype=float)
    w = np.asarray(w, dtype=float)
    if t.shape != w.shape or t.ndim != 1 or t.size < 3:
        raise SpecError("t and w must be matching 1-d arrays with at least 3 samples")
    steps = np.diff(t)
    if np.any(steps <= 0):
        raise SpecError("time mesh must be strictly increasing")
    if steps.max() > MESH_MAX * (1 + 1e-9):
        raise SpecError(f"mesh spacing {steps.max():.2e} exceeds {MESH_MAX:g}: singularities unresolved")
    edges = np.concatenate([[t[0] - steps[0] / 2], 0.5 * (t[1:] + t[:-1]), [t[-1] + steps[-1] / 2]])
    width = np.diff(edges)
    lam = np.logspace(0, 3, 31) if lambdas is None else np.asarray(lambdas, dtype=float)
    prods = np.array([l * width[w > l].sum() for l in lam])
    keep = prods > 0
    if keep.sum() >= 2:
        slope = float(np.polyfit(np.log(lam[keep]), np.log(prods[keep]), 1)[0])
    else:
        slope = -math.inf
    return WeakL1Result(lam, prods, slope, bool(slope < slope_tol and np.all(np.isfinite(prods))))


def _space_norm(state, r):
    return state.lp_norm(r)


def mixed_norm(trajectory, q, r):
    """Discrete ``L^q_t L^r_x`` norm of a trajectory.

    Accepts a :class:`~quadprop.nls.Trajectory` or a sequence of
    ``GridState`` with increasing ``t``; each snapshot may live on its own
    grid.  Time weights are the cells between neighbouring midpoints.
    ``inf`` exponents use the supremum.
    """
    states = list(getattr(trajectory, "states", trajectory))
    if not states:
        raise SpecError("trajectory is empty")
    if not (q >= 2 and r >= 2):
        raise SpecError("exponents must satisfy q, r >= 2")
    norms = np.array([_space_norm(s, r) for s in states])
    if math.isinf(q):
        return float(norms.max())
    t = np.array([s.t for s in states])
    if len(t) == 1:
        width = np.array([1.0])
    else:
        steps = np.diff(t)
        if np.any(steps <= 0):
            raise SpecError("snapshot times must be strictly increasing")
        edges = np.concatenate([[t[0] - steps[0] / 2], 0.5 * (t[1:] + t[:-1]), [t[-1] + steps[-1] / 2]])
        width = np.diff(edges)
    return float(np.sum(width * norms ** q) ** (1.0 / q))
