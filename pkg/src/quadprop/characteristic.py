"""Characteristic equation ``mu'' + 4 sigma(t) mu = 0``.

``mu`` starts at ``mu(0)=0, mu'(0)=1``; the companion ``nu`` starts at
``nu(0)=1, nu'(0)=0`` and is carried along so that the Wronskian
``mu' nu - mu nu' = 1`` can be monitored and used in closed-form identities.
"""

from dataclasses import dataclass, field
import math

import numpy as np
from scipy.integrate import solve_ivp
from scipy.optimize import brentq

from .errors import NumericalError, SpecError
from .hamiltonian import require_pipeline, sigma_function, sigma_is_constant

__all__ = [
    "CharacteristicSolution",
    "closed_form_mu",
    "closed_form_nu",
    "solve_characteristic",
    "integrate_characteristic",
    "find_caustics",
    "find_turning_points",
]

RTOL = 1e-10
ATOL = 1e-10


def closed_form_mu(sigma, t):
    """Return ``(mu, mu')`` for constant ``sigma``."""
    t = np.asarray(t, dtype=float)
    if sigma > 0:
        w = 2.0 * math.sqrt(sigma)
        mu, dmu = np.sin(w * t) / w, np.cos(w * t)
    elif sigma == 0:
        mu, dmu = t + 0.0, np.ones_like(t)
    else:
        w = 2.0 * math.sqrt(-sigma)
        mu, dmu = np.sinh(w * t) / w, np.cosh(w * t)
    if mu.ndim == 0:
        return float(mu), float(dmu)
    return mu, dmu


def closed_form_nu(sigma, t):
    """Return ``(nu, nu')`` for constant ``sigma``."""
    t = np.asarray(t, dtype=float)
    if sigma > 0:
        w = 2.0 * math.sqrt(sigma)
        nu, dnu = np.cos(w * t), -w * np.sin(w * t)
    elif sigma == 0:
        nu, dnu = np.ones_like(t), np.zeros_like(t)
    else:
        w = 2.0 * math.sqrt(-sigma)
        nu, dnu = np.cosh(w * t), w * np.sinh(w * t)
    if nu.ndim == 0:
        return float(nu), float(dnu)
    return nu, dnu


@dataclass(frozen=True)
class CharacteristicSolution:
    """Sampled characteristic function with a dense evaluator.

    ``evaluate(t)`` returns ``(mu, mu', nu, nu')`` anywhere in ``[0, t_max]``.
    """

    t: np.ndarray
    mu: np.ndarray
    mu_prime: np.ndarray
    nu: np.ndarray
    nu_prime: np.ndarray
    caustics: tuple
    method: str
    sigma: object = field(repr=False, compare=False)
    _evaluator: object = field(repr=False, compare=False)

    @property
    def t_max(self):
        return float(self.t[-1])

    def evaluate(self, t):
        tt = np.asarray(t, dtype=float)
        if np.any(tt < -1e-12) or np.any(tt > self.t_max * (1 + 1e-12) + 1e-12):
            raise SpecError(f"t={t} outside solved interval [0, {self.t_max}]")
        return self._evaluator(tt)

    def wronskian(self):
        return self.mu_prime * self.nu - self.mu * self.nu_prime


def _rhs(sigma):
    def f(t, y):
        s4 = 4.0 * sigma(t)
        return [y[1], -s4 * y[0], y[3], -s4 * y[2]]
    return f


def integrate_characteristic(spec, axis, t0, t1, y0, rtol=RTOL, atol=ATOL, convention="table"):
    """Integrate ``(mu, mu', nu, nu')`` from ``t0`` to ``t1`` (either direction).

    Coefficient breakpoints are respected by restarting the integrator.
    Returns a list of ``(t_start, t_end, OdeSolution)`` segments.
    """
    sigma = sigma_function(spec, axis, convention)
    lo, hi = sorted((t0, t1))
    cuts = [b for b in spec.axes[axis].breakpoints() if lo < b < hi]
    if t1 < t0:
        cuts = cuts[::-1]
    edges = [t0, *cuts, t1]
    y = np.asarray(y0, dtype=float)
    segments = []
    f = _rhs(sigma)
    for a, b in zip(edges, edges[1:]):
        if a == b:
            continue
        res = solve_ivp(f, (a, b), y, method="DOP853", rtol=rtol, atol=atol, dense_output=True)
        if not res.success:
            raise NumericalError(f"characteristic integration failed on [{a}, {b}]: {res.message}")
        segments.append((a, b, res.sol))
        y = res.y[:, -1]
    return segments


def _segment_evaluator(segments):
    starts = np.array([s[0] for s in segments])
    sols = [s[2] for s in segments]

    def evaluate(t):
        t = np.asarray(t, dtype=float)
        flat = np.atleast_1d(t).ravel()
        out = np.empty((4, flat.size))
        idx = np.clip(np.searchsorted(starts, flat, side="right") - 1, 0, len(sols) - 1)
        for k in np.unique(idx):
            m = idx == k
            out[:, m] = sols[k](flat[m])
        if t.ndim == 0:
            return tuple(float(v) for v in out[:, 0])
        return tuple(row.reshape(t.shape) for row in out)

    return evaluate


def _closed_evaluator(sigma0):
    def evaluate(t):
        mu, dmu = closed_form_mu(sigma0, t)
        nu, dnu = closed_form_nu(sigma0, t)
        return mu, dmu, nu, dnu
    return evaluate


def _zeros(values, t, fn, lo, hi):
    """Bracketed zeros of a sampled function, refined with Brent's method."""
    inner = (t > lo) & (t < hi)
    tt = np.concatenate([[lo], t[inner], [hi]])
    vv = np.concatenate([[fn(lo)], values[inner], [fn(hi)]])
    roots = []
    for k in range(len(tt) - 1):
        a, b = vv[k], vv[k + 1]
        if a == 0.0:
            roots.append(float(tt[k]))
        elif a * b < 0:
            roots.append(brentq(fn, tt[k], tt[k + 1], xtol=1e-12, rtol=4 * np.finfo(float).eps))
    if vv[-1] == 0.0:
        roots.append(float(tt[-1]))
    return sorted({r for r in roots if r > 0.0})


def find_caustics(sol, interval=None):
    """Zeros of ``mu`` inside ``interval`` (default: the whole solution, t > 0)."""
    lo, hi = interval if interval is not None else (0.0, sol.t_max)
    if lo < 0 or hi > sol.t_max * (1 + 1e-12):
        raise SpecError(f"interval {interval} not covered by solution [0, {sol.t_max}]")
    return _zeros(sol.mu, sol.t, lambda s: sol.evaluate(s)[0], lo, hi)


def find_turning_points(sol, interval=None):
    """Zeros of ``mu'`` inside ``interval``."""
    lo, hi = interval if interval is not None else (0.0, sol.t_max)
    return _zeros(sol.mu_prime, sol.t, lambda s: sol.evaluate(s)[1], lo, hi)


def solve_characteristic(spec, axis, t_max, rtol=RTOL, atol=ATOL, convention="table"):
    """Solve the characteristic problem of one axis on ``[0, t_max]``.

    Uses the closed form when sigma is constant and an adaptive
    Dormand-Prince integrator otherwise.
    """
    require_pipeline(spec)
    if not 0 <= axis < spec.dimension:
        raise SpecError(f"axis {axis} out of range for dimension {spec.dimension}")
    if not 0 < t_max <= spec.t_max * (1 + 1e-12):
        raise SpecError(f"t_max={t_max} outside coefficient validity (0, {spec.t_max}]")
    sigma = sigma_function(spec, axis, convention)

    probe = np.linspace(0.0, t_max, 2001)
    s4 = np.max(np.abs(4.0 * np.asarray(sigma(probe)) + 0.0 * probe))
    h = 0.01 * min(1.0, 1.0 / math.sqrt(s4)) if s4 > 0 else 0.01
    n = max(int(math.ceil(t_max / h)) + 1, 3)
    grid = np.linspace(0.0, t_max, n)

    if sigma_is_constant(spec, axis):
        evaluator = _closed_evaluator(float(sigma(0.0)))
        method = "closed-form"
    else:
        segments = integrate_characteristic(spec, axis, 0.0, t_max, [0.0, 1.0, 1.0, 0.0],
                                            rtol=rtol, atol=atol, convention=convention)
        evaluator = _segment_evaluator(segments)
        method = "numeric"
    mu, dmu, nu, dnu = evaluator(grid)
    mu[0], dmu[0], nu[0], dnu[0] = 0.0, 1.0, 1.0, 0.0
    sol = CharacteristicSolution(grid, mu, dmu, nu, dnu, (), method, sigma, evaluator)
    caustics = tuple(find_caustics(sol))
    object.__setattr__(sol, "caustics", caustics)
    return sol
