"""Phase coefficients of the Gaussian propagator.

For each axis the kernel phase is

    S(x, y, t) = alpha x^2 + beta x y + gamma y^2 + delta x + epsilon y + kappa

with ``alpha = mu'/(2 mu) - c/2`` and ``beta = -1/mu``.  The remaining four
coefficients come either from integrals over the characteristic solution
(``method="quadrature"``) or, once ``mu'`` has vanished somewhere on
``(0, t]``, from their antiderivatives written with the companion solution
``nu`` (``method="continuation"``):

    gamma   = nu / (2 mu) + c(0)/2
    delta   = I / mu
    epsilon = J - nu * delta
    kappa   = nu I^2 / (2 mu) - K

where ``I = int (f - c g) mu + g mu'``, ``J = int (f - c g) nu + g nu'`` and
``K = int I J'``.  ``riccati_oracle`` integrates the six coupled ODEs instead
and exists to cross-check both routes.
"""

from dataclasses import dataclass
import math

import numpy as np
from scipy.integrate import quad, solve_ivp

from .characteristic import find_turning_points, solve_characteristic
from .errors import CausticError, NumericalError, SpecError

__all__ = [
    "MehlerPhase",
    "phase_coefficients",
    "phases_at",
    "riccati_oracle",
    "residual_check",
    "CAUSTIC_TOL",
]

CAUSTIC_TOL = 1e-6
QUAD_TOL = 1e-11
# quotient formulas lose accuracy once |mu'| gets this small on [0, t]
TURNING_GUARD = 1e-2


@dataclass(frozen=True)
class MehlerPhase:
    t: float
    alpha: float
    beta: float
    gamma: float
    delta: float
    epsilon: float
    kappa: float
    mu: float
    mu_prime: float
    sigma: float
    maslov: object = 0
    method: str = "quadrature"

    def as_tuple(self):
        return (self.alpha, self.beta, self.gamma, self.delta, self.epsilon, self.kappa)

    def __iter__(self):
        return iter(self.as_tuple())


def _guard(mu, dmu, t, axis, tol=CAUSTIC_TOL):
    if abs(mu) <= tol * max(1.0, abs(dmu)):
        raise CausticError(f"t={t:.12g} lies on a caustic of axis {axis} (mu={mu:.3g})", time=t, axis=axis)


def _quad(fn, a, b, points):
    val, err = quad(fn, a, b, epsabs=QUAD_TOL, epsrel=QUAD_TOL, limit=400,
                    points=points or None)
    if not np.isfinite(val) or err > 1e3 * max(QUAD_TOL, QUAD_TOL * abs(val)):
        raise NumericalError(f"quadrature did not converge on [{a}, {b}] (estimate {err:.2e})")
    return val


class _Forcing:
    """Running integrals I, J, K of the inhomogeneous terms, with dense output."""

    def __init__(self, spec, sol, axis, t):
        ax = spec.axes[axis]
        f, c, g = ax.f, ax.c, ax.g
        self.t = t

        def rhs(tau, y):
            mu, dmu, nu, dnu = sol.evaluate(tau)
            src = f(tau) - c(tau) * g(tau)
            gv = g(tau)
            dj = src * nu + gv * dnu
            return [src * mu + gv * dmu, dj, y[0] * dj]

        cuts = [b for b in ax.breakpoints() if 0 < b < t]
        edges = [0.0, *cuts, t]
        y = np.zeros(3)
        self._segments = []
        for a, b in zip(edges, edges[1:]):
            res = solve_ivp(rhs, (a, b), y, method="DOP853", rtol=1e-12, atol=1e-14,
                            dense_output=True)
            if not res.success:
                raise NumericalError(f"forcing integrals failed: {res.message}")
            self._segments.append((a, res.sol))
            y = res.y[:, -1]
        self._starts = np.array([s[0] for s in self._segments])

    def __call__(self, tau):
        k = max(int(np.searchsorted(self._starts, tau, side="right")) - 1, 0)
        return self._segments[k][1](tau)


def phase_coefficients(spec, sol, axis, t, caustic_tol=CAUSTIC_TOL):
    """Phase coefficients of ``axis`` at time ``t`` from its characteristic solution."""
    if not 0 < t <= sol.t_max * (1 + 1e-12):
        raise SpecError(f"t={t} outside (0, {sol.t_max}]")
    t = min(float(t), sol.t_max)
    ax = spec.axes[axis]
    mu, dmu, nu, dnu = sol.evaluate(t)
    # the zero of mu at t=0 is the initial-data limit, not a caustic
    if sol.caustics and t > sol.caustics[0] / 2:
        _guard(mu, dmu, t, axis, caustic_tol)
    elif mu == 0.0:
        raise SpecError("t is too small to resolve mu(t)")
    sigma = sol.sigma
    c0 = float(ax.c(0.0))
    alpha = dmu / (2.0 * mu) - float(ax.c(t)) / 2.0
    beta = -1.0 / mu
    forced = not (ax.f.is_zero and ax.g.is_zero)
    maslov = sum(1 for z in sol.caustics if z < t)

    window = (sol.t >= 0) & (sol.t <= t)
    min_dmu = min(np.min(np.abs(sol.mu_prime[window])), abs(dmu))
    use_quad = min_dmu > TURNING_GUARD and not find_turning_points(sol, (0.0, t))

    if use_quad:
        def dmu_at(tau):
            return sol.evaluate(tau)[1]

        pts = [b for b in ax.breakpoints() if 0 < b < t]
        gamma = 1.0 / (2.0 * mu * dmu) - 2.0 * _quad(lambda s: sigma(s) / dmu_at(s) ** 2, 0.0, t, pts) + c0 / 2.0
        delta = epsilon = kappa = 0.0
        if forced:
            fc = _Forcing(spec, sol, axis, t)
            f, c, g = ax.f, ax.c, ax.g

            def src(s):
                return f(s) - c(s) * g(s)

            def lin(s):
                m, dm, _, _ = sol.evaluate(s)
                return src(s) * m + g(s) * dm

            # mu(s) * delta(s) equals the running integral I(s)
            delta = _quad(lin, 0.0, t, pts) / mu
            epsilon = (-delta / dmu
                       + 4.0 * _quad(lambda s: fc(s)[0] * sigma(s) / dmu_at(s) ** 2, 0.0, t, pts)
                       + _quad(lambda s: src(s) / dmu_at(s), 0.0, t, pts))
            kappa = (mu * delta ** 2 / (2.0 * dmu)
                     - 2.0 * _quad(lambda s: sigma(s) * fc(s)[0] ** 2 / dmu_at(s) ** 2, 0.0, t, pts)
                     - _quad(lambda s: fc(s)[0] * src(s) / dmu_at(s), 0.0, t, pts))
        method = "quadrature"
    else:
        gamma = nu / (2.0 * mu) + c0 / 2.0
        delta = epsilon = kappa = 0.0
        if forced:
            i_, j_, k_ = _Forcing(spec, sol, axis, t)(t)
            delta = i_ / mu
            epsilon = j_ - nu * delta
            kappa = nu * i_ ** 2 / (2.0 * mu) - k_
        method = "continuation"

    return MehlerPhase(t, float(alpha), float(beta), float(gamma), float(delta), float(epsilon),
                       float(kappa), float(mu), float(dmu), float(sigma(t)), maslov, method)


def phases_at(spec, t, sols=None, convention="table"):
    """Phase coefficients of every axis at time ``t``."""
    if sols is None:
        sols = [solve_characteristic(spec, j, t, convention=convention) for j in range(spec.dimension)]
    return [phase_coefficients(spec, sols[j], j, t) for j in range(spec.dimension)]


def _riccati_rhs(ax, convention):
    half = {"table": 0.5, "printed": 1.0}[convention]

    def rhs(t, y):
        a, b, g, d, e, k = y
        bb, cc, ff, gg = ax.b(t), ax.c(t), ax.f(t), ax.g(t)
        w = cc + 2.0 * a
        return [
            -half * bb - 2.0 * cc * a - 2.0 * a * a,
            -w * b,
            -0.5 * b * b,
            -w * d + ff + 2.0 * a * gg,
            (gg - d) * b,
            gg * d - 0.5 * d * d,
        ]

    return rhs


def riccati_oracle(spec, axis, t0, t, sol=None, convention="table"):
    """Integrate the coupled phase ODEs from ``t0`` to ``t``.

    Initial values are taken from :func:`phase_coefficients` at ``t0``.
    """
    if not 0 < t0 <= 0.01:
        raise SpecError(f"t0 must lie in (0, 0.01], got {t0}")
    if t <= t0:
        raise SpecError("t must exceed t0")
    if sol is None or sol.t_max < t:
        sol = solve_characteristic(spec, axis, t, convention=convention)
    hits = [z for z in sol.caustics if t0 <= z <= t]
    if hits:
        raise CausticError(f"caustic at t={hits[0]:.10g} inside [{t0}, {t}]: alpha blows up",
                           time=hits[0], axis=axis)
    start = phase_coefficients(spec, sol, axis, t0)
    ax = spec.axes[axis]
    cuts = [b for b in ax.breakpoints() if t0 < b < t]
    edges = [t0, *cuts, t]
    y = np.array(start.as_tuple())
    rhs = _riccati_rhs(ax, convention)
    for a, b in zip(edges, edges[1:]):
        res = solve_ivp(rhs, (a, b), y, method="DOP853", rtol=1e-12, atol=1e-12)
        if not res.success:
            raise NumericalError(f"Riccati integration failed on [{a}, {b}]: {res.message}")
        y = res.y[:, -1]
    alpha, beta, gamma, delta, epsilon, kappa = (float(v) for v in y)
    mu = -1.0 / beta
    dmu = 2.0 * mu * (alpha + float(ax.c(t)) / 2.0)
    return MehlerPhase(float(t), alpha, beta, gamma, delta, epsilon, kappa, mu, dmu,
                       float(sol.sigma(t)), start.maslov, "riccati")


def _derivative(values, dt):
    v = np.asarray(values)
    if len(v) >= 5:
        d = (v[:-4] - 8 * v[1:-3] + 8 * v[3:-1] - v[4:]) / (12.0 * dt)
        return d, slice(2, -2)
    return (v[2:] - v[:-2]) / (2.0 * dt), slice(1, -1)


def residual_check(spec, phases, axis=0, convention="table"):
    """Largest residual of the six phase ODEs along a uniformly sampled trajectory.

    Time derivatives use central differences (fourth order when at least five
    samples are given).
    """
    if len(phases) < 3:
        raise SpecError("residual check needs at least 3 samples")
    ts = np.array([p.t for p in phases])
    steps = np.diff(ts)
    dt = steps.mean()
    if np.max(np.abs(steps - dt)) > 1e-9 * max(1.0, abs(dt)):
        raise SpecError("residual check needs uniform time sampling")
    cols = np.array([p.as_tuple() for p in phases]).T
    ax = spec.axes[axis]
    half = {"table": 0.5, "printed": 1.0}[convention]
    derivs = []
    for col in cols:
        d, sl = _derivative(col, dt)
        derivs.append(d)
    a, b, g, d, e, k = (col[sl] for col in cols)
    tt = ts[sl]
    bb, cc, ff, gg = (np.asarray(fn(tt)) + 0.0 * tt for fn in (ax.b, ax.c, ax.f, ax.g))
    w = cc + 2 * a
    res = [
        derivs[0] + half * bb + 2 * cc * a + 2 * a * a,
        derivs[1] + w * b,
        derivs[2] + 0.5 * b * b,
        derivs[3] + w * d - ff - 2 * a * gg,
        derivs[4] - (gg - d) * b,
        derivs[5] - gg * d + 0.5 * d * d,
    ]
    return float(max(np.max(np.abs(r)) for r in res))
