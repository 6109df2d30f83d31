"""Applying the evolution operator to sampled wavefunctions.

Each axis of the propagator is ``P exp(i(alpha x^2 + beta x y + gamma y^2 +
delta x + epsilon y + kappa))``.  Two exactly unitary discretizations are
available per axis; the one that best resolves the state's phase-space box
is chosen (see ``_plan_axis``):

* scaled: input chirp, centered DFT, output chirp.  The output lives on a
  grid of spacing ``2 pi |mu| / (N dx)`` (Fresnel scaling).
* convolution: ``beta x y`` is rewritten through ``(x -/+ y)^2`` and the
  resulting free-particle convolution is applied by its Fourier multiplier
  on the input grid.  Suited to small ``|mu|`` (near-identity operator).

``apply_direct`` sums the kernel matrix and serves as the oracle.
"""

from dataclasses import dataclass
import cmath
import math
import warnings

import numpy as np

from .characteristic import solve_characteristic
from .errors import CausticError, ResolutionError, SpecError
from .grid import GridState, apply_along, resample
from .hamiltonian import require_pipeline
from .kernel import eval_two_time_kernel, prefactor
from .mehler import CAUSTIC_TOL, phase_coefficients

__all__ = [
    "AxisOperator",
    "ResolutionWarning",
    "natural_grid",
    "apply_direct",
    "apply_inverse_direct",
    "apply_fast",
    "apply_inverse_fast",
    "propagate",
    "two_time_apply",
    "dispersive_sup_check",
    "plan_hops",
    "hop_phases",
]

EDGE_TOL = 1e-12


class ResolutionWarning(UserWarning):
    """The grid does not resolve the requested operation well."""


@dataclass(frozen=True)
class AxisOperator:
    """One-axis Gaussian integral operator (forward kernel or its inverse)."""

    alpha: float
    beta: float
    gamma: float
    delta: float
    epsilon: float
    kappa: float
    pref: complex

    @classmethod
    def from_phase(cls, p):
        return cls(p.alpha, p.beta, p.gamma, p.delta, p.epsilon, p.kappa, prefactor(p))

    @property
    def mu(self):
        return -1.0 / self.beta

    def inverse(self):
        """Kernel ``conj(K(y, x))``."""
        return AxisOperator(-self.gamma, -self.beta, -self.alpha, -self.epsilon, -self.delta,
                            -self.kappa, complex(np.conj(self.pref)))

    def kernel(self, x, y):
        x = np.asarray(x)[:, None]
        y = np.asarray(y)[None, :]
        return self.pref * np.exp(1j * (self.alpha * x * x + self.beta * x * y + self.gamma * y * y
                                        + self.delta * x + self.epsilon * y + self.kappa))


def _ops(phases, inverse=False):
    ops = [AxisOperator.from_phase(p) for p in (phases if isinstance(phases, (list, tuple)) else [phases])]
    return [o.inverse() for o in ops] if inverse else ops


SUPPORT_TOL = 1e-10


def _support(values, grid, j):
    """Phase-space box ``(y_lo, y_hi, k_lo, k_hi)`` holding the state along axis ``j``."""
    moved = np.moveaxis(values, j, -1).reshape(-1, grid.n[j])
    rho = np.sum(np.abs(moved) ** 2, axis=0)
    y = grid.axis_points(j)
    if rho.max() == 0:
        return grid.center[j], grid.center[j], 0.0, 0.0
    idx = np.nonzero(rho > SUPPORT_TOL ** 2 * rho.max())[0]
    spec = np.sum(np.abs(np.fft.fft(moved, axis=-1)) ** 2, axis=0)
    k = grid.frequencies(j)
    kk = k[spec > SUPPORT_TOL ** 2 * spec.max()]
    return y[idx[0]], y[idx[-1]], kk.min(), kk.max()


def _corners(box):
    y_lo, y_hi, k_lo, k_hi = box
    y = np.array([y_lo, y_lo, y_hi, y_hi])
    k = np.array([k_lo, k_hi, k_lo, k_hi])
    return y, k


@dataclass(frozen=True)
class _Plan:
    kind: str
    score: float
    center: float
    spacing: float
    sign: int = 1


def _plan_axis(op, grid, j, box, regime="auto"):
    """Pick the discretization of one axis and report how well it resolves the state.

    Rays of the Gaussian kernel map ``(y, k)`` to ``x = mu (k + 2 gamma y + epsilon)``
    with outgoing frequency ``2 alpha x + beta y + delta``.  The score is the
    largest frequency relative to the Nyquist limit (or position relative to
    the grid half-width) over the corners of the state's phase-space box; a
    score above one means aliasing or truncation.
    """
    n, h, c = grid.n[j], grid.spacing[j], grid.center[j]
    mu = op.mu
    y, k = _corners(box)
    xi = k + 2.0 * op.gamma * y + op.epsilon
    x = mu * xi
    k_out = 2.0 * op.alpha * x + op.beta * y + op.delta

    xi_c = 0.5 * (xi.min() + xi.max())
    hx = 2.0 * math.pi * abs(mu) / (n * h)
    scaled = _Plan("scaled", float(max(np.max(np.abs(xi - xi_c)) * h / math.pi,
                                      np.max(np.abs(k_out)) * hx / math.pi)), mu * xi_c, hx)

    if regime == "scaled":
        return scaled
    half_width = n * h / 2.0
    best = scaled if regime == "auto" else None
    for sign in (1, -1):
        a_in = op.gamma + sign * op.beta / 2.0
        inner = k + 2.0 * a_in * y + op.epsilon
        score = float(max(np.max(np.abs(inner)) * h / math.pi,
                          np.max(np.abs(k_out)) * h / math.pi,
                          np.max(np.abs(x - c)) / half_width))
        if best is None or score < best.score:
            best = _Plan("conv", score, c, h, sign)
    return best


REGIMES = ("auto", "scaled", "conv")


def _plans(ops, state, regime="auto"):
    if regime not in REGIMES:
        raise SpecError(f"unknown regime {regime!r}; expected one of {REGIMES}")
    return [_plan_axis(op, state.grid, j, _support(state.values, state.grid, j), regime)
            for j, op in enumerate(ops)]


def natural_grid(phases, state, inverse=False, regime="auto"):
    """Grid on which the fast path returns the propagated ``state``."""
    out = state.grid
    for j, plan in enumerate(_plans(_ops(phases, inverse), state, regime)):
        out = out.with_axis(j, plan.center, plan.spacing)
    return out


def _check_input(state, ndim):
    if state.values.size == 0:
        raise SpecError("empty grid")
    if ndim != state.dimension:
        raise SpecError(f"{ndim} phase sets for a {state.dimension}-dimensional state")


def _edge_warning(state):
    v = np.abs(state.values)
    peak = v.max()
    if peak == 0:
        return
    for j in range(state.dimension):
        m = np.moveaxis(v, j, 0)
        edge = max(m[0].max(), m[-1].max())
        if edge > EDGE_TOL * peak:
            warnings.warn(f"state does not decay at the edges of axis {j} "
                          f"(edge/peak = {edge / peak:.1e})", ResolutionWarning, stacklevel=3)
            return


def _direct(ops, state, out_grid):
    _check_input(state, len(ops))
    _edge_warning(state)
    if out_grid is None:
        out_grid = state.grid
        for j, plan in enumerate(_plans(ops, state)):
            out_grid = out_grid.with_axis(j, plan.center, plan.spacing)
    vals = state.values
    for j, op in enumerate(ops):
        k = op.kernel(out_grid.axis_points(j), state.grid.axis_points(j)) * state.grid.spacing[j]
        vals = apply_along(vals, j, k)
    return GridState(out_grid, vals, state.t, state.norm_log)


def apply_direct(phases, state, out_grid=None):
    """Trapezoidal quadrature of the kernel integral (O(N^2) per axis).

    The output grid defaults to the one used by :func:`apply_fast`.
    """
    return _direct(_ops(phases), state, out_grid)


def apply_inverse_direct(phases, state, out_grid=None):
    return _direct(_ops(phases, inverse=True), state, out_grid)


def _fast_axis(op, plan, u, grid, j):
    """Apply ``op`` along axis ``j`` following ``plan``."""
    n, h, c = grid.n[j], grid.spacing[j], grid.center[j]
    y = grid.axis_points(j)
    moved = np.moveaxis(u, j, -1)
    if plan.kind == "scaled":
        xc, hx = plan.center, plan.spacing
        x = xc + (np.arange(n) - n // 2) * hx
        m = np.arange(n) - n // 2
        # beta x y = beta x y_c + beta x_c m h + (centered DFT kernel)
        pre = np.exp(1j * (op.gamma * y * y + op.epsilon * y + op.beta * xc * m * h))
        v = moved * pre
        if op.mu > 0:
            w = np.fft.fftshift(np.fft.fft(np.fft.ifftshift(v, axes=-1), axis=-1), axes=-1)
        else:
            w = n * np.fft.fftshift(np.fft.ifft(np.fft.ifftshift(v, axes=-1), axis=-1), axes=-1)
        post = op.pref * h * np.exp(1j * (op.alpha * x * x + op.delta * x + op.kappa + op.beta * c * x))
        return np.moveaxis(w * post, -1, j)

    # beta x y = sign (x - sign y)^2 / (2 mu) + (sign beta / 2)(x^2 + y^2)
    sign = plan.sign
    tau = sign * op.mu
    a_in = op.gamma + sign * op.beta / 2.0
    a_out = op.alpha + sign * op.beta / 2.0
    k = grid.frequencies(j)
    v = moved * np.exp(1j * (a_in * y * y + op.epsilon * y))
    mult = np.exp(-1j * tau * k * k / 2.0)
    if sign < 0:
        # reflect y -> -y; the reflected samples sit at -c + (m - N/2) h, shift back by 2c
        v = np.roll(v[..., ::-1], 1, axis=-1)
        mult = mult * np.exp(2j * c * k)
    w = np.fft.ifft(np.fft.fft(v, axis=-1) * mult, axis=-1)
    scale = op.pref * cmath.sqrt(2j * math.pi * tau)
    w = w * scale * np.exp(1j * (a_out * y * y + op.delta * y + op.kappa))
    return np.moveaxis(w, -1, j)


def _fast(ops, state, plans=None, warn=True, regime="auto"):
    _check_input(state, len(ops))
    plans = _plans(ops, state, regime) if plans is None else plans
    vals = state.values
    grid = state.grid
    for j, (op, plan) in enumerate(zip(ops, plans)):
        if warn and plan.score > 1.0:
            warnings.warn(f"axis {j}: grid does not resolve the propagated state "
                          f"(score {plan.score:.2f}, |mu|={abs(op.mu):.3g})", ResolutionWarning, stacklevel=3)
        vals = _fast_axis(op, plan, vals, grid, j)
        grid = grid.with_axis(j, plan.center, plan.spacing)
    return GridState(grid, vals, state.t, state.norm_log)


def apply_fast(phases, state, regime="auto"):
    """Chirp-Fourier application of the propagator, O(N log N) per axis.

    ``regime`` forces the scaled (``"scaled"``) or same-grid convolution
    (``"conv"``) discretization; ``"auto"`` picks the better resolved one.
    A ``ResolutionWarning`` is issued when the state is not resolved.
    """
    return _fast(_ops(phases), state, regime=regime)


def apply_inverse_fast(phases, state, regime="auto"):
    return _fast(_ops(phases, inverse=True), state, regime=regime)


# --- whole pipeline ---------------------------------------------------------

def _guarded(mu, dmu):
    return abs(mu) <= CAUSTIC_TOL * max(1.0, abs(dmu))


def hop_phases(spec, s, t):
    """Phase coefficients of ``U(t, s)`` (``t > s``) for every axis."""
    sh = spec.shifted(s) if s else spec
    tau = t - s
    out = []
    for j in range(spec.dimension):
        sol = solve_characteristic(sh, j, tau)
        out.append(phase_coefficients(sh, sol, j, tau))
    return out


def plan_hops(spec, s, t, allow_caustic_endpoint=False):
    """Split ``[s, t]`` into hops free of caustics.

    A caustic strictly inside a hop is avoided by stopping halfway to it.
    """
    if t <= s:
        raise SpecError("plan_hops expects t > s")
    hops = []
    a = s
    for _ in range(10000):
        sh = spec.shifted(a) if a else spec
        tau = t - a
        first = None
        at_end = False
        for j in range(spec.dimension):
            sol = solve_characteristic(sh, j, tau)
            mu, dmu, _, _ = sol.evaluate(tau)
            if _guarded(mu, dmu):
                at_end = True
            inner = [z for z in sol.caustics if z < tau * (1 - 1e-9) and not (at_end and abs(z - tau) < 1e-6)]
            if inner:
                first = inner[0] if first is None else min(first, inner[0])
        if at_end and a == s and not allow_caustic_endpoint:
            raise CausticError(f"t={t:.12g} is a caustic of the evolution from s={s:.12g}", time=t)
        if first is None and not at_end:
            hops.append((a, t))
            return hops
        step = first / 2 if first is not None else tau / 2
        hops.append((a, a + step))
        a = a + step
    raise ResolutionError("could not split the time interval into caustic-free hops")


def _own_score(state):
    """Score of the identity map: how close the state already is to the grid limits."""
    g = state.grid
    out = 0.0
    for j in range(g.dimension):
        y, k = _corners(_support(state.values, g, j))
        out = max(out, float(np.max(np.abs(k)) * g.spacing[j] / math.pi),
                  float(np.max(np.abs(y - g.center[j])) / (g.n[j] * g.spacing[j] / 2.0)))
    return out


def _hop_score(spec, state, a, b, inverse):
    ops = _ops(hop_phases(spec, a, b), inverse)
    plans = _plans(ops, state)
    return ops, plans, max(p.score for p in plans)


def _apply_hop(spec, state, a, b, method, inverse=False, depth=0, _scored=None):
    ops, plans, score = _scored or _hop_score(spec, state, a, b, inverse)
    if score > 1.0 and depth < 12 and _own_score(state) < 1.0:
        m = 0.5 * (a + b)
        first, second = ((m, b), (a, m)) if inverse else ((a, m), (m, b))
        # halving only helps when the shorter hop is better resolved
        scored = _hop_score(spec, state, *first, inverse)
        if scored[2] < score:
            mid = _apply_hop(spec, state, *first, method, inverse, depth + 1, scored)
            return _apply_hop(spec, mid, *second, method, inverse, depth + 1)
    if method == "fast":
        return _fast(ops, state, plans)
    if method == "direct":
        return _direct(ops, state, None)
    raise SpecError(f"unknown method {method!r}; expected 'fast' or 'direct'")


def propagate(spec, state, t, s=None, method="fast", out_grid=None, allow_caustic_endpoint=False):
    """Evolve ``state`` from time ``s`` (default ``state.t``) to ``t``.

    Parameters
    ----------
    spec : HamiltonianSpec
    state : GridState
    t : float
        Target time; may be earlier than ``s``.
    method : {"fast", "direct"}
    out_grid : Grid, optional
        Resample the result onto this grid.  By default the result stays on
        the grid produced by the last hop.
    allow_caustic_endpoint : bool
        Permit ``t`` on a caustic of the evolution from ``s``; the interval is
        split so that no hop ends on it.

    Returns
    -------
    GridState
    """
    require_pipeline(spec)
    s = state.t if s is None else float(s)
    t = float(t)
    if method not in ("fast", "direct"):
        raise SpecError(f"unknown method {method!r}; expected 'fast' or 'direct'")
    for v in (s, t):
        if not 0 <= v <= spec.t_max:
            raise SpecError(f"time {v} outside coefficient validity [0, {spec.t_max}]")
    out = state
    if t > s:
        for a, b in plan_hops(spec, s, t, allow_caustic_endpoint):
            out = _apply_hop(spec, out, a, b, method)
    elif t < s:
        for a, b in reversed(plan_hops(spec, t, s, allow_caustic_endpoint)):
            out = _apply_hop(spec, out, a, b, method, inverse=True)
    out = GridState(out.grid, out.values, t, state.norm_log)
    if out_grid is not None:
        out = resample(out, out_grid)
    return out


def two_time_apply(spec, state, s, t, method="fast", out_grid=None):
    """Evolve a state given at time ``s`` to time ``t`` through ``U(t) U(s)^{-1}``.

    ``method="direct"`` sums the closed-form two-time kernel;
    ``method="fast"`` applies the inverse at ``s`` and the forward operator at
    ``t`` as two factorized passes.
    """
    require_pipeline(spec)
    s, t = float(s), float(t)
    if s == t:
        out = GridState(state.grid, state.values, t, state.norm_log)
        return out if out_grid is None else resample(out, out_grid)
    if method not in ("fast", "direct"):
        raise SpecError(f"unknown method {method!r}; expected 'fast' or 'direct'")
    tmax = max(s, t)
    sols = [solve_characteristic(spec, j, tmax) for j in range(spec.dimension)]
    pt = [phase_coefficients(spec, sols[j], j, t) for j in range(spec.dimension)] if t > 0 else None
    ps = [phase_coefficients(spec, sols[j], j, s) for j in range(spec.dimension)] if s > 0 else None
    if method == "fast":
        mid = state if ps is None else _fast(_ops(ps, inverse=True), state)
        out = mid if pt is None else _fast(_ops(pt), mid)
    else:
        if pt is None or ps is None:
            ops = _ops(pt if ps is None else ps, inverse=pt is None)
            out = _direct(ops, state, out_grid)
        else:
            _check_input(state, len(pt))
            _edge_warning(state)
            grid = out_grid if out_grid is not None else state.grid
            vals = state.values
            for j in range(spec.dimension):
                x = grid.axis_points(j)[:, None]
                y = state.grid.axis_points(j)[None, :]
                k = eval_two_time_kernel([pt[j]], [ps[j]], x, y) * state.grid.spacing[j]
                vals = apply_along(vals, j, np.asarray(k))
            out = GridState(grid, vals, t, state.norm_log)
    out = GridState(out.grid, out.values, t, state.norm_log)
    if out_grid is not None and not out.grid.same_points(out_grid):
        out = resample(out, out_grid)
    return out


def dispersive_sup_check(spec, state, s, t, method="direct"):
    """Sup norm of ``U(t, s) phi`` and the bound ``prod_j (2 pi |mu_j|)^(-1/2) ||phi||_1``.

    ``mu_j`` is the characteristic function of the evolution from ``s``.
    The direct sum obeys the discrete bound exactly (triangle inequality).
    """
    require_pipeline(spec)
    if t <= s:
        raise SpecError("dispersive check needs t > s")
    phases = hop_phases(spec, s, t)
    for p in phases:
        if _guarded(p.mu, p.mu_prime):
            raise CausticError(f"t - s = {t - s:.12g} is a caustic", time=t)
    l1 = state.l1_norm()
    rhs = l1 * float(np.prod([(2 * math.pi * abs(p.mu)) ** -0.5 for p in phases]))
    if method == "direct":
        out = apply_direct(phases, state)
    elif method == "fast":
        out = apply_fast(phases, state)
    else:
        raise SpecError(f"unknown method {method!r}")
    return out.sup_norm(), rhs
