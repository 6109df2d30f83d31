"""Split-step solver for ``i u_t = H(t) u + h(t) |u|^(p-1) u``.

One step of size ``dt`` is the symmetric composition

    N(dt/2) D(dt/2) K(dt/2) V(dt) K(dt/2) D(dt/2) N(dt/2)

of exactly solvable flows: ``N`` the pointwise nonlinear phase, ``D`` the
dilation-translation generated by the ``c`` and ``g`` terms, ``K`` the
kinetic multiplier in frequency space and ``V`` the potential phase.
Coefficients of the linear part are frozen at the step midpoint.
"""

from dataclasses import dataclass, field
import csv
import math

import numpy as np

from .errors import BlowUpError, ResolutionError, SpecError, SubcriticalError
from .grid import GridState, write_binary
from .hamiltonian import CoefficientFn, require_pipeline

__all__ = [
    "Nonlinearity",
    "Trajectory",
    "StrangSolver",
    "subcritical_check",
    "step_strang",
    "solve_nls",
    "mass",
    "centroid",
    "momentum_center",
    "write_trajectory_csv",
    "BLOWUP_FACTOR",
]

BLOWUP_FACTOR = 1e6
SUPPORT_LOSS_TOL = 1e-6
# outer 1/EDGE_DIVISOR of each axis counts as the boundary layer
EDGE_DIVISOR = 32


@dataclass(frozen=True)
class Nonlinearity:
    p: float
    h: CoefficientFn = field(default_factory=lambda: CoefficientFn.constant(1.0))

    def __post_init__(self):
        p = float(self.p)
        if not (math.isfinite(p) and p > 1):
            raise SpecError(f"nonlinearity exponent must exceed 1, got {self.p}")
        object.__setattr__(self, "p", p)
        object.__setattr__(self, "h", CoefficientFn.coerce(self.h))


def subcritical_check(p, d):
    """True iff ``0 < p - 1 < 4/d`` (L2-subcritical power)."""
    return bool(0 < p - 1 < 4.0 / d)


def mass(state):
    """Discrete ``||u||_2^2``."""
    return state.mass()


def centroid(state):
    """Density centroid ``int x |u|^2 / int |u|^2``, one entry per axis."""
    return state.centroid()


# kept under this name for interface compatibility; returns the density centroid
momentum_center = centroid


@dataclass(frozen=True)
class Trajectory:
    """Saved snapshots plus per-step observables.

    ``times``/``states`` hold the saved snapshots; ``step_times``,
    ``masses``, ``centroids`` and ``sups`` are logged after every step
    (index 0 is the initial state).
    """

    times: np.ndarray
    states: tuple
    dt: float
    step_times: np.ndarray
    masses: np.ndarray
    centroids: np.ndarray
    sups: np.ndarray
    diagnostic: str = ""

    def __post_init__(self):
        if len(self.states) == 0:
            raise SpecError("trajectory is empty")
        if np.any(np.diff(self.times) <= 0):
            raise SpecError("trajectory times must be strictly increasing")

    @property
    def final(self):
        return self.states[-1]

    def __len__(self):
        return len(self.states)


class StrangSolver:
    """Stepping state for one Hamiltonian, nonlinearity and grid.

    The dilation stage is a product of chirp and Fourier-multiplier shears,
    so every stage is exactly unitary and mass drift stays at round-off.
    """

    def __init__(self, spec, nl, grid, check_subcritical=True):
        require_pipeline(spec)
        if spec.dimension != grid.dimension:
            raise SpecError("grid and Hamiltonian dimensions differ")
        if nl is not None and check_subcritical and not subcritical_check(nl.p, spec.dimension):
            raise SubcriticalError(
                f"p={nl.p:g} violates the subcritical condition 0 < p - 1 < 4/d "
                f"(d={spec.dimension}, need p < {1 + 4.0 / spec.dimension:g})")
        self.spec = spec
        self.nl = nl
        self.grid = grid
        self._x = [grid.axis_points(j) for j in range(grid.dimension)]
        self._k = [grid.frequencies(j) for j in range(grid.dimension)]
        self._moves = any(not (ax.c.is_zero and ax.g.is_zero) for ax in spec.axes)

    def _nonlinear(self, u, t, tau):
        if self.nl is None:
            return u
        hv = float(self.nl.h(t))
        if hv == 0.0:
            return u
        with np.errstate(over="raise", invalid="raise"):
            try:
                amp = np.abs(u) ** (self.nl.p - 1)
            except FloatingPointError as exc:
                raise BlowUpError(f"overflow in |u|^(p-1) at t={t:.6g}") from exc
        return u * np.exp(-1j * hv * tau * amp)

    def _kinetic(self, u, tau):
        # the pipeline fixes the kinetic coefficient at 1/2
        v = np.fft.fftn(u)
        for j, k in enumerate(self._k):
            shape = [1] * u.ndim
            shape[j] = -1
            v = v * np.exp(-0.5j * tau * k * k).reshape(shape)
        return np.fft.ifftn(v)

    def _potential(self, u, t, tau):
        for j, x in enumerate(self._x):
            ax = self.spec.axes[j]
            b, f = float(ax.b(t)), float(ax.f(t))
            if b == 0.0 and f == 0.0:
                continue
            shape = [1] * u.ndim
            shape[j] = -1
            u = u * np.exp(-1j * tau * (0.5 * b * x * x - f * x)).reshape(shape)
        return u

    def _along(self, u, j, factor):
        shape = [1] * u.ndim
        shape[j] = -1
        return u * factor.reshape(shape)

    def _shift(self, u, j, d):
        # u(x) <- u(x + d), a Fourier multiplier
        v = np.fft.fft(u, axis=j)
        return np.fft.ifft(self._along(v, j, np.exp(1j * d * self._k[j])), axis=j)

    def _squeeze(self, u, j, a):
        """``u(x) <- sqrt(a) u(a x)`` as four shears (chirp, free, chirp, free).

        Every factor is exactly unitary on the grid; the shear parameters are
        O(sqrt|a - 1|) so the chirps stay resolved.
        """
        s = math.sqrt(abs(a - 1.0))
        x2, k2 = self._x[j] ** 2, self._k[j] ** 2
        for q, r in (((a - 1.0) / (a * a * s), -a * s), (-(a - 1.0) / (a * s), s)):
            u = self._along(u, j, np.exp(0.5j * q * x2))
            v = np.fft.fft(u, axis=j)
            u = np.fft.ifft(self._along(v, j, np.exp(-0.5j * r * k2)), axis=j)
        return u

    def _dilation(self, u, t, tau):
        # u(x) <- e^(-c tau/2) u(e^(-c tau) x + shift), exact flow of the c and g terms
        for j in range(len(self._x)):
            ax = self.spec.axes[j]
            c, g = float(ax.c(t)), float(ax.g(t))
            if c == 0.0:
                if g != 0.0:
                    u = self._shift(u, j, g * tau)
                continue
            a = math.exp(-c * tau)
            if g != 0.0:
                u = self._shift(u, j, (g / c) * (1.0 - a))
            if a != 1.0:
                u = self._squeeze(u, j, a)
        return u

    def _edge_fraction(self, u):
        total = float(np.sum(np.abs(u) ** 2))
        worst = 0.0
        for j, n in enumerate(self.grid.n):
            w = max(1, n // EDGE_DIVISOR)
            dens = np.sum(np.abs(np.moveaxis(u, j, 0)) ** 2, axis=tuple(range(1, u.ndim)))
            worst = max(worst, float(dens[:w].sum() + dens[-w:].sum()) / total)
        return worst

    def step(self, state, dt):
        """Advance ``state`` by one symmetric step of size ``dt``."""
        if state.grid != self.grid and not state.grid.same_points(self.grid):
            raise SpecError("state grid differs from solver grid")
        t = state.t
        mid = t + dt / 2
        u = state.values
        u = self._nonlinear(u, t + dt / 4, dt / 2)
        u = self._dilation(u, mid, dt / 2)
        u = self._kinetic(u, dt / 2)
        u = self._potential(u, mid, dt)
        u = self._kinetic(u, dt / 2)
        u = self._dilation(u, mid, dt / 2)
        u = self._nonlinear(u, t + 3 * dt / 4, dt / 2)
        if self._moves and np.any(u):
            frac = self._edge_fraction(u)
            if frac > SUPPORT_LOSS_TOL:
                raise ResolutionError(f"dilation moved the state off the grid at t={t:.6g} "
                                      f"(edge mass fraction {frac:.2e})")
        return GridState(state.grid, u, t + dt, state.norm_log)


def step_strang(spec, nl, state, dt):
    """One symmetric splitting step (builds a throwaway solver)."""
    return StrangSolver(spec, nl, state.grid).step(state, dt)


def solve_nls(spec, nl, u0, T, dt, save_every=1, check_subcritical=True):
    """Integrate from ``u0.t`` over a span ``T`` with ``ceil(T/dt)`` steps of size ``dt``.

    Raises
    ------
    SubcriticalError
        If the exponent violates ``0 < p - 1 < 4/d``.
    BlowUpError
        If ``sup|u|`` exceeds ``1e6`` times its initial value; the truncated
        trajectory is attached to the exception.
    """
    if dt <= 0 or T <= 0:
        raise SpecError("T and dt must be positive")
    if u0.t + T > spec.t_max * (1 + 1e-12):
        raise SpecError(f"final time {u0.t + T} exceeds coefficient validity {spec.t_max}")
    solver = StrangSolver(spec, nl, u0.grid, check_subcritical=check_subcritical)
    nsteps = max(1, int(math.ceil(T / dt - 1e-9)))
    save_every = max(1, int(save_every))
    sup0 = u0.sup_norm()
    step_times = [u0.t]
    masses = [u0.mass()]
    cents = [u0.centroid()]
    sups = [sup0]
    saved_t = [u0.t]
    saved = [u0]
    state = u0

    def build(diag=""):
        return Trajectory(np.array(saved_t), tuple(saved), float(dt), np.array(step_times),
                          np.array(masses), np.array(cents), np.array(sups), diag)

    for n in range(1, nsteps + 1):
        try:
            state = solver.step(state, dt)
        except BlowUpError as exc:
            raise BlowUpError(str(exc), trajectory=build(str(exc))) from exc
        state = GridState(state.grid, state.values, u0.t + n * dt, u0.norm_log)
        sup = state.sup_norm()
        step_times.append(state.t)
        masses.append(state.mass())
        cents.append(state.centroid())
        sups.append(sup)
        if n % save_every == 0 or n == nsteps:
            saved_t.append(state.t)
            saved.append(state)
        if not math.isfinite(sup) or sup > BLOWUP_FACTOR * sup0:
            if saved[-1] is not state:
                saved_t.append(state.t)
                saved.append(state)
            msg = f"blow-up guard: sup|u| grew by more than {BLOWUP_FACTOR:g} at t={state.t:.6g}"
            raise BlowUpError(msg, trajectory=build(msg))
    return build()


def write_trajectory_csv(traj, path):
    """Columns ``t, mass, centroid_0[, ...], sup`` (one row per step)."""
    d = traj.centroids.shape[1]
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["t", "mass"] + [f"centroid_{j}" for j in range(d)] + ["sup"])
        for t, m, c, s in zip(traj.step_times, traj.masses, traj.centroids, traj.sups):
            w.writerow([repr(float(t)), repr(float(m))] + [repr(float(v)) for v in c] + [repr(float(s))])


def write_snapshots(traj, directory, stem="snapshot"):
    """Binary dump of every saved snapshot; returns the written paths."""
    paths = []
    for k, st in enumerate(traj.states):
        path = f"{directory}/{stem}_{k:05d}.bin"
        write_binary(st, path)
        paths.append(path)
    return paths
