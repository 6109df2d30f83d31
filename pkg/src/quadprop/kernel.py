"""Pointwise evaluation of the Gaussian propagator and its relatives.

Kernels are separable: every evaluator is a product over axes of a prefactor
and a unit-modulus exponential built from the per-axis ``MehlerPhase``.
"""

from dataclasses import dataclass
import cmath
import math

import numpy as np

from .errors import CausticError, DegenerateError, SpecError
from .mehler import MehlerPhase

__all__ = [
    "KernelPoint",
    "prefactor",
    "eval_kernel",
    "kernel_point",
    "eval_inverse_kernel",
    "eval_two_time_kernel",
    "table1_kernel",
    "TABLE1_NAMES",
]

TABLE1_NAMES = ("G0", "G1", "G2", "G3", "G4", "G6", "G7", "G8", "GCK")


@dataclass(frozen=True)
class KernelPoint:
    value: complex
    magnitude: float
    branch_phase: float
    branch: str


def _as_list(phases):
    if isinstance(phases, MehlerPhase):
        return [phases]
    return list(phases)


def _check(p):
    if p.mu == 0.0 or not math.isfinite(p.mu):
        raise CausticError(f"kernel requested on a caustic (t={p.t:.12g}, mu={p.mu:.3g})", time=p.t)


def prefactor(p):
    """``(2 pi i mu)^(-1/2)`` for one axis.

    With ``p.maslov`` an integer the square root is continued along the path
    from ``t=0``: ``(2 pi |mu|)^(-1/2) exp(-i pi/4 - i pi m/2)``.  With
    ``p.maslov is None`` the principal branch is used.
    """
    _check(p)
    if p.maslov is None:
        return 1.0 / cmath.sqrt(2j * math.pi * p.mu)
    m = int(p.maslov)
    return cmath.exp(-1j * (math.pi / 4 + math.pi * m / 2)) / math.sqrt(2 * math.pi * abs(p.mu))


def _coords(x, d):
    x = np.asarray(x, dtype=float)
    if d == 1:
        return [x]
    if x.shape[-1] != d:
        raise SpecError(f"points must have trailing dimension {d}")
    return [x[..., j] for j in range(d)]


def _phase(p, x, y):
    return (p.alpha * x * x + p.beta * x * y + p.gamma * y * y
            + p.delta * x + p.epsilon * y + p.kappa)


def _scalar(v):
    v = np.asarray(v)
    return complex(v) if v.ndim == 0 else v


def eval_kernel(phases, x, y):
    """Propagator ``G(x, y, t)`` at points ``x`` (output) and ``y`` (input)."""
    ph = _as_list(phases)
    xs, ys = _coords(x, len(ph)), _coords(y, len(ph))
    pref = 1.0 + 0j
    total = 0.0
    for p, xj, yj in zip(ph, xs, ys):
        pref *= prefactor(p)
        total = total + _phase(p, xj, yj)
    return _scalar(pref * np.exp(1j * np.asarray(total)))


def kernel_point(phases, x, y):
    """Single-point evaluation with the prefactor modulus and branch phase recorded."""
    ph = _as_list(phases)
    value = eval_kernel(ph, x, y)
    pref = np.prod([prefactor(p) for p in ph])
    branch = "principal" if any(p.maslov is None for p in ph) else "continued"
    return KernelPoint(complex(value), float(abs(pref)), float(np.angle(pref)), branch)


def eval_inverse_kernel(phases, x, y):
    """Kernel of the inverse evolution, ``conj(G(y, x, t))``."""
    ph = _as_list(phases)
    xs, ys = _coords(x, len(ph)), _coords(y, len(ph))
    pref = 1.0 + 0j
    total = 0.0
    for p, xj, yj in zip(ph, xs, ys):
        pref *= np.conj(prefactor(p))
        total = total + _phase(p, yj, xj)
    return _scalar(pref * np.exp(-1j * np.asarray(total)))


def eval_two_time_kernel(phases_t, phases_s, x, y, gap_tol=1e-12):
    """Kernel of ``U(t) U(s)^{-1}``, the Gaussian integral over the intermediate point done in closed form."""
    pt, ps = _as_list(phases_t), _as_list(phases_s)
    if len(pt) != len(ps):
        raise SpecError("phase lists differ in dimension")
    xs, ys = _coords(x, len(pt)), _coords(y, len(pt))
    out = 1.0 + 0j
    for a, b, xj, yj in zip(pt, ps, xs, ys):
        gap = a.gamma - b.gamma
        if abs(gap) <= gap_tol * max(1.0, abs(a.gamma), abs(b.gamma)):
            raise DegenerateError(f"gamma(t) = gamma(s) = {a.gamma:.6g}: kernel is a delta distribution")
        pref = prefactor(a) * np.conj(prefactor(b))
        pref *= math.sqrt(math.pi / abs(gap)) * cmath.exp(1j * math.pi / 4 * math.copysign(1.0, gap))
        lin = a.beta * xj - b.beta * yj + a.epsilon - b.epsilon
        phase = (a.alpha * xj * xj - b.alpha * yj * yj + a.delta * xj - b.delta * yj
                 + a.kappa - b.kappa - lin * lin / (4.0 * gap))
        out = out * pref * np.exp(1j * phase)
    return _scalar(out)


def _sqrt_inv(z):
    z = np.asarray(z, dtype=complex)
    return 1.0 / np.sqrt(z)


def _nonsingular(val, what, t):
    if np.any(np.abs(val) < 1e-12):
        raise CausticError(f"{what} vanishes at t={t}: closed form is singular", time=t)


def table1_kernel(name, x, y, t, **params):
    """Closed-form reference kernels of the exactly solvable one-dimensional examples.

    Parameters
    ----------
    name : {"G0", "G1", "G2", "G3", "G4", "G6", "G7", "G8", "GCK"}
    x, y : array_like
        Output and input coordinates (broadcast together).
    t : float
    **params
        ``E`` (G1), ``omega`` (G4), ``lam`` and ``omega0`` (G7, GCK), ``k`` (G8).

    Notes
    -----
    Free-particle and constant-field prefactors use ``(2 pi i t)^(-1/2)``;
    oscillator phases use ``2 sin`` / ``2 sinh`` denominators and the G4
    prefactor is ``sqrt(omega / (2 pi i sin(omega t)))``.
    """
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    if t <= 0:
        raise SpecError("t must be positive")
    i = 1j
    if name in ("G0", "G1"):
        val = _sqrt_inv(2 * np.pi * i * t) * np.exp(i * (x - y) ** 2 / (2 * t))
        if name == "G1":
            E = float(params.get("E", 1.0))
            val = val * np.exp(i * E * (x + y) * t / 2 - i * E ** 2 * t ** 3 / 24)
    elif name in ("G2", "G4"):
        w = 1.0 if name == "G2" else float(params.get("omega", 2.0))
        s, c = math.sin(w * t), math.cos(w * t)
        _nonsingular(s, "sin(omega t)", t)
        val = np.sqrt(w + 0j) * _sqrt_inv(2 * np.pi * i * s) * np.exp(
            i * w / (2 * s) * ((x ** 2 + y ** 2) * c - 2 * x * y))
    elif name == "G3":
        s, c = math.sinh(t), math.cosh(t)
        val = _sqrt_inv(2 * np.pi * i * s) * np.exp(i / (2 * s) * ((x ** 2 + y ** 2) * c - 2 * x * y))
    elif name == "G6":
        den = math.cos(t) * math.sinh(t) + math.sin(t) * math.cosh(t)
        _nonsingular(den, "cos t sinh t + sin t cosh t", t)
        num = ((x ** 2 - y ** 2) * math.sin(t) * math.sinh(t) + 2 * x * y
               - (x ** 2 + y ** 2) * math.cos(t) * math.cosh(t))
        val = _sqrt_inv(2 * np.pi * i * den) * np.exp(num / (2 * i * den))
    elif name == "G7":
        lam = float(params.get("lam", 0.6))
        w0 = float(params.get("omega0", 1.0))
        if not w0 ** 2 - lam ** 2 > 0:
            raise SpecError("G7 requires omega0^2 - lam^2 > 0")
        w = math.sqrt(w0 ** 2 - lam ** 2)
        s, c = math.sin(w * t), math.cos(w * t)
        _nonsingular(s, "sin(omega t)", t)
        val = (np.sqrt(w + 0j) * _sqrt_inv(2 * np.pi * i * w0 * s)
               * np.exp(i * w / (2 * w0 * s) * ((x ** 2 + y ** 2) * c - 2 * x * y))
               * np.exp(i * lam / (2 * w0) * (x ** 2 - y ** 2)))
    elif name == "G8":
        k = float(params.get("k", 1.0))
        if k <= 0:
            raise SpecError("G8 requires k > 0")
        sh = math.sinh(k * t)
        val = (math.sqrt(k) * math.exp(k * t / 2) * _sqrt_inv(2 * np.pi * i * sh)
               * np.exp(i * k * math.exp(k * t) * (math.exp(-k * t) * x - math.exp(k * t) * y) ** 2 / (4 * sh)))
    elif name == "GCK":
        lam = float(params.get("lam", 0.6))
        w0 = float(params.get("omega0", 1.0))
        w = float(params.get("omega", math.sqrt(max(w0 ** 2 - lam ** 2, 0.0))))
        if w <= 0:
            raise SpecError("GCK requires a positive frequency")
        s, c = math.sin(w * t), math.cos(w * t)
        _nonsingular(s, "sin(omega t)", t)
        a = (w * c - lam * s) / (2 * w0 * s) * math.exp(2 * lam * t)
        b = -w / (w0 * s) * math.exp(lam * t)
        g = (w * c + lam * s) / (2 * w0 * s)
        val = (np.sqrt(w * math.exp(lam * t) + 0j) * _sqrt_inv(2 * np.pi * i * w0 * s)
               * np.exp(i * (a * x ** 2 + b * x * y + g * y ** 2)))
    else:
        raise SpecError(f"unknown reference kernel {name!r}; expected one of {TABLE1_NAMES}")
    return _scalar(val)
