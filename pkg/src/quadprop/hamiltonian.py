"""Time-dependent quadratic Hamiltonians.

Per axis j the operator is

    H psi = -1/2 psi'' + b/2 x^2 psi - f x psi + i g psi' - i c/2 (2 x psi' + psi)

with coefficient functions of time b, c, f, g.  The characteristic frequency
of an axis is governed by ``sigma = b/4 - c^2/4 - c'/4``.
"""

from dataclasses import dataclass, field
import math

import numpy as np
from numpy.polynomial import Polynomial

from .errors import SpecError

__all__ = [
    "CoefficientFn",
    "AxisCoefficients",
    "HamiltonianSpec",
    "Diagnostic",
    "sigma_of_t",
    "sigma_function",
    "preset",
    "validate",
    "require_pipeline",
    "PRESETS",
]

KINDS = ("constant", "polynomial", "sinusoidal", "piecewise")
PIPELINE_KINETIC = 0.5


@dataclass(frozen=True)
class CoefficientFn:
    """Analytic coefficient function of time.

    ``params`` depends on ``kind``:

    * constant    -- ``(value,)``
    * polynomial  -- ascending coefficients ``(a0, a1, ...)``
    * sinusoidal  -- ``(amp, freq, phase, offset)``: ``offset + amp*sin(freq*t + phase)``
    * piecewise   -- ``(breakpoints, values)`` with ``len(values) == len(breakpoints) + 1``
    """

    kind: str
    params: tuple

    @classmethod
    def constant(cls, value):
        return cls("constant", (float(value),))

    @classmethod
    def polynomial(cls, coeffs):
        return cls("polynomial", tuple(float(a) for a in coeffs))

    @classmethod
    def sinusoidal(cls, amp, freq, phase=0.0, offset=0.0):
        return cls("sinusoidal", (float(amp), float(freq), float(phase), float(offset)))

    @classmethod
    def piecewise(cls, breakpoints, values):
        return cls(
            "piecewise",
            (tuple(float(b) for b in breakpoints), tuple(float(v) for v in values)),
        )

    @classmethod
    def coerce(cls, value):
        if isinstance(value, CoefficientFn):
            return value
        if isinstance(value, dict):
            return cls.from_dict(value)
        return cls.constant(value)

    def __call__(self, t):
        t = np.asarray(t, dtype=float)
        if self.kind == "constant":
            out = np.full_like(t, self.params[0])
        elif self.kind == "polynomial":
            out = np.polynomial.polynomial.polyval(t, self.params) + 0.0 * t
        elif self.kind == "sinusoidal":
            amp, freq, phase, offset = self.params
            out = offset + amp * np.sin(freq * t + phase)
        elif self.kind == "piecewise":
            bps, vals = self.params
            out = np.asarray(vals)[np.searchsorted(bps, t, side="right")]
        else:
            raise SpecError(f"unknown coefficient kind {self.kind!r}")
        return out if out.ndim else float(out)

    def derivative(self, t):
        t = np.asarray(t, dtype=float)
        if self.kind in ("constant", "piecewise"):
            out = np.zeros_like(t)
        elif self.kind == "polynomial":
            d = np.polynomial.polynomial.polyder(self.params) if len(self.params) > 1 else [0.0]
            out = np.polynomial.polynomial.polyval(t, d) + 0.0 * t
        elif self.kind == "sinusoidal":
            amp, freq, phase, _ = self.params
            out = amp * freq * np.cos(freq * t + phase)
        else:
            raise SpecError(f"unknown coefficient kind {self.kind!r}")
        return out if out.ndim else float(out)

    @property
    def is_constant(self):
        if self.kind == "constant":
            return True
        if self.kind == "polynomial":
            return all(a == 0.0 for a in self.params[1:])
        if self.kind == "sinusoidal":
            return self.params[0] == 0.0 or self.params[1] == 0.0
        if self.kind == "piecewise":
            return len(set(self.params[1])) <= 1
        return False

    @property
    def is_zero(self):
        return self.is_constant and self(0.0) == 0.0

    def breakpoints(self):
        return self.params[0] if self.kind == "piecewise" else ()

    def shifted(self, s):
        """Coefficient function ``t -> self(t + s)``."""
        s = float(s)
        if self.kind == "constant" or s == 0.0:
            return self
        if self.kind == "polynomial":
            p = Polynomial(self.params)(Polynomial([s, 1.0]))
            return CoefficientFn.polynomial(p.coef)
        if self.kind == "sinusoidal":
            amp, freq, phase, offset = self.params
            return CoefficientFn.sinusoidal(amp, freq, phase + freq * s, offset)
        bps, vals = self.params
        return CoefficientFn.piecewise([b - s for b in bps], vals)

    def to_dict(self):
        if self.kind == "piecewise":
            params = {"breakpoints": list(self.params[0]), "values": list(self.params[1])}
        elif self.kind == "sinusoidal":
            params = dict(zip(("amp", "freq", "phase", "offset"), self.params))
        elif self.kind == "polynomial":
            params = {"coeffs": list(self.params)}
        else:
            params = {"value": self.params[0]}
        return {"kind": self.kind, "params": params}

    @classmethod
    def from_dict(cls, doc):
        if not isinstance(doc, dict) or set(doc) - {"kind", "params"}:
            raise SpecError(f"coefficient document must have keys kind/params, got {doc!r}")
        kind = doc.get("kind")
        p = doc.get("params", {})
        try:
            if kind == "constant":
                return cls.constant(p["value"] if isinstance(p, dict) else p)
            if kind == "polynomial":
                return cls.polynomial(p["coeffs"] if isinstance(p, dict) else p)
            if kind == "sinusoidal":
                return cls.sinusoidal(**p)
            if kind == "piecewise":
                return cls.piecewise(p["breakpoints"], p["values"])
        except (KeyError, TypeError) as exc:
            raise SpecError(f"bad parameters for {kind} coefficient: {exc}") from None
        raise SpecError(f"unknown coefficient kind {kind!r}")


ZERO = CoefficientFn.constant(0.0)


@dataclass(frozen=True)
class AxisCoefficients:
    b: CoefficientFn = ZERO
    c: CoefficientFn = ZERO
    f: CoefficientFn = ZERO
    g: CoefficientFn = ZERO

    def __post_init__(self):
        for name in "bcfg":
            object.__setattr__(self, name, CoefficientFn.coerce(getattr(self, name)))

    def shifted(self, s):
        return AxisCoefficients(*(getattr(self, n).shifted(s) for n in "bcfg"))

    def breakpoints(self):
        return sorted(set().union(*(getattr(self, n).breakpoints() for n in "bcfg")))


@dataclass(frozen=True)
class HamiltonianSpec:
    dimension: int
    axes: tuple
    kinetic: float = PIPELINE_KINETIC
    t_max: float = 100.0
    name: str = field(default="custom", compare=False)

    def __post_init__(self):
        object.__setattr__(self, "axes", tuple(self.axes))

    def shifted(self, s):
        """Spec of the Hamiltonian ``H(t + s)``, valid on ``[0, t_max - s]``."""
        if s == 0:
            return self
        return HamiltonianSpec(
            self.dimension,
            tuple(ax.shifted(s) for ax in self.axes),
            self.kinetic,
            self.t_max - s,
            name=f"{self.name}@{s:g}",
        )

    def to_dict(self):
        return {
            "dimension": self.dimension,
            "axes": [{n: getattr(ax, n).to_dict() for n in "bcfg"} for ax in self.axes],
            "kinetic": self.kinetic,
            "t_max": self.t_max,
        }

    @classmethod
    def from_dict(cls, doc):
        allowed = {"dimension", "axes", "kinetic", "t_max", "name"}
        unknown = set(doc) - allowed
        if unknown:
            raise SpecError(f"unknown spec keys: {sorted(unknown)}")
        axes = []
        for ax in doc.get("axes", []):
            bad = set(ax) - set("bcfg")
            if bad:
                raise SpecError(f"unknown axis keys: {sorted(bad)}")
            axes.append(AxisCoefficients(**{n: CoefficientFn.coerce(ax.get(n, 0.0)) for n in "bcfg"}))
        return cls(
            int(doc.get("dimension", len(axes))),
            tuple(axes),
            float(doc.get("kinetic", PIPELINE_KINETIC)),
            float(doc.get("t_max", 100.0)),
            name=doc.get("name", "custom"),
        )


@dataclass(frozen=True)
class Diagnostic:
    axis: object
    field: str
    rule: str
    message: str

    def __str__(self):
        where = "spec" if self.axis is None else f"axis {self.axis}"
        return f"{where}.{self.field}: [{self.rule}] {self.message}"


def _check_fn(fn, axis, name):
    out = []
    if fn.kind not in KINDS:
        out.append(Diagnostic(axis, name, "kind", f"unknown kind {fn.kind!r}"))
        return out
    flat = []
    if fn.kind == "piecewise":
        bps, vals = fn.params
        flat = list(bps) + list(vals)
        if len(vals) != len(bps) + 1:
            out.append(Diagnostic(axis, name, "piecewise-shape",
                                  "need exactly one more value than breakpoints"))
        if any(b1 <= b0 for b0, b1 in zip(bps, bps[1:])):
            out.append(Diagnostic(axis, name, "breakpoint-order",
                                  "breakpoints must be strictly increasing"))
    else:
        flat = list(fn.params)
        if fn.kind == "sinusoidal" and len(flat) != 4:
            out.append(Diagnostic(axis, name, "sinusoidal-shape", "need amp, freq, phase, offset"))
    if not all(math.isfinite(v) for v in flat):
        out.append(Diagnostic(axis, name, "finite", "parameters must be finite"))
    return out


def validate(spec, pipeline=True):
    """List every violated invariant of ``spec``; empty when well formed.

    With ``pipeline=True`` the kinetic coefficient must equal 1/2.
    """
    diags = []
    if not isinstance(spec.dimension, int) or spec.dimension < 1:
        diags.append(Diagnostic(None, "dimension", "positive", "dimension must be >= 1"))
    if len(spec.axes) != spec.dimension:
        diags.append(Diagnostic(None, "axes", "count",
                                f"{len(spec.axes)} axes given for dimension {spec.dimension}"))
    if not (math.isfinite(spec.t_max) and spec.t_max > 0):
        diags.append(Diagnostic(None, "t_max", "positive", "validity interval must be [0, T] with T > 0"))
    if pipeline and spec.kinetic != PIPELINE_KINETIC:
        diags.append(Diagnostic(None, "kinetic", "kinetic-coefficient",
                                f"pipeline requires kinetic coefficient 1/2, got {spec.kinetic}"))
    for j, ax in enumerate(spec.axes):
        for name in "bcfg":
            diags.extend(_check_fn(getattr(ax, name), j, name))
        if ax.c.kind == "piecewise" and not ax.c.is_constant:
            diags.append(Diagnostic(j, "c", "c1-dilation",
                                    "dilation coefficient must be C^1 (no jumps)"))
    return diags


def require_pipeline(spec):
    diags = validate(spec, pipeline=True)
    if diags:
        raise SpecError("invalid Hamiltonian spec:\n  " + "\n  ".join(map(str, diags)))
    return spec


def sigma_function(spec, axis, convention="table"):
    """Return ``t -> sigma_j(t)`` without argument checks.

    ``convention="printed"`` uses ``b/2`` in place of ``b/4`` (debug only).
    """
    ax = spec.axes[axis]
    scale = {"table": 0.25, "printed": 0.5}[convention]
    b, c = ax.b, ax.c

    def sigma(t):
        cv = c(t)
        return scale * b(t) - 0.25 * cv * cv - 0.25 * c.derivative(t)

    return sigma


def sigma_of_t(spec, axis, t, convention="table"):
    if spec.kinetic != PIPELINE_KINETIC:
        raise SpecError(f"sigma requires kinetic coefficient 1/2, got {spec.kinetic}")
    if not 0 <= axis < len(spec.axes):
        raise SpecError(f"axis {axis} out of range for dimension {spec.dimension}")
    tt = np.asarray(t, dtype=float)
    if np.any(tt < 0) or np.any(tt > spec.t_max):
        raise SpecError(f"t={t} outside validity interval [0, {spec.t_max}]")
    return sigma_function(spec, axis, convention)(t)


def sigma_is_constant(spec, axis):
    ax = spec.axes[axis]
    return ax.b.is_constant and ax.c.is_constant


# -- presets ---------------------------------------------------------------

def _iso(name, b, dimension, t_max):
    ax = AxisCoefficients(b=CoefficientFn.constant(b))
    return HamiltonianSpec(dimension, (ax,) * dimension, t_max=t_max, name=name)


def preset(name, t_max=100.0, **params):
    """Build one of the exactly solvable example Hamiltonians.

    ``constant_field(E)`` uses ``f = E``, the sign for which the closed-form
    kernel ``exp(iE(x+y)t/2 - iE^2 t^3/24)`` holds.  ``hybrid(omega1, omega2)``
    is two dimensional with a repulsive first axis.
    """
    d = int(params.pop("dimension", 1))
    if name == "free":
        spec = _iso("free", 0.0, d, t_max)
    elif name == "isotropic":
        spec = _iso("isotropic", 1.0, d, t_max)
    elif name == "repulsive":
        spec = _iso("repulsive", -1.0, d, t_max)
    elif name == "constant_field":
        E = float(params.pop("E", 1.0))
        ax = AxisCoefficients(f=CoefficientFn.constant(E))
        spec = HamiltonianSpec(d, (ax,) * d, t_max=t_max, name="constant_field")
    elif name == "anisotropic":
        w = float(params.pop("omega", 2.0))
        spec = _iso("anisotropic", w * w, d, t_max)
    elif name == "damped":
        lam = float(params.pop("lam", 0.6))
        if not 0.0 <= lam < 1.0:
            raise SpecError(f"damped preset needs 0 <= lambda < 1 (omega = sqrt(1 - lambda^2) real), got {lam}")
        ax = AxisCoefficients(b=CoefficientFn.constant(1.0), c=CoefficientFn.constant(-lam))
        spec = HamiltonianSpec(d, (ax,) * d, t_max=t_max, name="damped")
    elif name == "hybrid":
        w1 = float(params.pop("omega1", 1.0))
        w2 = float(params.pop("omega2", 1.0))
        axes = (AxisCoefficients(b=CoefficientFn.constant(-w1 * w1)),
                AxisCoefficients(b=CoefficientFn.constant(w2 * w2)))
        spec = HamiltonianSpec(2, axes, t_max=t_max, name="hybrid")
    elif name == "forced_parametric":
        b = CoefficientFn.coerce(params.pop("omega2", 1.0))
        f = CoefficientFn.coerce(params.pop("force", 0.0))
        ax = AxisCoefficients(b=b, f=f)
        spec = HamiltonianSpec(d, (ax,) * d, t_max=t_max, name="forced_parametric")
    else:
        raise SpecError(f"unknown preset {name!r}; choose from {PRESETS}")
    if params:
        raise SpecError(f"unexpected parameters for preset {name!r}: {sorted(params)}")
    return require_pipeline(spec)


PRESETS = ("free", "constant_field", "isotropic", "repulsive", "anisotropic",
           "damped", "hybrid", "forced_parametric")
