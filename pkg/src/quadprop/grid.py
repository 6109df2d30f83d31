"""Uniform grids, sampled wavefunctions, initial states and state I/O."""

from dataclasses import dataclass, field
from functools import lru_cache
import csv
import math
import struct

import numpy as np

from .errors import SpecError

__all__ = [
    "Grid",
    "GridState",
    "gaussian",
    "hermite",
    "soliton",
    "random_state",
    "resample",
    "interpolation_matrix",
    "write_csv",
    "read_csv",
    "write_binary",
    "read_binary",
    "MAGIC",
]

MAGIC = b"QPRD"
VERSION = 1
MAX_DIM = 3


def _is_pow2(n):
    return n >= 1 and (n & (n - 1)) == 0


@dataclass(frozen=True)
class Grid:
    """Tensor-product grid ``x_k = center + (k - N/2) * spacing`` on every axis.

    ``scale_history`` holds one tuple of per-axis spacing ratios for every
    operation that rescaled the grid.
    """

    n: tuple
    center: tuple
    spacing: tuple
    scale_history: tuple = ()

    def __post_init__(self):
        n = tuple(int(v) for v in np.atleast_1d(self.n))
        center = tuple(float(v) for v in np.atleast_1d(self.center))
        spacing = tuple(float(v) for v in np.atleast_1d(self.spacing))
        if len(center) == 1 and len(n) > 1:
            center = center * len(n)
        if len(spacing) == 1 and len(n) > 1:
            spacing = spacing * len(n)
        if not 1 <= len(n) <= MAX_DIM:
            raise SpecError(f"grid dimension must be 1..{MAX_DIM}, got {len(n)}")
        if len(center) != len(n) or len(spacing) != len(n):
            raise SpecError("n, center and spacing must have one entry per axis")
        for v in n:
            if v < 8 or not _is_pow2(v):
                raise SpecError(f"axis size {v} must be a power of two >= 8")
        for h in spacing:
            if not (math.isfinite(h) and h > 0):
                raise SpecError(f"grid spacing {h} must be positive and finite")
        for c in center:
            if not math.isfinite(c):
                raise SpecError("grid center must be finite")
        object.__setattr__(self, "n", n)
        object.__setattr__(self, "center", center)
        object.__setattr__(self, "spacing", spacing)
        object.__setattr__(self, "scale_history", tuple(tuple(s) for s in self.scale_history))

    @classmethod
    def uniform(cls, n, length, center=0.0, dimension=1):
        """Grid of ``n`` points per axis covering total extent ``length``."""
        return cls((n,) * dimension, (center,) * dimension, (length / n,) * dimension)

    @property
    def dimension(self):
        return len(self.n)

    @property
    def shape(self):
        return self.n

    @property
    def extent(self):
        return tuple(n * h for n, h in zip(self.n, self.spacing))

    @property
    def cell_volume(self):
        return float(np.prod(self.spacing))

    def axis_points(self, j):
        n = self.n[j]
        return self.center[j] + (np.arange(n) - n // 2) * self.spacing[j]

    def mesh(self):
        return np.meshgrid(*[self.axis_points(j) for j in range(self.dimension)], indexing="ij")

    def frequencies(self, j):
        return 2.0 * np.pi * np.fft.fftfreq(self.n[j], self.spacing[j])

    def with_axis(self, j, center, spacing):
        center_ = list(self.center)
        spacing_ = list(self.spacing)
        ratio = [1.0] * self.dimension
        ratio[j] = spacing / self.spacing[j]
        center_[j], spacing_[j] = float(center), float(spacing)
        history = self.scale_history
        if ratio[j] != 1.0:
            history = history + (tuple(ratio),)
        return Grid(self.n, tuple(center_), tuple(spacing_), history)

    def same_points(self, other, rtol=1e-12):
        return (self.n == other.n
                and np.allclose(self.center, other.center, rtol=0, atol=rtol * max(self.extent))
                and np.allclose(self.spacing, other.spacing, rtol=rtol, atol=0))

    def to_dict(self):
        return {"N": list(self.n), "center": list(self.center), "spacing": list(self.spacing)}


@dataclass(frozen=True)
class GridState:
    """Complex samples of a wavefunction on a ``Grid`` at time ``t``."""

    grid: Grid
    values: np.ndarray = field(repr=False)
    t: float = 0.0
    norm_log: float = None

    def __post_init__(self):
        v = np.asarray(self.values, dtype=complex)
        if v.shape != self.grid.shape:
            if v.size == int(np.prod(self.grid.shape)):
                v = v.reshape(self.grid.shape)
            else:
                raise SpecError(f"values of shape {v.shape} do not match grid {self.grid.shape}")
        v = v.copy()
        v.setflags(write=False)
        object.__setattr__(self, "values", v)
        norm = float(np.sqrt(np.sum(np.abs(v) ** 2) * self.grid.cell_volume))
        if not math.isfinite(norm):
            raise SpecError("state has non-finite L2 norm")
        if self.norm_log is None:
            object.__setattr__(self, "norm_log", norm)
        object.__setattr__(self, "t", float(self.t))

    @property
    def dimension(self):
        return self.grid.dimension

    def norm(self):
        return float(np.sqrt(np.sum(np.abs(self.values) ** 2) * self.grid.cell_volume))

    def mass(self):
        return float(np.sum(np.abs(self.values) ** 2) * self.grid.cell_volume)

    def l1_norm(self):
        return float(np.sum(np.abs(self.values)) * self.grid.cell_volume)

    def sup_norm(self):
        return float(np.max(np.abs(self.values)))

    def lp_norm(self, r):
        if math.isinf(r):
            return self.sup_norm()
        return float((np.sum(np.abs(self.values) ** r) * self.grid.cell_volume) ** (1.0 / r))

    def centroid(self):
        """Density centroid, one entry per axis."""
        rho = np.abs(self.values) ** 2
        total = rho.sum()
        if total == 0:
            raise SpecError("centroid of the zero state is undefined")
        return np.array([np.sum(rho * xj) / total for xj in self.grid.mesh()])

    def variance(self):
        rho = np.abs(self.values) ** 2
        total = rho.sum()
        c = self.centroid()
        return np.array([np.sum(rho * (xj - cj) ** 2) / total for xj, cj in zip(self.grid.mesh(), c)])

    def replace(self, values=None, t=None, grid=None):
        return GridState(self.grid if grid is None else grid,
                         self.values if values is None else values,
                         self.t if t is None else t,
                         self.norm_log)


def _per_axis(value, d):
    arr = np.atleast_1d(np.asarray(value, dtype=float))
    if arr.size == 1:
        return np.repeat(arr, d)
    if arr.size != d:
        raise SpecError(f"expected {d} per-axis values, got {arr.size}")
    return arr


def gaussian(grid, center=0.0, width=1.0, momentum=0.0, t=0.0):
    """Normalized Gaussian ``prod_j (pi w_j^2)^(-1/4) exp(-(x_j-c_j)^2/(2 w_j^2) + i k_j x_j)``."""
    d = grid.dimension
    c, w, k = _per_axis(center, d), _per_axis(width, d), _per_axis(momentum, d)
    if np.any(w <= 0):
        raise SpecError("width must be positive")
    out = np.ones(grid.shape, dtype=complex)
    for j, xj in enumerate(grid.mesh()):
        out *= (np.pi * w[j] ** 2) ** -0.25 * np.exp(-((xj - c[j]) ** 2) / (2 * w[j] ** 2) + 1j * k[j] * xj)
    return GridState(grid, out, t)


def _hermite_function(n, x):
    """Normalized Hermite function via the stable three-term recurrence."""
    h0 = np.pi ** -0.25 * np.exp(-x * x / 2)
    if n == 0:
        return h0
    h1 = math.sqrt(2.0) * x * h0
    for k in range(2, n + 1):
        h0, h1 = h1, math.sqrt(2.0 / k) * x * h1 - math.sqrt((k - 1) / k) * h0
    return h1


def hermite(grid, n, center=0.0, t=0.0):
    """Product of normalized Hermite functions of orders ``n`` (one per axis)."""
    d = grid.dimension
    orders = np.atleast_1d(n).astype(int)
    if orders.size == 1:
        orders = np.repeat(orders, d)
    if orders.size != d or np.any(orders < 0):
        raise SpecError("hermite orders must be non-negative, one per axis")
    c = _per_axis(center, d)
    out = np.ones(grid.shape, dtype=complex)
    for j, xj in enumerate(grid.mesh()):
        out *= _hermite_function(int(orders[j]), xj - c[j])
    return GridState(grid, out, t)


def soliton(grid, amp=1.0, speed=0.0, center=0.0, t=0.0):
    """Bright soliton ``amp sech(amp (x - c)) exp(i speed x)`` of the focusing cubic equation (d = 1)."""
    if grid.dimension != 1:
        raise SpecError("soliton initial data is one-dimensional")
    if amp <= 0:
        raise SpecError("soliton amplitude must be positive")
    x = grid.axis_points(0)
    return GridState(grid, amp / np.cosh(amp * (x - center)) * np.exp(1j * speed * x), t)


def random_state(grid, rng, modes=4, width=1.5):
    """Normalized smooth random state: Gaussian envelope times a random low-order polynomial."""
    d = grid.dimension
    out = np.ones(grid.shape, dtype=complex)
    for j, xj in enumerate(grid.mesh()):
        c = rng.normal(scale=0.5)
        coef = rng.normal(size=modes) + 1j * rng.normal(size=modes)
        z = (xj - c) / width
        out *= np.polynomial.polynomial.polyval(z, coef) * np.exp(-z * z / 2 + 1j * rng.normal() * xj)
    st = GridState(grid, out)
    return st.replace(values=out / st.norm())


@lru_cache(maxsize=64)
def _interp_cached(n, x0, h, targets):
    x = np.asarray(targets)
    k = 2.0 * np.pi * np.fft.fftfreq(n, h)
    e = np.exp(1j * np.outer(x - x0, k))
    if n % 2 == 0:
        e[:, n // 2] = np.cos(k[n // 2] * (x - x0))
    # outside the sampled window the state is taken to vanish
    lo, hi = x0 - h / 2, x0 + (n - 0.5) * h
    e[(x < lo - 1e-12 * h) | (x > hi + 1e-12 * h)] = 0.0
    m = np.fft.fft(np.eye(n), axis=0) / n
    out = e @ m
    out.setflags(write=False)
    return out


def interpolation_matrix(n, x0, h, targets):
    """Band-limited (trigonometric) interpolation from ``n`` samples at ``x0 + k h`` to ``targets``."""
    return _interp_cached(int(n), float(x0), float(h), tuple(np.asarray(targets, dtype=float).tolist()))


def apply_along(values, j, matrix):
    """Apply ``matrix`` (rows: new points, cols: old points) along axis ``j``."""
    moved = np.moveaxis(values, j, -1)
    return np.moveaxis(moved @ matrix.T, -1, j)


def resample(state, grid):
    """Band-limited interpolation of ``state`` onto ``grid``."""
    if grid.dimension != state.dimension:
        raise SpecError("grid dimension mismatch")
    vals = state.values
    src = state.grid
    for j in range(grid.dimension):
        xs = src.axis_points(j)
        xt = grid.axis_points(j)
        if src.n[j] == grid.n[j] and np.allclose(xs, xt, rtol=0, atol=1e-12 * src.spacing[j]):
            continue
        vals = apply_along(vals, j, interpolation_matrix(src.n[j], xs[0], src.spacing[j], xt))
    return GridState(grid, vals, state.t, state.norm_log)


def write_csv(state, path):
    """Columns ``x0[, x1, x2], re, im``; row-major order over the grid."""
    cols = [xj.ravel() for xj in state.grid.mesh()]
    names = ["x"] if state.dimension == 1 else [f"x{j}" for j in range(state.dimension)]
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(names + ["re", "im"])
        v = state.values.ravel()
        for row in zip(*cols, v.real, v.imag):
            w.writerow([repr(float(a)) for a in row])


def read_csv(path, grid=None):
    """Read a state written by :func:`write_csv`; the grid is inferred unless given."""
    data = np.genfromtxt(path, delimiter=",", names=True)
    names = data.dtype.names
    xnames = [nm for nm in names if nm.startswith("x")]
    values = data["re"] + 1j * data["im"]
    if grid is None:
        n, center, spacing = [], [], []
        for nm in xnames:
            u = np.unique(data[nm])
            if len(u) < 2:
                raise SpecError("cannot infer grid from CSV")
            h = float(np.mean(np.diff(u)))
            n.append(len(u))
            spacing.append(h)
            center.append(float(u[len(u) // 2]))
        grid = Grid(tuple(n), tuple(center), tuple(spacing))
    return GridState(grid, values.reshape(grid.shape))


def write_binary(state, path):
    """Little-endian dump: magic, version, d, per-axis (N, center, spacing), then complex128 values."""
    g = state.grid
    with open(path, "wb") as fh:
        fh.write(MAGIC)
        fh.write(struct.pack("<II", VERSION, g.dimension))
        for n, c, h in zip(g.n, g.center, g.spacing):
            fh.write(struct.pack("<Idd", n, c, h))
        fh.write(np.ascontiguousarray(state.values, dtype="<c16").tobytes())


def read_binary(path):
    with open(path, "rb") as fh:
        blob = fh.read()
    if blob[:4] != MAGIC:
        raise SpecError(f"{path}: not a state dump (bad magic)")
    version, d = struct.unpack_from("<II", blob, 4)
    if version != VERSION:
        raise SpecError(f"{path}: unsupported version {version}")
    off = 12
    n, c, h = [], [], []
    for _ in range(d):
        nj, cj, hj = struct.unpack_from("<Idd", blob, off)
        off += struct.calcsize("<Idd")
        n.append(nj)
        c.append(cj)
        h.append(hj)
    grid = Grid(tuple(n), tuple(c), tuple(h))
    vals = np.frombuffer(blob, dtype="<c16", offset=off)
    if vals.size != int(np.prod(grid.shape)):
        raise SpecError(f"{path}: truncated value block")
    return GridState(grid, vals.reshape(grid.shape))
