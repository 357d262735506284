"""Periodic grids, the discrete Fourier transform matching the continuum
convention, Plancherel inner products, annulus averages and the weighted
symbol integral ell_hat.

Grid nodes are x_j = -L + j h on [-L, L), h = 2L/N; frequency nodes are
xi_k = k pi / L in fft ordering.  With this layout

    F f (xi_k) = h^d sum_j f(x_j) exp(-i xi_k . x_j)
               = h^d (-1)^k fftn(f)[k]      (per axis),

so the continuum phase reduces to an alternating sign and the transform
round-trips exactly.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from functools import cached_property

import numpy as np

from .errors import UsageError
from .model import Kernel, Potential, fourier_symbol

PHYSICAL = "physical"
FREQUENCY = "frequency"


@dataclass(frozen=True)
class Grid:
    dim: int
    half_width: float  # L, box is [-L, L)^d
    n: int  # points per dimension, power of two

    def __post_init__(self):
        if self.half_width <= 0:
            raise UsageError("grid half_width must be > 0")
        if self.n < 8 or (self.n & (self.n - 1)) != 0:
            raise UsageError("grid size must be a power of two, >= 8")
        if self.dim < 1 or self.dim > 3:
            raise UsageError("grids support 1 <= d <= 3")

    @property
    def h(self) -> float:
        return 2.0 * self.half_width / self.n

    @property
    def dual_spacing(self) -> float:
        return math.pi / self.half_width

    @property
    def nyquist(self) -> float:
        return math.pi / self.h

    @property
    def shape(self) -> tuple:
        return (self.n,) * self.dim

    @cached_property
    def axis(self) -> np.ndarray:
        return -self.half_width + self.h * np.arange(self.n)

    @cached_property
    def freq_axis(self) -> np.ndarray:
        """Frequency nodes in fft ordering."""
        return 2.0 * math.pi * np.fft.fftfreq(self.n, d=self.h)

    @cached_property
    def points(self) -> np.ndarray:
        """All nodes, shape self.shape + (dim,)."""
        mesh = np.meshgrid(*([self.axis] * self.dim), indexing="ij")
        return np.stack(mesh, axis=-1)

    @cached_property
    def freq_points(self) -> np.ndarray:
        mesh = np.meshgrid(*([self.freq_axis] * self.dim), indexing="ij")
        return np.stack(mesh, axis=-1)

    @cached_property
    def radius(self) -> np.ndarray:
        return np.sqrt(np.sum(self.points ** 2, axis=-1))

    @cached_property
    def freq_radius(self) -> np.ndarray:
        return np.sqrt(np.sum(self.freq_points ** 2, axis=-1))

    @cached_property
    def alternating(self) -> np.ndarray:
        """(-1)^(k_1+...+k_d): the boundary phase of the shifted box."""
        out = np.ones(self.shape)
        sign = (-1.0) ** np.arange(self.n)
        for axis in range(self.dim):
            shape = [1] * self.dim
            shape[axis] = -1
            out = out * sign.reshape(shape)
        return out

    def descriptor(self) -> dict:
        return {"dim": self.dim, "half_width": self.half_width, "n": self.n}


@dataclass(frozen=True, eq=False)
class GridFunction:
    grid: Grid
    values: np.ndarray  # shape grid.shape, complex
    space: str = PHYSICAL

    def __post_init__(self):
        vals = np.asarray(self.values, dtype=complex).reshape(self.grid.shape)
        if not np.all(np.isfinite(vals)):
            raise UsageError("grid function has non-finite values")
        object.__setattr__(self, "values", vals)
        if self.space not in (PHYSICAL, FREQUENCY):
            raise UsageError(f"unknown space {self.space!r}")

    def norm(self) -> float:
        return math.sqrt(abs(plancherel_inner(self, self)))

    def normalized(self) -> "GridFunction":
        nrm = self.norm()
        if nrm == 0.0:
            raise UsageError("cannot normalize the zero function")
        return GridFunction(self.grid, self.values / nrm, self.space)


def sample_physical(grid: Grid, func) -> GridFunction:
    """Sample a pointwise evaluator (over (..., d) points) on the grid."""
    return GridFunction(grid, np.asarray(func(grid.points), dtype=complex), PHYSICAL)


def forward_transform(f: GridFunction) -> GridFunction:
    if f.space != PHYSICAL:
        raise UsageError("forward_transform expects a physical-space function")
    g = f.grid
    hat = (g.h ** g.dim) * np.fft.fftn(f.values) * g.alternating
    return GridFunction(g, hat, FREQUENCY)


def inverse_transform(f: GridFunction) -> GridFunction:
    if f.space != FREQUENCY:
        raise UsageError("inverse_transform expects a frequency-space function")
    g = f.grid
    vals = np.fft.ifftn(f.values * g.alternating) / (g.h ** g.dim)
    return GridFunction(g, vals, PHYSICAL)


def plancherel_inner(f: GridFunction, g: GridFunction) -> complex:
    """<f, g> with the weight making both spaces agree through the transform.

    Physical: h^d sum f conj(g).  Frequency: (2 pi)^-d (pi/L)^d sum f conj(g).
    """
    if f.grid != g.grid:
        raise UsageError("inner product of functions on different grids")
    if f.space != g.space:
        raise UsageError("inner product of functions in different spaces")
    raw = complex(np.sum(f.values * np.conj(g.values)))
    d = f.grid.dim
    if f.space == PHYSICAL:
        return raw * f.grid.h ** d
    weight = (f.grid.dual_spacing / (2.0 * math.pi)) ** d
    return raw * weight


# ---------------------------------------------------------------------------
# annulus averages


@dataclass(frozen=True)
class AnnulusSpec:
    """The annulus {R <= |x| <= 2R} with a quadrature choice."""

    inner_radius: float
    method: str = "tensor_grid"  # or "monte_carlo"
    points: int = 512
    seed: int = 0

    def __post_init__(self):
        if self.inner_radius <= 0:
            raise UsageError("annulus inner radius must be > 0")
        if self.points < 16:
            raise UsageError("annulus quadrature needs at least 16 points")
        if self.method not in ("tensor_grid", "monte_carlo"):
            raise UsageError(f"unknown annulus quadrature {self.method!r}")


def _annulus_mean(func, dim: int, spec: AnnulusSpec):
    """Mean of func over {R <= |x| <= 2R}; Monte Carlo also returns stderr."""
    r0 = spec.inner_radius
    if spec.method == "monte_carlo":
        rng = np.random.default_rng(spec.seed)
        # radius from the inverse cdf of the radial volume element r^(d-1)
        u = rng.random(spec.points)
        r = (r0 ** dim + u * ((2 * r0) ** dim - r0 ** dim)) ** (1.0 / dim)
        dirs = rng.standard_normal((spec.points, dim))
        dirs /= np.linalg.norm(dirs, axis=1, keepdims=True)
        vals = np.asarray(func(r[:, None] * dirs), dtype=float)
        return float(np.mean(vals)), float(np.std(vals) / math.sqrt(spec.points))

    nodes, weights = np.polynomial.legendre.leggauss(spec.points)
    r = 1.5 * r0 + 0.5 * r0 * nodes  # map [-1,1] -> [R, 2R]
    wr = 0.5 * r0 * weights
    if dim == 1:
        vals = np.asarray(func(r[:, None]), dtype=float) \
            + np.asarray(func(-r[:, None]), dtype=float)
        integral = float(np.sum(wr * vals))
        return integral / (2.0 * r0), None
    n_ang = max(16, spec.points // 4)
    if dim == 2:
        theta = 2.0 * math.pi * np.arange(n_ang) / n_ang
        dirs = np.stack([np.cos(theta), np.sin(theta)], axis=-1)
        ang_w = np.full(n_ang, 2.0 * math.pi / n_ang)
        jac = r  # r^(d-1)
    else:
        # product Gauss-Legendre in cos(phi), trapezoid in theta
        cnodes, cweights = np.polynomial.legendre.leggauss(n_ang)
        theta = 2.0 * math.pi * np.arange(n_ang) / n_ang
        ct, cp = np.meshgrid(theta, cnodes, indexing="ij")
        sp = np.sqrt(1.0 - cp ** 2)
        dirs = np.stack([sp * np.cos(ct), sp * np.sin(ct), cp], axis=-1).reshape(-1, 3)
        ang_w = (np.ones(n_ang)[:, None] * cweights[None, :]).reshape(-1) \
            * (2.0 * math.pi / n_ang)
        jac = r ** 2
    pts = r[:, None, None] * dirs[None, :, :]
    vals = np.asarray(func(pts), dtype=float)
    integral = float(np.einsum("i,j,ij->", wr * jac, ang_w, vals))
    meas = _annulus_measure(dim, r0)
    return integral / meas, None


def _annulus_measure(dim: int, r0: float) -> float:
    unit_ball = {1: 2.0, 2: math.pi, 3: 4.0 * math.pi / 3.0}[dim]
    return unit_ball * ((2.0 * r0) ** dim - r0 ** dim)


def annulus_average_potential(potential: Potential, spec: AnnulusSpec):
    """<V>(R): mean of the potential over {R <= |x| <= 2R}.

    Returns (value, stderr); stderr is None for the deterministic tensor rule.
    """
    return _annulus_mean(potential.evaluate, potential.dim, spec)


def annulus_average_symbol(kernel: Kernel, spec: AnnulusSpec):
    """<ĥa>(r): mean of the symbol over {r <= |xi| <= 2r}."""

    def func(pts):
        return np.real(fourier_symbol(kernel, pts))

    return _annulus_mean(func, kernel.dim, spec)


def ell_hat(kernel: Kernel, r: float, a_max: float | None = None,
            points: int = 400, cutoff: float = 6.0) -> float:
    """integral (a_max - symbol(r xi)) exp(-|xi|^2) d xi.

    The Gaussian weight makes the tail beyond |xi| = 6 smaller than 3e-16,
    so a truncated tensor Gauss-Legendre rule suffices.
    """
    if r < 0:
        raise UsageError("ell_hat needs r >= 0")
    if a_max is None:
        if kernel.a_max is None:
            raise UsageError("ell_hat needs the sup of the symbol")
        a_max = kernel.a_max
    d = kernel.dim
    nodes, weights = np.polynomial.legendre.leggauss(points if d == 1 else 160)
    x = cutoff * nodes
    w = cutoff * weights
    if d == 1:
        pts = x[:, None]
        vals = (a_max - np.real(fourier_symbol(kernel, r * pts))) * np.exp(-x * x)
        out = float(np.sum(w * vals))
    else:
        mesh = np.meshgrid(*([x] * d), indexing="ij")
        pts = np.stack(mesh, axis=-1)
        wgrid = w
        for _ in range(d - 1):
            wgrid = np.multiply.outer(wgrid, w)
        r2 = np.sum(pts * pts, axis=-1)
        vals = (a_max - np.real(fourier_symbol(kernel, r * pts))) * np.exp(-r2)
        out = float(np.sum(wgrid * vals))
    hi = 2.0 * abs(a_max) * math.pi ** (d / 2.0) + 1e-9
    if out < -1e-9 or out > hi + abs(kernel.a_min or 0.0) * math.pi ** (d / 2.0):
        raise UsageError(f"ell_hat value {out:.6g} outside the sanity range")
    return max(out, 0.0)
