"""Kernels, potentials, decay hypotheses and the scalar spectral constants.

The Fourier convention throughout the package is

    F a (xi) = integral a(x) exp(-i xi . x) dx,

so a probability density has symbol value 1 at the origin.  Symbols of
Hermitian-symmetric kernels are real and vanish at infinity.
"""
from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field
from typing import Callable, Optional

import numpy as np
from scipy import integrate

from .errors import ConfigError, DivergentIntegralError, UsageError
from .intervals import IntervalUnion

DIVERGENT = "divergent"

# Large stand-in for "the bound holds for every radius" in DecayHypothesis.
UNBOUNDED_THRESHOLD = 1e9


def as_points(x, dim: int) -> np.ndarray:
    """Coerce input into an array of points with shape (..., dim)."""
    x = np.asarray(x, dtype=float)
    if dim == 1 and (x.ndim == 0 or x.shape[-1] != 1):
        x = x[..., np.newaxis]
    if x.shape[-1] != dim:
        raise UsageError(f"expected points with last axis {dim}, got shape {x.shape}")
    return x


def radii(x, dim: int) -> np.ndarray:
    pts = as_points(x, dim)
    return np.sqrt(np.sum(pts * pts, axis=-1))


@dataclass(frozen=True)
class DecayHypothesis:
    """A one-sided power bound used by the existence theorems.

    side 'symbol_near_zero':      symbol(xi) >= sup_symbol - constant*|xi|^exponent
                                  for |xi| <= threshold
    side 'potential_at_infinity': V(x) >= constant*|x|^(-exponent) for |x| >= threshold
    side 'potential_near_zero':   V(x) >= sup_V - constant*|x|^exponent for |x| < threshold
    side 'symbol_at_infinity':    symbol(xi) >= constant*|xi|^(-exponent)
                                  for |xi| >= threshold
    """

    side: str
    exponent: float
    constant: float
    threshold: float

    SIDES = (
        "symbol_near_zero",
        "potential_at_infinity",
        "symbol_at_infinity",
        "potential_near_zero",
    )

    def __post_init__(self):
        if self.side not in self.SIDES:
            raise ConfigError(f"unknown hypothesis side {self.side!r}")
        if self.exponent <= 0 or self.constant <= 0 or self.threshold <= 0:
            raise ConfigError("hypothesis exponent, constant, threshold must be > 0")


@dataclass(frozen=True)
class Kernel:
    """A convolution kernel with optional closed-form symbol and metadata."""

    dim: int
    name: str
    params: dict = field(default_factory=dict)
    func: Optional[Callable] = None  # a(x), vectorized over (..., dim)
    symbol: Optional[Callable] = None  # \hat a(xi), vectorized over (..., dim)
    a_min: Optional[float] = None  # exact inf of the symbol, when known
    a_max: Optional[float] = None  # exact sup of the symbol, when known
    argmax_xi: Optional[tuple] = None
    second_moment: object = None  # float, DIVERGENT, or None (unknown)
    support_radius: Optional[float] = None  # finite for compactly supported kernels
    table: Optional["TabulatedSamples"] = None

    def evaluate(self, x) -> np.ndarray:
        if self.func is None:
            raise UsageError(f"kernel {self.name!r} has no spatial evaluator")
        return self.func(as_points(x, self.dim))

    def descriptor(self) -> dict:
        return {"kind": "kernel", "builtin": self.name, "dim": self.dim,
                "params": dict(self.params)}


@dataclass(frozen=True)
class Potential:
    """A real potential vanishing at infinity, with bounds and metadata."""

    dim: int
    name: str
    params: dict = field(default_factory=dict)
    func: Optional[Callable] = None  # V(x), vectorized over (..., dim)
    v_min: float = 0.0
    v_max: float = 0.0
    essential_range: Optional[IntervalUnion] = None
    decay: Optional[DecayHypothesis] = None
    # A known continuity (Lebesgue) point, used by the Weyl construction.
    lebesgue_point: Optional[tuple] = None
    support_radius: Optional[float] = None

    def __post_init__(self):
        if not (self.v_min <= 0.0 <= self.v_max):
            raise ConfigError(
                "a potential vanishing at infinity must have v_min <= 0 <= v_max"
            )
        if self.essential_range is not None and not self.essential_range.contains(0.0, 1e-12):
            raise ConfigError("essential range of a decaying potential must contain 0")

    def evaluate(self, x) -> np.ndarray:
        if self.func is None:
            raise UsageError(f"potential {self.name!r} has no evaluator")
        return self.func(as_points(x, self.dim))

    def descriptor(self) -> dict:
        return {"kind": "potential", "builtin": self.name, "dim": self.dim,
                "params": dict(self.params)}


@dataclass(frozen=True, eq=False)
class TabulatedSamples:
    """Uniform samples of a kernel on [-L, L)^d, row-major."""

    dim: int
    half_width: float
    n: int
    values: np.ndarray  # shape (n,)*dim, complex

    def node_axis(self) -> np.ndarray:
        h = 2.0 * self.half_width / self.n
        return -self.half_width + h * np.arange(self.n)


@dataclass(frozen=True)
class SpectralConstants:
    """inf/sup of the symbol and of the potential, and the spectral edges."""

    a_min: float
    a_max: float
    argmax_xi: tuple
    v_min: float
    v_max: float

    @property
    def mu0(self) -> float:
        return min(self.a_min, self.v_min)

    @property
    def mu1(self) -> float:
        return max(self.a_max, self.v_max)

    def to_json(self) -> dict:
        return {"a_min": self.a_min, "a_max": self.a_max,
                "argmax_xi": list(self.argmax_xi),
                "v_min": self.v_min, "v_max": self.v_max,
                "mu0": self.mu0, "mu1": self.mu1}


@dataclass(frozen=True)
class HypothesisReport:
    """Sampled evidence for a decay hypothesis.  A pass is evidence, not proof."""

    passed: bool
    worst_margin: float
    worst_location: tuple
    samples: int
    note: str = "sampled check: a pass is numerical evidence, not a proof"


# ---------------------------------------------------------------------------
# builtin kernels


def gaussian_kernel(dim: int = 1) -> Kernel:
    """a(x) = (2 pi)^(-d/2) exp(-|x|^2/2), symbol exp(-|xi|^2/2)."""
    norm = (2.0 * math.pi) ** (-dim / 2.0)

    def func(x):
        r2 = np.sum(x * x, axis=-1)
        return norm * np.exp(-r2 / 2.0)

    def symbol(xi):
        r2 = np.sum(xi * xi, axis=-1)
        return np.exp(-r2 / 2.0)

    return Kernel(dim=dim, name="gaussian", func=func, symbol=symbol,
                  a_min=0.0, a_max=1.0, argmax_xi=(0.0,) * dim,
                  second_moment=float(dim))


def cauchy_kernel(dim: int = 1) -> Kernel:
    """a(x) = (1/pi)/(1+x^2) in d=1; symbol exp(-|xi|).  Heavy tail, alpha=1."""
    if dim != 1:
        raise ConfigError("cauchy kernel is implemented in d=1 only")

    def func(x):
        r = x[..., 0]
        return 1.0 / (math.pi * (1.0 + r * r))

    def symbol(xi):
        return np.exp(-np.abs(xi[..., 0]))

    return Kernel(dim=1, name="cauchy", func=func, symbol=symbol,
                  a_min=0.0, a_max=1.0, argmax_xi=(0.0,),
                  second_moment=DIVERGENT)


def exponential_kernel(dim: int = 1) -> Kernel:
    """a(x) = (1/2) exp(-|x|) in d=1; symbol 1/(1+xi^2)."""
    if dim != 1:
        raise ConfigError("exponential kernel is implemented in d=1 only")

    def func(x):
        return 0.5 * np.exp(-np.abs(x[..., 0]))

    def symbol(xi):
        s = xi[..., 0]
        return 1.0 / (1.0 + s * s)

    return Kernel(dim=1, name="exponential", func=func, symbol=symbol,
                  a_min=0.0, a_max=1.0, argmax_xi=(0.0,),
                  second_moment=2.0)


def uniform_kernel(dim: int = 1) -> Kernel:
    """a(x) = 2^(-d) on [-1,1]^d; symbol prod_j sin(xi_j)/xi_j.  Compact support."""

    def func(x):
        inside = np.all(np.abs(x) <= 1.0, axis=-1)
        return np.where(inside, 2.0 ** (-dim), 0.0)

    def symbol(xi):
        out = np.ones(xi.shape[:-1], dtype=float)
        for j in range(dim):
            s = xi[..., j]
            out = out * np.sinc(s / math.pi)  # np.sinc(t) = sin(pi t)/(pi t)
        return out

    # d=1: min of sin(t)/t at the first negative lobe.
    a_min = -0.21723362821122166 if dim == 1 else None
    return Kernel(dim=dim, name="uniform", func=func, symbol=symbol,
                  a_min=a_min, a_max=1.0, argmax_xi=(0.0,) * dim,
                  second_moment=dim / 3.0, support_radius=math.sqrt(dim))


def zero_kernel(dim: int = 1) -> Kernel:
    def func(x):
        return np.zeros(x.shape[:-1], dtype=float)

    def symbol(xi):
        return np.zeros(xi.shape[:-1], dtype=float)

    return Kernel(dim=dim, name="zero", func=func, symbol=symbol,
                  a_min=0.0, a_max=0.0, argmax_xi=(0.0,) * dim,
                  second_moment=0.0, support_radius=0.0)


def tabulated_kernel(table: TabulatedSamples, symmetry_tol: float = 1e-12,
                     validate: bool = True) -> Kernel:
    """Kernel backed by uniform samples; symbol evaluated by DFT of the table.

    Hermitian symmetry a(-x) = conj(a(x)) is checked up to the periodic
    reflection of the sampling grid.
    """
    values = np.asarray(table.values, dtype=complex).reshape((table.n,) * table.dim)
    reflected = values
    for axis in range(table.dim):
        reflected = np.roll(np.flip(reflected, axis=axis), 1, axis=axis)
    asym = float(np.max(np.abs(reflected - np.conj(values))))
    if validate and asym > symmetry_tol:
        raise ConfigError(
            f"tabulated kernel violates Hermitian symmetry: max deviation {asym:.3e}"
        )
    if not validate and asym > symmetry_tol:
        warnings.warn(
            f"tabulated kernel is not Hermitian-symmetric (deviation {asym:.3e}); "
            "the assembled operator will not be self-adjoint",
            stacklevel=2,
        )

    h = 2.0 * table.half_width / table.n
    weighted = float(h ** table.dim) * float(np.sum(np.abs(values)))
    if not np.isfinite(weighted):
        raise ConfigError("tabulated kernel has non-finite weighted l1 sum")

    # Continuum-convention DFT of the samples, fft frequency ordering.
    alt = _alternating_phase((table.n,) * table.dim)
    hat = (h ** table.dim) * np.fft.fftn(values) * alt
    freq_axis = 2.0 * math.pi * np.fft.fftfreq(table.n, d=h)
    nyquist = math.pi / h

    def symbol(xi):
        coords = np.moveaxis(xi, -1, 0)
        if np.any(np.abs(coords) > nyquist):
            raise UsageError(
                f"tabulated symbol queried beyond the Nyquist frequency {nyquist:.6g}"
            )
        idx = []
        for c in coords:
            k = np.rint(c * table.n * h / (2.0 * math.pi)).astype(int) % table.n
            idx.append(k)
        vals = hat[tuple(idx)]
        return np.real(vals) if asym <= symmetry_tol else vals

    def func(x):
        # nearest-sample lookup inside the table box
        pts = x
        coords = np.moveaxis(pts, -1, 0)
        idx = []
        inside = np.ones(pts.shape[:-1], dtype=bool)
        for c in coords:
            j = np.rint((c + table.half_width) / h).astype(int)
            inside &= (j >= 0) & (j < table.n)
            idx.append(np.clip(j, 0, table.n - 1))
        vals = values[tuple(idx)]
        return np.where(inside, vals, 0.0)

    return Kernel(dim=table.dim, name="tabulated", func=func, symbol=symbol,
                  table=table, params={"n": table.n, "half_width": table.half_width})


def _alternating_phase(shape) -> np.ndarray:
    """exp(i xi_k L) on the fft-ordered grid equals (-1)^k per axis."""
    out = np.ones(shape)
    for axis, n in enumerate(shape):
        sign = (-1.0) ** np.arange(n)
        out = out * sign.reshape([-1 if a == axis else 1 for a in range(len(shape))])
    return out


# ---------------------------------------------------------------------------
# builtin potentials


def zero_potential(dim: int = 1) -> Potential:
    def func(x):
        return np.zeros(x.shape[:-1], dtype=float)

    return Potential(dim=dim, name="zero", func=func, v_min=0.0, v_max=0.0,
                     essential_range=IntervalUnion.from_points([0.0]),
                     lebesgue_point=(0.0,) * dim)


def power_tail_potential(gamma: float, amplitude: float = 1.0, dim: int = 1) -> Potential:
    """V(x) = amplitude * (1+|x|)^(-gamma), gamma > 0."""
    if gamma <= 0:
        raise ConfigError("power-tail potential needs gamma > 0")

    def func(x):
        r = np.sqrt(np.sum(x * x, axis=-1))
        return amplitude * (1.0 + r) ** (-gamma)

    v_lo, v_hi = sorted((0.0, amplitude))
    decay = DecayHypothesis("potential_at_infinity", exponent=gamma,
                            constant=abs(amplitude) * 2.0 ** (-gamma), threshold=1.0) \
        if amplitude > 0 else None
    return Potential(dim=dim, name="power_tail", params={"gamma": gamma, "amplitude": amplitude},
                     func=func, v_min=v_lo, v_max=v_hi,
                     essential_range=IntervalUnion.from_intervals([(v_lo, v_hi)]),
                     decay=decay, lebesgue_point=(0.0,) * dim)


def cubic_peak_potential(amplitude: float = 1.0, dim: int = 1) -> Potential:
    """V(x) = amplitude/(1+|x|^3): flat-to-third-order peak at 0, gamma = 3."""

    def func(x):
        r = np.sqrt(np.sum(x * x, axis=-1))
        return amplitude / (1.0 + r ** 3)

    v_lo, v_hi = sorted((0.0, amplitude))
    decay = DecayHypothesis("potential_near_zero", exponent=3.0,
                            constant=abs(amplitude), threshold=1.0)
    return Potential(dim=dim, name="cubic_peak", params={"amplitude": amplitude},
                     func=func, v_min=v_lo, v_max=v_hi,
                     essential_range=IntervalUnion.from_intervals([(v_lo, v_hi)]),
                     decay=decay, lebesgue_point=(0.0,) * dim)


def gaussian_bump_potential(amplitude: float, width: float = 1.0, dim: int = 1) -> Potential:
    """V(x) = amplitude * exp(-|x|^2/width^2)."""
    if width <= 0:
        raise ConfigError("gaussian bump needs width > 0")

    def func(x):
        r2 = np.sum(x * x, axis=-1)
        return amplitude * np.exp(-r2 / width ** 2)

    v_lo, v_hi = sorted((0.0, amplitude))
    return Potential(dim=dim, name="gaussian_bump",
                     params={"amplitude": amplitude, "width": width},
                     func=func, v_min=v_lo, v_max=v_hi,
                     essential_range=IntervalUnion.from_intervals([(v_lo, v_hi)]),
                     lebesgue_point=(0.0,) * dim)


def box_potential(depth: float, half_width: float = 1.0, center: float = 0.0,
                  dim: int = 1) -> Potential:
    """V(x) = depth on the cube center + [-half_width, half_width]^d, else 0."""
    if half_width <= 0:
        raise ConfigError("box potential needs half_width > 0")

    def func(x):
        inside = np.all(np.abs(x - center) <= half_width, axis=-1)
        return np.where(inside, depth, 0.0)

    v_lo, v_hi = sorted((0.0, depth))
    rng = IntervalUnion.from_points(sorted({0.0, depth}))
    return Potential(dim=dim, name="box",
                     params={"depth": depth, "half_width": half_width, "center": center},
                     func=func, v_min=v_lo, v_max=v_hi, essential_range=rng,
                     lebesgue_point=(center,) * dim,
                     support_radius=abs(center) + half_width * math.sqrt(dim))


def sum_potential(v0: Potential, v1: Potential) -> Potential:
    """Pointwise sum V0 + V1; bounds estimated by dense sampling."""
    if v0.dim != v1.dim:
        raise UsageError("potential dimension mismatch in sum")

    def func(x):
        return v0.func(x) + v1.func(x)

    # bounds via a dense 1d/2d scan over a box covering both supports
    span = 4.0 * max(v1.support_radius or 8.0, 8.0)
    axis = np.linspace(-span, span, 4096 if v0.dim == 1 else 256)
    if v0.dim == 1:
        pts = axis[:, None]
    else:
        mesh = np.meshgrid(*([axis] * v0.dim), indexing="ij")
        pts = np.stack(mesh, axis=-1)
    vals = func(pts)
    v_lo = min(float(np.min(vals)), 0.0)
    v_hi = max(float(np.max(vals)), 0.0)
    return Potential(dim=v0.dim, name="sum",
                     params={"v0": v0.descriptor(), "v1": v1.descriptor()},
                     func=func, v_min=v_lo, v_max=v_hi,
                     lebesgue_point=v0.lebesgue_point)


BUILTIN_KERNELS = {
    "gaussian": gaussian_kernel,
    "cauchy": cauchy_kernel,
    "exponential": exponential_kernel,
    "uniform": uniform_kernel,
    "zero": zero_kernel,
}

BUILTIN_POTENTIALS = {
    "zero": zero_potential,
    "power_tail": power_tail_potential,
    "cubic_peak": cubic_peak_potential,
    "gaussian_bump": gaussian_bump_potential,
    "box": box_potential,
}


# ---------------------------------------------------------------------------
# operations


def fourier_symbol(kernel: Kernel, xi) -> np.ndarray:
    """Evaluate the symbol, preferring the closed form over the table DFT."""
    pts = as_points(xi, kernel.dim)
    if not np.all(np.isfinite(pts)):
        raise UsageError("non-finite frequency passed to fourier_symbol")
    if kernel.symbol is None:
        raise UsageError(f"kernel {kernel.name!r} has no symbol evaluator")
    return kernel.symbol(pts)


def spectral_constants(kernel: Kernel, potential: Potential,
                       freq_cap: float = 32.0, samples: int = 20001,
                       space_cap: float = 256.0) -> SpectralConstants:
    """Estimate a_min/a_max over a dense frequency grid and v_min/v_max.

    The grid extrema are clamped with the limit value 0 (the symbol is C0,
    so its infimum over R^d can be the unattained limit at infinity).
    Builtins with exact metadata override the grid estimate.
    """
    if freq_cap <= 0 or samples < 2:
        raise UsageError("freq_cap must be > 0 and samples >= 2")
    d = kernel.dim
    if kernel.table is not None:
        # a tabulated symbol only exists up to the table's Nyquist frequency
        nyq = math.pi * kernel.table.n / (2.0 * kernel.table.half_width)
        freq_cap = min(freq_cap, nyq)
    if kernel.a_min is not None and kernel.a_max is not None:
        a_min, a_max = kernel.a_min, kernel.a_max
        argmax = kernel.argmax_xi or (0.0,) * d
    else:
        per_axis = max(2, int(round(samples ** (1.0 / d))))
        axis = np.linspace(-freq_cap, freq_cap, per_axis)
        if d == 1:
            pts = axis[:, None]
        else:
            mesh = np.meshgrid(*([axis] * d), indexing="ij")
            pts = np.stack(mesh, axis=-1)
        vals = np.real(fourier_symbol(kernel, pts))
        a_min = min(float(np.min(vals)), 0.0)
        a_max = max(float(np.max(vals)), 0.0)
        flat = np.argmax(vals)
        argmax = tuple(float(c) for c in pts.reshape(-1, d)[flat])

    v_min, v_max = potential.v_min, potential.v_max
    if potential.func is not None and potential.essential_range is None:
        axis = np.linspace(-space_cap, space_cap, 20001 if d == 1 else 301)
        if d == 1:
            pts = axis[:, None]
        else:
            mesh = np.meshgrid(*([axis] * d), indexing="ij")
            pts = np.stack(mesh, axis=-1)
        vals = potential.evaluate(pts)
        v_min = min(v_min, float(np.min(vals)), 0.0)
        v_max = max(v_max, float(np.max(vals)), 0.0)

    return SpectralConstants(a_min=a_min, a_max=a_max, argmax_xi=argmax,
                             v_min=v_min, v_max=v_max)


def check_hypothesis(obj, hyp: DecayHypothesis, samples: int = 2000,
                     span: Optional[float] = None) -> HypothesisReport:
    """Sample the hypothesis inequality and report the worst margin.

    Margin is (lhs - rhs) of the claimed inequality; negative margin at any
    sample is a failure.
    """
    symbol_side = hyp.side.startswith("symbol")
    if symbol_side and not isinstance(obj, Kernel):
        raise UsageError(f"hypothesis side {hyp.side!r} requires a Kernel")
    if not symbol_side and not isinstance(obj, Potential):
        raise UsageError(f"hypothesis side {hyp.side!r} requires a Potential")
    d = obj.dim

    thr = min(hyp.threshold, UNBOUNDED_THRESHOLD)
    if hyp.side == "symbol_near_zero":
        rmax = thr if span is None else min(span, thr)
        rs = np.linspace(1e-9, rmax, samples)
        sup = obj.a_max if obj.a_max is not None else float(
            np.real(fourier_symbol(obj, np.zeros((1, d))))[0])
        lhs = _radial_min(lambda p: np.real(fourier_symbol(obj, p)), rs, d)
        rhs = sup - hyp.constant * rs ** hyp.exponent
    elif hyp.side == "symbol_at_infinity":
        rmax = span if span is not None else 8.0 * thr
        rs = np.linspace(thr, rmax, samples)
        lhs = _radial_min(lambda p: np.real(fourier_symbol(obj, p)), rs, d)
        rhs = hyp.constant * rs ** (-hyp.exponent)
    elif hyp.side == "potential_at_infinity":
        rmax = span if span is not None else 64.0 * thr
        rs = np.linspace(thr, rmax, samples)
        lhs = _radial_min(obj.evaluate, rs, d)
        rhs = hyp.constant * rs ** (-hyp.exponent)
    else:  # potential_near_zero
        rmax = thr if span is None else min(span, thr)
        rs = np.linspace(1e-9, rmax, samples)
        lhs = _radial_min(obj.evaluate, rs, d)
        rhs = obj.v_max - hyp.constant * rs ** hyp.exponent

    margins = lhs - rhs
    worst = int(np.argmin(margins))
    return HypothesisReport(passed=bool(np.all(margins >= -1e-12)),
                            worst_margin=float(margins[worst]),
                            worst_location=(float(rs[worst]),),
                            samples=samples)


def _radial_min(f, rs: np.ndarray, dim: int, rays: int = 8) -> np.ndarray:
    """Minimum of f over a set of rays at each radius (exact for radial f)."""
    if dim == 1:
        dirs = np.array([[1.0], [-1.0]])
    else:
        rng = np.random.default_rng(0)
        dirs = rng.standard_normal((rays, dim))
        dirs /= np.linalg.norm(dirs, axis=1, keepdims=True)
        dirs = np.vstack([np.eye(dim), -np.eye(dim), dirs])
    pts = rs[:, None, None] * dirs[None, :, :]
    vals = f(pts)
    return np.min(vals, axis=1)


def second_moment(kernel: Kernel, radius: float = 64.0, points: int = 4096,
                  tail_tol: float = 1e-8) -> float:
    """m = integral |z|^2 a(z) dz by quadrature; divergence is an error.

    Builtins carry exact metadata.  For quadrature the tail is estimated by
    comparing the truncation at `radius` and at 2*radius.
    """
    if kernel.second_moment == DIVERGENT:
        raise DivergentIntegralError(
            f"second moment of kernel {kernel.name!r} diverges")
    if isinstance(kernel.second_moment, (int, float)):
        return float(kernel.second_moment)
    if kernel.func is None:
        raise UsageError("second_moment needs a spatial evaluator")
    if kernel.dim != 1:
        raise UsageError("quadrature second_moment implemented for d=1 only")

    def trunc(rad):
        nodes, weights = np.polynomial.legendre.leggauss(points)
        x = rad * nodes
        w = rad * weights
        vals = np.real(kernel.evaluate(x)) * x * x
        return float(np.sum(w * vals))

    base, wide = trunc(radius), trunc(2.0 * radius)
    if abs(wide - base) > tail_tol * max(1.0, abs(base)):
        raise DivergentIntegralError(
            f"second-moment tail estimate {abs(wide - base):.3e} exceeds tolerance; "
            "treating the integral as divergent")
    return wide


def hypothesis_from_moment(kernel: Kernel) -> DecayHypothesis:
    """For a symmetric density with finite m: symbol >= 1 - (m/2)|xi|^2.

    Follows from 1 - symbol(xi) = 2 * integral a(z) sin^2(z.xi/2) dz and
    sin^2 t <= t^2; holds for every frequency, encoded with a large cap.
    """
    m = second_moment(kernel)
    if m <= 0:
        raise UsageError("hypothesis_from_moment needs a kernel with positive m")
    return DecayHypothesis("symbol_near_zero", exponent=2.0, constant=m / 2.0,
                           threshold=UNBOUNDED_THRESHOLD)


def essential_range(potential: Potential, bins: int = 256, eps: float = 1e-3,
                    span: float = 256.0, points_per_dim: int = 65536,
                    use_analytic: bool = True) -> IntervalUnion:
    """Essential range of V: analytic metadata or a volume-weighted histogram.

    Histogram path: sample V on a uniform box, histogram values with cell
    volume as mass, keep bins with more than one cell of mass, merge adjacent
    kept bins into closed intervals, and always include {0} (forced by decay
    at infinity on an unbounded domain).
    """
    if bins < 8:
        raise UsageError("essential_range needs bins >= 8")
    if eps <= 0:
        raise UsageError("essential_range needs eps > 0")
    if use_analytic and potential.essential_range is not None:
        return potential.essential_range

    d = potential.dim
    n = points_per_dim if d == 1 else 1024
    axis = np.linspace(-span, span, n)
    cell = (2.0 * span / n) ** d
    if d == 1:
        pts = axis[:, None]
    else:
        mesh = np.meshgrid(*([axis] * d), indexing="ij")
        pts = np.stack(mesh, axis=-1)
    vals = np.asarray(potential.evaluate(pts)).ravel()

    lo = min(float(np.min(vals)), 0.0)
    hi = max(float(np.max(vals)), 0.0)
    if hi - lo <= 0:
        return IntervalUnion.from_points([0.0])
    counts, edges = np.histogram(vals, bins=bins, range=(lo, hi))
    mass = counts * cell
    keep = mass > (1.0 + 1e-9) * cell  # more than one grid cell of measure
    pieces = []
    start = None
    for i, k in enumerate(keep):
        if k and start is None:
            start = i
        if (not k or i == len(keep) - 1) and start is not None:
            stop = i if k else i - 1
            pieces.append((edges[start], edges[stop + 1]))
            start = None
    out = IntervalUnion.from_intervals(pieces, merge_tol=(hi - lo) / bins * 0.5)
    out = out.union(IntervalUnion.from_points([0.0]), merge_tol=(hi - lo) / bins * 0.5)
    # clip into the known bounds
    clipped = [(max(a, potential.v_min), min(b, potential.v_max))
               for a, b in out.intervals]
    return IntervalUnion.from_intervals([(a, b) for a, b in clipped if a <= b])
