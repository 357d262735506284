"""The discretized operator L_h u = a * u + V u on a periodic grid.

The convolution acts as multiplication by symbol samples in frequency
space, so the matvec costs O(N^d log N).
"""
from __future__ import annotations

import hashlib
import warnings
from dataclasses import dataclass, replace

import numpy as np

from .errors import SelfAdjointnessError, UsageError
from .grids import (FREQUENCY, PHYSICAL, Grid, GridFunction, forward_transform,
                    inverse_transform, plancherel_inner, sample_physical)
from .model import (Kernel, Potential, SpectralConstants, fourier_symbol,
                    spectral_constants)


@dataclass(frozen=True, eq=False)
class DiscreteOperator:
    grid: Grid
    multiplier: np.ndarray  # symbol samples at grid frequencies, fft order
    potential_diag: np.ndarray  # V at grid nodes
    constants: SpectralConstants
    kernel: Kernel
    potential: Potential

    def descriptor(self) -> dict:
        digest = hashlib.sha256(np.ascontiguousarray(self.multiplier).tobytes())
        return {
            "kernel": self.kernel.descriptor(),
            "potential": self.potential.descriptor(),
            "grid": self.grid.descriptor(),
            "multiplier_sha256": digest.hexdigest(),
        }


def assemble(kernel: Kernel, potential: Potential, grid: Grid,
             symbol_source: str = "auto",
             constants: SpectralConstants | None = None) -> DiscreteOperator:
    """Sample the symbol at grid frequencies and the potential at grid nodes.

    symbol_source: 'analytic' evaluates the closed-form symbol (preferred:
    no periodization error), 'samples' takes the DFT of kernel samples on
    the grid (exactly circulant against the quadrature matrix), 'auto'
    prefers analytic.
    """
    if not (kernel.dim == potential.dim == grid.dim):
        raise UsageError(
            f"dimension mismatch: kernel d={kernel.dim}, potential d={potential.dim}, "
            f"grid d={grid.dim}")
    if symbol_source not in ("auto", "analytic", "samples"):
        raise UsageError(f"unknown symbol_source {symbol_source!r}")
    use_analytic = symbol_source == "analytic" or (
        symbol_source == "auto" and kernel.symbol is not None)

    if use_analytic:
        mult = np.asarray(fourier_symbol(kernel, grid.freq_points), dtype=complex)
    else:
        if kernel.func is None:
            raise UsageError("sampled assembly needs a spatial kernel evaluator")
        samples = sample_physical(grid, kernel.func)
        mult = forward_transform(samples).values

    if constants is None:
        constants = spectral_constants(kernel, potential)

    # under-resolution diagnostic: symbol mass at the Nyquist frequency
    nyq = np.full((1, grid.dim), grid.nyquist)
    try:
        at_nyq = float(np.max(np.abs(fourier_symbol(kernel, nyq))))
    except UsageError:
        at_nyq = float(np.max(np.abs(mult[tuple([grid.n // 2] * grid.dim)])))
    if at_nyq > 1e-6:
        warnings.warn(
            f"kernel under-resolved: |symbol| = {at_nyq:.3e} at the Nyquist "
            "frequency; refine the grid", stacklevel=2)

    herm = float(np.max(np.abs(np.imag(mult))))
    if herm > 1e-9:
        warnings.warn(
            f"symbol samples have imaginary part {herm:.3e}: the kernel breaks "
            "Hermitian symmetry and the operator is not self-adjoint",
            stacklevel=2)

    # range check: aliasing of the sampled path can leak slightly past the
    # continuum extrema, so the allowance widens with the Nyquist leakage
    eps = 1e-9 + (0.0 if use_analytic else 4.0 * at_nyq)
    re = np.real(mult)
    if herm <= 1e-9 and (np.min(re) < constants.a_min - eps
                         or np.max(re) > constants.a_max + eps):
        warnings.warn(
            "multiplier samples leave [a_min, a_max] beyond the aliasing "
            "allowance; spectral constants may be underestimated", stacklevel=2)

    diag = np.asarray(potential.evaluate(grid.points), dtype=float)
    eps_v = 1e-9
    if np.min(diag) < constants.v_min - eps_v or np.max(diag) > constants.v_max + eps_v:
        warnings.warn("potential samples leave [v_min, v_max]", stacklevel=2)

    return DiscreteOperator(grid=grid, multiplier=mult, potential_diag=diag,
                            constants=constants, kernel=kernel, potential=potential)


def apply_operator(op: DiscreteOperator, u: GridFunction) -> GridFunction:
    """L_h u via one forward/inverse transform pair plus the diagonal part."""
    if u.grid != op.grid:
        raise UsageError("operator and vector live on different grids")
    if u.space != PHYSICAL:
        raise UsageError("apply expects a physical-space function")
    hat = forward_transform(u)
    conv = inverse_transform(GridFunction(op.grid, op.multiplier * hat.values,
                                          FREQUENCY))
    return GridFunction(op.grid, conv.values + op.potential_diag * u.values,
                        PHYSICAL)


def quadratic_form(op: DiscreteOperator, u: GridFunction, shift: float = 0.0) -> float:
    """<(L_h - shift) u, u>, convolution part summed in frequency space.

    Mirrors the split of the variational argument: the multiplier part is a
    Plancherel-weighted frequency sum, the potential part a physical sum.
    """
    if u.space != PHYSICAL:
        raise UsageError("quadratic_form expects a physical-space function")
    if u.norm() == 0.0:
        raise UsageError("quadratic form of the zero vector")
    hat = forward_transform(u)
    conv = plancherel_inner(GridFunction(op.grid, op.multiplier * hat.values, FREQUENCY),
                            hat)
    pot = plancherel_inner(GridFunction(op.grid, op.potential_diag * u.values, PHYSICAL),
                           u)
    total = conv + pot - shift * plancherel_inner(u, u)
    scale = abs(plancherel_inner(u, u))
    if abs(total.imag) > 1e-9 * max(scale, 1.0):
        raise SelfAdjointnessError(
            f"quadratic form has imaginary residue {total.imag:.3e}")
    return float(total.real)


def hermiticity_residual(op: DiscreteOperator, trials: int = 10, seed: int = 0) -> float:
    """max over random pairs of |<Lu, v> - <u, Lv>| / (|u| |v|)."""
    if trials < 1:
        raise UsageError("hermiticity_residual needs trials >= 1")
    rng = np.random.default_rng(seed)
    worst = 0.0
    for _ in range(trials):
        u = GridFunction(op.grid, rng.standard_normal(op.grid.shape)
                         + 1j * rng.standard_normal(op.grid.shape))
        v = GridFunction(op.grid, rng.standard_normal(op.grid.shape)
                         + 1j * rng.standard_normal(op.grid.shape))
        lu, lv = apply_operator(op, u), apply_operator(op, v)
        gap = abs(plancherel_inner(lu, v) - plancherel_inner(u, lv))
        worst = max(worst, gap / (u.norm() * v.norm()))
    return worst


def negate(op: DiscreteOperator) -> DiscreteOperator:
    """-L_h: routes lower-edge analysis through the upper-edge machinery."""
    c = op.constants
    flipped = SpectralConstants(a_min=-c.a_max, a_max=-c.a_min,
                                argmax_xi=c.argmax_xi,
                                v_min=-c.v_max, v_max=-c.v_min)
    return replace(op, multiplier=-op.multiplier,
                   potential_diag=-op.potential_diag, constants=flipped)


def dense_matrix(op: DiscreteOperator) -> np.ndarray:
    """Dense realization of L_h, for oracle eigensolves on small grids.

    Built column by column from the matvec for d >= 2; in d = 1 the
    convolution block is circulant and a single impulse response suffices.
    """
    size = op.grid.n ** op.grid.dim
    if size > 8192:
        raise UsageError("dense_matrix limited to N^d <= 8192")
    if op.grid.dim == 1:
        impulse = np.zeros(op.grid.shape)
        impulse[0] = 1.0
        col = apply_operator(op, GridFunction(op.grid, impulse)).values
        col = col - op.potential_diag * impulse
        conv = np.empty((size, size), dtype=complex)
        for j in range(size):
            conv[:, j] = np.roll(col, j)
        return conv + np.diag(op.potential_diag)
    mat = np.empty((size, size), dtype=complex)
    for j in range(size):
        impulse = np.zeros(size)
        impulse[j] = 1.0
        mat[:, j] = apply_operator(
            op, GridFunction(op.grid, impulse.reshape(op.grid.shape))
        ).values.ravel()
    return mat
