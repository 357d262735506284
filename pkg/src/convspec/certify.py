"""Variational test-function families and eigenvalue-count certificates.

A passing certificate states that the Gram pencil of (L_h - shift) on the
family span is positive definite, hence by the min-max principle the
discretized operator has at least family-size eigenvalues above the shift.
The bridge from box spectra to R^d is the classification machinery in
`spectra`; reports keep the two layers separate.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Optional

import numpy as np
from scipy import integrate
from scipy.linalg import eigh

from .errors import ConvergenceError, SizingError, UsageError
from .grids import (FREQUENCY, Grid, GridFunction, forward_transform,
                    inverse_transform, plancherel_inner, sample_physical)
from .model import Kernel, Potential, spectral_constants
from .operators import DiscreteOperator, apply_operator, assemble
from .spectra import EigenPair, eigs_above, eigs_in_window

BUMP_SCALED = "bump_scaled"
GAUSSIAN = "gaussian"
FOURIER_SIDE_BUMP = "fourier_side_bump"


def _smooth_step(t: np.ndarray) -> np.ndarray:
    """C-infinity step: 0 for t <= 0, 1 for t >= 1, exp(-1/t) bridges."""
    t = np.asarray(t, dtype=float)
    lo = np.exp(-1.0 / np.maximum(t, 1e-300)) * (t > 0)
    hi = np.exp(-1.0 / np.maximum(1.0 - t, 1e-300)) * (t < 1)
    with np.errstate(invalid="ignore"):
        out = np.where(t <= 0, 0.0, np.where(t >= 1, 1.0, lo / (lo + hi)))
    return out


@dataclass(frozen=True)
class BumpProfile:
    """Radial profile: 0 outside (1/2, 5/2), a plateau on [1, 2], smooth
    exp(-1/t) bridges on (1/2, 1) and (2, 5/2).

    The plateau height is an output: it is fixed by the unit L2 norm of
    psi(x) = height * chi(|x|) in the given dimension.
    """

    dim: int
    inner_support: float = 0.5
    plateau_lo: float = 1.0
    plateau_hi: float = 2.0
    outer_support: float = 2.5
    plateau_height: float = field(init=False, default=0.0)

    def __post_init__(self):
        val, _ = integrate.quad(
            lambda r: self.shape(np.array([r]))[0] ** 2 * _sphere_area(self.dim, r),
            self.inner_support, self.outer_support, limit=200)
        object.__setattr__(self, "plateau_height", 1.0 / math.sqrt(val))

    def shape(self, r: np.ndarray) -> np.ndarray:
        """Unnormalized profile with plateau value 1."""
        r = np.asarray(r, dtype=float)
        rise = _smooth_step((r - self.inner_support)
                            / (self.plateau_lo - self.inner_support))
        fall = _smooth_step((self.outer_support - r)
                            / (self.outer_support - self.plateau_hi))
        return rise * fall

    def __call__(self, r: np.ndarray) -> np.ndarray:
        """L2-normalized profile value psi(|x|) at radius r."""
        return self.plateau_height * self.shape(r)


def _sphere_area(dim: int, r: float) -> float:
    return {1: 2.0, 2: 2.0 * math.pi * r, 3: 4.0 * math.pi * r * r}[dim]


@dataclass(frozen=True, eq=False)
class TestFamily:
    members: tuple[GridFunction, ...]
    kind: str
    radii: tuple[float, ...]
    scale_base: Optional[int] = None  # M for dyadic ladders
    modulation: Optional[tuple] = None  # xi0 for the modulated variant
    off_schedule: bool = False  # user-supplied ladder replacing the default

    def __post_init__(self):
        if list(self.radii) != sorted(self.radii):
            raise UsageError("family radii must be strictly increasing")

    def descriptor(self) -> dict:
        return {"kind": self.kind, "radii": list(self.radii),
                "scale_base": self.scale_base,
                "modulation": list(self.modulation) if self.modulation else None,
                "off_schedule": self.off_schedule}


@dataclass(frozen=True, eq=False)
class Certificate:
    theorem: str  # T2 | T3_integral | heavy_tail | T5_dual
    shift: float
    gram_form: np.ndarray  # <(L - shift) phi_n, phi_m>
    gram_overlap: np.ndarray
    min_eig: float
    certified_count: int
    passed: bool
    diagnostics: dict = field(default_factory=dict)

    def to_json(self) -> dict:
        return {"theorem": self.theorem, "shift": self.shift,
                "gram_form": self.gram_form.tolist(),
                "gram_overlap": self.gram_overlap.tolist(),
                "min_eig": self.min_eig,
                "certified_count": self.certified_count,
                "passed": self.passed, "diagnostics": self.diagnostics}


@dataclass(frozen=True, eq=False)
class GapCertificate:
    lambda0: float
    u0: EigenPair
    theta_minus: float
    v1_sup: float
    support_measure: float
    delta: float  # |L u0 - lambda0 u0| with the perturbed operator
    margin: float  # min(lambda0 - a_max, theta_minus - lambda0)
    passed: bool
    predicted_interval: tuple[float, float]
    confirmed: Optional[EigenPair] = None

    def to_json(self) -> dict:
        return {"lambda0": self.lambda0, "theta_minus": self.theta_minus,
                "v1_sup": self.v1_sup, "support_measure": self.support_measure,
                "delta": self.delta, "margin": self.margin,
                "passed": self.passed,
                "predicted_interval": list(self.predicted_interval),
                "confirmed": self.confirmed.to_json() if self.confirmed else None}


# ---------------------------------------------------------------------------
# family construction


def build_bump(grid: Grid, radius: float, modulation=None,
               profile: Optional[BumpProfile] = None,
               min_cells: int = 8) -> GridFunction:
    """psi_R(x) = R^(-d/2) psi(x/R), optionally modulated by exp(i xi0.x).

    The support {R/2 < |x| < 5R/2} must fit the box and the inner radius
    must span at least min_cells grid cells.
    """
    if profile is None:
        profile = BumpProfile(grid.dim)
    if 2.5 * radius >= 0.95 * grid.half_width:
        max_r = 0.95 * grid.half_width / 2.5
        raise SizingError(
            f"bump of radius {radius} overflows the box; max feasible radius "
            f"{max_r:.6g}", max_feasible=max_r)
    if radius / 2.0 < min_cells * grid.h:
        max_ok = radius / 2.0 / grid.h
        raise SizingError(
            f"grid resolves only {max_ok:.1f} cells across the inner radius "
            f"(need {min_cells}); refine the grid or enlarge R",
            max_feasible=None)
    vals = radius ** (-grid.dim / 2.0) * profile(grid.radius / radius)
    vals = vals.astype(complex)
    if modulation is not None:
        xi0 = np.asarray(modulation, dtype=float)
        phase = np.tensordot(grid.points, xi0, axes=([-1], [0]))
        vals = vals * np.exp(1j * phase)
    return GridFunction(grid, vals).normalized()


def scaled_family(grid: Grid, r0: float, scale_base: int, count: int,
                  modulation=None, compact_kernel: bool = False) -> TestFamily:
    """The dyadic ladder psi_{2^(M n) R0}, n = 1..count.

    Supports are pairwise disjoint by construction.  M > 2 is required in
    general; M >= 1 is accepted for compactly supported kernels, where the
    off-diagonal convolution couplings vanish identically for large R0.
    """
    min_m = 1 if compact_kernel else 3
    if scale_base < min_m:
        raise UsageError(
            f"scale base M = {scale_base} too small (need >= {min_m} here)")
    if count < 1:
        raise UsageError("family needs count >= 1")
    radii = [2.0 ** (scale_base * n) * r0 for n in range(1, count + 1)]
    if 2.5 * radii[-1] >= 0.95 * grid.half_width:
        feasible = 0
        for r in radii:
            if 2.5 * r < 0.95 * grid.half_width:
                feasible += 1
        raise SizingError(
            f"largest radius {radii[-1]:.6g} overflows the box; max feasible "
            f"count is {feasible}", max_feasible=feasible)
    profile = BumpProfile(grid.dim)
    members = tuple(build_bump(grid, r, modulation, profile) for r in radii)
    return TestFamily(members=members, kind=BUMP_SCALED, radii=tuple(radii),
                      scale_base=scale_base,
                      modulation=tuple(np.atleast_1d(modulation))
                      if modulation is not None else None)


def gaussian_family(grid: Grid, r1: float, count: int,
                    ladder: Optional[list[float]] = None) -> TestFamily:
    """Gaussian members R^(-d/2) exp(-|x|^2/R^2) with the ladder R_{j+1} = R_j^4.

    A user-supplied gentler ladder is accepted and flagged off-schedule in
    the report.
    """
    if count < 1:
        raise UsageError("family needs count >= 1")
    if ladder is None:
        if r1 <= 1.0:
            raise UsageError("default quartic ladder needs R1 > 1")
        radii = [r1]
        for _ in range(count - 1):
            radii.append(radii[-1] ** 4)
        off_schedule = False
    else:
        radii = [float(r) for r in ladder]
        if len(radii) != count:
            raise UsageError("ladder length must equal count")
        off_schedule = True
    if 3.0 * radii[-1] >= grid.half_width:
        feasible = sum(1 for r in radii if 3.0 * r < grid.half_width)
        raise SizingError(
            f"largest Gaussian radius {radii[-1]:.6g} overflows the box; max "
            f"feasible count is {feasible}", max_feasible=feasible)
    members = []
    for r in radii:
        vals = np.exp(-grid.radius ** 2 / r ** 2).astype(complex)
        members.append(GridFunction(grid, vals).normalized())
    return TestFamily(members=tuple(members), kind=GAUSSIAN, radii=tuple(radii),
                      off_schedule=off_schedule)


def dual_family(grid: Grid, q: float, count: int, scale_base: int,
                r0: float = 1.0) -> TestFamily:
    """Fourier-side bumps supported on {q R < |xi| < 2 q R}, R = 2^(M n) r0.

    The members are returned in physical space with unit norm; used with
    shift = V_max for the dual (potential-peak) certificate.
    """
    if scale_base < 1 or count < 1:
        raise UsageError("dual family needs scale_base >= 1 and count >= 1")
    if q <= 0:
        raise UsageError("dual family needs q > 0")
    radii = [2.0 ** (scale_base * n) * r0 for n in range(1, count + 1)]
    if 2.0 * q * radii[-1] >= 0.95 * grid.nyquist:
        feasible = sum(1 for r in radii if 2.0 * q * r < 0.95 * grid.nyquist)
        raise SizingError(
            f"largest frequency support 2q R = {2 * q * radii[-1]:.6g} exceeds "
            f"the Nyquist frequency; max feasible count is {feasible}",
            max_feasible=feasible)
    # smooth bump on (q, 2q): rise on (q, 1.25q), plateau, fall on (1.75q, 2q)
    members = []
    for r in radii:
        rho = grid.freq_radius / r
        rise = _smooth_step((rho - q) / (0.25 * q))
        fall = _smooth_step((2.0 * q - rho) / (0.25 * q))
        hat = GridFunction(grid, (rise * fall).astype(complex), FREQUENCY)
        if hat.norm() == 0.0:
            raise SizingError(
                f"frequency grid too coarse to resolve the band ({q * r:.4g}, "
                f"{2 * q * r:.4g})")
        members.append(inverse_transform(hat.normalized()))
    return TestFamily(members=tuple(members), kind=FOURIER_SIDE_BUMP,
                      radii=tuple(radii), scale_base=scale_base)


# ---------------------------------------------------------------------------
# certificates


def gram_certificate(op: DiscreteOperator, family: TestFamily, shift: float,
                     theorem: str = "T3_integral") -> Certificate:
    """Assemble the pencil (A, B), A_nm = <(L - shift) phi_n, phi_m>, and
    pass iff its smallest generalized eigenvalue is positive."""
    n = len(family.members)
    hats = [forward_transform(m) for m in family.members]
    form = np.zeros((n, n), dtype=complex)
    overlap = np.zeros((n, n), dtype=complex)
    conv_part = np.zeros((n, n), dtype=complex)
    pot_part = np.zeros((n, n), dtype=complex)
    for i in range(n):
        if family.members[i].grid != op.grid:
            raise UsageError("family member lives on a different grid")
        for j in range(i, n):
            conv = plancherel_inner(
                GridFunction(op.grid, op.multiplier * hats[i].values, FREQUENCY),
                hats[j])
            pot = plancherel_inner(
                GridFunction(op.grid, op.potential_diag * family.members[i].values),
                family.members[j])
            ov = plancherel_inner(family.members[i], family.members[j])
            conv_part[i, j], conv_part[j, i] = conv, np.conj(conv)
            pot_part[i, j], pot_part[j, i] = pot, np.conj(pot)
            overlap[i, j], overlap[j, i] = ov, np.conj(ov)
            a = conv + pot - shift * ov
            form[i, j], form[j, i] = a, np.conj(a)
    herm = max(float(np.max(np.abs(form - form.conj().T))),
               float(np.max(np.abs(overlap - overlap.conj().T))))
    if herm > 1e-10:
        raise UsageError(f"Gram matrices deviate from Hermitian by {herm:.3e}")
    b_eigs = np.linalg.eigvalsh(overlap)
    if b_eigs.min() < 1e-12:
        raise UsageError(
            f"overlap matrix nearly singular (min eig {b_eigs.min():.3e}); "
            "family members are almost dependent")
    vals = eigh(form, overlap, eigvals_only=True)
    min_eig = float(vals[0])
    passed = min_eig > 0.0
    off = np.abs(form - np.diag(np.diag(form)))
    diagnostics = {
        "diagonal": np.real(np.diag(form)).tolist(),
        "max_offdiagonal": float(off.max()) if n > 1 else 0.0,
        "convolution_diagonal": np.real(np.diag(conv_part)).tolist(),
        "potential_diagonal": np.real(np.diag(pot_part)).tolist(),
        "family": family.descriptor(),
    }
    if family.kind == GAUSSIAN:
        diagnostics["theta"] = np.real(pot_part).tolist()
    return Certificate(theorem=theorem, shift=float(shift),
                       gram_form=np.real(form) if np.max(np.abs(form.imag)) < 1e-10
                       else form,
                       gram_overlap=np.real(overlap)
                       if np.max(np.abs(overlap.imag)) < 1e-10 else overlap,
                       min_eig=min_eig, certified_count=n if passed else 0,
                       passed=passed, diagnostics=diagnostics)


def search_scaled_certificate(op: DiscreteOperator, count: int, shift: float,
                              r0_start: Optional[float] = None,
                              m_values=(3, 4, 5), modulation=None,
                              theorem: str = "T3_integral"):
    """Auto-escalate (R0, M) until a scaled-family certificate passes.

    For each M the search starts from the largest ladder that still fits the
    box and shrinks R0 by halving (larger R0 helps: the proof's diagonal
    lower bound decays slower than the off-diagonal terms).  Returns
    (certificate_or_None, trace).
    """
    grid = op.grid
    trace = []
    best = None
    for m in m_values:
        cap = 0.95 * grid.half_width / 2.5 / (2.0 ** (m * count)) * 0.999
        floor = 16.0 * grid.h * 2.0 ** (-m)  # min R0 the grid resolves
        r0 = min(r0_start, cap) if r0_start else cap
        while r0 >= floor:
            try:
                family = scaled_family(grid, r0, m, count, modulation,
                                       compact_kernel=op.kernel.support_radius
                                       is not None)
                cert = gram_certificate(op, family, shift, theorem=theorem)
            except (SizingError, UsageError) as exc:
                trace.append({"M": m, "R0": r0, "outcome": f"error: {exc}"})
                break
            trace.append({"M": m, "R0": r0, "outcome": "pass" if cert.passed
                          else "fail", "min_eig": cert.min_eig})
            if cert.passed:
                return cert, trace
            if best is None or cert.min_eig > best.min_eig:
                best = cert
            r0 /= 2.0
    return best, trace


def gap_perturbation_certificate(kernel: Kernel, v0: Potential, v1: Potential,
                                 grid: Grid, threshold: Optional[float] = None,
                                 k: int = 6, tol: float = 1e-8,
                                 seed: int = 7) -> GapCertificate:
    """Gap eigenvalue of L = a* + V0 + V1 predicted from the unperturbed
    eigenpair (lambda0, u0) of L0 = a* + V0.

    delta = |L u0 - lambda0 u0| (numerically |V1 u0| up to the solver
    residual); pass iff delta < min(lambda0 - a_max, theta_minus - lambda0),
    and on pass the prediction is confirmed with a folded solve in
    (lambda0 - delta, lambda0 + delta).
    """
    from .model import sum_potential

    if v1.support_radius is None:
        raise UsageError("the perturbing potential must have compact support")
    op0 = assemble(kernel, v0, grid)
    consts = op0.constants
    if threshold is None:
        threshold = consts.mu1 + 1e-9
    pairs = eigs_above(op0, threshold, k=k, tol=tol, seed=seed)
    if not pairs:
        raise ConvergenceError(
            "the unperturbed operator has no discrete eigenvalue above "
            f"{threshold}; the gap certificate has no input")
    top = pairs[0]
    lambda0, u0 = top.value, top.vector

    v_total = sum_potential(v0, v1)
    op = assemble(kernel, v_total, grid)

    # theta_minus = inf of the essential range of V1 + V0 1_{supp V1}, sans 0
    v1_vals = np.asarray(v1.evaluate(grid.points), dtype=float)
    on_supp = np.abs(v1_vals) > 0.0
    if not np.any(on_supp):
        theta_minus = math.inf
        support_measure = 0.0
        v1_sup = 0.0
    else:
        combined = v1_vals + np.asarray(v0.evaluate(grid.points), dtype=float)
        theta_minus = float(np.min(combined[on_supp]))
        support_measure = float(np.sum(on_supp) * grid.h ** grid.dim)
        v1_sup = float(np.max(np.abs(v1_vals)))
    if theta_minus <= consts.a_max:
        raise UsageError(
            f"theta_minus = {theta_minus:.6g} does not exceed a_max = "
            f"{consts.a_max:.6g}: no gap opens above the convolution band")
    if theta_minus <= lambda0:
        raise UsageError(
            f"hypothesis failure: theta_minus = {theta_minus:.6g} <= lambda0 "
            f"= {lambda0:.6g}")

    image = apply_operator(op, u0)
    delta = GridFunction(grid, image.values - lambda0 * u0.values).norm()
    margin = min(lambda0 - consts.a_max, theta_minus - lambda0)
    passed = delta < margin
    window = (lambda0 - delta, lambda0 + delta)
    confirmed = None
    if passed and delta > 0:
        solve_window = (lambda0 - max(delta, 1e-9), lambda0 + max(delta, 1e-9))
        try:
            inside = eigs_in_window(op, solve_window, k=2, tol=max(tol, 1e-9),
                                    seed=seed)
        except ConvergenceError:
            inside = []
        if inside:
            confirmed = min(inside, key=lambda p: abs(p.value - lambda0))
    return GapCertificate(lambda0=float(lambda0), u0=top,
                          theta_minus=float(theta_minus), v1_sup=v1_sup,
                          support_measure=support_measure, delta=float(delta),
                          margin=float(margin), passed=passed,
                          predicted_interval=window, confirmed=confirmed)
