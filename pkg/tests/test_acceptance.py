"""Acceptance gate: 12 desk-scale criteria, one pass/fail line each.

Every criterion is checked against an independent oracle (dense quadrature
matrices, closed-form transforms, exact interval arithmetic) at the stated
tolerance.  Lines are printed outside the capture so a plain `pytest -v`
run shows the verdicts.
"""
import math

import numpy as np

from convspec.certify import (dual_family, gap_perturbation_certificate,
                              gaussian_family, gram_certificate,
                              search_scaled_certificate)
from convspec.grids import (PHYSICAL, AnnulusSpec, Grid, GridFunction,
                            annulus_average_potential, annulus_average_symbol,
                            ell_hat, forward_transform, inverse_transform,
                            plancherel_inner)
from convspec.model import (box_potential, cauchy_kernel, cubic_peak_potential,
                            exponential_kernel, gaussian_kernel,
                            hypothesis_from_moment, power_tail_potential,
                            sum_potential, zero_potential)
from convspec.operators import (apply_operator, assemble, dense_matrix,
                                hermiticity_residual)
from convspec.spectra import (DISCRETE, essential_spectrum, spectral_gaps,
                              weyl_residuals)


def verdict(capsys, num, label, ok):
    with capsys.disabled():
        print(f"\nacceptance {num:02d} {label}: {'PASS' if ok else 'FAIL'}")
    assert ok, f"acceptance criterion {num} ({label}) failed"


def test_01_operator_correctness(capsys):
    worst = 0.0
    cases = [(1, 64, 10.0), (1, 128, 10.0), (2, 32, 8.0)]
    for dim, n, L in cases:
        k = gaussian_kernel(dim)
        v = power_tail_potential(1.0, dim=dim)
        g = Grid(dim, L, n)
        op = assemble(k, v, g, symbol_source="samples")
        mat = dense_matrix(op)
        rng = np.random.default_rng(0)
        for _ in range(3):
            u = rng.standard_normal(g.shape) + 1j * rng.standard_normal(g.shape)
            lhs = apply_operator(op, GridFunction(g, u, PHYSICAL)).values.ravel()
            rhs = mat @ u.ravel()
            worst = max(worst, np.linalg.norm(lhs - rhs) / np.linalg.norm(rhs))
    verdict(capsys, 1, f"fft matvec vs dense quadrature (worst {worst:.2e})",
            worst <= 1e-10)


def test_02_self_adjointness(capsys):
    import itertools

    from convspec.model import (gaussian_bump_potential, uniform_kernel,
                                zero_kernel)

    kernels = [gaussian_kernel(1), cauchy_kernel(), exponential_kernel(),
               uniform_kernel(1), zero_kernel(1)]
    potentials = [zero_potential(1), power_tail_potential(1.0),
                  gaussian_bump_potential(1.0), box_potential(-0.5),
                  cubic_peak_potential(2.0)]
    g = Grid(1, 12.0, 128)
    worst = 0.0
    for k, v in itertools.product(kernels, potentials):
        op = assemble(k, v, g)
        worst = max(worst, hermiticity_residual(op, trials=20, seed=1))
    verdict(capsys, 2, f"hermiticity residual (worst {worst:.2e})",
            worst <= 1e-10)


def test_03_plancherel_round_trip(capsys):
    g = Grid(1, 20.0, 512)
    rng = np.random.default_rng(2)
    worst_rt, worst_ip = 0.0, 0.0
    for seed in range(5):
        vals = rng.standard_normal(512) + 1j * rng.standard_normal(512)
        f = GridFunction(g, vals, PHYSICAL)
        back = inverse_transform(forward_transform(f))
        worst_rt = max(worst_rt, float(np.max(np.abs(back.values - vals))))
        h = GridFunction(g, rng.standard_normal(512)
                         + 1j * rng.standard_normal(512), PHYSICAL)
        a = plancherel_inner(f, h)
        b = plancherel_inner(forward_transform(f), forward_transform(h))
        worst_ip = max(worst_ip, abs(a - b) / abs(a))
    verdict(capsys, 3,
            f"round trip {worst_rt:.2e}, parseval {worst_ip:.2e}",
            worst_rt <= 1e-12 and worst_ip <= 1e-10)


def test_04_essential_spectrum_union(capsys):
    k = gaussian_kernel(1)
    v = box_potential(-0.5)
    ess = essential_spectrum(k, v)
    exact = ess.to_json() == [[-0.5, -0.5], [0.0, 1.0]]
    gaps = spectral_gaps(ess, (-0.5, 1.0)) == [(-0.5, 0.0)]
    hist = essential_spectrum(k, v, use_analytic_range=False)
    hist_ok = (len(hist.intervals) == 2
               and abs(hist.intervals[0][0] + 0.5) <= 1e-2
               and abs(hist.intervals[0][1] + 0.5) <= 1e-2
               and abs(hist.intervals[1][0]) <= 1e-2
               and abs(hist.intervals[1][1] - 1.0) <= 1e-2)
    verdict(capsys, 4, "essential spectrum band+range and gap",
            exact and gaps and hist_ok)


def test_05_weyl_residual_decay(capsys):
    big = Grid(1, 1024.0, 4096)
    sym = weyl_residuals(gaussian_kernel(1), zero_potential(1),
                         math.exp(-0.5), "symbol_point", [8, 16, 32, 64], big)
    r_sym = sym.residuals()
    fine = Grid(1, 16.0, 65536)
    pot = weyl_residuals(gaussian_kernel(1), box_potential(-0.5), -0.5,
                         "potential_point", [8, 16, 32, 64], fine)
    r_pot = pot.residuals()
    vt_rep = weyl_residuals(gaussian_kernel(1), power_tail_potential(0.2), 1.0,
                            "symbol_point", [8, 16, 32, 64], big)
    ns = np.array([e.n for e in vt_rep.entries], dtype=float)
    vt = np.array([e.potential_term for e in vt_rep.entries])
    slope = float(np.polyfit(np.log(ns), np.log(vt), 1)[0])
    ok = (r_sym[-1] < r_sym[0] / 4.0 and r_pot[-1] < r_pot[0] / 4.0
          and abs(slope - (-0.25)) < 0.3)
    verdict(capsys, 5,
            f"weyl ratios {r_sym[-1]/r_sym[0]:.3f}/{r_pot[-1]/r_pot[0]:.3f}, "
            f"V-term slope {slope:.3f}", ok)


def test_06_scaled_certificate(capsys):
    k = gaussian_kernel(1)
    v = power_tail_potential(1.0)
    # the alpha = 2 decay hypothesis comes from the finite second moment
    hyp = hypothesis_from_moment(k)
    assert hyp.exponent == 2.0
    op = assemble(k, v, Grid(1, 600.0, 8192))
    cert, _ = search_scaled_certificate(op, 3, 1.0)
    cert_ok = cert is not None and cert.passed and cert.certified_count == 3
    counts = []
    for L in (20.0, 40.0, 80.0, 160.0):
        g = Grid(1, L, int(2 * L / 0.3125))
        ev = np.linalg.eigvalsh(dense_matrix(assemble(k, v, g,
                                                      symbol_source="samples")))
        counts.append(int(np.sum(ev > 1.0 + 1e-9)))
    dense_ok = counts[0] >= 3
    monotone = all(b >= a for a, b in zip(counts, counts[1:]))
    verdict(capsys, 6,
            f"scaled certificate + dense counts {counts}",
            cert_ok and dense_ok and monotone)


def test_07_heavy_tail_certificate(capsys):
    k = cauchy_kernel()
    v = power_tail_potential(0.2)
    ratios = []
    for r in (4.0, 16.0, 64.0, 256.0):
        avg, _ = annulus_average_potential(v, AnnulusSpec(inner_radius=r))
        ratios.append(ell_hat(k, 1.0 / r) / avg)
    decreasing = all(b < a for a, b in zip(ratios, ratios[1:]))
    op = assemble(k, v, Grid(1, 1024.0, 16384))
    cert = gram_certificate(op, gaussian_family(op.grid, 4.0, 2),
                            op.constants.mu1, theorem="heavy_tail")
    closed = all(
        abs(ell_hat(gaussian_kernel(1), r)
            - math.sqrt(math.pi) * (1 - (1 + r * r / 2) ** -0.5)) <= 1e-8
        for r in (0.1, 1.0, 10.0))
    verdict(capsys, 7,
            f"ratio diag {['%.3f' % r for r in ratios]}, cert {cert.passed}",
            decreasing and cert.passed and closed)


def test_08_dual_certificate(capsys):
    k = exponential_kernel()
    v = cubic_peak_potential(2.0)
    op = assemble(k, v, Grid(1, 2.0, 65536))
    fam = dual_family(op.grid, q=1.0, count=2, scale_base=3, r0=200.0)
    cert = gram_certificate(op, fam, v.v_max, theorem="T5_dual")
    gd = Grid(1, 64.0, 1024)
    ev = np.linalg.eigvalsh(dense_matrix(assemble(k, v, gd,
                                                  symbol_source="samples")))
    dense_count = int(np.sum(ev > v.v_max + 1e-9))
    verdict(capsys, 8,
            f"dual certificate {cert.passed}, dense count {dense_count}",
            cert.passed and cert.certified_count == 2 and dense_count >= 2)


def test_09_gap_certificate(capsys):
    k = gaussian_kernel(1)
    v0 = power_tail_potential(1.0)
    v1 = box_potential(3.0, half_width=0.5, center=6.0)
    g = Grid(1, 40.0, 1024)
    cert = gap_perturbation_certificate(k, v0, v1, g)
    lo, hi = cert.predicted_interval
    in_gap = 1.0 < lo and hi < cert.theta_minus
    ev = np.linalg.eigvalsh(dense_matrix(assemble(k, sum_potential(v0, v1), g,
                                                  symbol_source="samples")))
    inside = ev[(ev > lo) & (ev < hi)]
    agree = (cert.confirmed is not None and inside.size > 0
             and float(np.min(np.abs(inside - cert.confirmed.value))) <= 1e-7)
    wide = box_potential(3.0, half_width=3.0, center=3.0)
    flipped = not gap_perturbation_certificate(k, v0, wide, g).passed
    verdict(capsys, 9,
            f"gap cert delta {cert.delta:.2e} < margin {cert.margin:.2e}, "
            f"dense agreement, widened flip {flipped}",
            cert.passed and in_gap and agree and flipped)


def test_10_spectrum_containment(capsys, shipped_reports):
    checked, ok = 0, True
    for name, rep in shipped_reports.items():
        res = rep["results"]
        if "eigenvalues" not in res:
            continue
        c = rep["constants"]
        lo, hi = c["a_min"] + c["v_min"] - 1e-8, c["a_max"] + c["v_max"] + 1e-8
        from convspec.intervals import IntervalUnion
        ess = IntervalUnion.from_json(res["essential_spectrum"])
        for e in res["eigenvalues"]:
            if not e["converged"]:
                continue
            checked += 1
            ok &= lo <= e["value"] <= hi
            if e["classification"] == DISCRETE:
                ok &= ess.distance(e["value"]) > 1e-3
    verdict(capsys, 10,
            f"containment of {checked} Ritz values across shipped scenarios",
            ok and checked > 0)


def test_11_annulus_average_oracles(capsys):
    v, _ = annulus_average_potential(power_tail_potential(1.0),
                                     AnnulusSpec(inner_radius=1.0))
    s, _ = annulus_average_symbol(cauchy_kernel(), AnnulusSpec(inner_radius=1.0))
    ok = (abs(v - math.log(1.5)) <= 1e-8
          and abs(s - (math.exp(-1) - math.exp(-2))) <= 1e-8)
    verdict(capsys, 11, f"<V>(1)={v:.10f}, <a-hat>(1)={s:.10f}", ok)


def test_12_determinism(capsys, shipped_reports):
    from convspec.scenarios import run_scenario
    from conftest import load_scenario

    ok = True
    for name in ("essential_gaussian_well.json", "eigs_window.json",
                 "weyl_vterm.yaml"):
        again = run_scenario(load_scenario(name))
        ok &= again["determinism_hash"] == shipped_reports[name]["determinism_hash"]
    verdict(capsys, 12, "repeated runs hash identically", ok)
