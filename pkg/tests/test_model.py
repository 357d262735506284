import math

import numpy as np
import pytest

from convspec.errors import ConfigError, DivergentIntegralError
from convspec.intervals import IntervalUnion
from convspec.model import (BUILTIN_KERNELS, BUILTIN_POTENTIALS, DIVERGENT,
                            DecayHypothesis, box_potential, cauchy_kernel,
                            check_hypothesis, cubic_peak_potential,
                            essential_range, exponential_kernel, fourier_symbol,
                            gaussian_bump_potential, gaussian_kernel,
                            hypothesis_from_moment, power_tail_potential,
                            second_moment, spectral_constants, sum_potential,
                            uniform_kernel, zero_kernel, zero_potential)


# --- kernel metadata ------------------------------------------------------

def test_builtin_catalogues_complete():
    assert {"gaussian", "cauchy", "exponential", "uniform", "zero"} <= set(BUILTIN_KERNELS)
    assert {"zero", "power_tail", "cubic_peak", "gaussian_bump", "box"} <= set(BUILTIN_POTENTIALS)


def test_symbols_at_zero_are_one():
    # all builtin non-zero kernels are probability densities
    for name in ("gaussian", "cauchy", "exponential", "uniform"):
        k = BUILTIN_KERNELS[name](dim=1)
        assert fourier_symbol(k, [[0.0]])[0] == pytest.approx(1.0, abs=1e-14)


def test_kernel_mass_is_one():
    # 2 * integral over [0, R] (all builtins are even; splitting at 0 keeps
    # the exponential kernel's kink off the quadrature interval)
    nodes, weights = np.polynomial.legendre.leggauss(4096)
    for name in ("gaussian", "exponential", "uniform"):
        k = BUILTIN_KERNELS[name](dim=1)
        rad = k.support_radius or 200.0
        x = 0.5 * rad * (nodes + 1.0)
        w = 0.5 * rad * weights
        assert 2.0 * float(np.sum(w * k.evaluate(x))) == pytest.approx(1.0, abs=1e-8)


def test_gaussian_symbol_closed_form():
    k = gaussian_kernel(1)
    xi = np.linspace(-6, 6, 101)[:, None]
    assert np.allclose(fourier_symbol(k, xi), np.exp(-xi[:, 0] ** 2 / 2), atol=1e-15)


def test_exponential_symbol_closed_form():
    k = exponential_kernel()
    xi = np.linspace(-10, 10, 101)[:, None]
    assert np.allclose(fourier_symbol(k, xi), 1.0 / (1.0 + xi[:, 0] ** 2), atol=1e-15)


def test_uniform_symbol_min():
    # inf of sin(t)/t: first negative lobe, frozen from a dense scan
    k = uniform_kernel(1)
    t = np.linspace(3.0, 6.0, 2_000_001)
    assert k.a_min == pytest.approx(float(np.min(np.sin(t) / t)), abs=1e-12)
    assert k.a_min == pytest.approx(-0.21723362821122166, abs=1e-15)


def test_second_moments():
    assert second_moment(gaussian_kernel(1)) == pytest.approx(1.0)
    assert second_moment(gaussian_kernel(2)) == pytest.approx(2.0)
    assert second_moment(exponential_kernel()) == pytest.approx(2.0)
    assert second_moment(uniform_kernel(1)) == pytest.approx(1.0 / 3.0)
    assert cauchy_kernel().second_moment is DIVERGENT
    with pytest.raises(DivergentIntegralError):
        second_moment(cauchy_kernel())


def test_second_moment_quadrature_divergence_detection():
    # strip the metadata so the quadrature path has to discover the
    # divergence on its own
    from dataclasses import replace
    bare = replace(cauchy_kernel(), second_moment=None)
    with pytest.raises(DivergentIntegralError):
        second_moment(bare)


def test_second_moment_quadrature_matches_metadata():
    from dataclasses import replace
    bare = replace(gaussian_kernel(1), second_moment=None)
    assert second_moment(bare) == pytest.approx(1.0, abs=1e-10)


# --- decay hypotheses -----------------------------------------------------

def test_hypothesis_from_moment():
    hyp = hypothesis_from_moment(gaussian_kernel(1))
    assert hyp.side == "symbol_near_zero"
    assert hyp.exponent == 2.0
    assert hyp.constant == pytest.approx(0.5)
    rep = check_hypothesis(gaussian_kernel(1), hyp, span=10.0)
    assert rep.passed


def test_hypothesis_checks_builtins():
    # exponential kernel: 1/(1+s^2) >= 1 - s^2 everywhere
    rep = check_hypothesis(exponential_kernel(), hypothesis_from_moment(exponential_kernel()),
                           span=20.0)
    assert rep.passed
    # potential tail: (1+r)^-1 >= 2^-1 r^-1 for r >= 1
    v = power_tail_potential(1.0)
    assert v.decay is not None
    assert check_hypothesis(v, v.decay).passed
    # a deliberately false bound is reported with a negative margin
    bad = DecayHypothesis("potential_at_infinity", exponent=0.5, constant=5.0,
                          threshold=1.0)
    rep = check_hypothesis(v, bad)
    assert not rep.passed and rep.worst_margin < 0


def test_hypothesis_validation():
    with pytest.raises(ConfigError):
        DecayHypothesis("sideways", 1.0, 1.0, 1.0)
    with pytest.raises(ConfigError):
        DecayHypothesis("symbol_near_zero", -1.0, 1.0, 1.0)


# --- spectral constants ---------------------------------------------------

def test_spectral_constants_gaussian_power_tail():
    c = spectral_constants(gaussian_kernel(1), power_tail_potential(1.0))
    assert (c.a_min, c.a_max) == (0.0, 1.0)
    assert (c.v_min, c.v_max) == (0.0, 1.0)
    assert c.mu0 == 0.0 and c.mu1 == 1.0


def test_spectral_constants_well():
    c = spectral_constants(gaussian_kernel(1), box_potential(-0.5))
    assert c.v_min == -0.5 and c.v_max == 0.0
    assert c.mu0 == -0.5 and c.mu1 == 1.0


def test_spectral_constants_grid_estimate_clamps_to_limit():
    # drop the exact metadata: the symbol inf over a finite grid must be
    # clamped with the limit value 0 at infinity
    from dataclasses import replace
    bare = replace(gaussian_kernel(1), a_min=None, a_max=None)
    c = spectral_constants(bare, zero_potential(1))
    assert c.a_min == 0.0
    assert c.a_max == pytest.approx(1.0, abs=1e-8)
    assert c.argmax_xi[0] == pytest.approx(0.0, abs=1e-2)


# --- potentials -----------------------------------------------------------

def test_potential_sign_invariant():
    with pytest.raises(ConfigError):
        # a potential vanishing at infinity cannot be strictly positive
        from convspec.model import Potential
        Potential(dim=1, name="bad", v_min=0.5, v_max=1.0)


def test_box_potential_essential_range():
    v = box_potential(-0.5)
    assert v.essential_range.to_json() == [[-0.5, -0.5], [0.0, 0.0]]
    assert v.evaluate([[0.0]])[0] == -0.5
    assert v.evaluate([[2.0]])[0] == 0.0


def test_essential_range_histogram_matches_analytic():
    v = box_potential(-0.5)
    hist = essential_range(v, use_analytic=False, bins=256)
    # two components, each within a bin width of the analytic answer
    assert len(hist.intervals) == 2
    assert hist.distance(-0.5) < 1e-2
    assert hist.distance(0.0) < 1e-2
    gap = hist.interior_gaps()[0]
    assert gap[0] < -0.45 and gap[1] > -0.05


def test_essential_range_continuous_potential():
    # continuous decaying potential: essential range fills [0, v_max]
    v = power_tail_potential(1.0)
    assert v.essential_range.to_json() == [[0.0, 1.0]]
    hist = essential_range(v, use_analytic=False)
    assert hist.lo == pytest.approx(0.0, abs=1e-2)
    # the top of the range carries vanishing measure (V is near its sup only
    # on a tiny set), so the histogram may clip it; most of [0, 1] survives
    assert hist.hi > 0.9
    assert hist.contains(0.5)


def test_sum_potential():
    v = sum_potential(power_tail_potential(1.0), box_potential(3.0, 0.5, 6.0))
    assert v.evaluate([[6.0]])[0] == pytest.approx(3.0 + 1.0 / 7.0)
    assert v.evaluate([[0.0]])[0] == pytest.approx(1.0)
    # sup sits at the left edge of the box, x = 5.5
    assert v.v_max == pytest.approx(3.0 + 1.0 / 6.5, abs=1e-3)
    assert v.v_min == 0.0


def test_gaussian_bump_and_cubic_peak():
    b = gaussian_bump_potential(2.0, width=1.5)
    assert b.v_max == 2.0 and b.v_min == 0.0
    assert b.evaluate([[0.0]])[0] == pytest.approx(2.0)
    p = cubic_peak_potential(2.0)
    assert p.v_max == 2.0
    assert p.evaluate([[1.0]])[0] == pytest.approx(1.0)


def test_zero_objects():
    k = zero_kernel(1)
    assert k.a_min == k.a_max == 0.0
    v = zero_potential(1)
    assert v.v_min == v.v_max == 0.0
    assert v.essential_range.to_json() == [[0.0, 0.0]]


def test_power_tail_rejects_bad_gamma():
    with pytest.raises(ConfigError):
        power_tail_potential(0.0)
    with pytest.raises(ConfigError):
        power_tail_potential(-1.0)
