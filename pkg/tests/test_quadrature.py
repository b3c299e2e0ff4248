from __future__ import annotations

import math
from fractions import Fraction

import mpmath
import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from rostbarrier.quadrature import (
    adaptive_gauss_legendre,
    cantor_cdf_integral_unit,
    cantor_cdf_unit,
    cantor_gauss_rule,
    cantor_moments,
    gaussian_pdf,
    interval_prob,
    log_interval_prob,
)


def mp_interval_prob(a: float, b: float) -> float:
    # upper-tail form keeps full relative precision for a > 0
    with mpmath.workdps(60):
        if a > 0:
            return float(mpmath.ncdf(-a) - mpmath.ncdf(-b))
        return float(mpmath.ncdf(b) - mpmath.ncdf(a))


@given(st.floats(-40.0, 40.0), st.floats(0.0, 10.0))
def test_interval_prob_against_mpmath(a, width):
    b = a + width
    ref = mp_interval_prob(a, b)
    got = float(interval_prob(a, b))
    assert abs(got - ref) <= 1e-15 + 1e-12 * ref


def test_interval_prob_far_tail_relative_precision():
    assert float(interval_prob(30.0, 31.0)) == pytest.approx(mp_interval_prob(30.0, 31.0), rel=1e-12)
    assert float(log_interval_prob(30.0, 31.0)) == pytest.approx(math.log(mp_interval_prob(30.0, 31.0)), rel=1e-13)
    assert float(log_interval_prob(1.0, 1.0)) == -math.inf


def test_gaussian_pdf_matches_closed_form():
    assert float(gaussian_pdf(0.0, 1.0)) == pytest.approx(1.0 / math.sqrt(2.0 * math.pi), rel=1e-15)
    assert float(gaussian_pdf(1.0, 4.0)) == pytest.approx(math.exp(-0.125) / math.sqrt(8.0 * math.pi), rel=1e-14)


def test_cantor_moments_known_values():
    # symmetry about 1/2 fixes m1; m2..m4 from the self-similarity identity
    assert cantor_moments(5) == [Fraction(1), Fraction(1, 2), Fraction(3, 8), Fraction(5, 16), Fraction(87, 320)]


def test_cantor_moments_against_cell_enumeration():
    left = np.zeros(1)
    for j in range(1, 17):
        left = np.concatenate([left, left + 2.0 * 3.0**-j])
    # uniform mass on each level-16 cell: its k-th moment is exact in closed form
    L = 3.0**-16
    for k, m in enumerate(cantor_moments(7)):
        cell = ((left + L) ** (k + 1) - left ** (k + 1)) / ((k + 1) * L)
        assert float(np.mean(cell)) == pytest.approx(float(m), abs=1e-7)


@pytest.mark.parametrize("n", [1, 2, 4, 8, 12])
def test_cantor_gauss_rule_integrates_polynomials_exactly(n):
    x, w = cantor_gauss_rule(n)
    assert np.all((x > 0.0) & (x < 1.0))
    assert np.all(w > 0.0)
    for k, m in enumerate(cantor_moments(2 * n)):
        assert float(np.dot(w, x**k)) == pytest.approx(float(m), abs=1e-14)


def test_cantor_cdf_self_similarity():
    u = np.linspace(0.0, 1.0, 2001)
    F = cantor_cdf_unit(u, 30)
    assert np.max(np.abs(cantor_cdf_unit(u / 3.0, 30) - 0.5 * F)) < 1e-9
    assert np.max(np.abs(cantor_cdf_unit(1.0 - u, 30) - (1.0 - F))) < 1e-9


def test_cantor_cdf_integral_against_numeric_integral():
    # trapezoid on a triadic grid; F is monotone so the error is below step * F(u)
    z = np.linspace(0.0, 1.0, 3**14 + 1)
    F = cantor_cdf_unit(z, 30)
    cum = np.concatenate([[0.0], np.cumsum(0.5 * (F[1:] + F[:-1]) * np.diff(z))])
    for u in (0.05, 1.0 / 3.0, 0.5, 0.71, 0.9, 1.0, 1.4):
        ref = float(np.interp(min(u, 1.0), z, cum)) + max(u - 1.0, 0.0)
        assert float(cantor_cdf_integral_unit(u, 30)) == pytest.approx(ref, abs=1e-7)
    # the mean is 1/2, so int_0^1 F = 1 - 1/2
    assert float(cantor_cdf_integral_unit(1.0, 30)) == pytest.approx(0.5, abs=1e-15)


def test_adaptive_gauss_legendre_examples():
    assert adaptive_gauss_legendre(np.sin, 0.0, math.pi) == pytest.approx(2.0, abs=1e-13)
    got = adaptive_gauss_legendre(lambda x: np.sqrt(np.abs(x - 0.3)), 0.0, 1.0, breakpoints=[0.3])
    ref = (2.0 / 3.0) * (0.3**1.5 + 0.7**1.5)
    assert got == pytest.approx(ref, abs=1e-12)
