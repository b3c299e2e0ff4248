from __future__ import annotations

import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from rostbarrier.errors import MeasureError, UnsupportedSampling
from rostbarrier.measures import (
    Cantor,
    Measure,
    cdf,
    component_from_spec,
    hat_b,
    signed_stieltjes,
    stieltjes,
    support_info,
)

from .conftest import atom0, cantor_mixture, gap_measure, normal11, uniform02


def cantor_unit(depth: int = 30) -> Measure:
    return Measure.from_spec({"components": [{"kind": "cantor", "a": 0.0, "b": 1.0, "depth": depth, "w": 1.0}]})


def cantor_cells(depth: int) -> np.ndarray:
    """Left ends of the 2**depth level-``depth`` Cantor cells on [0, 1]."""
    left = np.zeros(1)
    for j in range(1, depth + 1):
        left = np.concatenate([left, left + 2.0 * 3.0**-j])
    return np.sort(left)


def riemann_stieltjes(f, m: Measure, lo: float, hi: float, n: int = 1_000_000) -> float:
    y = np.linspace(lo, hi, n + 1)
    F = m.cdf(y)
    return float(np.sum(f(0.5 * (y[1:] + y[:-1])) * np.diff(F)))


ANALYTIC = {
    "uniform": (uniform02(), -0.5, 2.5),
    "normal": (normal11(), -9.0, 11.0),
    "exponential": (Measure.from_spec({"components": [{"kind": "exponential", "rate": 1.5, "w": 1.0}]}), -0.5, 30.0),
    "gap": (gap_measure(), -0.5, 2.5),
    "polynomial": (Measure.from_spec({"components": [{"kind": "polynomial", "a": 0.0, "b": 1.0,
                                                       "coeffs": [1.0, 0.0, 3.0], "w": 1.0}]}), -0.5, 1.5),
}
TEST_FUNCTIONS = {
    "one": lambda y: np.ones_like(y),
    "y": lambda y: y,
    "y2": lambda y: y * y,
    "bump": lambda y: np.exp(-((y - 0.7) ** 2) / 0.02),
}


# --- cdf --------------------------------------------------------------------


def test_cdf_examples():
    assert cdf(uniform02(), 1.0) == pytest.approx(0.5, abs=1e-15)
    assert cdf(atom0(), 0.0) == 1.0
    assert cdf(atom0(), -1e-9) == 0.0
    assert cdf(cantor_unit(20), 1.0 / 3.0) == pytest.approx(0.5, abs=2.0**-20)


def test_cantor_cdf_against_cell_enumeration():
    depth = 12
    cells = cantor_cells(depth)
    m = cantor_unit(depth)
    rng = np.random.default_rng(3)
    x = rng.random(200)
    # truncated measure: uniform on each cell of width 3^-depth and mass 2^-depth
    width = 3.0**-depth
    ref = np.array([np.sum(np.clip((xi - cells) / width, 0.0, 1.0)) for xi in x]) * 2.0**-depth
    assert np.max(np.abs(m.cdf(x) - ref)) < 1e-12


@pytest.mark.parametrize("name", sorted(ANALYTIC) + ["cantor_mixture"])
def test_cdf_monotone_and_normalised(name):
    m, lo, hi = ANALYTIC[name] if name in ANALYTIC else (cantor_mixture(), -3.0, 3.0)
    y = np.linspace(lo - 1.0, hi + 1.0, 20001)
    F = m.cdf(y)
    assert np.all(np.diff(F) >= 0.0)
    assert F[0] == pytest.approx(0.0, abs=1e-10)
    top = m.hull()[1]
    if math.isfinite(top):
        assert m.cdf(top) == pytest.approx(1.0, abs=1e-10)


def test_component_masses_equal_weights():
    for m in (gap_measure(), cantor_mixture()):
        for c in m.components:
            lo, hi = c.hull()
            assert float(c.cdf(hi) - c.cdf(lo - 1.0)) == pytest.approx(c.w, abs=1e-12)


# --- validation -------------------------------------------------------------


def test_weights_must_sum_to_one():
    with pytest.raises(MeasureError):
        Measure.from_spec({"components": [{"kind": "uniform", "a": 0, "b": 1, "w": 0.9}]})


@pytest.mark.parametrize("spec", [
    {"kind": "uniform", "a": 1.0, "b": 0.0, "w": 1.0},
    {"kind": "normal", "mean": 0.0, "var": -1.0, "w": 1.0},
    {"kind": "exponential", "rate": 0.0, "w": 1.0},
    {"kind": "cantor", "a": 0.0, "b": 1.0, "depth": 0, "w": 1.0},
    {"kind": "atom", "x": 0.0, "w": 0.0},
    {"kind": "atom", "x": 0.0, "w": 1.0, "extra": 1},
    {"kind": "banana", "w": 1.0},
    {"kind": "polynomial", "a": 0.0, "b": 1.0, "coeffs": [1.0, -3.0], "w": 1.0},
])
def test_bad_component_specs_rejected(spec):
    with pytest.raises(MeasureError):
        component_from_spec(spec)


def test_spec_round_trip():
    for m in (gap_measure(), cantor_mixture(), normal11(), atom0()):
        assert Measure.from_spec(m.to_spec()) == m


def test_singular_measures_cannot_be_sampled():
    with pytest.raises(UnsupportedSampling):
        cantor_unit().sample(np.random.default_rng(0), 5)


# --- supports and hat_b -----------------------------------------------------


def test_support_info_examples():
    info = support_info(uniform02(), atom0())
    assert (info.a_plus, info.a_minus) == (0.0, 0.0)
    assert (info.mu_plus, info.mu_minus) == (2.0, 0.0)
    info = support_info(normal11(), atom0())
    assert info.mu_plus == math.inf and info.mu_minus == math.inf


def test_support_info_rejects_nu_off_origin():
    nu = Measure.from_spec({"components": [{"kind": "atom", "x": 0.5, "w": 1.0}]})
    with pytest.raises(MeasureError):
        support_info(uniform02(), nu)


def test_hat_b_examples():
    assert hat_b(uniform02(), atom0()) == (math.inf, 0.0)
    assert hat_b(normal11(), atom0()) == (0.0, 0.0)
    assert hat_b(gap_measure(), atom0()) == (math.inf, 0.0)
    assert hat_b(cantor_mixture(), atom0()) == (1.0, 1.0)


def test_hat_b_rejects_atoms_and_charged_hull():
    with pytest.raises(MeasureError):
        hat_b(atom0(), atom0())
    nu = Measure.from_spec({"components": [{"kind": "uniform", "a": -1.0, "b": 1.0, "w": 1.0}]})
    with pytest.raises(MeasureError):
        hat_b(normal11(), nu)


@pytest.mark.parametrize("mu", [uniform02(), normal11(), gap_measure(), cantor_mixture()])
def test_hat_b_interval_is_maximal_null_interval(mu):
    hm, hp = hat_b(mu, atom0())
    lo, hi = -hm, hp
    assert mu.mass(max(lo, -1e6), min(hi, 1e6)) < 1e-12
    eps = 1e-6
    if math.isfinite(hi):
        assert mu.mass(hi, hi + eps) > 0.0
    if math.isfinite(lo):
        assert mu.mass(lo - eps, lo) > 0.0


# --- Stieltjes integration --------------------------------------------------


def test_stieltjes_examples():
    one = TEST_FUNCTIONS["one"]
    ident = TEST_FUNCTIONS["y"]
    assert stieltjes(one, uniform02(), 0.0, 2.0) == pytest.approx(1.0, abs=1e-12)
    assert stieltjes(ident, uniform02(), 0.0, 2.0) == pytest.approx(1.0, abs=1e-12)
    assert stieltjes(ident, cantor_unit(20), 0.0, 1.0) == pytest.approx(0.5, abs=1e-10)


def test_stieltjes_cantor_against_cell_enumeration():
    depth = 20
    cells = cantor_cells(depth)
    mid = cells + 0.5 * 3.0**-depth
    m = cantor_unit(depth)
    for f in TEST_FUNCTIONS.values():
        ref = float(np.mean(f(mid)))
        assert abs(stieltjes(f, m, 0.0, 1.0) - ref) < 1e-10


def test_signed_stieltjes_examples():
    one = TEST_FUNCTIONS["one"]
    assert signed_stieltjes(one, atom0(), uniform02(), -1.0, 3.0) == pytest.approx(0.0, abs=1e-12)
    assert signed_stieltjes(one, atom0(), uniform02(), -0.5, 0.5) == pytest.approx(0.75, abs=1e-12)
    got = signed_stieltjes(TEST_FUNCTIONS["y2"], atom0(), uniform02(), 0.0, 2.0)
    assert got == pytest.approx(-4.0 / 3.0, abs=1e-12)


def test_stieltjes_infinite_limits_clip_to_support():
    assert stieltjes(TEST_FUNCTIONS["y"], normal11(), -math.inf, math.inf) == pytest.approx(1.0, abs=1e-10)


@pytest.mark.parametrize("mname", sorted(ANALYTIC))
@pytest.mark.parametrize("fname", sorted(TEST_FUNCTIONS))
def test_stieltjes_against_riemann_stieltjes(mname, fname):
    m, lo, hi = ANALYTIC[mname]
    f = TEST_FUNCTIONS[fname]
    ref = riemann_stieltjes(f, m, lo, hi)
    assert abs(stieltjes(f, m, lo, hi) - ref) < 1e-8


@given(st.lists(st.floats(-3.0, 4.0), min_size=3, max_size=3, unique=True),
       st.sampled_from(sorted(ANALYTIC) + ["cantor_mixture"]), st.sampled_from(sorted(TEST_FUNCTIONS)))
def test_stieltjes_additive_over_adjacent_intervals(points, mname, fname):
    a, b, c = sorted(points)
    m = ANALYTIC[mname][0] if mname in ANALYTIC else cantor_mixture()
    f = TEST_FUNCTIONS[fname]
    whole = stieltjes(f, m, a, c)
    parts = stieltjes(f, m, a, b) + stieltjes(f, m, b, c)
    assert abs(whole - parts) < 2e-10


def test_atoms_use_half_open_intervals():
    one = TEST_FUNCTIONS["one"]
    assert stieltjes(one, atom0(), -1.0, 0.0) == 1.0
    assert stieltjes(one, atom0(), 0.0, 1.0) == 0.0


def test_cantor_depth_bounds_cdf_error():
    deep, shallow = Cantor(0.0, 1.0, depth=30), Cantor(0.0, 1.0, depth=8)
    x = np.linspace(0.0, 1.0, 5001)
    assert np.max(np.abs(deep.cdf(x) - shallow.cdf(x))) <= 2.0**-8 + 2.0**-30
