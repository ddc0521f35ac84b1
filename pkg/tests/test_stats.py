import math

import numpy as np
import pytest
from hypothesis import assume, given, settings
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays

from aqcoloc.analysis import (
    DegenerateFitError,
    InsufficientDataError,
    UndefinedCorrelationError,
    fit_linear_calibration,
    pearson,
    spearman,
)
from oracles import ols_oracle, pearson_oracle, spearman_oracle


def test_self_correlation():
    x = np.array([3.0, 1.0, 4.0, 1.0, 5.0, 9.0, 2.0, 6.0])
    assert abs(pearson(x, x) - 1.0) <= 1e-12


def test_perfect_anticorrelation():
    assert pearson([1, 2, 3], [3, 2, 1]) == -1.0


def test_pearson_frozen_oracle_value():
    # 10 / sqrt(148), from the oracle and by hand
    assert abs(pearson([1, 2, 3, 4, 5], [2, 1, 4, 3, 6]) - 0.8219949365267865) <= 1e-12


def test_pearson_preconditions():
    with pytest.raises(InsufficientDataError):
        pearson([1, 2], [1, 2])
    with pytest.raises(UndefinedCorrelationError):
        pearson([1, 1, 1], [1, 2, 3])
    with pytest.raises(UndefinedCorrelationError):
        spearman([1, 2, 3], [4, 4, 4])
    with pytest.raises(ValueError):
        pearson([1, 2, 3], [1, 2])


def test_spearman_monotone_transform():
    x = np.linspace(-2, 3, 40)
    assert spearman(x, np.exp(x)) == 1.0
    assert spearman(x, -np.exp(x)) == -1.0


def test_spearman_ties_frozen():
    # ranks (1.5, 1.5, 3) vs (1, 2, 3) -> sqrt(3)/2
    assert abs(spearman([1, 1, 2], [1, 2, 3]) - 0.8660254037844386) <= 1e-12
    assert abs(spearman([1, 1, 2], [1, 2, 3]) - spearman_oracle([1, 1, 2], [1, 2, 3])) <= 1e-12


def test_fit_exact_affine():
    x = np.array([1.0, 2.0, 3.0, 4.0])
    fit = fit_linear_calibration(x, 2 * x + 1)
    assert (fit.slope, fit.intercept, fit.r_squared) == pytest.approx((2.0, 1.0, 1.0), abs=1e-12)


def test_fit_identity():
    x = np.array([0.5, 7.0, 3.0, 2.2])
    fit = fit_linear_calibration(x, x)
    assert fit.slope == pytest.approx(1.0, abs=1e-12) and fit.intercept == pytest.approx(0.0, abs=1e-12)


def test_fit_noisy_matches_normal_equations(rng):
    x = rng.normal(20, 5, 800)
    y = 0.9 * x + 3 + rng.normal(0, 2, 800)
    fit = fit_linear_calibration(x, y)
    slope, intercept = ols_oracle(x, y)
    assert fit.slope == pytest.approx(slope, rel=1e-9)
    assert fit.intercept == pytest.approx(intercept, rel=1e-9)
    assert abs(fit.r_squared - pearson(x, y) ** 2) <= 1e-9


def test_fit_degenerate():
    with pytest.raises(DegenerateFitError):
        fit_linear_calibration([2, 2, 2], [1, 2, 3])


# concentrations: no subnormal-scale values whose squares underflow
finite = st.floats(-1e6, 1e6, allow_nan=False, allow_infinity=False).map(lambda v: round(v, 6))


@st.composite
def paired(draw, min_size=3, max_size=60):
    n = draw(st.integers(min_size, max_size))
    if draw(st.booleans()):
        elems = st.integers(-5, 5).map(float)  # heavy ties
    else:
        elems = finite
    x = draw(arrays(np.float64, n, elements=elems))
    y = draw(arrays(np.float64, n, elements=elems))
    return x, y


def _defined(x, y):
    return np.ptp(x) > 0 and np.ptp(y) > 0


@settings(max_examples=300, deadline=None)
@given(paired())
def test_pearson_matches_oracle(xy):
    x, y = xy
    assume(_defined(x, y))
    assert abs(pearson(x, y) - pearson_oracle(x, y)) <= 1e-12


@settings(max_examples=300, deadline=None)
@given(paired())
def test_spearman_matches_oracle(xy):
    x, y = xy
    assume(_defined(x, y))
    r = spearman(x, y)
    assert -1.0 <= r <= 1.0
    assert abs(r - spearman_oracle(x, y)) <= 1e-12


@settings(max_examples=300, deadline=None)
@given(paired())
def test_range_and_symmetry(xy):
    x, y = xy
    assume(_defined(x, y))
    assert -1.0 <= pearson(x, y) <= 1.0
    assert pearson(x, y) == pearson(y, x)
    assert spearman(x, y) == spearman(y, x)


@settings(max_examples=300, deadline=None)
@given(paired(), st.floats(0.01, 100), st.booleans(), st.floats(-100, 100))
def test_affine_invariance(xy, a, neg, b):
    x, y = xy
    assume(_defined(x, y))
    a = -a if neg else a
    assert abs(pearson(a * x + b, y) - math.copysign(1.0, a) * pearson(x, y)) <= 1e-9


@settings(max_examples=300, deadline=None)
@given(paired(), st.sampled_from(["cube", "exp", "affine"]))
def test_monotone_invariance(xy, f):
    x, y = xy
    x = np.round(x / 1e4, 2)  # spacing large enough that f keeps order strictly
    assume(_defined(x, y))
    fx = {"cube": x ** 3 + x, "exp": np.exp(x / 100), "affine": 3 * x + 7}[f]
    assert spearman(fx, y) == spearman(x, y)


@settings(max_examples=300, deadline=None)
@given(paired())
def test_r_squared_is_pearson_squared(xy):
    x, y = xy
    assume(_defined(x, y))
    fit = fit_linear_calibration(x, y)
    assert abs(fit.r_squared - pearson(x, y) ** 2) <= 1e-9
    s, b = ols_oracle(x, y)
    scale = np.abs(y).max() + np.abs(x).max() * abs(s)
    assert math.isclose(fit.slope, s, rel_tol=1e-9, abs_tol=1e-12)
    assert math.isclose(fit.intercept, b, rel_tol=1e-9, abs_tol=1e-9 * scale)
