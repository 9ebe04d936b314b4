import math

import numpy as np
import pytest
from hypothesis import given, strategies as st

from spinbound.errors import ApproximationFailure, DomainError, InsufficientData
from spinbound.interaction import (BUILTIN, Interaction, approximate, builtin,
                                   coefficient_decay_check, fourier_coefficient, holder,
                                   load_coefficients_csv, partial_sum_error, trig_interaction)

from oracles import ABS_K1


def test_fourier_orthogonality():
    f = builtin("xy")
    assert fourier_coefficient(f, 1) == pytest.approx(1.0, abs=1e-10)
    assert abs(fourier_coefficient(f, 2)) <= 1e-10


def test_fourier_abs():
    f = builtin("abs_kink")
    assert fourier_coefficient(f, 1) == pytest.approx(ABS_K1, abs=1e-6)
    # hand-computed -4 / (pi k^2) for odd k, 0 for even k
    for k in (3, 5, 7):
        assert fourier_coefficient(f, k) == pytest.approx(-4 / (math.pi * k * k), abs=1e-6)
    assert abs(fourier_coefficient(f, 4)) <= 1e-6


def test_odd_interaction_rejected():
    with pytest.raises(DomainError):
        Interaction(np.sin)


def test_beta_scales():
    f = builtin("clock_smooth", 2.5)
    x = np.linspace(0, 6, 7)
    assert np.allclose(f(x), 2.5 * builtin("clock_smooth")(x), rtol=0, atol=1e-14)
    with pytest.raises(DomainError):
        builtin("xy", 0.0)


def test_xy_exact(xy_approx):
    assert xy_approx.K == 1
    assert xy_approx.coefficients[0] == pytest.approx(1.0, abs=1e-12)
    # remainder is the constant eps/2 after the shift
    assert xy_approx.remainder_min == pytest.approx(0.025, abs=1e-12)
    assert xy_approx.remainder_max == pytest.approx(0.025, abs=1e-12)


def test_trig_recovery():
    f = trig_interaction([2.0, 0.0, 0.5])
    a = approximate(f, 1e-3)
    assert a.K == 3
    assert np.allclose(a.coefficients, [2.0, 0.0, 0.5], atol=1e-12)
    assert a.C_K == pytest.approx(2.5)
    assert a.D_K == pytest.approx(2.0 + 0.5 * 9)


@pytest.mark.parametrize("name", sorted(BUILTIN))
@pytest.mark.parametrize("eps", [0.1, 0.01])
def test_remainder_certified(name, eps):
    a = approximate(builtin(name), eps)
    assert 0.0 <= a.remainder_min <= a.remainder_max <= eps
    # the remainder is recomputed here on a finer, shifted grid
    x = (np.arange(20000) + 0.37) * 2 * np.pi / 20000
    rem = builtin(name)(x) - a.constant - a.evaluate(x)
    assert rem.min() >= -1e-3 * eps
    assert rem.max() <= eps * (1 + 1e-3)


def test_smallest_K():
    f = builtin("clock_smooth")
    a = approximate(f, 0.05)
    assert partial_sum_error(f, a.K) <= 0.025
    assert partial_sum_error(f, a.K - 1) > 0.025


def test_approximation_failure():
    with pytest.raises(ApproximationFailure) as info:
        approximate(builtin("abs_kink"), 1e-6, k_max=16)
    assert info.value.best_error > 5e-7


def test_holder_error_trend():
    # sup error of the partial sums should fall like K^-s log K
    s = 3.5
    f = holder(s)
    Ks = np.array([8, 16, 32, 64])
    err = np.array([partial_sum_error(f, K) for K in Ks])
    slope = np.polyfit(np.log(Ks), np.log(err / np.log(Ks)), 1)[0]
    assert abs(slope + s) <= 0.5


@pytest.mark.parametrize("p", [4.0, 3.5])
def test_decay_synthetic(p):
    c = np.arange(1, 65, dtype=float) ** (-p)
    assert coefficient_decay_check(c).slope == pytest.approx(-p, abs=0.01)


def test_decay_kink():
    a = approximate(builtin("abs_kink"), 0.01)
    fit = coefficient_decay_check(a, s=1.0)
    assert fit.slope == pytest.approx(-2.0, abs=0.05)


def test_decay_insufficient():
    with pytest.raises(InsufficientData):
        coefficient_decay_check(np.array([1.0, 0.5, 0.0, 0.0]))


def test_load_csv(tmp_path):
    p = tmp_path / "c.csv"
    p.write_text("k,c\n0,3.0\n1,1.0\n3,0.25\n")
    f = load_coefficients_csv(p)
    a = approximate(f, 1e-4)
    assert np.allclose(a.coefficients, [1.0, 0.0, 0.25], atol=1e-12)


@given(st.lists(st.floats(-2, 2, allow_nan=False), min_size=1, max_size=6))
def test_trig_roundtrip(coeffs):
    f = trig_interaction(coeffs)
    for k, c in enumerate(coeffs, 1):
        assert fourier_coefficient(f, k) == pytest.approx(c, abs=1e-10)
