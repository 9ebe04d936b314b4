import math

import pytest
from hypothesis import given, strategies as st

from spinbound.errors import DomainError
from spinbound.percolation import (binomial_tail_exact, chernoff_bound, convolution_bound_check,
                                   convolution_sweep)

from oracles import (BINOM_10_03_GE6, CHERNOFF_MU3_EPS1, CONV_K2_A2_RHS, CONV_K4_A2,
                     CONV_K4_A2_RHS)


def test_chernoff_value():
    assert chernoff_bound(3.0, 1.0) == pytest.approx(CHERNOFF_MU3_EPS1, rel=1e-14)
    assert chernoff_bound(3.0, 1e-9) == pytest.approx(1.0, abs=1e-12)
    with pytest.raises(DomainError):
        chernoff_bound(0.0, 1.0)


def test_binomial_enumeration():
    assert binomial_tail_exact(10, 0.3, 6) == pytest.approx(BINOM_10_03_GE6, rel=1e-9)
    assert binomial_tail_exact(10, 0.3, 0) == pytest.approx(1.0, rel=1e-14)


@pytest.mark.parametrize("eps", [0.5, 1.0, 2.0])
def test_chernoff_dominates_exact(eps):
    mu = 10 * 0.3
    assert binomial_tail_exact(10, 0.3, (1 + eps) * mu) <= chernoff_bound(mu, eps)


@given(st.integers(1, 12), st.floats(0.05, 0.95), st.floats(0.05, 3.0))
def test_chernoff_dominates_random(n, p, eps):
    mu = n * p
    assert binomial_tail_exact(n, p, (1 + eps) * mu) <= chernoff_bound(mu, eps) * (1 + 1e-12)


def test_convolution_examples():
    lhs, rhs = convolution_bound_check(2, 2.0)
    assert lhs == 1.0 and rhs == pytest.approx(CONV_K2_A2_RHS, rel=1e-14)
    lhs, rhs = convolution_bound_check(4, 2.0)
    assert lhs == pytest.approx(CONV_K4_A2, rel=1e-14)
    assert rhs == pytest.approx(CONV_K4_A2_RHS, rel=1e-14)
    with pytest.raises(DomainError):
        convolution_bound_check(1, 2.0)


@given(st.integers(2, 5000), st.floats(1.01, 8.0))
def test_convolution_random(k, a):
    lhs, rhs = convolution_bound_check(k, a)
    assert lhs <= rhs


def test_convolution_sweep_short():
    assert convolution_sweep(500) == 0
