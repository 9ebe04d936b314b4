import math

import numpy as np
import pytest
from hypothesis import given, strategies as st

from spinbound.errors import ConstraintViolation, DivergedProfile, DomainError
from spinbound.interaction import TrigApprox, approximate, builtin
from spinbound.lattice import Box, CouplingFamily
from spinbound.ms_bound import (abar, atilde, bound_constants, bound_report, build_profile,
                                closed_form_bound, edge_energy, evaluate_log_F, good_set_exponent,
                                optimize_delta, predicted_correlation_bound,
                                profile_split_inequality_check)
from spinbound.percolation import ClusterStats

from oracles import ABAR_L1_R3, C_ADD_ALPHA5, C_MULT_ALPHA5, CLOSED_FORM_D001_R1024


def brute_log_F(profile, family, approx, x):
    # every unordered in-box pair within the cutoff, one at a time
    box = profile.box
    X, Y = box.coords
    a = profile.values
    total = 0.0
    n = box.n_vertices
    for u in range(n):
        for v in range(u + 1, n):
            r = family.radius(X[v] - X[u], Y[v] - Y[u])
            if r > family.cutoff_radius:
                continue
            J = family.amplitude * float(r) ** (-family.alpha)
            d = a[v] - a[u]
            for k, c in enumerate(approx.coefficients, 1):
                total += J * abs(c) * (math.cosh(k * d) - 1.0)
    return profile.at(*x) - profile.at(0, 0) + total


def test_abar_values():
    box = Box(5)
    p = build_profile("abar_radial", 0.1, 3, box)
    assert p.at(1, 0) == pytest.approx(ABAR_L1_R3, rel=1e-14)
    assert p.at(1, -1) == p.at(0, 1)
    # telescoping: a_0 - a_x = delta H_R on L_R
    assert p.at(0, 0) - p.at(3, 2) == pytest.approx(0.1 * (1 + 1 / 2 + 1 / 3), rel=1e-14)
    assert np.all(p.values[box.norms >= 3] == 0.0)


def test_abar_is_harmonic_sum():
    a = abar(0.2, 10)
    assert a[0] == 0.0
    assert a[10] == pytest.approx(-0.2 * sum(1 / j for j in range(1, 11)), rel=1e-15)


def test_tilde_flat_core():
    R = 40
    box = Box(48)
    p = build_profile("tilde_truncated", 0.05, R, box)
    lo = 2 * math.ceil(math.sqrt(R))
    core = p.values[box.norms <= lo]
    assert np.all(core == core[0])
    assert np.all(p.values[box.norms >= R] == 0.0)
    # ill-posed case: the core swallows the annulus
    assert np.all(atilde(0.05, 5, 12) == 0.0)


def test_cluster_constant_empty_config():
    box = Box(12)
    stats = ClusterStats(np.ones(box.n_vertices, np.int64), box.norms.copy(),
                         np.zeros(box.n_vertices, np.int64))
    a = build_profile("cluster_constant", 0.05, 10, box, stats)
    b = build_profile("tilde_truncated", 0.05, 10, box)
    assert np.array_equal(a.values, b.values)


def test_cluster_stats_required():
    with pytest.raises(DomainError):
        build_profile("cluster_constant", 0.1, 4, Box(6))
    with pytest.raises(DomainError):
        build_profile("abar_radial", 0.1, 8, Box(6))


def test_log_F_zero_profile(fam5, xy_approx):
    box = Box(20)
    p = build_profile("abar_radial", 0.1, 6, box)
    p.phi = np.zeros_like(p.phi)
    assert evaluate_log_F(p, fam5, xy_approx, (6, 0)) == 0.0


def test_log_F_single_edge():
    fam = CouplingFamily(5.0, 1.0, 1, norm="l1")
    box = Box(1)
    p = build_profile("abar_radial", 0.1, 1, box)
    t = 0.7
    # only (1,0) is raised: its four neighbours in the 3x3 box differ by t
    p.levels = np.zeros(box.n_vertices, np.int64)
    p.levels[box.index(1, 0)] = 1
    p.phi = np.array([0.0, t])
    one = TrigApprox(np.array([1.0]), 0.1, 0.05, 0.05)
    assert edge_energy(p, fam, one) == pytest.approx(3 * (math.cosh(t) - 1.0), rel=1e-14)


@pytest.mark.parametrize("flavor", ["abar_radial", "tilde_truncated"])
def test_log_F_brute_force(flavor):
    fam = CouplingFamily.normalized_family(5.0, 3)
    approx = approximate(builtin("clock_smooth"), 0.05)
    box = Box(5)
    p = build_profile(flavor, 0.03, 4, box)
    got = evaluate_log_F(p, fam, approx, (4, -1))
    assert got == pytest.approx(brute_log_F(p, fam, approx, (4, -1)), rel=1e-12, abs=1e-14)


def test_log_F_below_closed_form(xy_approx):
    fam = CouplingFamily.normalized_family(5.0, 32)
    p = build_profile("abar_radial", 0.05, 32, Box(64))
    assert evaluate_log_F(p, fam, xy_approx, (32, 5)) <= closed_form_bound(0.05, 32, xy_approx, fam)


def test_log_F_lower_bound(fam5, xy_approx):
    p = build_profile("abar_radial", 0.2, 8, Box(12))
    assert evaluate_log_F(p, fam5, xy_approx, (8, 8)) >= p.at(8, 8) - p.at(0, 0)


def test_log_F_target_layer(fam5, xy_approx):
    p = build_profile("abar_radial", 0.2, 8, Box(12))
    with pytest.raises(DomainError):
        evaluate_log_F(p, fam5, xy_approx, (3, 0))


def test_diverged_profile(xy_approx):
    fam = CouplingFamily(5.0, 1.0, 2)
    p = build_profile("abar_radial", 2000.0, 4, Box(6))
    with pytest.raises(DivergedProfile):
        evaluate_log_F(p, fam, xy_approx, (4, 0))


def test_bound_constants(fam5):
    c_mult, c_add = bound_constants(fam5)
    assert c_mult == pytest.approx(C_MULT_ALPHA5, rel=1e-12)
    assert c_add == pytest.approx(C_ADD_ALPHA5, rel=1e-12)


def test_closed_form_oracle(fam5, xy_approx):
    assert closed_form_bound(0.01, 1024, xy_approx, fam5) == pytest.approx(
        CLOSED_FORM_D001_R1024, rel=1e-12)
    assert closed_form_bound(1e-14, 1024, xy_approx, fam5) == pytest.approx(C_ADD_ALPHA5, rel=1e-10)
    with pytest.raises(ConstraintViolation):
        closed_form_bound(1.5, 16, xy_approx, fam5)


def test_log_coefficient_sign(fam5, xy_approx):
    c_mult, _ = bound_constants(fam5)
    d0 = 1.0 / (c_mult * xy_approx.D_K)
    slope = lambda d: (closed_form_bound(d, math.e ** 2, xy_approx, fam5)  # noqa: E731
                       - closed_form_bound(d, math.e, xy_approx, fam5))
    assert slope(0.9 * d0) < 0 < slope(1.1 * d0)


def test_optimize_parabola(fam5, xy_approx):
    c_mult, _ = bound_constants(fam5)
    q = c_mult * xy_approx.D_K
    ch = optimize_delta(xy_approx, fam5)
    assert ch.delta_star == pytest.approx(1 / (2 * q), rel=1e-8)
    assert ch.exponent_C == pytest.approx(1 / (4 * q), rel=1e-12)
    ch2 = optimize_delta(xy_approx, fam5, tol=1e-8)
    assert abs(ch2.delta_star - ch.delta_star) <= 1e-6
    assert abs(ch2.exponent_C - ch.exponent_C) <= 1e-6


def test_optimize_grid_oracle(fam5):
    approx = approximate(builtin("clock_smooth"), 0.05)
    ch = optimize_delta(approx, fam5)
    c_mult, _ = bound_constants(fam5)
    d = np.arange(1, 100001) * 1e-5 * ch.upper
    coef = -d + c_mult * approx.D_K * d * d
    i = np.argmin(coef)
    assert abs(d[i] - ch.delta_star) <= 1e-5 * ch.upper
    assert ch.exponent_C >= -coef[i] - 1e-12


def test_optimize_constraint_active():
    # small c_mult D_K: the parabola vertex lies beyond 1/K
    fam = CouplingFamily(5.0, 1e-5, 4)
    approx = TrigApprox(np.array([1.0, 0.5]), 0.1, 0.0, 0.1)
    ch = optimize_delta(approx, fam)
    assert ch.delta_star == pytest.approx(1 / approx.K, rel=1e-9)


def test_good_set_exponent(fam5, xy_approx):
    d = 1e-4
    c_mult, _ = bound_constants(fam5)
    assert good_set_exponent(d, 64, xy_approx, fam5, 0.0) == pytest.approx(
        -d / 8 + c_mult * d * d, rel=1e-13)
    assert good_set_exponent(d, 64, xy_approx, fam5, 0.1) < 0
    with pytest.raises(ConstraintViolation):
        good_set_exponent(0.34, 64, xy_approx, fam5, 0.0)


def test_bound_report(xy_approx):
    fam = CouplingFamily.normalized_family(5.0, 8)
    rep = bound_report(xy_approx, fam, 32)
    assert rep.log_F <= rep.closed_form
    assert rep.exponent_C > 0


def test_predicted_bound_decreasing(fam5, xy_approx):
    vals, choice = predicted_correlation_bound(xy_approx, fam5, 0.09, [2, 4, 8])
    assert np.all(np.diff(vals) < 0)
    assert choice.exponent_C > 0


def test_split_inequality_audit():
    assert profile_split_inequality_check(n=100_000, k_max=8, seed=1)


@given(st.floats(0.0, 2.0), st.integers(1, 8))
def test_split_single_term(t, k):
    lhs = math.cosh(k * t) - 1
    assert lhs <= math.cosh(3 * k * t) - 1 + 1e-12
