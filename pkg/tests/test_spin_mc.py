import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from spinbound.errors import DomainError, InsufficientData
from spinbound.interaction import builtin
from spinbound.lattice import CouplingFamily
from spinbound.spin_mc import (decay_is_monotone, estimate_correlation, fit_power_law,
                               local_energy, log_weight, make_config, rotation_invariance_check,
                               sweep, two_site_check)
from spinbound._mc_kernels import bessel_ratio

FAM = CouplingFamily.normalized_family(5.0, 3)


def test_collar_layout():
    c = make_config(4, FAM, "xy", beta=0.5, boundary="const", theta_bar=1.0, seed=0)
    assert c.n_interior == 81
    assert c.theta.size == (2 * 4 + 2 * 3 + 1) ** 2
    assert np.all(c.boundary_angles() == 1.0)
    # every interior site sees the full displacement table
    assert np.all(np.diff(c.ptr) == 48)


def test_local_energy_no_move():
    c = make_config(3, FAM, "clock_smooth", beta=0.7, seed=1)
    assert local_energy(c, c.site(1, 1), c.theta[c.site(1, 1)]) == 0.0


@settings(max_examples=20)
@given(st.integers(0, 2 ** 31 - 1), st.sampled_from(["xy", "clock_smooth", "abs_kink"]))
def test_local_energy_matches_recompute(seed, name):
    c = make_config(3, FAM, name, beta=0.8, seed=seed, boundary="random")
    rng = np.random.default_rng(seed)
    u = int(rng.integers(c.n_interior))
    new = float(rng.uniform(0, 2 * np.pi))
    before = log_weight(c)
    d = local_energy(c, u, new)
    c.theta[u] = new
    assert d == pytest.approx(log_weight(c) - before, abs=1e-12)


def test_two_site_energy():
    fam = CouplingFamily(5.0, 1.0, 1, norm="l1")
    c = make_config(1, fam, "xy", beta=1.0, theta_bar=0.0, init="ordered")
    u = c.site(0, 0)
    # four neighbours at angle 0, coupling 1 each
    assert local_energy(c, u, 0.4) == pytest.approx(4 * (math.cos(0.4) - 1.0), rel=1e-14)


def test_global_rotation_invariance_of_energy():
    c = make_config(4, FAM, "clock_smooth", beta=1.0, boundary="random", seed=3)
    w0 = log_weight(c)
    c.theta[:] = (c.theta + 1.234) % (2 * np.pi)
    # the table representation is exact only up to interpolation of the shifted differences
    assert log_weight(c) == pytest.approx(w0, abs=1e-12)


def test_boundary_frozen_and_wrapped():
    c = make_config(5, FAM, "xy", beta=1.0, boundary="random", seed=2)
    bnd = c.boundary_angles().copy()
    sweep(c, math.pi, 9, n_sweeps=50)
    assert np.array_equal(c.boundary_angles(), bnd)
    th = c.interior_angles()
    assert np.all((th >= 0) & (th < 2 * np.pi))


def test_acceptance_limits():
    c = make_config(4, FAM, "xy", beta=1e-300, seed=2)
    assert sweep(c, math.pi, 1, 5) == 1.0
    c = make_config(4, FAM, "xy", beta=2.0, seed=2)
    assert sweep(c, 1e-7, 1, 5) > 0.999
    with pytest.raises(DomainError):
        sweep(c, 4.0, 1)


@pytest.mark.parametrize("name", ["xy", "clock_smooth"])
def test_energy_drift(name):
    c = make_config(6, FAM, name, beta=1.0, seed=4)
    sweep(c, 1.5, 3, n_sweeps=1000)
    assert c.logweight_tracked == pytest.approx(log_weight(c), abs=1e-8)


def test_deterministic():
    a = make_config(4, FAM, "xy", beta=0.5, seed=1)
    b = make_config(4, FAM, "xy", beta=0.5, seed=1)
    ea = estimate_correlation(a, [1, 2], 640, 1000, 5)
    eb = estimate_correlation(b, [1, 2], 640, 1000, 5)
    assert [e.mean for e in ea] == [e.mean for e in eb]


def test_x_zero_is_one():
    c = make_config(3, FAM, "xy", beta=0.5, seed=1)
    e = estimate_correlation(c, 0, 640, 1000, 1)
    assert e.mean == 1.0 and e.stderr == 0.0


def test_insufficient_sweeps():
    c = make_config(3, FAM, "xy", beta=0.5, seed=1)
    with pytest.raises(InsufficientData):
        estimate_correlation(c, 1, 10, 1000, 1)
    with pytest.raises(InsufficientData):
        estimate_correlation(c, 1, 1000, 10, 1)


@pytest.mark.parametrize("estimator", ["raw", "conditional"])
def test_high_temperature_zero(estimator):
    c = make_config(5, FAM, "xy", beta=1e-9, seed=1)
    for e in estimate_correlation(c, [1, 3], 4000, 1000, 2, estimator=estimator):
        assert abs(e.mean) <= 3 * e.stderr + 1e-6
        assert abs(e.mean) <= 1.0


def test_conditional_agrees_with_raw():
    fam = CouplingFamily.normalized_family(5.0, 2)
    out = {}
    for est in ("raw", "conditional"):
        c = make_config(3, fam, "xy", beta=6.0, seed=1)
        out[est] = estimate_correlation(c, [1, 3], 60_000, 1000, 7, estimator=est)
    for a, b in zip(out["raw"], out["conditional"]):
        assert abs(a.mean - b.mean) <= 4 * math.hypot(a.stderr, b.stderr)
        assert b.stderr < a.stderr


def test_conditional_needs_xy():
    c = make_config(3, FAM, "clock_smooth", beta=1.0, seed=1)
    with pytest.raises(DomainError):
        estimate_correlation(c, 1, 640, 1000, 1, estimator="conditional")


def test_monotone_decay_strong_coupling():
    fam = CouplingFamily.normalized_family(5.0, 2)
    c = make_config(8, fam, "xy", beta=3.0, seed=1)
    est = estimate_correlation(c, [1, 2, 4, 8], 20_000, 1000, 3)
    assert decay_is_monotone(est)
    assert all(abs(e.mean) <= 1 + 3 * e.stderr for e in est)


@pytest.mark.parametrize("q,beta,bc", [(8, 1.0, 0.0), (8, 2.0, 0.5), (5, 0.7, 1.0)])
def test_two_site_exact(q, beta, bc):
    rep = two_site_check(beta, q=q, sweeps=400_000, seed=q, boundary_coupling=bc)
    assert rep.tv <= 0.01
    assert rep.exact.sum() == pytest.approx(1.0)


def test_bessel_ratio():
    from scipy.special import i0e, i1e
    for k in [0.0, 1e-6, 0.3, 2.0, 17.0, 80.0, 499.0, 501.0, 5000.0]:
        ref = i1e(k) / i0e(k) if k > 0 else 0.0
        assert bessel_ratio(k) == pytest.approx(ref, abs=1e-13)


def test_power_law_fit():
    n = np.array([2, 4, 8, 16])
    p, a, se = fit_power_law(n, 3.0 * n ** -1.5, np.full(4, 1e-6))
    assert p == pytest.approx(1.5, abs=1e-6) and a == pytest.approx(3.0, rel=1e-6)


def test_rotation_invariance_small():
    rep = rotation_invariance_check(4, FAM, "xy", beta=1.0, xs=(1, 2), replicas=3, sweeps=2000,
                                    burn_in=1000, seed=1)
    assert rep.passed, rep


def test_rotation_invariance_flat():
    rep = rotation_invariance_check(3, FAM, "xy", beta=1e-9, xs=(1, 2), replicas=2, sweeps=1000,
                                    burn_in=1000, seed=2)
    assert rep.passed
    assert np.all(np.abs(rep.original) <= 0.05)
