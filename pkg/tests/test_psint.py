import math
from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy import integrate
from scipy.special import gamma

from wkexpansion.oracle import harmonic_z
from wkexpansion.polycore import MultiPoly, poly_vars
from wkexpansion.potential import harmonic, quartic, ymqm
from wkexpansion.psint import (
    NonIntegrable, SpatialDomain, TGrid, ToleranceNotReached, assemble_Z, confining_along_rays,
    double_factorial, gaussian_moment, gaussian_p_moments, spatial_integral, thomas_fermi,
)
from wkexpansion.wkrec import wk_recursion

SP = harmonic().space


def test_double_factorial():
    assert [double_factorial(k) for k in (-1, 0, 1, 5, 6)] == [1, 1, 1, 15, 48]


@pytest.mark.parametrize("m", [0, 1, 2, 3])
def test_gaussian_p_moment_matches_quadrature(m):
    xs, ps, t = poly_vars(SP)
    mom = gaussian_p_moments(ps[0] ** (2 * m))
    tv = 0.7
    value = mom.prefactor(tv) * mom.numerator.eval([0, 0, tv]).real
    ref, _ = integrate.quad(lambda p: p ** (2 * m) * math.exp(-tv * p * p / 2), -np.inf, np.inf)
    assert value == pytest.approx(ref, rel=1e-10)


def test_gaussian_p_moments_example():
    xs, ps, t = poly_vars(SP)
    mom = gaussian_p_moments(ps[0] ** 2)
    assert mom.t_power == 1 and mom.numerator == MultiPoly.constant(SP, 1)
    assert gaussian_p_moments(ps[0]).numerator.is_zero()


def test_gaussian_p_moments_cancel_common_t():
    xs, ps, t = poly_vars(SP)
    mom = gaussian_p_moments(t ** 3 * ps[0] ** 2)
    assert mom.t_power == 0 and mom.numerator == t ** 2


def test_isserlis_against_sampling():
    cov = np.array([[2.0, 0.3], [0.3, 0.5]])
    assert gaussian_moment((2, 2), cov) == pytest.approx(cov[0, 0] * cov[1, 1] + 2 * cov[0, 1] ** 2)
    assert gaussian_moment((4, 0), cov) == pytest.approx(3 * 4.0)
    assert gaussian_moment((1, 2), cov) == 0.0


@settings(max_examples=20, deadline=None)
@given(st.integers(0, 3), st.floats(0.3, 3.0))
def test_gaussian_path_matches_cubature(k, tv):
    pot = harmonic(omega=Fraction(3, 2))
    xs, ps, t = poly_vars(pot.space)
    f = xs[0] ** (2 * k) * t + xs[0] ** 2
    a = spatial_integral(f, pot, tv, method="gaussian")
    b = spatial_integral(f, pot, tv, SpatialDomain(rtol=1e-10), method="cubature")
    assert a == pytest.approx(b, rel=1e-8)


def test_quartic_integral_closed_form():
    val = spatial_integral(MultiPoly.constant(quartic().space, 1), quartic(), 1.0)
    assert val == pytest.approx(2 * gamma(1.25), rel=1e-9)


def test_ray_precheck():
    assert confining_along_rays(harmonic(n=2))
    assert confining_along_rays(quartic())
    assert not confining_along_rays(ymqm())
    with pytest.raises(NonIntegrable, match="--box"):
        thomas_fermi(ymqm(), [1.0], 1.0)


def test_box_domain_for_channel_potential():
    z = thomas_fermi(ymqm(), [1.0], 1.0, SpatialDomain.box([3.0, 3.0]))
    assert z[0] == pytest.approx(2.2599, abs=1e-3)


def test_tolerance_not_reached_is_raised():
    xs, ps, t = poly_vars(quartic().space)
    with pytest.raises(ToleranceNotReached):
        spatial_integral(xs[0] ** 6, quartic(), 0.05, SpatialDomain(rtol=1e-14, max_subdivisions=2))


def test_domain_and_grid_validation():
    with pytest.raises(ValueError):
        SpatialDomain("sphere")
    with pytest.raises(ValueError):
        SpatialDomain.box([1.0, -1.0])
    with pytest.raises(ValueError):
        TGrid((1.0, 0.5))
    g = TGrid.make(0.1, 10, 3, "log")
    np.testing.assert_allclose(np.asarray(g), [0.1, 1.0, 10.0])


def test_harmonic_orders_exact_ratios():
    """hbar^2 Z2/Z0 = -x^2/24, hbar^4 Z4/Z0 = 7 x^4/5760, hbar^6 Z6/Z0 = -31 x^6/967680 with x = hbar omega t."""
    t = np.array([0.2, 0.5, 1.3])
    for method in ("gaussian", "cubature"):
        z = assemble_Z(wk_recursion(harmonic(), 6), 1.0, t, method=method,
                       domain=SpatialDomain(rtol=1e-11))
        tol = 1e-10 if method == "gaussian" else 1e-8
        np.testing.assert_allclose(z.Zk[2] / z.Zk[0], -t ** 2 / 24, rtol=tol)
        np.testing.assert_allclose(z.Zk[4] / z.Zk[0], 7 * t ** 4 / 5760, rtol=tol)
        np.testing.assert_allclose(z.Zk[6] / z.Zk[0], -31 * t ** 6 / 967680, rtol=tol)


@settings(max_examples=15, deadline=None)
@given(st.floats(0.01, 0.1), st.sampled_from([Fraction(1, 2), Fraction(1), Fraction(2)]))
def test_harmonic_sum_against_closed_form(x, omega):
    hbar = 0.5
    t = x / (hbar * float(omega))
    z = assemble_Z(wk_recursion(harmonic(omega), 4), hbar, [t])
    assert abs(z.Zsum[0] / harmonic_z(hbar, float(omega), t) - 1) <= 1e-6


def test_odd_orders_vanish():
    z = assemble_Z(wk_recursion(quartic(), 3), 0.5, [0.5, 1.0])
    assert np.all(z.Zk[1] == 0)
    assert np.all(np.abs(z.Zk[3]) <= 1e-10 * np.abs(z.Zk[0]))


def test_csv_header_and_columns():
    z = assemble_Z(wk_recursion(harmonic(), 2), 1.0, [0.5, 1.0])
    lines = z.to_csv(exact=np.array([1.0, 2.0])).splitlines()
    assert lines[0].startswith("# potential=") and "order=2" in lines[0]
    assert lines[1] == "t,Z0,Z1,Z2,Zsum,Z_exact"
    assert len(lines) == 4
