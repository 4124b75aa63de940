import json
from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from wkexpansion.moment import (
    DeltaDerivOperator, DeltaTerm, GridTooCoarse, bloch_matrix_from_spectrum, fd_weights,
    first_correction_order, fourier_potential, free_bloch_matrix, hbar_scaling_exponent,
    moment_report, ode_residual_check, relative_quantum_correction,
)
from wkexpansion.oracle import harmonic_z, momentum_basis_1d, solve
from wkexpansion.polycore import CRational, MultiPoly
from wkexpansion.potential import PotentialSpec, from_monomials, harmonic, quartic, ymqm

T3 = np.array([0.999, 1.0, 1.001])


@pytest.fixture(scope="module")
def ho_matrix():
    spec = solve(harmonic(), 60, omega=1.0)
    return bloch_matrix_from_spectrum(spec, np.linspace(-8, 8, 64), T3)


def test_fourier_potential_ymqm():
    op = fourier_potential(ymqm(g=3))
    assert len(op) == 1
    term = op.terms[0]
    assert term.coeff == CRational(Fraction(9, 2))
    assert (term.hbar_power, term.alpha) == (4, (2, 2))


def test_fourier_potential_harmonic_sign():
    term = fourier_potential(harmonic(omega=2)).terms[0]
    assert term.coeff == CRational(-2) and term.hbar_power == 2


def test_fourier_potential_zero():
    assert len(fourier_potential(PotentialSpec(MultiPoly.zero(harmonic().space)))) == 0


def test_operator_invariant_enforced():
    with pytest.raises(ValueError):
        DeltaDerivOperator(1, (DeltaTerm(CRational(1), 3, (2,)),))
    with pytest.raises(ValueError):
        DeltaDerivOperator(1, (DeltaTerm(CRational(0), 2, (2,)),))


@settings(max_examples=30, deadline=None)
@given(st.lists(st.tuples(st.integers(1, 3), st.integers(0, 3), st.integers(0, 3)), min_size=1, max_size=4))
def test_first_correction_order_is_min_degree(raw):
    terms = [(c, [2 * a, 2 * b]) for c, a, b in raw if a or b]
    if not terms:
        return
    pot = from_monomials(2, terms)
    degrees = [sum(e) for e in pot.V.terms]
    assert first_correction_order(pot) == min(degrees)
    assert all(t.hbar_power == sum(t.alpha) for t in fourier_potential(pot).terms)


def test_first_correction_order_examples():
    assert first_correction_order(ymqm()) == 4
    assert first_correction_order(harmonic()) == 2
    assert first_correction_order(from_monomials(1, [(1, [6])])) == 6
    assert first_correction_order(from_monomials(1, [(5, [0]), (1, [4])])) == 4


def test_first_correction_order_rejects_trivial_potentials():
    with pytest.raises(ValueError):
        first_correction_order(PotentialSpec(MultiPoly.zero(harmonic().space)))
    with pytest.raises(ValueError):
        first_correction_order(from_monomials(1, [(3, [0])]))


def test_fd_weights():
    np.testing.assert_allclose(fd_weights(2), [-1 / 12, 4 / 3, -5 / 2, 4 / 3, -1 / 12])
    x = np.arange(-3, 4, dtype=float)
    w = fd_weights(4)
    assert len(w) == 7
    assert w @ x ** 4 == pytest.approx(24.0)
    assert w @ x ** 6 == pytest.approx(0.0, abs=1e-9)


def test_hermitian_with_positive_diagonal(ho_matrix):
    assert ho_matrix.hermiticity_error() <= 1e-12
    d = ho_matrix.diagonal()
    assert np.all(np.abs(d.imag) <= 1e-12) and np.all(d.real > 0)


def test_trace_reproduces_z(ho_matrix):
    np.testing.assert_allclose(ho_matrix.trace(), harmonic_z(1.0, 1.0, T3), atol=1e-4)


def test_ode_residual_harmonic(ho_matrix):
    assert ode_residual_check(ho_matrix, fourier_potential(harmonic())) <= 1e-3


def test_ode_residual_detects_wrong_operator(ho_matrix):
    assert ode_residual_check(ho_matrix, fourier_potential(harmonic(omega=2))) > 0.1


def test_ode_residual_free_kernel():
    p = np.linspace(-4, 4, 33)
    A = free_bloch_matrix([p], [0.5 - 1e-4, 0.5, 0.5 + 1e-4])
    assert ode_residual_check(A, DeltaDerivOperator(1, ())) <= 1e-6


def test_ode_residual_boxed_ymqm():
    spec = solve(ymqm(), 40)
    A = bloch_matrix_from_spectrum(spec, np.linspace(-5, 5, 32), T3, conv_tol=1e-3, tail_tol=None)
    assert A.hermiticity_error() <= 1e-12
    assert ode_residual_check(A, fourier_potential(ymqm())) <= 1e-2


def test_single_mode_limit():
    spec = solve(harmonic(), 20, omega=1.0)
    p = np.linspace(-3, 3, 13)
    t = 40.0
    A = bloch_matrix_from_spectrum(spec, p, [t], tail_tol=None)
    phi0 = momentum_basis_1d(spec.basis, p)[0]
    np.testing.assert_allclose(A.values[0], np.outer(phi0, phi0.conj()) * np.exp(-0.5 * t), atol=1e-20)


def test_grid_too_coarse():
    spec = solve(ymqm(), 10)
    A = bloch_matrix_from_spectrum(spec, np.linspace(-2, 2, 4), T3, conv_tol=np.inf, tail_tol=None)
    with pytest.raises(GridTooCoarse):
        ode_residual_check(A, fourier_potential(ymqm()))


def test_ode_check_needs_equal_t_spacing(ho_matrix):
    A = free_bloch_matrix([np.linspace(-1, 1, 9)], [0.5, 0.6, 0.8])
    with pytest.raises(ValueError):
        ode_residual_check(A, DeltaDerivOperator(1, ()))


def test_hbar_scaling_harmonic_matches_order():
    assert hbar_scaling_exponent(harmonic(), 1.0, 0.5, 160) == pytest.approx(first_correction_order(harmonic()), abs=0.1)


def test_quartic_relative_correction_scales_as_hbar_squared():
    assert hbar_scaling_exponent(quartic(), 1.0, 0.25, 240) == pytest.approx(2.0, abs=0.05)


@pytest.mark.xfail(strict=True, reason="leading WK correction is O(hbar^2) for every smooth V")
def test_quartic_correction_starts_at_degree_order():
    """Order-counting claim: corrections for x^4 would begin at hbar^4."""
    a = relative_quantum_correction(quartic(), 0.5, 1.0, 240)
    b = relative_quantum_correction(quartic(), 0.25, 1.0, 240)
    assert a / b == pytest.approx(2.0 ** first_correction_order(quartic()), rel=0.15)


def test_report_is_json_serialisable():
    rep = moment_report(ymqm(), residuals={"ode": 0.005}, scaling=None)
    data = json.loads(json.dumps(rep))
    assert data["first_correction_order"] == 4
    assert set(data) >= {"potential", "first_correction_order", "hbar_scaling_exponent_fit", "residuals"}
