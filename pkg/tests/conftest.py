from fractions import Fraction

import pytest

from wkexpansion.polycore import CRational, MultiPoly, poly_vars
from wkexpansion.potential import harmonic, quartic, ymqm

GOLDEN = __import__("pathlib").Path(__file__).parent / "golden"


def concrete_potentials():
    """The acceptance potentials: harmonic, x^4 and x1^2 x2^2 / 2."""
    return [harmonic(), quartic(), ymqm()]


def hand_w1(pot):
    """-(i/2) t^2 p.grad V."""
    xs, ps, t = poly_vars(pot.space)
    pg = MultiPoly.zero(pot.space)
    for i in range(pot.n):
        pg = pg + ps[i] * pot.grad[i]
    return (t ** 2 * pg).scale(CRational(0, Fraction(-1, 2)))


def hand_w2(pot):
    """-(t^2/4) lap V + (t^3/6)|grad V|^2 + (t^3/6) p_i p_j d_ij V - (t^4/8)(p.grad V)^2."""
    xs, ps, t = poly_vars(pot.space)
    pg = MultiPoly.zero(pot.space)
    g2 = MultiPoly.zero(pot.space)
    pHp = MultiPoly.zero(pot.space)
    for i in range(pot.n):
        pg = pg + ps[i] * pot.grad[i]
        g2 = g2 + pot.grad[i] ** 2
        for j in range(pot.n):
            pHp = pHp + ps[i] * ps[j] * pot.hessian[i][j]
    return (
        (t ** 2 * pot.laplacian).scale(Fraction(-1, 4))
        + (t ** 3 * g2).scale(Fraction(1, 6))
        + (t ** 3 * pHp).scale(Fraction(1, 6))
        - (t ** 4 * pg ** 2).scale(Fraction(1, 8))
    )


@pytest.fixture(params=concrete_potentials(), ids=lambda p: p.name)
def potential(request):
    return request.param


def pytest_terminal_summary(terminalreporter):
    mod = __import__("sys").modules.get("test_acceptance")
    if mod is None or not mod.RESULTS:
        return
    terminalreporter.section("acceptance criteria")
    for key, (passed, detail) in mod.RESULTS.items():
        terminalreporter.write_line(mod.format_line(key, passed, detail))
