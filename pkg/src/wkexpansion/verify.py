"""Named verification suites shared by the command line and the test-suite."""
from __future__ import annotations

import math
from dataclasses import asdict, dataclass
from fractions import Fraction

import numpy as np

from . import forms, moment, oracle, psint, wkrec
from .polycore import MultiPoly, poly_vars
from .potential import from_monomials, harmonic, quartic, ymqm


@dataclass
class Check:
    name: str
    value: float
    threshold: float
    passed: bool
    note: str = ""

    def to_dict(self) -> dict:
        d = asdict(self)
        d["value"] = _jsonable(self.value)
        d["threshold"] = _jsonable(self.threshold)
        d["passed"] = bool(self.passed)
        return d


def _jsonable(x):
    if isinstance(x, (bool, int, str)) or x is None:
        return x
    x = float(x)
    return x if math.isfinite(x) else repr(x)


def _at_most(name, value, threshold, note=""):
    return Check(name, float(value), float(threshold), bool(value <= threshold), note)


def _equals(name, value, expected, note=""):
    return Check(name, value, expected, value == expected, note)


def _ub_zero(pot, K=6):
    res = wkrec.ub_residual(wkrec.wk_recursion(pot, K))
    bad = [k for k, r in res.items() if k <= K and not r.is_zero()]
    return Check(f"ub_residual_zero[{pot.name},K={K}]", float(len(bad)), 0.0, not bad,
                 "number of nonzero hbar orders")


def suite_ho(seed: int = 0) -> list[Check]:
    pot = harmonic()
    checks = [_ub_zero(pot)]
    series = wkrec.wk_recursion(pot, 4)
    t = [0.02, 0.05, 0.1]
    z = psint.assemble_Z(series, 1.0, t)
    x = np.asarray(t)
    ratio_err = np.max(np.abs(z.Zk[2] / z.Zk[0] - (-(x ** 2) / 24)))
    checks.append(_at_most("hbar2_relative_correction", ratio_err, 1e-10, "vs -(hbar omega t)^2/24"))
    exact = oracle.harmonic_z(1.0, 1.0, x)
    checks.append(_at_most("Zsum_K4_vs_closed_form", np.max(np.abs(z.Zsum / exact - 1)), 1e-6,
                           "hbar omega t <= 0.1"))
    spec = oracle.solve(pot, 40, omega=1.0)
    n = np.arange(20)
    checks.append(_at_most("oracle_eigenvalues", np.max(np.abs(spec.eigenvalues[:20] - (n + 0.5))), 1e-10))
    return checks


def suite_quartic(seed: int = 0) -> list[Check]:
    pot = quartic()
    checks = [_ub_zero(pot)]
    spec = oracle.solve(pot, 60)
    checks.append(_at_most("ground_state", abs(spec.eigenvalues[0] - 0.667986), 1e-6))
    t = 0.2
    sizes = {0.5: 240, 0.25: 240, 0.125: 320}
    exact = {h: oracle.z_exact(oracle.solve(pot, m, hbar=h), [t]).Z[0] for h, m in sizes.items()}
    domain = psint.SpatialDomain(rtol=1e-12)
    for K in (0, 2):
        series = wkrec.wk_recursion(pot, K)
        zs = {h: psint.assemble_Z(series, h, [t], domain).Zsum[0] for h in sizes}
        target = 2.0 ** (K + 2)
        for h in (0.5, 0.25):
            a = abs(zs[h] - exact[h]) / abs(zs[h / 2] - exact[h / 2])
            checks.append(Check(f"abs_error_ratio[K={K},hbar={h}]", a, target,
                                abs(a / target - 1) <= 0.2, "|Zsum - Z_exact| ratio, target 2^(K+2) +-20%"))
            r = (abs(zs[h] / exact[h] - 1)) / abs(zs[h / 2] / exact[h / 2] - 1)
            checks.append(Check(f"rel_error_ratio[K={K},hbar={h}]", r, target,
                                abs(r / target - 1) <= 0.2, "|Zsum/Z_exact - 1| ratio"))
    return checks


def _odd_orders(pot, domain, t=(0.5, 1.0)):
    z = psint.assemble_Z(wkrec.wk_recursion(pot, 4), 1.0, t, domain, odd_tol=np.inf)
    return float(np.max(np.abs(z.Zk[1] / z.Zk[0]))), float(np.max(np.abs(z.Zk[3] / z.Zk[0])))


def suite_ymqm(seed: int = 0) -> list[Check]:
    pot = ymqm()
    checks = [
        _equals("first_correction_order[ymqm]", moment.first_correction_order(pot), 4),
        _equals("first_correction_order[harmonic]", moment.first_correction_order(harmonic()), 2),
        _ub_zero(pot),
    ]
    box = psint.SpatialDomain.box([3.0, 3.0], rtol=1e-10)
    for name, p, dom in (("harmonic", harmonic(), psint.SpatialDomain()),
                         ("quartic", quartic(), psint.SpatialDomain()),
                         ("ymqm", pot, box)):
        z1, z3 = _odd_orders(p, dom)
        checks.append(_at_most(f"Z1_relative[{name}]", z1, 0.0))
        checks.append(_at_most(f"Z3_relative[{name}]", z3, 1e-10))
    spec = oracle.solve(pot, 30)
    checks.append(Check("boxed_spectrum_positive", float(spec.eigenvalues[0]), 0.0,
                        bool(spec.eigenvalues[0] > 0), "lowest basis-regularised level"))
    return checks


def _forms_testfn(pot):
    xs, ps, t = poly_vars(pot.space)
    f = xs[0] * ps[0] + t * xs[-1] ** 2 + MultiPoly.constant(pot.space, 1)
    return f


def suite_forms(seed: int = 0) -> list[Check]:
    checks = []
    pots = [from_monomials(1, [(1, [2])], name="x1^2"), from_monomials(2, [(Fraction(1, 2), [2, 2])], name="ymqm")]
    for pot in pots:
        for energy in (False, True):
            for rep in forms.form_equivalence_check(pot, _forms_testfn(pot), seed=seed, energy_form=energy):
                tag = f"{rep.form}[{pot.name}{',energy' if energy else ''}]"
                checks.append(_at_most(tag, rep.max_residual, 1e-10))
    return checks


def suite_stationary(seed: int = 0) -> list[Check]:
    rng = np.random.default_rng(seed)
    checks = []
    for n in (1, 2):
        p = rng.uniform(-2, 2, size=n)
        checks.append(_equals(f"planewave_residual[n={n}]", forms.stationary_planewave_check(p, 1.0), 0.0))
    for pot in (harmonic(), quartic(), ymqm(), harmonic(n=2)):
        ok = forms.no_stationary_solution_check(pot, seed=seed)
        checks.append(Check(f"no_stationary_solution[{pot.name},n={pot.n}]", float(ok), 1.0, bool(ok)))
    return checks


def suite_momentum(seed: int = 0) -> list[Check]:
    pot = harmonic()
    spec = oracle.solve(pot, 60, omega=1.0)
    p = np.linspace(-8, 8, 64)
    dt = 1e-3
    t = np.array([1 - dt, 1.0, 1 + dt])
    A = moment.bloch_matrix_from_spectrum(spec, p, t)
    exact = oracle.harmonic_z(1.0, 1.0, t)
    checks = [
        _at_most("trace_vs_Z_exact[harmonic]", np.max(np.abs(A.trace() - exact)), 1e-4),
        _at_most("hermiticity[harmonic]", A.hermiticity_error(), 1e-12),
        _at_most("ode_residual[harmonic]", moment.ode_residual_check(A, moment.fourier_potential(pot)), 1e-3),
    ]
    free = moment.free_bloch_matrix([p], t)
    empty = moment.DeltaDerivOperator(1, ())
    checks.append(_at_most("ode_residual[free]", moment.ode_residual_check(free, empty), 1e-6))
    ym = ymqm()
    sy = oracle.solve(ym, 40)
    q = np.linspace(-5, 5, 32)
    B = moment.bloch_matrix_from_spectrum(sy, q, t, conv_tol=1e-3, tail_tol=None)
    checks.append(_at_most("ode_residual[ymqm]", moment.ode_residual_check(B, moment.fourier_potential(ym)), 1e-2,
                           "levels converged to 1e-3"))
    return checks


SUITES = {
    "ho": suite_ho,
    "quartic": suite_quartic,
    "ymqm": suite_ymqm,
    "forms": suite_forms,
    "stationary": suite_stationary,
    "momentum": suite_momentum,
}


def run_suite(case: str, seed: int = 0) -> dict:
    if case not in SUITES:
        raise KeyError(f"unknown verification case {case!r}; choose from {', '.join(SUITES)}")
    checks = SUITES[case](seed)
    return {
        "case": case,
        "seed": seed,
        "passed": all(c.passed for c in checks),
        "checks": [c.to_dict() for c in checks],
    }
