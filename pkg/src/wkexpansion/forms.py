"""Equivalent operator forms of the WK kinetic equation, checked against each other.

Each form is a different way of writing dW/dt.  Several of them act on a
transformed kernel such as ``e^{-tV} W`` or ``e^{-tH} W``; those prefactors
are carried as :class:`ExpPoly` values (a polynomial exponent next to a
polynomial amplitude) so the product rule is applied mechanically and the
result is pulled back to a prediction for dW/dt.
"""
from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from typing import Callable

import numpy as np

from .polycore import CRational, I, MultiPoly, VarSpace
from .potential import PotentialSpec
from .wkrec import covariant_derivative, first_order_part, second_order_part

FORM_IDS = ("UB7", "COV10", "FPE12", "FLUX14", "CONJ19", "CONJ21", "BSCH23", "SUSY28")


class ExpPoly:
    """Finite sum of terms ``exp(s) * P`` with polynomial exponents ``s`` and amplitudes ``P``."""

    __slots__ = ("parts",)

    def __init__(self, exponent: MultiPoly | None = None, amp: MultiPoly | None = None, parts=None):
        if parts is None:
            parts = {} if amp is None or amp.is_zero() else {exponent: amp}
        self.parts: dict[MultiPoly, MultiPoly] = parts

    @classmethod
    def poly(cls, amp: MultiPoly) -> "ExpPoly":
        return cls(MultiPoly.zero(amp.space), amp)

    def _map(self, fn) -> "ExpPoly":
        out: dict[MultiPoly, MultiPoly] = {}
        for s, a in self.parts.items():
            s2, a2 = fn(s, a)
            _accumulate(out, s2, a2)
        return ExpPoly(parts=out)

    def diff(self, var: int) -> "ExpPoly":
        return self._map(lambda s, a: (s, s.diff(var) * a + a.diff(var)))

    def times_exp(self, shift: MultiPoly) -> "ExpPoly":
        return self._map(lambda s, a: (s + shift, a))

    def __add__(self, other: "ExpPoly") -> "ExpPoly":
        out = dict(self.parts)
        for s, a in other.parts.items():
            _accumulate(out, s, a)
        return ExpPoly(parts=out)

    def __sub__(self, other: "ExpPoly") -> "ExpPoly":
        return self + other.scale(-1)

    def __mul__(self, other) -> "ExpPoly":
        return self._map(lambda s, a: (s, a * other))

    def scale(self, c) -> "ExpPoly":
        return self._map(lambda s, a: (s, a.scale(c)))

    def is_polynomial(self) -> bool:
        return all(s.is_zero() for s in self.parts)

    def to_poly(self, space: VarSpace | None = None) -> MultiPoly:
        if not self.is_polynomial():
            raise ValueError("exponential prefactor did not cancel")
        if not self.parts:
            if space is None:
                raise ValueError("zero ExpPoly needs an explicit space")
            return MultiPoly.zero(space)
        return next(iter(self.parts.values()))

    def eval_many(self, points) -> np.ndarray:
        pts = np.atleast_2d(np.asarray(points, dtype=float))
        out = np.zeros(len(pts), dtype=complex)
        for s, a in self.parts.items():
            out += np.exp(s.eval_many(pts)) * a.eval_many(pts)
        return out


def _accumulate(out: dict, s: MultiPoly, a: MultiPoly):
    if a.is_zero():
        return
    if s in out:
        total = out[s] + a
        if total.is_zero():
            del out[s]
        else:
            out[s] = total
    else:
        out[s] = a


@dataclass(frozen=True)
class OperatorFormReport:
    form: str
    max_residual: float
    samples: int
    exact: bool


def sample_points(space: VarSpace, count: int = 64, seed: int = 0) -> np.ndarray:
    rng = np.random.default_rng(seed)
    return rng.uniform(-1.0, 1.0, size=(count, space.nvars))


class _Ops:
    """Differential operators of the equation at a fixed exact hbar."""

    def __init__(self, potential: PotentialSpec, hbar):
        self.pot = potential
        self.space = potential.space
        self.h = CRational(Fraction(hbar) if not isinstance(hbar, Fraction) else hbar)
        sp = self.space
        self.t = MultiPoly.var(sp, sp.t)
        self.ps = [MultiPoly.var(sp, sp.p(i)) for i in range(sp.n)]
        self.p2 = MultiPoly.zero(sp)
        for p in self.ps:
            self.p2 = self.p2 + p * p
        self.V = potential.V
        self.H = self.p2.scale(Fraction(1, 2)) + self.V
        self.h2_half = self.h * self.h * Fraction(1, 2)

    def lap(self, g: ExpPoly) -> ExpPoly:
        sp = self.space
        out = None
        for i in range(sp.n):
            term = g.diff(sp.x(i)).diff(sp.x(i))
            out = term if out is None else out + term
        return out

    def l_fp(self, g: ExpPoly) -> ExpPoly:
        """hbar^2/2 lap g + i hbar p . grad g."""
        sp = self.space
        out = self.lap(g).scale(self.h2_half)
        for i in range(sp.n):
            out = out + (g.diff(sp.x(i)) * self.ps[i]).scale(I * self.h)
        return out

    def momentum_op(self, g: ExpPoly, i: int) -> ExpPoly:
        """(p_i - i hbar d_i) g."""
        return g * self.ps[i] - g.diff(self.space.x(i)).scale(I * self.h)

    def p_hat_squared(self, g: ExpPoly) -> ExpPoly:
        out = None
        for i in range(self.space.n):
            term = self.momentum_op(self.momentum_op(g, i), i)
            out = term if out is None else out + term
        return out


def _form_ub7(ops: _Ops, f: MultiPoly) -> list[ExpPoly]:
    pred = second_order_part(ops.pot, f).scale(ops.h2_half) + first_order_part(ops.pot, f).scale(I * ops.h)
    return [ExpPoly.poly(pred)]


def _form_cov10(ops: _Ops, f: MultiPoly) -> list[ExpPoly]:
    pot, n = ops.pot, ops.space.n
    # hbar^2/2 D^2 + i hbar p.D
    a = MultiPoly.zero(ops.space)
    for i in range(n):
        Df = covariant_derivative(pot, f, i)
        a = a + covariant_derivative(pot, Df, i).scale(ops.h2_half) + (ops.ps[i] * Df).scale(I * ops.h)

    # 1/2 [(hbar D + i p)^2 + p^2]
    def B(g, i):
        return covariant_derivative(pot, g, i).scale(ops.h) + (ops.ps[i] * g).scale(I)

    b = ops.p2 * f
    for i in range(n):
        b = b + B(B(f, i), i)
    return [ExpPoly.poly(a), ExpPoly.poly(b.scale(Fraction(1, 2)))]


def _pull_back(rhs: ExpPoly, shift: MultiPoly, source: MultiPoly, f: MultiPoly) -> ExpPoly:
    """dW/dt from the rate of ``exp(-shift) W``, where ``shift = t * source``."""
    return rhs.times_exp(shift) + ExpPoly.poly(source * f)


def _form_fpe12(ops: _Ops, f: MultiPoly, energy: bool = False) -> list[ExpPoly]:
    source = ops.H if energy else ops.V
    shift = ops.t * source
    Wp = ExpPoly(-shift, f)
    rhs = ops.l_fp(Wp) - Wp * source
    return [_pull_back(rhs, shift, source, f)]


def _form_flux14(ops: _Ops, f: MultiPoly) -> list[ExpPoly]:
    sp = ops.space
    shift = ops.t * ops.V
    Wp = ExpPoly(-shift, f)
    div = ExpPoly()
    for i in range(sp.n):
        J = (Wp * ops.ps[i]).scale(-I * ops.h) - Wp.diff(sp.x(i)).scale(ops.h2_half)
        div = div + J.diff(sp.x(i))
    rhs = div.scale(-1) - Wp * ops.V
    return [_pull_back(rhs, shift, ops.V, f)]


def _form_conj19(ops: _Ops, f: MultiPoly) -> list[ExpPoly]:
    shift = ops.t * ops.H
    return [ops.l_fp(ExpPoly(-shift, f)).times_exp(shift)]


def _form_conj21(ops: _Ops, f: MultiPoly) -> list[ExpPoly]:
    sp = ops.space
    shift = ops.t * ops.H
    G = ExpPoly(-shift, f)
    two_i_over_h = CRational(0, 2) / ops.h
    div = ExpPoly()
    for i in range(sp.n):
        J = (G.diff(sp.x(i)) + (G * ops.ps[i]).scale(two_i_over_h)).scale(ops.h2_half)
        div = div + J.diff(sp.x(i))
    return [div.times_exp(shift)]


def _form_bsch23(ops: _Ops, f: MultiPoly, literal: bool = False) -> list[ExpPoly]:
    shift = ops.t * ops.H
    G = ExpPoly(-shift, f)
    P2G = ops.p_hat_squared(G)
    # (p^2 - P^2)/2; the reversed difference flips the sign of the operator
    diff = (P2G - G * ops.p2) if literal else (G * ops.p2 - P2G)
    preds = [diff.scale(Fraction(1, 2)).times_exp(shift)]
    if not literal:
        # d/dt (W e^{-tH}) = -(P^2/2 + V)(W e^{-tH})
        bloch = (P2G.scale(Fraction(1, 2)) + G * ops.V).scale(-1)
        preds.append(_pull_back(bloch, shift, ops.H, f))
    return preds


def _form_susy28(ops: _Ops, f: MultiPoly, literal: bool = False) -> list[ExpPoly]:
    sp = ops.space
    half = ops.t * ops.V.scale(Fraction(1, 2))
    if literal:
        # W~ = e^{-tV} W with D~ = e^{-tV/2} grad e^{-tV/2}
        shift, outer = ops.t * ops.V, -half
    else:
        # W~ = e^{-tV/2} W with D~ = e^{tV/2} grad e^{-tV/2}
        shift, outer = half, half

    def Dt(g: ExpPoly, i: int) -> ExpPoly:
        return g.times_exp(-half).diff(sp.x(i)).times_exp(outer)

    Wt = ExpPoly(-shift, f)
    rhs = (Wt * ops.V).scale(Fraction(-1, 2))
    for i in range(sp.n):
        DW = Dt(Wt, i)
        rhs = rhs + Dt(DW, i).scale(ops.h2_half) + (DW * ops.ps[i]).scale(I * ops.h)
    source = ops.V if literal else ops.V.scale(Fraction(1, 2))
    return [_pull_back(rhs, shift, source, f)]


_FORMS: dict[str, Callable] = {
    "UB7": _form_ub7,
    "COV10": _form_cov10,
    "FPE12": _form_fpe12,
    "FLUX14": _form_flux14,
    "CONJ19": _form_conj19,
    "CONJ21": _form_conj21,
    "BSCH23": _form_bsch23,
    "SUSY28": _form_susy28,
}


def form_predictions(potential: PotentialSpec, testfn: MultiPoly, hbar=Fraction(3, 4),
                     energy_form: bool = False) -> dict[str, list[ExpPoly]]:
    """dW/dt predicted by every form for W = ``testfn``."""
    ops = _Ops(potential, hbar)
    out = {}
    for name, fn in _FORMS.items():
        out[name] = fn(ops, testfn, energy=True) if (name == "FPE12" and energy_form) else fn(ops, testfn)
    return out


def form_equivalence_check(potential: PotentialSpec, testfn: MultiPoly, points=None,
                           hbar=Fraction(3, 4), energy_form: bool = False,
                           seed: int = 0) -> list[OperatorFormReport]:
    """Evaluate all forms at sample points and report the max pairwise residual per form.

    ``exact`` is True when every prediction of a form reduced to a polynomial
    identical to the reference UB7 polynomial.
    """
    if points is None:
        points = sample_points(potential.space, 64, seed)
    points = np.asarray(points, dtype=float)
    preds = form_predictions(potential, testfn, hbar, energy_form)
    ref_poly = preds["UB7"][0].to_poly(testfn.space)
    values = {name: [p.eval_many(points) for p in plist] for name, plist in preds.items()}
    reports = []
    for name in FORM_IDS:
        worst = 0.0
        for v in values[name]:
            for other, ov in values.items():
                for w in ov:
                    worst = max(worst, float(np.max(np.abs(v - w))))
        exact = all(p.is_polynomial() and p.to_poly(testfn.space) == ref_poly for p in preds[name])
        reports.append(OperatorFormReport(name, worst, len(points), exact))
    return reports


def literal_transcription_residuals(potential: PotentialSpec, testfn: MultiPoly, points=None,
                                    hbar=Fraction(3, 4), seed: int = 0) -> dict[str, float]:
    """Max deviation from UB7 of the uncorrected BSCH23 and SUSY28 transcriptions."""
    if points is None:
        points = sample_points(potential.space, 64, seed)
    ops = _Ops(potential, hbar)
    ref = _form_ub7(ops, testfn)[0].eval_many(points)
    out = {}
    for name, fn in (("BSCH23", _form_bsch23), ("SUSY28", _form_susy28)):
        val = fn(ops, testfn, literal=True)[0].eval_many(points)
        out[name] = float(np.max(np.abs(val - ref)))
    return out


# -- stationary solutions ----------------------------------------------------

def planewave_lfp_amplitude(n: int, hbar, sign: int = -1) -> MultiPoly:
    """Amplitude of L_FP applied to exp(2 i sign p.x / hbar), with p symbolic."""
    space = VarSpace(n)
    h = CRational(Fraction(hbar))
    phase = MultiPoly.zero(space)
    for i in range(n):
        phase = phase + MultiPoly.var(space, space.x(i)) * MultiPoly.var(space, space.p(i))
    phase = phase.scale(CRational(0, 2 * sign) / h)
    ops = _Ops(PotentialSpec(MultiPoly.zero(space)), h.re)
    out = ops.l_fp(ExpPoly(phase, MultiPoly.constant(space, 1)))
    return out.parts.get(phase, MultiPoly.zero(space))


def stationary_planewave_check(p, hbar, sign: int = -1) -> float:
    """L_FP residual for the plane wave exp(2 i sign p.x / hbar).

    ``sign=-1`` is the stationary kernel and returns exactly 0; ``sign=+1``
    returns -4 p^2.
    """
    if hbar <= 0:
        raise ValueError("hbar must be positive")
    p = [Fraction(v) for v in np.atleast_1d(p).tolist()]
    amp = planewave_lfp_amplitude(len(p), hbar, sign)
    space = amp.space
    for i, pv in enumerate(p):
        amp = amp.subs(space.p(i), pv)
    val = complex(amp.terms.get((0,) * space.nvars, CRational(0)))
    return float(val.real)


def no_stationary_solution_check(potential: PotentialSpec, samples=None, hbar=1.0, seed: int = 0) -> bool:
    """Confirm that exp(i p.x / hbar) is stationary only for V = 0.

    Stationarity of the plane wave requires (grad ln u)^2 = 2 (V - p^2/2) / hbar^2,
    where p^2/2 is the kinetic energy already carried by exp(-tH).  With
    (grad ln u)^2 = -p^2/hbar^2 this holds iff V(x) = 0.  Returns True when
    equality fails somewhere for nonzero V and holds everywhere for V = 0.
    """
    space = potential.space
    if samples is None:
        samples = sample_points(space, 64, seed)
    samples = np.asarray(samples, dtype=float)
    p2 = np.sum(samples[:, space.n:2 * space.n] ** 2, axis=1)
    lhs = -p2 / hbar**2
    rhs = 2.0 * (potential.V.eval_many(samples).real - p2 / 2) / hbar**2
    mismatch = np.abs(lhs - rhs) > 1e-12 * (1 + np.abs(lhs))
    if potential.is_zero():
        return not mismatch.any()
    return bool(mismatch.any())
