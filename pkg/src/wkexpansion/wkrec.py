"""Wigner-Kirkwood correction polynomials W_k.

The kernel W(x, p; t) of the partition function obeys

    dW/dt = hbar^2/2 [lap - t lap(V) + t^2 |grad V|^2 - 2t grad V . grad] W
            + i hbar p . (grad - t grad V) W,     W(t=0) = 1.

Writing W = sum_k hbar^k W_k and matching powers gives a recursion in which
W_k depends only on W_{k-1} and W_{k-2}.  Each step is a polynomial
operation followed by an exact integration in t.
"""
from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction

from .polycore import CRational, I, MultiPoly
from .potential import PotentialSpec

HALF = CRational(Fraction(1, 2))


@dataclass(frozen=True)
class WKSeries:
    potential: PotentialSpec
    order: int
    terms: tuple[MultiPoly, ...]

    def __getitem__(self, k: int) -> MultiPoly:
        return self.terms[k]

    def __len__(self):
        return len(self.terms)

    def summary(self) -> list[dict]:
        space = self.potential.space
        rows = []
        for k, w in enumerate(self.terms):
            even, odd = w.parity_filter(space.p_vars)
            rows.append({
                "k": k,
                "terms": len(w),
                "deg_x": w.degree(space.x_vars),
                "deg_p": w.degree(space.p_vars),
                "deg_t": w.degree([space.t]),
                "p_parity": "zero" if w.is_zero() else ("even" if odd.is_zero() else "odd" if even.is_zero() else "mixed"),
            })
        return rows


def covariant_derivative(potential: PotentialSpec, f: MultiPoly, i: int) -> MultiPoly:
    """D_i f = d_i f - t (d_i V) f."""
    space = potential.space
    if not 0 <= i < space.n:
        raise IndexError(f"axis {i} out of range for n={space.n}")
    t = MultiPoly.var(space, space.t)
    return f.diff(space.x(i)) - t * potential.grad[i] * f


def second_order_part(potential: PotentialSpec, f: MultiPoly) -> MultiPoly:
    """[lap - t lap(V) + t^2 |grad V|^2 - 2t grad V . grad] f."""
    space = potential.space
    t = MultiPoly.var(space, space.t)
    out = MultiPoly.zero(space)
    drift = MultiPoly.zero(space)
    for i in range(space.n):
        fi = f.diff(space.x(i))
        out = out + fi.diff(space.x(i))
        drift = drift + potential.grad[i] * fi
    pot = t * t * potential.grad_squared() - t * potential.laplacian
    return out + pot * f - (t * drift).scale(2)


def first_order_part(potential: PotentialSpec, f: MultiPoly) -> MultiPoly:
    """p . (grad - t grad V) f, without the factor i."""
    space = potential.space
    out = MultiPoly.zero(space)
    for i in range(space.n):
        p = MultiPoly.var(space, space.p(i))
        out = out + p * covariant_derivative(potential, f, i)
    return out


def recursion_rhs(potential: PotentialSpec, w_km1: MultiPoly | None, w_km2: MultiPoly | None) -> MultiPoly:
    """Right-hand side of dW_k/dt given W_{k-1} and W_{k-2} (None means zero)."""
    out = MultiPoly.zero(potential.space)
    if w_km2 is not None and not w_km2.is_zero():
        out = out + second_order_part(potential, w_km2).scale(HALF)
    if w_km1 is not None and not w_km1.is_zero():
        out = out + first_order_part(potential, w_km1).scale(I)
    return out


def wk_recursion(potential: PotentialSpec, K: int) -> WKSeries:
    """Compute W_0..W_K exactly."""
    if K < 0:
        raise ValueError("order K must be non-negative")
    space = potential.space
    terms = [MultiPoly.constant(space, 1)]
    for k in range(1, K + 1):
        prev1 = terms[k - 1]
        prev2 = terms[k - 2] if k >= 2 else None
        terms.append(recursion_rhs(potential, prev1, prev2).integrate_t())
    return WKSeries(potential, K, tuple(terms))


def recursion_residuals(series: WKSeries) -> list[MultiPoly]:
    """dW_k/dt minus the recursion right-hand side, for k = 1..K."""
    pot = series.potential
    t = pot.space.t
    out = []
    for k in range(1, len(series)):
        prev2 = series[k - 2] if k >= 2 else None
        out.append(series[k].diff(t) - recursion_rhs(pot, series[k - 1], prev2))
    return out


# -- hbar-graded residual of the full equation ------------------------------

class HbarGraded(dict):
    """Polynomial in a formal hbar: maps power -> MultiPoly."""

    def add(self, power: int, poly: MultiPoly):
        if poly.is_zero():
            return
        cur = self.get(power)
        total = poly if cur is None else cur + poly
        if total.is_zero():
            self.pop(power, None)
        else:
            self[power] = total


class UBResidualError(AssertionError):
    def __init__(self, order: int, residual: MultiPoly):
        super().__init__(f"residual does not vanish at hbar^{order} ({len(residual)} terms)")
        self.order = order
        self.residual = residual


def ub_residual(series: WKSeries, strict: bool = False) -> dict[int, MultiPoly]:
    """Residual of the full kinetic equation for W = sum_{k<=K} hbar^k W_k.

    The operator is applied to the truncated sum with hbar kept formal, and
    dW/dt - L W is returned grouped by hbar power (every power 0..K+2 is
    present, zero or not).  With ``strict`` a :class:`UBResidualError` names
    the first order <= K that fails to vanish.
    """
    pot = series.potential
    space = pot.space
    t = MultiPoly.var(space, space.t)
    ps = [MultiPoly.var(space, space.p(i)) for i in range(space.n)]
    lapV = pot.laplacian
    gradV = pot.grad
    grad2 = pot.grad_squared()

    res = HbarGraded()
    for k, w in enumerate(series.terms):
        res.add(k, w.diff(space.t))
        # hbar^2 / 2 * [...]
        lap = MultiPoly.zero(space)
        drift = MultiPoly.zero(space)
        first = MultiPoly.zero(space)
        for i in range(space.n):
            wi = w.diff(space.x(i))
            lap = lap + wi.diff(space.x(i))
            drift = drift + gradV[i] * wi
            first = first + ps[i] * (wi - t * gradV[i] * w)
        two = lap - t * lapV * w + t * t * grad2 * w - (t * drift).scale(2)
        res.add(k + 2, -two.scale(HALF))
        # (2i / hbar) * hbar^2 / 2 = i hbar
        res.add(k + 1, -first.scale(I))
    out = {j: res.get(j, MultiPoly.zero(space)) for j in range(series.order + 3)}
    if strict:
        for j in range(series.order + 1):
            if not out[j].is_zero():
                raise UBResidualError(j, out[j])
    return out


def first_nonzero_residual_order(series: WKSeries) -> int | None:
    res = ub_residual(series)
    for j in sorted(res):
        if not res[j].is_zero():
            return j
    return None


def homogeneity_weights(series: WKSeries) -> list[set[int]]:
    """Per order, the set of 2N*deg_t - deg_x - N*deg_p over monomials.

    For a homogeneous potential of degree 2N each set is a single value.
    """
    pot = series.potential
    if pot.degree is None or pot.degree % 2:
        raise ValueError("homogeneity weights need an even homogeneous potential")
    two_n = pot.degree
    N = two_n // 2
    space = pot.space
    out = []
    for w in series.terms:
        vals = set()
        for exp in w.terms:
            dx = sum(exp[v] for v in space.x_vars)
            dp = sum(exp[v] for v in space.p_vars)
            vals.add(two_n * exp[space.t] - dx - N * dp)
        out.append(vals)
    return out
