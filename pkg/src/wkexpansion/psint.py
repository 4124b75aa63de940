"""Phase-space integration of the WK kernel into partition-function orders Z_k(t).

Momentum integrals are done analytically against the weight exp(-t p^2/2);
the remaining spatial integral of ``f(x, t) exp(-t V(x))`` is either a closed
Gaussian moment (quadratic V on full space) or adaptive cubature.
"""
from __future__ import annotations

import csv
import io
import math
from dataclasses import dataclass, field
from functools import lru_cache
from typing import Sequence

import numpy as np
from scipy.integrate import cubature

from .polycore import CRational, MultiPoly
from .potential import PotentialSpec
from .wkrec import WKSeries


class NonIntegrable(ValueError):
    """The integrand does not decay in some direction of full space."""


class ToleranceNotReached(RuntimeError):
    """Adaptive cubature ran out of subdivisions before meeting the tolerance."""


def double_factorial(k: int) -> int:
    """k!! for k >= -1, with (-1)!! = 1."""
    out = 1
    while k > 1:
        out *= k
        k -= 2
    return out


@dataclass(frozen=True)
class MomentIntegral:
    """Value ``(2 pi / t)^(n/2) * numerator(x, t) / t^t_power``."""

    numerator: MultiPoly
    t_power: int

    @property
    def n(self) -> int:
        return self.numerator.space.n

    def prefactor(self, t: float) -> float:
        return (2 * math.pi / t) ** (self.n / 2) / t ** self.t_power


def gaussian_p_moments(poly: MultiPoly) -> MomentIntegral:
    """Integrate a polynomial over momenta against exp(-t p^2 / 2).

    Per axis <p^(2m)> = (2m-1)!! t^(-m) and odd moments vanish.  Negative
    powers of t are collected into ``t_power`` so the numerator stays a
    polynomial.
    """
    space = poly.space
    pv = space.p_vars
    tv = space.t
    collected = []
    max_half = 0
    for exp, c in poly.terms.items():
        pe = [exp[v] for v in pv]
        if any(e % 2 for e in pe):
            continue
        weight = 1
        for e in pe:
            weight *= double_factorial(e - 1)
        half = sum(pe) // 2
        max_half = max(max_half, half)
        collected.append((exp, c * weight, half))
    terms = {}
    for exp, c, half in collected:
        new = list(exp)
        for v in pv:
            new[v] = 0
        new[tv] += max_half - half
        new = tuple(new)
        terms[new] = terms.get(new, CRational(0)) + c
    num = MultiPoly(space, terms)
    # cancel common powers of t
    if not num.is_zero():
        common = min(max_half, min(e[tv] for e in num.terms))
        if common:
            num = MultiPoly(space, {e[:tv] + (e[tv] - common,): c for e, c in num.terms.items()})
            max_half -= common
    else:
        max_half = 0
    return MomentIntegral(num, max_half)


@dataclass(frozen=True)
class SpatialDomain:
    """Full space, or the box prod_i [-L_i, L_i]."""

    kind: str = "full"
    half_widths: tuple[float, ...] = ()
    rtol: float = 1e-8
    max_subdivisions: int = 10_000

    def __post_init__(self):
        if self.kind not in ("full", "box"):
            raise ValueError(f"unknown domain kind {self.kind!r}")
        if self.kind == "box":
            if not self.half_widths or any(w <= 0 for w in self.half_widths):
                raise ValueError("box half-widths must be positive")
        if self.rtol <= 0:
            raise ValueError("tolerance must be positive")

    @classmethod
    def box(cls, half_widths: Sequence[float], **kw) -> "SpatialDomain":
        return cls("box", tuple(float(w) for w in half_widths), **kw)

    def bounds(self, n: int):
        if self.kind == "full":
            return [-np.inf] * n, [np.inf] * n
        if len(self.half_widths) == 1 and n > 1:
            w = self.half_widths * n
        else:
            w = self.half_widths
        if len(w) != n:
            raise ValueError(f"box has {len(w)} half-widths for dimension {n}")
        return [-x for x in w], list(w)

    def describe(self) -> str:
        if self.kind == "full":
            return "full"
        return "box:" + ",".join(repr(w) for w in self.half_widths)


@dataclass(frozen=True)
class TGrid:
    values: tuple[float, ...]

    def __post_init__(self):
        v = np.asarray(self.values, dtype=float)
        if v.ndim != 1 or len(v) < 1:
            raise ValueError("t grid needs at least one point")
        if np.any(v <= 0):
            raise ValueError("t values must be positive")
        if np.any(np.diff(v) <= 0):
            raise ValueError("t values must be strictly increasing")

    @classmethod
    def make(cls, tmin: float, tmax: float, count: int, scale: str = "linear") -> "TGrid":
        if count == 1:
            return cls((float(tmin),))
        if scale == "log":
            vals = np.geomspace(tmin, tmax, count)
        elif scale == "linear":
            vals = np.linspace(tmin, tmax, count)
        else:
            raise ValueError(f"unknown t scale {scale!r}")
        return cls(tuple(float(v) for v in vals))

    def __array__(self, dtype=None, copy=None):
        return np.asarray(self.values, dtype=dtype)

    def __len__(self):
        return len(self.values)


# -- decay pre-check ---------------------------------------------------------

def _ray_directions(n: int, seed: int = 0, count: int = 64) -> np.ndarray:
    dirs = [np.eye(n)[i] for i in range(n)]
    for signs in np.ndindex(*(2,) * n):
        d = np.array([1.0 if s == 0 else -1.0 for s in signs])
        dirs.append(d / np.linalg.norm(d))
    rng = np.random.default_rng(seed)
    r = rng.normal(size=(count, n))
    dirs.extend(r / np.linalg.norm(r, axis=1, keepdims=True))
    return np.array(dirs)


def confining_along_rays(potential: PotentialSpec, seed: int = 0) -> bool:
    """Heuristic: V(r d) must grow to +inf along every sampled ray d.

    Rays are the coordinate axes, the diagonals and seeded random directions.
    Channels not aligned with any sampled ray are not detected.
    """
    n = potential.n
    mons = potential.x_monomials()
    if not mons:
        return False
    for d in _ray_directions(n, seed):
        by_degree: dict[int, float] = {}
        for xexp, c in mons:
            deg = sum(xexp)
            by_degree[deg] = by_degree.get(deg, 0.0) + float(c) * float(np.prod(d ** np.array(xexp)))
        scale = max(abs(float(c)) for _, c in mons)
        lead = [(k, v) for k, v in by_degree.items() if abs(v) > 1e-12 * scale and k > 0]
        if not lead or max(lead)[1] <= 0:
            return False
    return True


# -- spatial integration -----------------------------------------------------

def _x_terms(poly: MultiPoly, t: float) -> tuple[np.ndarray, np.ndarray]:
    """Collapse a polynomial in (x, t) at numeric t into (x-exponents, coefficients)."""
    space = poly.space
    n = space.n
    acc: dict[tuple[int, ...], complex] = {}
    for exp, c in poly:
        if any(exp[v] for v in space.p_vars):
            raise ValueError("spatial integrand must not depend on momenta")
        key = exp[:n]
        acc[key] = acc.get(key, 0j) + complex(c) * t ** exp[space.t]
    if not acc:
        return np.zeros((0, n), dtype=np.int64), np.zeros(0, dtype=complex)
    keys = list(acc)
    return np.array(keys, dtype=np.int64).reshape(len(keys), n), np.array([acc[k] for k in keys])


def gaussian_moment(beta: Sequence[int], cov: np.ndarray) -> float:
    """E[x^beta] for a centred Gaussian with covariance ``cov`` (Isserlis recursion)."""
    cov = np.asarray(cov, dtype=float)
    n = len(cov)

    @lru_cache(maxsize=None)
    def mom(b: tuple[int, ...]) -> float:
        if sum(b) == 0:
            return 1.0
        if sum(b) % 2:
            return 0.0
        i = next(k for k in range(n) if b[k])
        rest = list(b)
        rest[i] -= 1
        total = 0.0
        for j in range(n):
            if rest[j]:
                lower = list(rest)
                lower[j] -= 1
                total += cov[i, j] * rest[j] * mom(tuple(lower))
        return total

    return mom(tuple(int(e) for e in beta))


def _gaussian_path(potential: PotentialSpec):
    qf = potential.quadratic_form()
    if qf is None:
        return None
    K, c0 = qf
    if np.any(np.linalg.eigvalsh(K) <= 0):
        return None
    return K, c0


def spatial_integral(f, potential: PotentialSpec, t: float, domain: SpatialDomain | None = None,
                     method: str = "auto"):
    """Integral of ``f(x, t) exp(-t V(x))`` over the domain at fixed ``t``.

    ``f`` is a MultiPoly without momentum dependence, or a list of them (then
    an array is returned).  ``method`` is ``"auto"``, ``"gaussian"`` or
    ``"cubature"``; auto takes the closed form when V is a positive-definite
    quadratic form on full space.
    """
    if t <= 0:
        raise ValueError("t must be positive")
    domain = domain or SpatialDomain()
    single = isinstance(f, MultiPoly)
    polys = [f] if single else list(f)
    n = potential.n
    parts = [_x_terms(p, t) for p in polys]

    gauss = _gaussian_path(potential) if domain.kind == "full" else None
    if method == "gaussian" and gauss is None:
        raise ValueError("closed-form path needs a positive-definite quadratic V on full space")
    if method == "cubature":
        gauss = None

    if gauss is not None:
        K, c0 = gauss
        cov = np.linalg.inv(t * K)
        norm = math.exp(-t * c0) * (2 * math.pi) ** (n / 2) / math.sqrt(np.linalg.det(t * K))
        vals = []
        for exps, coeffs in parts:
            vals.append(norm * sum(c * gaussian_moment(e, cov) for e, c in zip(exps, coeffs)))
        out = np.array(vals, dtype=complex)
    else:
        if domain.kind == "full" and not confining_along_rays(potential):
            raise NonIntegrable(
                "exp(-tV) does not decay along some direction of full space; "
                "use a box domain (--box) for channel potentials"
            )
        out = _cubature(parts, potential, t, domain)
    if np.any(np.abs(out.imag) > 1e-9 * np.maximum(np.abs(out.real), 1e-300)):
        out_val = out
    else:
        out_val = out.real
    return out_val[0] if single else out_val


def _cubature(parts, potential: PotentialSpec, t: float, domain: SpatialDomain) -> np.ndarray:
    n = potential.n
    vexp, vcoef = _x_terms(potential.V, 0.0)
    vcoef = vcoef.real
    nonzero = [i for i, (e, c) in enumerate(parts) if len(c)]
    out = np.zeros(len(parts), dtype=complex)
    if not nonzero:
        return out
    all_exps = np.vstack([parts[i][0] for i in nonzero] + [vexp])
    maxe = all_exps.max(axis=0)
    pieces = [(parts[i][0], parts[i][1]) for i in nonzero]

    def monomials(x, exps):
        m = np.ones((x.shape[0], len(exps)))
        for v in range(n):
            if maxe[v]:
                pw = x[:, v:v + 1] ** np.arange(maxe[v] + 1)
                m *= pw[:, exps[:, v]]
        return m

    def integrand(x):
        w = np.exp(-t * (monomials(x, vexp) @ vcoef))
        cols = []
        for exps, coeffs in pieces:
            val = monomials(x, exps) @ coeffs
            cols.append(val.real * w)
            cols.append(val.imag * w)
        return np.stack(cols, axis=-1) / scale

    a, b = domain.bounds(n)
    # normalise each component by the integral of |f| exp(-tV) so one rtol fits all
    def magnitude(x):
        w = np.exp(-t * (monomials(x, vexp) @ vcoef))
        return np.stack([np.abs(monomials(x, e) @ c) * w for e, c in pieces], axis=-1)

    rough = cubature(magnitude, a, b, rtol=1e-3, atol=0, max_subdivisions=domain.max_subdivisions)
    scale = np.repeat(np.maximum(rough.estimate, 1e-300), 2)
    res = cubature(integrand, a, b, rtol=domain.rtol, atol=domain.rtol,
                   max_subdivisions=domain.max_subdivisions)
    if res.status != "converged":
        raise ToleranceNotReached(
            f"cubature stopped after {res.subdivisions} subdivisions, "
            f"error {np.max(res.error):.3g} relative to |f| scale"
        )
    est = res.estimate * scale
    for j, i in enumerate(nonzero):
        out[i] = est[2 * j] + 1j * est[2 * j + 1]
    return out


# -- assembly -----------------------------------------------------------------

@dataclass
class ZSeries:
    potential: PotentialSpec
    hbar: float
    order: int
    grid: TGrid
    Zk: np.ndarray
    Zsum: np.ndarray
    domain: SpatialDomain = field(default_factory=SpatialDomain)

    @property
    def t(self) -> np.ndarray:
        return np.asarray(self.grid)

    def to_csv(self, exact: np.ndarray | None = None) -> str:
        buf = io.StringIO()
        buf.write(
            f"# potential={self.potential.fingerprint()} hbar={self.hbar!r} "
            f"order={self.order} domain={self.domain.describe()}\n"
        )
        w = csv.writer(buf, lineterminator="\n")
        header = ["t"] + [f"Z{k}" for k in range(self.order + 1)] + ["Zsum"]
        if exact is not None:
            header.append("Z_exact")
        w.writerow(header)
        for j, tv in enumerate(self.t):
            row = [repr(float(tv))] + [repr(float(self.Zk[k, j])) for k in range(self.order + 1)]
            row.append(repr(float(self.Zsum[j])))
            if exact is not None:
                row.append(repr(float(exact[j])))
            w.writerow(row)
        return buf.getvalue()


def order_integrals(series: WKSeries) -> list[MomentIntegral]:
    return [gaussian_p_moments(w) for w in series.terms]


def assemble_Z(series: WKSeries, hbar: float, grid: TGrid | Sequence[float],
               domain: SpatialDomain | None = None, method: str = "auto",
               odd_tol: float = 1e-10) -> ZSeries:
    """Z_k(t) = (2 pi hbar)^-n * int d^n x int d^n p exp(-tH) W_k, and their hbar sum."""
    if hbar <= 0:
        raise ValueError("hbar must be positive")
    if not isinstance(grid, TGrid):
        grid = TGrid(tuple(float(v) for v in grid))
    domain = domain or SpatialDomain()
    pot = series.potential
    n = pot.n
    moments = order_integrals(series)
    K = series.order
    ts = np.asarray(grid)
    Zk = np.zeros((K + 1, len(ts)))
    for j, t in enumerate(ts):
        vals = spatial_integral([m.numerator for m in moments], pot, float(t), domain, method)
        vals = np.asarray(vals)
        for k, m in enumerate(moments):
            z = (2 * math.pi * hbar) ** (-n) * m.prefactor(float(t)) * vals[k]
            if abs(np.imag(z)) > 1e-9 * max(abs(np.real(z)), 1e-300):
                raise ArithmeticError(f"Z_{k}({t}) has an imaginary part {np.imag(z)!r}")
            Zk[k, j] = float(np.real(z))
    for k in range(1, K + 1, 2):
        if np.any(np.abs(Zk[k]) > odd_tol * np.abs(Zk[0])):
            raise ArithmeticError(f"odd order Z_{k} does not vanish")
    powers = hbar ** np.arange(K + 1)
    Zsum = powers @ Zk
    return ZSeries(pot, hbar, K, grid, Zk, Zsum, domain)


def thomas_fermi(potential: PotentialSpec, grid, hbar: float, domain: SpatialDomain | None = None) -> np.ndarray:
    """Classical phase-space integral of exp(-tH)."""
    from .wkrec import wk_recursion

    return assemble_Z(wk_recursion(potential, 0), hbar, grid, domain).Zk[0]
