"""Polynomial potentials V(x) and their JSON file format."""
from __future__ import annotations

import hashlib
import json
from dataclasses import dataclass, field
from fractions import Fraction
from pathlib import Path

from .polycore import MultiPoly, VarSpace


class PotentialError(ValueError):
    """Raised for malformed potential definitions."""


@dataclass(frozen=True)
class PotentialSpec:
    """An even polynomial potential with precomputed gradient and Laplacian.

    ``V`` must live in the x-variables only.  ``degree`` is the homogeneity
    degree 2N when every monomial has the same total degree, else ``None``.
    """

    V: MultiPoly
    name: str = ""
    grad: tuple[MultiPoly, ...] = field(init=False, repr=False)
    laplacian: MultiPoly = field(init=False, repr=False)
    hessian: tuple[tuple[MultiPoly, ...], ...] = field(init=False, repr=False)
    degree: int | None = field(init=False)

    def __post_init__(self):
        space = self.V.space
        for v in list(space.p_vars) + [space.t]:
            if self.V.depends_on(v):
                raise PotentialError("potential must depend on x-variables only")
        if not self.V.is_real():
            raise PotentialError("potential coefficients must be real")
        _, odd = self.V.parity_filter(space.x_vars)
        if not odd.is_zero():
            raise PotentialError("potential must be even: V(-x) = V(x)")
        grad = tuple(self.V.diff(space.x(i)) for i in range(space.n))
        hess = tuple(tuple(g.diff(space.x(j)) for j in range(space.n)) for g in grad)
        lap = MultiPoly.zero(space)
        for i in range(space.n):
            lap = lap + hess[i][i]
        degs = {sum(e) for e in self.V.terms}
        object.__setattr__(self, "grad", grad)
        object.__setattr__(self, "hessian", hess)
        object.__setattr__(self, "laplacian", lap)
        object.__setattr__(self, "degree", degs.pop() if len(degs) == 1 and 0 not in degs else None)

    @property
    def space(self) -> VarSpace:
        return self.V.space

    @property
    def n(self) -> int:
        return self.V.space.n

    def is_zero(self) -> bool:
        return self.V.is_zero()

    def grad_squared(self) -> MultiPoly:
        out = MultiPoly.zero(self.space)
        for g in self.grad:
            out = out + g * g
        return out

    def x_monomials(self) -> list[tuple[tuple[int, ...], Fraction]]:
        """Monomials as ``(x-exponents, real coefficient)`` pairs."""
        n = self.n
        return [(exp[:n], c.re) for exp, c in self.V]

    def quadratic_form(self):
        """Return ``(K, c0)`` when V = c0 + x^T K x / 2, else ``None``."""
        import numpy as np

        if self.V.degree() > 2:
            return None
        n = self.n
        K = np.zeros((n, n))
        c0 = 0.0
        for xexp, c in self.x_monomials():
            d = sum(xexp)
            if d == 0:
                c0 = float(c)
            else:
                idx = [i for i in range(n) for _ in range(xexp[i])]
                i, j = idx
                if i == j:
                    K[i, i] = 2 * float(c)
                else:
                    K[i, j] = K[j, i] = float(c)
        return K, c0

    def to_json(self) -> dict:
        n = self.n
        return {
            "dim": n,
            "terms": [{"coeff": str(c), "exponents": list(e)} for e, c in self.x_monomials()],
        }

    def fingerprint(self) -> str:
        return hashlib.sha256(self.V.serialize().encode()).hexdigest()[:16]


def from_monomials(n: int, terms, name: str = "") -> PotentialSpec:
    """Build a potential from ``[(coeff, [e_1..e_n]), ...]``."""
    space = VarSpace(n)
    poly = {}
    for coeff, exps in terms:
        exps = list(exps)
        if len(exps) != n:
            raise PotentialError(f"exponent list {exps} does not match dim={n}")
        key = tuple(exps) + (0,) * (n + 1)
        poly[key] = poly.get(key, Fraction(0)) + _parse_coeff(coeff)
    return PotentialSpec(MultiPoly(space, poly), name=name)


def _parse_coeff(value) -> Fraction:
    if isinstance(value, bool):
        raise PotentialError(f"invalid coefficient {value!r}")
    if isinstance(value, (int, Fraction)):
        return Fraction(value)
    if isinstance(value, float):
        # decimal reading, so 0.1 means 1/10
        return Fraction(repr(value))
    if isinstance(value, str):
        try:
            return Fraction(value.strip())
        except (ValueError, ZeroDivisionError) as exc:
            raise PotentialError(f"invalid coefficient {value!r}") from exc
    raise PotentialError(f"invalid coefficient {value!r}")


def load_potential(source) -> PotentialSpec:
    """Load from a JSON file path, a JSON string, or a parsed dict.

    Format: ``{"dim": n, "terms": [{"coeff": "1/2", "exponents": [2, 2]}]}``.
    """
    name = ""
    if isinstance(source, dict):
        data = source
    else:
        text = str(source)
        path = Path(text)
        if not text.lstrip().startswith("{") and path.exists():
            name = path.stem
            text = path.read_text()
        try:
            data = json.loads(text)
        except json.JSONDecodeError as exc:
            raise PotentialError(f"line {exc.lineno}, column {exc.colno}: {exc.msg}") from exc
    if not isinstance(data, dict) or "dim" not in data or "terms" not in data:
        raise PotentialError("potential JSON needs 'dim' and 'terms' keys")
    n = data["dim"]
    if not isinstance(n, int) or isinstance(n, bool) or n < 1:
        raise PotentialError(f"'dim' must be a positive integer, got {n!r}")
    terms = []
    for k, term in enumerate(data["terms"]):
        if not isinstance(term, dict) or "coeff" not in term or "exponents" not in term:
            raise PotentialError(f"terms[{k}]: needs 'coeff' and 'exponents'")
        exps = term["exponents"]
        if not isinstance(exps, list) or not all(isinstance(e, int) and e >= 0 for e in exps):
            raise PotentialError(f"terms[{k}]: exponents must be non-negative integers")
        try:
            terms.append((_parse_coeff(term["coeff"]), exps))
        except PotentialError as exc:
            raise PotentialError(f"terms[{k}]: {exc}") from None
    return from_monomials(n, terms, name=data.get("name", name))


# Standard test potentials.

def harmonic(omega=1, n: int = 1) -> PotentialSpec:
    """Isotropic oscillator sum_i omega^2 x_i^2 / 2."""
    w2 = _parse_coeff(omega) ** 2
    return from_monomials(
        n, [(w2 / 2, [2 if j == i else 0 for j in range(n)]) for i in range(n)], name="harmonic"
    )


def quartic(coeff=1) -> PotentialSpec:
    return from_monomials(1, [(coeff, [4])], name="quartic")


def ymqm(g=1) -> PotentialSpec:
    """Two-dimensional x^2 y^2 model with coupling g^2 / 2."""
    return from_monomials(2, [(_parse_coeff(g) ** 2 / 2, [2, 2])], name="ymqm")
