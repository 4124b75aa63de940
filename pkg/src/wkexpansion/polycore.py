"""Exact sparse multivariate polynomials over the complex rationals.

Variables are ordered ``(x_1..x_n, p_1..p_n, t)``.  A polynomial is a map from
exponent tuples (length ``2n+1``) to :class:`CRational` coefficients; zero
coefficients are never stored.  All arithmetic is exact; floats only appear
in :meth:`MultiPoly.eval` / :meth:`MultiPoly.eval_many`.

Canonical term order is graded lexicographic, highest total degree first.
"""
from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from numbers import Rational as _RationalABC
from types import MappingProxyType
from typing import Iterable, Iterator, Mapping, Sequence

import numpy as np

Exponent = tuple[int, ...]


class CRational:
    """Complex number with exact rational real and imaginary parts."""

    __slots__ = ("re", "im")

    def __init__(self, re=0, im=0):
        self.re = re if type(re) is Fraction else Fraction(re)
        self.im = im if type(im) is Fraction else Fraction(im)

    @classmethod
    def coerce(cls, value) -> "CRational":
        if isinstance(value, CRational):
            return value
        if isinstance(value, (int, _RationalABC)):
            return cls(Fraction(value))
        if isinstance(value, complex):
            return cls(Fraction(value.real), Fraction(value.imag))
        if isinstance(value, float):
            return cls(Fraction(value))
        if isinstance(value, str):
            return cls(Fraction(value))
        raise TypeError(f"cannot convert {type(value).__name__} to CRational")

    def __add__(self, other):
        other = CRational.coerce(other)
        return CRational(self.re + other.re, self.im + other.im)

    __radd__ = __add__

    def __sub__(self, other):
        other = CRational.coerce(other)
        return CRational(self.re - other.re, self.im - other.im)

    def __rsub__(self, other):
        return CRational.coerce(other) - self

    def __mul__(self, other):
        other = CRational.coerce(other)
        a, b, c, d = self.re, self.im, other.re, other.im
        if not b and not d:
            return CRational(a * c)
        return CRational(a * c - b * d, a * d + b * c)

    __rmul__ = __mul__

    def __truediv__(self, other):
        other = CRational.coerce(other)
        den = other.re * other.re + other.im * other.im
        if not den:
            raise ZeroDivisionError("CRational division by zero")
        return self * CRational(other.re / den, -other.im / den)

    def __neg__(self):
        return CRational(-self.re, -self.im)

    def __eq__(self, other):
        try:
            other = CRational.coerce(other)
        except TypeError:
            return NotImplemented
        return self.re == other.re and self.im == other.im

    def __hash__(self):
        return hash((self.re, self.im))

    def __bool__(self):
        return bool(self.re) or bool(self.im)

    def __complex__(self):
        return complex(float(self.re), float(self.im))

    def conjugate(self) -> "CRational":
        return CRational(self.re, -self.im)

    def __repr__(self):
        return f"CRational({self.re}, {self.im})"

    def __str__(self):
        if not self.im:
            return str(self.re)
        if not self.re:
            return f"{self.im}i"
        return f"({self.re}{'+' if self.im > 0 else '-'}{abs(self.im)}i)"


I = CRational(0, 1)


def _to_coeff(value) -> CRational:
    return CRational.coerce(value)


@dataclass(frozen=True)
class VarSpace:
    """Variable layout ``(x_1..x_n, p_1..p_n, t)`` for spatial dimension ``n``."""

    n: int

    def __post_init__(self):
        if not isinstance(self.n, int) or self.n < 1:
            raise ValueError(f"spatial dimension must be a positive integer, got {self.n!r}")

    @property
    def nvars(self) -> int:
        return 2 * self.n + 1

    def x(self, i: int) -> int:
        if not 0 <= i < self.n:
            raise IndexError(f"x index {i} out of range for n={self.n}")
        return i

    def p(self, i: int) -> int:
        if not 0 <= i < self.n:
            raise IndexError(f"p index {i} out of range for n={self.n}")
        return self.n + i

    @property
    def t(self) -> int:
        return 2 * self.n

    @property
    def x_vars(self) -> tuple[int, ...]:
        return tuple(range(self.n))

    @property
    def p_vars(self) -> tuple[int, ...]:
        return tuple(range(self.n, 2 * self.n))

    def names(self) -> list[str]:
        if self.n == 1:
            return ["x", "p", "t"]
        return [f"x{i + 1}" for i in range(self.n)] + [f"p{i + 1}" for i in range(self.n)] + ["t"]


class DimensionMismatch(ValueError):
    pass


def grlex_key(exp: Exponent):
    return (sum(exp), exp)


class MultiPoly:
    """Immutable sparse polynomial in the variables of a :class:`VarSpace`."""

    __slots__ = ("_space", "_terms", "_hash")

    def __init__(self, space: VarSpace, terms: Mapping[Exponent, object] | None = None):
        self._space = space
        clean: dict[Exponent, CRational] = {}
        if terms:
            nv = space.nvars
            for exp, c in terms.items():
                exp = tuple(int(e) for e in exp)
                if len(exp) != nv or any(e < 0 for e in exp):
                    raise ValueError(f"bad exponent vector {exp} for {nv} variables")
                c = _to_coeff(c)
                if c:
                    if exp in clean:
                        c = clean[exp] + c
                        if not c:
                            del clean[exp]
                            continue
                    clean[exp] = c
        self._terms = clean
        self._hash = None

    @classmethod
    def _raw(cls, space: VarSpace, terms: dict[Exponent, CRational]) -> "MultiPoly":
        # trusted constructor: terms already validated and zero-free
        obj = cls.__new__(cls)
        obj._space = space
        obj._terms = terms
        obj._hash = None
        return obj

    # -- constructors -------------------------------------------------------
    @classmethod
    def zero(cls, space: VarSpace) -> "MultiPoly":
        return cls._raw(space, {})

    @classmethod
    def constant(cls, space: VarSpace, value=1) -> "MultiPoly":
        c = _to_coeff(value)
        if not c:
            return cls.zero(space)
        return cls._raw(space, {(0,) * space.nvars: c})

    @classmethod
    def monomial(cls, space: VarSpace, exp: Sequence[int], coeff=1) -> "MultiPoly":
        return cls(space, {tuple(exp): coeff})

    @classmethod
    def var(cls, space: VarSpace, index: int) -> "MultiPoly":
        exp = [0] * space.nvars
        exp[index] = 1
        return cls._raw(space, {tuple(exp): CRational(1)})

    # -- basic protocol -----------------------------------------------------
    @property
    def space(self) -> VarSpace:
        return self._space

    @property
    def terms(self) -> Mapping[Exponent, CRational]:
        return MappingProxyType(self._terms)

    def __len__(self):
        return len(self._terms)

    def __iter__(self) -> Iterator[tuple[Exponent, CRational]]:
        for exp in sorted(self._terms, key=grlex_key, reverse=True):
            yield exp, self._terms[exp]

    def is_zero(self) -> bool:
        return not self._terms

    def __bool__(self):
        return bool(self._terms)

    def __eq__(self, other):
        if isinstance(other, MultiPoly):
            return self._space == other._space and self._terms == other._terms
        try:
            return self == MultiPoly.constant(self._space, other)
        except TypeError:
            return NotImplemented

    def __hash__(self):
        if self._hash is None:
            self._hash = hash((self._space, frozenset(self._terms.items())))
        return self._hash

    def _coerce(self, other) -> "MultiPoly":
        if isinstance(other, MultiPoly):
            if other._space != self._space:
                raise DimensionMismatch(f"spaces differ: {self._space} vs {other._space}")
            return other
        return MultiPoly.constant(self._space, other)

    # -- ring operations ----------------------------------------------------
    def __add__(self, other):
        other = self._coerce(other)
        out = dict(self._terms)
        for exp, c in other._terms.items():
            if exp in out:
                s = out[exp] + c
                if s:
                    out[exp] = s
                else:
                    del out[exp]
            else:
                out[exp] = c
        return MultiPoly._raw(self._space, out)

    __radd__ = __add__

    def __neg__(self):
        return MultiPoly._raw(self._space, {e: -c for e, c in self._terms.items()})

    def __sub__(self, other):
        return self + (-self._coerce(other))

    def __rsub__(self, other):
        return self._coerce(other) - self

    def scale(self, factor) -> "MultiPoly":
        f = _to_coeff(factor)
        if not f:
            return MultiPoly.zero(self._space)
        return MultiPoly._raw(self._space, {e: c * f for e, c in self._terms.items()})

    def __mul__(self, other):
        if not isinstance(other, MultiPoly):
            return self.scale(other)
        other = self._coerce(other)
        if len(self._terms) < len(other._terms):
            a, b = other._terms, self._terms
        else:
            a, b = self._terms, other._terms
        out: dict[Exponent, CRational] = {}
        for eb, cb in b.items():
            for ea, ca in a.items():
                exp = tuple(x + y for x, y in zip(ea, eb))
                prod = ca * cb
                prev = out.get(exp)
                if prev is not None:
                    prod = prev + prod
                out[exp] = prod
        return MultiPoly._raw(self._space, {e: c for e, c in out.items() if c})

    def __rmul__(self, other):
        return self.scale(other)

    def __pow__(self, k: int):
        if not isinstance(k, int) or k < 0:
            raise ValueError("only non-negative integer powers are supported")
        result = MultiPoly.constant(self._space, 1)
        base = self
        while k:
            if k & 1:
                result = result * base
            base = base * base
            k >>= 1
        return result

    # -- calculus -----------------------------------------------------------
    def diff(self, var: int) -> "MultiPoly":
        """Exact partial derivative with respect to variable ``var``."""
        if not 0 <= var < self._space.nvars:
            raise IndexError(f"variable index {var} out of range")
        out = {}
        for exp, c in self._terms.items():
            e = exp[var]
            if e:
                new = exp[:var] + (e - 1,) + exp[var + 1:]
                out[new] = c * e
        return MultiPoly._raw(self._space, out)

    def integrate_t(self) -> "MultiPoly":
        """Antiderivative in ``t`` that vanishes at ``t = 0``."""
        tv = self._space.t
        out = {}
        for exp, c in self._terms.items():
            e = exp[tv] + 1
            out[exp[:tv] + (e,)] = c * Fraction(1, e)
        return MultiPoly._raw(self._space, out)

    def subs(self, var: int, value) -> "MultiPoly":
        """Substitute an exact constant for one variable."""
        v = _to_coeff(value)
        out: dict[Exponent, CRational] = {}
        for exp, c in self._terms.items():
            e = exp[var]
            new = exp[:var] + (0,) + exp[var + 1:]
            term = c
            for _ in range(e):
                term = term * v
            out[new] = out.get(new, CRational(0)) + term
        return MultiPoly._raw(self._space, {e: c for e, c in out.items() if c})

    def flip_sign(self, vars: Iterable[int]) -> "MultiPoly":
        """Polynomial with ``v -> -v`` applied to each variable in ``vars``."""
        vs = tuple(vars)
        return MultiPoly._raw(
            self._space,
            {e: (-c if sum(e[v] for v in vs) % 2 else c) for e, c in self._terms.items()},
        )

    def parity_filter(self, vars: Iterable[int]) -> tuple["MultiPoly", "MultiPoly"]:
        """Split into parts even and odd in the total degree over ``vars``."""
        vs = tuple(vars)
        even, odd = {}, {}
        for exp, c in self._terms.items():
            (odd if sum(exp[v] for v in vs) % 2 else even)[exp] = c
        return MultiPoly._raw(self._space, even), MultiPoly._raw(self._space, odd)

    # -- inspection ---------------------------------------------------------
    def degree(self, vars: Iterable[int] | None = None) -> int:
        """Maximum total degree over ``vars`` (all variables by default); -1 for zero."""
        vs = tuple(range(self._space.nvars)) if vars is None else tuple(vars)
        return max((sum(e[v] for v in vs) for e in self._terms), default=-1)

    def min_degree(self, vars: Iterable[int] | None = None) -> int:
        vs = tuple(range(self._space.nvars)) if vars is None else tuple(vars)
        return min((sum(e[v] for v in vs) for e in self._terms), default=-1)

    def depends_on(self, var: int) -> bool:
        return any(e[var] for e in self._terms)

    def is_real(self) -> bool:
        return all(not c.im for c in self._terms.values())

    def is_imaginary(self) -> bool:
        return all(not c.re for c in self._terms.values())

    def real_part(self) -> "MultiPoly":
        return MultiPoly(self._space, {e: c.re for e, c in self._terms.items()})

    def imag_part(self) -> "MultiPoly":
        return MultiPoly(self._space, {e: c.im for e, c in self._terms.items()})

    def conjugate(self) -> "MultiPoly":
        return MultiPoly._raw(self._space, {e: c.conjugate() for e, c in self._terms.items()})

    def max_abs_coeff(self) -> float:
        return max((abs(complex(c)) for c in self._terms.values()), default=0.0)

    # -- numerics -----------------------------------------------------------
    def eval(self, point: Sequence[float]) -> complex:
        """Evaluate at a single point of length ``2n+1``."""
        if len(point) != self._space.nvars:
            raise ValueError(f"point must have {self._space.nvars} entries")
        total = 0j
        for exp, c in self:
            term = complex(c)
            for xv, e in zip(point, exp):
                if e:
                    term *= xv ** e
            total += term
        return total

    def compiled(self) -> "CompiledPoly":
        return CompiledPoly(self)

    def eval_many(self, points) -> np.ndarray:
        return self.compiled()(points)

    # -- text ---------------------------------------------------------------
    def serialize(self) -> str:
        lines = []
        for exp, c in self:
            lines.append(
                f"{c.re.numerator}/{c.re.denominator} {c.im.numerator}/{c.im.denominator} "
                + " ".join(str(e) for e in exp)
            )
        return "\n".join(lines) + ("\n" if lines else "")

    @classmethod
    def parse(cls, text: str, n: int | None = None) -> "MultiPoly":
        terms = {}
        for lineno, line in enumerate(text.splitlines(), 1):
            line = line.strip()
            if not line or line.startswith("#"):
                continue
            fields = line.split()
            if len(fields) < 3 or (len(fields) - 2) % 2 != 1:
                raise ValueError(f"line {lineno}: expected 're im e1 .. e(2n+1)', got {line!r}")
            nv = len(fields) - 2
            if n is None:
                n = (nv - 1) // 2
            elif nv != 2 * n + 1:
                raise ValueError(f"line {lineno}: {nv} exponents, expected {2 * n + 1}")
            exp = tuple(int(e) for e in fields[2:])
            if exp in terms:
                raise ValueError(f"line {lineno}: duplicate exponent {exp}")
            terms[exp] = CRational(Fraction(fields[0]), Fraction(fields[1]))
        if n is None:
            raise ValueError("empty serialization needs an explicit dimension n")
        return cls(VarSpace(n), terms)

    def __repr__(self):
        return f"MultiPoly(n={self._space.n}, {self})"

    def __str__(self):
        if not self._terms:
            return "0"
        names = self._space.names()
        parts = []
        for exp, c in self:
            mono = "*".join(
                (nm if e == 1 else f"{nm}^{e}") for nm, e in zip(names, exp) if e
            )
            cs = str(c)
            if not mono:
                parts.append(cs)
            elif c == 1:
                parts.append(mono)
            elif c == -1:
                parts.append("-" + mono)
            else:
                parts.append(f"{cs}*{mono}")
        return " + ".join(parts).replace("+ -", "- ")


class CompiledPoly:
    """Vectorized float evaluator for a fixed :class:`MultiPoly`."""

    def __init__(self, poly: MultiPoly):
        self.nvars = poly.space.nvars
        items = list(poly)
        self.exponents = np.array([e for e, _ in items], dtype=np.int64).reshape(len(items), self.nvars)
        self.coeffs = np.array([complex(c) for _, c in items], dtype=np.complex128)
        self.max_exp = self.exponents.max(axis=0) if len(items) else np.zeros(self.nvars, dtype=np.int64)

    def __call__(self, points) -> np.ndarray:
        pts = np.asarray(points, dtype=float)
        single = pts.ndim == 1
        pts = np.atleast_2d(pts)
        if pts.shape[1] != self.nvars:
            raise ValueError(f"points must have {self.nvars} columns")
        if not len(self.coeffs):
            out = np.zeros(len(pts), dtype=np.complex128)
            return out[0] if single else out
        mono = np.ones((len(pts), len(self.coeffs)))
        for v in range(self.nvars):
            if self.max_exp[v] == 0:
                continue
            powers = pts[:, v:v + 1] ** np.arange(self.max_exp[v] + 1)
            mono *= powers[:, self.exponents[:, v]]
        out = mono @ self.coeffs
        return out[0] if single else out


def poly_vars(space: VarSpace):
    """Return ``(xs, ps, t)`` as lists of single-variable polynomials."""
    xs = [MultiPoly.var(space, space.x(i)) for i in range(space.n)]
    ps = [MultiPoly.var(space, space.p(i)) for i in range(space.n)]
    return xs, ps, MultiPoly.var(space, space.t)
