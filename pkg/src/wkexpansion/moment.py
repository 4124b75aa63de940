"""Momentum representation: Fourier-transformed potential and the Bloch matrix A(p, p'; t).

A monomial c x^alpha of V transforms into c (i hbar)^|alpha| d^alpha/dp'^alpha acting on
delta(p' - p), so the hbar power of every term equals its derivative order.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .oracle import Spectrum, TailBoundExceeded, momentum_basis_1d, tail_estimate
from .polycore import CRational
from .potential import PotentialSpec


@dataclass(frozen=True)
class DeltaTerm:
    coeff: CRational
    hbar_power: int
    alpha: tuple[int, ...]


@dataclass(frozen=True)
class DeltaDerivOperator:
    n: int
    terms: tuple[DeltaTerm, ...]

    def __post_init__(self):
        for term in self.terms:
            if term.hbar_power != sum(term.alpha):
                raise ValueError(f"hbar power {term.hbar_power} != derivative order {sum(term.alpha)}")
            if not term.coeff:
                raise ValueError("zero coefficient in delta-derivative operator")

    def __len__(self):
        return len(self.terms)

    def describe(self) -> list[str]:
        out = []
        for term in self.terms:
            d = " ".join(f"d^{a}/dp'_{i + 1}^{a}" for i, a in enumerate(term.alpha) if a)
            out.append(f"{term.coeff} hbar^{term.hbar_power} {d}".strip())
        return out


def fourier_potential(potential: PotentialSpec) -> DeltaDerivOperator:
    """V(x) -> sum_alpha c_alpha (i hbar)^|alpha| d^alpha_{p'} delta(p' - p)."""
    terms = []
    for xexp, c in potential.x_monomials():
        order = sum(xexp)
        phase = CRational(1)
        for _ in range(order):
            phase = phase * CRational(0, 1)
        terms.append(DeltaTerm(phase * c, order, tuple(xexp)))
    return DeltaDerivOperator(potential.n, tuple(terms))


def first_correction_order(potential: PotentialSpec) -> int:
    """hbar power carried by one insertion of the transformed potential.

    This is the smallest total degree among the non-constant monomials of V;
    a constant shift only multiplies Z by exp(-t c) and carries no hbar.
    """
    degrees = [t.hbar_power for t in fourier_potential(potential).terms if t.hbar_power > 0]
    if not degrees:
        raise ValueError("potential has no x-dependent terms")
    return min(degrees)


@dataclass
class MomentumBlochMatrix:
    axes: tuple[np.ndarray, ...]
    t: np.ndarray
    values: np.ndarray  # (len(t), P, P)
    tail: np.ndarray
    hbar: float
    provenance: str = "oracle-spectral"
    meta: dict = field(default_factory=dict)

    @property
    def n(self) -> int:
        return len(self.axes)

    @property
    def shape(self) -> tuple[int, ...]:
        return tuple(len(a) for a in self.axes)

    @property
    def points(self) -> np.ndarray:
        mesh = np.meshgrid(*self.axes, indexing="ij")
        return np.stack([m.ravel() for m in mesh], axis=-1)

    @property
    def spacings(self) -> tuple[float, ...]:
        return tuple(float(a[1] - a[0]) for a in self.axes)

    @property
    def cell_volume(self) -> float:
        return math.prod(self.spacings)

    def trace(self) -> np.ndarray:
        """sum_i A(p_i, p_i; t) * cell volume, per t."""
        return np.real(np.einsum("tii->t", self.values)) * self.cell_volume

    def hermiticity_error(self) -> float:
        return float(np.max(np.abs(self.values - np.conj(np.swapaxes(self.values, 1, 2)))))

    def diagonal(self) -> np.ndarray:
        return np.einsum("tii->ti", self.values)


def _momentum_basis(spectrum: Spectrum, axes) -> np.ndarray:
    """Tensor basis functions <p|k> on the grid, shape (P, basis dim)."""
    per_axis = [momentum_basis_1d(spectrum.basis, ax).T for ax in axes]  # (G_i, M)
    out = per_axis[0]
    for B in per_axis[1:]:
        out = np.einsum("ia,jb->ijab", out, B).reshape(out.shape[0] * B.shape[0], -1)
    return out


def bloch_matrix_from_spectrum(spectrum: Spectrum, p_axes, t_values, conv_tol: float = 1e-8,
                               tail_tol: float | None = 1e-6) -> MomentumBlochMatrix:
    """A(p_i, p_j; t) = sum_n <p_i|n> <n|p_j> exp(-t E_n) over converged levels.

    ``p_axes`` is one 1D grid (reused for every axis) or a list of n grids.
    Raises :class:`TailBoundExceeded` when the estimated truncation tail exceeds
    ``tail_tol`` times the partial trace.
    """
    n = spectrum.n
    if isinstance(p_axes, np.ndarray) and p_axes.ndim == 1 or (
        len(p_axes) and np.isscalar(p_axes[0])
    ):
        axes = tuple(np.asarray(p_axes, dtype=float) for _ in range(n))
    else:
        axes = tuple(np.asarray(a, dtype=float) for a in p_axes)
    if len(axes) != n:
        raise ValueError(f"need {n} momentum axes")
    t = np.atleast_1d(np.asarray(t_values, dtype=float))
    N = spectrum.converged_count(conv_tol)
    if N == 0:
        raise TailBoundExceeded("no converged levels")
    E = spectrum.eigenvalues[:N]
    phi = _momentum_basis(spectrum, axes) @ spectrum.eigenvectors[:, :N]  # (P, N)
    weights = np.exp(-np.outer(t, E))  # (T, N)
    values = np.einsum("pn,tn,qn->tpq", phi, weights, np.conj(phi))
    tail = np.array([tail_estimate(E, tv) for tv in t])
    if tail_tol is not None:
        partial = weights.sum(axis=1)
        if np.any(tail > tail_tol * partial):
            raise TailBoundExceeded(
                f"truncation tail {np.max(tail / partial):.3g} relative exceeds {tail_tol:g}"
            )
    return MomentumBlochMatrix(axes, t, values, tail, spectrum.basis.hbar, meta={"levels": N})


def free_bloch_matrix(axes, t_values, hbar: float = 1.0) -> MomentumBlochMatrix:
    """A for V = 0 on a grid: the diagonal carries exp(-t p^2 / 2) and off-diagonals vanish.

    The delta function is represented by 1 / (cell volume) on the diagonal.
    """
    axes = tuple(np.asarray(a, dtype=float) for a in axes)
    mesh = np.meshgrid(*axes, indexing="ij")
    p2 = sum(m.ravel() ** 2 for m in mesh)
    t = np.atleast_1d(np.asarray(t_values, dtype=float))
    vol = math.prod(float(a[1] - a[0]) for a in axes)
    values = np.zeros((len(t), len(p2), len(p2)), dtype=complex)
    idx = np.arange(len(p2))
    for j, tv in enumerate(t):
        values[j, idx, idx] = np.exp(-tv * p2 / 2) / vol
    return MomentumBlochMatrix(axes, t, values, np.zeros(len(t)), hbar, provenance="free")


def fd_weights(deriv: int, accuracy: int = 4) -> np.ndarray:
    """Central finite-difference weights on a unit-spaced stencil."""
    if deriv == 0:
        return np.array([1.0])
    m = 1
    while 2 * ((2 * m + 2 - deriv) // 2) < accuracy:
        m += 1
    offsets = np.arange(-m, m + 1, dtype=float)
    V = np.vander(offsets, increasing=True).T
    rhs = np.zeros(2 * m + 1)
    rhs[deriv] = math.factorial(deriv)
    return np.linalg.solve(V, rhs)


class GridTooCoarse(ValueError):
    pass


def _diag_derivative(A: np.ndarray, shape, spacings, alpha, accuracy):
    """d^alpha over the p' argument of A(p, p'), evaluated at p' = p.

    Returns (values, valid mask) over the P diagonal points.
    """
    P = A.shape[0]
    cube = A.reshape((P,) + tuple(shape))
    valid = np.ones(shape, dtype=bool)
    for axis, a in enumerate(alpha):
        if not a:
            continue
        w = fd_weights(a, accuracy) / spacings[axis] ** a
        m = len(w) // 2
        if shape[axis] <= 2 * m:
            raise GridTooCoarse(f"axis {axis} has {shape[axis]} points, stencil needs {2 * m + 1}")
        out = np.zeros_like(cube)
        src = np.moveaxis(cube, axis + 1, -1)
        dst = np.moveaxis(out, axis + 1, -1)
        for k, wk in enumerate(w):
            shift = k - m
            lo, hi = m, shape[axis] - m
            dst[..., lo:hi] += wk * src[..., lo + shift:hi + shift]
        cube = out
        vmask = np.zeros(shape[axis], dtype=bool)
        vmask[m:shape[axis] - m] = True
        valid &= np.moveaxis(np.broadcast_to(vmask, shape[:axis] + shape[axis + 1:] + (shape[axis],)), -1, axis)
    flat = cube.reshape(P, P)
    return np.diagonal(flat).copy(), valid.ravel()


def ode_residual_check(matrix: MomentumBlochMatrix, operator: DeltaDerivOperator, accuracy: int = 4,
                       return_details: bool = False):
    """Max relative residual of dA/dt + (p^2/2) A = -[V~ A](p' = p) on the diagonal.

    d/dt is a central difference over consecutive equally spaced t values and
    the p' derivatives use central stencils of the given accuracy.  The
    residual is normalised by max |dA/dt| + max |(p^2/2) A| over interior points.
    """
    if len(matrix.t) < 3:
        raise ValueError("need at least three t values for the time derivative")
    dts = np.diff(matrix.t)
    if not np.allclose(dts, dts[0], rtol=1e-9):
        raise ValueError("t values must be equally spaced")
    if operator.n != matrix.n:
        raise ValueError("operator and matrix dimensions differ")
    dt = dts[0]
    shape = matrix.shape
    hb = matrix.hbar
    p2 = np.sum(matrix.points ** 2, axis=1)
    worst = 0.0
    details = []
    for j in range(1, len(matrix.t) - 1):
        dA = (np.diagonal(matrix.values[j + 1]) - np.diagonal(matrix.values[j - 1])) / (2 * dt)
        diagA = np.diagonal(matrix.values[j])
        rhs = np.zeros_like(diagA)
        valid = np.ones(len(diagA), dtype=bool)
        for term in operator.terms:
            d, ok = _diag_derivative(matrix.values[j], shape, matrix.spacings, term.alpha, accuracy)
            rhs -= complex(term.coeff) * hb ** term.hbar_power * d
            valid &= ok
        if not valid.any():
            raise GridTooCoarse("no interior points for the stencil")
        lhs = dA + 0.5 * p2 * diagA
        scale = np.max(np.abs(dA[valid])) + np.max(np.abs(0.5 * p2 * diagA)[valid])
        r = float(np.max(np.abs(lhs - rhs)[valid]) / scale)
        details.append(r)
        worst = max(worst, r)
    return (worst, details) if return_details else worst


def relative_quantum_correction(potential: PotentialSpec, hbar: float, t: float, basis_size: int = 240,
                                domain=None) -> float:
    """|Z_exact / Z_classical - 1| with Z_exact from the spectral oracle."""
    from .oracle import solve, z_exact
    from .psint import thomas_fermi

    z_cl = thomas_fermi(potential, [t], hbar, domain)[0]
    z_ex = z_exact(solve(potential, basis_size, hbar=hbar), [t]).Z[0]
    return abs(z_ex / z_cl - 1.0)


def hbar_scaling_exponent(potential: PotentialSpec, t: float, hbar: float = 0.5, basis_size: int = 240) -> float:
    """log2 of the ratio of relative quantum corrections at hbar and hbar/2."""
    a = relative_quantum_correction(potential, hbar, t, basis_size)
    b = relative_quantum_correction(potential, hbar / 2, t, basis_size)
    return math.log2(a / b)


def moment_report(potential: PotentialSpec, residuals: dict | None = None,
                  scaling: float | None = None) -> dict:
    op = fourier_potential(potential)
    return {
        "potential": potential.to_json(),
        "first_correction_order": first_correction_order(potential),
        "fourier_potential": op.describe(),
        "hbar_scaling_exponent_fit": scaling,
        "residuals": residuals or {},
    }
