"""Exact reference spectrum in a tensor harmonic-oscillator basis.

Position operators are built from ladder operators, x = sqrt(hbar / (2 Omega)) (a + a^dagger),
so polynomial potentials have exact matrix elements.  Powers are formed in
an enlarged basis and then truncated, which makes every element exact (up
to rounding) rather than a product of truncated matrices.
"""
from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from functools import reduce

import numpy as np
from scipy.optimize import minimize_scalar
from scipy.special import gamma, gammaincc

from .potential import PotentialSpec


class TailBoundExceeded(RuntimeError):
    """Too few converged levels to reach the requested accuracy at this t."""


@dataclass(frozen=True)
class BasisSpec:
    size: int
    omega: float
    hbar: float = 1.0

    def __post_init__(self):
        if self.size < 2:
            raise ValueError("basis size must be at least 2")
        if self.omega <= 0 or self.hbar <= 0:
            raise ValueError("basis frequency and hbar must be positive")


def ladder(size: int) -> np.ndarray:
    """Annihilation operator a in the number basis."""
    return np.diag(np.sqrt(np.arange(1, size, dtype=float)), 1)


def position_power(power: int, size: int, omega: float, hbar: float) -> np.ndarray:
    big = size + power
    a = ladder(big)
    x = math.sqrt(hbar / (2 * omega)) * (a + a.T)
    return np.linalg.matrix_power(x, power)[:size, :size]


def kinetic_1d(size: int, omega: float, hbar: float) -> np.ndarray:
    """p^2 / 2 with p = i sqrt(hbar Omega / 2) (a^dagger - a)."""
    big = size + 2
    a = ladder(big)
    d = a.T - a
    return (-(hbar * omega) / 4 * (d @ d))[:size, :size]


def _kron_all(mats):
    return reduce(np.kron, mats)


def build_hamiltonian(potential: PotentialSpec, basis: BasisSpec) -> np.ndarray:
    """Dense real symmetric matrix of -hbar^2/2 lap + V in the tensor basis."""
    n = potential.n
    M, om, hb = basis.size, basis.omega, basis.hbar
    eye = np.eye(M)
    T = kinetic_1d(M, om, hb)
    H = np.zeros((M ** n, M ** n))
    for i in range(n):
        H += _kron_all([T if j == i else eye for j in range(n)])
    cache: dict[int, np.ndarray] = {}
    for xexp, c in potential.x_monomials():
        mats = []
        for e in xexp:
            if e not in cache:
                cache[e] = position_power(e, M, om, hb) if e else eye
            mats.append(cache[e])
        H += float(c) * _kron_all(mats)
    return 0.5 * (H + H.T)


def hamiltonian_trace(potential: PotentialSpec, basis: BasisSpec) -> float:
    n = potential.n
    M, om, hb = basis.size, basis.omega, basis.hbar
    tr_T = float(np.trace(kinetic_1d(M, om, hb)))
    total = n * tr_T * M ** (n - 1)
    for xexp, c in potential.x_monomials():
        total += float(c) * math.prod(
            float(np.trace(position_power(e, M, om, hb))) if e else M for e in xexp
        )
    return total


def optimal_omega(potential: PotentialSpec, size: int, hbar: float = 1.0) -> float:
    """Basis frequency minimizing the trace of the truncated Hamiltonian."""
    if potential.is_zero():
        return 1.0

    def f(logw):
        return hamiltonian_trace(potential, BasisSpec(size, math.exp(logw), hbar))

    grid = np.linspace(-8, 8, 33)
    vals = [f(g) for g in grid]
    k = int(np.argmin(vals))
    lo, hi = grid[max(k - 1, 0)], grid[min(k + 1, len(grid) - 1)]
    res = minimize_scalar(f, bounds=(lo, hi), method="bounded", options={"xatol": 1e-6})
    return float(math.exp(res.x))


@dataclass
class Spectrum:
    eigenvalues: np.ndarray
    eigenvectors: np.ndarray
    convergence: np.ndarray
    basis: BasisSpec
    n: int = 1
    meta: dict = field(default_factory=dict)

    def converged_count(self, tol: float = 1e-8) -> int:
        """Number of leading levels whose convergence estimate is below ``tol * max(1, |E|)``."""
        ok = self.convergence <= tol * np.maximum(1.0, np.abs(self.eigenvalues))
        bad = np.flatnonzero(~ok)
        return int(bad[0]) if len(bad) else len(ok)

    def to_json(self) -> str:
        return json.dumps({
            "basis": {"size": self.basis.size, "omega": self.basis.omega, "hbar": self.basis.hbar, "dim": self.n},
            "eigenvalues": [float(e) for e in self.eigenvalues],
            "convergence": [float(c) if np.isfinite(c) else None for c in self.convergence],
        }, indent=1)


def diagonalize(matrix: np.ndarray, reference: np.ndarray | None = None, basis: BasisSpec | None = None,
                n: int = 1) -> Spectrum:
    """Full symmetric eigendecomposition.

    ``reference`` holds eigenvalues of a smaller basis; the convergence
    estimate of level k is |E_k - E_k(reference)| (inf where missing).
    """
    if not np.allclose(matrix, matrix.T, atol=1e-12 * max(1.0, np.abs(matrix).max())):
        raise ValueError("matrix is not symmetric")
    try:
        vals, vecs = np.linalg.eigh(matrix)
    except np.linalg.LinAlgError as exc:
        raise RuntimeError(f"eigensolver failed: {exc}") from exc
    conv = np.full(len(vals), np.inf)
    if reference is not None:
        m = min(len(reference), len(vals))
        conv[:m] = np.abs(vals[:m] - np.sort(reference)[:m])
    return Spectrum(vals, vecs, conv, basis, n)


def solve(potential: PotentialSpec, size: int, hbar: float = 1.0, omega: float | None = None,
          delta: int | None = None) -> Spectrum:
    """Spectrum in a basis of ``size`` per axis, with convergence from ``size - delta``."""
    if omega is None:
        omega = optimal_omega(potential, size, hbar)
    basis = BasisSpec(size, omega, hbar)
    delta = delta if delta is not None else max(2, size // 8)
    coarse = BasisSpec(max(2, size - delta), omega, hbar)
    ref = np.linalg.eigvalsh(build_hamiltonian(potential, coarse))
    spec = diagonalize(build_hamiltonian(potential, basis), ref, basis, potential.n)
    spec.meta["coarse_size"] = coarse.size
    return spec


def weyl_fit(eigenvalues: np.ndarray) -> tuple[float, float]:
    """Fit E_k ~ a (k+1)^b on the upper half of the given levels."""
    E = np.asarray(eigenvalues)
    k = np.arange(1, len(E) + 1, dtype=float)
    lo = len(E) // 2
    sel = slice(lo, None) if len(E) - lo >= 2 else slice(None)
    pos = E[sel] > 0
    b, loga = np.polyfit(np.log(k[sel][pos]), np.log(E[sel][pos]), 1)
    return float(math.exp(loga)), float(b)


def tail_estimate(eigenvalues: np.ndarray, t: float) -> float:
    """Estimated sum of exp(-t E) over the levels beyond ``eigenvalues``.

    Uses the Weyl-type growth fit: sum_{k > N} exp(-t a k^b) <= int_N^inf exp(-t a x^b) dx.
    """
    N = len(eigenvalues)
    if N < 4:
        return math.inf
    a, b = weyl_fit(eigenvalues)
    if b <= 0:
        return math.inf
    s = 1.0 / b
    z = t * a * N ** b
    return float(s * (t * a) ** (-s) * gamma(s) * gammaincc(s, z))


@dataclass
class ZExact:
    t: np.ndarray
    Z: np.ndarray
    tail: np.ndarray
    levels: int


def z_exact(spectrum: Spectrum, grid, conv_tol: float = 1e-8, tail_tol: float | None = 1e-8) -> ZExact:
    """Sum of exp(-E t) over converged levels, with the estimated truncation tail.

    Raises :class:`TailBoundExceeded` when tail / Z exceeds ``tail_tol``.
    """
    t = np.atleast_1d(np.asarray(grid, dtype=float))
    if np.any(t <= 0):
        raise ValueError("t must be positive")
    N = spectrum.converged_count(conv_tol)
    if N == 0:
        raise TailBoundExceeded("no converged levels")
    E = spectrum.eigenvalues[:N]
    Z = np.exp(-np.outer(t, E)).sum(axis=1)
    tail = np.array([tail_estimate(E, tv) for tv in t])
    if tail_tol is not None:
        bad = tail > tail_tol * Z
        if np.any(bad):
            tv = t[np.argmax(bad)]
            raise TailBoundExceeded(
                f"truncation tail {tail[np.argmax(bad)]:.3g} exceeds {tail_tol:g} * Z at t={tv:g} "
                f"with {N} converged levels; increase the basis size"
            )
    return ZExact(t, Z, tail, N)


def harmonic_z(hbar: float, omega: float, t) -> np.ndarray:
    """Closed form 1 / (2 sinh(hbar omega t / 2)) for one oscillator."""
    return 1.0 / (2.0 * np.sinh(hbar * omega * np.asarray(t, dtype=float) / 2))


# -- basis functions ----------------------------------------------------------

def hermite_functions(kmax: int, u: np.ndarray) -> np.ndarray:
    """Normalized Hermite functions psi_0..psi_{kmax-1} at ``u`` (shape kmax x len(u))."""
    u = np.asarray(u, dtype=float)
    out = np.zeros((kmax, len(u)))
    out[0] = math.pi ** -0.25 * np.exp(-u ** 2 / 2)
    if kmax > 1:
        out[1] = math.sqrt(2.0) * u * out[0]
    for k in range(1, kmax - 1):
        out[k + 1] = math.sqrt(2.0 / (k + 1)) * u * out[k] - math.sqrt(k / (k + 1)) * out[k - 1]
    return out


def momentum_basis_1d(basis: BasisSpec, p: np.ndarray) -> np.ndarray:
    """<p|k> for the 1D oscillator basis: (-i)^k psi_k(p / s) / sqrt(s), s = sqrt(hbar Omega)."""
    s = math.sqrt(basis.hbar * basis.omega)
    phase = (-1j) ** np.arange(basis.size)
    return phase[:, None] * hermite_functions(basis.size, np.asarray(p) / s) / math.sqrt(s)


def position_basis_1d(basis: BasisSpec, x: np.ndarray) -> np.ndarray:
    ell = math.sqrt(basis.hbar / basis.omega)
    return hermite_functions(basis.size, np.asarray(x) / ell) / math.sqrt(ell)
