"""Lattice approximation of periodic functions.

Samples on the rank-1 lattice t_k = frac(k z / n) give, through one
length-n DFT, approximations of every Fourier coefficient:

    f_a(h) = (1/n) sum_k f(t_k) exp(-2 pi i h.t_k) = F[h.z mod n],

since h.t_k = k (h.z) / n mod 1. The approximant keeps the coefficients on
the index set A_d(M). A kernel interpolant is also provided; its Gram
matrix on the lattice is circulant and is solved with the same DFT.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import CapacityError, NumericalError, ValidationError
from .korobov import IndexSet, SpaceParams, enumerate_index_set, kernel_value

SINGULAR_RTOL = 1e-12
IMAG_TOL = 1e-10


@dataclass(frozen=True, eq=False)
class LatticeSampler:
    n: int
    z: tuple

    def __post_init__(self):
        object.__setattr__(self, "z", tuple(int(v) for v in self.z))
        if self.n < 1:
            raise ValidationError("n must be positive")

    @property
    def d(self) -> int:
        return len(self.z)

    @property
    def numerators(self) -> np.ndarray:
        """Integer array (n, d) with t_k = numerators[k] / n."""
        k = np.arange(self.n, dtype=np.int64)[:, None]
        return (k * np.asarray(self.z, dtype=np.int64)[None, :]) % self.n

    @property
    def points(self) -> np.ndarray:
        return self.numerators / self.n

    def sample(self, f) -> np.ndarray:
        """Evaluate ``f`` (vectorised over rows) at every lattice point."""
        return np.asarray(f(self.points))


def lattice_points(n: int, z) -> LatticeSampler:
    return LatticeSampler(int(n), tuple(z))


@dataclass(frozen=True, eq=False)
class Approximant:
    """Coefficients f_a(h) for h in an index set, aligned with ``index_set.entries``."""

    index_set: IndexSet
    coefficients: np.ndarray

    @property
    def entries(self) -> np.ndarray:
        return self.index_set.entries

    def as_dict(self) -> dict:
        return {tuple(int(v) for v in h): complex(c) for h, c in zip(self.entries, self.coefficients)}

    def to_csv_rows(self):
        for h, c in zip(self.entries, self.coefficients):
            yield [int(v) for v in h] + [repr(float(c.real)), repr(float(c.imag))]


def approximate(samples, params: SpaceParams, z, M: float, index_set: IndexSet = None) -> Approximant:
    """Lattice approximation from samples at t_k, k = 0..n-1."""
    samples = np.asarray(samples)
    n = samples.shape[0]
    if len(z) != params.d:
        raise ValidationError("generating vector and parameters disagree on d")
    F = np.fft.fft(samples) / n
    if index_set is None:
        index_set = enumerate_index_set(params, M)
    H = index_set.entries
    if len(H) == 0:
        return Approximant(index_set, np.zeros(0, dtype=complex))
    c = (H @ np.asarray(z, dtype=np.int64)) % n
    return Approximant(index_set, F[c])


def evaluate(approx: Approximant, x, real: bool = None):
    """sum_h f_a(h) exp(2 pi i h.x) at one point or at each row of x.

    With ``real`` (default: when the index set is closed under negation and
    the coefficients are conjugate-symmetric) the real part is returned
    after checking that the imaginary residue is below 1e-10.
    """
    x = np.asarray(x, dtype=float)
    single = x.ndim == 1
    X = np.atleast_2d(x)
    H = approx.entries
    if len(H) == 0:
        out = np.zeros(X.shape[0])
        return float(out[0]) if single else out
    phase = np.exp(2j * np.pi * (X @ H.T.astype(float)))
    vals = phase @ approx.coefficients
    if real is None:
        real = _conjugate_symmetric(approx)
    if real:
        scale = max(1.0, float(np.max(np.abs(vals))))
        if np.max(np.abs(vals.imag)) > IMAG_TOL * scale:
            raise NumericalError("approximant values have a non-negligible imaginary part")
        vals = vals.real
    return vals[0] if single else vals


def _conjugate_symmetric(approx: Approximant, tol: float = 1e-12) -> bool:
    d = approx.as_dict()
    scale = max(1.0, max((abs(v) for v in d.values()), default=0.0))
    for h, c in d.items():
        neg = tuple(-v for v in h)
        if neg not in d or abs(d[neg] - c.conjugate()) > tol * scale:
            return False
    return True


@dataclass(frozen=True, eq=False)
class KernelInterpolant:
    a: np.ndarray
    sampler: LatticeSampler
    params: SpaceParams

    def __call__(self, x):
        x = np.asarray(x, dtype=float)
        single = x.ndim == 1
        X = np.atleast_2d(x)
        pts = self.sampler.points
        out = np.array([np.dot(kernel_value(self.params, xi[None, :], pts), self.a) for xi in X])
        return out[0] if single else out


def kernel_first_column(params: SpaceParams, sampler: LatticeSampler) -> np.ndarray:
    """col0[k] = K(t_k, 0); the Gram matrix is G[k, k'] = col0[(k - k') mod n]."""
    pts = sampler.points
    return kernel_value(params, pts, np.zeros_like(pts))


def kernel_interpolant(params: SpaceParams, sampler: LatticeSampler, samples) -> KernelInterpolant:
    """Solve the circulant system G a = samples by DFT and return the interpolant."""
    samples = np.asarray(samples, dtype=float)
    if samples.shape != (sampler.n,):
        raise ValidationError("need one sample per lattice point")
    col0 = kernel_first_column(params, sampler)
    eig = np.fft.fft(col0)
    top = float(np.max(np.abs(eig)))
    if np.min(np.abs(eig)) <= SINGULAR_RTOL * top:
        raise NumericalError("kernel Gram matrix is numerically singular on this lattice")
    a = np.fft.ifft(np.fft.fft(samples) / eig).real
    return KernelInterpolant(a, sampler, params)


def gram_matrix(params: SpaceParams, sampler: LatticeSampler) -> np.ndarray:
    """Dense Gram matrix K(t_k, t_k') by direct kernel evaluation (small n)."""
    if sampler.n > 4096:
        raise CapacityError("dense Gram assembly limited to n <= 4096")
    pts = sampler.points
    return np.array([kernel_value(params, pts[k][None, :], pts) for k in range(sampler.n)])


def measure_l2_error(approx: Approximant, coefficients: dict = None, f=None, grid: int = None) -> float:
    """L2 error between a function and its approximant.

    With ``coefficients`` (a map from frequency tuples to complex values of
    a trigonometric polynomial) the error is exact by Parseval. Otherwise
    ``f`` is integrated on a tensor grid of ``grid`` points per axis.
    """
    if coefficients is not None:
        approx_c = approx.as_dict()
        keys = set(approx_c) | set(coefficients)
        err = sum(abs(coefficients.get(h, 0) - approx_c.get(h, 0)) ** 2 for h in keys)
        return float(np.sqrt(err))
    if f is None or grid is None:
        raise ValidationError("need exact coefficients or a function with a grid size")
    d = approx.entries.shape[1] if len(approx.entries) else None
    if d is None:
        raise ValidationError("cannot infer dimension from an empty approximant")
    if grid**d > 10**7:
        raise CapacityError(f"quadrature grid has {grid**d} points", count=grid**d)
    axes = [np.arange(grid) / grid] * d
    X = np.stack(np.meshgrid(*axes, indexing="ij"), axis=-1).reshape(-1, d)
    diff = np.asarray(f(X)) - evaluate(approx, X, real=False)
    return float(np.sqrt(np.mean(np.abs(diff) ** 2)))


def korobov_norm(params: SpaceParams, coefficients: dict) -> float:
    """||f|| = (sum_h |f(h)|^2 r(h))^(1/2) for a trigonometric polynomial."""
    from .korobov import r_value

    return float(np.sqrt(sum(abs(c) ** 2 * r_value(params, h) for h, c in coefficients.items())))
