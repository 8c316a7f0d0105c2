"""Weighted Korobov space: decay function, kernel, index sets.

Smoothness convention: a function belongs to the space when
``sum_h |f^(h)|^2 r(h) < inf`` with

    r(h) = gamma_{supp(h)}^{-1} prod_{j in supp(h)} |h_j|^alpha,

so ``alpha`` is the decay exponent of r itself. Some references write
``2 alpha`` for the same space; every interface in this package uses the
convention above.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import lru_cache

import mpmath
import numpy as np
from scipy.special import zeta as _hurwitz

from .errors import CapacityError, ValidationError
from .weights import (
    MAX_SUBSET_DIM,
    ProductWeights,
    WeightModel,
    envelope,
    subset_sum,
)

DEFAULT_INDEX_CAP = 10**7
SERIES_TOL = 1e-12
MAX_SERIES_TERMS = 2_000_000


@lru_cache(maxsize=None)
def zeta(s: float) -> float:
    """Riemann zeta for real s > 1."""
    if s <= 1:
        raise ValidationError(f"zeta(s) needs s > 1, got {s}")
    return float(_hurwitz(s, 1.0))


def hurwitz_zeta(s, q):
    """Hurwitz zeta sum_{k>=0} (k + q)^-s, vectorised over q."""
    return _hurwitz(s, q)


@dataclass(frozen=True, eq=False)
class SpaceParams:
    d: int
    alpha: float
    weights: WeightModel

    def __post_init__(self):
        if int(self.d) != self.d or self.d < 1:
            raise ValidationError("d must be a positive integer")
        if not self.alpha > 1:
            raise ValidationError("alpha must be > 1")
        object.__setattr__(self, "d", int(self.d))
        object.__setattr__(self, "alpha", float(self.alpha))
        if self.weights.d < self.d:
            raise ValidationError(
                f"weights are defined for {self.weights.d} coordinates, need {self.d}"
            )
        if self.weights.d > self.d:
            object.__setattr__(self, "weights", self.weights.restrict(self.d))

    def with_weights(self, weights, alpha=None, d=None) -> "SpaceParams":
        return SpaceParams(self.d if d is None else d, self.alpha if alpha is None else alpha, weights)


def frac(x):
    """Fractional part in [0, 1), exact periodicity for negative inputs."""
    x = np.asarray(x, dtype=float)
    y = x - np.floor(x)
    return np.where(y >= 1.0, 0.0, y)


def _support(h):
    h = np.asarray(h)
    return frozenset(int(j) + 1 for j in np.flatnonzero(h))


def r_reciprocal(params: SpaceParams, h) -> float:
    """1/r(h) = gamma_{supp h} prod |h_j|^-alpha; zero weights give 0."""
    h = np.asarray(h, dtype=np.int64)
    if h.shape != (params.d,):
        raise ValidationError(f"frequency index must have length {params.d}")
    w = params.weights.weight_of(_support(h))
    if w == 0.0:
        return 0.0
    nz = np.abs(h[h != 0]).astype(float)
    return float(w * np.prod(nz ** (-params.alpha)))


def r_value(params: SpaceParams, h) -> float:
    """r(h); returns ``math.inf`` when gamma_{supp h} = 0."""
    rec = r_reciprocal(params, h)
    if rec == 0.0:
        return math.inf
    h = np.asarray(h, dtype=np.int64)
    w = params.weights.weight_of(_support(h))
    nz = np.abs(h[h != 0]).astype(float)
    return float(np.prod(nz**params.alpha) / w)


def _is_even_int(alpha) -> bool:
    return float(alpha).is_integer() and int(alpha) % 2 == 0


@lru_cache(maxsize=None)
def _bernoulli_poly_coeffs(k: int) -> np.ndarray:
    # B_k(x) = sum_i C(k, i) B_i x^(k-i), highest power first for np.polyval
    # mpmath's Bernoulli numbers are exact rationals rounded once; scipy's
    # numeric ones carry ~1e-12 relative error
    return np.array([math.comb(k, i) * float(mpmath.bernoulli(i)) for i in range(k + 1)])


def _series_terms(alpha: float) -> int:
    # 2 sum_{h>H} h^-alpha <= 2 H^(1-alpha)/(alpha-1) <= SERIES_TOL
    return int(math.ceil((SERIES_TOL * (alpha - 1) / 2.0) ** (1.0 / (1.0 - alpha))))


def omega(alpha: float, x):
    """sum_{h != 0} e^{2 pi i h x} / |h|^alpha = 2 sum_{h>=1} cos(2 pi h x)/h^alpha.

    Even integer alpha uses the Bernoulli polynomial closed form. Other
    alpha use the cosine series truncated so that the tail is below 1e-12,
    falling back to the polylogarithm when that would need more than
    ``MAX_SERIES_TERMS`` terms.
    """
    if not alpha > 1:
        raise ValidationError("omega needs alpha > 1")
    x = frac(x)
    if _is_even_int(alpha):
        k = int(alpha)
        scale = (-1) ** (k // 2 + 1) * (2 * math.pi) ** k / math.factorial(k)
        return scale * np.polyval(_bernoulli_poly_coeffs(k), x)
    return omega_series(alpha, x)


def omega_series(alpha: float, x):
    """omega by its cosine series with tail <= 1e-12 (polylogarithm for slow decay)."""
    x = frac(x)
    H = _series_terms(alpha)
    flat = np.atleast_1d(x).ravel()
    out = np.empty(flat.size)
    if H <= MAX_SERIES_TERMS:
        h = np.arange(1, H + 1, dtype=float)
        coef = h ** (-alpha)
        for i, xi in enumerate(flat):
            out[i] = 2.0 * np.dot(np.cos(2 * math.pi * h * xi), coef)
    else:
        for i, xi in enumerate(flat):
            if xi == 0.0:
                out[i] = 2.0 * zeta(alpha)
            else:
                z = mpmath.exp(2j * mpmath.pi * xi)
                out[i] = float(2 * mpmath.re(mpmath.polylog(alpha, z)))
    return out.reshape(np.shape(x)) if np.ndim(x) else float(out[0])


def kernel_value(params: SpaceParams, x, y):
    """Reproducing kernel K_d(x, y); x and y broadcast over leading axes."""
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    diff = frac(x - y)
    if diff.shape[-1] != params.d:
        raise ValidationError(f"points must have {params.d} coordinates")
    w = params.weights
    if not isinstance(w, ProductWeights) and params.d > MAX_SUBSET_DIM:
        raise CapacityError(f"kernel for {w.kind} weights needs d <= {MAX_SUBSET_DIM}")
    om = omega(params.alpha, np.moveaxis(diff, -1, 0))
    return subset_sum(w, om)


@dataclass(frozen=True, eq=False)
class IndexSet:
    """A_d(M) = {h : r(h) <= M}, rows sorted lexicographically."""

    M: float
    entries: np.ndarray

    def __len__(self):
        return int(self.entries.shape[0])

    def __iter__(self):
        return iter(map(tuple, self.entries))

    def __contains__(self, h):
        h = np.asarray(h, dtype=np.int64)
        if len(self) == 0:
            return False
        return bool(np.any(np.all(self.entries == h, axis=1)))

    def to_text(self) -> str:
        return "".join(" ".join(str(int(v)) for v in row) + "\n" for row in self.entries)


def _sign_expand(u_idx, mags, d):
    """All sign patterns of the magnitudes ``mags`` on coordinates ``u_idx``."""
    k = len(u_idx)
    if k == 0:
        return np.zeros((1, d), dtype=np.int64)
    signs = np.array(np.meshgrid(*([[-1, 1]] * k), indexing="ij")).reshape(k, -1).T
    rows = np.zeros((signs.shape[0], d), dtype=np.int64)
    rows[:, u_idx] = signs * np.asarray(mags, dtype=np.int64)
    return rows


def enumerate_index_set(params: SpaceParams, M: float, cap: int = DEFAULT_INDEX_CAP) -> IndexSet:
    """Exact A_d(M) by depth-first search over supports and magnitudes."""
    if not math.isfinite(M):
        raise ValidationError("M must be finite")
    d, alpha, w = params.d, params.alpha, params.weights
    blocks = []
    count = 0

    def emit(u_idx, mags):
        nonlocal count
        count += 2 ** len(u_idx)
        if count > cap:
            raise CapacityError(f"index set exceeds cap {cap} entries", count=count)
        blocks.append(_sign_expand(u_idx, mags, d))

    if M >= 1.0:
        emit([], [])

    env = envelope(w)
    if env is None:
        # explicit weights: walk the stored subsets directly
        for u, gu in w.to_explicit().table.items():
            if not u or gu * M < 1.0:
                continue
            u_idx = sorted(j - 1 for j in u)
            _magnitudes(u_idx, gu * M, alpha, emit)
    else:
        C, e = env
        e = np.asarray(e, dtype=float)
        # suffix[j] = prod_{k >= j} max(1, e_k): best case growth of the envelope
        suffix = np.ones(d + 1)
        for j in range(d - 1, -1, -1):
            suffix[j] = suffix[j + 1] * max(1.0, e[j])
        weight_cache = {}

        def gamma_of(u_idx):
            key = tuple(u_idx)
            if key not in weight_cache:
                weight_cache[key] = w.weight_of([j + 1 for j in u_idx])
            return weight_cache[key]

        def dfs(start, u_idx, mags, env_prod, cost):
            for j in range(start, d):
                budget = C * env_prod * e[j] * suffix[j + 1] * M
                if budget < cost:
                    continue
                hmax = int(math.floor((budget / cost) ** (1.0 / alpha) * (1 + 1e-12)))
                for m in range(1, hmax + 1):
                    c2 = cost * m**alpha
                    if c2 > budget:
                        break
                    new_u = u_idx + [j]
                    new_m = mags + [m]
                    if c2 <= gamma_of(new_u) * M:
                        emit(new_u, new_m)
                    dfs(j + 1, new_u, new_m, env_prod * e[j], c2)

        dfs(0, [], [], 1.0, 1.0)

    if blocks:
        entries = np.concatenate(blocks, axis=0)
        order = np.lexsort(entries.T[::-1])
        entries = entries[order]
    else:
        entries = np.zeros((0, d), dtype=np.int64)
    return IndexSet(float(M), entries)


def _magnitudes(u_idx, budget, alpha, emit):
    """Emit all magnitude tuples (>= 1) on ``u_idx`` with prod m^alpha <= budget."""

    def rec(pos, mags, cost):
        if pos == len(u_idx):
            emit(u_idx, mags)
            return
        m = 1
        while cost * m**alpha <= budget:
            rec(pos + 1, mags + [m], cost * m**alpha)
            m += 1

    rec(0, [], 1.0)


def c1_constant(params: SpaceParams, q: float) -> float:
    """C_1 = sum_u gamma_u^q [2 zeta(alpha q)]^|u|."""
    if q <= 1.0 / params.alpha:
        raise ValidationError("q must exceed 1/alpha")
    return params.weights.subset_power_sum(q, 2.0 * zeta(params.alpha * q))


def cardinality_bounds(params: SpaceParams, M: float, q: float):
    """(lower, upper) bounds on |A_d(M)|; the lower bound is 0 when M < 1."""
    upper = M**q * c1_constant(params, q)
    lower = (params.weights.gamma1 * M) ** (1.0 / params.alpha) if M >= 1 else 0.0
    return lower, upper


def c2_constant(params: SpaceParams, tau: float) -> float:
    """Constant of the truncation tail bound, parameter tau in (1/alpha, 1)."""
    a = params.alpha
    if not (1.0 / a < tau < 1.0):
        raise ValidationError("tau must lie in (1/alpha, 1)")
    g1 = params.weights.gamma1
    if g1 <= 0:
        raise ValidationError("the truncation bound needs gamma_{1} > 0")
    s = params.weights.subset_power_sum(tau, 2.0 * zeta(a * tau))
    return g1 ** ((tau - 1) / (a * tau)) * (tau / (1 - tau)) * s ** (1.0 / tau)


def truncation_tail_bound(params: SpaceParams, M: float, tau: float) -> float:
    """Upper bound on sum_{h not in A_d(M)} 1/r(h), valid for M >= 1."""
    if M < 1:
        raise ValidationError("the truncation bound needs M >= 1")
    return c2_constant(params, tau) * M ** (-(1 - tau) / (params.alpha * tau))


def tail_mass(params: SpaceParams) -> float:
    """sum_h 1/r(h) over all of Z^d."""
    return params.weights.subset_power_sum(1.0, 2.0 * zeta(params.alpha))
