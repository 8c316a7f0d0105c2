"""Search criteria for rank-1 lattice approximation.

The quantities evaluated here are

    S(z)   = sum_h 1/r(h) sum_{l != 0, l.z = 0 mod n} 1/r(h + l)
    T_s(z) = sum_{w in {s+1..d}} [2 zeta(2 alpha)]^|w| theta_s(z; {gamma_{u+w}})
    E(z)   = the same double sum with h restricted to A_d(M)

with S = T_1 + ... + T_d.

Evaluation works in residue space. For one coordinate with generator z_j,
the frequencies h != 0 alias onto residues h z_j mod n with total mass

    g(c) = sum_{h != 0, h = c mod n} |h|^-alpha,

a positive vector computed from Hurwitz zeta values. The contribution of
a prefix z_1..z_{s-1} is a positive distribution over Z_n obtained by
direct circular convolutions, and theta splits into the two groups of
pairs with l_s != 0 (exactly one of h_s, m_s zero, or both nonzero and
different):

    theta(z_s) = 2 sum_c g(c) (P*Q)(c z_s) + sum_c W(c) (Q*Q)(c z_s),

where W is the off-diagonal self-convolution of g. Every term is
nonnegative, so tiny criterion values keep full relative accuracy.

The k-space form (1/n) sum_k D_k^2 is available as :func:`full_pair`.
"""

from __future__ import annotations

import itertools
import logging
import math
from functools import cached_property

import mpmath
import numpy as np

from .errors import CapacityError, ValidationError
from .korobov import (
    SpaceParams,
    _is_even_int,
    enumerate_index_set,
    hurwitz_zeta,
    omega,
    zeta,
)
from .weights import (
    MAX_SUBSET_DIM,
    ExplicitWeights,
    PODWeights,
    ProductWeights,
    SPODWeights,
    WeightModel,
    subset_sum,
)

log = logging.getLogger(__name__)

# candidates whose criterion values agree to this relative tolerance are ties
TIE_RTOL = 1e-13
_GATHER_BLOCK = 1 << 22
BRUTE_FORCE_CAP = 5 * 10**7


def cconv(a, b):
    """Circular convolution over Z_n by direct summation (no FFT)."""
    n = a.shape[-1]
    full = np.convolve(a, b)
    out = full[:n].copy()
    out[: n - 1] += full[n:]
    return out


def _symmetrize(v):
    n = v.shape[-1]
    neg = (-np.arange(n)) % n
    return 0.5 * (v + v[..., neg])


def scatter(values, z, n):
    """Distribution of values[c] moved to residue c*z mod n."""
    idx = (np.arange(n, dtype=np.int64) * int(z)) % n
    return np.bincount(idx, weights=values, minlength=n)


def aliased_zeta(alpha: float, n: int):
    """g(c) = sum_{h != 0, h = c (mod n)} |h|^-alpha, split for accuracy.

    Returns ``(g, near, far)`` where for c != 0 ``near`` holds the two
    terms h = c and h = c - n and ``far`` the rest (both as arrays).
    """
    c = np.arange(n, dtype=float)
    g = np.empty(n)
    near_a = np.zeros(n)
    near_b = np.zeros(n)
    far = np.zeros(n)
    g[0] = 2.0 * zeta(alpha) * n ** (-alpha)
    far[0] = g[0]
    if n > 1:
        cc = c[1:]
        u = cc / n
        near_a[1:] = cc ** (-alpha)
        near_b[1:] = (n - cc) ** (-alpha)
        far[1:] = n ** (-alpha) * (hurwitz_zeta(alpha, 1.0 + u) + hurwitz_zeta(alpha, 2.0 - u))
        g[1:] = near_a[1:] + near_b[1:] + far[1:]
    g = _symmetrize(g)
    return g, near_a, near_b, far


def offdiagonal_pairs(alpha: float, n: int, g=None):
    """W(c) = sum over h, h' != 0 with h + h' != 0 and h + h' = c (mod n) of |h h'|^-alpha."""
    if g is None:
        g = aliased_zeta(alpha, n)[0]
    W = cconv(g, g)
    # W(0) without cancellation: sum over residues x of 2 * (sum over pairs a<b in class x)
    _, a, b, far = aliased_zeta(alpha, n)
    c = np.arange(1, n, dtype=float)
    u = c / n
    far2 = n ** (-2 * alpha) * (hurwitz_zeta(2 * alpha, 1.0 + u) + hurwitz_zeta(2 * alpha, 2.0 - u))
    per = 2 * a[1:] * b[1:] + 2 * (a[1:] + b[1:]) * far[1:] + (far[1:] ** 2 - far2)
    z0 = (2 * zeta(alpha) * n ** (-alpha)) ** 2 - 2 * zeta(2 * alpha) * n ** (-2 * alpha)
    W[0] = z0 + float(np.sum(per))
    return _symmetrize(W)


class CriterionContext:
    """Per-n precomputation shared by every criterion evaluation."""

    def __init__(self, n: int, params: SpaceParams):
        if int(n) != n or n < 2:
            raise ValidationError("n must be an integer >= 2")
        self.n = int(n)
        self.params = params
        self.alpha = params.alpha

    @cached_property
    def zeta2a(self) -> float:
        return 2.0 * zeta(2 * self.alpha)

    @cached_property
    def omega_table(self) -> np.ndarray:
        n = self.n
        if _is_even_int(self.alpha):
            tab = np.asarray(omega(self.alpha, np.arange(n) / n), dtype=float)
        else:
            # omega(k/n) = sum_c g(c) e^{2 pi i k c / n}
            tab = n * np.fft.ifft(self.g).real
            tab[0] = 2.0 * zeta(self.alpha)
        half = np.arange(1, (n + 1) // 2)
        tab[n - half] = tab[half]
        return tab

    @cached_property
    def g(self) -> np.ndarray:
        return aliased_zeta(self.alpha, self.n)[0]

    @cached_property
    def W(self) -> np.ndarray:
        return offdiagonal_pairs(self.alpha, self.n, self.g)

    @cached_property
    def _g2(self) -> np.ndarray:
        return 2.0 * self.g

    def scatter_g(self, z: int) -> np.ndarray:
        return scatter(self.g, z, self.n)

    def scores(self, R1, R2, cands) -> np.ndarray:
        """T(w) = 2 sum_c g(c) R1(c w) + sum_c W(c) R2(c w) for each candidate w."""
        n = self.n
        cands = np.asarray(cands, dtype=np.int64)
        out = np.empty(cands.size)
        c = np.arange(n, dtype=np.int64)
        block = max(1, _GATHER_BLOCK // n)
        g2, W = self._g2, self.W
        for lo in range(0, cands.size, block):
            w = cands[lo : lo + block]
            idx = (w[:, None] * c[None, :]) % n
            out[lo : lo + block] = np.sum(R1[idx] * g2 + R2[idx] * W, axis=1)
        return out


def _check_z(z, n):
    z = [int(v) for v in z]
    for v in z:
        if math.gcd(v, n) != 1:
            raise ValidationError(f"generating vector component {v} is not a unit mod {n}")
    return z


# ---------------------------------------------------------------------------
# prefix states: residue distributions of the fixed coordinates
# ---------------------------------------------------------------------------


class _ProductState:
    def __init__(self, ctx, weights: ProductWeights, d):
        self.ctx, self.d = ctx, d
        self.gamma = np.asarray(weights.gamma[:d], dtype=float)
        self.s = 0
        self.p = np.zeros(ctx.n)
        self.p[0] = 1.0

    def pair(self):
        s = self.s + 1
        gs = self.gamma[s - 1]
        F = float(np.prod(1.0 + self.ctx.zeta2a * self.gamma[s:] ** 2))
        pp = _symmetrize(cconv(self.p, self.p))
        return gs * F * pp, gs * gs * F * pp

    def push(self, z):
        gs = self.gamma[self.s]
        self.p = _symmetrize(self.p + gs * cconv(self.ctx.scatter_g(z), self.p))
        self.s += 1

    def distribution(self):
        return self.p.copy()


class _OrderState:
    """POD and SPOD weights: channels indexed by the accumulated order."""

    def __init__(self, ctx, weights, d):
        self.ctx, self.d = ctx, d
        if isinstance(weights, PODWeights):
            self.sigma = 1
            self.coef = np.asarray(weights.gamma[:d], dtype=float).reshape(-1, 1)
            self.order = np.asarray(weights.order[: d + 1], dtype=float)
        else:
            self.sigma = weights.sigma
            self.coef = np.asarray(weights.gamma[:d], dtype=float)
            self.order = np.asarray(weights.order[: self.sigma * d + 1], dtype=float)
        self.s = 0
        self.p = np.zeros((1, ctx.n))
        self.p[0, 0] = 1.0
        self._suffix = self._suffix_matrices()

    def _suffix_matrices(self):
        """C[s][K, K'] = sum_{w in {s+1..d}} zeta2a^|w| c_w(K) c_w(K') for s = 0..d."""
        sig, d = self.sigma, self.d
        mats = [None] * (d + 1)
        cur = np.ones((1, 1))
        mats[d] = cur
        for j in range(d - 1, -1, -1):
            a = np.concatenate(([0.0], self.coef[j]))
            k = cur.shape[0]
            new = np.zeros((k + sig, k + sig))
            new[:k, :k] += cur
            outer = np.outer(a, a)
            for x in range(1, sig + 1):
                for y in range(1, sig + 1):
                    new[x : x + k, y : y + k] += self.ctx.zeta2a * outer[x, y] * cur
            cur = new
            mats[j] = cur
        return mats

    def _hankel(self, nrows, ncols, shift):
        i = np.arange(nrows)[:, None] + np.arange(ncols)[None, :] + shift
        return self.order[i]

    def pair(self):
        s = self.s + 1
        sig = self.sigma
        C = self._suffix[s]
        nK = C.shape[0]
        nL = self.p.shape[0]
        H1 = self._hankel(nK, nL, 0)
        H2 = np.zeros((nK, nL))
        for nu in range(1, sig + 1):
            H2 += self.coef[s - 1, nu - 1] * self._hankel(nK, nL, nu)
        M1 = H1.T @ C @ H2
        M2 = H2.T @ C @ H2
        V1 = M1 @ self.p
        V2 = M2 @ self.p
        R1 = np.zeros(self.ctx.n)
        R2 = np.zeros(self.ctx.n)
        for L in range(nL):
            R1 += cconv(self.p[L], V1[L])
            R2 += cconv(self.p[L], V2[L])
        return _symmetrize(R1), _symmetrize(R2)

    def push(self, z):
        sig = self.sigma
        G = self.ctx.scatter_g(z)
        nL = self.p.shape[0]
        new = np.zeros((nL + sig, self.ctx.n))
        new[:nL] = self.p
        for L in range(1, nL + sig):
            mix = np.zeros(self.ctx.n)
            for nu in range(1, sig + 1):
                if 0 <= L - nu < nL:
                    mix += self.coef[self.s, nu - 1] * self.p[L - nu]
            if np.any(mix):
                new[L] += cconv(G, mix)
        self.p = _symmetrize(new)
        self.s += 1

    def distribution(self):
        nL = self.p.shape[0]
        return self.order[:nL] @ self.p


class _ExplicitState:
    """General weights: one channel per subset of the fixed coordinates."""

    def __init__(self, ctx, weights: WeightModel, d):
        if d > MAX_SUBSET_DIM:
            raise CapacityError(f"explicit-weight criterion needs d <= {MAX_SUBSET_DIM}")
        self.ctx, self.d = ctx, d
        wd = weights.restrict(d) if weights.d > d else weights
        ex = wd.to_explicit()
        dense = np.zeros(1 << d)
        for mask in range(1 << d):
            u = [j + 1 for j in range(d) if mask >> j & 1]
            dense[mask] = ex.weight_of(u)
        self.dense = dense
        self.s = 0
        self.p = np.zeros((1, ctx.n))
        self.p[0, 0] = 1.0

    def _pair_matrices(self, s):
        d = self.d
        nu = 1 << (s - 1)
        nw = 1 << (d - s)
        u = np.arange(nu)
        w = np.arange(nw) << s
        popw = np.array([bin(x).count("1") for x in range(nw)])
        scale = self.ctx.zeta2a ** popw
        sbit = 1 << (s - 1)
        G0 = self.dense[w[:, None] | u[None, :]]
        Gs = self.dense[w[:, None] | u[None, :] | sbit]
        M1 = G0.T @ (scale[:, None] * Gs)
        M2 = Gs.T @ (scale[:, None] * Gs)
        return M1, M2

    def pair(self):
        s = self.s + 1
        M1, M2 = self._pair_matrices(s)
        V1 = M1 @ self.p
        V2 = M2 @ self.p
        R1 = np.zeros(self.ctx.n)
        R2 = np.zeros(self.ctx.n)
        for k in range(self.p.shape[0]):
            R1 += cconv(self.p[k], V1[k])
            R2 += cconv(self.p[k], V2[k])
        return _symmetrize(R1), _symmetrize(R2)

    def push(self, z):
        G = self.ctx.scatter_g(z)
        grown = np.array([cconv(G, row) for row in self.p])
        self.p = _symmetrize(np.concatenate([self.p, grown], axis=0))
        self.s += 1

    def distribution(self):
        k = self.p.shape[0]
        return self.dense[:k] @ self.p


def make_state(ctx: CriterionContext, weights: WeightModel = None, d: int = None, path: str = "auto"):
    """Residue-space state for a CBC-style sweep over coordinates 1..d.

    ``path`` selects the evaluation route: ``auto`` picks the structured
    route for the weight family, ``explicit`` forces subset enumeration.
    """
    weights = ctx.params.weights if weights is None else weights
    d = ctx.params.d if d is None else d
    if d > weights.d:
        raise ValidationError(f"weights cover {weights.d} coordinates, need {d}")
    if path == "explicit":
        return _ExplicitState(ctx, weights, d)
    if path != "auto":
        raise ValidationError(f"unknown evaluation path {path!r}")
    if isinstance(weights, ProductWeights):
        return _ProductState(ctx, weights, d)
    if isinstance(weights, (PODWeights, SPODWeights)):
        return _OrderState(ctx, weights, d)
    return _ExplicitState(ctx, weights, d)


# ---------------------------------------------------------------------------
# public criterion operations
# ---------------------------------------------------------------------------


def full_pair(ctx: CriterionContext, s: int, z, beta: WeightModel) -> float:
    """(1/n) sum_k D_k^2 with D_k = sum_{u in {1..s}} beta_u prod omega(k z_j / n).

    Equals the unrestricted pair sum over h, m in Z^s with (m - h).z = 0 mod n
    (the l = 0 pairs included).
    """
    n = ctx.n
    if s == 0:
        b0 = beta.weight_of(())
        return b0 * b0
    z = _check_z(z[:s], n)
    b = beta.restrict(s) if beta.d > s else beta
    if not isinstance(b, ProductWeights) and s > MAX_SUBSET_DIM and isinstance(b, ExplicitWeights):
        raise CapacityError(f"explicit path needs s <= {MAX_SUBSET_DIM}")
    k = np.arange(n, dtype=np.int64)
    om = np.array([ctx.omega_table[(k * zj) % n] for zj in z])
    D = subset_sum(b, om)
    return float(np.sum(D * D) / n)


def theta(ctx: CriterionContext, s: int, z, beta: WeightModel) -> float:
    """Pair sum restricted to l_s != 0 for the weights ``beta`` on 1..s."""
    if s < 1:
        raise ValidationError("theta needs s >= 1")
    z = _check_z(z[:s], ctx.n)
    state = make_state(ctx, beta, s)
    for zj in z[: s - 1]:
        state.push(zj)
    R1, R2 = state.pair()
    return float(ctx.scores(R1, R2, [z[s - 1]])[0])


def t_component(ctx: CriterionContext, d: int, s: int, z, path: str = "auto") -> float:
    """T_{n,d,s}(z_1..z_s) for the context's weights on 1..d."""
    if not 1 <= s <= d:
        raise ValidationError("need 1 <= s <= d")
    z = _check_z(z[:s], ctx.n)
    state = make_state(ctx, ctx.params.weights, d, path=path)
    for zj in z[: s - 1]:
        state.push(zj)
    R1, R2 = state.pair()
    return float(ctx.scores(R1, R2, [z[s - 1]])[0])


def s_components(ctx: CriterionContext, z, path: str = "auto") -> np.ndarray:
    """(T_1, ..., T_d) for the full vector z."""
    d = len(z)
    z = _check_z(z, ctx.n)
    state = make_state(ctx, ctx.params.weights, d, path=path)
    out = np.empty(d)
    for s in range(d):
        R1, R2 = state.pair()
        out[s] = ctx.scores(R1, R2, [z[s]])[0]
        state.push(z[s])
    return out


def s_criterion(ctx: CriterionContext, z, path: str = "auto"):
    """Return ``(S, T)`` with T the per-dimension breakdown."""
    T = s_components(ctx, z, path=path)
    return float(np.sum(T)), T


def residue_distribution(ctx: CriterionContext, z) -> np.ndarray:
    """A_c = sum_{h : h.z = c mod n} 1/r(h), for c in Z_n."""
    z = _check_z(z, ctx.n)
    state = make_state(ctx, ctx.params.weights, len(z))
    for zj in z:
        state.push(zj)
    return state.distribution()


def r_reciprocal_rows(params: SpaceParams, H) -> np.ndarray:
    """1/r(h) for every row of the integer array H."""
    H = np.asarray(H, dtype=np.int64)
    if H.size == 0:
        return np.zeros(H.shape[0])
    absH = np.abs(H).astype(float)
    mag = np.where(H != 0, np.where(H != 0, absH, 1.0) ** (-params.alpha), 1.0).prod(axis=1)
    w = params.weights
    if isinstance(w, ProductWeights):
        wt = np.where(H != 0, w.gamma[None, : H.shape[1]], 1.0).prod(axis=1)
        return wt * mag
    masks = (H != 0) @ (1 << np.arange(H.shape[1], dtype=np.int64))
    uniq, inv = np.unique(masks, return_inverse=True)
    vals = np.array(
        [w.weight_of([j + 1 for j in range(H.shape[1]) if m >> j & 1]) for m in uniq]
    )
    return vals[inv] * mag


def e_criterion(ctx: CriterionContext, z, M: float) -> float:
    """E(z) = sum_{h in A_d(M)} sum_{l != 0, l.z = 0} 1/r(h + l)."""
    z = _check_z(z, ctx.n)
    A_set = enumerate_index_set(ctx.params, M, cap=10**5)
    if len(A_set) == 0:
        return 0.0
    A = residue_distribution(ctx, z)
    H = A_set.entries
    c = (H @ np.asarray(z, dtype=np.int64)) % ctx.n
    rec = r_reciprocal_rows(ctx.params, H)
    return float(np.sum(A[c] - rec))


def brute_force_s(ctx: CriterionContext, z, radius: int):
    """Direct truncated evaluation of S over the box |h_j|, |h_j + l_j| <= radius.

    Returns ``(value, tail)``; ``tail`` is a certified upper bound on the
    omitted part, from sum_{|h| > R} |h|^-alpha <= 2 R^(1-alpha)/(alpha-1).
    """
    params = ctx.params
    d, n, alpha = len(z), ctx.n, params.alpha
    z = _check_z(z, n)
    if d > 3:
        raise CapacityError("brute force is limited to d <= 3")
    if radius < n:
        raise ValidationError("radius must be >= n")
    size = (2 * radius + 1) ** d
    if size > BRUTE_FORCE_CAP:
        raise CapacityError(f"brute-force box has {size} points", count=size)
    pd = params if params.d == d else params.with_weights(params.weights.restrict(d), d=d)
    axis = np.arange(-radius, radius + 1, dtype=np.int64)
    H = np.stack(np.meshgrid(*([axis] * d), indexing="ij"), axis=-1).reshape(-1, d)
    rec = r_reciprocal_rows(pd, H).astype(np.longdouble)
    c = (H @ np.asarray(z, dtype=np.int64)) % n
    A = np.zeros(n, dtype=np.longdouble)
    B = np.zeros(n, dtype=np.longdouble)
    np.add.at(A, c, rec)
    np.add.at(B, c, rec * rec)
    value = float(np.sum(A * A - B))

    h = np.arange(1, radius + 1, dtype=float)
    inner = 2.0 * float(np.sum(h ** (-alpha)))
    t1 = 2.0 * radius ** (1 - alpha) / (alpha - 1)
    w = pd.weights
    # sum_u gamma_u [(inner + t1)^|u| - inner^|u|], bounded termwise by
    # |u| t1 (inner + t1)^(|u| - 1) so the difference never cancels
    outside = t1 / (inner + t1) * w.subset_power_sum(1.0, inner + t1, moment=True)
    tail = 2.0 * outside * (float(np.max(A)) + outside)
    return value, tail


def residue_class_oracle(params: SpaceParams, n: int, z, dps: int = 40) -> float:
    """S(z) from its definition, grouped by residue class, in mpmath.

    Each coordinate's frequencies in a residue class are summed exactly by
    Hurwitz zeta values, so nothing is truncated; the pair sum over equal
    classes is then enumerated over all class tuples. Independent of the
    residue-convolution and dimension-wise decomposition used by the fast
    path. Practical for n^d up to about 10^5.
    """
    d = len(z)
    if n**d > 10**5:
        raise CapacityError("oracle limited to n^d <= 1e5")
    w = params.weights.restrict(d) if params.weights.d > d else params.weights
    with mpmath.workdps(dps):
        a = mpmath.mpf(params.alpha)

        def class_sum(s):
            out = []
            for c in range(n):
                if c == 0:
                    out.append(2 * mpmath.zeta(s) / mpmath.mpf(n) ** s)
                else:
                    q = mpmath.mpf(c) / n
                    out.append((mpmath.zeta(s, q) + mpmath.zeta(s, 1 - q)) / mpmath.mpf(n) ** s)
            return out

        g1 = class_sum(a)
        g2 = class_sum(2 * a)
        A = [mpmath.mpf(0)] * n
        B = [mpmath.mpf(0)] * n
        for k in range(d + 1):
            for u in itertools.combinations(range(d), k):
                gu = mpmath.mpf(w.weight_of([j + 1 for j in u]))
                if gu == 0:
                    continue
                for cls in itertools.product(range(n), repeat=k):
                    c = sum(cls[i] * z[u[i]] for i in range(k)) % n
                    t1 = gu
                    t2 = gu * gu
                    for i in range(k):
                        t1 *= g1[cls[i]]
                        t2 *= g2[cls[i]]
                    A[c] += t1
                    B[c] += t2
        S = mpmath.fsum(A[c] ** 2 - B[c] for c in range(n))
        return float(S)
