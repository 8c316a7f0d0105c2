"""Component-by-component constructions of generating vectors.

:func:`cbc_construct` builds a rank-1 lattice for a fixed number of points
by minimising T_s one coordinate at a time. :func:`cbc_construct_embedded`
builds one vector serving every n = p^m, m1 <= m <= m2, by minimising the
worst ratio against separate per-n constructions.
"""

from __future__ import annotations

import logging
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from .arith import euler_phi, is_prime, units
from .bounds import (  # noqa: F401  (re-exported: the bound evaluators belong with the constructions)
    embedded_penalty_bound,
    l2_error_bound,
    linf_error_bound_v1,
    linf_error_bound_v2,
    suapp_bound,
)
from .criterion import TIE_RTOL, CriterionContext, make_state
from .errors import DegenerateWeightsError, ValidationError
from .korobov import SpaceParams

log = logging.getLogger(__name__)


@dataclass(frozen=True, eq=False)
class GeneratingVector:
    """A rank-1 lattice generating vector and the T_s values attained when it was built."""

    n: int
    z: tuple
    t_values: np.ndarray
    alpha: float = None
    weights_digest: str = None

    def __post_init__(self):
        object.__setattr__(self, "z", tuple(int(v) for v in self.z))
        object.__setattr__(self, "t_values", np.asarray(self.t_values, dtype=float))
        if len(self.t_values) != len(self.z):
            raise ValidationError("t_values must have one entry per component")

    @property
    def d(self) -> int:
        return len(self.z)

    @property
    def s_value(self) -> float:
        return float(np.sum(self.t_values))

    def __eq__(self, other):
        if not isinstance(other, GeneratingVector):
            return NotImplemented
        return (
            self.n == other.n
            and self.z == other.z
            and np.array_equal(self.t_values, other.t_values)
            and self.alpha == other.alpha
            and self.weights_digest == other.weights_digest
        )


@dataclass(eq=False)
class EmbeddedResult:
    p: int
    m1: int
    m2: int
    z: tuple
    x_values: np.ndarray
    baselines: dict  # m -> GeneratingVector (separate fixed-n construction)
    t_embedded: dict  # m -> T_1..T_d of the embedded vector at n = p^m
    alpha: float = None
    weights_digest: str = None
    meta: dict = field(default_factory=dict)

    @property
    def d(self) -> int:
        return len(self.z)

    @property
    def max_x(self) -> float:
        return float(np.max(self.x_values))

    def s_embedded(self, m: int) -> float:
        return float(np.sum(self.t_embedded[m]))

    def s_baseline(self, m: int) -> float:
        return self.baselines[m].s_value


def _pick(values, cands):
    """Smallest candidate among those within TIE_RTOL of the minimum."""
    vmin = float(np.min(values))
    ok = values <= vmin + TIE_RTOL * abs(vmin)
    i = int(np.argmax(ok))
    return int(cands[i]), float(values[i])


def _half_units(n):
    """Units w <= n/2; T(w) = T(n - w) so these suffice for the argmin."""
    return np.array([w for w in units(n) if 2 * w <= n], dtype=np.int64)


def _scores(ctx, R1, R2, cands, threads):
    if threads is None or threads <= 1 or len(cands) < 2 * threads:
        return ctx.scores(R1, R2, cands)
    parts = np.array_split(cands, threads)
    with ThreadPoolExecutor(max_workers=threads) as pool:
        res = list(pool.map(lambda c: ctx.scores(R1, R2, c), parts))
    return np.concatenate(res)


def cbc_construct(
    ctx: CriterionContext, d: int = None, threads: int = None, path: str = "auto"
) -> GeneratingVector:
    """Greedy CBC: z_s = argmin over units of T_{n,d,s}(z_1..z_{s-1}, z_s).

    Ties (relative 1e-13) go to the smallest candidate. The result does not
    depend on ``threads``: each candidate value is computed independently.
    ``path="explicit"`` evaluates T_s by subset enumeration whatever the
    weight family (d <= 20).
    """
    d = ctx.params.d if d is None else int(d)
    if d < 1:
        raise ValidationError("d must be >= 1")
    n = ctx.n
    cands = _half_units(n)
    state = make_state(ctx, ctx.params.weights, d, path=path)
    z, t = [], []
    for s in range(1, d + 1):
        R1, R2 = state.pair()
        vals = _scores(ctx, R1, R2, cands, threads)
        zs, ts = _pick(vals, cands)
        z.append(zs)
        t.append(ts)
        state.push(zs)
        log.debug("n=%d s=%d z_s=%d T_s=%.6e", n, s, zs, ts)
    return GeneratingVector(n, z, t, ctx.params.alpha, ctx.params.weights.digest())


def cbc_construct_embedded(
    p: int, m1: int, m2: int, params: SpaceParams, threads: int = None
) -> EmbeddedResult:
    """Mini-max CBC for an embedded sequence of lattices with n = p^m1, ..., p^m2.

    For each s, z_s in U_{p^m2} minimises X_s = max_m T_{p^m,s}(prefix, z_s) /
    T_{p^m,s}(z^(m)), where z^(m) is the separate CBC vector for n = p^m.
    T_{p^m,s} depends on z_s only through z_s mod p^m, so each m is scored
    once per residue and looked up.
    """
    if not is_prime(p):
        raise ValidationError(f"p = {p} is not prime")
    if not (1 <= m1 < m2):
        raise ValidationError("need 1 <= m1 < m2")
    ms = list(range(m1, m2 + 1))
    d = params.d
    ctxs = {m: CriterionContext(p**m, params) for m in ms}
    baselines = {m: cbc_construct(ctxs[m], d, threads) for m in ms}
    for m in ms:
        if np.any(baselines[m].t_values <= 0):
            raise DegenerateWeightsError(f"non-positive baseline T value at n = {p**m}")
    states = {m: make_state(ctxs[m], params.weights, d) for m in ms}
    big = p**m2
    cands = np.array(units(big), dtype=np.int64)
    z, x = [], []
    t_emb = {m: [] for m in ms}
    for s in range(1, d + 1):
        ratio = np.zeros(cands.size)
        tables = {}
        for m in ms:
            nm = p**m
            R1, R2 = states[m].pair()
            half = _half_units(nm)
            full = np.zeros(nm)
            full[half] = _scores(ctxs[m], R1, R2, half, threads)
            full[nm - half] = full[half]
            tables[m] = full
            ratio = np.maximum(ratio, full[cands % nm] / baselines[m].t_values[s - 1])
        zs, xs = _pick(ratio, cands)
        z.append(zs)
        x.append(xs)
        for m in ms:
            t_emb[m].append(float(tables[m][zs % p**m]))
            states[m].push(zs % p**m)
        log.debug("embedded s=%d z_s=%d X_s=%.6f", s, zs, xs)
    return EmbeddedResult(
        p,
        m1,
        m2,
        tuple(z),
        np.array(x),
        baselines,
        {m: np.array(v) for m, v in t_emb.items()},
        params.alpha,
        params.weights.digest(),
    )


__all__ = [
    "GeneratingVector",
    "EmbeddedResult",
    "cbc_construct",
    "cbc_construct_embedded",
    "euler_phi",
    "units",
    "suapp_bound",
    "l2_error_bound",
    "linf_error_bound_v1",
    "linf_error_bound_v2",
    "embedded_penalty_bound",
]
