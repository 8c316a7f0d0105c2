"""Subset weights gamma_u for weighted Korobov spaces.

Coordinates are 1-based throughout, matching the usual notation
``u ⊆ {1, ..., d}``; per-coordinate arrays are stored 0-based
(``gamma[j - 1]`` is the weight of coordinate ``j``).

Four families are supported:

* :class:`ProductWeights`   gamma_u = prod_{j in u} gamma_j
* :class:`PODWeights`       gamma_u = Gamma_{|u|} prod_{j in u} gamma_j
* :class:`SPODWeights`      gamma_u = sum_{nu in {1..sigma}^u} Gamma_{|nu|} prod gamma_{j, nu_j}
* :class:`ExplicitWeights`  an explicit table u -> gamma_u

All models are immutable and satisfy gamma_{} = 1.
"""

from __future__ import annotations

import hashlib
import itertools
import math
from dataclasses import dataclass, field
from typing import Iterable, Iterator, Mapping

import numpy as np

from .errors import CapacityError, MissingWeightError, ValidationError

# subset enumeration limit for non-product weights
MAX_SUBSET_DIM = 20


def _as_subset(u: Iterable[int], d: int) -> frozenset:
    u = frozenset(int(j) for j in u)
    for j in u:
        if j < 1 or j > d:
            raise ValidationError(f"coordinate {j} out of range 1..{d}")
    return u


def _check_params(name, values):
    arr = np.array(values, dtype=float)
    if arr.size and (not np.all(np.isfinite(arr)) or np.any(arr < 0)):
        raise ValidationError(f"{name} must be finite and nonnegative")
    return arr


def all_subsets(d: int) -> Iterator[frozenset]:
    """All subsets of {1..d}, ordered by size then lexicographically."""
    for k in range(d + 1):
        for u in itertools.combinations(range(1, d + 1), k):
            yield frozenset(u)


def _guard_subsets(d: int, what: str = "subset enumeration"):
    if d > MAX_SUBSET_DIM:
        raise CapacityError(f"{what} needs d <= {MAX_SUBSET_DIM}, got d = {d}")


def _array_repr(arr) -> str:
    return ",".join(f"{float(x):.17g}" for x in np.ravel(arr))


class WeightModel:
    """Base class. Subclasses define ``d``, ``kind`` and ``weight_of``."""

    kind = "abstract"
    d: int

    def weight_of(self, u: Iterable[int]) -> float:
        raise NotImplementedError

    def restrict(self, s: int) -> "WeightModel":
        """The same family seen on coordinates 1..s only."""
        raise NotImplementedError

    def to_explicit(self) -> "ExplicitWeights":
        _guard_subsets(self.d, "materialising explicit weights")
        table = {u: self.weight_of(u) for u in all_subsets(self.d)}
        return ExplicitWeights(self.d, table)

    def canonical(self) -> str:
        raise NotImplementedError

    def digest(self) -> str:
        """Short stable hash of the model parameters (16 hex chars)."""
        return hashlib.sha256(self.canonical().encode()).hexdigest()[:16]

    @property
    def gamma1(self) -> float:
        """gamma_{1}, the weight of the first coordinate alone."""
        return self.weight_of({1}) if self.d >= 1 else 0.0

    def subset_power_sum(self, power: float, c: float, moment: bool = False) -> float:
        """sum_u gamma_u^power * c^|u|, optionally weighted by |u|.

        Generic version by enumeration; structured families override it.
        """
        _guard_subsets(self.d)
        total = 0.0
        for u in all_subsets(self.d):
            w = self.weight_of(u)
            if w == 0.0:
                continue
            term = w**power * c ** len(u)
            total += len(u) * term if moment else term
        return total


@dataclass(frozen=True, eq=False)
class ProductWeights(WeightModel):
    gamma: np.ndarray
    kind = "product"

    def __post_init__(self):
        arr = _check_params("gamma", self.gamma)
        arr.setflags(write=False)
        object.__setattr__(self, "gamma", arr)

    @property
    def d(self) -> int:
        return int(self.gamma.size)

    def weight_of(self, u):
        u = _as_subset(u, self.d)
        w = 1.0
        for j in sorted(u):
            w *= float(self.gamma[j - 1])
        return w

    def restrict(self, s):
        return ProductWeights(self.gamma[:s].copy())

    def canonical(self):
        return f"product;d={self.d};gamma={_array_repr(self.gamma)}"

    def subset_power_sum(self, power, c, moment=False):
        x = self.gamma**power * c
        prod = float(np.prod(1.0 + x))
        if not moment:
            return prod
        # d/dt prod(1 + t x_j) at t = 1
        return prod * float(np.sum(x / (1.0 + x)))


@dataclass(frozen=True, eq=False)
class PODWeights(WeightModel):
    """Product and order dependent weights; ``order`` holds Gamma_0..Gamma_d."""

    order: np.ndarray
    gamma: np.ndarray
    kind = "pod"

    def __post_init__(self):
        order = _check_params("Gamma", self.order)
        gamma = _check_params("gamma", self.gamma)
        if order.size < gamma.size + 1:
            raise ValidationError(
                f"POD needs Gamma_0..Gamma_{gamma.size}, got {order.size} values"
            )
        if order[0] != 1.0:
            raise ValidationError("POD weights need Gamma_0 = 1")
        order.setflags(write=False)
        gamma.setflags(write=False)
        object.__setattr__(self, "order", order)
        object.__setattr__(self, "gamma", gamma)

    @property
    def d(self):
        return int(self.gamma.size)

    def weight_of(self, u):
        u = _as_subset(u, self.d)
        w = float(self.order[len(u)])
        for j in sorted(u):
            w *= float(self.gamma[j - 1])
        return w

    def restrict(self, s):
        return PODWeights(self.order[: s + 1].copy(), self.gamma[:s].copy())

    def canonical(self):
        return (
            f"pod;d={self.d};Gamma={_array_repr(self.order[: self.d + 1])};"
            f"gamma={_array_repr(self.gamma)}"
        )

    def subset_power_sum(self, power, c, moment=False):
        e = elementary_symmetric(self.gamma**power * c)
        ell = np.arange(self.d + 1)
        terms = self.order[: self.d + 1] ** power * e
        if moment:
            terms = terms * ell
        return float(np.sum(terms))


@dataclass(frozen=True, eq=False)
class SPODWeights(WeightModel):
    """Smoothness-driven POD weights.

    ``order`` holds Gamma_0..Gamma_{sigma d}; ``gamma`` has shape (d, sigma)
    with ``gamma[j - 1, nu - 1] = gamma_{j, nu}``.
    """

    sigma: int
    order: np.ndarray
    gamma: np.ndarray
    kind = "spod"

    def __post_init__(self):
        if int(self.sigma) != self.sigma or self.sigma < 1:
            raise ValidationError("SPOD smoothness degree sigma must be a positive integer")
        object.__setattr__(self, "sigma", int(self.sigma))
        order = _check_params("Gamma", self.order)
        gamma = _check_params("gamma", self.gamma)
        if gamma.ndim == 1:
            gamma = gamma.reshape(-1, 1) if self.sigma == 1 else gamma.reshape(-1, self.sigma)
        if gamma.ndim != 2 or gamma.shape[1] != self.sigma:
            raise ValidationError(f"SPOD gamma must have shape (d, {self.sigma})")
        d = gamma.shape[0]
        if order.size < self.sigma * d + 1:
            raise ValidationError(
                f"SPOD needs Gamma_0..Gamma_{self.sigma * d}, got {order.size} values"
            )
        if order[0] != 1.0:
            raise ValidationError("SPOD weights need Gamma_0 = 1")
        order.setflags(write=False)
        gamma.setflags(write=False)
        object.__setattr__(self, "order", order)
        object.__setattr__(self, "gamma", gamma)

    @property
    def d(self):
        return int(self.gamma.shape[0])

    def coordinate_poly(self, j: int) -> np.ndarray:
        """Coefficients of sum_nu gamma_{j,nu} x^nu (index = degree)."""
        return np.concatenate(([0.0], self.gamma[j - 1]))

    def weight_of(self, u):
        u = _as_subset(u, self.d)
        poly = np.array([1.0])
        for j in sorted(u):
            poly = np.convolve(poly, self.coordinate_poly(j))
        return float(np.dot(self.order[: poly.size], poly))

    def restrict(self, s):
        return SPODWeights(self.sigma, self.order[: self.sigma * s + 1].copy(), self.gamma[:s].copy())

    def canonical(self):
        return (
            f"spod;d={self.d};sigma={self.sigma};"
            f"Gamma={_array_repr(self.order[: self.sigma * self.d + 1])};"
            f"gamma={_array_repr(self.gamma)}"
        )


@dataclass(frozen=True, eq=False)
class ExplicitWeights(WeightModel):
    d: int
    table: Mapping[frozenset, float] = field(default_factory=dict)
    kind = "explicit"

    def __post_init__(self):
        if self.d < 0:
            raise ValidationError("d must be nonnegative")
        clean = {}
        for u, w in self.table.items():
            u = _as_subset(u, self.d)
            w = float(w)
            if not math.isfinite(w) or w < 0:
                raise ValidationError(f"weight for {sorted(u)} must be finite and nonnegative")
            clean[u] = w
        if clean.get(frozenset()) != 1.0:
            raise ValidationError("explicit weights must contain the empty set with weight 1")
        object.__setattr__(self, "table", clean)

    def weight_of(self, u):
        u = _as_subset(u, self.d)
        try:
            return self.table[u]
        except KeyError:
            raise MissingWeightError(f"no weight for subset {sorted(u)}") from None

    def get(self, u, default=0.0) -> float:
        return self.table.get(frozenset(u), default)

    def restrict(self, s):
        keep = {u: w for u, w in self.table.items() if not u or max(u) <= s}
        return ExplicitWeights(s, keep)

    def to_explicit(self):
        return self

    def canonical(self):
        items = sorted(self.table.items(), key=lambda kv: (len(kv[0]), sorted(kv[0])))
        body = ";".join(f"{','.join(map(str, sorted(u)))}:{w:.17g}" for u, w in items)
        return f"explicit;d={self.d};{body}"

    def subset_power_sum(self, power, c, moment=False):
        total = 0.0
        for u, w in self.table.items():
            if w == 0.0:
                continue
            term = w**power * c ** len(u)
            total += len(u) * term if moment else term
        return total


def subset_sum(model: WeightModel, values) -> np.ndarray:
    """sum_u gamma_u prod_{j in u} values[j-1], vectorised over trailing axes.

    ``values`` has shape (d, ...) for the model's d. Product, POD and SPOD
    weights use polynomial recurrences; explicit weights enumerate the table.
    """
    v = np.asarray(values, dtype=float)
    d = model.d
    if v.shape[0] != d:
        raise ValidationError(f"expected {d} rows of values, got {v.shape[0]}")
    tail = v.shape[1:]
    if isinstance(model, ProductWeights):
        out = np.ones(tail)
        for j in range(d):
            out = out * (1.0 + model.gamma[j] * v[j])
        return out
    if isinstance(model, PODWeights):
        e = np.zeros((d + 1,) + tail)
        e[0] = 1.0
        for j in range(d):
            e[1 : j + 2] = e[1 : j + 2] + model.gamma[j] * v[j] * e[0 : j + 1]
        return np.tensordot(model.order[: d + 1], e, axes=1)
    if isinstance(model, SPODWeights):
        sig = model.sigma
        c = np.zeros((sig * d + 1,) + tail)
        c[0] = 1.0
        for j in range(d):
            top = sig * j
            new = c.copy()
            for nu in range(1, sig + 1):
                new[nu : top + nu + 1] += model.gamma[j, nu - 1] * v[j] * c[0 : top + 1]
            c = new
        return np.tensordot(model.order[: sig * d + 1], c, axes=1)
    out = np.zeros(tail)
    for u, w in model.to_explicit().table.items():
        if w == 0.0:
            continue
        term = np.full(tail, w)
        for j in u:
            term = term * v[j - 1]
        out = out + term
    return out


def envelope(model: WeightModel):
    """(C, e) with gamma_u <= C * prod_{j in u} e_j for every u."""
    if isinstance(model, ProductWeights):
        return 1.0, np.asarray(model.gamma, dtype=float)
    if isinstance(model, PODWeights):
        return float(np.max(model.order[: model.d + 1])), np.asarray(model.gamma, dtype=float)
    if isinstance(model, SPODWeights):
        return float(np.max(model.order[: model.sigma * model.d + 1])), model.gamma.sum(axis=1)
    return None


def elementary_symmetric(x) -> np.ndarray:
    """e_0..e_k of the values x, by the standard one-pass recurrence."""
    x = np.asarray(x, dtype=float)
    e = np.zeros(x.size + 1)
    e[0] = 1.0
    for i, xi in enumerate(x, start=1):
        e[1 : i + 1] = e[1 : i + 1] + xi * e[0:i]
    return e


def _log_factorials(n: int) -> np.ndarray:
    return np.array([math.lgamma(k + 1) for k in range(n + 1)])


def named_weight_family(kind: str, d: int, alpha: float) -> WeightModel:
    """The three benchmark weight families used for the lattice experiments.

    ``product``: gamma_j = j^(-1.5 alpha).
    ``pod``:     Gamma_l = l!/a^l, gamma_j = a j^(-1.5 alpha).
    ``spod``:    sigma = alpha/2, Gamma_l = l!/a^l, gamma_{j,nu} = a (2 j^(-1.5 alpha))^nu.

    The rescaling constant is a = (d!)^(1/d), evaluated in log space.
    """
    if d < 1:
        raise ValidationError("d must be >= 1")
    if not alpha > 1:
        raise ValidationError("alpha must be > 1")
    if kind == "spod" and (alpha != int(alpha) or int(alpha) % 2):
        raise ValidationError("the SPOD family needs an even integer alpha (sigma = alpha/2)")
    j = np.arange(1, d + 1, dtype=float)
    base = j ** (-1.5 * alpha)
    if kind == "product":
        return ProductWeights(base)
    log_a = math.lgamma(d + 1) / d
    a = math.exp(log_a)
    if kind == "pod":
        lf = _log_factorials(d)
        order = np.exp(lf - np.arange(d + 1) * log_a)
        order[0] = 1.0
        return PODWeights(order, a * base)
    if kind == "spod":
        sigma = int(alpha) // 2
        lf = _log_factorials(sigma * d)
        order = np.exp(lf - np.arange(sigma * d + 1) * log_a)
        order[0] = 1.0
        nu = np.arange(1, sigma + 1)
        gamma = a * (2.0 * base[:, None]) ** nu[None, :]
        return SPODWeights(sigma, order, gamma)
    raise ValidationError(f"unknown weight family {kind!r}")


def sqrt_half_transform(model: WeightModel, alpha: float):
    """Return ``(model', alpha / 2)`` with gamma'_u = sqrt(gamma_u).

    Product weights stay product weights; every other family becomes an
    explicit table, because the square root of a POD/SPOD weight is not of
    the same form.
    """
    if alpha <= 2:
        raise ValidationError("the square-root transform needs alpha > 2")
    if isinstance(model, ProductWeights):
        return ProductWeights(np.sqrt(model.gamma)), alpha / 2
    explicit = model.to_explicit()
    table = {u: math.sqrt(w) for u, w in explicit.table.items()}
    return ExplicitWeights(explicit.d, table), alpha / 2
