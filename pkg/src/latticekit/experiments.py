"""Experiment harness: convergence-rate fits and embedded-sequence ratios."""

from __future__ import annotations

import logging
from dataclasses import dataclass

import numpy as np

from .cbc import EmbeddedResult, cbc_construct, cbc_construct_embedded
from .criterion import CriterionContext
from .errors import ValidationError
from .korobov import SpaceParams

log = logging.getLogger(__name__)

REFERENCE_PRIMES = (503, 1009, 2003, 4001, 8009, 16007, 32003, 64007, 128021)
# powers of two used for slope fits: desk scale by default, reference scale behind a flag
DESK_EXPONENTS = tuple(range(6, 14))
FULL_EXPONENTS = tuple(range(9, 18))
FULL_DIMENSION = 100


@dataclass(frozen=True)
class RateFit:
    """Least-squares line log S = slope * log n + intercept."""

    log_n: tuple
    log_s: tuple
    slope: float
    intercept: float
    residual: float

    @property
    def rate(self) -> float:
        """Empirical convergence rate, -slope."""
        return -self.slope


def fit_rate(ns, values) -> RateFit:
    x = np.log(np.asarray(ns, dtype=float))
    y = np.log(np.asarray(values, dtype=float))
    if x.size < 3:
        raise ValidationError("a rate fit needs at least 3 points")
    if not np.all(np.isfinite(y)):
        raise ValidationError("criterion values must be positive")
    A = np.vstack([x, np.ones_like(x)]).T
    (slope, intercept), res, *_ = np.linalg.lstsq(A, y, rcond=None)
    residual = float(np.sqrt(res[0] / x.size)) if res.size else 0.0
    return RateFit(tuple(x), tuple(y), float(slope), float(intercept), residual)


def rate_experiment(params: SpaceParams, ns, threads: int = None):
    """Construct a vector for every n and fit the decay of S.

    Returns ``(rows, fit)`` with rows ``(n, S, z)``.
    """
    rows = []
    for n in ns:
        gv = cbc_construct(CriterionContext(int(n), params), threads=threads)
        log.info("n=%d S=%.6e", n, gv.s_value)
        rows.append((int(n), gv.s_value, gv.z))
    fit = fit_rate([r[0] for r in rows], [r[1] for r in rows])
    return rows, fit


def xratio_experiment(params: SpaceParams, p: int, m1: int, m2: int, threads: int = None) -> EmbeddedResult:
    """Embedded construction; X_s and per-m S values are on the result."""
    return cbc_construct_embedded(p, m1, m2, params, threads=threads)
