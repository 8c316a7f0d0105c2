"""Evaluators for the worst-case error bounds.

Each L-infinity bound balances two terms in M: the truncation tail of the
index set, which falls with M, and the aliasing term, which grows with M
and is proportional to the search criterion. The chosen M equates them,
so each bound equals ``sqrt(2 * tail(M))``. The ``*_terms`` helpers expose
the unequated two-term forms for checking.
"""

from __future__ import annotations

import math

import numpy as np

from .arith import euler_phi, is_prime
from .errors import BoundNotApplicableError, ValidationError
from .korobov import SpaceParams, c1_constant, c2_constant, truncation_tail_bound, zeta
from .weights import sqrt_half_transform


def _check_lambda(lam, alpha):
    if not (1.0 / alpha < lam <= 1.0):
        raise ValidationError(f"lambda must lie in (1/alpha, 1], got {lam}")


def suapp_bound(params: SpaceParams, n: int, lam: float) -> float:
    """Guaranteed upper bound on S for a CBC-constructed vector with n points.

    [ (kappa / phi(n)) (sum_{u != {}} |u| gamma_u^lam c^|u|) (sum_u gamma_u^lam c^|u|) ]^(1/lam)
    with c = 2 zeta(alpha lam) and kappa = 2^(2 alpha lam + 1) + 1.
    """
    alpha = params.alpha
    _check_lambda(lam, alpha)
    c = 2.0 * zeta(alpha * lam)
    kappa = 2.0 ** (2 * alpha * lam + 1) + 1
    w = params.weights
    total = w.subset_power_sum(lam, c)
    moment = w.subset_power_sum(lam, c, moment=True)
    return (kappa / euler_phi(int(n)) * moment * total) ** (1.0 / lam)


def l2_error_bound(S: float):
    """Return ``(M, bound)`` with M = S^(-1/2) and bound = sqrt(2) S^(1/4).

    M minimises (1/M + M S)^(1/2), the L2 worst-case error bound.
    """
    if not S > 0:
        raise ValidationError("S must be positive")
    return S**-0.5, math.sqrt(2.0) * S**0.25


def _criterion_value(ctx, z):
    from .criterion import s_criterion

    return s_criterion(ctx, z)[0]


def linf_v1_from_s(params: SpaceParams, S: float, tau: float):
    """(M, bound) of the first L-infinity bound for a given criterion value S."""
    if not S > 0:
        raise ValidationError("S must be positive")
    a = params.alpha
    if not (1.0 / a < tau < 1.0):
        raise ValidationError("tau must lie in (1/alpha, 1)")
    C1 = c1_constant(params, tau)
    C2 = c2_constant(params, tau)
    denom = a * tau * tau + a * tau - tau + 1
    logM = (a * tau / denom) * (math.log(C2 / (3 * C1)) - math.log(S))
    M = math.exp(logM)
    if M < 1:
        raise BoundNotApplicableError(f"balanced M = {M:.6g} < 1; more points are needed")
    e = (1 - tau) / (1 - tau + a * tau + a * tau * tau)
    log_inner = math.log(3) + (a * tau * (1 + tau) / (1 - tau)) * math.log(C2) + math.log(C1) + math.log(S)
    return M, math.sqrt(2.0) * math.exp(0.5 * e * log_inner)


def linf_v1_terms(params: SpaceParams, S: float, tau: float, M: float) -> float:
    """sqrt(tail(M) + 3 M^(tau+1) C1 S), the unbalanced form of the first bound."""
    return math.sqrt(
        truncation_tail_bound(params, M, tau) + 3 * M ** (tau + 1) * c1_constant(params, tau) * S
    )


def linf_error_bound_v1(ctx, z, tau: float):
    """(M, bound) for the L-infinity error of the lattice approximation with vector z."""
    return linf_v1_from_s(ctx.params, _criterion_value(ctx, z), tau)


def transformed_params(params: SpaceParams) -> SpaceParams:
    """Parameters (alpha/2, sqrt(gamma)) of the criterion used by the second bound."""
    w, a = sqrt_half_transform(params.weights, params.alpha)
    return SpaceParams(params.d, a, w)


def linf_v2_from_s(params: SpaceParams, S_tilde: float, tau: float):
    """(M, bound) of the second L-infinity bound, S_tilde from the transformed criterion."""
    a = params.alpha
    if a <= 2:
        raise ValidationError("the second L-infinity bound needs alpha > 2")
    if not (1.0 / a < tau < 0.5):
        raise ValidationError("tau must lie in (1/alpha, 1/2)")
    if not S_tilde > 0:
        raise ValidationError("S must be positive")
    C2 = c2_constant(params, tau)
    logM = (a * tau / (a * tau - tau + 1)) * (math.log(C2 / 3) - 2 * math.log(S_tilde))
    M = math.exp(logM)
    if M < 1:
        raise BoundNotApplicableError(f"balanced M = {M:.6g} < 1; more points are needed")
    e = (1 - tau) / (1 - tau + a * tau)
    log_inner = math.log(3) + (a * tau / (1 - tau)) * math.log(C2) + 2 * math.log(S_tilde)
    return M, math.sqrt(2.0) * math.exp(0.5 * e * log_inner)


def linf_v2_terms(params: SpaceParams, S_tilde: float, tau: float, M: float) -> float:
    """sqrt(tail(M) + 3 M S_tilde^2), the unbalanced form of the second bound."""
    return math.sqrt(truncation_tail_bound(params, M, tau) + 3 * M * S_tilde**2)


def linf_error_bound_v2(ctx, z, tau: float):
    """Second L-infinity bound; z should be built against the transformed criterion."""
    from .criterion import CriterionContext

    params = ctx.params
    if params.alpha <= 2:
        raise ValidationError("the second L-infinity bound needs alpha > 2")
    tctx = CriterionContext(ctx.n, transformed_params(params))
    return linf_v2_from_s(params, _criterion_value(tctx, z), tau)


def embedded_penalty_bound(p: int, m1: int, m2: int, alpha: float, lam: float) -> float:
    """((p/(p-1)) sum_{m=m1}^{m2} p^((alpha lam - 1) m))^(1/lam)."""
    if not is_prime(p):
        raise ValidationError(f"p = {p} is not prime")
    if m2 < m1 or m1 < 1:
        raise ValidationError("need 1 <= m1 <= m2")
    _check_lambda(lam, alpha)
    r = p ** (alpha * lam - 1)
    total = math.fsum(r**m for m in range(m1, m2 + 1))
    return (p / (p - 1) * total) ** (1.0 / lam)


def grid_search(fn, lo: float, hi: float, count: int = 20, include_hi: bool = False):
    """Minimise ``fn(x)[-1]`` (or ``fn(x)``) over log-spaced x in (lo, hi).

    Points where ``fn`` raises a validation error (e.g. M < 1) are skipped.
    Returns ``(x_best, fn(x_best))``; raises if no point is applicable.
    """
    if include_hi:
        xs = np.geomspace(lo, hi, count + 1)[1:]
    else:
        xs = np.geomspace(lo, hi, count + 2)[1:-1]
    best = None
    for x in xs:
        try:
            out = fn(float(x))
        except ValidationError:
            continue
        val = out[-1] if isinstance(out, tuple) else out
        if best is None or val < best[2]:
            best = (float(x), out, val)
    if best is None:
        raise BoundNotApplicableError("no grid point gives an applicable bound")
    return best[0], best[1]


def linf_rates(alpha: float, tau: float):
    """Convergence exponents (r1, r2) in n of the two L-infinity bounds, given S ~ n^(-1/tau)."""
    r1 = (1 - tau) / (2 * tau * (1 - tau + alpha * tau + alpha * tau * tau))
    r2 = (1 - tau) / (2 * tau * (1 - tau + alpha * tau))
    return r1, r2
