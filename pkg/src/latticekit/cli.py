"""Command-line interface: ``latticekit <command> [flags]``.

Exit codes: 0 success, 2 invalid input, 3 capacity exceeded, 4 numerical failure.
"""

from __future__ import annotations

import argparse
import logging
import math
import os
import sys
import warnings

import numpy as np

from . import io
from .bounds import (
    embedded_penalty_bound,
    grid_search,
    l2_error_bound,
    linf_v1_from_s,
    linf_v2_from_s,
    suapp_bound,
    transformed_params,
)
from .cbc import EmbeddedResult, cbc_construct, cbc_construct_embedded
from .criterion import CriterionContext, brute_force_s, residue_class_oracle, s_criterion
from .errors import BoundNotApplicableError, LatticeKitError, ValidationError
from .experiments import (
    DESK_EXPONENTS,
    FULL_DIMENSION,
    FULL_EXPONENTS,
    REFERENCE_PRIMES,
    rate_experiment,
    xratio_experiment,
)
from .korobov import SpaceParams

log = logging.getLogger("latticekit")


def _positive_int(text):
    v = int(text)
    if v < 1:
        raise argparse.ArgumentTypeError("must be a positive integer")
    return v


def _int_list(text):
    try:
        return [int(t) for t in text.replace(",", " ").split()]
    except ValueError:
        raise argparse.ArgumentTypeError("expected a comma-separated list of integers") from None


def _common(p: argparse.ArgumentParser, need_d=True):
    p.add_argument("--d", type=_positive_int, required=need_d, default=None, help="dimension")
    p.add_argument("--alpha", type=float, default=None, help="smoothness alpha > 1 (default 2)")
    p.add_argument(
        "--weights",
        default="product-paper",
        help="product-paper | pod-paper | spod-paper | file:<path> (default product-paper)",
    )
    p.add_argument("--out", default=None, help="output path (default: standard output)")
    p.add_argument("--threads", type=_positive_int, default=os.cpu_count() or 1)
    p.add_argument("--tau", type=float, default=None, help="tau for the L-infinity bounds")
    p.add_argument("--lambda", dest="lam", type=float, default=None, help="lambda for suapp/penalty bounds")
    p.add_argument("--full-scale", action="store_true", help="reference-scale experiment sizes (slow)")
    p.add_argument("-v", "--verbose", action="store_true")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="latticekit", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("construct", help="CBC generating vector for a fixed n")
    p.add_argument("--n", type=int, required=True)
    _common(p)
    p.add_argument("--csv", default=None, help="criterion CSV path (default: next to --out)")

    p = sub.add_parser("construct-embedded", help="embedded generating vector for n = p^m1..p^m2")
    p.add_argument("--p", type=int, default=2)
    p.add_argument("--m1", type=int, required=True)
    p.add_argument("--m2", type=int, required=True)
    _common(p)

    p = sub.add_parser("criterion", help="evaluate S and T_1..T_d for a vector")
    p.add_argument("--vector", help="generating-vector file")
    p.add_argument("--n", type=int, help="number of points (with --z)")
    p.add_argument("--z", type=_int_list, help="components, comma separated (with --n)")
    p.add_argument("--oracle", action="store_true", help="also evaluate the independent oracles (small cases)")
    _common(p, need_d=False)

    p = sub.add_parser("bounds", help="error bounds for a stored vector")
    p.add_argument("--vector", required=True)
    _common(p, need_d=False)

    p = sub.add_parser("approximate", help="lattice approximation coefficients from samples")
    p.add_argument("--vector", required=True)
    p.add_argument("--samples", required=True, help="file with one sample per line, in lattice order")
    p.add_argument("--M", type=float, default=None, help="index-set radius (default S^-1/2)")
    _common(p, need_d=False)

    p = sub.add_parser("experiment", help="convergence-rate or embedded-ratio experiments")
    p.add_argument("kind", choices=["rates", "xratio"])
    p.add_argument("--n-list", type=_int_list, default=None, help="explicit list of n")
    p.add_argument("--primes", action="store_true", help="use the prime list instead of powers of 2")
    p.add_argument("--p", type=int, default=2)
    p.add_argument("--m1", type=int, default=None)
    p.add_argument("--m2", type=int, default=None)
    _common(p, need_d=False)
    return parser


# ---------------------------------------------------------------------------


def _params(args, d=None, alpha=None):
    d = args.d if d is None else d
    if alpha is None:
        alpha = args.alpha if args.alpha is not None else 2.0
    if d is None:
        raise ValidationError("--d is required")
    weights = io.load_weights(args.weights, d, alpha)
    return SpaceParams(d, alpha, weights)


def _open_out(args):
    if args.out is None:
        return sys.stdout, False
    return open(args.out, "w", encoding="ascii", newline=""), True


def _sibling(path, suffix):
    root, _ = os.path.splitext(path)
    return root + suffix


CRITERION_HEADER = ["n", "d", "s", "T_s", "S_cumulative"]


def _criterion_rows(n, T):
    cum = np.cumsum(T)
    return [(n, len(T), s + 1, float(T[s]), float(cum[s])) for s in range(len(T))]


def cmd_construct(args):
    params = _params(args)
    gv = cbc_construct(CriterionContext(args.n, params), threads=args.threads)
    rows = _criterion_rows(gv.n, gv.t_values)
    if args.out is None:
        sys.stdout.write(io.format_vector(gv))
        if args.csv:
            io.write_csv(args.csv, CRITERION_HEADER, rows)
        return 0
    io.write_vector(args.out, gv)
    io.write_csv(args.csv or _sibling(args.out, ".csv"), CRITERION_HEADER, rows)
    return 0


def _embedded_tables(res: EmbeddedResult):
    x_rows = [(s + 1, float(x)) for s, x in enumerate(res.x_values)]
    s_rows = []
    for m in range(res.m1, res.m2 + 1):
        s_emb, s_base = res.s_embedded(m), res.s_baseline(m)
        s_rows.append((m, res.p**m, s_emb, s_base, s_emb / s_base, res.max_x))
    return x_rows, s_rows


X_HEADER = ["s", "X_s"]
S_HEADER = ["m", "n", "S_embedded", "S_baseline", "ratio", "max_X"]


def cmd_construct_embedded(args):
    params = _params(args)
    res = cbc_construct_embedded(args.p, args.m1, args.m2, params, threads=args.threads)
    x_rows, s_rows = _embedded_tables(res)
    if args.out is None:
        sys.stdout.write(io.format_vector(res))
        io.write_csv(sys.stdout, X_HEADER, x_rows)
        io.write_csv(sys.stdout, S_HEADER, s_rows)
        return 0
    io.write_vector(args.out, res)
    io.write_csv(_sibling(args.out, "_x.csv"), X_HEADER, x_rows)
    io.write_csv(_sibling(args.out, "_s.csv"), S_HEADER, s_rows)
    return 0


def _load_vector_and_params(args):
    """Read --vector and rebuild matching parameters (weights hash checked)."""
    v = io.read_vector(args.vector)
    alpha = v.alpha
    if args.alpha is not None and args.alpha != alpha:
        raise ValidationError(f"--alpha {args.alpha} disagrees with the vector file (alpha = {alpha})")
    if args.d is not None and args.d != v.d:
        raise ValidationError(f"--d {args.d} disagrees with the vector file (d = {v.d})")
    params = _params(args, d=v.d, alpha=alpha)
    if params.weights.digest() != v.weights_digest:
        raise io.WeightMismatchError(
            f"vector was built for weights {v.weights_digest}, --weights gives {params.weights.digest()}"
        )
    n = v.p**v.m2 if isinstance(v, EmbeddedResult) else v.n
    return v, n, params


def cmd_criterion(args):
    if args.vector:
        v, n, params = _load_vector_and_params(args)
        z = list(v.z)
    else:
        if args.n is None or args.z is None:
            raise ValidationError("give --vector or both --n and --z")
        n, z = args.n, args.z
        params = _params(args, d=len(z))
    ctx = CriterionContext(n, params)
    S, T = s_criterion(ctx, z)
    out, close = _open_out(args)
    try:
        io.write_csv(out, CRITERION_HEADER, _criterion_rows(n, T))
        if args.oracle:
            rows = [("fast", S)]
            rows.append(("residue_class_oracle", residue_class_oracle(params, n, z)))
            if len(z) <= 3:
                R = max(n, 64)
                val, tail = brute_force_s(ctx, z, R)
                rows.append(("box_truncation", val))
                rows.append(("box_truncation_tail_bound", tail))
            io.write_csv(out, ["method", "S"], rows)
    finally:
        if close:
            out.close()
    return 0


def cmd_bounds(args):
    v, n, params = _load_vector_and_params(args)
    ctx = CriterionContext(n, params)
    S, _ = s_criterion(ctx, list(v.z))
    a = params.alpha
    rows = [("S", "", S)]
    M, b = l2_error_bound(S)
    rows += [("l2_M", "", M), ("l2_bound", "", b)]

    def add_linf(name, fn, lo, hi):
        try:
            if args.tau is not None:
                tau, (M, b) = args.tau, fn(args.tau)
            else:
                tau, (M, b) = grid_search(fn, lo, hi)
            rows.extend([(f"{name}_M", f"tau={io.fmt(tau)}", M), (f"{name}_bound", f"tau={io.fmt(tau)}", b)])
        except BoundNotApplicableError as exc:
            rows.append((f"{name}_bound", "not_applicable", str(exc)))

    add_linf("linf_v1", lambda t: linf_v1_from_s(params, S, t), 1.0 / a, 1.0)
    if a > 2:
        S_t, _ = s_criterion(CriterionContext(n, transformed_params(params)), list(v.z))
        rows.append(("S_transformed", "", S_t))
        add_linf("linf_v2", lambda t: linf_v2_from_s(params, S_t, t), 1.0 / a, 0.5)
    if args.lam is not None:
        lam, sb = args.lam, suapp_bound(params, n, args.lam)
    else:
        lam, sb = grid_search(lambda x: suapp_bound(params, n, x), 1.0 / a, 1.0, include_hi=True)
    rows.append(("suapp_bound", f"lambda={io.fmt(lam)}", sb))
    if isinstance(v, EmbeddedResult):
        lam_e = args.lam if args.lam is not None else 0.75 if 0.75 > 1 / a else 1.0
        rows.append(
            ("embedded_penalty_bound", f"lambda={io.fmt(lam_e)}", embedded_penalty_bound(v.p, v.m1, v.m2, a, lam_e))
        )
        rows.append(("max_X", "", v.max_x))
    out, close = _open_out(args)
    try:
        io.write_csv(out, ["quantity", "parameter", "value"], rows)
    finally:
        if close:
            out.close()
    return 0


def cmd_approximate(args):
    from .approx import approximate

    v, n, params = _load_vector_and_params(args)
    try:
        samples = np.loadtxt(args.samples, dtype=float, ndmin=1)
    except (OSError, ValueError) as exc:
        raise ValidationError(f"cannot read samples: {exc}") from None
    if samples.shape != (n,):
        raise ValidationError(f"need {n} samples, got {samples.size}")
    M = args.M
    if M is None:
        S, _ = s_criterion(CriterionContext(n, params), list(v.z))
        M = l2_error_bound(S)[0]
    approx = approximate(samples, params, list(v.z), M)
    header = [f"h{j + 1}" for j in range(params.d)] + ["re", "im"]
    out, close = _open_out(args)
    try:
        io.write_csv(out, header, approx.to_csv_rows())
    finally:
        if close:
            out.close()
    return 0


def cmd_experiment(args):
    full = args.full_scale
    if full:
        warnings.warn("full-scale experiment: expect hours of runtime and large memory use", stacklevel=1)
    d = args.d or (FULL_DIMENSION if full else 10)
    params = _params(args, d=d)
    out, close = _open_out(args)
    try:
        if args.kind == "rates":
            if args.n_list:
                ns = args.n_list
            elif args.primes:
                top = 2 ** (FULL_EXPONENTS[-1] if full else DESK_EXPONENTS[-1])
                ns = [q for q in REFERENCE_PRIMES if q <= top * 1.01]
            else:
                ms = FULL_EXPONENTS if full else DESK_EXPONENTS
                if args.m1 is not None or args.m2 is not None:
                    ms = range(args.m1 or ms[0], (args.m2 or ms[-1]) + 1)
                ns = [2**m for m in ms]
            rows, fit = rate_experiment(params, ns, threads=args.threads)
            io.write_csv(
                out,
                ["n", "S", "log_n", "log_S"],
                [(n, S, math.log(n), math.log(S)) for n, S, _ in rows],
            )
            io.write_csv(
                out,
                ["slope", "intercept", "residual", "rate"],
                [(fit.slope, fit.intercept, fit.residual, fit.rate)],
            )
        else:
            m1 = args.m1 if args.m1 is not None else (9 if full else 4)
            m2 = args.m2 if args.m2 is not None else (17 if full else 8)
            res = xratio_experiment(params, args.p, m1, m2, threads=args.threads)
            x_rows, s_rows = _embedded_tables(res)
            io.write_csv(out, X_HEADER, x_rows)
            io.write_csv(out, S_HEADER, s_rows)
    finally:
        if close:
            out.close()
    return 0


COMMANDS = {
    "construct": cmd_construct,
    "construct-embedded": cmd_construct_embedded,
    "criterion": cmd_criterion,
    "bounds": cmd_bounds,
    "approximate": cmd_approximate,
    "experiment": cmd_experiment,
}


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(
        level=logging.DEBUG if args.verbose else logging.WARNING,
        format="%(levelname)s %(name)s: %(message)s",
    )
    try:
        return COMMANDS[args.command](args)
    except LatticeKitError as exc:
        print(f"latticekit: error: {exc}", file=sys.stderr)
        return exc.exit_code


if __name__ == "__main__":
    sys.exit(main())
