"""Text formats: generating-vector files, weight configurations and CSV output.

Generating-vector file::

    latticekit-vector v1
    n=<int> d=<int> alpha=<real> weights=<hash>
    z_1
    ...
    z_d
    t_values            (optional block, d reals)
    ...

An embedded file has ``p=<int> m1=<int> m2=<int>`` appended to line 2
(with n = p^m2) and, after the components, an ``x_values`` block, one
``t_embedded m=<m>`` block per m and one ``baseline m=<m>`` block per m
whose lines are ``z_j T_j``. Reals use 17 significant digits so that
reading back reproduces them bit for bit.

Weight configuration: ``key = value`` lines, ``#`` starts a comment::

    family = product-paper          # or pod-paper / spod-paper
    # or an explicit model:
    kind = product
    gamma = 1, 0.5, 0.25
    kind = pod
    Gamma = 1, 1, 2, 6
    gamma = 0.8, 0.4, 0.2
    kind = spod
    sigma = 2
    Gamma = 1, 1, 2, 6, 24
    gamma = 0.5, 0.2; 0.3, 0.1      # rows separated by ';'
    kind = explicit
    d = 2
    weight[] = 1
    weight[1] = 0.5
    weight[1,2] = 0.1
"""

from __future__ import annotations

import csv
import re

import numpy as np

from .errors import ParseError, ValidationError, WeightMismatchError
from .weights import (
    ExplicitWeights,
    PODWeights,
    ProductWeights,
    SPODWeights,
    WeightModel,
    named_weight_family,
)

MAGIC = "latticekit-vector v1"
NAMED_FAMILIES = {"product-paper": "product", "pod-paper": "pod", "spod-paper": "spod"}


def fmt(x: float) -> str:
    """17 significant digits: enough to read back the identical double."""
    return f"{float(x):.17g}"


# ---------------------------------------------------------------------------
# generating vectors
# ---------------------------------------------------------------------------


def format_vector(v) -> str:
    from .cbc import EmbeddedResult

    embedded = isinstance(v, EmbeddedResult)
    n = v.p**v.m2 if embedded else v.n
    head = f"n={n} d={v.d} alpha={fmt(v.alpha)} weights={v.weights_digest}"
    if embedded:
        head += f" p={v.p} m1={v.m1} m2={v.m2}"
    lines = [MAGIC, head]
    lines += [str(zj) for zj in v.z]
    if embedded:
        lines.append("x_values")
        lines += [fmt(x) for x in v.x_values]
        for m in range(v.m1, v.m2 + 1):
            lines.append(f"t_embedded m={m}")
            lines += [fmt(t) for t in v.t_embedded[m]]
        for m in range(v.m1, v.m2 + 1):
            b = v.baselines[m]
            lines.append(f"baseline m={m}")
            lines += [f"{zj} {fmt(t)}" for zj, t in zip(b.z, b.t_values)]
    else:
        lines.append("t_values")
        lines += [fmt(t) for t in v.t_values]
    return "\n".join(lines) + "\n"


def write_vector(path, v) -> None:
    with open(path, "w", encoding="ascii", newline="\n") as fh:
        fh.write(format_vector(v))


def _parse_header(line, lineno):
    fields = {}
    for tok in line.split():
        if "=" not in tok:
            raise ParseError(f"expected key=value, got {tok!r}", lineno)
        k, _, val = tok.partition("=")
        fields[k] = val
    for key in ("n", "d", "alpha", "weights"):
        if key not in fields:
            raise ParseError(f"header is missing {key}=", lineno)
    try:
        out = {
            "n": int(fields["n"]),
            "d": int(fields["d"]),
            "alpha": float(fields["alpha"]),
            "weights": fields["weights"],
        }
        for key in ("p", "m1", "m2"):
            if key in fields:
                out[key] = int(fields[key])
    except ValueError as exc:
        raise ParseError(f"bad header value: {exc}", lineno) from None
    if out["n"] < 2 or out["d"] < 1:
        raise ParseError("header needs n >= 2 and d >= 1", lineno)
    return out


class _Lines:
    def __init__(self, text):
        self.lines = text.splitlines()
        self.pos = 0

    def next(self, what):
        if self.pos >= len(self.lines):
            raise ParseError(f"unexpected end of file, expected {what}", self.pos + 1)
        self.pos += 1
        return self.lines[self.pos - 1].strip(), self.pos

    def done(self):
        return all(not ln.strip() for ln in self.lines[self.pos :])

    def ints(self, count, what):
        out = []
        for _ in range(count):
            s, ln = self.next(what)
            try:
                out.append(int(s))
            except ValueError:
                raise ParseError(f"expected an integer {what}, got {s!r}", ln) from None
        return out

    def reals(self, count, what):
        out = []
        for _ in range(count):
            s, ln = self.next(what)
            try:
                out.append(float(s))
            except ValueError:
                raise ParseError(f"expected a real {what}, got {s!r}", ln) from None
        return np.array(out)

    def expect(self, label):
        s, ln = self.next(label)
        if s != label:
            raise ParseError(f"expected {label!r}, got {s!r}", ln)


def parse_vector(text: str, expect_weights: WeightModel = None):
    """Inverse of :func:`format_vector`; optionally checks the weight hash."""
    from .cbc import EmbeddedResult, GeneratingVector

    lines = _Lines(text)
    magic, ln = lines.next("header")
    if magic != MAGIC:
        raise ParseError(f"not a generating-vector file (expected {MAGIC!r})", ln)
    head = _parse_header(*lines.next("parameter line"))
    d, n = head["d"], head["n"]
    z = lines.ints(d, "component")
    for zj in z:
        if not 1 <= zj < n:
            raise ParseError(f"component {zj} outside 1..n-1", 2)
    if expect_weights is not None and expect_weights.digest() != head["weights"]:
        raise WeightMismatchError(
            f"vector was built for weights {head['weights']}, "
            f"configuration has {expect_weights.digest()}"
        )
    if "p" in head:
        p, m1, m2 = head["p"], head["m1"], head["m2"]
        if p**m2 != n:
            raise ParseError("embedded header needs n = p^m2", 2)
        lines.expect("x_values")
        x = lines.reals(d, "X value")
        t_emb = {}
        for m in range(m1, m2 + 1):
            lines.expect(f"t_embedded m={m}")
            t_emb[m] = lines.reals(d, "T value")
        baselines = {}
        for m in range(m1, m2 + 1):
            lines.expect(f"baseline m={m}")
            zs, ts = [], []
            for _ in range(d):
                s, ln = lines.next("baseline row")
                parts = s.split()
                try:
                    zs.append(int(parts[0]))
                    ts.append(float(parts[1]))
                except (ValueError, IndexError):
                    raise ParseError(f"expected 'z T', got {s!r}", ln) from None
            baselines[m] = GeneratingVector(p**m, zs, ts, head["alpha"], head["weights"])
        return EmbeddedResult(p, m1, m2, tuple(z), x, baselines, t_emb, head["alpha"], head["weights"])
    t = np.full(d, np.nan)
    if not lines.done():
        lines.expect("t_values")
        t = lines.reals(d, "T value")
    return GeneratingVector(n, z, t, head["alpha"], head["weights"])


def read_vector(path, expect_weights: WeightModel = None):
    with open(path, encoding="ascii") as fh:
        return parse_vector(fh.read(), expect_weights)


# ---------------------------------------------------------------------------
# weight configuration
# ---------------------------------------------------------------------------

_WEIGHT_KEY = re.compile(r"^weight\[([0-9,\s]*)\]$")


def _floats(text, lineno):
    try:
        return [float(t) for t in text.replace(",", " ").split()]
    except ValueError:
        raise ParseError(f"expected numbers, got {text!r}", lineno) from None


def parse_weight_config(text: str, d: int = None, alpha: float = None) -> WeightModel:
    """Build a weight model from configuration text (see module docstring)."""
    entries = {}
    table = {}
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ParseError(f"expected key = value, got {line!r}", lineno)
        key, _, value = (s.strip() for s in line.partition("="))
        m = _WEIGHT_KEY.match(key)
        if m:
            idx = [int(t) for t in m.group(1).replace(",", " ").split()]
            vals = _floats(value, lineno)
            if len(vals) != 1:
                raise ParseError("a weight entry takes one value", lineno)
            table[frozenset(idx)] = vals[0]
            continue
        if key in entries:
            raise ParseError(f"duplicate key {key!r}", lineno)
        entries[key] = (value, lineno)

    try:
        if "family" in entries:
            name, lineno = entries["family"]
            if name not in NAMED_FAMILIES:
                raise ParseError(f"unknown family {name!r}", lineno)
            if d is None or alpha is None:
                raise ValidationError("family weights need d and alpha")
            return named_weight_family(NAMED_FAMILIES[name], d, alpha)
        if "kind" not in entries:
            raise ParseError("configuration needs 'family' or 'kind'", 1)
        kind, kline = entries["kind"]

        def need(key):
            if key not in entries:
                raise ParseError(f"kind {kind} needs {key!r}", kline)
            return entries[key]

        if kind == "product":
            return ProductWeights(np.array(_floats(*need("gamma"))))
        if kind == "pod":
            return PODWeights(np.array(_floats(*need("Gamma"))), np.array(_floats(*need("gamma"))))
        if kind == "spod":
            sval, sline = need("sigma")
            try:
                sigma = int(sval)
            except ValueError:
                raise ParseError("sigma must be an integer", sline) from None
            gtext, gline = need("gamma")
            rows = [_floats(r, gline) for r in gtext.split(";") if r.strip()]
            if len({len(r) for r in rows}) != 1:
                raise ParseError("all gamma rows need the same length", gline)
            return SPODWeights(sigma, np.array(_floats(*need("Gamma"))), np.array(rows))
        if kind == "explicit":
            dval, dline = need("d")
            try:
                dim = int(dval)
            except ValueError:
                raise ParseError("d must be an integer", dline) from None
            return ExplicitWeights(dim, table)
        raise ParseError(f"unknown kind {kind!r}", kline)
    except ParseError:
        raise
    except ValidationError as exc:
        raise ParseError(str(exc)) from None


def load_weights(spec: str, d: int, alpha: float) -> WeightModel:
    """Resolve a ``--weights`` argument: a family name or ``file:<path>``."""
    if spec in NAMED_FAMILIES:
        return named_weight_family(NAMED_FAMILIES[spec], d, alpha)
    if spec.startswith("file:"):
        path = spec[len("file:") :]
        try:
            with open(path, encoding="utf-8") as fh:
                text = fh.read()
        except OSError as exc:
            raise ValidationError(f"cannot read weight file {path}: {exc}") from None
        return parse_weight_config(text, d, alpha)
    raise ValidationError(
        f"unknown weights {spec!r}; use product-paper, pod-paper, spod-paper or file:<path>"
    )


# ---------------------------------------------------------------------------
# CSV
# ---------------------------------------------------------------------------


def write_csv(path_or_file, header, rows) -> None:
    """Write rows, formatting floats with 17 significant digits."""

    def cell(v):
        if isinstance(v, (float, np.floating)):
            return fmt(v)
        return v

    def emit(fh):
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(header)
        for r in rows:
            w.writerow([cell(v) for v in r])

    if hasattr(path_or_file, "write"):
        emit(path_or_file)
    else:
        with open(path_or_file, "w", encoding="ascii", newline="") as fh:
            emit(fh)
