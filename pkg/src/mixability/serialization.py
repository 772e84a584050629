"""JSON and CSV formats for specs, matrices, certificates and results."""

from __future__ import annotations

import csv
import dataclasses
import io
import json
import math
from fractions import Fraction
from typing import Any

import numpy as np

from . import _numeric as num
from .construct import GaussianMixCertificate, UniformBlockMixture
from .criteria import NormCheckReport
from .distributions import (
    BoundedBelowDensity,
    ConcaveDensity,
    DiscreteDistribution,
    Elliptical,
    FLOAT_SUM_TOL,
    MonotoneDensity,
    Normal,
    QuantileTable,
    Uniform,
    make_discrete,
)
from .exceptions import SpecError
from .lpcert import DualCertificate, JointPmf
from .rearrange import Arrangement, MatrixInstance, SolveResult, evaluate
from .riskbounds import RiskBoundReport
from .verdict import Verdict


class SchemaError(SpecError):
    """Input that parses as JSON/CSV but does not match the expected layout."""


# ---------------------------------------------------------------------------
# numbers


def _reject_duplicates(pairs):
    out = {}
    for k, v in pairs:
        if k in out:
            raise SchemaError(f"duplicate key {k!r}")
        out[k] = v
    return out


def loads(text: str):
    """JSON with exact decimals (as ``Fraction``) and duplicate keys rejected."""
    try:
        return json.loads(text, parse_float=Fraction, object_pairs_hook=_reject_duplicates)
    except json.JSONDecodeError as exc:
        raise SchemaError(f"invalid JSON at line {exc.lineno} column {exc.colno}: {exc.msg}") from exc


def parse_number(value, where: str):
    """Accept ints, decimals, ``"p/q"`` strings and ``{"num", "den"}`` objects."""
    if isinstance(value, bool):
        raise SchemaError(f"{where}: expected a number, got a boolean")
    if isinstance(value, (int, Fraction)):
        return Fraction(value)
    if isinstance(value, float):
        if not math.isfinite(value):
            raise SchemaError(f"{where}: number must be finite")
        return value
    if isinstance(value, str):
        try:
            return Fraction(value.strip())
        except (ValueError, ZeroDivisionError):
            raise SchemaError(f"{where}: cannot read {value!r} as a number") from None
    if isinstance(value, dict) and set(value) == {"num", "den"}:
        n, d = value["num"], value["den"]
        if not all(isinstance(v, int) and not isinstance(v, bool) for v in (n, d)) or d == 0:
            raise SchemaError(f"{where}: num/den must be integers with den != 0")
        return Fraction(n, d)
    raise SchemaError(f"{where}: expected a number, got {value!r}")


def _numbers(values, where):
    if not isinstance(values, list):
        raise SchemaError(f"{where}: expected a list")
    return [parse_number(v, f"{where}[{k}]") for k, v in enumerate(values)]


# ---------------------------------------------------------------------------
# specs


_FIELDS = {
    "discrete": ({"points", "weights"}, set()),
    "uniform": ({"a", "b"}, set()),
    "monotone": ({"a", "b", "mean"}, {"direction", "quantile_table"}),
    "concave": ({"a", "b"}, {"symmetric_unimodal", "quantile_table"}),
    "floor": ({"a", "b", "density_floor"}, {"symmetric_unimodal", "quantile_table"}),
    "normal": ({"mu", "sigma"}, set()),
    "elliptical": ({"mu", "sigma", "generator"}, set()),
    "quantile_table": ({"q", "x"}, set()),
}


def parse_spec(obj, where: str = "spec"):
    if not isinstance(obj, dict):
        raise SchemaError(f"{where}: expected an object")
    kind = obj.get("type")
    if kind not in _FIELDS:
        raise SchemaError(f"{where}.type: expected one of {sorted(_FIELDS)}, got {kind!r}")
    required, optional = _FIELDS[kind]
    keys = set(obj) - {"type"}
    missing = required - keys
    if missing:
        raise SchemaError(f"{where}: missing field(s) {sorted(missing)}")
    extra = keys - required - optional
    if extra:
        raise SchemaError(f"{where}: unknown field(s) {sorted(extra)}")

    def number(name):
        return parse_number(obj[name], f"{where}.{name}")

    def table():
        if "quantile_table" not in obj:
            return None
        return parse_spec(dict(obj["quantile_table"], type="quantile_table"), f"{where}.quantile_table")

    def flag(name):
        v = obj.get(name, False)
        if not isinstance(v, bool):
            raise SchemaError(f"{where}.{name}: expected true or false")
        return v

    try:
        if kind == "discrete":
            pts = _numbers(obj["points"], f"{where}.points")
            ws = _numbers(obj["weights"], f"{where}.weights")
            if len(pts) != len(ws):
                raise SchemaError(f"{where}: points and weights have different lengths")
            total = num.xsum(ws)
            if not (total == 1 if num.all_exact(ws) else abs(float(total) - 1) <= FLOAT_SUM_TOL):
                raise SchemaError(f"{where}.weights: weights must sum to 1, got {total}")
            return make_discrete(pts, ws)
        if kind == "uniform":
            return Uniform(number("a"), number("b"))
        if kind == "monotone":
            direction = obj.get("direction", "decreasing")
            return MonotoneDensity(number("a"), number("b"), number("mean"), direction, table())
        if kind == "concave":
            return ConcaveDensity(number("a"), number("b"), flag("symmetric_unimodal"), table())
        if kind == "floor":
            return BoundedBelowDensity(number("a"), number("b"), number("density_floor"),
                                       flag("symmetric_unimodal"), table())
        if kind == "normal":
            return Normal(number("mu"), number("sigma"))
        if kind == "elliptical":
            gen = obj["generator"]
            if not isinstance(gen, str):
                raise SchemaError(f"{where}.generator: expected a string")
            return Elliptical(number("mu"), number("sigma"), gen)
        return QuantileTable(tuple(_numbers(obj["q"], f"{where}.q")),
                             tuple(_numbers(obj["x"], f"{where}.x")))
    except SchemaError:
        raise
    except SpecError as exc:
        raise SchemaError(f"{where}: {exc}") from None


def _float_fields(spec):
    if isinstance(spec, DiscreteDistribution):
        return make_discrete([float(x) for x in spec.points], [float(w) for w in spec.weights])
    changes = {}
    for f in dataclasses.fields(spec):
        v = getattr(spec, f.name)
        if num.is_exact(v):
            changes[f.name] = float(v)
        elif isinstance(v, tuple):
            changes[f.name] = tuple(float(x) for x in v)
        elif isinstance(v, QuantileTable):
            changes[f.name] = _float_fields(v)
    return dataclasses.replace(spec, **changes)


def parse_specs(text: str, mode: str = "auto") -> tuple:
    """Specs from a JSON list (or a single object) and the arithmetic mode used.

    ``mode`` is ``"auto"`` (rational unless a normal/elliptical spec forces
    floats), ``"rational"`` or ``"float"``.
    """
    data = loads(text)
    if isinstance(data, dict):
        data = [data]
    if not isinstance(data, list) or not data:
        raise SchemaError("expected a non-empty list of spec objects")
    specs = [parse_spec(obj, f"specs[{k}]") for k, obj in enumerate(data)]
    float_only = any(isinstance(s, (Normal, Elliptical)) for s in specs)
    if mode == "rational" and float_only:
        raise SchemaError("normal and elliptical specs cannot be handled in rational mode")
    resolved = "float" if mode == "float" or float_only else "rational"
    if resolved == "float":
        specs = [_float_fields(s) for s in specs]
    return specs, resolved


def parse_matrix_csv(text: str, mode: str = "auto") -> MatrixInstance:
    """``m`` rows by ``n`` columns; a first row that is not numeric is a header."""
    rows = [r for r in csv.reader(io.StringIO(text)) if any(c.strip() for c in r)]
    if not rows:
        raise SchemaError("matrix file is empty")

    def numeric(cell):
        try:
            Fraction(cell.strip())
            return True
        except (ValueError, ZeroDivisionError):
            return False

    if not all(numeric(c) for c in rows[0]):
        rows = rows[1:]
    if not rows:
        raise SchemaError("matrix file has a header but no data")
    width = len(rows[0])
    values = []
    for i, r in enumerate(rows, start=1):
        if len(r) != width:
            raise SchemaError(f"row {i}: expected {width} cells, got {len(r)}")
        row = []
        for j, cell in enumerate(r):
            try:
                v = Fraction(cell.strip())
            except (ValueError, ZeroDivisionError):
                raise SchemaError(f"row {i} column {j + 1}: {cell!r} is not a number") from None
            row.append(float(v) if mode == "float" else v)
        values.append(row)
    return MatrixInstance(np.array(values, dtype=object))


# ---------------------------------------------------------------------------
# output


def to_json(obj) -> Any:
    """Recursively convert results to JSON-ready values; exact rationals stay exact."""
    if isinstance(obj, Verdict):
        return {"status": obj.status.value, "reason": obj.reason,
                "certificate": to_json(obj.certificate), "diagnostics": to_json(obj.diagnostics)}
    if isinstance(obj, SolveResult):
        return solve_result_json(obj)
    if isinstance(obj, JointPmf):
        return {"kind": "joint_pmf", "K": to_json(obj.K),
                "grid": to_json([list(g) for g in obj.grid]), "masses": to_json(list(obj.masses))}
    if isinstance(obj, DualCertificate):
        return {"kind": "dual_certificate", "K": to_json(obj.K),
                "functions": [[{"x": to_json(x), "f": to_json(v)} for x, v in sorted(f.items())]
                              for f in obj.functions]}
    if isinstance(obj, UniformBlockMixture):
        return {"kind": "uniform_block_mixture", "center": to_json(obj.center),
                "blocks": [{"vector": to_json(list(v)), "weight": to_json(w)} for v, w in obj.blocks]}
    if isinstance(obj, GaussianMixCertificate):
        return {"kind": "gaussian", "mus": to_json(list(obj.mus)), "sigmas": to_json(list(obj.sigmas)),
                "corr": to_json(obj.corr.tolist()), "diagnostics": to_json(obj.diagnostics)}
    if isinstance(obj, NormCheckReport):
        return {"kind": "norm_check", "K": to_json(obj.K), "p_grid": to_json(list(obj.p_grid)),
                "splits": to_json([list(s) for s in obj.splits]), "t_grid": to_json(list(obj.t_grid)),
                "homogeneous": obj.homogeneous,
                "violations": [to_json(dataclasses.asdict(v)) for v in obj.violations]}
    if isinstance(obj, RiskBoundReport):
        return {"side": obj.side, "p": to_json(obj.p), "phi": to_json(obj.phi),
                "estimate": to_json(obj.estimate), "sharp": obj.sharp, "N": obj.N,
                "epsilon": to_json(obj.epsilon), "diagnostics": to_json(obj.diagnostics)}
    if isinstance(obj, DiscreteDistribution):
        return {"type": "discrete", "points": to_json(list(obj.points)),
                "weights": to_json(list(obj.weights))}
    if isinstance(obj, dict):
        return {str(k): to_json(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [to_json(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return to_json(obj.tolist())
    return num.jsonable(obj)


def solve_result_json(res: SolveResult) -> dict:
    diag = {k: v for k, v in res.diagnostics.items() if k != "histories"}
    return {
        "kind": "arrangement",
        "objective": res.objective,
        "T": to_json(res.T),
        "score": to_json(res.score),
        "lower_bound": to_json(res.lower_bound),
        "exact_mix": res.exact_mix,
        "row_sums": to_json(list(res.row_sums)),
        "perms": [list(p) for p in res.arrangement.perms],
        "matrix": to_json(res.instance.values.tolist()),
        "method": res.method,
        "diagnostics": to_json(diag),
    }


def dumps(obj) -> str:
    return json.dumps(obj, indent=2, allow_nan=False) + "\n"


# ---------------------------------------------------------------------------
# certificates back from JSON


def parse_certificate(obj):
    """Inverse of :func:`to_json` for the certificate kinds that can be sampled."""
    for key in ("result", "verdict"):
        if isinstance(obj, dict) and key in obj and "kind" not in obj:
            obj = obj[key]
    if isinstance(obj, dict) and "certificate" in obj and "kind" not in obj:
        obj = obj["certificate"]
    if not isinstance(obj, dict) or "kind" not in obj:
        raise SchemaError("expected a certificate object with a 'kind' field")
    kind = obj["kind"]
    try:
        if kind == "arrangement":
            inst = MatrixInstance(np.array(
                [[parse_number(v, "matrix") for v in row] for row in obj["matrix"]], dtype=object))
            return evaluate(inst, Arrangement(tuple(tuple(p) for p in obj["perms"])),
                            obj.get("objective", "minimax"))
        if kind == "joint_pmf":
            return JointPmf(parse_number(obj["K"], "K"),
                            tuple(tuple(parse_number(v, "grid") for v in g) for g in obj["grid"]),
                            tuple(parse_number(v, "masses") for v in obj["masses"]))
        if kind == "uniform_block_mixture":
            return UniformBlockMixture(
                tuple((tuple(parse_number(v, "vector") for v in b["vector"]),
                       parse_number(b["weight"], "weight")) for b in obj["blocks"]),
                parse_number(obj["center"], "center"))
        if kind == "gaussian":
            return GaussianMixCertificate(tuple(float(parse_number(v, "mus")) for v in obj["mus"]),
                                          tuple(float(parse_number(v, "sigmas")) for v in obj["sigmas"]),
                                          np.array(obj["corr"], dtype=float))
    except (KeyError, TypeError) as exc:
        raise SchemaError(f"malformed {kind} certificate: {exc}") from None
    raise SchemaError(f"cannot sample from certificate kind {kind!r}")


def samples_csv(rows) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow([f"x{j + 1}" for j in range(rows.shape[1] if len(rows) else 0)])
    for r in rows:
        writer.writerow([_cell(v) for v in r])
    return buf.getvalue()


def _cell(v):
    if isinstance(v, Fraction):
        return str(v.numerator) if v.denominator == 1 else f"{v.numerator}/{v.denominator}"
    return repr(float(v))
