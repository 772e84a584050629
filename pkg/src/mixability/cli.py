"""``mix`` command line.

Exit codes: 0 mixable or solved, 1 not mixable, 2 unknown, 3 usage error,
4 budget exceeded, 5 I/O or schema error, 6 certificate failed ``--verify``.
"""

from __future__ import annotations

import argparse
import hashlib
import os
import sys
import tempfile
import time
from fractions import Fraction
from typing import Optional, Sequence

from . import __version__
from . import _numeric as num
from .construct import (
    GaussianMixCertificate,
    UniformBlockMixture,
    discrete_cm_decompose,
    gaussian_joint_mix,
    sample_joint_mix,
)
from .criteria import decide, norm_check
from .distributions import DiscreteDistribution, make_discrete
from .exceptions import BudgetExceeded, InexactInputError, SpecError
from .lpcert import DualCertificate, JointPmf, jm_lp_decide, verify_dual, verify_primal
from .rearrange import SolveResult, brute_force, evaluate, jm_from_matrix, solve
from .riskbounds import bvar_estimate, wvar_estimate
from .serialization import (
    SchemaError,
    dumps,
    loads,
    parse_certificate,
    parse_matrix_csv,
    parse_number,
    parse_specs,
    samples_csv,
    to_json,
)
from .verdict import Verdict, unknown

EXIT_OK, EXIT_NOT_MIXABLE, EXIT_UNKNOWN = 0, 1, 2
EXIT_USAGE, EXIT_BUDGET, EXIT_IO, EXIT_VERIFY = 3, 4, 5, 6


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(message)


# ---------------------------------------------------------------------------
# helpers


def _read(path: str) -> bytes:
    try:
        with open(path, "rb") as fh:
            return fh.read()
    except OSError as exc:
        raise OSError(f"cannot read {path}: {exc.strerror}") from None


def _decode(data: bytes, path: str) -> str:
    try:
        return data.decode("utf-8")
    except UnicodeDecodeError:
        raise SchemaError(f"{path} is not UTF-8 text") from None


def _write_atomic(path: str, text: str):
    directory = os.path.dirname(os.path.abspath(path))
    fd, tmp = tempfile.mkstemp(dir=directory, prefix=".mix-", suffix=".tmp")
    try:
        with os.fdopen(fd, "w", encoding="utf-8", newline="") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def _mode(args) -> str:
    if args.rational and args.float:
        raise UsageError("--rational and --float are mutually exclusive")
    return "rational" if args.rational else "float" if args.float else "auto"


def _budget(args, default):
    if args.budget is not None:
        if args.budget < 1:
            raise UsageError("--budget must be positive")
        return args.budget
    return num.env_budget(default)


def _number(text: str, name: str):
    try:
        return parse_number(text, name)
    except SchemaError as exc:
        raise UsageError(str(exc)) from None


def _csv_numbers(text: str, name: str) -> list:
    out = []
    for part in text.split(","):
        part = part.strip()
        if part.lower() in ("inf", "infinity"):
            out.append(part.lower())
        elif part:
            out.append(_number(part, name))
    if not out:
        raise UsageError(f"{name} needs at least one value")
    return out


def _verdict_code(v: Verdict) -> int:
    return v.status.exit_code


# ---------------------------------------------------------------------------
# certificate self-checks


def _margins_of(pmf: JointPmf) -> list:
    if any(m < 0 for m in pmf.masses) or not pmf.grid:
        return [make_discrete([0], [1])] * max(pmf.n, 1)
    return [make_discrete([g[i] for g in pmf.grid], list(pmf.masses)) for i in range(pmf.n)]


def _verify(cert, discretes=None, target=None) -> Optional[str]:
    """Reason for a failed re-validation, or ``None``."""
    if cert is None:
        return None
    if isinstance(cert, JointPmf):
        if discretes is None:
            # margins unknown: check the pmf against its own margins
            discretes = _margins_of(cert)
        r = verify_primal(discretes, cert)
        return None if r else r.reason
    if isinstance(cert, DualCertificate):
        r = verify_dual(discretes, cert, cert.K)
        return None if r else r.reason
    if isinstance(cert, SolveResult):
        again = evaluate(cert.instance, cert.arrangement, cert.objective)
        if list(again.row_sums) != list(cert.row_sums) or again.exact_mix != cert.exact_mix:
            return "row_sums_do_not_reproduce"
        return None
    if isinstance(cert, UniformBlockMixture):
        return cert.check(target)
    if isinstance(cert, GaussianMixCertificate):
        return cert.check()
    return None


# ---------------------------------------------------------------------------
# subcommands


def cmd_check(args, ctx):
    specs, mode = parse_specs(ctx.text(args.specs), _mode(args))
    ctx.settings["mode"] = mode
    budget = _budget(args, num.DEFAULT_BUDGET)
    lp_budget = _budget(args, num.DEFAULT_LP_BUDGET)
    v = decide(specs, args.n, budget=budget, lp_budget=lp_budget, tol=args.tolerance,
               restarts=args.restarts, seed=args.seed)
    payload = {"verdict": to_json(v)}
    marginals = specs * args.n if (args.n and len(specs) == 1) else specs
    if args.p_grid or args.t_grid:
        if not all(isinstance(s, DiscreteDistribution) for s in marginals):
            raise UsageError("--p-grid/--t-grid apply to discrete specs only")
        report = norm_check(marginals, p_grid=args.p_grid and _csv_numbers(args.p_grid, "--p-grid"),
                            t_grid=args.t_grid and _csv_numbers(args.t_grid, "--t-grid"),
                            tol=args.tolerance)
        payload["norm_check"] = to_json(report)
    if args.verify:
        ctx.verify(_verify(v.certificate, marginals))
    return _verdict_code(v), payload


def cmd_solve(args, ctx):
    inst = parse_matrix_csv(ctx.text(args.matrix), _mode(args))
    budget = _budget(args, num.DEFAULT_BUDGET)
    res = solve(inst, args.objective, args.restarts, args.seed, exact=args.exact, budget=budget)
    if args.verify:
        ctx.verify(_verify(res))
    return EXIT_OK, {"result": to_json(res)}


def cmd_oracle(args, ctx):
    inst = parse_matrix_csv(ctx.text(args.matrix), _mode(args))
    res = brute_force(inst, args.objective, _budget(args, num.DEFAULT_BUDGET))
    if args.verify:
        ctx.verify(_verify(res))
    return EXIT_OK, {"result": to_json(res)}


def cmd_decide_lp(args, ctx):
    specs, mode = parse_specs(ctx.text(args.specs), _mode(args))
    ctx.settings["mode"] = mode
    if not all(isinstance(s, DiscreteDistribution) for s in specs):
        raise SchemaError("decide-lp needs discrete specs")
    marginals = specs * args.n if (args.n and len(specs) == 1) else specs
    K = _number(args.K, "--K") if args.K is not None else None
    try:
        v = jm_lp_decide(marginals, K, budget=_budget(args, num.DEFAULT_LP_BUDGET))
    except InexactInputError as exc:
        # without exact weights no certificate can be checked; report what the heuristic saw
        try:
            heuristic = jm_from_matrix(marginals, budget=0, restarts=args.restarts,
                                       seed=args.seed).reason
        except (SpecError, BudgetExceeded) as why:
            heuristic = f"unavailable: {why}"
        v = unknown("inexact_input", detail=str(exc), heuristic=heuristic)
    if args.verify:
        ctx.verify(_verify(v.certificate, marginals))
    return _verdict_code(v), {"verdict": to_json(v)}


def cmd_decompose(args, ctx):
    specs, mode = parse_specs(ctx.text(args.spec), _mode(args))
    ctx.settings["mode"] = mode
    if len(specs) != 1 or not isinstance(specs[0], DiscreteDistribution):
        raise SchemaError("decompose needs exactly one discrete spec")
    v = discrete_cm_decompose(specs[0], args.n, budget=_budget(args, num.DEFAULT_BUDGET),
                              restarts=args.restarts, seed=args.seed)
    if args.verify:
        ctx.verify(_verify(v.certificate, [specs[0]] * args.n, specs[0]))
    return _verdict_code(v), {"verdict": to_json(v)}


def cmd_gaussian_mix(args, ctx):
    sigmas = _csv_numbers(args.sigmas, "--sigmas")
    mus = _csv_numbers(args.mus, "--mus") if args.mus else [Fraction(0)] * len(sigmas)
    if len(mus) != len(sigmas):
        raise UsageError("--mus and --sigmas need the same number of values")
    try:
        v = gaussian_joint_mix(mus, sigmas)
    except ValueError as exc:
        raise UsageError(str(exc)) from None
    if args.verify:
        ctx.verify(_verify(v.certificate))
    return _verdict_code(v), {"verdict": to_json(v)}


def cmd_sample(args, ctx):
    if args.count < 0:
        raise UsageError("--count must be nonnegative")
    cert = parse_certificate(loads(ctx.text(args.certificate)))
    if args.verify:
        ctx.verify(_verify(cert))
    rows = sample_joint_mix(cert, args.count, args.seed)
    text = samples_csv(rows)
    if args.out is None:
        ctx.raw_output = text
        return EXIT_OK, None
    _write_atomic(args.out, text)
    return EXIT_OK, {"result": {"out": args.out, "count": args.count}}


def cmd_var_bounds(args, ctx):
    specs, mode = parse_specs(ctx.text(args.specs), _mode(args))
    ctx.settings["mode"] = mode
    p = _number(args.p, "--p")
    if mode == "float":
        p = float(p)
    if not (0 < p < 1):
        raise UsageError("--p must lie in (0, 1)")
    if args.N < 2:
        raise UsageError("--N must be at least 2")
    budget = _budget(args, num.DEFAULT_LP_BUDGET)
    out = {}
    if args.side in ("worst", "both"):
        out["worst"] = to_json(wvar_estimate(specs, p, args.N, args.restarts, args.seed, budget))
    if args.side in ("best", "both"):
        out["best"] = to_json(bvar_estimate(specs, p, args.N, args.restarts, args.seed, budget))
    return EXIT_OK, {"result": out}


# ---------------------------------------------------------------------------
# parser


def build_parser() -> argparse.ArgumentParser:
    common = _Parser(add_help=False)
    g = common.add_argument_group("global options")
    g.add_argument("--tolerance", type=float, default=num.DEFAULT_TOL,
                   help="relative tolerance for float comparisons (default %(default)s)")
    g.add_argument("--budget", type=int, default=None,
                   help="enumeration budget; defaults to MIX_BUDGET or the command default")
    g.add_argument("--seed", type=int, default=0, help="random seed (default %(default)s)")
    g.add_argument("--rational", action="store_true", help="require exact rational arithmetic")
    g.add_argument("--float", action="store_true", help="convert all inputs to floats")
    g.add_argument("--verify", action="store_true", help="re-validate every emitted certificate")
    g.add_argument("--timing", action="store_true", help="include wall-clock timing in the report")

    parser = _Parser(prog="mix", description="Decide and construct joint mixes of marginal laws.")
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", metavar="COMMAND", parser_class=_Parser)

    p = sub.add_parser("check", parents=[common], help="three-valued mixability verdict")
    p.add_argument("specs")
    p.add_argument("--n", type=int, default=None, help="copies of a single spec (complete mixability)")
    p.add_argument("--p-grid", default=None, help="comma-separated norm orders, e.g. 1,2,inf")
    p.add_argument("--t-grid", default=None, help="comma-separated levels for the complete-mix check")
    p.add_argument("--restarts", type=int, default=50)
    p.set_defaults(func=cmd_check)

    for name, func, helptext in (("solve", cmd_solve, "min-max arrangement of a CSV matrix"),
                                 ("oracle", cmd_oracle, "exhaustive arrangement search")):
        p = sub.add_parser(name, parents=[common], help=helptext)
        p.add_argument("matrix")
        p.add_argument("--objective", choices=("minimax", "range", "variance"), default="minimax")
        if name == "solve":
            p.add_argument("--restarts", type=int, default=50)
            p.add_argument("--exact", action="store_true", help="brute force when within budget")
        p.set_defaults(func=func)

    p = sub.add_parser("decide-lp", parents=[common], help="exact LP decision with certificate")
    p.add_argument("specs")
    p.add_argument("--K", default=None, help="joint center (default: sum of means)")
    p.add_argument("--n", type=int, default=None)
    p.add_argument("--restarts", type=int, default=50)
    p.set_defaults(func=cmd_decide_lp)

    p = sub.add_parser("decompose", parents=[common], help="uniform block decomposition")
    p.add_argument("spec")
    p.add_argument("--n", type=int, required=True)
    p.add_argument("--restarts", type=int, default=50)
    p.set_defaults(func=cmd_decompose)

    p = sub.add_parser("gaussian-mix", parents=[common], help="correlation matrix for normal margins")
    p.add_argument("--sigmas", required=True)
    p.add_argument("--mus", default=None)
    p.set_defaults(func=cmd_gaussian_mix)

    p = sub.add_parser("sample", parents=[common], help="draw rows from a certificate")
    p.add_argument("certificate")
    p.add_argument("--count", type=int, default=1000)
    p.add_argument("--out", default=None, help="CSV output path (default: standard output)")
    p.set_defaults(func=cmd_sample)

    p = sub.add_parser("var-bounds", parents=[common], help="worst/best VaR bounds")
    p.add_argument("specs")
    p.add_argument("--p", required=True)
    p.add_argument("--N", type=int, default=1000)
    p.add_argument("--restarts", type=int, default=50)
    p.add_argument("--side", choices=("worst", "best", "both"), default="both")
    p.set_defaults(func=cmd_var_bounds)
    return parser


class _Context:
    def __init__(self, args):
        self.args = args
        self.digest = hashlib.sha256()
        self.settings = {}
        self.raw_output = None
        self.verify_failure = None

    def text(self, path):
        data = _read(path)
        self.digest.update(data)
        return _decode(data, path)

    def verify(self, problem):
        if problem is not None and self.verify_failure is None:
            self.verify_failure = problem


def run(argv: Optional[Sequence[str]] = None, stdout=None, stderr=None) -> int:
    stdout = sys.stdout if stdout is None else stdout
    stderr = sys.stderr if stderr is None else stderr
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
        if args.command is None:
            raise UsageError("missing command")
        if getattr(args, "n", None) is not None and args.n < 1:
            raise UsageError("--n must be positive")
    except UsageError as exc:
        stderr.write(f"mix: error: {exc}\n")
        return EXIT_USAGE
    except SystemExit as exc:  # --help and --version
        return int(exc.code or 0)

    ctx = _Context(args)
    started = time.perf_counter()
    try:
        code, payload = args.func(args, ctx)
    except UsageError as exc:
        stderr.write(f"mix: error: {exc}\n")
        return EXIT_USAGE
    except BudgetExceeded as exc:
        stderr.write(f"mix: budget exceeded: {exc}\n")
        return EXIT_BUDGET
    except (OSError, SchemaError) as exc:
        stderr.write(f"mix: input error: {exc}\n")
        return EXIT_IO
    except (SpecError, ValueError, TypeError) as exc:
        stderr.write(f"mix: input error: {exc}\n")
        return EXIT_IO

    if ctx.verify_failure is not None:
        stderr.write(f"mix: certificate failed verification: {ctx.verify_failure}\n")
        code = EXIT_VERIFY
    if ctx.raw_output is not None:
        stdout.write(ctx.raw_output)
        return code
    report = {
        "command": args.command,
        "argv": list(argv) if argv is not None else sys.argv[1:],
        "version": __version__,
        "inputs_digest": ctx.digest.hexdigest(),
        "seed": args.seed,
        "settings": to_json(dict(tolerance=args.tolerance, budget=args.budget,
                                 budget_env=os.environ.get("MIX_BUDGET"), **ctx.settings)),
        "verified": bool(args.verify) and ctx.verify_failure is None,
        "exit_code": code,
    }
    report.update(payload or {})
    if args.timing:
        report["timing_seconds"] = round(time.perf_counter() - started, 6)
    stdout.write(dumps(report))
    return code


def main(argv: Optional[Sequence[str]] = None) -> int:
    sys.exit(run(argv))
