"""``mfot`` command line.

Exit codes: 0 success, 1 domain error (infeasible input, budget, failed
invariant), 2 configuration or usage error. With ``--json-errors`` every error
is also written to stderr as one JSON object.
"""
import argparse
import json
import os
import sys
from pathlib import Path

from . import __version__
from .config import ConfigError, load_config
from .costs import parse_cost
from .definetti import Mixture, df_lift, df_tv_bound_check
from .experiments import run_experiment
from .fourier import cost_spectrum, variance_decomposition
from .io import canonical_json, measure_from_dict, measure_to_dict, persist
from .lp import LpError, write_mps
from .measures import DiscreteMeasure, NBodyMeasure, PairMeasure, product
from .mmot import DEFAULT_BUDGET, MmotProblem, direct_lp, reduced_lp, solve_mmot
from .representability import is_n_representable, representability_lp
from .validation import run_validation


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(message)


def _load_json_arg(text, what):
    """A path to a JSON file, or inline JSON starting with ``{``."""
    try:
        if text.lstrip().startswith("{"):
            return json.loads(text)
        with open(text) as fh:
            return json.load(fh)
    except OSError as err:
        raise ConfigError(f"cannot read {what} file {text}: {err.strerror}") from err
    except json.JSONDecodeError as err:
        raise ConfigError(f"{what} is not valid JSON: {err}") from err


def _measure_arg(text, what, kinds):
    try:
        m = measure_from_dict(_load_json_arg(text, what))
    except (KeyError, TypeError) as err:
        raise ConfigError(f"{what}: missing or malformed field {err}") from err
    if not isinstance(m, kinds):
        raise ConfigError(f"{what}: expected {' or '.join(k.__name__ for k in kinds)}, got {type(m).__name__}")
    return m


def _write_json(path, obj):
    if path:
        Path(path).parent.mkdir(parents=True, exist_ok=True)
        Path(path).write_text(canonical_json(obj))


def _emit(obj, args):
    print(json.dumps(json.loads(canonical_json(obj)), indent=2, sort_keys=True) if args.json else _human(obj))


def _human(obj):
    return "\n".join(f"{k}: {v}" for k, v in obj.items() if not isinstance(v, (list, dict)))


# -- subcommands ------------------------------------------------------------------


def cmd_solve(args):
    mu = _measure_arg(args.mu, "--mu", (DiscreteMeasure,))
    cost = parse_cost(args.cost)
    prob = MmotProblem(mu, args.n, cost, args.formulation)
    if args.mps:
        lp = (reduced_lp if args.formulation == "reduced" else direct_lp)(mu, args.n, cost)
        write_mps(lp, args.mps)
    rep = solve_mmot(prob, budget=args.budget)
    out = {"F_N": rep.value, "n": rep.n, "formulation": rep.formulation, "status": rep.status,
           "sce": rep.sce, "cost": cost.spec(), "lp": rep.lp_stats}
    if rep.measure is not None:
        out["measure"] = measure_to_dict(rep.measure)
    if rep.witness is not None:
        out["witness"] = measure_to_dict(rep.witness)
    _write_json(args.out, out)
    _emit(out, args)
    return 0


def cmd_repcheck(args):
    mu2 = _measure_arg(args.mu2, "--mu2", (PairMeasure, NBodyMeasure))
    if args.mps:
        write_mps(representability_lp(mu2, args.n), args.mps)
    ans = is_n_representable(mu2, args.n, budget=args.budget)
    out = {"verdict": ans.verdict, "n": args.n}
    if ans.feasible:
        out["witness"] = measure_to_dict(ans.witness)
        out["residual"] = ans.residual
    else:
        out["certificate"] = ans.certificate
        out["certificate_verified"] = ans.certificate_verified
        out["farkas_margin"] = ans.farkas_margin
        out["numerically_marginal"] = ans.numerically_marginal
    _write_json(args.out, out)
    if args.json:
        _emit(out, args)
    else:
        print(ans.verdict)
        if not ans.feasible:
            print(f"certificate verified: {ans.certificate_verified}, margin {ans.farkas_margin:.6g}")
    return 0


def cmd_lift(args):
    if args.gamma:
        gamma = _measure_arg(args.gamma, "--gamma", (NBodyMeasure,))
    else:
        mu = _measure_arg(args.product_of, "--product-of", (DiscreteMeasure,))
        gamma = product(mu, args.n)
    chk = df_tv_bound_check(gamma)
    out = {"tv": chk.tv, "event_tv": chk.event_tv, "bound": chk.bound, "marginal_tv": chk.marginal_tv,
           "passed": chk.passed, "n": gamma.n}
    if args.out:
        _write_json(args.out, {**out, "lift": measure_to_dict(df_lift(gamma))})
    _emit(out, args)
    return 0 if chk.passed else 1


def cmd_fourier(args):
    nu = _measure_arg(args.mixture, "--mixture", (Mixture,))
    cost = parse_cost(args.cost)
    dec = variance_decomposition(nu, cost, images=args.images)
    if args.spectrum_csv:
        cost_spectrum(cost, nu.grid, args.images).to_csv(args.spectrum_csv)
    out = {"mean_field": dec.mean_field, "variance_term": dec.variance_term, "c_infinity": dec.c_infinity,
           "mean_field_spectral": dec.mean_field_spectral, "identity_error": dec.identity_error}
    _write_json(args.out, out)
    _emit(out, args)
    return 0


def cmd_experiment(args):
    cfg = load_config(args.config)
    cfg = cfg.with_overrides(seed=args.seed, budget=args.budget, jobs=args.jobs, output_dir=args.output_dir)
    if not cfg.experiments:
        raise ConfigError("config has no [[experiment]] entries")
    names = [e.name for e in cfg.experiments]
    if len(set(names)) != len(names):
        raise ConfigError("experiment names must be unique")
    failed = []
    for spec in cfg.experiments:
        res = run_experiment(spec, budget=cfg.budget, tol=cfg.tolerances, jobs=cfg.jobs, seed=cfg.seed)
        man = persist(_Filtered(res, cfg.formats), Path(cfg.output_dir) / spec.name)
        status = "ok" if res.passed else "FAILED " + ",".join(res.failed_checks)
        print(f"{spec.name}: {status} ({len(man['files'])} files in {Path(cfg.output_dir) / spec.name})")
        for f in res.flags:
            print(f"  flag: {f}")
        if not res.passed:
            failed.append(spec.name)
    return 1 if failed else 0


class _Filtered:
    """Restrict a result's persisted outputs to the configured formats."""

    def __init__(self, res, formats):
        self.res, self.formats = res, formats
        self.timings = res.timings

    def to_dict(self):
        return self.res.to_dict()

    def tables(self):
        return self.res.tables() if "csv" in self.formats else {}

    def plots(self):
        return self.res.plots() if "svg" in self.formats else {}


def cmd_validate(args):
    results = run_validation(seed=args.seed if args.seed is not None else 0)
    for r in results:
        print(f"{'PASS' if r.passed else 'FAIL'} {r.name}: {r.detail}")
    return 0 if all(r.passed for r in results) else 1


# -- parser ----------------------------------------------------------------------


def build_parser():
    common = _Parser(add_help=False)
    common.add_argument("--json-errors", action="store_true", help="machine-readable errors on stderr")
    common.add_argument("--jobs", type=int, default=None, help="worker processes (default: all cores)")
    common.add_argument("--seed", type=int, default=None)
    common.add_argument("--budget", type=int, default=None, help=f"LP variable limit (default {DEFAULT_BUDGET})")
    common.add_argument("--json", action="store_true", help="print results as JSON")

    p = _Parser(prog="mfot", description="Symmetric N-body optimal transport with pair costs.")
    p.add_argument("--version", action="version", version=f"mfot {__version__}")
    sub = p.add_subparsers(dest="command", parser_class=_Parser)

    s = sub.add_parser("solve", parents=[common], help="solve one N-marginal problem")
    s.add_argument("--mu", required=True, help="one-body measure (JSON file or inline JSON)")
    s.add_argument("--cost", required=True, help='e.g. "gaussian:s=0.7071"')
    s.add_argument("--n", type=int, required=True)
    s.add_argument("--formulation", choices=["direct", "reduced"], default="direct")
    s.add_argument("--out", default="report.json")
    s.add_argument("--mps", help="also dump the LP in MPS format")
    s.set_defaults(func=cmd_solve)

    s = sub.add_parser("repcheck", parents=[common], help="N-representability of a pair measure")
    s.add_argument("--mu2", required=True)
    s.add_argument("--n", type=int, required=True)
    s.add_argument("--out", default="repcheck.json")
    s.add_argument("--mps")
    s.set_defaults(func=cmd_repcheck)

    s = sub.add_parser("lift", parents=[common], help="lift an exchangeable measure to a mixture")
    g = s.add_mutually_exclusive_group(required=True)
    g.add_argument("--gamma", help="N-body measure")
    g.add_argument("--product-of", help="one-body measure; lifts its N-fold product")
    s.add_argument("--n", type=int, default=None)
    s.add_argument("--out")
    s.set_defaults(func=cmd_lift)

    s = sub.add_parser("fourier", parents=[common], help="variance decomposition of a mixture on a torus")
    s.add_argument("--mixture", required=True)
    s.add_argument("--cost", required=True)
    s.add_argument("--images", type=int, default=0)
    s.add_argument("--spectrum-csv")
    s.add_argument("--out")
    s.set_defaults(func=cmd_fourier)

    s = sub.add_parser("experiment", parents=[common], help="run the experiments in a config file")
    s.add_argument("config")
    s.add_argument("--output-dir")
    s.set_defaults(func=cmd_experiment)

    s = sub.add_parser("validate", parents=[common], help="run the invariant suite")
    s.set_defaults(func=cmd_validate)
    return p


def _fail(code, kind, err, json_errors):
    msg = str(err)
    print(f"mfot: {kind}: {msg}", file=sys.stderr)
    if json_errors:
        print(json.dumps({"error": kind, "type": type(err).__name__, "message": msg, "exit_code": code},
                         sort_keys=True), file=sys.stderr)
    return code


def main(argv=None):
    argv = list(sys.argv[1:] if argv is None else argv)
    json_errors = "--json-errors" in argv
    try:
        args = build_parser().parse_args(argv)
        if not getattr(args, "command", None):
            raise UsageError("a subcommand is required")
        if args.command == "lift" and args.product_of and args.n is None:
            raise UsageError("--product-of needs --n")
        if args.budget is None:
            args.budget = DEFAULT_BUDGET if args.command != "experiment" else None
        if args.command != "experiment" and args.jobs is None:
            args.jobs = os.cpu_count()
        return args.func(args)
    except (UsageError, ConfigError) as err:
        return _fail(2, "config", err, json_errors)
    except (ValueError, LpError, ArithmeticError, OSError) as err:
        return _fail(1, "domain", err, json_errors)


if __name__ == "__main__":
    sys.exit(main())
