# src/cli.py
# Command-line front end: argument parsing, run configuration, command
# dispatch and the mapping from library errors to exit codes.

import argparse
import logging
import sys
import traceback
from dataclasses import dataclass, field
from math import factorial

import config
import errors
import file_handler
import harmonic
import local_factors
import theta
from anticyclo import Direction
from check_worker import CheckWorker
from distribution import l_invariant, tate_parameter
from lang_handler import load_language, tr
from padic_core import LogBranch, PadicNumber, branch_log, check_prime

logger = logging.getLogger(__name__)

class ArgumentParser(argparse.ArgumentParser):
    # argparse exits with status 2 on bad flags; usage errors here are exit 3
    def error(self, message):
        raise errors.UsageError(message)


@dataclass
class RunConfig:
    command: str
    p: int | None
    precision: int
    depth: int
    series_order: int
    branches: list = field(default_factory=list)
    inputs: dict = field(default_factory=dict)
    output_format: str = config.DEFAULT_FORMAT
    output: str | None = None
    workers: int = 1
    language: str = config.DEFAULT_LANGUAGE

    def validate(self):
        if self.precision < 2:
            raise errors.UsageError(f"precision must be at least 2, got {self.precision}")
        if self.depth < 1:
            raise errors.UsageError(f"depth must be at least 1, got {self.depth}")
        if self.output_format not in config.OUTPUT_FORMATS:
            raise errors.UsageError(f"unknown output format {self.output_format!r}")
        if self.workers < 1:
            raise errors.UsageError("workers must be at least 1")
        if self.p is not None:
            try:
                check_prime(self.p)
            except errors.ValidationError as e:
                raise errors.UsageError(e.message) from e

    def echo(self) -> dict:
        return {
            "command": self.command,
            "p": self.p,
            "precision": self.precision,
            "depth": self.depth,
            "series_order": self.series_order,
            "branch": list(self.branches),
            "inputs": {k: v for k, v in sorted(self.inputs.items()) if v is not None},
            "format": self.output_format,
        }


def build_parser(strings: dict) -> ArgumentParser:
    common = ArgumentParser(add_help=False)
    common.add_argument("--format", choices=config.OUTPUT_FORMATS, help=tr(strings, "help_format"))
    common.add_argument("--output", metavar="FILE", help=tr(strings, "help_output"))
    common.add_argument("--verbose", action="store_true", help=tr(strings, "help_verbose"))
    common.add_argument("--workers", type=int, help=tr(strings, "help_workers"))
    common.add_argument("--depth", type=int, help=tr(strings, "help_depth"))
    common.add_argument("--precision", type=int, help=tr(strings, "help_precision"))
    common.add_argument("--branch", action="append", default=[], metavar="SPEC", help=tr(strings, "help_branch"))
    common.add_argument("--p", type=int, help=tr(strings, "help_p"))

    parser = ArgumentParser(prog=config.APP_NAME, description=tr(strings, "app_description"))
    parser.add_argument("--version", action="version", version=f"{config.APP_NAME} {config.APP_VERSION}")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=ArgumentParser)

    cmd = sub.add_parser("linvariant", parents=[common], help=tr(strings, "help_linvariant"))
    source = cmd.add_mutually_exclusive_group(required=True)
    source.add_argument("--cocycle", metavar="FILE", help=tr(strings, "help_cocycle"))
    source.add_argument("--j", metavar="PADIC", help=tr(strings, "help_j"))

    cmd = sub.add_parser("tate-q", parents=[common], help=tr(strings, "help_tate_q"))
    cmd.add_argument("--j", metavar="PADIC", required=True, help=tr(strings, "help_j"))

    cmd = sub.add_parser("theta", parents=[common], help=tr(strings, "help_theta"))
    cmd.add_argument("--data", metavar="FILE", required=True, help=tr(strings, "help_data"))
    cmd.add_argument("--level", help=tr(strings, "help_level"))

    cmd = sub.add_parser("lfun-eval", parents=[common], help=tr(strings, "help_lfun_eval"))
    cmd.add_argument("--data", metavar="FILE", required=True, help=tr(strings, "help_data"))
    cmd.add_argument("--chi", metavar="FILE", help=tr(strings, "help_chi"))
    cmd.add_argument("--level", help=tr(strings, "help_level"))

    cmd = sub.add_parser("lfun-deriv", parents=[common], help=tr(strings, "help_lfun_deriv"))
    cmd.add_argument("--data", metavar="FILE", required=True, help=tr(strings, "help_data"))
    cmd.add_argument("--chi", metavar="FILE", help=tr(strings, "help_chi"))
    cmd.add_argument("--order", type=int, help=tr(strings, "help_order"))
    cmd.add_argument("--direction", metavar="FILE", help=tr(strings, "help_direction"))

    cmd = sub.add_parser("local-factor", parents=[common], help=tr(strings, "help_local_factor"))
    cmd.add_argument("--params", metavar="FILE", required=True, help=tr(strings, "help_params"))
    cmd.add_argument("--case", help=tr(strings, "help_case"))

    cmd = sub.add_parser("check", parents=[common], help=tr(strings, "help_check"))
    cmd.add_argument("suites", nargs="*", default=["all"], help=tr(strings, "help_suites"))
    return parser


def _first(*values):
    return next(v for v in values if v is not None)


def resolve_config(args, environ=None, cfg_path: str | None = None) -> RunConfig:
    # CLI flag > environment > config.toml > built-in default
    cfg = config.load_user_config(cfg_path)
    env_digits = config.env_digits(environ)
    precision = _first(args.precision, env_digits, cfg["digits"])
    inputs = {name: getattr(args, name, None) for name in ("cocycle", "j", "data", "chi", "direction", "params")}
    run = RunConfig(
        command=args.command,
        p=args.p,
        precision=precision,
        depth=_first(args.depth, cfg["depth"]),
        series_order=_first(getattr(args, "order", None), cfg["series_order"]),
        branches=list(args.branch),
        inputs=inputs,
        output_format=args.format or cfg["format"],
        output=args.output,
        workers=_first(args.workers, cfg["workers"]),
        language=cfg["language"],
    )
    run.validate()
    return run


def _branches(run: RunConfig, p: int, count: int = 1) -> list[LogBranch]:
    # One branch per exceptional prime; a single flag is shared by all of them
    if not run.branches:
        raise errors.UsageError("a log branch is required: --branch iwasawa or --branch u:<padic>")
    if len(run.branches) not in (1, count):
        raise errors.UsageError(f"expected 1 or {count} --branch flags, got {len(run.branches)}")
    specs = run.branches if len(run.branches) == count else run.branches * count
    return [LogBranch.parse(spec, p, run.precision) for spec in specs]


def _parse_j(run: RunConfig) -> PadicNumber:
    j = PadicNumber.parse(run.inputs["j"], run.p, run.precision)
    if run.p is not None and j.p != run.p:
        raise errors.PrimeMismatch(f"j is over p={j.p}, not {run.p}")
    run.p = j.p
    return j


def _tate_report(run: RunConfig, j: PadicNumber, branch: LogBranch | None) -> dict:
    q = tate_parameter(j)
    report = {"j": j, "q": q, "ord": q.v, "precision": q.N}
    if branch is not None:
        log_q = branch_log(branch, q)
        report["log"] = log_q
        report["ratio"] = log_q / q.v
    return report


# --- commands ---

def cmd_linvariant(run: RunConfig) -> dict:
    if run.inputs.get("j") is not None:
        j = _parse_j(run)
        branch = _branches(run, j.p)[0]
        report = _tate_report(run, j, branch)
        report["l_invariant"] = report["ratio"]
        return report
    c = file_handler.load_cocycle(run.inputs["cocycle"], run.precision)
    if run.p is not None and run.p != c.p:
        raise errors.PrimeMismatch(f"cocycle is over p={c.p}, not {run.p}")
    run.p = c.p
    check = harmonic.validate(c)
    if not check.ok:
        raise errors.InvalidCocycle("the cocycle fails harmonicity", check.as_list())
    if c.gamma is None:
        raise errors.InvalidFile("the cocycle file carries no qtilde, so there is no gamma to integrate against")
    branch = _branches(run, c.p)[0]
    result = l_invariant(c, c.gamma, branch, run.depth, workers=run.workers)
    return {
        "l_invariant": result.value,
        "digits": result.digits,
        "depth": result.depth,
        "gap_digits": result.gap_digits,
        "bound_digits": result.bound_digits,
    }


def cmd_tate_q(run: RunConfig) -> dict:
    j = _parse_j(run)
    branch = _branches(run, j.p)[0] if run.branches else None
    return _tate_report(run, j, branch)


def _load_data(run: RunConfig):
    data, cocycles = file_handler.load_gross_data(run.inputs["data"], run.precision)
    problems = data.validate()
    if problems:
        raise errors.ValidationError("Gross-point data fails the trace relations", problems)
    run.p = data.p
    return data, cocycles


def cmd_theta(run: RunConfig, level: str | None = None) -> dict:
    data, _ = _load_data(run)
    levels = [file_handler.parse_level(level)] if level else data.levels()
    rows = []
    for n in levels:
        element = theta.theta_element(data, n)
        G = data.tower.group(n)
        for x in G.elements():
            if x in element.coeffs:
                rows.append([file_handler.level_label(n), G.label_of(x), element.coeffs[x]])
    return {
        "provenance": data.provenance,
        "columns": ["level", "element", "theta"],
        "rows": rows,
    }


def cmd_lfun_eval(run: RunConfig, level: str | None = None) -> dict:
    data, _ = _load_data(run)
    chi = file_handler.load_character(run.inputs["chi"], data.tower) if run.inputs.get("chi") else None
    n = file_handler.parse_level(level) if level else None
    value = theta.script_L(data, chi, n)
    return {"theta": value, "L": value * value, "character": run.inputs.get("chi") or "trivial"}


def cmd_lfun_deriv(run: RunConfig) -> dict:
    data, cocycles = _load_data(run)
    rank = len(data.tower.primes)
    branches = _branches(run, data.p, rank)
    logs = theta.representative_logs(data, branches)
    if run.inputs.get("direction"):
        direction = file_handler.load_direction(run.inputs["direction"], data.p, run.precision)
    else:
        direction = Direction.parse(["1"] * rank, data.p, run.precision)
    chi = file_handler.load_character(run.inputs["chi"], data.tower) if run.inputs.get("chi") else None
    order = run.series_order
    if order < 0:
        raise errors.UsageError("series order must be >= 0")
    rows = []
    coeffs = []
    for k in range(order + 1):
        result = theta.integrate_log_power(data, chi, logs, k, direction)
        coeff = result.value / factorial(k)
        coeffs.append(coeff)
        rows.append([k, coeff, result.digits, file_handler.level_label(result.level)])
    report = {
        "columns": ["k", "coefficient", "digits", "level"],
        "rows": rows,
        "square": theta.square_series(coeffs),
    }
    if cocycles and chi is None and order >= len(cocycles) and all((a - 1).is_zero() for a in data.alpha.values()):
        lead = theta.leading_term_check(data, cocycles, branches, direction, run.depth)
        report["leading_term"] = {
            "rank": lead.rank,
            "predicted": lead.predicted,
            "main_term": lead.main_term,
            "agreement": lead.agreement,
            "main_agreement": lead.main_agreement,
            "l_invariant_digits": lead.l_digits,
            "lower_order_digits": lead.lower_order_digits,
        }
    return report


def _param(params: dict, key: str):
    if params.get(key) is None:
        raise errors.MissingParam(f"parameter {key!r} is required")
    return params[key]


def cmd_local_factor(run: RunConfig, case: str | None = None) -> dict:
    m = file_handler.load_local_params(run.inputs["params"])
    case = case or m.case
    params = m.params
    op = m.operation
    if op != "period-ratio" and op != "volume" and case is None:
        raise errors.MissingParam(f"operation {op} needs a case")
    report = {"operation": op, "case": case}
    if op == "L-factor":
        report["value"] = local_factors.local_L_factor(
            case, params.get("chi", 1), _param(params, "X"),
            params.get("mu"), params.get("mu1"), params.get("mu2"))
    elif op == "whittaker":
        report["value"] = local_factors.whittaker_value(case, int(_param(params, "n")), params)
    elif op == "zeta":
        check = local_factors.zeta_integral_check(
            case, params.get("chi", 1), _param(params, "X"), int(params.get("T", 10)),
            params, params.get("different_factor", 1))
        report.update(partial=check.partial, closed=check.closed, tail=check.tail, holds=check.holds)
    elif op == "pairing":
        report["value"] = local_factors.pairing_b_value(case, params)
    elif op == "toric":
        report["value"] = local_factors.toric_P_value(case, params)
    elif op == "volume":
        report["value"] = local_factors.volume_formula(params)
    else:
        ratio = local_factors.period_ratio_check(_param(params, "primes"))
        report.update(value=ratio.value, holds=ratio.holds)
    return report


def cmd_check(run: RunConfig, suites: list[str]) -> tuple[dict, bool]:
    worker = CheckWorker(
        suites, run.precision, run.depth, run.workers,
        on_started=lambda name, i: logger.debug("running suite %s (#%d)", name, i),
        on_error=lambda name, msg: logger.error("suite %s: %s", name, msg),
    )
    results = worker.run()
    rows = []
    for r in results:
        if r.error is not None:
            rows.append([r.suite, "(suite)", "ERROR", r.error])
        for o in r.outcomes:
            rows.append([r.suite, o.name, "ok" if o.ok else "FAIL", o.detail])
    passed = all(r.passed for r in results)
    report = {
        "columns": ["suite", "check", "result", "detail"],
        "rows": rows,
        "passed": passed,
        "suites": [r.suite for r in results],
    }
    return report, passed


# --- entry point ---

def _dispatch(run: RunConfig, args) -> tuple[dict, int]:
    if run.command == "linvariant":
        return cmd_linvariant(run), 0
    if run.command == "tate-q":
        return cmd_tate_q(run), 0
    if run.command == "theta":
        return cmd_theta(run, args.level), 0
    if run.command == "lfun-eval":
        return cmd_lfun_eval(run, args.level), 0
    if run.command == "lfun-deriv":
        return cmd_lfun_deriv(run), 0
    if run.command == "local-factor":
        return cmd_local_factor(run, args.case), 0
    report, passed = cmd_check(run, args.suites)
    return report, 0 if passed else 1


def _emit(text: str, path: str | None):
    if path:
        with open(path, "w", encoding="utf-8") as f:
            f.write(text)
    else:
        sys.stdout.write(text)


def _report_error(strings: dict, e: errors.PadicxError, verbose: bool):
    if isinstance(e, errors.UsageError):
        key = "error_usage"
    elif isinstance(e, errors.ConvergenceError):
        key = "error_convergence"
    else:
        key = "error_validation"
    print(tr(strings, key, type(e).__name__, e.message), file=sys.stderr)
    for item in e.violations:
        print(tr(strings, "error_violation", item), file=sys.stderr)
    if isinstance(e, errors.NoStabilization) and e.best is not None:
        level = list(e.level) if e.level is not None else None
        print(tr(strings, "error_best_value", e.best, e.gap, level), file=sys.stderr)
    if verbose:
        traceback.print_exc()


def main(argv=None, environ=None) -> int:
    strings = load_language(config.load_user_config()["language"])
    verbose = "--verbose" in (argv if argv is not None else sys.argv[1:])
    logging.basicConfig(
        level=logging.DEBUG if verbose else logging.WARNING,
        format="%(levelname)s %(name)s: %(message)s",
        stream=sys.stderr,
    )
    try:
        args = build_parser(strings).parse_args(argv)
        run = resolve_config(args, environ)
        report, code = _dispatch(run, args)
        report["config"] = run.echo()
        _emit(file_handler.render(report, run.output_format, tr(strings, "title_" + run.command.replace("-", "_"))),
              run.output)
        if code:
            print(tr(strings, "check_failed"), file=sys.stderr)
        return code
    except errors.PadicxError as e:
        _report_error(strings, e, verbose)
        return e.exit_code
