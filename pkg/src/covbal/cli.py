"""Command-line front end.

Exit status: 0 on success, 1 on input errors, 2 when a propensity-score
system cannot be solved (no convergence, infeasible balance, separation).
"""

from __future__ import annotations

import argparse
import sys
from dataclasses import asdict, dataclass
from typing import Optional, Sequence

from covbal import simulate
from covbal.data import Dataset, build_dataset
from covbal.diagnostics import audit_from_fits, balance_report
from covbal.errors import CovbalError, SolverError
from covbal.estimators import (
    ESTIMANDS,
    ESTIMATORS,
    estimate,
    fit_for,
    instrument_views,
    resolve_ps_method,
)
from covbal.io import dataset_from_columns, read_columns, to_json, write_csv
from covbal.propensity import SolverConfig

PS_CHOICES = ("mle", "ipt", "cbps")
EXIT_OK, EXIT_INPUT, EXIT_SOLVER = 0, 1, 2


@dataclass(frozen=True)
class RunConfig:
    input_path: str
    outcome: str
    treatment: str
    covariates: tuple
    estimand: str = "ate"
    ps: str = "ipt"
    estimator: str = "all"
    instrument: Optional[str] = None
    tol: float = 1e-9
    max_iter: int = 200
    output_format: str = "json"

    def validate(self) -> None:
        if self.estimand in ("late", "latt") and not self.instrument:
            raise CovbalError(
                f"estimand {self.estimand!r} requires an instrument (--instrument COLUMN)"
            )
        resolve_ps_method(self.estimand, self.ps)


class _Parser(argparse.ArgumentParser):
    # argparse exits with 2 on usage errors; 2 is reserved for solver failures
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_INPUT, f"{self.prog}: error: {message}\n")


def _split(values: Sequence[str]) -> tuple:
    out = []
    for v in values:
        out.extend(p.strip() for p in v.split(",") if p.strip())
    return tuple(out)


def build_report(d: Dataset, cfg: RunConfig) -> dict:
    solver = SolverConfig(tol=cfg.tol, max_iter=cfg.max_iter)
    fit1, fit0 = fit_for(d, cfg.estimand, cfg.ps, solver)
    estimators = ESTIMATORS if cfg.estimator == "all" else (cfg.estimator,)
    ests = {e: estimate(d, cfg.estimand, e, fit1, fit0) for e in estimators}

    balance_data = d if cfg.estimand in ("ate", "att") else instrument_views(d)[0]
    kind = "ate" if cfg.estimand in ("ate", "late") else "att"
    bal = balance_report(balance_data, fit1, fit0, estimand=kind)

    audit = None
    if cfg.estimator == "all":
        rep = audit_from_fits(d, cfg.estimand, fit1, fit0)
        audit = {
            "estimates": rep.estimates,
            "max_pairwise_gap": rep.max_pairwise_gap,
            "expected_equivalent": rep.expected_equivalent,
            "passed": rep.passed,
            "tolerance": rep.tolerance,
        }

    fits = {fit1.method: fit1, fit0.method: fit0}
    return {
        "estimand": cfg.estimand,
        "ps_method": resolve_ps_method(cfg.estimand, cfg.ps),
        "n": d.n,
        "n_treated": d.n_treated,
        "estimates": {
            e: {"value": r.value, "mu1": r.mu1, "mu0": r.mu0} for e, r in ests.items()
        },
        "balance": {
            "target": bal.target,
            "rows": [asdict(r) for r in bal.rows],
            "weight_sums": bal.weight_sums,
            "balance_residuals": bal.balance_residuals,
            "identity_residuals": bal.identity_residuals,
        },
        "audit": audit,
        "solver": {
            "iterations": {m: f.iterations for m, f in fits.items()},
            "moment_residual_norms": {m: f.moment_residual_norm for m, f in fits.items()},
            "tol": cfg.tol,
        },
    }


def _g6(x) -> str:
    return "-" if x is None else f"{x:.6g}"


def render_table(report: dict) -> str:
    lines = [
        f"estimand: {report['estimand']}   ps: {report['ps_method']}   "
        f"N = {report['n']}   N1 = {report['n_treated']}",
        "",
        f"{'estimator':<10}{'estimate':>14}{'mu1':>14}{'mu0':>14}",
    ]
    for name, e in report["estimates"].items():
        lines.append(f"{name:<10}{_g6(e['value']):>14}{_g6(e['mu1']):>14}{_g6(e['mu0']):>14}")
    bal = report["balance"]
    lines += [
        "",
        f"balance (target: {bal['target']} mean)",
        f"{'covariate':<12}{'treated':>12}{'control':>12}{'w.treated':>12}"
        f"{'w.control':>12}{'target':>12}",
    ]
    for r in bal["rows"]:
        lines.append(
            f"{r['name']:<12}{_g6(r['treated_mean']):>12}{_g6(r['control_mean']):>12}"
            f"{_g6(r['weighted_treated_mean']):>12}{_g6(r['weighted_control_mean']):>12}"
            f"{_g6(r['target_mean']):>12}"
        )
    ws = bal["weight_sums"]
    lines.append(
        f"weight sums: treated {_g6(ws['treated'])} (expected {_g6(ws['expected_treated'])}), "
        f"control {_g6(ws['control'])} (expected {_g6(ws['expected_control'])})"
    )
    for name, v in bal["identity_residuals"].items():
        lines.append(f"  identity {name}: {_g6(v)}")
    audit = report["audit"]
    if audit is not None:
        verdict = {True: "PASS", False: "FAIL", None: "not expected"}[audit["passed"]]
        lines += [
            "",
            f"audit: max pairwise gap {_g6(audit['max_pairwise_gap'])}, "
            f"equivalence {verdict}",
        ]
    return "\n".join(lines) + "\n"


def _add_estimation_args(p: argparse.ArgumentParser, with_estimator: bool) -> None:
    p.add_argument("--input", required=True, help="CSV file with a header row")
    p.add_argument("--outcome", required=True)
    p.add_argument("--treatment", required=True)
    p.add_argument("--instrument")
    p.add_argument(
        "--covariates", nargs="+", default=[], help="covariate columns (space or comma separated)"
    )
    p.add_argument("--estimand", choices=ESTIMANDS, default="ate")
    p.add_argument("--ps", choices=PS_CHOICES, default="ipt")
    if with_estimator:
        p.add_argument("--estimator", choices=ESTIMATORS + ("all",), default="all")
    p.add_argument("--tol", type=float, default=1e-9)
    p.add_argument("--max-iter", type=int, default=200)
    p.add_argument("--format", choices=("json", "table"), default="json")


def make_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="covbal", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)
    est = sub.add_parser("estimate", help="estimate a treatment effect")
    _add_estimation_args(est, with_estimator=True)
    aud = sub.add_parser("audit", help="compare all estimators under one weighting")
    _add_estimation_args(aud, with_estimator=False)
    sim = sub.add_parser("simulate", help="write a synthetic dataset as CSV")
    group = sim.add_mutually_exclusive_group(required=True)
    group.add_argument("--fixture", choices=("d4", "s1", "s2"))
    group.add_argument("--family-seed", type=int)
    sim.add_argument("--instrumented", action="store_true")
    sim.add_argument("--output", required=True)
    return parser


def _config(args) -> RunConfig:
    return RunConfig(
        input_path=args.input,
        outcome=args.outcome,
        treatment=args.treatment,
        covariates=_split(args.covariates),
        estimand=args.estimand,
        ps=args.ps,
        estimator=getattr(args, "estimator", "all"),
        instrument=args.instrument,
        tol=args.tol,
        max_iter=args.max_iter,
        output_format=args.format,
    )


def d4() -> Dataset:
    return build_dataset([0, 0, 1, 1], [0, 1, 0, 1], [1, 2, 3, 5], names=("x",))


def _simulate(args) -> None:
    if args.fixture == "d4":
        d = d4()
    elif args.fixture:
        d = simulate.generate(simulate.S1 if args.fixture == "s1" else simulate.S2)
    else:
        d = simulate.generate(simulate.family_spec(args.family_seed, args.instrumented))
    write_csv(d, args.output)


def render_audit(report: dict) -> str:
    audit = report["audit"]
    lines = [f"{name:<8}{_g6(v):>14}" for name, v in audit["estimates"].items()]
    verdict = {True: "PASS", False: "FAIL", None: "not expected"}[audit["passed"]]
    lines.append(f"max pairwise gap {_g6(audit['max_pairwise_gap'])}  equivalence {verdict}")
    return "\n".join(lines) + "\n"


def run(cfg: RunConfig, out=None, err=None, view: str = "report") -> int:
    """Execute one estimation; ``view="audit"`` prints only the audit section."""
    out = out or sys.stdout
    err = err or sys.stderr
    d = None
    try:
        cfg.validate()
        cols = read_columns(cfg.input_path)
        d = dataset_from_columns(
            cols, cfg.outcome, cfg.treatment, cfg.covariates, cfg.instrument
        )
        report = build_report(d, cfg)
    except SolverError as e:
        where = ""
        if e.moment_index is not None and d is not None:
            where = f" (failing moment: {d.names[e.moment_index]})"
        print(f"covbal: solver failure: {e}{where}", file=err)
        return EXIT_SOLVER
    except (CovbalError, ValueError) as e:
        print(f"covbal: error: {e}", file=err)
        return EXIT_INPUT

    if view == "audit":
        payload = dict(report["audit"], estimand=report["estimand"], ps_method=report["ps_method"])
        text = to_json(payload) if cfg.output_format == "json" else render_audit(report)
    else:
        text = to_json(report) if cfg.output_format == "json" else render_table(report)
    out.write(text)
    if report["audit"] is not None and report["audit"]["passed"] is False:
        print("covbal: warning: estimators expected to coincide do not", file=err)
    return EXIT_OK


def main(argv: Sequence[str] | None = None) -> int:
    args = make_parser().parse_args(argv)
    if args.command == "simulate":
        try:
            _simulate(args)
        except (CovbalError, OSError) as e:
            print(f"covbal: error: {e}", file=sys.stderr)
            return EXIT_INPUT
        return EXIT_OK
    return run(_config(args), view=args.command if args.command == "audit" else "report")


if __name__ == "__main__":
    sys.exit(main())
