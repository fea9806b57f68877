"""Command-line front end.

Commands write a JSON report and/or a CSV table next to ``--out`` and print
a one-line summary. Exit codes: 0 verified, 1 a violation was found,
2 usage or validation error.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import math
import sys
from pathlib import Path
from typing import Any, Optional, Sequence

import numpy as np

from . import __version__
from .bounds import (
    ORACLE_TOL,
    low_noise_exponent,
    power_check_comp_sum_sampled,
    power_check_margin_grid,
    verify_theorem_general,
    verify_theorem_low_noise,
)
from .distmodel import DiscreteDistribution, Figure1Params, ValidationError, make_figure1_distribution
from .hypothesis import CompleteClass, ScoreTable, bayes_classifier
from .losses import LOSS_NAMES, LossSpec, parse_loss
from .margins import (
    check_domination,
    check_mm,
    fit_tail_exponent,
    gamma_tail,
    min_B_for_alpha,
    mu_tail,
    scaling_verdict,
    tail_csv,
    tail_exponent,
    uniform_B_min,
)
from .bounds import lemma_mm_verify
from .trials import general_trial, lemma_trial, low_noise_trial

EXIT_OK, EXIT_VIOLATION, EXIT_USAGE = 0, 1, 2

TABLE_ROWS = [
    ("binary-margin", "hinge", "[1 - z]_+", 1),
    ("binary-margin", "logistic", "log(1 + e^-z)", 2),
    ("binary-margin", "exponential", "e^-z", 2),
    ("binary-margin", "squared-hinge", "[1 - z]_+^2", 2),
    ("comp-sum", "mae", "1 - p(y|x)", 1),
    ("comp-sum", "cross-entropy", "-log p(y|x)", 2),
    ("comp-sum", "exp-comp-sum", "1/p(y|x) - 1", 2),
    ("comp-sum", "gce:q=1.5", "(1 - p(y|x)^(q-1)) / (q - 1)", 2),
]


class UsageError(Exception):
    pass


# ---------------------------------------------------------------------------
# Output helpers


def _jsonable(obj: Any) -> Any:
    if isinstance(obj, dict):
        return {str(k): _jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_jsonable(v) for v in obj]
    if isinstance(obj, (np.floating, float)):
        x = float(obj)
        if math.isinf(x):
            return "inf" if x > 0 else "-inf"
        if math.isnan(x):
            return "nan"
        return x
    if isinstance(obj, (np.integer,)):
        return int(obj)
    if isinstance(obj, np.bool_):
        return bool(obj)
    return obj


def dumps(obj: Any) -> str:
    return json.dumps(_jsonable(obj), indent=2, sort_keys=True, allow_nan=False) + "\n"


def _fmt(v: Any) -> str:
    if isinstance(v, (bool, np.bool_)):
        return "true" if v else "false"
    if isinstance(v, (float, np.floating)):
        return repr(float(v))
    if v is None:
        return ""
    return str(v)


def rows_to_csv(header: Sequence[str], rows: Sequence[Sequence[Any]]) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    for r in rows:
        w.writerow([_fmt(v) for v in r])
    return buf.getvalue()


def _stem(out: str) -> Path:
    p = Path(out)
    return p.with_suffix("") if p.suffix in (".json", ".csv") else p


def emit(args, report: dict, header: Sequence[str], rows: Sequence[Sequence[Any]], summary: str) -> None:
    if args.out:
        stem = _stem(args.out)
        stem.parent.mkdir(parents=True, exist_ok=True)
        if args.format in ("json", "both"):
            stem.with_suffix(".json").write_text(dumps(report))
        if args.format in ("csv", "both"):
            stem.with_suffix(".csv").write_text(rows_to_csv(header, rows))
    print(summary)


def run_config(args) -> dict:
    return {k: v for k, v in sorted(vars(args).items()) if k != "func"}


def _alphas(text: str) -> list[float]:
    try:
        vals = [float(a) for a in text.split(",") if a.strip()]
    except ValueError:
        raise UsageError(f"malformed alpha list {text!r}") from None
    for a in vals:
        if not 0 < a < 1:
            raise UsageError(f"alpha must lie in (0, 1), got {a}")
    return vals


def _loss(text: str) -> LossSpec:
    try:
        return parse_loss(text)
    except ValidationError as exc:
        raise UsageError(f"{exc}") from None


# ---------------------------------------------------------------------------
# Commands


def counterexample_report(c: float, beta: float, alpha: float, n_points: int, t_lo: float, t_hi: float) -> dict:
    """Counterexample run: gamma-tail accuracy, scaling verdict, MM verdict for {h*}."""
    params = Figure1Params(c, beta, n_points)
    dist = make_figure1_distribution(params)
    tail = gamma_tail(dist)
    fit = fit_tail_exponent(tail, t_lo, t_hi)
    b = tail.breakpoints
    sel = (b >= t_lo) & (b <= t_hi)
    analytic = np.minimum((b[sel] / (2.0 * c)) ** (1.0 / beta), 1.0)
    dev_right = np.abs(tail(b[sel]) - analytic)
    dev_left = np.abs(tail.left_limit(b[sel]) - analytic)
    ends = np.array([t_lo, t_hi])
    dev_ends = np.abs(tail(ends) - np.minimum((ends / (2.0 * c)) ** (1.0 / beta), 1.0))
    max_dev = float(max(dev_right.max(initial=0.0), dev_left.max(initial=0.0), dev_ends.max()))
    h_star = bayes_classifier(dist)
    mm = check_mm(dist, h_star, alpha, 1.0)
    mm_tail = mu_tail(dist, h_star)
    verdict = scaling_verdict(fit, alpha)
    mm_verdict = "HOLD" if mm.holds and mm_tail.is_empty else "FAIL"
    return {
        "dist": dist,
        "tail": tail,
        "report": {
            "gamma_tail": {
                "max_abs_deviation": max_dev,
                "deviation_bound": 2.0 / n_points,
                "within_bound": max_dev <= 2.0 / n_points,
            },
            "tsybakov": {
                "fitted_exponent": fit.fitted_exponent,
                "target_exponent": tail_exponent(alpha),
                "n_breakpoints": fit.n_breakpoints,
                "scaling_verdict": verdict,
                "B_min_finite_support": min_B_for_alpha(tail, alpha),
            },
            "mm": {
                "hypothesis_set": "{h*}",
                "tail_empty": mm_tail.is_empty,
                "B_min": mm.B_min,
                "verdict": mm_verdict,
            },
            "bayes_label_everywhere": sorted({int(v) + 1 for v in h_star.label_indices()}),
            "reproduced": verdict == "FAIL" and mm_verdict == "HOLD",
        },
    }


def cmd_counterexample(args) -> int:
    if isinstance(args.n_points, int) and 0 <= args.n_points < 2:
        raise UsageError(f"too few breakpoints for fit: n_points={args.n_points} yields at most one")
    try:
        res = counterexample_report(args.c, args.beta, args.alpha, args.n_points, args.t_lo, args.t_hi)
    except ValidationError as exc:
        raise UsageError(str(exc)) from None
    report = {"command": "counterexample", "config": run_config(args), **res["report"]}
    tail = res["tail"]
    analytic = np.minimum((tail.breakpoints / (2.0 * args.c)) ** (1.0 / args.beta), 1.0)
    rows = list(zip(tail.breakpoints.tolist(), tail.masses.tolist(), analytic.tolist()))
    if args.dist_out:
        Path(args.dist_out).write_text(dumps(res["dist"].to_dict()))
    r = res["report"]
    summary = (
        f"counterexample: tsybakov scaling {r['tsybakov']['scaling_verdict']} "
        f"(fitted {r['tsybakov']['fitted_exponent']:.6f} vs target {r['tsybakov']['target_exponent']:.6f}), "
        f"MM {r['mm']['verdict']}, gamma-tail deviation {r['gamma_tail']['max_abs_deviation']:.3e} "
        f"(bound {r['gamma_tail']['deviation_bound']:.3e}); reproduced={r['reproduced']}"
    )
    emit(args, report, ["t", "mass", "analytic"], rows, summary)
    return EXIT_OK if r["reproduced"] and r["gamma_tail"]["within_bound"] else EXIT_VIOLATION


LEMMA_HEADER = [
    "trial", "hypothesis", "alpha", "support", "labels", "disagreement_mass", "excess",
    "identity_gap", "B_min", "B_min_tsybakov", "c", "bound", "holds", "variational_holds",
    "dominated", "b_ordered",
]


def lemma_suite(seed: int, trials: int, support: int, labels: int, set_size: int, alphas: Sequence[float], tol: float = 1e-9):
    """Rows per (trial, hypothesis, alpha) and violation counts."""
    rows = []
    counts = {"lemma": 0, "identity": 0, "variational": 0, "domination": 0, "b_order": 0}
    max_identity = 0.0
    for i in range(trials):
        tr = lemma_trial(seed, i, support, labels, set_size)
        dom = [check_domination(tr.dist, h).holds for h in tr.H]
        gtail = gamma_tail(tr.dist)
        for a in alphas:
            B = uniform_B_min(tr.dist, tr.H, a)
            B_tsy = min_B_for_alpha(gtail, a)
            for k, h in enumerate(tr.H):
                rec = lemma_mm_verify(tr.dist, tr.H, h, a, tol, B_min=B)
                b_own = min_B_for_alpha(mu_tail(tr.dist, h), a)
                ordered = b_own <= B_tsy
                ident_ok = abs(rec.identity_gap) <= 1e-12
                max_identity = max(max_identity, abs(rec.identity_gap))
                counts["lemma"] += not rec.holds
                counts["identity"] += not ident_ok
                counts["variational"] += not rec.variational_holds
                counts["b_order"] += not ordered
                rows.append([
                    i, k, a, tr.dist.size, tr.dist.n_labels, rec.disagreement_mass,
                    rec.zero_one_excess_vs_bayes, rec.identity_gap, rec.B_min, B_tsy, rec.c,
                    rec.bound, rec.holds, rec.variational_holds, dom[k], ordered,
                ])
        counts["domination"] += sum(not d for d in dom)
    return rows, counts, max_identity


def cmd_verify_lemma(args) -> int:
    alphas = _alphas(args.alphas)
    if args.trials < 0:
        raise UsageError("--trials must be >= 0")
    rows, counts, max_identity = lemma_suite(args.seed, args.trials, args.support, args.labels, args.set_size, alphas, args.tol)
    total = sum(counts.values())
    report = {
        "command": "verify-lemma",
        "config": run_config(args),
        "rows": len(rows),
        "violations": counts,
        "max_identity_gap": max_identity,
        "verified": total == 0,
    }
    summary = f"verify-lemma: {args.trials} trials, {len(rows)} checks, violations {counts}, max identity gap {max_identity:.3e}"
    emit(args, report, LEMMA_HEADER, rows, summary)
    return EXIT_OK if total == 0 else EXIT_VIOLATION


BOUNDS_HEADER = [
    "trial", "mode", "alpha", "support", "labels", "lhs", "factor", "surrogate_excess", "s",
    "exponent", "constant", "rhs", "rhs_enhanced", "rhs_standard", "satisfied", "precondition_ok",
]


def bounds_suite(loss: LossSpec, s: float, mode: str, seed: int, trials: int, alphas: Sequence[float], support: int = 32, labels: Optional[int] = None, set_size: int = 8, tol: Optional[float] = None):
    if labels is None:
        labels = 2 if loss.family == "margin" else 3
    if loss.family == "margin" and labels != 2:
        raise UsageError(f"margin loss {loss.label()} needs --labels 2")
    reports = []
    for i in range(trials):
        if mode == "general":
            tr = general_trial(seed, i, support, labels)
            reports.append((i, verify_theorem_general(loss, s, tr.dist, CompleteClass(), tr.h, tol=tol), tr))
        else:
            tr = low_noise_trial(seed, i, support, set_size, labels)
            for a in alphas:
                reports.append((i, verify_theorem_low_noise(loss, s, tr.dist, tr.H, tr.h, a, tol=tol), tr))
    return reports


def cmd_verify_bounds(args) -> int:
    loss = _loss(args.loss)
    if loss.family == "zero-one":
        raise UsageError("the surrogate must differ from the zero-one loss")
    if args.s < 1:
        raise UsageError("--s must be >= 1")
    alphas = _alphas(args.alphas) if args.mode == "low-noise" else []
    reports = bounds_suite(loss, args.s, args.mode, args.seed, args.trials, alphas, args.support, args.labels, args.set_size, args.tol)
    binding_violations = sum(1 for _, r, _ in reports if r.precondition_ok and not r.satisfied)
    nonbinding_unsatisfied = sum(1 for _, r, _ in reports if not r.precondition_ok and not r.satisfied)
    rows = [
        [i, r.mode, r.alpha, tr.dist.size, tr.dist.n_labels, r.lhs, r.factor, r.surrogate_excess, r.s,
         r.exponent, r.constant, r.rhs, r.rhs_enhanced, r.rhs_standard, r.satisfied, r.precondition_ok]
        for i, r, tr in reports
    ]
    report = {
        "command": "verify-bounds",
        "config": run_config(args),
        "n_reports": len(reports),
        "satisfied": sum(r.satisfied for _, r, _ in reports),
        "binding": sum(r.precondition_ok for _, r, _ in reports),
        "binding_violations": binding_violations,
        "nonbinding_unsatisfied": nonbinding_unsatisfied,
        "reports": [dict(trial=i, **r.to_dict()) for i, r, _ in reports],
    }
    summary = (
        f"verify-bounds {loss.label()} s={args.s:g} {args.mode}: {len(reports)} reports, "
        f"{report['satisfied']} satisfied, {report['binding']} binding, {binding_violations} binding violations, "
        f"{nonbinding_unsatisfied} unsatisfied with precondition unmet"
    )
    emit(args, report, BOUNDS_HEADER, rows, summary)
    return EXIT_OK if binding_violations == 0 else EXIT_VIOLATION


def run_power_check(loss: LossSpec, s: float, args) -> dict:
    if loss.family == "margin":
        res = power_check_margin_grid(loss, s, args.eta_points, args.score_points, args.score_span, tol=args.tol, constant=args.constant)
        grid = f"eta {args.eta_points} x score {args.score_points} on [-{args.score_span:g}, {args.score_span:g}]"
    elif loss.family == "comp-sum":
        res = power_check_comp_sum_sampled(loss, s, args.labels, args.pairs, args.seed, tol=args.tol if args.tol is not None else ORACLE_TOL, constant=args.constant)
        grid = f"{args.pairs} seeded (cond, score) pairs, n={args.labels}"
    else:
        raise UsageError("power check needs a surrogate loss, not zero-one")
    return {
        "loss": loss.label(),
        "s": s,
        "constant": args.constant,
        "grid": grid,
        "holds": res.holds,
        "verdict": "HOLD" if res.holds else "FAIL",
        "max_violation": res.max_violation,
        "witness": None if res.worst_witness is None or res.holds else list(res.worst_witness),
        "n_checked": res.n_checked,
    }


def cmd_power_check(args) -> int:
    loss = _loss(args.loss)
    if args.s < 1:
        raise UsageError("--s must be >= 1")
    if args.tol is None and loss.family == "margin":
        args.tol = 1e-8
    rec = run_power_check(loss, args.s, args)
    report = {"command": "power-check", "config": run_config(args), **rec}
    header = ["loss", "s", "constant", "verdict", "max_violation", "witness"]
    rows = [[rec["loss"], rec["s"], rec["constant"], rec["verdict"], rec["max_violation"], json.dumps(_jsonable(rec["witness"]))]]
    summary = f"power-check {rec['loss']} s={args.s:g}: {rec['verdict']} (max violation {rec['max_violation']:.3e})"
    if rec["witness"]:
        summary += f", witness {rec['witness']}"
    emit(args, report, header, rows, summary)
    return EXIT_OK if rec["holds"] else EXIT_VIOLATION


def bound_expression(s: float) -> str:
    """Low-noise bound for a table row, as a string in alpha."""
    if s == 1:
        return "E_l(h) - E*_l(H)"
    e = f"1/({s:g} - {s - 1:g}*alpha)" if s != 2 else "1/(2 - alpha)"
    return f"c^({e}) [E_l(h) - E*_l(H)]^({e})"


def cmd_tables(args) -> int:
    rows_out = []
    all_hold = True
    for table, name, formula, s in TABLE_ROWS:
        loss = parse_loss(name)
        ns = argparse.Namespace(**vars(args))
        ns.tol = 1e-8 if loss.family == "margin" else ORACLE_TOL
        rec = run_power_check(loss, float(s), ns)
        all_hold &= rec["holds"]
        rows_out.append({
            "table": table,
            "loss": rec["loss"],
            "formula": formula,
            "s": s,
            "power_check": rec["verdict"],
            "max_violation": rec["max_violation"],
            "witness": rec["witness"],
            "bound": bound_expression(s),
            "exponent_at_alpha_half": float(low_noise_exponent(float(s), 0.5)),
        })
    q2 = gce_mae_agreement(args.labels, args.pairs, args.seed)
    report = {
        "command": "tables",
        "config": run_config(args),
        "rows": rows_out,
        "gce_q2_vs_mae_max_abs_diff": q2,
        "gce_q2_matches_mae": q2 <= 1e-12,
    }
    header = ["table", "loss", "formula", "s", "power_check", "max_violation", "bound"]
    rows = [[r["table"], r["loss"], r["formula"], r["s"], r["power_check"], r["max_violation"], r["bound"]] for r in rows_out]
    verdicts = ", ".join(f"{r['loss']}(s={r['s']}):{r['power_check']}" for r in rows_out)
    emit(args, report, header, rows, f"tables: {verdicts}; gce q=2 vs mae max diff {q2:.1e}")
    return EXIT_OK if all_hold and q2 <= 1e-12 else EXIT_VIOLATION


def gce_mae_agreement(n_labels: int = 3, n_pairs: int = 10_000, seed: int = 0) -> float:
    """max |GCE(q=2) - MAE| over seeded score vectors and every label."""
    from .bounds import sampled_comp_sum_instance
    from .losses import loss_matrix

    _, h = sampled_comp_sum_instance(n_labels, n_pairs, seed)
    return float(np.max(np.abs(loss_matrix(LossSpec("gce", 2.0), h) - loss_matrix(LossSpec("mae"), h))))


def _load_json(path: str, what: str):
    try:
        text = Path(path).read_text()
    except OSError as exc:
        raise UsageError(f"cannot read {what} file {path}: {exc.strerror}") from None
    try:
        return json.loads(text)
    except json.JSONDecodeError as exc:
        raise UsageError(f"{what} file {path}: invalid JSON at line {exc.lineno}, column {exc.colno}: {exc.msg}") from None


def cmd_tail_export(args) -> int:
    try:
        dist = DiscreteDistribution.from_dict(_load_json(args.dist, "distribution"))
        h = ScoreTable.from_dict(_load_json(args.hypothesis, "hypothesis")) if args.hypothesis else None
        tail_exponent(args.alpha)
    except ValidationError as exc:
        raise UsageError(str(exc)) from None
    gamma = tail_csv(gamma_tail(dist), args.alpha, args.B)
    mu = None
    if h is not None:
        try:
            mu = tail_csv(mu_tail(dist, h), args.alpha, args.B)
        except ValidationError as exc:
            raise UsageError(str(exc)) from None
    if args.out:
        stem = _stem(args.out)
        stem.parent.mkdir(parents=True, exist_ok=True)
        stem.with_suffix(".csv").write_text(gamma)
        if mu is not None:
            Path(f"{stem}.mu.csv").write_text(mu)
    else:
        sys.stdout.write(gamma)
        if mu is not None:
            sys.stdout.write("\n" + mu)
    n_mu = 0 if mu is None else mu.count("\n") - 1
    print(f"tail-export: gamma {gamma.count(chr(10)) - 1} rows, mu {n_mu} rows", file=sys.stderr)
    return EXIT_OK


# ---------------------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--seed", type=int, default=0, help="base random seed (default: %(default)s)")
    common.add_argument("--trials", type=int, default=100, help="number of seeded trials (default: %(default)s)")
    common.add_argument("--tol", type=float, default=None, help="absolute verdict tolerance override")
    common.add_argument("--out", default=None, help="output path stem; .json/.csv are appended")
    common.add_argument("--format", choices=["json", "csv", "both"], default="both", help="report files to write (default: %(default)s)")

    parser = argparse.ArgumentParser(prog="marginlab", description="Finite-support checks of margin-noise consistency bounds.")
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("counterexample", parents=[common], help="reproduce the MM-holds / Tsybakov-fails example")
    p.add_argument("--c", type=float, default=0.25)
    p.add_argument("--beta", type=float, default=2.0)
    p.add_argument("--alpha", type=float, default=0.5)
    p.add_argument("--n-points", type=int, default=100_000)
    p.add_argument("--t-lo", type=float, default=0.01)
    p.add_argument("--t-hi", type=float, default=0.5)
    p.add_argument("--dist-out", default=None, help="also write the discretized distribution as JSON")
    p.set_defaults(func=cmd_counterexample)

    p = sub.add_parser("verify-lemma", parents=[common], help="disagreement mass vs 0-1 excess suite")
    p.add_argument("--support", type=int, default=64, help="max support size")
    p.add_argument("--labels", type=int, default=5, help="max number of labels")
    p.add_argument("--set-size", type=int, default=8, help="max hypothesis-set size")
    p.add_argument("--alphas", default="0.25,0.5,0.75")
    p.set_defaults(func=cmd_verify_lemma, tol=None)

    p = sub.add_parser("verify-bounds", parents=[common], help="enhanced consistency bound suites")
    p.add_argument("--loss", required=True, help=f"one of: {', '.join(LOSS_NAMES)}")
    p.add_argument("--s", type=float, required=True)
    p.add_argument("--mode", choices=["general", "low-noise"], default="general")
    p.add_argument("--alphas", default="0.5", help="low-noise alphas, comma separated")
    p.add_argument("--support", type=int, default=32, help="max support size")
    p.add_argument("--labels", type=int, default=None, help="labels (2 for margin losses, default 3 otherwise)")
    p.add_argument("--set-size", type=int, default=8, help="max hypothesis-set size in low-noise mode")
    p.set_defaults(func=cmd_verify_bounds)

    grid_args = argparse.ArgumentParser(add_help=False)
    grid_args.add_argument("--eta-points", type=int, default=1001)
    grid_args.add_argument("--score-points", type=int, default=2001)
    grid_args.add_argument("--score-span", type=float, default=5.0)
    grid_args.add_argument("--labels", type=int, default=3, help="labels for comp-sum checks")
    grid_args.add_argument("--pairs", type=int, default=10_000, help="sampled (cond, score) pairs for comp-sum checks")
    grid_args.add_argument("--constant", type=float, default=1.0, help="multiplier on the surrogate regret power (1 = as stated)")

    p = sub.add_parser("power-check", parents=[common, grid_args], help="pointwise regret power inequality for one loss")
    p.add_argument("--loss", required=True, help=f"one of: {', '.join(LOSS_NAMES)}")
    p.add_argument("--s", type=float, required=True)
    p.set_defaults(func=cmd_power_check)

    p = sub.add_parser("tables", parents=[common, grid_args], help="machine-readable loss tables with power-check verdicts")
    p.set_defaults(func=cmd_tables)

    p = sub.add_parser("tail-export", parents=[common], help="write gamma (and mu) tails as t,mass,bound CSV")
    p.add_argument("--dist", required=True, help="distribution JSON file")
    p.add_argument("--hypothesis", default=None, help="score table JSON file")
    p.add_argument("--alpha", type=float, default=0.5)
    p.add_argument("--B", type=float, default=1.0)
    p.set_defaults(func=cmd_tail_export)
    return parser


def main(argv: Optional[Sequence[str]] = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    if getattr(args, "tol", None) is None and args.command == "verify-lemma":
        args.tol = 1e-9
    try:
        return args.func(args)
    except (UsageError, ValidationError) as exc:
        print(f"marginlab {args.command}: error: {exc}", file=sys.stderr)
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
