"""Command line entry point: pi, bounds, verify-zeros, zeros-scan."""

from __future__ import annotations

import argparse
import json
import math
import sys
from fractions import Fraction

from . import interval as iv
from . import pipeline, zeros, zetafft
from .errors import (Ambiguous, AnalyticPiError, BudgetExceeded, CoverageGap, FormatError,
                     InconsistentCount, Infeasible, NoInteger, ParamViolation)

EXIT_OK = 0
EXIT_FAIL = 1
EXIT_AMBIGUOUS = 2
EXIT_INFEASIBLE = 3
EXIT_FORMAT = 4


def _exit_code(exc) -> int:
    if isinstance(exc, (Ambiguous, NoInteger)):
        return EXIT_AMBIGUOUS
    if isinstance(exc, (Infeasible, BudgetExceeded)):
        return EXIT_INFEASIBLE
    if isinstance(exc, (FormatError, InconsistentCount, CoverageGap, ParamViolation)):
        return EXIT_FORMAT
    return EXIT_FAIL


def _add_run_flags(p):
    p.add_argument("--config", help="key = value config file; flags override it")
    p.add_argument("--x", help="target integer")
    p.add_argument("--lambda", dest="lam", help="λ as <mantissa>x2^<exp> or a decimal")
    p.add_argument("--zeros", help="zero file (text or binary)")
    p.add_argument("--t1")
    p.add_argument("--t2")
    p.add_argument("--window-k", dest="window_k")
    p.add_argument("--segment-width", dest="segment_width", type=int)
    p.add_argument("--precision-bits", dest="precision_bits", type=int)
    p.add_argument("--threads", type=int)
    p.add_argument("--checkpoint-dir", dest="checkpoint_dir")
    p.add_argument("--report", help="write the JSON report here (default: stdout)")


def _run_config(args) -> pipeline.RunConfig:
    values = pipeline.load_config(args.config) if args.config else {}
    flags = {
        "x": args.x,
        "lambda": args.lam,
        "zeros": args.zeros,
        "t1": args.t1,
        "t2": args.t2,
        "window-k": args.window_k,
        "segment-width": args.segment_width,
        "precision-bits": args.precision_bits,
        "threads": args.threads,
        "checkpoint-dir": args.checkpoint_dir,
        "report": args.report,
    }
    text = "\n".join("%s = %s" % (k, v) for k, v in flags.items() if v is not None)
    values.update(pipeline.parse_config(text))
    return pipeline.make_config(values)


def _emit(text: str, path=None):
    if path:
        with open(path, "w") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)


def cmd_pi(args) -> int:
    cfg = _run_config(args)
    result = pipeline.run(cfg)
    _emit(pipeline.report(result, include_timing=args.timing), cfg.report)
    return EXIT_OK


def cmd_bounds(args) -> int:
    cfg = _run_config(args)
    with iv.precision(cfg.precision_bits):
        p = pipeline.plan(cfg, check_shares=False)
    doc = {
        "x": str(cfg.x),
        "parameters": p.summary(),
        "bounds": {k: pipeline._dec_up(v.hi) for k, v in p.ledger.entries() if k != "rounding_slack"},
        "shares": {k: str(cfg.shares[k]) for k in pipeline.LEDGER_KEYS},
    }
    over = [k for k, v in p.ledger.entries() if k != "rounding_slack" and pipeline._q(v.hi) >= cfg.shares[k]]
    if over:
        doc["over_budget"] = over
    _emit(json.dumps(doc, indent=2) + "\n", cfg.report)
    return EXIT_INFEASIBLE if over else EXIT_OK


def cmd_verify_zeros(args) -> int:
    table = zeros.load_zeros(args.zeros)
    checks = 0
    heights = []
    recs = table.records
    step = max(1, args.every)
    # midpoints between consecutive zeros, where N(t) is known exactly
    for i in range(step - 1, len(recs) - 1, step):
        a, b = recs[i].center, recs[i + 1].center
        heights.append(((a + b) / 2, i + 1))
    if recs:
        rh = table.rh_height_value
        if rh >= recs[0].center:
            heights.append((rh, table.count_below(rh)))
    for t, n in heights:
        if t < 2:
            continue
        zeros.check_count(float(t), n)
        checks += 1
    doc = {
        "zeros": args.zeros,
        "count": table.count,
        "abs_err": table.abs_err,
        "rh_height": table.rh_height,
        "max_height": recs[-1].text if recs else "0",
        "count_checks": checks,
        "status": "ok",
    }
    sys.stdout.write(json.dumps(doc, indent=2) + "\n")
    return EXIT_OK


def cmd_zeros_scan(args) -> int:
    over = {}
    for name in ("h", "A", "B", "K", "J"):
        v = getattr(args, name)
        if v is not None:
            over[name] = v
    with iv.precision(args.precision_bits):
        params = zetafft.default_params(Fraction(args.t0), **over)
        ev = zetafft.evaluate_grid(params)
        scan = zetafft.locate_zeros(ev, refine_width=Fraction(args.width))
    brackets = scan.brackets
    table = _scan_table(brackets)
    if args.out:
        if args.binary:
            zeros.store_zeros_binary(table, args.out)
        else:
            zeros.store_zeros(table, args.out)
    else:
        sys.stdout.write(zeros.store_zeros(table))
    doc = {
        "t0": str(params.t0),
        "params": {"h": str(params.h), "A": params.A, "B": params.B, "N": params.N, "K": params.K,
                   "J": params.J},
        "budget": ev.budget.as_dict(),
        "zeros_found": len(brackets),
        "abs_err": table.abs_err,
        "covered": [str(c) for c in scan.covered if c is not None],
        "indeterminate": [[str(a), str(b)] for a, b in scan.indeterminate],
    }
    text = json.dumps(doc, indent=2) + "\n"
    if args.report:
        with open(args.report, "w") as fh:
            fh.write(text)
    else:
        sys.stderr.write(text)
    return EXIT_OK


def _scan_table(brackets) -> zeros.ZeroTable:
    """Zero table whose abs_err covers every bracket around its written centre."""
    if not brackets:
        return zeros.ZeroTable("1e-6", "0", [])
    width = max(pipeline._q(b.hi) - pipeline._q(b.lo) for b in brackets)
    # write centres with digits fine enough that rounding stays below width/4
    digits = max(0, -math.floor(math.log10(float(width) / 4)))
    texts = []
    worst = Fraction(0)
    for b in brackets:
        lo, hi = pipeline._q(b.lo), pipeline._q(b.hi)
        c = (lo + hi) / 2
        text = "%.*f" % (digits, c)
        q = Fraction(text)
        worst = max(worst, hi - q, q - lo)
        texts.append(text)
    # header accuracy is the final bracket width (never below the centre offset)
    abs_err = pipeline._dec_up(max(worst, width), 3)
    err = Fraction(abs_err)
    recs = [zeros.ZeroRecord(iv.RealInterval(Fraction(t) - err, Fraction(t) + err), i, t) for i, t in enumerate(texts)]
    return zeros.ZeroTable(abs_err, "0", recs)


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="analytic-pi", description="Analytic computation of π(x) with interval bounds.")
    sub = ap.add_subparsers(dest="command", required=True)

    p = sub.add_parser("pi", help="full π(x) run")
    _add_run_flags(p)
    p.add_argument("--timing", action="store_true", help="include wall-clock times in the report")
    p.set_defaults(func=cmd_pi)

    p = sub.add_parser("bounds", help="print the a-priori error terms without running")
    _add_run_flags(p)
    p.set_defaults(func=cmd_bounds)

    p = sub.add_parser("verify-zeros", help="validate a zero file and cross-check counts")
    p.add_argument("--zeros", required=True)
    p.add_argument("--every", type=int, default=50, help="check N(t) after every n-th zero")
    p.set_defaults(func=cmd_verify_zeros)

    p = sub.add_parser("zeros-scan", help="locate zeros near t0 with the windowed FFT")
    p.add_argument("--t0", required=True)
    p.add_argument("--h")
    p.add_argument("--A", type=int)
    p.add_argument("--B", type=int)
    p.add_argument("--K", type=int)
    p.add_argument("--J", type=int)
    p.add_argument("--width", default="1e-6", help="target bracket width")
    p.add_argument("--precision-bits", dest="precision_bits", type=int, default=128)
    p.add_argument("--out", help="zero file to write (default: stdout)")
    p.add_argument("--binary", action="store_true", help="write the binary zero format")
    p.add_argument("--report", help="JSON stage-budget report (default: stderr)")
    p.set_defaults(func=cmd_zeros_scan)
    return ap


def main(argv=None) -> int:
    ap = build_parser()
    args = ap.parse_args(argv)
    try:
        return args.func(args)
    except AnalyticPiError as exc:
        code = _exit_code(exc)
        hint = ""
        if code == EXIT_AMBIGUOUS:
            hint = " (raise T1, the precision, or tighten the budget shares)"
        sys.stderr.write("error: %s: %s%s\n" % (type(exc).__name__, exc, hint))
        return code
    except (OSError, ValueError) as exc:
        sys.stderr.write("error: %s\n" % exc)
        return EXIT_FORMAT


if __name__ == "__main__":
    sys.exit(main())
