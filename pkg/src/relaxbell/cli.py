"""Command-line entry point: ``relaxbell <command> [options]``.

Every command writes one report, either JSON
``{"command", "params", "results", "tolerances", "pass"}`` or CSV with
``#``-prefixed header lines carrying the command, tolerances and verdict.
Exit status is 0 when the report passes, 1 when a check fails and 2 for
usage or parameter errors.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import math
import sys
import warnings

import numpy as np

from . import hardy, oracles, relaxed_hv, scenarios, suites

EXIT_PASS, EXIT_FAIL, EXIT_USAGE = 0, 1, 2


class UsageError(Exception):
    pass


def _num(v):
    if isinstance(v, (np.floating, np.integer, np.bool_)):
        return v.item()
    if isinstance(v, float) and not math.isfinite(v):
        return str(v)
    return v


def _jsonable(obj):
    if isinstance(obj, dict):
        return {k: _jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_jsonable(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return _jsonable(obj.tolist())
    return _num(obj)


def _flatten(prefix: str, obj, out: list):
    if isinstance(obj, dict):
        for k, v in obj.items():
            _flatten(f"{prefix}.{k}" if prefix else str(k), v, out)
    elif isinstance(obj, (list, tuple)):
        for i, v in enumerate(obj):
            _flatten(f"{prefix}.{i}", v, out)
    else:
        out.append((prefix, obj))


def render(report: dict, fmt: str) -> str:
    report = _jsonable(report)
    if fmt == "json":
        return json.dumps(report, indent=2) + "\n"
    buf = io.StringIO()
    buf.write(f"# command: {report['command']}\n")
    buf.write("# tolerances: " + json.dumps(report["tolerances"], sort_keys=True) + "\n")
    buf.write("# params: " + json.dumps(report["params"], sort_keys=True) + "\n")
    buf.write(f"# pass: {str(report['pass']).lower()}\n")
    w = csv.writer(buf, lineterminator="\n")
    rows = report["results"].get("rows") if isinstance(report["results"], dict) else None
    if rows:
        keys = list(rows[0])
        w.writerow(keys)
        for r in rows:
            w.writerow([repr(r[k]) if isinstance(r[k], float) else r[k] for k in keys])
    else:
        flat: list = []
        _flatten("", report["results"], flat)
        w.writerow(["key", "value"])
        for k, v in flat:
            w.writerow([k, repr(v) if isinstance(v, float) else v])
    return buf.getvalue()


def _report(command, params, results, tolerances, passed):
    return {"command": command, "params": params, "results": results, "tolerances": tolerances, "pass": bool(passed)}


def _tol(args, default):
    return default if args.tol is None else args.tol


# ------------------------------------------------------------------ commands


def cmd_table1(args):
    tol = _tol(args, 5e-5)
    rows = suites.table1_rows()
    checks = suites.table1_checks(rows, tol)
    by_row = {}
    for c in checks:
        n = int(c.name.split(".")[1][1:])
        by_row.setdefault(n, []).append(c.passed)
    for r in rows:
        r["epsilon_match"], r["p_match"] = by_row[r["N"]]
    return _report("table1", {}, {"rows": rows}, {"abs": tol, "round_decimals": 4, "rounding": "half-even"},
                   all(c.passed for c in checks))


def cmd_parallel(args):
    tol = _tol(args, hardy.ZERO_TOL)
    n = args.N
    if n < 1:
        raise UsageError("--N must be >= 1")
    spec = hardy.ParallelSpec(n)
    fac = hardy.parallel_hardy_correlation(spec)
    zeros = hardy.verify_hardy_zeros(fac, n, tol)
    p1 = hardy.p_hardy_parallel(1)
    ph = hardy.p_hardy_parallel(spec)
    product_gap = abs(hardy.success_mass(fac, n) - (1 - (1 - p1) ** n))
    results = {"N": n, "p_hardy": ph, "p_single": p1, "zero_residuals": list(zeros.per_family),
               "product_law_gap": product_gap}
    passed = zeros.passed and product_gap <= 1e-12
    if n <= hardy.MAX_DENSE_COPIES:
        dense = hardy.parallel_hardy_dense_quantum(spec)
        results["dense_max_deviation"] = float(np.abs(dense.table - fac.dense().table).max())
        results["dense_p_hardy"] = hardy.success_mass(dense, n)
        passed &= results["dense_max_deviation"] <= 1e-13
    return _report("parallel", {"N": n}, results, {"zeros": tol, "product_law": 1e-12, "dense": 1e-13}, passed)


def cmd_ladder(args):
    tol = _tol(args, hardy.ZERO_TOL)
    m = args.M
    if m < 1:
        raise UsageError("--M must be >= 1")
    opt = hardy.ladder_optimal_t(m)
    c = hardy.ladder_correlation(hardy.LadderSpec(m, opt.t))
    zeros = hardy.verify_ladder_zeros(c, tol)
    ph = float(c.table[m, m, 0, 0])
    closed = hardy.ladder_closed_form(opt.t, m)
    ns = scenarios.is_nonsignaling(c)
    results = {"M": m, "t": opt.t, "objective": opt.objective, "p_hardy": ph, "closed_form": closed,
               "zero_residuals": list(zeros.per_family), "nonsignaling_violation": ns.max_violation}
    passed = zeros.passed and abs(ph - closed) <= 1e-9 and ns.passed
    return _report("ladder", {"M": m}, results, {"zeros": tol, "closed_form": 1e-9, "nonsignaling": 1e-9}, passed)


def cmd_inequality(args):
    tol = _tol(args, 1e-12)
    n, l, ea, eb = args.N, args.l, args.epsA, args.epsB
    try:
        k_min = relaxed_hv.kappa_lower_bound(n, l, ea, eb)
    except ValueError as e:
        raise UsageError(str(e)) from e
    kappa = 2 * k_min if args.kappa is None else args.kappa
    with warnings.catch_warnings(record=True) as caught:
        warnings.simplefilter("always", relaxed_hv.BoundWarning)
        te = relaxed_hv.tilde_epsilons(ea, eb, n, l, kappa, args.form)
        bound = relaxed_hv.inequality_bound(ea, eb, n, l, kappa, args.form)
    quantum = relaxed_hv.evaluate_I_kappa(hardy.parallel_hardy_correlation(hardy.ParallelSpec(n)), n, kappa)
    ideal_gap = abs(quantum - hardy.p_hardy_parallel(n))
    results = {"kappa_used": kappa, "kappa_min": k_min, "tilde_eps": [te.epsA, te.epsB],
               "bound_guaranteed": te.guaranteed, "bound": bound, "quantum_value": quantum,
               "margin": quantum - bound, "violated": quantum > bound,
               "warnings": [str(w.message) for w in caught]}
    params = {"N": n, "l": l, "epsA": ea, "epsB": eb, "kappa": args.kappa, "form": args.form}
    return _report("inequality", params, results, {"ideal_quantum_value": tol}, ideal_gap <= tol)


def cmd_odbound(args):
    try:
        value = relaxed_hv.od_bound(args.delta, args.M)
    except ValueError as e:
        raise UsageError(str(e)) from e
    return _report("odbound", {"M": args.M, "delta": args.delta}, {"bound": value}, {}, True)


def cmd_odsearch(args):
    tol = _tol(args, 1e-9)
    try:
        r = oracles.od_search(args.M, args.delta, args.budget, args.seed)
        cap = relaxed_hv.od_bound(args.delta, args.M)
    except ValueError as e:
        raise UsageError(str(e)) from e
    results = r.to_dict() | {"bound": cap, "gap_to_bound": cap - r.bestPH,
                             "measures": relaxed_hv.measure_all(r.bestModel)._asdict(),
                             "model": r.bestModel.to_dict()}
    params = {"M": args.M, "delta": args.delta, "budget": args.budget, "seed": args.seed}
    return _report("odsearch", params, results, {"bound": tol}, r.bestPH <= cap + tol)


def cmd_magicsquare(args):
    tol = _tol(args, 1e-12)
    game = scenarios.magic_square_game()
    f = oracles.LinearFunctional.from_game(game)
    cl = oracles.classical_value(f)
    ns = oracles.nosignaling_value(f)
    p = scenarios.magic_square_pd_model()
    value = scenarios.game_value(p, game)
    ea, eb = relaxed_hv.measure_pd(relaxed_hv.single_lambda_model(p))
    results = {"classical_value": cl.optimum, "classical_strategy": cl.argmax._asdict(),
               "nosignaling_value": ns.optimum, "pd_model_value": value, "pd_model_epsA": ea, "pd_model_epsB": eb}
    passed = (abs(cl.optimum - 8 / 9) <= tol and abs(ns.optimum - 1) <= 1e-9 and abs(value - 1) <= tol
              and abs(ea) <= tol and abs(eb - 0.5) <= tol)
    return _report("magicsquare", {}, results, {"values": tol, "lp": 1e-9}, passed)


def _input_dist(text):
    if text is None:
        return None
    try:
        values = [float(v) for v in text.split(",")]
    except ValueError as e:
        raise UsageError(f"--pi needs four comma-separated numbers, got {text!r}") from e
    if len(values) != 4:
        raise UsageError(f"--pi needs four comma-separated numbers, got {text!r}")
    return np.array(values).reshape(2, 2)


def cmd_strongmd(args):
    tol = _tol(args, 1e-12)
    pi = _input_dist(args.pi)
    try:
        base = relaxed_hv.strong_md(args.l, args.epsA, args.epsB, args.q, args.N, input_dist=pi, h=args.h)
        other = relaxed_hv.strong_md(args.l, args.epsA, args.epsB, args.q, args.N, input_dist=pi, h=2 * base.h + 1)
    except ValueError as e:
        raise UsageError(str(e)) from e
    results = base._asdict() | {"certified": base.certified, "h_independence_gap": abs(base.ItildeValue - other.ItildeValue)}
    params = {"N": args.N, "l": args.l, "epsA": args.epsA, "epsB": args.epsB, "q": args.q, "h": args.h, "pi": args.pi or "uniform"}
    return _report("strongmd", params, results, {"h_independence": tol}, results["h_independence_gap"] <= tol)


def cmd_verify(args):
    checks = suites.run_suite(args.suite, seed=args.seed, tol=args.tol, count=args.count)
    results = {"checks": [c.to_dict() for c in checks], "failed": [c.name for c in checks if not c.passed]}
    tols = {"override": args.tol} if args.tol is not None else {"zeros": hardy.ZERO_TOL, "bounds": 1e-9, "oracles": 1e-9}
    return _report("verify", {"suite": args.suite, "seed": args.seed, "count": args.count}, results, tols,
                   all(c.passed for c in checks))


# -------------------------------------------------------------------- parser


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--format", choices=("json", "csv"), default="json")
    common.add_argument("--out", metavar="PATH", help="write the report here instead of stdout")
    common.add_argument("--tol", type=float, help="override the command's main tolerance")
    common.add_argument("--seed", type=int, default=42)

    p = argparse.ArgumentParser(prog="relaxbell", description=__doc__.splitlines()[0])
    sub = p.add_subparsers(dest="command", required=True)

    sub.add_parser("table1", parents=[common], help="threshold eps and N-copy success probability, N = 1..10")
    sp = sub.add_parser("parallel", parents=[common], help="N-copy Hardy construction")
    sp.add_argument("--N", type=int, required=True)
    sp = sub.add_parser("ladder", parents=[common], help="(M+1)-setting ladder construction")
    sp.add_argument("--M", type=int, required=True)
    sp = sub.add_parser("inequality", parents=[common], help="kappa-penalized inequality versus the quantum value")
    sp.add_argument("--N", type=int, required=True)
    sp.add_argument("--l", type=float, required=True)
    sp.add_argument("--epsA", type=float, required=True)
    sp.add_argument("--epsB", type=float, required=True)
    sp.add_argument("--kappa", type=float)
    sp.add_argument("--form", choices=sorted(relaxed_hv.TILDE_FORMS), default="main")
    sp = sub.add_parser("odbound", parents=[common], help="outcome-dependence bound on the ladder success")
    sp.add_argument("--M", type=int, required=True)
    sp.add_argument("--delta", type=float, required=True)
    sp = sub.add_parser("odsearch", parents=[common], help="search outcome-dependent models on the ladder")
    sp.add_argument("--M", type=int, required=True)
    sp.add_argument("--delta", type=float, required=True)
    sp.add_argument("--budget", type=int, default=4000)
    sub.add_parser("magicsquare", parents=[common], help="magic-square values and the partial-PD winning model")
    sp = sub.add_parser("strongmd", parents=[common], help="strong measurement-dependence functional")
    sp.add_argument("--N", type=int, required=True)
    sp.add_argument("--l", type=float, required=True)
    sp.add_argument("--epsA", type=float, required=True)
    sp.add_argument("--epsB", type=float, required=True)
    sp.add_argument("--q", type=float, required=True)
    sp.add_argument("--h", type=float)
    sp.add_argument("--pi", metavar="P00,P01,P10,P11", help="input distribution (default uniform)")
    sp = sub.add_parser("verify", parents=[common], help="run invariant suites")
    sp.add_argument("--suite", choices=suites.SUITES, required=True)
    sp.add_argument("--count", type=int, default=1000, help="sampled models per bound check")
    return p


COMMANDS = {
    "table1": cmd_table1,
    "parallel": cmd_parallel,
    "ladder": cmd_ladder,
    "inequality": cmd_inequality,
    "odbound": cmd_odbound,
    "odsearch": cmd_odsearch,
    "magicsquare": cmd_magicsquare,
    "strongmd": cmd_strongmd,
    "verify": cmd_verify,
}


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as e:
        return EXIT_USAGE if e.code not in (0, None) else EXIT_PASS
    try:
        report = COMMANDS[args.command](args)
    except UsageError as e:
        print(f"relaxbell {args.command}: {e}", file=sys.stderr)
        return EXIT_USAGE
    text = render(report, args.format)
    if args.out:
        with open(args.out, "w", encoding="utf-8", newline="") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)
    return EXIT_PASS if report["pass"] else EXIT_FAIL


if __name__ == "__main__":
    sys.exit(main())
