"""Command-line front end.

Every subcommand builds a report (a dict of scalars plus an optional list
of row dicts) and serialises it as text, JSON or CSV.  Floats carry 15
significant digits.  Exit status: 0 success, 1 invalid request, 2 numerical
diagnostic.  Errors go to stderr as a single JSON line.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import math
import os
import sys
import warnings
from concurrent.futures import ThreadPoolExecutor

import numpy as np

from . import asymptotics, multithreshold, oracle, variants
from .core import verify_threshold_optimality
from .errors import DiagnosticError, StopruleError, ValidationError

EXIT_OK, EXIT_VALIDATION, EXIT_DIAGNOSTIC = 0, 1, 2
COMMANDS = ("solve", "asymptotic", "verify", "sweep", "oracle", "conjecture", "two-threshold")


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise ValidationError(message)


def _int(text: str) -> int:
    try:
        v = float(text)
    except ValueError:
        raise ValidationError(f"expected an integer, got {text!r}") from None
    if not v.is_integer():
        raise ValidationError(f"expected an integer, got {text!r}")
    return int(v)


def _n_list(text: str) -> list:
    items = [t for t in text.replace(" ", "").split(",") if t]
    if not items:
        raise ValidationError("--n-list must name at least one n")
    return [_int(t) for t in items]


def _params(pairs) -> dict:
    out = {}
    for item in pairs or []:
        if "=" not in item:
            raise ValidationError(f"--param expects key=value, got {item!r}")
        key, value = item.split("=", 1)
        out[key.strip()] = value.strip()
    return out


def _threads() -> int:
    raw = os.environ.get("STOPRULE_THREADS")
    if raw is None:
        return os.cpu_count() or 1
    try:
        v = int(raw)
    except ValueError:
        raise ValidationError(f"STOPRULE_THREADS must be a positive integer, got {raw!r}") from None
    if v < 1:
        raise ValidationError(f"STOPRULE_THREADS must be a positive integer, got {raw!r}")
    return v


def _map(fn, items):
    """Ordered parallel map capped by STOPRULE_THREADS."""
    items = list(items)
    workers = min(_threads(), len(items))
    if workers <= 1:
        return [fn(x) for x in items]
    with ThreadPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(fn, items))


# --------------------------------------------------------------------------
# number formatting


def _num(v):
    if isinstance(v, (bool, np.bool_)):
        return bool(v)
    if isinstance(v, (int, np.integer)):
        return int(v)
    if isinstance(v, (float, np.floating)):
        v = float(v)
        if not math.isfinite(v):
            return None
        return float(f"{v:.15g}")
    return v


def _clean(obj):
    if isinstance(obj, dict):
        return {k: _clean(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple, np.ndarray)):
        return [_clean(v) for v in obj]
    return _num(obj)


def _cell(v) -> str:
    if v is None:
        return ""
    if isinstance(v, float):
        return f"{v:.15g}"
    if isinstance(v, (list, dict)):
        return json.dumps(v, separators=(",", ":"))
    return str(v)


def render(report: dict, fmt: str) -> str:
    report = _clean(report)
    if fmt == "json":
        return json.dumps(report, separators=(", ", ": ")) + "\n"
    rows = report.get("rows")
    scalars = {k: v for k, v in report.items() if k != "rows"}
    if fmt == "csv":
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        table = rows if rows else [scalars]
        header = list(table[0].keys())
        w.writerow(header)
        for r in table:
            w.writerow([_cell(r.get(h)) for h in header])
        return buf.getvalue()
    lines = [f"{k}: {_cell(v)}" for k, v in scalars.items()]
    if rows:
        header = list(rows[0].keys())
        cells = [[_cell(r.get(h)) for h in header] for r in rows]
        widths = [max(len(h), *(len(c[i]) for c in cells)) for i, h in enumerate(header)]
        lines.append("  ".join(h.rjust(wd) for h, wd in zip(header, widths)))
        lines.extend("  ".join(c.rjust(wd) for c, wd in zip(row, widths)) for row in cells)
    return "\n".join(lines) + "\n"


# --------------------------------------------------------------------------
# commands


def _variant_args(args):
    if args.variant is None:
        raise ValidationError("--variant is required")
    variants.get_variant(args.variant)
    q = variants.parse_params(args.variant, _params(args.param))
    variants._validate(args.variant, q)
    return args.variant, q


def _param_dict(vid, q):
    return q.as_dict(variants.get_variant(vid).param_names)


def cmd_solve(args):
    vid, q = _variant_args(args)
    if args.n is None:
        raise ValidationError("--n is required")
    sol = variants.solve_variant(vid, args.n, q, materialize=False)
    out = {
        "command": "solve", "variant": vid, "params": _param_dict(vid, q), "n": sol.n,
        "kappa": sol.kappa, "kappa_over_n": sol.kappa / sol.n, "payoff": sol.payoff,
        "certified_by": sol.certified_by,
    }
    if sol.threshold.warning:
        out["warning"] = sol.threshold.warning
    return out


def cmd_asymptotic(args):
    vid, q = _variant_args(args)
    res = variants.asymptotic_limits(vid, q, method=args.method)
    return {"command": "asymptotic", "variant": vid, "params": _param_dict(vid, q),
            "theta": res.theta, "limit_payoff": res.limit_payoff, "source": res.source}


def _verify_one(vid, q, n):
    d = variants.get_variant(vid)
    sol = variants.solve_variant(vid, n, q, materialize=True)
    inst = variants.make_variant(vid, n, q)

    def f(x):
        return variants.closed_form_f(vid, q, x)

    f2 = (lambda x: d.f_second(x, q)) if d.f_second is not None else None
    hyp = asymptotics.check_hypotheses(inst.spec, f, f_second=f2)[0]
    gap = asymptotics.measure_gap(sol.table, f)
    lim = variants.asymptotic_limits(vid, q)
    dp_gap = verify_threshold_optimality(inst.payoff, inst.spec, inst.combiner, inst.payoff_mu)
    return {
        "n": n, "kappa": sol.kappa, "kappa_over_n": sol.kappa / n, "payoff": sol.payoff,
        "theta": lim.theta, "limit_payoff": lim.limit_payoff,
        "max_abs_H": hyp.max_abs_H, "terminal_drift": hyp.terminal_drift, "v_sum": hyp.v_sum,
        "m_sum": hyp.m_sum, "boundary_drift": hyp.boundary_drift,
        "sup_gap": gap.sup_gap, "interior_gap": gap.interior_gap, "optimality_gap": dp_gap,
    }


def cmd_verify(args):
    vid, q = _variant_args(args)
    ns = args.n_list or ([args.n] if args.n else None)
    if not ns:
        raise ValidationError("--n-list (or --n) is required")
    rows = _map(lambda n: _verify_one(vid, q, n), ns)
    return {"command": "verify", "variant": vid, "params": _param_dict(vid, q), "rows": rows}


def cmd_sweep(args):
    vid, q = _variant_args(args)
    if not args.n_list:
        raise ValidationError("--n-list is required")

    def one(n):
        s = variants.solve_variant(vid, n, q, materialize=False)
        return {"n": n, "kappa_over_n": s.kappa / n, "payoff": s.payoff}

    return {"command": "sweep", "variant": vid, "params": _param_dict(vid, q),
            "rows": _map(one, args.n_list)}


def cmd_oracle(args):
    vid, q = _variant_args(args)
    if args.n is None:
        raise ValidationError("--n is required")
    sol = variants.solve_variant(vid, args.n, q, materialize=True)
    out = {"command": "oracle", "variant": vid, "params": _param_dict(vid, q), "n": sol.n,
           "kappa": sol.kappa, "dp_value": sol.payoff}
    rows = []
    if args.n <= 8:
        exact = oracle.enumerate_table(vid, args.n, q)
        comp = sol.composite.values
        for k in range(args.n + 1):
            rows.append({"k": k, "dp": comp[k], "exact": exact[k], "delta": exact[k] - comp[k]})
        out["max_abs_delta"] = float(np.max(np.abs(exact - comp)))
    if args.trials:
        rep = oracle.simulate(vid, args.n, sol.kappa, args.trials, args.seed, q)
        out.update({
            "trials": rep.trials, "seed": rep.seed, "estimate": rep.estimate,
            "std_error": rep.std_error, "sim_delta": rep.estimate - sol.payoff,
            "z_score": (rep.estimate - sol.payoff) / rep.std_error if rep.std_error > 0 else 0.0,
        })
    if not rows and not args.trials:
        raise ValidationError("oracle needs --n <= 8 for enumeration or --trials for simulation")
    if rows:
        out["rows"] = rows
    return out


def cmd_conjecture(args):
    if args.example is None:
        raise ValidationError("--example is required (exmu or ei-example)")
    if args.mu is None:
        raise ValidationError("--mu is required")
    mu = _parse_real(args.mu)
    if not args.n_list:
        raise ValidationError("--n-list is required")
    res = asymptotics.run_conjecture_experiment(args.example, mu, args.n_list, samples=args.samples)
    runs, rows = [], []
    for r in res.runs:
        runs.append({"n": r.n, "sup_gap": r.gap.sup_gap, "interior_gap": r.gap.interior_gap,
                     "terminal_drift": r.terminal_drift, "argmax": r.argmax, "max_value": r.max_value})
        rows.extend({"n": r.n, "x": x, "F": F, "f": f} for x, F, f in zip(r.x, r.F, r.f))
    return {"command": "conjecture", "example": res.example, "mu": res.mu, "Theta": res.Theta,
            "theta": res.theta, "f_theta": res.f_theta, "runs": runs, "rows": rows}


def _parse_real(text):
    try:
        if "/" in str(text):
            a, b = str(text).split("/", 1)
            return float(a) / float(b)
        return float(text)
    except (ValueError, ZeroDivisionError):
        raise ValidationError(f"expected a real number, got {text!r}") from None


def cmd_two_threshold(args):
    if args.n is None:
        raise ValidationError("--n is required")
    res = multithreshold.solve_two_threshold(args.n)
    r_lim, s_lim, p_lim = multithreshold.two_threshold_asymptotics()
    return {"command": "two-threshold", "n": res.n, "r": res.r, "s": res.s, "payoff": res.payoff,
            "r_over_n": res.r / res.n, "s_over_n": res.s / res.n,
            "r_limit": r_lim, "s_limit": s_lim, "payoff_limit": p_lim,
            "optimality_gap": multithreshold.verify_two_threshold_optimality(res.n)}


HANDLERS = {
    "solve": cmd_solve, "asymptotic": cmd_asymptotic, "verify": cmd_verify, "sweep": cmd_sweep,
    "oracle": cmd_oracle, "conjecture": cmd_conjecture, "two-threshold": cmd_two_threshold,
}


def build_parser() -> argparse.ArgumentParser:
    p = _Parser(prog="stoprule", description="Finite-n and asymptotic solutions of threshold stopping problems.")
    sub = p.add_subparsers(dest="command", parser_class=_Parser)
    for name in COMMANDS:
        sp = sub.add_parser(name)
        sp.add_argument("--variant")
        sp.add_argument("--n", type=_int)
        sp.add_argument("--param", action="append", metavar="KEY=VALUE")
        sp.add_argument("--n-list", type=_n_list)
        sp.add_argument("--trials", type=_int)
        sp.add_argument("--seed", type=_int, default=0)
        sp.add_argument("--format", choices=("text", "json", "csv"),
                        default="csv" if name == "sweep" else "text")
        sp.add_argument("--out")
        if name == "asymptotic":
            sp.add_argument("--method", choices=("closed-form", "ode"), default="closed-form")
        if name == "conjecture":
            sp.add_argument("--example", choices=("exmu", "ei-example"))
            sp.add_argument("--mu")
            sp.add_argument("--samples", type=_int, default=201)
    return p


def _fail(kind: str, exc: Exception, code: int) -> int:
    sys.stderr.write(json.dumps({"error": kind, "type": type(exc).__name__, "message": str(exc)}) + "\n")
    return code


def _join_values(argv):
    """Let ``--mu -1/2`` through: argparse would read ``-1/2`` as a flag."""
    out, i = [], 0
    while i < len(argv):
        a = argv[i]
        if a == "--mu" and i + 1 < len(argv):
            out.append(f"--mu={argv[i + 1]}")
            i += 2
            continue
        out.append(a)
        i += 1
    return out


def run(argv=None) -> int:
    argv = _join_values(list(sys.argv[1:] if argv is None else argv))
    try:
        args = build_parser().parse_args(argv)
        if args.command is None:
            raise ValidationError(f"a command is required: {', '.join(COMMANDS)}")
        with warnings.catch_warnings():
            warnings.simplefilter("ignore")
            report = HANDLERS[args.command](args)
        text = render(report, args.format)
        if args.out:
            with open(args.out, "w", encoding="utf-8") as fh:
                fh.write(text)
        else:
            sys.stdout.write(text)
        return EXIT_OK
    except ValidationError as exc:
        return _fail("validation", exc, EXIT_VALIDATION)
    except (DiagnosticError, StopruleError) as exc:
        return _fail("diagnostic", exc, EXIT_DIAGNOSTIC)
    except OSError as exc:
        return _fail("validation", exc, EXIT_VALIDATION)


def main():
    sys.exit(run())


if __name__ == "__main__":
    main()
