"""Command-line front end.

Every subcommand writes one JSON document (or CSV with ``--format csv``) to
stdout and diagnostics to stderr.  Exit codes: 0 success, 1 internal fault,
2 input error, 3 model error, 4 budget guard.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import math
import re
import sys
from fractions import Fraction

import numpy as np

from . import __version__
from .chain import build_chain, verify_spectral
from .decomposer import count_legal, decompose, enumerate_legal, is_legal, recompose
from .errors import InputError, InternalFault, ZeckError
from .functionals import (
    asymptotic_variance,
    conditioned_mean_counting,
    conditioned_mean_weighted_chain,
    group_inverse,
    group_inverse_residuals,
    lekkerkerker_constants,
    state_indicator,
)
from .gaps import gap_law_by_paths, limit_gap_law, maxgap_exact_cdf, maxgap_law, spacing_margin
from .oracle import exhaustive_stats, transfer_gap_frequencies, transfer_stats
from .recurrence import Recurrence, scale_sequence
from .sampler import (
    estimate,
    lln_tail_fraction,
    sample_paths,
    standardized_summands,
    weighted_ks_normal,
)

INVARIANT_TOL = 1e-10


# ---------------------------------------------------------------- output


def _fraction(v: Fraction) -> dict:
    return {"num": str(v.numerator), "den": str(v.denominator), "decimal": float(v)}


def _float_text(x: float) -> str:
    if math.isnan(x) or math.isinf(x):
        raise InternalFault(f"non-finite value {x} in output")
    text = format(x, ".17g")
    if not any(ch in text for ch in ".en"):
        text += ".0"
    return text


def to_json(obj, indent: int = 2, level: int = 0) -> str:
    """Deterministic JSON: floats at 17 significant digits, fractions as string pairs."""
    pad = " " * (indent * (level + 1))
    end = " " * (indent * level)
    if isinstance(obj, Fraction):
        obj = _fraction(obj)
    if isinstance(obj, np.ndarray):
        obj = obj.tolist()
    if isinstance(obj, (np.integer,)):
        obj = int(obj)
    if isinstance(obj, (np.floating,)):
        obj = float(obj)
    if obj is None or isinstance(obj, (bool, str)):
        return json.dumps(obj)
    if isinstance(obj, int):
        return str(obj)
    if isinstance(obj, float):
        return _float_text(obj)
    if isinstance(obj, dict):
        if not obj:
            return "{}"
        items = [f"{pad}{json.dumps(str(k))}: {to_json(v, indent, level + 1)}" for k, v in obj.items()]
        return "{\n" + ",\n".join(items) + "\n" + end + "}"
    if isinstance(obj, (list, tuple)):
        if not obj:
            return "[]"
        if all(isinstance(v, (int, float, np.integer, np.floating)) and not isinstance(v, bool) for v in obj):
            return "[" + ", ".join(to_json(v) for v in obj) + "]"
        items = [pad + to_json(v, indent, level + 1) for v in obj]
        return "[\n" + ",\n".join(items) + "\n" + end + "]"
    raise InternalFault(f"cannot serialize {type(obj).__name__}")


def _flatten(obj, prefix=""):
    if isinstance(obj, Fraction):
        yield prefix, f"{obj.numerator}/{obj.denominator}"
    elif isinstance(obj, dict):
        for k, v in obj.items():
            yield from _flatten(v, f"{prefix}.{k}" if prefix else str(k))
    elif isinstance(obj, (list, tuple, np.ndarray)):
        for i, v in enumerate(obj):
            yield from _flatten(v, f"{prefix}[{i}]")
    elif isinstance(obj, float):
        yield prefix, _float_text(obj)
    else:
        yield prefix, "" if obj is None else str(obj)


def to_csv(obj) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["key", "value"])
    for k, v in _flatten(obj):
        w.writerow([k, v])
    return buf.getvalue()


# ---------------------------------------------------------------- helpers


def _k_range(text: str) -> list[int]:
    m = re.fullmatch(r"\s*(-?\d+)\s*(?:\.\.\s*(-?\d+))?\s*", text)
    if m:
        lo = int(m.group(1))
        hi = int(m.group(2)) if m.group(2) is not None else lo
        if hi < lo:
            raise InputError("BAD_RANGE", f"empty range {text!r}")
        return list(range(lo, hi + 1))
    try:
        return [int(v) for v in text.split(",")]
    except ValueError as exc:
        raise InputError("BAD_RANGE", f"expected 'a..b' or a comma list, got {text!r}") from exc


def _rec(args) -> Recurrence:
    if args.rec is None:
        raise InputError("MISSING_RECURRENCE", "--rec is required")
    return Recurrence.parse(args.rec)


def _gap_table(law, kmax: int) -> list[dict]:
    return [{"k": k, "mass": law.mass(k)} for k in range(kmax + 1)]


# ---------------------------------------------------------------- commands


def cmd_decompose(args) -> dict:
    rec = _rec(args)
    if args.n is None:
        raise InputError("MISSING_INTEGER", "--n is required")
    ds = decompose(rec, args.n)
    return {"recurrence": rec.to_dict(), "N": args.n, "digits": ds.to_list(), "length": len(ds), "text": str(ds)}


def cmd_chain(args) -> dict:
    rec = _rec(args)
    model = build_chain(rec)
    report = verify_spectral(model, INVARIANT_TOL)
    out = {
        "recurrence": rec.to_dict(),
        "states": len(model.space),
        "start_states": len(model.space.start_states),
        "lambdaC": model.lambdaC,
        "lambda_c": model.lambda_c,
        "gamma": model.gamma,
        "invariants_passed": report.passed,
    }
    if args.dump:
        out["model"] = model.to_dict()
        out["spectral_report"] = report.to_dict()
    return out


def cmd_constants(args) -> dict:
    rec = _rec(args)
    model = build_chain(rec)
    qs = group_inverse(model)
    lek = lekkerkerker_constants(model, qsharp=qs)
    var = asymptotic_variance(model, qsharp=qs)
    return {
        "recurrence": rec.to_dict(),
        "lambdaC": model.lambdaC,
        "c_lek": lek.c_lek,
        "d": lek.d,
        "sigma2": var.sigma2,
        "states": [list(z) for z in model.space.states],
        "piQ": model.piQ,
        "piQ1": model.piQ1,
    }


def cmd_gaps(args) -> dict:
    rec = _rec(args)
    model = build_chain(rec)
    law = limit_gap_law(model)
    out = {"recurrence": rec.to_dict(), "law": law.to_dict(args.kmax), "table": _gap_table(law, args.kmax)}
    if args.transfer_n is not None:
        freq = transfer_gap_frequencies(rec, args.transfer_n, args.kmax)
        out["transfer"] = {"n": args.transfer_n, "frequencies": {str(k): v for k, v in freq.items()}}
        out["transfer"]["max_abs_error"] = max(abs(freq[k] - law.mass(k)) for k in freq)
    return out


def cmd_maxgap(args) -> dict:
    rec = _rec(args)
    model = build_chain(rec)
    law = maxgap_law(model)
    if args.n is None or args.n < 1:
        raise InputError("BAD_LENGTH", "--n must be a positive integer")
    n = args.n
    centre = law.centering(n)
    rows = []
    for k in _k_range(args.k):
        m = centre + k
        row = {"k": k, "m": m, "limit_cdf": law.cdf_offset(k), "renewal_cdf": law.renewal_cdf(n, k)}
        if not args.no_exact:
            row["exact_cdf"] = float(maxgap_exact_cdf(rec, n, m))
        rows.append(row)
    return {
        "recurrence": rec.to_dict(),
        "n": n,
        "law": law.to_dict(),
        "log_scale": law.log_scale(n),
        "centering": centre,
        "spacing_margin": spacing_margin(n, law.alpha, law.q),
        "table": rows,
    }


def cmd_oracle(args) -> dict:
    rec = _rec(args)
    out: dict = {"recurrence": rec.to_dict()}
    if args.length is not None:
        ex = exhaustive_stats(rec, args.length)
        out["exhaustive"] = {
            "n": ex.n,
            "count": ex.count,
            "mean_summands": ex.mean_summands,
            "var_summands": ex.var_summands,
            "gap_histogram": {str(k): v for k, v in ex.gap_histogram.items()},
            "max_gap_counts": {str(k): v for k, v in ex.max_gap_counts.items()},
        }
    if args.transfer_n is not None:
        n = args.transfer_n
        mean = transfer_stats(rec, n, "mean-summands")
        second = transfer_stats(rec, n, "second-moment-summands")
        out["transfer"] = {
            "n": n,
            "string_count": transfer_stats(rec, n, "string-count"),
            "mean_summands": mean,
            "var_summands": second - mean * mean,
            "total_gaps": transfer_stats(rec, n, "total-gaps"),
            "gap_frequencies": {str(k): v for k, v in transfer_gap_frequencies(rec, n, args.kmax).items()},
        }
    if len(out) == 1:
        raise InputError("MISSING_LENGTH", "give --length and/or --transfer-n")
    return out


def cmd_sample(args) -> dict:
    rec = _rec(args)
    model = build_chain(rec)
    if args.length is None:
        raise InputError("MISSING_LENGTH", "--length is required")
    batch = sample_paths(model, args.length, args.trials, args.seed)
    qs = group_inverse(model)
    lek = lekkerkerker_constants(model, qsharp=qs)
    sigma2 = asymptotic_variance(model, qsharp=qs).sigma2
    mean, se = estimate(batch, "summand-count")
    out = {
        "recurrence": rec.to_dict(),
        "batch": batch.summary(),
        "summand_count": {"estimate": mean, "stderr": se, "prediction": lek.c_lek * (args.length + 1) + lek.d},
        "lln_tail_fraction": lln_tail_fraction(batch, lek.c_lek, args.eps),
        "max_gap": dict(zip(("estimate", "stderr"), estimate(batch, "max-gap"))),
    }
    if sigma2 > 0:
        out["ks_normal"] = weighted_ks_normal(standardized_summands(batch, lek.c_lek, lek.d, sigma2), batch.weights)
    if args.raw_csv:
        with open(args.raw_csv, "w", newline="") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(["trial", "weight", "summands", "max_gap", "total_gaps"])
            tot = batch.gap_hist.sum(axis=1)
            for i in range(batch.trials):
                w.writerow([i, _float_text(float(batch.weights[i])), int(batch.summands[i]), int(batch.max_gap[i]), int(tot[i])])
    return out


def verify_recurrence(rec: Recurrence, n_small: int = 10, tol: float = INVARIANT_TOL) -> dict:
    """Every structural check available for ``rec``; ``passed`` is their conjunction."""
    model = build_chain(rec)
    spectral = verify_spectral(model, tol)
    qs = group_inverse(model)
    gi = group_inverse_residuals(model, qs)
    law = limit_gap_law(model)
    paths = gap_law_by_paths(model, 12)
    masses = [law.mass(k) for k in range(40)]
    checks = {
        "spectral": spectral.passed,
        "group_inverse": all(v <= 1e-8 for v in gi.values()),
        "gap_law_normalized": abs(law.total_mass() - 1.0) <= 1e-9,
        "gap_law_nonnegative": min(masses) >= -1e-15,
        "gap_law_path_sums": max(abs(law.mass(k) - paths[k]) for k in paths) <= 1e-9,
        "variance_nonnegative": asymptotic_variance(model, qsharp=qs).sigma2 >= 0,
    }
    g = scale_sequence(rec, n_small + 3)
    counts_ok = all(transfer_stats(rec, n, "string-count") == g[n + 1] - g[n] for n in range(n_small + 1))
    checks["string_count"] = counts_ok
    decomp_ok = True
    for n in range(min(n_small, 8) + 1):
        seen = sorted(recompose(ds) for ds in enumerate_legal(rec, n))
        decomp_ok &= seen == list(range(g[n], g[n + 1])) and len(seen) == count_legal(rec, n)
    checks["bijection"] = decomp_ok
    checks["decompose_roundtrip"] = all(
        recompose(ds := decompose(rec, N)) == N and is_legal(rec, ds.a) for N in range(1, min(g[n_small], 5000))
    )
    worst = 0.0
    for gv in [None] + [state_indicator(model.space, i) for i in range(len(model.space))]:
        for n in (1, n_small):
            worst = max(worst, abs(conditioned_mean_weighted_chain(model, gv, n) - float(conditioned_mean_counting(rec, gv, n))))
    checks["weighted_chain_mean"] = worst <= 1e-9
    return {
        "recurrence": rec.to_dict(),
        "passed": all(checks.values()),
        "checks": checks,
        "spectral_residuals": spectral.residuals,
        "group_inverse_residuals": gi,
        "gap_law_total_mass": law.total_mass(),
        "weighted_chain_mean_max_error": worst,
    }


def cmd_verify(args) -> dict:
    return verify_recurrence(_rec(args))


COMMANDS = {
    "decompose": cmd_decompose,
    "chain": cmd_chain,
    "constants": cmd_constants,
    "gaps": cmd_gaps,
    "maxgap": cmd_maxgap,
    "oracle": cmd_oracle,
    "sample": cmd_sample,
    "verify": cmd_verify,
}


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise InputError("BAD_ARGUMENTS", message)


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--rec", help='recurrence, "L=2;c=1,1" or JSON {"L":2,"c":[1,1]}')
    common.add_argument("--format", choices=("json", "csv"), default="json")
    common.add_argument("--config", help="JSON file whose keys supply default flag values")

    p = _Parser(prog="zeckchain", description="Generalized Zeckendorf decompositions and their Markov chain model.")
    p.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = p.add_subparsers(dest="command", required=True, parser_class=_Parser)

    s = sub.add_parser("decompose", parents=[common], help="legal decomposition of an integer")
    s.add_argument("--n", type=int)
    s = sub.add_parser("chain", parents=[common], help="state space and transformed chain")
    s.add_argument("--dump", action="store_true", help="include every vector and matrix")
    sub.add_parser("constants", parents=[common], help="mean and variance constants of the summand count")
    s = sub.add_parser("gaps", parents=[common], help="limiting gap distribution")
    s.add_argument("--kmax", type=int, default=12)
    s.add_argument("--transfer-n", type=int, dest="transfer_n")
    s = sub.add_parser("maxgap", parents=[common], help="maximal-gap limit law")
    s.add_argument("--n", type=int)
    s.add_argument("--k", default="-1..3", help="offsets from the centering, 'a..b' or a comma list")
    s.add_argument("--no-exact", action="store_true", dest="no_exact", help="skip the exact DP column")
    s = sub.add_parser("oracle", parents=[common], help="exact statistics by enumeration and transfer DP")
    s.add_argument("--length", type=int, help="enumerate every string of length n+1 for this n")
    s.add_argument("--transfer-n", type=int, dest="transfer_n")
    s.add_argument("--kmax", type=int, default=12)
    s = sub.add_parser("sample", parents=[common], help="importance-weighted Monte Carlo")
    s.add_argument("--length", type=int, help="path length n (strings of length n+1)")
    s.add_argument("--trials", type=int, default=10000)
    s.add_argument("--seed", type=int, default=0)
    s.add_argument("--eps", type=float, default=0.01)
    s.add_argument("--raw-csv", dest="raw_csv", help="write one row per trial to this path")
    sub.add_parser("verify", parents=[common], help="full invariant sweep")
    return p


def _join_negative_values(argv: list[str]) -> list[str]:
    # argparse reads "--k -1..3" as two options; glue the value on
    out = []
    i = 0
    while i < len(argv):
        tok = argv[i]
        if tok == "--k" and i + 1 < len(argv) and re.match(r"-\d", argv[i + 1]):
            out.append(f"--k={argv[i + 1]}")
            i += 2
            continue
        out.append(tok)
        i += 1
    return out


def _apply_config(parser: argparse.ArgumentParser, argv: list[str], args) -> argparse.Namespace:
    if not args.config:
        return args
    try:
        with open(args.config) as fh:
            cfg = json.load(fh)
    except (OSError, json.JSONDecodeError) as exc:
        raise InputError("BAD_CONFIG", f"cannot read config {args.config!r}: {exc}") from exc
    if not isinstance(cfg, dict):
        raise InputError("BAD_CONFIG", "config must be a JSON object")
    if isinstance(cfg.get("rec"), dict):
        cfg["rec"] = json.dumps(cfg["rec"])
    known = vars(args)
    unknown = [k for k in cfg if k.replace("-", "_") not in known]
    if unknown:
        raise InputError("BAD_CONFIG", f"unknown config keys {unknown}")
    explicit = {a.split("=", 1)[0].lstrip("-").replace("-", "_") for a in argv if a.startswith("--")}
    for k, v in cfg.items():
        key = k.replace("-", "_")
        if key not in explicit:
            setattr(args, key, v)
    return args


def run_cli(argv: list[str] | None = None, stdout=None, stderr=None) -> int:
    stdout = stdout or sys.stdout
    stderr = stderr or sys.stderr
    argv = _join_negative_values(list(sys.argv[1:] if argv is None else argv))
    parser = build_parser()
    try:
        try:
            args = parser.parse_args(argv)
        except SystemExit as exc:  # --help / --version
            return int(exc.code or 0)
        args = _apply_config(parser, argv, args)
        result = COMMANDS[args.command](args)
        text = to_csv(result) if args.format == "csv" else to_json(result) + "\n"
        stdout.write(text)
        if args.command == "verify" and not result["passed"]:
            print("error: invariant sweep failed", file=stderr)
            return 1
        return 0
    except ZeckError as exc:
        print(f"error: {exc}", file=stderr)
        return exc.exit_code


def main() -> None:
    sys.exit(run_cli())
