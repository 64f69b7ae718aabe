"""Command line: root tables, analysis, synthesis and verification of artifacts.

Exit codes: 0 ok, 2 usage, 3 precision or resource limit, 4 a checked
condition failed, 5 I/O or unreadable artifact.
"""

import argparse
import csv
import io
import json
import os
import sys
import time
from fractions import Fraction

import gmpy2
import mpmath
from gmpy2 import mpfr, mpq, mpz

from . import __version__
from . import exponents as ex
from . import lattice as lc
from .engine import (Enclosure, PrecisionError, Target, TieError, best_approximations,
                     exponent_stats, records_for_vectors)
from .patterns import PatternError, k_estimate, pattern_word, schmidt_check
from .synth import (BudgetError, StepFailure, SynthConfig, ball_target, exponent_estimate,
                    run, verify_conditions)

EXIT_OK, EXIT_USAGE, EXIT_PRECISION, EXIT_CONDITION, EXIT_IO = 0, 2, 3, 4, 5
ENV_PRECISION = "DIOPH_LAB_PRECISION"
ARTIFACT_KIND = "dioph-lab/synthesis"


class UsageError(Exception):
    pass


class ArtifactError(Exception):
    pass


# ------------------------------------------------------------------ values

def int_str(x):
    return mpz(x).digits(10)


def parse_int(s):
    if not isinstance(s, str):
        raise ArtifactError(f"expected an integer string, got {type(s).__name__}")
    try:
        return mpz(s)
    except ValueError:
        raise ArtifactError(f"not an integer: {s[:40]!r}") from None


def parse_bound(s):
    """Positive integer written plainly, as b**e or as 1eN."""
    t = s.strip().replace("^", "**")
    try:
        if "**" in t:
            b, e = t.split("**")
            v = mpz(b) ** int(e)
        elif "e" in t.lower():
            m, e = t.lower().split("e")
            v = mpz(m) * mpz(10) ** int(e)
        else:
            v = mpz(t)
    except ValueError:
        raise UsageError(f"bad --qmax {s!r}") from None
    if v < 1:
        raise UsageError("--qmax must be positive")
    return v


def rat_str(x):
    x = mpq(x)
    return int_str(x.numerator) if x.denominator == 1 else f"{int_str(x.numerator)}/{int_str(x.denominator)}"


def _sqrt_dec(x, digits, up):
    """sqrt(x) for a rational x >= 0 as a decimal string, rounded down or up."""
    x = mpq(x)
    if x == 0:
        return "0"
    num, den = x.numerator, x.denominator
    # 10^(2e) * x has about 2*digits integer digits
    e = digits - (len(str(num)) - len(str(den))) // 2
    if e >= 0:
        n2, d2 = num * mpz(10) ** (2 * e), den
    else:
        n2, d2 = num, den * mpz(10) ** (-2 * e)
    m = gmpy2.isqrt(n2 // d2)
    if up and m * m * d2 != n2:
        m += 1
    s = str(m)
    exp = len(s) - 1 - e
    return f"{s[0]}.{s[1:] or '0'}e{exp:+d}"


def sqrt_bounds(lo, hi, digits=20):
    """Decimal strings bracketing sqrt of the rational interval [lo, hi]."""
    return _sqrt_dec(lo, digits, False), _sqrt_dec(hi, digits, True)


def manifest(command, config, precision, seed=None, started=None):
    return {
        "command": command,
        "config": config,
        "version": __version__,
        "precision": precision,
        "seed": seed,
        "timing_s": None if started is None else round(time.time() - started, 3),
        "libraries": {"gmpy2": gmpy2.version(), "mpmath": mpmath.__version__},
    }


def default_precision(args):
    if getattr(args, "precision_bits", None):
        return args.precision_bits
    env = os.environ.get(ENV_PRECISION)
    if env:
        try:
            return int(env)
        except ValueError:
            raise UsageError(f"{ENV_PRECISION} must be an integer, got {env!r}") from None
    return 192


def write_text(path, text):
    if path in (None, "-"):
        sys.stdout.write(text)
        return
    try:
        with open(path, "w") as fh:
            fh.write(text)
    except OSError as exc:
        raise ArtifactError(f"cannot write {path}: {exc}") from exc


def dump_json(obj, path):
    write_text(path, json.dumps(obj, indent=1) + "\n")


def dump_csv(header, rows, man, path):
    buf = io.StringIO()
    for line in json.dumps(man, indent=None).splitlines():
        buf.write(f"# manifest: {line}\n")
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    w.writerows(rows)
    write_text(path, buf.getvalue())


# ------------------------------------------------------------------ targets

_MP_NAMES = {n: getattr(mpmath, n) for n in (
    "sqrt", "cbrt", "root", "exp", "log", "pi", "e", "phi", "sin", "cos", "tan", "zeta", "euler", "mpf")}


def parse_target(spec, bits=None):
    """Target from a command-line spec.

    Forms: '@file.json' (a synthesis artifact), 'mp:expr,expr' (mpmath
    expressions), or comma separated rationals 'p/q' and decimals.
    """
    spec = spec.strip()
    if spec.startswith("@"):
        art = load_artifact(spec[1:])
        return artifact_target(art), art
    if spec.startswith("mp:"):
        exprs = [e.strip() for e in spec[3:].split(",")]

        def make(expr):
            return lambda: eval(expr, {"__builtins__": {}}, _MP_NAMES)  # restricted namespace
        try:
            for e in exprs:
                make(e)()
        except Exception as exc:
            raise UsageError(f"cannot evaluate target expression: {exc}") from None
        return Target.from_mpmath([make(e) for e in exprs], label=spec), None
    parts = [p.strip() for p in spec.split(",") if p.strip()]
    if not 1 <= len(parts) <= 3:
        raise UsageError("target needs 1 to 3 coordinates")
    if all("/" in p or ("." not in p and "e" not in p.lower()) for p in parts):
        try:
            return Target.rational([Fraction(p) for p in parts], label=spec), None
        except (ValueError, ZeroDivisionError):
            raise UsageError(f"bad rational target {spec!r}") from None
    try:
        return Target.from_decimal(parts, label=spec), None
    except ValueError:
        raise UsageError(f"bad decimal target {spec!r}") from None


# ---------------------------------------------------------------- artifacts

def artifact_dict(result, man):
    enc = result.alpha_enclosure
    shift = enc.den.bit_length() - 1
    word = result.realized_word
    return {
        "kind": ARTIFACT_KIND,
        "manifest": man,
        "config": config_dict(result.config),
        "prehistory": [[int_str(x) for x in v] for v in result.prehistory],
        "vectors": [[int_str(x) for x in v] for v in result.vectors],
        # alpha lies in the box (c_i - r) / 2^s <= alpha_i <= (c_i + r) / 2^s
        "alpha": {"den_log2": shift, "centers": [int_str(c) for c in enc.centers], "radius": int_str(enc.rad)},
        "word": str(word) if word is not None else None,
        "ratios": [round(x, 9) for x in result.realized_ratios],
        "conditions": jsonable(result.condition_report),
        "log": result.log,
    }


def config_dict(cfg):
    return {"lambda": cfg.lam, "k": cfg.k, "q1": int_str(cfg.q1), "steps": cfg.steps, "seed": cfg.seed,
            "seed_q": cfg.seed_q, "search_radius_cap": cfg.search_radius_cap,
            "precision_cap": cfg.precision_cap, "retry_doublings": cfg.retry_doublings,
            "max_bits": cfg.max_bits}


def config_from(d):
    try:
        return SynthConfig(lam=str(d["lambda"]), k=int(d["k"]), q1=int(mpz(d["q1"])), steps=int(d["steps"]),
                           seed=int(d["seed"]), seed_q=int(d["seed_q"]),
                           search_radius_cap=int(d["search_radius_cap"]), precision_cap=int(d["precision_cap"]),
                           retry_doublings=int(d["retry_doublings"]), max_bits=int(d["max_bits"]))
    except (KeyError, TypeError, ValueError) as exc:
        raise ArtifactError(f"bad config block: {exc}") from None


def jsonable(x):
    if isinstance(x, dict):
        return {k: jsonable(v) for k, v in x.items()}
    if isinstance(x, (list, tuple)):
        return [jsonable(v) for v in x]
    if isinstance(x, (bool, int, float, str)) or x is None:
        return x
    if isinstance(x, type(mpz(0))):
        return int_str(x)
    if isinstance(x, type(mpq(0))):
        return rat_str(x)
    return str(x)


def load_artifact(path):
    try:
        with open(path) as fh:
            text = fh.read()
    except OSError as exc:
        raise ArtifactError(f"cannot read {path}: {exc}") from exc
    if not text.strip():
        raise ArtifactError(f"{path}: empty file")
    try:
        data = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ArtifactError(f"{path}: not JSON ({exc.msg} at line {exc.lineno})") from None
    if not isinstance(data, dict) or data.get("kind") != ARTIFACT_KIND:
        raise ArtifactError(f"{path}: not a synthesis artifact")
    for key in ("config", "vectors", "prehistory", "alpha"):
        if key not in data:
            raise ArtifactError(f"{path}: missing {key!r}")
    try:
        data["_vectors"] = [tuple(parse_int(x) for x in v) for v in data["vectors"]]
        data["_prehistory"] = [tuple(parse_int(x) for x in v) for v in data["prehistory"]]
        a = data["alpha"]
        data["_alpha"] = Enclosure(tuple(parse_int(c) for c in a["centers"]), mpz(1) << int(a["den_log2"]),
                                   parse_int(a["radius"]))
    except (TypeError, KeyError, ValueError) as exc:
        raise ArtifactError(f"{path}: malformed field: {exc}") from None
    if any(len(v) != 4 for v in data["_vectors"] + data["_prehistory"]) or len(data["_alpha"].centers) != 3:
        raise ArtifactError(f"{path}: vectors must have 4 coordinates and alpha 3")
    data["_config"] = config_from(data["config"])
    return data


def artifact_target(art):
    cfg = art["_config"]
    return ball_target(art["_alpha"], label=f"artifact(lambda={cfg.lam},k={cfg.k})")


# ------------------------------------------------------------------ reports

def record_rows(records):
    rows = []
    for r in records:
        lo, hi = r.xi_sq
        xl, xh = sqrt_bounds(lo, hi)
        rows.append({"q": int_str(r.q), "a": [int_str(x) for x in r.a], "xi_lo": xl, "xi_hi": xh})
    return rows


def analysis(records):
    out = {}
    try:
        word = pattern_word(records)
    except PatternError as exc:
        out["word"] = None
        out["word_error"] = str(exc)
        return out, None
    out["word"] = str(word)
    out["witnesses"] = [list(w) for w in word.witnesses]
    try:
        ke = k_estimate(word)
        out["k_estimate"] = ke.k_value if ke.k_value != float("inf") else "inf"
        out["run_counts"] = {str(n): c for n, c in ke.evidence["counts"].items()}
    except PatternError as exc:
        out["k_estimate"] = None
        out["k_error"] = str(exc)
    reps = schmidt_check(records, word)
    out["schmidt"] = [{"run_length": r.run_length, "nu": r.nu, "l": r.l, "H2_Gstar": int_str(r.h2_gstar),
                       "H2_G": int_str(r.h2_g), "H2_L": int_str(r.h2_l), "holds": r.holds,
                       "det_ratio": r.det_ratio} for r in reps]
    return out, word


def exponent_block(records):
    try:
        e = exponent_stats(records)
    except ValueError as exc:
        return {"error": str(exc)}
    return {"omega_est": e.omega_est, "omega_hat_est": e.omega_hat_est,
            "ratio_limsup_est": e.ratio_limsup_est, "window": list(e.window), "policy": e.policy}


# ----------------------------------------------------------------- commands

def parse_grid(text):
    """'0.34:0.99:0.01' or '0.4,0.5' into decimal strings."""
    try:
        if ":" in text:
            a, b, step = (mpmath.mpf(x) for x in text.split(":"))
            n = int(mpmath.nint((b - a) / step))
            digits = max(len(x.split(".")[-1]) if "." in x else 0 for x in text.split(":"))
            return [f"{float(a + i * step):.{digits}f}" for i in range(n + 1)]
        return [x.strip() for x in text.split(",") if x.strip()]
    except (ValueError, ZeroDivisionError):
        raise UsageError(f"bad grid {text!r}") from None


def parse_krange(text):
    try:
        if "-" in text:
            a, b = text.split("-")
            return list(range(int(a), int(b) + 1))
        return [int(x) for x in text.split(",")]
    except ValueError:
        raise UsageError(f"bad k range {text!r}") from None


def cmd_roots(args):
    t0 = time.time()
    lams = parse_grid(args.lam)
    ks = parse_krange(args.k)
    for lam in lams:
        if not 0.34 <= float(lam) <= 0.99:
            raise UsageError(f"lambda={lam} outside [0.34, 0.99]")
    if not ks or min(ks) < 1:
        raise UsageError("k must be >= 1")
    kmax = max(ks)
    header = ["lambda", "k", "g_k", "G_lambda", "gbar"] + [f"g_k{j}" for j in range(kmax)] + ["u_period"]
    rows = []
    for lam in lams:
        G = ex.G3_closed(lam)
        gb = ex.gbar(lam)
        for k in ks:
            c = ex.exponent_chain(k, lam)
            gk = [mpmath.nstr(x, 15) for x in c.g_kj] + [""] * (kmax - k)
            rows.append([lam, k, mpmath.nstr(c.g_k, 15), mpmath.nstr(G, 15), mpmath.nstr(gb, 15)] + gk
                        + [";".join(mpmath.nstr(u, 12) for u in c.u_seq)])
    man = manifest("roots", {"lambda": args.lam, "k": args.k}, {"mp_bits": ex.WORKING_PREC}, started=t0)
    if args.format == "json":
        dump_json({"manifest": man, "columns": header, "rows": rows}, args.out)
    else:
        dump_csv(header, rows, man, args.out)
    return EXIT_OK


def cmd_analyze(args):
    t0 = time.time()
    bits = default_precision(args)
    target, art = parse_target(args.target)
    if args.qmax is None:
        if art is None:
            raise UsageError("--qmax is required unless the target is an artifact")
        qmax = art["_vectors"][min(9, len(art["_vectors"]) - 1)][0]
    else:
        qmax = parse_bound(args.qmax)
    recs = best_approximations(target, qmax, ties=args.ties)
    body, _ = analysis(recs)
    terminated = bool(recs) and recs[-1].xi_sq[1] == 0
    man = manifest("analyze", {"target": args.target, "qmax": int_str(qmax), "ties": args.ties},
                   {"initial_bits": bits}, started=t0)
    rows = record_rows(recs)
    if args.format == "csv":
        dump_csv(["q", "a1", "a2", "a3", "xi_lo", "xi_hi"],
                 [[r["q"]] + (r["a"] + ["", "", ""])[:3] + [r["xi_lo"], r["xi_hi"]] for r in rows], man, args.out)
        return EXIT_OK
    rep = {"manifest": man, "records": rows, "terminated_exact": terminated,
           "exponents": exponent_block(recs), **body}
    dump_json(rep, args.out)
    return EXIT_OK


def cmd_synthesize(args):
    t0 = time.time()
    try:
        lam = mpmath.mpf(args.lam)
    except ValueError:
        raise UsageError(f"bad --lambda {args.lam!r}") from None
    if not mpmath.mpf("0.34") <= lam <= mpmath.mpf("0.99"):
        raise UsageError(f"lambda={args.lam} outside [0.34, 0.99]; below 1/3 there is no admissible window")
    if args.k < 1 or args.steps < 5:
        raise UsageError("need k >= 1 and steps >= 5")
    cfg = SynthConfig(lam=args.lam, k=args.k, steps=args.steps, q1=int(mpz(args.q1)), seed=args.seed,
                      precision_cap=default_precision(args))
    if args.max_bits:
        cfg.max_bits = args.max_bits
    result = run(cfg)
    man = manifest("synthesize", config_dict(cfg), {"radius_bits": cfg.precision_cap}, seed=cfg.seed, started=t0)
    art = artifact_dict(result, man)
    est = exponent_estimate(result)
    art["exponents"] = {"omega_est": est.omega_est, "omega_hat_est": est.omega_hat_est,
                        "ratio_limsup_est": est.ratio_limsup_est, "window": list(est.window)}
    dump_json(art, args.out)
    summary = {"manifest": man, "word": art["word"], "ratios": art["ratios"], "exponents": art["exponents"],
               "exact_ok": result.condition_report["exact_ok"], "bands_ok": result.condition_report["bands_ok"],
               "bits_last": int(result.vectors[-1][0]).bit_length()}
    if args.report:
        dump_json(summary, args.report)
    elif args.out not in (None, "-"):
        dump_json(summary, "-")
    return EXIT_OK if result.condition_report["exact_ok"] else EXIT_CONDITION


def verify_artifact(art, roundtrip=10):
    """Re-derive every check from the stored integers; returns (ok, report)."""
    cfg = art["_config"]
    chain = cfg.chain()
    pre, vecs = art["_prehistory"], art["_vectors"]
    allv = pre + vecs
    if len(vecs) < 5:
        raise ArtifactError("artifact holds fewer than 5 vectors")
    try:
        cond = verify_conditions(allv, len(pre), chain)
    except lc.LatticeError as exc:
        cond = {"exact_ok": False, "error": str(exc)}
    rep = {"conditions": jsonable(cond)}
    try:
        word = pattern_word(vecs, burn_in=0)
        rep["word"] = str(word)
    except (PatternError, lc.LatticeError) as exc:
        word = None
        rep["word"] = None
        rep["word_error"] = str(exc)
    rep["word_matches"] = rep["word"] == art.get("word")
    per = "A" * cfg.k + "B"
    w = rep["word"] or ""
    rep["word_periodic"] = len(w) > len(per) and _eventually_periodic(w, per)
    target = artifact_target(art)
    n = min(roundtrip, len(vecs))
    try:
        recs = best_approximations(target, vecs[n - 1][0])
        qs = [r.q for r in recs]
        i = qs.index(vecs[0][0]) if vecs[0][0] in qs else None
        got = [tuple(r.vector()) for r in recs[i:i + n]] if i is not None else []
        rep["roundtrip"] = got == [tuple(v) for v in vecs[:n]]
    except (PrecisionError, TieError) as exc:
        rep["roundtrip"] = False
        rep["roundtrip_error"] = str(exc)
    if word is not None:
        reps = schmidt_check(vecs, word)
        rep["schmidt_all_hold"] = all(r.holds for r in reps)
    else:
        rep["schmidt_all_hold"] = False
    ok = bool(cond.get("exact_ok")) and rep["word_matches"] and rep["word_periodic"] and rep["roundtrip"] \
        and rep["schmidt_all_hold"]
    return ok, rep


def _eventually_periodic(word, period):
    """True if, after at most one period of burn-in, the word repeats `period`."""
    p = len(period)
    return any(len(word) - off >= p and all(c == period[i % p] for i, c in enumerate(word[off:]))
               for off in range(p))


def cmd_verify(args):
    t0 = time.time()
    art = load_artifact(args.artifact)
    ok, rep = verify_artifact(art)
    rep["manifest"] = manifest("verify", {"artifact": args.artifact}, art["manifest"].get("precision"),
                               seed=art["_config"].seed, started=t0)
    rep["ok"] = ok
    dump_json(rep, args.out)
    return EXIT_OK if ok else EXIT_CONDITION


def cmd_selftest(args):
    t0 = time.time()
    checks = {}
    roy = ex.roy_lambda()
    g = ex.root_gk(1, roy).value
    checks["roy_constant"] = abs(g - ex.theta_of(roy)) < 1e-9 and mpmath.nstr(roy, 5) == "0.42451"
    golden = Target.from_mpmath([lambda: (mpmath.sqrt(5) - 1) / 2], label="golden")
    qs = [int(r.q) for r in best_approximations(golden, 10**5)]
    fib = [1, 2]
    while fib[-1] + fib[-2] <= 10**5:
        fib.append(fib[-1] + fib[-2])
    checks["golden_fibonacci"] = qs == fib
    res = run(SynthConfig(lam="0.5", k=1, steps=12))
    checks["synthesis_exact"] = res.condition_report["exact_ok"]
    checks["synthesis_word"] = _eventually_periodic(str(res.realized_word), "AB")
    recs = best_approximations(res.alpha, res.vectors[9][0])
    qs = [r.q for r in recs]
    i = qs.index(res.vectors[0][0]) if res.vectors[0][0] in qs else None
    checks["roundtrip"] = i is not None and [tuple(r.vector()) for r in recs[i:i + 10]] == \
        [tuple(v) for v in res.vectors[:10]]
    ok = all(checks.values())
    dump_json({"manifest": manifest("selftest", {}, {}, started=t0), "checks": checks, "ok": ok}, args.out)
    return EXIT_OK if ok else EXIT_CONDITION


# --------------------------------------------------------------------- main

class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(message)


def build_parser():
    p = _Parser(prog="dioph-lab", description=__doc__.splitlines()[0])
    p.add_argument("--version", action="version", version=__version__)
    sub = p.add_subparsers(dest="command", required=True, parser_class=_Parser)

    r = sub.add_parser("roots", help="table of g_k, G(lambda), the g_{k,j} chain and u")
    r.add_argument("--lambda", dest="lam", default="0.34:0.99:0.01", help="grid a:b:step or a,b,c")
    r.add_argument("--k", default="1-12", help="range a-b or list")
    r.add_argument("--format", choices=["json", "csv"], default="csv")
    r.add_argument("--out", default="-")
    r.set_defaults(func=cmd_roots)

    a = sub.add_parser("analyze", help="best approximations, pattern word and exponent estimates")
    a.add_argument("target", help="'p/q,...', decimals, 'mp:expr,...' or '@artifact.json'")
    a.add_argument("--qmax")
    a.add_argument("--ties", choices=["error", "strict"], default="strict")
    a.add_argument("--precision-bits", type=int)
    a.add_argument("--format", choices=["json", "csv"], default="json")
    a.add_argument("--out", default="-")
    a.set_defaults(func=cmd_analyze)

    s = sub.add_parser("synthesize", help="build vectors with pattern (A^k B)^inf")
    s.add_argument("--lambda", dest="lam", required=True)
    s.add_argument("--k", type=int, required=True)
    s.add_argument("--steps", type=int, default=30)
    s.add_argument("--q1", default="1000000")
    s.add_argument("--seed", type=int, default=1)
    s.add_argument("--precision-bits", type=int)
    s.add_argument("--max-bits", type=int, help="size limit for the largest vector")
    s.add_argument("--out", default="-")
    s.add_argument("--report")
    s.add_argument("--format", choices=["json"], default="json")
    s.set_defaults(func=cmd_synthesize)

    v = sub.add_parser("verify", help="re-check a stored synthesis artifact")
    v.add_argument("artifact")
    v.add_argument("--out", default="-")
    v.set_defaults(func=cmd_verify)

    t = sub.add_parser("selftest", help="quick end-to-end check")
    t.add_argument("--out", default="-")
    t.set_defaults(func=cmd_selftest)
    return p


def main(argv=None):
    try:
        args = build_parser().parse_args(argv)
        return args.func(args)
    except UsageError as exc:
        print(f"dioph-lab: usage error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except (PrecisionError, BudgetError, TieError) as exc:
        print(f"dioph-lab: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_PRECISION
    except StepFailure as exc:
        print(f"dioph-lab: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_CONDITION
    except ArtifactError as exc:
        print(f"dioph-lab: {exc}", file=sys.stderr)
        return EXIT_IO
    except ex.DomainError as exc:
        print(f"dioph-lab: usage error: {exc}", file=sys.stderr)
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
