"""Batch front end: one subcommand per module, JSON in, CSV plus sidecar out.

Every command reads a JSON request (``--input``), writes a CSV table to
``--output`` and a provenance sidecar to ``<output>.json``.  Floats are
written with ``repr`` and the sidecar carries no timestamps, so repeating a
run with the same request, flags and seed reproduces both files byte for
byte.

Exit codes::

    0  success
    1  unexpected internal error
    2  malformed request (bad JSON, unknown fields, invalid values); nothing written
    3  numerical fault (no convergence, inconclusive check, out of range, ...)
    4  assertion failure (sandwich violated, inequality violated, ...)

Numerical faults raised while computing abort the run before anything is
written.  Assertion failures are detected after all rows are computed: the
table is written with its verdict column and the exit code is 4.
"""

import argparse
import csv
import functools
import hashlib
import io
import json
import math
import sys
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from . import __version__
from .errors import (AssertionFault, InequalityViolated, MismatchBeyondTolerance, NonConvergent, SandwichViolated,
                     SchemaError, TauberError)

__all__ = ["COMMANDS", "EXIT_CODES", "RunConfig", "exit_code_for", "main", "run"]

COMMANDS = ("rate", "table", "testfn", "verify-lemma", "verify-lemma-m", "pairing", "berry-esseen", "growth")

EXIT_CODES = {"ok": 0, "internal": 1, "schema": 2, "numerical": 3, "assertion": 4}


@dataclass(frozen=True)
class RunConfig:
    command: str
    input_path: str = None
    output_path: str = None
    seed: int = 0
    verbosity: int = 0
    lambda_max: str = None
    tol_quadrature: float = 1e-6
    threads: int = 1
    rows: str = "all"


@dataclass
class _Output:
    header: list
    rows: list
    summary: dict = field(default_factory=dict)
    extra_files: dict = field(default_factory=dict)  # relative name -> (header, rows)
    failure: Exception = None


def exit_code_for(exc):
    """The documented exit code of an exception raised by a command."""
    if isinstance(exc, (SchemaError, json.JSONDecodeError)):
        return EXIT_CODES["schema"]
    if isinstance(exc, AssertionFault):
        return EXIT_CODES["assertion"]
    if isinstance(exc, TauberError):
        return EXIT_CODES["numerical"]
    if isinstance(exc, (KeyError, TypeError, ValueError, OSError)):
        return EXIT_CODES["schema"]
    return EXIT_CODES["internal"]


# -- formatting --------------------------------------------------------------


def _fmt(v):
    if isinstance(v, (bool, np.bool_)):
        return "true" if v else "false"
    if v is None:
        return ""
    if isinstance(v, (float, np.floating)):
        return repr(float(v))
    if isinstance(v, (int, np.integer)):
        return str(int(v))
    return str(v)


def _csv_text(header, rows):
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    for r in rows:
        w.writerow([_fmt(r.get(h)) for h in header])
    return buf.getvalue()


def _jsonable(obj):
    if isinstance(obj, dict):
        return {str(k): _jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple, np.ndarray)):
        return [_jsonable(v) for v in obj]
    if isinstance(obj, (np.bool_, bool)):
        return bool(obj)
    if isinstance(obj, (np.integer,)):
        return int(obj)
    if isinstance(obj, (float, np.floating)):
        v = float(obj)
        return v if math.isfinite(v) else repr(v)
    return obj


def _config_hash(config, request):
    doc = {"command": config.command, "request": request, "seed": config.seed, "lambda_max": config.lambda_max,
           "tol_quadrature": config.tol_quadrature, "rows": config.rows if config.command == "table" else None}
    text = json.dumps(_jsonable(doc), sort_keys=True, separators=(",", ":"))
    return hashlib.sha256(text.encode()).hexdigest()


# -- request helpers -------------------------------------------------------------


def _require(req, *keys):
    missing = [k for k in keys if k not in req]
    if missing:
        raise SchemaError(f"request is missing {missing}")


def _check_fields(req, allowed, where="request"):
    if not isinstance(req, dict):
        raise SchemaError(f"{where} must be a JSON object")
    extra = set(req) - set(allowed)
    if extra:
        raise SchemaError(f"unknown {where} fields {sorted(extra)}")


def _pmap(func, items, threads):
    items = list(items)
    if threads <= 1 or len(items) <= 1:
        return [func(it) for it in items]
    with ThreadPoolExecutor(max_workers=threads) as pool:
        return list(pool.map(func, items))  # map keeps input order


def _grid(spec, seed=0, what="x_grid"):
    from .rates import x_grid_from_dict

    if isinstance(spec, dict) and "random" in spec:
        r = spec["random"]
        _check_fields(r, {"num", "lo", "hi"}, what + ".random")
        rng = np.random.default_rng(seed)
        return np.sort(rng.uniform(float(r["lo"]), float(r["hi"]), int(r["num"])))
    return x_grid_from_dict(spec)


def _numbers(v, what):
    try:
        arr = np.atleast_1d(np.asarray(v, dtype=float))
    except (TypeError, ValueError):
        raise SchemaError(f"{what} must be a number or a list of numbers") from None
    if arr.ndim != 1 or arr.size == 0 or not np.all(np.isfinite(arr)):
        raise SchemaError(f"{what} must be a non-empty list of finite numbers")
    return arr


def _f_value(f, x):
    from .rules import compile_rule

    if isinstance(f, (int, float)):
        return float(f)
    return float(compile_rule(f)(np.array([x]))[0])


@functools.lru_cache(maxsize=8)
def _phi(n, gamma, parity):
    from .testfn import build_phi_n

    return build_phi_n(n, gamma=gamma, parity=parity)


def _phi_from(spec, default_parity="odd"):
    spec = {} if spec is None else spec
    _check_fields(spec, {"n", "gamma", "parity"}, "phi")
    n = int(spec.get("n", 4))
    parity = spec.get("parity", default_parity)
    if parity not in ("odd", "even"):
        raise SchemaError("phi.parity must be 'odd' or 'even'")
    return _phi(n, float(spec.get("gamma", 0.5)), parity)


# -- commands --------------------------------------------------------------------


def _cmd_rate(req, cfg):
    from .rates import class_from_dict, optimize_rate

    _check_fields(req, {"class", "f", "x_grid", "m", "lambda_max"})
    _require(req, "class", "x_grid")
    cls = class_from_dict(req["class"])
    xs = _grid(req["x_grid"], cfg.seed)
    m = int(req.get("m", 1))
    lm = cfg.lambda_max if cfg.lambda_max is not None else req.get("lambda_max")
    if lm is not None and lm != "auto":
        lm = float(lm)
    f = req.get("f", 1.0)

    def one(x):
        return optimize_rate(cls, _f_value(f, x), x, m=m, lambda_max=lm).as_row()

    rows = _pmap(one, xs, cfg.threads)
    return _Output(["x", "lambda_star", "E", "penalty", "bound"], rows,
                   {"tag": cls.tag, "points": len(rows), "lambda_max": lm})


def _parse_rows(text):
    from .appendix import ROWS

    if text in (None, "all"):
        return sorted(ROWS)
    try:
        ks = [int(t) for t in str(text).split(",") if t.strip()]
    except ValueError:
        raise SchemaError(f"--rows must be 'all' or a comma-separated list, got {text!r}") from None
    bad = [k for k in ks if k not in ROWS]
    if bad or not ks:
        raise SchemaError(f"unknown table rows {bad}")
    return ks


def _cmd_table(req, cfg):
    from .appendix import appendix_table

    req = {} if req is None else req
    _check_fields(req, {"rows", "x_grid", "f"})
    specs = req.get("rows")
    if specs is None:
        specs = _parse_rows(cfg.rows)
    elif not isinstance(specs, list):
        raise SchemaError("rows must be a list of row numbers or row objects")
    xs = _grid(req["x_grid"], cfg.seed) if "x_grid" in req else None
    f = float(req.get("f", 1.0))
    results = _pmap(lambda s: appendix_table(s, xs, f), specs, cfg.threads)
    header = ["row", "label", "fitted", "reference", "tol", "residual", "flat_warnings", "pass"]
    rows, extra = [], {}
    row_header = ["row", "x", "lambda_star", "log_lambda_star", "E", "penalty", "bound", "log_bound",
                  "fitted", "reference", "pass"]
    for r in results:
        rows.append({"row": r.row, "label": r.label, "fitted": r.fitted["a"], "reference": r.reference["a"],
                     "tol": r.tol, "residual": r.residual, "flat_warnings": r.flat_warnings,
                     "pass": "pass" if r.passed else "fail"})
        extra[f"row_{r.row:02d}.csv"] = (row_header, [
            {"row": r.row, "x": res.x, "lambda_star": res.lambda_star, "log_lambda_star": res.log_lambda_star,
             "E": res.E_at_star, "penalty": res.penalty_at_star, "bound": res.bound, "log_bound": res.log_bound,
             "fitted": r.fitted["a"], "reference": r.reference["a"], "pass": "pass" if r.passed else "fail"}
            for res in r.results])
    failed = [r.row for r in results if not r.passed]
    out = _Output(header, rows, {"rows": [r.row for r in results], "failed": failed,
                                 "params": {str(r.row): r.params for r in results}}, extra)
    if failed:
        out.failure = InequalityViolated(f"table rows {failed} miss their reference exponent")
    return out


def _cmd_testfn(req, cfg):
    from .testfn import berry_esseen_phi, build_phi_n, verify_testfn

    _check_fields(req, {"kind", "n", "gamma", "parity", "n_grid", "save", "integral_tol", "band_tol"})
    kind = req.get("kind", "phi_n")
    header = ["property", "pass", "value"]
    if kind == "berry_esseen":
        tf = berry_esseen_phi(**({"n_grid": int(req["n_grid"])} if "n_grid" in req else {}))
        rows = [{"property": k, "pass": "", "value": tf.meta[k]}
                for k in ("integral", "first_moment", "abs_integral", "max_abs_hat", "tail_bound")]
        out = _Output(header, rows, {"kind": kind})
    elif kind == "phi_n":
        _require(req, "n")
        parity = req.get("parity", "odd")
        if parity not in ("odd", "even"):
            raise SchemaError("parity must be 'odd' or 'even'")
        kw = {"n_grid": int(req["n_grid"])} if "n_grid" in req else {}
        tf = build_phi_n(int(req["n"]), gamma=float(req.get("gamma", 0.5)), parity=parity, **kw)
        rep = verify_testfn(tf, integral_tol=float(req.get("integral_tol", 1e-6)),
                            band_tol=float(req.get("band_tol", 1e-6)))
        rows = [{"property": k, "pass": v["pass"], "value": v["value"]} for k, v in rep.items()]
        failed = [k for k, v in rep.items() if v["pass"] is False]
        out = _Output(header, rows, {"kind": kind, "n": tf.n, "gamma": tf.gamma, "parity": parity,
                                     "bandwidth": tf.bandwidth, "meta": tf.meta,
                                     "derivative_ratios": rep["derivatives"]["ratios"]})
        if failed:
            out.failure = InequalityViolated(f"test function fails {failed}")
    else:
        raise SchemaError(f"unknown test function kind {kind!r}")
    if req.get("save"):
        out.summary["saved"] = True
        out.extra_files["__testfn__"] = tf
    return out


def _tauber_data(req, order):
    from .tauber import HigherOrderData, TauberianData

    _require(req, "S", "F", "f")
    kw = dict(S=req["S"], X=float(req.get("X", 0.0)), F=req["F"], f=req["f"], alpha=float(req.get("alpha", 0.0)),
              breakpoints=tuple(float(b) for b in req.get("breakpoints", ())))
    if order:
        return HigherOrderData(m=int(req.get("m", 2)), **kw)
    return TauberianData(**kw)


def _lemma_common(req, cfg, order):
    fields = {"S", "F", "f", "alpha", "X", "breakpoints", "phi", "lambdas", "x_grid"}
    _check_fields(req, fields | ({"m"} if order else set()))
    _require(req, "lambdas", "x_grid")
    data = _tauber_data(req, order)
    parity = "even" if order and data.m % 2 == 0 else "odd"
    phi = _phi_from(req.get("phi"), parity)
    lams = _numbers(req["lambdas"], "lambdas")
    if np.any(lams < 1):
        raise SchemaError("lambdas must be >= 1")
    xs = _grid(req["x_grid"], cfg.seed)
    cases = [(float(l), float(x)) for l in lams for x in xs]
    return data, phi, cases


def _qtol_check(out, rows, tol):
    worst = max(r["qtol"] for r in rows)
    out.summary["max_qtol"] = worst
    if worst > tol:
        raise NonConvergent(f"quadrature budget {worst:.3g} exceeds --tol-quadrature {tol:.3g}")


def _cmd_verify_lemma(req, cfg):
    from .tauber import sandwich_bounds

    data, phi, cases = _lemma_common(req, cfg, False)

    def one(case):
        lam, x = case
        r = sandwich_bounds(data, phi, lam, x)
        return {"lambda": lam, "x": x, "lower": r.lower, "S": r.S_x, "upper": r.upper, "qtol": r.qtol,
                "C_phi": r.C_phi, "margin": r.margin, "holds": r.holds}

    rows = _pmap(one, cases, cfg.threads)
    bad = sum(not r["holds"] for r in rows)
    out = _Output(["lambda", "x", "lower", "S", "upper", "qtol", "C_phi", "margin", "holds"], rows,
                  {"cases": len(rows), "violations": bad, "phi_n": phi.n})
    _qtol_check(out, rows, cfg.tol_quadrature)
    if bad:
        out.failure = SandwichViolated(f"{bad} of {len(rows)} cases fall outside the sandwich")
    return out


def _cmd_verify_lemma_m(req, cfg):
    from .tauber import sandwich_bounds_m

    data, phi, cases = _lemma_common(req, cfg, True)

    def one(case):
        lam, x = case
        r = sandwich_bounds_m(data, phi, lam, x, strict=False)
        return {"lambda": lam, "x": x, "S": r.S_x, "bound": r.bound, "qtol": r.qtol, "C_m": r.C_m,
                "holds": r.holds}

    rows = _pmap(one, cases, cfg.threads)
    bad = sum(not r["holds"] for r in rows)
    out = _Output(["lambda", "x", "S", "bound", "qtol", "C_m", "holds"], rows,
                  {"cases": len(rows), "violations": bad, "m": data.m, "phi_n": phi.n, "parity": phi.meta.get("parity")})
    _qtol_check(out, rows, cfg.tol_quadrature)
    if bad:
        out.failure = SandwichViolated(f"{bad} of {len(rows)} cases exceed the order-{data.m} bound")
    return out


def _pairing_cases(req):
    if "cases" in req:
        _check_fields(req, {"cases", "phi", "lambdas", "x", "tol"})
        base = {k: v for k, v in req.items() if k != "cases"}
        if not isinstance(req["cases"], list) or not req["cases"]:
            raise SchemaError("cases must be a non-empty list")
        return [{**base, **c} for c in req["cases"]]
    return [req]


def _cmd_pairing(req, cfg):
    from .rules import compile_expr
    from .tauber import fourier_pairing

    out_rows = []
    work = []
    for k, case in enumerate(_pairing_cases(req)):
        _check_fields(case, {"label", "S", "g", "breakpoints", "phi", "lambdas", "x", "tol"}, "case")
        _require(case, "S", "g", "lambdas", "x")
        if not isinstance(case["g"], str):
            raise SchemaError("g must be an expression string in t")
        g, _ = compile_expr(case["g"], "t", complex)
        phi = _phi_from(case.get("phi"))
        tol = float(case.get("tol", cfg.tol_quadrature))
        bps = tuple(float(b) for b in case.get("breakpoints", (0.0,)))
        label = case.get("label", f"case{k}")
        for lam in _numbers(case["lambdas"], "lambdas"):
            for x in _numbers(case["x"], "x"):
                work.append((label, case["S"], g, phi, float(lam), float(x), bps, tol))

    def one(w):
        label, S, g, phi, lam, x, bps, tol = w
        space, freq, qtol = fourier_pairing(S, g, phi, lam, x, bps, tol=tol, strict=False)
        gap = abs(space - freq)
        return {"case": label, "lambda": lam, "x": x, "space": space, "freq": freq, "gap": gap, "qtol": qtol,
                "pass": gap <= tol * (1.0 + abs(space))}

    out_rows = _pmap(one, work, cfg.threads)
    bad = sum(not r["pass"] for r in out_rows)
    out = _Output(["case", "lambda", "x", "space", "freq", "gap", "qtol", "pass"], out_rows,
                  {"cases": len(out_rows), "mismatches": bad})
    if bad:
        out.failure = MismatchBeyondTolerance(f"{bad} of {len(out_rows)} pairings disagree beyond tolerance")
    return out


def _cmd_berry_esseen(req, cfg):
    from .berry_esseen import load_corpus, pair_from_dict, verify_be

    _check_fields(req, {"pairs", "corpus", "T"})
    pairs = []
    if req.get("corpus"):
        pairs.extend(load_corpus())
    pairs.extend(pair_from_dict(p) for p in req.get("pairs", []))
    if not pairs:
        raise SchemaError("give 'pairs' or set 'corpus': true")
    Ts = tuple(float(t) for t in _numbers(req.get("T", [1.0, 5.0, 10.0]), "T"))
    if min(Ts) <= 0:
        raise SchemaError("T values must be positive")
    reports = _pmap(lambda p: verify_be(p, Ts, strict=False), pairs, cfg.threads)
    rows = [r for rep in reports for r in rep]
    bad = sum(not r["pass"] for r in rows)
    header = ["label", "T", "sup_diff", "modulus", "integral", "rhs", "margin", "kernel_rhs", "kernel_margin", "pass"]
    out = _Output(header, rows, {"pairs": len(pairs), "checks": len(rows), "violations": bad})
    if bad:
        out.failure = InequalityViolated(f"{bad} of {len(rows)} checks violate the inequality")
    return out


def _cmd_growth(req, cfg):
    from .growth import associated_function, check_log_convex, check_non_quasianalytic, sequence_from_rule
    from .rates import theorem_1_4_rate

    _check_fields(req, {"sequence", "x_grid", "M", "K", "c"})
    _require(req, "x_grid")
    xs = _grid(req["x_grid"], cfg.seed)
    if "sequence" in req:
        seq = sequence_from_rule(req["sequence"])
        vals = associated_function(seq, xs)
        summary = {"log_convex": check_log_convex(seq, min(seq.max_index, 100_000)),
                   "non_quasianalytic": check_non_quasianalytic(seq)}
        return _Output(["x", "associated"], [{"x": x, "associated": v} for x, v in zip(xs, vals)], summary)
    _require(req, "M", "K")
    c = float(req.get("c", 1.0))
    res = _pmap(lambda x: theorem_1_4_rate(req["M"], req["K"], c, x), xs, cfg.threads)
    rows = [{"x": r.x, "rate": r.rate, "rate_c1": r.rate_c1, "rate_MK": r.rate_MK} for r in res]
    first = res[0]
    return _Output(["x", "rate", "rate_c1", "rate_MK"], rows,
                   {"c": c, "regular_growth_t0": first.regular_growth_t0,
                    "positive_increase_a": first.positive_increase_a, "log_beta": first.log_beta})


_HANDLERS = {
    "rate": _cmd_rate,
    "table": _cmd_table,
    "testfn": _cmd_testfn,
    "verify-lemma": _cmd_verify_lemma,
    "verify-lemma-m": _cmd_verify_lemma_m,
    "pairing": _cmd_pairing,
    "berry-esseen": _cmd_berry_esseen,
    "growth": _cmd_growth,
}


# -- driver ----------------------------------------------------------------------


def _read_request(cfg):
    if cfg.input_path is None:
        if cfg.command == "table":
            return None
        raise SchemaError(f"{cfg.command} needs --input")
    text = Path(cfg.input_path).read_text()
    return json.loads(text)


def _write(cfg, request, out):
    target = Path(cfg.output_path)
    files = {}
    if cfg.command == "table":
        target.mkdir(parents=True, exist_ok=True)
        main_csv = target / "summary.csv"
        sidecar = Path(str(target) + ".json")
    else:
        target.parent.mkdir(parents=True, exist_ok=True)
        main_csv = target
        sidecar = Path(str(target) + ".json")
    main_csv.write_text(_csv_text(out.header, out.rows))
    files[main_csv.name] = out.header
    for name, content in out.extra_files.items():
        if name == "__testfn__":
            prefix = target.with_suffix("")
            content.to_files(f"{prefix}_phi")
            files[f"{prefix.name}_phi"] = "space/freq CSV pair with metadata"
            continue
        header, rows = content
        (target / name).write_text(_csv_text(header, rows))
        files[name] = header
    meta = {
        "tool": "quantaub",
        "version": __version__,
        "command": cfg.command,
        "config_hash": _config_hash(cfg, request),
        "seed": cfg.seed,
        "tolerances": {"quadrature": cfg.tol_quadrature, "lambda_max": cfg.lambda_max},
        "files": sorted(files),
        "status": "fail" if out.failure is not None else "pass",
        "summary": out.summary,
    }
    sidecar.write_text(json.dumps(_jsonable(meta), indent=2, sort_keys=True) + "\n")


def run(config):
    """Execute one command; return its exit code (see the module docstring)."""
    if config.command not in _HANDLERS:
        _log(config, 0, f"unknown command {config.command!r}")
        return EXIT_CODES["schema"]
    try:
        request = _read_request(config)
        if config.command == "table":
            out = _HANDLERS["table"](request, config)
        else:
            if not isinstance(request, dict):
                raise SchemaError("request must be a JSON object")
            out = _HANDLERS[config.command](request, config)
    except Exception as exc:  # mapped to a documented exit code
        code = exit_code_for(exc)
        _log(config, 0, f"{config.command}: {type(exc).__name__}: {exc}")
        if code == EXIT_CODES["internal"] or config.verbosity > 1:
            import traceback

            traceback.print_exc(file=sys.stderr)
        return code
    if config.output_path is not None:
        _write(config, request, out)
    else:
        sys.stdout.write(_csv_text(out.header, out.rows))
    if out.failure is not None:
        _log(config, 0, f"{config.command}: {type(out.failure).__name__}: {out.failure}")
        return exit_code_for(out.failure)
    _log(config, 1, f"{config.command}: ok ({len(out.rows)} rows)")
    return EXIT_CODES["ok"]


def _log(cfg, level, msg):
    if cfg.verbosity >= level:
        print(msg, file=sys.stderr)


def _parser():
    p = argparse.ArgumentParser(prog="quantaub", description="Quantified Tauberian remainder toolkit.")
    p.add_argument("command", choices=COMMANDS)
    p.add_argument("--input", "-i", dest="input_path", help="JSON request file")
    p.add_argument("--output", "-o", dest="output_path",
                   help="CSV output (a directory for 'table'); the sidecar goes to <output>.json")
    p.add_argument("--seed", type=int, default=0, help="seed for randomised x grids")
    p.add_argument("--lambda-max", dest="lambda_max", default=None,
                   help="upper end of the lambda search (number or 'auto')")
    p.add_argument("--tol-quadrature", dest="tol_quadrature", type=float, default=1e-6,
                   help="largest accepted quadrature budget and default pairing tolerance")
    p.add_argument("--threads", type=int, default=1, help="worker threads for independent rows")
    p.add_argument("--rows", default="all", help="table rows: 'all' or a comma-separated list")
    p.add_argument("-v", "--verbose", dest="verbosity", action="count", default=0)
    return p


def main(argv=None):
    args = _parser().parse_args(argv)
    lm = args.lambda_max
    if lm is not None and lm != "auto":
        try:
            float(lm)
        except ValueError:
            print(f"--lambda-max must be a number or 'auto', got {lm!r}", file=sys.stderr)
            return EXIT_CODES["schema"]
    cfg = RunConfig(command=args.command, input_path=args.input_path, output_path=args.output_path, seed=args.seed,
                    verbosity=args.verbosity, lambda_max=lm, tol_quadrature=args.tol_quadrature,
                    threads=max(1, args.threads), rows=args.rows)
    return run(cfg)


if __name__ == "__main__":
    sys.exit(main())
