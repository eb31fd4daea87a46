"""Command-line entry point: ``normlab {norm,verify,sharpness,constants,mc}``.

Exit codes: 0 pass, 1 usage or config error, 2 infinite norm, 3 fail,
4 inconclusive.
"""

from __future__ import annotations

import argparse
import csv
import datetime as _dt
import hashlib
import io
import itertools
import json
import math
import os
import sys
import warnings
from concurrent.futures import ProcessPoolExecutor
from pathlib import Path

import jsonschema
import numpy as np

from . import __version__
from .embeddings import (VARIANTS, WeightFunction, embedding_check, gls_weighted_bound_check,
                         holder_bound_check, inverse_embedding_check, lower_estimate_check,
                         sharpness_search, theta, weighted_norm_with_error, zeta_constant)
from .errors import NonConvergent, NormInfinite, NormlabError, PreconditionUnmet, VarianceWarning
from .function_model import (Expression, FunctionModel, PrescribedTail, lp_norm_with_error,
                             read_csv)
from .grand_spaces import (GeneratingFunction, GrandZygmundSpace, coincidence_check, gls_detail,
                           gzs_detail, gzs_tail_envelope)
from .numerics import Tolerances
from .orlicz import (YoungOrlicz, delta_envelope, dilation_check, luxemburg_with_error,
                     moment_bound_j, monotonicity_check, tail_bound_check)
from .report import Status, VerificationReport, _clean
from .tail_lab import (MonteCarloConfig, dkw_band, empirical_tail, extremal_rv,
                       moment_blowup_experiment, tail_domination_experiment)

SCHEMA_VERSION = 1

EXIT_OK, EXIT_USAGE, EXIT_INFINITE, EXIT_FAIL, EXIT_INCONCLUSIVE = 0, 1, 2, 3, 4
_STATUS_EXIT = {Status.PASS: EXIT_OK, Status.FAIL: EXIT_FAIL, Status.INCONCLUSIVE: EXIT_INCONCLUSIVE}


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(message)


# --------------------------------------------------------------------------
# inputs

def parse_function(spec: str) -> FunctionModel:
    """Expression in t, ``csv:PATH`` or ``tail:{"p": .., "alpha": .., "K": ..}``."""
    if spec.startswith("csv:"):
        return read_csv(spec[4:])
    if spec.startswith("tail:"):
        d = json.loads(spec[5:])
        jsonschema.validate(d, _TAIL_SCHEMA)
        N = YoungOrlicz(d["p"], d.get("alpha", 0.0))
        return PrescribedTail(delta_envelope(N, d.get("K", 1.0)), label=f"tail:{json.dumps(d, sort_keys=True)}")
    return Expression(spec)


def _load_json(text_or_path: str):
    """A JSON document given inline or as a file path."""
    s = text_or_path.strip()
    if s.startswith("{") or s.startswith("["):
        return json.loads(s)
    with open(text_or_path, encoding="utf-8") as fh:
        return json.load(fh)


_NUM = {"type": "number"}
_POS = {"type": "number", "exclusiveMinimum": 0}
_BOUND = {"anyOf": [{"type": "number"}, {"type": "string", "enum": ["inf", "+inf", "infinity"]}]}
_FN = {"type": "string", "minLength": 1}
_TAIL_SCHEMA = {"type": "object", "required": ["p"],
                "properties": {"p": {"type": "number", "exclusiveMinimum": 1}, "alpha": _NUM, "K": _POS},
                "additionalProperties": False}
_GEN = {"type": "object", "required": ["kind"],
        "properties": {"kind": {"enum": ["power_root", "double_singular", "degenerate", "custom"]},
                       "m": _NUM, "a": _BOUND, "b": _BOUND, "alpha": _NUM, "beta": _NUM,
                       "r": _NUM, "expr": {"type": "string"}},
        "additionalProperties": False}
_Q = {"type": "object",
      "properties": {"rho": {"type": "string"},
                     "points": {"type": "array", "minItems": 1,
                                "items": {"type": "array", "items": _NUM, "minItems": 2, "maxItems": 2}},
                     "rect": {"type": "object", "required": ["p", "gamma"],
                              "properties": {"p": {"type": "array", "minItems": 3, "maxItems": 3},
                                             "gamma": {"type": "array", "minItems": 3, "maxItems": 3}}}},
      "additionalProperties": False}
_YOUNG = {"type": "object", "required": ["p"], "properties": {"p": _NUM, "alpha": _NUM},
          "additionalProperties": False}
_NUMS = {"type": "array", "items": _NUM, "minItems": 1}
_MC = {"n": {"type": "integer", "minimum": 100}, "seed": {"type": "integer"},
       "confidence": {"type": "number", "exclusiveMinimum": 0, "exclusiveMaximum": 1}}

# fields each verify inequality needs after "cases" are merged into the base
_VERIFY_FIELDS = {
    "tail": ({"fn": _FN, "p": _NUM, "alpha": _NUM, "n_grid": {"type": "integer", "minimum": 2}},
             ["fn", "p"]),
    "coincidence": ({"fn": _FN, "psi": _GEN}, ["fn", "psi"]),
    "holder": ({"fn": _FN, "S": _FN, "p": _NUM}, ["fn", "S", "p"]),
    "gls-weighted": ({"fn": _FN, "S": _FN, "psi": _GEN, "nu": _GEN}, ["fn", "S", "psi", "nu"]),
    "gzs-tail": ({"fn": _FN, "p": _NUM, "alpha": _NUM, "Q": _Q, **_MC}, ["Q"]),
    "embedding": ({"fn": _FN, "r": _NUM, "p": _NUM, "gamma": _NUM,
                   "functional": {"enum": ["luxemburg", "lorentz_zygmund"]},
                   "constant_factor": _POS}, ["fn", "r", "p", "gamma"]),
    "dilation": ({"fn": _FN, "p": _NUM, "alpha": _NUM, "C": _POS}, ["fn", "p", "C"]),
    "monotonicity": ({"fn": _FN, "N1": _YOUNG, "N2": _YOUNG}, ["fn", "N1", "N2"]),
    "lower": ({"fn": _FN, "beta": _POS, "s": _NUM, "p_grid": _NUMS}, ["fn", "beta", "s", "p_grid"]),
    "inverse": ({"fn": _FN, "beta": _POS, "s_grid": _NUMS,
                 "p_domain": {"type": "array", "items": _BOUND, "minItems": 2, "maxItems": 2},
                 "variants": {"type": "array", "items": {"enum": list(VARIANTS)}, "minItems": 1},
                 "n_grid": {"type": "integer", "minimum": 8}},
                ["fn", "beta", "s_grid", "p_domain"]),
}


def _case_schema(inequality):
    props, required = _VERIFY_FIELDS[inequality]
    return {"type": "object", "properties": props, "required": required, "additionalProperties": False}


def _config_schema(inequality):
    props, _ = _VERIFY_FIELDS[inequality]
    return {"type": "object",
            "properties": {**props, "cases": {"type": "array", "minItems": 1, "items": {"type": "object"}},
                           "tolerances": _TOL_SCHEMA},
            "additionalProperties": False}


_TOL_SCHEMA = {"type": "object", "properties": {"abs_tol": _POS, "rel_tol": _POS,
                                                "max_subdivisions": {"type": "integer", "minimum": 1}},
               "additionalProperties": False}


def expand_cases(inequality, config):
    """Merge each entry of ``cases`` over the top-level fields and validate."""
    jsonschema.validate(config, _config_schema(inequality))
    base = {k: v for k, v in config.items() if k not in ("cases", "tolerances")}
    cases = [{**base, **c} for c in config.get("cases", [{}])]
    for c in cases:
        jsonschema.validate(c, _case_schema(inequality))
    return cases


def _bound(v):
    return math.inf if isinstance(v, str) else float(v)


# --------------------------------------------------------------------------
# verify workers (module level so that a process pool can pickle them)

def _mc_config(case, seed):
    return MonteCarloConfig(n=case.get("n", 100_000), seed=case.get("seed", seed),
                            confidence=case.get("confidence", 0.99))


def gzs_tail_check(f: FunctionModel, Z: GrandZygmundSpace, cfg: MonteCarloConfig, tol: Tolerances):
    """Empirical tail of |f| against inf_Q min(1, 1/N_{p,gamma}(t/(V rho))) + DKW band."""
    V = gzs_detail(f, Z, tol)
    rep = tail_domination_experiment(f, lambda t: gzs_tail_envelope(Z, V.value, t), cfg,
                                     label="gzs-tail")
    return VerificationReport(
        name="gzs-tail", relation="le", lhs=float(rep.violations), rhs=0.0,
        params={"Q": Z.to_dict(), "f": repr(f), **cfg.to_dict()},
        extras={"gzs_norm": V.value, "gzs_norm_error": V.abs_error_estimate, "argmax": list(V.argmax),
                "dkw_band": rep.dkw_band, "violations": rep.violations,
                "t_grid": rep.t_grid.tolist(), "empirical_tail": rep.empirical_tail.tolist(),
                "envelope": rep.envelope.tolist()})


def run_verify_case(inequality, case, tol, seed):
    """One verification; returns a JSON-ready dict with a ``status`` field."""
    def fn(key="fn"):
        return parse_function(case[key])

    try:
        if inequality == "tail":
            rep = tail_bound_check(fn(), YoungOrlicz(case["p"], case.get("alpha", 0.0)), tol,
                                   n_grid=case.get("n_grid", 64))
        elif inequality == "coincidence":
            rep = coincidence_check(fn(), GeneratingFunction.from_json(case["psi"]), tol)
        elif inequality == "holder":
            rep = holder_bound_check(fn(), WeightFunction(fn("S")), case["p"], tol)
        elif inequality == "gls-weighted":
            rep = gls_weighted_bound_check(fn(), WeightFunction(fn("S")),
                                           GeneratingFunction.from_json(case["psi"]),
                                           GeneratingFunction.from_json(case["nu"]), tol)
        elif inequality == "gzs-tail":
            if "fn" in case:
                f = fn()
            else:
                f = PrescribedTail(delta_envelope(YoungOrlicz(case.get("p", 2.0), case.get("alpha", 0.0))))
            rep = gzs_tail_check(f, GrandZygmundSpace.from_json(case["Q"]), _mc_config(case, seed), tol)
        elif inequality == "embedding":
            rep = embedding_check(fn(), case["r"], case["p"], case["gamma"], tol,
                                  functional=case.get("functional", "luxemburg"),
                                  constant_factor=case.get("constant_factor", 1.0))
        elif inequality == "dilation":
            rep = dilation_check(fn(), YoungOrlicz(case["p"], case.get("alpha", 0.0)), case["C"], tol)
        elif inequality == "monotonicity":
            n1, n2 = case["N1"], case["N2"]
            rep = monotonicity_check(fn(), YoungOrlicz(n1["p"], n1.get("alpha", 0.0)),
                                     YoungOrlicz(n2["p"], n2.get("alpha", 0.0)), tol)
        elif inequality == "lower":
            rep = lower_estimate_check(fn(), case["beta"], case["s"], case["p_grid"], tol)
        elif inequality == "inverse":
            rep = inverse_embedding_check(fn(), case["beta"], case["s_grid"],
                                          tuple(_bound(v) for v in case["p_domain"]), tol,
                                          variants=tuple(case.get("variants", VARIANTS)),
                                          n_grid=case.get("n_grid", 64))
        else:  # pragma: no cover - guarded by argparse choices
            raise UsageError(f"unknown inequality {inequality}")
    except NormInfinite as exc:
        return {"name": inequality, "status": "infinite", "case": case, "error": str(exc),
                "diagnosis": exc.diagnosis}
    except NonConvergent as exc:
        return {"name": inequality, "status": Status.INCONCLUSIVE.value, "case": case, "error": str(exc)}
    d = rep.to_dict()
    d["case"] = case
    return d


def _run_verify_task(task):
    return run_verify_case(*task)


def _map(fn, tasks, jobs):
    """Ordered map, optionally over a process pool."""
    if jobs <= 1 or len(tasks) <= 1:
        return [fn(t) for t in tasks]
    with ProcessPoolExecutor(max_workers=min(jobs, len(tasks))) as pool:
        return list(pool.map(fn, tasks))


def _aggregate_exit(statuses):
    if "usage" in statuses:
        return EXIT_USAGE
    if Status.FAIL.value in statuses:
        return EXIT_FAIL
    if "infinite" in statuses:
        return EXIT_INFINITE
    if Status.INCONCLUSIVE.value in statuses:
        return EXIT_INCONCLUSIVE
    return EXIT_OK


# --------------------------------------------------------------------------
# constants grids

def parse_grid(text: str) -> dict:
    """``"r=1;p=2;gamma=0,1,2"`` (or a JSON object / file of lists) -> {name: [values]}."""
    s = text.strip()
    if s.startswith("{") or (os.path.exists(s) and not "=" in s):
        d = _load_json(s)
        return {k: [float(x) for x in (v if isinstance(v, list) else [v])] for k, v in d.items()}
    out = {}
    for part in filter(None, (x.strip() for x in s.split(";"))):
        if "=" not in part:
            raise UsageError(f"grid entry {part!r} must look like name=v1,v2")
        k, v = part.split("=", 1)
        try:
            out[k.strip()] = [float(x) for x in v.split(",") if x.strip()]
        except ValueError:
            raise UsageError(f"grid entry {part!r} has a non-numeric value") from None
    return out


_CONSTANT_KEYS = {"theta": ("r", "p", "gamma"), "j": ("alpha", "p", "s"),
                  "zeta": ("psi_m", "nu_m")}
_CONSTANT_OPTIONAL = {"zeta": ("psi_a", "psi_b", "nu_a", "nu_b")}


def constant_row(what, params, tol):
    if what == "theta":
        v = theta(params["r"], params["p"], params["gamma"])
        err = 1e-13 * abs(v)
    elif what == "j":
        rep = moment_bound_j(params["alpha"], params["p"], params["s"], tol)
        v, err = rep.j_value, rep.abs_error_estimate
    else:
        psi = GeneratingFunction.power_root(params["psi_m"], params.get("psi_a", 1.0),
                                            params.get("psi_b", math.inf))
        nu = GeneratingFunction.power_root(params["nu_m"], params.get("nu_a", 1.0),
                                           params.get("nu_b", math.inf))
        v = zeta_constant(psi, nu, tol)
        err = tol.rel_tol * abs(v) if math.isfinite(v) else 0.0
    return {**params, "value": v, "abs_error_estimate": err}


def _run_constant_task(task):
    what, params, tol = task
    try:
        return constant_row(what, params, tol)
    except NormlabError as exc:
        return {**params, "value": math.nan, "abs_error_estimate": math.nan, "error": str(exc)}


# --------------------------------------------------------------------------
# reports

def config_hash(payload) -> str:
    blob = json.dumps(_clean(payload), sort_keys=True, separators=(",", ":"))
    return hashlib.sha256(blob.encode("utf-8")).hexdigest()


def envelope(command, run_config, tol, seed, result, no_timestamp):
    d = {"schema_version": SCHEMA_VERSION, "version": __version__, "command": command,
         "config": run_config, "config_hash": config_hash({"command": command, **run_config}),
         "tolerances": tol.as_dict(), "seed": seed, "result": result}
    if not no_timestamp:
        d["timestamp"] = _dt.datetime.now(_dt.timezone.utc).isoformat()
    return _clean(d)


def render(report, fmt, header=None, rows=None) -> str:
    if fmt == "json":
        return json.dumps(report, indent=2, sort_keys=True) + "\n"
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    for row in rows:
        w.writerow([_fmt_cell(x) for x in row])
    return buf.getvalue()


def _fmt_cell(x):
    if isinstance(x, float):
        return repr(x) if math.isfinite(x) else ("inf" if x > 0 else "-inf" if x < 0 else "nan")
    return x


def emit(args, report, header=None, rows=None):
    if args.format == "csv" and header is None:
        # generic flattening: one row per scalar entry of the result
        header = ["key", "value"]
        rows = [[k, v] for k, v in sorted(_flatten(report["result"]).items())]
    text = render(report, args.format, header, rows)
    if args.output in (None, "-"):
        if args.output == "-":
            sys.stdout.write(text)
        return
    Path(args.output).write_text(text, encoding="utf-8")


def _flatten(d, prefix=""):
    out = {}
    for k, v in d.items():
        key = f"{prefix}{k}"
        if isinstance(v, dict):
            out.update(_flatten(v, key + "."))
        elif not isinstance(v, list):
            out[key] = v
    return out


def _say(args, text):
    if args.output != "-":
        print(text)


# --------------------------------------------------------------------------
# commands

def _tolerances(args, config=None):
    d = {}
    if config and "tolerances" in config:
        d.update(config["tolerances"])
    if args.abs_tol is not None:
        d["abs_tol"] = args.abs_tol
    if args.rel_tol is not None:
        d["rel_tol"] = args.rel_tol
    return Tolerances(**d)


def _seed(args):
    if args.seed is not None:
        return args.seed
    env = os.environ.get("NORMLAB_SEED")
    if env is not None:
        try:
            return int(env)
        except ValueError:
            raise UsageError(f"NORMLAB_SEED must be an integer, got {env!r}") from None
    return 0


def cmd_norm(args):
    tol = _tolerances(args)
    f = parse_function(args.fn)
    space = args.space
    run = {"space": space, "fn": args.fn}
    if space in ("lp", "lorentz-zygmund") and args.p is None:
        raise UsageError(f"--p is required for --space {space}")
    if space == "lp":
        p = math.inf if args.p in ("inf", "Inf") else float(args.p)
        run["p"] = p
        value, err = lp_norm_with_error(f, p, tol)
        extras = {}
    elif space == "lorentz-zygmund":
        p, alpha = float(args.p), args.alpha
        run.update(p=p, alpha=alpha)
        value, err = luxemburg_with_error(f, YoungOrlicz(p, alpha), tol)
        extras = {}
    elif space == "gls":
        if args.psi is None:
            raise UsageError("--psi is required for --space gls")
        psi_spec = _load_json(args.psi)
        jsonschema.validate(psi_spec, _GEN)
        run["psi"] = psi_spec
        res = gls_detail(f, GeneratingFunction.from_json(psi_spec), tol)
        value, err, extras = res.value, res.abs_error_estimate, {"argmax_p": res.argmax}
    elif space == "gzs":
        if args.q is None:
            raise UsageError("--q is required for --space gzs")
        q_spec = _load_json(args.q)
        jsonschema.validate(q_spec, _Q)
        run["Q"] = q_spec
        res = gzs_detail(f, GrandZygmundSpace.from_json(q_spec), tol)
        value, err = res.value, res.abs_error_estimate
        extras = {"argmax": list(res.argmax), "grid_value": res.grid_value}
    else:
        if args.S is None:
            raise UsageError("--S is required for --space weighted")
        run["S"] = args.S
        value, err = weighted_norm_with_error(f, WeightFunction(parse_function(args.S)), tol)
        extras = {}
    result = {"value": value, "abs_error_estimate": err, **extras}
    report = envelope("norm", run, tol, None, result, args.no_timestamp)
    _say(args, f"{value:.10g}")
    emit(args, report, ["space", "value", "abs_error_estimate"], [[space, value, err]])
    return EXIT_OK


def cmd_verify(args):
    if args.config is None:
        raise UsageError("verify needs --config FILE")
    config = _load_json(args.config)
    if not isinstance(config, dict):
        raise UsageError("config must be a JSON object")
    cases = expand_cases(args.inequality, config)
    tol = _tolerances(args, config)
    seed = _seed(args)
    tasks = [(args.inequality, c, tol, seed) for c in cases]
    try:
        results = _map(_run_verify_task, tasks, args.jobs)
    except PreconditionUnmet as exc:
        raise UsageError(f"precondition unmet: {exc}") from None
    statuses = [r["status"] for r in results]
    code = _aggregate_exit(statuses)
    summary = {s: statuses.count(s) for s in sorted(set(statuses))}
    result = {"inequality": args.inequality, "summary": summary, "reports": results}
    report = envelope("verify", {"inequality": args.inequality, **config}, tol, seed, result,
                      args.no_timestamp)
    for i, r in enumerate(results):
        if r["status"] == "infinite":
            print(f"case {i}: norm infinite ({r['error']})", file=sys.stderr)
    _say(args, f"{args.inequality}: " + ", ".join(f"{k}={v}" for k, v in summary.items()))
    header = ["index", "name", "status", "lhs", "rhs", "margin", "error_budget"]
    rows = [[i, r.get("name"), r["status"], r.get("lhs", ""), r.get("rhs", ""), r.get("margin", ""),
             r.get("error_budget", "")] for i, r in enumerate(results)]
    emit(args, report, header, rows)
    return code


def cmd_sharpness(args):
    tol = _tolerances(args)
    rep = sharpness_search(args.r, args.p, args.gamma, tol, n_kappa=args.n_kappa)
    rel_gap = rep.gap / rep.theta
    status = Status.PASS if abs(rel_gap) <= args.gap_tol else Status.FAIL
    result = {**rep.to_dict(), "relative_gap": rel_gap, "gap_tolerance": args.gap_tol,
              "status": status.value}
    run = {"r": args.r, "p": args.p, "gamma": args.gamma, "n_kappa": args.n_kappa, "gap_tol": args.gap_tol}
    report = envelope("sharpness", run, tol, None, result, args.no_timestamp)
    _say(args, f"theta={rep.theta:.10g} best={rep.best_ratio_found:.10g} gap={rep.gap:.3g} "
               f"({rep.maximizer_label}) {status.value}")
    emit(args, report, ["kappa", "ratio"], [[k, v] for k, v in rep.candidates])
    return _STATUS_EXIT[status]


def cmd_constants(args):
    tol = _tolerances(args)
    grid = parse_grid(args.grid)
    keys = _CONSTANT_KEYS[args.what]
    missing = [k for k in keys if k not in grid]
    extra = [k for k in grid if k not in keys + _CONSTANT_OPTIONAL.get(args.what, ())]
    if missing or extra:
        raise UsageError(f"--what {args.what} grid needs keys {list(keys)}; "
                         f"missing {missing}, unknown {extra}")
    names = list(grid)
    combos = [dict(zip(names, vals)) for vals in itertools.product(*(grid[k] for k in names))]
    rows = _map(_run_constant_task, [(args.what, c, tol) for c in combos], args.jobs)
    result = {"what": args.what, "rows": rows}
    report = envelope("constants", {"what": args.what, "grid": grid}, tol, None, result,
                      args.no_timestamp)
    for r in rows:
        _say(args, " ".join(f"{k}={r[k]:g}" for k in names) + f" value={r['value']:.10g}"
                   f" err={r['abs_error_estimate']:.2g}")
    header = names + ["value", "abs_error_estimate"]
    emit(args, report, header, [[r[k] for k in header] for r in rows])
    return EXIT_USAGE if any("error" in r for r in rows) else EXIT_OK


_MC_SCHEMA = {
    "type": "object",
    "properties": {"p": {"type": "number", "exclusiveMinimum": 1}, "alpha": _NUM, "fn": _FN,
                   "envelope": _TAIL_SCHEMA, "t": _NUMS, "s_grid": _NUMS,
                   "lower": _POS, "upper": _POS, **_MC},
    "additionalProperties": False,
}


def cmd_mc(args):
    if args.config is None:
        raise UsageError("mc needs --config FILE")
    config = _load_json(args.config)
    jsonschema.validate(config, _MC_SCHEMA)
    tol = _tolerances(args)
    seed = config.get("seed", _seed(args))
    cfg = MonteCarloConfig(n=config.get("n", 100_000), seed=seed,
                           confidence=config.get("confidence", 0.99))
    p, alpha = config.get("p", 2.0), config.get("alpha", 0.0)
    exp = args.experiment
    if exp == "extremal":
        sample = extremal_rv(p, alpha, cfg)
        ts = np.asarray(config.get("t", [1.0, 2.0, 10.0, 100.0]), dtype=float)
        emp = empirical_tail(sample.values, ts)
        env = delta_envelope(YoungOrlicz(p, alpha))(ts)
        band = 3.0 * np.sqrt(env * (1.0 - env) / cfg.n)
        ok = np.abs(emp - env) <= band + 1.0 / cfg.n
        rows = [[float(t), float(e), float(v), float(b)] for t, e, v, b in zip(ts, emp, env, band)]
        result = {"p": p, "alpha": alpha, "n": cfg.n, "seed": seed, "t": ts.tolist(),
                  "empirical": emp.tolist(), "envelope": env.tolist(), "binomial_band": band.tolist(),
                  "within_band": ok.tolist(), "sample_max": float(np.max(sample.values)),
                  "sample_median": float(np.median(sample.values))}
        status = Status.PASS if ok.all() else Status.FAIL
        header = ["t", "empirical", "envelope", "band"]
    elif exp == "domination":
        f = parse_function(config["fn"]) if "fn" in config else \
            PrescribedTail(delta_envelope(YoungOrlicz(p, alpha)))
        ev = config.get("envelope", {"p": p, "alpha": alpha})
        T = delta_envelope(YoungOrlicz(ev["p"], ev.get("alpha", 0.0)), ev.get("K", 1.0))
        rep = tail_domination_experiment(f, T, cfg, label="domination")
        result = rep.to_dict()
        status = Status.PASS if rep.violations == 0 else Status.FAIL
        header, rows = rep.csv_rows()
    else:
        s_grid = config.get("s_grid")
        if s_grid is None:
            s_grid = [1.0 + (p - 1.0) * x for x in (0.0, 0.5, 0.8, 0.9)]
        with warnings.catch_warnings(record=True) as caught:
            warnings.simplefilter("always", VarianceWarning)
            rep = moment_blowup_experiment(p, alpha, s_grid, cfg, tol,
                                           lower=config.get("lower", 0.1), upper=config.get("upper", 1.0))
        for w in caught:
            print(f"warning: {w.message}", file=sys.stderr)
        result = rep.to_dict()
        result["variance_warnings"] = [str(w.message) for w in caught]
        status = Status.PASS if rep.passed else Status.FAIL
        header = ["s", "empirical", "j_value", "ratio", "rel_band", "tail_correction"]
        rows = [[r.s, r.empirical, r.j_value, r.ratio, r.rel_band, r.tail_correction] for r in rep.rows]
    result["status"] = status.value
    result["dkw_band"] = dkw_band(cfg.n, cfg.confidence)
    report = envelope("mc", {"experiment": exp, **config, "seed": seed}, tol, seed, result,
                      args.no_timestamp)
    extra = f" violations={result['violations']}" if exp == "domination" else ""
    _say(args, f"{exp}: {status.value}{extra}")
    emit(args, report, header, rows)
    return _STATUS_EXIT[status]


# --------------------------------------------------------------------------
# argument parsing

FN_HELP = ("function on (0,1): an expression in t (numbers, + - * / ^, parentheses, "
           "ln log exp abs min max pow sqrt sin cos, constants e pi; ^ is right-associative), "
           "csv:PATH (one value per line, optional header 'value'), or "
           "tail:{\"p\": P, \"alpha\": A, \"K\": K} for the quantile of min(1, 1/N(t/K))")


def build_parser():
    common = _Parser(add_help=False)
    common.add_argument("--output", help="report path ('-' writes the report to stdout)")
    common.add_argument("--format", choices=("json", "csv"), default="json")
    common.add_argument("--no-timestamp", action="store_true", help="omit the timestamp from reports")
    common.add_argument("--jobs", type=int, default=os.cpu_count() or 1,
                        help="worker processes for grid and corpus sweeps")
    common.add_argument("--seed", type=int, help="random seed (default: $NORMLAB_SEED or 0)")
    common.add_argument("--abs-tol", type=float)
    common.add_argument("--rel-tol", type=float)

    parser = _Parser(prog="normlab", description="Norms, embeddings and tail bounds "
                     "in Lorentz-Zygmund, Grand Lebesgue and Grand Zygmund spaces.")
    parser.add_argument("--version", action="version", version=f"normlab {__version__}")
    sub = parser.add_subparsers(dest="command", parser_class=_Parser)
    sub.required = True

    p = sub.add_parser("norm", parents=[common], help="compute a norm")
    p.add_argument("--space", required=True, choices=("lp", "lorentz-zygmund", "gls", "gzs", "weighted"))
    p.add_argument("--fn", required=True, help=FN_HELP)
    p.add_argument("--p", help="exponent (lp accepts 'inf')")
    p.add_argument("--alpha", type=float, default=0.0)
    p.add_argument("--psi", help="generating function JSON (inline or file)")
    p.add_argument("--q", help="GZS parameter set JSON (inline or file)")
    p.add_argument("--S", help="weight function (same syntax as --fn)")
    p.set_defaults(handler=cmd_norm)

    p = sub.add_parser("verify", parents=[common], help="check an inequality from a config file")
    p.add_argument("--inequality", required=True, choices=sorted(_VERIFY_FIELDS))
    p.add_argument("--config", help="JSON config (file or inline)")
    p.set_defaults(handler=cmd_verify)

    p = sub.add_parser("sharpness", parents=[common], help="search for near-extremal functions")
    p.add_argument("--r", type=float, required=True)
    p.add_argument("--p", type=float, required=True)
    p.add_argument("--gamma", type=float, required=True)
    p.add_argument("--n-kappa", type=int, default=41)
    p.add_argument("--gap-tol", type=float, default=1e-4, help="relative gap counted as sharp")
    p.set_defaults(handler=cmd_sharpness)

    p = sub.add_parser("constants", parents=[common], help="tabulate theta, zeta or J over a grid")
    p.add_argument("--what", required=True, choices=("theta", "zeta", "j"))
    p.add_argument("--grid", required=True,
                   help="'name=v1,v2;name=v' or a JSON object/file; theta: r,p,gamma; "
                        "j: alpha,p,s; zeta: psi_m,nu_m (power-root exponents), optional psi_b,nu_b")
    p.set_defaults(handler=cmd_constants)

    p = sub.add_parser("mc", parents=[common], help="Monte Carlo experiments")
    p.add_argument("--experiment", required=True, choices=("extremal", "domination", "blowup"))
    p.add_argument("--config", help="JSON config (file or inline)")
    p.set_defaults(handler=cmd_mc)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
        if args.jobs < 1:
            raise UsageError("--jobs must be >= 1")
        return args.handler(args)
    except UsageError as exc:
        print(f"normlab: usage error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except NormInfinite as exc:
        print(f"normlab: norm infinite: {exc}", file=sys.stderr)
        return EXIT_INFINITE
    except NonConvergent as exc:
        print(f"normlab: inconclusive: {exc}", file=sys.stderr)
        return EXIT_INCONCLUSIVE
    except jsonschema.ValidationError as exc:
        print(f"normlab: config error: {exc.message}", file=sys.stderr)
        return EXIT_USAGE
    except (NormlabError, ValueError, OSError) as exc:
        # DomainError, ParseError, PreconditionUnmet, unreadable files, bad JSON
        print(f"normlab: error: {exc}", file=sys.stderr)
        return EXIT_USAGE


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())
