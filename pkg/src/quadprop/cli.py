"""Command-line entry point.

Usage::

    quadprop <command> [--config PATH] [--out DIR] [--seed N] [--format csv|binary|json]

Commands are ``derive``, ``kernel``, ``propagate``, ``nls``, ``strichartz``
and ``verify``.  The configuration is YAML with ``schema: 1``; unknown keys
are rejected.  Every run writes ``report.json`` into the output directory,
including failed runs.

Exit codes: 0 success, 2 invalid input, 3 numerical failure (caustic,
blow-up guard, failed verification), 4 I/O failure.

CSV outputs
-----------
derive
    ``characteristic.csv``: axis, t, mu, mu_prime, nu, nu_prime.
    ``phases.csv``: axis, t, alpha, beta, gamma, delta, epsilon, kappa, maslov.
kernel
    ``kernel.csv``: t, x, y, re, im, abs (one slice at fixed ``y`` per time).
propagate
    ``state_XXXX.csv`` per output time (x, re, im) and ``observables.csv``:
    t, norm, centroid_0[, ...], sup.
nls
    ``trajectory.csv``: t, mass, centroid_0[, ...], sup; final state in
    ``final.csv``.
strichartz
    ``pairs.csv``: q, r, sigma, classification, norm, ratio.
    ``weak_l1.csv``: lambda, product.
"""

import argparse
import csv
import json
import math
import os
import sys

import numpy as np
import yaml

from . import __version__
from .characteristic import solve_characteristic
from .errors import NumericalError, QuadPropError, SpecError
from .grid import Grid, gaussian, hermite, random_state, read_binary, read_csv, soliton, write_binary, write_csv
from .gridprop import propagate
from .hamiltonian import CoefficientFn, HamiltonianSpec, PRESETS, preset, validate
from .kernel import eval_kernel, table1_kernel
from .mehler import phase_coefficients
from .nls import Nonlinearity, solve_nls, write_snapshots, write_trajectory_csv
from .strichartz import decay_weight, is_admissible, mixed_norm, weak_l1_check
from .verify import DEFAULT_SEED, SUITE, verify_suite

__all__ = ["main", "run", "load_config", "COMMANDS", "EXIT_OK", "EXIT_SPEC", "EXIT_NUMERICAL", "EXIT_IO"]

COMMANDS = ("derive", "kernel", "propagate", "nls", "strichartz", "verify")
FORMATS = ("csv", "binary", "json")

EXIT_OK = 0
EXIT_SPEC = 2
EXIT_NUMERICAL = 3
EXIT_IO = 4

# allowed keys per section; None means free-form values checked elsewhere
SCHEMA = {
    "schema": None,
    "command": None,
    "hamiltonian": {"preset", "params", "dimension", "axes", "kinetic", "t_max", "name"},
    "grid": {"N", "center", "spacing", "length"},
    "times": None,
    "initial": {"kind", "center", "width", "momentum", "n", "amp", "speed", "path", "modes"},
    "output": {"directory", "formats"},
    "tolerances": None,
    "method": None,
    "seed": None,
    "sigma_convention": None,
    "kernel": {"y", "x_min", "x_max", "points", "table1", "table1_params"},
    "nls": {"p", "h", "T", "dt", "save_every", "check_subcritical"},
    "strichartz": {"sigma", "pairs", "weight", "lambdas", "spacing", "t_span"},
    "verify": {"checks"},
}
WEIGHT_KEYS = {"omegas", "deltas", "k", "delta_cut", "C"}
TOLERANCE_KEYS = {"caustic_tol"} | set(SUITE)


class _IOFailure(Exception):
    pass


def load_config(path):
    """Read and schema-check a YAML run configuration (``None`` gives ``{}``)."""
    if path is None:
        return {}
    try:
        with open(path) as fh:
            text = fh.read()
    except OSError as exc:
        raise _IOFailure(f"cannot read config {path}: {exc}") from exc
    try:
        doc = yaml.safe_load(text)
    except yaml.YAMLError as exc:
        raise SpecError(f"config {path} is not valid YAML: {exc}") from None
    doc = {} if doc is None else doc
    if not isinstance(doc, dict):
        raise SpecError("config must be a mapping")
    check_config(doc)
    return doc


def check_config(doc):
    if doc.get("schema") != 1:
        raise SpecError(f"config needs 'schema: 1', got {doc.get('schema')!r}")
    unknown = set(doc) - set(SCHEMA)
    if unknown:
        raise SpecError(f"unknown config keys: {sorted(unknown)}")
    for key, allowed in SCHEMA.items():
        if allowed is None or key not in doc:
            continue
        sect = doc[key]
        if not isinstance(sect, dict):
            raise SpecError(f"config section {key!r} must be a mapping")
        bad = set(sect) - allowed
        if bad:
            raise SpecError(f"unknown keys in {key!r}: {sorted(bad)}")
    weight = doc.get("strichartz", {}).get("weight")
    if weight is not None:
        if not isinstance(weight, dict) or set(weight) - WEIGHT_KEYS:
            raise SpecError(f"strichartz.weight accepts keys {sorted(WEIGHT_KEYS)}")
    tol = doc.get("tolerances", {})
    if not isinstance(tol, dict) or set(tol) - TOLERANCE_KEYS:
        raise SpecError(f"tolerances accepts keys {sorted(TOLERANCE_KEYS)}")
    if "command" in doc and doc["command"] not in COMMANDS:
        raise SpecError(f"unknown command {doc['command']!r}")


def _spec(cfg):
    doc = cfg.get("hamiltonian")
    if doc is None:
        raise SpecError("config needs a 'hamiltonian' section")
    doc = dict(doc)
    if "preset" in doc:
        name = doc.pop("preset")
        params = dict(doc.pop("params", {}) or {})
        extra = set(doc) - {"t_max"}
        if extra:
            raise SpecError(f"preset Hamiltonians take only params and t_max, got {sorted(extra)}")
        if name not in PRESETS:
            raise SpecError(f"unknown preset {name!r}; choose from {list(PRESETS)}")
        for k in ("omega2", "force"):
            if k in params:
                params[k] = CoefficientFn.coerce(params[k])
        return preset(name, t_max=float(doc.get("t_max", 100.0)), **params)
    if "params" in doc:
        raise SpecError("'params' only applies together with 'preset'")
    spec = HamiltonianSpec.from_dict(doc)
    problems = validate(spec)
    if problems:
        raise SpecError("; ".join(str(p) for p in problems))
    return spec


def _per_axis(v, d, name):
    v = list(v) if isinstance(v, (list, tuple)) else [v] * d
    if len(v) != d:
        raise SpecError(f"grid.{name} needs {d} entries")
    return v


def _grid(cfg, d):
    g = cfg.get("grid")
    if g is None:
        raise SpecError("config needs a 'grid' section")
    if "N" not in g:
        raise SpecError("grid.N is required")
    n = _per_axis(g["N"], d, "N")
    center = _per_axis(g.get("center", 0.0), d, "center")
    if "spacing" in g and "length" in g:
        raise SpecError("give grid.spacing or grid.length, not both")
    if "spacing" in g:
        h = _per_axis(g["spacing"], d, "spacing")
    elif "length" in g:
        h = [float(L) / int(k) for L, k in zip(_per_axis(g["length"], d, "length"), n)]
    else:
        raise SpecError("grid needs spacing or length")
    return Grid(tuple(n), tuple(center), tuple(h))


def _times(cfg):
    t = cfg.get("times")
    if t is None:
        raise SpecError("config needs 'times' (a list or {T, dt})")
    if isinstance(t, dict):
        if set(t) - {"T", "dt", "start"} or "T" not in t or "dt" not in t:
            raise SpecError("times mapping takes T, dt and optional start")
        start, T, dt = float(t.get("start", 0.0)), float(t["T"]), float(t["dt"])
        if T <= 0 or dt <= 0:
            raise SpecError("times.T and times.dt must be positive")
        n = int(round(T / dt))
        return [start + k * dt for k in range(1, n + 1)]
    if not isinstance(t, list) or not t:
        raise SpecError("times must be a non-empty list")
    return [float(v) for v in t]


def _initial(cfg, grid, seed):
    doc = dict(cfg.get("initial", {"kind": "gaussian"}))
    kind = doc.pop("kind", "gaussian")
    allowed = {"gaussian": {"center", "width", "momentum"}, "hermite": {"n", "center"},
               "soliton": {"amp", "speed", "center"}, "file": {"path"}, "random": {"modes", "width"}}
    if kind not in allowed:
        raise SpecError(f"unknown initial state kind {kind!r}")
    bad = set(doc) - allowed[kind]
    if bad:
        raise SpecError(f"initial state {kind!r} does not take {sorted(bad)}")
    if kind == "gaussian":
        return gaussian(grid, **doc)
    if kind == "hermite":
        return hermite(grid, int(doc.get("n", 0)), doc.get("center", 0.0))
    if kind == "soliton":
        return soliton(grid, **doc)
    if kind == "random":
        return random_state(grid, np.random.default_rng(seed), **doc)
    path = doc.get("path")
    if not path:
        raise SpecError("initial state 'file' needs a path")
    try:
        return read_binary(path) if str(path).endswith(".bin") else read_csv(path)
    except OSError as exc:
        raise _IOFailure(f"cannot read initial state {path}: {exc}") from exc


def _writer(path):
    fh = open(path, "w", newline="")
    return fh, csv.writer(fh)


def _num(v):
    return repr(float(v))


def _save_state(state, out, stem, fmt, files):
    if fmt == "binary":
        path = os.path.join(out, stem + ".bin")
        write_binary(state, path)
    elif fmt == "csv":
        path = os.path.join(out, stem + ".csv")
        write_csv(state, path)
    else:
        return
    files.append(path)


# --- commands ---------------------------------------------------------------

def cmd_derive(cfg, ctx):
    spec = _spec(cfg)
    times = _times(cfg)
    conv = ctx["convention"]
    tol = cfg.get("tolerances", {}).get("caustic_tol", 1e-6)
    out, files = ctx["out"], ctx["files"]
    sols = [solve_characteristic(spec, j, max(times), convention=conv) for j in range(spec.dimension)]
    report = {"caustics": [list(s.caustics) for s in sols], "sigma_convention": conv}
    if ctx["format"] != "csv":
        return report
    path = os.path.join(out, "characteristic.csv")
    fh, w = _writer(path)
    with fh:
        w.writerow(["axis", "t", "mu", "mu_prime", "nu", "nu_prime"])
        for j, sol in enumerate(sols):
            for t in times:
                w.writerow([j, _num(t)] + [_num(v) for v in sol.evaluate(t)])
    files.append(path)
    path = os.path.join(out, "phases.csv")
    fh, w = _writer(path)
    with fh:
        w.writerow(["axis", "t", "alpha", "beta", "gamma", "delta", "epsilon", "kappa", "maslov"])
        for j, sol in enumerate(sols):
            for t in times:
                p = phase_coefficients(spec, sol, j, t, caustic_tol=tol)
                w.writerow([j, _num(t)] + [_num(v) for v in p.as_tuple()] + [p.maslov])
    files.append(path)
    return report


def cmd_kernel(cfg, ctx):
    spec = _spec(cfg)
    if spec.dimension != 1:
        raise SpecError("the kernel command evaluates one-dimensional slices")
    times = _times(cfg)
    k = cfg.get("kernel", {})
    x = np.linspace(float(k.get("x_min", -5.0)), float(k.get("x_max", 5.0)), int(k.get("points", 201)))
    y = np.full_like(x, float(k.get("y", 0.0)))
    sol = solve_characteristic(spec, 0, max(times), convention=ctx["convention"])
    tol = cfg.get("tolerances", {}).get("caustic_tol", 1e-6)
    ref = k.get("table1")
    report = {"y": float(y[0]), "points": len(x)}
    rows = []
    errs = {}
    for t in times:
        val = eval_kernel([phase_coefficients(spec, sol, 0, t, caustic_tol=tol)], x, y)
        rows.append((t, val))
        if ref is not None:
            want = table1_kernel(ref, x, y, t, **(k.get("table1_params") or {}))
            errs[repr(t)] = float(np.max(np.abs(val - want) / np.abs(want)))
    if ref is not None:
        report["table1"] = {"name": ref, "max_rel_error": errs}
    if ctx["format"] == "csv":
        path = os.path.join(ctx["out"], "kernel.csv")
        fh, w = _writer(path)
        with fh:
            w.writerow(["t", "x", "y", "re", "im", "abs"])
            for t, val in rows:
                for xi, yi, v in zip(x, y, val):
                    w.writerow([_num(t), _num(xi), _num(yi), _num(v.real), _num(v.imag), _num(abs(v))])
        ctx["files"].append(path)
    return report


def cmd_propagate(cfg, ctx):
    spec = _spec(cfg)
    grid = _grid(cfg, spec.dimension)
    state = _initial(cfg, grid, ctx["seed"])
    times = _times(cfg)
    method = cfg.get("method", "fast")
    n0 = state.norm()
    obs = [(state.t, n0, state.centroid(), state.sup_norm())]
    cur = state
    for k, t in enumerate(times):
        cur = propagate(spec, cur, t, method=method, out_grid=grid)
        obs.append((t, cur.norm(), cur.centroid(), cur.sup_norm()))
        _save_state(cur, ctx["out"], f"state_{k:04d}", ctx["format"], ctx["files"])
    if ctx["format"] == "csv":
        path = os.path.join(ctx["out"], "observables.csv")
        fh, w = _writer(path)
        with fh:
            w.writerow(["t", "norm"] + [f"centroid_{j}" for j in range(spec.dimension)] + ["sup"])
            for t, nm, c, sup in obs:
                w.writerow([_num(t), _num(nm)] + [_num(v) for v in c] + [_num(sup)])
        ctx["files"].append(path)
    drift = max(abs(o[1] / n0 - 1) for o in obs)
    return {"method": method, "final_time": times[-1], "max_norm_drift": drift,
            "final_centroid": [float(v) for v in obs[-1][2]]}


def cmd_nls(cfg, ctx):
    spec = _spec(cfg)
    grid = _grid(cfg, spec.dimension)
    doc = cfg.get("nls")
    if not doc or "p" not in doc or "h" not in doc:
        raise SpecError("the nls command needs nls.p and nls.h")
    for key in ("T", "dt"):
        if key not in doc:
            raise SpecError(f"the nls command needs nls.{key}")
    nl = Nonlinearity(doc["p"], CoefficientFn.coerce(doc["h"]))
    u0 = _initial(cfg, grid, ctx["seed"])
    traj = solve_nls(spec, nl, u0, float(doc["T"]), float(doc["dt"]),
                     save_every=int(doc.get("save_every", 100)),
                     check_subcritical=bool(doc.get("check_subcritical", True)))
    if ctx["format"] == "csv":
        path = os.path.join(ctx["out"], "trajectory.csv")
        write_trajectory_csv(traj, path)
        ctx["files"].append(path)
        _save_state(traj.final, ctx["out"], "final", "csv", ctx["files"])
    elif ctx["format"] == "binary":
        ctx["files"].extend(write_snapshots(traj, ctx["out"]))
    m = traj.masses
    return {"steps": len(m) - 1, "mass_initial": float(m[0]), "mass_final": float(m[-1]),
            "max_mass_step_change": float(np.max(np.abs(np.diff(m)))) if len(m) > 1 else 0.0,
            "sup_final": float(traj.sups[-1])}


def cmd_strichartz(cfg, ctx):
    doc = cfg.get("strichartz")
    if not doc:
        raise SpecError("the strichartz command needs a 'strichartz' section")
    sigma = doc.get("sigma", 0.5)
    pairs = doc.get("pairs", [])
    rows = []
    evolution = None
    if "hamiltonian" in cfg:
        spec = _spec(cfg)
        grid = _grid(cfg, spec.dimension)
        st = _initial(cfg, grid, ctx["seed"])
        evolution = [st]
        for t in _times(cfg):
            evolution.append(propagate(spec, evolution[-1], t, out_grid=grid))
    for pair in pairs:
        if not isinstance(pair, (list, tuple)) or len(pair) != 2:
            raise SpecError(f"pairs are [q, r] lists, got {pair!r}")
        q, r = (math.inf if str(v) in ("inf", ".inf") else v for v in pair)
        cls = is_admissible(q, r, sigma)
        norm = ratio = None
        if evolution is not None and q >= 2 and r >= 2:
            norm = mixed_norm(evolution, q, r)
            ratio = norm / evolution[0].norm()
        rows.append({"q": q, "r": r, "sigma": sigma, "classification": cls, "norm": norm, "ratio": ratio})
    report = {"pairs": [{k: (str(v) if isinstance(v, float) and math.isinf(v) else v) for k, v in row.items()}
                        for row in rows]}
    table = None
    if "weight" in doc:
        w = doc["weight"]
        spacing = float(doc.get("spacing", 5e-4))
        span = float(doc.get("t_span", 20.0))
        t = np.arange(-span + spacing / 2, span, spacing)
        wt = decay_weight(w.get("omegas", [1.0]), w.get("deltas", [-1]), int(w.get("k", 0)),
                          float(w.get("delta_cut", 0.1)), float(w.get("C", 1.0)), t)
        lam = np.logspace(*doc["lambdas"]) if "lambdas" in doc else None
        table = weak_l1_check(t, wt, lam)
        report["weak_l1"] = {"slope": table.slope, "bounded": table.bounded,
                             "max_product": float(table.products.max())}
    if ctx["format"] == "csv":
        path = os.path.join(ctx["out"], "pairs.csv")
        fh, wr = _writer(path)
        with fh:
            wr.writerow(["q", "r", "sigma", "classification", "norm", "ratio"])
            for row in rows:
                wr.writerow([row["q"], row["r"], row["sigma"], row["classification"],
                             "" if row["norm"] is None else _num(row["norm"]),
                             "" if row["ratio"] is None else _num(row["ratio"])])
        ctx["files"].append(path)
        if table is not None:
            path = os.path.join(ctx["out"], "weak_l1.csv")
            fh, wr = _writer(path)
            with fh:
                wr.writerow(["lambda", "product"])
                for a, b in zip(table.lambdas, table.products):
                    wr.writerow([_num(a), _num(b)])
            ctx["files"].append(path)
    return report


def cmd_verify(cfg, ctx):
    names = cfg.get("verify", {}).get("checks")
    if names is not None:
        bad = set(names) - set(SUITE)
        if bad:
            raise SpecError(f"unknown checks {sorted(bad)}; available: {list(SUITE)}")
    rep = verify_suite(seed=ctx["seed"], convention=ctx["convention"], names=names)
    for res in rep["checks"]:
        mark = "PASS" if res["passed"] else "FAIL"
        print(f"{mark} {res['name']}: value={res['value']} tolerance={res['tolerance']}", file=sys.stderr)
    if ctx["format"] == "csv":
        path = os.path.join(ctx["out"], "verify.csv")
        fh, w = _writer(path)
        with fh:
            w.writerow(["check", "passed", "value", "tolerance"])
            for res in rep["checks"]:
                w.writerow([res["name"], int(res["passed"]), res["value"], res["tolerance"]])
        ctx["files"].append(path)
    return rep


HANDLERS = {"derive": cmd_derive, "kernel": cmd_kernel, "propagate": cmd_propagate,
            "nls": cmd_nls, "strichartz": cmd_strichartz, "verify": cmd_verify}


def _build_parser():
    ap = argparse.ArgumentParser(prog="quadprop", description="Quadratic-Hamiltonian propagators and NLS runs.")
    ap.add_argument("command", choices=COMMANDS)
    ap.add_argument("--config", help="YAML run configuration (optional for verify)")
    ap.add_argument("--out", help="output directory (default: output.directory or ./quadprop_out)")
    ap.add_argument("--seed", type=int, help="random seed, unsigned 64-bit")
    ap.add_argument("--format", choices=FORMATS, help="artifact format (default csv)")
    ap.add_argument("--sigma-convention", choices=("table", "printed"),
                    help="debug: sigma convention for derive/kernel/verify")
    ap.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    return ap


def _write_report(out, report):
    path = os.path.join(out, "report.json")
    with open(path, "w") as fh:
        json.dump(report, fh, indent=2, sort_keys=True, default=str)
        fh.write("\n")
    return path


def run(argv=None):
    """Parse arguments, execute the command and return the exit code."""
    args = _build_parser().parse_args(argv)
    report = {"command": args.command, "version": __version__, "status": "ok"}
    out = args.out or "quadprop_out"
    code = EXIT_OK
    try:
        try:
            cfg = load_config(args.config)
            if args.config is None and args.command != "verify":
                raise SpecError(f"the {args.command} command needs --config")
            if cfg.get("command", args.command) != args.command:
                raise SpecError(f"config is for {cfg['command']!r}, not {args.command!r}")
            out = args.out or cfg.get("output", {}).get("directory", out)
            fmts = cfg.get("output", {}).get("formats", ["csv"])
            fmt = args.format or (fmts[0] if fmts else "csv")
            if fmt not in FORMATS:
                raise SpecError(f"unknown format {fmt!r}")
            seed = args.seed if args.seed is not None else int(cfg.get("seed", DEFAULT_SEED))
            if not 0 <= seed < 2 ** 64:
                raise SpecError("seed must be an unsigned 64-bit integer")
            conv = args.sigma_convention or cfg.get("sigma_convention", "table")
            if conv not in ("table", "printed"):
                raise SpecError(f"unknown sigma convention {conv!r}")
            report.update(seed=seed, format=fmt, config=args.config)
        finally:
            try:
                os.makedirs(out, exist_ok=True)
            except OSError as exc:
                raise _IOFailure(f"cannot create output directory {out}: {exc}") from exc
        ctx = {"out": out, "seed": seed, "format": fmt, "convention": conv, "files": []}
        result = HANDLERS[args.command](cfg, ctx)
        report["result"] = result
        report["artifacts"] = sorted(os.path.relpath(p, out) for p in ctx["files"])
        if args.command == "verify":
            report["presets_passing"] = result["presets_passing"]
            if not result["passed"]:
                report["status"] = "failed"
                code = EXIT_NUMERICAL
    except _IOFailure as exc:
        code = _fail(report, EXIT_IO, exc)
    except SpecError as exc:
        code = _fail(report, EXIT_SPEC, exc)
    except NumericalError as exc:
        code = _fail(report, EXIT_NUMERICAL, exc)
    except QuadPropError as exc:
        code = _fail(report, EXIT_NUMERICAL, exc)
    except OSError as exc:
        code = _fail(report, EXIT_IO, exc)
    try:
        _write_report(out, report)
    except OSError as exc:
        print(f"quadprop: cannot write report: {exc}", file=sys.stderr)
        code = code or EXIT_IO
    return code


def _fail(report, code, exc):
    report["status"] = "error"
    report["error"] = {"type": type(exc).__name__, "message": str(exc), "exit_code": code}
    t = getattr(exc, "time", None)
    if t is not None:
        report["error"]["time"] = t
    print(f"quadprop: error: {exc}", file=sys.stderr)
    return code


def main(argv=None):
    sys.exit(run(argv))


if __name__ == "__main__":
    main()
