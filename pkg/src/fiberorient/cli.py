"""Command-line front end.

Subcommands ``steady``, ``transient``, ``validate-jacobian`` and ``sweep``.
A JSON ``--config`` document supplies base settings; flags given on the
command line override it.  Exit codes: 0 success, 1 non-convergence,
2 configuration error.
"""

from __future__ import annotations

import argparse
import hashlib
import json
import os
import sys
import warnings

import numpy as np

from . import __version__
from .closures import available
from .errors import ConfigError, FiberOrientError
from .flows import CLI_NAMES, FlowPreset, build_flow, default_guess, guess_candidates
from .models import MODEL_TAGS, ModelSpec
from .solvers import NewtonOptions, newton_multistart, newton_steady, rk4_transient
from .tensors import pack, unpack
from .validation import (A0, FdScheme, FD_KINDS, TABLES, grid_flow, model_jac_error,
                         sweep_tables)

EXIT_OK, EXIT_NOCONV, EXIT_CONFIG = 0, 1, 2

# flag name -> ModelSpec field
PARAM_FLAGS = {
    "ci": "CI", "kappa": "kappa", "xi": "xi", "re": "re", "cm": "CM",
    "omega": "Omega", "w": "w", "dz": "Dz", "u0": "U0", "alpha": "alpha",
    "beta": "beta", "dim": "dim", "iard_form": "iard_form",
}
CONFIG_KEYS = {"command", "model", "flow", "guess", "state", "solver", "rk4",
               "jacobian", "table", "output", "format"}


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise ConfigError(message)


def _add_model_flags(p):
    g = p.add_argument_group("model")
    g.add_argument("--model", help="model tag, see --list models")
    g.add_argument("--closure", help="closure tag, see --list closures")
    for flag in ("ci", "kappa", "xi", "re", "cm", "omega", "w", "dz", "u0",
                 "alpha", "beta"):
        g.add_argument(f"--{flag}", type=float)
    g.add_argument("--dim", type=int, choices=(2, 3))
    g.add_argument("--iard-form", choices=("rate", "normalized"))
    for i in range(1, 6):
        g.add_argument(f"--b{i}", type=float)
    g.add_argument("--n", help="Dz direction as three comma-separated numbers")
    g.add_argument("--d", help="principal diffusion weights D1,D2,D3")


def _add_flow_flags(p):
    g = p.add_argument_group("flow")
    g.add_argument("--flow", help="flow preset, see --list flows")
    g.add_argument("--gamma", type=float, help="shear rate")
    g.add_argument("--eps", type=float, help="elongation rate")


def _add_output_flags(p):
    p.add_argument("--output", "-o", help="output file (default stdout)")
    p.add_argument("--format", choices=("json", "csv"))
    p.add_argument("--config", help="JSON config document")


def build_parser():
    p = _Parser(prog="fiberorient", description=__doc__.splitlines()[0])
    p.add_argument("--version", action="version", version=f"fiberorient {__version__}")
    p.add_argument("--list", choices=("models", "closures", "flows", "tables"),
                   help="list supported tags and exit")
    p.add_argument("--config", dest="top_config", help="JSON config naming the command")
    sub = p.add_subparsers(dest="command", parser_class=_Parser)

    s = sub.add_parser("steady", help="Newton steady state")
    _add_model_flags(s)
    _add_flow_flags(s)
    s.add_argument("--guess", help="5 comma-separated numbers, a flow preset, case1 or case2")
    s.add_argument("--tol", type=float)
    s.add_argument("--max-iter", type=int)
    s.add_argument("--damping", type=float)
    s.add_argument("--no-rank-augmentation", action="store_true", default=None)
    s.add_argument("--multistart", action="store_true", default=None,
                   help="retry permuted guesses and damped steps until a stable physical root")
    _add_output_flags(s)

    t = sub.add_parser("transient", help="RK4 integration")
    _add_model_flags(t)
    _add_flow_flags(t)
    t.add_argument("--state", help="initial state: 5 numbers, JSON file or 'iso'")
    t.add_argument("--dt", type=float)
    t.add_argument("--t-end", type=float)
    t.add_argument("--record-every", type=int)
    t.add_argument("--steady-tol", type=float)
    _add_output_flags(t)

    v = sub.add_parser("validate-jacobian", help="exact versus finite-difference Jacobian")
    _add_model_flags(v)
    _add_flow_flags(v)
    v.add_argument("--state", help="5 numbers, JSON file, or a0 (default)")
    v.add_argument("--step", type=float)
    v.add_argument("--scheme", choices=FD_KINDS)
    _add_output_flags(v)

    w = sub.add_parser("sweep", help="table reproduction sweep (CSV)")
    w.add_argument("--table", action="append", help="table name; repeatable")
    w.add_argument("--output-dir", help="write <dir>/table_<name>.csv instead of stdout")
    w.add_argument("--config", help="JSON config document")
    return p


# --------------------------------------------------------------------------
# config resolution
# --------------------------------------------------------------------------

def _load_config(path):
    if not path:
        return {}
    try:
        with open(path) as fh:
            cfg = json.load(fh)
    except (OSError, json.JSONDecodeError) as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from exc
    if not isinstance(cfg, dict):
        raise ConfigError("config must be a JSON object")
    unknown = set(cfg) - CONFIG_KEYS
    if unknown:
        raise ConfigError(f"unknown config fields: {sorted(unknown)}")
    return cfg


def _floats(text, n, what):
    try:
        vals = [float(x) for x in str(text).split(",")]
    except ValueError as exc:
        raise ConfigError(f"{what}: expected {n} comma-separated numbers") from exc
    if len(vals) != n:
        raise ConfigError(f"{what}: expected {n} numbers, got {len(vals)}")
    return vals


def _model_dict(args, cfg):
    d = dict(cfg.get("model", {}))
    if args.model is not None:
        d["model"] = args.model
    if args.closure is not None:
        d["closure"] = args.closure
    for flag, key in PARAM_FLAGS.items():
        val = getattr(args, flag, None)
        if val is not None:
            d[key] = val
    bs = [getattr(args, f"b{i}") for i in range(1, 6)]
    if any(b is not None for b in bs):
        base = list(d.get("b", [0.0] * 5))
        d["b"] = [base[i] if b is None else b for i, b in enumerate(bs)]
    if args.n is not None:
        d["n"] = _floats(args.n, 3, "--n")
    if args.d is not None:
        d["D"] = _floats(args.d, 3, "--d")
    if "model" not in d:
        raise ConfigError("a model is required (--model or config 'model')")
    return d


def _flow_dict(args, cfg, default="SS"):
    d = dict(cfg.get("flow", {}))
    if args.flow is not None:
        d["preset"] = args.flow
    if args.gamma is not None:
        d["gamma"] = args.gamma
    if args.eps is not None:
        d["eps"] = args.eps
    d.setdefault("preset", default)
    unknown = set(d) - {"preset", "gamma", "eps", "L"}
    if unknown:
        raise ConfigError(f"unknown flow fields: {sorted(unknown)}")
    return d


def _make_flow(fd):
    if "L" in fd:
        from .models import decompose
        return decompose(np.array(fd["L"], dtype=float))
    return build_flow(FlowPreset(fd["preset"], float(fd.get("gamma", 1.0)), fd.get("eps")))


def _read_state(text):
    """State from '5 numbers', a JSON file (5-vector or 3x3), 'a0' or 'iso'."""
    key = str(text).strip().lower()
    if key == "a0":
        return pack(A0)
    if key == "iso":
        return np.array([1.0, 1e-4, 1e-4, 1.0, 1e-4]) / 3.0
    if os.path.exists(str(text)):
        try:
            with open(text) as fh:
                data = json.load(fh)
        except (OSError, json.JSONDecodeError) as exc:
            raise ConfigError(f"cannot read state {text}: {exc}") from exc
        if isinstance(data, dict):
            data = data.get("state", data.get("a"))
        arr = np.asarray(data, dtype=float)
        if arr.shape == (3, 3):
            return pack(arr)
        if arr.shape == (5,):
            return arr
        raise ConfigError("state file must hold a 5-vector or a 3x3 matrix")
    return np.array(_floats(text, 5, "state"))


def _resolve_guess(text, flow_preset):
    if text is None:
        return default_guess(flow_preset)
    if isinstance(text, (list, tuple)):
        return np.asarray(text, dtype=float)
    key = str(text).strip()
    if "," in key:
        return np.array(_floats(key, 5, "--guess"))
    return default_guess(key)


def _hash(cfg):
    return hashlib.sha256(json.dumps(cfg, sort_keys=True).encode()).hexdigest()[:16]


def _metadata(cfg):
    return {"tool": "fiberorient", "version": __version__, "config_hash": _hash(cfg)}


def _emit(text, path):
    if path:
        with open(path, "w", newline="") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)


def _dump(obj):
    return json.dumps(obj, indent=2, sort_keys=True) + "\n"


def _list(what):
    items = {"models": MODEL_TAGS, "closures": available(), "flows": tuple(CLI_NAMES),
             "tables": tuple(f"{k}: {v}" for k, v in TABLES.items())}[what]
    return "\n".join(items) + "\n"


# --------------------------------------------------------------------------
# commands
# --------------------------------------------------------------------------

def _steady(args, cfg):
    md, fd = _model_dict(args, cfg), _flow_dict(args, cfg)
    solver = dict(cfg.get("solver", {}))
    for flag, key in (("tol", "tol_residual"), ("max_iter", "max_iter"), ("damping", "damping")):
        if getattr(args, flag) is not None:
            solver[key] = getattr(args, flag)
    if args.no_rank_augmentation:
        solver["rank_augmentation"] = False
    multistart = bool(solver.pop("multistart", False) or args.multistart)
    guess_in = args.guess if args.guess is not None else cfg.get("guess")
    resolved = {"command": "steady", "model": ModelSpec.from_dict(md).to_dict(),
                "flow": fd, "guess": guess_in, "solver": solver, "multistart": multistart}
    try:
        opts = NewtonOptions(**solver)
    except TypeError as exc:
        raise ConfigError(f"bad solver options: {exc}") from exc
    except ValueError as exc:
        raise ConfigError(str(exc)) from exc
    spec = ModelSpec.from_dict(md)
    flow = _make_flow(fd)
    guess = _resolve_guess(guess_in, fd.get("preset", "SS"))
    if multistart:
        cands = [guess] + [g for g in guess_candidates(fd.get("preset", "SS"))
                           if not np.allclose(g, guess)]
        rep = newton_multistart(spec, flow, cands, opts)
    else:
        rep = newton_steady(spec, flow, guess, opts)
    out = {
        "a": unpack(rep.state).tolist(), "state": rep.state.tolist(),
        "iterations": rep.iterations, "residual": rep.residual,
        "residual_history": rep.residual_history, "converged": rep.converged,
        "physical": rep.physical, "warnings": rep.warnings,
        "metadata": _metadata(resolved),
    }
    fmt = args.format or cfg.get("format", "json")
    if fmt == "csv":
        names = ("a11", "a12", "a13", "a22", "a23")
        text = f"# config_hash: {out['metadata']['config_hash']}\ncomponent,value\n"
        text += "".join(f"{n},{x:.10e}\n" for n, x in zip(names, rep.state))
    else:
        text = _dump(out)
    _emit(text, args.output or cfg.get("output"))
    return EXIT_OK if rep.converged else EXIT_NOCONV


def _transient(args, cfg):
    md, fd = _model_dict(args, cfg), _flow_dict(args, cfg)
    rk = dict(cfg.get("rk4", {}))
    for flag in ("dt", "t_end", "record_every", "steady_tol"):
        if getattr(args, flag) is not None:
            rk[flag] = getattr(args, flag)
    rk.setdefault("dt", 0.01)
    rk.setdefault("t_end", 100.0)
    rk.setdefault("steady_tol", 0.0)
    state_in = args.state if args.state is not None else cfg.get("state", "iso")
    resolved = {"command": "transient", "model": ModelSpec.from_dict(md).to_dict(),
                "flow": fd, "state": state_in, "rk4": rk}
    spec = ModelSpec.from_dict(md)
    a0 = (np.asarray(state_in, float) if isinstance(state_in, list)
          else _read_state(state_in))
    try:
        traj = rk4_transient(spec, _make_flow(fd), a0, **rk)
    except TypeError as exc:
        raise ConfigError(f"bad rk4 options: {exc}") from exc
    fmt = args.format or cfg.get("format", "json")
    meta = _metadata(resolved)
    if fmt == "csv":
        lines = [f"# config_hash: {meta['config_hash']}", "t,a11,a12,a13,a22,a23"]
        lines += [",".join(["%.6e" % t] + ["%.10e" % x for x in s])
                  for t, s in zip(traj.times, traj.states)]
        text = "\n".join(lines) + "\n"
    else:
        text = _dump({"times": traj.times.tolist(), "states": traj.states.tolist(),
                      "final": traj.final.tolist(), "steady_reached": traj.steady_reached,
                      "final_residual": traj.final_residual, "metadata": meta})
    _emit(text, args.output or cfg.get("output"))
    return EXIT_OK


def _validate(args, cfg):
    md = _model_dict(args, cfg)
    jc = dict(cfg.get("jacobian", {}))
    if args.step is not None:
        jc["step"] = args.step
    if args.scheme is not None:
        jc["kind"] = args.scheme
    state_in = args.state if args.state is not None else cfg.get("state", "a0")
    explicit_flow = args.flow is not None or "flow" in cfg
    fd = _flow_dict(args, cfg) if explicit_flow else {"L": grid_flow().L.tolist()}
    resolved = {"command": "validate-jacobian", "model": ModelSpec.from_dict(md).to_dict(),
                "flow": fd, "state": state_in, "jacobian": jc}
    spec = ModelSpec.from_dict(md)
    try:
        scheme = FdScheme(**jc)
    except TypeError as exc:
        raise ConfigError(f"bad jacobian options: {exc}") from exc
    v = (np.asarray(state_in, float) if isinstance(state_in, list)
         else _read_state(state_in))
    err = model_jac_error(spec, v, _make_flow(fd), scheme)
    text = _dump({"error": err, "scheme": scheme.kind, "step": scheme.step,
                  "state": v.tolist(), "metadata": _metadata(resolved)})
    _emit(text, args.output or cfg.get("output"))
    return EXIT_OK


def _sweep(args, cfg):
    tables = args.table or cfg.get("table")
    if not tables:
        raise ConfigError("sweep needs --table (see --list tables)")
    tables = [tables] if isinstance(tables, str) else list(tables)
    for t in tables:
        if str(t) not in TABLES:
            raise ConfigError(f"unknown table {t!r}; choose from {', '.join(TABLES)}")
    with warnings.catch_warnings():
        warnings.simplefilter("ignore")
        res = sweep_tables(tables)
    outdir = args.output_dir or cfg.get("output")
    for t, text in res.items():
        if outdir:
            os.makedirs(outdir, exist_ok=True)
            with open(os.path.join(outdir, f"table_{t}.csv"), "w", newline="") as fh:
                fh.write(text)
        else:
            sys.stdout.write(text)
    return EXIT_OK


_COMMANDS = {"steady": _steady, "transient": _transient,
             "validate-jacobian": _validate, "sweep": _sweep}


def run(argv=None):
    """Run the CLI and return its exit code."""
    try:
        argv = list(sys.argv[1:] if argv is None else argv)
        parser = build_parser()
        args, extra = parser.parse_known_args(argv)
        if args.list:
            sys.stdout.write(_list(args.list))
            return EXIT_OK
        if args.command is not None:
            args = parser.parse_args(argv)
        cfg = _load_config(getattr(args, "config", None) or args.top_config)
        command = args.command or cfg.get("command")
        if command not in _COMMANDS:
            raise ConfigError(f"choose a command: {', '.join(_COMMANDS)}")
        if args.command is None:
            # the command comes from the config; reparse its flags
            rest = [x for x in argv if x != "--config" and x != args.top_config]
            args = build_parser().parse_args([command, "--config", args.top_config] + rest)
        return _COMMANDS[command](args, cfg)
    except ValueError as exc:
        print(f"fiberorient: configuration error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except FiberOrientError as exc:
        print(f"fiberorient: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_NOCONV


def main():
    sys.exit(run())
