"""Finite-difference Jacobian oracle, error metrics and table sweeps.

The sweeps rebuild the Jacobian-exactness grid and the Newton versus RK4
comparisons for the worked parameter sets, writing one deterministic CSV per
table.
"""

from __future__ import annotations

import csv
import hashlib
import io
import json
import math
import warnings
from dataclasses import dataclass

import numpy as np

from . import __version__
from .closures import CLOSURE_TAGS
from .errors import ConfigError, FiberOrientError
from .flows import CASE_GUESSES, build_flow, guess_candidates
from .models import ModelSpec, decompose, model_jacobian, residual
from .solvers import newton_multistart, newton_steady, percent_error, rk4_transient
from .tensors import pack, unpack

FD_KINDS = ("forward", "backward", "central-2", "central-4", "one-sided-3")
REL_THRESHOLD = 2.0 ** -52

# "random" orientation state used for the Jacobian checks
A0 = np.array([[0.0622, 0.0765, 0.0398],
               [0.0765, 0.5521, 0.0186],
               [0.0398, 0.0186, 0.3857]])

# velocity gradient used for the Jacobian checks
GRID_L = np.array([[-2.0, 0.0, 0.0],
                   [0.0, 1.0, 1.0],
                   [0.0, 0.0, 1.0]])

# near-isotropic start of every RK4 reference run
RK4_START = np.array([1.0, 1e-4, 1e-4, 1.0, 1e-4]) / 3.0

_b = lambda *x: tuple(c * 1e-4 for c in x)

# calibrated simple-shear parameters (VST closure)
CASE1_PARAMS = {
    "FT": dict(CI=0.0311),
    "PT": dict(b=_b(1.924, 58.39, 400.0, 0.1168, 0.0)),
    "iARD": dict(CI=0.0562, CM=0.9977),
    "pARD": dict(CI=0.0169, Omega=0.9868),
    "WPT": dict(CI=0.0504, w=0.995),
    "Dz": dict(CI=0.0258, Dz=0.051, n=(0.0, 0.0, 1.0)),
    "MRD": dict(CI=0.0198, D=(1.0, 0.7946, 0.012)),
}

# slow-kinetics parameters (ORS closure, flows L1 and L2)
CASE2_PARAMS = {
    "RSC": dict(CI=0.01, kappa=0.1),
    "FT": dict(CI=0.01),
    "SRF": dict(CI=0.01, kappa=0.1),
    "FT-RPR": dict(CI=0.01, alpha=0.9, beta=0.0),
}

# three material sets for the combined models (VST closure, simple shear)
CASE3_SETS = {
    "a": dict(CI=0.0165, CM=0.999, Omega=0.988, alpha=0.965, kappa=1 / 30,
              b=_b(3.842, -17.86, 525.0, 0.1168, -5.0)),
    "b": dict(CI=0.0630, CM=1.010, Omega=0.965, alpha=0.965, kappa=1 / 30,
              b=_b(37.28, -169.5, 1750.0, -33.67, -100.0)),
    "c": dict(CI=0.0060, CM=0.900, Omega=0.900, alpha=0.95, kappa=1 / 20,
              b=_b(4.643, -6.169, 190.0, 9.65, 7.0)),
}

# models of the Jacobian-exactness grid with their parameters
GRID_PARAMS = {
    "FT": CASE1_PARAMS["FT"], "PT": CASE1_PARAMS["PT"],
    "iARD": CASE1_PARAMS["iARD"], "pARD": CASE1_PARAMS["pARD"],
    "WPT": CASE1_PARAMS["WPT"], "Dz": CASE1_PARAMS["Dz"],
    "NEM": dict(CI=0.01, U0=0.063),
    "pARD-RSC": dict(CI=0.027, Omega=0.95, kappa=0.8),
    "iARD-RPR": dict(CI=0.063, CM=0.995, alpha=0.2, beta=0.01),
}

# (label, preset, gamma, eps) for the flow-robustness study
FLOW_CASES = (
    ("SS", "SS", 1.0, None), ("SUA1", "SUA", 1.0, 0.1), ("SUA2", "SUA", 1.0, 1.0),
    ("UA", "UA", 1.0, 1.0), ("BA", "BA", 1.0, 1.0), ("PST1", "PST", 1.0, 0.1),
    ("PST2", "PST", 1.0, 1.0), ("SBA1", "SBA", 1.0, 0.5), ("SBA2", "SBA", 1.0, 0.2),
    ("TA", "TA", 1.0, 1.0), ("STA1", "STA", 1.0, 0.5), ("STA2", "STA", 1.0, 0.2),
)
FLOW_STUDY_CLOSURE = "IBOF"

COMPONENTS = ("a11", "a22", "a33", "a12", "a13", "a23")
_IDX = {"a11": (0, 0), "a22": (1, 1), "a33": (2, 2),
        "a12": (0, 1), "a13": (0, 2), "a23": (1, 2)}


# --------------------------------------------------------------------------
# finite differences
# --------------------------------------------------------------------------

@dataclass(frozen=True)
class FdScheme:
    """Finite-difference stencil and step.

    With ``relative`` set the step on component ``r`` is ``step * |v_r|``
    whenever ``|v_r|`` exceeds ``REL_THRESHOLD``.
    """

    kind: str = "central-2"
    step: float = 1e-6
    relative: bool = True

    def __post_init__(self):
        if self.kind not in FD_KINDS:
            raise ConfigError(f"unknown FD scheme {self.kind!r}; choose from {FD_KINDS}")
        if not self.step > 0:
            raise ConfigError("FD step must be positive")


_STENCILS = {
    "forward": ((0, -1.0), (1, 1.0)),
    "backward": ((-1, -1.0), (0, 1.0)),
    "central-2": ((-1, -0.5), (1, 0.5)),
    "central-4": ((-2, 1 / 12), (-1, -2 / 3), (1, 2 / 3), (2, -1 / 12)),
    "one-sided-3": ((0, -1.5), (1, 2.0), (2, -0.5)),
}


def fd_jacobian(rate_fn, v, scheme=None):
    """Finite-difference Jacobian with ``J[:, r] = d rate_fn / d v_r``."""
    scheme = FdScheme() if scheme is None else scheme
    v = np.asarray(v, dtype=float)
    f0 = None
    cols = []
    for r in range(v.size):
        h = scheme.step
        if scheme.relative and abs(v[r]) > REL_THRESHOLD:
            h *= abs(v[r])
        col = 0.0
        for k, w in _STENCILS[scheme.kind]:
            if k == 0:
                f0 = np.asarray(rate_fn(v), dtype=float) if f0 is None else f0
                fk = f0
            else:
                x = v.copy()
                x[r] += k * h
                fk = np.asarray(rate_fn(x), dtype=float)
            col = col + w * fk
        cols.append(col / h)
    return np.column_stack(cols)


def jac_error(J1, J2):
    """Spectral norm (largest singular value) of ``J1 - J2``."""
    return float(np.linalg.norm(np.asarray(J1) - np.asarray(J2), 2))


def model_jac_error(spec, v, flow, scheme=None):
    """Exact-versus-FD Jacobian error of a model at packed state ``v``."""
    J = model_jacobian(spec, v, flow).J
    Jfd = fd_jacobian(lambda x: residual(spec, x, flow), v, scheme)
    return jac_error(J, Jfd)


def grid_flow():
    return decompose(GRID_L)


def jacobian_grid(models=None, closures=None, scheme=None, v=None):
    """Jacobian errors over a model by closure grid.

    Returns a dict ``{(model, closure): error}``; failing cells hold NaN.
    """
    models = list(GRID_PARAMS) if models is None else list(models)
    closures = list(CLOSURE_TAGS) if closures is None else list(closures)
    v = pack(A0) if v is None else np.asarray(v, dtype=float)
    flow = grid_flow()
    out = {}
    for m in models:
        for c in closures:
            try:
                spec = ModelSpec(m, c, **GRID_PARAMS.get(m, {}))
                out[(m, c)] = model_jac_error(spec, v, flow, scheme)
            except FiberOrientError:
                out[(m, c)] = float("nan")
    return out


# --------------------------------------------------------------------------
# Newton versus RK4 studies
# --------------------------------------------------------------------------

@dataclass
class CaseResult:
    """One Newton versus RK4 comparison cell."""

    row: str
    newton: np.ndarray | None
    rk4: np.ndarray | None
    errors: dict
    converged: bool
    warning: str = ""


def component_errors(nr, rk, comps=COMPONENTS):
    """Absolute percentage errors of selected tensor components."""
    A, B = unpack(np.asarray(nr, float)), unpack(np.asarray(rk, float))
    return {c: abs(percent_error(A[_IDX[c]], B[_IDX[c]])) for c in comps}


def compare_case(row, spec, flow, guesses, dt=1.0, t_end=40000.0, multistart=False):
    """Newton (single guess or multistart) against a long RK4 run."""
    try:
        if multistart:
            rep = newton_multistart(spec, flow, guesses)
        else:
            rep = newton_steady(spec, flow, guesses[0])
        traj = rk4_transient(spec, flow, RK4_START, dt, t_end, steady_tol=1e-10)
    except FiberOrientError as exc:
        return CaseResult(row, None, None, {c: float("nan") for c in COMPONENTS},
                          False, f"{type(exc).__name__}: {exc}")
    warn = list(rep.warnings)
    if not traj.steady_reached:
        warn.append("RK4 did not reach a steady state")
    errs = component_errors(rep.state, traj.final)
    return CaseResult(row, rep.state, traj.final, errs, rep.converged, "; ".join(warn))


def case_study_1(models=None, **kw):
    flow = build_flow("SS")
    g = [np.array(CASE_GUESSES["case1"])]
    models = [m for m in CASE1_PARAMS if m != "MRD"] if models is None else models
    return [compare_case(m, ModelSpec(m, "VST", **CASE1_PARAMS[m]), flow, g, **kw)
            for m in models]


def case_study_2(**kw):
    g = [np.array(CASE_GUESSES["case2"])]
    out = []
    for fl in ("L1", "L2"):
        flow = build_flow(fl)
        for m, p in CASE2_PARAMS.items():
            out.append(compare_case(f"{fl}:{m}", ModelSpec(m, "ORS", **p), flow, g, **kw))
    return out


def case3_specs(label):
    p = CASE3_SETS[label]
    return {
        "iARD-RPR": ModelSpec("iARD-RPR", "VST", CI=p["CI"], CM=p["CM"],
                              alpha=p["alpha"], beta=0.0, iard_form="normalized"),
        "pARD-RPR": ModelSpec("pARD-RPR", "VST", CI=p["CI"], Omega=p["Omega"],
                              alpha=p["alpha"], beta=0.0),
        "ARD-RSC": ModelSpec("ARD-RSC", "VST", kappa=p["kappa"], b=p["b"]),
    }


def case_study_3(sets=("a", "b", "c"), **kw):
    flow = build_flow("SS")
    g = [np.array(CASE_GUESSES["case2"])]
    return [compare_case(f"{s}:{m}", spec, flow, g, **kw)
            for s in sets for m, spec in case3_specs(s).items()]


def closure_study(closures=None, dt=0.1, t_end=3000.0):
    flow = build_flow("SS")
    closures = CLOSURE_TAGS if closures is None else closures
    g = guess_candidates("SS")[:1]
    return [compare_case(c, ModelSpec("FT", c, CI=0.01), flow, g, dt=dt, t_end=t_end)
            for c in closures]


def flow_study(closure=FLOW_STUDY_CLOSURE, cases=FLOW_CASES, dt=0.1, t_end=4000.0):
    spec = ModelSpec("FT", closure, CI=0.01)
    return [compare_case(label, spec, build_flow(p, g, e), guess_candidates(p),
                         dt=dt, t_end=t_end, multistart=True)
            for label, p, g, e in cases]


# --------------------------------------------------------------------------
# CSV sweeps
# --------------------------------------------------------------------------

_PERMUTATION = CLOSURE_TAGS[:8]
_ORTHO = ("IBOF", "ORS", "ORT", "NAT-MID", "ORW", "NAT-EXT")
_EBOF = ("WTZ", "LAR32", "ORW3", "VST", "FFLAR4", "LAR4")

TABLES = {
    "4": "Jacobian error, permutation closures",
    "5": "Jacobian error, orthotropic fitted and IBOF closures",
    "6": "Jacobian error, EBOF closures",
    "8": "Newton vs RK4, calibrated shear models",
    "10": "Newton vs RK4, slow-kinetics models on L1 and L2",
    "13": "Newton vs RK4, combined models, three material sets",
    "14": "Newton vs RK4, permutation closures",
    "15": "Newton vs RK4, fitted closures",
    "17": "Newton vs RK4, homogeneous flows",
}


def _fmt(x):
    return "nan" if x is None or not math.isfinite(x) else "%.4e" % x


def _csv_text(meta, header, rows):
    buf = io.StringIO()
    for k in sorted(meta):
        buf.write(f"# {k}: {meta[k]}\n")
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    w.writerows(rows)
    return buf.getvalue()


def _grid_table(closures, models):
    res = jacobian_grid(models=models, closures=closures)
    rows = []
    for m in models:
        vals = [res[(m, c)] for c in closures]
        bad = [c for c, x in zip(closures, vals) if not math.isfinite(x)]
        rows.append([m] + [_fmt(x) for x in vals] + [";".join(bad)])
    return ["model"] + list(closures) + ["warning"], rows


def _case_table(results):
    rows = [[r.row] + [_fmt(r.errors[c]) for c in COMPONENTS] + [r.warning]
            for r in results]
    return ["case"] + list(COMPONENTS) + ["warning"], rows


def table_rows(table, models=None, closures=None):
    """Header and rows of a named table sweep."""
    t = str(table)
    if t in ("4", "5", "6"):
        default = {"4": _PERMUTATION, "5": _ORTHO, "6": _EBOF}[t]
        return _grid_table(list(default if closures is None else closures),
                           list(GRID_PARAMS if models is None else models))
    if t == "8":
        return _case_table(case_study_1(models))
    if t == "10":
        return _case_table(case_study_2())
    if t == "13":
        return _case_table(case_study_3())
    if t in ("14", "15"):
        default = _PERMUTATION if t == "14" else CLOSURE_TAGS[8:]
        return _case_table(closure_study(default if closures is None else closures))
    if t == "17":
        return _case_table(flow_study())
    raise ConfigError(f"unknown table {table!r}; choose from {', '.join(TABLES)}")


def sweep_tables(tables, models=None, closures=None):
    """Run table sweeps and return ``{table: csv_text}``.

    Cells are ``%.4e``; failing cells are ``nan`` and named in the warning
    column.  Output is deterministic for a given request.
    """
    out = {}
    for t in tables:
        header, rows = table_rows(t, models, closures)
        request = {"table": str(t), "models": models, "closures": closures}
        meta = {
            "tool": f"fiberorient {__version__}",
            "table": f"{t}: {TABLES[str(t)]}",
            "config_hash": hashlib.sha256(
                json.dumps(request, sort_keys=True).encode()).hexdigest()[:16],
        }
        if str(t) not in ("4", "5", "6"):
            meta["errors"] = "absolute percentage (newton - rk4)/rk4*100, values rounded to 6 decimals"
        out[str(t)] = _csv_text(meta, header, rows)
        if any("nan" in r[1:-1] for r in rows):
            warnings.warn(f"table {t}: some cells failed, see the warning column",
                          stacklevel=2)
    return out
