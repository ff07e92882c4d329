"""End-to-end acceptance criteria, one test per criterion.

Each test records a PASS/FAIL line that is printed in the pytest summary.
"""

import time
import warnings

import numpy as np
import pytest

import conftest
from fiberorient.closures import CLOSURE_TAGS, NORMALIZING, eval_closure
from fiberorient.flows import build_flow, default_guess
from fiberorient.models import MODEL_TAGS, ModelSpec, decompose, model_rate
from fiberorient.solvers import newton_steady, rk4_transient
from fiberorient.spectral import eig_desc, eig_sensitivities
from fiberorient.tensors import BASIS, ddot42, pack
from fiberorient.validation import (A0, FLOW_CASES, GRID_L, GRID_PARAMS, RK4_START,
                                    FdScheme, case_study_1, case_study_2, case_study_3,
                                    closure_study, flow_study, jacobian_grid, sweep_tables)

DIAG = ("a11", "a22", "a33")
OFF = ("a12", "a13", "a23")


def _report(n, ok, detail):
    line = f"{'PASS' if ok else 'FAIL'} criterion {n}: {detail}"
    conftest.ACCEPTANCE_LINES.append(line)
    print(line)
    assert ok, line


def _worst(results, comps):
    return max(r.errors[c] for r in results for c in comps)


def test_criterion_1_jacobian_grid():
    t0 = time.perf_counter()
    res = jacobian_grid(scheme=FdScheme("central-2", 1e-6))
    dt = time.perf_counter() - t0
    worst = max(res.values())
    ok = (len(res) == len(GRID_PARAMS) * len(CLOSURE_TAGS) == 180
          and all(np.isfinite(list(res.values()))) and worst <= 1e-5 and dt < 30)
    _report(1, ok, f"max |J - J_fd|_2 = {worst:.2e} over {len(res)} cells (<= 1e-5), {dt:.1f} s (< 30 s)")


def test_criterion_2_calibrated_shear_models():
    t0 = time.perf_counter()
    res = case_study_1()
    dt = time.perf_counter() - t0
    d, o = _worst(res, DIAG), _worst(res, OFF)
    ok = (all(r.converged for r in res) and [r.row for r in res] ==
          ["FT", "PT", "iARD", "pARD", "WPT", "Dz"] and d <= 0.1 and o <= 0.2 and dt < 60)
    _report(2, ok, f"diagonal err {d:.2e}% (<= 0.1), off-diagonal {o:.2e}% (<= 0.2), {dt:.1f} s (< 60 s)")


def test_criterion_3_slow_kinetics_models():
    res = case_study_2()
    worst = _worst(res, DIAG + OFF)
    ok = all(r.converged for r in res) and len(res) == 8 and worst <= 0.2
    _report(3, ok, f"max err {worst:.2e}% over {len(res)} cases on L1/L2 (<= 0.2)")


def test_criterion_4_combined_models():
    res = case_study_3()
    worst = _worst(res, DIAG + OFF)
    ok = all(r.converged for r in res) and len(res) == 9 and worst <= 0.2
    _report(4, ok, f"max err {worst:.2e}% over {len(res)} cases, sets a/b/c (<= 0.2)")


def test_criterion_5_closure_robustness():
    res = {r.row: r for r in closure_study()}
    others = [r for k, r in res.items() if k != "HL2"]
    worst = _worst(others, DIAG)
    hl2 = res["HL2"]
    nr, rk = hl2.newton[0], hl2.rk4[0]
    # the Newton root of HL2 is a transient plateau; the long-time state lies below it
    traj = rk4_transient(ModelSpec("FT", "HL2", CI=0.01), build_flow("SS"), RK4_START,
                         0.1, 200.0, steady_tol=0.0, record_every=100)
    plateau = traj.states[np.argmin(np.abs(traj.times - 50.0)), 0]
    late = traj.final[0]
    ok = (len(res) == 20 and all(r.converged for r in others) and worst <= 0.5
          and abs(nr - 0.6103) <= 0.01 * 0.6103 and abs(rk - 0.5759) <= 0.01 * 0.5759
          and abs(plateau - nr) < 0.01 and abs(late - 0.5759) < 1e-3)
    _report(5, ok, f"max diagonal err {worst:.2e}% over 19 closures (<= 0.5); "
                   f"HL2 Newton a11 {nr:.4f} (0.6103), RK4 a11 {rk:.4f} (0.5759), "
                   f"transition done by t=200")


def test_criterion_6_flow_robustness():
    res = flow_study()
    d, o = _worst(res, DIAG), _worst(res, OFF)
    ok = (len(res) == len(FLOW_CASES) == 12 and all(r.converged for r in res)
          and d <= 0.2 and o <= 0.5)
    _report(6, ok, f"12 flows: diagonal err {d:.2e}% (<= 0.2), off-diagonal {o:.2e}% (<= 0.5)")


def _fd(f, a, E, h=1e-6):
    return (f(a + h * E) - f(a - h * E)) / (2 * h)


def test_criterion_7_property_suite():
    t0 = time.perf_counter()
    rng = np.random.default_rng(7)
    checks = {}
    flow = decompose(GRID_L)
    states = []
    for _ in range(5):
        Q, _r = np.linalg.qr(rng.normal(size=(3, 3)))
        lam = rng.dirichlet(np.ones(3))
        states.append(Q @ np.diag(lam) @ Q.T)
    params = dict(GRID_PARAMS)
    params.update({
        "SRF": dict(CI=0.01, kappa=0.1), "RSC": dict(CI=0.01, kappa=0.1),
        "MRD": dict(CI=0.0198, D=(1.0, 0.7946, 0.012)),
        "ARD-RSC": dict(kappa=1 / 30, b=(3.842e-4, -17.86e-4, 525e-4, 0.1168e-4, -5e-4)),
        "pARD-RPR": dict(CI=0.0165, Omega=0.988, alpha=0.965, beta=0.01),
        "FT-RPR": dict(CI=0.01, alpha=0.9, beta=0.02),
    })
    with warnings.catch_warnings():
        warnings.simplefilter("ignore")
        checks["trace"] = max(abs(np.trace(model_rate(ModelSpec(m, c, **params.get(m, {})), a, flow)))
                              for m in MODEL_TAGS for c in ("IBOF", "ORT") for a in states) <= 1e-10
    checks["normalization"] = max(np.abs(ddot42(eval_closure(c, a, False).A4, np.eye(3)) - a).max()
                                  for c in NORMALIZING for a in states) <= 1e-10
    iso = eval_closure("LIN", np.eye(3) / 3, False).A4
    e1 = np.diag([1.0, 0.0, 0.0])
    checks["anchors"] = (abs(iso[0, 0, 0, 0] - 0.2) < 1e-14 and abs(iso[0, 0, 1, 1] - 1 / 15) < 1e-14
                         and abs(eval_closure("QDR", e1, False).A4[0, 0, 0, 0] - 1) < 1e-14)
    worst = 0.0
    for a in states:
        es = eig_desc(a)
        sens = eig_sensitivities(a, es)
        for r in range(5):
            E = BASIS[r]
            worst = max(worst, np.abs(sens.dlam[r] - _fd(lambda x: eig_desc(x).values, a, E)).max())
    checks["eig-sensitivity"] = worst <= 1e-6
    fin = lambda h: rk4_transient(ModelSpec("FT", "LIN", CI=0.01), build_flow("SS"),
                                  np.array([1, 0, 0, 1, 0]) / 3, h, 5.0, steady_tol=0.0).final
    ref = fin(0.5 / 8)
    order = np.log2(np.linalg.norm(fin(0.5) - ref) / np.linalg.norm(fin(0.25) - ref))
    checks["rk4-order"] = order >= 3.9
    rep = newton_steady(ModelSpec("FT", "ORT", CI=0.01), build_flow("SS"), default_guess("SS"))
    r = np.array(rep.residual_history)
    tail = r[(r > 1e-12) & (r < 1e-2)]
    checks["newton-quadratic"] = rep.converged and len(tail) >= 2 and np.all(tail[1:] <= 50 * tail[:-1] ** 2)
    ta = newton_steady(ModelSpec("FT", "LIN", CI=0.01), build_flow("TA"), default_guess("TA"))
    checks["ta-fixed-point"] = np.abs(ta.state - pack(np.eye(3) / 3)).max() <= 1e-12
    dt = time.perf_counter() - t0
    failed = [k for k, v in checks.items() if not v]
    _report(7, not failed and dt < 60,
            f"{len(checks) - len(failed)}/{len(checks)} property checks "
            f"(RK4 order {order:.2f}){'; failed: ' + ', '.join(failed) if failed else ''}, {dt:.1f} s (< 60 s)")


def test_criterion_8_sweep_determinism():
    with warnings.catch_warnings():
        warnings.simplefilter("ignore")
        first = sweep_tables(["4", "8"])
        second = sweep_tables(["4", "8"])
    same = all(first[t].encode() == second[t].encode() for t in first)
    _report(8, same and set(first) == {"4", "8"},
            "repeated sweeps '4' and '8' give byte-identical CSV" if same else "sweeps differ")
