import warnings

import numpy as np
import pytest
from hypothesis import given, strategies as st

from fiberorient.errors import ConfigError
from fiberorient.models import ModelSpec, decompose, model_jacobian, residual
from fiberorient.tensors import pack
from fiberorient.validation import (A0, FD_KINDS, GRID_L, FdScheme, component_errors,
                                    fd_jacobian, jac_error, jacobian_grid,
                                    model_jac_error, sweep_tables, table_rows)

M = np.arange(25.0).reshape(5, 5) / 7.0 - 1.0


@pytest.mark.parametrize("kind", FD_KINDS)
@given(v=st.lists(st.floats(-2, 2), min_size=5, max_size=5))
def test_fd_is_exact_for_linear_maps(kind, v):
    J = fd_jacobian(lambda x: M @ x, np.array(v), FdScheme(kind, 1e-3, relative=False))
    assert np.allclose(J, M, atol=1e-9)


def test_central_difference_error_is_second_order():
    f = lambda x: x ** 3
    v = np.full(5, 0.7)
    errs = [np.abs(np.diag(fd_jacobian(f, v, FdScheme("central-2", h, False))) - 3 * v ** 2).max()
            for h in (1e-2, 5e-3)]
    # exact error of the central stencil on a cubic is h^2
    assert errs[0] == pytest.approx(1e-4, rel=1e-6)
    assert errs[0] / errs[1] == pytest.approx(4.0, rel=1e-4)


def test_higher_order_stencil_is_at_least_as_accurate():
    spec = ModelSpec("FT", "HYB1", CI=0.01)
    flow = decompose(GRID_L)
    v = pack(A0)
    # step large enough that truncation dominates rounding
    e2 = model_jac_error(spec, v, flow, FdScheme("central-2", 1e-2))
    e4 = model_jac_error(spec, v, flow, FdScheme("central-4", 1e-2))
    assert e4 <= e2


def test_relative_step_scales_with_component():
    calls = []
    v = np.array([2.0, 0.0, 1e-20, 1.0, 1.0])
    fd_jacobian(lambda x: calls.append(x.copy()) or x, v, FdScheme("forward", 1e-3))
    steps = [np.abs(c - v).max() for c in calls[1:]]
    assert steps[0] == pytest.approx(2e-3) and steps[1] == pytest.approx(1e-3)
    # components below the machine-epsilon threshold fall back to the absolute step
    assert steps[2] == pytest.approx(1e-3)


def test_exact_jacobian_matches_fd():
    spec = ModelSpec("pARD", "IBOF", CI=0.0169, Omega=0.9868)
    flow = decompose(GRID_L)
    assert model_jac_error(spec, pack(A0), flow) < 1e-5
    J = model_jacobian(spec, pack(A0), flow).J
    Jfd = fd_jacobian(lambda x: residual(spec, x, flow), pack(A0))
    assert J.shape == Jfd.shape == (5, 5)


def test_jac_error_is_spectral_norm():
    assert jac_error(np.eye(5), np.zeros((5, 5))) == pytest.approx(1.0)
    D = np.diag([3.0, -4.0, 0, 0, 0])
    assert jac_error(D, 0 * D) == pytest.approx(4.0)
    assert jac_error(M, M) == 0.0


def test_scheme_validation():
    with pytest.raises(ConfigError):
        FdScheme("central-6")
    with pytest.raises(ValueError):
        FdScheme(step=0.0)


def test_grid_reports_failures_as_nan():
    # eigenvalue-based closures are undefined at isotropy
    res = jacobian_grid(["FT"], ["ORT", "HYB1"], v=np.array([1 / 3, 0, 0, 1 / 3, 0]))
    assert np.isnan(res[("FT", "ORT")])
    assert res[("FT", "HYB1")] < 1e-6


def test_empty_grid_gives_header_only():
    header, rows = table_rows("4", models=[])
    assert header[0] == "model" and header[-1] == "warning" and rows == []


def test_component_errors_are_absolute():
    nr = np.array([0.5, 0.1, 0.0, 0.3, 0.0])
    rk = np.array([0.505, 0.1, 0.0, 0.3, 0.0])
    e = component_errors(nr, rk)
    assert e["a11"] == pytest.approx(100 * 0.005 / 0.505)
    assert e["a12"] == e["a13"] == e["a23"] == 0.0
    assert e["a33"] == pytest.approx(100 * 0.005 / 0.195)


def test_sweep_is_deterministic_and_flags_nan():
    a = sweep_tables(["4"], models=["FT", "Dz"], closures=["HYB1", "IBOF"])
    b = sweep_tables(["4"], models=["FT", "Dz"], closures=["HYB1", "IBOF"])
    assert a == b
    lines = a["4"].splitlines()
    assert lines[0].startswith("# config_hash:")
    assert "model,HYB1,IBOF,warning" in lines
    assert not any("nan" in ln for ln in lines)
    with pytest.raises(ConfigError):
        sweep_tables(["99"])


def test_sweep_with_failing_cell_warns(monkeypatch):
    import fiberorient.validation as val
    monkeypatch.setattr(val, "A0", np.eye(3) / 3)
    with pytest.warns(UserWarning, match="cells failed"):
        out = sweep_tables(["5"], models=["FT"], closures=["ORT"])
    assert out["5"].splitlines()[-1] == "FT,nan,ORT"
