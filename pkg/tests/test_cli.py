import json
import subprocess
import sys

import numpy as np
import pytest

from fiberorient.cli import run
from fiberorient.flows import build_flow
from fiberorient.models import ModelSpec
from fiberorient.solvers import rk4_transient
from fiberorient.validation import A0


def _run(capsys, *argv):
    code = run(list(argv))
    out, err = capsys.readouterr()
    return code, out, err


def test_steady_shear_matches_rk4(capsys):
    code, out, _ = _run(capsys, "steady", "--model", "ft", "--closure", "vst", "--flow", "ss",
                        "--gamma", "1", "--ci", "0.0311", "--guess", "ss")
    res = json.loads(out)
    assert code == 0 and res["converged"] and res["physical"]
    assert {"a", "iterations", "residual", "metadata"} <= set(res)
    rk = rk4_transient(ModelSpec("FT", "VST", CI=0.0311), build_flow("SS"),
                       np.array([1, 1e-4, 1e-4, 1, 1e-4]) / 3, 0.5, 2000.0, steady_tol=1e-10)
    a = np.array(res["state"])
    assert np.all(np.abs(a[[0, 3]] - rk.final[[0, 3]]) / np.abs(rk.final[[0, 3]]) < 1e-3)


def test_triaxial_flow_gives_isotropy(capsys):
    code, out, _ = _run(capsys, "steady", "--flow", "ta", "--model", "ft", "--closure", "lin")
    assert code == 0
    assert np.allclose(json.loads(out)["state"], [1 / 3, 0, 0, 1 / 3, 0], atol=1e-10)


def test_validate_jacobian_from_state_file(capsys, tmp_path):
    f = tmp_path / "a0.json"
    f.write_text(json.dumps(A0.tolist()))
    code, out, _ = _run(capsys, "validate-jacobian", "--model", "ft", "--closure", "hyb1",
                        "--state", str(f), "--step", "1e-6")
    err = json.loads(out)["error"]
    assert code == 0 and 1e-11 < err < 1e-6


def test_transient_csv(capsys):
    code, out, _ = _run(capsys, "transient", "--model", "ft", "--closure", "ibof", "--ci", "0.01",
                        "--dt", "0.5", "--t-end", "2", "--format", "csv")
    lines = out.splitlines()
    assert code == 0 and lines[0].startswith("# config_hash:")
    assert lines[1] == "t,a11,a12,a13,a22,a23" and len(lines) == 2 + 5


def test_exit_codes(capsys):
    code, _, err = _run(capsys, "steady", "--model", "bogus", "--closure", "lin")
    assert code == 2 and "configuration error" in err
    code, _, err = _run(capsys, "steady", "--model", "ft", "--closure", "lin", "--gamma", "x")
    assert code == 2
    code, _, err = _run(capsys, "steady")
    assert code == 2 and "model" in err
    code, out, _ = _run(capsys, "steady", "--model", "ft", "--closure", "ort", "--ci", "0.01",
                        "--max-iter", "1")
    assert code == 1 and json.loads(out)["converged"] is False


def test_config_file_and_flag_precedence(capsys, tmp_path):
    cfg = {"command": "steady", "model": {"model": "FT", "closure": "IBOF", "CI": 0.01},
           "flow": {"preset": "BA"}, "solver": {"multistart": True}}
    path = tmp_path / "c.json"
    path.write_text(json.dumps(cfg))
    code, out, _ = _run(capsys, "--config", str(path))
    res = json.loads(out)
    assert code == 0 and res["physical"]
    assert res["state"][0] == pytest.approx(res["state"][3])
    # a flag overrides the config value
    code, out2, _ = _run(capsys, "steady", "--config", str(path), "--flow", "ta")
    assert code == 0 and np.allclose(json.loads(out2)["state"], [1 / 3, 0, 0, 1 / 3, 0], atol=1e-9)
    path.write_text(json.dumps(dict(cfg, colour="red")))
    code, _, err = _run(capsys, "--config", str(path))
    assert code == 2 and "unknown config fields" in err


def test_identical_config_gives_identical_output(capsys, tmp_path):
    argv = ["steady", "--model", "pard", "--closure", "ibof", "--ci", "0.0169", "--omega", "0.9868"]
    _, a, _ = _run(capsys, *argv)
    _, b, _ = _run(capsys, *argv)
    assert a == b
    _, c, _ = _run(capsys, *argv[:-1], "0.98")
    assert json.loads(a)["metadata"]["config_hash"] != json.loads(c)["metadata"]["config_hash"]


def test_list(capsys):
    for what, item in (("models", "iARD-RPR"), ("closures", "IBOF"), ("flows", "simple-shear"),
                       ("tables", "17")):
        code, out, _ = _run(capsys, "--list", what)
        assert code == 0 and item in out


def test_sweep_writes_files_byte_identically(tmp_path, capsys):
    for d in ("x", "y"):
        assert run(["sweep", "--table", "6", "--output-dir", str(tmp_path / d)]) == 0
    a = (tmp_path / "x" / "table_6.csv").read_bytes()
    assert a == (tmp_path / "y" / "table_6.csv").read_bytes()
    assert b"model,WTZ,LAR32,ORW3,VST,FFLAR4,LAR4,warning" in a
    code, _, err = _run(capsys, "sweep", "--table", "3")
    assert code == 2


def test_module_entry_point():
    p = subprocess.run([sys.executable, "-m", "fiberorient", "--version"],
                       capture_output=True, text=True)
    assert p.returncode == 0 and "fiberorient" in p.stdout
