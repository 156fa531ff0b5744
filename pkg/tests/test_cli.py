import json

import numpy as np
import pytest

from divcurl import cli, vtkio
from divcurl import whitney as wh

from conftest import get_mesh


def _report(tmp_path, argv):
    out = tmp_path / "out"
    code = cli.main(argv + ["--out", str(out)])
    with open(out / "report.json") as fh:
        return code, json.load(fh)


def test_mesh_info_report(tmp_path):
    code, rep = _report(tmp_path, ["mesh-info", "--mesh", "torus:1"])
    assert code == 0
    assert rep["command"] == "mesh-info"
    assert rep["mesh"]["betti"] == [1, 0]
    assert set(rep) == {"command", "mesh", "coefficient", "results",
                        "residuals", "stats", "timestamp"}
    assert {"iterations", "seconds"} <= set(rep["stats"])


def test_check_exit_codes(tmp_path):
    code, rep = _report(tmp_path, [
        "check", "--system", "magnetostatic", "--mesh", "cube:2",
        "--data", "ms-gradient"])
    assert code == 0 and rep["results"]["passed"]
    code, rep = _report(tmp_path, [
        "check", "--mesh", "cube:2", "--data", "mean-mismatch"])
    assert code == 2
    failing = [c["name"] for c in rep["results"]["checks"]
               if not c["passed"]]
    assert failing == ["meanBalance"]


def test_solve_incompatible_exits_2(tmp_path, capsys):
    code = cli.main(["solve", "--system", "magnetostatic",
                     "--mesh", "shell:1", "--data", "shell-flux"])
    assert code == 2
    assert "gammaFlux" in capsys.readouterr().err


def test_solve_writes_fields(tmp_path):
    out = tmp_path / "run"
    code = cli.main(["solve", "--system", "electric", "--mesh", "shell:1",
                     "--data", "zero", "--out", str(out)])
    assert code == 0
    names = {p.name for p in out.iterdir()}
    assert {"report.json", "u0.vtk", "basis_0.vtk",
            "scalar_potential.vtk"} <= names
    header = (out / "u0.vtk").read_text().splitlines()
    assert header[0].startswith("# vtk DataFile")
    assert any(line.startswith("VECTORS u0") for line in header)


def test_input_errors_exit_4(tmp_path, capsys):
    assert cli.main(["solve", "--system", "magnetostatic",
                     "--mesh", "missing.msh"]) == 4
    assert cli.main(["mesh-info", "--mesh", "klein:1"]) == 4
    assert cli.main(["solve", "--system", "acoustic"]) == 4
    capsys.readouterr()


def test_determinism_modulo_timestamp(tmp_path):
    argv = ["solve", "--system", "magnetostatic", "--mesh", "torus:1",
            "--data", "ms-gradient"]
    _, a = _report(tmp_path / "a", argv)
    _, b = _report(tmp_path / "b", argv)
    for rep in (a, b):
        rep.pop("timestamp")
        rep["stats"].pop("seconds")  # wall time, inherently run-dependent
    assert json.dumps(a, sort_keys=True) == json.dumps(b, sort_keys=True)


def test_config_file_defaults_and_flag_priority(tmp_path):
    cfg = tmp_path / "run.cfg"
    cfg.write_text("[run]\nmesh = cube:2\nsystem = magnetostatic\n"
                   "data = ms-gradient\n")
    code, rep = _report(tmp_path, ["solve", "--config", str(cfg)])
    assert code == 0 and rep["results"]["system"] == "magnetostatic"
    # An explicit flag overrides the file.
    code, rep = _report(tmp_path, ["check", "--config", str(cfg),
                                   "--data", "zero"])
    assert code == 0
    assert rep["results"]["passed"]


def test_friedrichs_cli(tmp_path):
    code, rep = _report(tmp_path, ["friedrichs", "--mesh", "cube:2",
                                   "--kind", "normal"])
    assert code == 0
    assert rep["results"]["constant"] > 0.0
    assert "certificate" in rep["residuals"]


def test_vtk_roundtrip_values(tmp_path):
    # The exported cell vectors are the centroid values of the field.
    mesh = get_mesh("cube:2")
    # (a + c x) lies in the lowest-order face-element space, so the
    # interpolant reproduces it pointwise.
    u = wh.interpolate(mesh, wh.RT,
                       lambda p: np.array([1.0, 2.0, -1.0]) + 0.5 * p)
    path = tmp_path / "u.vtk"
    vtkio.write_vtk(path, mesh, cell_data={"u": u})
    lines = path.read_text().splitlines()
    i = lines.index("VECTORS u double")
    vals = np.array([[float(x) for x in line.split()]
                     for line in lines[i + 1:i + 1 + mesh.nt]])
    centers = mesh.vertices[mesh.tets].mean(axis=1)
    exact = np.array([1.0, 2.0, -1.0]) + 0.5 * centers
    assert np.allclose(vals, exact, atol=1e-12)
