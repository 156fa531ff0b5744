import numpy as np
import pytest

from divcurl import generators

_MESHES = {}

_ACCEPTANCE = {}


def get_mesh(name):
    """Shared, cached meshes: cube:n, shell:k, torus:k, torus-nocut:k."""
    if name not in _MESHES:
        kind, _, level = name.partition(":")
        level = int(level)
        if kind == "cube":
            _MESHES[name] = generators.cube(level)
        elif kind == "shell":
            _MESHES[name] = generators.spherical_shell(level)
        elif kind == "torus":
            _MESHES[name] = generators.solid_torus(level, with_cut=True)
        elif kind == "torus-nocut":
            _MESHES[name] = generators.solid_torus(level, with_cut=False)
        else:
            raise KeyError(name)
    return _MESHES[name]


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


def record_criterion(number, passed, description):
    """Register one acceptance verdict for the end-of-run summary."""
    _ACCEPTANCE[number] = (bool(passed), description)


def pytest_terminal_summary(terminalreporter, exitstatus, config):
    if not _ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for n in sorted(_ACCEPTANCE):
        ok, desc = _ACCEPTANCE[n]
        verdict = "PASS" if ok else "FAIL"
        terminalreporter.write_line(f"criterion {n}: {verdict} - {desc}")
