import numpy as np
import pytest

from divcurl import whitney as wh
from divcurl.decompose import hw_electric, hw_magnetic
from divcurl.fields import CoefficientField
from divcurl.harmonic import electric_basis, magnetic_basis
from divcurl.linsolve import cg
from divcurl.whitney import DofVector

from conftest import get_mesh

ATOL = 1e-8


def test_magnetic_split_random_field(rng):
    mesh = get_mesh("torus:1")
    sigma = CoefficientField.diagonal(2.0, 1.0, 0.5)
    u = DofVector(mesh, wh.RT, rng.standard_normal(mesh.nf))
    res = hw_magnetic(u, sigma, mesh)
    assert res.reconstruction < ATOL
    assert len(res.pairings) == 3
    for val in res.pairings.values():
        assert val < ATOL
    # The component norms satisfy the weighted Pythagoras identity.
    m = wh.mass_matrix(mesh, wh.RT, sigma)
    total = float(u.values @ (m @ u.values))
    parts = sum(float(p.values @ (m @ p.values))
                for p in (res.gradient, res.harmonic, res.curl))
    assert abs(total - parts) < 1e-8 * total


def test_electric_split_random_field(rng):
    mesh = get_mesh("shell:1")
    eps = CoefficientField.diagonal(1.0, 2.0, 3.0)
    u = DofVector(mesh, wh.NED, rng.standard_normal(mesh.ne))
    res = hw_electric(u, eps, mesh)
    assert res.reconstruction < ATOL
    for val in res.pairings.values():
        assert val < ATOL
    # chi vanishes on the whole boundary.
    vmask, _, _ = wh.boundary_entities(mesh)
    assert np.abs(res.chi.values[vmask]).max() == 0.0


def test_basis_member_is_pure_harmonic():
    mesh = get_mesh("torus:1")
    basis = magnetic_basis(mesh)
    res = hw_magnetic(basis.fields[0], None, mesh, basis=basis)
    unorm = np.linalg.norm(basis.fields[0].values)
    assert np.allclose(res.coefficients, [1.0], atol=ATOL)
    assert np.abs(res.gradient.values).max() < ATOL * unorm
    assert np.abs(res.curl.values).max() < ATOL * unorm


def test_electric_basis_member_is_pure_harmonic():
    mesh = get_mesh("shell:1")
    basis = electric_basis(mesh)
    res = hw_electric(basis.fields[0], None, mesh, basis=basis)
    unorm = np.linalg.norm(basis.fields[0].values)
    assert np.allclose(res.coefficients, [1.0], atol=ATOL)
    assert np.abs(res.gradient.values).max() < ATOL * unorm
    assert np.abs(res.curl.values).max() < ATOL * unorm


def test_weighted_gradient_input_recovers_potential():
    # For u the weighted projection representing sigma^{-1} grad(chi_h),
    # the split returns a pure gradient part and recovers chi up to a
    # constant.
    mesh = get_mesh("cube:2")
    sigma = CoefficientField.diagonal(2.0, 1.0, 0.5)
    phi = wh.interpolate(mesh, wh.P1, lambda p: p[:, 0] ** 2 - p[:, 1])
    g, _, _ = wh.incidence_matrices(mesh)
    m = wh.mass_matrix(mesh, wh.RT, sigma)
    q0 = wh.mixed_mass(mesh)
    vals, _ = cg(m, q0.T @ (g @ phi.values))
    u = DofVector(mesh, wh.RT, vals)
    res = hw_magnetic(u, sigma, mesh)
    unorm = np.linalg.norm(u.values)
    assert np.abs(res.harmonic.values).max() < ATOL * unorm
    assert np.abs(res.curl.values).max() < ATOL * unorm
    chi = res.chi.values - res.chi.values.mean()
    ref = phi.values - phi.values.mean()
    assert np.abs(chi - ref).max() < 1e-7 * np.abs(ref).max()


def test_curl_input_has_no_gradient_part(rng):
    # The curl of an interior edge field lies in the projection subspace
    # of the curl component, so the other two parts vanish.
    mesh = get_mesh("cube:2")
    _, emask, _ = wh.boundary_entities(mesh)
    vals = np.zeros(mesh.ne)
    vals[~emask] = rng.standard_normal((~emask).sum())
    xi = DofVector(mesh, wh.NED, vals)
    u = wh.curl(xi)
    res = hw_magnetic(u, None, mesh)
    unorm = np.linalg.norm(u.values)
    assert np.abs(res.gradient.values).max() < ATOL * unorm
    assert np.abs(res.harmonic.values).max() < ATOL * unorm


def test_gradient_input_electric(rng):
    # An exact gradient of an interior bubble splits as pure gradient.
    mesh = get_mesh("cube:2")
    vmask, _, _ = wh.boundary_entities(mesh)
    phi = np.zeros(mesh.nv)
    phi[~vmask] = rng.standard_normal((~vmask).sum())
    g, _, _ = wh.incidence_matrices(mesh)
    u = DofVector(mesh, wh.NED, g @ phi)
    res = hw_electric(u, None, mesh)
    unorm = np.linalg.norm(u.values)
    assert np.abs(res.curl.values).max() < ATOL * unorm
    assert np.abs(res.chi.values - phi).max() < ATOL * np.abs(phi).max()


def test_split_linearity(rng):
    mesh = get_mesh("torus:1")
    u1 = DofVector(mesh, wh.RT, rng.standard_normal(mesh.nf))
    u2 = DofVector(mesh, wh.RT, rng.standard_normal(mesh.nf))
    basis = magnetic_basis(mesh)
    r1 = hw_magnetic(u1, None, mesh, basis=basis)
    r2 = hw_magnetic(u2, None, mesh, basis=basis)
    r12 = hw_magnetic(u1 + u2, None, mesh, basis=basis)
    scale = np.linalg.norm(u1.values) + np.linalg.norm(u2.values)
    for part in ("gradient", "harmonic", "curl"):
        d = getattr(r12, part).values - getattr(r1, part).values \
            - getattr(r2, part).values
        assert np.abs(d).max() < 1e-7 * scale, part
