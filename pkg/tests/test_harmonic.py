import numpy as np
import pytest

from divcurl import whitney as wh
from divcurl.fields import CoefficientField
from divcurl.harmonic import (boundary_flux, cut_flux, electric_basis,
                              magnetic_basis)

from conftest import get_mesh

ATOL = 1e-8


@pytest.mark.parametrize("name,n2", [("cube:2", 0), ("shell:1", 0),
                                     ("torus:1", 1)])
def test_magnetic_dimension(name, n2):
    basis = magnetic_basis(get_mesh(name))
    assert basis.dimension == n2


@pytest.mark.parametrize("name,n1", [("cube:2", 0), ("shell:1", 1),
                                     ("torus:1", 0)])
def test_electric_dimension(name, n1):
    basis = electric_basis(get_mesh(name))
    assert basis.dimension == n1


def test_magnetic_member_properties():
    mesh = get_mesh("torus:1")
    sigma = CoefficientField.diagonal(2.0, 1.0, 0.5)
    basis = magnetic_basis(mesh, sigma)
    u = basis.fields[0]
    _, c, d = wh.incidence_matrices(mesh)
    # Exactly divergence-free fluxes and zero normal trace.
    assert np.abs(d @ u.values).max() < 1e-9
    _, _, fmask = wh.boundary_entities(mesh)
    assert np.abs(u.values[fmask]).max() == 0.0
    # Weighted curl vanishes against interior edge tests.
    msig = wh.mass_matrix(mesh, wh.RT, sigma)
    _, emask, _ = wh.boundary_entities(mesh)
    r = (c.T @ (msig @ u.values))[~emask]
    assert np.linalg.norm(r) < ATOL * np.linalg.norm(msig @ u.values)
    # Unit flux through its cut.
    assert abs(cut_flux(mesh, u, mesh.cuts[0]) - 1.0) < ATOL


def test_electric_member_properties():
    mesh = get_mesh("shell:1")
    eps = CoefficientField.diagonal(1.0, 2.0, 3.0)
    basis = electric_basis(mesh, eps)
    u = basis.fields[0]
    _, c, _ = wh.incidence_matrices(mesh)
    # An exact gradient: its curl vanishes to rounding.
    assert np.abs(c @ u.values).max() < 1e-14 * np.abs(u.values).max()
    # The potential is zero on the outer boundary, constant on the inner.
    q = basis.potentials[0]
    outer = np.unique(mesh.faces[mesh.boundary_component_faces(0)])
    inner = np.unique(mesh.faces[mesh.boundary_component_faces(1)])
    assert np.abs(q.values[outer]).max() == 0.0
    assert np.ptp(q.values[inner]) == 0.0
    assert abs(basis.gram[0, 0] - 1.0) < ATOL


def test_gram_identity_with_random_coefficient(rng):
    mesh = get_mesh("torus:1")
    sigma = CoefficientField.random_spd(rng)
    basis = magnetic_basis(mesh, sigma)
    assert np.abs(basis.gram - np.eye(1)).max() < ATOL


def test_curl_free_representative_pairs_with_cut():
    # The unit-circulation edge representative has curl zero and pairs to
    # one with the cut flux of the basis member it is dual to.
    mesh = get_mesh("torus:1")
    basis = magnetic_basis(mesh)
    rep = basis.curl_free[0]
    _, c, _ = wh.incidence_matrices(mesh)
    assert np.abs(c @ rep.values).max() < 1e-12
    m = wh.mass_matrix(mesh, wh.RT)
    # L2 pairing of the field with the representative equals its cut flux.
    u = basis.fields[0]
    rep_rt = wh.project_ned_to_rt(mesh, rep)
    val = float(u.values @ (m @ rep_rt.values))
    assert abs(val - 1.0) < 20 * mesh.h ** 2


def test_boundary_flux_balance():
    mesh = get_mesh("shell:1")
    basis = electric_basis(mesh)
    u = wh.project_ned_to_rt(mesh, basis.fields[0])
    fluxes = [boundary_flux(mesh, u, i)
              for i in range(mesh.n_boundary_components)]
    # Net flux through the whole boundary of a gradient field vanishes.
    assert abs(sum(fluxes)) < 30 * mesh.h ** 2


def test_certificates_small():
    for name, build in (("torus:1", magnetic_basis),
                        ("shell:1", electric_basis)):
        basis = build(get_mesh(name))
        for key, val in basis.certificates.items():
            assert val < ATOL, (name, key, val)
