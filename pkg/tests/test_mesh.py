import numpy as np
import pytest

from divcurl import generators

from conftest import get_mesh


def test_cube_counts():
    mesh = get_mesh("cube:2")
    n = 2
    assert mesh.nv == (n + 1) ** 3
    assert mesh.nt == 6 * n ** 3
    assert abs(mesh.volumes.sum() - 1.0) < 1e-12
    assert np.all(mesh.volumes > 0.0)


@pytest.mark.parametrize("name,b1,b2,nbc,ncuts", [
    ("cube:2", 0, 0, 1, 0),
    ("shell:1", 0, 1, 2, 0),
    ("torus:1", 1, 0, 1, 1),
    ("torus-nocut:1", 1, 0, 1, 0),
])
def test_topology(name, b1, b2, nbc, ncuts):
    mesh = get_mesh(name)
    betti = mesh.betti()
    assert betti["b1"] == b1 and betti["b2"] == b2
    assert mesh.n_boundary_components == nbc
    assert len(mesh.cuts) == ncuts
    mesh.validate()


def test_boundary_faces_have_one_tet():
    mesh = get_mesh("shell:1")
    bf = mesh.boundary_faces
    assert np.all(mesh.face_tets[bf, 1] < 0)
    interior = np.setdiff1d(np.arange(mesh.nf), bf)
    assert np.all(mesh.face_tets[interior, 1] >= 0)


def test_boundary_is_closed_surface():
    # Each boundary edge belongs to exactly two boundary faces.
    mesh = get_mesh("torus:1")
    counts = {}
    for f in mesh.boundary_faces:
        for e in mesh.face_edges[f]:
            counts[int(e)] = counts.get(int(e), 0) + 1
    assert set(counts.values()) == {2}


def test_shell_volume_and_area():
    # Octahedron-based sphere approximations approach the exact values
    # from below; level 2 is within a few percent.
    mesh = get_mesh("shell:2")
    exact = 4.0 / 3.0 * np.pi * (1.0 ** 3 - 0.5 ** 3)
    assert abs(mesh.volumes.sum() - exact) / exact < 0.12
    outer = mesh.boundary_component_faces(0)
    inner = mesh.boundary_component_faces(1)
    a_out = mesh.face_areas(outer).sum()
    a_in = mesh.face_areas(inner).sum()
    assert abs(a_out - 4 * np.pi) / (4 * np.pi) < 0.12
    assert abs(a_in - np.pi) / np.pi < 0.12
    # The outer component is the larger sphere.
    assert a_out > a_in


def test_torus_cut_is_interior_disk():
    mesh = get_mesh("torus:1")
    cut = mesh.cuts[0]
    assert np.all(mesh.face_tets[cut.face_ids, 1] >= 0)
    loop = mesh.cut_boundary_loop(cut)
    # The rim is a single closed loop on the boundary surface.
    assert loop.shape[0] > 0
    starts = loop[:, 0]
    ends = loop[:, 1]
    assert sorted(starts) == sorted(ends)


def test_cut_normals_consistent():
    mesh = get_mesh("torus:1")
    cut = mesh.cuts[0]
    normals = mesh.face_normals(cut.face_ids) * cut.signs[:, None]
    # All oriented normals point the same way around the torus axis
    # (reference direction (0, 1, 0) at the phi = 0 section).
    assert np.all(normals @ np.array([0.0, 1.0, 0.0]) > 0.0)


def test_quality_metrics_positive():
    q = get_mesh("cube:2").quality()
    assert 0.0 < q.h_min <= q.h_max
    assert q.min_dihedral > 0.0
    assert q.min_volume > 0.0
    assert q.max_aspect >= 1.0


def test_validate_rejects_inverted_tet():
    mesh = generators.cube(1)
    tets = mesh.tets.copy()
    # Mesh construction orients tets positively; corrupt volumes directly.
    mesh2 = type(mesh)(mesh.vertices, tets)
    mesh2.volumes = mesh2.volumes.copy()
    mesh2.volumes[0] = -mesh2.volumes[0]
    with pytest.raises(ValueError):
        mesh2.validate()
