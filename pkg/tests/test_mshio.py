import numpy as np

from divcurl.mshio import load_msh, save_msh

from conftest import get_mesh


def test_roundtrip_preserves_mesh(tmp_path):
    mesh = get_mesh("torus:1")
    path = tmp_path / "torus.msh"
    save_msh(mesh, path)
    back = load_msh(path)
    assert np.allclose(back.vertices, mesh.vertices)
    assert np.array_equal(back.tets, mesh.tets)
    assert np.array_equal(back.boundary_ids, mesh.boundary_ids)
    assert len(back.cuts) == 1
    a, b = mesh.cuts[0], back.cuts[0]
    assert a.name == b.name
    assert np.array_equal(np.sort(a.face_ids), np.sort(b.face_ids))
    # Orientation is preserved face by face.
    order = np.argsort(a.face_ids)
    border = np.argsort(b.face_ids)
    assert np.array_equal(a.signs[order], b.signs[border])


def test_roundtrip_is_byte_stable(tmp_path):
    mesh = get_mesh("shell:1")
    p1 = tmp_path / "a.msh"
    p2 = tmp_path / "b.msh"
    save_msh(mesh, p1)
    save_msh(load_msh(p1), p2)
    assert p1.read_bytes() == p2.read_bytes()


def test_boundary_components_preserved(tmp_path):
    mesh = get_mesh("shell:1")
    path = tmp_path / "shell.msh"
    save_msh(mesh, path)
    back = load_msh(path)
    assert back.n_boundary_components == 2
    assert back.betti() == mesh.betti()
