"""Lowest-order Whitney form spaces on a tetrahedral mesh.

Four spaces form a discrete de Rham complex:

  P1   vertex values                  (continuous piecewise linear)
  NED  edge circulations              (edge elements, tangentially continuous)
  RT   face fluxes                    (face elements, normally continuous)
  P0   cell averages                  (piecewise constant)

Degrees of freedom follow the global entity orientation of the mesh, so
grad, curl and div act as signed integer incidence matrices between the
coefficient vectors: see incidence_matrices.
"""

from dataclasses import dataclass

import numpy as np
from scipy import sparse

from . import quadrature as quad
from .mesh import TET_EDGE_LOCAL, TET_FACE_LOCAL

P1, NED, RT, P0 = "P1", "NED", "RT", "P0"

_DOF_COUNT = {P1: "nv", NED: "ne", RT: "nf", P0: "nt"}


@dataclass
class DofVector:
    """Coefficients of a Whitney form, tagged with its space."""

    mesh: object
    degree: str
    values: np.ndarray

    def __post_init__(self):
        self.values = np.asarray(self.values, dtype=float)
        expected = getattr(self.mesh, _DOF_COUNT[self.degree])
        if self.values.shape != (expected,):
            raise ValueError(
                f"{self.degree} field needs {expected} dofs, "
                f"got {self.values.shape}")

    def copy(self):
        return DofVector(self.mesh, self.degree, self.values.copy())

    def __add__(self, other):
        assert self.degree == other.degree and self.mesh is other.mesh
        return DofVector(self.mesh, self.degree, self.values + other.values)

    def __sub__(self, other):
        assert self.degree == other.degree and self.mesh is other.mesh
        return DofVector(self.mesh, self.degree, self.values - other.values)

    def __mul__(self, a):
        return DofVector(self.mesh, self.degree, self.values * float(a))

    __rmul__ = __mul__


def _cached(mesh, key, builder):
    if key not in mesh._cache:
        mesh._cache[key] = builder()
    return mesh._cache[key]


# -- incidence ------------------------------------------------------------

def incidence_matrices(mesh):
    """Signed integer (grad, curl, div) incidence matrices G, C, D.

    G (ne x nv): circulation of grad p along each edge.
    C (nf x ne): flux of curl v through each oriented face.
    D (nt x nf): integral of div u over each cell.
    Satisfy C @ G = 0 and D @ C = 0 exactly.
    """
    def build():
        ne, nv, nf, nt = mesh.ne, mesh.nv, mesh.nf, mesh.nt
        rows = np.repeat(np.arange(ne), 2)
        cols = mesh.edges.ravel()
        data = np.tile([-1, 1], ne)
        g = sparse.csr_matrix((data, (rows, cols)), shape=(ne, nv))

        rows = np.repeat(np.arange(nf), 3)
        cols = mesh.face_edges.ravel()
        data = np.tile([1, 1, -1], nf)
        c = sparse.csr_matrix((data, (rows, cols)), shape=(nf, ne))

        rows = np.repeat(np.arange(nt), 4)
        cols = mesh.tet_faces.ravel()
        data = mesh.tet_face_signs.ravel()
        d = sparse.csr_matrix((data, (rows, cols)), shape=(nt, nf))
        return g, c, d

    return _cached(mesh, "incidence", build)


# -- local bases ----------------------------------------------------------

def _ordered_locals(mesh):
    """Per-tet local entity vertex orders sorted by global id."""
    def build():
        tets = mesh.tets
        ep = np.broadcast_to(TET_EDGE_LOCAL, (mesh.nt, 6, 2)).copy()
        swap = tets[np.arange(mesh.nt)[:, None], ep[:, :, 0]] > \
            tets[np.arange(mesh.nt)[:, None], ep[:, :, 1]]
        ep[swap] = ep[swap][:, ::-1]
        fp = np.broadcast_to(TET_FACE_LOCAL, (mesh.nt, 4, 3)).copy()
        order = np.argsort(tets[np.arange(mesh.nt)[:, None, None],
                                fp], axis=2)
        fp = np.take_along_axis(fp, order, axis=2)
        return ep, fp

    return _cached(mesh, "ordered_locals", build)


def ned_basis(mesh, bary):
    """NED basis at barycentric points: (nt, nq, 6, 3).

    Entry m is the Whitney 1-form of global edge tet_edges[t, m].
    """
    ep, _ = _ordered_locals(mesh)
    g = mesh.grads
    t_idx = np.arange(mesh.nt)[:, None]
    ga = g[t_idx, ep[:, :, 0]]  # (nt, 6, 3)
    gb = g[t_idx, ep[:, :, 1]]
    la = bary[:, ep[:, :, 0]].transpose(1, 0, 2)  # (nt, nq, 6)
    lb = bary[:, ep[:, :, 1]].transpose(1, 0, 2)
    return la[..., None] * gb[:, None] - lb[..., None] * ga[:, None]


def rt_basis(mesh, bary):
    """RT basis at barycentric points: (nt, nq, 4, 3).

    Entry m is the Whitney 2-form of global face tet_faces[t, m], with
    unit flux through that face along its global orientation.
    """
    _, fp = _ordered_locals(mesh)
    g = mesh.grads
    t_idx = np.arange(mesh.nt)[:, None]
    ga, gb, gc = (g[t_idx, fp[:, :, k]] for k in range(3))  # (nt, 4, 3)
    la, lb, lc = (bary[:, fp[:, :, k]].transpose(1, 0, 2) for k in range(3))
    val = (la[..., None] * np.cross(gb, gc)[:, None]
           + lb[..., None] * np.cross(gc, ga)[:, None]
           + lc[..., None] * np.cross(ga, gb)[:, None])
    return 2.0 * val


def evaluate(u, bary):
    """Evaluate a DofVector at barycentric points of every tet.

    Returns (nt, nq) for scalar spaces and (nt, nq, 3) for vector spaces.
    """
    mesh = u.mesh
    if u.degree == P1:
        return np.einsum("qk,tk->tq", bary, u.values[mesh.tets])
    if u.degree == P0:
        return np.broadcast_to(u.values[:, None],
                               (mesh.nt, bary.shape[0])).copy()
    if u.degree == NED:
        basis = ned_basis(mesh, bary)
        return np.einsum("tqmd,tm->tqd", basis, u.values[mesh.tet_edges])
    basis = rt_basis(mesh, bary)
    return np.einsum("tqmd,tm->tqd", basis, u.values[mesh.tet_faces])


def gradient(u):
    """P1 -> NED."""
    g, _, _ = incidence_matrices(u.mesh)
    return DofVector(u.mesh, NED, g @ u.values)


def curl(u):
    """NED -> RT."""
    _, c, _ = incidence_matrices(u.mesh)
    return DofVector(u.mesh, RT, c @ u.values)


def divergence(u):
    """RT -> P0 cell averages of div u."""
    _, _, d = incidence_matrices(u.mesh)
    return DofVector(u.mesh, P0, (d @ u.values) / u.mesh.volumes)


# -- mass matrices --------------------------------------------------------

def _coeff_values(mesh, coeff, inverse):
    """Coefficient matrices at the degree-2 tet quadrature points."""
    if coeff is None or coeff.is_identity:
        return None
    pts = quad.map_points(quad.TET_POINTS_DEG2, mesh.vertices[mesh.tets])
    nq = quad.TET_POINTS_DEG2.shape[0]
    cells = np.repeat(np.arange(mesh.nt), nq)
    flat = pts.reshape(-1, 3)
    vals = coeff.inverse_at(flat, cells) if inverse else \
        coeff.at(flat, cells)
    return vals.reshape(mesh.nt, nq, 3, 3)


def _coeff_key(mesh, coeff):
    if coeff is None:
        return None
    # Pin the coefficient so its id stays unique for the cache lifetime.
    mesh._cache[("coeffref", id(coeff))] = coeff
    return id(coeff)


def mass_matrix(mesh, degree, coeff=None, inverse=False):
    """L2 mass matrix of one space, optionally weighted by A or A^{-1}."""
    key = ("mass", degree, _coeff_key(mesh, coeff), inverse)

    def build():
        if degree == P0:
            return sparse.diags(mesh.volumes).tocsr()
        if degree == P1:
            if coeff is not None and not coeff.is_identity:
                raise ValueError("scalar space takes no matrix coefficient")
            bary = quad.TET_POINTS_DEG2
            w = quad.TET_WEIGHTS_DEG2
            loc = np.einsum("q,qi,qj->ij", w, bary, bary)
            local = mesh.volumes[:, None, None] * loc
            return _scatter_full(mesh, local, mesh.tets, mesh.nv)
        bary = quad.TET_POINTS_DEG2
        w = quad.TET_WEIGHTS_DEG2
        basis = ned_basis(mesh, bary) if degree == NED else \
            rt_basis(mesh, bary)
        a = _coeff_values(mesh, coeff, inverse)
        if a is None:
            local = np.einsum("q,tqid,tqjd->tij", w, basis, basis)
        else:
            ab = np.einsum("tqde,tqie->tqid", a, basis)
            local = np.einsum("q,tqid,tqjd->tij", w, ab, basis)
        local *= mesh.volumes[:, None, None]
        ent = mesh.tet_edges if degree == NED else mesh.tet_faces
        size = mesh.ne if degree == NED else mesh.nf
        return _scatter_full(mesh, local, ent, size)

    return _cached(mesh, key, build)


def _scatter_full(mesh, local, entity, size):
    nb = local.shape[1]
    rows = np.repeat(entity, nb, axis=1).ravel()
    cols = np.tile(entity, (1, nb)).ravel()
    return sparse.csr_matrix((local.ravel(), (rows, cols)),
                             shape=(size, size))


def mixed_mass(mesh, coeff=None, inverse=False):
    """Pairing Q (ne x nf) with Q[e, f] = integral of (A W_e) . W_f."""
    key = ("mixed", _coeff_key(mesh, coeff), inverse)

    def build():
        bary = quad.TET_POINTS_DEG2
        w = quad.TET_WEIGHTS_DEG2
        nb = ned_basis(mesh, bary)
        rb = rt_basis(mesh, bary)
        a = _coeff_values(mesh, coeff, inverse)
        if a is not None:
            nb = np.einsum("tqde,tqie->tqid", a, nb)
        local = np.einsum("q,tqid,tqjd->tij", w, nb, rb)
        local *= mesh.volumes[:, None, None]
        rows = np.repeat(mesh.tet_edges, 4, axis=1).ravel()
        cols = np.tile(mesh.tet_faces, (1, 6)).ravel()
        return sparse.csr_matrix((local.ravel(), (rows, cols)),
                                 shape=(mesh.ne, mesh.nf))

    return _cached(mesh, key, build)


def p1_stiffness(vertices, tets, coeff=None, inverse=False, volumes=None,
                 grads=None):
    """Stiffness of P1 with coefficient A: K[v,w] = int (A grad l_v).grad l_w.

    Works on a raw (vertices, tets) complex so it can be used on cut-open
    meshes that duplicate vertices.
    """
    vertices = np.asarray(vertices, float)
    tets = np.asarray(tets, int)
    nt = tets.shape[0]
    if grads is None or volumes is None:
        x = vertices[tets]
        mat = np.concatenate([np.ones((nt, 4, 1)), x], axis=2)
        volumes = np.abs(np.linalg.det(mat)) / 6.0
        binv = np.linalg.inv(mat)
        grads = np.transpose(binv[:, 1:4, :], (0, 2, 1))
    if coeff is None or coeff.is_identity:
        local = np.einsum("tid,tjd->tij", grads, grads)
        local *= volumes[:, None, None]
    else:
        bary = quad.TET_POINTS_DEG2
        w = quad.TET_WEIGHTS_DEG2
        pts = quad.map_points(bary, vertices[tets]).reshape(-1, 3)
        cells = np.repeat(np.arange(nt), bary.shape[0])
        a = coeff.inverse_at(pts, cells) if inverse else coeff.at(pts, cells)
        a = a.reshape(nt, bary.shape[0], 3, 3)
        abar = np.einsum("q,tqde->tde", w, a)
        local = np.einsum("tid,tde,tje->tij", grads, abar, grads)
        local *= volumes[:, None, None]
    rows = np.repeat(tets, 4, axis=1).ravel()
    cols = np.tile(tets, (1, 4)).ravel()
    nv = vertices.shape[0]
    return sparse.csr_matrix((local.ravel(), (rows, cols)), shape=(nv, nv))


def stiffness_matrix(mesh, coeff=None, inverse=False):
    key = ("stiff", _coeff_key(mesh, coeff), inverse)
    return _cached(mesh, key, lambda: p1_stiffness(
        mesh.vertices, mesh.tets, coeff, inverse,
        volumes=mesh.volumes, grads=mesh.grads))


# -- interpolation --------------------------------------------------------

def interpolate(mesh, degree, fn):
    """Canonical interpolation of a callable onto one of the four spaces.

    fn maps (m, 3) points to scalars for P1/P0 and to (m, 3) vectors for
    NED/RT.  Entity integrals use degree-3 quadrature.
    """
    if degree == P1:
        return DofVector(mesh, P1, np.asarray(fn(mesh.vertices), float))
    if degree == P0:
        pts = quad.map_points(quad.TET_POINTS_DEG3,
                              mesh.vertices[mesh.tets])
        vals = np.asarray(fn(pts.reshape(-1, 3)), float)
        vals = vals.reshape(mesh.nt, -1)
        return DofVector(mesh, P0, vals @ quad.TET_WEIGHTS_DEG3)
    if degree == NED:
        circ = edge_circulations(mesh, fn, np.arange(mesh.ne))
        return DofVector(mesh, NED, circ)
    flux = face_fluxes(mesh, fn, np.arange(mesh.nf))
    return DofVector(mesh, RT, flux)


def edge_circulations(mesh, fn, edge_ids):
    """Circulations int_e fn . dl along oriented edges (2-pt Gauss)."""
    e = mesh.edges[edge_ids]
    coords = mesh.vertices[e]  # (k, 2, 3)
    pts = quad.map_points(quad.EDGE_POINTS, coords)
    vals = np.asarray(fn(pts.reshape(-1, 3)), float).reshape(
        len(edge_ids), -1, 3)
    vec = coords[:, 1] - coords[:, 0]
    return np.einsum("q,kqd,kd->k", quad.EDGE_WEIGHTS, vals, vec)


def face_fluxes(mesh, fn, face_ids):
    """Fluxes int_f fn . n dA through oriented faces (degree-3 rule)."""
    f = mesh.faces[face_ids]
    coords = mesh.vertices[f]
    pts = quad.map_points(quad.TRI_POINTS, coords)
    vals = np.asarray(fn(pts.reshape(-1, 3)), float).reshape(
        len(face_ids), -1, 3)
    nvec = 0.5 * np.cross(coords[:, 1] - coords[:, 0],
                          coords[:, 2] - coords[:, 0])
    return np.einsum("q,kqd,kd->k", quad.TRI_WEIGHTS, vals, nvec)


def face_averages(mesh, fn, face_ids):
    """Face averages of a scalar callable (degree-3 rule)."""
    coords = mesh.vertices[mesh.faces[face_ids]]
    pts = quad.map_points(quad.TRI_POINTS, coords)
    vals = np.asarray(fn(pts.reshape(-1, 3)), float).reshape(
        len(face_ids), -1)
    return vals @ quad.TRI_WEIGHTS


# -- dof subsets ----------------------------------------------------------

def boundary_entities(mesh):
    """(vertex_mask, edge_mask, face_mask) of entities on the boundary."""
    def build():
        fmask = np.zeros(mesh.nf, dtype=bool)
        fmask[mesh.boundary_faces] = True
        emask = np.zeros(mesh.ne, dtype=bool)
        emask[mesh.face_edges[mesh.boundary_faces].ravel()] = True
        vmask = np.zeros(mesh.nv, dtype=bool)
        vmask[mesh.faces[mesh.boundary_faces].ravel()] = True
        return vmask, emask, fmask

    return _cached(mesh, "boundary_entities", build)


# -- projections between spaces -------------------------------------------

def project_ned_to_rt(mesh, u):
    """Face fluxes of an edge-element field, averaging the two sides."""
    assert u.degree == NED
    bary = quad.TRI_POINTS  # reused as weights over face vertices
    flux = np.zeros(mesh.nf)
    count = np.zeros(mesh.nf)
    # Evaluate the field inside each tet at quadrature points of each of
    # its faces, then take the flux through the oriented face.
    for k in range(4):
        fids = mesh.tet_faces[:, k]
        coords = mesh.vertices[mesh.faces[fids]]
        pts = quad.map_points(quad.TRI_POINTS, coords)  # (nt, nq, 3)
        b = _barycentric_of(mesh, pts)
        basis = ned_basis_points(mesh, b)  # (nt, nq, 6, 3)
        vals = np.einsum("tqmd,tm->tqd", basis, u.values[mesh.tet_edges])
        nvec = 0.5 * np.cross(coords[:, 1] - coords[:, 0],
                              coords[:, 2] - coords[:, 0])
        fl = np.einsum("q,tqd,td->t", quad.TRI_WEIGHTS, vals, nvec)
        np.add.at(flux, fids, fl)
        np.add.at(count, fids, 1.0)
    return DofVector(mesh, RT, flux / count)


def project_rt_to_ned(mesh, u):
    """Edge circulations of a face-element field, averaging incident tets."""
    assert u.degree == RT
    circ = np.zeros(mesh.ne)
    count = np.zeros(mesh.ne)
    for k in range(6):
        eids = mesh.tet_edges[:, k]
        coords = mesh.vertices[mesh.edges[eids]]
        pts = quad.map_points(quad.EDGE_POINTS, coords)
        b = _barycentric_of(mesh, pts)
        basis = rt_basis_points(mesh, b)
        vals = np.einsum("tqmd,tm->tqd", basis, u.values[mesh.tet_faces])
        vec = coords[:, 1] - coords[:, 0]
        cl = np.einsum("q,tqd,td->t", quad.EDGE_WEIGHTS, vals, vec)
        np.add.at(circ, eids, cl)
        np.add.at(count, eids, 1.0)
    return DofVector(mesh, NED, circ / count)


def project_to_p1_vector(mesh, u):
    """Lumped L2 projection of a vector Whitney field into (P1)^3."""
    bary = quad.TET_POINTS_DEG2
    w = quad.TET_WEIGHTS_DEG2
    vals = evaluate(u, bary)  # (nt, nq, 3)
    pair = np.einsum("q,qk,tqd->tkd", w, bary, vals)
    pair *= mesh.volumes[:, None, None]
    lump = np.zeros(mesh.nv)
    np.add.at(lump, mesh.tets.ravel(),
              np.repeat(mesh.volumes / 4.0, 4))
    out = np.zeros((mesh.nv, 3))
    np.add.at(out, mesh.tets.ravel(), pair.reshape(-1, 3))
    return out / lump[:, None]


def _barycentric_of(mesh, pts):
    """Barycentric coordinates of per-tet physical points (nt, nq, 3)."""
    d = pts - mesh.vertices[mesh.tets[:, 0]][:, None]
    # lambda_i(x) = lambda_i(x0) + g_i . (x - x0), with lambda(x0) = e_0.
    b = np.einsum("tid,tqd->tqi", mesh.grads, d)
    b[:, :, 0] += 1.0
    return b


def ned_basis_points(mesh, b):
    """NED basis at per-tet barycentric points (nt, nq, 4) -> (nt,nq,6,3)."""
    ep, _ = _ordered_locals(mesh)
    g = mesh.grads
    t_idx = np.arange(mesh.nt)[:, None]
    ga = g[t_idx, ep[:, :, 0]]
    gb = g[t_idx, ep[:, :, 1]]
    la = np.take_along_axis(b, ep[:, None, :, 0], axis=2)
    lb = np.take_along_axis(b, ep[:, None, :, 1], axis=2)
    return la[..., None] * gb[:, None] - lb[..., None] * ga[:, None]


def rt_basis_points(mesh, b):
    """RT basis at per-tet barycentric points (nt, nq, 4) -> (nt,nq,4,3)."""
    _, fp = _ordered_locals(mesh)
    g = mesh.grads
    t_idx = np.arange(mesh.nt)[:, None]
    ga, gb, gc = (g[t_idx, fp[:, :, k]] for k in range(3))
    la, lb, lc = (np.take_along_axis(b, fp[:, None, :, k], axis=2)
                  for k in range(3))
    val = (la[..., None] * np.cross(gb, gc)[:, None]
           + lb[..., None] * np.cross(gc, ga)[:, None]
           + lc[..., None] * np.cross(ga, gb)[:, None])
    return 2.0 * val


# -- boundary traces and surface forms ------------------------------------

def normal_trace(mesh, u):
    """Outward u.n on each boundary face (constant per face) for RT u."""
    assert u.degree == RT
    bf = mesh.boundary_faces
    t = mesh.face_tets[bf, 0]
    k = np.argmax(mesh.tet_faces[t] == bf[:, None], axis=1)
    sign = mesh.tet_face_signs[t, k]
    return u.values[bf] * sign / mesh.face_areas(bf)


def tangential_trace_average(mesh, u):
    """Per-boundary-face average of the tangential part of a NED field."""
    assert u.degree == NED
    bf = mesh.boundary_faces
    coords = mesh.vertices[mesh.faces[bf]]
    centers = quad.map_points(quad.TRI_POINTS_DEG2, coords)
    vals = np.zeros((len(bf), centers.shape[1], 3))
    t = mesh.face_tets[bf, 0]
    b = _barycentric_of_sub(mesh, t, centers)
    basis = _ned_basis_sub(mesh, t, b)
    vals = np.einsum("tqmd,tm->tqd", basis, u.values[mesh.tet_edges[t]])
    avg = np.einsum("q,tqd->td", quad.TRI_WEIGHTS_DEG2, vals)
    n = _outward_normals(mesh, bf)
    return avg - np.einsum("td,td->t", avg, n)[:, None] * n


def _outward_normals(mesh, bf):
    t = mesh.face_tets[bf, 0]
    k = np.argmax(mesh.tet_faces[t] == bf[:, None], axis=1)
    sign = mesh.tet_face_signs[t, k]
    return mesh.face_normals(bf) * sign[:, None]


def _barycentric_of_sub(mesh, tets_idx, pts):
    d = pts - mesh.vertices[mesh.tets[tets_idx, 0]][:, None]
    b = np.einsum("tid,tqd->tqi", mesh.grads[tets_idx], d)
    b[:, :, 0] += 1.0
    return b


def _ned_basis_sub(mesh, tets_idx, b):
    ep, _ = _ordered_locals(mesh)
    ep = ep[tets_idx]
    g = mesh.grads[tets_idx]
    t_idx = np.arange(len(tets_idx))[:, None]
    ga = g[t_idx, ep[:, :, 0]]
    gb = g[t_idx, ep[:, :, 1]]
    la = np.take_along_axis(b, ep[:, None, :, 0], axis=2)
    lb = np.take_along_axis(b, ep[:, None, :, 1], axis=2)
    return la[..., None] * gb[:, None] - lb[..., None] * ga[:, None]


def rt_tangential_trace_average(mesh, u):
    """Per-boundary-face average tangential part of a face-element field."""
    assert u.degree == RT
    bf = mesh.boundary_faces
    coords = mesh.vertices[mesh.faces[bf]]
    centers = quad.map_points(quad.TRI_POINTS_DEG2, coords)
    t = mesh.face_tets[bf, 0]
    b = _barycentric_of_sub(mesh, t, centers)
    basis = _rt_basis_sub(mesh, t, b)
    vals = np.einsum("tqmd,tm->tqd", basis, u.values[mesh.tet_faces[t]])
    avg = np.einsum("q,tqd->td", quad.TRI_WEIGHTS_DEG2, vals)
    n = _outward_normals(mesh, bf)
    return avg - np.einsum("td,td->t", avg, n)[:, None] * n


def _rt_basis_sub(mesh, tets_idx, b):
    _, fp = _ordered_locals(mesh)
    fp = fp[tets_idx]
    g = mesh.grads[tets_idx]
    t_idx = np.arange(len(tets_idx))[:, None]
    ga, gb, gc = (g[t_idx, fp[:, :, k]] for k in range(3))
    la, lb, lc = (np.take_along_axis(b, fp[:, None, :, k], axis=2)
                  for k in range(3))
    val = (la[..., None] * np.cross(gb, gc)[:, None]
           + lb[..., None] * np.cross(gc, ga)[:, None]
           + lc[..., None] * np.cross(ga, gb)[:, None])
    return 2.0 * val


def surface_vector_average(mesh, edge_circulations):
    """Per-boundary-face average of the surface 1-form with given dofs."""
    bf = mesh.boundary_faces
    g = surface_grads(mesh, bf)
    pairs = np.array([[0, 1], [1, 2], [0, 2]])
    bary = quad.TRI_POINTS_DEG2
    w = quad.TRI_WEIGHTS_DEG2
    la = bary[:, pairs[:, 0]]
    lb = bary[:, pairs[:, 1]]
    ga = g[:, pairs[:, 0]]
    gb = g[:, pairs[:, 1]]
    basis = la[None, :, :, None] * gb[:, None] \
        - lb[None, :, :, None] * ga[:, None]  # (k, nq, 3, 3)
    dofs = edge_circulations[mesh.face_edges[bf]]
    return np.einsum("q,kqid,ki->kd", w, basis, dofs)


def surface_grads(mesh, face_ids):
    """In-plane barycentric gradients of faces: (k, 3, 3)."""
    coords = mesh.vertices[mesh.faces[face_ids]]
    e1 = coords[:, 1] - coords[:, 0]
    e2 = coords[:, 2] - coords[:, 0]
    n = np.cross(e1, e2)
    k = len(face_ids)
    mat = np.stack([e1, e2, n], axis=1)  # rows
    rhs = np.broadcast_to(np.array([[1.0, 0.0], [0.0, 1.0], [0.0, 0.0]]),
                          (k, 3, 2))
    g = np.linalg.solve(mat, rhs)
    g1, g2 = g[:, :, 0], g[:, :, 1]
    g0 = -g1 - g2
    return np.stack([g0, g1, g2], axis=1)


def surface_edge_mass(mesh):
    """Mass matrix of surface Whitney 1-forms on the boundary (ne x ne).

    Rows and columns of interior edges are zero; the nonzero block couples
    boundary edges through the boundary triangulation.
    """
    def build():
        bf = mesh.boundary_faces
        g = surface_grads(mesh, bf)  # (k, 3, 3)
        tris = mesh.faces[bf]
        areas = mesh.face_areas(bf)
        # Edge order (ab, bc, ac) matching face_edges; a < b < c implies
        # basis W_ab = l_a g_b - l_b g_a etc. with in-plane gradients.
        pairs = np.array([[0, 1], [1, 2], [0, 2]])
        bary = quad.TRI_POINTS_DEG2
        w = quad.TRI_WEIGHTS_DEG2
        la = bary[:, pairs[:, 0]]  # (nq, 3)
        lb = bary[:, pairs[:, 1]]
        ga = g[:, pairs[:, 0]]  # (k, 3edges, 3)
        gb = g[:, pairs[:, 1]]
        basis = la[None, :, :, None] * gb[:, None] \
            - lb[None, :, :, None] * ga[:, None]  # (k, nq, 3, 3)
        local = np.einsum("q,kqid,kqjd->kij", w, basis, basis)
        local *= areas[:, None, None]
        eids = mesh.face_edges[bf]
        rows = np.repeat(eids, 3, axis=1).ravel()
        cols = np.tile(eids, (1, 3)).ravel()
        return sparse.csr_matrix((local.ravel(), (rows, cols)),
                                 shape=(mesh.ne, mesh.ne))

    return _cached(mesh, "surface_edge_mass", build)


def surface_mixed_grad(mesh):
    """Pairing S (ne x nv): S[e, v] = int_bnd W_e^s . grad_s l_v."""
    def build():
        bf = mesh.boundary_faces
        g = surface_grads(mesh, bf)
        areas = mesh.face_areas(bf)
        pairs = np.array([[0, 1], [1, 2], [0, 2]])
        bary = quad.TRI_POINTS_DEG2
        w = quad.TRI_WEIGHTS_DEG2
        la = bary[:, pairs[:, 0]]
        lb = bary[:, pairs[:, 1]]
        ga = g[:, pairs[:, 0]]
        gb = g[:, pairs[:, 1]]
        basis = la[None, :, :, None] * gb[:, None] \
            - lb[None, :, :, None] * ga[:, None]
        local = np.einsum("q,kqid,kjd->kij", w, basis, g)
        local *= areas[:, None, None]
        eids = mesh.face_edges[bf]
        vids = mesh.faces[bf]
        rows = np.repeat(eids, 3, axis=1).ravel()
        cols = np.tile(vids, (1, 3)).ravel()
        return sparse.csr_matrix((local.ravel(), (rows, cols)),
                                 shape=(mesh.ne, mesh.nv))

    return _cached(mesh, "surface_mixed_grad", build)


def boundary_face_data(mesh, fn):
    """Per-boundary-face averages of fn(points, outward_normals)."""
    bf = mesh.boundary_faces
    coords = mesh.vertices[mesh.faces[bf]]
    pts = quad.map_points(quad.TRI_POINTS, coords)
    n = _outward_normals(mesh, bf)
    nq = pts.shape[1]
    vals = np.asarray(fn(pts.reshape(-1, 3),
                         np.repeat(n, nq, axis=0)), float)
    return vals.reshape(len(bf), nq) @ quad.TRI_WEIGHTS


def boundary_edge_data(mesh, fn):
    """Circulations of a surface vector field along boundary edges.

    fn(points, outward_normals) gives the field; at an edge shared by two
    boundary faces the two face normals both contribute, averaged.
    Returns values for all edges, zero on interior edges.
    """
    circ = np.zeros(mesh.ne)
    count = np.zeros(mesh.ne)
    bf = mesh.boundary_faces
    n = _outward_normals(mesh, bf)
    for k in range(3):
        eids = mesh.face_edges[bf, k]
        coords = mesh.vertices[mesh.edges[eids]]
        pts = quad.map_points(quad.EDGE_POINTS, coords)
        nq = pts.shape[1]
        vals = np.asarray(fn(pts.reshape(-1, 3),
                             np.repeat(n, nq, axis=0)), float)
        vals = vals.reshape(len(bf), nq, 3)
        vec = coords[:, 1] - coords[:, 0]
        cl = np.einsum("q,kqd,kd->k", quad.EDGE_WEIGHTS, vals, vec)
        np.add.at(circ, eids, cl)
        np.add.at(count, eids, 1.0)
    mask = count > 0
    circ[mask] /= count[mask]
    return circ


def l2_norm(mesh, u, coeff=None):
    m = mass_matrix(mesh, u.degree, coeff)
    return float(np.sqrt(max(u.values @ (m @ u.values), 0.0)))
