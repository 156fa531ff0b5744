"""Discrete harmonic fields of multiply connected domains.

Two finite dimensional spaces are constructed:

* the "magnetic" space of face-element fields u with curl(sigma u) = 0,
  div u = 0 and u.n = 0 on the boundary; its dimension equals the number
  of cuts of the domain.  Members are built from scalar potentials that
  jump by one across a cut, realised on a cut-open copy of the complex,
  followed by a constrained energy minimisation that makes the defining
  relations hold at solver accuracy.

* the "electric" space of edge-element fields h = grad q with q piecewise
  linear, q = 0 on the outer boundary and constant on each inner boundary
  component; its dimension is the number of inner components.

Both bases are normalised by their flux pairings: cut fluxes for the
magnetic space, inner-boundary fluxes of eps grad q for the electric one.
"""

from dataclasses import dataclass, field

import numpy as np
from scipy import sparse

from . import whitney as wh
from .linsolve import SolverConfig, SolveStats, cg, minres_saddle
from .whitney import DofVector


@dataclass
class JumpSpace:
    """Cut-open copy of the complex with one jump unknown per cut.

    open_tets re-indexes each tet into open vertex ids; ids below mesh.nv
    are the original vertices, the rest are positive-side duplicates.
    edge_reps[e] holds open endpoint ids (a, b) of mesh edge e taken from
    one tet containing it; the choice is side-independent.
    """

    mesh: object
    open_tets: np.ndarray
    n_open: int
    orig_vertex: np.ndarray
    duplicate_cols: list  # per cut: open ids whose potential carries the jump
    edge_reps: np.ndarray


def _vertex_star_components(mesh, v, cut_face_set):
    """Split the tet star of v by the cut faces; returns list of tet sets."""
    tets = mesh._cache["vertex_tets"][v]
    tset = set(int(t) for t in tets)
    adj = {t: [] for t in tset}
    for t in tset:
        for f in mesh.tet_faces[t]:
            f = int(f)
            if f in cut_face_set or v not in mesh.faces[f]:
                continue
            t0, t1 = mesh.face_tets[f]
            other = int(t1 if t0 == t else t0)
            if other in tset:
                adj[t].append(other)
    comps = []
    seen = set()
    for t in tset:
        if t in seen:
            continue
        comp = set()
        stack = [t]
        while stack:
            s = stack.pop()
            if s in comp:
                continue
            comp.add(s)
            stack.extend(u for u in adj[s] if u not in comp)
        seen |= comp
        comps.append(comp)
    return comps


def jump_space(mesh):
    """Build (and cache) the cut-open complex of the mesh."""
    if "jump_space" in mesh._cache:
        return mesh._cache["jump_space"]
    if "vertex_tets" not in mesh._cache:
        vt = [[] for _ in range(mesh.nv)]
        for t, tet in enumerate(mesh.tets):
            for v in tet:
                vt[v].append(t)
        mesh._cache["vertex_tets"] = vt

    open_tets = mesh.tets.copy()
    n_open = mesh.nv
    orig = list(range(mesh.nv))
    duplicate_cols = []
    claimed = {}
    for cut in mesh.cuts:
        cut_face_set = set(int(f) for f in cut.face_ids)
        pos_tets = mesh.cut_positive_tets(cut)
        pos_of_face = dict(zip(cut.face_ids.tolist(), pos_tets.tolist()))
        cut_vertices = np.unique(mesh.faces[cut.face_ids])
        cols = []
        for v in cut_vertices:
            v = int(v)
            if v in claimed:
                raise ValueError("cuts sharing vertices are not supported")
            claimed[v] = cut.name
            comps = _vertex_star_components(mesh, v, cut_face_set)
            if len(comps) != 2:
                raise ValueError(
                    f"cut {cut.name!r} does not split the star of vertex "
                    f"{v} in two (got {len(comps)} parts)")
            # The positive component holds the tet a cut normal enters.
            fpick = next(int(f) for f in cut.face_ids
                         if v in mesh.faces[f])
            positive = comps[0] if pos_of_face[fpick] in comps[0] \
                else comps[1]
            new_id = n_open
            n_open += 1
            orig.append(v)
            cols.append(new_id)
            for t in positive:
                open_tets[t][mesh.tets[t] == v] = new_id
        duplicate_cols.append(np.array(cols, dtype=int))

    # Representative open endpoints of every mesh edge.
    edge_reps = np.empty((mesh.ne, 2), dtype=int)
    flat_e = mesh.tet_edges.ravel()
    order = np.argsort(flat_e, kind="stable")
    first = np.searchsorted(flat_e[order], np.arange(mesh.ne))
    slot = order[first]
    t_of = slot // 6
    m_of = slot % 6
    from .mesh import TET_EDGE_LOCAL
    la = TET_EDGE_LOCAL[m_of]
    pair_orig = mesh.tets[t_of[:, None], la]
    pair_open = open_tets[t_of[:, None], la]
    flip = pair_orig[:, 0] > pair_orig[:, 1]
    pair_open[flip] = pair_open[flip][:, ::-1]
    edge_reps[:] = pair_open

    js = JumpSpace(mesh, open_tets, n_open, np.array(orig), duplicate_cols,
                   edge_reps)
    _check_cut_open_topology(js)
    mesh._cache["jump_space"] = js
    return js


def _check_cut_open_topology(js):
    """The cut-open complex must be simply connected."""
    mesh = js.mesh
    if not mesh.cuts:
        return
    tets = js.open_tets
    nv = js.n_open
    pairs = np.sort(tets[:, [[0, 1], [0, 2], [0, 3], [1, 2], [1, 3],
                             [2, 3]]], axis=2)
    ne = np.unique(pairs[..., 0].astype(np.int64) * nv
                   + pairs[..., 1]).size
    tris = np.sort(tets[:, [[1, 2, 3], [0, 2, 3], [0, 1, 3], [0, 1, 2]]],
                   axis=2)
    fkeys = (tris[..., 0].astype(np.int64) * nv + tris[..., 1]) * nv \
        + tris[..., 2]
    ufaces, counts = np.unique(fkeys.ravel(), return_counts=True)
    nf = ufaces.size
    chi = nv - ne + nf - tets.shape[0]
    # Boundary components of the opened complex.
    bkeys = ufaces[counts == 1]
    bverts = np.stack([bkeys // (nv * nv), (bkeys // nv) % nv,
                       bkeys % nv], axis=1)
    bedges = np.sort(np.concatenate([bverts[:, [0, 1]], bverts[:, [1, 2]],
                                     bverts[:, [0, 2]]]), axis=1)
    ekeys = bedges[:, 0].astype(np.int64) * nv + bedges[:, 1]
    _, einv = np.unique(ekeys, return_inverse=True)
    nbf = bverts.shape[0]
    # bedges stacks the three edge families, so face i owns rows
    # i, i + nbf and i + 2 nbf of einv.
    inc = sparse.csr_matrix(
        (np.ones(3 * nbf), (np.tile(np.arange(nbf), 3), einv)))
    from scipy.sparse import csgraph
    ncomp, _ = csgraph.connected_components(inc @ inc.T, directed=False)
    b1 = 1 + (ncomp - 1) - chi
    if b1 != 0:
        raise ValueError(
            f"cut-open complex is not simply connected (b1 = {b1}); "
            f"the declared cuts do not cut all loops")


def _jump_matrix(js):
    """Sparse map from (vertex values, jumps) to open vertex values."""
    mesh = js.mesh
    n2 = len(js.duplicate_cols)
    rows = list(range(js.n_open))
    cols = list(js.orig_vertex)
    data = [1.0] * js.n_open
    for j, dup in enumerate(js.duplicate_cols):
        rows.extend(int(d) for d in dup)
        cols.extend([mesh.nv + j] * len(dup))
        data.extend([1.0] * len(dup))
    return sparse.csr_matrix((data, (rows, cols)),
                             shape=(js.n_open, mesh.nv + n2))


def jump_potentials(mesh, coeff=None, inverse=True, config=None):
    """Scalar potentials with unit jump across each cut.

    Minimises the coefficient-weighted Dirichlet energy on the cut-open
    complex with the jump of potential j fixed to delta_jk across cut k.
    Returns (thetas, js, stats): each theta is an open-vertex value array.
    """
    config = config or SolverConfig()
    js = jump_space(mesh)
    n2 = len(mesh.cuts)
    if n2 == 0:
        return [], js, SolveStats(0, 0.0, True, 0.0)
    k2 = wh.p1_stiffness(mesh.vertices[js.orig_vertex], js.open_tets,
                         coeff, inverse=inverse)
    e = _jump_matrix(js)
    a = (e.T @ k2 @ e).tocsr()
    app = a[:mesh.nv, :mesh.nv]
    apc = a[:mesh.nv, mesh.nv:]
    ones = np.ones(mesh.nv)
    stats = SolveStats(0, 0.0, True, 0.0)
    thetas = []
    for j in range(n2):
        rhs = -apc[:, j].toarray().ravel()
        p, st = cg(app, rhs, nullspace=[ones], config=config)
        stats.merge(st)
        z = np.concatenate([p, np.eye(n2)[j]])
        thetas.append(e @ z)
    return thetas, js, stats


def curl_free_representatives(mesh, thetas, js):
    """Edge fields with zero curl and unit circulation around each cut.

    The sign makes the circulation +1 along loops crossing the cut in the
    direction of its transverse normal.
    """
    reps = []
    for theta in thetas:
        vals = theta[js.edge_reps[:, 0]] - theta[js.edge_reps[:, 1]]
        reps.append(DofVector(mesh, wh.NED, vals))
    return reps


def cut_flux(mesh, u, cut):
    """Flux of a face-element field through a cut surface."""
    assert u.degree == wh.RT
    return float(np.dot(cut.signs, u.values[cut.face_ids]))


def boundary_flux(mesh, u, i):
    """Outward flux of a face-element field through boundary component i."""
    assert u.degree == wh.RT
    bf = mesh.boundary_component_faces(i)
    t = mesh.face_tets[bf, 0]
    k = np.argmax(mesh.tet_faces[t] == bf[:, None], axis=1)
    sign = mesh.tet_face_signs[t, k]
    return float(np.dot(sign, u.values[bf]))


@dataclass
class HarmonicBasis:
    kind: str  # "magnetic" or "electric"
    mesh: object
    coeff: object
    fields: list  # DofVectors: RT for magnetic, NED for electric
    gram: np.ndarray  # flux pairings, approximately the identity
    potentials: list
    curl_free: list = field(default_factory=list)  # NED reps (magnetic)
    trace_constants: np.ndarray | None = None  # electric: q_i on Gamma_k
    certificates: dict = field(default_factory=dict)
    stats: SolveStats = field(default_factory=SolveStats)

    @property
    def dimension(self):
        return len(self.fields)


def magnetic_basis(mesh, sigma=None, config=None):
    """Basis of the sigma-weighted magnetic harmonic space.

    Member j has unit flux through cut j, zero through the others, zero
    normal trace, exactly divergence-free fluxes and curl(sigma u) = 0
    against all interior edge tests at solver accuracy.
    """
    config = config or SolverConfig()
    n2 = len(mesh.cuts)
    stats = SolveStats(0, 0.0, True, 0.0)
    if n2 == 0:
        return HarmonicBasis("magnetic", mesh, sigma, [],
                             np.zeros((0, 0)), [], stats=stats)
    thetas, js, st = jump_potentials(mesh, sigma, inverse=True,
                                     config=config)
    stats.merge(st)
    reps = curl_free_representatives(mesh, thetas, js)

    _, _, fmask = wh.boundary_entities(mesh)
    interior = np.nonzero(~fmask)[0]
    msig = wh.mass_matrix(mesh, wh.RT, sigma)
    a = msig[interior][:, interior].tocsr()
    _, _, d = wh.incidence_matrices(mesh)
    d_int = d[:, interior].astype(float).tocsr()
    cut_rows = sparse.lil_matrix((n2, len(interior)))
    pos_of_face = -np.ones(mesh.nf, dtype=int)
    pos_of_face[interior] = np.arange(len(interior))
    for j, cut in enumerate(mesh.cuts):
        cut_rows[j, pos_of_face[cut.face_ids]] = cut.signs
    b = sparse.vstack([d_int, cut_rows.tocsr()]).tocsr()
    null = [np.concatenate([np.zeros(len(interior)), np.ones(mesh.nt),
                            np.zeros(n2)])]

    fields = []
    for j in range(n2):
        guess = _flux_guess(mesh, js, thetas[j], sigma)[interior]
        g = np.concatenate([np.zeros(mesh.nt), np.eye(n2)[j]])
        x, _, st = minres_saddle(a, b, np.zeros(len(interior)), g,
                                 config=config, x0=guess, nullspace=null)
        stats.merge(st)
        vals = np.zeros(mesh.nf)
        vals[interior] = x
        fields.append(DofVector(mesh, wh.RT, vals))

    gram = np.array([[cut_flux(mesh, u, cut) for cut in mesh.cuts]
                     for u in fields])
    _, c, _ = wh.incidence_matrices(mesh)
    _, emask, _ = wh.boundary_entities(mesh)
    certs = {}
    curl_res = 0.0
    for u in fields:
        r = (c.T @ (msig @ u.values))[~emask]
        curl_res = max(curl_res, float(np.linalg.norm(r))
                       / max(float(np.linalg.norm(msig @ u.values)), 1e-300))
    certs["weak_curl"] = curl_res
    certs["div"] = max(float(np.abs(d @ u.values).max()) for u in fields)
    certs["gram_offset"] = float(np.abs(gram - np.eye(n2)).max())
    certs["curl_free_rep"] = max(
        float(np.abs(c @ r.values).max()) for r in reps)
    return HarmonicBasis("magnetic", mesh, sigma, fields, gram, thetas,
                         curl_free=reps, certificates=certs, stats=stats)


def _flux_guess(mesh, js, theta, sigma):
    """Face fluxes of sigma^{-1} grad theta, averaged across cut sides."""
    grad_t = np.einsum("tid,ti->td", mesh.grads,
                       theta[js.open_tets])  # constant per tet
    if sigma is not None and not sigma.is_identity:
        centers = mesh.vertices[mesh.tets].mean(axis=1)
        sig = sigma.inverse_at(centers, np.arange(mesh.nt))
        grad_t = np.einsum("tde,te->td", sig, grad_t)
    flux = np.zeros(mesh.nf)
    count = np.zeros(mesh.nf)
    areas = mesh.face_areas()
    normals = mesh.face_normals()
    for k in range(4):
        fids = mesh.tet_faces[:, k]
        fl = np.einsum("td,td->t", grad_t, normals[fids]) * areas[fids]
        np.add.at(flux, fids, fl)
        np.add.at(count, fids, 1.0)
    return flux / count


def electric_basis(mesh, eps=None, config=None):
    """Basis of the eps-weighted electric harmonic space.

    Member i is grad q_i with q_i piecewise linear, zero on the outer
    boundary and constant on each inner component, whose eps-weighted flux
    through inner component k is delta_ik.
    """
    config = config or SolverConfig()
    n1 = mesh.n_boundary_components - 1
    stats = SolveStats(0, 0.0, True, 0.0)
    if n1 == 0:
        return HarmonicBasis("electric", mesh, eps, [], np.zeros((0, 0)),
                             [], stats=stats)
    k = wh.stiffness_matrix(mesh, eps)
    comp_of_vertex = -np.ones(mesh.nv, dtype=int)
    for i in range(mesh.n_boundary_components):
        vs = np.unique(mesh.faces[mesh.boundary_component_faces(i)])
        comp_of_vertex[vs] = i
    free = np.nonzero(comp_of_vertex < 0)[0]
    nfree = len(free)
    rows = list(range(nfree))
    cols = list(free)
    data = [1.0] * nfree
    # One shared unknown per inner component.
    extra_rows = []
    extra_cols = []
    for i in range(1, mesh.n_boundary_components):
        vs = np.nonzero(comp_of_vertex == i)[0]
        extra_rows.extend(int(v) for v in vs)
        extra_cols.extend([nfree + i - 1] * len(vs))
    e = sparse.csr_matrix(
        (data + [1.0] * len(extra_rows),
         (cols + extra_rows, rows + list(extra_cols))),
        shape=(mesh.nv, nfree + n1))
    a = (e.T @ k @ e).tocsr()
    fields, potentials = [], []
    xs = []
    for i in range(n1):
        rhs = np.zeros(nfree + n1)
        rhs[nfree + i] = 1.0
        x, st = cg(a, rhs, config=config)
        stats.merge(st)
        xs.append(x)
        q = DofVector(mesh, wh.P1, e @ x)
        potentials.append(q)
        fields.append(wh.gradient(q))
    # Flux pairing through inner components via the energy identity:
    # <eps grad q_i . n, 1>_{Gamma_k} equals the jump unknown k of A x_i.
    gram = np.array([[(a @ xs[i])[nfree + kk] for kk in range(n1)]
                     for i in range(n1)])
    trace_constants = np.array([x[nfree:] for x in xs])
    certs = {}
    _, c, _ = wh.incidence_matrices(mesh)
    certs["curl"] = max(float(np.abs(c @ u.values).max()) for u in fields) \
        if fields else 0.0
    certs["gram_offset"] = float(np.abs(gram - np.eye(n1)).max())
    # The outer flux <eps grad q_i . n, 1>_{Gamma_0} closes the balance:
    # it must equal minus the sum of the inner fluxes.
    w0 = np.where(comp_of_vertex == 0, 1.0, 0.0)
    outer = np.array([w0 @ (k @ q.values) for q in potentials])
    certs["outer_flux_closure"] = float(
        np.abs(outer + gram.sum(axis=1)).max())
    return HarmonicBasis("electric", mesh, eps, fields, gram, potentials,
                         trace_constants=trace_constants,
                         certificates=certs, stats=stats)
