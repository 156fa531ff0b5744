"""Tetrahedral meshes with oriented entity tables.

Edges and faces carry a global orientation fixed by ascending vertex id:
an edge (a, b) with a < b points from a to b, a face (a, b, c) with
a < b < c is oriented by the cyclic order of its vertices, so its normal
is (x_b - x_a) x (x_c - x_a).  Tetrahedra are stored with positive signed
volume.  These conventions make the incidence matrices of the complex
integer-valued, see whitney.incidence_matrices.
"""

from dataclasses import dataclass, field

import numpy as np
from scipy import sparse
from scipy.sparse import csgraph

# Local vertex pairs of the six edges of a tetrahedron.
TET_EDGE_LOCAL = np.array([[0, 1], [0, 2], [0, 3], [1, 2], [1, 3], [2, 3]])
# Local vertex triples of the four faces (face k is opposite vertex k).
TET_FACE_LOCAL = np.array([[1, 2, 3], [0, 2, 3], [0, 1, 3], [0, 1, 2]])


@dataclass
class CutSurface:
    """A set of interior mesh faces forming an oriented cutting surface.

    signs[i] is +1 when the global orientation of face face_ids[i] agrees
    with the transverse normal of the cut, -1 otherwise.
    """

    name: str
    face_ids: np.ndarray
    signs: np.ndarray

    def __post_init__(self):
        self.face_ids = np.asarray(self.face_ids, dtype=int)
        self.signs = np.asarray(self.signs, dtype=int)
        if self.face_ids.shape != self.signs.shape:
            raise ValueError("cut face ids and signs must have equal length")


@dataclass
class MeshQuality:
    h_max: float
    h_min: float
    min_dihedral: float
    min_volume: float
    max_aspect: float


class Mesh:
    """Conforming tetrahedral mesh of a bounded domain in R^3."""

    def __init__(self, vertices, tets, boundary_ids=None, cuts=None,
                 check=True):
        self.vertices = np.ascontiguousarray(vertices, dtype=float)
        tets = np.asarray(tets, dtype=int)
        if self.vertices.ndim != 2 or self.vertices.shape[1] != 3:
            raise ValueError("vertices must be (nv, 3)")
        if tets.ndim != 2 or tets.shape[1] != 4:
            raise ValueError("tets must be (nt, 4)")
        self.tets = self._orient_tets(np.sort(tets, axis=1))
        self._build_entities()
        self._build_geometry()
        self._build_boundary(boundary_ids)
        self.cuts = list(cuts) if cuts else []
        self._cache = {}
        if check:
            self.validate()

    # -- construction -----------------------------------------------------

    def _orient_tets(self, tets):
        x = self.vertices[tets]
        det = np.linalg.det(x[:, 1:] - x[:, :1])
        if np.any(det == 0.0):
            raise ValueError("degenerate tetrahedron (zero volume)")
        flip = det < 0.0
        tets = tets.copy()
        tets[flip, 2], tets[flip, 3] = tets[flip, 3].copy(), tets[flip, 2].copy()
        return tets

    def _build_entities(self):
        nv = self.vertices.shape[0]
        pairs = np.sort(self.tets[:, TET_EDGE_LOCAL], axis=2)
        keys = pairs[..., 0].astype(np.int64) * nv + pairs[..., 1]
        self.edges, inv = np.unique(keys.ravel(), return_inverse=True)
        self.tet_edges = inv.reshape(-1, 6)
        self.edges = np.column_stack([self.edges // nv, self.edges % nv])

        tris = np.sort(self.tets[:, TET_FACE_LOCAL], axis=2)
        fkeys = (tris[..., 0].astype(np.int64) * nv + tris[..., 1]) * nv \
            + tris[..., 2]
        ukeys, finv, counts = np.unique(
            fkeys.ravel(), return_inverse=True, return_counts=True)
        self.tet_faces = finv.reshape(-1, 4)
        self.faces = np.column_stack(
            [ukeys // (nv * nv), (ukeys // nv) % nv, ukeys % nv])
        self._face_counts = counts

        # Adjacent tets of every face, -1 where absent (boundary faces).
        nf = self.faces.shape[0]
        self.face_tets = np.full((nf, 2), -1, dtype=int)
        order = np.argsort(self.tet_faces.ravel(), kind="stable")
        flat_tet = np.repeat(np.arange(self.nt), 4)[order]
        flat_face = self.tet_faces.ravel()[order]
        first = np.searchsorted(flat_face, np.arange(nf), side="left")
        last = np.searchsorted(flat_face, np.arange(nf), side="right")
        self.face_tets[:, 0] = flat_tet[first]
        two = (last - first) == 2
        self.face_tets[two, 1] = flat_tet[first[two] + 1]

        # Edge ids of every face in the order (ab, bc, ac), a < b < c.
        self.face_edges = np.column_stack([
            self.edge_id(self.faces[:, 0], self.faces[:, 1]),
            self.edge_id(self.faces[:, 1], self.faces[:, 2]),
            self.edge_id(self.faces[:, 0], self.faces[:, 2]),
        ])

    def _build_geometry(self):
        x = self.vertices[self.tets]
        mat = np.concatenate([np.ones((self.nt, 4, 1)), x], axis=2)
        self.volumes = np.linalg.det(mat) / 6.0
        binv = np.linalg.inv(mat)
        # Gradient of barycentric coordinate i of each tet.
        self.grads = np.transpose(binv[:, 1:4, :], (0, 2, 1))

        # Sign of each (tet, face) pair: +1 when the globally oriented face
        # normal points out of the tet.
        v = self.vertices
        f = self.tet_face_verts  # (nt, 4, 3) ascending vertex ids
        normal = np.cross(v[f[:, :, 1]] - v[f[:, :, 0]],
                          v[f[:, :, 2]] - v[f[:, :, 0]])
        opp = v[self.tets]  # vertex k is opposite face k
        inward = np.einsum("tfd,tfd->tf", normal, opp - v[f[:, :, 0]])
        self.tet_face_signs = np.where(inward < 0.0, 1, -1)

    def _build_boundary(self, boundary_ids):
        self.boundary_faces = np.nonzero(self._face_counts == 1)[0]
        nbf = self.boundary_faces.shape[0]
        if nbf == 0:
            raise ValueError("mesh has no boundary")
        inc = sparse.csr_matrix(
            (np.ones(3 * nbf),
             (np.repeat(np.arange(nbf), 3),
              self.face_edges[self.boundary_faces].ravel())),
            shape=(nbf, self.ne))
        ncomp, labels = csgraph.connected_components(inc @ inc.T,
                                                     directed=False)
        if boundary_ids is None:
            # Label the outer component 0, the rest by increasing extent.
            extent = np.zeros(ncomp)
            for c in range(ncomp):
                vs = self.faces[self.boundary_faces[labels == c]].ravel()
                extent[c] = np.ptp(self.vertices[vs], axis=0).max()
            order = np.argsort(-extent, kind="stable")
            relabel = np.empty(ncomp, dtype=int)
            relabel[order] = np.arange(ncomp)
            self.boundary_ids = np.full(self.nf, -1, dtype=int)
            self.boundary_ids[self.boundary_faces] = relabel[labels]
        else:
            boundary_ids = np.asarray(boundary_ids, dtype=int)
            if boundary_ids.shape != (self.nf,):
                raise ValueError("boundary_ids must have one entry per face")
            got = np.sort(np.nonzero(boundary_ids >= 0)[0])
            if not np.array_equal(got, np.sort(self.boundary_faces)):
                raise ValueError("boundary_ids must mark exactly the "
                                 "boundary faces")
            self.boundary_ids = boundary_ids
        self.n_boundary_components = int(self.boundary_ids.max()) + 1

    # -- basic queries ----------------------------------------------------

    @property
    def nv(self):
        return self.vertices.shape[0]

    @property
    def ne(self):
        return self.edges.shape[0]

    @property
    def nf(self):
        return self.faces.shape[0]

    @property
    def nt(self):
        return self.tets.shape[0]

    @property
    def tet_edge_verts(self):
        return np.sort(self.tets[:, TET_EDGE_LOCAL], axis=2)

    @property
    def tet_face_verts(self):
        return np.sort(self.tets[:, TET_FACE_LOCAL], axis=2)

    def edge_id(self, a, b):
        """Edge index for vertex pairs; pairs must exist in the mesh."""
        lo, hi = np.minimum(a, b), np.maximum(a, b)
        key = lo.astype(np.int64) * self.nv + hi
        ekeys = self.edges[:, 0].astype(np.int64) * self.nv + self.edges[:, 1]
        idx = np.searchsorted(ekeys, key)
        if np.any(idx >= self.ne) or np.any(ekeys[idx] != key):
            raise KeyError("vertex pair is not a mesh edge")
        return idx

    def face_id(self, tri):
        """Face index for vertex triples (any order); must exist."""
        tri = np.sort(np.asarray(tri, dtype=int), axis=-1).reshape(-1, 3)
        nv = self.nv
        key = (tri[:, 0].astype(np.int64) * nv + tri[:, 1]) * nv + tri[:, 2]
        fkeys = (self.faces[:, 0].astype(np.int64) * nv
                 + self.faces[:, 1]) * nv + self.faces[:, 2]
        idx = np.searchsorted(fkeys, key)
        if np.any(idx >= self.nf) or np.any(fkeys[idx] != key):
            raise KeyError("vertex triple is not a mesh face")
        return idx

    def boundary_component_faces(self, i):
        return np.nonzero(self.boundary_ids == i)[0]

    def face_areas(self, face_ids=None):
        f = self.faces if face_ids is None else self.faces[face_ids]
        v = self.vertices
        n = np.cross(v[f[:, 1]] - v[f[:, 0]], v[f[:, 2]] - v[f[:, 0]])
        return 0.5 * np.linalg.norm(n, axis=1)

    def face_normals(self, face_ids=None):
        """Unit normals along the global face orientation."""
        f = self.faces if face_ids is None else self.faces[face_ids]
        v = self.vertices
        n = np.cross(v[f[:, 1]] - v[f[:, 0]], v[f[:, 2]] - v[f[:, 0]])
        return n / np.linalg.norm(n, axis=1)[:, None]

    def edge_vectors(self, edge_ids=None):
        e = self.edges if edge_ids is None else self.edges[edge_ids]
        return self.vertices[e[:, 1]] - self.vertices[e[:, 0]]

    @property
    def h(self):
        return float(np.linalg.norm(self.edge_vectors(), axis=1).max())

    @property
    def euler_characteristic(self):
        return self.nv - self.ne + self.nf - self.nt

    def betti(self):
        """First and second Betti numbers of the domain.

        b2 counts interior cavities (one per inner boundary component) and
        b1 follows from the Euler characteristic of the complex.
        """
        b2 = self.n_boundary_components - 1
        b1 = 1 + b2 - self.euler_characteristic
        return {"b0": 1, "b1": b1, "b2": b2}

    def quality(self):
        lengths = np.linalg.norm(self.edge_vectors(), axis=1)
        v = self.vertices
        f = self.tet_face_verts
        nrm = np.cross(v[f[:, :, 1]] - v[f[:, :, 0]],
                       v[f[:, :, 2]] - v[f[:, :, 0]])
        areas = 0.5 * np.linalg.norm(nrm, axis=2)
        out = nrm * self.tet_face_signs[:, :, None]
        out = out / np.linalg.norm(out, axis=2)[:, :, None]
        dihedrals = []
        for i in range(4):
            for j in range(i + 1, 4):
                c = np.einsum("td,td->t", out[:, i], out[:, j])
                dihedrals.append(np.arccos(np.clip(-c, -1.0, 1.0)))
        inradius = 3.0 * self.volumes / areas.sum(axis=1)
        tet_h = lengths[self.tet_edges].max(axis=1) \
            if self.nt else np.zeros(0)
        return MeshQuality(
            h_max=float(lengths.max()),
            h_min=float(lengths.min()),
            min_dihedral=float(np.min(dihedrals)),
            min_volume=float(self.volumes.min()),
            max_aspect=float((tet_h / inradius).max()),
        )

    # -- cut surfaces -----------------------------------------------------

    def add_cut(self, name, face_ids, reference_direction=None):
        """Register a cut surface, orienting its faces consistently.

        reference_direction: optional vector; the transverse normal of the
        cut is flipped, if needed, so the first face's normal has positive
        inner product with it.
        """
        face_ids = np.asarray(face_ids, dtype=int)
        if np.any(self.face_tets[face_ids, 1] < 0):
            raise ValueError("cut faces must be interior faces")
        signs = self.orient_face_patch(face_ids)
        if reference_direction is not None:
            n0 = self.face_normals(face_ids[:1])[0] * signs[0]
            if np.dot(n0, np.asarray(reference_direction, float)) < 0.0:
                signs = -signs
        cut = CutSurface(name, face_ids, signs)
        self.cuts.append(cut)
        self._cache.clear()
        return cut

    def orient_face_patch(self, face_ids):
        """Signs giving the faces of a patch a consistent orientation.

        Two faces sharing an edge are consistently oriented when they induce
        opposite directions on it.  Raises for non-orientable or
        disconnected patches.
        """
        face_ids = np.asarray(face_ids, dtype=int)
        k = face_ids.shape[0]
        pos = {int(f): i for i, f in enumerate(face_ids)}
        # Directed boundary edges of each face under global orientation.
        tris = self.faces[face_ids]
        directed = np.stack([tris[:, [0, 1]], tris[:, [1, 2]],
                             tris[:, [2, 0]]], axis=1)
        edge_faces = {}
        for i in range(k):
            for a, b in directed[i]:
                edge_faces.setdefault(frozenset((int(a), int(b))), []).append(
                    (i, (int(a), int(b))))
        signs = np.zeros(k, dtype=int)
        signs[0] = 1
        stack = [0]
        while stack:
            i = stack.pop()
            for a, b in directed[i]:
                shared = edge_faces[frozenset((int(a), int(b)))]
                if len(shared) > 2:
                    raise ValueError("cut patch is not an embedded surface")
                for j, (c, d) in shared:
                    if j == i:
                        continue
                    # Same direction means the faces disagree.
                    s = -signs[i] if (c, d) == (a, b) else signs[i]
                    if signs[j] == 0:
                        signs[j] = s
                        stack.append(j)
                    elif signs[j] != s:
                        raise ValueError("cut patch is not orientable")
        if np.any(signs == 0):
            raise ValueError("cut patch is not edge-connected")
        return signs

    def cut_positive_tets(self, cut):
        """For each cut face, the adjacent tet its transverse normal enters."""
        out = np.empty(cut.face_ids.shape[0], dtype=int)
        for i, (f, s) in enumerate(zip(cut.face_ids, cut.signs)):
            t0, t1 = self.face_tets[f]
            k0 = int(np.nonzero(self.tet_faces[t0] == f)[0][0])
            # Normal s * n_f points out of t0 when the product of signs is +1.
            outward_t0 = self.tet_face_signs[t0, k0] * s
            out[i] = t1 if outward_t0 > 0 else t0
        return out

    def cut_boundary_loop(self, cut):
        """Directed rim edges (a, b) of a cut, following its orientation."""
        counts = {}
        for fid, s in zip(cut.face_ids, cut.signs):
            a, b, c = self.faces[fid]
            cyc = [(a, b), (b, c), (c, a)] if s > 0 else \
                [(b, a), (c, b), (a, c)]
            for d in cyc:
                rev = (d[1], d[0])
                if rev in counts:
                    del counts[rev]
                else:
                    counts[d] = True
        return np.array(sorted((int(a), int(b)) for a, b in counts),
                        dtype=int)

    # -- validation ---------------------------------------------------------

    def validate(self):
        if np.any(self.volumes <= 0.0):
            raise ValueError("non-positive tet volume after orientation")
        if np.any(self._face_counts > 2):
            raise ValueError("non-manifold face (shared by > 2 tets)")
        inc = sparse.csr_matrix(
            (np.ones(4 * self.nt),
             (np.repeat(np.arange(self.nt), 4), self.tet_faces.ravel())),
            shape=(self.nt, self.nf))
        ncomp, _ = csgraph.connected_components(inc @ inc.T, directed=False)
        if ncomp != 1:
            raise ValueError("mesh is not connected")
        names = set()
        for cut in self.cuts:
            if cut.name in names:
                raise ValueError(f"duplicate cut name {cut.name!r}")
            names.add(cut.name)
            if np.any(self.face_tets[cut.face_ids, 1] < 0):
                raise ValueError(f"cut {cut.name!r} contains boundary faces")
        for i, a in enumerate(self.cuts):
            for b in self.cuts[i + 1:]:
                if np.intersect1d(a.face_ids, b.face_ids).size:
                    raise ValueError("cuts share a face")
        if self.cuts:
            bet = self.betti()
            if bet["b1"] != len(self.cuts):
                raise ValueError(
                    f"{len(self.cuts)} cuts given but first Betti number "
                    f"is {bet['b1']}")
        return True
