"""Solvability checks for the two div-curl systems.

Given sources (J, rho) and trace data (lam or Lam), the checker evaluates
the conditions under which each system admits a solution: solenoidal
current, flux balance through boundary components, mean balance between
source and normal trace, the surface identity J.n = div_T Lambda, and -
on cut domains - the circulation balance between the current through a
cut and the tangential data around its rim.

Residuals are scale-normalised with floor EPS0.  Two tolerance classes
exist: "algebraic" (1e-8) for identities the discrete representation
satisfies exactly when the data is compatible, and "resolution" (10 h)
for identities that hold at the continuous level only.
"""

from dataclasses import dataclass, field

import numpy as np

from . import quadrature as quad
from . import whitney as wh
from .harmonic import cut_flux

ALGEBRAIC_TOL = 1e-8
RESOLUTION_FACTOR = 10.0
EPS0 = 1e-300


class CompatibilityError(ValueError):
    """Raised when problem data fails a solvability condition."""

    def __init__(self, report):
        self.report = report
        super().__init__("incompatible data, failing conditions: "
                         + ", ".join(report.failing()))


@dataclass
class CheckResult:
    name: str
    residual: float
    threshold: float
    passed: bool
    note: str = ""


@dataclass
class CompatReport:
    system: str
    checks: list = field(default_factory=list)

    @property
    def passed(self):
        return all(c.passed for c in self.checks)

    def add(self, name, value, scale, tol_class, h, note=""):
        residual = abs(float(value)) / max(float(scale), EPS0)
        tol = ALGEBRAIC_TOL if tol_class == "algebraic" \
            else RESOLUTION_FACTOR * h
        self.checks.append(CheckResult(name, residual, tol,
                                       residual <= tol, note))

    def failing(self):
        return [c.name for c in self.checks if not c.passed]

    def as_dict(self):
        return {
            "system": self.system,
            "passed": self.passed,
            "checks": [
                {"name": c.name, "residual": c.residual,
                 "threshold": c.threshold, "passed": c.passed,
                 "note": c.note}
                for c in self.checks],
        }


@dataclass
class DiscreteData:
    """Mesh representations of one problem's data."""

    J: object  # RT DofVector
    rho: object  # P0 DofVector
    lam: np.ndarray | None  # per boundary face
    Lam: np.ndarray | None  # circulations per edge (zero off boundary)


def discretize_data(mesh, data):
    zero_v = lambda p: np.zeros((len(p), 3))
    zero_s = lambda p: np.zeros(len(p))
    j = wh.interpolate(mesh, wh.RT, data.J or zero_v)
    rho = wh.interpolate(mesh, wh.P0, data.rho or zero_s)
    lam = None
    if data.lam is not None:
        lam = wh.boundary_face_data(mesh, data.lam)
    big = None
    if data.Lam is not None:
        big = wh.boundary_edge_data(mesh, data.Lam)
    return DiscreteData(j, rho, lam, big)


def check_magnetostatic(j, rho, lam, mesh, tol=ALGEBRAIC_TOL):
    """Conditions for curl(sigma u) = J, div u = rho, u.n = lam.

    j: RT DofVector, rho: P0 DofVector, lam: per-boundary-face values
    (or None for zero).
    """
    h = mesh.h
    rep = CompatReport("magnetostatic")
    _, _, d = wh.incidence_matrices(mesh)
    jnorm = wh.l2_norm(mesh, j)

    div_cells = (d @ j.values) / mesh.volumes
    div_norm = float(np.sqrt(np.sum(div_cells ** 2 * mesh.volumes)))
    rep.add("divJ", div_norm, jnorm, "resolution", h,
            "L2 norm of the cellwise divergence of the current")

    for i in range(mesh.n_boundary_components):
        bf = mesh.boundary_component_faces(i)
        t = mesh.face_tets[bf, 0]
        k = np.argmax(mesh.tet_faces[t] == bf[:, None], axis=1)
        sign = mesh.tet_face_signs[t, k]
        flux = float(np.dot(sign, j.values[bf]))
        rep.add(f"gammaFlux_{i}", flux, jnorm, "algebraic", h,
                "net current through one boundary component")

    vol_int = float(rho.values @ mesh.volumes)
    areas = mesh.face_areas(mesh.boundary_faces)
    surf_int = float(lam @ areas) if lam is not None else 0.0
    scale = float(np.abs(rho.values) @ mesh.volumes) \
        + (float(np.abs(lam) @ areas) if lam is not None else 0.0)
    rep.add("meanBalance", vol_int - surf_int, scale, "algebraic", h,
            "volume integral of rho against the boundary integral of lam")
    return rep


def check_electric(j, rho, lam_edges, mesh, coeff=None, tol=ALGEBRAIC_TOL):
    """Conditions for curl u = J, div(eps u) = rho, u x n = Lam.

    lam_edges: circulations of the tangential data along boundary edges
    (zero entries off the boundary), or None for zero data.
    """
    h = mesh.h
    rep = CompatReport("electric")
    _, _, d = wh.incidence_matrices(mesh)
    jnorm = wh.l2_norm(mesh, j)
    if lam_edges is None:
        lam_edges = np.zeros(mesh.ne)

    div_cells = (d @ j.values) / mesh.volumes
    div_norm = float(np.sqrt(np.sum(div_cells ** 2 * mesh.volumes)))
    rep.add("divJ", div_norm, jnorm, "resolution", h,
            "L2 norm of the cellwise divergence of the current")

    rep.add("lambdaNormal", 0.0, 1.0, "algebraic", h,
            "edge circulations represent a purely tangential field; the "
            "normal part is zero by construction")

    ms = wh.surface_edge_mass(mesh)
    lnorm = float(np.sqrt(max(lam_edges @ (ms @ lam_edges), 0.0)))
    r = wh.surface_mixed_grad(mesh).T @ lam_edges
    jn = wh.normal_trace(mesh, j)
    bf = mesh.boundary_faces
    areas = mesh.face_areas(bf)
    for k, f in enumerate(bf):
        for v in mesh.faces[f]:
            r[v] += jn[k] * areas[k] / 3.0
    bmask, _, _ = wh.boundary_entities(mesh)
    rep.add("jnEqualsDivT", float(np.linalg.norm(r[bmask])),
            jnorm + lnorm, "resolution", h,
            "weak identity J.n = div_T Lambda against boundary hat "
            "functions")

    for jj, cut in enumerate(mesh.cuts):
        lhs = cut_flux(mesh, j, cut)
        rhs = rim_circulation(mesh, cut, lam_edges)
        rep.add(f"cutCirculation_{jj + 1}", lhs - rhs, jnorm,
                "resolution", h,
                "current through the cut against the rim circulation of "
                "n x Lambda")
        rep.add(f"harmonicPairing_{jj + 1}", lhs - rhs, jnorm,
                "resolution", h,
                "pairing of (J, Lambda) with the harmonic field of this "
                "cut, evaluated through its equivalent cut-circulation "
                "form")
    return rep


def check_compatibility(mesh, system, data, coeff=None):
    """Discretize a ProblemData and run the checks of one system."""
    if system not in ("magnetostatic", "electric"):
        raise ValueError(f"unknown system {system!r}")
    dd = discretize_data(mesh, data)
    if system == "magnetostatic":
        return check_magnetostatic(dd.J, dd.rho, dd.lam, mesh)
    return check_electric(dd.J, dd.rho, dd.Lam, mesh, coeff)


def rim_circulation(mesh, cut, lam_edges):
    """Circulation of n x Lambda along the rim of a cut.

    Lambda is reconstructed on each boundary face as the surface Whitney
    1-form with the given edge circulations; n x Lambda is then the
    in-plane rotation of that field, integrated along the directed rim.
    """
    loop = mesh.cut_boundary_loop(cut)
    if loop.size == 0:
        return 0.0
    bf_of_edge = {}
    for f in mesh.boundary_faces:
        for e in mesh.face_edges[f]:
            bf_of_edge.setdefault(int(e), []).append(int(f))
    total = 0.0
    for a, b in loop:
        e = int(mesh.edge_id(np.array([a]), np.array([b]))[0])
        sign = 1.0 if (mesh.edges[e, 0], mesh.edges[e, 1]) == (a, b) \
            else -1.0
        faces = bf_of_edge.get(e, [])
        if not faces:
            raise ValueError("cut rim edge is not on the boundary")
        contrib = 0.0
        for f in faces:
            contrib += _rotated_edge_integral(mesh, f, e, lam_edges)
        total += sign * contrib / len(faces)
    return total


def _rotated_edge_integral(mesh, f, e, lam_edges):
    """Integral of (n x Lambda_h) . t along edge e inside face f."""
    tri = mesh.faces[f]
    g = wh.surface_grads(mesh, np.array([f]))[0]
    n = wh._outward_normals(mesh, np.array([f]))[0]
    a, b = mesh.edges[e]
    coords = mesh.vertices[[a, b]]
    pts = quad.map_points(quad.EDGE_POINTS, coords[None])[0]
    d = pts - mesh.vertices[tri[0]]
    lam = np.empty((pts.shape[0], 3))
    lam[:, 1] = d @ g[1]
    lam[:, 2] = d @ g[2]
    lam[:, 0] = 1.0 - lam[:, 1] - lam[:, 2]
    pairs = np.array([[0, 1], [1, 2], [0, 2]])
    vals = np.zeros((pts.shape[0], 3))
    for k, (i, jj) in enumerate(pairs):
        w = lam[:, i, None] * g[jj] - lam[:, jj, None] * g[i]
        vals += lam_edges[mesh.face_edges[f, k]] * w
    rot = np.cross(n, vals)
    vec = coords[1] - coords[0]
    return float(np.einsum("q,qd,d->", quad.EDGE_WEIGHTS, rot, vec))
