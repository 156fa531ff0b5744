"""Solvers for the two div-curl systems.

Both pipelines follow the same constructive route: build a vector
potential carrying the current, correct the divergence with a scalar
potential of the matching weighted Laplace problem, and attach the basis
of the harmonic space so callers can see the full affine solution set.

Magnetostatic system (curl(sigma u) = J, div u = rho, u.n = lam):
the potential has prescribed curl and controlled normal behaviour; the
scalar correction solves a Neumann problem with the conormal data folded
into the boundary term.

Electric system (curl u = J, div(eps u) = rho, u x n = Lam): the
potential realises both the curl and the tangential trace through a
constrained energy minimisation; the scalar correction solves a
Dirichlet problem.
"""

import time
from dataclasses import dataclass, field

import numpy as np
from scipy import sparse

from . import quadrature as quad
from . import whitney as wh
from .compat import (EPS0, CompatibilityError, check_electric,
                     check_magnetostatic)
from .harmonic import (cut_flux, curl_free_representatives, electric_basis,
                       jump_potentials, magnetic_basis)
from .linsolve import SolverConfig, SolveStats, cg, minres_saddle
from .whitney import DofVector

ALGEBRAIC_TOL = 1e-8
RESOLUTION_FACTOR = 10.0


@dataclass
class PotentialResult:
    """A vector potential together with its gauge certificates."""

    kind: str  # "normal" or "tangential"
    potential: DofVector  # edge-element potential
    field: DofVector | None  # its curl as a face-element field
    certificates: dict
    stats: SolveStats
    aux: dict = field(default_factory=dict)


@dataclass
class SolutionBundle:
    """One particular solution, the harmonic basis, and diagnostics."""

    system: str
    u0: DofVector
    basis: object
    diagnostics: dict
    stats: SolveStats
    aux: dict = field(default_factory=dict)

    @property
    def passed(self):
        return all(d["passed"] for d in self.diagnostics.values())


# -- data coercion --------------------------------------------------------

def as_rt(mesh, j):
    if j is None:
        return DofVector(mesh, wh.RT, np.zeros(mesh.nf))
    if isinstance(j, DofVector):
        assert j.degree == wh.RT
        return j
    return wh.interpolate(mesh, wh.RT, j)


def as_p0(mesh, rho):
    if rho is None:
        return DofVector(mesh, wh.P0, np.zeros(mesh.nt))
    if isinstance(rho, DofVector):
        assert rho.degree == wh.P0
        return rho
    return wh.interpolate(mesh, wh.P0, rho)


def as_face_trace(mesh, lam):
    """Normal trace data as per-boundary-face averages."""
    nb = len(mesh.boundary_faces)
    if lam is None:
        return np.zeros(nb)
    if callable(lam):
        return wh.boundary_face_data(mesh, lam)
    lam = np.asarray(lam, float)
    assert lam.shape == (nb,)
    return lam


def as_edge_trace(mesh, big_lam):
    """Tangential data Lam = u x n as circulations along boundary edges.

    Stored per edge (zero off the boundary).  Callables receive (points,
    outward normals) and return the u x n vector.
    """
    if big_lam is None:
        return np.zeros(mesh.ne)
    if callable(big_lam):
        return wh.boundary_edge_data(mesh, big_lam)
    big_lam = np.asarray(big_lam, float)
    assert big_lam.shape == (mesh.ne,)
    return big_lam


def _rho_load(mesh, rho):
    """Vertex loads int rho l_v for piecewise constant rho."""
    out = np.zeros(mesh.nv)
    np.add.at(out, mesh.tets.ravel(),
              np.repeat(rho.values * mesh.volumes / 4.0, 4))
    return out


def _trace_load(mesh, lam):
    """Vertex loads of the boundary integral of lam l_v."""
    out = np.zeros(mesh.nv)
    bf = mesh.boundary_faces
    areas = mesh.face_areas(bf)
    np.add.at(out, mesh.faces[bf].ravel(), np.repeat(lam * areas / 3.0, 3))
    return out


# -- cut functionals on edge-element fields -------------------------------

def _cut_flux_rows(mesh):
    """Rows F (n_cuts x ne): flux of an edge-element field through a cut.

    The field is evaluated from both tets adjacent to each cut face and
    the two fluxes averaged, matching the face-flux projection.
    """
    def build():
        rows = np.zeros((len(mesh.cuts), mesh.ne))
        for jj, cut in enumerate(mesh.cuts):
            fids = cut.face_ids
            coords = mesh.vertices[mesh.faces[fids]]
            pts = quad.map_points(quad.TRI_POINTS, coords)
            nvec = 0.5 * np.cross(coords[:, 1] - coords[:, 0],
                                  coords[:, 2] - coords[:, 0])
            nvec = nvec * cut.signs[:, None]
            for side in range(2):
                t = mesh.face_tets[fids, side]
                b = wh._barycentric_of_sub(mesh, t, pts)
                basis = wh._ned_basis_sub(mesh, t, b)
                fl = np.einsum("q,kqmd,kd->km", quad.TRI_WEIGHTS,
                               basis, nvec)
                np.add.at(rows[jj], mesh.tet_edges[t].ravel(),
                          0.5 * fl.ravel())
        return rows

    return wh._cached(mesh, "cut_flux_rows", build)


def _identity_cut_reps(mesh, config):
    """Curl-free unit-circulation edge fields for the identity weight."""
    def build():
        thetas, js, _ = jump_potentials(mesh, None, config=config)
        return curl_free_representatives(mesh, thetas, js)

    return wh._cached(mesh, "identity_cut_reps", build)


# -- vector potentials ----------------------------------------------------

def vector_potential_normal(J, mesh, config=None):
    """Edge-element potential psi with curl psi = J at solver accuracy.

    Gauge: psi is weakly divergence-free and has zero flux through every
    cut; both are enforced by a joint post-correction with gradients and
    curl-free unit-circulation fields, which leaves the curl untouched.
    """
    config = config or SolverConfig()
    j = as_rt(mesh, J)
    stats = SolveStats(0, 0.0, True, 0.0)
    g, c, _ = wh.incidence_matrices(mesh)
    m_rt = wh.mass_matrix(mesh, wh.RT)
    acc = wh._cached(mesh, "curlcurl_rt",
                     lambda: (c.T @ m_rt @ c).tocsr())
    b = c.T @ (m_rt @ j.values)
    psi, st = cg(acc, b, config=config)
    stats.merge(st)

    # Joint gauge correction: psi <- psi - grad p - sum c_j h_j with
    # weak div(psi) = 0 and zero cut fluxes.
    m_ned = wh.mass_matrix(mesh, wh.NED)
    a11 = wh._cached(mesh, "gradgrad_ned",
                     lambda: (g.T @ m_ned @ g).tocsr())
    ones = np.ones(mesh.nv)
    rhs0 = g.T @ (m_ned @ psi)
    p0, st = cg(a11, rhs0, nullspace=[ones], config=config)
    stats.merge(st)
    if mesh.cuts:
        f_rows = _cut_flux_rows(mesh)
        reps = _identity_cut_reps(mesh, config)
        hmat = np.column_stack([r.values for r in reps])
        a12 = g.T @ (m_ned @ hmat)
        ys = []
        for k in range(hmat.shape[1]):
            y, st = cg(a11, a12[:, k], nullspace=[ones], config=config)
            stats.merge(st)
            ys.append(y)
        ymat = np.column_stack(ys)
        schur = f_rows @ hmat - (f_rows @ (g @ ymat))
        rhs_c = f_rows @ psi - f_rows @ (g @ p0)
        c_coef = np.linalg.solve(schur, rhs_c)
        p = p0 - ymat @ c_coef
        psi = psi - g @ p - hmat @ c_coef
        cut_res = float(np.abs(f_rows @ psi).max())
    else:
        psi = psi - g @ p0
        cut_res = 0.0

    psi_dof = DofVector(mesh, wh.NED, psi)
    e = c @ psi - j.values
    jnorm = float(np.sqrt(max(j.values @ (m_rt @ j.values), 0.0)))
    enorm = float(np.sqrt(max(e @ (m_rt @ e), 0.0)))
    mp = m_ned @ psi
    pnorm = float(np.linalg.norm(mp))
    nt = wh.normal_trace(mesh, wh.project_ned_to_rt(mesh, psi_dof))
    areas = mesh.face_areas(mesh.boundary_faces)
    certs = {
        "curl": enorm / max(jnorm, EPS0),
        "weak_div": float(np.linalg.norm(g.T @ mp)) / max(pnorm, EPS0),
        "cut_flux": cut_res / max(float(np.linalg.norm(psi)), EPS0),
        "normal_trace": float(np.sqrt(nt ** 2 @ areas))
        / max(jnorm, EPS0),
    }
    return PotentialResult("normal", psi_dof, DofVector(mesh, wh.RT,
                                                        c @ psi),
                           certs, stats)


def vector_potential_tangential(J, Lam, mesh, config=None):
    """Edge-element potential xi minimising the curl energy against data.

    Minimises 1/2 int |curl xi|^2 - int J . xi - bnd int of the rotated
    tangential data against xi, subject to weak div(xi) = 0 and zero
    fluxes through all cuts.  The deliverable is v = curl xi, a
    face-element field with div v = 0 exactly.
    """
    config = config or SolverConfig()
    j = as_rt(mesh, J)
    lam_edges = as_edge_trace(mesh, Lam)
    stats = SolveStats(0, 0.0, True, 0.0)
    g, c, _ = wh.incidence_matrices(mesh)
    m_rt = wh.mass_matrix(mesh, wh.RT)
    acc = wh._cached(mesh, "curlcurl_rt",
                     lambda: (c.T @ m_rt @ c).tocsr())
    m_ned = wh.mass_matrix(mesh, wh.NED)
    q0 = wh.mixed_mass(mesh)
    ms = wh.surface_edge_mass(mesh)

    b1 = (g.T @ m_ned).tocsr()
    n2 = len(mesh.cuts)
    if n2:
        b2 = sparse.csr_matrix(_cut_flux_rows(mesh))
        b_rows = sparse.vstack([b1, b2]).tocsr()
    else:
        b_rows = b1
    f = q0 @ j.values + ms @ lam_edges
    g_rhs = np.zeros(mesh.nv + n2)
    null = [np.concatenate([np.zeros(mesh.ne), np.ones(mesh.nv),
                            np.zeros(n2)])]
    xi, _, st = minres_saddle(acc, b_rows, f, g_rhs, config=config,
                              nullspace=null)
    stats.merge(st)
    xi_dof = DofVector(mesh, wh.NED, xi)
    v = DofVector(mesh, wh.RT, c @ xi)

    _, _, d = wh.incidence_matrices(mesh)
    mp = m_ned @ xi
    tavg = wh.rt_tangential_trace_average(mesh, v)
    lavg = _rotated_data_average(mesh, lam_edges)
    areas = mesh.face_areas(mesh.boundary_faces)
    tnorm = float(np.sqrt(np.einsum("kd,kd,k->", tavg, tavg, areas)))
    lnorm = float(np.sqrt(np.einsum("kd,kd,k->", lavg, lavg, areas)))
    diff = tavg - lavg
    certs = {
        "stationarity": stats.residual,
        "weak_div": float(np.linalg.norm(b1 @ xi))
        / max(float(np.linalg.norm(mp)), EPS0),
        "cut_flux": float(np.abs(_cut_flux_rows(mesh) @ xi).max())
        / max(float(np.linalg.norm(xi)), EPS0) if n2 else 0.0,
        "div": float(np.abs(d @ v.values).max())
        / max(float(np.linalg.norm(v.values)), EPS0),
        "tangential_trace": float(
            np.sqrt(np.einsum("kd,kd,k->", diff, diff, areas)))
        / max(tnorm + lnorm, EPS0),
    }
    return PotentialResult("tangential", xi_dof, v, certs, stats)


# -- diagnostics ----------------------------------------------------------

def _rotated_data_average(mesh, lam_edges):
    """Per-boundary-face average of n x Lam_h, the tangential part of u.

    Lam_h is the surface 1-form reconstruction of the trace data, whose
    in-plane rotation is what the tangential part of the field must
    match.
    """
    lavg = wh.surface_vector_average(mesh, lam_edges)
    n = wh._outward_normals(mesh, mesh.boundary_faces)
    return np.cross(n, lavg)

def _entry(residual, tol, note):
    residual = float(residual)
    return {"residual": residual, "tolerance": float(tol),
            "passed": residual <= tol, "note": note}


def magnetostatic_diagnostics(mesh, u, j, rho, lam, sigma=None):
    """Weak residuals of curl(sigma u) = J, div u = rho, u.n = lam.

    The curl residual is tested against interior edge functions and must
    vanish at solver accuracy; divergence and trace residuals compare
    piecewise constant quantities and carry the resolution tolerance.
    """
    h = mesh.h
    _, c, d = wh.incidence_matrices(mesh)
    msig = wh.mass_matrix(mesh, wh.RT, sigma)
    q0 = wh.mixed_mass(mesh)
    _, emask, _ = wh.boundary_entities(mesh)
    areas = mesh.face_areas(mesh.boundary_faces)
    # Data-only scales, so the residuals are unchanged when a harmonic
    # basis member is added to the field.
    jnorm = wh.l2_norm(mesh, j)
    rnorm = float(np.sqrt(np.sum(rho.values ** 2 * mesh.volumes)))
    lnorm = float(np.sqrt(lam ** 2 @ areas))
    data_scale = jnorm + rnorm + lnorm / np.sqrt(h)

    lhs = c.T @ (msig @ u.values)
    rhs = q0 @ j.values
    r = (lhs - rhs)[~emask]
    scale = float(np.linalg.norm(lhs)) + float(np.linalg.norm(rhs))
    curl_res = float(np.linalg.norm(r)) / max(scale, EPS0)

    div_cells = (d @ u.values) / mesh.volumes
    num = float(np.sqrt(np.sum((div_cells - rho.values) ** 2
                               * mesh.volumes)))
    div_res = num / max(data_scale, EPS0)

    nt = wh.normal_trace(mesh, u)
    num = float(np.sqrt((nt - lam) ** 2 @ areas))
    den = lnorm + np.sqrt(h) * (jnorm + rnorm)
    tr_res = num / max(den, EPS0)

    return {
        "curl": _entry(curl_res, ALGEBRAIC_TOL,
                       "weak curl(sigma u) - J against interior edges"),
        "div": _entry(div_res, RESOLUTION_FACTOR * h,
                      "cellwise div u against rho"),
        "trace": _entry(tr_res, RESOLUTION_FACTOR * h,
                        "facewise u.n against lam"),
    }


def electric_diagnostics(mesh, u, j, rho, lam_edges, eps=None):
    """Weak residuals of curl u = J, div(eps u) = rho, u x n = Lam.

    The divergence residual is tested against interior vertex functions
    and must vanish at solver accuracy; curl and trace residuals carry
    the resolution tolerance.
    """
    h = mesh.h
    g, c, _ = wh.incidence_matrices(mesh)
    m_rt = wh.mass_matrix(mesh, wh.RT)
    areas = mesh.face_areas(mesh.boundary_faces)
    lavg = _rotated_data_average(mesh, lam_edges)
    # Data-only scales, so the residuals are unchanged when a harmonic
    # basis member is added to the field.
    jnorm = wh.l2_norm(mesh, j)
    rnorm = float(np.sqrt(np.sum(rho.values ** 2 * mesh.volumes)))
    lnorm = float(np.sqrt(np.einsum("kd,kd,k->", lavg, lavg, areas)))
    data_scale = jnorm + rnorm + lnorm / np.sqrt(h)

    e = c @ u.values - j.values
    num = float(np.sqrt(max(e @ (m_rt @ e), 0.0)))
    curl_res = num / max(data_scale, EPS0)

    m_eps = wh.mass_matrix(mesh, wh.NED, eps)
    vmask, _, _ = wh.boundary_entities(mesh)
    load = _rho_load(mesh, rho)
    r = (g.T @ (m_eps @ u.values) + load)[~vmask]
    scale = float(np.linalg.norm(g.T @ (m_eps @ u.values))) \
        + float(np.linalg.norm(load))
    div_res = float(np.linalg.norm(r)) / max(scale, EPS0)

    tavg = wh.tangential_trace_average(mesh, u)
    diff = tavg - lavg
    num = float(np.sqrt(np.einsum("kd,kd,k->", diff, diff, areas)))
    den = lnorm + np.sqrt(h) * (jnorm + rnorm)
    tr_res = num / max(den, EPS0)

    return {
        "curl": _entry(curl_res, RESOLUTION_FACTOR * h,
                       "L2 residual of curl u - J"),
        "div": _entry(div_res, ALGEBRAIC_TOL,
                      "weak div(eps u) - rho against interior vertices"),
        "trace": _entry(tr_res, RESOLUTION_FACTOR * h,
                        "facewise tangential part of u against the data"),
    }


# -- full solves ----------------------------------------------------------

def solve_magnetostatic(J, rho, lam, sigma, mesh, config=None, check=True):
    """Particular solution and harmonic basis of the magnetostatic system.

    Route: vector potential psi with curl psi = J, scalar correction q
    from the sigma^{-1}-weighted Neumann problem with the conormal data
    lam in the boundary term, u0 the weighted flux projection of
    grad q + psi, plus the basis of cut-indexed harmonic fields.
    """
    config = config or SolverConfig()
    t0 = time.perf_counter()
    j = as_rt(mesh, J)
    rho_p0 = as_p0(mesh, rho)
    lam_f = as_face_trace(mesh, lam)
    if check:
        report = check_magnetostatic(j, rho_p0, lam_f, mesh)
        if not report.passed:
            raise CompatibilityError(report)
    stats = SolveStats(0, 0.0, True, 0.0)

    pr = vector_potential_normal(j, mesh, config)
    stats.merge(pr.stats)
    psi = pr.potential.values

    g, _, _ = wh.incidence_matrices(mesh)
    k = wh.stiffness_matrix(mesh, sigma, inverse=True)
    m_inv = wh.mass_matrix(mesh, wh.NED, sigma, inverse=True)
    rhs = -_rho_load(mesh, rho_p0) + _trace_load(mesh, lam_f) \
        - g.T @ (m_inv @ psi)
    ones = np.ones(mesh.nv)
    q, st = cg(k, rhs, nullspace=[ones], config=config)
    stats.merge(st)

    v0 = g @ q + psi
    msig = wh.mass_matrix(mesh, wh.RT, sigma)
    q0 = wh.mixed_mass(mesh)
    _, _, d = wh.incidence_matrices(mesh)
    # Weighted flux projection of sigma^{-1} v0 constrained to the exact
    # cellwise divergence; the multiplier lives in the range of D^T,
    # which the curl test functions annihilate.
    guess, st = cg(msig, q0.T @ v0, config=config)
    stats.merge(st)
    u_vals, _, st = minres_saddle(msig, d.astype(float).tocsr(),
                                  q0.T @ v0, mesh.volumes * rho_p0.values,
                                  config=config, x0=guess)
    stats.merge(st)
    u0 = DofVector(mesh, wh.RT, u_vals)

    basis = magnetic_basis(mesh, sigma, config)
    stats.merge(basis.stats)
    diagnostics = magnetostatic_diagnostics(mesh, u0, j, rho_p0, lam_f,
                                            sigma)
    stats.seconds = time.perf_counter() - t0
    return SolutionBundle("magnetostatic", u0, basis, diagnostics, stats,
                          aux={"potential": pr,
                               "scalar": DofVector(mesh, wh.P1, q)})


def solve_divcurl(J, rho, Lam, mesh, config=None):
    """Prescribed curl, divergence and tangential trace, no coefficient.

    v = curl xi + grad q with xi the tangential vector potential and q
    the Dirichlet solution absorbing rho.  The weak divergence residual
    against interior vertex functions vanishes at solver accuracy.
    """
    config = config or SolverConfig()
    j = as_rt(mesh, J)
    rho_p0 = as_p0(mesh, rho)
    lam_edges = as_edge_trace(mesh, Lam)
    stats = SolveStats(0, 0.0, True, 0.0)
    pr = vector_potential_tangential(j, lam_edges, mesh, config)
    stats.merge(pr.stats)

    g, _, _ = wh.incidence_matrices(mesh)
    k = wh.stiffness_matrix(mesh)
    q0 = wh.mixed_mass(mesh)
    vmask, _, _ = wh.boundary_entities(mesh)
    free = ~vmask
    rhs = -_rho_load(mesh, rho_p0) - g.T @ (q0 @ pr.field.values)
    qv = np.zeros(mesh.nv)
    qv[free], st = cg(k[free][:, free].tocsr(), rhs[free], config=config)
    stats.merge(st)

    v_ned = wh.project_rt_to_ned(mesh, pr.field) \
        + DofVector(mesh, wh.NED, g @ qv)
    r = (g.T @ (q0 @ pr.field.values) + k @ qv + _rho_load(mesh, rho_p0))
    scale = float(np.linalg.norm(k @ qv)) \
        + float(np.linalg.norm(_rho_load(mesh, rho_p0)))
    certs = dict(pr.certificates)
    certs["weak_div_v"] = float(np.linalg.norm(r[free])) / max(scale, EPS0)
    return PotentialResult("tangential", pr.potential, pr.field, certs,
                           stats, aux={"scalar": DofVector(mesh, wh.P1, qv),
                                       "v_ned": v_ned})


def solve_electric(J, rho, Lam, epsilon, mesh, config=None, check=True):
    """Particular solution and harmonic basis of the electric system.

    Route: tangential vector potential for curl and trace, edge
    interpolation of its curl, eps-weighted Dirichlet correction for the
    divergence, plus the basis of inner-boundary harmonic gradients.
    """
    config = config or SolverConfig()
    t0 = time.perf_counter()
    j = as_rt(mesh, J)
    rho_p0 = as_p0(mesh, rho)
    lam_edges = as_edge_trace(mesh, Lam)
    if check:
        report = check_electric(j, rho_p0, lam_edges, mesh, epsilon)
        if not report.passed:
            raise CompatibilityError(report)
    stats = SolveStats(0, 0.0, True, 0.0)
    pr = vector_potential_tangential(j, lam_edges, mesh, config)
    stats.merge(pr.stats)
    v_ned = wh.project_rt_to_ned(mesh, pr.field)

    g, _, _ = wh.incidence_matrices(mesh)
    k = wh.stiffness_matrix(mesh, epsilon)
    m_eps = wh.mass_matrix(mesh, wh.NED, epsilon)
    vmask, _, _ = wh.boundary_entities(mesh)
    free = ~vmask
    rhs = -_rho_load(mesh, rho_p0) - g.T @ (m_eps @ v_ned.values)
    qv = np.zeros(mesh.nv)
    qv[free], st = cg(k[free][:, free].tocsr(), rhs[free], config=config)
    stats.merge(st)

    u0 = DofVector(mesh, wh.NED, g @ qv + v_ned.values)
    basis = electric_basis(mesh, epsilon, config)
    stats.merge(basis.stats)
    diagnostics = electric_diagnostics(mesh, u0, j, rho_p0, lam_edges,
                                       epsilon)
    stats.seconds = time.perf_counter() - t0
    return SolutionBundle("electric", u0, basis, diagnostics, stats,
                          aux={"potential": pr,
                               "scalar": DofVector(mesh, wh.P1, qv)})
