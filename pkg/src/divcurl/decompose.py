"""Weighted three-way field splittings and Friedrichs-constant estimates.

A face-element field splits, orthogonally in the sigma-weighted L2 inner
product, into a curl part (curl of an edge field vanishing on the
boundary), a harmonic part (span of the cut-indexed basis), and a
weighted gradient remainder; an edge-element field splits into an exact
gradient with zero trace, a harmonic gradient, and a weighted curl
remainder.  Scalar and vector potentials of the remainder parts are
recovered by least squares and reported with their fit quality.

The Friedrichs estimator bounds the full first-order norm of a vector
field by its L2 norm plus the natural residual norms of one system; the
discrete constant is the largest Ritz value of the corresponding matrix
pencil on componentwise linear fields.
"""

import time
from dataclasses import dataclass, field

import numpy as np
from scipy import sparse
from scipy.sparse import linalg as spla

from . import quadrature as quad
from . import whitney as wh
from .compat import EPS0
from .harmonic import electric_basis, magnetic_basis
from .linsolve import SolverConfig, SolveStats, cg, minres_saddle
from .whitney import DofVector


@dataclass
class DecompositionResult:
    kind: str  # "magnetic" or "electric"
    u: DofVector
    gradient: DofVector  # weighted gradient part
    harmonic: DofVector
    curl: DofVector  # weighted curl part
    chi: DofVector  # scalar potential of the gradient part
    w: DofVector  # vector potential of the curl part
    coefficients: np.ndarray  # harmonic expansion coefficients
    reconstruction: float
    pairings: dict
    norms: dict
    certificates: dict
    stats: SolveStats


def _pairing_residuals(m, parts, unorm):
    """Mutual weighted pairings of the three components, relative."""
    names = list(parts)
    out = {}
    for i in range(len(names)):
        for k in range(i + 1, len(names)):
            val = float(parts[names[i]].values @ (m @ parts[names[k]].values))
            out[f"{names[i]}_{names[k]}"] = abs(val) / max(unorm ** 2, EPS0)
    return out


def hw_magnetic(u, sigma, mesh, config=None, basis=None):
    """Split a face-element field u = gradient + harmonic + curl part.

    The curl part is the weighted projection onto curls of edge fields
    vanishing on the boundary, the harmonic part the weighted projection
    onto the cut-indexed basis, and the gradient part the remainder; the
    three are mutually orthogonal in the sigma inner product at solver
    accuracy and sum to u exactly.  chi is the least squares scalar
    potential whose weighted gradient realisation best matches the
    gradient part.
    """
    assert u.degree == wh.RT
    config = config or SolverConfig()
    t0 = time.perf_counter()
    stats = SolveStats(0, 0.0, True, 0.0)
    g, c, _ = wh.incidence_matrices(mesh)
    msig = wh.mass_matrix(mesh, wh.RT, sigma)
    q0 = wh.mixed_mass(mesh)

    # Curl part: weighted projection onto C(interior edge fields).
    _, emask, _ = wh.boundary_entities(mesh)
    interior = np.nonzero(~emask)[0]
    c_int = c[:, interior].astype(float).tocsr()
    a_w = (c_int.T @ msig @ c_int).tocsr()
    b_w = c_int.T @ (msig @ u.values)
    unorm_w = wh.l2_norm(mesh, u, sigma)
    w_scale = unorm_w * float(np.sqrt(a_w.diagonal().max()))
    w_int, st = cg(a_w, b_w, config=config, scale=w_scale)
    stats.merge(st)
    w_vals = np.zeros(mesh.ne)
    w_vals[interior] = w_int
    curl_part = DofVector(mesh, wh.RT, c @ w_vals)

    # Harmonic part: weighted projection onto the basis.
    if basis is None:
        basis = magnetic_basis(mesh, sigma, config)
        stats.merge(basis.stats)
    r = u.values - curl_part.values
    n2 = basis.dimension
    if n2:
        hmat = np.column_stack([f.values for f in basis.fields])
        gram = hmat.T @ (msig @ hmat)
        coeffs = np.linalg.solve(gram, hmat.T @ (msig @ r))
        h_vals = hmat @ coeffs
    else:
        coeffs = np.zeros(0)
        h_vals = np.zeros(mesh.nf)
    harmonic = DofVector(mesh, wh.RT, h_vals)
    gradient = DofVector(mesh, wh.RT, r - h_vals)

    # Scalar potential: least squares chi with the weighted gradient
    # realisation s = (weighted mass)^{-1} (mixed pairing of grad chi)
    # closest to the gradient part, solved as a saddle system.
    b_rows = (-(g.T @ q0)).tocsr()
    null = [np.concatenate([np.zeros(mesh.nf), np.ones(mesh.nv)])]
    unorm = wh.l2_norm(mesh, u, sigma)
    if wh.l2_norm(mesh, gradient, sigma) <= 1e-10 * unorm:
        # Negligible gradient part: its potential is zero.
        s_vals = np.zeros(mesh.nf)
        chi_vals = np.zeros(mesh.nv)
    else:
        # With B = -(G^T Q0), the first block row reads M s = Q0^T G y,
        # so the multiplier y is the potential itself.
        s_vals, chi_vals, st = minres_saddle(
            msig, b_rows, np.zeros(mesh.nf), b_rows @ gradient.values,
            config=config, nullspace=null)
        stats.merge(st)
    chi = DofVector(mesh, wh.P1, chi_vals)
    parts = {"gradient": gradient, "harmonic": harmonic,
             "curl": curl_part}
    recon = u.values - (gradient.values + h_vals + curl_part.values)
    fit = DofVector(mesh, wh.RT, s_vals - gradient.values)
    certs = {
        "chi_fit": wh.l2_norm(mesh, fit, sigma) / max(unorm, EPS0),
        "w_boundary": float(np.abs(w_vals[emask]).max())
        if emask.any() else 0.0,
    }
    stats.seconds = time.perf_counter() - t0
    return DecompositionResult(
        "magnetic", u, gradient, harmonic, curl_part, chi,
        DofVector(mesh, wh.NED, w_vals), coeffs,
        float(np.sqrt(max(recon @ (msig @ recon), 0.0)))
        / max(unorm, EPS0),
        _pairing_residuals(msig, parts, unorm),
        {k: wh.l2_norm(mesh, v, sigma) for k, v in parts.items()},
        certs, stats)


def hw_electric(u, epsilon, mesh, config=None, basis=None):
    """Split an edge-element field u = gradient + harmonic + curl part.

    The gradient part is the eps-weighted projection onto gradients of
    vertex fields vanishing on the boundary (chi is that potential,
    exact), the harmonic part the projection onto the inner-component
    basis, and the curl part the remainder; w is the least squares edge
    potential whose weighted curl realisation best matches it.
    """
    assert u.degree == wh.NED
    config = config or SolverConfig()
    t0 = time.perf_counter()
    stats = SolveStats(0, 0.0, True, 0.0)
    g, c, _ = wh.incidence_matrices(mesh)
    meps = wh.mass_matrix(mesh, wh.NED, epsilon)
    k = wh.stiffness_matrix(mesh, epsilon)
    q0 = wh.mixed_mass(mesh)

    vmask, _, _ = wh.boundary_entities(mesh)
    free = np.nonzero(~vmask)[0]
    chi_vals = np.zeros(mesh.nv)
    rhs = (g.T @ (meps @ u.values))[free]
    kff = k[free][:, free].tocsr()
    chi_scale = wh.l2_norm(mesh, u, epsilon) \
        * float(np.sqrt(kff.diagonal().max())) if len(free) else 0.0
    chi_vals[free], st = cg(kff, rhs, config=config, scale=chi_scale)
    stats.merge(st)
    chi = DofVector(mesh, wh.P1, chi_vals)
    gradient = DofVector(mesh, wh.NED, g @ chi_vals)

    if basis is None:
        basis = electric_basis(mesh, epsilon, config)
        stats.merge(basis.stats)
    r = u.values - gradient.values
    n1 = basis.dimension
    if n1:
        hmat = np.column_stack([f.values for f in basis.fields])
        gram = hmat.T @ (meps @ hmat)
        coeffs = np.linalg.solve(gram, hmat.T @ (meps @ r))
        h_vals = hmat @ coeffs
    else:
        coeffs = np.zeros(0)
        h_vals = np.zeros(mesh.ne)
    harmonic = DofVector(mesh, wh.NED, h_vals)
    curl_part = DofVector(mesh, wh.NED, r - h_vals)

    # Vector potential: least squares w whose weighted curl realisation
    # s = (weighted mass)^{-1} (mixed pairing of curl w) matches the
    # curl part.
    b_rows = (-(c.T @ q0.T)).tocsr()
    unorm = wh.l2_norm(mesh, u, epsilon)
    if wh.l2_norm(mesh, curl_part, epsilon) <= 1e-10 * unorm:
        # Negligible curl part: its potential is zero.
        s_vals = np.zeros(mesh.ne)
        w_vals = np.zeros(mesh.ne)
    else:
        # With B = -(C^T Q0^T), the first block row reads M s = Q0 C y,
        # so the multiplier y is the vector potential itself.
        s_vals, w_vals, st = minres_saddle(
            meps, b_rows, np.zeros(mesh.ne), b_rows @ curl_part.values,
            config=config)
        stats.merge(st)
    w = DofVector(mesh, wh.NED, w_vals)
    parts = {"gradient": gradient, "harmonic": harmonic,
             "curl": curl_part}
    recon = u.values - (gradient.values + h_vals + curl_part.values)
    fit = DofVector(mesh, wh.NED, s_vals - curl_part.values)
    certs = {
        "w_fit": wh.l2_norm(mesh, fit, epsilon) / max(unorm, EPS0),
        "chi_boundary": float(np.abs(chi_vals[vmask]).max())
        if vmask.any() else 0.0,
    }
    stats.seconds = time.perf_counter() - t0
    return DecompositionResult(
        "electric", u, gradient, harmonic, curl_part, chi, w, coeffs,
        float(np.sqrt(max(recon @ (meps @ recon), 0.0)))
        / max(unorm, EPS0),
        _pairing_residuals(meps, parts, unorm),
        {k_: wh.l2_norm(mesh, v, epsilon) for k_, v in parts.items()},
        certs, stats)


# -- Friedrichs constant --------------------------------------------------

@dataclass
class FriedrichsEstimate:
    kind: str  # "normal" or "tangential"
    coefficient: str
    p: float
    constant: float
    extremal: np.ndarray  # nodal (nv, 3) field
    history: list
    r_form: str  # "standard", "reduced" or "flux"
    lower_bound_only: bool
    certificate: float
    stats: SolveStats = field(default_factory=SolveStats)


def _cell_coeff(mesh, coeff):
    if coeff is None or coeff.is_identity:
        return np.broadcast_to(np.eye(3), (mesh.nt, 3, 3))
    centers = mesh.vertices[mesh.tets].mean(axis=1)
    return coeff.at(centers, np.arange(mesh.nt))


def _scatter_vec(mesh, local, size):
    """Scatter per-tet (nt, 12, 12) blocks over vertex-major vector dofs."""
    dof = (3 * mesh.tets[:, :, None] + np.arange(3)).reshape(mesh.nt, 12)
    rows = np.repeat(dof, 12, axis=1).ravel()
    cols = np.tile(dof, (1, 12)).ravel()
    return sparse.csr_matrix((local.ravel(), (rows, cols)),
                             shape=(size, size))


def _vector_p1_forms(mesh, coeff, kind):
    """(L, R-parts) quadratic forms on componentwise linear fields.

    L is the full first-order norm (field plus full gradient).  The R
    parts are returned separately: mass, generalized curl, divergence
    and boundary trace, to be combined by the caller.
    """
    n = 3 * mesh.nv
    m1 = wh.mass_matrix(mesh, wh.P1)
    k1 = wh.stiffness_matrix(mesh)
    eye3 = sparse.identity(3, format="csr")
    mass = sparse.kron(m1, eye3, format="csr")
    lmat = (mass + sparse.kron(k1, eye3, format="csr")).tocsr()

    a = _cell_coeff(mesh, coeff)
    grads = mesh.grads  # (nt, 4, 3)
    vols = mesh.volumes
    if kind == "normal":
        # curl(A v) and div v.
        acols = a.transpose(0, 2, 1)  # A[:, e] per dof component
        bcurl = np.cross(grads[:, :, None, :], acols[:, None, :, :])
        bdiv = grads  # div contribution of dof (k, e) is g_k[e]
    else:
        # curl v and div(A v).
        ident = np.broadcast_to(np.eye(3), (mesh.nt, 3, 3))
        bcurl = np.cross(grads[:, :, None, :],
                         ident[:, None, :, :])
        bdiv = np.einsum("tie,tki->tke", a, grads)
    bcurl = bcurl.reshape(mesh.nt, 12, 3)
    curl_loc = np.einsum("t,tid,tjd->tij", vols, bcurl, bcurl)
    rcurl = _scatter_vec(mesh, curl_loc, n)
    bdiv = bdiv.reshape(mesh.nt, 12)
    div_loc = np.einsum("t,ti,tj->tij", vols, bdiv, bdiv)
    rdiv = _scatter_vec(mesh, div_loc, n)

    # Boundary trace: normal component for "normal", tangential part for
    # "tangential".
    bf = mesh.boundary_faces
    areas = mesh.face_areas(bf)
    nrm = wh._outward_normals(mesh, bf)
    if kind == "normal":
        proj = np.einsum("ke,kf->kef", nrm, nrm)
    else:
        proj = np.broadcast_to(np.eye(3), (len(bf), 3, 3)) \
            - np.einsum("ke,kf->kef", nrm, nrm)
    bary = quad.TRI_POINTS_DEG2
    wq = quad.TRI_WEIGHTS_DEG2
    lam2 = np.einsum("q,qk,ql->kl", wq, bary, bary)  # (3, 3)
    local = np.einsum("kl,mef->mklef", lam2, proj)
    local = local.transpose(0, 1, 3, 2, 4).reshape(len(bf), 9, 9)
    local *= areas[:, None, None]
    dof = (3 * mesh.faces[bf][:, :, None]
           + np.arange(3)).reshape(len(bf), 9)
    rows = np.repeat(dof, 9, axis=1).ravel()
    cols = np.tile(dof, (1, 9)).ravel()
    rtrace = sparse.csr_matrix((local.ravel(), (rows, cols)),
                               shape=(n, n))
    return lmat, mass, rcurl.tocsr(), rdiv.tocsr(), rtrace.tocsr()


def _cut_flux_vec_rows(mesh):
    """Rows over vector nodal dofs: flux of a nodal field through a cut."""
    rows = np.zeros((len(mesh.cuts), 3 * mesh.nv))
    for jj, cut in enumerate(mesh.cuts):
        coords = mesh.vertices[mesh.faces[cut.face_ids]]
        nvec = 0.5 * np.cross(coords[:, 1] - coords[:, 0],
                              coords[:, 2] - coords[:, 0])
        nvec = nvec * cut.signs[:, None]
        dof = (3 * mesh.faces[cut.face_ids][:, :, None]
               + np.arange(3)).reshape(-1)
        vals = np.repeat(nvec / 3.0, 3, axis=0).reshape(-1)
        np.add.at(rows[jj], dof, vals)
    return rows


def friedrichs_constant(mesh, coeff=None, kind="normal", p=2.0,
                        config=None, r_form="standard", steps=100,
                        n_samples=200, seed=42):
    """Largest ratio of the full first-order norm to the residual norm.

    The test family is componentwise linear vector fields.  For p = 2
    the constant is the square root of the largest Ritz value of the
    pencil (first-order form, residual form), found by inverse power
    iteration with a direct factorisation.  For p != 2 a fixed-seed
    random sample provides a lower bound only.

    r_form selects the residual side: "standard" includes the L2 term,
    "reduced" drops it, and "flux" replaces it by the squared fluxes
    through the cuts.
    """
    config = config or SolverConfig()
    t0 = time.perf_counter()
    lmat, mass, rcurl, rdiv, rtrace = _vector_p1_forms(mesh, coeff, kind)
    rmat = (rcurl + rdiv + rtrace).tocsr()
    if r_form == "standard":
        rmat = (rmat + mass).tocsr()
    elif r_form == "flux":
        f = _cut_flux_vec_rows(mesh)
        rmat = (rmat + sparse.csr_matrix(f.T @ f)).tocsr()
    elif r_form != "reduced":
        raise ValueError(f"unknown r_form {r_form!r}")

    rng = np.random.default_rng(seed)
    n = 3 * mesh.nv
    name = coeff.name if coeff is not None else "identity"

    if p == 2.0:
        lu = spla.splu(rmat.tocsc())
        x = rng.standard_normal(n)
        x /= np.sqrt(x @ (rmat @ x))
        history = []
        lam = 0.0
        for _ in range(steps):
            y = lu.solve(lmat @ x)
            ny = np.sqrt(max(y @ (rmat @ y), EPS0))
            x = y / ny
            lam = float((x @ (lmat @ x)) / (x @ (rmat @ x)))
            history.append(lam)
        cert = abs(history[-1] - history[-2]) / max(abs(history[-1]), EPS0)
        stats = SolveStats(steps, cert, cert <= 1e-6,
                           time.perf_counter() - t0)
        return FriedrichsEstimate(kind, name, p, float(np.sqrt(lam)),
                                  x.reshape(mesh.nv, 3), history, r_form,
                                  False, cert, stats)

    # Sampling route: discrete p-norm ratios over random nodal fields.
    best, best_x = 0.0, None
    history = []
    for _ in range(n_samples):
        x = rng.standard_normal(n)
        num = _p_norm_first_order(mesh, x, p)
        den = _p_norm_residual(mesh, x, p, coeff, kind, r_form)
        ratio = num / max(den, EPS0)
        history.append(ratio)
        if ratio > best:
            best, best_x = ratio, x
    stats = SolveStats(n_samples, 0.0, True, time.perf_counter() - t0)
    return FriedrichsEstimate(kind, name, p, float(best),
                              best_x.reshape(mesh.nv, 3), history, r_form,
                              True, 0.0, stats)


def _cell_values(mesh, x):
    v = x.reshape(mesh.nv, 3)
    vbar = v[mesh.tets].mean(axis=1)  # (nt, 3)
    grad = np.einsum("tkd,tke->ted", mesh.grads, v[mesh.tets])
    # grad[t, e, d] = d_d v_e
    return v, vbar, grad


def _p_norm_first_order(mesh, x, p):
    _, vbar, grad = _cell_values(mesh, x)
    vals = np.sum(np.abs(vbar) ** p, axis=1) \
        + np.sum(np.abs(grad.reshape(mesh.nt, 9)) ** p, axis=1)
    return float((vals @ mesh.volumes) ** (1.0 / p))


def _p_norm_residual(mesh, x, p, coeff, kind, r_form):
    v, vbar, grad = _cell_values(mesh, x)
    a = _cell_coeff(mesh, coeff)
    if kind == "normal":
        # curl(A v): gradient of (A v) is A grad v for cellwise A.
        ag = np.einsum("tef,tfd->ted", a, grad)
        curl = np.stack([ag[:, 2, 1] - ag[:, 1, 2],
                         ag[:, 0, 2] - ag[:, 2, 0],
                         ag[:, 1, 0] - ag[:, 0, 1]], axis=1)
        div = grad[:, 0, 0] + grad[:, 1, 1] + grad[:, 2, 2]
    else:
        curl = np.stack([grad[:, 2, 1] - grad[:, 1, 2],
                         grad[:, 0, 2] - grad[:, 2, 0],
                         grad[:, 1, 0] - grad[:, 0, 1]], axis=1)
        ag = np.einsum("tef,tfd->ted", a, grad)
        div = ag[:, 0, 0] + ag[:, 1, 1] + ag[:, 2, 2]
    vals = np.sum(np.abs(curl) ** p, axis=1) + np.abs(div) ** p
    if r_form == "standard":
        vals = vals + np.sum(np.abs(vbar) ** p, axis=1)
    total = float(vals @ mesh.volumes)
    bf = mesh.boundary_faces
    areas = mesh.face_areas(bf)
    nrm = wh._outward_normals(mesh, bf)
    vface = v[mesh.faces[bf]].mean(axis=1)
    if kind == "normal":
        tr = np.abs(np.einsum("kd,kd->k", vface, nrm)) ** p
    else:
        vt = vface - np.einsum("kd,kd->k", vface, nrm)[:, None] * nrm
        tr = np.sum(np.abs(vt) ** p, axis=1)
    total += float(tr @ areas)
    if r_form == "flux":
        f = _cut_flux_vec_rows(mesh)
        total += float(np.sum(np.abs(f @ x) ** p))
    return total ** (1.0 / p)
