import numpy as np
import pytest
from scipy import sparse

from divcurl.linsolve import (SolverConfig, SolverError, cg, minres_saddle)


def _random_spd(rng, n, density=0.1):
    a = sparse.random(n, n, density=density, random_state=rng.integers(1e9))
    a = a @ a.T + sparse.identity(n) * n * 0.05
    return a.tocsr()


def test_cg_matches_direct_solve(rng):
    a = _random_spd(rng, 80)
    b = rng.standard_normal(80)
    x, stats = cg(a, b)
    assert stats.converged
    exact = np.linalg.solve(a.toarray(), b)
    assert np.allclose(x, exact, atol=1e-8 * np.linalg.norm(exact))


def test_cg_singular_consistent(rng):
    # Graph Laplacian of a path: singular with the constants as kernel.
    n = 50
    d = np.full(n, 2.0)
    d[0] = d[-1] = 1.0
    a = sparse.diags([-np.ones(n - 1), d, -np.ones(n - 1)], [-1, 0, 1],
                     format="csr")
    ones = np.ones(n)
    b = rng.standard_normal(n)
    b -= b.mean()
    x, stats = cg(a, b, nullspace=[ones])
    assert stats.converged
    assert abs(x @ ones) < 1e-10
    assert np.linalg.norm(a @ x - b) < 1e-9 * np.linalg.norm(b)


def test_cg_scale_floor_accepts_negligible_rhs(rng):
    a = _random_spd(rng, 30)
    b = 1e-14 * rng.standard_normal(30)
    x, stats = cg(a, b, scale=1.0)
    assert stats.converged
    assert np.linalg.norm(x) < 1e-10


def test_cg_raises_on_stall(rng):
    a = _random_spd(rng, 40)
    b = rng.standard_normal(40)
    with pytest.raises(SolverError):
        cg(a, b, config=SolverConfig(rel_tol=1e-14, max_iter=2))


def test_saddle_matches_direct_solve(rng):
    n, m = 60, 10
    a = _random_spd(rng, n)
    b_rows = sparse.csr_matrix(rng.standard_normal((m, n)))
    f = rng.standard_normal(n)
    g = rng.standard_normal(m)
    x, y, stats = minres_saddle(a, b_rows, f, g)
    assert stats.converged
    k = np.block([[a.toarray(), b_rows.toarray().T],
                  [b_rows.toarray(), np.zeros((m, m))]])
    exact = np.linalg.solve(k, np.concatenate([f, g]))
    assert np.allclose(np.concatenate([x, y]), exact,
                       atol=1e-7 * np.linalg.norm(exact))


def test_saddle_constraint_enforced(rng):
    n, m = 60, 5
    a = _random_spd(rng, n)
    b_rows = sparse.csr_matrix(rng.standard_normal((m, n)))
    f = rng.standard_normal(n)
    g = rng.standard_normal(m)
    x, _, _ = minres_saddle(a, b_rows, f, g)
    assert np.linalg.norm(b_rows @ x - g) < 1e-7 * np.linalg.norm(g)
