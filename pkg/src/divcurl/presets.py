"""Built-in coefficients and problem data.

Manufactured solutions are produced symbolically: a closed-form field is
differentiated to obtain matching sources, so discretisation error is the
only error a solver test sees.  A few datasets are deliberately
incompatible and exist to exercise the compatibility checker's failure
paths.
"""

from dataclasses import dataclass
from functools import lru_cache

import numpy as np
import sympy as sp

from .fields import CoefficientField

_X, _Y, _Z = sp.symbols("x y z", real=True)


@dataclass
class ProblemData:
    """Right-hand sides of one div-curl problem.

    J and rho are volumetric callables on (m, 3) points.  lam(points,
    normals) gives the normal trace data of the magnetostatic system,
    Lam(points, normals) the tangential data u x n of the electric one.
    u_exact is the closed-form solution when one exists.  coeff, when not
    None, is the coefficient the data was manufactured for.
    """

    name: str
    system: str
    J: object
    rho: object
    lam: object = None
    Lam: object = None
    u_exact: object = None
    coeff: CoefficientField | None = None
    expect_compatible: bool = True


def _lambdify_vec(exprs):
    fns = [sp.lambdify((_X, _Y, _Z), e, "numpy") for e in exprs]

    def fn(p):
        p = np.asarray(p, float)
        cols = [np.broadcast_to(f(p[:, 0], p[:, 1], p[:, 2]), p[:, 0].shape)
                for f in fns]
        return np.column_stack(cols)

    return fn


def _lambdify_scalar(expr):
    f = sp.lambdify((_X, _Y, _Z), expr, "numpy")

    def fn(p):
        p = np.asarray(p, float)
        return np.broadcast_to(f(p[:, 0], p[:, 1], p[:, 2]),
                               p[:, 0].shape).astype(float)

    return fn


def _curl(u):
    return [sp.diff(u[2], _Y) - sp.diff(u[1], _Z),
            sp.diff(u[0], _Z) - sp.diff(u[2], _X),
            sp.diff(u[1], _X) - sp.diff(u[0], _Y)]


def _div(u):
    return sp.diff(u[0], _X) + sp.diff(u[1], _Y) + sp.diff(u[2], _Z)


def _matvec(a, u):
    return [sum(a[i, j] * u[j] for j in range(3)) for i in range(3)]


def _traces(u_fn):
    def lam(p, n):
        return np.einsum("md,md->m", u_fn(p), n)

    def big_lam(p, n):
        return np.cross(u_fn(p), n)

    return lam, big_lam


def _manufactured(name, system, u_sym, coeff_sym=None, coeff=None):
    """Build a ProblemData from a symbolic solution field."""
    u_fn = _lambdify_vec(u_sym)
    if system == "magnetostatic":
        a = coeff_sym if coeff_sym is not None else sp.eye(3)
        j = _curl(_matvec(a, u_sym))
        rho = _div(u_sym)
    else:
        a = coeff_sym if coeff_sym is not None else sp.eye(3)
        j = _curl(u_sym)
        rho = _div(_matvec(a, u_sym))
    lam, big_lam = _traces(u_fn)
    return ProblemData(name, system, _lambdify_vec(j),
                       _lambdify_scalar(rho), lam=lam, Lam=big_lam,
                       u_exact=u_fn, coeff=coeff)


def _sym_const(mat):
    return sp.Matrix(mat)


_VARYING_EPS_SYM = sp.Matrix([
    [1 + sp.Rational(3, 10) * _X ** 2, sp.Rational(1, 10) * _X * _Y, 0],
    [sp.Rational(1, 10) * _X * _Y, 1 + sp.Rational(3, 10) * _Y ** 2, 0],
    [0, 0, 1 + sp.Rational(1, 5) * _Z ** 2]])


def _varying_eps_field():
    fns = [[sp.lambdify((_X, _Y, _Z), _VARYING_EPS_SYM[i, j], "numpy")
            for j in range(3)] for i in range(3)]

    def at(p):
        p = np.asarray(p, float)
        out = np.empty((p.shape[0], 3, 3))
        for i in range(3):
            for j in range(3):
                out[:, i, j] = np.broadcast_to(
                    fns[i][j](p[:, 0], p[:, 1], p[:, 2]), p[:, 0].shape)
        return out

    return CoefficientField.from_callable(at, name="varying")


def coefficient_preset(name, seed=0):
    if name == "identity":
        return CoefficientField.identity()
    if name == "aniso":
        return CoefficientField.diagonal(2.0, 3.0, 0.5, name="aniso")
    if name.startswith("spd"):
        idx = int(name[3:])
        rng = np.random.default_rng(1000 + idx + seed)
        return CoefficientField.random_spd(rng, name=name)
    if name == "varying":
        return _varying_eps_field()
    raise KeyError(f"unknown coefficient preset {name!r}")


@lru_cache(maxsize=None)
def data_preset(name, coeff_name="identity", seed=0):
    """Problem data by name; manufactured cases bind to a coefficient."""
    coeff = coefficient_preset(coeff_name, seed)
    zero_v = lambda p: np.zeros((len(p), 3))
    zero_s = lambda p: np.zeros(len(p))

    if name == "zero":
        return ProblemData(
            "zero", "both", zero_v, zero_s,
            lam=lambda p, n: np.zeros(len(p)),
            Lam=lambda p, n: np.zeros((len(p), 3)),
            u_exact=zero_v, coeff=coeff)

    if name == "ms-gradient":
        # u = sigma^{-1} grad(x^2 - y^2): zero current, constant source.
        phi = _X ** 2 - _Y ** 2
        grad = [sp.diff(phi, s) for s in (_X, _Y, _Z)]
        if coeff.kind != "constant":
            raise ValueError("ms-gradient needs a constant coefficient")
        a = _sym_const(coeff.data)
        u = _matvec(a.inv(), grad)
        return _manufactured(name, "magnetostatic", u, coeff_sym=a,
                             coeff=coeff)

    if name == "ms-current":
        # u = sigma^{-1}(grad phi + (y, 0, 0)) carries the constant
        # current J = (0, 0, -1).
        phi = _X ** 2 - _Y ** 2 + _X * _Z
        grad = [sp.diff(phi, s) for s in (_X, _Y, _Z)]
        if coeff.kind != "constant":
            raise ValueError("ms-current needs a constant coefficient")
        a = _sym_const(coeff.data)
        u = _matvec(a.inv(), [grad[0] + _Y, grad[1], grad[2]])
        return _manufactured(name, "magnetostatic", u, coeff_sym=a,
                             coeff=coeff)

    if name == "el-poly":
        u = [_X ** 2, _Y ** 2, _Z ** 2]
        a = _sym_const(coeff.data) if coeff.kind == "constant" else \
            _VARYING_EPS_SYM
        cf = coeff if coeff.kind == "constant" else _varying_eps_field()
        return _manufactured(name, "electric", u, coeff_sym=a, coeff=cf)

    if name == "el-rot":
        u = [-_Y, _X, sp.Integer(0)]
        a = _sym_const(coeff.data) if coeff.kind == "constant" else \
            _VARYING_EPS_SYM
        cf = coeff if coeff.kind == "constant" else _varying_eps_field()
        return _manufactured(name, "electric", u, coeff_sym=a, coeff=cf)

    if name == "el-gradvar":
        # Curl-free solution with the position-dependent permittivity.
        phi = sp.sin(_X) * sp.sinh(_Y)
        u = [sp.diff(phi, s) for s in (_X, _Y, _Z)]
        return _manufactured(name, "electric", u,
                             coeff_sym=_VARYING_EPS_SYM,
                             coeff=_varying_eps_field())

    if name == "mean-mismatch":
        # Violates the mean balance: int rho != boundary integral of lam.
        return ProblemData(
            name, "magnetostatic", zero_v,
            lambda p: np.ones(len(p)),
            lam=lambda p, n: np.zeros(len(p)),
            expect_compatible=False, coeff=coeff)

    if name == "shell-flux":
        # Radial inverse-square current: divergence-free but with flux
        # 4 pi through the inner boundary sphere.
        def j(p):
            r2 = np.einsum("md,md->m", p, p)
            return p / np.maximum(r2, 1e-12)[:, None] ** 1.5

        return ProblemData(
            name, "magnetostatic", j, zero_s,
            lam=lambda p, n: np.zeros(len(p)),
            expect_compatible=False, coeff=coeff)

    if name == "torus-poloidal":
        # Zero current with tangential data circulating around the tube
        # of a torus: the rim circulation of the cut does not vanish.
        def u(p):
            rho = np.hypot(p[:, 0], p[:, 1])
            erho = np.column_stack([p[:, 0] / rho, p[:, 1] / rho,
                                    np.zeros(len(p))])
            ez = np.array([0.0, 0.0, 1.0])
            return -p[:, 2][:, None] * erho + (rho - 2.0)[:, None] * ez

        return ProblemData(
            name, "electric", zero_v, zero_s,
            Lam=lambda p, n: np.cross(u(p), n),
            expect_compatible=False, coeff=coeff)

    raise KeyError(f"unknown data preset {name!r}")


DATA_PRESETS = ["zero", "ms-gradient", "ms-current", "el-poly", "el-rot",
                "el-gradvar", "mean-mismatch", "shell-flux",
                "torus-poloidal"]
COEFF_PRESETS = ["identity", "aniso", "spd1", "spd2", "spd3", "varying"]
