"""Command line front end.

Subcommands: mesh-info, check, basis, solve, decompose, friedrichs.
Every run emits a report.json (stdout, or into --out); field data can be
exported to legacy VTK files alongside the report.  Exit codes: 0 on
success, 2 when the data fails a solvability check, 3 when an iterative
solver stalls, 4 on bad input.
"""

import argparse
import configparser
import json
import sys
import time
from datetime import datetime, timezone

import numpy as np

from . import generators, vtkio
from . import whitney as wh
from .compat import CompatibilityError, check_compatibility
from .decompose import friedrichs_constant, hw_electric, hw_magnetic
from .fields import CoefficientField
from .harmonic import electric_basis, magnetic_basis
from .linsolve import SolverConfig, SolverError
from .mshio import load_msh
from .presets import ProblemData, coefficient_preset, data_preset
from .solve import solve_electric, solve_magnetostatic
from .whitney import DofVector

EXIT_OK = 0
EXIT_INCOMPATIBLE = 2
EXIT_SOLVER = 3
EXIT_INPUT = 4


# -- argument parsing -----------------------------------------------------

def build_parser():
    p = argparse.ArgumentParser(
        prog="divcurl",
        description="Numerical toolkit for generalized div-curl systems "
                    "on tetrahedral meshes.")
    sub = p.add_subparsers(dest="command", required=True)

    def common(sp):
        sp.add_argument("--mesh", default="cube:4",
                        help="mesh file or generator spec: cube:n | "
                             "shell:rin,rout,k | torus:R,r,k[,cut]")
        sp.add_argument("--coeff", default="identity",
                        help="identity | aniso | spdN | varying | "
                             "diagonal:a,b,c | per-cell .npy file")
        sp.add_argument("--tol", default=None,
                        help="relative solver tolerance")
        sp.add_argument("--out", default=None,
                        help="output directory for report.json and VTK "
                             "field files; default prints to stdout")
        sp.add_argument("--seed", default="0", help="random seed")
        sp.add_argument("--config", default=None,
                        help="flat key=value config file; command line "
                             "flags win")
        return sp

    common(sub.add_parser("mesh-info", help="mesh statistics and topology"))

    sp = common(sub.add_parser("check", help="data solvability conditions"))
    sp.add_argument("--system", choices=["magnetostatic", "electric"],
                    required=False)
    sp.add_argument("--data", default=None, help="named data preset")
    sp.add_argument("--J", dest="j_spec", default=None)
    sp.add_argument("--rho", default=None)
    sp.add_argument("--lambda", dest="lam", default=None)
    sp.add_argument("--Lambda", dest="big_lam", default=None)

    sp = common(sub.add_parser("basis", help="harmonic space basis"))
    sp.add_argument("--kind", choices=["magnetic", "electric"],
                    required=True)

    sp = common(sub.add_parser("solve", help="particular solution and "
                                             "harmonic basis"))
    sp.add_argument("--system", choices=["magnetostatic", "electric"],
                    required=True)
    sp.add_argument("--data", default="zero", help="named data preset")

    sp = common(sub.add_parser("decompose", help="three-way orthogonal "
                                                 "splitting of a field"))
    sp.add_argument("--kind", choices=["magnetic", "electric"],
                    required=True)
    sp.add_argument("--data", default=None,
                    help="preset whose exact solution is decomposed; "
                         "default is a seeded random field")

    sp = common(sub.add_parser("friedrichs", help="first-order Friedrichs "
                                                  "constant"))
    sp.add_argument("--kind", choices=["normal", "tangential"],
                    default="normal")
    sp.add_argument("--p", default="2.0", help="Lebesgue exponent")
    sp.add_argument("--r-form", dest="r_form",
                    choices=["standard", "reduced", "flux"],
                    default="standard")
    return p


def apply_config(parser, argv):
    """Parse argv, folding in defaults from an optional --config file.

    The file is flat key = value, optionally grouped in [sections]; the
    keys are the long flag names.  Explicit flags take precedence.
    """
    argv = list(sys.argv[1:] if argv is None else argv)
    cfg_path = None
    for i, tok in enumerate(argv):
        if tok == "--config" and i + 1 < len(argv):
            cfg_path = argv[i + 1]
        elif tok.startswith("--config="):
            cfg_path = tok.split("=", 1)[1]
    if cfg_path:
        cp = configparser.ConfigParser()
        with open(cfg_path) as fh:
            text = fh.read()
        if not text.lstrip().startswith("["):
            text = "[run]\n" + text
        cp.read_string(text)
        defaults = {}
        for section in cp.sections():
            for key, val in cp.items(section):
                dest = {"lambda": "lam", "Lambda": "big_lam",
                        "J": "j_spec", "r-form": "r_form"}.get(key, key)
                defaults[dest] = val
        for sp in parser._subparsers._group_actions[0].choices.values():
            for action in sp._actions:
                if action.dest in defaults:
                    sp.set_defaults(**{action.dest: defaults[action.dest]})
                    action.required = False
    return parser.parse_args(argv)


# -- specs ----------------------------------------------------------------

def make_mesh(spec):
    name, _, rest = spec.partition(":")
    parts = [s for s in rest.split(",") if s] if rest else []
    if name == "cube":
        return generators.cube(int(parts[0]) if parts else 4)
    if name == "shell":
        if len(parts) >= 3:
            return generators.spherical_shell(int(parts[2]),
                                              float(parts[0]),
                                              float(parts[1]))
        return generators.spherical_shell(int(parts[0]) if parts else 1)
    if name == "torus":
        if not parts:
            return generators.solid_torus(1, with_cut=True)
        if len(parts) == 1:
            return generators.solid_torus(int(parts[0]), with_cut=True)
        cut = len(parts) > 3 and parts[3] == "cut"
        return generators.solid_torus(int(parts[2]), float(parts[0]),
                                      float(parts[1]), with_cut=cut)
    return load_msh(spec)


def make_coeff(spec, seed=0):
    if spec.startswith("diagonal:"):
        a, b, c = (float(s) for s in spec.split(":", 1)[1].split(","))
        return CoefficientField.diagonal(a, b, c)
    if spec.endswith(".npy"):
        return CoefficientField("per_cell", np.load(spec), name=spec)
    return coefficient_preset(spec, seed=int(seed))


def _scalar_fn(spec):
    if spec in (None, "zero"):
        return lambda p: np.zeros(len(p))
    if spec == "one":
        return lambda p: np.ones(len(p))
    if spec.startswith("const:"):
        v = float(spec.split(":", 1)[1])
        return lambda p: np.full(len(p), v)
    raise ValueError(f"unknown scalar data spec {spec!r}")


def _vector_fn(spec):
    if spec in (None, "zero"):
        return lambda p: np.zeros((len(p), 3))
    if spec.startswith("const:"):
        v = np.array([float(s) for s in spec.split(":", 1)[1].split(",")])
        return lambda p: np.tile(v, (len(p), 1))
    raise ValueError(f"unknown vector data spec {spec!r}")


def make_data(args, coeff_name, seed):
    if args.data:
        return data_preset(args.data, coeff_name=coeff_name, seed=seed)
    lam_fn = _scalar_fn(args.lam)
    big_fn = _vector_fn(args.big_lam)
    return ProblemData(
        "cli", args.system or "magnetostatic",
        _vector_fn(args.j_spec), _scalar_fn(args.rho),
        lam=lambda p, n: lam_fn(p),
        Lam=lambda p, n: big_fn(p))


# -- reporting ------------------------------------------------------------

def _flatten(prefix, value, out):
    if isinstance(value, dict):
        if set(value) >= {"residual", "passed"}:
            out[prefix] = float(value["residual"])
            return
        for k, v in value.items():
            _flatten(f"{prefix}.{k}" if prefix else str(k), v, out)
    elif isinstance(value, (list, tuple, np.ndarray)):
        for i, v in enumerate(np.asarray(value).ravel()):
            _flatten(f"{prefix}.{i}", v, out)
    else:
        try:
            out[prefix] = float(value)
        except (TypeError, ValueError):
            pass


def flatten_residuals(*sources):
    out = {}
    for src in sources:
        _flatten("", src, out)
    return out


def make_report(command, mesh, coeff, results, residuals, stats):
    betti = mesh.betti()
    centers = mesh.vertices[mesh.tets].mean(axis=1)
    m, big_m = coeff.ellipticity_bounds(centers, np.arange(mesh.nt)) \
        if coeff is not None else (1.0, 1.0)
    return {
        "command": command,
        "mesh": {"cells": int(mesh.nt), "vertices": int(mesh.nv),
                 "betti": [int(betti["b1"]), int(betti["b2"])]},
        "coefficient": {"kind": coeff.name if coeff else "identity",
                        "m": float(m), "M": float(big_m)},
        "results": results,
        "residuals": residuals,
        "stats": {"iterations": int(stats.iterations),
                  "seconds": float(stats.seconds)},
        "timestamp": datetime.now(timezone.utc).isoformat(),
    }


def emit(report, args, mesh=None, point_data=None, cell_data=None):
    text = json.dumps(report, sort_keys=True, indent=2, allow_nan=True)
    if args.out:
        import os
        os.makedirs(args.out, exist_ok=True)
        with open(os.path.join(args.out, "report.json"), "w") as fh:
            fh.write(text + "\n")
        for name, data in (point_data or {}).items():
            vtkio.write_vtk(os.path.join(args.out, f"{name}.vtk"), mesh,
                            point_data={name: data})
        for name, data in (cell_data or {}).items():
            vtkio.write_vtk(os.path.join(args.out, f"{name}.vtk"), mesh,
                            cell_data={name: data})
    else:
        print(text)


# -- subcommands ----------------------------------------------------------

class _Timer:
    def __init__(self):
        self.t0 = time.perf_counter()
        self.iterations = 0

    @property
    def seconds(self):
        return time.perf_counter() - self.t0


def cmd_mesh_info(args):
    mesh = make_mesh(args.mesh)
    mesh.validate()
    t = _Timer()
    q = mesh.quality()
    results = {
        "h": mesh.h,
        "edges": int(mesh.ne), "faces": int(mesh.nf),
        "boundary_components": int(mesh.n_boundary_components),
        "cuts": [c.name for c in mesh.cuts],
        "euler_characteristic": int(mesh.euler_characteristic),
        "quality": {"h_min": q.h_min, "h_max": q.h_max,
                    "min_dihedral": q.min_dihedral,
                    "min_volume": q.min_volume,
                    "max_aspect": q.max_aspect},
    }
    report = make_report("mesh-info", mesh, None, results, {}, t)
    emit(report, args, mesh)
    return EXIT_OK


def cmd_check(args):
    mesh = make_mesh(args.mesh)
    coeff = make_coeff(args.coeff, args.seed)
    data = make_data(args, args.coeff, int(args.seed))
    system = args.system or data.system
    if system == "both":
        raise ValueError("--system is required for this dataset")
    t = _Timer()
    rep = check_compatibility(mesh, system, data, coeff)
    results = rep.as_dict()
    residuals = {c.name: c.residual for c in rep.checks}
    report = make_report("check", mesh, coeff, results, residuals, t)
    emit(report, args, mesh)
    return EXIT_OK if rep.passed else EXIT_INCOMPATIBLE


def cmd_basis(args):
    mesh = make_mesh(args.mesh)
    coeff = make_coeff(args.coeff, args.seed)
    config = _solver_config(args)
    build = magnetic_basis if args.kind == "magnetic" else electric_basis
    basis = build(mesh, coeff, config)
    results = {
        "kind": basis.kind,
        "dimension": basis.dimension,
        "gram": np.asarray(basis.gram).tolist(),
    }
    residuals = flatten_residuals(basis.certificates)
    report = make_report("basis", mesh, coeff, results, residuals,
                         basis.stats)
    fields = {f"basis_{i}": f for i, f in enumerate(basis.fields)}
    emit(report, args, mesh, cell_data=fields)
    return EXIT_OK


def cmd_solve(args):
    mesh = make_mesh(args.mesh)
    coeff = make_coeff(args.coeff, args.seed)
    data = make_data(args, args.coeff, int(args.seed))
    config = _solver_config(args)
    if args.system == "magnetostatic":
        bundle = solve_magnetostatic(data.J, data.rho, data.lam, coeff,
                                     mesh, config)
    else:
        bundle = solve_electric(data.J, data.rho, data.Lam, coeff, mesh,
                                config)
    results = {
        "system": bundle.system,
        "passed": bundle.passed,
        "basis_dimension": bundle.basis.dimension,
        "u0_norm": wh.l2_norm(mesh, bundle.u0),
    }
    if data.u_exact is not None:
        exact = wh.interpolate(mesh, bundle.u0.degree, data.u_exact)
        err = DofVector(mesh, bundle.u0.degree,
                        bundle.u0.values - exact.values)
        denom = max(wh.l2_norm(mesh, exact), 1e-300)
        results["error_l2"] = wh.l2_norm(mesh, err) / denom
    residuals = flatten_residuals(
        bundle.diagnostics,
        {"potential": bundle.aux["potential"].certificates},
        {"basis": bundle.basis.certificates})
    report = make_report("solve", mesh, coeff, results, residuals,
                         bundle.stats)
    fields = {"u0": bundle.u0}
    fields.update({f"basis_{i}": f
                   for i, f in enumerate(bundle.basis.fields)})
    emit(report, args, mesh, cell_data=fields,
         point_data={"scalar_potential": bundle.aux["scalar"].values})
    return EXIT_OK if bundle.passed else EXIT_SOLVER


def cmd_decompose(args):
    mesh = make_mesh(args.mesh)
    coeff = make_coeff(args.coeff, args.seed)
    config = _solver_config(args)
    degree = wh.RT if args.kind == "magnetic" else wh.NED
    if args.data:
        data = data_preset(args.data, coeff_name=args.coeff,
                           seed=int(args.seed))
        if data.u_exact is None:
            raise ValueError(f"preset {args.data!r} has no closed-form "
                             f"field to decompose")
        u = wh.interpolate(mesh, degree, data.u_exact)
    else:
        rng = np.random.default_rng(int(args.seed))
        n = mesh.nf if degree == wh.RT else mesh.ne
        u = DofVector(mesh, degree, rng.standard_normal(n))
    split = hw_magnetic(u, coeff, mesh, config) if args.kind == "magnetic" \
        else hw_electric(u, coeff, mesh, config)
    results = {
        "kind": split.kind,
        "norms": {k: float(v) for k, v in split.norms.items()},
        "coefficients": np.asarray(split.coefficients).tolist(),
    }
    residuals = flatten_residuals(
        {"reconstruction": split.reconstruction},
        {"pairing": split.pairings}, split.certificates)
    report = make_report("decompose", mesh, coeff, results, residuals,
                         split.stats)
    emit(report, args, mesh,
         cell_data={"input": split.u, "gradient": split.gradient,
                    "harmonic": split.harmonic, "curl": split.curl},
         point_data={"chi": split.chi.values})
    return EXIT_OK


def cmd_friedrichs(args):
    mesh = make_mesh(args.mesh)
    coeff = make_coeff(args.coeff, args.seed)
    config = _solver_config(args)
    est = friedrichs_constant(mesh, coeff, kind=args.kind,
                              p=float(args.p), config=config,
                              r_form=args.r_form, seed=int(args.seed))
    results = {
        "kind": est.kind, "p": est.p, "r_form": est.r_form,
        "constant": float(est.constant),
        "lower_bound_only": bool(est.lower_bound_only),
    }
    residuals = {"certificate": float(est.certificate)}
    report = make_report("friedrichs", mesh, coeff, results, residuals,
                         est.stats)
    emit(report, args, mesh, point_data={"extremal": est.extremal})
    return EXIT_OK


def _solver_config(args):
    if args.tol is None:
        return SolverConfig()
    return SolverConfig(rel_tol=float(args.tol))


_COMMANDS = {
    "mesh-info": cmd_mesh_info,
    "check": cmd_check,
    "basis": cmd_basis,
    "solve": cmd_solve,
    "decompose": cmd_decompose,
    "friedrichs": cmd_friedrichs,
}


def main(argv=None):
    parser = build_parser()
    try:
        args = apply_config(parser, argv)
    except SystemExit as exc:
        # argparse exits with 2 on bad flags; remap to the input error code
        # unless this was --help (exit 0).
        return EXIT_INPUT if exc.code else EXIT_OK
    try:
        return _COMMANDS[args.command](args)
    except CompatibilityError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INCOMPATIBLE
    except SolverError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_SOLVER
    except (ValueError, KeyError, OSError, IndexError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INPUT


if __name__ == "__main__":
    sys.exit(main())
