"""Legacy ASCII VTK export of meshes and fields.

Vertex-based scalars go out as point data; everything else (cell
averages of edge and face element fields, piecewise constants) as cell
data.  One unstructured grid per file.
"""

import numpy as np

from . import whitney as wh

_CENTER = np.array([[0.25, 0.25, 0.25, 0.25]])


def cell_average(u):
    """Cell centroid values of a DofVector: (nt,) or (nt, 3)."""
    vals = wh.evaluate(u, _CENTER)
    return vals[:, 0]


def write_vtk(path, mesh, point_data=None, cell_data=None):
    """Write the mesh with named fields to a legacy ASCII VTK file.

    point_data: name -> (nv,) or (nv, 3) arrays.
    cell_data: name -> (nt,) or (nt, 3) arrays, or DofVectors (averaged).
    """
    point_data = dict(point_data or {})
    cell_data = dict(cell_data or {})
    lines = ["# vtk DataFile Version 3.0", "divcurl fields", "ASCII",
             "DATASET UNSTRUCTURED_GRID"]
    lines.append(f"POINTS {mesh.nv} double")
    for x, y, z in mesh.vertices:
        lines.append(f"{float(x)!r} {float(y)!r} {float(z)!r}")
    lines.append(f"CELLS {mesh.nt} {5 * mesh.nt}")
    for t in mesh.tets:
        lines.append(f"4 {t[0]} {t[1]} {t[2]} {t[3]}")
    lines.append(f"CELL_TYPES {mesh.nt}")
    lines.extend(["10"] * mesh.nt)

    def emit(name, arr, n):
        arr = np.asarray(arr, float)
        out = []
        if arr.ndim == 1:
            out.append(f"SCALARS {name} double 1")
            out.append("LOOKUP_TABLE default")
            out.extend(f"{float(v)!r}" for v in arr)
        else:
            out.append(f"VECTORS {name} double")
            out.extend(f"{float(a)!r} {float(b)!r} {float(c)!r}"
                       for a, b, c in arr)
        assert arr.shape[0] == n
        return out

    if point_data:
        lines.append(f"POINT_DATA {mesh.nv}")
        for name in sorted(point_data):
            lines.extend(emit(name, point_data[name], mesh.nv))
    if cell_data:
        lines.append(f"CELL_DATA {mesh.nt}")
        for name in sorted(cell_data):
            val = cell_data[name]
            if isinstance(val, wh.DofVector):
                val = val.values if val.degree == wh.P0 \
                    else cell_average(val)
            lines.extend(emit(name, val, mesh.nt))
    with open(path, "w") as fh:
        fh.write("\n".join(lines) + "\n")
