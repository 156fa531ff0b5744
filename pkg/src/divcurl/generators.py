"""Built-in mesh generators: cube, spherical shell, solid torus.

Prisms arising from swept triangulations are split into three tets each.
The splitting picks quad-face diagonals through the smallest global vertex
id, which makes neighbouring prisms agree on shared quads, and then cones
the prism surface from its smallest vertex.
"""

import numpy as np

from .mesh import Mesh


def _split_prism(bottom, top):
    """Three tets for the prism with triangle `bottom` below `top`.

    top[i] must sit above bottom[i].  Returns vertex id 4-tuples.
    """
    b0, b1, b2 = bottom
    t0, t1, t2 = top
    tris = [(b0, b1, b2), (t0, t1, t2)]
    for p, q, r, s in ((b0, b1, t1, t0), (b1, b2, t2, t1), (b2, b0, t0, t2)):
        if min(p, q, r, s) in (p, r):
            tris += [(p, q, r), (p, r, s)]
        else:
            tris += [(q, r, s), (q, s, p)]
    m = min(b0, b1, b2, t0, t1, t2)
    return [(m,) + tri for tri in tris if m not in tri]


def cube(n):
    """Unit cube [0,1]^3 split into n^3 subcubes of six tets each."""
    if n < 1:
        raise ValueError("cube refinement must be >= 1")
    k = n + 1
    grid = np.arange(k) / n
    xs, ys, zs = np.meshgrid(grid, grid, grid, indexing="ij")
    vertices = np.column_stack([xs.ravel(), ys.ravel(), zs.ravel()])

    def vid(i, j, l):
        return (i * k + j) * k + l

    steps = [np.array(s) for s in ((1, 0, 0), (0, 1, 0), (0, 0, 1))]
    perms = [(0, 1, 2), (0, 2, 1), (1, 0, 2), (1, 2, 0), (2, 0, 1), (2, 1, 0)]
    tets = []
    for i in range(n):
        for j in range(n):
            for l in range(n):
                c = np.array((i, j, l))
                for p in perms:
                    pts = [c, c + steps[p[0]], c + steps[p[0]] + steps[p[1]],
                           c + np.array((1, 1, 1))]
                    tets.append([vid(*pt) for pt in pts])
    return Mesh(vertices, np.array(tets))


def _unit_sphere(level):
    """Octahedron subdivided `level` times, vertices on the unit sphere."""
    verts = [(1, 0, 0), (-1, 0, 0), (0, 1, 0), (0, -1, 0), (0, 0, 1),
             (0, 0, -1)]
    faces = [(0, 2, 4), (2, 1, 4), (1, 3, 4), (3, 0, 4),
             (2, 0, 5), (1, 2, 5), (3, 1, 5), (0, 3, 5)]
    verts = [np.array(v, dtype=float) for v in verts]
    for _ in range(level):
        midpoint = {}

        def mid(a, b):
            key = (min(a, b), max(a, b))
            if key not in midpoint:
                p = verts[a] + verts[b]
                verts.append(p / np.linalg.norm(p))
                midpoint[key] = len(verts) - 1
            return midpoint[key]

        new_faces = []
        for a, b, c in faces:
            ab, bc, ca = mid(a, b), mid(b, c), mid(c, a)
            new_faces += [(a, ab, ca), (ab, b, bc), (ca, bc, c),
                          (ab, bc, ca)]
        faces = new_faces
    return np.array(verts), np.array(faces)


def spherical_shell(level, r_inner=0.5, r_outer=1.0):
    """Shell between two concentric spheres; one interior cavity, no cuts."""
    if not 0.0 < r_inner < r_outer:
        raise ValueError("need 0 < r_inner < r_outer")
    if level < 1:
        raise ValueError("shell refinement must be >= 1")
    sphere_verts, sphere_faces = _unit_sphere(level)
    ns = sphere_verts.shape[0]
    layers = 2 ** level
    radii = np.linspace(r_inner, r_outer, layers + 1)
    vertices = np.concatenate([r * sphere_verts for r in radii])
    tets = []
    for l in range(layers):
        lo, hi = l * ns, (l + 1) * ns
        for a, b, c in sphere_faces:
            tets += _split_prism((lo + a, lo + b, lo + c),
                                 (hi + a, hi + b, hi + c))
    return Mesh(vertices, np.array(tets))


def _unit_disk(rings):
    """Hex-ring triangulated unit disk: center plus `rings` rings."""
    verts = [np.zeros(2)]
    ring_ids = [[0]]
    for r in range(1, rings + 1):
        ids = []
        for m in range(6 * r):
            ang = 2.0 * np.pi * m / (6 * r)
            verts.append(r / rings * np.array([np.cos(ang), np.sin(ang)]))
            ids.append(len(verts) - 1)
        ring_ids.append(ids)
    tris = []
    for r in range(1, rings + 1):
        inner, outer = ring_ids[r - 1], ring_ids[r]
        if r == 1:
            for m in range(6):
                tris.append((0, outer[m], outer[(m + 1) % 6]))
            continue
        # Stitch the two cyclic loops by advancing the pointer whose next
        # vertex comes first in angle.
        ni, no = len(inner), len(outer)
        i = j = 0
        while i < ni or j < no:
            ai = 2.0 * np.pi * (i + 1) / ni if i < ni else np.inf
            aj = 2.0 * np.pi * (j + 1) / no if j < no else np.inf
            if aj <= ai:
                tris.append((outer[j % no], outer[(j + 1) % no],
                             inner[i % ni]))
                j += 1
            else:
                tris.append((inner[i % ni], outer[j % no],
                             inner[(i + 1) % ni]))
                i += 1
    return np.array(verts), np.array(tris)


def solid_torus(level, major_radius=2.0, minor_radius=0.5, with_cut=True):
    """Solid torus around the z axis, optionally with one cross-section cut.

    The cut sits in the half-plane phi = 0 and its transverse normal points
    in the +phi direction.
    """
    if level < 1:
        raise ValueError("torus refinement must be >= 1")
    if not 0.0 < minor_radius < major_radius:
        raise ValueError("need 0 < minor_radius < major_radius")
    rings = level + 1
    nphi = 8 * (level + 1)
    disk_verts, disk_tris = _unit_disk(rings)
    disk_verts = disk_verts * minor_radius
    nd = disk_verts.shape[0]
    phis = 2.0 * np.pi * np.arange(nphi) / nphi
    rad = major_radius + disk_verts[:, 0]
    vertices = np.concatenate([
        np.column_stack([rad * np.cos(p), rad * np.sin(p), disk_verts[:, 1]])
        for p in phis])
    tets = []
    for s in range(nphi):
        lo, hi = s * nd, ((s + 1) % nphi) * nd
        for a, b, c in disk_tris:
            tets += _split_prism((lo + a, lo + b, lo + c),
                                 (hi + a, hi + b, hi + c))
    mesh = Mesh(vertices, np.array(tets), check=False)
    if with_cut:
        cut_faces = mesh.face_id(disk_tris)
        mesh.add_cut("sigma1", cut_faces, reference_direction=(0.0, 1.0, 0.0))
    mesh.validate()
    return mesh
