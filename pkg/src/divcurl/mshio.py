"""Gmsh MSH 2.2 ASCII import and export.

Tetrahedra (element type 4) define the domain.  Triangles (type 2) in
physical groups named gamma0, gamma1, ... label boundary components, and
groups named sigma1, sigma2, ... declare cut surfaces; the vertex order of
the stored triangles fixes each cut's orientation.
"""

import re

import numpy as np

from .mesh import Mesh


def load_msh(path):
    with open(path) as fh:
        text = fh.read()
    sections = {}
    for match in re.finditer(r"\$(\w+)\n(.*?)\n\$End\1", text, re.S):
        sections[match.group(1)] = match.group(2)
    if "MeshFormat" not in sections:
        raise ValueError(f"{path}: not a Gmsh MSH file")
    version = sections["MeshFormat"].split()[0]
    if not version.startswith("2."):
        raise ValueError(f"{path}: unsupported MSH version {version}, "
                         f"only 2.x ASCII is handled")
    names = {}
    if "PhysicalNames" in sections:
        lines = sections["PhysicalNames"].strip().splitlines()
        for line in lines[1:]:
            dim, pid, name = line.split(maxsplit=2)
            names[(int(dim), int(pid))] = name.strip().strip('"')

    node_lines = sections["Nodes"].strip().splitlines()
    n_nodes = int(node_lines[0])
    ids = np.empty(n_nodes, dtype=int)
    coords = np.empty((n_nodes, 3))
    for i, line in enumerate(node_lines[1:1 + n_nodes]):
        parts = line.split()
        ids[i] = int(parts[0])
        coords[i] = [float(p) for p in parts[1:4]]
    id_map = {int(g): i for i, g in enumerate(ids)}

    tets, tris = [], []
    elem_lines = sections["Elements"].strip().splitlines()
    n_elem = int(elem_lines[0])
    for line in elem_lines[1:1 + n_elem]:
        parts = [int(p) for p in line.split()]
        etype, ntags = parts[1], parts[2]
        phys = parts[3] if ntags >= 1 else 0
        nodes = parts[3 + ntags:]
        if etype == 4:
            tets.append([id_map[n] for n in nodes])
        elif etype == 2:
            tris.append((phys, [id_map[n] for n in nodes]))
        # Other element types (points, lines) carry no information we use.
    if not tets:
        raise ValueError(f"{path}: no tetrahedra found")

    mesh = Mesh(coords, np.array(tets), check=False)

    gamma_groups, sigma_groups = {}, {}
    for phys, nodes in tris:
        name = names.get((2, phys), "")
        m = re.fullmatch(r"gamma(\d+)", name)
        if m:
            gamma_groups.setdefault(int(m.group(1)), []).append(nodes)
            continue
        m = re.fullmatch(r"sigma(\d+)", name)
        if m:
            sigma_groups.setdefault(int(m.group(1)), []).append(nodes)

    if gamma_groups:
        boundary_ids = np.full(mesh.nf, -1, dtype=int)
        expected = sorted(gamma_groups)
        if expected != list(range(len(expected))):
            raise ValueError(f"{path}: gamma labels must be consecutive "
                             f"from 0, got {expected}")
        for i, group in sorted(gamma_groups.items()):
            fids = mesh.face_id(np.array(group))
            boundary_ids[fids] = i
        mesh._build_boundary(boundary_ids)

    for j in sorted(sigma_groups):
        group = sigma_groups[j]
        fids = mesh.face_id(np.array(group))
        a, b, c = group[0]
        v = mesh.vertices
        ref = np.cross(v[b] - v[a], v[c] - v[a])
        mesh.add_cut(f"sigma{j}", fids, reference_direction=ref)
    mesh.validate()
    return mesh


def save_msh(mesh, path):
    lines = ["$MeshFormat", "2.2 0 8", "$EndMeshFormat"]

    phys = []
    for i in range(mesh.n_boundary_components):
        phys.append((2, 2 + i, f"gamma{i}"))
    sigma_base = 2 + mesh.n_boundary_components
    for j, cut in enumerate(mesh.cuts):
        phys.append((2, sigma_base + j, f"sigma{j + 1}"))
    phys.append((3, 1, "domain"))
    lines.append("$PhysicalNames")
    lines.append(str(len(phys)))
    for dim, pid, name in phys:
        lines.append(f'{dim} {pid} "{name}"')
    lines.append("$EndPhysicalNames")

    lines.append("$Nodes")
    lines.append(str(mesh.nv))
    for i, (x, y, z) in enumerate(mesh.vertices):
        lines.append(f"{i + 1} {float(x)!r} {float(y)!r} {float(z)!r}")
    lines.append("$EndNodes")

    elems = []
    eid = 1
    for i in range(mesh.n_boundary_components):
        for f in mesh.boundary_component_faces(i):
            a, b, c = mesh.faces[f] + 1
            elems.append(f"{eid} 2 2 {2 + i} {2 + i} {a} {b} {c}")
            eid += 1
    for j, cut in enumerate(mesh.cuts):
        pid = sigma_base + j
        for f, s in zip(cut.face_ids, cut.signs):
            a, b, c = mesh.faces[f] + 1
            if s < 0:
                b, c = c, b
            elems.append(f"{eid} 2 2 {pid} {pid} {a} {b} {c}")
            eid += 1
    for t in mesh.tets + 1:
        elems.append(f"{eid} 4 2 1 1 {t[0]} {t[1]} {t[2]} {t[3]}")
        eid += 1
    lines.append("$Elements")
    lines.append(str(len(elems)))
    lines.extend(elems)
    lines.append("$EndElements")
    with open(path, "w") as fh:
        fh.write("\n".join(lines) + "\n")
