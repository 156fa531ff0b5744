"""Quadrature rules on reference simplices.

All rules are given in barycentric coordinates so they can be mapped to an
arbitrary simplex by convex combination of its vertices.  Weights sum to one;
the physical measure (length, area or volume) multiplies the weighted sum.
"""

import numpy as np

# Two-point Gauss rule on a segment, exact for cubics.
_G = 0.5 / np.sqrt(3.0)
EDGE_POINTS = np.array([
    [0.5 + _G, 0.5 - _G],
    [0.5 - _G, 0.5 + _G],
])
EDGE_WEIGHTS = np.array([0.5, 0.5])

# Four-point rule on a triangle, exact for cubics (one negative weight).
TRI_POINTS = np.array([
    [1.0 / 3.0, 1.0 / 3.0, 1.0 / 3.0],
    [0.6, 0.2, 0.2],
    [0.2, 0.6, 0.2],
    [0.2, 0.2, 0.6],
])
TRI_WEIGHTS = np.array([-27.0 / 48.0, 25.0 / 48.0, 25.0 / 48.0, 25.0 / 48.0])

# Three-point rule on a triangle, exact for quadratics, all weights positive.
TRI_POINTS_DEG2 = np.array([
    [2.0 / 3.0, 1.0 / 6.0, 1.0 / 6.0],
    [1.0 / 6.0, 2.0 / 3.0, 1.0 / 6.0],
    [1.0 / 6.0, 1.0 / 6.0, 2.0 / 3.0],
])
TRI_WEIGHTS_DEG2 = np.array([1.0 / 3.0, 1.0 / 3.0, 1.0 / 3.0])

# Four-point rule on a tetrahedron, exact for quadratics.
_A = 0.5854101966249685
_B = 0.1381966011250105
TET_POINTS_DEG2 = np.array([
    [_A, _B, _B, _B],
    [_B, _A, _B, _B],
    [_B, _B, _A, _B],
    [_B, _B, _B, _A],
])
TET_WEIGHTS_DEG2 = np.array([0.25, 0.25, 0.25, 0.25])

# Five-point rule on a tetrahedron, exact for cubics (negative centroid weight).
TET_POINTS_DEG3 = np.array([
    [0.25, 0.25, 0.25, 0.25],
    [0.5, 1.0 / 6.0, 1.0 / 6.0, 1.0 / 6.0],
    [1.0 / 6.0, 0.5, 1.0 / 6.0, 1.0 / 6.0],
    [1.0 / 6.0, 1.0 / 6.0, 0.5, 1.0 / 6.0],
    [1.0 / 6.0, 1.0 / 6.0, 1.0 / 6.0, 0.5],
])
TET_WEIGHTS_DEG3 = np.array([-0.8, 0.45, 0.45, 0.45, 0.45])


def map_points(bary, simplex_coords):
    """Map barycentric points to physical coordinates.

    bary: (nq, k) barycentric weights.
    simplex_coords: (..., k, 3) vertex coordinates of one or many simplices.
    Returns (..., nq, 3).
    """
    return np.einsum("qk,...kd->...qd", bary, simplex_coords)
