"""Symmetric positive definite matrix coefficients.

A coefficient is evaluated pointwise as a 3x3 SPD matrix.  Three storage
kinds are supported: a single constant matrix, one matrix per cell, and a
callable of position.  Ellipticity bounds (the extreme eigenvalues over a
point sample) are computed on demand and validated to be positive.
"""

from dataclasses import dataclass, field

import numpy as np


@dataclass
class CoefficientField:
    """Pointwise 3x3 SPD coefficient.

    kind: "constant", "per_cell" or "callable".
    data: (3,3) matrix, (nt,3,3) array, or callable mapping (m,3) points
          to (m,3,3) matrices.
    """

    kind: str
    data: object
    name: str = "coefficient"
    _bounds: tuple | None = field(default=None, repr=False, compare=False)

    def __post_init__(self):
        if self.kind not in ("constant", "per_cell", "callable"):
            raise ValueError(f"unknown coefficient kind {self.kind!r}")
        if self.kind in ("constant", "per_cell"):
            self.data = np.asarray(self.data, dtype=float)
            if self.kind == "constant" and self.data.shape != (3, 3):
                raise ValueError("constant coefficient must be a 3x3 matrix")
            if self.kind == "per_cell" and self.data.ndim != 3:
                raise ValueError("per-cell coefficient must be (nt,3,3)")

    @staticmethod
    def identity():
        return CoefficientField("constant", np.eye(3), name="identity")

    @staticmethod
    def diagonal(a, b, c, name=None):
        return CoefficientField("constant", np.diag([a, b, c]),
                                name=name or f"diag({a},{b},{c})")

    @staticmethod
    def from_callable(fn, name="callable"):
        return CoefficientField("callable", fn, name=name)

    @staticmethod
    def random_spd(rng, low=0.5, high=2.0, name=None):
        """Constant SPD matrix Q diag(d) Q^T with eigenvalues in [low, high]."""
        q, _ = np.linalg.qr(rng.standard_normal((3, 3)))
        d = rng.uniform(low, high, size=3)
        mat = q @ np.diag(d) @ q.T
        mat = 0.5 * (mat + mat.T)
        return CoefficientField("constant", mat, name=name or "random_spd")

    @property
    def is_identity(self):
        return self.kind == "constant" and np.array_equal(self.data, np.eye(3))

    def at(self, points, cells=None):
        """Evaluate at physical points.

        points: (m,3).  cells: (m,) cell index of each point, required for
        the per-cell kind.  Returns (m,3,3).
        """
        points = np.asarray(points, dtype=float)
        m = points.shape[0]
        if self.kind == "constant":
            return np.broadcast_to(self.data, (m, 3, 3)).copy()
        if self.kind == "per_cell":
            if cells is None:
                raise ValueError("per-cell coefficient needs cell indices")
            return self.data[np.asarray(cells)]
        vals = np.asarray(self.data(points), dtype=float)
        if vals.shape != (m, 3, 3):
            raise ValueError("callable coefficient returned wrong shape")
        return vals

    def inverse_at(self, points, cells=None):
        return np.linalg.inv(self.at(points, cells))

    def ellipticity_bounds(self, points, cells=None):
        """(m, M): extreme eigenvalues over the sample.  Raises if not SPD."""
        vals = self.at(points, cells)
        sym_err = np.max(np.abs(vals - np.transpose(vals, (0, 2, 1))))
        if sym_err > 1e-10 * (1.0 + np.max(np.abs(vals))):
            raise ValueError(f"coefficient {self.name!r} is not symmetric")
        eigs = np.linalg.eigvalsh(0.5 * (vals + np.transpose(vals, (0, 2, 1))))
        lo, hi = float(eigs.min()), float(eigs.max())
        if lo <= 0.0:
            raise ValueError(
                f"coefficient {self.name!r} is not positive definite "
                f"(min eigenvalue {lo:.3e})")
        self._bounds = (lo, hi)
        return lo, hi
