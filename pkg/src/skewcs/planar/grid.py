"""Uniform Cartesian nodes restricted to a disk, with a finite-volume Laplacian.

Each node owns the square cell of side h around it; the domain is the
union of cells whose node lies in the closed disk (a staircase). Faces
between two active cells give the usual 5-point stencil. Faces on the
staircase carry a prescribed normal derivative; the resulting discrete
operator conserves flux exactly.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
import scipy.sparse as sp

_DIRS = ((1, 0), (-1, 0), (0, 1), (0, -1))


@dataclass(frozen=True, eq=False)
class DiskGrid:
    radius: float
    n: int  # nodes per side of the bounding square, odd so the origin is a node
    h: float = field(init=False)
    ix: np.ndarray = field(init=False, repr=False)
    iy: np.ndarray = field(init=False, repr=False)
    x: np.ndarray = field(init=False, repr=False)
    y: np.ndarray = field(init=False, repr=False)
    index: np.ndarray = field(init=False, repr=False)  # n x n, -1 outside
    laplacian: sp.csr_matrix = field(init=False, repr=False)
    neighbors: np.ndarray = field(init=False, repr=False)  # 4 x size, own index where no neighbor
    # staircase faces: owning node, outward normal, face midpoint
    face_node: np.ndarray = field(init=False, repr=False)
    face_normal: np.ndarray = field(init=False, repr=False)
    face_mid: np.ndarray = field(init=False, repr=False)

    def __post_init__(self):
        if self.n < 5 or self.n % 2 == 0:
            raise ValueError("n must be odd and at least 5")
        if not self.radius > 0:
            raise ValueError("radius must be positive")
        h = 2.0 * self.radius / (self.n - 1)
        c = (self.n - 1) // 2
        I, J = np.meshgrid(np.arange(self.n), np.arange(self.n), indexing="ij")
        X, Y = (I - c) * h, (J - c) * h
        # tolerance so that nodes exactly on the circle are kept deterministically
        inside = X * X + Y * Y <= self.radius**2 * (1 + 1e-12)
        index = -np.ones((self.n, self.n), dtype=np.int64)
        ii, jj = np.nonzero(inside)  # row-major order
        index[ii, jj] = np.arange(ii.size)
        rows, cols, vals = [], [], []
        fn, fnorm, fmid = [], [], []
        diag = np.zeros(ii.size)
        nbrs = []
        for dx, dy in _DIRS:
            ni, nj = ii + dx, jj + dy
            ok = (ni >= 0) & (ni < self.n) & (nj >= 0) & (nj < self.n)
            nb = np.full(ii.size, -1, dtype=np.int64)
            nb[ok] = index[ni[ok], nj[ok]]
            act = nb >= 0
            nbrs.append(np.where(act, nb, np.arange(ii.size)))
            k = np.nonzero(act)[0]
            rows.append(k)
            cols.append(nb[act])
            vals.append(np.ones(k.size))
            diag[k] -= 1.0
            kb = np.nonzero(~act)[0]
            fn.append(kb)
            fnorm.append(np.tile([dx, dy], (kb.size, 1)).astype(float))
            fmid.append(np.column_stack([X[ii[kb], jj[kb]] + 0.5 * h * dx, Y[ii[kb], jj[kb]] + 0.5 * h * dy]))
        m = ii.size
        rows.append(np.arange(m))
        cols.append(np.arange(m))
        vals.append(diag)
        L = sp.csr_matrix((np.concatenate(vals) / h**2, (np.concatenate(rows), np.concatenate(cols))), shape=(m, m))
        L.sort_indices()
        object.__setattr__(self, "h", h)
        object.__setattr__(self, "ix", ii)
        object.__setattr__(self, "iy", jj)
        object.__setattr__(self, "x", X[ii, jj])
        object.__setattr__(self, "y", Y[ii, jj])
        object.__setattr__(self, "index", index)
        object.__setattr__(self, "laplacian", L)
        object.__setattr__(self, "neighbors", np.array(nbrs))
        order = np.argsort(np.concatenate(fn), kind="stable")
        object.__setattr__(self, "face_node", np.concatenate(fn)[order])
        object.__setattr__(self, "face_normal", np.concatenate(fnorm)[order])
        object.__setattr__(self, "face_mid", np.concatenate(fmid)[order])

    @classmethod
    def with_spacing(cls, radius: float, h: float) -> "DiskGrid":
        n = 2 * int(math.ceil(radius / h)) + 1
        return cls(radius, n)

    @property
    def size(self) -> int:
        return self.x.size

    @property
    def cell_area(self) -> float:
        return self.h * self.h

    def boundary_source(self, flux_density: np.ndarray) -> np.ndarray:
        """Per-node contribution of prescribed normal derivatives on staircase faces."""
        out = np.zeros(self.size)
        np.add.at(out, self.face_node, flux_density / self.h)
        return out

    def apply_laplacian(self, v: np.ndarray) -> np.ndarray:
        """Same operator as ``laplacian`` in the dtype of ``v`` (sum of differences)."""
        out = np.zeros_like(v)
        for nb in self.neighbors:
            out += v[nb] - v
        return out / (self.h * self.h)

    def integrate(self, f: np.ndarray) -> float:
        """Midpoint rule over the staircase domain."""
        return float(np.sum(f) * self.h * self.h)

    def to_square(self, f: np.ndarray, fill=np.nan) -> np.ndarray:
        out = np.full((self.n, self.n), fill, dtype=float)
        out[self.ix, self.iy] = f
        return out

    def node_at(self, px: float, py: float) -> tuple[int, int]:
        c = (self.n - 1) // 2
        return int(round(px / self.h)) + c, int(round(py / self.h)) + c

    def cells_from_boundary(self, px: float, py: float) -> float:
        return (self.radius - math.hypot(px, py)) / self.h

    def restrict(self, coarse: "DiskGrid", f: np.ndarray) -> np.ndarray:
        """Injection onto a grid with twice the spacing (shared nodes)."""
        if coarse.n * 2 - 1 != self.n or coarse.radius != self.radius:
            raise ValueError("coarse grid must have exactly twice the spacing")
        sq = self.to_square(f)
        return sq[coarse.ix * 2, coarse.iy * 2]

    def interpolate_gradient(self, f: np.ndarray, px: float, py: float) -> tuple[float, float]:
        """Gradient at (px, py) of the biquadratic interpolant on the 3x3 nodes around it."""
        i, j = self.node_at(px, py)
        if np.any(self.index[i - 1 : i + 2, j - 1 : j + 2] < 0) or i < 1 or j < 1:
            raise ValueError("stencil leaves the grid")
        c = (self.n - 1) // 2
        vals = self.to_square(f)[i - 1 : i + 2, j - 1 : j + 2]
        sx = (px - (i - c) * self.h) / self.h
        sy = (py - (j - c) * self.h) / self.h

        def basis(s):
            return np.array([0.5 * s * (s - 1), 1 - s * s, 0.5 * s * (s + 1)])

        def dbasis(s):
            return np.array([s - 0.5, -2 * s, s + 0.5])

        gx = float(dbasis(sx) @ vals @ basis(sy)) / self.h
        gy = float(basis(sx) @ vals @ dbasis(sy)) / self.h
        return gx, gy
