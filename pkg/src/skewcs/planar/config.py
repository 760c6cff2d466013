"""Vortex configurations and the explicit background functions."""
from __future__ import annotations

import math
from dataclasses import dataclass, field, replace

import numpy as np


@dataclass(frozen=True)
class VortexConfig:
    n1: int
    n2: int
    points1: tuple = ()
    points2: tuple = ()
    eps: float = 1.0

    def __post_init__(self):
        p1 = tuple(tuple(float(c) for c in p) for p in self.points1)
        p2 = tuple(tuple(float(c) for c in p) for p in self.points2)
        object.__setattr__(self, "points1", p1)
        object.__setattr__(self, "points2", p2)
        if self.n1 < 0 or self.n2 < 0:
            raise ValueError("multiplicities must be non-negative")
        if len(p1) != self.n1 or len(p2) != self.n2:
            raise ValueError("number of points must match the multiplicities")
        for p in p1 + p2:
            if len(p) != 2 or not all(math.isfinite(c) for c in p):
                raise ValueError(f"bad vortex point {p}")
        if not 0.0 <= self.eps <= 1.0:
            raise ValueError("eps must lie in [0, 1]")

    def at(self, eps: float) -> "VortexConfig":
        return replace(self, eps=float(eps))

    def scaled_points(self, i: int) -> np.ndarray:
        pts = self.points1 if i == 1 else self.points2
        return self.eps * np.asarray(pts, dtype=float).reshape(-1, 2)

    def to_dict(self) -> dict:
        return {"n1": self.n1, "n2": self.n2, "points1": [list(p) for p in self.points1],
                "points2": [list(p) for p in self.points2], "eps": self.eps}

    @classmethod
    def from_dict(cls, d: dict) -> "VortexConfig":
        return cls(int(d["n1"]), int(d["n2"]), tuple(map(tuple, d["points1"])),
                   tuple(map(tuple, d["points2"])), float(d["eps"]))


@dataclass(frozen=True)
class Background:
    """h_i = 2 sum_j ln|x - eps p_ij| - (N_i + beta_i) ln(1 + |x|^2) and g_i = -Laplacian(h_i).

    e^{h_i} is evaluated as a product, so it is exactly 0 at a vortex point
    and no logarithm is ever taken there.
    """

    config: VortexConfig
    beta1: float
    beta2: float
    _pts: tuple = field(init=False, repr=False)

    def __post_init__(self):
        object.__setattr__(self, "_pts", (self.config.scaled_points(1), self.config.scaled_points(2)))

    def _c(self, i: int) -> float:
        return (self.config.n1 + self.beta1) if i == 1 else (self.config.n2 + self.beta2)

    def h(self, i: int, x, y):
        x, y = np.asarray(x, float), np.asarray(y, float)
        with np.errstate(divide="ignore"):
            out = -self._c(i) * np.log1p(x * x + y * y)
            for px, py in self._pts[i - 1]:
                out = out + np.log((x - px) ** 2 + (y - py) ** 2)
        return out

    def weight(self, i: int, x, y):
        """e^{h_i}."""
        x, y = np.asarray(x, float), np.asarray(y, float)
        out = (1.0 + x * x + y * y) ** (-self._c(i))
        for px, py in self._pts[i - 1]:
            out = out * ((x - px) ** 2 + (y - py) ** 2)
        return out

    def grad_h(self, i: int, x, y):
        x, y = np.asarray(x, float), np.asarray(y, float)
        s = -2.0 * self._c(i) / (1.0 + x * x + y * y)
        gx, gy = s * x, s * y
        for px, py in self._pts[i - 1]:
            d2 = (x - px) ** 2 + (y - py) ** 2
            gx = gx + 2.0 * (x - px) / d2
            gy = gy + 2.0 * (y - py) / d2
        return gx, gy

    def g(self, i: int, x, y):
        x, y = np.asarray(x, float), np.asarray(y, float)
        return 4.0 * self._c(i) / (1.0 + x * x + y * y) ** 2

    def smooth_shift_grad(self, i: int, x, y):
        """Gradient of (N_i + beta_i) ln(1 + |x|^2), the non-singular part of -h_i."""
        x, y = np.asarray(x, float), np.asarray(y, float)
        s = 2.0 * self._c(i) / (1.0 + x * x + y * y)
        return s * x, s * y
