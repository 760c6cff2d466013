"""Admissibility, exclusion curves, concentration mass relations and rescaling.

Rational inputs (int or Fraction) are handled in exact arithmetic, so
points lying exactly on an exclusion curve or on the admissibility
boundary are classified without rounding. Floats go through a tolerance.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction
from numbers import Rational
from typing import Optional, Sequence, Union

import numpy as np

Number = Union[int, float, Fraction]
FLOAT_TOL = 1e-9


def _rational(*xs) -> bool:
    return all(isinstance(x, Rational) for x in xs)


def parse_number(s: str) -> Number:
    """'3' -> 3, '5/2' -> Fraction(5, 2), '2.5' -> 2.5."""
    s = s.strip()
    if "/" in s:
        return Fraction(s)
    try:
        return int(s)
    except ValueError:
        return float(s)


def _is_zero(x, exact: bool, tol: float) -> bool:
    return x == 0 if exact else abs(x) <= tol


@dataclass(frozen=True)
class AdmissibilityReport:
    satisfies_css3: bool  # strict admissibility (beta1-1)(beta2-1) > (N1+1)(N2+1)
    on_boundary: bool  # (beta1-1)(beta2-1) == (N1+1)(N2+1)
    exclusion_value: Number
    exclusion_set: tuple
    on_curve: bool
    nearest_k: Optional[int]
    distance_to_curve: Optional[Number]
    predicted_S: Optional[Number]
    exact: bool

    def to_dict(self) -> dict:
        def enc(x):
            if isinstance(x, Fraction):
                return str(x) if x.denominator != 1 else int(x)
            return x

        return {
            "schema": "skewcs.admissibility/1",
            "satisfies_css3": self.satisfies_css3,
            "on_boundary": self.on_boundary,
            "exclusion_value": enc(self.exclusion_value),
            "exclusion_set": [enc(v) for v in self.exclusion_set],
            "on_curve": self.on_curve,
            "nearest_k": self.nearest_k,
            "distance_to_curve": enc(self.distance_to_curve),
            "predicted_S": enc(self.predicted_S),
            "exact": self.exact,
        }


def exclusion_set(n1: int, n2: int) -> tuple:
    return tuple(Fraction(k - 1, k) for k in range(2, max(n1, n2) + 1))


def exclusion_check(beta1: Number, beta2: Number, n1: int, n2: int, tol: float = FLOAT_TOL) -> AdmissibilityReport:
    """Admissibility product test, exclusion-curve membership and the predicted |S|.

    exclusion value  N1/(beta1+N1) + N2/(beta2+N2), compared with (k-1)/k, k = 2..max(N1, N2);
    |S| = (beta1+N1)(beta2+N2) / (beta1 beta2 - N1 N2) whenever the denominator is positive.
    """
    if not (beta1 > 1 and beta2 > 1):
        raise ValueError("decay rates must exceed 1")
    if n1 < 0 or n2 < 0 or int(n1) != n1 or int(n2) != n2:
        raise ValueError("multiplicities must be non-negative integers")
    n1, n2 = int(n1), int(n2)
    exact = _rational(beta1, beta2)
    if exact:
        beta1, beta2 = Fraction(beta1), Fraction(beta2)
    lhs = (beta1 - 1) * (beta2 - 1)
    rhs = (n1 + 1) * (n2 + 1)
    boundary = _is_zero(lhs - rhs, exact, tol)
    satisfies = (lhs > rhs) and not boundary
    value = n1 / (beta1 + n1) + n2 / (beta2 + n2) if not exact else Fraction(n1) / (beta1 + n1) + Fraction(n2) / (beta2 + n2)
    ks = exclusion_set(n1, n2)
    nearest = dist = None
    on_curve = False
    if ks:
        dists = [abs(value - (c if exact else float(c))) for c in ks]
        i = min(range(len(ks)), key=lambda j: (dists[j], j))
        nearest, dist = i + 2, dists[i]
        on_curve = _is_zero(dist, exact, tol)
    denom = beta1 * beta2 - n1 * n2
    S = (beta1 + n1) * (beta2 + n2) / denom if denom > 0 else None
    return AdmissibilityReport(satisfies, boundary, value, ks, on_curve, nearest, dist, S, exact)


@dataclass(frozen=True)
class MassProfile:
    M: Number
    N: Number
    S_count: int
    residual_origin: Number  # MN(|S|-1) - 2 N N1 - 2 M N2
    residual_infinity: Number  # MN(|S|+1) - 2 beta1 N - 2 beta2 M
    residual_total: tuple  # (|S| M - 2(beta1+N1), |S| N - 2(beta2+N2))
    consistent: bool
    local_bound: Number  # MN - 2M - 2N, non-negative for a blow-up profile
    degenerate: bool  # local_bound == 0
    bounds_ok: bool  # M > 2, N > 2, M + N >= 8
    exact: bool


def mass_relations_check(M: Number, N: Number, S_count: int, n1: int, n2: int,
                         beta1: Number, beta2: Number, tol: float = FLOAT_TOL) -> MassProfile:
    """Residuals of the three relations between concentration masses and decay data.

    No concentration at the origin is assumed (origin masses zero).
    """
    if not (M > 0 and N > 0 and S_count > 0):
        raise ValueError("masses and the number of blow-up points must be positive")
    exact = _rational(M, N, beta1, beta2)
    if exact:
        M, N, beta1, beta2 = map(Fraction, (M, N, beta1, beta2))
    S = S_count
    r_o = M * N * (S - 1) - 2 * N * n1 - 2 * M * n2
    r_i = M * N * (S + 1) - 2 * beta1 * N - 2 * beta2 * M
    r_t = (S * M - 2 * (beta1 + n1), S * N - 2 * (beta2 + n2))
    ok = all(_is_zero(r, exact, tol) for r in (r_o, r_i, *r_t))
    lb = M * N - 2 * M - 2 * N
    degenerate = _is_zero(lb, exact, tol)
    bounds = M > 2 and N > 2 and (M + N >= 8 or _is_zero(M + N - 8, exact, tol))
    return MassProfile(M, N, S, r_o, r_i, r_t, ok, lb, degenerate, bounds, exact)


def masses_from_total(beta1: Number, beta2: Number, n1: int, n2: int, S_count: int) -> tuple:
    """M = 2(beta1+N1)/|S|, N = 2(beta2+N2)/|S| (exact for rational input)."""
    if _rational(beta1, beta2):
        return Fraction(2 * (Fraction(beta1) + n1), S_count), Fraction(2 * (Fraction(beta2) + n2), S_count)
    return 2 * (beta1 + n1) / S_count, 2 * (beta2 + n2) / S_count


def on_curve_betas(n1: int, n2: int, k: int, beta1: Fraction) -> Optional[Fraction]:
    """beta2 placing (beta1, beta2) on the k-th exclusion curve, if positive and finite."""
    if n2 == 0:
        return None
    target = Fraction(k - 1, k) - Fraction(n1) / (Fraction(beta1) + n1)
    if target <= 0:
        return None
    # n2 / (beta2 + n2) = target
    return Fraction(n2) / target - n2


# ---------------------------------------------------------------------------
# rescaling


@dataclass(frozen=True, eq=False)
class RescaledProfile:
    """w_i(rho) = u_i(rho / s) - 2 ln s for a radial profile, with total scale s."""

    t: np.ndarray
    w1: np.ndarray
    w2: np.ndarray
    scale: float

    @property
    def radii(self) -> np.ndarray:
        return np.exp(self.t)

    def at(self, r) -> tuple[np.ndarray, np.ndarray]:
        from scipy.interpolate import PchipInterpolator

        t = np.log(np.asarray(r, dtype=float))
        if np.any(t < self.t[0] - 1e-12) or np.any(t > self.t[-1] + 1e-12):
            raise ValueError("radius outside the resolved range")
        t = np.clip(t, self.t[0], self.t[-1])
        return PchipInterpolator(self.t, self.w1)(t), PchipInterpolator(self.t, self.w2)(t)


@dataclass(frozen=True, eq=False)
class RescaledPlanar:
    x: np.ndarray
    y: np.ndarray
    w1: np.ndarray
    w2: np.ndarray
    scale: float


def rescale_profile(sol, r_n: float, window: Optional[Sequence] = None):
    """w_i(x) = u_i(x / r_n) - 2 ln r_n.

    Radial solutions (and already rescaled profiles, so that rescalings
    compose) give a :class:`RescaledProfile`; planar solutions are sampled on
    ``window`` (an (m, 2) array of points, default a 33 x 33 grid on [-1, 1]^2).
    """
    from .planar.solver import PlanarSolution
    from .radial import RadialSolution

    if not (r_n > 0 and math.isfinite(r_n)):
        raise ValueError("r_n must be positive")
    s = math.log(r_n)
    if isinstance(sol, (RadialSolution, RescaledProfile)):
        t = np.asarray(sol.t, dtype=float)
        if not (t[0] <= -s <= t[-1]):
            raise ValueError(f"r_n = {r_n:g} outside the resolved range")
        w1 = np.asarray(sol.u1 if isinstance(sol, RadialSolution) else sol.w1) - 2.0 * s
        w2 = np.asarray(sol.u2 if isinstance(sol, RadialSolution) else sol.w2) - 2.0 * s
        base = 1.0 if isinstance(sol, RadialSolution) else sol.scale
        return RescaledProfile(t + s, w1, w2, base * r_n)
    if isinstance(sol, PlanarSolution):
        return _rescale_planar(sol, r_n, window)
    raise TypeError(f"cannot rescale {type(sol).__name__}")


def _rescale_planar(sol, r_n, window):
    from scipy.interpolate import RectBivariateSpline

    g = sol.grid
    if window is None:
        lin = np.linspace(-1.0, 1.0, 33)
        X, Y = np.meshgrid(lin, lin, indexing="ij")
        window = np.column_stack([X.ravel(), Y.ravel()])
    pts = np.asarray(window, dtype=float).reshape(-1, 2)
    src = pts / r_n
    # the cubic stencil reaches two nodes out; keep it off the zero fill outside the disk
    if np.any(np.hypot(src[:, 0], src[:, 1]) > g.radius - 3 * g.h):
        raise ValueError(f"r_n = {r_n:g} maps the window outside the grid")
    c = (g.n - 1) // 2
    axis = (np.arange(g.n) - c) * g.h
    bg = sol.background()
    out = []
    for i, v in ((1, sol.v1), (2, sol.v2)):
        sq = g.to_square(np.asarray(v, dtype=float), fill=0.0)
        vi = RectBivariateSpline(axis, axis, sq, kx=3, ky=3, s=0).ev(src[:, 0], src[:, 1])
        out.append(vi + bg.h(i, src[:, 0], src[:, 1]) - 2.0 * math.log(r_n))
    return RescaledPlanar(pts[:, 0], pts[:, 1], out[0], out[1], r_n)
