"""Shooting on the origin constants (a1, a2) for prescribed decay rates.

In the (a1, a2) plane the non-topological trajectories form a thin band
between a region where u1 crosses zero first and one where u2 does; a
regular grid mostly misses it. Targets are therefore located in two
stages: a band search (bisect a2 on the terminal decay direction, then a1
on the decay magnitude) supplies the initial iterate for a damped Newton
iteration with a central-difference Jacobian.
"""
from __future__ import annotations

import csv
import io
import logging
import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from typing import Iterable, Optional, Sequence

import numpy as np
from scipy.optimize import brentq

from .radial import (
    MixedUndetermined,
    NonTopological,
    NumericalFailure,
    Outcome,
    RadialParams,
    RadialSolution,
    ShootingParams,
    outcome_from_tag,
    outcome_tag,
    solve_radial,
    tilt,
)

log = logging.getLogger(__name__)

ATLAS_COLUMNS = ("a1", "a2", "outcome", "beta1", "beta2")


@dataclass(frozen=True)
class DecayPair:
    beta1: float
    beta2: float

    def __post_init__(self):
        if not (self.beta1 > 1.0 and self.beta2 > 1.0):
            raise ValueError(f"decay rates must exceed 1, got ({self.beta1}, {self.beta2})")

    def as_tuple(self) -> tuple[float, float]:
        return (self.beta1, self.beta2)

    def admissible(self, n1: int, n2: int) -> bool:
        return (self.beta1 - 1) * (self.beta2 - 1) > (n1 + 1) * (n2 + 1)


@dataclass(frozen=True)
class AtlasCell:
    a1: float
    a2: float
    outcome: Outcome

    @property
    def betas(self) -> tuple[float, float]:
        if isinstance(self.outcome, NonTopological):
            return (self.outcome.beta1, self.outcome.beta2)
        return (math.nan, math.nan)


class ShootingFailure(RuntimeError):
    """Target not reached; ``best`` holds the best iterate seen (or None)."""

    def __init__(self, message: str, best: Optional[ShootingParams] = None,
                 best_solution: Optional[RadialSolution] = None, history: Optional[list] = None):
        super().__init__(message)
        self.best = best
        self.best_solution = best_solution
        self.history = history or []


# ---------------------------------------------------------------------------
# single trajectories


def shoot(shoot_params: ShootingParams, params: RadialParams, tol: float = 1e-10) -> tuple[Outcome, RadialSolution]:
    """Integrate the trajectory launched by ``shoot_params`` and classify it."""
    sol = solve_radial(params, shoot_params, tol=tol)
    return sol.outcome, sol


def _betas(sol: RadialSolution) -> Optional[np.ndarray]:
    if isinstance(sol.outcome, NonTopological):
        return np.array([sol.outcome.beta1, sol.outcome.beta2])
    return None


# ---------------------------------------------------------------------------
# band search


@dataclass
class BandPoint:
    a1: float
    a2: float
    solution: Optional[RadialSolution]

    @property
    def betas(self) -> Optional[np.ndarray]:
        return None if self.solution is None else _betas(self.solution)


def _band_crossing(a1: float, theta: float, params: RadialParams, tol: float,
                   a2_start: Optional[float] = None, max_expand: int = 40) -> BandPoint:
    """Find a2 where the terminal decay direction of (a1, a2) equals ``theta``.

    The direction decreases monotonically in a2 across the band, from +pi
    (u1 blows up) to -pi (u2 blows up).
    """
    s1, s2 = params.strengths
    cache: dict = {}

    def run(a2):
        if a2 not in cache:
            cache[a2] = solve_radial(params, ShootingParams(a1, a2), tol=tol)
        return cache[a2]

    def g(a2):
        return tilt(run(a2)) - theta

    a = a1 * (s2 + 1.0) / (s1 + 1.0) if a2_start is None else a2_start
    ga = g(a)
    step = 0.5
    b, gb = a, ga
    for _ in range(max_expand):
        b = a + step if ga > 0 else a - step
        gb = g(b)
        if (gb > 0) != (ga > 0):
            break
        a, ga = b, gb
        step *= 2.0
    else:
        return BandPoint(a1, math.nan, None)
    lo, hi = (a, b) if a < b else (b, a)
    root = brentq(g, lo, hi, xtol=1e-13, rtol=1e-14, maxiter=200)
    sol = run(root)
    if not isinstance(sol.outcome, NonTopological):
        # the crossing sits on the discontinuity between the two blow-up sides
        return BandPoint(a1, root, None)
    return BandPoint(a1, root, sol)


def band_search(target: DecayPair, params: RadialParams, tol: float = 1e-9,
                a1_seed: Optional[float] = None, a1_xtol: float = 1e-4) -> BandPoint:
    """Coarse location of the target on the non-topological band.

    Along the curve of fixed decay direction the decay magnitude grows
    with a1 and the band ends at a finite a1 (beyond it no non-topological
    crossing exists, which is treated as "magnitude too large").
    """
    b1s, b2s = target.as_tuple()
    theta = math.atan2(b2s - 1.0, b1s - 1.0)
    scale = math.log(math.hypot(b1s - 1.0, b2s - 1.0))
    points: dict = {}

    def point(a1):
        if a1 not in points:
            prev = [p for p in points.values() if p.solution is not None]
            start = None
            if prev:
                near = min(prev, key=lambda p: abs(p.a1 - a1))
                start = near.a2 + (a1 - near.a1) * (params.strengths[1] + 1) / (params.strengths[0] + 1)
            points[a1] = _band_crossing(a1, theta, params, tol, a2_start=start)
        return points[a1]

    def G(a1):
        p = point(a1)
        if p.betas is None:
            return 10.0
        b = p.betas
        return math.log(math.hypot(b[0] - 1.0, b[1] - 1.0)) - scale

    a = -2.0 * (b1s - 1.0) if a1_seed is None else a1_seed
    ga = G(a)
    step = 1.0
    for _ in range(40):
        b = a + step if ga < 0 else a - step
        gb = G(b)
        if (gb > 0) != (ga > 0):
            break
        a, ga = b, gb
        step *= 2.0
    else:
        raise ShootingFailure(f"no bracket for target {target.as_tuple()} along the band")
    lo, hi = (a, b) if a < b else (b, a)
    glo, ghi = G(lo), G(hi)
    # bisection until the bracket is tight and its low end is a genuine band point
    for _ in range(200):
        if hi - lo < a1_xtol:
            break
        mid = 0.5 * (lo + hi)
        gm = G(mid)
        if gm == 10.0 or (gm > 0) == (ghi > 0):
            hi, ghi = mid, gm
        else:
            lo, glo = mid, gm
        if ghi != 10.0 and glo != 10.0:
            # both ends on the band: finish with a smooth bracketing solve
            root = brentq(G, lo, hi, xtol=a1_xtol, maxiter=100)
            lo = hi = root
            break
    cands = [point(x) for x in {lo, hi}]
    cands = [p for p in cands if p.solution is not None]
    if not cands:
        raise ShootingFailure(f"band search for {target.as_tuple()} ended off the band")
    return min(cands, key=lambda p: float(np.max(np.abs(p.betas - np.array(target.as_tuple())))))


# ---------------------------------------------------------------------------
# Newton polish


def _sp(a) -> ShootingParams:
    return ShootingParams(float(a[0]), float(a[1]))


def _fd_step(a: float) -> float:
    return max(1e-5, 1e-5 * abs(a))


def _jacobian(a: np.ndarray, params: RadialParams, tol: float, f0: np.ndarray) -> Optional[np.ndarray]:
    J = np.empty((2, 2))
    for k in range(2):
        h = _fd_step(a[k])
        cols = []
        for sgn in (+1.0, -1.0):
            ak = a.copy()
            ak[k] += sgn * h
            b = _betas(solve_radial(params, _sp(ak), tol=tol))
            cols.append(b)
        if cols[0] is not None and cols[1] is not None:
            J[:, k] = (cols[0] - cols[1]) / (2 * h)
        elif cols[0] is not None:
            J[:, k] = (cols[0] - f0) / h
        elif cols[1] is not None:
            J[:, k] = (f0 - cols[1]) / h
        else:
            return None
    return J


@dataclass
class NewtonTrace:
    iterates: list = field(default_factory=list)
    residuals: list = field(default_factory=list)
    steps: list = field(default_factory=list)


def solve_for_target(
    target: DecayPair,
    params: RadialParams,
    tol: float = 1e-9,
    *,
    integ_tol: float = 1e-11,
    guess: Optional[ShootingParams] = None,
    atlas: Optional[Sequence[AtlasCell]] = None,
    symmetric: bool = False,
    max_iter: int = 40,
) -> tuple[ShootingParams, RadialSolution]:
    """Shooting constants whose trajectory decays at rates ``target``.

    Initial iterate: ``guess`` if given, else the nearest non-topological
    atlas cell (by decay distance, ties broken lexicographically in (a1, a2)),
    else the band search. Damped Newton with Armijo backtracking on |F|^2
    (factor 1/2, floor 2^-10); a trial point off the non-topological set is
    treated as a failed backtracking step.
    """
    if not tol > 0:
        raise ValueError("tol must be positive")
    if not target.admissible(params.n1, params.n2):
        log.warning("target %s violates (b1-1)(b2-1) > (N1+1)(N2+1) for N=(%d,%d)",
                    target.as_tuple(), params.n1, params.n2)
    if symmetric:
        return _solve_symmetric(target, params, tol, integ_tol, guess, max_iter)
    bstar = np.array(target.as_tuple())

    if guess is None and atlas:
        guess = nearest_cell(atlas, target)
    if guess is None:
        bp = band_search(target, params, tol=max(integ_tol, 1e-9))
        guess = ShootingParams(float(bp.a1), float(bp.a2))

    a = np.array([guess.a1, guess.a2], dtype=float)
    sol = solve_radial(params, _sp(a), tol=integ_tol)
    b = _betas(sol)
    if b is None:
        raise ShootingFailure("initial iterate is not non-topological", _sp(a), sol)
    F = b - bstar
    phi = float(F @ F)
    trace = NewtonTrace([a.copy()], [float(np.max(np.abs(F)))])
    best = (phi, a.copy(), sol)
    for _ in range(max_iter):
        if np.max(np.abs(F)) < tol:
            return _sp(a), _annotate(sol, target, trace)
        J = _jacobian(a, params, integ_tol, b)
        if J is None:
            break
        try:
            delta = -np.linalg.solve(J, F)
        except np.linalg.LinAlgError:
            delta = -np.linalg.lstsq(J, F, rcond=None)[0]
        lam = 1.0
        accepted = False
        while lam >= 2.0**-10:
            trial = a + lam * delta
            tsol = solve_radial(params, _sp(trial), tol=integ_tol)
            tb = _betas(tsol)
            if tb is not None:
                tF = tb - bstar
                tphi = float(tF @ tF)
                if tphi <= (1.0 - 2e-4 * lam) * phi:
                    a, sol, b, F, phi = trial, tsol, tb, tF, tphi
                    accepted = True
                    break
            lam *= 0.5
        trace.iterates.append(a.copy())
        trace.residuals.append(float(np.max(np.abs(F))))
        trace.steps.append(lam if accepted else 0.0)
        if phi < best[0]:
            best = (phi, a.copy(), sol)
        if not accepted:
            # damping floor hit; accept the floor step only if it stays on the band
            if np.max(np.abs(F)) < tol:
                break
            raise ShootingFailure("damping floor reached without decrease", _sp(best[1]),
                                  best[2], trace.residuals)
    if np.max(np.abs(F)) < tol:
        return _sp(a), _annotate(sol, target, trace)
    raise ShootingFailure(f"no convergence in {max_iter} iterations (|F| = {np.max(np.abs(F)):.3e})",
                          _sp(best[1]), best[2], trace.residuals)


def _solve_symmetric(target, params, tol, integ_tol, guess, max_iter):
    if params.n1 != params.n2 or target.beta1 != target.beta2:
        raise ValueError("symmetric solve needs N1 = N2 and beta1 = beta2")
    bstar = target.beta1

    def f(a):
        b = _betas(solve_radial(params, ShootingParams(a, a), tol=integ_tol))
        return math.nan if b is None else b[0] - bstar

    if guess is None:
        bp = band_search(target, params, tol=max(integ_tol, 1e-9))
        a = float(0.5 * (bp.a1 + bp.a2))
    else:
        a = guess.a1
    fa = f(a)
    trace = NewtonTrace([np.array([a, a])], [abs(fa)])
    for _ in range(max_iter):
        if abs(fa) < tol:
            break
        h = _fd_step(a)
        d = (f(a + h) - f(a - h)) / (2 * h)
        step = -fa / d
        lam = 1.0
        while lam >= 2.0**-10:
            ft = f(a + lam * step)
            if math.isfinite(ft) and abs(ft) < (1 - 1e-4 * lam) * abs(fa):
                a, fa = a + lam * step, ft
                break
            lam *= 0.5
        else:
            raise ShootingFailure("symmetric solve stalled", ShootingParams(a, a))
        trace.iterates.append(np.array([a, a]))
        trace.residuals.append(abs(fa))
    if not abs(fa) < tol:
        raise ShootingFailure("symmetric solve did not converge", ShootingParams(a, a))
    sp = ShootingParams(a, a)
    sol = solve_radial(params, sp, tol=integ_tol)
    return sp, _annotate(sol, target, trace)


def _annotate(sol: RadialSolution, target: DecayPair, trace: NewtonTrace) -> RadialSolution:
    sol.meta.update(
        target=target.as_tuple(),
        admissible=target.admissible(sol.params.n1, sol.params.n2),
        newton_residuals=list(trace.residuals),
    )
    return sol


def nearest_cell(atlas: Iterable[AtlasCell], target: DecayPair) -> Optional[ShootingParams]:
    bstar = np.array(target.as_tuple())
    cands = [c for c in atlas if isinstance(c.outcome, NonTopological)]
    if not cands:
        return None
    best = min(cands, key=lambda c: (float(np.linalg.norm(np.array(c.betas) - bstar)), c.a1, c.a2))
    return ShootingParams(best.a1, best.a2)


# ---------------------------------------------------------------------------
# atlases


def _cell(args) -> AtlasCell:
    a1, a2, params, tol = args
    try:
        outcome, _ = shoot(ShootingParams(a1, a2), params, tol)
    except Exception as exc:  # recorded in place, one cell never aborts a scan
        outcome = NumericalFailure(f"exception {type(exc).__name__}")
    return AtlasCell(a1, a2, outcome)


def scan_region(a1_range: tuple[float, float], a2_range: tuple[float, float], steps: int | tuple[int, int],
                params: RadialParams, tol: float = 1e-9, workers: int = 1) -> list[AtlasCell]:
    """Outcomes on a row-major (a1 outer, a2 inner) grid including the corners."""
    n1, n2 = (steps, steps) if isinstance(steps, int) else steps
    if n1 < 2 or n2 < 2:
        raise ValueError("steps must be at least 2")
    if not all(math.isfinite(v) for v in (*a1_range, *a2_range)):
        raise ValueError("ranges must be finite")
    g1 = np.linspace(a1_range[0], a1_range[1], n1)
    g2 = np.linspace(a2_range[0], a2_range[1], n2)
    jobs = [(float(x), float(y), params, tol) for x in g1 for y in g2]
    if workers > 1:
        with ProcessPoolExecutor(max_workers=workers) as ex:
            return list(ex.map(_cell, jobs, chunksize=max(1, len(jobs) // (4 * workers))))
    return [_cell(j) for j in jobs]


def refine_boundary(p: tuple[float, float], q: tuple[float, float], params: RadialParams,
                    tol: float = 1e-9, xtol: float = 1e-6) -> tuple[tuple[float, float], tuple[float, float]]:
    """Bisect the segment p -> q until the outcome kind changes within ``xtol``.

    The outcome labels at the two ends must differ; returns the final pair
    of points straddling the change.
    """
    def kind(pt):
        return outcome_tag(shoot(ShootingParams(*pt), params, tol)[0])

    kp, kq = kind(p), kind(q)
    if kp == kq:
        raise ValueError(f"both ends have outcome {kp}")
    p_, q_ = np.array(p, float), np.array(q, float)
    while np.linalg.norm(q_ - p_) > xtol:
        mid = 0.5 * (p_ + q_)
        if kind(tuple(mid)) == kp:
            p_ = mid
        else:
            q_ = mid
    return tuple(map(float, p_)), tuple(map(float, q_))


def atlas_to_csv(cells: Sequence[AtlasCell], fh=None) -> str:
    buf = io.StringIO() if fh is None else fh
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(ATLAS_COLUMNS)
    for c in cells:
        b1, b2 = c.betas
        w.writerow([repr(c.a1), repr(c.a2), outcome_tag(c.outcome), repr(b1), repr(b2)])
    return buf.getvalue() if fh is None else ""


def atlas_from_csv(text: str) -> list[AtlasCell]:
    rows = csv.DictReader(io.StringIO(text))
    cells = []
    for row in rows:
        b1, b2 = float(row["beta1"]), float(row["beta2"])
        cells.append(AtlasCell(float(row["a1"]), float(row["a2"]), outcome_from_tag(row["outcome"], b1, b2)))
    return cells
