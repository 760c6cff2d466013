"""Newton iteration on the bounded remainders and continuation in eps.

Unknowns are v_i = u_i - h_i on the nodes of a :class:`DiskGrid`. The
discrete equations are

    L v_i + b_i + e^{v_j + h_j} (1 - e^{v_i + h_i}) - g_i = 0,

where ``b_i`` carries the far-field condition r du_i/dr = -2 beta_i on the
staircase faces. Integrated over the domain, this condition makes the
flux of each component equal to 4 pi (beta_i + N_i) up to quadrature error.
"""
from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field, replace
from typing import Optional, Sequence

import numpy as np
import scipy.sparse as sp
import scipy.sparse.linalg as spla

from ..radial import RadialParams, RadialSolution, solve_radial
from ..shooting import DecayPair
from .config import Background, VortexConfig
from .grid import DiskGrid

log = logging.getLogger(__name__)

DIRECT_MAX = 80_000  # unknowns; above this GMRES with an AMG block preconditioner
NEWTON_TOL = 1e-10  # residual floor in long double is ~1e-17
DAMPING_FLOOR = 2.0**-10
EPS_FLOOR = 1.0 / 1024


class PlanarNewtonFailure(RuntimeError):
    def __init__(self, message: str, history: Sequence[float] = (), eps: Optional[float] = None):
        super().__init__(message)
        self.history = list(history)
        self.eps = eps


@dataclass(frozen=True, eq=False)
class PlanarSolution:
    config: VortexConfig
    decay: DecayPair
    grid: DiskGrid
    v1: np.ndarray
    v2: np.ndarray
    residual_norm: float
    newton_history: tuple = ()
    meta: dict = field(default_factory=dict)

    def background(self) -> Background:
        return Background(self.config, self.decay.beta1, self.decay.beta2)

    def __post_init__(self):
        object.__setattr__(self, "v1", np.asarray(self.v1, dtype=np.longdouble))
        object.__setattr__(self, "v2", np.asarray(self.v2, dtype=np.longdouble))

    def u(self, i: int) -> np.ndarray:
        """u_i = v_i + h_i on the nodes (-inf at a node that is a vortex point)."""
        bg = self.background()
        v = self.v1 if i == 1 else self.v2
        return v + bg.h(i, self.grid.x, self.grid.y)

    @property
    def max_abs_v(self) -> float:
        return float(max(np.max(np.abs(self.v1)), np.max(np.abs(self.v2))))


@dataclass(frozen=True, eq=False)
class Residual:
    r1: np.ndarray
    r2: np.ndarray
    e1: np.ndarray  # e^{u_1} after clamping
    e2: np.ndarray
    clamped: int

    @property
    def norm(self) -> float:
        # max-norm, in double
        return float(max(np.max(np.abs(self.r1)), np.max(np.abs(self.r2))))


@dataclass(frozen=True, eq=False)
class _Frozen:
    """Per (grid, background) data not depending on v."""

    w1: np.ndarray
    w2: np.ndarray
    g1: np.ndarray
    g2: np.ndarray
    b1: np.ndarray
    b2: np.ndarray
    vortex_nodes: tuple


def _frozen(grid: DiskGrid, bg: Background) -> _Frozen:
    x, y = grid.x, grid.y
    fx, fy = grid.face_mid[:, 0], grid.face_mid[:, 1]
    nx, ny = grid.face_normal[:, 0], grid.face_normal[:, 1]
    r2 = fx * fx + fy * fy
    bs = []
    for i, beta in ((1, bg.beta1), (2, bg.beta2)):
        hx, hy = bg.grad_h(i, fx, fy)
        q = nx * (-2.0 * beta * fx / r2 - hx) + ny * (-2.0 * beta * fy / r2 - hy)
        bs.append(grid.boundary_source(q))
    w1, w2 = bg.weight(1, x, y), bg.weight(2, x, y)
    vortex = tuple(int(k) for k in np.nonzero((w1 == 0.0) | (w2 == 0.0))[0])
    return _Frozen(w1, w2, bg.g(1, x, y), bg.g(2, x, y), bs[0], bs[1], vortex)


def _exp_u(v: np.ndarray, w: np.ndarray) -> tuple[np.ndarray, int]:
    # e^{v + h} = w e^{v}; clamp u = v + h at 0 where it would exceed it
    e = w * np.exp(np.minimum(v, np.longdouble(700.0)))
    over = e > 1.0
    n = int(np.count_nonzero(over))
    if n:
        e = np.where(over, 1.0, e)
    return e, n


def assemble_residual(v1: np.ndarray, v2: np.ndarray, background: Background, grid: DiskGrid,
                      _fz: Optional[_Frozen] = None) -> Residual:
    """Discrete residual per node, evaluated in extended precision.

    The iterates are kept in long double as well, so the rounding floor of
    the residual sits far below where Newton's quadratic phase ends.
    """
    fz = _frozen(grid, background) if _fz is None else _fz
    v1 = np.asarray(v1, dtype=np.longdouble)
    v2 = np.asarray(v2, dtype=np.longdouble)
    e1, c1 = _exp_u(v1, fz.w1)
    e2, c2 = _exp_u(v2, fz.w2)
    r1 = grid.apply_laplacian(v1) + fz.b1 + e2 * (1.0 - e1) - fz.g1
    r2 = grid.apply_laplacian(v2) + fz.b2 + e1 * (1.0 - e2) - fz.g2
    return Residual(r1, r2, e1, e2, c1 + c2)


def jacobian(res: Residual, grid: DiskGrid) -> sp.csc_matrix:
    L = grid.laplacian
    e1, e2 = res.e1.astype(float), res.e2.astype(float)
    res = replace(res, e1=e1, e2=e2)
    d = sp.diags(res.e1 * res.e2)
    J11 = L - d
    J12 = sp.diags(res.e2 * (1.0 - res.e1))
    J21 = sp.diags(res.e1 * (1.0 - res.e2))
    return sp.bmat([[J11, J12], [J21, J11]], format="csc")


def _linear_solve(res: Residual, grid: DiskGrid, rhs: np.ndarray) -> tuple[np.ndarray, dict]:
    J = jacobian(res, grid)
    m = grid.size
    if 2 * m <= DIRECT_MAX:
        return spla.splu(J).solve(rhs), {"method": "splu"}
    import pyamg

    e1, e2 = res.e1.astype(float), res.e2.astype(float)
    A = (-(grid.laplacian - sp.diags(e1 * e2))).tocsr()
    ml = pyamg.smoothed_aggregation_solver(A, symmetry="symmetric", max_coarse=500)
    J21 = e1 * (1.0 - e2)

    def prec(r):
        x1 = -ml.solve(r[:m], x0=None, tol=1e-30, maxiter=1, cycle="V")
        x2 = -ml.solve(r[m:] - J21 * x1, x0=None, tol=1e-30, maxiter=1, cycle="V")
        return np.concatenate([x1, x2])

    M = spla.LinearOperator(J.shape, matvec=prec)
    its = [0]

    def cb(_):
        its[0] += 1

    x, info = spla.gmres(J.tocsr(), rhs, M=M, rtol=1e-12, atol=0.0, restart=60, maxiter=20,
                         callback=cb, callback_type="pr_norm")
    if info != 0:
        raise PlanarNewtonFailure(f"GMRES did not converge (info={info})")
    return x, {"method": "gmres-amg", "iterations": its[0]}


def newton_step(state: PlanarSolution, *, _fz: Optional[_Frozen] = None) -> PlanarSolution:
    """One damped Newton update; Armijo-type backtracking on the max-norm residual."""
    bg = state.background()
    grid = state.grid
    fz = _frozen(grid, bg) if _fz is None else _fz
    res = assemble_residual(state.v1, state.v2, bg, grid, fz)
    r0 = res.norm
    if not math.isfinite(r0):
        raise PlanarNewtonFailure("non-finite residual", state.newton_history)
    m = grid.size
    try:
        delta, info = _linear_solve(res, grid, -np.concatenate([res.r1, res.r2]).astype(float))
    except (RuntimeError, ValueError) as exc:
        raise PlanarNewtonFailure(f"linear solve failed: {exc}", state.newton_history) from exc
    lam = 1.0
    while lam >= DAMPING_FLOOR:
        v1 = state.v1 + lam * delta[:m]
        v2 = state.v2 + lam * delta[m:]
        trial = assemble_residual(v1, v2, bg, grid, fz)
        if trial.norm < (1.0 - 1e-4 * lam) * r0:
            meta = dict(state.meta)
            meta.update(last_step=float(np.max(np.abs(lam * delta))), last_damping=lam,
                        clamped=trial.clamped, linear=info)
            return replace(state, v1=v1, v2=v2, residual_norm=trial.norm,
                           newton_history=tuple(state.newton_history) + (trial.norm,), meta=meta)
        lam *= 0.5
    raise PlanarNewtonFailure("damping floor reached", state.newton_history, state.config.eps)


def newton_solve(state: PlanarSolution, tol: float = NEWTON_TOL, max_iter: int = 30) -> PlanarSolution:
    bg = state.background()
    fz = _frozen(state.grid, bg)
    r = assemble_residual(state.v1, state.v2, bg, state.grid, fz).norm
    state = replace(state, residual_norm=r, newton_history=(r,),
                    meta={**state.meta, "vortex_nodes": list(fz.vortex_nodes), "converged": False})
    for _ in range(max_iter):
        if state.residual_norm < tol:
            break
        state = newton_step(state, _fz=fz)
    if state.residual_norm < tol:
        return replace(state, meta={**state.meta, "converged": True, "newton_tol": tol})
    raise PlanarNewtonFailure(f"no convergence in {max_iter} iterations", state.newton_history,
                              state.config.eps)


def newton_order(history: Sequence[float]) -> float:
    """ln(r_k+1 / r_k) / ln(r_k / r_k-1) over the last three residuals."""
    if len(history) < 3:
        return math.nan
    a, b, c = history[-3:]
    return math.log(c / b) / math.log(b / a)


# ---------------------------------------------------------------------------
# radial seed and continuation


def radial_remainders(seed: RadialSolution, grid: DiskGrid, bg: Background) -> tuple[np.ndarray, np.ndarray]:
    """v_i = u_i(|x|) - h_i(x) from a radial trajectory of the collapsed configuration."""
    if seed.shoot is None:
        raise ValueError("seed must carry its shooting constants")
    dense = solve_radial(seed.params, seed.shoot, tol=seed.tol, sample_dt=0.01)
    from scipy.interpolate import CubicHermiteSpline

    t = dense.t
    r = np.hypot(grid.x, grid.y)
    out = []
    for i, (ucol, mcol) in enumerate(((1, 3), (2, 4)), start=1):
        a = seed.shoot.a1 if i == 1 else seed.shoot.a2
        c = (bg.config.n1 + bg.beta1) if i == 1 else (bg.config.n2 + bg.beta2)
        n_i = seed.params.n1 if i == 1 else seed.params.n2
        s = seed.params.eps * n_i
        spline = CubicHermiteSpline(t, dense.samples[:, ucol], dense.samples[:, mcol])
        v = np.empty_like(r)
        small = r < math.exp(t[0])
        v[small] = a + c * np.log1p(r[small] ** 2)
        big = ~small
        tt = np.log(r[big])
        inner = tt <= t[-1]
        u = np.empty_like(tt)
        u[inner] = spline(tt[inner])
        # beyond the last sample the slope has plateaued: continue linearly in t
        u[~inner] = dense.samples[-1, ucol] + dense.samples[-1, mcol] * (tt[~inner] - t[-1])
        # subtract h with the vortex strength of the seed at the origin
        v[big] = u - 2.0 * s * tt + c * np.log1p(r[big] ** 2)
        out.append(v)
    return out[0], out[1]


def planar_from_radial(seed: RadialSolution, config: VortexConfig, decay: DecayPair,
                       grid: DiskGrid) -> PlanarSolution:
    if config.eps != 0.0 and any(config.points1 + config.points2):
        raise ValueError("the radial seed describes the collapsed configuration (eps = 0)")
    if (seed.params.eps * seed.params.n1, seed.params.eps * seed.params.n2) != (config.n1, config.n2):
        raise ValueError("seed vortex strengths must equal the configuration's multiplicities")
    bg = Background(config, decay.beta1, decay.beta2)
    v1, v2 = radial_remainders(seed, grid, bg)
    r = assemble_residual(v1, v2, bg, grid).norm
    return PlanarSolution(config, decay, grid, v1, v2, r, (r,), {"seed": "radial"})


@dataclass(frozen=True)
class GridEstimate:
    """Richardson-type error estimates from a companion solve at twice the spacing.

    For a second-order scheme the fine-grid error is about |q_h - q_2h| / 3.
    """

    field: float  # max-norm of v, at shared nodes
    integrals: dict  # relative, per integral
    grad_corr: float  # absolute
    report_tol: float  # relative tolerance for identity reports

    def to_dict(self) -> dict:
        return {"field": self.field, "integrals": dict(self.integrals), "grad_corr": self.grad_corr,
                "report_tol": self.report_tol}


def coarse_grid(grid: DiskGrid) -> DiskGrid:
    if (grid.n - 1) % 4:
        raise ValueError("grid has no coarse companion sharing its nodes (need n = 1 mod 4)")
    return DiskGrid(grid.radius, (grid.n + 1) // 2)


def coarse_companion(sol: PlanarSolution, start: Optional[PlanarSolution] = None,
                     tol: float = NEWTON_TOL) -> PlanarSolution:
    """Same problem on the grid with twice the spacing, started from ``start`` or by injection."""
    cg = coarse_grid(sol.grid)
    if start is None:
        v1, v2 = sol.grid.restrict(cg, sol.v1.astype(float)), sol.grid.restrict(cg, sol.v2.astype(float))
    else:
        v1, v2 = start.v1, start.v2
    return newton_solve(PlanarSolution(sol.config, sol.decay, cg, v1, v2, math.nan), tol)


def grid_estimate(fine: PlanarSolution, coarse: PlanarSolution) -> GridEstimate:
    from ..identities import NAMES, gradient_correction, planar_integrals, rel_err

    vf1 = fine.grid.restrict(coarse.grid, fine.v1.astype(float))
    vf2 = fine.grid.restrict(coarse.grid, fine.v2.astype(float))
    dv = float(max(np.max(np.abs(vf1 - coarse.v1.astype(float))), np.max(np.abs(vf2 - coarse.v2.astype(float)))))
    If, _ = planar_integrals(fine)
    Ic, _ = planar_integrals(coarse)
    gf, _ = gradient_correction(fine)
    gc, _ = gradient_correction(coarse)
    dg = abs(gf - gc) / 3.0
    ints = {k: rel_err(If[k], Ic[k]) / 3.0 for k in NAMES}
    # identity residuals combine the error of the integral and of the correction term
    tol = max(ints[k] + (rel_err(If[k] + dg, If[k]) if k not in ("flux1", "flux2") else 0.0) for k in NAMES)
    return GridEstimate(dv / 3.0, ints, dg, tol)


@dataclass
class PathStep:
    eps: float
    solution: PlanarSolution
    report: Optional[object] = None
    grid: Optional[GridEstimate] = None
    coarse: Optional[PlanarSolution] = field(default=None, repr=False)


def continue_in_eps(radial_seed: RadialSolution, config: VortexConfig, decay: DecayPair,
                    schedule: int | Sequence[float] = 10, *, grid: Optional[DiskGrid] = None,
                    tol: float = NEWTON_TOL, eps_floor: float = EPS_FLOOR, report: bool = True,
                    grid_check: bool = True, max_steps: int = 200) -> list[PathStep]:
    """Path of planar solutions from eps = 0 (collapsed) up to ``config.eps``.

    ``schedule`` is a number of uniform steps or an explicit increasing list
    of eps values ending at the target. A failed Newton solve halves the
    step; below ``eps_floor`` a :class:`PlanarNewtonFailure` records the eps
    reached. With ``grid_check`` a companion path at twice the spacing
    gives a :class:`GridEstimate` per step.
    """
    from ..identities import pohozaev_planar_report

    if not radial_seed.certified:
        raise ValueError("radial seed is not certified")
    if (radial_seed.params.n1, radial_seed.params.n2) != (config.n1, config.n2):
        raise ValueError("seed multiplicities differ from the configuration")
    grid = grid or DiskGrid.with_spacing(40.0, 0.2)
    target = config.eps
    if isinstance(schedule, int):
        targets = [target * k / schedule for k in range(1, schedule + 1)] if schedule > 0 else []
    else:
        targets = [float(e) for e in schedule]
    if any(b <= a for a, b in zip(targets, targets[1:])):
        raise ValueError("schedule must be increasing")

    def make_step(eps, sol, prev_coarse):
        rep = pohozaev_planar_report(sol) if report else None
        if not grid_check:
            return PathStep(eps, sol, rep)
        coarse = coarse_companion(sol, replace(prev_coarse, config=config.at(eps)) if prev_coarse else None, tol)
        return PathStep(eps, sol, rep, grid_estimate(sol, coarse), coarse)

    start = planar_from_radial(radial_seed, config.at(0.0), decay, grid)
    sol = newton_solve(start, tol)
    path = [make_step(0.0, sol, None)]
    eps = 0.0
    queue = list(targets)
    steps = 0
    while queue:
        nxt = queue[0]
        if nxt <= eps:
            queue.pop(0)
            continue
        steps += 1
        if steps > max_steps:
            raise PlanarNewtonFailure("too many continuation steps", eps=eps)
        trial = replace(sol, config=config.at(nxt), meta=dict(sol.meta))
        try:
            new = newton_solve(trial, tol)
        except PlanarNewtonFailure as exc:
            half = 0.5 * (nxt - eps)
            if half < eps_floor:
                raise PlanarNewtonFailure(f"continuation stalled at eps = {eps:.6g}", exc.history, eps) from exc
            log.info("Newton failed at eps=%.6g, halving the step", nxt)
            queue.insert(0, eps + half)
            continue
        queue.pop(0)
        eps, sol = nxt, new
        path.append(make_step(eps, sol, path[-1].coarse))
    return path
