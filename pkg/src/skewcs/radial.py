"""Radial reduction of the collapsed-vortex system in log-radius.

With ``t = ln r`` and ``m_i = r u_i'(r)`` the radial system

    u_i'' + u_i'/r + lam * e^{u_j} (1 - e^{u_i}) = 0,   r > 0,
    u_i = 2 eps N_i ln r + a_i + o(1)                   as r -> 0,

becomes the autonomous-looking first-order system

    du_i/dt = m_i,    dm_i/dt = -lam * e^{2t + u_j} (1 - e^{u_i}).

The Dirac sources only enter through the initial slopes ``m_i = 2 eps N_i``.
Five area integrals over the plane (two fluxes, two masses, the joint mass)
are accumulated as extra components of the integrated vector.
"""
from __future__ import annotations

import bisect
import math
from dataclasses import dataclass, field, replace
from typing import Callable, Optional, Union

import numpy as np

from . import rk

TWO_PI = 2.0 * math.pi
FOUR_PI = 4.0 * math.pi
EXP_CAP = 700.0

TOPO_U = 1e-8
TOPO_M = 1e-8
PLATEAU_WINDOW = 2.0
SLOPE_CAP = 1e4
DEFAULT_R0 = 1e-6
DEFAULT_T_MAX = 60.0
CERT_TOL = 1e-6


class NonFiniteState(ArithmeticError):
    """Raised by the right-hand side when handed a non-finite state."""


# ---------------------------------------------------------------------------
# domain types


@dataclass(frozen=True)
class RadialParams:
    n1: int = 0
    n2: int = 0
    eps: float = 1.0
    lam: float = 1.0

    def __post_init__(self):
        if int(self.n1) != self.n1 or int(self.n2) != self.n2 or self.n1 < 0 or self.n2 < 0:
            raise ValueError(f"multiplicities must be non-negative integers, got {self.n1}, {self.n2}")
        if not 0.0 <= self.eps <= 1.0:
            raise ValueError(f"eps must lie in [0, 1], got {self.eps}")
        if not self.lam > 0.0:
            raise ValueError(f"lam must be positive, got {self.lam}")

    @property
    def strengths(self) -> tuple[float, float]:
        """Effective vortex strengths ``eps*N_i``."""
        return self.eps * self.n1, self.eps * self.n2


@dataclass(frozen=True)
class ShootingParams:
    a1: float
    a2: float

    def __post_init__(self):
        if not (math.isfinite(self.a1) and math.isfinite(self.a2)):
            raise ValueError("shooting constants must be finite")

    def swapped(self) -> "ShootingParams":
        return ShootingParams(self.a2, self.a1)


@dataclass(frozen=True)
class LogState:
    t: float
    u1: float
    u2: float
    m1: float
    m2: float

    def as_list(self) -> list:
        return [self.u1, self.u2, self.m1, self.m2]


# Outcome: a small closed family of frozen dataclasses.


@dataclass(frozen=True)
class NonTopological:
    beta1: float
    beta2: float
    label = "non_topological"


@dataclass(frozen=True)
class Topological:
    label = "topological"


@dataclass(frozen=True)
class MixedUndetermined:
    label = "mixed_undetermined"


@dataclass(frozen=True)
class MaxRadiusReached:
    label = "max_radius"


@dataclass(frozen=True)
class NumericalFailure:
    reason: str
    label = "numerical_failure"


Outcome = Union[NonTopological, Topological, MixedUndetermined, MaxRadiusReached, NumericalFailure]


def outcome_tag(outcome: Outcome) -> str:
    if isinstance(outcome, NumericalFailure):
        return f"{outcome.label}:{outcome.reason}"
    return outcome.label


def outcome_from_tag(tag: str, beta1: float = math.nan, beta2: float = math.nan) -> Outcome:
    if tag == NonTopological.label:
        return NonTopological(beta1, beta2)
    if tag == Topological.label:
        return Topological()
    if tag == MixedUndetermined.label:
        return MixedUndetermined()
    if tag == MaxRadiusReached.label:
        return MaxRadiusReached()
    if tag.startswith(NumericalFailure.label + ":"):
        return NumericalFailure(tag.split(":", 1)[1])
    raise ValueError(f"unknown outcome tag {tag!r}")


@dataclass(frozen=True)
class Quadratures:
    """Plane integrals: flux1 = int e^{u2}(1-e^{u1}), flux2 = int e^{u1}(1-e^{u2}),
    joint = int e^{u1+u2}, mass_i = int e^{u_i}; all with respect to dx."""

    flux1: float
    flux2: float
    joint: float
    mass1: float
    mass2: float

    def as_array(self) -> np.ndarray:
        return np.array([self.flux1, self.flux2, self.joint, self.mass1, self.mass2])

    @classmethod
    def from_seq(cls, seq) -> "Quadratures":
        return cls(*(float(v) for v in seq))

    def __add__(self, other: "Quadratures") -> "Quadratures":
        return Quadratures.from_seq(self.as_array() + other.as_array())


@dataclass(frozen=True)
class BetaEstimate:
    slope: tuple[float, float]
    flux: tuple[float, float]
    gap: float
    converged: bool


@dataclass(frozen=True, eq=False)
class RadialSolution:
    params: RadialParams
    shoot: Optional[ShootingParams]
    samples: np.ndarray  # columns t, u1, u2, m1, m2
    outcome: Outcome
    beta_slope: tuple[float, float]
    beta_flux: tuple[float, float]
    quad: Quadratures  # over the whole plane (origin piece + mesh + far tail)
    quad_mesh: Quadratures  # accumulated along the mesh only
    quad_origin: Quadratures
    quad_tail: Quadratures
    tol: float
    stop: str
    nfev: int = 0
    meta: dict = field(default_factory=dict)

    @property
    def t(self) -> np.ndarray:
        return self.samples[:, 0]

    @property
    def u1(self) -> np.ndarray:
        return self.samples[:, 1]

    @property
    def u2(self) -> np.ndarray:
        return self.samples[:, 2]

    @property
    def m1(self) -> np.ndarray:
        return self.samples[:, 3]

    @property
    def m2(self) -> np.ndarray:
        return self.samples[:, 4]

    @property
    def quad_flux1(self) -> float:
        return self.quad.flux1

    @property
    def quad_flux2(self) -> float:
        return self.quad.flux2

    @property
    def quad_joint(self) -> float:
        return self.quad.joint

    @property
    def certified(self) -> bool:
        return isinstance(self.outcome, NonTopological)

    def states(self):
        for row in self.samples:
            yield LogState(*map(float, row))

    def u_at(self, r) -> tuple[np.ndarray, np.ndarray]:
        """Fields at radii ``r`` by cubic Hermite interpolation in t (slopes m_i = du_i/dt)."""
        from scipy.interpolate import CubicHermiteSpline

        t = np.log(np.asarray(r, dtype=float))
        lo, hi = self.t[0], self.t[-1]
        if np.any(t < lo - 1e-12) or np.any(t > hi + 1e-12):
            raise ValueError(f"radius outside resolved range [{math.exp(lo):.3g}, {math.exp(hi):.3g}]")
        out = []
        for col in (1, 2):
            f = CubicHermiteSpline(self.t, self.samples[:, col], self.samples[:, col + 2])
            out.append(f(np.clip(t, lo, hi)))
        return out[0], out[1]


# ---------------------------------------------------------------------------
# right-hand side and origin expansion


def _exp(x: float) -> float:
    return math.exp(x if x < EXP_CAP else EXP_CAP)


def log_rhs(state: LogState, params: RadialParams) -> tuple[float, float, float, float]:
    """Return ``(du1/dt, du2/dt, dm1/dt, dm2/dt)`` at ``state``."""
    vals = (state.t, state.u1, state.u2, state.m1, state.m2)
    if not all(math.isfinite(v) for v in vals):
        raise NonFiniteState(f"non-finite state {vals}")
    t, u1, u2, m1, m2 = vals
    lam = params.lam
    e2t = 2.0 * t
    a2 = _exp(e2t + u2)
    b1 = _exp(e2t + u1)
    j = _exp(e2t + u1 + u2)
    return m1, m2, -lam * (a2 - j), -lam * (b1 - j)


def _augmented_rhs(lam: float, forcing: Optional[Callable]):
    exp = math.exp
    cap = EXP_CAP

    def fun(t, y):
        u1, u2, m1, m2 = y[0], y[1], y[2], y[3]
        e2t = 2.0 * t
        x = e2t + u2
        a2 = exp(x if x < cap else cap)
        x = e2t + u1
        b1 = exp(x if x < cap else cap)
        x = e2t + u1 + u2
        j = exp(x if x < cap else cap)
        f1 = a2 - j
        f2 = b1 - j
        out = [m1, m2, -lam * f1, -lam * f2, TWO_PI * f1, TWO_PI * f2, TWO_PI * j, TWO_PI * b1, TWO_PI * a2]
        if forcing is not None:
            g = forcing(t)
            out[0] += g[0]
            out[1] += g[1]
            out[2] += g[2]
            out[3] += g[3]
        return out

    return fun


def forced_rhs(params: RadialParams, forcing: Optional[Callable[[float], tuple]] = None):
    """``f(t, y)`` of the system integrated by :func:`integrate`.

    ``y = (u1, u2, m1, m2, flux1, flux2, joint, mass1, mass2)``; the last five
    components accumulate the plane integrals.
    """
    return _augmented_rhs(params.lam, forcing)


@dataclass(frozen=True)
class SeriesCoefficients:
    """Two-term origin expansion

        u_i = 2 eps N_i ln r + a_i + c_i r^{gamma_i} + d_i r^{delta}

    with gamma_1 = 2 eps N_2 + 2, gamma_2 = 2 eps N_1 + 2, delta = 2 eps (N_1+N_2) + 2.
    The c-terms balance ``-lam e^{u_j}``, the d-terms balance ``+lam e^{u_1+u_2}``.
    """

    c1: float
    c2: float
    d1: float
    d2: float
    gamma1: float
    gamma2: float
    delta: float

    @property
    def dropped_order(self) -> float:
        """Power of r of the leading term left out of the expansion of u."""
        return min(self.gamma1 + self.gamma2, self.delta + min(self.gamma1, self.gamma2))


def series_coefficients(params: RadialParams, shoot: ShootingParams) -> SeriesCoefficients:
    s1, s2 = params.strengths
    lam = params.lam
    g1 = 2.0 * s2 + 2.0
    g2 = 2.0 * s1 + 2.0
    dl = 2.0 * (s1 + s2) + 2.0
    ea1, ea2 = math.exp(shoot.a1), math.exp(shoot.a2)
    return SeriesCoefficients(
        c1=-lam * ea2 / g1**2,
        c2=-lam * ea1 / g2**2,
        d1=lam * ea1 * ea2 / dl**2,
        d2=lam * ea1 * ea2 / dl**2,
        gamma1=g1,
        gamma2=g2,
        delta=dl,
    )


def _series_values(params, shoot, r):
    co = series_coefficients(params, shoot)
    s1, s2 = params.strengths
    lr = math.log(r)
    p1, p2, pd = r**co.gamma1, r**co.gamma2, r**co.delta
    u1 = 2 * s1 * lr + shoot.a1 + co.c1 * p1 + co.d1 * pd
    u2 = 2 * s2 * lr + shoot.a2 + co.c2 * p2 + co.d2 * pd
    m1 = 2 * s1 + co.gamma1 * co.c1 * p1 + co.delta * co.d1 * pd
    m2 = 2 * s2 + co.gamma2 * co.c2 * p2 + co.delta * co.d2 * pd
    return co, u1, u2, m1, m2


def series_residual(params: RadialParams, shoot: ShootingParams, r: float) -> tuple[float, float]:
    """ODE defect ``Delta u_i + lam e^{u_j}(1 - e^{u_i})`` of the truncated series at ``r``."""
    co, u1, u2, _, _ = _series_values(params, shoot, r)
    lap1 = co.c1 * co.gamma1**2 * r ** (co.gamma1 - 2) + co.d1 * co.delta**2 * r ** (co.delta - 2)
    lap2 = co.c2 * co.gamma2**2 * r ** (co.gamma2 - 2) + co.d2 * co.delta**2 * r ** (co.delta - 2)
    lam = params.lam
    return (
        lap1 + lam * math.exp(u2) * (1 - math.exp(u1)),
        lap2 + lam * math.exp(u1) * (1 - math.exp(u2)),
    )


def _dropped_term(params, shoot, r):
    co = series_coefficients(params, shoot)
    p = co.dropped_order
    res = series_residual(params, shoot, r)
    return max(abs(res[0]), abs(res[1])) * r * r / (p * p)


def choose_r0(params: RadialParams, shoot: ShootingParams, tol: float, r_start: float = DEFAULT_R0) -> float:
    """Largest ``r0 <= r_start`` (by halving) whose dropped series term is below ``0.01*tol``."""
    r0 = r_start
    for _ in range(200):
        if _dropped_term(params, shoot, r0) < 0.01 * tol:
            return r0
        r0 *= 0.5
    raise ValueError("could not find an admissible start radius")


def origin_series_start(params: RadialParams, shoot: ShootingParams, r0: float) -> LogState:
    """State at ``t = ln r0`` from the origin expansion."""
    if not r0 > 0.0:
        raise ValueError(f"r0 must be positive, got {r0}")
    _, u1, u2, m1, m2 = _series_values(params, shoot, r0)
    return LogState(math.log(r0), u1, u2, m1, m2)


def _origin_quadratures(start: LogState, params: RadialParams) -> Quadratures:
    """Integrals over the disk of radius r0 = e^t from the leading-order expansion."""
    s1, s2 = params.strengths
    r2 = math.exp(2 * start.t)
    lam = params.lam
    return Quadratures(
        flux1=-TWO_PI * (start.m1 - 2 * s1) / lam,
        flux2=-TWO_PI * (start.m2 - 2 * s2) / lam,
        joint=TWO_PI * math.exp(start.u1 + start.u2) * r2 / (2 * (s1 + s2) + 2),
        mass1=TWO_PI * math.exp(start.u1) * r2 / (2 * s1 + 2),
        mass2=TWO_PI * math.exp(start.u2) * r2 / (2 * s2 + 2),
    )


def _far_tails(t, u1, u2, m1, m2) -> Quadratures:
    """Integrals beyond r = e^t assuming exact power-law decay r^{m_i} of e^{u_i}."""

    def tail(log_f, rate):
        if rate >= 0.0:
            return math.inf
        return TWO_PI * math.exp(log_f) / (-rate)

    e2t = 2 * t
    return Quadratures(
        flux1=tail(e2t + u2, 2 + m2) * (1 - math.exp(u1)),
        flux2=tail(e2t + u1, 2 + m1) * (1 - math.exp(u2)),
        joint=tail(e2t + u1 + u2, 2 + m1 + m2),
        mass1=tail(e2t + u1, 2 + m1),
        mass2=tail(e2t + u2, 2 + m2),
    )


# ---------------------------------------------------------------------------
# integration


class _Monitor:
    """Event detection on accepted steps."""

    def __init__(self, tol: float, t_start: float, sample_ts: Optional[np.ndarray]):
        self.tol = tol
        self.t_start = t_start
        self.ts: list = []
        self.m1s: list = []
        self.m2s: list = []
        self.sample_ts = sample_ts
        self.sample_i = 0
        self.dense: list = []

    def _m_at(self, t):
        i = bisect.bisect_left(self.ts, t)
        if i <= 0:
            return self.m1s[0], self.m2s[0]
        t0, t1 = self.ts[i - 1], self.ts[i]
        w = (t - t0) / (t1 - t0)
        return (
            self.m1s[i - 1] + w * (self.m1s[i] - self.m1s[i - 1]),
            self.m2s[i - 1] + w * (self.m2s[i] - self.m2s[i - 1]),
        )

    def __call__(self, step: rk.Step) -> Optional[str]:
        t = step.t1
        y = step.y1
        u1, u2, m1, m2 = y[0], y[1], y[2], y[3]
        if not self.ts:
            self.ts.append(step.t0)
            self.m1s.append(step.y0[2])
            self.m2s.append(step.y0[3])
        self.ts.append(t)
        self.m1s.append(m1)
        self.m2s.append(m2)
        if self.sample_ts is not None:
            st = self.sample_ts
            while self.sample_i < len(st) and st[self.sample_i] <= t:
                ti = st[self.sample_i]
                if ti >= step.t0:
                    self.dense.append([ti] + step(ti)[:4])
                self.sample_i += 1
        if not all(math.isfinite(v) for v in y):
            return "non-finite"
        if u1 > 0.0 or u2 > 0.0:
            if u1 > 0.0 and u2 > 0.0:
                f1 = -step.y0[0] / (u1 - step.y0[0])
                f2 = -step.y0[1] / (u2 - step.y0[1])
                return "blowup-u1" if f1 <= f2 else "blowup-u2"
            return "blowup-u1" if u1 > 0.0 else "blowup-u2"
        if t >= 0.0 and u1 > -TOPO_U and u2 > -TOPO_U and abs(m1) < TOPO_M and abs(m2) < TOPO_M:
            return "topological"
        if min(m1, m2) < -SLOPE_CAP:
            return "mixed"
        if t - self.t_start >= PLATEAU_WINDOW:
            p1, p2 = self._m_at(t - PLATEAU_WINDOW)
            flat1 = abs(m1 - p1) < self.tol
            flat2 = abs(m2 - p2) < self.tol
            if flat1 and flat2 and m1 < -2.0 and m2 < -2.0:
                return "plateau"
            # one decay rate settled at or below 1: the other flux integral diverges
            if (flat1 and -2.0 <= m1 < 0.0 and m2 < -2.0) or (flat2 and -2.0 <= m2 < 0.0 and m1 < -2.0):
                return "mixed"
        return None


def integrate(
    start: LogState,
    params: RadialParams,
    t_max: float = DEFAULT_T_MAX,
    tol: float = 1e-10,
    *,
    shoot: Optional[ShootingParams] = None,
    forcing: Optional[Callable[[float], tuple]] = None,
    sample_dt: Optional[float] = None,
    cert_tol: float = CERT_TOL,
    classify: bool = True,
) -> RadialSolution:
    """Integrate from ``start`` up to ``t_max`` with adaptive steps and event detection.

    ``forcing(t)`` returns four terms added to ``(du1, du2, dm1, dm2)``; it is
    meant for manufactured-solution studies and disables classification
    (``classify=False`` also does). With ``sample_dt`` the samples are taken
    from the dense output on a uniform t-grid instead of the step points.
    """
    if not tol > 0.0:
        raise ValueError("tol must be positive")
    if not t_max > start.t:
        raise ValueError("t_max must exceed the start time")
    classify = classify and forcing is None
    q0 = _origin_quadratures(start, params)
    y0 = start.as_list() + [0.0] * 5
    # tolerance split evenly between the field/slope group and the quadratures
    half = 0.5 * tol
    q_scale = max(1.0, float(np.max(np.abs(q0.as_array()))))
    rtol = [half] * 9
    atol = [half] * 4 + [half * q_scale] * 5
    sample_ts = None
    if sample_dt is not None:
        sample_ts = np.arange(start.t, t_max, sample_dt)
    mon = _Monitor(tol, start.t, sample_ts)
    fun = _augmented_rhs(params.lam, forcing)
    try:
        res = rk.dopri5(fun, start.t, y0, t_max, rtol=rtol, atol=atol, on_step=mon if classify else None)
        stop = res.status
    except NonFiniteState:
        res, stop = None, "non-finite"
    if res is None:
        raise NumericalFailureError("integration produced a non-finite state before the first step")
    ys = np.asarray(res.y)
    ts = np.asarray(res.t)
    # drop a trailing non-finite sample, keep the last valid one
    ok = np.all(np.isfinite(ys), axis=1)
    if not ok[-1]:
        last = np.nonzero(ok)[0][-1]
        ys, ts = ys[: last + 1], ts[: last + 1]
    if sample_ts is not None:
        dense = np.asarray(mon.dense) if mon.dense else np.empty((0, 5))
        tail_row = np.concatenate([[ts[-1]], ys[-1, :4]])
        if len(dense) == 0 or dense[-1, 0] < ts[-1]:
            dense = np.vstack([dense, tail_row]) if len(dense) else tail_row[None, :]
        samples = dense
    else:
        samples = np.column_stack([ts, ys[:, :4]])
    q_mesh = Quadratures.from_seq(ys[-1, 4:])
    t_end, u1, u2, m1, m2 = float(ts[-1]), *map(float, ys[-1, :4])
    tails = _far_tails(t_end, u1, u2, m1, m2) if stop == "plateau" else Quadratures(0, 0, 0, 0, 0)
    total = q0 + q_mesh + tails
    sol = RadialSolution(
        params=params,
        shoot=shoot,
        samples=samples,
        outcome=MaxRadiusReached(),
        beta_slope=(math.nan, math.nan),
        beta_flux=(math.nan, math.nan),
        quad=total,
        quad_mesh=q_mesh,
        quad_origin=q0,
        quad_tail=tails,
        tol=tol,
        stop=stop,
        nfev=res.nfev,
    )
    if not classify:
        return replace(sol, outcome=MaxRadiusReached() if stop == "done" else NumericalFailure(stop))
    est = estimate_beta(sol)
    outcome = _classify(stop, est, cert_tol)
    return replace(sol, outcome=outcome, beta_slope=est.slope, beta_flux=est.flux)


class NumericalFailureError(RuntimeError):
    pass


def _classify(stop: str, est: BetaEstimate, cert_tol: float) -> Outcome:
    if stop == "plateau":
        b1, b2 = est.flux
        if est.converged and est.gap < cert_tol and b1 > 1.0 and b2 > 1.0:
            return NonTopological(b1, b2)
        return MixedUndetermined()
    if stop == "topological":
        return Topological()
    if stop == "mixed":
        return MixedUndetermined()
    if stop == "done":
        return MaxRadiusReached()
    return NumericalFailure(stop)


def estimate_beta(sol: RadialSolution) -> BetaEstimate:
    """Decay rates from the terminal slopes and from the flux integrals.

    ``beta_i = -m_i(end)/2`` from slopes; ``beta_i = flux_i/(4 pi) - eps N_i``
    (times ``lam``) from fluxes, which include the analytic far tail.
    ``converged`` requires the slope plateau over the last window.
    """
    s1, s2 = sol.params.strengths
    m1, m2 = float(sol.m1[-1]), float(sol.m2[-1])
    slope = (-m1 / 2.0, -m2 / 2.0)
    lam = sol.params.lam
    flux = (lam * sol.quad.flux1 / FOUR_PI - s1, lam * sol.quad.flux2 / FOUR_PI - s2)
    t = sol.t
    converged = False
    if t[-1] - t[0] >= PLATEAU_WINDOW:
        tp = t[-1] - PLATEAU_WINDOW
        p1 = float(np.interp(tp, t, sol.m1))
        p2 = float(np.interp(tp, t, sol.m2))
        converged = abs(m1 - p1) < sol.tol and abs(m2 - p2) < sol.tol and sol.stop == "plateau"
    gap = max(abs(slope[0] - flux[0]), abs(slope[1] - flux[1]))
    if not math.isfinite(gap):
        gap = math.inf
    return BetaEstimate(slope=slope, flux=flux, gap=gap, converged=converged)


def solve_radial(
    params: RadialParams,
    shoot: ShootingParams,
    tol: float = 1e-10,
    t_max: float = DEFAULT_T_MAX,
    **kw,
) -> RadialSolution:
    """Series start plus integration: the trajectory launched by ``shoot``."""
    r0 = choose_r0(params, shoot, tol)
    start = origin_series_start(params, shoot, r0)
    return integrate(start, params, t_max, tol, shoot=shoot, **kw)


def tilt(sol: RadialSolution) -> float:
    """Angle of the terminal decay vector, decreasing across the non-topological band.

    ``atan2(beta2 - 1, beta1 - 1)`` in terms of the terminal slopes; pinned to
    +pi / -pi when u1 / u2 crossed zero first.
    """
    if sol.stop == "blowup-u1":
        return math.pi
    if sol.stop == "blowup-u2":
        return -math.pi
    return math.atan2(-sol.m2[-1] - 2.0, -sol.m1[-1] - 2.0)


def with_lambda(sol: RadialSolution, lam: float) -> RadialSolution:
    """Map a ``lam = 1`` solution to the one for coupling ``lam`` via r -> r sqrt(lam).

    If U solves the unit-coupling problem then u(r) = U(sqrt(lam) r); in log-radius
    this is a shift t -> t - ln(lam)/2 with u and m unchanged, shooting constants
    shifted by eps N_i ln(lam), and area integrals divided by lam.
    """
    if sol.params.lam != 1.0:
        raise ValueError("with_lambda expects a unit-coupling solution")
    shift = 0.5 * math.log(lam)
    samples = sol.samples.copy()
    samples[:, 0] -= shift
    s1, s2 = sol.params.strengths
    shoot = None
    if sol.shoot is not None:
        shoot = ShootingParams(sol.shoot.a1 + s1 * math.log(lam), sol.shoot.a2 + s2 * math.log(lam))
    scale = lambda q: Quadratures.from_seq(q.as_array() / lam)  # noqa: E731
    return replace(
        sol,
        params=replace(sol.params, lam=lam),
        shoot=shoot,
        samples=samples,
        quad=scale(sol.quad),
        quad_mesh=scale(sol.quad_mesh),
        quad_origin=scale(sol.quad_origin),
        quad_tail=scale(sol.quad_tail),
    )
