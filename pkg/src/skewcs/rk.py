"""Dormand-Prince 5(4) explicit Runge-Kutta pair with PI step-size control.

Works on plain Python lists of floats: the systems integrated here have
fewer than a dozen components, where list arithmetic is several times
faster than small numpy arrays.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Optional, Sequence

Vector = list

# Butcher tableau (Dormand & Prince 1980). B is the 5th-order propagating
# weight vector (FSAL: the last stage of step n is the first of step n+1).
C = (0.0, 1 / 5, 3 / 10, 4 / 5, 8 / 9, 1.0, 1.0)
A = (
    (),
    (1 / 5,),
    (3 / 40, 9 / 40),
    (44 / 45, -56 / 15, 32 / 9),
    (19372 / 6561, -25360 / 2187, 64448 / 6561, -212 / 729),
    (9017 / 3168, -355 / 33, 46732 / 5247, 49 / 176, -5103 / 18656),
    (35 / 384, 0.0, 500 / 1113, 125 / 192, -2187 / 6784, 11 / 84),
)
B = A[6] + (0.0,)
# B - B_hat, with B_hat the embedded 4th-order weights.
E = (
    71 / 57600, 0.0, -71 / 16695, 71 / 1920, -17253 / 339200, 22 / 525, -1 / 40,
)
# Continuous extension (Shampine 1986): y(t + s h) = y + h * sum_k K_k * poly_k(s),
# poly_k(s) = sum_j P[k][j] s^(j+1).
P = (
    (1.0, -8048581381 / 2820520608, 8663915743 / 2820520608, -12715105075 / 11282082432),
    (0.0, 0.0, 0.0, 0.0),
    (0.0, 131558114200 / 32700410799, -68118460800 / 10900136933, 87487479700 / 32700410799),
    (0.0, -1754552775 / 470086768, 14199869525 / 1410260304, -10690763975 / 1880347072),
    (0.0, 127303824393 / 49829197408, -318862633887 / 49829197408, 701980252875 / 199316789632),
    (0.0, -282668133 / 205662961, 2019193451 / 616988883, -1453857185 / 822651844),
    (0.0, 40617522 / 29380423, -110615467 / 29380423, 69997945 / 29380423),
)
ORDER = 5


class StepSizeUnderflow(RuntimeError):
    pass


@dataclass
class Step:
    """One accepted step, with enough data for dense output inside it."""

    t0: float
    y0: Vector
    t1: float
    y1: Vector
    k: list

    def __call__(self, t: float) -> Vector:
        h = self.t1 - self.t0
        s = (t - self.t0) / h
        s2 = s * s
        pw = (s, s2, s2 * s, s2 * s2)
        out = list(self.y0)
        for kk, row in zip(self.k, P):
            w = h * (row[0] * pw[0] + row[1] * pw[1] + row[2] * pw[2] + row[3] * pw[3])
            if w != 0.0:
                for i, v in enumerate(kk):
                    out[i] += w * v
        return out


@dataclass
class Result:
    t: list = field(default_factory=list)
    y: list = field(default_factory=list)
    status: str = "running"
    nfev: int = 0
    naccept: int = 0
    nreject: int = 0


def _combo(y: Vector, h: float, ks: Sequence[Vector], coeffs: Sequence[float]) -> Vector:
    out = list(y)
    for kk, a in zip(ks, coeffs):
        if a != 0.0:
            ha = h * a
            for i, v in enumerate(kk):
                out[i] += ha * v
    return out


def _stages(fun, t, y, h, k1):
    ks = [k1]
    for j in range(1, 6):
        ks.append(fun(t + C[j] * h, _combo(y, h, ks, A[j])))
    y_new = _combo(y, h, ks, A[6])
    return ks, y_new


def dopri5(
    fun: Callable[[float, Vector], Vector],
    t0: float,
    y0: Sequence[float],
    t_end: float,
    *,
    rtol: Sequence[float] | float,
    atol: Sequence[float] | float,
    h0: Optional[float] = None,
    h_max: float = math.inf,
    h_min: float = 1e-13,
    max_steps: int = 500_000,
    on_step: Optional[Callable[[Step], Optional[str]]] = None,
    safety: float = 0.9,
    pi_beta: float = 0.04,
) -> Result:
    """Integrate ``y' = fun(t, y)`` from ``t0`` to ``t_end`` adaptively.

    Step control is the PI controller of Gustafsson in the form used by
    Hairer's DOPRI5: ``h_new = h * safety * err^-(0.2 - 0.75*beta) * err_old^beta``.
    ``on_step`` sees every accepted step and may return a string to stop
    the integration; that string becomes ``Result.status``.
    """
    n = len(y0)
    rt = [float(rtol)] * n if isinstance(rtol, (int, float)) else list(rtol)
    at = [float(atol)] * n if isinstance(atol, (int, float)) else list(atol)
    y = [float(v) for v in y0]
    t = float(t0)
    res = Result(t=[t], y=[y])
    k1 = fun(t, y)
    res.nfev = 1
    if h0 is None:
        d0 = math.sqrt(sum((y[i] / (at[i] + rt[i] * abs(y[i]))) ** 2 for i in range(n)) / n)
        d1 = math.sqrt(sum((k1[i] / (at[i] + rt[i] * abs(y[i]))) ** 2 for i in range(n)) / n)
        h0 = 1e-6 if d0 < 1e-5 or d1 < 1e-5 else 0.01 * d0 / d1
    h = min(h0, h_max, t_end - t)
    expo = 0.2 - 0.75 * pi_beta
    err_old = 1e-4
    rejected = False
    while t < t_end:
        if res.naccept + res.nreject >= max_steps:
            res.status = "max-steps"
            return res
        if h < h_min * max(1.0, abs(t)):
            res.status = "step-underflow"
            return res
        last = t + h >= t_end
        if last:
            h = t_end - t
        ks, y_new = _stages(fun, t, y, h, k1)
        k7 = fun(t + h, y_new)
        ks.append(k7)
        res.nfev += 6
        acc = 0.0
        finite = True
        for i in range(n):
            e = h * sum(E[j] * ks[j][i] for j in range(7) if E[j] != 0.0)
            sc = at[i] + rt[i] * max(abs(y[i]), abs(y_new[i]))
            q = e / sc
            acc += q * q
            if not math.isfinite(y_new[i]):
                finite = False
        err = math.sqrt(acc / n) if finite else math.inf
        if not math.isfinite(err):
            h *= 0.2
            rejected = True
            res.nreject += 1
            continue
        if err <= 1.0:
            step = Step(t, y, t + h, y_new, ks)
            t = t_end if last else t + h
            y = y_new
            k1 = k7
            res.t.append(t)
            res.y.append(y)
            res.naccept += 1
            if on_step is not None:
                stop = on_step(step)
                if stop:
                    res.status = stop
                    return res
            err = max(err, 1e-10)
            fac = safety * err ** (-expo) * err_old ** pi_beta
            fac = min(10.0, max(0.2, fac))
            if rejected:
                fac = min(1.0, fac)
            err_old = err
            rejected = False
            h = min(h * fac, h_max)
        else:
            fac = max(0.2, safety * err ** (-0.2))
            h *= fac
            rejected = True
            res.nreject += 1
    res.status = "done"
    return res


def fixed_steps(
    fun: Callable[[float, Vector], Vector], t0: float, y0: Sequence[float], t_end: float, n_steps: int
) -> Vector:
    """Propagate with ``n_steps`` equal steps of the 5th-order pair (no control)."""
    h = (t_end - t0) / n_steps
    y = [float(v) for v in y0]
    t = float(t0)
    k1 = fun(t, y)
    for _ in range(n_steps):
        _, y = _stages(fun, t, y, h, k1)
        t += h
        k1 = fun(t, y)
    return y
