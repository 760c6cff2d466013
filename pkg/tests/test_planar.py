import math
from dataclasses import replace

import numpy as np
import pytest
from hypothesis import given, strategies as st

import skewcs.planar.solver as solver
from skewcs.identities import NAMES, planar_integrals
from skewcs.io import load_planar, save_planar
from skewcs.planar import (
    Background,
    DiskGrid,
    PlanarNewtonFailure,
    VortexConfig,
    assemble_residual,
    continue_in_eps,
    newton_order,
    newton_solve,
    newton_step,
    planar_from_radial,
)
from skewcs.radial import RadialParams
from skewcs.shooting import DecayPair, solve_for_target

from conftest import rel

ACCEPT = VortexConfig(1, 1, ((0.5, 0.0),), ((-0.5, 0.0),), 1.0)


# ---------------------------------------------------------------------------
# configuration and background


def test_config_validation():
    with pytest.raises(ValueError):
        VortexConfig(1, 0, (), ())
    with pytest.raises(ValueError):
        VortexConfig(1, 0, ((math.nan, 0.0),), ())
    with pytest.raises(ValueError):
        VortexConfig(0, 0, eps=1.5)
    c = VortexConfig(2, 1, ((1, 2), (3, 4)), ((0, -1),), 0.5)
    assert VortexConfig.from_dict(c.to_dict()) == c
    assert np.allclose(c.scaled_points(1), [[0.5, 1.0], [1.5, 2.0]])


@given(st.floats(-3, 3), st.floats(-3, 3))
def test_background_laplacian_matches_g(x, y):
    bg = Background(VortexConfig(2, 1, ((0.7, -0.2), (-1.0, 1.0)), ((0.3, 0.9),), 0.8), 3.5, 4.0)
    for i in (1, 2):
        if np.min(np.hypot(*(np.array([x, y]) - bg.config.scaled_points(i)).T)) < 0.1:
            continue
        d = 1e-3
        lap = (bg.h(i, x + d, y) + bg.h(i, x - d, y) + bg.h(i, x, y + d) + bg.h(i, x, y - d)
               - 4 * bg.h(i, x, y)) / d**2
        assert lap == pytest.approx(-bg.g(i, x, y), abs=2e-3)


def test_weight_is_exponential_of_h_and_zero_at_vortices():
    bg = Background(ACCEPT, 4.0, 4.0)
    x, y = np.array([0.1, 2.0, -3.0]), np.array([0.4, -1.0, 0.5])
    for i in (1, 2):
        assert np.allclose(bg.weight(i, x, y), np.exp(bg.h(i, x, y)), rtol=1e-13)
    assert bg.weight(1, 0.5, 0.0) == 0.0 and bg.weight(2, -0.5, 0.0) == 0.0
    gx, gy = bg.grad_h(1, 1.3, -0.4)
    d = 1e-6
    assert gx == pytest.approx((bg.h(1, 1.3 + d, -0.4) - bg.h(1, 1.3 - d, -0.4)) / (2 * d), rel=1e-7)
    assert gy == pytest.approx((bg.h(1, 1.3, -0.4 + d) - bg.h(1, 1.3, -0.4 - d)) / (2 * d), rel=1e-7)


# ---------------------------------------------------------------------------
# grid and residual


def test_grid_shape():
    g = DiskGrid.with_spacing(3.0, 0.5)
    assert g.n == 13 and g.h == 0.5
    assert np.all(np.hypot(g.x, g.y) <= 3.0 * (1 + 1e-12))
    assert g.size == np.count_nonzero(g.index >= 0)
    with pytest.raises(ValueError):
        DiskGrid(3.0, 12)


def test_laplacian_conserves_flux():
    # every face is shared by two cells or carries the prescribed flux: columns sum to zero
    g = DiskGrid(5.0, 41)
    assert np.max(np.abs(np.asarray(g.laplacian.sum(axis=0)))) < 1e-12
    v = np.cos(g.x) * np.exp(-g.y**2)
    assert np.allclose(g.apply_laplacian(v), g.laplacian @ v, atol=1e-10)


def _interior(g):
    return np.setdiff1d(np.arange(g.size), g.face_node)


def test_residual_closed_form_without_vortices():
    bg = Background(VortexConfig(0, 0), 3.0, 5.0)
    g = DiskGrid(6.0, 49)
    zero = np.zeros(g.size)
    res = assemble_residual(zero, zero, bg, g)
    k = _interior(g)
    x, y = g.x[k], g.y[k]
    w1, w2 = (1 + x * x + y * y) ** -3.0, (1 + x * x + y * y) ** -5.0
    g1, g2 = 12 / (1 + x * x + y * y) ** 2, 20 / (1 + x * x + y * y) ** 2
    assert np.allclose(res.r1[k].astype(float), w2 * (1 - w1) - g1, rtol=0, atol=1e-14)
    assert np.allclose(res.r2[k].astype(float), w1 * (1 - w2) - g2, rtol=0, atol=1e-14)
    assert res.clamped == 0


def test_residual_clamps_positive_u():
    bg = Background(VortexConfig(0, 0), 3.0, 3.0)
    g = DiskGrid(4.0, 17)
    big = np.full(g.size, 5.0)
    res = assemble_residual(big, np.zeros(g.size), bg, g)
    assert res.clamped > 0 and float(np.max(res.e1)) == 1.0


def _manufactured_error(n):
    g = DiskGrid(4.0, n)
    bg = Background(VortexConfig(1, 1, ((0.3, 0.2),), ((-0.6, 0.1),), 1.0), 3.0, 4.0)
    x, y = g.x, g.y
    r2 = x * x + y * y
    vb1, vb2 = 0.3 * np.exp(-r2 / 4), -0.2 * np.exp(-r2 / 9) * np.cos(x)
    lap1 = 0.3 * np.exp(-r2 / 4) * (r2 / 4 - 1)
    # Laplacian of -0.2 e^{-r^2/9} cos x, by hand
    e = np.exp(-r2 / 9)
    lap2 = -0.2 * e * (np.cos(x) * ((4 * r2 / 81) - 4 / 9 - 1) + np.sin(x) * (4 * x / 9))
    w1, w2 = bg.weight(1, x, y) * np.exp(vb1), bg.weight(2, x, y) * np.exp(vb2)
    f1 = lap1 + w2 * (1 - w1) - bg.g(1, x, y)
    f2 = lap2 + w1 * (1 - w2) - bg.g(2, x, y)
    res = assemble_residual(vb1, vb2, bg, g)
    k = _interior(g)
    return max(np.max(np.abs(res.r1[k] - f1[k])), np.max(np.abs(res.r2[k] - f2[k])))


def test_manufactured_residual_second_order():
    errs = [float(_manufactured_error(n)) for n in (33, 65, 129)]
    orders = [math.log2(a / b) for a, b in zip(errs, errs[1:])]
    assert min(orders) > 1.8, (errs, orders)


# ---------------------------------------------------------------------------
# Newton and continuation


def test_newton_order_helper():
    assert math.isnan(newton_order([1.0, 0.1]))
    assert newton_order([1e-1, 1e-2, 1e-4]) == pytest.approx(2.0)


def test_path_steps_converge_quadratically(small_planar_path):
    assert [s.eps for s in small_planar_path] == [0.0, 0.25, 0.5, 0.75, 1.0]
    for s in small_planar_path[1:]:
        h = s.solution.newton_history
        assert s.solution.meta["converged"] and h[-1] < solver.NEWTON_TOL
        assert all(b < a for a, b in zip(h, h[1:]))
        assert newton_order(h) >= 1.8


def test_converged_state_is_a_fixed_point(small_planar_path):
    sol = small_planar_path[-1].solution
    again = newton_solve(sol)
    assert np.array_equal(again.v1, sol.v1) and np.array_equal(again.v2, sol.v2)
    # idempotence: re-assembling the stored fields reproduces the recorded norm
    res = assemble_residual(sol.v1, sol.v2, sol.background(), sol.grid)
    assert res.norm == sol.residual_norm
    try:
        step = newton_step(sol)
    except PlanarNewtonFailure as exc:
        assert "damping floor" in str(exc)
    else:
        assert step.meta["last_step"] < solver.NEWTON_TOL


def test_negativity_and_boundedness(small_planar_path):
    prev = None
    changes = []
    for s in small_planar_path:
        sol = s.solution
        g, bg = sol.grid, sol.background()
        for i in (1, 2):
            at_vortex = bg.weight(i, g.x, g.y) == 0.0
            assert np.count_nonzero(at_vortex) <= 1  # only when eps p lands on a node
            assert np.all(sol.u(i)[~at_vortex] < 0)
            assert np.all(sol.u(i)[at_vortex] == -np.inf)
        m = sol.max_abs_v
        assert math.isfinite(m)
        if prev is not None:
            changes.append(abs(m - prev))
        prev = m
    for a, b in zip(changes, changes[1:]):
        assert b <= 10 * a + 1e-12


def test_reflection_symmetry(small_planar_path):
    # points (+-0.5, 0): u_2(x, y) = u_1(-x, y), and both are even in y
    for s in small_planar_path:
        g = s.solution.grid
        a = g.to_square(s.solution.v1.astype(float), fill=0.0)
        b = g.to_square(s.solution.v2.astype(float), fill=0.0)
        assert np.max(np.abs(b - a[::-1, :])) < 1e-9
        assert np.max(np.abs(a - a[:, ::-1])) < 1e-9


def test_collapsed_step_matches_seed(small_planar_path, small_seed_44):
    step = small_planar_path[0]
    start = planar_from_radial(small_seed_44, ACCEPT.at(0.0), DecayPair(4, 4), step.solution.grid)
    d = max(np.max(np.abs(step.solution.v1 - start.v1)), np.max(np.abs(step.solution.v2 - start.v2)))
    assert float(d) < 5 * step.grid.field


def test_zero_length_path(small_seed_44):
    config = ACCEPT.at(0.0)
    path = continue_in_eps(small_seed_44, config, DecayPair(4, 4), 1, grid=DiskGrid(30.0, 61),
                           grid_check=False)
    assert len(path) == 1 and path[0].eps == 0.0
    assert path[0].report.grad_corr == 0.0


def test_seed_validation(small_seed_44):
    with pytest.raises(ValueError):
        planar_from_radial(small_seed_44, ACCEPT, DecayPair(4, 4), DiskGrid(10.0, 21))
    with pytest.raises(ValueError):
        continue_in_eps(small_seed_44, VortexConfig(1, 0, ((0, 0),), ()), DecayPair(4, 4), 2)
    with pytest.raises(ValueError):
        continue_in_eps(small_seed_44, ACCEPT, DecayPair(4, 4), [0.5, 0.25])


def test_symmetric_configuration_keeps_components_equal(small_seed_44):
    config = VortexConfig(1, 1, ((0.5, 0.0),), ((0.5, 0.0),), 1.0)
    grid = DiskGrid(30.0, 61)
    start = planar_from_radial(small_seed_44, config.at(0.0), DecayPair(4, 4), grid)
    assert np.array_equal(start.v1, start.v2)
    one = newton_step(replace(start, config=config.at(0.5)))
    assert float(np.max(np.abs(one.v1 - one.v2))) < 1e-12
    path = continue_in_eps(small_seed_44, config, DecayPair(4, 4), 2, grid=grid, grid_check=False,
                           report=False)
    for s in path:
        assert float(np.max(np.abs(s.solution.v1 - s.solution.v2))) < 1e-10


@pytest.fixture(scope="module")
def origin_vortex_seed():
    _, sol = solve_for_target(DecayPair(3, 3), RadialParams(1, 0, 1.0, 1.0))
    return sol


def test_vortex_at_origin_is_eps_independent(origin_vortex_seed):
    config = VortexConfig(1, 0, ((0.0, 0.0),), (), 1.0)
    path = continue_in_eps(origin_vortex_seed, config, DecayPair(3, 3), 3, grid=DiskGrid(30.0, 61),
                           grid_check=False)
    assert [s.eps for s in path] == pytest.approx([0.0, 1 / 3, 2 / 3, 1.0])
    for s in path[1:]:
        assert np.array_equal(s.solution.v1, path[0].solution.v1)
        assert np.array_equal(s.solution.v2, path[0].solution.v2)
        assert s.report.grad_corr == 0.0


def _failing_newton(monkeypatch, should_fail):
    real = solver.newton_solve

    def fake(state, tol=solver.NEWTON_TOL, max_iter=30):
        if should_fail(state.config.eps):
            raise PlanarNewtonFailure("forced", eps=state.config.eps)
        return real(state, tol, max_iter)

    monkeypatch.setattr(solver, "newton_solve", fake)


def test_failed_step_is_halved(monkeypatch, small_seed_44):
    tried = []

    def fail_once(eps):
        tried.append(eps)
        return eps == 0.5 and tried.count(0.5) == 1

    _failing_newton(monkeypatch, fail_once)
    path = continue_in_eps(small_seed_44, ACCEPT, DecayPair(4, 4), [0.5, 1.0], grid=DiskGrid(30.0, 61),
                           grid_check=False, report=False)
    assert [s.eps for s in path] == [0.0, 0.25, 0.5, 1.0]


def test_stalled_path_records_eps(monkeypatch, small_seed_44):
    _failing_newton(monkeypatch, lambda eps: eps > 0.3)
    with pytest.raises(PlanarNewtonFailure) as exc:
        continue_in_eps(small_seed_44, ACCEPT, DecayPair(4, 4), [0.25, 1.0], grid=DiskGrid(30.0, 61),
                        grid_check=False, report=False, eps_floor=1e-2)
    assert exc.value.eps is not None and 0.25 <= exc.value.eps <= 0.3


def test_save_load_round_trip(tmp_path, small_planar_path):
    sol = small_planar_path[-1].solution
    p = tmp_path / "planar.json"
    save_planar(sol, p, config={"note": "test"})
    back = load_planar(p)
    assert back.v1.dtype == np.longdouble
    assert np.array_equal(back.v1, sol.v1) and np.array_equal(back.v2, sol.v2)
    assert back.config == sol.config and back.decay == sol.decay
    assert (back.grid.radius, back.grid.n) == (sol.grid.radius, sol.grid.n)
    assert back.residual_norm == sol.residual_norm
    assert back.newton_history == sol.newton_history


def test_grid_refinement_within_claimed_tolerance(small_planar_path, small_seed_44):
    # the h = 0.5 estimate (built from its h = 1 companion) bounds the change to h = 0.25;
    # this grid is large enough to exercise the iterative linear solver
    step = small_planar_path[0]
    fine_grid = DiskGrid(30.0, 241)
    assert 2 * fine_grid.size > solver.DIRECT_MAX
    fine = newton_solve(planar_from_radial(small_seed_44, ACCEPT.at(0.0), DecayPair(4, 4), fine_grid))
    assert fine.meta["linear"]["method"] == "gmres-amg"
    a, _ = planar_integrals(step.solution)
    b, _ = planar_integrals(fine)
    for k in NAMES:
        assert rel(a[k], b[k]) < step.grid.report_tol
