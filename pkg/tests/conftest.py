import math
import time

import numpy as np
import pytest
from hypothesis import HealthCheck, settings

import skewcs.shooting
from skewcs.radial import RadialParams, log_rhs, LogState

settings.register_profile("default", deadline=None, max_examples=40,
                          suppress_health_check=[HealthCheck.too_slow])
settings.register_profile("ci", deadline=None, max_examples=15,
                          suppress_health_check=[HealthCheck.too_slow])
settings.load_profile("default")

_ACCEPTANCE_KEY = pytest.StashKey[dict]()


def pytest_configure(config):
    config.stash[_ACCEPTANCE_KEY] = {}


@pytest.fixture
def acceptance(request):
    """Record the outcome of an acceptance criterion; printed in the terminal summary."""
    store = request.config.stash[_ACCEPTANCE_KEY]

    def record(number: int, passed: bool, detail: str):
        store[number] = (bool(passed), detail)
        return passed

    return record


def pytest_terminal_summary(terminalreporter, exitstatus, config):
    store = config.stash.get(_ACCEPTANCE_KEY, {})
    if not store:
        return
    terminalreporter.section("acceptance criteria")
    for k in sorted(store):
        ok, detail = store[k]
        if k == 4:
            detail += f"; {len(_CERTIFIED)} target solves across the whole run"
        terminalreporter.write_line(f"criterion {k:2d}: {'PASS' if ok else 'FAIL'}  {detail}")


# ---------------------------------------------------------------------------
# checks shared by every module


def check_negative_monotone(sol):
    """u_i < 0 at every sample and r u_i' decreasing.

    The decrease is asserted strictly wherever the predicted change over the
    sample interval exceeds a few ulps of m; below that the two samples can
    round to the same float.
    """
    assert np.all(sol.u1 < 0.0) and np.all(sol.u2 < 0.0)
    s1, s2 = sol.params.strengths
    assert np.all(sol.m1 <= 2 * s1 + 1e-12) and np.all(sol.m2 <= 2 * s2 + 1e-12)
    dt = np.diff(sol.t)
    for col, m in ((2, sol.m1), (3, sol.m2)):
        d = np.diff(m)
        assert np.all(d <= 0.0)
        rates = np.array([abs(log_rhs(LogState(*row), sol.params)[col]) for row in sol.samples[:-1]])
        resolvable = rates * dt > 8 * np.spacing(np.abs(m[:-1]))
        assert np.all(d[resolvable] < 0.0)


_CERTIFIED = []
_solve_for_target = skewcs.shooting.solve_for_target


def _checked_solve(*args, **kw):
    # every target solve made anywhere in the suite (tests, CLI in-process) is checked here
    sp, sol = _solve_for_target(*args, **kw)
    if sol.certified:
        check_negative_monotone(sol)
        _CERTIFIED.append(sol)
    return sp, sol


skewcs.shooting.solve_for_target = _checked_solve
solve_for_target = _checked_solve
DecayPair = skewcs.shooting.DecayPair


@pytest.fixture(scope="session")
def certified_checks():
    """Every certified radial solve of the suite passes through here (criterion 4 tally)."""
    seen = []

    def check(sol):
        check_negative_monotone(sol)
        seen.append(sol)
        return sol

    check.seen = seen
    return check


def _timed_solve(target, params, **kw):
    t0 = time.perf_counter()
    sp, sol = solve_for_target(DecayPair(*target), params, **kw)
    return sp, sol, time.perf_counter() - t0


@pytest.fixture(scope="session")
def radial_33(certified_checks):
    sp, sol, dt = _timed_solve((3, 3), RadialParams(0, 0, 1.0, 1.0))
    certified_checks(sol)
    return sp, sol, dt


@pytest.fixture(scope="session")
def radial_46(certified_checks):
    sp, sol, dt = _timed_solve((4, 6), RadialParams(1, 2, 1.0, 1.0))
    certified_checks(sol)
    return sp, sol, dt


@pytest.fixture(scope="session")
def radial_44_sym(certified_checks):
    sp, sol, dt = _timed_solve((4, 4), RadialParams(1, 1, 1.0, 1.0), symmetric=True)
    certified_checks(sol)
    return sp, sol, dt


@pytest.fixture(scope="session")
def radial_44_general(certified_checks):
    sp, sol, dt = _timed_solve((4, 4), RadialParams(1, 1, 1.0, 1.0))
    certified_checks(sol)
    return sp, sol, dt


@pytest.fixture(scope="session")
def acceptance_path(radial_44_sym):
    """N=(1,1), points (+-0.5, 0), beta=(4,4), eps 0 -> 1 in 10 steps on R=40, h=0.2."""
    from skewcs.planar import DiskGrid, VortexConfig, continue_in_eps

    _, seed, _ = radial_44_sym
    config = VortexConfig(1, 1, ((0.5, 0.0),), ((-0.5, 0.0),), 1.0)
    grid = DiskGrid.with_spacing(40.0, 0.2)
    t0 = time.perf_counter()
    path = continue_in_eps(seed, config, DecayPair(4, 4), 10, grid=grid)
    return path, time.perf_counter() - t0


@pytest.fixture(scope="session")
def small_seed_44(radial_44_sym):
    return radial_44_sym[1]


def rel(a, b):
    return abs(a - b) / max(abs(b), 1e-300)


FOUR_PI = 4 * math.pi


@pytest.fixture(scope="session")
def small_planar_path(radial_44_sym):
    """The acceptance configuration on a coarse grid (R=30, h=0.5), eps 0 -> 1 in 4 steps."""
    from skewcs.planar import DiskGrid, VortexConfig, continue_in_eps

    _, seed, _ = radial_44_sym
    config = VortexConfig(1, 1, ((0.5, 0.0),), ((-0.5, 0.0),), 1.0)
    return continue_in_eps(seed, config, DecayPair(4, 4), 4, grid=DiskGrid(30.0, 121))
