from __future__ import annotations

import numpy as np
import pytest

from harvestbif.grid import apply_laplacian, discrete_eigenvalue
from harvestbif.lambda1 import (build_lambda_set, c_range_at_t, compute_T, in_lambda, inverse_c_minus,
                                solve_resolvent_g, t_c_profile, tau0, tau_and_limit, tau_hat)
from harvestbif.model import make_problem, residual


@pytest.fixture(scope="module")
def ls(problem):
    return build_lambda_set(problem)


@pytest.fixture(scope="module")
def ls0(problem_m0):
    return build_lambda_set(problem_m0)


def test_g_default_is_scaled_mode(problem):
    g = solve_resolvent_g(problem)
    x = problem.grid.nodes
    ref = np.sin(2 * np.pi * x) / (problem.lam2 - problem.lam1)
    assert np.max(np.abs(g - ref)) < 1e-13
    assert problem.ip(g, problem.psi) > 0


def test_g_two_modes_per_mode_division():
    p = make_problem(modes=[(2, -1.0), (4, 0.6)])
    g = solve_resolvent_g(p)
    x, n = p.grid.nodes, p.grid
    # (Delta_h + lam1) sin(k pi x) = (lam1 - lam_k) sin(k pi x)
    ref = sum(b * np.sin(k * np.pi * x) / (p.lam1 - discrete_eigenvalue(n, k)) for k, b in ((2, -1.0), (4, 0.6)))
    assert np.max(np.abs(g - ref)) < 1e-12


def test_g_invariants(problem, ls):
    g = ls.g
    r = apply_laplacian(problem.grid, g) + problem.lam1 * g - problem.hv
    assert np.max(np.abs(r)) < 1e-11
    assert abs(problem.ip(g, problem.phi)) < 1e-13
    assert g.max() > 0 > g.min()


def test_c_range_m0_at_zero(problem_m0, ls0):
    assert c_range_at_t(ls0, problem_m0, 0.0) == (0.0, 0.0)
    assert ls0.T == 0.0


def test_c_range_symmetric_m1(problem, ls):
    lo, hi = c_range_at_t(ls, problem, 0.0)
    ref = problem.M / ls.g[ls.g > 0].max()
    assert hi == pytest.approx(ref, rel=1e-14)
    assert lo == pytest.approx(-hi, rel=1e-12)


def test_c_range_far_left(problem, ls):
    lo, hi = c_range_at_t(ls, problem, -1e3)
    assert lo < -1e3 and hi > 1e3


def test_c_range_matches_scan(problem, ls, rng):
    for t in rng.uniform(-5, ls.T, 20):
        lo, hi = c_range_at_t(ls, problem, t)
        for c in (lo, hi):
            assert np.max(t * problem.phi + c * ls.g) == pytest.approx(problem.M, abs=1e-12)


def test_T_properties(problem, ls):
    assert ls.T >= problem.M
    assert compute_T(ls, problem) == ls.T
    assert c_range_at_t(ls, problem, ls.T - 1e-6) is not None
    assert c_range_at_t(ls, problem, ls.T + 1e-6) is None
    lo, hi = c_range_at_t(ls, problem, problem.M)
    assert lo <= 0 <= hi


def test_T_above_M_case():
    p = make_problem(modes=[(2, -1.0), (3, 0.5)])
    ls = build_lambda_set(p)
    assert ls.T > p.M + 1e-3
    lo, hi = c_range_at_t(ls, p, p.M)
    assert min(abs(lo), abs(hi)) < 1e-9


def test_boundary_curves_shape(ls):
    cm, cp = ls.c_minus, ls.c_plus
    assert np.all(np.diff(cm) > 0) and np.all(np.diff(cp) < 0)
    assert np.all(np.diff(cm, 2) >= -1e-10) and np.all(np.diff(cp, 2) <= 1e-10)
    assert np.all(cm <= cp)
    assert ls.c_star_minus <= 0 <= ls.c_star_plus


def test_tau0_cases(problem, ls):
    t, u = tau_and_limit(ls, 0.0)
    assert t == 0.0 and np.all(u == 0.0)
    assert tau0(ls, ls.c_star_minus) == 0.0
    cs = np.linspace(ls.c_star_minus - 5, ls.c_star_minus - 0.1, 12)
    ts = [tau0(ls, c) for c in cs]
    assert all(t < 0 for t in ts) and np.all(np.diff(ts) > 0)
    for c, t in zip(cs, ts):
        assert c_range_at_t(ls, problem, t)[0] == pytest.approx(c, abs=1e-9)


def test_tau_hat_barrier(ls):
    c = ls.c_star_plus + 3
    assert tau_hat(ls, c, -0.5) == min(-0.5, tau0(ls, c))
    assert tau_hat(ls, 0.0, -0.5) == -0.5


def test_t_c_profile(problem, ls):
    assert t_c_profile(ls, 0.0) == ls.T
    assert t_c_profile(ls, ls.c_star_plus) == pytest.approx(0.0, abs=1e-10)
    lo_T, hi_T = c_range_at_t(ls, problem, ls.T)
    assert abs(t_c_profile(ls, hi_T) - ls.T) < 1e-8


def test_t_c_profile_seam_with_T_above_M():
    p = make_problem(modes=[(2, -1.0), (3, 0.5)])
    ls = build_lambda_set(p)
    lo_T, hi_T = c_range_at_t(ls, p, ls.T)
    for seam in (lo_T, hi_T):
        if ls.c_star_minus < seam < ls.c_star_plus:
            assert abs(t_c_profile(ls, seam + 1e-9) - t_c_profile(ls, seam - 1e-9)) < 1e-6


def test_t_c_profile_rejects(ls, ls0):
    with pytest.raises(ValueError):
        t_c_profile(ls0, 0.0)
    with pytest.raises(ValueError):
        t_c_profile(ls, ls.c_star_plus + 1)


def test_inverse_out_of_range(ls):
    with pytest.raises(ValueError):
        inverse_c_minus(ls, ls.c_plus.max() + 100)


def test_bijection(problem, ls, rng):
    inside = outside = 0
    while inside < 50 or outside < 50:
        t = rng.uniform(min(-1.0, ls.T - 1), ls.T)
        r = c_range_at_t(ls, problem, t)
        c = rng.uniform(r[0] - 20, r[1] + 20)
        u = t * problem.phi + c * ls.g
        if r[0] < c < r[1] and inside < 50:
            inside += 1
            assert np.max(np.abs(residual(problem, problem.lam1, u, c))) <= 1e-10
            assert u.max() <= problem.M + 1e-10
        elif not in_lambda(ls, t, c) and outside < 50:
            outside += 1
            assert u.max() > problem.M


def test_convexity(problem, ls, rng):
    pts = []
    while len(pts) < 40:
        t = rng.uniform(-3, ls.T)
        lo, hi = c_range_at_t(ls, problem, t)
        pts.append((t, rng.uniform(lo, hi)))
    for (t1, c1), (t2, c2) in zip(pts[::2], pts[1::2]):
        assert in_lambda(ls, 0.5 * (t1 + t2), 0.5 * (c1 + c2))
