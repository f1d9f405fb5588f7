from __future__ import annotations

import numpy as np
import pytest

from harvestbif.grid import TridiagonalOperator, laplacian_operator
from harvestbif.solver import (BorderedSingularError, ConvergenceError, SolverConfig, bordered_solve,
                               make_solution, newton_solve)


def test_bordered_matches_dense(rng):
    for n in (5, 20, 50):
        op = TridiagonalOperator(rng.normal(size=n) + 6, rng.normal(size=n - 1))
        row, col = rng.normal(size=(2, n))
        corner = rng.normal()
        rhs, rb = rng.normal(size=n), rng.normal()
        A = np.zeros((n + 1, n + 1))
        A[:n, :n] = op.dense()
        A[:n, n], A[n, :n], A[n, n] = col, row, corner
        ref = np.linalg.solve(A, np.append(rhs, rb))
        x, y = bordered_solve(op, row, col, corner, rhs, rb)
        assert np.allclose(np.append(x, y), ref, rtol=0, atol=1e-10 * max(1, np.abs(ref).max()))


def test_bordered_with_singular_block(problem):
    op = laplacian_operator(problem.grid).shifted(-problem.lam1)
    g, aux = bordered_solve(op, problem.phi, problem.phi, 0.0, problem.hv, 0.0)
    assert abs(aux) < 1e-10
    assert np.max(np.abs(op.matvec(g) - problem.hv)) < 1e-10
    assert abs(problem.ip(g, problem.phi)) < 1e-13


def test_bordered_singular_system_raises():
    op = TridiagonalOperator(np.zeros(4), np.zeros(3))
    with pytest.raises(BorderedSingularError):
        bordered_solve(op, np.zeros(4), np.zeros(4), 0.0, np.ones(4), 1.0)


def test_newton_linear_case_one_step(problem):
    hist = []
    sol = newton_solve(problem, 0.5 * problem.lam1, 1.0, np.zeros(199), history=hist)
    assert len(hist) == 2 and sol.residual_norm <= 1e-10
    assert sol.morse_index == 0


def test_newton_multistart_agreement(problem, rng):
    a, c = 0.3 * problem.lam1, 40.0
    sols = [newton_solve(problem, a, c, g) for g in
            (np.zeros(199), 3 * problem.phi, -2 * problem.psi, rng.normal(size=199))]
    for s in sols[1:]:
        assert np.max(np.abs(s.u - sols[0].u)) < 1e-8


def test_newton_quadratic_tail(problem):
    hist = []
    newton_solve(problem, 0.9 * problem.lam1, 60.0, 4 * problem.phi, history=hist)
    tail = [r for r in hist if r < 1e-4]
    for r0, r1 in zip(tail, tail[1:]):
        if r1 > 1e-9:  # above the rounding floor
            assert r1 <= 1e4 * r0**2


def test_newton_failure_raises(problem):
    with pytest.raises(ConvergenceError):
        newton_solve(problem, 20.0, 0.0, 5 * problem.phi, SolverConfig(max_iterations=1))


@pytest.mark.parametrize("kw", [{"newton_tol": 0.0}, {"damping_min": 0.0}, {"damping_min": 2.0},
                                {"max_iterations": 0}])
def test_solver_config_validation(kw):
    with pytest.raises(ValueError):
        SolverConfig(**kw)


def test_make_solution_rejects_non_solution(problem):
    with pytest.raises(ConvergenceError):
        make_solution(problem, 5.0, problem.phi, 0.0)


def test_solution_identity(problem):
    s = newton_solve(problem, 0.9 * problem.lam1, -30.0, np.zeros(199))
    assert abs(s.sinalt) <= 1e-9
    assert s.t_phi <= 1e-9  # a < lam1 forces t <= 0
