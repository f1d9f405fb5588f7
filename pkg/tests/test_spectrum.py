from __future__ import annotations

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from harvestbif.grid import TridiagonalOperator, laplacian_operator
from harvestbif.spectrum import (bisect_eigenvalue, eigenpair, inertia, linearised_operator,
                                 morse_index, orient_kernel, smallest_eigenpair, sturm_count)


def random_operator(rng, n):
    return TridiagonalOperator(rng.normal(size=n) * 10, rng.normal(size=n - 1) * 5)


@settings(max_examples=20, deadline=None)
@given(st.integers(0, 2**32 - 1), st.integers(3, 50))
def test_sturm_count_matches_dense(seed, n):
    rng = np.random.default_rng(seed)
    op = random_operator(rng, n)
    ev = np.linalg.eigvalsh(op.dense())
    x = rng.normal() * 10
    assert sturm_count(op, x) == int(np.sum(ev < x))


def test_eigenvalues_match_dense(rng):
    for n in (7, 31, 50):
        op = random_operator(rng, n)
        ev = np.linalg.eigvalsh(op.dense())
        for k in range(3):
            lam, v = eigenpair(op, k)
            assert lam == pytest.approx(ev[k], abs=1e-10 * max(1, abs(ev[k])))
            assert np.max(np.abs(op.matvec(v) - lam * v)) < 1e-8 * max(1.0, np.abs(ev).max())


def test_bisection_only(rng):
    op = random_operator(rng, 40)
    ev = np.linalg.eigvalsh(op.dense())
    assert bisect_eigenvalue(op, 1, rtol=1e-14) == pytest.approx(ev[1], abs=1e-10)


def test_inertia_of_shifted_laplacian(problem):
    op = laplacian_operator(problem.grid).negated()
    assert inertia(op, 0.5 * (problem.lam1 + problem.lam2)) == (1, 0, 198)
    assert inertia(op, problem.lam2, band=1e-6) == (1, 1, 197)


def test_morse_index_below_lam1(problem):
    a = 0.5 * problem.lam1
    rep = morse_index(problem, a, np.zeros(199))
    assert rep.morse_index == 0 and not rep.degenerate
    assert rep.smallest_eigenvalue == pytest.approx(problem.lam1 - a, rel=1e-9)


def test_segment_point_is_degenerate_index_one(problem):
    rep = morse_index(problem, problem.lam2, 0.7 * problem.psi)
    assert rep.morse_index == 1 and rep.degenerate
    w = rep.kernel_vector
    psi = problem.psi / np.sqrt(problem.ip(problem.psi, problem.psi))
    assert abs(problem.ip(w, psi)) / np.sqrt(problem.ip(w, w)) == pytest.approx(1.0, abs=1e-10)
    assert problem.ip(w, w) == pytest.approx(problem.ip(problem.phi, problem.phi), rel=1e-12)


def test_index_two_above_lam2(problem):
    a = problem.lam2 + 0.05 * (problem.lam3 - problem.lam2)
    assert morse_index(problem, a, np.zeros(199)).morse_index == 2


def test_smallest_eigenpair_normalised(problem):
    lam, v = smallest_eigenpair(laplacian_operator(problem.grid).negated(), problem.grid)
    assert lam == pytest.approx(problem.lam1, rel=1e-12)
    assert np.all(v > 0)
    assert problem.ip(v, v) == pytest.approx(0.5, rel=1e-12)


def test_orient_kernel_sign(problem):
    w = orient_kernel(problem, -3.0 * problem.phi)
    assert np.all(w > 0)
    assert np.allclose(w, problem.phi)


def test_linearised_operator_is_negated_jacobian(problem):
    L = linearised_operator(problem, 3.0, np.ones(199) * 1.5)
    assert np.allclose(L.diagonal, 2 / problem.grid.spacing**2 - 3.0 + 3 * 0.25)
