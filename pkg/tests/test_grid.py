from __future__ import annotations

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from harvestbif.grid import (Grid, apply_laplacian, discrete_eigenpair, discrete_eigenvalue,
                             inner_product, laplacian_operator, make_grid, norm, second_mode_depth)


def dense_laplacian(n, h):
    return (np.diag(-2.0 * np.ones(n)) + np.diag(np.ones(n - 1), 1) + np.diag(np.ones(n - 1), -1)) / h**2


def test_grid_nodes_and_spacing():
    g = make_grid(199)
    assert g.spacing == 1.0 / 200
    assert g.nodes[0] == pytest.approx(0.005) and g.nodes[-1] == pytest.approx(0.995)
    assert not g.nodes.flags.writeable


@pytest.mark.parametrize("n", [2, 10, 198, 200])
def test_grid_rejects_bad_sizes(n):
    with pytest.raises(ValueError):
        make_grid(n)


@pytest.mark.parametrize("n,k", [(199, 1), (199, 2), (199, 3), (63, 2), (399, 1)])
def test_eigenvalue_closed_form(n, k):
    g = make_grid(n)
    h = g.spacing
    exact = 4.0 / h**2 * np.sin(k * np.pi * h / 2) ** 2
    assert abs(discrete_eigenvalue(g, k) - exact) <= 1e-12 * exact


def test_reference_eigenvalues():
    g = make_grid(199)
    assert discrete_eigenvalue(g, 1) == pytest.approx(9.869401467, abs=1e-9)
    assert discrete_eigenvalue(g, 2) == pytest.approx(39.475170741, abs=1e-9)


def test_eigen_residual_and_normalisation():
    g = make_grid(199)
    for k in (1, 2, 3):
        lam, v = discrete_eigenpair(g, k)
        assert np.max(np.abs(apply_laplacian(g, v) + lam * v)) < 1e-10
        assert np.max(v) == pytest.approx(1.0, abs=1e-15)


def test_second_mode_depth_is_one():
    for n in (63, 199, 399):
        assert second_mode_depth(make_grid(n)) == 1.0


def test_laplacian_matches_dense():
    g = make_grid(31)
    u = np.random.default_rng(0).normal(size=31)
    ref = dense_laplacian(31, g.spacing) @ u
    assert np.allclose(apply_laplacian(g, u), ref, rtol=0, atol=1e-9)
    assert np.allclose(laplacian_operator(g).dense(), dense_laplacian(31, g.spacing))


def test_inner_product_rectangle_rule():
    g = make_grid(199)
    _, phi = discrete_eigenpair(g, 1)
    assert inner_product(g, phi, phi) == pytest.approx(0.5, rel=1e-12)
    assert norm(g, phi) == pytest.approx(np.sqrt(0.5), rel=1e-12)


@settings(max_examples=25, deadline=None)
@given(st.integers(0, 2**32 - 1))
def test_laplacian_symmetric_and_negative(seed):
    g = make_grid(31)
    rng = np.random.default_rng(seed)
    u, v = rng.normal(size=(2, 31))
    lu, lv = apply_laplacian(g, u), apply_laplacian(g, v)
    assert inner_product(g, lu, v) == pytest.approx(inner_product(g, u, lv), rel=1e-9, abs=1e-9)
    assert inner_product(g, lu, u) < 0


def test_grid_sample():
    g = Grid(7)
    assert np.allclose(g.sample(lambda x: 2 * x), 2 * g.nodes)
