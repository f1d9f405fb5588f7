from __future__ import annotations

import numpy as np
import pytest

from harvestbif.grid import make_grid
from harvestbif.model import CompetitionTerm, HarvestTerm, Problem
from harvestbif.verify import (FLAGGED, PASS, SuiteConfig, check_lambda1_geometry, count_nodal_domains,
                               dense_fold_scan, run_suite, stable_two_nodal_search)


def test_nodal_domains_examples(problem):
    assert count_nodal_domains(problem.phi) == 1
    assert count_nodal_domains(problem.psi, 1e-12) == 2
    assert count_nodal_domains(np.zeros(10)) == 0
    noisy = np.array([1.0, -1e-15, 1.0, -1.0])
    assert count_nodal_domains(noisy) == 4
    assert count_nodal_domains(noisy, 1e-12) == 3  # zero nodes separate components of u != 0
    with pytest.raises(ValueError):
        count_nodal_domains(problem.phi, -1.0)


def test_lambda1_geometry_passes(problem):
    assert check_lambda1_geometry(problem, np.random.default_rng(0)).status == PASS


def test_corrupted_harvest_fails_bijection():
    g = make_grid(199)
    raw = -np.sin(2 * np.pi * g.nodes) + 0.3 * np.sin(np.pi * g.nodes)  # phi component left in
    psi_comp = float(np.sum(raw * np.sin(2 * np.pi * g.nodes)) * g.spacing)
    bad = Problem(g, CompetitionTerm(), HarvestTerm(((2, -1.0), (1, 0.3)), raw, psi_comp))
    chk = check_lambda1_geometry(bad, np.random.default_rng(0))
    assert chk.status != PASS
    assert chk.measured["bijection_inside_failures"] > 0


def test_two_nodal_none_below_lam1(problem):
    w = stable_two_nodal_search(problem, (0.5 * problem.lam1, 0.9 * problem.lam1), (0.0, 0.0))
    assert w is None


def test_two_nodal_witness_above_lam2(problem, delta_branch):
    delta, br = delta_branch
    w = stable_two_nodal_search(problem, (br.a, br.a), (-np.inf, 0.0), branches=[br])
    assert w is not None and w.morse_index == 0 and w.domains >= 2 and w.c < 0


def test_dense_fold_scan_matches_sparse(small_problem):
    from harvestbif.continuation import FOLD0, trace_branch
    p = small_problem
    a = p.a_from_rel(0.5)
    br = trace_branch(p, a)
    hi = max(fp.c for fp in br.fold_points(FOLD0))
    assert abs(dense_fold_scan(p, a, +1, 0.05, 2 * hi) - hi) <= 0.1


def test_smoke_suite_deterministic(problem):
    r1 = run_suite(problem, SuiteConfig(level="smoke", seed=3))
    r2 = run_suite(problem, SuiteConfig(level="smoke", seed=3))
    assert r1.statuses() == r2.statuses()
    assert all(s in (PASS, FLAGGED) for s in r1.statuses().values())
    assert r1.passed
    text = r1.to_text()
    assert text.splitlines()[-1] == "overall: PASS"


def test_suite_config_validation():
    with pytest.raises(ValueError):
        SuiteConfig(level="quick")
    assert SuiteConfig(seed=1).digest() != SuiteConfig(seed=2).digest()
