"""Competition and harvesting terms, residual and Jacobian of the discrete equation.

The discrete problem is

    Delta_h u + a u - f(u) - c h = 0

on the interior nodes of a :class:`~harvestbif.grid.Grid`.
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .grid import (Grid, TridiagonalOperator, apply_laplacian, discrete_eigenpair,
                   inner_product, laplacian_operator, make_grid)


class ConfigurationError(ValueError):
    """Model data violating a standing hypothesis."""


@dataclass(frozen=True)
class CompetitionTerm:
    """f(u) = kappa * ((u - M)^+)^p."""

    M: float = 1.0
    kappa: float = 1.0
    p: int = 3

    def __post_init__(self):
        if self.M < 0:
            raise ConfigurationError(f"threshold M must be >= 0, got {self.M}")
        if self.kappa <= 0:
            raise ConfigurationError(f"kappa must be > 0, got {self.kappa}")
        if int(self.p) != self.p or self.p < 3:
            raise ConfigurationError(f"power p must be an integer >= 3 for f in C^2, got {self.p}")

    def value(self, u):
        s = np.maximum(np.asarray(u, dtype=float) - self.M, 0.0)
        return self.kappa * s**self.p

    def first(self, u):
        s = np.maximum(np.asarray(u, dtype=float) - self.M, 0.0)
        return self.kappa * self.p * s ** (self.p - 1)

    def second(self, u):
        s = np.maximum(np.asarray(u, dtype=float) - self.M, 0.0)
        return self.kappa * self.p * (self.p - 1) * s ** (self.p - 2)


def f_eval(f: CompetitionTerm, u: float) -> tuple[float, float, float]:
    return float(f.value(u)), float(f.first(u)), float(f.second(u))


@dataclass(frozen=True)
class HarvestTerm:
    modes: tuple[tuple[int, float], ...]
    values: np.ndarray = field(repr=False, compare=False)
    psi_component: float = 0.0

    @property
    def sign(self) -> int:
        return int(np.sign(self.psi_component))


def build_harvest(grid: Grid, modes, strict: bool = True) -> HarvestTerm:
    """h = sum_k b_k sin(k pi x), projected exactly orthogonal to the discrete phi.

    With ``strict=False`` a harvest violating <h, psi> != 0 is still built so
    that :func:`check_hypotheses` can report it.
    """
    modes = tuple((int(k), float(b)) for k, b in modes)
    if not modes:
        raise ConfigurationError("harvest needs at least one sine mode")
    for k, _ in modes:
        if k < 2 or k > grid.n:
            raise ConfigurationError(f"harvest mode k={k} must satisfy 2 <= k <= n")
    if all(b == 0.0 for _, b in modes):
        raise ConfigurationError("harvest coefficients are all zero")
    x = grid.nodes
    h = np.zeros(grid.n)
    for k, b in modes:
        h += b * np.sin(k * np.pi * x)
    _, phi = discrete_eigenpair(grid, 1)
    _, psi = discrete_eigenpair(grid, 2)
    h = h - inner_product(grid, h, phi) / inner_product(grid, phi, phi) * phi
    hpsi = inner_product(grid, h, psi)
    if strict and abs(hpsi) <= 1e-12 * max(1.0, np.abs(h).max()):
        raise ConfigurationError("harvest is orthogonal to the second eigenfunction (<h, psi> = 0)")
    h.setflags(write=False)
    return HarvestTerm(modes, h, hpsi)


@dataclass(frozen=True)
class Problem:
    """All fixed data of the discrete equation plus cached eigen-data."""

    grid: Grid
    f: CompetitionTerm
    h: HarvestTerm
    lam1: float = field(init=False)
    lam2: float = field(init=False)
    lam3: float = field(init=False)
    phi: np.ndarray = field(init=False, repr=False, compare=False)
    psi: np.ndarray = field(init=False, repr=False, compare=False)
    beta: float = field(init=False)

    def __post_init__(self):
        lam1, phi = discrete_eigenpair(self.grid, 1)
        lam2, psi = discrete_eigenpair(self.grid, 2)
        lam3, _ = discrete_eigenpair(self.grid, 3)
        for arr in (phi, psi):
            arr.setflags(write=False)
        object.__setattr__(self, "lam1", float(lam1))
        object.__setattr__(self, "lam2", float(lam2))
        object.__setattr__(self, "lam3", float(lam3))
        object.__setattr__(self, "phi", phi)
        object.__setattr__(self, "psi", psi)
        object.__setattr__(self, "beta", float(-psi.min()))

    @property
    def M(self) -> float:
        return self.f.M

    @property
    def hv(self) -> np.ndarray:
        return self.h.values

    def ip(self, u, v) -> float:
        return inner_product(self.grid, u, v)

    def t_phi(self, u) -> float:
        return self.ip(u, self.phi) / self.ip(self.phi, self.phi)

    def t_psi(self, u) -> float:
        return self.ip(u, self.psi) / self.ip(self.psi, self.psi)

    def a_from_rel(self, rel: float) -> float:
        """a = lam1 + rel * (lam2 - lam1)."""
        return float(self.lam1 + rel * (self.lam2 - self.lam1))

    def negated_harvest(self) -> "Problem":
        return make_problem(self.grid.n, M=self.f.M, kappa=self.f.kappa, p=self.f.p,
                            modes=[(k, -b) for k, b in self.h.modes])


def make_problem(n: int = 199, M: float = 1.0, kappa: float = 1.0, p: int = 3,
                 modes=((2, -1.0),)) -> Problem:
    grid = make_grid(n)
    return Problem(grid, CompetitionTerm(M, kappa, p), build_harvest(grid, modes))


def residual(problem: Problem, a: float, u: np.ndarray, c: float) -> np.ndarray:
    return apply_laplacian(problem.grid, u) + a * u - problem.f.value(u) - c * problem.hv


def jacobian(problem: Problem, a: float, u: np.ndarray) -> TridiagonalOperator:
    lap = laplacian_operator(problem.grid)
    return TridiagonalOperator(lap.diagonal + a - problem.f.first(u), lap.off_diagonal)


def sinalt_defect(problem: Problem, a: float, u: np.ndarray) -> float:
    """(a - lam1) t <phi, phi> - <f(u), phi>; vanishes at every solution."""
    pp = problem.ip(problem.phi, problem.phi)
    t = problem.ip(u, problem.phi) / pp
    return (a - problem.lam1) * t * pp - problem.ip(problem.f.value(u), problem.phi)


def check_hypotheses(problem: Problem, samples: int = 401) -> dict[str, bool]:
    """Pass/fail per standing hypothesis, checked on a sample of u values and on the grid."""
    f = problem.f
    M = f.M
    us = np.linspace(M - 5.0, M + 10.0, samples)
    vals, d1, d2 = f.value(us), f.first(us), f.second(us)
    below, above = us <= M, us > M
    eps = 1e-6
    fd1 = (f.value(us + eps) - f.value(us - eps)) / (2 * eps)
    fd2 = (f.first(us + eps) - f.first(us - eps)) / (2 * eps)
    scale = 1.0 + np.abs(d1) + np.abs(d2)
    big = np.array([M + 10.0**k for k in range(1, 7)])
    growth = f.value(big) / big
    h = problem.hv
    pp = problem.ip(problem.phi, problem.phi)
    return {
        "i": bool(np.all(np.abs(fd1 - d1) <= 1e-4 * scale) and np.all(np.abs(fd2 - d2) <= 1e-4 * scale)),
        "ii": bool(np.all(vals[below] == 0.0) and np.all(vals[above] > 0.0)),
        "iii": bool(np.all(d2 >= 0.0)),
        "iv": bool(np.all(np.diff(growth) > 0) and growth[-1] > 1e6),
        "a": bool(np.all(np.isfinite(h))),
        "b": bool(abs(problem.ip(h, problem.phi)) <= 1e-13 * max(1.0, np.sqrt(problem.ip(h, h) * pp))),
        "c": bool(abs(problem.ip(h, problem.psi)) > 1e-12),
    }
