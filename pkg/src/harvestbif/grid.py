"""Uniform Dirichlet grid on (0, 1) and the 3-point Laplacian."""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np


@dataclass(frozen=True)
class Grid:
    """Interior nodes x_i = i*spacing, i = 1..n, of a uniform grid on (0, 1)."""

    n: int
    spacing: float = field(init=False)
    nodes: np.ndarray = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        if not isinstance(self.n, (int, np.integer)) or self.n < 3:
            raise ValueError(f"grid needs n >= 3 interior nodes, got {self.n!r}")
        if (self.n + 1) % 4 != 0:
            raise ValueError(f"n + 1 must be divisible by 4 so x = 1/4, 1/2, 3/4 are nodes (n={self.n})")
        spacing = 1.0 / (self.n + 1)
        nodes = np.arange(1, self.n + 1) * spacing
        nodes.setflags(write=False)
        object.__setattr__(self, "spacing", spacing)
        object.__setattr__(self, "nodes", nodes)

    def sample(self, fn) -> np.ndarray:
        return np.asarray(fn(self.nodes), dtype=float)


@dataclass(frozen=True)
class TridiagonalOperator:
    """Symmetric tridiagonal matrix stored by its two bands."""

    diagonal: np.ndarray
    off_diagonal: np.ndarray

    def __post_init__(self):
        d = np.asarray(self.diagonal, dtype=float)
        e = np.asarray(self.off_diagonal, dtype=float)
        if e.shape != (d.size - 1,):
            raise ValueError("off_diagonal must have length n - 1")
        object.__setattr__(self, "diagonal", d)
        object.__setattr__(self, "off_diagonal", e)

    @property
    def n(self) -> int:
        return self.diagonal.size

    def matvec(self, v: np.ndarray) -> np.ndarray:
        out = self.diagonal * v
        out[:-1] += self.off_diagonal * v[1:]
        out[1:] += self.off_diagonal * v[:-1]
        return out

    def shifted(self, shift: float) -> "TridiagonalOperator":
        return TridiagonalOperator(self.diagonal - shift, self.off_diagonal)

    def negated(self) -> "TridiagonalOperator":
        return TridiagonalOperator(-self.diagonal, -self.off_diagonal)

    def banded(self) -> np.ndarray:
        """(3, n) layout for scipy.linalg.solve_banded with (l, u) = (1, 1)."""
        ab = np.zeros((3, self.n))
        ab[0, 1:] = self.off_diagonal
        ab[1] = self.diagonal
        ab[2, :-1] = self.off_diagonal
        return ab

    def dense(self) -> np.ndarray:
        return (np.diag(self.diagonal) + np.diag(self.off_diagonal, 1)
                + np.diag(self.off_diagonal, -1))


def make_grid(n: int) -> Grid:
    return Grid(n)


def apply_laplacian(grid: Grid, u: np.ndarray) -> np.ndarray:
    """Delta_h u with zero Dirichlet values outside the interior nodes.

    Differences of neighbours are formed first; for smooth u this keeps the
    rounding error of the stencil at O(eps*|u'|/h) instead of O(eps*|u|/h^2).
    """
    u = np.asarray(u, dtype=float)
    padded = np.concatenate(([0.0], u, [0.0]))
    diff = np.diff(padded)
    return (diff[1:] - diff[:-1]) / grid.spacing**2


def laplacian_operator(grid: Grid) -> TridiagonalOperator:
    h2 = grid.spacing**2
    return TridiagonalOperator(np.full(grid.n, -2.0 / h2), np.full(grid.n - 1, 1.0 / h2))


def inner_product(grid: Grid, u: np.ndarray, v: np.ndarray) -> float:
    """Rectangle rule <u, v> = spacing * sum u_i v_i."""
    return float(grid.spacing * np.dot(u, v))


def norm(grid: Grid, u: np.ndarray) -> float:
    return float(np.sqrt(grid.spacing * np.dot(u, u)))


def discrete_eigenvalue(grid: Grid, k: int) -> float:
    if not 1 <= k <= grid.n:
        raise ValueError(f"eigen index k={k} outside 1..{grid.n}")
    return 4.0 / grid.spacing**2 * np.sin(k * np.pi * grid.spacing / 2.0) ** 2


def discrete_eigenpair(grid: Grid, k: int) -> tuple[float, np.ndarray]:
    """k-th Dirichlet eigenpair of -Delta_h, eigenvector scaled to max entry 1."""
    lam = discrete_eigenvalue(grid, k)
    vec = np.sin(k * np.pi * grid.nodes)
    vec = vec / vec.max()
    return lam, vec


def second_mode_depth(grid: Grid) -> float:
    """beta = -min psi for the max-normalised second eigenvector."""
    _, psi = discrete_eigenpair(grid, 2)
    return float(-psi.min())
