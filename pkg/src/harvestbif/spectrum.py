"""Inertia, bottom eigenpairs and Morse index of the linearised operator.

All counting goes through Sturm sequences of symmetric tridiagonal matrices,
which stay well defined at shifts sitting exactly on an eigenvalue.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.linalg import LinAlgError, solve_banded

from .grid import Grid, TridiagonalOperator, discrete_eigenpair, inner_product
from .model import Problem, jacobian

TOL_DEG = 1e-8


class SpectrumError(RuntimeError):
    """Inverse iteration failed to settle on an eigenvector."""


@dataclass(frozen=True)
class SpectrumReport:
    morse_index: int
    smallest_eigenvalue: float
    degenerate: bool
    kernel_vector: np.ndarray | None = None


def sturm_count(op: TridiagonalOperator, x: float) -> int:
    """Number of eigenvalues of op strictly below x."""
    d = op.diagonal.tolist()
    e2 = (op.off_diagonal**2).tolist()
    pivmin = 1e-300 + 1e-290 * (max(e2) if e2 else 0.0)
    count = 0
    q = d[0] - x
    if abs(q) < pivmin:
        q = -pivmin
    if q < 0:
        count += 1
    for i in range(1, len(d)):
        q = d[i] - x - e2[i - 1] / q
        if abs(q) < pivmin:
            q = -pivmin
        if q < 0:
            count += 1
    return count


def inertia(op: TridiagonalOperator, shift: float, band: float = 0.0) -> tuple[int, int, int]:
    """(negatives, zeros, positives) of op - shift*I, zeros meaning |lambda - shift| <= band."""
    below = sturm_count(op, shift - band)
    upto = sturm_count(op, np.nextafter(shift + band, np.inf)) if band > 0 else below
    return below, upto - below, op.n - upto


def _gershgorin(op: TridiagonalOperator) -> tuple[float, float]:
    r = np.zeros(op.n)
    r[:-1] += np.abs(op.off_diagonal)
    r[1:] += np.abs(op.off_diagonal)
    return float(np.min(op.diagonal - r)), float(np.max(op.diagonal + r))


def bisect_eigenvalue(op: TridiagonalOperator, k: int, rtol: float = 1e-7) -> float:
    """k-th smallest eigenvalue (0-based) by bisection on Sturm counts."""
    lo, hi = _gershgorin(op)
    width = hi - lo
    lo -= 1e-12 * max(1.0, width)
    hi += 1e-12 * max(1.0, width)
    scale = max(abs(lo), abs(hi), 1.0)
    while hi - lo > rtol * scale:
        mid = 0.5 * (lo + hi)
        if sturm_count(op, mid) > k:
            hi = mid
        else:
            lo = mid
    return 0.5 * (lo + hi)


def inverse_iteration(op: TridiagonalOperator, shift: float, start: np.ndarray | None = None,
                      iterations: int = 4) -> tuple[float, np.ndarray]:
    """Eigenpair of op closest to shift; returns (Rayleigh quotient, unit vector)."""
    n = op.n
    v = np.ones(n) if start is None else np.array(start, dtype=float)
    v /= np.linalg.norm(v)
    scale = max(1.0, float(np.max(np.abs(op.diagonal))))
    sigma = shift
    for attempt in range(4):
        ab = op.shifted(sigma).banded()
        try:
            w = v
            for _ in range(iterations):
                w = solve_banded((1, 1), ab, w, check_finite=False)
                nrm = np.linalg.norm(w)
                if not np.isfinite(nrm) or nrm == 0.0:
                    raise LinAlgError("inverse iteration produced a non-finite vector")
                w = w / nrm
            break
        except (LinAlgError, ValueError):
            sigma = shift + (attempt + 1) * 1e-12 * scale
    else:
        raise SpectrumError(f"inverse iteration failed near shift {shift!r}")
    lam = float(w @ op.matvec(w))
    res = np.linalg.norm(op.matvec(w) - lam * w)
    if res > 1e-6 * scale:
        raise SpectrumError(f"inverse iteration did not converge (residual {res:.3e})")
    return lam, w


def _normalise(vec: np.ndarray, grid: Grid | None, phi: np.ndarray | None = None) -> np.ndarray:
    vec = vec / vec[np.argmax(np.abs(vec))]
    if grid is not None:
        if phi is None:
            _, phi = discrete_eigenpair(grid, 1)
        vec = vec * np.sqrt(inner_product(grid, phi, phi) / inner_product(grid, vec, vec))
    return vec


def eigenpair(op: TridiagonalOperator, k: int, grid: Grid | None = None) -> tuple[float, np.ndarray]:
    """k-th smallest eigenpair; vector max-normalised (largest entry +1), then scaled so
    <w, w> = <phi, phi> when a grid is given."""
    guess = bisect_eigenvalue(op, k)
    lam, vec = inverse_iteration(op, guess)
    return lam, _normalise(vec, grid)


def smallest_eigenpair(op: TridiagonalOperator, grid: Grid | None = None) -> tuple[float, np.ndarray]:
    return eigenpair(op, 0, grid)


def linearised_operator(problem: Problem, a: float, u: np.ndarray) -> TridiagonalOperator:
    """L = -Delta_h - a + f'(u), the negated Jacobian."""
    return jacobian(problem, a, u).negated()


def degeneracy_band(problem: Problem, tol_deg: float = TOL_DEG) -> float:
    return tol_deg * max(1.0, problem.lam1)


def morse_index(problem: Problem, a: float, u: np.ndarray, tol_deg: float = TOL_DEG) -> SpectrumReport:
    """Morse index and degeneracy of the solution (a, u, .).

    The index counts eigenvalues of L below -band; the solution is degenerate
    when some eigenvalue lies within band of zero.
    """
    L = linearised_operator(problem, a, u)
    band = degeneracy_band(problem, tol_deg)
    neg, zeros, _ = inertia(L, 0.0, band)
    lam0, _ = inverse_iteration(L, bisect_eigenvalue(L, 0))
    kernel = None
    if zeros:
        _, w = inverse_iteration(L, 0.0)
        kernel = orient_kernel(problem, w)
    return SpectrumReport(neg, lam0, bool(zeros), kernel)


def orient_kernel(problem: Problem, w: np.ndarray) -> np.ndarray:
    """Scale to <w, w> = <phi, phi> and fix the sign by <w, phi> >= 0."""
    w = w * np.sqrt(problem.ip(problem.phi, problem.phi) / problem.ip(w, w))
    s = problem.ip(w, problem.phi)
    if abs(s) <= 1e-8 * problem.ip(problem.phi, problem.phi):
        s = problem.ip(w, problem.psi)
        if abs(s) <= 1e-8:
            s = w[np.argmax(np.abs(w))]
    return w if s >= 0 else -w
