"""Damped Newton at fixed (a, c) and bordered tridiagonal solves."""
from __future__ import annotations

import logging
from dataclasses import dataclass

import numpy as np
from scipy.linalg import LinAlgError, solve_banded

from .grid import TridiagonalOperator
from .model import Problem, jacobian, residual, sinalt_defect
from .spectrum import TOL_DEG, SpectrumReport, morse_index

log = logging.getLogger(__name__)


class ConvergenceError(RuntimeError):
    """Newton iteration did not reach the residual tolerance."""


class SingularJacobianError(ConvergenceError):
    """The Jacobian could not be factored; the iterate is close to a degenerate solution."""


class BorderedSingularError(RuntimeError):
    """The bordered system itself is singular (bad borders or normalisation)."""


@dataclass(frozen=True)
class SolverConfig:
    newton_tol: float = 1e-10
    max_iterations: int = 40
    damping_min: float = 1.0 / 64.0
    tol_deg: float = TOL_DEG

    def __post_init__(self):
        if not self.newton_tol > 0:
            raise ValueError("newton_tol must be positive")
        if not 0 < self.damping_min <= 1:
            raise ValueError("damping_min must lie in (0, 1]")
        if self.max_iterations < 1:
            raise ValueError("max_iterations must be >= 1")


@dataclass(frozen=True)
class Solution:
    a: float
    u: np.ndarray
    c: float
    residual_norm: float
    t_phi: float
    t_psi: float
    spectrum: SpectrumReport
    sinalt: float = 0.0

    @property
    def morse_index(self) -> int:
        return self.spectrum.morse_index

    @property
    def degenerate(self) -> bool:
        return self.spectrum.degenerate


def make_solution(problem: Problem, a: float, u: np.ndarray, c: float,
                  config: SolverConfig | None = None, check: bool = True) -> Solution:
    """Wrap (a, u, c) with diagnostics; with ``check`` the residual must be within tolerance."""
    config = config or SolverConfig()
    u = np.array(u, dtype=float)
    u.setflags(write=False)
    res = float(np.max(np.abs(residual(problem, a, u, c))))
    if check and res > config.newton_tol:
        raise ConvergenceError(f"(a={a}, c={c}) is not a solution: residual {res:.3e}")
    return Solution(a=float(a), u=u, c=float(c), residual_norm=res,
                    t_phi=problem.t_phi(u), t_psi=problem.t_psi(u),
                    spectrum=morse_index(problem, a, u, config.tol_deg),
                    sinalt=float(sinalt_defect(problem, a, u)))


def tridiagonal_solve(op: TridiagonalOperator, rhs: np.ndarray) -> np.ndarray:
    try:
        x = solve_banded((1, 1), op.banded(), rhs, check_finite=False)
    except (LinAlgError, ValueError) as exc:
        raise SingularJacobianError(str(exc)) from exc
    if not np.all(np.isfinite(x)):
        raise SingularJacobianError("tridiagonal solve produced non-finite values")
    return x


def bordered_solve(op: TridiagonalOperator, border_row: np.ndarray, border_col: np.ndarray,
                   corner: float, rhs_main: np.ndarray, rhs_border: float,
                   rtol: float = 1e-11) -> tuple[np.ndarray, float]:
    """Solve [[op, col], [row^T, corner]] (x, y) = (rhs_main, rhs_border).

    Block elimination with two tridiagonal solves; if op is (nearly) singular the
    result is checked against the full system and recomputed densely.
    """
    row = np.asarray(border_row, dtype=float)
    col = np.asarray(border_col, dtype=float)
    rhs_main = np.asarray(rhs_main, dtype=float)
    scale = (np.max(np.abs(op.diagonal)) + 2 * np.max(np.abs(op.off_diagonal), initial=0.0)
             + np.max(np.abs(col), initial=0.0))
    x = None
    try:
        z = solve_banded((1, 1), op.banded(), np.column_stack((rhs_main, col)), check_finite=False)
        denom = corner - row @ z[:, 1]
        if np.all(np.isfinite(z)) and denom != 0.0:
            y = (rhs_border - row @ z[:, 0]) / denom
            x = z[:, 0] - y * z[:, 1]
    except (LinAlgError, ValueError):
        x = None
    if x is not None and np.all(np.isfinite(x)):
        r1 = op.matvec(x) + y * col - rhs_main
        r2 = row @ x + corner * y - rhs_border
        size = scale * (np.max(np.abs(x)) + abs(y)) + np.max(np.abs(rhs_main)) + abs(rhs_border)
        if max(np.max(np.abs(r1)), abs(r2)) <= rtol * max(size, 1e-300):
            return x, float(y)
    n = op.n
    A = np.zeros((n + 1, n + 1))
    A[:n, :n] = op.dense()
    A[:n, n] = col
    A[n, :n] = row
    A[n, n] = corner
    try:
        sol = np.linalg.solve(A, np.append(rhs_main, rhs_border))
    except LinAlgError as exc:
        raise BorderedSingularError("bordered system is singular") from exc
    if not np.all(np.isfinite(sol)):
        raise BorderedSingularError("bordered system is singular")
    return sol[:n], float(sol[n])


def newton_solve(problem: Problem, a: float, c: float, initial_guess: np.ndarray,
                 config: SolverConfig | None = None, history: list | None = None) -> Solution:
    """Damped Newton for Delta_h u + a u - f(u) - c h = 0 at fixed (a, c).

    The step is halved until the max-norm residual decreases, down to
    ``damping_min``. ``history`` (if given) receives the residual norms.
    """
    config = config or SolverConfig()
    u = np.array(initial_guess, dtype=float)
    if u.shape != (problem.grid.n,) or not np.all(np.isfinite(u)):
        raise ValueError("initial guess must be a finite grid function")
    r = residual(problem, a, u, c)
    rn = float(np.max(np.abs(r)))
    if history is not None:
        history.append(rn)
    for it in range(config.max_iterations):
        if rn <= config.newton_tol:
            return make_solution(problem, a, u, c, config)
        du = tridiagonal_solve(jacobian(problem, a, u), -r)
        lam = 1.0
        while True:
            trial = u + lam * du
            rt = residual(problem, a, trial, c)
            rtn = float(np.max(np.abs(rt)))
            if rtn < rn or lam <= config.damping_min:
                break
            lam *= 0.5
        u, r, rn = trial, rt, rtn
        if history is not None:
            history.append(rn)
    if rn <= config.newton_tol:
        return make_solution(problem, a, u, c, config)
    raise ConvergenceError(f"Newton failed at a={a}, c={c}: residual {rn:.3e} after "
                           f"{config.max_iterations} iterations")
