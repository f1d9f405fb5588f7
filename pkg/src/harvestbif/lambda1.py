"""Solution set at a = lam1 and the limit objects as a -> lam1.

At a = lam1 every solution is tphi + c g with g = (Delta_h + lam1)^{-1} h
(taken orthogonal to phi) and (t, c) in the convex set

    Lambda = {(t, c) : t phi + c g <= M at every node}.
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from scipy.optimize import brentq

from .grid import apply_laplacian, laplacian_operator
from .model import Problem
from .solver import bordered_solve

ZERO_G = 1e-13


@dataclass(frozen=True)
class LambdaSet:
    problem: Problem = field(repr=False, compare=False)
    g: np.ndarray = field(repr=False, compare=False)
    T: float
    t_samples: np.ndarray = field(repr=False, compare=False)
    c_minus: np.ndarray = field(repr=False, compare=False)
    c_plus: np.ndarray = field(repr=False, compare=False)
    c_star_minus: float
    c_star_plus: float

    @property
    def M(self) -> float:
        return self.problem.M


def solve_resolvent_g(problem: Problem) -> np.ndarray:
    """g with (Delta_h + lam1) g = h and <g, phi> = 0, via a phi-bordered solve."""
    op = laplacian_operator(problem.grid).shifted(-problem.lam1)
    g, aux = bordered_solve(op, problem.phi, problem.phi, 0.0, problem.hv, 0.0)
    # aux multiplies phi in the first block; it vanishes because <h, phi> = 0
    g = g - problem.t_phi(g) * problem.phi
    # one refinement step: the residual is amplified by |c| wherever g is used
    r = problem.hv - (apply_laplacian(problem.grid, g) + problem.lam1 * g)
    dg, _ = bordered_solve(op, problem.phi, problem.phi, 0.0, r - problem.t_phi(r) * problem.phi, 0.0)
    g = g + dg
    g = g - problem.t_phi(g) * problem.phi
    g.setflags(write=False)
    return g


def _c_range(problem: Problem, g: np.ndarray, t: float):
    slack = problem.M - t * problem.phi
    zero = np.abs(g) <= ZERO_G
    if np.any(slack[zero] < 0):
        return None
    pos, neg = g > ZERO_G, g < -ZERO_G
    hi = np.min(slack[pos] / g[pos]) if pos.any() else np.inf
    lo = np.max(slack[neg] / g[neg]) if neg.any() else -np.inf
    if lo > hi:
        return None
    return float(lo), float(hi)


def c_range_at_t(lambda_set: LambdaSet, problem: Problem, t: float):
    """(c_lo, c_hi) with (t, c) in Lambda iff c_lo <= c <= c_hi; None if infeasible."""
    return _c_range(problem, lambda_set.g, t)


def _compute_T(problem: Problem, g: np.ndarray, tol: float = 1e-10) -> float:
    lo = problem.M
    step = max(problem.M, 1.0)
    hi = lo + step
    while _c_range(problem, g, hi) is not None:
        lo, step = hi, 2 * step
        hi = lo + step
        if step > 1e12:
            raise RuntimeError("Lambda appears unbounded in t; is <h, phi> = 0?")
    while hi - lo > tol:
        mid = 0.5 * (lo + hi)
        if _c_range(problem, g, mid) is None:
            hi = mid
        else:
            lo = mid
    return lo


def compute_T(lambda_set: LambdaSet, problem: Problem) -> float:
    return _compute_T(problem, lambda_set.g)


def build_lambda_set(problem: Problem, samples: int = 2000, t_min: float = -10.0) -> LambdaSet:
    g = solve_resolvent_g(problem)
    T = _compute_T(problem, g)
    ts = np.linspace(min(t_min, T - 1.0), T, samples)
    ranges = [_c_range(problem, g, t) for t in ts]
    cm = np.array([r[0] for r in ranges])
    cp = np.array([r[1] for r in ranges])
    c0 = _c_range(problem, g, 0.0)
    for arr in (ts, cm, cp):
        arr.setflags(write=False)
    return LambdaSet(problem, g, T, ts, cm, cp, c0[0], c0[1])


def _invert(ls: LambdaSet, c: float, which: int) -> float:
    """t <= T with c_minus(t) = c (which=0) or c_plus(t) = c (which=1)."""
    fn = lambda t: _c_range(ls.problem, ls.g, t)[which] - c
    end = fn(ls.T)
    if (which == 0 and end < 0) or (which == 1 and end > 0):
        raise ValueError(f"c={c} lies outside the range of the boundary curve")
    if end == 0:
        return ls.T
    curve = ls.c_minus if which == 0 else ls.c_plus
    k = int(np.searchsorted(curve, c)) if which == 0 else int(np.searchsorted(-curve, -c))
    if 0 < k < len(curve):
        lo, hi = ls.t_samples[k - 1], ls.t_samples[k]
    else:
        hi = ls.t_samples[0] if k == 0 else ls.T
        lo = hi - 1.0
        while fn(lo) * fn(hi) > 0:
            hi, lo = lo, lo - 2 * (hi - lo)
    if fn(lo) == 0:
        return float(lo)
    if fn(hi) == 0:
        return float(hi)
    return float(brentq(fn, lo, hi, xtol=1e-14, rtol=1e-14))


def inverse_c_minus(ls: LambdaSet, c: float) -> float:
    return _invert(ls, c, 0)


def inverse_c_plus(ls: LambdaSet, c: float) -> float:
    return _invert(ls, c, 1)


def tau_hat(ls: LambdaSet, c: float, t_hat: float) -> float:
    """Lower barrier for the phi-component of solutions just below lam1 (t_hat < 0)."""
    if c <= ls.c_star_minus:
        return min(inverse_c_minus(ls, c), t_hat)
    if c >= ls.c_star_plus:
        return min(t_hat, inverse_c_plus(ls, c))
    return t_hat


def tau0(ls: LambdaSet, c: float) -> float:
    if c < ls.c_star_minus:
        return inverse_c_minus(ls, c)
    if c > ls.c_star_plus:
        return inverse_c_plus(ls, c)
    return 0.0


def tau_and_limit(ls: LambdaSet, c: float) -> tuple[float, np.ndarray]:
    """tau0(c) and the limit profile tau0(c) phi + c g of solutions as a increases to lam1."""
    t = tau0(ls, c)
    return t, t * ls.problem.phi + c * ls.g


def t_c_profile(ls: LambdaSet, c: float) -> float:
    """phi-component of the limit of stable solutions as a decreases to lam1 (M > 0)."""
    if ls.M <= 0:
        raise ValueError("t_c is only defined for M > 0")
    if not ls.c_star_minus <= c <= ls.c_star_plus:
        raise ValueError(f"c={c} outside [c*-, c*+] = [{ls.c_star_minus}, {ls.c_star_plus}]")
    lo_T, hi_T = _c_range(ls.problem, ls.g, ls.T)
    if c < lo_T:
        return inverse_c_minus(ls, c)
    if c > hi_T:
        return inverse_c_plus(ls, c)
    return ls.T


def in_lambda(ls: LambdaSet, t: float, c: float) -> bool:
    r = _c_range(ls.problem, ls.g, t)
    return r is not None and r[0] <= c <= r[1]
