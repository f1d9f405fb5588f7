"""Branch tracing at fixed a: pseudo-arclength in (u, c), the t-chart near the
second eigenvalue, fold refinement through the extended system, and fold
tracking in a.

Points are compared in the composite metric sqrt(<du, du> + dc^2) where
<., .> is the rectangle-rule inner product of the grid.
"""
from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field

import numpy as np
import scipy.sparse as sp
from scipy.optimize import brentq
from scipy.sparse.linalg import spsolve

from .model import Problem, jacobian, residual
from .solver import (BorderedSingularError, ConvergenceError, Solution, SolverConfig,
                     bordered_solve, make_solution, newton_solve)
from .spectrum import inverse_iteration, linearised_operator, orient_kernel

log = logging.getLogger(__name__)

FOLD0 = "fold_index0"
TRANS12 = "transition_index12"
L_START = "segment_L_endpoint_start"
L_END = "segment_L_endpoint_end"
START = "start"


class ContinuationError(RuntimeError):
    """Step control underflowed or a budget ran out before the run finished."""


class FoldError(ConvergenceError):
    """Newton on the extended fold system did not converge."""


class AmbiguousCountError(ValueError):
    """Requested c level sits on a fold value."""


@dataclass(frozen=True)
class StepConfig:
    ds0: float = 0.05
    ds_min: float = 1e-7
    ds_max: float = 0.5
    grow: float = 1.3
    fast_iterations: int = 3
    max_corrector: int = 10
    min_cos: float = 0.97
    max_points: int = 20000
    max_arclength: float = 5000.0
    max_folds: int = 16
    c_switch_factor: float = 0.1
    delta_search: float = 0.05

    def __post_init__(self):
        if not 0 < self.ds_min <= self.ds0 <= self.ds_max:
            raise ValueError("need 0 < ds_min <= ds0 <= ds_max")


@dataclass(frozen=True)
class FoldPoint:
    solution: Solution
    kernel: np.ndarray = field(repr=False)
    c_second_derivative: float
    mu_prime: float
    h_dot_w: float
    side: str

    @property
    def a(self) -> float:
        return self.solution.a

    @property
    def c(self) -> float:
        return self.solution.c


@dataclass
class Branch:
    a: float
    points: list[Solution] = field(default_factory=list)
    markers: list[tuple[int, str]] = field(default_factory=list)
    closed: bool = False
    parameter_log: list[str] = field(default_factory=list)
    folds: dict[int, FoldPoint] = field(default_factory=dict)
    ds_max: float = 0.5
    anomalies: list[str] = field(default_factory=list)

    def __len__(self):
        return len(self.points)

    @property
    def c(self) -> np.ndarray:
        return np.array([p.c for p in self.points])

    @property
    def t_phi(self) -> np.ndarray:
        return np.array([p.t_phi for p in self.points])

    @property
    def t_psi(self) -> np.ndarray:
        return np.array([p.t_psi for p in self.points])

    @property
    def indices(self) -> np.ndarray:
        return np.array([p.morse_index for p in self.points])

    def marker_kinds(self) -> list[str]:
        return [k for _, k in sorted(self.markers, key=lambda m: m[0])]

    def fold_points(self, kind: str | None = None) -> list[FoldPoint]:
        kinds = dict((i, k) for i, k in self.markers)
        return [fp for i, fp in sorted(self.folds.items()) if kind is None or kinds.get(i) == kind]

    def closure_gap(self, problem: Problem) -> float:
        p, q = self.points[0], self.points[-1]
        return float(np.max(np.abs(p.u - q.u)) + abs(p.c - q.c))

    def max_step(self, problem: Problem) -> float:
        pts = self.points
        pairs = zip(pts, pts[1:] + (pts[:1] if self.closed else []))
        return max((_dist(problem, (p.u, p.c), (q.u, q.c)) for p, q in pairs), default=0.0)


# ---------------------------------------------------------------- helpers

def branch_solver_config(problem: Problem, **overrides) -> SolverConfig:
    """Solver settings for whole-branch runs.

    Storing u in double precision already leaves a residual of order
    eps * max|u| / spacing^2, which reaches 1e-10 at n = 199 for the large
    solutions (max u near 8).  The tolerance therefore scales with 1/spacing^2,
    3e-10 at n = 199.
    """
    tol = max(1e-10, 3e-10 * ((problem.grid.n + 1) / 200.0) ** 2)
    return SolverConfig(**{"newton_tol": tol, **overrides})


def _ip(problem, X, Y):
    return problem.ip(X[0], Y[0]) + X[1] * Y[1]


def _dist(problem, X, Y):
    d = (X[0] - Y[0], X[1] - Y[1])
    return math.sqrt(max(_ip(problem, d, d), 0.0))


def _normalise(problem, X):
    s = math.sqrt(_ip(problem, X, X))
    return (X[0] / s, X[1] / s)


def branch_tangent(problem: Problem, a: float, u: np.ndarray, prev) -> tuple[np.ndarray, float]:
    """Unit tangent (v, gamma) of the solution curve, oriented along ``prev``.

    ``prev`` is a previous tangent; ``None`` asks for the c-increasing tangent
    at a nondegenerate point.
    """
    J = jacobian(problem, a, u)
    if prev is None:
        row, corner = np.zeros(problem.grid.n), 1.0
    else:
        row, corner = problem.grid.spacing * prev[0], prev[1]
    v, g = bordered_solve(J, row, -problem.hv, corner, np.zeros(problem.grid.n), 1.0)
    return _normalise(problem, (v, g))


def _corrector(problem, a, Xp, tau, config: SolverConfig, max_iter: int):
    """Newton on R(u, c) = 0 restricted to the hyperplane through Xp normal to tau."""
    u, c = Xp[0].copy(), Xp[1]
    row = problem.grid.spacing * tau[0]
    r = residual(problem, a, u, c)
    rn0 = rn = float(np.max(np.abs(r)))
    for it in range(1, max_iter + 1):
        plane = problem.ip(tau[0], u - Xp[0]) + tau[1] * (c - Xp[1])
        du, dc = bordered_solve(jacobian(problem, a, u), row, -problem.hv, tau[1], -r, -plane)
        u = u + du
        c = c + dc
        r = residual(problem, a, u, c)
        rn = float(np.max(np.abs(r)))
        if not math.isfinite(rn) or rn > 1e3 * max(rn0, 1.0):
            raise ConvergenceError("corrector diverged")
        if rn <= config.newton_tol:
            return u, c, it
    raise ConvergenceError(f"corrector stalled at residual {rn:.3e}")


# ------------------------------------------------------------ fold system

def _fold_newton(problem, a, u, c, w, config: SolverConfig, max_iter: int = 30):
    n = problem.grid.n
    h = problem.hv
    f = problem.f
    pp = problem.ip(problem.phi, problem.phi)
    for _ in range(max_iter):
        J = jacobian(problem, a, u)
        F1 = residual(problem, a, u, c)
        F2 = J.matvec(w)
        F3 = problem.ip(w, w) - pp
        if (np.max(np.abs(F1)) <= config.newton_tol and np.max(np.abs(F2)) <= 1e-9
                and abs(F3) <= 1e-12):
            return u, c, w
        Js = sp.diags([J.off_diagonal, J.diagonal, J.off_diagonal], [-1, 0, 1], format="csr")
        A = sp.bmat([
            [Js, sp.csr_matrix(-h.reshape(-1, 1)), None],
            [sp.diags(-f.second(u) * w), None, Js],
            [None, None, sp.csr_matrix(2 * problem.grid.spacing * w.reshape(1, -1))],
        ], format="csc")
        # the empty (c, c) corner must exist for bmat shapes
        A.resize((2 * n + 1, 2 * n + 1))
        step = spsolve(A, -np.concatenate([F1, F2, [F3]]))
        if not np.all(np.isfinite(step)):
            raise FoldError("extended system singular")
        u = u + step[:n]
        c = c + step[n]
        w = w + step[n + 1:]
        if np.max(np.abs(u)) > 1e6:
            raise FoldError("extended Newton diverged")
    raise FoldError("extended Newton did not converge")


def fold_from_state(problem: Problem, a: float, u: np.ndarray, c: float, w0: np.ndarray | None = None,
                    config: SolverConfig | None = None) -> FoldPoint:
    """Refine (u, c) to a fold of the branch at fixed a by Newton on
    {R = 0, J w = 0, <w, w> = <phi, phi>}."""
    config = config or branch_solver_config(problem)
    if w0 is None:
        _, w0 = inverse_iteration(linearised_operator(problem, a, u), 0.0)
    w0 = orient_kernel(problem, w0)
    u, c, w = _fold_newton(problem, a, np.array(u, dtype=float), float(c), w0, config)
    w = orient_kernel(problem, w)
    sol = make_solution(problem, a, u, c, config)
    cube = problem.ip(problem.f.second(u), w**3)
    hw = problem.ip(problem.hv, w)
    return FoldPoint(sol, w, -cube / hw, cube / problem.ip(w, w), hw, "plus" if c > 0 else "minus")


def locate_fold(problem: Problem, a: float, bracket, config: SolverConfig | None = None,
                tangents=None) -> FoldPoint:
    """Fold between two solutions whose tangents have opposite c-direction.

    With ``tangents`` the start is the secant point where the c-component of the
    tangent vanishes, otherwise the midpoint.
    """
    s1, s2 = bracket
    theta = 0.5
    if tangents is not None:
        g1, g2 = tangents[0][1], tangents[1][1]
        if g1 != g2:
            theta = min(max(g1 / (g1 - g2), 0.0), 1.0)
    u0 = (1 - theta) * s1.u + theta * s2.u
    c0 = (1 - theta) * s1.c + theta * s2.c
    return fold_from_state(problem, a, u0, c0, None, config)


# ---------------------------------------------------------- arclength core

@dataclass
class _Run:
    points: list = field(default_factory=list)
    tangents: list = field(default_factory=list)
    logs: list = field(default_factory=list)
    markers: list = field(default_factory=list)
    folds: dict = field(default_factory=dict)
    closed: bool = False
    anomalies: list = field(default_factory=list)


def _fold_kind(fp: FoldPoint) -> str:
    return FOLD0 if fp.solution.morse_index == 0 else TRANS12


def _arclength(problem: Problem, a: float, start: Solution, tau, step: StepConfig,
               config: SolverConfig, target=None, c_window=None, max_folds=None,
               first_log: str = "arclength") -> _Run:
    """Pseudo-arclength from ``start`` along ``tau``.

    Stops when the curve comes back to ``target = (X, tangent)`` (closure), when
    c leaves ``c_window``, or when ``max_folds`` folds have been passed.
    """
    run = _Run()
    run.points.append(start)
    run.tangents.append(tau)
    run.logs.append(first_log)
    X = (start.u, start.c)
    ds = step.ds0
    travelled = 0.0
    nfolds = 0
    s_prev = None
    if target is not None:
        s_prev = _ip(problem, (X[0] - target[0][0], X[1] - target[0][1]), target[1])
    while True:
        if len(run.points) > step.max_points or travelled > step.max_arclength:
            raise ContinuationError(f"budget exhausted at a={a} after {len(run.points)} points "
                                    f"(c={X[1]:.6g}, arclength {travelled:.3g})")
        Xp = (X[0] + ds * tau[0], X[1] + ds * tau[1])
        try:
            u, c, its = _corrector(problem, a, Xp, tau, config, step.max_corrector)
            tau_new = branch_tangent(problem, a, u, tau)
        except (ConvergenceError, BorderedSingularError):
            ds *= 0.5
            if ds < step.ds_min:
                raise ContinuationError(f"step underflow at a={a}, c={X[1]:.8g}, "
                                        f"t_phi={problem.t_phi(X[0]):.6g}, t_psi={problem.t_psi(X[0]):.6g}")
            continue
        Xn = (u, c)
        chord = _dist(problem, X, Xn)
        cos = _ip(problem, tau, tau_new)
        if (chord > step.ds_max or cos < step.min_cos) and ds > step.ds_min:
            ds *= 0.5
            continue
        sol = make_solution(problem, a, u, c, config)
        closing = False
        if target is not None:
            s_new = _ip(problem, (u - target[0][0], c - target[0][1]), target[1])
            if (s_prev < 0 <= s_new and travelled > 2 * step.ds_max
                    and _dist(problem, Xn, target[0]) <= 2 * step.ds_max):
                closing = True
            s_prev = s_new
        if tau[1] * tau_new[1] < 0:
            prev = run.points[-1]
            try:
                fp = locate_fold(problem, a, (prev, sol), config, (tau, tau_new))
            except (FoldError, ConvergenceError):
                # tighten the bracket by retrying with a shorter step
                if ds > 4 * step.ds_min:
                    ds *= 0.25
                    continue
                raise
            run.points.append(fp.solution)
            run.tangents.append(None)
            run.logs.append("fold")
            idx = len(run.points) - 1
            run.markers.append((idx, _fold_kind(fp)))
            run.folds[idx] = fp
            nfolds += 1
        elif sol.morse_index != run.points[-1].morse_index:
            run.anomalies.append(f"index {run.points[-1].morse_index}->{sol.morse_index} without fold "
                                 f"near c={c:.6g}")
        if closing:
            run.closed = True
            return run
        run.points.append(sol)
        run.tangents.append(tau_new)
        run.logs.append("arclength")
        travelled += chord
        X, tau = Xn, tau_new
        if c_window is not None and not c_window[0] <= c <= c_window[1]:
            return run
        if max_folds is not None and nfolds >= max_folds:
            return run
        if its <= step.fast_iterations:
            ds = min(ds * step.grow, step.ds_max)


def _to_branch(a, run: _Run, ds_max, offset=0) -> Branch:
    br = Branch(a=a, ds_max=ds_max)
    br.points = list(run.points)
    br.parameter_log = list(run.logs)
    br.markers = [(i + offset, k) for i, k in run.markers]
    br.folds = {i + offset: fp for i, fp in run.folds.items()}
    br.closed = run.closed
    br.anomalies = list(run.anomalies)
    return br


# ------------------------------------------------------------- operations

def _galerkin_amplitude(problem: Problem, a: float) -> float:
    """s > M with (a - lam1) s <phi, phi> = <f(s phi), phi>."""
    pp = problem.ip(problem.phi, problem.phi)
    q = lambda s: problem.ip(problem.f.value(s * problem.phi), problem.phi) - (a - problem.lam1) * s * pp
    lo = problem.M * (1 + 1e-12) + 1e-12
    hi = max(2 * problem.M, 1.0)
    while q(hi) < 0:
        hi *= 2
    return brentq(q, lo, hi, xtol=1e-14)


def positive_branch_u_dagger(problem: Problem, a_target: float, config: SolverConfig | None = None,
                             da0: float | None = None) -> Solution:
    """Stable positive solution at c = 0, continued in a from just above lam1."""
    config = config or SolverConfig()
    gap = problem.lam2 - problem.lam1
    if a_target <= problem.lam1:
        raise ValueError("the positive branch exists only for a > lam1")
    a = min(a_target, problem.lam1 + 0.01 * gap)
    sol = newton_solve(problem, a, 0.0, _galerkin_amplitude(problem, a) * problem.phi, config)
    prev = None
    da = da0 or 0.02 * gap
    while a < a_target:
        a_next = min(a + da, a_target)
        guess = sol.u
        if prev is not None:
            guess = sol.u + (a_next - a) / (sol.a - prev.a) * (sol.u - prev.u)
        try:
            nxt = newton_solve(problem, a_next, 0.0, guess, config)
            # u_dagger increases with a; anything else is a jump to another solution
            if nxt.morse_index != 0 or np.any(nxt.u < sol.u - 1e-9):
                raise ConvergenceError("left the positive branch")
        except ConvergenceError:
            da *= 0.5
            if da < 1e-8 * gap:
                raise ContinuationError(f"positive branch lost near a={a}")
            continue
        prev, sol, a = sol, nxt, a_next
        da = min(da * 1.5, 0.2 * gap)
    if sol.morse_index != 0 or np.any(sol.u <= 0):
        raise ContinuationError(f"positive branch at a={a_target} is not a stable positive solution")
    return sol


def continue_in_c(problem: Problem, a: float, start: Solution, direction: int = 1,
                  step: StepConfig | None = None, config: SolverConfig | None = None,
                  c_window=None, close: bool = False, max_folds=None) -> Branch:
    """Pseudo-arclength from ``start`` initially moving c in ``direction``."""
    step = step or StepConfig()
    config = config or branch_solver_config(problem)
    tau = branch_tangent(problem, a, start.u, None)
    if tau[1] * direction < 0:
        tau = (-tau[0], -tau[1])
    target = ((start.u, start.c), tau) if close else None
    run = _arclength(problem, a, start, tau, step, config, target=target, c_window=c_window,
                     max_folds=max_folds if max_folds is not None else step.max_folds)
    br = _to_branch(a, run, step.ds_max)
    br.markers.insert(0, (0, START))
    br.parameter_log[0] = "start"
    return br


def chart_solve(problem: Problem, a: float, t: float, guess=None,
                config: SolverConfig | None = None) -> Solution:
    """Solution with psi-component t: u = t psi + y, <y, psi> = 0, unknowns (y, c)."""
    config = config or SolverConfig()
    psi = problem.psi
    pp = problem.ip(psi, psi)
    if guess is None:
        y, c = np.zeros(problem.grid.n), 0.0
    else:
        u0, c = guess
        y = u0 - problem.t_psi(u0) * psi
    row = problem.grid.spacing * psi
    for it in range(config.max_iterations):
        u = t * psi + y
        r = residual(problem, a, u, c)
        rn = float(np.max(np.abs(r)))
        cons = problem.ip(y, psi)
        if rn <= config.newton_tol:
            y = y - cons / pp * psi
            u = t * psi + y
            if float(np.max(np.abs(residual(problem, a, u, c)))) <= config.newton_tol:
                return make_solution(problem, a, u, c, config)
        dy, dc = bordered_solve(jacobian(problem, a, u), row, -problem.hv, 0.0, -r, -cons)
        y = y + dy
        c = c + dc
        if not np.all(np.isfinite(y)) or np.max(np.abs(y)) > 1e6:
            break
    raise ConvergenceError(f"t-chart solve failed at a={a}, t={t}")


def chart_tangent(problem: Problem, a: float, u: np.ndarray, direction: int = 1):
    """Unit tangent oriented so that the psi-component t increases (direction=+1)."""
    row = problem.grid.spacing * problem.psi
    v, g = bordered_solve(jacobian(problem, a, u), row, -problem.hv, 0.0,
                          np.zeros(problem.grid.n), problem.ip(problem.psi, problem.psi))
    v, g = _normalise(problem, (v, g))
    return (v, g) if direction > 0 else (-v, -g)


def chart_derivative_at_zero(problem: Problem, a: float, ds: float = 1e-2,
                             config: SolverConfig | None = None) -> float:
    """Central difference of c(t) along the t-chart at t = 0, where (u, c) = (0, 0)."""
    if a <= problem.lam2:
        raise ValueError("the chart derivative is taken for a > lam2")
    lo = chart_solve(problem, a, -ds, None, config)
    hi = chart_solve(problem, a, ds, None, config)
    return (hi.c - lo.c) / (2 * ds)


def chart_window(problem: Problem) -> tuple[float, float]:
    eps = 0.25 * max(problem.M, 0.1)
    return -problem.M / problem.beta - eps, problem.M + eps


def _chart_scan(problem, a, ts, config):
    """Chart solutions along ts (monotone, starting at 0), stopping at the first failure."""
    out = []
    guess = None
    for t in ts:
        try:
            sol = chart_solve(problem, a, t, guess, config)
        except (ConvergenceError, BorderedSingularError):
            break
        out.append(sol)
        guess = (sol.u, sol.c)
    return out


def _chart_piece(problem, a, step: StepConfig, config):
    """Chart points around t = 0 with |c| below the switching level."""
    lo_t, hi_t = chart_window(problem)
    dt = min(0.02 * (hi_t - lo_t), step.ds_max / (2 * math.sqrt(problem.ip(problem.psi, problem.psi))))
    up = _chart_scan(problem, a, np.arange(0.0, hi_t, dt), config)
    down = _chart_scan(problem, a, -np.arange(0.0, -lo_t, dt), config)
    c_scale = max(abs(s.c) for s in up + down)
    c_switch = step.c_switch_factor * c_scale
    keep_up = []
    for s in up:
        if abs(s.c) >= c_switch and keep_up:
            break
        keep_up.append(s)
    keep_down = []
    for s in down[1:]:
        if abs(s.c) >= c_switch:
            break
        keep_down.append(s)
    return keep_down[::-1] + keep_up, c_switch


def _segment_L(problem, a, step: StepConfig, config):
    lo, hi = -problem.M / problem.beta, problem.M
    length = (hi - lo) * math.sqrt(problem.ip(problem.psi, problem.psi))
    m = max(2, int(math.ceil(length / (0.5 * step.ds_max))) + 1) if hi > lo else 1
    ts = np.linspace(lo, hi, m)
    return [make_solution(problem, a, t * problem.psi, 0.0, config) for t in ts]


def is_lambda2(problem: Problem, a: float) -> bool:
    return abs(a - problem.lam2) <= 1e-12 * problem.lam2


def trace_branch(problem: Problem, a: float, step: StepConfig | None = None,
                 config: SolverConfig | None = None) -> Branch:
    """Full closed solution curve at fixed a, lam1 < a <= lam2 + delta_search."""
    step = step or StepConfig()
    config = config or branch_solver_config(problem)
    gap32 = problem.lam3 - problem.lam2
    if a <= problem.lam1:
        raise ValueError("trace_branch needs a > lam1; use continue_in_c below lam1")
    if a > problem.lam2 + step.delta_search * gap32:
        raise ValueError(f"a={a} beyond lam2 + delta_search")
    if is_lambda2(problem, a):
        a = problem.lam2
        piece = _segment_L(problem, a, step, config)
        logs = ["analytic"] * len(piece)
        markers = [(0, L_START), (len(piece) - 1, L_END)]
    elif a > problem.lam2:
        piece, c_switch = _chart_piece(problem, a, step, config)
        logs = ["t-chart"] * len(piece)
        zero = int(np.argmin([abs(s.t_psi) for s in piece]))
        markers = [(zero, START)]
    else:
        start = positive_branch_u_dagger(problem, a, config)
        br = continue_in_c(problem, a, start, +1, step, config, close=True, max_folds=step.max_folds)
        if not br.closed:
            raise ContinuationError(f"branch at a={a} did not close")
        return br
    up_end, low_end = piece[-1], piece[0]
    if len(piece) == 1:
        tau_up = chart_tangent(problem, a, up_end.u, +1)
        tau_low = tau_up
    else:
        tau_up = chart_tangent(problem, a, up_end.u, +1)
        tau_low = chart_tangent(problem, a, low_end.u, +1)
    run = _arclength(problem, a, up_end, tau_up, step, config,
                     target=((low_end.u, low_end.c), tau_low), max_folds=None)
    if not run.closed:
        raise ContinuationError(f"branch at a={a} did not return to the chart")
    br = Branch(a=a, ds_max=step.ds_max)
    br.points = piece + run.points[1:]
    br.parameter_log = logs + run.logs[1:]
    off = len(piece) - 1
    br.markers = markers + [(i + off, k) for i, k in run.markers]
    br.folds = {i + off: fp for i, fp in run.folds.items()}
    br.closed = True
    br.anomalies = run.anomalies
    return br


def count_solutions_at(branch: Branch, c: float, fold_tol: float = 1e-9) -> int:
    """Transversal crossings of the branch with the level c."""
    for fp in branch.folds.values():
        if abs(fp.c - c) <= fold_tol:
            raise AmbiguousCountError(f"c={c} coincides with a fold at c={fp.c}")
    cs = branch.c
    s = np.where(cs - c >= 0, 1, -1)
    if branch.closed:
        return int(np.count_nonzero(s != np.roll(s, -1)))
    return int(np.count_nonzero(s[1:] != s[:-1]))


def solutions_at(problem: Problem, branch: Branch, c: float,
                 config: SolverConfig | None = None) -> list[Solution]:
    """Newton-refined solutions at level c, one per crossing of the branch."""
    pts = branch.points
    m = len(pts)
    pairs = range(m if branch.closed else m - 1)
    out = []
    for i in pairs:
        p, q = pts[i], pts[(i + 1) % m]
        if (p.c - c >= 0) == (q.c - c >= 0):
            continue
        th = (c - p.c) / (q.c - p.c)
        guess = (1 - th) * p.u + th * q.u
        out.append(newton_solve(problem, branch.a, c, guess, config))
    return out


def track_folds_in_a(problem: Problem, seed: FoldPoint, a_values, config: SolverConfig | None = None,
                     min_da: float = 1e-6) -> list[tuple[float, FoldPoint]]:
    """Follow a fold with a as parameter; one sample per requested a (sorted output)."""
    config = config or branch_solver_config(problem)
    a_values = np.sort(np.asarray(a_values, dtype=float))
    side = seed.side
    results = {}

    def sweep(targets):
        hist = [seed]
        for a_t in targets:
            a_cur = hist[-1].a
            da = a_t - a_cur
            while True:
                a_next = a_cur + da if abs(a_t - a_cur) > abs(da) else a_t
                fp0 = hist[-1]
                u0, c0, w0 = fp0.solution.u, fp0.c, fp0.kernel
                if len(hist) > 1:
                    q = hist[-2]
                    r = (a_next - fp0.a) / (fp0.a - q.a)
                    u0 = u0 + r * (u0 - q.solution.u)
                    c0 = c0 + r * (c0 - q.c)
                    w0 = w0 + r * (w0 - q.kernel)
                try:
                    fp = fold_from_state(problem, a_next, u0, c0, w0, config)
                    if fp.side != side or fp.solution.morse_index != 0:
                        raise FoldError("fold tracking jumped to another family")
                except (FoldError, ConvergenceError):
                    da *= 0.5
                    if abs(da) < min_da:
                        raise ContinuationError(f"lost the {side} fold; last good a={hist[-1].a}")
                    continue
                hist.append(fp)
                a_cur = a_next
                if a_cur == a_t:
                    results[a_t] = fp
                    break

    sweep([x for x in a_values if x > seed.a])
    sweep([x for x in a_values[::-1] if x < seed.a])
    for x in a_values:
        if x == seed.a:
            results[x] = seed
    return sorted(results.items())


@dataclass
class FoldCurve:
    side: str
    samples: list[tuple[float, FoldPoint]]

    @property
    def a(self):
        return np.array([s[0] for s in self.samples])

    @property
    def c(self):
        return np.array([s[1].c for s in self.samples])

    @property
    def t_phi(self):
        return np.array([s[1].solution.t_phi for s in self.samples])


def fold_curve(problem, seed: FoldPoint, a_values, config=None) -> FoldCurve:
    return FoldCurve(seed.side, track_folds_in_a(problem, seed, a_values, config))


def find_delta(problem: Problem, step: StepConfig | None = None, config: SolverConfig | None = None,
               halvings: int = 8):
    """Halve delta from delta_search*(lam3 - lam2) until the branch at lam2 + delta shows
    the expected p_flat, p_sharp, p*+, p*- pattern."""
    step = step or StepConfig()
    delta = step.delta_search * (problem.lam3 - problem.lam2)
    last_err = None
    for _ in range(halvings):
        try:
            br = trace_branch(problem, problem.lam2 + delta, step, config)
            if above_lambda2_pattern(br) == ["p_flat", "p_sharp", "p_star_plus", "p_star_minus"]:
                return delta, br
            last_err = f"pattern {above_lambda2_pattern(br)}"
        except (ContinuationError, ConvergenceError) as exc:
            last_err = str(exc)
        log.info("delta=%g rejected: %s", delta, last_err)
        delta *= 0.5
    raise ContinuationError(f"no admissible delta found ({last_err})")


def above_lambda2_pattern(branch: Branch) -> list[str]:
    """Named fold markers in cyclic order, rotated to start at p_flat when present."""
    names = []
    for i, kind in sorted(branch.markers, key=lambda m: m[0]):
        if kind not in (FOLD0, TRANS12):
            continue
        fp = branch.folds[i]
        if kind == FOLD0:
            names.append("p_star_plus" if fp.c > 0 else "p_star_minus")
        else:
            names.append("p_flat" if fp.solution.t_psi < 0 else "p_sharp")
    if "p_flat" in names:
        k = names.index("p_flat")
        names = names[k:] + names[:k]
    return names
