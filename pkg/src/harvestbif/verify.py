"""Executable verification suite and nodal-domain diagnostics.

Each check returns a :class:`Check`; :func:`run_suite` runs them in order and
never raises for a failed check.
"""
from __future__ import annotations

import hashlib
import json
import logging
import time
from dataclasses import asdict, dataclass, field

import numpy as np

from .continuation import (FOLD0, L_END, L_START, TRANS12, Branch, ContinuationError, StepConfig,
                           above_lambda2_pattern, branch_solver_config, chart_derivative_at_zero,
                           count_solutions_at, find_delta, fold_curve, solutions_at, trace_branch)
from .grid import apply_laplacian
from .lambda1 import (build_lambda_set, c_range_at_t, in_lambda, tau_and_limit, tau_hat,
                      t_c_profile)
from .model import Problem, check_hypotheses, jacobian, make_problem, residual
from .solver import ConvergenceError, Solution, SolverConfig, newton_solve

log = logging.getLogger(__name__)

PASS, FAIL, FLAGGED = "pass", "fail", "flagged"
CHECK_IDS = (
    "spectrum", "hypotheses", "lambda1_geometry", "uniqueness_below_lambda1",
    "convergence_below_lambda1", "half_space_below_lambda1", "loops_between_eigenvalues",
    "fold_formulas", "fold_oracle", "fold_curves", "limit_profiles", "segment_at_lambda2",
    "structure_above_lambda2", "integral_identity", "a_priori_bound", "stable_two_nodal",
)


@dataclass(frozen=True)
class Check:
    id: str
    status: str
    measured: dict
    tolerance: str
    seconds: float = 0.0

    @property
    def ok(self) -> bool:
        return self.status != FAIL


@dataclass
class VerificationReport:
    checks: list[Check] = field(default_factory=list)
    environment: dict = field(default_factory=dict)

    @property
    def passed(self) -> bool:
        return all(c.ok for c in self.checks)

    def statuses(self) -> dict[str, str]:
        return {c.id: c.status for c in self.checks}

    def to_text(self) -> str:
        lines = [f"# n={self.environment.get('n')} config={self.environment.get('config_hash')}"]
        for c in self.checks:
            vals = ", ".join(f"{k}={_fmt(v)}" for k, v in c.measured.items())
            lines.append(f"{c.status.upper():8s} {c.id:28s} [{c.tolerance}] {vals}")
        lines.append(f"overall: {'PASS' if self.passed else 'FAIL'}")
        return "\n".join(lines) + "\n"


def _fmt(v):
    if isinstance(v, float):
        return f"{v:.6g}"
    if isinstance(v, (list, tuple)):
        return "[" + ", ".join(_fmt(x) for x in v) + "]"
    return str(v)


@dataclass(frozen=True)
class SuiteConfig:
    level: str = "full"
    seed: int = 0
    a_rels: tuple[float, ...] = (0.1, 0.3, 0.5, 0.7, 0.9)
    oracle_n: int = 63
    step: StepConfig = field(default_factory=StepConfig)
    newton_tol: float | None = None

    def __post_init__(self):
        if self.level not in ("smoke", "full"):
            raise ValueError("level must be 'smoke' or 'full'")

    def digest(self) -> str:
        data = asdict(self)
        return hashlib.sha256(json.dumps(data, sort_keys=True, default=str).encode()).hexdigest()[:12]


def _check(cid, ok, measured, tolerance, t0, flagged=False):
    status = PASS if ok else (FLAGGED if flagged else FAIL)
    return Check(cid, status, measured, tolerance, round(time.perf_counter() - t0, 3))


# ---------------------------------------------------------------- section 1

def check_spectrum(problem: Problem) -> Check:
    t0 = time.perf_counter()
    g = problem.grid
    h = g.spacing
    rel = []
    for k, lam in ((1, problem.lam1), (2, problem.lam2)):
        exact = 4.0 / h**2 * np.sin(k * np.pi * h / 2) ** 2
        rel.append(abs(lam - exact) / exact)
    res = float(np.max(np.abs(apply_laplacian(g, problem.phi) + problem.lam1 * problem.phi)))
    ok = max(rel) <= 1e-12 and problem.beta == 1.0 and res < 1e-10
    return _check("spectrum", ok, {"rel_err": max(rel), "beta": problem.beta, "eigen_residual": res},
                  "rel 1e-12, beta == 1, residual 1e-10", t0)


def check_all_hypotheses(problem: Problem) -> Check:
    t0 = time.perf_counter()
    res = check_hypotheses(problem)
    return _check("hypotheses", all(res.values()), {"failed": [k for k, v in res.items() if not v]},
                  "all hold", t0)


# ---------------------------------------------------------------- section 2

def check_lambda1_geometry(problem: Problem, rng: np.random.Generator) -> Check:
    t0 = time.perf_counter()
    ls = build_lambda_set(problem)
    g = ls.g
    m = {}
    m["g_residual"] = float(np.max(np.abs(apply_laplacian(problem.grid, g) + problem.lam1 * g - problem.hv)))
    m["g_phi"] = abs(problem.ip(g, problem.phi))
    m["g_sign_change"] = bool(g.min() < 0 < g.max())
    cm, cp = ls.c_minus, ls.c_plus
    m["c_minus_increasing"] = bool(np.all(np.diff(cm) > 0))
    m["c_minus_convex"] = bool(np.all(np.diff(cm, 2) >= -1e-10))
    m["c_plus_decreasing"] = bool(np.all(np.diff(cp) < 0))
    m["c_plus_concave"] = bool(np.all(np.diff(cp, 2) <= 1e-10))
    m["ordered"] = bool(np.all(cm <= cp))
    m["T"] = ls.T
    m["c_star"] = [ls.c_star_minus, ls.c_star_plus]
    ok_T = np.isfinite(ls.T) and ls.T >= problem.M - 1e-12
    ok_star = ls.c_star_minus <= 0 <= ls.c_star_plus
    if problem.M == 0:
        ok_T = ok_T and abs(ls.T) <= 1e-10
        ok_star = ok_star and abs(ls.c_star_minus) <= 1e-12 and abs(ls.c_star_plus) <= 1e-12
    else:
        lo, hi = c_range_at_t(ls, problem, problem.M)
        if ls.T > problem.M + 1e-9:
            ok_star = ok_star and min(abs(lo), abs(hi)) <= 1e-9
        else:
            ok_star = ok_star and lo <= 1e-12 and hi >= -1e-12
    # bijection and convexity sampling
    inside_bad = outside_bad = convex_bad = 0
    worst_res = 0.0
    feasible = []
    t_lo = min(-1.0, ls.T - 1.0)
    while len(feasible) < 50:
        t = rng.uniform(t_lo, ls.T)
        r = c_range_at_t(ls, problem, t)
        if r is None or r[1] - r[0] <= 0:
            continue
        c = rng.uniform(r[0], r[1])
        if c in r:
            continue
        feasible.append((t, c))
    for t, c in feasible:
        u = t * problem.phi + c * g
        res = float(np.max(np.abs(residual(problem, problem.lam1, u, c))))
        worst_res = max(worst_res, res)
        if res > 1e-10 or u.max() > problem.M + 1e-10:
            inside_bad += 1
    count = 0
    while count < 50:
        t = rng.uniform(t_lo, ls.T + 2.0)
        c = rng.uniform(2 * ls.c_star_minus - 10, 2 * ls.c_star_plus + 10)
        if in_lambda(ls, t, c):
            continue
        count += 1
        if (t * problem.phi + c * g).max() <= problem.M:
            outside_bad += 1
    for i in range(len(feasible)):
        (t1, c1), (t2, c2) = feasible[i], feasible[(i * 7 + 3) % len(feasible)]
        if not in_lambda(ls, 0.5 * (t1 + t2), 0.5 * (c1 + c2)):
            convex_bad += 1
    m.update(bijection_inside_failures=inside_bad, bijection_outside_failures=outside_bad,
             convexity_failures=convex_bad, worst_residual=worst_res)
    ok = (m["g_residual"] <= 1e-11 and m["g_phi"] <= 1e-13 and m["g_sign_change"]
          and m["c_minus_increasing"] and m["c_minus_convex"] and m["c_plus_decreasing"]
          and m["c_plus_concave"] and m["ordered"] and ok_T and ok_star
          and inside_bad == 0 and outside_bad == 0 and convex_bad == 0)
    return _check("lambda1_geometry", ok, m, "resolvent 1e-11/1e-13, sampled bijection 1e-10", t0)


# ---------------------------------------------------------------- section 3

def _random_guesses(problem, rng, count=4, amplitude=3.0):
    x = problem.grid.nodes
    out = [np.zeros(problem.grid.n)]
    for _ in range(count):
        coef = rng.normal(size=4) * amplitude
        out.append(sum(b * np.sin((k + 1) * np.pi * x) for k, b in enumerate(coef)))
    return out


def check_uniqueness_below(problem: Problem, rng: np.random.Generator, samples: int = 20,
                           config: SolverConfig | None = None) -> Check:
    t0 = time.perf_counter()
    worst_spread = 0.0
    bad = 0
    lam1 = problem.lam1
    for _ in range(samples):
        a = rng.uniform(-lam1, 0.95 * lam1)
        c = rng.uniform(-50.0, 50.0)
        sols = []
        for guess in _random_guesses(problem, rng):
            try:
                sols.append(newton_solve(problem, a, c, guess, config))
            except ConvergenceError:
                continue
        if not sols:
            bad += 1
            continue
        ref = sols[0].u
        worst_spread = max([worst_spread] + [float(np.max(np.abs(s.u - ref))) for s in sols])
        for s in sols:
            if s.morse_index != 0 or s.spectrum.smallest_eigenvalue < lam1 - a - 1e-8:
                bad += 1
    ok = bad == 0 and worst_spread <= 1e-8
    return _check("uniqueness_below_lambda1", ok, {"samples": samples, "spread": worst_spread, "bad": bad},
                  "agreement 1e-8, index 0, mu1 >= lam1 - a - 1e-8", t0)


def solve_below_lambda1(problem: Problem, a: float, c_values, config: SolverConfig | None = None,
                        dc: float = 2.0) -> list[Solution]:
    """Unique solutions at a < lam1 for each c, by natural continuation in c from u = 0."""
    c_values = np.asarray(c_values, dtype=float)
    found = {}
    for side in (np.sort(c_values[c_values >= 0]), np.sort(c_values[c_values < 0])[::-1]):
        u, c0 = np.zeros(problem.grid.n), 0.0
        for c in side:
            k = max(1, int(np.ceil(abs(c - c0) / dc)))
            for cc in np.linspace(c0, c, k + 1)[1:]:
                sol = newton_solve(problem, a, cc, u, config)
                u = sol.u
            c0 = c
            found[float(c)] = sol
    return [found[float(c)] for c in c_values]


EPS_LADDER = (0.3, 0.1, 0.03, 0.01)


def _c_grid(ls, count=9):
    return np.linspace(ls.c_star_minus - 1.0, ls.c_star_plus + 1.0, count)


def check_convergence_below(problem: Problem, config: SolverConfig | None = None) -> tuple[Check, list]:
    t0 = time.perf_counter()
    ls = build_lambda_set(problem)
    cs = _c_grid(ls)
    errs, per_c, sols_all = [], [], []
    for e in EPS_LADDER:
        sols = solve_below_lambda1(problem, problem.lam1 * (1 - e), cs, config)
        sols_all.extend(sols)
        d = [float(np.max(np.abs(s.u - tau_and_limit(ls, s.c)[1]))) for s in sols]
        per_c.append(d)
        errs.append(max(d))
    decreasing = all(x > y for x, y in zip(errs, errs[1:]))
    ok = decreasing and errs[-1] < errs[0] / 3
    ratio = [per_c[-1][i] / per_c[0][i] if per_c[0][i] > 1e-12 else 0.0 for i in range(len(cs))]
    return (_check("convergence_below_lambda1", ok,
                   {"errors": errs, "ratio": errs[-1] / errs[0], "per_c_ratio": ratio},
                   "decreasing, e(0.01)/e(0.3) < 1/3", t0), sols_all)


def check_half_space(problem: Problem, sols: list[Solution], t_hat: float = -0.5) -> Check:
    t0 = time.perf_counter()
    ls = build_lambda_set(problem)
    margin = min(s.t_phi - tau_hat(ls, s.c, t_hat) for s in sols)
    return _check("half_space_below_lambda1", margin > -1e-6, {"min_margin": margin, "count": len(sols)},
                  "t > tau_hat(c) - 1e-6", t0)


# ---------------------------------------------------------------- section 4

def loop_properties(problem: Problem, branch: Branch, step: StepConfig) -> dict:
    """Measured structure of a closed loop at lam1 < a < lam2."""
    folds = branch.fold_points(FOLD0)
    cfold = sorted(fp.c for fp in folds)
    m = {
        "closed": branch.closed,
        "gap": branch.closure_gap(problem),
        "max_step": branch.max_step(problem),
        "fold0": len(folds),
        "trans12": len(branch.fold_points(TRANS12)),
        "indices": sorted(set(int(i) for i in branch.indices)),
        "anomalies": len(branch.anomalies),
        "fold_c": cfold,
    }
    ok = (branch.closed and m["gap"] <= 2 * step.ds_max and m["max_step"] <= step.ds_max * (1 + 1e-9)
          and len(folds) == 2 and m["trans12"] == 0 and set(m["indices"]) <= {0, 1}
          and m["anomalies"] == 0)
    if len(folds) == 2:
        lo, hi = cfold
        ok = ok and lo < 0 < hi
        inner = [count_solutions_at(branch, c) for c in np.linspace(lo, hi, 12)[1:-1]]
        outer = [count_solutions_at(branch, c) for c in (lo - 1.0, hi + 1.0)]
        m["inner_counts"] = sorted(set(inner))
        m["outer_counts"] = outer
        ok = ok and set(inner) == {2} and outer == [0, 0]
        # index 0 exactly on the arc between the folds that contains u_dagger
        idx = branch.indices
        kinds = dict(branch.markers)
        fidx = sorted(i for i, k in kinds.items() if k == FOLD0)
        arc_in = idx[fidx[0] + 1:fidx[1]]
        arc_out = np.concatenate([idx[fidx[1] + 1:], idx[:fidx[0]]])
        m["arc_indices"] = [sorted(set(int(i) for i in arc_in)), sorted(set(int(i) for i in arc_out))]
        ok = ok and sorted(m["arc_indices"]) == [[0], [1]]
    m["ok"] = bool(ok)
    return m


def check_loops(problem: Problem, a_rels, step: StepConfig, config=None) -> tuple[Check, list[Branch]]:
    t0 = time.perf_counter()
    branches, details, ok = [], [], True
    for rel in a_rels:
        try:
            br = trace_branch(problem, problem.a_from_rel(rel), step, config)
        except (ContinuationError, ConvergenceError) as exc:
            details.append({"rel": rel, "error": str(exc)})
            ok = False
            continue
        branches.append(br)
        m = loop_properties(problem, br, step)
        ok = ok and m["ok"]
        details.append({"rel": rel, "points": len(br), "fold_c": m["fold_c"], "ok": m["ok"]})
    return _check("loops_between_eigenvalues", ok, {"runs": details},
                  "closed, 2 index-0 folds, indices {0,1}, counts 2/0", t0), branches


def fold_formula_failures(fp) -> list[str]:
    bad = []
    if not np.all(fp.kernel > 0):
        bad.append("kernel not positive")
    if fp.h_dot_w == 0 or np.sign(fp.h_dot_w) != np.sign(fp.c):
        bad.append("sign <h,w> != sign c")
    if not fp.mu_prime > 0:
        bad.append("mu' <= 0")
    if np.sign(fp.c_second_derivative) != -np.sign(fp.c):
        bad.append("sign c'' != -sign c")
    return bad


def check_fold_formulas(problem: Problem, branches: list[Branch]) -> Check:
    t0 = time.perf_counter()
    folds = [fp for br in branches for fp in br.fold_points(FOLD0)]
    bad = []
    worst_kernel = 0.0
    for fp in folds:
        worst_kernel = max(worst_kernel, float(np.max(np.abs(jacobian(problem, fp.a, fp.solution.u).matvec(fp.kernel)))))
        bad.extend(fold_formula_failures(fp))
    ok = bool(folds) and not bad and worst_kernel <= 1e-7
    return _check("fold_formulas", ok, {"folds": len(folds), "failures": bad, "kernel_residual": worst_kernel},
                  "w > 0, sign rules, |J w| <= 1e-7", t0)


# dense multi-start oracle, independent of the tridiagonal machinery

def _dense_system(problem: Problem):
    n, h = problem.grid.n, problem.grid.spacing
    lap = (np.diag(-2.0 * np.ones(n)) + np.diag(np.ones(n - 1), 1) + np.diag(np.ones(n - 1), -1)) / h**2
    return lap


def dense_newton(problem: Problem, a: float, c: float, guess: np.ndarray, tol: float = 1e-9,
                 iterations: int = 60) -> np.ndarray | None:
    lap = _dense_system(problem)
    f = problem.f
    u = np.array(guess, dtype=float)
    r = lap @ u + a * u - f.value(u) - c * problem.hv
    rn = np.max(np.abs(r))
    for _ in range(iterations):
        if rn <= tol:
            return u
        J = lap + np.diag(a - f.first(u))
        try:
            du = np.linalg.solve(J, -r)
        except np.linalg.LinAlgError:
            return None
        lam = 1.0
        while True:
            trial = u + lam * du
            rt = lap @ trial + a * trial - f.value(trial) - c * problem.hv
            if np.max(np.abs(rt)) < rn or lam < 1e-3:
                break
            lam *= 0.5
        u, r, rn = trial, rt, np.max(np.abs(rt))
    return u if rn <= tol else None


def dense_fold_scan(problem: Problem, a: float, side: int, dc: float, c_stop: float) -> float:
    """Largest |c| on a grid of spacing dc (in direction ``side``) at which multi-start Newton,
    warm-started along the stable solutions from c = 0, still finds a solution."""
    phi = problem.phi
    u = None
    for s in np.linspace(0.5, 10.0, 40):
        cand = dense_newton(problem, a, 0.0, (problem.M + s) * phi)
        if cand is not None and cand.min() > 0:
            u = cand
            break
    if u is None:
        raise ConvergenceError("oracle found no positive solution at c = 0")
    last = 0.0
    prev = None
    c = 0.0
    while abs(c) < c_stop:
        c += side * dc
        guesses = [u]
        if prev is not None:
            guesses.append(2 * u - prev)
            guesses += [u + k * (u - prev) for k in (3.0, -2.0)]
        found = None
        for gss in guesses:
            found = dense_newton(problem, a, c, gss)
            if found is not None:
                break
        if found is None:
            return last
        prev, u, last = u, found, c
    return last


def check_fold_oracle(problem: Problem, a_rels, step: StepConfig, dc: float = 0.05,
                      n: int = 63) -> Check:
    t0 = time.perf_counter()
    small = make_problem(n, M=problem.M, kappa=problem.f.kappa, p=problem.f.p, modes=problem.h.modes)
    rows, ok = [], True
    for rel in a_rels:
        a = small.a_from_rel(rel)
        br = trace_branch(small, a, step)
        for fp in br.fold_points(FOLD0):
            side = 1 if fp.c > 0 else -1
            scan = dense_fold_scan(small, a, side, dc, abs(fp.c) + 5 * dc)
            err = abs(abs(fp.c) - abs(scan))
            rows.append([rel, fp.c, scan, err])
            ok = ok and err <= 2 * dc
    return _check("fold_oracle", ok, {"n": n, "dc": dc, "max_err": max(r[3] for r in rows), "rows": len(rows)},
                  "|c_fold - c_scan| <= 2 dc", t0)


def fold_limit_extrapolation(problem: Problem, seed, depth: int = 16):
    """Track a fold towards lam1 on eps = 0.02 Delta 2^-k and Aitken-extrapolate c and t."""
    gap = problem.lam2 - problem.lam1
    eps = 0.02 * gap * 2.0 ** -np.arange(depth)
    curve = fold_curve(problem, seed, problem.lam1 + eps)
    c = curve.c
    t = curve.t_phi

    def aitken(x):
        x0, x1, x2 = x[0], x[1], x[2]
        d = (x0 - x1) - (x1 - x2)
        return x0 - (x0 - x1) ** 2 / d if d != 0 else x0

    return curve, aitken(c), aitken(t)


def check_fold_curves(problem: Problem, branch: Branch, delta: float, samples: int = 24) -> Check:
    t0 = time.perf_counter()
    gap = problem.lam2 - problem.lam1
    ls = build_lambda_set(problem)
    a_grid = np.linspace(problem.lam1 + 0.02 * gap, problem.lam2 + delta, samples)
    m, ok = {}, True
    for fp in branch.fold_points(FOLD0):
        curve = fold_curve(problem, fp, a_grid)
        cs = curve.c
        single = len(curve.samples) == samples and bool(np.all(np.diff(curve.a) > 0))
        sides = bool(np.all(np.sign(cs) == np.sign(fp.c)))
        # grid refinement by 2 reproduces the samples
        fine = fold_curve(problem, fp, np.linspace(a_grid[0], a_grid[-1], 2 * samples - 1))
        refine = float(np.max(np.abs(fine.c[::2] - cs)))
        lim, c_extra, t_extra = fold_limit_extrapolation(problem, curve.samples[0][1])
        target = ls.c_star_plus if fp.c > 0 else ls.c_star_minus
        # with M = 0 the limit is c = 0; measure against the fold value at the range start
        scale = abs(target) if problem.M > 0 else abs(curve.c[0])
        # samples come back in increasing a: index 0 is closest to lam1
        c_last, t_last = lim.c[0], lim.t_phi[0]
        key = "plus" if fp.c > 0 else "minus"
        m[key] = {"single_valued": single, "one_side": sides, "refine": refine,
                  "a_min_rel": (lim.a[0] - problem.lam1) / gap, "t_last": t_last,
                  "c_last": c_last, "c_target": target, "c_extrapolated": c_extra,
                  "t_extrapolated": t_extra}
        ok = (ok and single and sides and refine < 1e-6 and abs(t_last) < 0.02
              and abs(c_last - target) < 0.05 * scale)
    ok = ok and len(m) == 2
    return _check("fold_curves", ok, m, "graph, one side, refine 1e-6, |t*|<0.02, |c*-c_lim|<5%", t0)


def check_limit_profiles(problem: Problem, step: StepConfig, config=None) -> tuple[Check, list]:
    """Profiles on branches at a = lam1 (1 + eps): limit t_c phi + c g (stable), c g (index 1) when
    M > 0; vanishing sup norm when M = 0."""
    t0 = time.perf_counter()
    ls = build_lambda_set(problem)
    branches = []
    if problem.M > 0:
        cs = np.linspace(ls.c_star_minus, ls.c_star_plus, 11)[1:-1]
        e_st, e_un = [], []
        for e in EPS_LADDER:
            br = trace_branch(problem, problem.lam1 * (1 + e), step, config)
            branches.append(br)
            st, un = [], []
            for c in cs:
                for s in solutions_at(problem, br, c, config):
                    target = (t_c_profile(ls, c) if s.morse_index == 0 else 0.0) * problem.phi + c * ls.g
                    (st if s.morse_index == 0 else un).append(float(np.max(np.abs(s.u - target))))
            e_st.append(max(st))
            e_un.append(max(un))
        ok = all(_gate(x) for x in (e_st, e_un))
        m = {"stable_errors": e_st, "index1_errors": e_un}
    else:
        sizes = []
        for e in EPS_LADDER:
            br = trace_branch(problem, problem.lam1 * (1 + e), step, config)
            branches.append(br)
            sizes.append(max(float(np.max(np.abs(s.u))) for s in br.points))
        ok = _gate(sizes)
        m = {"sup_norms": sizes}
    return _check("limit_profiles", ok, m, "decreasing, last < first/3", t0), branches


def _gate(errs):
    return all(x > y for x, y in zip(errs, errs[1:])) and errs[-1] < errs[0] / 3


# ---------------------------------------------------------------- section 5

def check_segment_at_lambda2(problem: Problem, step: StepConfig, config=None) -> tuple[Check, Branch | None]:
    t0 = time.perf_counter()
    try:
        br = trace_branch(problem, problem.lam2, step, config)
    except (ContinuationError, ConvergenceError) as exc:
        return _check("segment_at_lambda2", False, {"error": str(exc)}, "", t0), None
    m = segment_properties(problem, br)
    return _check("segment_at_lambda2", m.pop("ok"), m,
                  "L residual 1e-10, degenerate index 1, kernel ~ psi, cyclic order", t0), br


def segment_properties(problem: Problem, br: Branch) -> dict:
    i0 = next(i for i, k in br.markers if k == L_START)
    i1 = next(i for i, k in br.markers if k == L_END)
    seg = br.points[i0:i1 + 1]
    res = max(s.residual_norm for s in seg)
    psi_n = problem.psi / np.sqrt(problem.ip(problem.psi, problem.psi))
    align = 1.0
    good = True
    for s in seg:
        good = good and s.degenerate and s.morse_index == 1 and s.spectrum.kernel_vector is not None
        if s.spectrum.kernel_vector is not None:
            w = s.spectrum.kernel_vector
            align = min(align, abs(problem.ip(w, psi_n)) / np.sqrt(problem.ip(w, w)))
    ends = [seg[0].t_psi, seg[-1].t_psi]
    expected_ends = [-problem.M / problem.beta, problem.M]
    order = br.marker_kinds()
    folds = br.fold_points(FOLD0)
    fold_sides = [np.sign(fp.c) for fp in folds]
    # arcs: after L_end the c > 0 index-1 arc, then p*+, the index-0 arc, p*-, the c < 0 arc
    fidx = sorted(i for i, k in br.markers if k == FOLD0)
    arcs_ok = False
    if len(fidx) == 2:
        sharp = br.points[i1 + 1:fidx[0]]
        star = br.points[fidx[0] + 1:fidx[1]]
        flat = br.points[fidx[1] + 1:]
        arcs_ok = (all(p.c > 0 and p.morse_index == 1 for p in sharp)
                   and all(p.morse_index == 0 for p in star)
                   and all(p.c < 0 and p.morse_index == 1 for p in flat))
    ok = (res <= 1e-10 and good and align >= 1 - 1e-8
          and np.allclose(ends, expected_ends, atol=1e-12)
          and order == [L_START, L_END, FOLD0, FOLD0] and fold_sides == [1, -1] and arcs_ok
          and br.closed)
    return {"ok": bool(ok), "L_residual": res, "L_points": len(seg), "kernel_alignment": align,
            "L_ends": ends, "markers": order, "arcs_ok": arcs_ok, "fold_c": [fp.c for fp in folds]}


def multistart_count_at(problem: Problem, a: float, c: float, distinct: float = 1e-6) -> list[np.ndarray]:
    """Distinct solutions reached by dense Newton from t psi, s phi and mixed starts."""
    sols = []
    starts = [t * problem.psi for t in np.linspace(-8, 8, 33)]
    starts += [s * problem.phi for s in np.linspace(0, 10, 21)]
    starts += [s * problem.phi + t * problem.psi for s in (2.0, 4.0, 6.0) for t in (-3.0, -1.0, 1.0, 3.0)]
    for g in starts:
        u = dense_newton(problem, a, c, g, tol=1e-9)
        if u is None:
            continue
        if all(np.max(np.abs(u - v)) > distinct for v in sols):
            sols.append(u)
    return sols


def above_lambda2_properties(problem: Problem, br: Branch, negated: Problem | None = None) -> dict:
    a = br.a
    pattern = above_lambda2_pattern(br)
    trans = {("flat" if fp.solution.t_psi < 0 else "sharp"): fp.c for fp in br.fold_points(TRANS12)}
    m = {"pattern": pattern, "trans_c": trans, "index2_points": int(np.sum(br.indices == 2))}
    ok = pattern == ["p_flat", "p_sharp", "p_star_plus", "p_star_minus"] and br.closed
    # index-2 points lie on the arc between the two transition markers that contains u = 0
    kinds = dict(br.markers)
    ti = sorted(i for i, k in kinds.items() if k == TRANS12)
    if len(ti) == 2 and m["index2_points"]:
        i2 = np.flatnonzero(br.indices == 2)
        inner = all(ti[0] < i < ti[1] for i in i2)
        outer = all(i > ti[1] or i < ti[0] for i in i2)
        m["index2_on_one_arc"] = bool(inner or outer)
        ok = ok and (inner or outer)
    else:
        ok = False
    d = chart_derivative_at_zero(problem, a)
    m["chart_derivative"] = d
    ok = ok and d < 0 if problem.h.psi_component < 0 else ok and d > 0
    if negated is not None:
        dn = chart_derivative_at_zero(negated, a)
        m["chart_derivative_negated"] = dn
        ok = ok and np.sign(dn) == -np.sign(d)
    if len(trans) == 2:
        m["c_flat_positive"] = trans["flat"] > 0 > trans["sharp"]
        cmin = min(abs(trans["flat"]), abs(trans["sharp"]))
        counts = [count_solutions_at(br, c) for c in np.linspace(-0.2, 0.2, 9) * cmin if c != 0.0]
        counts.append(count_solutions_at(br, 0.0))
        m["counts"] = sorted(set(counts))
        ok = ok and min(counts) >= 4
        if problem.M > 0:
            oracle = multistart_count_at(problem, a, 0.0)
            m["oracle_count_c0"] = len(oracle)
            ok = ok and len(oracle) >= 4
    else:
        ok = False
    m["ok"] = bool(ok)
    return m


def check_above_lambda2(problem: Problem, step: StepConfig, config=None) -> tuple[Check, Branch | None, float]:
    t0 = time.perf_counter()
    try:
        delta, br = find_delta(problem, step, config)
    except (ContinuationError, ConvergenceError) as exc:
        return _check("structure_above_lambda2", False, {"error": str(exc)}, "", t0), None, float("nan")
    m = above_lambda2_properties(problem, br, problem.negated_harvest())
    m["delta"] = delta
    return _check("structure_above_lambda2", m.pop("ok"), m,
                  "pattern p_flat p_sharp p*+ p*-, index 2 present, c'(0) sign, >= 4 solutions", t0), br, delta


# ---------------------------------------------------------------- diagnostics

def check_integral_identity(solutions, newton_tol: float) -> Check:
    t0 = time.perf_counter()
    worst = max((abs(s.sinalt) for s in solutions), default=0.0)
    return _check("integral_identity", worst <= 10 * newton_tol,
                  {"solutions": len(solutions), "worst": worst, "newton_tol": newton_tol},
                  "|defect| <= 10 newton_tol", t0)


def check_a_priori_bound(branches: list[Branch]) -> Check:
    """Records c_bar (largest |c|) and K (max u - max |c|) per run; reported, not gated."""
    t0 = time.perf_counter()
    rows = []
    for br in branches:
        cbar = float(np.max(np.abs(br.c)))
        umax = max(float(np.max(s.u)) for s in br.points)
        rows.append([br.a, cbar, umax - cbar])
    ok = all(np.isfinite(r[1]) for r in rows) and all(br.closed for br in branches)
    return _check("a_priori_bound", ok, {"runs": len(rows), "c_bar": max(r[1] for r in rows),
                                         "K": max(r[2] for r in rows)}, "closed and bounded", t0)


def count_nodal_domains(u: np.ndarray, threshold: float = 0.0) -> int:
    """Maximal runs of same-sign nodes; entries within +-threshold count as zero."""
    if threshold < 0:
        raise ValueError("threshold must be >= 0")
    s = np.sign(np.where(np.abs(u) <= threshold, 0.0, u))
    count, prev = 0, 0.0
    for v in s:
        if v != 0 and v != prev:
            count += 1
        prev = v
    return count


def _nodal_threshold(u):
    return 1e-8 * float(np.max(np.abs(u))) if u.size else 0.0


@dataclass(frozen=True)
class NodalWitness:
    a: float
    c: float
    u: np.ndarray = field(repr=False)
    domains: int
    morse_index: int


def stable_two_nodal_search(problem: Problem, a_window, c_window, samples: int = 3,
                            step: StepConfig | None = None, config=None,
                            branches: list[Branch] | None = None) -> NodalWitness | None:
    """First index-0 solution with at least two nodal domains on traced branches."""
    config = config or branch_solver_config(problem)
    if branches is None:
        branches = []
        for a in np.linspace(a_window[0], a_window[1], samples):
            if a <= problem.lam1:
                continue
            try:
                branches.append(trace_branch(problem, a, step, config))
            except (ContinuationError, ConvergenceError, ValueError):
                continue
    for br in branches:
        if not a_window[0] <= br.a <= a_window[1]:
            continue
        for s in br.points:
            if s.morse_index != 0 or not c_window[0] <= s.c <= c_window[1]:
                continue
            d = count_nodal_domains(s.u, _nodal_threshold(s.u))
            if d >= 2:
                # replay the postconditions before reporting
                if (s.residual_norm <= config.newton_tol and s.morse_index == 0
                        and count_nodal_domains(s.u, _nodal_threshold(s.u)) >= 2):
                    return NodalWitness(br.a, s.c, s.u, d, s.morse_index)
    return None


def check_two_nodal(problem: Problem, branch: Branch | None) -> Check:
    t0 = time.perf_counter()
    if branch is None:
        return _check("stable_two_nodal", False, {"witness": None}, "informative", t0, flagged=True)
    fmin = min(fp.c for fp in branch.fold_points(FOLD0))
    w = stable_two_nodal_search(problem, (branch.a, branch.a), (fmin, 0.0), branches=[branch])
    m = {"witness": None} if w is None else {"a": w.a, "c": w.c, "domains": w.domains}
    return _check("stable_two_nodal", w is not None, m, "informative", t0, flagged=True)


# ---------------------------------------------------------------- suite

def run_suite(problem: Problem, suite: SuiteConfig | None = None) -> VerificationReport:
    suite = suite or SuiteConfig()
    rng = np.random.default_rng(suite.seed)
    step = suite.step
    config = branch_solver_config(problem) if suite.newton_tol is None else SolverConfig(newton_tol=suite.newton_tol)
    report = VerificationReport(environment={"n": problem.grid.n, "config_hash": suite.digest(),
                                             "level": suite.level, "M": problem.M})
    smoke = suite.level == "smoke"

    def guarded(fn, *args):
        t0 = time.perf_counter()
        try:
            return fn(*args)
        except Exception as exc:  # a crashing check is a failing check
            log.exception("check %s crashed", getattr(fn, "__name__", fn))
            name = getattr(fn, "__name__", "check").replace("check_", "")
            return _check(name, False, {"error": f"{type(exc).__name__}: {exc}"}, "", t0)

    add = report.checks.append
    add(guarded(check_spectrum, problem))
    add(guarded(check_all_hypotheses, problem))
    add(guarded(check_lambda1_geometry, problem, rng))
    add(guarded(check_uniqueness_below, problem, rng, 5 if smoke else 20))
    solutions: list[Solution] = []
    if not smoke:
        res = guarded(check_convergence_below, problem)
        if isinstance(res, tuple):
            add(res[0])
            solutions += res[1]
            add(guarded(check_half_space, problem, res[1]))
        else:
            add(res)
    rels = suite.a_rels[len(suite.a_rels) // 2:len(suite.a_rels) // 2 + 1] if smoke else suite.a_rels
    res = guarded(check_loops, problem, rels, step, config)
    loops = res[1] if isinstance(res, tuple) else []
    add(res[0] if isinstance(res, tuple) else res)
    branches = list(loops)
    if loops:
        add(guarded(check_fold_formulas, problem, loops))
    if smoke:
        for br in branches:
            solutions += br.points
        add(check_integral_identity(solutions, config.newton_tol))
        return report
    add(guarded(check_fold_oracle, problem, suite.a_rels, step, 0.05, suite.oracle_n))
    res = guarded(check_above_lambda2, problem, step, config)
    above, delta = (res[1], res[2]) if isinstance(res, tuple) else (None, float("nan"))
    above_check = res[0] if isinstance(res, tuple) else res
    if loops:
        add(guarded(check_fold_curves, problem, loops[len(loops) // 2],
                    delta if np.isfinite(delta) else 0.0))
    res = guarded(check_limit_profiles, problem, step, config)
    if isinstance(res, tuple):
        add(res[0])
        branches += res[1]
    else:
        add(res)
    res = guarded(check_segment_at_lambda2, problem, step, config)
    if isinstance(res, tuple):
        add(res[0])
        if res[1] is not None:
            branches.append(res[1])
    else:
        add(res)
    add(above_check)
    if above is not None:
        branches.append(above)
    for br in branches:
        solutions += br.points
    add(check_integral_identity(solutions, config.newton_tol))
    if branches:
        add(guarded(check_a_priori_bound, branches))
    add(guarded(check_two_nodal, problem, above))
    return report
