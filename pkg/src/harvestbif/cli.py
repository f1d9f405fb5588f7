"""Command-line front end.

Exit codes: 0 success, 1 computational failure, 2 configuration error.
"""
from __future__ import annotations

import argparse
import csv
import logging
import sys
from concurrent.futures import ProcessPoolExecutor
from pathlib import Path

import numpy as np

from .config import Config
from .continuation import (FOLD0, L_END, L_START, START, TRANS12, Branch, ContinuationError,
                           fold_curve, solutions_at, trace_branch)
from .grid import discrete_eigenvalue
from .lambda1 import build_lambda_set
from .model import ConfigurationError
from .output import read_branch_csv, render_svg, write_branch_csv
from .solver import ConvergenceError, Solution
from .spectrum import SpectrumError, SpectrumReport
from .verify import SuiteConfig, run_suite, solve_below_lambda1

log = logging.getLogger("harvestbif")

COMMANDS = ("eig", "lambda1-geometry", "solve", "branch", "fold-track", "sweep", "verify", "plot")
DEFAULT_SWEEP = (0.1, 0.3, 0.5, 0.7, 0.9)


class UsageError(ConfigurationError):
    pass


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="harvestbif", description=__doc__.splitlines()[0])
    ap.add_argument("command", choices=COMMANDS)
    ap.add_argument("--config", help="JSON configuration file")
    ap.add_argument("--out", default=".", help="output directory")
    ap.add_argument("--a", type=float)
    ap.add_argument("--a-rel", type=float, help="a = lam1 + a_rel * (lam2 - lam1)")
    ap.add_argument("--a-rels", help="comma-separated a_rel values for sweep")
    ap.add_argument("--c", type=float)
    ap.add_argument("--n", type=int)
    ap.add_argument("--level", choices=("smoke", "full"))
    ap.add_argument("--seed", type=int, default=0)
    ap.add_argument("--axes", default="c_vs_tpsi", choices=("c_vs_tpsi", "c_vs_tphi", "a_c_t"))
    ap.add_argument("--input", action="append", help="branch CSV for plot (repeatable)")
    ap.add_argument("--workers", type=int, default=None)
    ap.add_argument("-v", "--verbose", action="store_true")
    return ap


def _resolve_a(problem, args) -> float:
    if args.a is not None and args.a_rel is not None:
        raise UsageError("give --a or --a-rel, not both")
    if args.a is not None:
        return args.a
    if args.a_rel is not None:
        return problem.a_from_rel(args.a_rel)
    raise UsageError("this command needs --a or --a-rel")


def _outdir(args) -> Path:
    out = Path(args.out)
    try:
        out.mkdir(parents=True, exist_ok=True)
    except OSError as exc:
        raise UsageError(f"cannot create output directory {out}: {exc}") from exc
    return out


def _window_check(problem, step, a):
    top = problem.lam2 + step.delta_search * (problem.lam3 - problem.lam2)
    if a > top:
        raise UsageError(f"a={a} lies above lam2 + delta_search = {top:.6g}; not supported")


# ------------------------------------------------------------------ commands

def cmd_eig(cfg: Config, args) -> int:
    problem = cfg.problem()
    out = _outdir(args)
    h = problem.grid.spacing
    with open(out / "eigen.csv", "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["k", "lambda_h", "closed_form"])
        for k in (1, 2, 3):
            w.writerow([k, repr(float(discrete_eigenvalue(problem.grid, k))),
                        repr(float(4.0 / h**2 * np.sin(k * np.pi * h / 2) ** 2))])
    print(f"lam1={problem.lam1!r} lam2={problem.lam2!r} lam3={problem.lam3!r} beta={problem.beta!r}")
    return 0


def cmd_lambda1(cfg: Config, args) -> int:
    problem = cfg.problem()
    ls = build_lambda_set(problem)
    out = _outdir(args)
    with open(out / "lambda1.csv", "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["t", "c_minus", "c_plus"])
        for t, lo, hi in zip(ls.t_samples, ls.c_minus, ls.c_plus):
            w.writerow([repr(float(t)), repr(float(lo)), repr(float(hi))])
    render_svg(ls, out / "lambda1.svg")
    print(f"T={ls.T!r} c_star_minus={ls.c_star_minus!r} c_star_plus={ls.c_star_plus!r}")
    return 0


def _solutions_branch(a, sols: list[Solution]) -> Branch:
    return Branch(a=a, points=list(sols), parameter_log=["solve"] * len(sols))


def cmd_solve(cfg: Config, args) -> int:
    problem = cfg.problem()
    a = _resolve_a(problem, args)
    if args.c is None:
        raise UsageError("solve needs --c")
    step = cfg.step()
    _window_check(problem, step, a)
    if abs(a - problem.lam1) <= 1e-12 * problem.lam1:
        raise UsageError("at a = lam1 the solutions form a continuum; use lambda1-geometry")
    if a < problem.lam1:
        sols = solve_below_lambda1(problem, a, [args.c], cfg.solver())
    else:
        br = trace_branch(problem, a, step, cfg.solver(problem))
        sols = solutions_at(problem, br, args.c, cfg.solver(problem))
    out = _outdir(args)
    write_branch_csv(_solutions_branch(a, sols), out / "solutions.csv")
    for s in sols:
        print(f"c={s.c!r} t_phi={s.t_phi:.10g} t_psi={s.t_psi:.10g} index={s.morse_index} "
              f"residual={s.residual_norm:.3e}")
    print(f"{len(sols)} solution(s) at a={a!r}, c={args.c!r}")
    return 0


def _trace(cfg: Config, a: float) -> Branch:
    problem = cfg.problem()
    step = cfg.step()
    _window_check(problem, step, a)
    return trace_branch(problem, a, step, cfg.solver(problem))


def _axes_for(problem, a, requested):
    if requested != "c_vs_tpsi":
        return requested
    return "c_vs_tpsi" if a >= problem.lam2 - 1e-12 * problem.lam2 else "c_vs_tphi"


def cmd_branch(cfg: Config, args) -> int:
    problem = cfg.problem()
    a = _resolve_a(problem, args)
    br = _trace(cfg, a)
    out = _outdir(args)
    write_branch_csv(br, out / "branch.csv")
    render_svg(br, out / "diagram.svg", _axes_for(problem, a, args.axes))
    folds = [f"{fp.c:.10g}" for fp in br.fold_points()]
    print(f"a={a!r} points={len(br)} closed={br.closed} markers={br.marker_kinds()} fold_c={folds}")
    return 0


def cmd_fold_track(cfg: Config, args) -> int:
    problem = cfg.problem()
    rel = 0.5 if args.a_rel is None and args.a is None else None
    a = problem.a_from_rel(rel) if rel is not None else _resolve_a(problem, args)
    br = _trace(cfg, a)
    gap = problem.lam2 - problem.lam1
    grid = np.linspace(problem.lam1 + 0.02 * gap, problem.lam2, 25)
    out = _outdir(args)
    curves = [fold_curve(problem, fp, grid, cfg.solver(problem)) for fp in br.fold_points(FOLD0)]
    with open(out / "folds.csv", "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["side", "a", "c", "t_phi", "t_psi"])
        for cv in curves:
            for aa, fp in cv.samples:
                w.writerow([cv.side, repr(float(aa)), repr(fp.c), repr(fp.solution.t_phi),
                            repr(fp.solution.t_psi)])
    render_svg(curves, out / "folds.svg", "a_c_t")
    print(f"tracked {len(curves)} fold curves over {len(grid)} values of a")
    return 0


def _sweep_one(payload):
    cfg_dict, a = payload
    cfg = Config.from_dict(cfg_dict)
    return _trace(cfg, a)


def cmd_sweep(cfg: Config, args) -> int:
    problem = cfg.problem()
    try:
        rels = [float(x) for x in args.a_rels.split(",")] if args.a_rels else list(DEFAULT_SWEEP)
    except ValueError as exc:
        raise UsageError(f"bad --a-rels: {exc}") from exc
    avals = [problem.a_from_rel(r) for r in rels]
    for a in avals:
        _window_check(problem, cfg.step(), a)
    out = _outdir(args)
    with ProcessPoolExecutor(max_workers=args.workers) as pool:
        branches = list(pool.map(_sweep_one, [(cfg.to_dict(), a) for a in avals]))
    with open(out / "sweep.csv", "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["k", "a_rel", "a", "points", "closed", "fold0_c"])
        for k, (r, a, br) in enumerate(zip(rels, avals, branches)):
            write_branch_csv(br, out / f"branch_{k:02d}.csv")
            folds = ";".join(repr(fp.c) for fp in br.fold_points(FOLD0))
            w.writerow([k, repr(r), repr(a), len(br), int(br.closed), folds])
    render_svg(branches, out / "sweep.svg", "c_vs_tphi")
    print(f"swept {len(branches)} values of a")
    return 0


def cmd_verify(cfg: Config, args) -> int:
    problem = cfg.problem()
    levels = [args.level] if args.level else list(cfg.levels)
    out = _outdir(args)
    ok = True
    text = []
    for level in levels:
        suite = SuiteConfig(level=level, seed=args.seed, step=cfg.step(), newton_tol=cfg.newton_tol)
        report = run_suite(problem, suite)
        text.append(report.to_text())
        ok = ok and report.passed
    (out / "report.txt").write_text("".join(text))
    sys.stdout.write("".join(text))
    return 0 if ok else 1


def _branch_from_rows(rows) -> Branch:
    """Rebuild a plottable Branch from CSV rows (u reduced to its min and max)."""
    codes = {"fold0": FOLD0, "trans12": TRANS12, "Lstart": L_START, "Lend": L_END, "start": START}
    pts, markers, logs = [], [], []
    for r in rows:
        u = np.array([r["u_min"], r["u_max"]])
        pts.append(Solution(r["a"], u, r["c"], r["residual_norm"], r["t_phi"], r["t_psi"],
                            SpectrumReport(r["morse_index"], float("nan"), bool(r["degenerate"]))))
        if r["marker"] != "-":
            markers.append((r["index"], codes[r["marker"]]))
        logs.append("csv")
    if markers and any(k == L_START for _, k in markers):
        i0 = next(i for i, k in markers if k == L_START)
        i1 = next((i for i, k in markers if k == L_END), i0)
        for i in range(i0, i1 + 1):
            logs[i] = "analytic"
    return Branch(a=rows[0]["a"], points=pts, markers=markers, closed=False, parameter_log=logs)


def cmd_plot(cfg: Config, args) -> int:
    if not args.input:
        raise UsageError("plot needs at least one --input branch CSV")
    branches = []
    for path in args.input:
        try:
            rows = read_branch_csv(path)
        except (OSError, ValueError) as exc:
            raise UsageError(str(exc)) from exc
        if not rows:
            raise UsageError(f"{path} holds no points")
        branches.append(_branch_from_rows(rows))
    out = _outdir(args)
    render_svg(branches, out / "plot.svg", args.axes)
    print(f"plotted {len(branches)} branch(es)")
    return 0


HANDLERS = {"eig": cmd_eig, "lambda1-geometry": cmd_lambda1, "solve": cmd_solve, "branch": cmd_branch,
            "fold-track": cmd_fold_track, "sweep": cmd_sweep, "verify": cmd_verify, "plot": cmd_plot}


def run(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        cfg = Config.load(args.config) if args.config else Config()
        if args.n is not None:
            cfg = cfg.with_overrides(n=args.n)
        return HANDLERS[args.command](cfg, args)
    except ValueError as exc:  # includes ConfigurationError
        print(f"configuration error: {exc}", file=sys.stderr)
        return 2
    except (ContinuationError, ConvergenceError, SpectrumError, np.linalg.LinAlgError) as exc:
        print(f"computation failed: {exc}", file=sys.stderr)
        return 1
    except OSError as exc:
        print(f"I/O error: {exc}", file=sys.stderr)
        return 1


def main() -> None:
    sys.exit(run())


if __name__ == "__main__":
    main()
