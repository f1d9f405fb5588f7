"""Branch CSV files and a small deterministic SVG plotter."""
from __future__ import annotations

import csv
import math
from pathlib import Path
from xml.sax.saxutils import escape

import numpy as np

from .continuation import FOLD0, L_END, L_START, START, TRANS12, Branch, FoldCurve
from .lambda1 import LambdaSet

HEADER = ("index", "a", "c", "t_phi", "t_psi", "u_max", "u_min", "morse_index", "degenerate",
          "residual_norm", "marker")
MARKER_CODES = {FOLD0: "fold0", TRANS12: "trans12", L_START: "Lstart", L_END: "Lend", START: "start"}
INDEX_COLOURS = {0: "#1f77b4", 1: "#d62728", 2: "#2ca02c"}
OTHER_COLOUR = "#7f7f7f"


def _marker_column(branch: Branch) -> list[str]:
    col = ["-"] * len(branch.points)
    for i, kind in sorted(branch.markers, key=lambda m: m[0]):
        if col[i] == "-":
            col[i] = MARKER_CODES[kind]
    return col


def write_branch_csv(branch: Branch, path) -> None:
    marks = _marker_column(branch)
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(HEADER)
        for i, (s, m) in enumerate(zip(branch.points, marks)):
            w.writerow([i, repr(float(s.a)), repr(float(s.c)), repr(float(s.t_phi)), repr(float(s.t_psi)),
                        repr(float(np.max(s.u))), repr(float(np.min(s.u))), s.morse_index,
                        int(s.degenerate), repr(float(s.residual_norm)), m])


def read_branch_csv(path) -> list[dict]:
    """Rows with typed values (floats parsed exactly from their repr)."""
    rows = []
    with open(path, newline="") as fh:
        r = csv.reader(fh)
        header = tuple(next(r))
        if header != HEADER:
            raise ValueError(f"unexpected header in {path}")
        for rec in r:
            row = dict(zip(HEADER, rec))
            for k in ("a", "c", "t_phi", "t_psi", "u_max", "u_min", "residual_norm"):
                row[k] = float(row[k])
            for k in ("index", "morse_index", "degenerate"):
                row[k] = int(row[k])
            rows.append(row)
    return rows


# ------------------------------------------------------------------- SVG

W, H, PAD = 640, 480, 60


def _ticks(lo, hi, count=5):
    if hi <= lo:
        lo, hi = lo - 1.0, hi + 1.0
    raw = (hi - lo) / count
    mag = 10 ** math.floor(math.log10(raw))
    step = min((m * mag for m in (1, 2, 5, 10) if m * mag >= raw), default=10 * mag)
    first = math.ceil(lo / step) * step
    out = []
    v = first
    while v <= hi + 1e-9 * step:
        out.append(0.0 if abs(v) < 1e-12 * step else v)
        v += step
    return out


class _Canvas:
    def __init__(self, xs, ys, xlabel, ylabel, title):
        x0, x1 = float(np.min(xs)), float(np.max(xs))
        y0, y1 = float(np.min(ys)), float(np.max(ys))
        if x1 == x0:
            x0, x1 = x0 - 1, x1 + 1
        if y1 == y0:
            y0, y1 = y0 - 1, y1 + 1
        mx, my = 0.05 * (x1 - x0), 0.05 * (y1 - y0)
        self.x0, self.x1, self.y0, self.y1 = x0 - mx, x1 + mx, y0 - my, y1 + my
        self.parts = [
            f'<svg xmlns="http://www.w3.org/2000/svg" width="{W}" height="{H}" viewBox="0 0 {W} {H}">',
            f'<rect width="{W}" height="{H}" fill="white"/>',
            f'<text x="{W / 2:.1f}" y="24" text-anchor="middle" font-size="14">{escape(title)}</text>',
        ]
        self._axes(xlabel, ylabel)

    def X(self, x):
        return PAD + (x - self.x0) / (self.x1 - self.x0) * (W - 2 * PAD)

    def Y(self, y):
        return H - PAD - (y - self.y0) / (self.y1 - self.y0) * (H - 2 * PAD)

    def _axes(self, xlabel, ylabel):
        p = self.parts
        p.append(f'<rect x="{PAD}" y="{PAD}" width="{W - 2 * PAD}" height="{H - 2 * PAD}" '
                 'fill="none" stroke="black"/>')
        for v in _ticks(self.x0, self.x1):
            x = self.X(v)
            p.append(f'<line x1="{x:.2f}" y1="{H - PAD}" x2="{x:.2f}" y2="{H - PAD + 5}" stroke="black"/>')
            p.append(f'<text x="{x:.2f}" y="{H - PAD + 18}" text-anchor="middle" font-size="11">{v:.4g}</text>')
        for v in _ticks(self.y0, self.y1):
            y = self.Y(v)
            p.append(f'<line x1="{PAD - 5}" y1="{y:.2f}" x2="{PAD}" y2="{y:.2f}" stroke="black"/>')
            p.append(f'<text x="{PAD - 8}" y="{y + 4:.2f}" text-anchor="end" font-size="11">{v:.4g}</text>')
        p.append(f'<text x="{W / 2:.1f}" y="{H - 15}" text-anchor="middle" font-size="12">{escape(xlabel)}</text>')
        p.append(f'<text x="15" y="{H / 2:.1f}" text-anchor="middle" font-size="12" '
                 f'transform="rotate(-90 15 {H / 2:.1f})">{escape(ylabel)}</text>')

    def polyline(self, xs, ys, colour, dashed=False, width=1.5):
        pts = " ".join(f"{self.X(x):.2f},{self.Y(y):.2f}" for x, y in zip(xs, ys))
        dash = ' stroke-dasharray="6,4"' if dashed else ""
        self.parts.append(f'<polyline points="{pts}" fill="none" stroke="{colour}" '
                          f'stroke-width="{width}"{dash}/>')

    def dot(self, x, y, colour="black", r=4):
        self.parts.append(f'<circle cx="{self.X(x):.2f}" cy="{self.Y(y):.2f}" r="{r}" fill="{colour}"/>')

    def legend(self, entries):
        for k, (label, colour) in enumerate(entries):
            y = PAD + 14 + 16 * k
            self.parts.append(f'<line x1="{W - PAD - 110}" y1="{y - 4}" x2="{W - PAD - 90}" y2="{y - 4}" '
                              f'stroke="{colour}" stroke-width="2"/>')
            self.parts.append(f'<text x="{W - PAD - 85}" y="{y}" font-size="11">{escape(label)}</text>')

    def save(self, path):
        Path(path).write_text("\n".join(self.parts + ["</svg>"]) + "\n")


def _branch_runs(br: Branch, ycoord: str):
    """Consecutive pieces of constant Morse index and parametrization type."""
    ys = getattr(br, ycoord)
    cs = br.c
    idx = br.indices
    log = br.parameter_log
    n = len(br)
    order = list(range(n)) + ([0] if br.closed and n > 1 else [])
    runs = []
    cur = [order[0]]
    for a, b in zip(order, order[1:]):
        same = idx[a] == idx[b] and (log[a] == "analytic") == (log[b] == "analytic")
        cur.append(b)
        if not same:
            runs.append(cur)
            cur = [b]
    runs.append(cur)
    for r in runs:
        key = max(r, key=lambda i: (idx[i], i))
        dashed = all(log[i] == "analytic" for i in r)
        yield cs[r], ys[r], int(idx[key]), dashed


def render_svg(items, path, axes: str = "c_vs_tpsi", title: str = "") -> None:
    if isinstance(items, (Branch, LambdaSet, FoldCurve)):
        items = [items]
    items = list(items)
    if not items:
        raise ValueError("nothing to plot")
    first = items[0]
    if isinstance(first, LambdaSet):
        ls = first
        cv = _Canvas(ls.t_samples, np.concatenate([ls.c_minus, ls.c_plus]), "t", "c", title or "boundary of the set at a = lam1")
        cv.polyline(ls.t_samples, ls.c_minus, INDEX_COLOURS[0])
        cv.polyline(ls.t_samples, ls.c_plus, INDEX_COLOURS[1])
        cv.dot(ls.T, ls.c_minus[-1])
        cv.legend([("c minus", INDEX_COLOURS[0]), ("c plus", INDEX_COLOURS[1])])
        cv.save(path)
        return
    if isinstance(first, FoldCurve) or axes == "a_c_t":
        curves = [c for c in items if isinstance(c, FoldCurve)]
        if not curves or any(len(c.samples) == 0 for c in curves):
            raise ValueError("nothing to plot")
        cv = _Canvas(np.concatenate([c.a for c in curves]), np.concatenate([c.c for c in curves]),
                     "a", "c", title or "fold curves")
        for c in curves:
            colour = INDEX_COLOURS[1] if c.side == "plus" else INDEX_COLOURS[0]
            cv.polyline(c.a, c.c, colour)
            for a, cc in zip(c.a, c.c):
                cv.dot(a, cc, colour, r=2)
        cv.save(path)
        return
    if any(len(b) == 0 for b in items):
        raise ValueError("empty branch")
    ycoord = {"c_vs_tpsi": "t_psi", "c_vs_tphi": "t_phi"}.get(axes)
    if ycoord is None:
        raise ValueError(f"unknown axes {axes!r}")
    cv = _Canvas(np.concatenate([b.c for b in items]), np.concatenate([getattr(b, ycoord) for b in items]),
                 "c", ycoord, title or ("branch" if len(items) == 1 else "branches"))
    for br in items:
        for xs, ys, k, dashed in _branch_runs(br, ycoord):
            cv.polyline(xs, ys, INDEX_COLOURS.get(k, OTHER_COLOUR), dashed=dashed)
        yv = getattr(br, ycoord)
        for i, kind in sorted(br.markers, key=lambda m: m[0]):
            if kind in (FOLD0, TRANS12):
                cv.dot(br.c[i], yv[i], "black" if kind == FOLD0 else "#9467bd")
    cv.legend([("index 0", INDEX_COLOURS[0]), ("index 1", INDEX_COLOURS[1]), ("index 2", INDEX_COLOURS[2])])
    cv.save(path)
