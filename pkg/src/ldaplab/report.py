"""CSV and SVG rendering of fooling curves.

Output bytes are a pure function of the input curves: floats are written with
shortest round-trip repr, rows follow the input order, and the SVG uses a fixed
960x540 viewBox with generic font families only.  Solid polylines carry the
empirical rates (with error bars), dashed polylines the bounds.
"""

from __future__ import annotations

import csv
import json
import os

from .experiments import FoolingCurve

CSV_FIXED_PREFIX = ["experiment_id", "region", "k", "seed", "eps", "fr_hat", "stderr"]
CSV_FIXED_SUFFIX = ["alpha", "delta", "beta", "gamma", "theta", "L", "flag", "config"]

_PALETTE = ["#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e",
            "#8c564b", "#e377c2", "#17becf"]


def _fmt(x) -> str:
    if x is None or x == "":
        return ""
    if isinstance(x, float):
        return repr(x)
    return str(x)


def bound_columns(curves) -> list:
    names = sorted({n for c in curves for r in c.rows for n in r.bounds})
    return [f"bound_{n}" for n in names]


def write_csv(curves, path) -> None:
    """One row per (curve, eps) following the fixed schema; bound columns are
    sorted by name and empty when a bound is not applicable."""
    bcols = bound_columns(curves)
    header = CSV_FIXED_PREFIX + bcols + CSV_FIXED_SUFFIX
    with open(path, "w", encoding="utf-8", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(header)
        for c in curves:
            cfg_str = json.dumps(
                {k: v for k, v in c.params.items()
                 if k not in ("alpha", "delta", "beta", "gamma", "theta", "L")},
                sort_keys=True, separators=(",", ":"))
            for r in c.rows:
                row = [c.experiment_id, c.region_kind, c.k, c.seed,
                       _fmt(float(r.eps)), _fmt(float(r.fr_hat)), _fmt(float(r.stderr))]
                for col in bcols:
                    row.append(_fmt(r.bounds.get(col[len("bound_"):])))
                for key in ("alpha", "delta", "beta", "gamma", "theta", "L"):
                    v = c.params.get(key, "")
                    row.append(_fmt(float(v)) if isinstance(v, (int, float)) and v != ""
                               else _fmt(v))
                row.append(r.flag)
                row.append(cfg_str)
                w.writerow(row)


def read_csv(path):
    """Parse a curves CSV back into row dicts with floats restored."""
    with open(path, "r", encoding="utf-8", newline="") as fh:
        reader = csv.DictReader(fh)
        rows = []
        for rec in reader:
            out = dict(rec)
            for key, val in rec.items():
                if key in ("experiment_id", "region", "flag", "config"):
                    continue
                if val == "":
                    out[key] = None
                elif key in ("k", "seed"):
                    out[key] = int(val)
                else:
                    out[key] = float(val)
            rows.append(out)
        return rows


# ---------------------------------------------------------------------------
# SVG


def _xmap(e, emax):
    return 70.0 + (e / emax) * (930.0 - 70.0) if emax > 0 else 70.0


def _ymap(v):
    return 500.0 - v * (500.0 - 20.0)


def _poly(points, color, dashed=False, width=2.0):
    pts = " ".join(f"{x:.2f},{y:.2f}" for x, y in points)
    dash = ' stroke-dasharray="8,5"' if dashed else ""
    return (f'<polyline fill="none" stroke="{color}" stroke-width="{width}"'
            f'{dash} points="{pts}"/>')


def write_svg(curves, path, title="") -> None:
    """Line plot: solid empirical curves with error bars, dashed bounds."""
    emax = max((r.eps for c in curves for r in c.rows), default=1.0) or 1.0
    parts = [
        '<svg xmlns="http://www.w3.org/2000/svg" viewBox="0 0 960 540">',
        '<rect width="960" height="540" fill="white"/>',
        f'<text x="480" y="14" font-family="sans-serif" font-size="13" '
        f'text-anchor="middle">{title}</text>',
        '<line x1="70" y1="500" x2="930" y2="500" stroke="black" stroke-width="1"/>',
        '<line x1="70" y1="20" x2="70" y2="500" stroke="black" stroke-width="1"/>',
    ]
    for frac in (0.0, 0.25, 0.5, 0.75, 1.0):
        y = _ymap(frac)
        parts.append(f'<line x1="66" y1="{y:.2f}" x2="70" y2="{y:.2f}" '
                     'stroke="black" stroke-width="1"/>')
        parts.append(f'<text x="62" y="{y + 4:.2f}" font-family="sans-serif" '
                     f'font-size="11" text-anchor="end">{frac:g}</text>')
        e = frac * emax
        x = _xmap(e, emax)
        parts.append(f'<line x1="{x:.2f}" y1="500" x2="{x:.2f}" y2="504" '
                     'stroke="black" stroke-width="1"/>')
        parts.append(f'<text x="{x:.2f}" y="518" font-family="sans-serif" '
                     f'font-size="11" text-anchor="middle">{e:.3g}</text>')
    parts.append('<text x="500" y="536" font-family="sans-serif" font-size="12" '
                 'text-anchor="middle">attack budget</text>')
    parts.append('<text x="16" y="260" font-family="sans-serif" font-size="12" '
                 'transform="rotate(-90 16 260)" text-anchor="middle">fooling rate</text>')

    for i, c in enumerate(curves):
        color = _PALETTE[i % len(_PALETTE)]
        pts = [(_xmap(r.eps, emax), _ymap(r.fr_hat)) for r in c.rows]
        parts.append(_poly(pts, color))
        for r in c.rows:
            x = _xmap(r.eps, emax)
            lo, hi = _ymap(max(r.fr_hat - r.stderr, 0.0)), _ymap(min(r.fr_hat + r.stderr, 1.0))
            parts.append(f'<line x1="{x:.2f}" y1="{lo:.2f}" x2="{x:.2f}" y2="{hi:.2f}" '
                         f'stroke="{color}" stroke-width="1"/>')
        for name in sorted({n for r in c.rows for n, v in r.bounds.items() if v is not None}):
            bpts = [(_xmap(r.eps, emax), _ymap(r.bounds[name]))
                    for r in c.rows if r.bounds.get(name) is not None]
            if len(bpts) >= 2:
                parts.append(_poly(bpts, color, dashed=True, width=1.5))
        label = f"{c.region_kind} k={c.k} seed={c.seed}"
        parts.append(f'<text x="80" y="{30 + 14 * i}" font-family="sans-serif" '
                     f'font-size="11" fill="{color}">{label}</text>')
    parts.append("</svg>")
    with open(path, "w", encoding="utf-8") as fh:
        fh.write("\n".join(parts))


def write_spectrum_csv(spectrum, path) -> None:
    with open(path, "w", encoding="utf-8", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["seed", "index", "eigenvalue", "centered"])
        for rec in spectrum:
            for i, lam in enumerate(rec["eigenvalues"]):
                w.writerow([rec["seed"], i, _fmt(float(lam)), rec["centered"]])


def write_viability_csv(rows, path) -> None:
    with open(path, "w", encoding="utf-8", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["seed", "k", "alpha", "s_k", "delta_hat", "stderr",
                    "svd_bound", "flag"])
        for r in rows:
            w.writerow([r["seed"], r["k"], _fmt(float(r["alpha"])), _fmt(float(r["s_k"])),
                        _fmt(float(r["delta_hat"])), _fmt(float(r["stderr"])),
                        _fmt(float(r["svd_bound"])), r["flag"]])


def render_report(curves, out_dir, stem, title="") -> dict:
    """Write ``<stem>.csv`` and ``<stem>.svg`` under out_dir; returns the paths."""
    if not curves:
        raise ValueError("need at least one curve")
    os.makedirs(out_dir, exist_ok=True)
    csv_path = os.path.join(out_dir, f"{stem}.csv")
    svg_path = os.path.join(out_dir, f"{stem}.svg")
    write_csv(curves, csv_path)
    write_svg(curves, svg_path, title=title)
    return {"csv": csv_path, "svg": svg_path}
