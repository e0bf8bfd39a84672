"""Plain SVG figures for a campaign directory (no plotting library needed)."""

from __future__ import annotations

import csv
import itertools
import json
import logging
from dataclasses import dataclass, field
from pathlib import Path
from xml.sax.saxutils import escape

import numpy as np

from .evaluator import OUTPUTS

logger = logging.getLogger(__name__)

PANEL_W, PANEL_H = 260, 220
MARGIN = 44
COLORS = ("#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e")


def _range(v: np.ndarray) -> tuple[float, float]:
    v = v[np.isfinite(v)]
    if v.size == 0:
        return 0.0, 1.0
    lo, hi = float(v.min()), float(v.max())
    pad = 0.05 * (hi - lo) if hi > lo else max(abs(lo) * 0.05, 1.0)
    return lo - pad, hi + pad


@dataclass
class Panel:
    """One axes box; all coordinates are data units until rendered."""

    title: str
    xlabel: str = ""
    ylabel: str = ""
    series: list = field(default_factory=list)  # (kind, xs, ys, color)

    def points(self, xs, ys, color=COLORS[0]):
        self.series.append(("pts", np.asarray(xs, float), np.asarray(ys, float), color))

    def line(self, xs, ys, color=COLORS[0]):
        self.series.append(("line", np.asarray(xs, float), np.asarray(ys, float), color))

    def marker(self, xs, ys, color=COLORS[1]):
        self.series.append(("mark", np.asarray(xs, float), np.asarray(ys, float), color))

    def render(self, ox: float, oy: float) -> list[str]:
        xs = np.concatenate([s[1] for s in self.series]) if self.series else np.zeros(0)
        ys = np.concatenate([s[2] for s in self.series]) if self.series else np.zeros(0)
        (x0, x1), (y0, y1) = _range(xs), _range(ys)
        w, h = PANEL_W - MARGIN - 8, PANEL_H - MARGIN - 20

        def px(x):
            return ox + MARGIN + (x - x0) / (x1 - x0) * w

        def py(y):
            return oy + 20 + h - (y - y0) / (y1 - y0) * h

        out = [
            f'<rect x="{ox + MARGIN:.1f}" y="{oy + 20:.1f}" width="{w}" height="{h}" fill="none" stroke="#444"/>',
            f'<text x="{ox + MARGIN + w / 2:.1f}" y="{oy + 14:.1f}" text-anchor="middle" font-size="11">{escape(self.title)}</text>',
            f'<text x="{ox + MARGIN + w / 2:.1f}" y="{oy + PANEL_H - 4:.1f}" text-anchor="middle" font-size="10">{escape(self.xlabel)}</text>',
            f'<text x="{ox + 10:.1f}" y="{oy + 20 + h / 2:.1f}" font-size="10" transform="rotate(-90 {ox + 10:.1f} {oy + 20 + h / 2:.1f})" text-anchor="middle">{escape(self.ylabel)}</text>',
        ]
        for v, anchor in ((x0, "start"), (x1, "end")):
            out.append(f'<text x="{px(v):.1f}" y="{oy + 20 + h + 12:.1f}" font-size="8" text-anchor="{anchor}">{v:.4g}</text>')
        for v in (y0, y1):
            out.append(f'<text x="{ox + MARGIN - 3:.1f}" y="{py(v):.1f}" font-size="8" text-anchor="end">{v:.4g}</text>')
        for kind, sx, sy, color in self.series:
            ok = np.isfinite(sx) & np.isfinite(sy)
            sx, sy = sx[ok], sy[ok]
            if kind == "line" and sx.size:
                pts = " ".join(f"{px(a):.1f},{py(b):.1f}" for a, b in zip(sx, sy))
                out.append(f'<polyline points="{pts}" fill="none" stroke="{color}" stroke-width="1.5"/>')
            elif kind == "pts":
                out += [f'<circle cx="{px(a):.1f}" cy="{py(b):.1f}" r="2" fill="{color}" fill-opacity="0.6"/>' for a, b in zip(sx, sy)]
            elif kind == "mark":
                out += [
                    f'<path d="M{px(a) - 5:.1f},{py(b):.1f}h10M{px(a):.1f},{py(b) - 5:.1f}v10" stroke="{color}" stroke-width="2"/>'
                    for a, b in zip(sx, sy)
                ]
        return out


def render_svg(panels: list[Panel], title: str = "", cols: int = 3) -> str:
    cols = max(1, min(cols, len(panels)))
    rows = -(-len(panels) // cols)
    W, H = cols * PANEL_W, rows * PANEL_H + 24
    body = [
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{W}" height="{H}" viewBox="0 0 {W} {H}" font-family="sans-serif">',
        f'<rect width="{W}" height="{H}" fill="white"/>',
        f'<text x="{W / 2:.1f}" y="16" text-anchor="middle" font-size="13">{escape(title)}</text>',
    ]
    for k, p in enumerate(panels):
        body += p.render((k % cols) * PANEL_W, 24 + (k // cols) * PANEL_H)
    body.append("</svg>")
    return "\n".join(body) + "\n"


def _read(path) -> list[dict]:
    with open(path, newline="") as fh:
        return list(csv.DictReader(fh))


def _col(rows, name) -> np.ndarray:
    return np.array([float(r[name]) if r.get(name, "") != "" else np.nan for r in rows])


def convergence_plot(trace_csv) -> str:
    rows = _read(trace_csv)
    p = Panel("best objective value", "iteration", "loss")
    p.line(_col(rows, "iteration"), _col(rows, "best_value"))
    return render_svg([p], f"Convergence: {Path(trace_csv).parent.name}", cols=1)


def strip_plot(records_csv, base: dict | None = None) -> str:
    """Per-output jittered strips of every archived record, base design as a cross."""
    rows = _read(records_csv)
    rng = np.random.default_rng(0)
    panels = []
    for j, o in enumerate(OUTPUTS):
        p = Panel(o, "", o)
        v = _col(rows, o)
        p.points(rng.uniform(-0.3, 0.3, v.size), v, COLORS[j % len(COLORS)])
        if base:
            p.marker([0.0], [base[o]])
        panels.append(p)
    return render_svg(panels, "Archived performance (cross = base design)")


def parity_plot(parity_dir) -> str:
    panels = []
    for o in OUTPUTS:
        path = Path(parity_dir) / f"{o}.csv"
        if not path.exists():
            continue
        rows = _read(path)
        t, pr = _col(rows, "y_true"), _col(rows, "y_pred")
        p = Panel(o, "true", "predicted")
        lo, hi = np.nanmin(np.r_[t, pr]), np.nanmax(np.r_[t, pr])
        p.line([lo, hi], [lo, hi], "#888")
        p.points(t, pr)
        panels.append(p)
    return render_svg(panels, "Surrogate parity (held-out designs)")


def pareto_plot(pareto_csv, outputs=None) -> str:
    rows = _read(pareto_csv)
    outputs = outputs or [o for o in OUTPUTS if np.ptp(_col(rows, o)) > 0] or list(OUTPUTS[:2])
    panels = []
    for a, b in itertools.combinations(outputs, 2):
        p = Panel(f"{b} vs {a}", a, b)
        p.points(_col(rows, a), _col(rows, b), COLORS[2])
        panels.append(p)
    return render_svg(panels, f"Pareto front: {Path(pareto_csv).parent.name}")


def export_plots(root) -> list[Path]:
    """Write every figure the campaign directory supports into ``root/plots``.

    Returns the written paths; an empty bundle writes nothing and logs a warning.
    """
    root = Path(root)
    jobs: list[tuple[str, str]] = []
    if (root / "records.csv").exists() and _read(root / "records.csv"):
        base = None
        if (root / "manifest.json").exists():
            base = json.loads((root / "manifest.json").read_text()).get("base", {}).get("record")
        jobs.append(("records_strip.svg", strip_plot(root / "records.csv", base)))
    if any((root / "parity" / f"{o}.csv").exists() for o in OUTPUTS):
        jobs.append(("parity.svg", parity_plot(root / "parity")))
    for trace in sorted((root / "results").glob("*/trace.csv")):
        jobs.append((f"convergence_{trace.parent.name}.svg", convergence_plot(trace)))
    for front in sorted((root / "results").glob("*/pareto.csv")):
        if _read(front):
            jobs.append((f"pareto_{front.parent.name}.svg", pareto_plot(front)))
    if not jobs:
        logger.warning("nothing to plot under %s", root)
        return []
    out = root / "plots"
    out.mkdir(exist_ok=True)
    written = []
    for name, svg in jobs:
        (out / name).write_text(svg)
        written.append(out / name)
    return written
