"""CSV tables and static SVG charts.

CSV numbers are written with ``repr`` so they parse back to the identical
float. Charts are plain SVG text built here; identical inputs give
byte-identical files.
"""

from __future__ import annotations

import csv
import io
import math
from collections.abc import Iterable, Mapping, Sequence
from html import escape
from pathlib import Path

from .impact import INDICATORS, PHASES, Indicator, Phase
from .scenario import CrossoverReport, SweepSeries

PHASE_COLORS = {
    Phase.PRODUCTION: "#2f6db5",
    Phase.DELIVERY: "#f08a24",
    Phase.USE: "#9a9a9a",
    Phase.END_OF_LIFE: "#f2c500",
}
LINE_COLORS = ("#2f6db5", "#c0392b", "#27ae60", "#8e44ad", "#f08a24", "#16a085")
PHASE_LABELS = {
    Phase.PRODUCTION: "Production",
    Phase.DELIVERY: "Delivery",
    Phase.USE: "Use",
    Phase.END_OF_LIFE: "End of life",
}
INDICATOR_LABELS = {
    Indicator.CLIMATE_CHANGE: "Climate change",
    Indicator.ECOSYSTEMS: "Ecosystems",
    Indicator.HUMAN_HEALTH: "Human health",
}


def fmt(x: float | None) -> str:
    if x is None:
        return ""
    return repr(float(x))


def _csv(header: Sequence[str], rows: Iterable[Sequence]) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    for row in rows:
        w.writerow([fmt(v) if isinstance(v, float) else v for v in row])
    return buf.getvalue()


def phase_csv(results: Mapping[str, Mapping[float, Sequence]]) -> str:
    """``results[scenario][hours]`` is a list of PhaseImpact."""
    rows = []
    for sid, by_hour in results.items():
        for hours, impacts in by_hour.items():
            for pi in impacts:
                for ind in INDICATORS:
                    rows.append((sid, pi.phase.value, ind.value, float(hours), float(pi[ind]), ind.unit))
    return _csv(("scenario", "phase", "indicator", "hours", "value", "unit"), rows)


def sweep_csv(series: Iterable[SweepSeries]) -> str:
    rows = []
    for s in series:
        for i, h in enumerate(s.hours):
            for ph in PHASES:
                for ind in INDICATORS:
                    rows.append((s.scenario, float(h), ph.value, ind.value,
                                 float(s.values[ph][ind][i]), ind.unit))
    return _csv(("scenario", "hours", "phase", "indicator", "value", "unit"), rows)


def crossover_csv(reports: Iterable[CrossoverReport]) -> str:
    rows = []
    for rep in reports:
        for ind, c in rep.entries.items():
            rows.append((rep.x, rep.y, ind.value, "crossover", "", c.hours, "h", c.lower or "", c.status))
        for sid, per_ind in rep.dominance.items():
            for ind, per_phase in per_ind.items():
                for ph, h in per_phase.items():
                    rows.append((rep.x, rep.y, ind.value, "use_exceeds", f"{sid}:{ph.value}", h, "h", "", ""))
    return _csv(("x", "y", "indicator", "kind", "subject", "hours", "unit", "lower", "status"), rows)


def contribution_csv(contribs: Mapping[str, Mapping[str, Mapping[Indicator, float]]]) -> str:
    rows = []
    for sid, groups in contribs.items():
        totals = {ind: math.fsum(g[ind] for g in groups.values()) for ind in INDICATORS}
        for name, per_ind in groups.items():
            for ind in INDICATORS:
                share = per_ind[ind] / totals[ind] if totals[ind] else None
                rows.append((sid, name, ind.value, float(per_ind[ind]), ind.unit,
                             share if share is None else float(share), "1"))
    return _csv(("scenario", "contributor", "indicator", "value", "unit", "share", "share_unit"), rows)


def crosscheck_csv(rows) -> str:
    return _csv(
        ("machine", "cell", "computed", "expected", "unit", "rel_diff", "rel_diff_unit", "printed_step", "ok"),
        [(r.machine, r.cell, float(r.computed), float(r.expected), r.unit, float(r.rel_diff), "1",
          float(r.printed_step), "yes" if r.ok else "no") for r in rows],
    )


def read_csv(text: str) -> list[dict[str, str]]:
    return list(csv.DictReader(io.StringIO(text)))


# --- SVG -------------------------------------------------------------------

W, H = 720, 420
LEFT, RIGHT, TOP, BOTTOM = 90, 170, 40, 60


def _n(x: float) -> str:
    return f"{x:.2f}"


def _tick_label(v: float) -> str:
    if v == 0:
        return "0"
    if abs(v) >= 1e4 or abs(v) < 1e-2:
        return f"{v:.0e}".replace("e+0", "e").replace("e-0", "e-")
    return f"{v:,.6g}"


def _nice_ticks(vmax: float, n: int = 5) -> list[float]:
    if vmax <= 0:
        return [0.0, 1.0]
    raw = vmax / n
    mag = 10 ** math.floor(math.log10(raw))
    step = next(m * mag for m in (1, 2, 2.5, 5, 10) if m * mag >= raw)
    ticks = [0.0]
    while ticks[-1] < vmax:
        ticks.append(round(ticks[-1] + step, 12))
    return ticks


def _header(title: str) -> list[str]:
    return [
        '<?xml version="1.0" encoding="UTF-8"?>',
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{W}" height="{H}" '
        f'viewBox="0 0 {W} {H}" font-family="sans-serif" font-size="11">',
        f'<rect x="0" y="0" width="{W}" height="{H}" fill="white"/>',
        f'<text x="{W / 2:.0f}" y="22" text-anchor="middle" font-size="14">{escape(title)}</text>',
    ]


def stacked_bar_svg(series: SweepSeries, indicator: Indicator, title: str | None = None) -> str:
    """One stacked bar per hour point, one segment per life-cycle phase."""
    indicator = Indicator(indicator)
    if not series.hours:
        raise ValueError("empty series")
    n = len(series.hours)
    stacks = [[series.values[ph][indicator][i] for ph in PHASES] for i in range(n)]
    vmax = max(sum(max(v, 0.0) for v in s) for s in stacks)
    ticks = _nice_ticks(vmax)
    top = ticks[-1]
    plot_w = W - LEFT - RIGHT
    plot_h = H - TOP - BOTTOM
    unit = indicator.unit
    title = title or f"{series.scenario}: {INDICATOR_LABELS[indicator]} by life-cycle phase ({unit})"
    out = _header(title)
    for t in ticks:
        y = TOP + plot_h * (1 - t / top)
        out.append(f'<line x1="{LEFT}" y1="{_n(y)}" x2="{LEFT + plot_w}" y2="{_n(y)}" stroke="#ddd"/>')
        out.append(f'<text x="{LEFT - 6}" y="{_n(y + 4)}" text-anchor="end">{_tick_label(t)}</text>')
    slot = plot_w / n
    bar_w = min(60.0, slot * 0.6)
    for i, (h, stack) in enumerate(zip(series.hours, stacks)):
        x = LEFT + slot * i + (slot - bar_w) / 2
        y_base = TOP + plot_h
        for ph, v in zip(PHASES, stack):
            seg = plot_h * max(v, 0.0) / top
            y_base -= seg
            out.append(
                f'<rect x="{_n(x)}" y="{_n(y_base)}" width="{_n(bar_w)}" height="{_n(seg)}" '
                f'fill="{PHASE_COLORS[ph]}"><title>{PHASE_LABELS[ph]}: {v:.6g} {escape(unit)}</title></rect>'
            )
        out.append(
            f'<text x="{_n(x + bar_w / 2)}" y="{TOP + plot_h + 16}" text-anchor="middle">{h:,.0f} h</text>'
        )
    out.append(f'<line x1="{LEFT}" y1="{TOP}" x2="{LEFT}" y2="{TOP + plot_h}" stroke="black"/>')
    out.append(
        f'<line x1="{LEFT}" y1="{TOP + plot_h}" x2="{LEFT + plot_w}" y2="{TOP + plot_h}" stroke="black"/>'
    )
    out.append(
        f'<text x="18" y="{TOP + plot_h / 2:.0f}" transform="rotate(-90 18 {TOP + plot_h / 2:.0f})" '
        f'text-anchor="middle">{escape(unit)}</text>'
    )
    out.append(
        f'<text x="{LEFT + plot_w / 2:.0f}" y="{H - 16}" text-anchor="middle">Duration of use</text>'
    )
    out += _legend([(PHASE_LABELS[ph] + f" ({unit})", PHASE_COLORS[ph]) for ph in PHASES])
    out.append("</svg>")
    return "\n".join(out) + "\n"


def line_chart_svg(series: Sequence[SweepSeries], indicator: Indicator, log: bool = True,
                   title: str | None = None) -> str:
    """Total impact against hours, one line per scenario, log-scaled y axis by default."""
    indicator = Indicator(indicator)
    if not series or not any(s.hours for s in series):
        raise ValueError("empty series")
    unit = indicator.unit
    totals = [s.total(indicator) for s in series]
    hours = sorted({h for s in series for h in s.hours})
    hmin, hmax = hours[0], hours[-1]
    if hmax == hmin:
        hmax = hmin + 1.0
    positive = [v for t in totals for v in t if v > 0]
    plot_w = W - LEFT - RIGHT
    plot_h = H - TOP - BOTTOM
    if log and positive:
        lo = math.floor(math.log10(min(positive)))
        hi = math.ceil(math.log10(max(positive)))
        if hi == lo:
            hi += 1

        def ypos(v):
            v = max(v, 10.0 ** lo)
            return TOP + plot_h * (1 - (math.log10(v) - lo) / (hi - lo))

        ticks = [10.0 ** k for k in range(lo, hi + 1)]
    else:
        ticks = _nice_ticks(max(max(t) for t in totals))

        def ypos(v):
            return TOP + plot_h * (1 - v / ticks[-1])

    def xpos(h):
        return LEFT + plot_w * (h - hmin) / (hmax - hmin)

    title = title or f"{INDICATOR_LABELS[indicator]} by duration of use ({unit})"
    out = _header(title)
    for t in ticks:
        y = ypos(t)
        out.append(f'<line x1="{LEFT}" y1="{_n(y)}" x2="{LEFT + plot_w}" y2="{_n(y)}" stroke="#ddd"/>')
        out.append(f'<text x="{LEFT - 6}" y="{_n(y + 4)}" text-anchor="end">{_tick_label(t)}</text>')
    for h in hours:
        out.append(
            f'<text x="{_n(xpos(h))}" y="{TOP + plot_h + 16}" text-anchor="middle">{h:,.0f}</text>'
        )
    legend = []
    for k, (s, tot) in enumerate(zip(series, totals)):
        color = LINE_COLORS[k % len(LINE_COLORS)]
        pts = " ".join(f"{_n(xpos(h))},{_n(ypos(v))}" for h, v in zip(s.hours, tot))
        out.append(f'<polyline points="{pts}" fill="none" stroke="{color}" stroke-width="2"/>')
        for h, v in zip(s.hours, tot):
            out.append(
                f'<circle cx="{_n(xpos(h))}" cy="{_n(ypos(v))}" r="3" fill="{color}">'
                f'<title>{escape(s.scenario)} at {h:,.0f} h: {v:.6g} {escape(unit)}</title></circle>'
            )
        legend.append((f"{s.scenario} ({unit})", color))
    out.append(f'<line x1="{LEFT}" y1="{TOP}" x2="{LEFT}" y2="{TOP + plot_h}" stroke="black"/>')
    out.append(
        f'<line x1="{LEFT}" y1="{TOP + plot_h}" x2="{LEFT + plot_w}" y2="{TOP + plot_h}" stroke="black"/>'
    )
    axis = f"{unit}, log scale" if log else unit
    out.append(
        f'<text x="18" y="{TOP + plot_h / 2:.0f}" transform="rotate(-90 18 {TOP + plot_h / 2:.0f})" '
        f'text-anchor="middle">{escape(axis)}</text>'
    )
    out.append(
        f'<text x="{LEFT + plot_w / 2:.0f}" y="{H - 16}" text-anchor="middle">Duration of use (h)</text>'
    )
    out += _legend(legend)
    out.append("</svg>")
    return "\n".join(out) + "\n"


def _legend(items: Sequence[tuple[str, str]]) -> list[str]:
    x = W - RIGHT + 14
    out = []
    for k, (label, color) in enumerate(items):
        y = TOP + 10 + 20 * k
        out.append(f'<rect x="{x}" y="{y - 9}" width="12" height="12" fill="{color}"/>')
        out.append(f'<text x="{x + 18}" y="{y + 1}">{escape(label)}</text>')
    return out


def write_text(path: Path, text: str) -> Path:
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write(text)
    return path
