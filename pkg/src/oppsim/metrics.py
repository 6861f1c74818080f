"""Run accounting, seed aggregation with confidence intervals, CSV/SVG output."""

from __future__ import annotations

import math
import statistics
from dataclasses import dataclass, field

from scipy import stats as _scipy_stats

from .types import Record, RecordKind

METRICS = ("delivery_probability", "cost", "latency")


@dataclass
class RunReport:
    """Raw per-run counters; metric counters cover post-warmup messages only."""

    protocol: str
    ttl: int
    seed: int
    created: int
    delivered: int
    relayed: int
    latencies: list[int]
    hop_counts: list[int]
    counters: dict[str, int]
    decisions: list | None = None


@dataclass(frozen=True)
class MetricValues:
    delivery_probability: float
    cost: float | None
    latency: float | None
    no_traffic: bool


def build_run_report(
    records: list[Record],
    protocol: str,
    ttl: int,
    seed: int,
    warmup: int = 0,
    decisions=None,
) -> RunReport:
    created_at: dict[str, int] = {}
    created = delivered = relayed = 0
    latencies: list[int] = []
    hops: list[int] = []
    counters: dict[str, int] = {}
    for r in records:
        counters[r.kind.value] = counters.get(r.kind.value, 0) + 1
        if r.kind is RecordKind.CREATED:
            created_at[r.msg] = r.time
            if r.time >= warmup:
                created += 1
        elif r.kind is RecordKind.RELAY:
            if created_at[r.msg] >= warmup:
                relayed += 1
        elif r.kind is RecordKind.DELIVERED:
            t0 = created_at[r.msg]
            if t0 >= warmup:
                delivered += 1
                latencies.append(r.time - t0)
                hops.append(r.hops if r.hops is not None else 0)
    return RunReport(
        protocol=protocol,
        ttl=ttl,
        seed=seed,
        created=created,
        delivered=delivered,
        relayed=relayed,
        latencies=latencies,
        hop_counts=hops,
        counters=counters,
        decisions=decisions,
    )


def compute_metrics(report: RunReport) -> MetricValues:
    """Delivery probability, overhead ratio and mean latency for one run.

    Cost counts every completed relay except the final hop to the
    destination, per delivered message; cost and latency are absent (None)
    when nothing was delivered.
    """
    no_traffic = report.created == 0
    dp = report.delivered / report.created if report.created else 0.0
    if report.delivered:
        cost = (report.relayed - report.delivered) / report.delivered
        latency = sum(report.latencies) / len(report.latencies)
    else:
        cost = None
        latency = None
    return MetricValues(dp, cost, latency, no_traffic)


@dataclass(frozen=True)
class CellStats:
    mean: float
    ci_halfwidth: float | None
    n: int


@dataclass
class AggregateReport:
    """(protocol, ttl) -> metric name -> stats over seeds."""

    cells: dict[tuple[str, int], dict[str, CellStats]] = field(default_factory=dict)


def _mean_ci(values: list[float]) -> CellStats:
    n = len(values)
    mean = statistics.fmean(values)
    if n < 2:
        return CellStats(mean, None, n)
    sd = statistics.stdev(values)
    t = float(_scipy_stats.t.ppf(0.975, n - 1))
    return CellStats(mean, t * sd / math.sqrt(n), n)


def aggregate(reports: list[RunReport]) -> AggregateReport:
    """Group runs by (protocol, ttl) and attach 95% confidence intervals.

    Values are folded in seed order so the result is invariant to the order
    of the report list; cost/latency aggregate over runs where they exist.
    """
    groups: dict[tuple[str, int], dict[int, MetricValues]] = {}
    for rep in reports:
        cell = groups.setdefault((rep.protocol, rep.ttl), {})
        if rep.seed in cell:
            raise ValueError(f"duplicate seed {rep.seed} for cell {(rep.protocol, rep.ttl)}")
        cell[rep.seed] = compute_metrics(rep)
    agg = AggregateReport()
    for key in sorted(groups):
        by_seed = groups[key]
        ordered = [by_seed[s] for s in sorted(by_seed)]
        out: dict[str, CellStats] = {}
        out["delivery_probability"] = _mean_ci([v.delivery_probability for v in ordered])
        costs = [v.cost for v in ordered if v.cost is not None]
        if costs:
            out["cost"] = _mean_ci(costs)
        lats = [v.latency for v in ordered if v.latency is not None]
        if lats:
            out["latency"] = _mean_ci(lats)
        agg.cells[key] = out
    return agg


def _fmt(x: float | None) -> str:
    return "" if x is None else format(x, ".10g")


def emit_csv(agg: AggregateReport, path: str) -> None:
    if not agg.cells:
        raise ValueError("empty aggregate")
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write("protocol,ttl_s,metric,mean,ci_halfwidth,n\n")
        for key in sorted(agg.cells):
            protocol, ttl = key
            cell = agg.cells[key]
            for metric in METRICS:
                if metric not in cell:
                    continue
                s = cell[metric]
                fh.write(
                    f"{protocol},{ttl},{metric},{_fmt(s.mean)},{_fmt(s.ci_halfwidth)},{s.n}\n"
                )


def read_results_csv(path: str) -> AggregateReport:
    agg = AggregateReport()
    with open(path, "r", encoding="utf-8") as fh:
        header = fh.readline().strip()
        if header != "protocol,ttl_s,metric,mean,ci_halfwidth,n":
            raise ValueError(f"{path}: unexpected results header {header!r}")
        for line in fh:
            line = line.strip()
            if not line:
                continue
            protocol, ttl_s, metric, mean, ci, n = line.split(",")
            cell = agg.cells.setdefault((protocol, int(ttl_s)), {})
            cell[metric] = CellStats(float(mean), float(ci) if ci else None, int(n))
    return agg


# ---------------------------------------------------------------------------
# SVG chart (self-contained, no external assets)

_PALETTE = [
    "#4e79a7",
    "#f28e2b",
    "#e15759",
    "#76b7b2",
    "#59a14f",
    "#edc948",
    "#b07aa1",
    "#ff9da7",
    "#9c755f",
    "#bab0ac",
    "#1b9e77",
]

_METRIC_LABEL = {
    "delivery_probability": "average delivery probability",
    "cost": "average cost (relays per delivery)",
    "latency": "average latency (s)",
}


def _ttl_label(ttl: int) -> str:
    if ttl % 604800 == 0:
        return f"{ttl // 604800}w"
    if ttl % 86400 == 0:
        return f"{ttl // 86400}d"
    if ttl % 3600 == 0:
        return f"{ttl // 3600}h"
    return f"{ttl}s"


def emit_svg_chart(agg: AggregateReport, metric: str, path: str) -> None:
    """Grouped bar chart with CI whiskers: TTL groups, one bar per protocol."""
    if metric not in METRICS:
        raise ValueError(f"unknown metric {metric!r}")
    if not agg.cells:
        raise ValueError("empty aggregate")
    protocols = sorted({p for p, _ in agg.cells})
    ttls = sorted({t for _, t in agg.cells})
    width, height = 960, 480
    left, right, top, bottom = 80, 30, 50, 60
    plot_w = width - left - right
    plot_h = height - top - bottom

    ymax = 0.0
    for cell in agg.cells.values():
        s = cell.get(metric)
        if s is not None:
            ymax = max(ymax, s.mean + (s.ci_halfwidth or 0.0))
    if ymax <= 0.0:
        ymax = 1.0
    ymax *= 1.05

    def sx(group: int, slot: int, nslots: int) -> tuple[float, float]:
        group_w = plot_w / len(ttls)
        bar_w = group_w * 0.8 / nslots
        x0 = left + group * group_w + group_w * 0.1 + slot * bar_w
        return x0, bar_w

    def sy(v: float) -> float:
        return top + plot_h * (1.0 - v / ymax)

    parts = [
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{width}" height="{height}" '
        f'viewBox="0 0 {width} {height}" font-family="sans-serif" font-size="12">',
        f'<rect width="{width}" height="{height}" fill="white"/>',
        f'<text x="{left}" y="24" font-size="15">{_METRIC_LABEL[metric]}</text>',
        f'<line x1="{left}" y1="{top}" x2="{left}" y2="{top + plot_h}" stroke="black"/>',
        f'<line x1="{left}" y1="{top + plot_h}" x2="{left + plot_w}" y2="{top + plot_h}" stroke="black"/>',
    ]
    for i in range(6):
        v = ymax * i / 5
        y = sy(v)
        parts.append(
            f'<line x1="{left - 4}" y1="{y:.2f}" x2="{left}" y2="{y:.2f}" stroke="black"/>'
        )
        parts.append(
            f'<text x="{left - 8}" y="{y + 4:.2f}" text-anchor="end">{format(v, ".3g")}</text>'
        )
    for gi, ttl in enumerate(ttls):
        group_w = plot_w / len(ttls)
        cx = left + gi * group_w + group_w / 2
        parts.append(
            f'<text x="{cx:.2f}" y="{top + plot_h + 20}" text-anchor="middle">TTL {_ttl_label(ttl)}</text>'
        )
        for si, protocol in enumerate(protocols):
            cell = agg.cells.get((protocol, ttl))
            s = cell.get(metric) if cell else None
            if s is None:
                continue
            x0, bar_w = sx(gi, si, len(protocols))
            y = sy(s.mean)
            color = _PALETTE[si % len(_PALETTE)]
            parts.append(
                f'<rect class="bar" x="{x0:.2f}" y="{y:.2f}" width="{bar_w:.2f}" '
                f'height="{top + plot_h - y:.2f}" fill="{color}"/>'
            )
            if s.ci_halfwidth is not None and s.ci_halfwidth > 0:
                xm = x0 + bar_w / 2
                y_lo = sy(max(0.0, s.mean - s.ci_halfwidth))
                y_hi = sy(s.mean + s.ci_halfwidth)
                parts.append(
                    f'<line class="whisker" x1="{xm:.2f}" y1="{y_lo:.2f}" x2="{xm:.2f}" '
                    f'y2="{y_hi:.2f}" stroke="black"/>'
                )
                for yy in (y_lo, y_hi):
                    parts.append(
                        f'<line class="whisker" x1="{xm - bar_w / 4:.2f}" y1="{yy:.2f}" '
                        f'x2="{xm + bar_w / 4:.2f}" y2="{yy:.2f}" stroke="black"/>'
                    )
    for si, protocol in enumerate(protocols):
        lx = left + si * (plot_w / max(1, len(protocols)))
        color = _PALETTE[si % len(_PALETTE)]
        parts.append(f'<rect x="{lx:.2f}" y="{30}" width="10" height="10" fill="{color}"/>')
        parts.append(f'<text x="{lx + 14:.2f}" y="{39}">{protocol}</text>')
    parts.append("</svg>")
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write("\n".join(parts) + "\n")
