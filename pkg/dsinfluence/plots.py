# -*- coding: utf-8 -*-
"""
SVG charts of the reports. Output is byte-stable: the SVG date is omitted
and element ids are salted with a fixed string.
"""
import io
from typing import Dict, Mapping, Optional, Sequence

import matplotlib
from matplotlib.figure import Figure

from dsinfluence.cluster import ClusterSummary
from dsinfluence.corpus import Timeline
from dsinfluence.influence import IS_FEATURES, Histogram, InfluenceResult

HASH_SALT = "dsinfluence"
FIGSIZE = (8, 5)


def render_svg(figure: Figure) -> str:
    buffer = io.StringIO()
    with matplotlib.rc_context({"svg.hashsalt": HASH_SALT, "svg.fonttype": "none"}):
        figure.savefig(buffer, format="svg", metadata={"Date": None})
    return buffer.getvalue()


def _nan(values: Sequence[Optional[float]]):
    return [float("nan") if v is None else v for v in values]


def line_chart(
    title: str,
    x: Sequence[float],
    series: Mapping[str, Sequence[Optional[float]]],
    xlabel: str,
    ylabel: str,
    widths: Optional[Mapping[str, float]] = None,
) -> str:
    """One line per series; absent values leave gaps"""
    figure = Figure(figsize=FIGSIZE)
    axes = figure.add_subplot(111)
    for name, values in series.items():
        width = (widths or {}).get(name, 1.5)
        axes.plot(x, _nan(values), marker="o", linewidth=width, label=name)
    axes.set_title(title)
    axes.set_xlabel(xlabel)
    axes.set_ylabel(ylabel)
    axes.grid(alpha=0.4)
    if series:
        axes.legend()
    return render_svg(figure)


def bar_chart(
    title: str, labels: Sequence[str], values: Sequence[float], xlabel: str, ylabel: str
) -> str:
    figure = Figure(figsize=FIGSIZE)
    axes = figure.add_subplot(111)
    axes.bar(range(len(values)), values, tick_label=list(labels), color="tab:blue")
    axes.set_title(title)
    axes.set_xlabel(xlabel)
    axes.set_ylabel(ylabel)
    axes.grid(axis="y", alpha=0.4)
    return render_svg(figure)


def history_svg(dataset_name: str, results: Sequence[InfluenceResult]) -> str:
    years = [result.eval_year for result in results]
    series: Dict[str, Sequence[Optional[float]]] = {"IS": [r.is_score for r in results]}
    for feature in IS_FEATURES:
        series[feature] = [r.percentiles.get(feature) for r in results]
    return line_chart(
        f"Influence of {dataset_name}",
        years,
        series,
        "evaluation year",
        "percentile",
        widths={"IS": 3.0},
    )


def timeline_svg(timeline: Timeline) -> str:
    years = [point.year for point in timeline.points]
    return line_chart(
        "Published datasets and citations",
        years,
        {
            "datasets": [point.datasets for point in timeline.points],
            "citations": [point.citations for point in timeline.points],
        },
        "year",
        "count",
    )


def clusters_svg(summaries: Sequence[ClusterSummary], offsets: Sequence[int]) -> str:
    """Mean trajectory per cluster, line width proportional to cluster size"""
    largest = max((summary.size for summary in summaries), default=1) or 1
    series = {f"cluster {s.cluster} (n={s.size})": s.mean_values for s in summaries}
    widths = {
        f"cluster {s.cluster} (n={s.size})": 0.5 + 5.5 * s.size / largest for s in summaries
    }
    return line_chart(
        "Citation trajectories",
        list(offsets),
        series,
        "years after publication",
        "citations in 3-year window",
        widths,
    )


def elbow_svg(per_k_inertia: Mapping[int, float]) -> str:
    ks = sorted(per_k_inertia)
    return line_chart(
        "Elbow method",
        ks,
        {"inertia": [per_k_inertia[k] for k in ks]},
        "number of clusters (k)",
        "inertia",
    )


def histogram_svg(histogram: Histogram) -> str:
    labels = [f"{low:.1f}" for low in histogram.edges[:-1]]
    return bar_chart(
        "Distribution of the Influence Score",
        labels,
        histogram.counts,
        "Influence Score (bin start)",
        "datasets",
    )
