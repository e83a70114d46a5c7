# -*- coding: utf-8 -*-
"""
Rendering of reports as Markdown tables, CSV or canonical JSON.

Markdown and CSV show formatted cells (two decimals, ``--`` for absent
values). JSON keeps the raw values.
"""
import csv
import io
import math
from enum import Enum
from typing import Callable, Dict, Iterable, List, Optional, Sequence

from tabulate import tabulate

from dsinfluence.cluster import ClusterModel, ClusterSummary
from dsinfluence.corpus import Timeline
from dsinfluence.influence import (
    IS_FEATURES,
    REPORT_COLUMNS,
    Histogram,
    InfluenceResult,
    RankedEntry,
)
from dsinfluence.metrics import FEATURES, FeatureVector
from dsinfluence.regression import HeteroskedasticityTest, RegressionResult
from dsinfluence.tools import (
    ABSENT,
    canonical_json,
    canonical_number,
    format_data,
    format_score,
    serialize,
)

RANK_HEADERS = ("rank", "dataset_id", "name", "IS", *REPORT_COLUMNS)
COEFFICIENT_HEADERS = ("term", "coef", "se", "z", "p", "ci_low", "ci_high")
TIMELINE_HEADERS = (
    "year",
    "datasets",
    "citations",
    "cumulative_datasets",
    "cumulative_citations",
)


class ReportFormat(str, Enum):
    MARKDOWN = "markdown"
    CSV = "csv"
    JSON = "json"


def render_table(headers: Sequence[str], rows: Iterable[Sequence[str]], fmt: ReportFormat) -> str:
    """Rows of preformatted cells as a Markdown or CSV table"""
    rows = [list(row) for row in rows]
    if fmt is ReportFormat.MARKDOWN:
        return tabulate(rows, headers=list(headers), tablefmt="pipe", disable_numparse=True) + "\n"
    if fmt is ReportFormat.CSV:
        stream = io.StringIO()
        writer = csv.writer(stream, lineterminator="\n")
        writer.writerow(headers)
        writer.writerows(rows)
        return stream.getvalue()
    raise ValueError(f"{fmt.value} is not a tabular format")


def render_json(value) -> str:
    return canonical_json(value) + "\n"


def _finite(value) -> Optional[float]:
    if value is None or not math.isfinite(value):
        return None
    return float(value)


def _text(value) -> str:
    if value is None:
        return ABSENT
    if isinstance(value, float):
        return canonical_number(value)
    return str(value)


def render_records(
    records: List[dict],
    headers: Sequence[str],
    fmt: ReportFormat,
    formatters: Optional[Dict[str, Callable]] = None,
) -> str:
    if fmt is ReportFormat.JSON:
        return render_json(records)
    formatted = format_data((dict(record) for record in records), formatters or {})
    return render_table(
        headers, ([_text(record.get(h)) for h in headers] for record in formatted), fmt
    )


def _marked(text: str, fmt: ReportFormat) -> str:
    if text == ABSENT:
        return text
    return f"**{text}**" if fmt is ReportFormat.MARKDOWN else f"{text}*"


def render_rank(ranking: Sequence[RankedEntry], fmt: ReportFormat) -> str:
    """
    Datasets by descending Influence Score with the percentile of every
    feature. Percentiles among the three best of their column are marked.
    """
    if fmt is ReportFormat.JSON:
        return render_json(
            [
                {
                    "rank": entry.rank,
                    "dataset_id": entry.dataset_id,
                    "name": entry.name,
                    "release_year": entry.release_year,
                    "IS": entry.result.is_score,
                    "n_available": entry.result.n_available,
                    "percentiles": {c: entry.result.percentiles.get(c) for c in REPORT_COLUMNS},
                    "marks": sorted(entry.marks),
                    "flags": list(entry.result.flags + entry.features.flags),
                }
                for entry in ranking
            ]
        )
    rows = []
    for entry in ranking:
        cells = [str(entry.rank), entry.dataset_id, entry.name, format_score(entry.result.is_score)]
        for column in REPORT_COLUMNS:
            text = format_score(entry.result.percentiles.get(column))
            cells.append(_marked(text, fmt) if column in entry.marks else text)
        rows.append(cells)
    return render_table(RANK_HEADERS, rows, fmt)


def render_history(results: Sequence[InfluenceResult], fmt: ReportFormat) -> str:
    """Influence Score and feature percentiles per evaluation year"""
    records = []
    for result in results:
        record = result.serialize(IS_FEATURES)
        record["flags"] = ";".join(result.flags)
        records.append(record)
    headers = ("eval_year", "IS", *IS_FEATURES, "flags")
    formatters = {column: format_score for column in ("IS", *IS_FEATURES)}
    return render_records(records, headers, fmt, formatters)


def render_timeline(timeline: Timeline, fmt: ReportFormat) -> str:
    return render_records(list(serialize(timeline.points)), TIMELINE_HEADERS, fmt)


def _coefficient_records(result: RegressionResult) -> List[dict]:
    return [
        {
            "term": row.name,
            **{h: _finite(getattr(row, h)) for h in COEFFICIENT_HEADERS[1:]},
        }
        for row in result.rows()
    ]


def _three(value: Optional[float]) -> str:
    return format_score(value, 3)


def _test_row(name: str, test: HeteroskedasticityTest) -> List[str]:
    return [name, _three(test.statistic), _three(test.p), str(test.df), ";".join(test.dropped)]


def render_regression(result: RegressionResult, fmt: ReportFormat) -> str:
    """Coefficient table followed by the collinearity and heteroskedasticity diagnostics"""
    coefficients = _coefficient_records(result)
    diagnostics = result.diagnostics
    if fmt is ReportFormat.JSON:
        document = {"provenance": dict(result.provenance), "coefficients": coefficients}
        if diagnostics is not None:
            document["diagnostics"] = {
                "vif": {
                    name: value if math.isfinite(value) else "inf"
                    for name, value in diagnostics.vif.items()
                },
                "breusch_pagan": vars(diagnostics.breusch_pagan),
                "white": vars(diagnostics.white),
            }
        return render_json(document)

    sections = []
    provenance = [[key, value] for key, value in sorted(result.provenance.items())]
    sections.append(render_table(("setting", "value"), provenance, fmt))
    formatters = {h: _three for h in COEFFICIENT_HEADERS[1:]}
    sections.append(render_records(coefficients, COEFFICIENT_HEADERS, fmt, formatters))
    if diagnostics is not None:
        tests = [
            _test_row("breusch_pagan", diagnostics.breusch_pagan),
            _test_row("white", diagnostics.white),
        ]
        sections.append(render_table(("test", "statistic", "p", "df", "dropped"), tests, fmt))
        vifs = [
            [name, "inf" if math.isinf(value) else _three(value)]
            for name, value in diagnostics.vif.items()
        ]
        sections.append(render_table(("term", "vif"), vifs, fmt))
    return "\n".join(sections)


def render_assignments(model: ClusterModel, fmt: ReportFormat) -> str:
    records = [
        {"paper_id": paper_id, "cluster": cluster}
        for paper_id, cluster in sorted(model.assignments.items())
    ]
    return render_records(records, ("paper_id", "cluster"), fmt)


def render_cluster_means(
    summaries: Sequence[ClusterSummary], offsets: Sequence[int], fmt: ReportFormat
) -> str:
    headers = ("cluster", "size", *(f"t{offset:+d}" for offset in offsets))
    records = [
        {
            "cluster": summary.cluster,
            "size": summary.size,
            **{h: value for h, value in zip(headers[2:], summary.mean_values)},
        }
        for summary in summaries
    ]
    formatters = {h: format_score for h in headers[2:]}
    return render_records(records, headers, fmt, formatters)


def render_elbow(per_k_inertia: Dict[int, float], fmt: ReportFormat) -> str:
    records = [{"k": k, "inertia": inertia} for k, inertia in sorted(per_k_inertia.items())]
    return render_records(records, ("k", "inertia"), fmt, {"inertia": format_score})


def render_features(vectors: Sequence[FeatureVector], fmt: ReportFormat) -> str:
    """Feature table. Absent features are empty cells in CSV."""
    headers = ("dataset_id", "eval_year", *FEATURES, "flags")
    records = list(serialize(vectors))
    if fmt is ReportFormat.CSV:
        rows = [
            ["" if record.get(h) is None else _text(record[h]) for h in headers]
            for record in records
        ]
        return render_table(headers, rows, fmt)
    return render_records(records, headers, fmt)


def render_histogram(histogram: Histogram, fmt: ReportFormat) -> str:
    """IS bins over [0, 1]; the last row counts the datasets without a score"""
    if fmt is ReportFormat.JSON:
        return render_json(
            {
                "edges": list(histogram.edges),
                "counts": list(histogram.counts),
                "unscored": histogram.unscored,
            }
        )
    rows = [
        [format_score(low), format_score(high), str(count)]
        for low, high, count in zip(histogram.edges, histogram.edges[1:], histogram.counts)
    ]
    rows.append(["unscored", "", str(histogram.unscored)])
    return render_table(("bin_low", "bin_high", "count"), rows, fmt)
