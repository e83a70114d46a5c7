# -*- coding: utf-8 -*-
"""
Command line interface to dsinfluence
"""
import functools
import sys
from dataclasses import dataclass
from datetime import datetime, timezone
from enum import IntEnum
from pathlib import Path
from typing import Callable, List, Optional

import click
import requests
import typer
from loguru import logger
from tabulate import tabulate

from dsinfluence import exporter, plots
from dsinfluence.cache import ResponseCache
from dsinfluence.cluster import (
    DEFAULT_OFFSETS,
    build_trajectories,
    cluster_trajectories,
    summarize_clusters,
)
from dsinfluence.corpus import build_publication_timeline, load_snapshot, save_snapshot
from dsinfluence.errors import DsInfluenceError, SourceError
from dsinfluence.exporter import ReportFormat
from dsinfluence.influence import (
    is_histogram,
    rank_datasets,
    score_features,
    score_history,
    score_year,
)
from dsinfluence.ingest import FetchPlan, SourceSettings, ingest_all
from dsinfluence.metrics import feature_table, regression_table
from dsinfluence.models import Snapshot
from dsinfluence.regression import COVARIANCE_TYPES, DESIGNS, run_paper_regression
from dsinfluence.sources import SemanticScholarClient
from dsinfluence.tools import atomic_write

app = typer.Typer()


class ExitCode(IntEnum):
    OK = 0
    USAGE = 1
    DATA = 2
    SOURCE = 3


@dataclass(frozen=True)
class RunConfig:
    snapshot: Path = Path("snapshot.jsonl")
    eval_year: Optional[int] = None
    fmt: ReportFormat = ReportFormat.MARKDOWN
    seed: int = 0
    offline: bool = False
    cache: Optional[Path] = None
    include_self_citations: bool = True


def show_time(f: Callable):
    @functools.wraps(f)
    def inner(*args, **kwargs):
        start = datetime.now()
        res = f(*args, **kwargs)
        end = datetime.now()
        duration = int((end - start).total_seconds())
        minutes = duration // 60
        seconds = duration % 60
        options = {k: v for k, v in kwargs.items() if not isinstance(v, typer.Context)}
        logger.info(f"running {f.__name__}({options}) took {minutes:d}:{seconds:02d} minutes")
        return res

    return inner


def exit_codes(f: Callable):
    """Maps failures to the exit code convention."""

    @functools.wraps(f)
    def inner(*args, **kwargs):
        try:
            return f(*args, **kwargs)
        except click.exceptions.Exit:
            raise
        except click.UsageError as err:
            typer.echo(f"usage error: {err.format_message()}", err=True)
            raise typer.Exit(ExitCode.USAGE)
        except (SourceError, requests.RequestException) as err:
            typer.echo(f"source failure: {err}", err=True)
            raise typer.Exit(ExitCode.SOURCE)
        except (DsInfluenceError, OSError) as err:
            typer.echo(f"error: {err}", err=True)
            raise typer.Exit(ExitCode.DATA)
        except Exception:
            logger.exception(f"{f.__name__} failed")
            raise typer.Exit(ExitCode.USAGE)

    return inner


def make_session() -> requests.Session:
    session = requests.Session()
    session.headers["User-Agent"] = "dsinfluence"
    return session


def emit(text: str, out: Optional[Path] = None):
    if out is None:
        typer.echo(text, nl=False)
    else:
        atomic_write(out, text)
        logger.info(f"wrote {out}")


def load(config: RunConfig) -> Snapshot:
    return load_snapshot(config.snapshot)


def eval_year(config: RunConfig, snapshot: Snapshot) -> Optional[int]:
    coverage = snapshot.coverage_year()
    if config.eval_year is None:
        return coverage
    if coverage is not None and config.eval_year > coverage:
        raise typer.BadParameter(
            f"--year {config.eval_year} lies beyond the snapshot coverage ({coverage})"
        )
    return config.eval_year


@app.callback()
def main_options(
    ctx: typer.Context,
    snapshot: Path = typer.Option(Path("snapshot.jsonl"), help="snapshot file"),
    year: Optional[int] = typer.Option(None, help="evaluation year"),
    fmt: ReportFormat = typer.Option(ReportFormat.MARKDOWN, "--format", help="report format"),
    seed: int = typer.Option(0, help="root seed of all random choices"),
    offline: bool = typer.Option(False, help="serve every request from the cache"),
    cache: Optional[Path] = typer.Option(None, help="sqlite response cache"),
    exclude_self_citations: bool = typer.Option(False, help="drop self citations"),
    verbose: int = typer.Option(0, "--verbose", "-v", count=True),
):
    """
    Scientometric analysis of autonomous driving datasets.

    --verbose is the verbosity level default shows warnings -v shows info -vv shows debug
    """
    logger.remove()
    logger.add(sys.stderr, level=max(5, 30 - verbose * 10))
    ctx.obj = RunConfig(
        snapshot=snapshot,
        eval_year=year,
        fmt=fmt,
        seed=seed,
        offline=offline,
        cache=cache,
        include_self_citations=not exclude_self_citations,
    )


def _created_at(value: Optional[str]) -> Optional[datetime]:
    if value is None:
        return None
    try:
        created_at = datetime.fromisoformat(value)
    except ValueError:
        raise typer.BadParameter(f"--created-at {value} is not an ISO timestamp")
    if created_at.tzinfo is None:
        created_at = created_at.replace(tzinfo=timezone.utc)
    return created_at


@app.command()
@show_time
@exit_codes
def ingest(
    ctx: typer.Context,
    source: str = typer.Option(..., help="ad-datasets JSON file or URL"),
    ss_base_url: str = typer.Option(FetchPlan().semantic_scholar.base_url),
    altmetric_base_url: str = typer.Option(FetchPlan().altmetric.base_url),
    ss_api_key: Optional[str] = typer.Option(None, envvar="SS_API_KEY"),
    altmetric_key: Optional[str] = typer.Option(None, envvar="ALTMETRIC_KEY"),
    workers: int = typer.Option(4, help="workers per source"),
    rate: float = typer.Option(1.0, help="requests per second per source"),
    created_at: Optional[str] = typer.Option(None, help="pin the snapshot timestamp"),
):
    """
    Fetch the catalogue, the academic graph and Altmetric data into a snapshot.
    """
    config: RunConfig = ctx.obj
    plan = FetchPlan(
        semantic_scholar=SourceSettings(ss_base_url, ss_api_key, rate, workers=workers),
        altmetric=SourceSettings(altmetric_base_url, altmetric_key, rate, workers=workers),
        offline=config.offline,
    )
    cache = ResponseCache(str(config.cache)) if config.cache else None
    try:
        result = ingest_all(
            source, plan, session=make_session(), cache=cache, created_at=_created_at(created_at)
        )
    finally:
        if cache is not None:
            cache.close()
    if SemanticScholarClient.source in result.failed_sources:
        raise SourceError(f"{SemanticScholarClient.source} failed, no snapshot written")
    snapshot = result.snapshot
    save_snapshot(snapshot, config.snapshot, allow_dangling=snapshot.partial)
    typer.echo(tabulate(sorted(result.counts.items()), headers=["entity", "count"]))
    if result.misses:
        misses = [(m.source, m.key, m.reason) for m in result.misses]
        typer.echo(tabulate(misses, headers=["source", "key", "reason"]))
    if snapshot.partial:
        logger.warning(f"{config.snapshot} is partial: {', '.join(result.failed_sources)}")


@app.command()
@show_time
@exit_codes
def rank(
    ctx: typer.Context,
    released: Optional[int] = typer.Option(None, help="list datasets released in this year"),
    exclude_feature: List[str] = typer.Option([], help="feature left out of the score"),
    out: Optional[Path] = typer.Option(None, help="report file"),
):
    """
    Rank the datasets released by the evaluation year by their Influence Score.
    """
    config: RunConfig = ctx.obj
    try:
        features = score_features(exclude_feature)
    except ValueError as err:
        raise typer.BadParameter(str(err))
    snapshot = load(config)
    year = eval_year(config, snapshot)
    ranking = [] if year is None else rank_datasets(
        snapshot, year, released, features, config.include_self_citations
    )
    emit(exporter.render_rank(ranking, config.fmt), out)


@app.command()
@show_time
@exit_codes
def history(
    ctx: typer.Context,
    dataset_id: str = typer.Argument(..., help="dataset to follow"),
    first_year: Optional[int] = typer.Option(None, help="first evaluation year"),
    out: Optional[Path] = typer.Option(None, help="report file"),
    svg: Optional[Path] = typer.Option(None, help="line chart file"),
):
    """
    Influence Score and feature percentiles of one dataset per evaluation year.
    """
    config: RunConfig = ctx.obj
    snapshot = load(config)
    dataset = snapshot.dataset(dataset_id)
    last = eval_year(config, snapshot)
    release = snapshot.release_year(dataset)
    first = first_year if first_year is not None else release
    if last is None or first is None:
        raise typer.BadParameter(f"{dataset_id} has no release year, pass --first-year")
    results = score_history(
        dataset_id,
        snapshot,
        range(first, last + 1),
        include_self_citations=config.include_self_citations,
    )
    emit(exporter.render_history(results, config.fmt), out)
    if svg is not None:
        atomic_write(svg, plots.history_svg(dataset.name, results))


@app.command()
@show_time
@exit_codes
def regress(
    ctx: typer.Context,
    variant: str = typer.Option("baseline", help=f"design: {', '.join(DESIGNS)}"),
    covariance: str = typer.Option("HC1", help=f"one of {', '.join(COVARIANCE_TYPES)}"),
    out: Optional[Path] = typer.Option(None, help="report file"),
):
    """
    Regress log(1 + citations after one year) on the features available at publication.
    """
    config: RunConfig = ctx.obj
    if variant not in DESIGNS:
        raise typer.BadParameter(f"unknown design {variant}")
    if covariance not in COVARIANCE_TYPES:
        raise typer.BadParameter(f"unknown covariance type {covariance}")
    snapshot = load(config)
    rows = regression_table(snapshot, config.include_self_citations)
    result = run_paper_regression(rows, DESIGNS[variant], covariance)
    typer.echo(f"{result.n_obs} datasets", err=True)
    emit(exporter.render_regression(result, config.fmt), out)


@app.command()
@show_time
@exit_codes
def cluster(
    ctx: typer.Context,
    k: int = typer.Option(6, help="number of clusters"),
    restarts: int = typer.Option(10, help="k-means restarts"),
    k_max: int = typer.Option(10, help="largest k of the elbow series"),
    standardize: bool = typer.Option(False, help="z-score every offset"),
    out_dir: Optional[Path] = typer.Option(None, help="directory for CSV and SVG files"),
):
    """
    Cluster the citation trajectories of the dataset papers.
    """
    config: RunConfig = ctx.obj
    snapshot = load(config)
    trajectories = build_trajectories(snapshot)
    model = cluster_trajectories(
        trajectories,
        k,
        config.seed,
        restarts,
        k_range=range(1, min(k_max, len(trajectories)) + 1),
        standardize=standardize,
    )
    summaries = summarize_clusters(model, trajectories)
    reports = {
        "assignments": exporter.render_assignments(model, config.fmt),
        "means": exporter.render_cluster_means(summaries, DEFAULT_OFFSETS, config.fmt),
        "elbow": exporter.render_elbow(model.per_k_inertia, config.fmt),
    }
    if out_dir is None:
        emit("\n".join(reports.values()))
        return
    suffix = {ReportFormat.MARKDOWN: "md", ReportFormat.CSV: "csv", ReportFormat.JSON: "json"}
    for name, text in reports.items():
        atomic_write(out_dir / f"{name}.{suffix[config.fmt]}", text)
    atomic_write(out_dir / "clusters.svg", plots.clusters_svg(summaries, DEFAULT_OFFSETS))
    atomic_write(out_dir / "elbow.svg", plots.elbow_svg(model.per_k_inertia))


@app.command()
@show_time
@exit_codes
def timeline(
    ctx: typer.Context,
    out: Optional[Path] = typer.Option(None, help="report file"),
    svg: Optional[Path] = typer.Option(None, help="line chart file"),
):
    """
    Datasets published and citations received by dataset papers per year.
    """
    config: RunConfig = ctx.obj
    series = build_publication_timeline(load(config))
    emit(exporter.render_timeline(series, config.fmt), out)
    if svg is not None:
        atomic_write(svg, plots.timeline_svg(series))


@app.command()
@show_time
@exit_codes
def features(
    ctx: typer.Context,
    first_year: Optional[int] = typer.Option(None, help="first evaluation year"),
    out: Optional[Path] = typer.Option(None, help="report file"),
):
    """
    All ten features of every dataset for each year up to the evaluation year.
    """
    config: RunConfig = ctx.obj
    snapshot = load(config)
    last = eval_year(config, snapshot)
    years = [] if last is None else range(last if first_year is None else first_year, last + 1)
    vectors = feature_table(
        snapshot, years, include_self_citations=config.include_self_citations
    )
    emit(exporter.render_features(vectors, config.fmt), out)


@app.command()
@show_time
@exit_codes
def distribution(
    ctx: typer.Context,
    bins: int = typer.Option(10, help="number of bins over [0, 1]"),
    out: Optional[Path] = typer.Option(None, help="report file"),
    svg: Optional[Path] = typer.Option(None, help="bar chart file"),
):
    """
    Distribution of the Influence Score over the peer group of the evaluation year.
    """
    config: RunConfig = ctx.obj
    snapshot = load(config)
    year = eval_year(config, snapshot)
    results = {} if year is None else score_year(
        snapshot, year, include_self_citations=config.include_self_citations
    )[1]
    histogram = is_histogram(results.values(), bins)
    emit(exporter.render_histogram(histogram, config.fmt), out)
    if svg is not None:
        atomic_write(svg, plots.histogram_svg(histogram))


def main():
    try:
        code = app(standalone_mode=False)
    except click.UsageError as err:
        err.show()
        code = ExitCode.USAGE
    except click.exceptions.Abort:
        code = ExitCode.USAGE
    sys.exit(code or ExitCode.OK)


if __name__ == "__main__":
    main()
