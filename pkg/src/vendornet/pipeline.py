"""File-based orchestration of extraction, scoring and evaluation.

Every stage writes CSV into an output directory. Graphs and score tables are
cached: each cache directory holds ``_cache.txt`` mapping artifact names to
the hash of everything they were computed from, and a matching entry makes
the stage reuse the file instead of recomputing it.
"""
from __future__ import annotations

import hashlib
import logging
import math
import re
import statistics
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field, replace
from pathlib import Path
from typing import Iterable, Sequence

from sklearn.base import clone
from sklearn.model_selection import ParameterGrid

from . import __version__
from .estimators import NetworkExtractor, check_fraction
from .evalmetrics import (
    UndefinedMetricError,
    cubic_trend,
    diff_scores,
    lowest_value_fraction,
    minmax_normalize,
    overlap,
    post_activity_recall,
    random_inclusion_prob,
    rank_cut,
    roc_sweep,
    sales_recall,
    vendor_percentiles,
    vendor_recall,
)
from .extraction import CommGraph, ExtractionParams, parse_duration, read_graph, write_graph
from .ingest import (
    Corpus,
    SalesBook,
    ValidationError,
    load_sales,
    month_label,
    month_range,
    parse_month,
)
from .measures import CENTRALITIES, INDICATORS, MEASURES, ScoreTable, check_measures, compute_measure, read_scores, write_scores

log = logging.getLogger(__name__)

PARAM_NAMES = ("delta_o", "delta_t", "omega_lower", "t_lim", "omega_first")
KINDS = ("current", "future")
ROC_GROUPS = ("top", "top_less_active", "vendors", "vendors_less_active")
UNION = "indicator_union"


@dataclass(frozen=True)
class RunConfig:
    posts: Path | None = None
    sales: Path | None = None
    out_dir: Path = Path("out")
    params: ExtractionParams = field(default_factory=ExtractionParams)
    months: str | None = None
    measures: tuple[str, ...] = MEASURES
    fraction: float = 0.2
    roc_step: float = 0.05
    roc_kind: str = "current"
    damping: float = 0.85
    tolerance: float = 1e-12
    max_iters: int = 1000
    topk: int = 25
    activity_threshold: int = 100
    jobs: int = 1

    def __post_init__(self):
        check_fraction(self.fraction)
        check_measures(self.measures)
        if not 0 < self.roc_step <= 1:
            raise ValidationError(f"roc_step must be in (0, 1], got {self.roc_step!r}")
        if self.roc_kind not in KINDS:
            raise ValidationError(f"roc_kind must be one of {KINDS}")
        if self.months is not None:
            parse_months_arg(self.months)

    @property
    def pagerank_opts(self) -> dict:
        return {"damping": self.damping, "tolerance": self.tolerance, "max_iters": self.max_iters}

    def as_items(self) -> list[tuple[str, str]]:
        """Flat, ordered ``key=value`` view used for hashing and manifests."""
        items = [
            ("posts", _name(self.posts)), ("sales", _name(self.sales)), ("months", self.months or ""),
            ("measures", ",".join(self.measures)), ("fraction", repr(self.fraction)),
            ("roc_step", repr(self.roc_step)), ("roc_kind", self.roc_kind),
            ("damping", repr(self.damping)), ("tolerance", repr(self.tolerance)),
            ("max_iters", str(self.max_iters)), ("topk", str(self.topk)),
            ("activity_threshold", str(self.activity_threshold)),
        ]
        items += [(k, repr(v)) for k, v in asdict(self.params).items()]
        return items


def _name(path: Path | None) -> str:
    return Path(path).name if path is not None else ""


_CASTS = {
    "posts": Path, "sales": Path, "out_dir": Path, "months": str,
    "fraction": float, "damping": float, "tolerance": float, "max_iters": int,
    "topk": int, "activity_threshold": int, "jobs": int, "roc_kind": str,
}


def _parse_percent(value) -> float:
    text = str(value).strip()
    if text.endswith("%"):
        return float(text[:-1]) / 100.0
    return float(text)


def read_kv_file(path: str | Path) -> dict[str, str]:
    """Parse a flat ``key = value`` file; ``#`` starts a comment."""
    out = {}
    for lineno, raw in enumerate(Path(path).read_text(encoding="utf-8").splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        key, sep, value = line.partition("=")
        if not sep or not key.strip():
            raise ValidationError(f"expected key = value, got {raw!r}", row=lineno, source=str(path))
        out[key.strip().replace("-", "_")] = value.strip()
    return out


def build_config(config_file: str | Path | None = None, **overrides) -> RunConfig:
    """Merge a config file with keyword overrides (``None`` means not given)."""
    values: dict[str, object] = {}
    if config_file is not None:
        values.update(read_kv_file(config_file))
    values.update({k.replace("-", "_"): v for k, v in overrides.items() if v is not None})
    kwargs: dict[str, object] = {}
    params: dict[str, object] = {}
    for key, value in values.items():
        try:
            if key in ("delta_t", "t_lim"):
                params[key] = parse_duration(value)
            elif key == "delta_o":
                params[key] = int(value)
            elif key in ("omega_lower", "omega_first"):
                params[key] = float(value)
            elif key == "measures":
                names = value.split(",") if isinstance(value, str) else list(value)
                kwargs[key] = tuple(m.strip() for m in names if m.strip())
            elif key == "roc_step":
                kwargs[key] = _parse_percent(value)
            elif key in _CASTS:
                kwargs[key] = _CASTS[key](value)
            elif key in ("seed", "config") or key.startswith("grid."):
                continue
            else:
                raise ValidationError(f"unknown setting {key!r}")
        except ValueError as exc:
            if isinstance(exc, ValidationError):
                raise
            raise ValidationError(f"bad value for {key}: {value!r}") from None
    return RunConfig(params=ExtractionParams(**params), **kwargs)


def parse_months_arg(text: str) -> tuple[tuple[int, int], tuple[int, int]]:
    """``YYYY-MM`` or ``YYYY-MM:YYYY-MM``."""
    first, _, last = text.partition(":")
    a = parse_month(first)
    b = parse_month(last) if last else a
    if a > b:
        raise ValidationError(f"empty month range {text!r}")
    return a, b


# --- hashing, caching, formatting ------------------------------------------------

def file_digest(path: str | Path) -> str:
    h = hashlib.sha256()
    with open(path, "rb") as fh:
        for chunk in iter(lambda: fh.read(1 << 20), b""):
            h.update(chunk)
    return h.hexdigest()


def _hash(*parts) -> str:
    return hashlib.sha256("\x1f".join(map(str, parts)).encode()).hexdigest()[:16]


class Cache:
    def __init__(self, directory: Path):
        self.dir = directory
        self.dir.mkdir(parents=True, exist_ok=True)
        self.index_path = directory / "_cache.txt"
        self.index = {}
        if self.index_path.exists():
            for line in self.index_path.read_text(encoding="utf-8").splitlines():
                name, sep, key = line.partition("=")
                if sep:
                    self.index[name] = key

    def hit(self, name: str, key: str) -> bool:
        return self.index.get(name) == key and (self.dir / name).exists()

    def record(self, name: str, key: str) -> None:
        self.index[name] = key

    def save(self) -> None:
        self.index_path.write_text("".join(f"{k}={v}\n" for k, v in sorted(self.index.items())), encoding="utf-8")


def fmt_pct(x: float | None) -> str:
    return "nan" if x is None or (isinstance(x, float) and math.isnan(x)) else f"{x:.6f}"


def fmt_num(x: float | None) -> str:
    return "nan" if x is None or (isinstance(x, float) and math.isnan(x)) else format(x, ".12g")


def write_rows(path: Path, header: Sequence[str], rows: Iterable[Sequence[str]]) -> None:
    import csv
    import io

    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(header)
    writer.writerows(rows)
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(buf.getvalue(), encoding="utf-8")


# --- the run context ---------------------------------------------------------------

class Run:
    """Inputs and cutoffs resolved once per command."""

    def __init__(self, config: RunConfig, *, need_sales: bool = False):
        if config.posts is None:
            raise ValidationError("no posts file given (--posts or posts = ... in the config)")
        self.config = config
        self.corpus = Corpus.from_file(config.posts)
        if not len(self.corpus):
            raise ValidationError(f"{config.posts}: no posts")
        self.posts_digest = file_digest(config.posts)
        self.book: SalesBook | None = None
        self.sales_digest = ""
        if config.sales is not None:
            with open(config.sales, "rb") as fh:
                observations = load_sales(fh, name=str(config.sales))
            self.book = SalesBook.for_corpus(observations, self.corpus)
            self.sales_digest = file_digest(config.sales)
        elif need_sales:
            raise ValidationError("no sales file given (--sales or sales = ... in the config)")
        self.cutoffs = self._cutoffs()

    def _cutoffs(self) -> list[int]:
        available = self.corpus.months()
        if self.config.months is None:
            return available
        first, last = parse_months_arg(self.config.months)
        requested = month_range(first, last)
        kept = [c for c in requested if available[0] <= c <= available[-1]]
        if len(kept) < len(requested):
            log.warning("month range %s clipped to the corpus span %s..%s",
                        self.config.months, month_label(available[0]), month_label(available[-1]))
        if not kept:
            raise ValidationError(f"month range {self.config.months} does not overlap the corpus")
        return kept

    def config_hash(self) -> str:
        return _hash(*(f"{k}={v}" for k, v in self.config.as_items()), self.posts_digest, self.sales_digest)

    def graph_key(self, params: ExtractionParams, cutoff: int) -> str:
        return _hash("graph", self.posts_digest, *asdict(params).values(), cutoff)

    def score_key(self, measure: str, params: ExtractionParams, cutoff: int) -> str:
        if measure in INDICATORS:
            return _hash("indicator", self.posts_digest, measure, cutoff)
        extra = self.config.pagerank_opts.values() if measure == "pagerank" else ()
        return _hash("centrality", self.graph_key(params, cutoff), measure, *extra)


def write_manifest(run: Run, command: str, extra: dict | None = None) -> Path:
    lines = [
        ("tool", "vendornet"), ("version", __version__), ("command", command),
        ("config_hash", run.config_hash()),
        ("posts_sha256", run.posts_digest), ("sales_sha256", run.sales_digest or "-"),
        ("months", ",".join(month_label(c) for c in run.cutoffs)),
    ]
    lines += [(f"config.{k}", v) for k, v in run.config.as_items()]
    lines += sorted((extra or {}).items())
    path = run.config.out_dir / f"manifest-{command}.txt"
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text("".join(f"{k}={v}\n" for k, v in lines), encoding="utf-8")
    return path


# --- extraction and scoring ----------------------------------------------------------

def extract_graphs(run: Run, params: ExtractionParams | None = None, out_dir: Path | None = None) -> list[CommGraph]:
    """Build (or reload from cache) one graph per cutoff and write them out."""
    params = params or run.config.params
    graph_dir = (out_dir or run.config.out_dir) / "graphs"
    cache = Cache(graph_dir)
    graphs: dict[int, CommGraph] = {}
    missing = []
    for c in run.cutoffs:
        name = f"{month_label(c)}.csv"
        if cache.hit(name, run.graph_key(params, c)) and (graph_dir / (name + ".meta")).exists():
            graphs[c] = read_graph(graph_dir / name)
        else:
            missing.append(c)
    if missing:
        extractor = NetworkExtractor(**asdict(params), cutoffs=missing).fit(run.corpus)
        for g in extractor.transform(run.corpus):
            name = f"{month_label(g.cutoff)}.csv"
            write_graph(g, graph_dir / name)
            cache.record(name, run.graph_key(params, g.cutoff))
            # reload so cached and fresh runs see identical (rounded) weights
            graphs[g.cutoff] = read_graph(graph_dir / name)
        cache.save()
    return [graphs[c] for c in run.cutoffs]


def _score_task(args):
    measure, graph, corpus, cutoff, opts = args
    return compute_measure(measure, graph=graph, corpus=corpus, cutoff=cutoff, **opts)


def compute_scores(run: Run, graphs: Sequence[CommGraph] | None = None,
                   params: ExtractionParams | None = None, out_dir: Path | None = None,
                   measures: Sequence[str] | None = None) -> dict[tuple[str, int], ScoreTable]:
    """Score tables for every (measure, cutoff), written as ``<measure>-<YYYY-MM>.csv``."""
    params = params or run.config.params
    measures = list(measures or run.config.measures)
    score_dir = (out_dir or run.config.out_dir) / "scores"
    cache = Cache(score_dir)
    need_graphs = any(m in CENTRALITIES for m in measures)
    if graphs is None and need_graphs:
        graphs = extract_graphs(run, params, out_dir)
    by_cutoff = {g.cutoff: g for g in graphs or ()}

    tables: dict[tuple[str, int], ScoreTable] = {}
    tasks = []
    for c in run.cutoffs:
        for m in measures:
            name = f"{m}-{month_label(c)}.csv"
            if cache.hit(name, run.score_key(m, params, c)):
                tables[m, c] = read_scores(score_dir / name, m, c)
            else:
                graph = by_cutoff.get(c) if m in CENTRALITIES else None
                tasks.append((m, graph, run.corpus if m in INDICATORS else None, c, run.config.pagerank_opts))
    if tasks:
        if run.config.jobs > 1:
            with ProcessPoolExecutor(run.config.jobs) as pool:
                results = list(pool.map(_score_task, tasks))
        else:
            results = [_score_task(t) for t in tasks]
        for (m, _, _, c, _), table in zip(tasks, results):
            name = f"{m}-{month_label(c)}.csv"
            write_scores(table, score_dir / name)
            cache.record(name, run.score_key(m, params, c))
            tables[m, c] = read_scores(score_dir / name, m, c)
        cache.save()
    return tables


# --- evaluation ------------------------------------------------------------------------

def _safe(fn, *args, **kwargs):
    try:
        return fn(*args, **kwargs)
    except UndefinedMetricError:
        return None


@dataclass
class MonthContext:
    cutoff: int
    active: set[str]
    post_counts: dict[str, float]
    sales: dict[str, dict[str, float]]   # kind -> vendor -> sales
    percentiles: dict = field(default_factory=dict)


def month_contexts(run: Run) -> list[MonthContext]:
    if run.book is None:
        raise ValidationError("evaluation needs a sales file")
    out = []
    for c in run.cutoffs:
        active = run.corpus.active_users(c)
        vendors = sorted(run.book.vendors & active)
        ctx = MonthContext(c, active, {u: float(run.corpus.post_count(u, c)) for u in active},
                           {k: {u: run.book.sales_at(u, c, k) for u in vendors} for k in KINDS})
        ctx.percentiles = {k: vendor_percentiles(ctx.sales[k], k, active) for k in KINDS}
        out.append(ctx)
    return out


def evaluate_month(ctx: MonthContext, tables: dict[str, ScoreTable], fraction: float):
    """Metric rows ``(measure, kind, metric, value)`` and the rank cuts for one month."""
    rows = []
    cuts = {}
    for m, table in tables.items():
        scores = table.scores
        if set(scores) != ctx.active:
            raise ValidationError(f"{m} scores for {month_label(ctx.cutoff)} do not cover the active users")
        norm = minmax_normalize(scores)
        cut = rank_cut(scores, fraction)
        cuts[m] = cut
        vendors = ctx.percentiles["current"].vendors
        non_vendors = sorted(ctx.percentiles["current"].non_vendors)
        if vendors and non_vendors:
            d = diff_scores(vendors, non_vendors, norm)
            rows += [(m, "all", "abs_diff_vendor_vs_nonvendor", d.absolute),
                     (m, "all", "rel_diff_vendor_vs_nonvendor", d.relative)]
        rows.append((m, "all", "lowest_value_fraction", lowest_value_fraction(scores)))
        for kind in KINDS:
            vp = ctx.percentiles[kind]
            if not vp.top:
                continue
            d = diff_scores(vp.top, vp.vendors, norm)
            rows += [(m, kind, "abs_diff_top_vs_vendors", d.absolute),
                     (m, kind, "rel_diff_top_vs_vendors", d.relative)]
            if vp.sub_top:
                d = diff_scores(vp.top, vp.sub_top, norm)
                rows += [(m, kind, "abs_diff_top_vs_subtop", d.absolute),
                         (m, kind, "rel_diff_top_vs_subtop", d.relative)]
            rows += [
                (m, kind, "vendor_recall", _safe(vendor_recall, vp.top, cut)),
                (m, kind, "vendor_recall_by_cut_size", _safe(vendor_recall, vp.top, cut, "users")),
                (m, kind, "post_activity_recall", _safe(post_activity_recall, vp.top, cut, ctx.post_counts)),
                (m, kind, "sales_recall", _safe(sales_recall, vp.top, cut, ctx.sales[kind])),
            ]
    return rows, cuts


PERCENT_METRICS = {"vendor_recall", "vendor_recall_by_cut_size", "post_activity_recall",
                   "sales_recall", "lowest_value_fraction"}


def _format_metric(metric: str, value) -> str:
    return fmt_pct(value) if metric in PERCENT_METRICS else fmt_num(value)


def evaluate(run: Run, tables: dict[tuple[str, int], ScoreTable], out_dir: Path | None = None,
             write: bool = True) -> list[tuple[str, str, str, str, float | None]]:
    """Compute every metric; optionally write metrics, overlap, top-k and trend CSVs.

    Returns rows ``(month, measure, kind, metric, value)``.
    """
    out_dir = out_dir or run.config.out_dir
    cfg = run.config
    measures = [m for m in cfg.measures if all((m, c) in tables for c in run.cutoffs)]
    all_rows = []
    overlaps: dict[tuple[str, str, str], list[float]] = {}
    topk_rows = []
    for ctx in month_contexts(run):
        month = month_label(ctx.cutoff)
        month_tables = {m: tables[m, ctx.cutoff] for m in measures}
        rows, cuts = evaluate_month(ctx, month_tables, cfg.fraction)
        all_rows += [(month, *r) for r in rows]
        if all(m in cuts for m in INDICATORS):
            cuts[UNION] = sorted(set().union(*(cuts[m] for m in INDICATORS)))
        for kind in KINDS:
            top = ctx.percentiles[kind].top
            for i in cuts:
                for j in cuts:
                    if i != j:
                        v = _safe(overlap, top, cuts[i], cuts[j])
                        if v is not None:
                            overlaps.setdefault((kind, i, j), []).append(v)
        if write:
            topk_rows += _write_topk(run, ctx, month_tables, out_dir)
    if not write:
        return all_rows

    write_rows(out_dir / "metrics.csv", ("cutoff", "measure", "kind", "metric", "value"),
               ((mo, m, k, met, _format_metric(met, v)) for mo, m, k, met, v in all_rows))
    ov_rows = []
    for (kind, i, j), values in sorted(overlaps.items()):
        std = statistics.stdev(values) if len(values) > 1 else None
        ov_rows.append((kind, i, j, fmt_pct(statistics.fmean(values)), fmt_pct(std), str(len(values))))
    if run.cutoffs and len(run.cutoffs) == 1:
        log.warning("single-month run: overlap standard deviations are undefined (written as nan)")
    write_rows(out_dir / "overlap.csv", ("kind", "measure_i", "measure_j", "mean", "std", "months"), ov_rows)
    write_rows(out_dir / "topk-summary.csv",
               ("cutoff", "measure", "k", "with_sales", "population", "population_with_sales", "probability"),
               topk_rows)
    write_rows(out_dir / "trends.csv", ("measure", "kind", "metric", "c0", "c1", "c2", "c3"), trend_rows(all_rows))
    return all_rows


def _write_topk(run: Run, ctx: MonthContext, tables: dict[str, ScoreTable], out_dir: Path):
    k = run.config.topk
    month = month_label(ctx.cutoff)
    sold = {u for u in ctx.sales["current"]
            if ctx.sales["current"][u] > 0 or ctx.sales["future"][u] > 0}
    summary = []
    for m, table in tables.items():
        top = table.ranked()[:k]
        rows = []
        for rank, u in enumerate(top, start=1):
            cur = ctx.sales["current"].get(u, 0.0)
            fut = ctx.sales["future"].get(u, 0.0)
            rows.append((str(rank), u, f"{cur:.6f}", f"{fut:.6f}"))
        write_rows(out_dir / "topk" / f"{m}-{month}.csv", ("rank", "user", "current", "future"), rows)
        hits = sum(1 for u in top if u in sold)
        p = random_inclusion_prob(len(ctx.active), len(sold), len(top), hits)
        summary.append((month, m, str(len(top)), str(hits), str(len(ctx.active)), str(len(sold)), format(p, ".6e")))
    return summary


def trend_rows(rows) -> list[tuple[str, ...]]:
    series: dict[tuple[str, str, str], list[tuple[float, float]]] = {}
    months = sorted({r[0] for r in rows})
    x_of = {mo: float(i) for i, mo in enumerate(months)}
    for mo, m, kind, metric, v in rows:
        if v is not None and math.isfinite(v):
            series.setdefault((m, kind, metric), []).append((x_of[mo], v))
    out = []
    for key, pts in sorted(series.items()):
        if len({x for x, _ in pts}) >= 4:
            coef = cubic_trend(pts)
            out.append((*key, *(fmt_num(float(c)) for c in coef)))
    return out


def roc_groups(ctx: MonthContext, threshold: int, kind: str) -> dict[str, set[str]]:
    top = set(ctx.percentiles[kind].top)
    vendors = set(ctx.percentiles[kind].vendors)
    quiet = {u for u, n in ctx.post_counts.items() if n < threshold}
    return {"top": top, "top_less_active": top & quiet, "vendors": vendors,
            "vendors_less_active": vendors & quiet}


def roc_curves(run: Run, tables: dict[tuple[str, int], ScoreTable], out_dir: Path | None = None) -> list[tuple]:
    out_dir = out_dir or run.config.out_dir
    cfg = run.config
    summary = []
    for ctx in month_contexts(run):
        month = month_label(ctx.cutoff)
        groups = roc_groups(ctx, cfg.activity_threshold, cfg.roc_kind)
        for m in cfg.measures:
            table = tables[m, ctx.cutoff]
            for g in ROC_GROUPS:
                positives = groups[g]
                if not positives or positives >= ctx.active:
                    log.warning("skipping ROC for %s %s group %s: degenerate positive set", m, month, g)
                    continue
                curve = roc_sweep(table.scores, positives, cfg.roc_step)
                write_rows(out_dir / "roc" / f"{m}-{month}-{g}.csv", ("threshold", "tpr", "fpr"),
                           ((fmt_pct(100 * p.threshold), fmt_num(p.tpr), fmt_num(p.fpr)) for p in curve.points))
                summary.append((month, m, cfg.roc_kind, g, fmt_num(curve.auc)))
    write_rows(out_dir / "roc" / "auc.csv", ("cutoff", "measure", "kind", "group", "auc"), summary)
    return summary


# --- parameter sweep ---------------------------------------------------------------------

def grid_from_config(config_file: str | Path | None) -> list[str]:
    """``grid.<param> = v1,v2`` lines of a config file as grid specs."""
    if config_file is None:
        return []
    return [f"{k[5:]}={v}" for k, v in read_kv_file(config_file).items() if k.startswith("grid.")]


def parse_grid(specs: Iterable[str]) -> dict[str, list]:
    """``["delta_o=2,5,10", "t_lim=3d,7d"]`` -> ``{"delta_o": [2, 5, 10], "t_lim": [259200.0, 604800.0]}``."""
    grid: dict[str, list] = {}
    for spec in specs:
        key, sep, values = spec.partition("=")
        key = key.strip().replace("-", "_")
        if not sep or key not in PARAM_NAMES:
            raise ValidationError(f"bad grid entry {spec!r}; expected <param>=v1,v2 with param in {PARAM_NAMES}")
        items = [v.strip() for v in values.split(",") if v.strip()]
        if not items:
            raise ValidationError(f"grid entry {spec!r} lists no values")
        if key == "delta_o":
            grid[key] = [int(v) for v in items]
        elif key in ("delta_t", "t_lim"):
            grid[key] = [parse_duration(v) for v in items]
        else:
            grid[key] = [float(v) for v in items]
    if not grid:
        raise ValidationError("empty parameter grid")
    return grid


def expand_grid(grid: dict[str, list], base: ExtractionParams, joint: bool = False) -> list[dict]:
    """Grid points as parameter overrides.

    One-at-a-time by default: each listed value replaces a single parameter
    while the others keep their base values. ``joint=True`` takes the
    Cartesian product of all listed values instead.
    """
    if not grid:
        raise ValidationError("empty parameter grid")
    if joint:
        return [dict(sorted(p.items(), key=lambda kv: PARAM_NAMES.index(kv[0]))) for p in ParameterGrid(grid)]
    return [{k: v} for k in PARAM_NAMES if k in grid for v in grid[k]]


def point_label(point: dict) -> str:
    parts = []
    for k, v in point.items():
        text = str(int(v)) if float(v).is_integer() else repr(float(v))
        parts.append(f"{k}-{text}")
    return re.sub(r"[^A-Za-z0-9_.\-]+", "_", "_".join(parts))


def sweep(run: Run, grid: dict[str, list], joint: bool = False) -> list[tuple]:
    cfg = run.config
    base = NetworkExtractor(**asdict(cfg.params), cutoffs=run.cutoffs)
    root = cfg.out_dir / "sweep"
    shared_indicators = compute_scores(run, None, cfg.params, root / "_indicators",
                                       [m for m in cfg.measures if m in INDICATORS])
    rows = []
    for point in expand_grid(grid, cfg.params, joint):
        est = clone(base).set_params(**point)
        params = est.fit(run.corpus).params_
        sub = root / point_label(point)
        centralities = [m for m in cfg.measures if m in CENTRALITIES]
        tables = dict(shared_indicators)
        if centralities:
            graphs = extract_graphs(run, params, sub)
            tables.update(compute_scores(run, graphs, params, sub, centralities))
        metric_rows = evaluate(replace_run(run, params), tables, sub, write=False)
        label = point_label(point)
        pvals = [fmt_num(float(getattr(params, k))) for k in PARAM_NAMES]
        rows += [(label, *pvals, mo, m, k, met, _format_metric(met, v)) for mo, m, k, met, v in metric_rows]
    write_rows(cfg.out_dir / "sweep.csv",
               ("point", *PARAM_NAMES, "cutoff", "measure", "kind", "metric", "value"), rows)
    return rows


def replace_run(run: Run, params: ExtractionParams) -> Run:
    clone_run = object.__new__(Run)
    clone_run.__dict__.update(run.__dict__)
    clone_run.config = replace(run.config, params=params)
    return clone_run


# --- report ---------------------------------------------------------------------------------

def summarize(rows) -> list[tuple[str, ...]]:
    """Mean and sample standard deviation of each metric across months."""
    series: dict[tuple[str, str, str], list[float]] = {}
    for _, m, kind, metric, v in rows:
        if v is not None:
            series.setdefault((m, kind, metric), []).append(v)
    out = []
    for (m, kind, metric), values in sorted(series.items()):
        std = statistics.stdev(values) if len(values) > 1 else None
        out.append((m, kind, metric, _format_metric(metric, statistics.fmean(values)),
                    _format_metric(metric, std), str(len(values))))
    return out


def report(run: Run) -> Path:
    """Run every analysis stage and write ``report.csv``."""
    graphs = extract_graphs(run)
    tables = compute_scores(run, graphs)
    rows = evaluate(run, tables)
    roc_curves(run, tables)
    path = run.config.out_dir / "report.csv"
    write_rows(path, ("measure", "kind", "metric", "mean", "std", "months"), summarize(rows))
    return path
