"""Communication network extraction from forum posts.

Two posts in the same topic tie their authors with a directed edge from the
later poster to the earlier one:

* a *regular* edge when the posts are at most ``delta_o`` positions and
  ``delta_t`` seconds apart, weighted by :func:`decay_weight` of the gap;
* an *initial-post* edge from every later poster to the topic starter,
  weighted ``omega_first`` regardless of distance.

Self-ties are dropped and parallel edges merged by summing their weights.
Snapshots are cumulative: the graph for a cutoff uses every post before it.
"""
from __future__ import annotations

import csv
import json
import math
import re
from dataclasses import asdict, dataclass, field
from pathlib import Path
from typing import Iterable, Sequence

from .ingest import Corpus, ValidationError, month_label

__all__ = [
    "ExtractionParams",
    "CommGraph",
    "decay_weight",
    "extract_snapshot",
    "snapshot_series",
    "write_graph",
    "read_graph",
    "parse_duration",
    "DAY",
    "MONTH",
]

HOUR = 3600
DAY = 86400
WEEK = 7 * DAY
MONTH = 30 * DAY

_UNITS = {"s": 1, "min": 60, "h": HOUR, "d": DAY, "w": WEEK, "mo": MONTH}
_DURATION = re.compile(r"^\s*([0-9]*\.?[0-9]+)\s*([a-z]*)\s*$")


def parse_duration(text: str | int | float) -> float:
    """Seconds in a duration such as ``3600``, ``"7d"``, ``"14 d"`` or ``"1mo"``.

    ``mo`` is a 30-day month.
    """
    if isinstance(text, (int, float)):
        return float(text)
    m = _DURATION.match(str(text).lower())
    if not m or m.group(2) not in ("", *_UNITS):
        raise ValidationError(f"bad duration {text!r}; use seconds or a suffix in {sorted(_UNITS)}")
    return float(m.group(1)) * _UNITS.get(m.group(2), 1)


@dataclass(frozen=True)
class ExtractionParams:
    delta_o: int = 10
    delta_t: float = MONTH
    omega_lower: float = 0.2
    t_lim: float = 7 * DAY
    omega_first: float = 0.5

    def __post_init__(self):
        if isinstance(self.delta_o, bool) or int(self.delta_o) != self.delta_o or self.delta_o < 1:
            raise ValidationError(f"delta_o must be a positive integer, got {self.delta_o!r}")
        if not self.delta_t > 0:
            raise ValidationError(f"delta_t must be positive, got {self.delta_t!r}")
        if not self.t_lim > 0:
            raise ValidationError(f"t_lim must be positive, got {self.t_lim!r}")
        for name in ("omega_lower", "omega_first"):
            value = getattr(self, name)
            if not 0 < value <= 1:
                raise ValidationError(f"{name} must be in (0, 1], got {value!r}")
        object.__setattr__(self, "delta_o", int(self.delta_o))

    def as_dict(self) -> dict:
        return asdict(self)


def decay_weight(gap: float, params: ExtractionParams) -> float:
    """Tie strength of a regular edge whose posts are ``gap`` seconds apart.

    ``omega_lower ** (gap / t_lim)``: 1 at zero gap, falling exponentially to
    ``omega_lower`` at ``t_lim`` and flat afterwards.
    """
    if gap < 0:
        raise ValueError("gap must be nonnegative")
    if gap >= params.t_lim:
        return params.omega_lower
    return max(params.omega_lower, params.omega_lower ** (gap / params.t_lim))


@dataclass(frozen=True)
class CommGraph:
    """Simplified weighted directed user graph for one cutoff.

    ``nodes`` is sorted; ``edges`` maps ``(source, target)`` to the merged
    weight, iterated in sorted key order.
    """

    nodes: tuple[str, ...]
    edges: dict[tuple[str, str], float]
    cutoff: int | None = None
    params: ExtractionParams | None = field(default=None, compare=False)

    @property
    def n_nodes(self) -> int:
        return len(self.nodes)

    @property
    def n_edges(self) -> int:
        return len(self.edges)

    def index(self) -> dict[str, int]:
        return {u: i for i, u in enumerate(self.nodes)}

    def total_weight(self) -> float:
        return math.fsum(self.edges.values())

    def with_nodes(self, extra: Iterable[str]) -> "CommGraph":
        nodes = tuple(sorted(set(self.nodes).union(extra)))
        return CommGraph(nodes, self.edges, self.cutoff, self.params)

    @classmethod
    def from_edges(cls, edges: dict[tuple[str, str], float], nodes: Iterable[str] = (),
                   cutoff: int | None = None) -> "CommGraph":
        """Build a graph directly, e.g. for tests. Nodes of every edge are added."""
        all_nodes = set(nodes)
        for (s, t), w in edges.items():
            if s == t:
                raise ValidationError(f"self-edge on {s!r}")
            if not (w > 0 and math.isfinite(w)):
                raise ValidationError(f"edge {s!r}->{t!r} has non-positive weight {w!r}")
            all_nodes.update((s, t))
        return cls(tuple(sorted(all_nodes)), dict(sorted(edges.items())), cutoff)


def _contributions(corpus: Corpus, params: ExtractionParams):
    """Yield ``(time, source, target, weight)`` for every unmerged edge.

    ``time`` is the timestamp of the later post: the edge belongs to every
    snapshot whose cutoff exceeds it.
    """
    for topic in corpus.topics:
        posts = topic.posts
        first = posts[0]
        for i in range(1, len(posts)):
            p = posts[i]
            if p.author != first.author:
                yield p.timestamp, p.author, first.author, params.omega_first
            for j in range(i - 1, max(0, i - params.delta_o) - 1, -1):
                if j == 0:
                    break
                q = posts[j]
                gap = p.timestamp - q.timestamp
                if gap > params.delta_t:
                    # timestamps are sorted; earlier posts are further away still
                    break
                if p.author != q.author:
                    yield p.timestamp, p.author, q.author, decay_weight(gap, params)


def _merge(terms: dict[tuple[str, str], list[float]]) -> dict[tuple[str, str], float]:
    return {key: math.fsum(terms[key]) for key in sorted(terms)}


def extract_snapshot(corpus: Corpus, params: ExtractionParams, cutoff: int) -> CommGraph:
    """Graph of all posts with timestamp strictly before ``cutoff``."""
    terms: dict[tuple[str, str], list[float]] = {}
    for t, s, d, w in _contributions(corpus, params):
        if t < cutoff:
            terms.setdefault((s, d), []).append(w)
    nodes = tuple(sorted(corpus.active_users(cutoff)))
    return CommGraph(nodes, _merge(terms), cutoff, params)


def snapshot_series(corpus: Corpus, params: ExtractionParams, cutoffs: Sequence[int]) -> list[CommGraph]:
    """One cumulative snapshot per cutoff, sharing a single pass over the posts."""
    contributions = sorted(_contributions(corpus, params), key=lambda c: c[0])
    graphs = []
    terms: dict[tuple[str, str], list[float]] = {}
    pos = 0
    for cutoff in sorted(cutoffs):
        while pos < len(contributions) and contributions[pos][0] < cutoff:
            t, s, d, w = contributions[pos]
            terms.setdefault((s, d), []).append(w)
            pos += 1
        nodes = tuple(sorted(corpus.active_users(cutoff)))
        graphs.append(CommGraph(nodes, _merge(terms), cutoff, params))
    order = {c: i for i, c in enumerate(sorted(cutoffs))}
    return [graphs[order[c]] for c in cutoffs]


# --- dump format --------------------------------------------------------------

def _fmt(x: float) -> str:
    return repr(float(x))  # shortest round-trip form


def write_graph(graph: CommGraph, path: str | Path, extra_meta: dict | None = None) -> None:
    """Write ``path`` (edge CSV) and ``path.meta`` (key=value sidecar).

    Isolated nodes are listed in the sidecar so the node set round-trips.
    """
    path = Path(path)
    lines = ["source,target,weight"]
    lines += [f"{_csv_cell(s)},{_csv_cell(t)},{_fmt(w)}" for (s, t), w in graph.edges.items()]
    path.write_text("\n".join(lines) + "\n", encoding="utf-8")

    meta = {}
    if graph.cutoff is not None:
        meta["cutoff"] = str(graph.cutoff)
        meta["month"] = month_label(graph.cutoff)
    if graph.params is not None:
        meta.update({k: _fmt(v) if isinstance(v, float) else str(v) for k, v in graph.params.as_dict().items()})
    meta["node_count"] = str(graph.n_nodes)
    meta["edge_count"] = str(graph.n_edges)
    meta.update(extra_meta or {})
    touched = {u for e in graph.edges for u in e}
    meta["isolated"] = json.dumps([u for u in graph.nodes if u not in touched], ensure_ascii=False)
    meta_path = path.with_name(path.name + ".meta")
    meta_path.write_text("".join(f"{k}={v}\n" for k, v in meta.items()), encoding="utf-8")


def _csv_cell(value: str) -> str:
    if any(c in value for c in ',"\n\r'):
        return '"' + value.replace('"', '""') + '"'
    return value


def read_meta(path: str | Path) -> dict[str, str]:
    meta = {}
    for line in Path(path).read_text(encoding="utf-8").splitlines():
        if not line.strip() or line.lstrip().startswith("#"):
            continue
        key, _, value = line.partition("=")
        meta[key.strip()] = value.strip()
    return meta


def read_graph(path: str | Path) -> CommGraph:
    path = Path(path)
    edges = {}
    with path.open(encoding="utf-8", newline="") as fh:
        reader = csv.DictReader(fh)
        for row in reader:
            edges[(row["source"], row["target"])] = float(row["weight"])
    meta_path = path.with_name(path.name + ".meta")
    nodes: set[str] = set()
    cutoff = params = None
    if meta_path.exists():
        meta = read_meta(meta_path)
        nodes.update(json.loads(meta.get("isolated") or "[]"))
        cutoff = int(meta["cutoff"]) if "cutoff" in meta else None
        if "delta_o" in meta:
            params = ExtractionParams(
                int(meta["delta_o"]), float(meta["delta_t"]), float(meta["omega_lower"]),
                float(meta["t_lim"]), float(meta["omega_first"]),
            )
    g = CommGraph.from_edges(edges, nodes, cutoff)
    return CommGraph(g.nodes, g.edges, cutoff, params)
