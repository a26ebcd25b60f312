"""Network centralities and forum activity indicators.

Centralities work on a :class:`~vendornet.extraction.CommGraph`:

``in_degree``
    number of distinct in-neighbours (weights ignored).
``harmonic_closeness``
    sum of ``1/d`` over all other nodes, with ``d`` the unweighted shortest
    path length following edges in either direction; unreachable nodes add 0.
``betweenness``
    directed weighted betweenness (Brandes), edge length ``1/weight``,
    unnormalised.
``pagerank``
    weighted directed PageRank; dangling nodes teleport uniformly.

Activity indicators (``post_activity``, ``topics_started``,
``topic_engagement``) are computed from the post corpus alone.
"""
from __future__ import annotations

import csv
import heapq
import math
from dataclasses import dataclass
from pathlib import Path
from typing import Callable

import numpy as np
import scipy.sparse as sp
from numba import njit

from .extraction import CommGraph
from .ingest import Corpus, ValidationError

__all__ = [
    "ScoreTable",
    "ConvergenceError",
    "in_degree",
    "harmonic_closeness",
    "betweenness",
    "pagerank",
    "post_activity",
    "topics_started",
    "topic_engagement",
    "CENTRALITIES",
    "INDICATORS",
    "MEASURES",
    "compute_measure",
    "write_scores",
    "read_scores",
]

# Accumulated path lengths closer than this are treated as equal.
PATH_TIE_TOL = 1e-12


class ConvergenceError(RuntimeError):
    def __init__(self, iterations: int, residual: float):
        self.iterations = iterations
        self.residual = residual
        super().__init__(f"no convergence after {iterations} iterations (L1 residual {residual:.3e})")


@dataclass(frozen=True)
class ScoreTable:
    """Per-user values of one measure at one cutoff."""

    measure: str
    scores: dict[str, float]
    cutoff: int | None = None

    def __len__(self) -> int:
        return len(self.scores)

    def __getitem__(self, user: str) -> float:
        return self.scores[user]

    @property
    def users(self) -> list[str]:
        return sorted(self.scores)

    def ranked(self) -> list[str]:
        """Users by descending score; ties broken by ascending user id."""
        return sorted(self.scores, key=lambda u: (-self.scores[u], u))

    def restrict(self, users) -> "ScoreTable":
        return ScoreTable(self.measure, {u: self.scores[u] for u in users}, self.cutoff)


# --- sparse layout --------------------------------------------------------------

def _csr(graph: CommGraph, reverse: bool = False):
    """CSR arrays of the out-adjacency (in-adjacency if ``reverse``) with 1/w lengths."""
    idx = graph.index()
    n = len(graph.nodes)
    src = np.fromiter((idx[s] for s, _ in graph.edges), dtype=np.int64, count=graph.n_edges)
    dst = np.fromiter((idx[t] for _, t in graph.edges), dtype=np.int64, count=graph.n_edges)
    w = np.fromiter(graph.edges.values(), dtype=np.float64, count=graph.n_edges)
    if reverse:
        src, dst = dst, src
    order = np.lexsort((dst, src))
    src, dst, w = src[order], dst[order], w[order]
    indptr = np.zeros(n + 1, dtype=np.int64)
    np.add.at(indptr, src + 1, 1)
    np.cumsum(indptr, out=indptr)
    return indptr, dst, 1.0 / w


def _undirected_csr(graph: CommGraph):
    idx = graph.index()
    n = len(graph.nodes)
    nbrs: list[set[int]] = [set() for _ in range(n)]
    for s, t in graph.edges:
        a, b = idx[s], idx[t]
        nbrs[a].add(b)
        nbrs[b].add(a)
    indptr = np.zeros(n + 1, dtype=np.int64)
    indptr[1:] = np.cumsum([len(x) for x in nbrs])
    indices = np.fromiter((j for x in nbrs for j in sorted(x)), dtype=np.int64, count=int(indptr[-1]))
    return indptr, indices


# --- kernels ----------------------------------------------------------------------

@njit(cache=True)
def _harmonic_kernel(n, indptr, indices):
    out = np.zeros(n)
    dist = np.empty(n, dtype=np.int64)
    queue = np.empty(n, dtype=np.int64)
    level_count = np.zeros(n + 1, dtype=np.int64)
    for s in range(n):
        dist[:] = -1
        level_count[:] = 0
        dist[s] = 0
        queue[0] = s
        head, tail = 0, 1
        while head < tail:
            v = queue[head]
            head += 1
            for k in range(indptr[v], indptr[v + 1]):
                w = indices[k]
                if dist[w] < 0:
                    dist[w] = dist[v] + 1
                    level_count[dist[w]] += 1
                    queue[tail] = w
                    tail += 1
        total = 0.0
        for d in range(1, n + 1):
            if level_count[d] == 0:
                break
            total += level_count[d] / d
        out[s] = total
    return out


@njit(cache=True)
def _dijkstra(s, n, indptr, indices, lengths, dist, order):
    """Distances from ``s``; fills ``order`` with settled nodes, returns their count."""
    for i in range(n):
        dist[i] = np.inf
    done = np.zeros(n, dtype=np.bool_)
    dist[s] = 0.0
    heap = [(0.0, s)]
    count = 0
    while len(heap) > 0:
        d, v = heapq.heappop(heap)
        if done[v]:
            continue
        done[v] = True
        order[count] = v
        count += 1
        for k in range(indptr[v], indptr[v + 1]):
            w = indices[k]
            alt = d + lengths[k]
            if alt < dist[w]:
                dist[w] = alt
                heapq.heappush(heap, (alt, w))
    return count


@njit(cache=True)
def _brandes_kernel(n, indptr, indices, lengths, rindptr, rindices, rlengths, tol):
    bc = np.zeros(n)
    dist = np.empty(n)
    order = np.empty(n, dtype=np.int64)
    sigma = np.zeros(n)
    delta = np.zeros(n)
    for s in range(n):
        count = _dijkstra(s, n, indptr, indices, lengths, dist, order)
        sigma[:] = 0.0
        delta[:] = 0.0
        sigma[s] = 1.0
        # path counts over tight in-edges, in settling order
        for i in range(1, count):
            w = order[i]
            acc = 0.0
            for k in range(rindptr[w], rindptr[w + 1]):
                v = rindices[k]
                if abs(dist[v] + rlengths[k] - dist[w]) <= tol:
                    acc += sigma[v]
            sigma[w] = acc
        # dependency accumulation in reverse settling order
        for i in range(count - 1, 0, -1):
            w = order[i]
            coeff = (1.0 + delta[w]) / sigma[w]
            for k in range(rindptr[w], rindptr[w + 1]):
                v = rindices[k]
                if abs(dist[v] + rlengths[k] - dist[w]) <= tol:
                    delta[v] += sigma[v] * coeff
            bc[w] += delta[w]
    return bc


# --- centralities ---------------------------------------------------------------

def in_degree(graph: CommGraph) -> ScoreTable:
    counts = dict.fromkeys(graph.nodes, 0)
    for _, t in graph.edges:
        counts[t] += 1
    return ScoreTable("in_degree", {u: float(c) for u, c in counts.items()}, graph.cutoff)


def harmonic_closeness(graph: CommGraph) -> ScoreTable:
    """Unweighted bidirectional harmonic closeness.

    Reciprocal distances are summed per BFS level (count / level, nearest level
    first), so the result does not depend on adjacency order.
    """
    n = graph.n_nodes
    if n == 0:
        return ScoreTable("harmonic_closeness", {}, graph.cutoff)
    indptr, indices = _undirected_csr(graph)
    values = _harmonic_kernel(n, indptr, indices)
    return ScoreTable("harmonic_closeness", dict(zip(graph.nodes, values.tolist())), graph.cutoff)


def betweenness(graph: CommGraph, tol: float = PATH_TIE_TOL) -> ScoreTable:
    """Directed weighted betweenness with edge lengths ``1/weight``.

    ``bc(u) = sum over ordered pairs (v, w), v != u != w, of sigma_vuw / sigma_vw``.
    Two accumulated path lengths within ``tol`` of each other count as equally
    short.
    """
    n = graph.n_nodes
    if n == 0:
        return ScoreTable("betweenness", {}, graph.cutoff)
    indptr, indices, lengths = _csr(graph)
    rindptr, rindices, rlengths = _csr(graph, reverse=True)
    values = _brandes_kernel(n, indptr, indices, lengths, rindptr, rindices, rlengths, tol)
    return ScoreTable("betweenness", dict(zip(graph.nodes, values.tolist())), graph.cutoff)


def pagerank(graph: CommGraph, damping: float = 0.85, tolerance: float = 1e-12,
             max_iters: int = 1000) -> ScoreTable:
    """Weighted directed PageRank by power iteration.

    Stops once the L1 change between iterates drops below ``tolerance``;
    raises :class:`ConvergenceError` if that takes more than ``max_iters``.
    """
    if not 0 < damping < 1:
        raise ValidationError(f"damping must be in (0, 1), got {damping!r}")
    n = graph.n_nodes
    if n == 0:
        return ScoreTable("pagerank", {}, graph.cutoff)
    idx = graph.index()
    rows = np.fromiter((idx[s] for s, _ in graph.edges), dtype=np.int64, count=graph.n_edges)
    cols = np.fromiter((idx[t] for _, t in graph.edges), dtype=np.int64, count=graph.n_edges)
    w = np.fromiter(graph.edges.values(), dtype=np.float64, count=graph.n_edges)
    out_weight = np.bincount(rows, weights=w, minlength=n)
    dangling = out_weight == 0
    # transposed transition matrix: column s holds the out-distribution of s
    pt = sp.csr_matrix((w / out_weight[rows], (cols, rows)), shape=(n, n))

    x = np.full(n, 1.0 / n)
    residual = math.inf
    for _ in range(max_iters):
        leaked = x[dangling].sum()
        x_new = damping * (pt @ x) + (damping * leaked + (1.0 - damping)) / n
        x_new /= x_new.sum()
        residual = np.abs(x_new - x).sum()
        x = x_new
        if residual < tolerance:
            return ScoreTable("pagerank", dict(zip(graph.nodes, x.tolist())), graph.cutoff)
    raise ConvergenceError(max_iters, residual)


# --- activity indicators ----------------------------------------------------------

def post_activity(corpus: Corpus, cutoff: int) -> ScoreTable:
    scores = {u: float(corpus.post_count(u, cutoff)) for u in sorted(corpus.active_users(cutoff))}
    return ScoreTable("post_activity", scores, cutoff)


def topics_started(corpus: Corpus, cutoff: int) -> ScoreTable:
    scores = dict.fromkeys(sorted(corpus.active_users(cutoff)), 0.0)
    for topic in corpus.topics:
        if topic.starter.timestamp < cutoff:
            scores[topic.starter.author] += 1.0
    return ScoreTable("topics_started", scores, cutoff)


def topic_engagement(corpus: Corpus, cutoff: int) -> ScoreTable:
    """Posts after the initial one, summed over the topics a user started.

    Every later post counts, including the starter's own follow-ups.
    """
    scores = dict.fromkeys(sorted(corpus.active_users(cutoff)), 0.0)
    for topic in corpus.topics:
        if topic.starter.timestamp < cutoff:
            replies = sum(1 for p in topic.posts[1:] if p.timestamp < cutoff)
            scores[topic.starter.author] += replies
    return ScoreTable("topic_engagement", scores, cutoff)


CENTRALITIES: dict[str, Callable[..., ScoreTable]] = {
    "in_degree": in_degree,
    "harmonic_closeness": harmonic_closeness,
    "betweenness": betweenness,
    "pagerank": pagerank,
}
INDICATORS: dict[str, Callable[[Corpus, int], ScoreTable]] = {
    "post_activity": post_activity,
    "topics_started": topics_started,
    "topic_engagement": topic_engagement,
}
MEASURES = (*CENTRALITIES, *INDICATORS)


def check_measures(names) -> list[str]:
    names = list(names)
    unknown = [m for m in names if m not in MEASURES]
    if unknown:
        raise ValidationError(f"unknown measure(s) {unknown}; valid names: {', '.join(MEASURES)}")
    if not names:
        raise ValidationError("no measures requested")
    return names


def compute_measure(name: str, *, graph: CommGraph | None = None, corpus: Corpus | None = None,
                    cutoff: int | None = None, damping: float = 0.85, tolerance: float = 1e-12,
                    max_iters: int = 1000) -> ScoreTable:
    check_measures([name])
    if name in INDICATORS:
        if corpus is None or cutoff is None:
            raise ValidationError(f"{name} needs a corpus and a cutoff")
        return INDICATORS[name](corpus, cutoff)
    if graph is None:
        raise ValidationError(f"{name} needs a graph")
    if name == "pagerank":
        return pagerank(graph, damping, tolerance, max_iters)
    return CENTRALITIES[name](graph)


# --- dump format ------------------------------------------------------------------

def write_scores(table: ScoreTable, path: str | Path) -> None:
    with Path(path).open("w", encoding="utf-8", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(("user", "score"))
        for user in table.users:
            writer.writerow((user, repr(float(table.scores[user]))))


def read_scores(path: str | Path, measure: str | None = None, cutoff: int | None = None) -> ScoreTable:
    path = Path(path)
    with path.open(encoding="utf-8", newline="") as fh:
        scores = {row["user"]: float(row["score"]) for row in csv.DictReader(fh)}
    if measure is None:
        measure = path.stem.rsplit("-", 2)[0]
    return ScoreTable(measure, scores, cutoff)
