"""scikit-learn style wrappers around extraction and scoring.

The wrappers expose the extraction parameters through ``get_params`` /
``set_params`` so parameter sweeps can ``clone`` and reconfigure them, and
chain with :func:`sklearn.pipeline.make_pipeline`::

    pipe = make_pipeline(NetworkExtractor(delta_o=5), CentralityScorer("betweenness"))
    tables = pipe.fit_transform(corpus)
"""
from __future__ import annotations

from typing import Iterable, Sequence

from sklearn.base import BaseEstimator, TransformerMixin
from sklearn.exceptions import NotFittedError

from .extraction import DAY, MONTH, CommGraph, ExtractionParams, snapshot_series
from .ingest import Corpus, Post, ValidationError
from .measures import CENTRALITIES, INDICATORS, ScoreTable, compute_measure

__all__ = ["NetworkExtractor", "CentralityScorer", "ActivityScorer", "check_corpus", "check_graphs", "check_fraction"]


def check_corpus(X) -> Corpus:
    """Accept a :class:`Corpus` or an iterable of :class:`Post`."""
    if isinstance(X, Corpus):
        return X
    posts = list(X)
    if not all(isinstance(p, Post) for p in posts):
        raise ValidationError("expected a Corpus or an iterable of Post")
    return Corpus(posts)


def check_graphs(X) -> list[CommGraph]:
    if isinstance(X, CommGraph):
        return [X]
    graphs = list(X)
    if not all(isinstance(g, CommGraph) for g in graphs):
        raise ValidationError("expected a CommGraph or a sequence of CommGraph")
    return graphs


def check_fraction(fraction: float) -> float:
    if not 0 < fraction <= 1:
        raise ValidationError(f"fraction must be in (0, 1], got {fraction!r}")
    return float(fraction)


class NetworkExtractor(TransformerMixin, BaseEstimator):
    """Turn a post corpus into cumulative monthly communication graphs.

    Parameters
    ----------
    delta_o, delta_t, omega_lower, t_lim, omega_first
        Extraction parameters; durations in seconds.
    cutoffs : sequence of int, optional
        Snapshot cutoffs. Defaults to every month the corpus spans.
    """

    def __init__(self, delta_o=10, delta_t=MONTH, omega_lower=0.2, t_lim=7 * DAY,
                 omega_first=0.5, cutoffs=None):
        self.delta_o = delta_o
        self.delta_t = delta_t
        self.omega_lower = omega_lower
        self.t_lim = t_lim
        self.omega_first = omega_first
        self.cutoffs = cutoffs

    def _extraction_params(self) -> ExtractionParams:
        return ExtractionParams(self.delta_o, float(self.delta_t), float(self.omega_lower),
                                float(self.t_lim), float(self.omega_first))

    def fit(self, X, y=None):
        corpus = check_corpus(X)
        self.params_ = self._extraction_params()
        self.cutoffs_ = list(self.cutoffs) if self.cutoffs is not None else corpus.months()
        return self

    def transform(self, X) -> list[CommGraph]:
        if not hasattr(self, "params_"):
            raise NotFittedError("NetworkExtractor is not fitted yet")
        return snapshot_series(check_corpus(X), self.params_, self.cutoffs_)


class CentralityScorer(TransformerMixin, BaseEstimator):
    """Score every node of each graph with one centrality."""

    def __init__(self, measure="betweenness", damping=0.85, tolerance=1e-12, max_iters=1000):
        self.measure = measure
        self.damping = damping
        self.tolerance = tolerance
        self.max_iters = max_iters

    def fit(self, X=None, y=None):
        if self.measure not in CENTRALITIES:
            raise ValidationError(f"unknown centrality {self.measure!r}; valid: {', '.join(CENTRALITIES)}")
        return self

    def transform(self, X) -> list[ScoreTable]:
        self.fit()
        return [compute_measure(self.measure, graph=g, damping=self.damping, tolerance=self.tolerance,
                                max_iters=self.max_iters) for g in check_graphs(X)]


class ActivityScorer(TransformerMixin, BaseEstimator):
    """Score active users with a forum activity indicator at each cutoff."""

    def __init__(self, indicator="topic_engagement", cutoffs=None):
        self.indicator = indicator
        self.cutoffs = cutoffs

    def fit(self, X, y=None):
        if self.indicator not in INDICATORS:
            raise ValidationError(f"unknown indicator {self.indicator!r}; valid: {', '.join(INDICATORS)}")
        corpus = check_corpus(X)
        self.cutoffs_ = list(self.cutoffs) if self.cutoffs is not None else corpus.months()
        return self

    def transform(self, X) -> list[ScoreTable]:
        if not hasattr(self, "cutoffs_"):
            raise NotFittedError("ActivityScorer is not fitted yet")
        corpus = check_corpus(X)
        return [INDICATORS[self.indicator](corpus, c) for c in self.cutoffs_]


def score_all(graphs: Sequence[CommGraph], corpus: Corpus, measures: Iterable[str], **pagerank_opts):
    """``{(measure, cutoff): ScoreTable}`` for every measure and graph cutoff."""
    out = {}
    for m in measures:
        for g in graphs:
            out[m, g.cutoff] = compute_measure(m, graph=g, corpus=corpus, cutoff=g.cutoff, **pagerank_opts)
    return out
