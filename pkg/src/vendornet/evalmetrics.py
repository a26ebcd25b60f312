"""Evaluation of measure rankings against vendor sales.

All percentages are reals in ``[0, 100]``. Rankings order users by
descending score with ties broken by ascending user id, so every cut is
deterministic.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction
from typing import Iterable, Mapping, NamedTuple, Sequence

import numpy as np

__all__ = [
    "UndefinedMetricError",
    "DiffScore",
    "VendorPercentiles",
    "RocPoint",
    "RocCurve",
    "minmax_normalize",
    "diff_scores",
    "vendor_percentiles",
    "rank_cut",
    "vendor_recall",
    "overlap",
    "post_activity_recall",
    "sales_recall",
    "roc_sweep",
    "lowest_value_fraction",
    "random_inclusion_prob",
    "cubic_trend",
]


class UndefinedMetricError(ValueError):
    """The metric's denominator is zero for these inputs."""


def _ranking(scores: Mapping[str, float]) -> list[str]:
    return sorted(scores, key=lambda u: (-scores[u], u))


def minmax_normalize(scores: Mapping[str, float]) -> dict[str, float]:
    """Rescale to ``[0, 1]``; a constant table maps to all zeros."""
    if not scores:
        raise ValueError("cannot normalise an empty score table")
    lo = min(scores.values())
    hi = max(scores.values())
    span = hi - lo
    if span == 0:
        return dict.fromkeys(scores, 0.0)
    return {u: (s - lo) / span for u, s in scores.items()}


class DiffScore(NamedTuple):
    absolute: float
    relative: float | None  # None when group b has zero mean


def diff_scores(group_a: Iterable[str], group_b: Iterable[str], normalized: Mapping[str, float]) -> DiffScore:
    """Difference of mean normalised score between two user groups.

    ``relative`` divides the absolute difference by group b's mean and is
    ``None`` when that mean is zero.
    """
    a = list(group_a)
    b = list(group_b)
    if not a or not b:
        raise ValueError("difference scores need two nonempty groups")
    mean_a = math.fsum(normalized[u] for u in a) / len(a)
    mean_b = math.fsum(normalized[u] for u in b) / len(b)
    absolute = mean_a - mean_b
    return DiffScore(absolute, absolute / mean_b if mean_b != 0 else None)


@dataclass(frozen=True)
class VendorPercentiles:
    """Five success groups of active vendors (best first) and the non-vendors."""

    kind: str
    groups: tuple[tuple[str, ...], ...]
    non_vendors: frozenset[str]

    @property
    def top(self) -> tuple[str, ...]:
        return self.groups[0]

    @property
    def sub_top(self) -> tuple[str, ...]:
        return self.groups[1]

    @property
    def vendors(self) -> tuple[str, ...]:
        return tuple(u for g in self.groups for u in g)


def vendor_percentiles(sales: Mapping[str, float], kind: str = "current",
                       active_users: Iterable[str] | None = None, n_groups: int = 5) -> VendorPercentiles:
    """Split vendors into ``n_groups`` near-equal groups by descending sales.

    ``sales`` maps each active vendor to its sales of the given kind. Ties go
    to the smaller user id; when the count is not divisible by ``n_groups``
    the leading groups get one extra member. Active users absent from
    ``sales`` make up the non-vendor set.
    """
    ordered = sorted(sales, key=lambda u: (-sales[u], u))
    base, extra = divmod(len(ordered), n_groups)
    groups = []
    start = 0
    for i in range(n_groups):
        size = base + (1 if i < extra else 0)
        groups.append(tuple(ordered[start:start + size]))
        start += size
    non_vendors = frozenset(active_users or ()) - set(ordered)
    return VendorPercentiles(kind, tuple(groups), non_vendors)


def rank_cut(scores: Mapping[str, float], fraction: float) -> list[str]:
    """The top ``ceil(fraction * n)`` users, in rank order."""
    if not 0 < fraction <= 1:
        raise ValueError(f"fraction must be in (0, 1], got {fraction!r}")
    k = math.ceil(fraction * len(scores) - 1e-12)
    return _ranking(scores)[:k]


def vendor_recall(top_vendors: Iterable[str], cut: Iterable[str], denominator: str = "vendors") -> float:
    """Percentage of the top vendors found in the cut.

    ``denominator="users"`` divides by the cut size instead of the number of
    top vendors.
    """
    tv = set(top_vendors)
    tu = set(cut)
    if denominator == "vendors":
        if not tv:
            raise UndefinedMetricError("no top vendors")
        return 100.0 * len(tv & tu) / len(tv)
    if denominator == "users":
        if not tu:
            raise UndefinedMetricError("empty rank cut")
        return 100.0 * len(tv & tu) / len(tu)
    raise ValueError(f"denominator must be 'vendors' or 'users', got {denominator!r}")


def overlap(top_vendors: Iterable[str], cut_i: Iterable[str], cut_j: Iterable[str]) -> float:
    """Percentage of top vendors found by cut ``i`` that cut ``j`` also finds."""
    found_i = set(top_vendors) & set(cut_i)
    if not found_i:
        raise UndefinedMetricError("cut i finds no top vendors")
    return 100.0 * len(found_i & set(cut_j)) / len(found_i)


def _weighted_recall(top_vendors, cut, weights: Mapping[str, float]) -> float:
    tv = sorted(set(top_vendors))
    tu = set(cut)
    total = math.fsum(weights.get(u, 0.0) for u in tv)
    if total <= 0:
        raise UndefinedMetricError("top vendors have zero total weight")
    found = math.fsum(weights.get(u, 0.0) for u in tv if u in tu)
    return 100.0 * found / total


def post_activity_recall(top_vendors: Iterable[str], cut: Iterable[str], post_counts: Mapping[str, float]) -> float:
    """Share of the top vendors' posts written by those in the cut."""
    return _weighted_recall(top_vendors, cut, post_counts)


def sales_recall(top_vendors: Iterable[str], cut: Iterable[str], sales: Mapping[str, float]) -> float:
    """Share of the top vendors' sales made by those in the cut."""
    return _weighted_recall(top_vendors, cut, sales)


class RocPoint(NamedTuple):
    threshold: float
    tpr: float
    fpr: float


class RocCurve(NamedTuple):
    points: list[RocPoint]
    auc: float


def roc_sweep(scores: Mapping[str, float], positive_set: Iterable[str], step: float = 0.05) -> RocCurve:
    """ROC points for rank cuts at every multiple of ``step`` from 0 to 1.

    The area under the curve is the trapezoid rule over the points' FPR axis.
    """
    n_steps = round(1 / step)
    if n_steps < 1 or not math.isclose(n_steps * step, 1.0, abs_tol=1e-9):
        raise ValueError(f"step must divide 1, got {step!r}")
    positives = set(positive_set) & set(scores)
    n_pos = len(positives)
    n_neg = len(scores) - n_pos
    if n_pos == 0 or n_neg == 0:
        raise ValueError("ROC needs both positive and negative users")
    ranking = _ranking(scores)
    n = len(ranking)
    hits = np.concatenate([[0], np.cumsum([u in positives for u in ranking])])
    points = []
    for i in range(n_steps + 1):
        f = i / n_steps
        k = math.ceil(f * n - 1e-12)
        tp = int(hits[k])
        points.append(RocPoint(f, tp / n_pos, (k - tp) / n_neg))
    fpr = [p.fpr for p in points]
    tpr = [p.tpr for p in points]
    auc = math.fsum((fpr[i + 1] - fpr[i]) * (tpr[i + 1] + tpr[i]) / 2 for i in range(len(points) - 1))
    return RocCurve(points, auc)


def lowest_value_fraction(scores: Mapping[str, float]) -> float:
    """Percentage of users tied at the minimum score."""
    if not scores:
        raise ValueError("empty score table")
    lo = min(scores.values())
    return 100.0 * sum(1 for s in scores.values() if s == lo) / len(scores)


def random_inclusion_prob(population: int, marked: int, drawn: int, at_least: int, *,
                          exact: bool = False) -> float | Fraction:
    """Hypergeometric tail ``P(X >= at_least)``.

    ``X`` counts marked items among ``drawn`` items taken without replacement
    from ``population`` items of which ``marked`` are marked. The tail is
    summed in exact rational arithmetic; ``exact=True`` returns the Fraction.
    """
    n, K, k, m = population, marked, drawn, at_least
    for name, v in (("population", n), ("marked", K), ("drawn", k), ("at_least", m)):
        if isinstance(v, bool) or int(v) != v or v < 0:
            raise ValueError(f"{name} must be a nonnegative integer, got {v!r}")
    if not (m <= k <= n and K <= n):
        raise ValueError(f"need at_least <= drawn <= population and marked <= population, got {(n, K, k, m)}")
    total = math.comb(n, k)
    hits = sum(math.comb(K, j) * math.comb(n - K, k - j) for j in range(m, min(k, K) + 1))
    p = Fraction(hits, total)
    return p if exact else float(p)


def cubic_trend(points: Sequence[tuple[float, float]]) -> np.ndarray:
    """Least-squares cubic through ``(x, y)`` points.

    Returns coefficients lowest degree first: ``y ~ c0 + c1 x + c2 x^2 + c3 x^3``.
    """
    xs = np.asarray([p[0] for p in points], dtype=float)
    ys = np.asarray([p[1] for p in points], dtype=float)
    if len(np.unique(xs)) < 4:
        raise ValueError("a cubic trend needs at least 4 distinct x values")
    center = xs.mean()
    scale = np.abs(xs - center).max()
    # fit on a centred, scaled axis for conditioning, then expand back
    t = (xs - center) / scale
    coef_t, *_ = np.linalg.lstsq(np.vander(t, 4, increasing=True), ys, rcond=None)
    poly = np.polynomial.Polynomial(coef_t, domain=[center - scale, center + scale], window=[-1, 1])
    coef = poly.convert().coef
    return np.pad(coef, (0, 4 - len(coef)))  # convert() trims trailing zeros
