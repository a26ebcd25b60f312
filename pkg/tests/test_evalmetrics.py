import math
import random
from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from oracles import enumerate_hypergeom
from vendornet.evalmetrics import (
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
from vendornet.extraction import CommGraph
from vendornet.measures import betweenness


def test_minmax():
    assert minmax_normalize({"a": 0, "b": 5, "c": 10}) == {"a": 0, "b": 0.5, "c": 1}
    assert minmax_normalize({"a": 3, "b": 3}) == {"a": 0, "b": 0}
    assert minmax_normalize({"a": 2, "b": 4, "c": 8}) == pytest.approx({"a": 0, "b": 1 / 3, "c": 1})


def test_diff_scores():
    norm = {"a1": 0.6, "a2": 0.6, "b1": 0.2, "b2": 0.2, "z": 0.0}
    d = diff_scores(["a1", "a2"], ["b1", "b2"], norm)
    assert d.absolute == pytest.approx(0.4) and d.relative == pytest.approx(2.0)
    same = diff_scores(["a1"], ["a1"], norm)
    assert same == (0.0, 0.0)
    flat = diff_scores(["a1"], ["z"], norm)
    assert flat.absolute == pytest.approx(0.6) and flat.relative is None


def test_percentiles():
    sales = {f"v{i}": float(i) for i in range(10)}
    vp = vendor_percentiles(sales, active_users=list(sales) + ["n1"])
    assert vp.top == ("v9", "v8")
    assert vp.non_vendors == {"n1"}
    equal = vendor_percentiles({u: 1.0 for u in ["c", "a", "b", "e", "d"]})
    assert equal.groups == (("a",), ("b",), ("c",), ("d",), ("e",))
    four = vendor_percentiles({u: 1.0 for u in "abcd"})
    assert [len(g) for g in four.groups] == [1, 1, 1, 1, 0]
    seven = vendor_percentiles({f"v{i}": float(i) for i in range(7)})
    assert [len(g) for g in seven.groups] == [2, 2, 1, 1, 1]


def test_rank_cut():
    scores = {f"u{i}": float(i) for i in range(10)}
    assert rank_cut(scores, 0.2) == ["u9", "u8"]
    assert rank_cut({"b": 1, "a": 1, "c": 0}, 1 / 3) == ["a"]
    assert sorted(rank_cut(scores, 1.0)) == sorted(scores)
    with pytest.raises(ValueError):
        rank_cut(scores, 0)


def test_vendor_recall():
    assert vendor_recall("abcd", "abxy") == 50.0
    assert vendor_recall("ab", "abc") == 100.0
    assert vendor_recall("ab", "xy") == 0.0
    assert vendor_recall("abcd", "abxy", denominator="users") == 50.0
    assert vendor_recall("ab", "abxyzw", denominator="users") == pytest.approx(100 / 3)
    with pytest.raises(UndefinedMetricError):
        vendor_recall([], "ab")


def test_overlap():
    assert overlap("abc", "abx", "bcx") == 50.0
    assert overlap("abc", "abx", "abx") == 100.0
    assert overlap("abc", "ab", "abc") == 100.0
    assert overlap("abc", "abc", "ab") == pytest.approx(200 / 3)
    with pytest.raises(UndefinedMetricError):
        overlap("abc", "xy", "ab")


def test_weighted_recalls():
    assert post_activity_recall(["p", "q"], ["p"], {"p": 90, "q": 10}) == 90.0
    assert post_activity_recall(["p", "q"], ["p", "q"], {"p": 90, "q": 10}) == 100.0
    assert post_activity_recall(["p", "q"], [], {"p": 90, "q": 10}) == 0.0
    assert sales_recall(["p", "q"], ["q"], {"p": 100, "q": 300}) == 75.0
    assert sales_recall(["p", "q"], ["q", "p"], {"p": 100, "q": 300}) == 100.0
    assert sales_recall("abcd", "ab", dict.fromkeys("abcd", 5.0)) == 50.0
    with pytest.raises(UndefinedMetricError):
        sales_recall(["p"], ["p"], {"p": 0.0})


def test_sales_recall_exceeds_vendor_recall_for_big_sellers():
    sales = {"a": 500.0, "b": 300.0, "c": 10.0, "d": 5.0}
    assert sales_recall(sales, ["a", "b"], sales) > vendor_recall(sales, ["a", "b"])


def test_roc_perfect_and_endpoints():
    scores = {f"p{i}": 10.0 + i for i in range(5)} | {f"n{i}": i / 10 for i in range(15)}
    curve = roc_sweep(scores, {f"p{i}" for i in range(5)})
    assert curve.auc == 1.0
    assert curve.points[0][1:] == (0.0, 0.0)
    assert curve.points[-1][1:] == (1.0, 1.0)
    assert len(curve.points) == 21


def test_roc_random_scores_near_half():
    rng = random.Random(11)
    scores = {f"u{i}": rng.random() for i in range(4000)}
    positives = {u for u in scores if rng.random() < 0.2}
    assert abs(roc_sweep(scores, positives).auc - 0.5) <= 0.05


def test_roc_rejects_bad_step():
    with pytest.raises(ValueError):
        roc_sweep({"a": 1, "b": 0}, {"a"}, 0.3)


def test_lowest_value_fraction():
    assert lowest_value_fraction({"a": 0, "b": 0, "c": 0, "d": 1}) == 75.0
    assert lowest_value_fraction({"a": 1, "b": 2, "c": 3, "d": 4}) == 25.0
    n = 9
    star = CommGraph.from_edges({(f"l{i}", "hub"): 1.0 for i in range(n - 1)}
                                | {("hub", f"l{i}"): 1.0 for i in range(n - 1)})
    assert lowest_value_fraction(betweenness(star).scores) == pytest.approx(100 * (n - 1) / n)


def test_hypergeometric_examples():
    assert random_inclusion_prob(5, 2, 2, 2) == pytest.approx(0.1)
    assert random_inclusion_prob(5, 2, 2, 2, exact=True) == Fraction(1, 10)
    assert random_inclusion_prob(30, 7, 10, 0) == 1.0
    assert random_inclusion_prob(12, 12, 5, 5) == 1.0
    with pytest.raises(ValueError):
        random_inclusion_prob(5, 6, 2, 1)


def test_hypergeometric_against_enumeration_small():
    for n in range(0, 8):
        for K in range(n + 1):
            for k in range(n + 1):
                counts = enumerate_hypergeom(n, K, k)
                total = sum(counts.values())
                for m in range(k + 1):
                    want = Fraction(sum(c for x, c in counts.items() if x >= m), total)
                    assert random_inclusion_prob(n, K, k, m, exact=True) == want


def test_hypergeometric_pmf_sums_to_one():
    n, K, k = 40, 12, 15
    pmf = [random_inclusion_prob(n, K, k, m) - (random_inclusion_prob(n, K, k, m + 1) if m < k else 0.0)
           for m in range(k + 1)]
    assert math.fsum(pmf) == pytest.approx(1.0, abs=1e-12)


def test_cubic_exact_and_constant():
    pts = [(x, 2 * x ** 3 - x + 5) for x in range(8)]
    assert cubic_trend(pts) == pytest.approx([5, -1, 0, 2], abs=1e-9)
    coef = cubic_trend([(x, 3.0) for x in range(6)])
    assert len(coef) == 4
    assert coef == pytest.approx([3, 0, 0, 0], abs=1e-9)
    with pytest.raises(ValueError):
        cubic_trend([(0, 1), (1, 2), (2, 3)])


def test_cubic_matches_normal_equations():
    rng = np.random.default_rng(4)
    xs = np.arange(15, dtype=float)
    ys = 0.3 * xs ** 3 - 2 * xs ** 2 + xs + rng.normal(0, 5, xs.size)
    A = np.vander(xs, 4, increasing=True)
    ref = np.linalg.solve(A.T @ A, A.T @ ys)
    assert cubic_trend(list(zip(xs, ys))) == pytest.approx(ref, abs=1e-8)


# --- properties -------------------------------------------------------------------------

score_tables = st.dictionaries(st.sampled_from([f"u{i:02d}" for i in range(30)]),
                               st.integers(0, 6).map(float), min_size=1)


@given(score_tables, st.floats(0.01, 1.0))
def test_rank_cut_invariant_under_normalisation(scores, f):
    assert rank_cut(scores, f) == rank_cut(minmax_normalize(scores), f)
    assert len(rank_cut(scores, f)) == math.ceil(f * len(scores) - 1e-12)


@given(score_tables, st.floats(0.01, 1.0), st.floats(0.01, 1.0), st.data())
def test_nested_cuts_monotone_recall(scores, f1, f2, data):
    f1, f2 = sorted((f1, f2))
    tv = data.draw(st.sets(st.sampled_from(sorted(scores)), min_size=1))
    assert vendor_recall(tv, rank_cut(scores, f1)) <= vendor_recall(tv, rank_cut(scores, f2))


@given(score_tables, st.data())
def test_recalls_permutation_equivariant(scores, data):
    users = sorted(scores)
    tv = data.draw(st.sets(st.sampled_from(users), min_size=1))
    cut = data.draw(st.sets(st.sampled_from(users)))
    weights = {u: float(i + 1) for i, u in enumerate(users)}
    perm = dict(zip(users, data.draw(st.permutations(users))))
    rename = lambda xs: [perm[u] for u in xs]  # noqa: E731
    w2 = {perm[u]: w for u, w in weights.items()}
    assert vendor_recall(tv, cut) == vendor_recall(rename(tv), rename(cut))
    assert sales_recall(tv, cut, weights) == pytest.approx(sales_recall(rename(tv), rename(cut), w2), abs=1e-12)


@given(score_tables, st.data())
def test_roc_monotone(scores, data):
    users = sorted(scores)
    if len(users) < 2:
        return
    pos = data.draw(st.sets(st.sampled_from(users), min_size=1, max_size=len(users) - 1))
    pts = roc_sweep(scores, pos).points
    assert all(a.tpr <= b.tpr and a.fpr <= b.fpr for a, b in zip(pts, pts[1:]))
    assert (pts[0].tpr, pts[0].fpr, pts[-1].tpr, pts[-1].fpr) == (0, 0, 1, 1)
