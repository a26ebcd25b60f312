import math
import random

import pytest
from hypothesis import given
from hypothesis import strategies as st

from conftest import HOUR, T0, make_corpus
from extraction_cases import CASES, expected_edges, expected_nodes
from vendornet.extraction import (
    DAY,
    MONTH,
    CommGraph,
    ExtractionParams,
    decay_weight,
    extract_snapshot,
    parse_duration,
    read_graph,
    snapshot_series,
    write_graph,
)
from vendornet.ingest import Corpus, ValidationError, month_cutoff

P = ExtractionParams()
FAR = T0 + 365 * DAY


def _corpus(posts):
    return make_corpus([(pid, tid, a, round(h * HOUR)) for pid, tid, a, h in posts])


def test_decay_examples():
    assert decay_weight(0, P) == 1.0
    assert decay_weight(7 * DAY, P) == 0.2
    assert decay_weight(3.5 * DAY, P) == pytest.approx(0.447214, abs=1e-6)
    assert decay_weight(30 * DAY, P) == 0.2


@given(st.floats(0, 60 * DAY), st.floats(0, 60 * DAY))
def test_decay_monotone_and_bounded(a, b):
    lo, hi = sorted((a, b))
    assert P.omega_lower <= decay_weight(hi, P) <= decay_weight(lo, P) <= 1.0


def test_decay_continuous_at_t_lim():
    assert decay_weight(P.t_lim - 1e-6, P) == pytest.approx(0.2, abs=1e-9)


def test_three_post_example(example_corpus):
    g = extract_snapshot(example_corpus, P, FAR)
    assert g.nodes == ("u1", "u2", "u3")
    assert g.edges == {("u2", "u1"): 0.5, ("u3", "u1"): 0.5, ("u3", "u2"): 0.2 ** (1 / 168)}
    assert g.edges["u3", "u2"] == pytest.approx(0.990466, abs=1e-6)


@pytest.mark.parametrize("name", sorted(CASES))
def test_hand_fixtures(name):
    case = CASES[name]
    params, posts, cutoff_h, _ = case
    cutoff = T0 + cutoff_h * HOUR if cutoff_h is not None else FAR
    g = extract_snapshot(_corpus(posts), params, cutoff)
    assert g.edges == expected_edges(case)
    assert list(g.nodes) == expected_nodes(case)


@pytest.mark.parametrize("kw", [dict(delta_o=0), dict(delta_t=0), dict(omega_lower=0), dict(omega_first=1.5),
                                dict(t_lim=-1), dict(delta_o=1.5)])
def test_params_validated(kw):
    with pytest.raises(ValidationError):
        ExtractionParams(**kw)


def test_parse_duration():
    assert parse_duration("7d") == 7 * DAY
    assert parse_duration("1mo") == MONTH
    assert parse_duration("90") == 90.0
    assert parse_duration("1.5h") == 5400.0
    with pytest.raises(ValidationError):
        parse_duration("3 fortnights")


def _random_corpus(seed, n_posts=60):
    rng = random.Random(seed)
    rows = []
    for pid in range(1, n_posts + 1):
        rows.append((pid, rng.randint(1, 6), f"u{rng.randint(1, 8)}", rng.randint(0, 80 * DAY)))
    return make_corpus(rows)


def test_confined_corpus_gives_identical_snapshots():
    corpus = _random_corpus(1)
    late = month_cutoff(2014, 6)
    g1, g2 = snapshot_series(corpus, P, [late, month_cutoff(2014, 7)])
    assert g1.edges == g2.edges and g1.nodes == g2.nodes


@pytest.mark.parametrize("seed", range(5))
def test_cumulative_monotonicity(seed):
    corpus = _random_corpus(seed)
    cutoffs = [month_cutoff(2014, m) for m in (1, 2, 3)]
    graphs = snapshot_series(corpus, P, cutoffs)
    for a, b in zip(graphs, graphs[1:]):
        assert a.total_weight() <= b.total_weight()
        assert set(a.nodes) <= set(b.nodes)
        for e, w in a.edges.items():
            assert b.edges[e] >= w


@pytest.mark.parametrize("seed", range(5))
def test_series_matches_individual_snapshots(seed):
    corpus = _random_corpus(seed)
    cutoffs = [month_cutoff(2014, m) for m in (1, 2, 3)]
    for g, c in zip(snapshot_series(corpus, P, cutoffs), cutoffs):
        assert g == extract_snapshot(corpus, P, c)


@pytest.mark.parametrize("seed", range(5))
def test_invariants(seed):
    corpus = _random_corpus(seed)
    c = month_cutoff(2014, 3)
    g = extract_snapshot(corpus, P, c)
    assert all(s != t and w > 0 for (s, t), w in g.edges.items())
    assert set(g.nodes) == corpus.active_users(c)


def test_row_order_does_not_matter():
    corpus = _random_corpus(9)
    shuffled = list(corpus.posts)
    random.Random(0).shuffle(shuffled)
    assert extract_snapshot(Corpus(shuffled), P, FAR) == extract_snapshot(corpus, P, FAR)


def test_only_initial_post_edges_are_multiples_of_omega_first():
    # delta_t below the smallest gap leaves only initial-post edges
    corpus = _random_corpus(4)
    g = extract_snapshot(corpus, ExtractionParams(delta_t=1e-3), FAR)
    for w in g.edges.values():
        k = w / 0.5
        assert k == round(k)


def test_unbounded_windows_link_every_pair():
    rows = [(i + 1, 1, f"u{i}", i * HOUR) for i in range(15)]
    g = extract_snapshot(make_corpus(rows), ExtractionParams(delta_o=1000, delta_t=1e9), FAR)
    # distinct authors: 14 initial-post edges plus every pair among the 14 replies
    assert g.n_edges == 14 + 14 * 13 // 2


def test_graph_round_trip(tmp_path):
    corpus = _random_corpus(2)
    g = extract_snapshot(corpus, P, month_cutoff(2014, 2))
    g = g.with_nodes(["lonely"])
    write_graph(g, tmp_path / "g.csv")
    back = read_graph(tmp_path / "g.csv")
    assert back == g
    assert back.params == P


def test_from_edges_validates():
    with pytest.raises(ValidationError):
        CommGraph.from_edges({("a", "a"): 1.0})
    with pytest.raises(ValidationError):
        CommGraph.from_edges({("a", "b"): 0.0})
    assert math.isclose(CommGraph.from_edges({("a", "b"): 1.5}).total_weight(), 1.5)
