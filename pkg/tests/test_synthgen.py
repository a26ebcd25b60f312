import hashlib
import io

import pytest
from scipy.stats import spearmanr

from vendornet.extraction import ExtractionParams, extract_snapshot
from vendornet.ingest import Corpus, SalesBook, ValidationError, load_posts, load_sales, write_posts, write_sales
from vendornet.measures import topic_engagement
from vendornet.synthgen import SynthConfig, generate, read_config, write_corpus


def _digest(cfg):
    posts, sales = generate(cfg)
    buf = io.StringIO()
    write_posts(posts, buf)
    write_sales(sales, buf)
    return hashlib.sha256(buf.getvalue().encode()).hexdigest()


def test_same_seed_same_corpus():
    cfg = SynthConfig(seed=42, n_users=100, months=6)
    assert _digest(cfg) == _digest(cfg)
    assert _digest(cfg) != _digest(SynthConfig(seed=43, n_users=100, months=6))


def test_no_replies_no_edges():
    posts, _ = generate(SynthConfig(n_users=150, reply_rate=0, months=2))
    corpus = Corpus(posts)
    assert all(len(t.posts) == 1 for t in corpus.topics)
    g = extract_snapshot(corpus, ExtractionParams(), corpus.months()[-1])
    assert g.n_edges == 0 and g.n_nodes > 0


def test_generated_corpus_passes_ingest(tmp_path):
    posts_path, sales_path = write_corpus(SynthConfig(n_users=200, months=3), tmp_path)
    with open(posts_path, "rb") as fh:
        posts = load_posts(fh)
    with open(sales_path, "rb") as fh:
        sales = load_sales(fh)
    corpus = Corpus(posts)
    assert len(corpus.months()) == 3
    book = SalesBook.for_corpus(sales, corpus)
    assert book.vendors


def test_coupling_gives_positive_rank_correlation():
    posts, sales = generate(SynthConfig(seed=5, sales_coupling=1.0))
    corpus = Corpus(posts)
    cutoff = corpus.months()[-1]
    book = SalesBook.for_corpus(sales, corpus)
    vendors = sorted(book.vendors & corpus.active_users(cutoff))
    te = topic_engagement(corpus, cutoff).scores
    rho = spearmanr([te[v] for v in vendors], [book.current_sales_at(v, cutoff) for v in vendors])[0]
    assert rho == pytest.approx(0.554584, abs=1e-6)  # regression value for this seed
    assert rho > 0


def test_observations_are_off_month_end():
    _, sales = generate(SynthConfig(n_users=100, months=3))
    from vendornet.ingest import month_range

    ends = set(month_range("2014-01", "2014-03"))
    assert not any(o.observed_at in ends for o in sales)


def test_config_file(tmp_path):
    path = tmp_path / "s.cfg"
    path.write_text("seed = 9\nn_users = 50  # small\nsales_coupling = 0\n")
    cfg = read_config(path, months=2)
    assert (cfg.seed, cfg.n_users, cfg.sales_coupling, cfg.months) == (9, 50, 0.0, 2)
    path.write_text("colour = blue\n")
    with pytest.raises(ValidationError):
        read_config(path)


@pytest.mark.parametrize("kw", [dict(n_users=0), dict(vendor_fraction=1.5), dict(reply_rate=-1),
                                dict(start_month="2014-13")])
def test_bad_config(kw):
    with pytest.raises(ValidationError):
        SynthConfig(**kw)
