import sys
from pathlib import Path

import pytest

from vendornet.ingest import Corpus, Post, month_cutoff

sys.path.insert(0, str(Path(__file__).parent))

HOUR = 3600
DAY = 86400
T0 = month_cutoff(2013, 12)  # 2014-01-01 00:00 UTC
FAR_DAYS = 400
DATA = Path(__file__).parent / "data"


def make_corpus(rows):
    """``rows`` of ``(post_id, topic_id, author, seconds_after_T0)``; ordinals by time, then id."""
    rows = sorted(rows, key=lambda r: (r[1], r[3], int(r[0])))
    posts = []
    position = {}
    for pid, tid, author, dt in rows:
        k = position.get(tid, 0)
        posts.append(Post(str(pid), str(tid), author, T0 + dt, k))
        position[tid] = k + 1
    return Corpus(posts)


@pytest.fixture
def example_corpus():
    return make_corpus([(1, 1, "u1", 0), (2, 1, "u2", HOUR), (3, 1, "u3", 2 * HOUR)])


@pytest.fixture(scope="session")
def synth_dir(tmp_path_factory):
    from vendornet.synthgen import read_config, write_corpus

    out = tmp_path_factory.mktemp("synth")
    write_corpus(read_config(DATA / "synthetic.cfg"), out)
    return out


ACCEPTANCE: dict[int, str] = {}


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for number in sorted(ACCEPTANCE):
        terminalreporter.write_line(ACCEPTANCE[number])
