"""Seeded synthetic forum corpora with known vendor-success structure.

Users differ in a log-normal activity level that drives how many topics they
start and how often they reply. Forum behaviour is independent of vendor
status; only a vendor's sales depend on the forum, through monthly growth

    growth = base_sales + sales_coupling * replies_received_this_month + noise

so ``sales_coupling = 0`` yields sales unrelated to any forum signal.
"""
from __future__ import annotations

import io
import math
from dataclasses import dataclass, fields
from pathlib import Path

import numpy as np

from .ingest import (
    Post,
    SalesObservation,
    ValidationError,
    month_cutoff,
    month_range,
    parse_month,
    write_posts,
    write_sales,
)

__all__ = ["SynthConfig", "generate", "write_corpus", "read_config"]


@dataclass(frozen=True)
class SynthConfig:
    seed: int = 42
    n_users: int = 1000
    vendor_fraction: float = 0.2
    months: int = 6
    start_month: str = "2014-01"
    topic_start_rate: float = 0.15     # topics per user-month at unit activity
    reply_rate: float = 4.0            # mean replies per topic
    reply_delay_mean_hours: float = 12.0
    reply_delay_sigma: float = 1.5     # log-normal shape of reply delays
    activity_sigma: float = 1.0        # log-normal spread of user activity
    sales_coupling: float = 1.0        # extra sales per reply received
    base_sales: float = 5.0            # sales per month independent of the forum
    sales_noise: float = 5.0           # mean of the gamma-distributed noise term

    def __post_init__(self):
        if self.n_users < 1 or self.months < 1:
            raise ValidationError("n_users and months must be positive")
        if not 0 <= self.vendor_fraction <= 1:
            raise ValidationError(f"vendor_fraction must be in [0, 1], got {self.vendor_fraction!r}")
        for name in ("topic_start_rate", "reply_rate", "reply_delay_sigma", "activity_sigma",
                     "sales_coupling", "base_sales", "sales_noise"):
            if getattr(self, name) < 0:
                raise ValidationError(f"{name} must be nonnegative")
        if self.reply_delay_mean_hours <= 0:
            raise ValidationError("reply_delay_mean_hours must be positive")
        parse_month(self.start_month)


def read_config(path: str | Path, **overrides) -> SynthConfig:
    """Parse a flat ``key = value`` file into a :class:`SynthConfig`."""
    types = {f.name: f.type for f in fields(SynthConfig)}
    values = {}
    for lineno, line in enumerate(Path(path).read_text(encoding="utf-8").splitlines(), start=1):
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        key, sep, value = line.partition("=")
        key = key.strip()
        if not sep or key not in types:
            raise ValidationError(f"unknown or malformed setting {line!r}", row=lineno, source=str(path))
        values[key] = value.strip()
    values.update({k: v for k, v in overrides.items() if v is not None})
    return _coerce(values)


def _coerce(values: dict) -> SynthConfig:
    out = {}
    for f in fields(SynthConfig):
        if f.name not in values:
            continue
        v = values[f.name]
        try:
            out[f.name] = int(v) if f.type == "int" else float(v) if f.type == "float" else str(v)
        except ValueError:
            raise ValidationError(f"{f.name}: cannot parse {v!r} as {f.type}") from None
    return SynthConfig(**out)


def generate(config: SynthConfig) -> tuple[list[Post], list[SalesObservation]]:
    rng = np.random.default_rng(config.seed)
    n = config.n_users
    users = [f"user{i:05d}" for i in range(n)]
    activity = rng.lognormal(0.0, config.activity_sigma, n)
    reply_p = activity / activity.sum()
    n_vendors = round(config.vendor_fraction * n)
    vendors = np.sort(rng.choice(n, size=n_vendors, replace=False))

    cutoffs = month_range(parse_month(config.start_month), _shift(config.start_month, config.months - 1))
    starts = [month_cutoff(*_shift(config.start_month, -1))] + cutoffs[:-1]
    horizon = cutoffs[-1]

    sigma = config.reply_delay_sigma
    mu = math.log(config.reply_delay_mean_hours * 3600.0) - sigma * sigma / 2

    posts: list[Post] = []
    replies_to = np.zeros((n, config.months), dtype=np.int64)
    topic_no = 0
    post_no = 0
    for m, (lo, hi) in enumerate(zip(starts, cutoffs)):
        n_topics = rng.poisson(config.topic_start_rate * activity)
        for u in range(n):
            for _ in range(n_topics[u]):
                topic_no += 1
                topic_id = str(topic_no)
                t = int(rng.integers(lo, hi))
                thread = [(t, u)]
                n_replies = rng.poisson(config.reply_rate)
                if n_replies:
                    repliers = rng.choice(n, size=n_replies, p=reply_p)
                    delays = rng.lognormal(mu, sigma, n_replies)
                    for r, d in zip(repliers, delays):
                        t = t + int(d)
                        if t >= horizon:
                            break
                        thread.append((t, int(r)))
                for ordinal, (ts, author) in enumerate(thread):
                    post_no += 1
                    posts.append(Post(str(post_no), topic_id, users[author], ts, ordinal))
                    if ordinal:
                        replies_to[u, _month_index(ts, cutoffs)] += 1

    sales: list[SalesObservation] = []
    for v in vendors:
        noise = (rng.gamma(2.0, config.sales_noise / 2.0, config.months)
                 if config.sales_noise > 0 else np.zeros(config.months))
        growth = config.base_sales + config.sales_coupling * replies_to[v] + noise
        before = 0.0
        for m, (lo, hi) in enumerate(zip(starts, cutoffs)):
            at = int(rng.integers(lo, hi))
            level = before + growth[m] * (at - lo) / (hi - lo)
            sales.append(SalesObservation(users[v], at, int(math.floor(level))))
            before += growth[m]
    posts.sort(key=lambda p: (int(p.topic_id), p.timestamp, int(p.post_id)))
    return posts, sales


def _month_index(ts: int, cutoffs: list[int]) -> int:
    for i, c in enumerate(cutoffs):
        if ts < c:
            return i
    return len(cutoffs) - 1


def _shift(month: str, k: int) -> tuple[int, int]:
    y, m = parse_month(month)
    total = y * 12 + (m - 1) + k
    return total // 12, total % 12 + 1


def write_corpus(config: SynthConfig, out_dir: str | Path) -> tuple[Path, Path]:
    """Generate and write ``posts.csv`` and ``sales.csv``; returns their paths."""
    posts, sales = generate(config)
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    paths = out_dir / "posts.csv", out_dir / "sales.csv"
    for path, writer, rows in ((paths[0], write_posts, posts), (paths[1], write_sales, sales)):
        buf = io.StringIO()
        writer(rows, buf)
        path.write_text(buf.getvalue(), encoding="utf-8")
    return paths
