"""Loading and indexing of forum posts and vendor sales observations.

Posts and sales are read from UTF-8 CSV (or JSONL for posts), validated,
and wrapped in immutable indexes (:class:`Corpus`, :class:`SalesBook`) that
the extraction, measure and evaluation stages share.
"""
from __future__ import annotations

import bisect
import calendar
import csv
import io
import json
from dataclasses import dataclass, field
from datetime import datetime, timezone
from typing import IO, Iterable, Iterator, Sequence

__all__ = [
    "Post",
    "SalesObservation",
    "Corpus",
    "SalesBook",
    "ValidationError",
    "NotAVendorError",
    "load_posts",
    "load_sales",
    "write_posts",
    "write_sales",
    "month_cutoff",
    "month_label",
    "month_of",
    "month_range",
    "parse_month",
]

POST_FIELDS = ("post_id", "topic_id", "author", "timestamp", "ordinal")
SALES_FIELDS = ("user", "observed_at", "cumulative_sales")


class ValidationError(ValueError):
    """Input data or configuration violates a documented contract."""

    def __init__(self, message: str, *, row: int | None = None, source: str | None = None):
        self.row = row
        self.source = source
        prefix = ""
        if source is not None:
            prefix += f"{source}: "
        if row is not None:
            prefix += f"row {row}: "
        super().__init__(prefix + message)


class NotAVendorError(KeyError):
    def __str__(self) -> str:
        return f"not a vendor: {self.args[0]!r}"


@dataclass(frozen=True, slots=True)
class Post:
    post_id: str
    topic_id: str
    author: str
    timestamp: int
    ordinal: int


@dataclass(frozen=True, slots=True)
class SalesObservation:
    user: str
    observed_at: int
    cumulative_sales: int


def id_key(value: str) -> tuple[int, int | str]:
    """Sort key putting numeric identifiers in numeric order before the rest."""
    if value.isdigit():
        return (0, int(value))
    return (1, value)


# --- months and cutoffs -----------------------------------------------------

def parse_month(text: str) -> tuple[int, int]:
    try:
        year_s, month_s = text.strip().split("-")
        year, month = int(year_s), int(month_s)
    except ValueError:
        raise ValidationError(f"bad month {text!r}, expected YYYY-MM") from None
    if not 1 <= month <= 12:
        raise ValidationError(f"bad month {text!r}, expected YYYY-MM")
    return year, month


def month_cutoff(year: int, month: int) -> int:
    """First second (UTC) after the given month; the exclusive snapshot bound."""
    if month == 12:
        year, month = year + 1, 1
    else:
        month += 1
    return calendar.timegm((year, month, 1, 0, 0, 0))


def month_of(timestamp: int) -> tuple[int, int]:
    dt = datetime.fromtimestamp(timestamp, tz=timezone.utc)
    return dt.year, dt.month


def month_label(cutoff: int) -> str:
    """``YYYY-MM`` of the month a cutoff closes."""
    year, month = month_of(cutoff - 1)
    return f"{year:04d}-{month:02d}"


def month_range(first: str | tuple[int, int], last: str | tuple[int, int]) -> list[int]:
    """Cutoffs for every month from ``first`` to ``last`` inclusive."""
    y, m = parse_month(first) if isinstance(first, str) else first
    y_end, m_end = parse_month(last) if isinstance(last, str) else last
    if (y, m) > (y_end, m_end):
        raise ValidationError(f"empty month range {y:04d}-{m:02d}..{y_end:04d}-{m_end:02d}")
    out = []
    while (y, m) <= (y_end, m_end):
        out.append(month_cutoff(y, m))
        y, m = (y + 1, 1) if m == 12 else (y, m + 1)
    return out


# --- parsing ----------------------------------------------------------------

def _text_stream(source: IO[bytes] | IO[str] | bytes | str) -> IO[str]:
    if isinstance(source, bytes):
        return io.StringIO(source.decode("utf-8"), newline="")
    if isinstance(source, str):
        return io.StringIO(source, newline="")
    if isinstance(source, io.TextIOBase):
        return source
    return io.TextIOWrapper(source, encoding="utf-8", newline="")


def _as_int(value, name: str, row: int, source: str) -> int:
    if isinstance(value, bool):
        raise ValidationError(f"{name} must be an integer, got {value!r}", row=row, source=source)
    if isinstance(value, int):
        return value
    if isinstance(value, float) and value.is_integer():
        return int(value)
    if isinstance(value, str):
        try:
            return int(value.strip())
        except ValueError:
            pass
    raise ValidationError(f"{name} must be an integer, got {value!r}", row=row, source=source)


def _as_id(value, name: str, row: int, source: str) -> str:
    if value is None or isinstance(value, (dict, list)):
        raise ValidationError(f"{name} is missing", row=row, source=source)
    text = str(value).strip()
    if not text:
        raise ValidationError(f"{name} is empty", row=row, source=source)
    return text


def _post_records(stream: IO[str], fmt: str, source: str) -> Iterator[tuple[int, dict]]:
    if fmt == "csv":
        reader = csv.DictReader(stream)
        header = reader.fieldnames or []
        missing = [f for f in POST_FIELDS[:4] if f not in header]
        if missing:
            raise ValidationError(f"missing columns {missing}", row=1, source=source)
        for row in reader:
            yield reader.line_num, row
    elif fmt == "jsonl":
        for lineno, line in enumerate(stream, start=1):
            if not line.strip():
                continue
            try:
                record = json.loads(line)
            except json.JSONDecodeError as exc:
                raise ValidationError(f"invalid JSON ({exc.msg})", row=lineno, source=source) from None
            if not isinstance(record, dict):
                raise ValidationError("expected a JSON object", row=lineno, source=source)
            yield lineno, record
    else:
        raise ValidationError(f"unknown posts format {fmt!r}; use csv or jsonl")


def load_posts(source, fmt: str = "csv", *, name: str = "<posts>") -> list[Post]:
    """Read posts from a byte or text stream.

    Posts come back sorted by ``(topic_id, timestamp, post_id)``. Missing
    ordinals are assigned from that order; supplied ordinals are checked
    against it.
    """
    stream = _text_stream(source)
    raw: list[tuple[str, str, str, int, int | None, int]] = []
    seen: dict[str, int] = {}
    for lineno, rec in _post_records(stream, fmt, name):
        for key in POST_FIELDS[:4]:
            if rec.get(key) is None:
                raise ValidationError(f"missing {key}", row=lineno, source=name)
        post_id = _as_id(rec["post_id"], "post_id", lineno, name)
        topic_id = _as_id(rec["topic_id"], "topic_id", lineno, name)
        author = _as_id(rec["author"], "author", lineno, name)
        ts = _as_int(rec["timestamp"], "timestamp", lineno, name)
        ordinal = rec.get("ordinal")
        if ordinal is not None and ordinal != "":
            ordinal = _as_int(ordinal, "ordinal", lineno, name)
            if ordinal < 0:
                raise ValidationError("ordinal must be nonnegative", row=lineno, source=name)
        else:
            ordinal = None
        if post_id in seen:
            raise ValidationError(
                f"duplicate post_id {post_id!r} (first seen on row {seen[post_id]})",
                row=lineno, source=name,
            )
        seen[post_id] = lineno
        raw.append((post_id, topic_id, author, ts, ordinal, lineno))

    raw.sort(key=lambda r: (id_key(r[1]), r[3], id_key(r[0])))
    posts: list[Post] = []
    prev_topic = None
    position = 0
    for post_id, topic_id, author, ts, ordinal, lineno in raw:
        position = position + 1 if topic_id == prev_topic else 0
        prev_topic = topic_id
        if ordinal is not None and ordinal != position:
            raise ValidationError(
                f"ordinal {ordinal} of post {post_id!r} disagrees with timestamp order "
                f"(expected {position})", row=lineno, source=name,
            )
        posts.append(Post(post_id, topic_id, author, ts, position))
    return posts


def load_sales(source, *, name: str = "<sales>") -> list[SalesObservation]:
    """Read sales observations, grouped by user and sorted by time."""
    stream = _text_stream(source)
    reader = csv.DictReader(stream)
    header = reader.fieldnames or []
    missing = [f for f in SALES_FIELDS if f not in header]
    if missing:
        raise ValidationError(f"missing columns {missing}", row=1, source=name)
    by_user: dict[str, list[tuple[int, int, int]]] = {}
    for row in reader:
        lineno = reader.line_num
        for key in SALES_FIELDS:
            if row.get(key) is None:
                raise ValidationError(f"missing {key}", row=lineno, source=name)
        user = _as_id(row["user"], "user", lineno, name)
        at = _as_int(row["observed_at"], "observed_at", lineno, name)
        count = _as_int(row["cumulative_sales"], "cumulative_sales", lineno, name)
        if count < 0:
            raise ValidationError("cumulative_sales must be nonnegative", row=lineno, source=name)
        by_user.setdefault(user, []).append((at, count, lineno))

    out: list[SalesObservation] = []
    for user in sorted(by_user):
        obs = sorted(by_user[user])
        for (t0, c0, l0), (t1, c1, l1) in zip(obs, obs[1:]):
            if t0 == t1:
                raise ValidationError(
                    f"user {user!r} has two observations at {t1} (rows {l0} and {l1})",
                    row=l1, source=name,
                )
            if c1 < c0:
                raise ValidationError(
                    f"cumulative_sales of user {user!r} decreases from {c0} at {t0} "
                    f"to {c1} at {t1}", row=l1, source=name,
                )
        out.extend(SalesObservation(user, t, c) for t, c, _ in obs)
    return out


def write_posts(posts: Iterable[Post], stream: IO[str]) -> None:
    writer = csv.writer(stream, lineterminator="\n")
    writer.writerow(POST_FIELDS)
    for p in posts:
        writer.writerow((p.post_id, p.topic_id, p.author, p.timestamp, p.ordinal))


def write_sales(observations: Iterable[SalesObservation], stream: IO[str]) -> None:
    writer = csv.writer(stream, lineterminator="\n")
    writer.writerow(SALES_FIELDS)
    for o in observations:
        writer.writerow((o.user, o.observed_at, o.cumulative_sales))


# --- indexes ----------------------------------------------------------------

@dataclass(frozen=True)
class Topic:
    topic_id: str
    posts: tuple[Post, ...]

    @property
    def starter(self) -> Post:
        return self.posts[0]


class Corpus:
    """Immutable index over a validated post list."""

    def __init__(self, posts: Sequence[Post]):
        ordered = sorted(posts, key=lambda p: (id_key(p.topic_id), p.timestamp, id_key(p.post_id)))
        topics: dict[str, list[Post]] = {}
        for p in ordered:
            topics.setdefault(p.topic_id, []).append(p)
        for tid, tposts in topics.items():
            if [p.ordinal for p in tposts] != list(range(len(tposts))):
                raise ValidationError(f"topic {tid!r} ordinals are not 0..n-1 in timestamp order")
        self.posts: tuple[Post, ...] = tuple(ordered)
        self.topics: tuple[Topic, ...] = tuple(Topic(tid, tuple(ps)) for tid, ps in topics.items())
        times: dict[str, list[int]] = {}
        for p in ordered:
            times.setdefault(p.author, []).append(p.timestamp)
        self._times = {u: sorted(ts) for u, ts in times.items()}

    def __len__(self) -> int:
        return len(self.posts)

    @classmethod
    def from_file(cls, path, fmt: str | None = None) -> "Corpus":
        path = str(path)
        if fmt is None:
            fmt = "jsonl" if path.endswith((".jsonl", ".json")) else "csv"
        with open(path, "rb") as fh:
            return cls(load_posts(fh, fmt, name=path))

    @property
    def users(self) -> list[str]:
        return sorted(self._times)

    def first_post_time(self, user: str) -> int | None:
        ts = self._times.get(user)
        return ts[0] if ts else None

    def post_count(self, user: str, cutoff: int) -> int:
        ts = self._times.get(user)
        return bisect.bisect_left(ts, cutoff) if ts else 0

    def active_users(self, cutoff: int) -> set[str]:
        """Users with at least one post strictly before ``cutoff``."""
        return {u for u, ts in self._times.items() if ts[0] < cutoff}

    def span(self) -> tuple[int, int]:
        if not self.posts:
            raise ValidationError("empty corpus has no time span")
        return min(p.timestamp for p in self.posts), max(p.timestamp for p in self.posts)

    def months(self) -> list[int]:
        lo, hi = self.span()
        return month_range(month_of(lo), month_of(hi))


@dataclass
class _Timeline:
    times: list[int]
    counts: list[int]
    anchor: int | None = field(default=None)


class SalesBook:
    """Per-vendor cumulative sales timelines with month-cutoff interpolation.

    Between two observations the cumulative count grows linearly (constant
    average daily growth). After the last observation the final total holds.
    Before the first observation the count grows linearly from zero at the
    user's first post, when that post precedes the observation.
    """

    def __init__(self, observations: Iterable[SalesObservation], first_post: dict[str, int] | None = None):
        grouped: dict[str, list[tuple[int, int]]] = {}
        for o in observations:
            grouped.setdefault(o.user, []).append((o.observed_at, o.cumulative_sales))
        first_post = first_post or {}
        self._lines: dict[str, _Timeline] = {}
        for user, obs in grouped.items():
            obs.sort()
            self._lines[user] = _Timeline(
                [t for t, _ in obs], [c for _, c in obs], first_post.get(user),
            )

    @classmethod
    def for_corpus(cls, observations: Iterable[SalesObservation], corpus: Corpus) -> "SalesBook":
        return cls(observations, {u: corpus.first_post_time(u) for u in corpus.users})

    def __contains__(self, user: str) -> bool:
        return user in self._lines

    @property
    def users(self) -> list[str]:
        return sorted(self._lines)

    @property
    def vendors(self) -> set[str]:
        """Users with a positive final sales total."""
        return {u for u, line in self._lines.items() if line.counts[-1] > 0}

    def _line(self, user: str) -> _Timeline:
        try:
            return self._lines[user]
        except KeyError:
            raise NotAVendorError(user) from None

    def final_total(self, user: str) -> int:
        return self._line(user).counts[-1]

    def current_sales_at(self, user: str, cutoff: int) -> float:
        line = self._line(user)
        times, counts = line.times, line.counts
        if cutoff >= times[-1]:
            return float(counts[-1])
        i = bisect.bisect_right(times, cutoff)
        if i == 0:
            t0, c0 = line.anchor, 0
            if t0 is None or t0 >= times[0] or cutoff <= t0:
                return 0.0
        else:
            t0, c0 = times[i - 1], counts[i - 1]
        t1, c1 = times[i], counts[i]
        days = (t1 - t0) / 86400.0
        daily_growth = (c1 - c0) / days
        return c0 + daily_growth * ((cutoff - t0) / 86400.0)

    def future_sales_at(self, user: str, cutoff: int) -> float:
        rest = self.final_total(user) - self.current_sales_at(user, cutoff)
        return rest if rest > 0.0 else 0.0

    def sales_at(self, user: str, cutoff: int, kind: str) -> float:
        if kind == "current":
            return self.current_sales_at(user, cutoff)
        if kind == "future":
            return self.future_sales_at(user, cutoff)
        raise ValueError(f"unknown sales kind {kind!r}")

