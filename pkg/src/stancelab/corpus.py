"""Tweet corpus loading, text cleaning and stratified splitting."""

from __future__ import annotations

import csv
import json
import re
import warnings
from dataclasses import dataclass
from datetime import datetime, timezone
from enum import Enum
from pathlib import Path
from typing import Iterator, Optional, Sequence


class StanceLabel(Enum):
    """Stance of an utterance toward the fixed target topic.

    The member order (AGAINST < FAVOR < NONE) is the canonical class order
    used everywhere downstream: probability vectors, argmax tie-breaking and
    prediction CSV columns.
    """

    AGAINST = "AGAINST"
    FAVOR = "FAVOR"
    NONE = "NONE"

    @property
    def index(self) -> int:
        return CLASS_ORDER.index(self)


CLASS_ORDER = (StanceLabel.AGAINST, StanceLabel.FAVOR, StanceLabel.NONE)

REQUIRED_COLUMNS = ("id", "author_id", "text", "created_at", "bio", "label")

_URL_RE = re.compile(r"(?:https?://|www\.)\S+")
# URL is matched first so the sentinel survives re-cleaning unchanged.
_TOKEN_RE = re.compile(r"URL|[@#]\w+|\w+|[^\w\s]")


@dataclass(frozen=True)
class Tweet:
    """One labeled (or unlabeled, for test data) utterance."""

    id: str
    author_id: str
    text: str
    created_at: Optional[datetime] = None
    bio: Optional[str] = None
    label: Optional[StanceLabel] = None


@dataclass(frozen=True)
class SplitSpec:
    """Deterministic stratified split: ``train_ratio`` in (0, 1) plus a seed."""

    train_ratio: float
    seed: int = 0

    def __post_init__(self):
        if not 0.0 < self.train_ratio < 1.0:
            raise ValueError(
                f"train_ratio must lie in the open interval (0, 1), got {self.train_ratio}"
            )


class Corpus:
    """Immutable collection of tweets with unique ids.

    Safe for concurrent reads; all feature extractors treat it as read-only.
    """

    def __init__(self, tweets: Sequence[Tweet]):
        self._tweets = tuple(tweets)
        index: dict[str, Tweet] = {}
        for t in self._tweets:
            if t.id in index:
                raise ValueError(f"duplicate tweet id: {t.id!r}")
            index[t.id] = t
        self._by_id = index

    def __len__(self) -> int:
        return len(self._tweets)

    def __iter__(self) -> Iterator[Tweet]:
        return iter(self._tweets)

    def __getitem__(self, i: int) -> Tweet:
        return self._tweets[i]

    def by_id(self, tweet_id: str) -> Tweet:
        return self._by_id[tweet_id]

    @property
    def tweets(self) -> tuple[Tweet, ...]:
        return self._tweets

    def labels(self) -> list[Optional[StanceLabel]]:
        return [t.label for t in self._tweets]

    def authors(self) -> list[str]:
        return [t.author_id for t in self._tweets]

    def class_counts(self) -> dict[StanceLabel, int]:
        counts = {c: 0 for c in CLASS_ORDER}
        for t in self._tweets:
            if t.label is not None:
                counts[t.label] += 1
        return counts


def _parse_created_at(raw: str) -> Optional[datetime]:
    raw = raw.strip()
    if not raw:
        return None
    try:
        return datetime.fromisoformat(raw)
    except ValueError:
        pass
    try:
        return datetime.fromtimestamp(int(raw), tz=timezone.utc)
    except (ValueError, OverflowError, OSError):
        pass
    try:
        # Twitter API v1 classic format
        return datetime.strptime(raw, "%a %b %d %H:%M:%S %z %Y")
    except ValueError:
        return None


def _row_to_tweet(row: dict, line_no: int, problems: list[str]) -> Optional[Tweet]:
    text = (row.get("text") or "").strip()
    if not text:
        problems.append(f"line {line_no}: empty text")
        return None
    tweet_id = (row.get("id") or "").strip()
    if not tweet_id:
        problems.append(f"line {line_no}: missing id")
        return None
    author = (row.get("author_id") or "").strip()
    if not author:
        problems.append(f"line {line_no}: missing author_id")
        return None

    raw_label = (row.get("label") or "").strip()
    label = None
    if raw_label:
        try:
            label = StanceLabel(raw_label.upper())
        except ValueError:
            problems.append(f"line {line_no}: unknown label {raw_label!r}")
            return None

    bio = row.get("bio")
    bio = bio.strip() if isinstance(bio, str) and bio.strip() else None
    created = _parse_created_at(str(row.get("created_at") or ""))
    return Tweet(id=tweet_id, author_id=author, text=text,
                 created_at=created, bio=bio, label=label)


def load_corpus(path: str | Path, format: str = "csv") -> Corpus:
    """Load a corpus from CSV or JSONL.

    Both formats carry the columns/keys ``id, author_id, text, created_at,
    bio, label`` with ``label`` one of AGAINST/FAVOR/NONE or empty for test
    data. Malformed rows are reported with their line numbers (as a warning)
    and skipped; duplicate ids and missing columns are hard errors.
    """
    path = Path(path)
    if not path.exists():
        raise FileNotFoundError(f"corpus file not found: {path}")
    if format not in ("csv", "jsonl"):
        raise ValueError(f"unknown corpus format: {format!r}")

    problems: list[str] = []
    tweets: list[Tweet] = []
    seen: set[str] = set()

    if format == "csv":
        with open(path, newline="", encoding="utf-8") as fh:
            reader = csv.DictReader(fh)
            header = reader.fieldnames or []
            missing = [c for c in REQUIRED_COLUMNS if c not in header]
            if missing:
                raise ValueError(f"missing required column(s): {', '.join(missing)}")
            for line_no, row in enumerate(reader, start=2):
                tweet = _row_to_tweet(row, line_no, problems)
                if tweet is None:
                    continue
                if tweet.id in seen:
                    raise ValueError(f"duplicate tweet id: {tweet.id!r} (line {line_no})")
                seen.add(tweet.id)
                tweets.append(tweet)
    else:
        with open(path, encoding="utf-8") as fh:
            for line_no, line in enumerate(fh, start=1):
                if not line.strip():
                    continue
                try:
                    row = json.loads(line)
                except json.JSONDecodeError:
                    problems.append(f"line {line_no}: invalid JSON")
                    continue
                missing = [c for c in REQUIRED_COLUMNS if c not in row]
                if missing:
                    raise ValueError(
                        f"missing required key(s) {', '.join(missing)} at line {line_no}"
                    )
                tweet = _row_to_tweet({k: row.get(k) for k in REQUIRED_COLUMNS},
                                      line_no, problems)
                if tweet is None:
                    continue
                if tweet.id in seen:
                    raise ValueError(f"duplicate tweet id: {tweet.id!r} (line {line_no})")
                seen.add(tweet.id)
                tweets.append(tweet)

    if problems:
        warnings.warn("malformed rows skipped: " + "; ".join(problems))
    if not tweets:
        raise ValueError("empty corpus")
    return Corpus(tweets)


def preprocess(text: str, mode: str = "twita_clean") -> list[str]:
    """Tokenize a tweet.

    mode="none" is plain whitespace tokenization. mode="twita_clean"
    lowercases, replaces URLs with the literal token ``URL``, keeps
    @mentions and #hashtags intact (lowercased), splits punctuation into
    standalone tokens and collapses whitespace. Cleaning is idempotent on
    its own space-joined output.
    """
    if mode == "none":
        return text.split()
    if mode != "twita_clean":
        raise ValueError(f"unknown preprocessing mode: {mode!r}")
    substituted = _URL_RE.sub(" URL ", text)
    tokens = _TOKEN_RE.findall(substituted)
    return [tok if tok == "URL" else tok.lower() for tok in tokens]


def stratified_split(corpus: Corpus, spec: SplitSpec) -> tuple[Corpus, Corpus]:
    """Split into (train, eval) preserving class proportions.

    |train| = floor(N * ratio). Each class contributes floor(count * ratio)
    instances; the leftover slots go to the classes with the largest
    fractional remainders first (ties: larger class first, then label name),
    which keeps every class within one instance of its exact share.
    Membership is deterministic given (corpus, ratio, seed).
    """
    import numpy as np

    unlabeled = [t.id for t in corpus if t.label is None]
    if unlabeled:
        raise ValueError(f"cannot split: unlabeled instance(s), e.g. id {unlabeled[0]!r}")

    by_class: dict[StanceLabel, list[Tweet]] = {c: [] for c in CLASS_ORDER}
    for t in corpus:
        by_class[t.label].append(t)
    present = [c for c in CLASS_ORDER if by_class[c]]
    for c in present:
        if len(by_class[c]) < 2:
            raise ValueError(f"class {c.value} has fewer than 2 instances")

    n = len(corpus)
    ratio = spec.train_ratio
    train_total = int(n * ratio)
    if train_total < 1:
        raise ValueError(f"train split is empty: ratio {ratio} too small for "
                         f"{n} instances")
    takes = {c: int(len(by_class[c]) * ratio) for c in present}
    remainder = train_total - sum(takes.values())

    fractional = sorted(
        present,
        key=lambda c: (-(len(by_class[c]) * ratio - takes[c]), -len(by_class[c]), c.value),
    )
    for c in fractional[:remainder]:
        takes[c] += 1

    rng = np.random.default_rng(spec.seed)
    train_ids: set[str] = set()
    for c in present:
        members = by_class[c]
        order = rng.permutation(len(members))
        train_ids.update(members[i].id for i in order[: takes[c]])

    train = Corpus([t for t in corpus if t.id in train_ids])
    evalc = Corpus([t for t in corpus if t.id not in train_ids])
    return train, evalc
