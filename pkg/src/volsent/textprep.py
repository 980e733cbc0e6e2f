"""Headline tokenization, stopword removal, vocabulary and fixed-length encoding."""
from __future__ import annotations

import csv
import datetime as dt
import logging
import re
from collections import Counter
from dataclasses import dataclass, field
from importlib import resources
from pathlib import Path
from typing import Iterable, Sequence

from .errors import EmptyCorpus, EmptyFile, MalformedRow

log = logging.getLogger(__name__)

PAD, UNK = 0, 1
PAD_TOKEN, UNK_TOKEN = "<pad>", "<unk>"
MAX_HEADLINES_PER_DAY = 27

_TOKEN_RE = re.compile(r"[^\W_]+", re.UNICODE)


def tokenize(text: str) -> list[str]:
    return _TOKEN_RE.findall(text.lower())


def remove_stopwords(tokens: Sequence[str], stoplist) -> list[str]:
    return [t for t in tokens if t not in stoplist]


def load_stopwords(path=None) -> frozenset:
    """One token per line; the bundled English list when ``path`` is None."""
    if path is None:
        text = resources.files("volsent").joinpath("data/stopwords.txt").read_text(encoding="utf-8")
    else:
        text = Path(path).read_text(encoding="utf-8")
    return frozenset(line.strip().lower() for line in text.splitlines() if line.strip())


@dataclass
class Vocabulary:
    id_to_token: list
    counts: list
    token_to_id: dict = field(init=False)

    def __post_init__(self):
        self.token_to_id = {t: i for i, t in enumerate(self.id_to_token)}
        if len(self.token_to_id) != len(self.id_to_token):
            raise ValueError("duplicate tokens in vocabulary")
        if self.id_to_token[:2] != [PAD_TOKEN, UNK_TOKEN]:
            raise ValueError("vocabulary must start with PAD and UNK")

    def __len__(self):
        return len(self.id_to_token)

    def id(self, token: str) -> int:
        return self.token_to_id.get(token, UNK)

    def to_text(self) -> str:
        return "".join(f"{i}\t{t}\t{c}\n" for i, (t, c) in enumerate(zip(self.id_to_token, self.counts)))

    @classmethod
    def from_text(cls, text: str) -> "Vocabulary":
        tokens, counts = [], []
        for expected, line in enumerate(text.splitlines()):
            i, tok, cnt = line.split("\t")
            if int(i) != expected:
                raise ValueError(f"non-contiguous vocabulary id {i}")
            tokens.append(tok)
            counts.append(int(cnt))
        return cls(tokens, counts)


def build_vocabulary(docs: Iterable[Sequence[str]], min_count: int = 2) -> Vocabulary:
    """Ids by descending frequency, ties broken lexicographically.

    Tokens seen fewer than ``min_count`` times are left out (they encode to UNK);
    their total count is credited to UNK.
    """
    if min_count < 1:
        raise ValueError("min_count must be >= 1")
    freq = Counter()
    for doc in docs:
        freq.update(doc)
    if not freq:
        raise EmptyCorpus("no tokens in corpus")
    kept = sorted((t for t, c in freq.items() if c >= min_count), key=lambda t: (-freq[t], t))
    pruned = sum(c for t, c in freq.items() if c < min_count)
    return Vocabulary([PAD_TOKEN, UNK_TOKEN] + kept, [0, pruned] + [freq[t] for t in kept])


def encode(tokens: Sequence[str], vocab: Vocabulary, max_len: int = 16) -> list[int]:
    if max_len < 1:
        raise ValueError("max_len must be >= 1")
    ids = [vocab.id(t) for t in tokens[:max_len]]
    return ids + [PAD] * (max_len - len(ids))


@dataclass
class EncodedDoc:
    date: dt.date
    token_ids: list
    label: int | None = None


def preprocess(text: str, stoplist) -> list[str]:
    return remove_stopwords(tokenize(text), stoplist)


def load_headlines(path) -> list[tuple[dt.date, str]]:
    """Read a ``date,headline`` CSV; rows keep file order."""
    path = Path(path)
    with path.open(newline="", encoding="utf-8") as fh:
        rows = list(csv.reader(fh))
    if not rows:
        raise EmptyFile(f"{path} is empty")
    if [c.strip().lower() for c in rows[0]] != ["date", "headline"]:
        raise MalformedRow(1, "expected header 'date,headline'")
    out = []
    per_day = Counter()
    for lineno, row in enumerate(rows[1:], start=2):
        if not row:
            continue
        if len(row) != 2:
            raise MalformedRow(lineno, f"expected 2 fields, got {len(row)}")
        try:
            date = dt.date.fromisoformat(row[0].strip())
        except ValueError as exc:
            raise MalformedRow(lineno, str(exc)) from None
        per_day[date] += 1
        out.append((date, row[1]))
    crowded = [d for d, c in per_day.items() if c > MAX_HEADLINES_PER_DAY]
    if crowded:
        log.warning("%d dates carry more than %d headlines", len(crowded), MAX_HEADLINES_PER_DAY)
    return out


def write_encoded(path, docs: Sequence[EncodedDoc]) -> None:
    with Path(path).open("w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["date", "label", "token_ids"])
        for d in docs:
            w.writerow([d.date.isoformat(), "" if d.label is None else d.label,
                        " ".join(map(str, d.token_ids))])


def read_encoded(path) -> list[EncodedDoc]:
    with Path(path).open(newline="", encoding="utf-8") as fh:
        rows = list(csv.reader(fh))
    return [EncodedDoc(dt.date.fromisoformat(r[0]), [int(v) for v in r[2].split()],
                       None if r[1] == "" else int(r[1])) for r in rows[1:]]
