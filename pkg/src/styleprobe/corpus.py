"""Author-labeled corpora, fixed-length episodes, and query/target sets.

The corpus file format is UTF-8 JSONL with one document per line:
``{"doc_id": ..., "author_id": ..., "timestamp": ..., "text": ...,
"sentences": [[start, end], ...]}``; ``timestamp`` and ``sentences`` are
optional.
"""

from __future__ import annotations

import json
import random
import re
from dataclasses import dataclass, field

from .errors import IntegrityError, ParseError, StyleProbeError

DEFAULT_EPISODE_LEN = 16

# Abbreviations that do not terminate a sentence.
_ABBREVIATIONS = {"Mr.", "Mrs.", "Dr.", "St.", "vs.", "e.g.", "i.e."}

_SENT_BOUNDARY = re.compile(r"[.!?]+(?=\s)")


def split_sentences(text: str) -> list[tuple[int, int]]:
    """Rule-based sentence spans: terminal . ! ? followed by whitespace,
    skipping a small abbreviation list. Spans are half-open character
    offsets covering the trimmed sentence text."""
    spans: list[tuple[int, int]] = []
    start = 0
    for m in _SENT_BOUNDARY.finditer(text):
        end = m.end()
        # Word immediately before (and including) the punctuation run.
        prefix = text[:end]
        last_word = prefix.rsplit(None, 1)[-1] if prefix.split() else ""
        if last_word in _ABBREVIATIONS:
            continue
        seg = text[start:end]
        lead = len(seg) - len(seg.lstrip())
        if seg.strip():
            spans.append((start + lead, end))
        start = end
    tail = text[start:]
    lead = len(tail) - len(tail.lstrip())
    trail = len(tail) - len(tail.rstrip())
    if tail.strip():
        spans.append((start + lead, len(text) - trail))
    return spans


@dataclass(frozen=True)
class Document:
    doc_id: str
    author_id: str
    text: str
    timestamp: int = 0
    sentences: tuple[tuple[int, int], ...] | None = None

    def sentence_texts(self) -> list[str]:
        spans = self.sentences if self.sentences is not None else split_sentences(self.text)
        return [self.text[a:b] for a, b in spans]


@dataclass(frozen=True)
class Episode:
    episode_id: str
    author_id: str
    documents: tuple[Document, ...]

    def __post_init__(self):
        for d in self.documents:
            if d.author_id != self.author_id:
                raise IntegrityError(
                    f"episode {self.episode_id}: document {d.doc_id} has author "
                    f"{d.author_id!r}, expected {self.author_id!r}"
                )

    @property
    def doc_ids(self) -> tuple[str, ...]:
        return tuple(d.doc_id for d in self.documents)

    def texts(self) -> list[str]:
        return [d.text for d in self.documents]


@dataclass(frozen=True)
class QueryTargetSet:
    """Queries q_1..q_M paired index-wise with the first M of N targets;
    target authors are pairwise distinct."""

    queries: tuple[Episode, ...]
    targets: tuple[Episode, ...]

    def __post_init__(self):
        m, n = len(self.queries), len(self.targets)
        if m > n:
            raise IntegrityError(f"M={m} queries exceed N={n} targets")
        authors = [t.author_id for t in self.targets]
        if len(set(authors)) != n:
            raise IntegrityError("target authors are not pairwise distinct")
        for i, q in enumerate(self.queries):
            t = self.targets[i]
            if q.author_id != t.author_id:
                raise IntegrityError(f"pairing {i}: query/target author mismatch")
            if set(q.doc_ids) & set(t.doc_ids):
                raise IntegrityError(f"pairing {i}: query and target share documents")

    @property
    def m(self) -> int:
        return len(self.queries)

    @property
    def n(self) -> int:
        return len(self.targets)


@dataclass
class Corpus:
    documents: list[Document] = field(default_factory=list)

    def __len__(self) -> int:
        return len(self.documents)

    def by_author(self) -> dict[str, list[Document]]:
        out: dict[str, list[Document]] = {}
        for d in self.documents:
            out.setdefault(d.author_id, []).append(d)
        return out


def _parse_sentence_spans(raw, text: str, line_no: int) -> tuple[tuple[int, int], ...]:
    spans: list[tuple[int, int]] = []
    prev_end = -1
    for item in raw:
        if not (isinstance(item, (list, tuple)) and len(item) == 2):
            raise ParseError("sentence span must be a [start, end] pair", line_no)
        a, b = int(item[0]), int(item[1])
        if not (0 <= a < b <= len(text)):
            raise ParseError(f"sentence span [{a},{b}] out of range", line_no)
        if a < prev_end:
            raise ParseError("sentence spans overlap or are unordered", line_no)
        prev_end = b
        spans.append((a, b))
    return tuple(spans)


def parse_document(record: dict, line_no: int = 0) -> Document:
    for key in ("doc_id", "author_id", "text"):
        if key not in record:
            raise ParseError(f"missing {key}", line_no)
    text = record["text"]
    if not isinstance(text, str) or not text.strip():
        raise ParseError("text is empty", line_no)
    sentences = None
    if record.get("sentences") is not None:
        sentences = _parse_sentence_spans(record["sentences"], text, line_no)
    return Document(
        doc_id=str(record["doc_id"]),
        author_id=str(record["author_id"]),
        text=text,
        timestamp=int(record.get("timestamp") or 0),
        sentences=sentences,
    )


def load_corpus(path: str) -> Corpus:
    """Load a JSONL corpus. Duplicate doc_id is an integrity error;
    malformed lines raise ParseError with their line number."""
    docs: list[Document] = []
    seen: set[str] = set()
    with open(path, encoding="utf-8") as fh:
        for line_no, line in enumerate(fh, start=1):
            if not line.strip():
                continue
            try:
                record = json.loads(line)
            except json.JSONDecodeError as exc:
                raise ParseError(f"invalid JSON ({exc.msg})", line_no) from exc
            if not isinstance(record, dict):
                raise ParseError("record is not an object", line_no)
            doc = parse_document(record, line_no)
            if doc.doc_id in seen:
                raise IntegrityError(f"line {line_no}: duplicate doc_id {doc.doc_id!r}")
            seen.add(doc.doc_id)
            docs.append(doc)
    return Corpus(documents=docs)


def build_episodes(corpus: Corpus, episode_len: int = DEFAULT_EPISODE_LEN) -> list[Episode]:
    """Chunk each author's (timestamp, doc_id)-sorted documents into
    consecutive non-overlapping windows; a short trailing remainder is
    dropped. Deterministic for a given corpus."""
    if episode_len < 1:
        raise ValueError("episode_len must be >= 1")
    episodes: list[Episode] = []
    for author in sorted(corpus.by_author()):
        docs = sorted(corpus.by_author()[author], key=lambda d: (d.timestamp, d.doc_id))
        for k in range(len(docs) // episode_len):
            window = docs[k * episode_len : (k + 1) * episode_len]
            episodes.append(
                Episode(
                    episode_id=f"{author}:{k}",
                    author_id=author,
                    documents=tuple(window),
                )
            )
    return episodes


def build_query_target(episodes: list[Episode], rng_seed: int) -> QueryTargetSet:
    """One target per author (seeded pick); authors with >= 2 episodes also
    contribute one paired query. M = #authors with >= 2 episodes,
    N = #authors with >= 1."""
    by_author: dict[str, list[Episode]] = {}
    for ep in episodes:
        by_author.setdefault(ep.author_id, []).append(ep)
    if len(by_author) < 2:
        raise StyleProbeError("ranking needs episodes from at least 2 authors")
    rng = random.Random(rng_seed)
    paired_targets: list[Episode] = []
    queries: list[Episode] = []
    distractors: list[Episode] = []
    for author in sorted(by_author):
        eps = sorted(by_author[author], key=lambda e: e.episode_id)
        target = eps.pop(rng.randrange(len(eps)))
        if eps:
            queries.append(eps[rng.randrange(len(eps))])
            paired_targets.append(target)
        else:
            distractors.append(target)
    return QueryTargetSet(queries=tuple(queries), targets=tuple(paired_targets + distractors))


def episode_to_record(ep: Episode) -> dict:
    return {
        "episode_id": ep.episode_id,
        "author_id": ep.author_id,
        "documents": [
            {
                "doc_id": d.doc_id,
                "author_id": d.author_id,
                "timestamp": d.timestamp,
                "text": d.text,
                **({"sentences": [list(s) for s in d.sentences]} if d.sentences else {}),
            }
            for d in ep.documents
        ],
    }


def episode_from_record(record: dict, line_no: int = 0) -> Episode:
    for key in ("episode_id", "author_id", "documents"):
        if key not in record:
            raise ParseError(f"missing {key}", line_no)
    docs = tuple(parse_document(d, line_no) for d in record["documents"])
    return Episode(
        episode_id=str(record["episode_id"]),
        author_id=str(record["author_id"]),
        documents=docs,
    )


def save_episodes(episodes: list[Episode], path: str) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        for ep in episodes:
            fh.write(json.dumps(episode_to_record(ep), ensure_ascii=False) + "\n")


def load_episodes(path: str) -> list[Episode]:
    episodes: list[Episode] = []
    with open(path, encoding="utf-8") as fh:
        for line_no, line in enumerate(fh, start=1):
            if not line.strip():
                continue
            try:
                record = json.loads(line)
            except json.JSONDecodeError as exc:
                raise ParseError(f"invalid JSON ({exc.msg})", line_no) from exc
            episodes.append(episode_from_record(record, line_no))
    return episodes
