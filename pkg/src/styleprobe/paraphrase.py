"""Paraphrase ingestion, semantic-retention scoring, episode gating, and
surface-change measurement.

External (e.g. neural) similarity scores are authoritative when supplied;
the built-in token-overlap F1 is a hermetic fallback and is labeled as
such in reports.
"""

from __future__ import annotations

import csv
from collections import Counter
from dataclasses import dataclass

from .corpus import Document, Episode
from .errors import IntegrityError, ParseError, StyleProbeError

GATE_KEEP = 8
GATE_EPISODE_LEN = 16


@dataclass(frozen=True)
class ParaphrasePair:
    original: Document
    paraphrase: Document

    def sentence_alignment(self) -> list[tuple[str, str]]:
        """Positional 1:1 alignment up to the shorter sentence count;
        excess sentences on either side are ignored."""
        orig = self.original.sentence_texts()
        para = self.paraphrase.sentence_texts()
        return list(zip(orig, para))


@dataclass(frozen=True)
class GatedEpisodePair:
    original_episode: Episode
    paraphrased_episode: Episode
    per_doc_scores: tuple[float, ...]
    kept_indices: tuple[int, ...]


def token_f1(a: str, b: str) -> float:
    """Casefolded whitespace-token multiset F1. Both empty scores 1,
    exactly one empty scores 0."""
    ta = Counter(a.casefold().split())
    tb = Counter(b.casefold().split())
    if not ta and not tb:
        return 1.0
    if not ta or not tb:
        return 0.0
    overlap = sum((ta & tb).values())
    if overlap == 0:
        return 0.0
    precision = overlap / sum(ta.values())
    recall = overlap / sum(tb.values())
    return 2 * precision * recall / (precision + recall)


def levenshtein(a: str, b: str) -> int:
    """Character-level edit distance, two-row DP."""
    if len(a) < len(b):
        a, b = b, a
    if not b:
        return len(a)
    previous = list(range(len(b) + 1))
    for i, ca in enumerate(a, start=1):
        current = [i]
        for j, cb in enumerate(b, start=1):
            cost = previous[j - 1] + (ca != cb)
            current.append(min(previous[j] + 1, current[j - 1] + 1, cost))
        previous = current
    return previous[-1]


def normalized_edit_distance(a: str, b: str) -> float:
    """Levenshtein(a, b) / max(|a|, |b|); two empty strings score 0."""
    longest = max(len(a), len(b))
    if longest == 0:
        return 0.0
    return levenshtein(a, b) / longest


def score_pair(pair: ParaphrasePair, scorer=token_f1) -> float:
    """Mean similarity over positionally aligned sentences, each in [0, 1]."""
    alignment = pair.sentence_alignment()
    if not alignment:
        raise StyleProbeError(
            f"no aligned sentences for {pair.original.doc_id!r} / {pair.paraphrase.doc_id!r}"
        )
    scores = []
    for orig_sent, para_sent in alignment:
        s = scorer(orig_sent, para_sent)
        if not 0.0 <= s <= 1.0:
            raise StyleProbeError(f"scorer returned {s!r} outside [0, 1]")
        scores.append(s)
    return sum(scores) / len(scores)


def gate_episode(
    orig: Episode,
    para: Episode,
    scorer=token_f1,
    episode_len: int = GATE_EPISODE_LEN,
    keep: int = GATE_KEEP,
    pair_scorer=None,
) -> GatedEpisodePair:
    """Keep the half of the episode whose paraphrases best retain meaning
    and drop the same indices from both sides. Ties keep the lower index.

    ``pair_scorer``, when given, scores a whole ParaphrasePair directly
    (e.g. from an ingested score table) instead of averaging ``scorer``
    over aligned sentences.
    """
    if len(orig.documents) != episode_len or len(para.documents) != episode_len:
        raise StyleProbeError(
            f"gate_episode expects aligned episodes of length {episode_len}, "
            f"got {len(orig.documents)} and {len(para.documents)}"
        )
    if pair_scorer is None:
        pair_scorer = lambda pair: score_pair(pair, scorer)
    scores = tuple(
        pair_scorer(ParaphrasePair(o, p))
        for o, p in zip(orig.documents, para.documents)
    )
    order = sorted(range(episode_len), key=lambda i: (-scores[i], i))
    kept = tuple(sorted(order[:keep]))
    gated_orig = Episode(
        episode_id=orig.episode_id + ":gated",
        author_id=orig.author_id,
        documents=tuple(orig.documents[i] for i in kept),
    )
    gated_para = Episode(
        episode_id=para.episode_id + ":gated",
        author_id=para.author_id,
        documents=tuple(para.documents[i] for i in kept),
    )
    return GatedEpisodePair(
        original_episode=gated_orig,
        paraphrased_episode=gated_para,
        per_doc_scores=scores,
        kept_indices=kept,
    )


def ingest_scores(path: str) -> dict[tuple[str, str], float]:
    """Load externally produced similarity scores from a CSV of
    orig_id,para_id,score rows. Values must lie in [0, 1] up to 1e-6
    slack (then clamped); duplicate keys are an error."""
    out: dict[tuple[str, str], float] = {}
    with open(path, encoding="utf-8", newline="") as fh:
        reader = csv.reader(fh)
        for line_no, row in enumerate(reader, start=1):
            if not row or (line_no == 1 and row[0].strip().lower() == "orig_id"):
                continue
            if len(row) != 3:
                raise ParseError(f"expected 3 columns, got {len(row)}", line_no)
            key = (row[0], row[1])
            try:
                value = float(row[2])
            except ValueError as exc:
                raise ParseError(f"bad score {row[2]!r}", line_no) from exc
            if value < -1e-6 or value > 1.0 + 1e-6:
                raise ParseError(f"score {value} outside [0, 1]", line_no)
            if key in out:
                raise IntegrityError(f"line {line_no}: duplicate score key {key}")
            out[key] = min(1.0, max(0.0, value))
    return out


def make_external_scorer(scores: dict[tuple[str, str], float]):
    """Document-level scorer backed by an ingested score table; returns a
    function usable in place of score_pair for gating."""

    def scorer(pair: ParaphrasePair) -> float:
        key = (pair.original.doc_id, pair.paraphrase.doc_id)
        if key not in scores:
            raise StyleProbeError(f"no external score for pair {key}")
        return scores[key]

    return scorer


def histogram(values: list[float], n_bins: int, lo: float = 0.0, hi: float = 1.0) -> list[tuple[float, float, int]]:
    """Fixed-width bins over [lo, hi]; the last bin is closed on the
    right. Bin-exact and reproducible for identical inputs."""
    if n_bins < 1:
        raise ValueError("n_bins must be >= 1")
    if hi <= lo:
        raise ValueError("hi must exceed lo")
    counts = [0] * n_bins
    width = (hi - lo) / n_bins
    for v in values:
        if v < lo or v > hi:
            raise StyleProbeError(f"value {v} outside histogram range [{lo}, {hi}]")
        idx = min(int((v - lo) / width), n_bins - 1)
        counts[idx] += 1
    return [(lo + i * width, lo + (i + 1) * width, counts[i]) for i in range(n_bins)]


def write_histogram_csv(bins: list[tuple[float, float, int]], path: str) -> None:
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(["bin_lo", "bin_hi", "count"])
        for lo, hi, count in bins:
            writer.writerow([repr(lo), repr(hi), count])
