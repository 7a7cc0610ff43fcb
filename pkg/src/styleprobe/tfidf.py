"""TF-IDF model and score-driven masking.

Scores use raw in-document term frequency and smoothed inverse document
frequency, idf(t) = ln((1 + n_docs) / (1 + df(t))) + 1, so unseen terms
(df = 0) still receive a finite score.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field

from .errors import ParseError, StyleProbeError
from .masking import DEFAULT_MASK_TOKEN


@dataclass(frozen=True)
class TfIdfModel:
    vocabulary: dict[str, int]  # term -> document frequency
    n_docs: int
    casefold: bool = True

    def __post_init__(self):
        if self.n_docs < 1:
            raise ValueError("n_docs must be >= 1")
        for term, df in self.vocabulary.items():
            if not (1 <= df <= self.n_docs):
                raise ValueError(f"df({term!r})={df} out of range [1, {self.n_docs}]")

    def _key(self, term: str) -> str:
        return term.casefold() if self.casefold else term

    def idf(self, term: str) -> float:
        df = self.vocabulary.get(self._key(term), 0)
        return math.log((1 + self.n_docs) / (1 + df)) + 1.0

    def save(self, path: str) -> None:
        with open(path, "w", encoding="utf-8") as fh:
            json.dump(
                {"n_docs": self.n_docs, "casefold": self.casefold, "df": self.vocabulary},
                fh, ensure_ascii=False,
            )

    @classmethod
    def load(cls, path: str) -> "TfIdfModel":
        with open(path, encoding="utf-8") as fh:
            try:
                data = json.load(fh)
            except json.JSONDecodeError as exc:
                raise ParseError(f"invalid model file: {exc.msg}") from exc
        return cls(vocabulary=dict(data["df"]), n_docs=int(data["n_docs"]),
                   casefold=bool(data.get("casefold", True)))


def fit_tfidf(docs: list[list[str]], casefold: bool = True) -> TfIdfModel:
    """Document frequencies over tokenized documents."""
    if not docs:
        raise StyleProbeError("cannot fit a TF-IDF model on an empty corpus")
    df: dict[str, int] = {}
    for tokens in docs:
        terms = {t.casefold() if casefold else t for t in tokens}
        for term in terms:
            df[term] = df.get(term, 0) + 1
    return TfIdfModel(vocabulary=df, n_docs=len(docs), casefold=casefold)


def tfidf_score(model: TfIdfModel, doc: list[str]) -> list[tuple[int, float]]:
    """Per-token (index, tf * idf) with raw term frequency."""
    counts: dict[str, int] = {}
    for tok in doc:
        key = model._key(tok)
        counts[key] = counts.get(key, 0) + 1
    return [(i, counts[model._key(tok)] * model.idf(tok)) for i, tok in enumerate(doc)]


def tertle_mask_count(p: float, n_tokens: int) -> int:
    """Round-half-up of p * n."""
    return int(math.floor(p * n_tokens + 0.5))


@dataclass(frozen=True)
class TertleMaskedDocument:
    doc_id: str
    tokens: tuple[str, ...]
    masked_indices: tuple[int, ...]
    mask_token: str = DEFAULT_MASK_TOKEN
    schema: str = "tertle"

    def text(self) -> str:
        return " ".join(self.tokens)


def mask_tertle(
    doc: list[str],
    model: TfIdfModel,
    p: float,
    mask_token: str = DEFAULT_MASK_TOKEN,
    doc_id: str = "",
) -> TertleMaskedDocument:
    """Replace the top-scoring proportion p of tokens; score ties are
    broken by earlier position first."""
    if not 0.0 <= p <= 1.0:
        raise ValueError("p must lie in [0, 1]")
    if not mask_token:
        raise ValueError("mask_token must be non-empty")
    scores = tfidf_score(model, doc)
    k = tertle_mask_count(p, len(doc))
    order = sorted(scores, key=lambda pair: (-pair[1], pair[0]))
    chosen = sorted(i for i, _ in order[:k])
    chosen_set = set(chosen)
    tokens = tuple(mask_token if i in chosen_set else tok for i, tok in enumerate(doc))
    return TertleMaskedDocument(
        doc_id=doc_id,
        tokens=tokens,
        masked_indices=tuple(chosen),
        mask_token=mask_token,
        schema=f"tertle:p={p:g}",
    )
