"""Retrieval evaluation: per-query true-target ranks and mean reciprocal
rank, plus before/after-paraphrase rank drift."""

from __future__ import annotations

import csv
import json
from dataclasses import dataclass

import numpy as np

from .corpus import QueryTargetSet
from .embedding import ProviderSpec, embed_episodes
from .errors import ProviderError, StyleProbeError


@dataclass(frozen=True)
class RankingReport:
    per_query: tuple[tuple[str, int], ...]  # (query_id, rank of true target)
    n_targets: int

    @property
    def n_queries(self) -> int:
        return len(self.per_query)

    @property
    def ranks(self) -> list[int]:
        return [r for _, r in self.per_query]

    @property
    def mrr(self) -> float:
        return mrr(self.ranks)


@dataclass(frozen=True)
class DriftReport:
    # (query_id, r, r_prime, delta, similarity or None)
    pairs: tuple[tuple[str, int, int, int, float | None], ...]
    kendall_tau: float | None = None


def rank_targets(query_vec: np.ndarray, target_vecs, true_index: int) -> int:
    """1-based rank of the true target among all targets scored by dot
    product; equal scores break ties by lower target index."""
    mat = np.asarray(list(target_vecs), dtype=np.float64)
    if mat.ndim != 2 or mat.shape[0] == 0:
        raise StyleProbeError("rank_targets needs a non-empty target list")
    if not 0 <= true_index < mat.shape[0]:
        raise StyleProbeError(f"true_index {true_index} out of range")
    q = np.asarray(query_vec, dtype=np.float64)
    if q.shape[0] != mat.shape[1]:
        raise ProviderError(f"dimension mismatch: query {q.shape[0]}, targets {mat.shape[1]}")
    scores = mat @ q
    s_true = scores[true_index]
    greater = int(np.sum(scores > s_true))
    tied_before = int(np.sum(scores[:true_index] == s_true))
    return 1 + greater + tied_before


def mrr(ranks: list[int]) -> float:
    if not ranks:
        raise StyleProbeError("mrr of an empty rank list")
    if any(r < 1 for r in ranks):
        raise StyleProbeError("ranks must be >= 1")
    return sum(1.0 / r for r in ranks) / len(ranks)


def evaluate(qts: QueryTargetSet, provider: ProviderSpec) -> RankingReport:
    """Embed queries and targets once, then rank the paired target for
    every query."""
    query_vecs = embed_episodes(provider, list(qts.queries))
    target_vecs = embed_episodes(provider, list(qts.targets))
    per_query = tuple(
        (qts.queries[i].episode_id, rank_targets(query_vecs[i], target_vecs, i))
        for i in range(qts.m)
    )
    return RankingReport(per_query=per_query, n_targets=qts.n)


def compare_rankings(
    orig: RankingReport,
    para: RankingReport,
    similarities: list[float] | None = None,
) -> DriftReport:
    """Join two reports by query id and compute rank drift r' - r; with
    similarity scores supplied, also their Kendall correlation with the
    drift."""
    para_by_id = dict(para.per_query)
    if set(para_by_id) != {qid for qid, _ in orig.per_query}:
        raise StyleProbeError("reports cover different query ids")
    if similarities is not None and len(similarities) != len(orig.per_query):
        raise StyleProbeError("similarity list length does not match query count")
    pairs = []
    for i, (qid, r) in enumerate(orig.per_query):
        r_prime = para_by_id[qid]
        sim = similarities[i] if similarities is not None else None
        pairs.append((qid, r, r_prime, r_prime - r, sim))
    tau = None
    if similarities is not None:
        from .stats import kendall_tau

        deltas = [p[3] for p in pairs]
        tau = kendall_tau(similarities, [float(d) for d in deltas]).statistic
    return DriftReport(pairs=tuple(pairs), kendall_tau=tau)


def write_ranking_csv(report: RankingReport, path: str) -> None:
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(["query_id", "rank", "reciprocal"])
        for qid, rank in report.per_query:
            writer.writerow([qid, rank, repr(1.0 / rank)])


def write_ranking_summary(report: RankingReport, path: str) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        json.dump({"mrr": report.mrr, "m": report.n_queries, "n": report.n_targets}, fh)
        fh.write("\n")


def write_drift_csv(report: DriftReport, path: str) -> None:
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(["query_id", "r", "r_prime", "delta", "similarity"])
        for qid, r, r_prime, delta, sim in report.pairs:
            writer.writerow([qid, r, r_prime, delta, "" if sim is None else repr(sim)])
