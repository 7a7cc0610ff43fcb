"""Group-pooled label discrimination: sample label-homogeneous document
groups, score pairs of groups by the dot product of their mean
embeddings, and summarize with ROC / EER / AUC plus confidence intervals.
"""

from __future__ import annotations

import csv
import json
import math
import random
import statistics
from dataclasses import dataclass, replace

from .corpus import Document, Episode
from .embedding import ProviderSpec, dot, embed_episodes, mean_pool
from .errors import InfeasibleError, ParseError, StyleProbeError

_BOOT_RETRY_CAP = 100


@dataclass(frozen=True)
class LabeledDocument:
    doc_id: str
    labels: frozenset[str]
    text: str

    def __post_init__(self):
        if not self.labels:
            raise StyleProbeError(f"document {self.doc_id!r} has no labels")


@dataclass(frozen=True)
class Trial:
    group_a: tuple[str, ...]
    group_b: tuple[str, ...]
    same_label: bool
    score: float | None = None


@dataclass(frozen=True)
class TrialSet:
    trials: tuple[Trial, ...]
    group_size: int


@dataclass(frozen=True)
class RocCurve:
    points: tuple[tuple[float, float], ...]  # (fpr, tpr), threshold descending
    thresholds: tuple[float, ...]
    auc: float
    eer: float


def load_labeled_corpus(path: str) -> list[LabeledDocument]:
    """JSONL records {doc_id, labels: [string], text}."""
    docs: list[LabeledDocument] = []
    seen: set[str] = set()
    with open(path, encoding="utf-8") as fh:
        for line_no, line in enumerate(fh, start=1):
            if not line.strip():
                continue
            try:
                record = json.loads(line)
            except json.JSONDecodeError as exc:
                raise ParseError(f"invalid JSON ({exc.msg})", line_no) from exc
            for key in ("doc_id", "labels", "text"):
                if key not in record:
                    raise ParseError(f"missing {key}", line_no)
            if record["doc_id"] in seen:
                raise ParseError(f"duplicate doc_id {record['doc_id']!r}", line_no)
            seen.add(record["doc_id"])
            docs.append(
                LabeledDocument(
                    doc_id=str(record["doc_id"]),
                    labels=frozenset(str(s) for s in record["labels"]),
                    text=str(record["text"]),
                )
            )
    return docs


def sample_trials(
    docs: list[LabeledDocument],
    group_size: int,
    n_trials: int,
    positive_fraction: float = 0.5,
    rng_seed: int = 0,
) -> TrialSet:
    """Positives draw two disjoint same-label groups; negatives draw one
    group from each of two distinct labels (disjoint even when documents
    carry both labels). Deterministic under the seed."""
    if group_size < 1:
        raise StyleProbeError("group_size must be >= 1")
    if not 0.0 <= positive_fraction <= 1.0:
        raise StyleProbeError("positive_fraction must lie in [0, 1]")
    by_label: dict[str, list[str]] = {}
    for d in docs:
        for label in sorted(d.labels):
            by_label.setdefault(label, []).append(d.doc_id)
    pos_labels = sorted(l for l, ids in by_label.items() if len(ids) >= 2 * group_size)
    neg_labels = sorted(l for l, ids in by_label.items() if len(ids) >= group_size)
    n_pos = round(positive_fraction * n_trials)
    n_neg = n_trials - n_pos
    if n_pos > 0 and not pos_labels:
        raise InfeasibleError(
            f"no label has the 2*{group_size} documents needed for a positive trial"
        )
    if n_neg > 0 and len(neg_labels) < 2:
        raise InfeasibleError("negative trials need two labels with enough documents")
    rng = random.Random(rng_seed)
    trials: list[Trial] = []
    for _ in range(n_pos):
        label = pos_labels[rng.randrange(len(pos_labels))]
        picked = rng.sample(by_label[label], 2 * group_size)
        trials.append(
            Trial(tuple(picked[:group_size]), tuple(picked[group_size:]), same_label=True)
        )
    for _ in range(n_neg):
        la, lb = rng.sample(neg_labels, 2)
        group_a = tuple(rng.sample(by_label[la], group_size))
        pool_b = [d for d in by_label[lb] if d not in set(group_a)]
        if len(pool_b) < group_size:
            raise InfeasibleError(
                f"labels {la!r}/{lb!r} cannot supply disjoint groups of size {group_size}"
            )
        group_b = tuple(rng.sample(pool_b, group_size))
        trials.append(Trial(group_a, group_b, same_label=False))
    return TrialSet(trials=tuple(trials), group_size=group_size)


def score_trials(ts: TrialSet, docs: list[LabeledDocument], provider: ProviderSpec) -> TrialSet:
    """Embed each document as a singleton episode (cached across trials),
    then score each trial by the dot product of the group means."""
    needed = sorted({doc_id for t in ts.trials for doc_id in t.group_a + t.group_b})
    by_id = {d.doc_id: d for d in docs}
    missing = [i for i in needed if i not in by_id]
    if missing:
        raise StyleProbeError(f"trials reference unknown documents: {missing[:5]}")
    episodes = [
        Episode(
            episode_id=doc_id,
            author_id=doc_id,
            documents=(Document(doc_id=doc_id, author_id=doc_id, text=by_id[doc_id].text),),
        )
        for doc_id in needed
    ]
    vectors = dict(zip(needed, embed_episodes(provider, episodes)))
    scored = tuple(
        replace(
            t,
            score=dot(
                mean_pool([vectors[i] for i in t.group_a]),
                mean_pool([vectors[i] for i in t.group_b]),
            ),
        )
        for t in ts.trials
    )
    return TrialSet(trials=scored, group_size=ts.group_size)


def roc(scores: list[float], labels: list[bool]) -> RocCurve:
    """Threshold sweep over distinct scores descending; tied scores move
    as one step. AUC by trapezoid, EER by interpolation at FPR = 1 - TPR."""
    if len(scores) != len(labels):
        raise StyleProbeError("scores and labels must align")
    n_pos = sum(1 for l in labels if l)
    n_neg = len(labels) - n_pos
    if n_pos == 0 or n_neg == 0:
        raise StyleProbeError("ROC needs at least one positive and one negative")
    order = sorted(range(len(scores)), key=lambda i: -scores[i])
    points: list[tuple[float, float]] = [(0.0, 0.0)]
    thresholds: list[float] = [float("inf")]
    tp = fp = 0
    i = 0
    while i < len(order):
        j = i
        threshold = scores[order[i]]
        while j < len(order) and scores[order[j]] == threshold:
            if labels[order[j]]:
                tp += 1
            else:
                fp += 1
            j += 1
        points.append((fp / n_neg, tp / n_pos))
        thresholds.append(threshold)
        i = j
    auc = 0.0
    for (x0, y0), (x1, y1) in zip(points, points[1:]):
        auc += (x1 - x0) * (y0 + y1) / 2.0
    return RocCurve(
        points=tuple(points),
        thresholds=tuple(thresholds),
        auc=auc,
        eer=_eer_from_points(points),
    )


def _eer_from_points(points) -> float:
    """FPR at the crossing of FPR and FNR, interpolated linearly along
    the ROC segment containing the sign change."""
    for (x0, y0), (x1, y1) in zip(points, points[1:]):
        g0 = x0 - (1.0 - y0)
        g1 = x1 - (1.0 - y1)
        if g1 < 0:
            continue
        if g1 == 0:
            return x1
        if g0 > 0:  # crossing happened before the sweep started
            return x0
        # g0 <= 0 < g1: solve g(s) = 0 on the segment.
        s = -g0 / (g1 - g0)
        return x0 + s * (x1 - x0)
    return points[-1][0]


def mann_whitney_auc(scores: list[float], labels: list[bool]) -> float:
    """O(n^2) pair-counting AUC with half credit for ties (oracle)."""
    pos = [s for s, l in zip(scores, labels) if l]
    neg = [s for s, l in zip(scores, labels) if not l]
    if not pos or not neg:
        raise StyleProbeError("needs both classes")
    wins = 0.0
    for p in pos:
        for q in neg:
            if p > q:
                wins += 1.0
            elif p == q:
                wins += 0.5
    return wins / (len(pos) * len(neg))


def auc_ci(
    auc: float, n_pos: int, n_neg: int, confidence: float = 0.95
) -> tuple[float, float]:
    """Hanley-McNeil standard error around the AUC, clipped to [0, 1]."""
    if n_pos < 1 or n_neg < 1:
        raise StyleProbeError("auc_ci needs n_pos, n_neg >= 1")
    a = auc
    q1 = a / (2.0 - a)
    q2 = 2.0 * a * a / (1.0 + a)
    se2 = (a * (1 - a) + (n_pos - 1) * (q1 - a * a) + (n_neg - 1) * (q2 - a * a)) / (
        n_pos * n_neg
    )
    se = math.sqrt(max(se2, 0.0))
    z = statistics.NormalDist().inv_cdf(0.5 + confidence / 2.0)
    return max(0.0, a - z * se), min(1.0, a + z * se)


def eer_ci(
    scores: list[float],
    labels: list[bool],
    n_boot: int = 1000,
    confidence: float = 0.95,
    rng_seed: int = 0,
) -> tuple[float, float]:
    """Percentile bootstrap over (score, label) trial resampling. Each
    resample uses an RNG derived from (seed, index); a resample missing
    one class is redrawn, with a retry cap."""
    base = roc(scores, labels)  # validates inputs
    del base
    n = len(scores)
    eers: list[float] = []
    for i in range(n_boot):
        rng = random.Random(f"{rng_seed}|{i}")
        for attempt in range(_BOOT_RETRY_CAP):
            idx = [rng.randrange(n) for _ in range(n)]
            s = [scores[j] for j in idx]
            l = [labels[j] for j in idx]
            if any(l) and not all(l):
                eers.append(roc(s, l).eer)
                break
        else:
            raise StyleProbeError("bootstrap could not draw a two-class resample")
    eers.sort()
    alpha = 1.0 - confidence
    from .stats import percentile

    return percentile(eers, alpha / 2.0), percentile(eers, 1.0 - alpha / 2.0)


@dataclass(frozen=True)
class SweepRow:
    group_size: int
    n_trials: int
    auc: float | None
    auc_lo: float | None
    auc_hi: float | None
    eer: float | None
    eer_lo: float | None
    eer_hi: float | None
    error: str = ""


def sweep_group_size(
    docs: list[LabeledDocument],
    sizes: list[int],
    provider: ProviderSpec,
    n_trials: int,
    seed: int,
    positive_fraction: float = 0.5,
    n_boot: int = 1000,
) -> tuple[list[SweepRow], dict[int, RocCurve]]:
    """One row per group size; infeasible sizes are reported per-row and
    the remaining sizes still run."""
    rows: list[SweepRow] = []
    curves: dict[int, RocCurve] = {}
    for size in sizes:
        try:
            ts = sample_trials(docs, size, n_trials, positive_fraction, rng_seed=seed)
            ts = score_trials(ts, docs, provider)
            scores = [t.score for t in ts.trials]
            labels = [t.same_label for t in ts.trials]
            curve = roc(scores, labels)
            n_pos = sum(labels)
            lo, hi = auc_ci(curve.auc, n_pos, len(labels) - n_pos)
            elo, ehi = eer_ci(scores, labels, n_boot=n_boot, rng_seed=seed)
            curves[size] = curve
            rows.append(
                SweepRow(size, n_trials, curve.auc, lo, hi, curve.eer, elo, ehi)
            )
        except (InfeasibleError, StyleProbeError) as exc:
            rows.append(
                SweepRow(size, n_trials, None, None, None, None, None, None, error=str(exc))
            )
    return rows, curves


def write_sweep_csv(rows: list[SweepRow], path: str) -> None:
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(
            ["group_size", "n_trials", "auc", "auc_lo", "auc_hi", "eer", "eer_lo", "eer_hi", "error"]
        )
        for r in rows:
            writer.writerow(
                [
                    r.group_size,
                    r.n_trials,
                    *("" if v is None else repr(v) for v in
                      (r.auc, r.auc_lo, r.auc_hi, r.eer, r.eer_lo, r.eer_hi)),
                    r.error,
                ]
            )


def write_roc_csv(curve: RocCurve, path: str) -> None:
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(["fpr", "tpr", "threshold"])
        for (fpr, tpr), threshold in zip(curve.points, curve.thresholds):
            writer.writerow([repr(fpr), repr(tpr), repr(threshold)])
