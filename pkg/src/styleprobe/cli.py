"""Subcommand front-end for the probing experiments.

Exit codes: 0 success, 1 input/validation failure, 2 provider/transport
failure. Every command takes its randomness from explicit seeds, and a
fixed seed yields byte-identical output files regardless of --threads.
"""

from __future__ import annotations

import csv
import functools
import json
import os
import sys

import click
from click.core import ParameterSource

from . import corpus as corpus_mod
from . import discrimination as disc_mod
from . import masking as masking_mod
from . import paraphrase as para_mod
from . import ranking as ranking_mod
from . import stats as stats_mod
from . import tfidf as tfidf_mod
from .embedding import DEFAULT_DIMENSION, ProviderSpec
from .errors import ProviderError, StyleProbeError

PROVIDER_URL_ENV = "STYLEPROBE_PROVIDER_URL"


def _read_config(path: str) -> dict[str, str]:
    """Key/value config lines: ``key = value``, # comments ignored."""
    out: dict[str, str] = {}
    with open(path, encoding="utf-8") as fh:
        for line_no, line in enumerate(fh, start=1):
            stripped = line.strip()
            if not stripped or stripped.startswith("#"):
                continue
            if "=" not in stripped:
                raise StyleProbeError(f"config line {line_no}: expected key = value")
            key, value = stripped.split("=", 1)
            out[key.strip().replace("-", "_")] = value.strip().strip('"')
    return out


def _apply_config(ctx: click.Context, params: dict) -> dict:
    """Fill in values from --config for options left at their defaults;
    explicit flags always win."""
    if not params.get("config"):
        return params
    config = _read_config(params["config"])
    merged = dict(params)
    for param in ctx.command.params:
        name = param.name
        if name in ("config",) or name not in config:
            continue
        if ctx.get_parameter_source(name) == ParameterSource.DEFAULT:
            merged[name] = param.type.convert(config[name], param, ctx)
    return merged


def _handle_errors(func):
    @functools.wraps(func)
    def wrapper(*args, **kwargs):
        try:
            return func(*args, **kwargs)
        except ProviderError as exc:
            click.echo(f"error: {exc}", err=True)
            sys.exit(2)
        except (StyleProbeError, OSError, ValueError) as exc:
            click.echo(f"error: {exc}", err=True)
            sys.exit(1)

    return wrapper


def _provider_options(func):
    for deco in reversed(
        [
            click.option("--provider", default="mock", show_default=True,
                         help="mock | file:PATH | remote:URL (or remote with "
                              f"${PROVIDER_URL_ENV})"),
            click.option("--dimension", type=int, default=DEFAULT_DIMENSION, show_default=True),
            click.option("--batch-size", type=int, default=32, show_default=True),
            click.option("--author-weight", type=float, default=0.8, show_default=True,
                         help="mock provider author/text mixture weight"),
        ]
    ):
        func = deco(func)
    return func


def _make_provider(provider: str, dimension: int, batch_size: int, seed: int,
                   author_weight: float = 0.8) -> ProviderSpec:
    if provider == "mock":
        return ProviderSpec("mock", dimension=dimension, batch_size=batch_size,
                            seed=seed, author_weight=author_weight)
    if provider.startswith("file:"):
        return ProviderSpec("file", dimension=dimension, location=provider[5:],
                            batch_size=batch_size)
    if provider.startswith("remote:"):
        return ProviderSpec("remote", dimension=dimension, location=provider[7:],
                            batch_size=batch_size)
    if provider == "remote":
        url = os.environ.get(PROVIDER_URL_ENV, "")
        if not url:
            raise StyleProbeError(f"provider 'remote' needs ${PROVIDER_URL_ENV} or remote:URL")
        return ProviderSpec("remote", dimension=dimension, location=url, batch_size=batch_size)
    raise StyleProbeError(f"unknown provider {provider!r}")


@click.group()
def main():
    """Probing toolkit for authorship embeddings."""


@main.command("mask")
@click.option("--config", type=click.Path(exists=True), default=None)
@click.option("--conllu", type=click.Path(exists=True), default=None,
              help="tagged input for POS-based masking")
@click.option("--level", type=click.Choice(masking_mod.PERTLE_LEVELS), default=None)
@click.option("--tertle", is_flag=True, help="mask by TF-IDF score instead of POS")
@click.option("--tokens", type=click.Path(exists=True), default=None,
              help="tokenized JSONL for --tertle ({doc_id, tokens})")
@click.option("--model", type=click.Path(exists=True), default=None,
              help="fitted TF-IDF model (from tfidf-fit)")
@click.option("--p", type=float, default=None, help="proportion masked per document")
@click.option("--mask-token", default=masking_mod.DEFAULT_MASK_TOKEN, show_default=True)
@click.option("--out", required=True, type=click.Path(), help="masked corpus JSONL")
@click.option("--report", type=click.Path(), default=None, help="proportions CSV")
@click.pass_context
@_handle_errors
def cmd_mask(ctx, **params):
    """Apply a masking schema and write the masked corpus."""
    params = _apply_config(ctx, params)
    rows: list[tuple[str, int, int]] = []  # doc_id, masked, total
    records: list[dict] = []
    if params["tertle"]:
        if not (params["tokens"] and params["model"] is not None and params["p"] is not None):
            raise StyleProbeError("--tertle needs --tokens, --model, and --p")
        model = tfidf_mod.TfIdfModel.load(params["model"])
        for doc_id, author_id, tokens in _read_token_docs(params["tokens"]):
            masked = tfidf_mod.mask_tertle(tokens, model, params["p"],
                                           params["mask_token"], doc_id=doc_id)
            records.append({"doc_id": doc_id, "author_id": author_id,
                            "text": masked.text(), "mask_schema": masked.schema})
            rows.append((doc_id, len(masked.masked_indices), len(tokens)))
    else:
        if not (params["conllu"] and params["level"]):
            raise StyleProbeError("POS masking needs --conllu and --level")
        for doc in masking_mod.parse_conllu(params["conllu"]):
            masked = masking_mod.mask_pertle(doc, params["level"], params["mask_token"])
            records.append({"doc_id": doc.doc_id, "author_id": "",
                            "text": masked.text(), "mask_schema": masked.schema})
            rows.append((doc.doc_id, len(masked.masked_indices), len(doc.tokens)))
    with open(params["out"], "w", encoding="utf-8") as fh:
        for record in records:
            fh.write(json.dumps(record, ensure_ascii=False) + "\n")
    if params["report"]:
        _write_proportions(rows, params["report"])


def _read_token_docs(path: str):
    with open(path, encoding="utf-8") as fh:
        for line_no, line in enumerate(fh, start=1):
            if not line.strip():
                continue
            record = json.loads(line)
            tokens = record.get("tokens")
            if tokens is None:
                tokens = str(record.get("text", "")).split()
            yield str(record.get("doc_id", line_no)), str(record.get("author_id", "")), list(tokens)


def _write_proportions(rows: list[tuple[str, int, int]], path: str) -> None:
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(["doc_id", "n_masked", "n_tokens", "proportion"])
        for doc_id, masked, total in rows:
            writer.writerow([doc_id, masked, total, repr(masked / total if total else 0.0)])
        masked_sum = sum(m for _, m, _ in rows)
        token_sum = sum(t for _, _, t in rows)
        writer.writerow(["__total__", masked_sum, token_sum,
                         repr(masked_sum / token_sum if token_sum else 0.0)])


@main.command("tfidf-fit")
@click.option("--config", type=click.Path(exists=True), default=None)
@click.option("--tokens", required=True, type=click.Path(exists=True),
              help="tokenized JSONL training split")
@click.option("--no-casefold", is_flag=True)
@click.option("--out", required=True, type=click.Path())
@click.pass_context
@_handle_errors
def cmd_tfidf_fit(ctx, **params):
    """Fit a TF-IDF model on a tokenized corpus."""
    params = _apply_config(ctx, params)
    docs = [tokens for _, _, tokens in _read_token_docs(params["tokens"])]
    model = tfidf_mod.fit_tfidf(docs, casefold=not params["no_casefold"])
    model.save(params["out"])


@main.command("episodes")
@click.option("--config", type=click.Path(exists=True), default=None)
@click.option("--corpus", "corpus_path", required=True, type=click.Path(exists=True))
@click.option("--episode-len", type=int, default=corpus_mod.DEFAULT_EPISODE_LEN, show_default=True)
@click.option("--seed", type=int, required=True)
@click.option("--out-episodes", type=click.Path(), default=None)
@click.option("--out-queries", type=click.Path(), default=None)
@click.option("--out-targets", type=click.Path(), default=None)
@click.pass_context
@_handle_errors
def cmd_episodes(ctx, **params):
    """Assemble episodes and (optionally) a query/target split."""
    params = _apply_config(ctx, params)
    corpus = corpus_mod.load_corpus(params["corpus_path"])
    episodes = corpus_mod.build_episodes(corpus, params["episode_len"])
    if params["out_episodes"]:
        corpus_mod.save_episodes(episodes, params["out_episodes"])
    if params["out_queries"] or params["out_targets"]:
        if not (params["out_queries"] and params["out_targets"]):
            raise StyleProbeError("--out-queries and --out-targets go together")
        qts = corpus_mod.build_query_target(episodes, rng_seed=params["seed"])
        corpus_mod.save_episodes(list(qts.queries), params["out_queries"])
        corpus_mod.save_episodes(list(qts.targets), params["out_targets"])


@main.command("rank")
@click.option("--config", type=click.Path(exists=True), default=None)
@click.option("--queries", required=True, type=click.Path(exists=True))
@click.option("--targets", required=True, type=click.Path(exists=True))
@click.option("--paraphrased-queries", type=click.Path(exists=True), default=None)
@click.option("--similarities", type=click.Path(exists=True), default=None,
              help="CSV orig_id,para_id,score for drift correlation")
@click.option("--seed", type=int, default=0, show_default=True)
@click.option("--threads", type=int, default=1, show_default=True,
              help="worker hint; never affects results")
@click.option("--out-dir", required=True, type=click.Path())
@_provider_options
@click.pass_context
@_handle_errors
def cmd_rank(ctx, **params):
    """Rank targets per query and report MRR (optionally with drift)."""
    params = _apply_config(ctx, params)
    queries = corpus_mod.load_episodes(params["queries"])
    targets = corpus_mod.load_episodes(params["targets"])
    qts = corpus_mod.QueryTargetSet(queries=tuple(queries), targets=tuple(targets))
    provider = _make_provider(params["provider"], params["dimension"],
                              params["batch_size"], params["seed"],
                              params["author_weight"])
    os.makedirs(params["out_dir"], exist_ok=True)
    report = ranking_mod.evaluate(qts, provider)
    ranking_mod.write_ranking_csv(report, os.path.join(params["out_dir"], "ranking.csv"))
    ranking_mod.write_ranking_summary(report, os.path.join(params["out_dir"], "summary.json"))
    if params["paraphrased_queries"]:
        para_queries = corpus_mod.load_episodes(params["paraphrased_queries"])
        if len(para_queries) != len(queries):
            raise StyleProbeError("paraphrased query count does not match queries")
        # Paraphrased queries rank against the same target list; pairing is by
        # position, so author/doc-id overlap checks are not re-applied here.
        target_vecs = None
        from .embedding import embed_episodes

        query_vecs = embed_episodes(provider, para_queries)
        target_vecs = embed_episodes(provider, targets)
        per_query = tuple(
            (queries[i].episode_id, ranking_mod.rank_targets(query_vecs[i], target_vecs, i))
            for i in range(len(queries))
        )
        para_report = ranking_mod.RankingReport(per_query=per_query, n_targets=len(targets))
        ranking_mod.write_ranking_csv(
            para_report, os.path.join(params["out_dir"], "para_ranking.csv"))
        ranking_mod.write_ranking_summary(
            para_report, os.path.join(params["out_dir"], "para_summary.json"))
        sims = None
        if params["similarities"]:
            table = para_mod.ingest_scores(params["similarities"])
            sims = []
            for q, p in zip(queries, para_queries):
                key = (q.episode_id, p.episode_id)
                if key not in table:
                    raise StyleProbeError(f"no similarity for pair {key}")
                sims.append(table[key])
        drift = ranking_mod.compare_rankings(report, para_report, sims)
        ranking_mod.write_drift_csv(drift, os.path.join(params["out_dir"], "drift.csv"))
        if drift.kendall_tau is not None:
            with open(os.path.join(params["out_dir"], "drift_summary.json"), "w",
                      encoding="utf-8") as fh:
                json.dump({"kendall_tau": drift.kendall_tau}, fh)
                fh.write("\n")


@main.command("gate")
@click.option("--config", type=click.Path(exists=True), default=None)
@click.option("--orig", required=True, type=click.Path(exists=True))
@click.option("--para", required=True, type=click.Path(exists=True))
@click.option("--scores", type=click.Path(exists=True), default=None,
              help="external similarity CSV; token-F1 fallback otherwise")
@click.option("--bins", type=int, default=20, show_default=True)
@click.option("--out-orig", required=True, type=click.Path())
@click.option("--out-para", required=True, type=click.Path())
@click.option("--hist-scores", type=click.Path(), default=None)
@click.option("--hist-edit", type=click.Path(), default=None)
@click.pass_context
@_handle_errors
def cmd_gate(ctx, **params):
    """Gate aligned original/paraphrase episodes to their best-preserved
    half and emit score and edit-distance histograms."""
    params = _apply_config(ctx, params)
    orig_eps = corpus_mod.load_episodes(params["orig"])
    para_eps = {ep.episode_id: ep for ep in corpus_mod.load_episodes(params["para"])}
    if not orig_eps:
        raise StyleProbeError("no episodes in --orig input")
    pair_scorer = None
    scorer_label = "token_f1 (built-in fallback)"
    if params["scores"]:
        pair_scorer = para_mod.make_external_scorer(para_mod.ingest_scores(params["scores"]))
        scorer_label = "external"
    gated_orig: list[corpus_mod.Episode] = []
    gated_para: list[corpus_mod.Episode] = []
    all_scores: list[float] = []
    all_edits: list[float] = []
    for ep in orig_eps:
        if ep.episode_id not in para_eps:
            raise StyleProbeError(f"no paraphrased episode for {ep.episode_id!r}")
        pair = para_mod.gate_episode(ep, para_eps[ep.episode_id], pair_scorer=pair_scorer)
        gated_orig.append(pair.original_episode)
        gated_para.append(pair.paraphrased_episode)
        all_scores.extend(pair.per_doc_scores)
        all_edits.extend(
            para_mod.normalized_edit_distance(o.text, p.text)
            for o, p in zip(ep.documents, para_eps[ep.episode_id].documents)
        )
    corpus_mod.save_episodes(gated_orig, params["out_orig"])
    corpus_mod.save_episodes(gated_para, params["out_para"])
    if params["hist_scores"]:
        para_mod.write_histogram_csv(
            para_mod.histogram(all_scores, params["bins"]), params["hist_scores"])
    if params["hist_edit"]:
        para_mod.write_histogram_csv(
            para_mod.histogram(all_edits, params["bins"]), params["hist_edit"])
    click.echo(json.dumps({"episodes": len(gated_orig), "scorer": scorer_label}))


@main.command("discriminate")
@click.option("--config", type=click.Path(exists=True), default=None)
@click.option("--labeled", required=True, type=click.Path(exists=True))
@click.option("--sizes", default="1", show_default=True, help="comma-separated group sizes")
@click.option("--n-trials", type=int, default=200, show_default=True)
@click.option("--n-boot", type=int, default=1000, show_default=True)
@click.option("--positive-fraction", type=float, default=0.5, show_default=True)
@click.option("--seed", type=int, required=True)
@click.option("--threads", type=int, default=1, show_default=True,
              help="worker hint; never affects results")
@click.option("--out-dir", required=True, type=click.Path())
@_provider_options
@click.pass_context
@_handle_errors
def cmd_discriminate(ctx, **params):
    """Group-pooled discrimination sweep over group sizes."""
    params = _apply_config(ctx, params)
    docs = disc_mod.load_labeled_corpus(params["labeled"])
    sizes = [int(s) for s in str(params["sizes"]).split(",") if s.strip()]
    provider = _make_provider(params["provider"], params["dimension"],
                              params["batch_size"], params["seed"],
                              params["author_weight"])
    os.makedirs(params["out_dir"], exist_ok=True)
    rows, curves = disc_mod.sweep_group_size(
        docs, sizes, provider, params["n_trials"], params["seed"],
        positive_fraction=params["positive_fraction"], n_boot=params["n_boot"],
    )
    disc_mod.write_sweep_csv(rows, os.path.join(params["out_dir"], "sweep.csv"))
    for size, curve in curves.items():
        disc_mod.write_roc_csv(curve, os.path.join(params["out_dir"], f"roc_{size}.csv"))
    if all(r.error for r in rows):
        raise StyleProbeError("every requested group size was infeasible")


@main.command("stats")
@click.option("--config", type=click.Path(exists=True), default=None)
@click.option("--method", required=True,
              type=click.Choice(["anova", "t-paired", "kendall", "bootstrap-mean"]))
@click.option("--input", "input_path", required=True, type=click.Path(exists=True),
              help="JSON payload: {groups} | {a, b} | {x, y} | {values}")
@click.option("--n-boot", type=int, default=1000, show_default=True)
@click.option("--confidence", type=float, default=0.95, show_default=True)
@click.option("--seed", type=int, default=0, show_default=True)
@click.pass_context
@_handle_errors
def cmd_stats(ctx, **params):
    """Run a significance test and print a JSON summary."""
    params = _apply_config(ctx, params)
    with open(params["input_path"], encoding="utf-8") as fh:
        data = json.load(fh)
    if params["method"] == "anova":
        result = stats_mod.anova_oneway(data["groups"])
    elif params["method"] == "t-paired":
        result = stats_mod.t_paired(data["a"], data["b"])
    elif params["method"] == "kendall":
        result = stats_mod.kendall_tau(data["x"], data["y"])
    else:
        lo, hi = stats_mod.bootstrap_ci(
            data["values"], lambda v: sum(v) / len(v),
            n_boot=params["n_boot"], confidence=params["confidence"], seed=params["seed"])
        click.echo(json.dumps({"method": "bootstrap_mean", "lo": lo, "hi": hi}))
        return
    click.echo(json.dumps({
        "method": result.method,
        "statistic": result.statistic,
        "p_value": result.p_value,
        "df": list(result.df),
        "degenerate": result.degenerate,
    }))


if __name__ == "__main__":
    main()
