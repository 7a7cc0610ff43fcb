import csv
import json

import pytest
from click.testing import CliRunner

from pathlib import Path

from styleprobe.cli import main
from tests.conftest import FIXTURES as _FIXTURES
from tests.conftest import synthetic_corpus, write_jsonl

FIXTURES = Path(_FIXTURES)


@pytest.fixture
def runner():
    return CliRunner()


def write_corpus_jsonl(path, corpus):
    return write_jsonl(path, [
        {"doc_id": d.doc_id, "author_id": d.author_id, "text": d.text,
         "timestamp": d.timestamp}
        for d in corpus.documents
    ])


def run_pipeline(runner, tmp_path, n_authors=6, seed=0, extra_rank_args=(),
                 out_name="out"):
    corpus = synthetic_corpus(n_authors=n_authors, docs_per_author=32, seed=seed)
    corpus_path = write_corpus_jsonl(tmp_path / "corpus.jsonl", corpus)
    q_path, t_path = tmp_path / "q.jsonl", tmp_path / "t.jsonl"
    res = runner.invoke(main, [
        "episodes", "--corpus", str(corpus_path), "--seed", "7",
        "--out-queries", str(q_path), "--out-targets", str(t_path),
    ])
    assert res.exit_code == 0, res.output
    out_dir = tmp_path / out_name
    res = runner.invoke(main, [
        "rank", "--queries", str(q_path), "--targets", str(t_path),
        "--out-dir", str(out_dir), "--dimension", "64",
        *extra_rank_args,
    ])
    assert res.exit_code == 0, res.output
    return out_dir


class TestMask:
    def test_grande_matches_frozen_output(self, runner, tmp_path):
        out = tmp_path / "masked.jsonl"
        res = runner.invoke(main, [
            "mask", "--conllu", str(FIXTURES / "statements.conllu"),
            "--level", "grande", "--out", str(out),
        ])
        assert res.exit_code == 0, res.output
        texts = [json.loads(l)["text"] for l in out.read_text().splitlines()]
        expected = (FIXTURES / "statements_grande.txt").read_text().strip("\n").split("\n")
        assert texts == expected

    def test_lite_matches_frozen_output(self, runner, tmp_path):
        out = tmp_path / "masked.jsonl"
        res = runner.invoke(main, [
            "mask", "--conllu", str(FIXTURES / "statements.conllu"),
            "--level", "lite", "--out", str(out), "--report", str(tmp_path / "rep.csv"),
        ])
        assert res.exit_code == 0, res.output
        texts = [json.loads(l)["text"] for l in out.read_text().splitlines()]
        expected = (FIXTURES / "statements_lite.txt").read_text().strip("\n").split("\n")
        assert texts == expected
        rows = list(csv.reader((tmp_path / "rep.csv").open()))
        assert rows[0] == ["doc_id", "n_masked", "n_tokens", "proportion"]
        assert rows[-1][0] == "__total__"

    def test_tertle_p_zero_is_identity(self, runner, tmp_path):
        tokens_path = write_jsonl(tmp_path / "tok.jsonl", [
            {"doc_id": "d1", "tokens": ["the", "cat", "sat"]},
            {"doc_id": "d2", "tokens": ["a", "dog", "ran"]},
        ])
        model_path = tmp_path / "model.json"
        res = runner.invoke(main, ["tfidf-fit", "--tokens", str(tokens_path),
                                   "--out", str(model_path)])
        assert res.exit_code == 0, res.output
        out = tmp_path / "masked.jsonl"
        res = runner.invoke(main, [
            "mask", "--tertle", "--tokens", str(tokens_path),
            "--model", str(model_path), "--p", "0", "--out", str(out),
        ])
        assert res.exit_code == 0, res.output
        records = [json.loads(l) for l in out.read_text().splitlines()]
        assert records[0]["text"] == "the cat sat"
        assert records[1]["text"] == "a dog ran"

    def test_missing_required_combo_is_input_error(self, runner, tmp_path):
        res = runner.invoke(main, ["mask", "--out", str(tmp_path / "x.jsonl")])
        assert res.exit_code == 1
        assert "error:" in res.output


class TestEpisodes:
    def test_episode_file_round_trip(self, runner, tmp_path):
        corpus = synthetic_corpus(n_authors=3, docs_per_author=20, seed=1)
        corpus_path = write_corpus_jsonl(tmp_path / "c.jsonl", corpus)
        out = tmp_path / "eps.jsonl"
        res = runner.invoke(main, ["episodes", "--corpus", str(corpus_path),
                                   "--seed", "0", "--out-episodes", str(out)])
        assert res.exit_code == 0, res.output
        records = [json.loads(l) for l in out.read_text().splitlines()]
        assert len(records) == 3  # 20 docs/author -> one 16-doc episode each
        assert all(len(r["documents"]) == 16 for r in records)

    def test_queries_require_targets(self, runner, tmp_path):
        corpus = synthetic_corpus(n_authors=3, docs_per_author=20, seed=1)
        corpus_path = write_corpus_jsonl(tmp_path / "c.jsonl", corpus)
        res = runner.invoke(main, ["episodes", "--corpus", str(corpus_path),
                                   "--seed", "0", "--out-queries",
                                   str(tmp_path / "q.jsonl")])
        assert res.exit_code == 1


class TestRank:
    def test_mock_pipeline_smoke(self, runner, tmp_path):
        out_dir = run_pipeline(runner, tmp_path)
        summary = json.loads((out_dir / "summary.json").read_text())
        assert 0.0 < summary["mrr"] <= 1.0
        rows = list(csv.reader((out_dir / "ranking.csv").open()))
        assert rows[0] == ["query_id", "rank", "reciprocal"]
        assert len(rows) == summary["m"] + 1

    def test_reruns_byte_identical(self, runner, tmp_path):
        d1 = run_pipeline(runner, tmp_path, out_name="run1")
        d2 = run_pipeline(runner, tmp_path, out_name="run2")
        d3 = run_pipeline(runner, tmp_path, out_name="run3",
                          extra_rank_args=("--threads", "4"))
        for name in ("ranking.csv", "summary.json"):
            b = (d1 / name).read_bytes()
            assert (d2 / name).read_bytes() == b
            assert (d3 / name).read_bytes() == b

    def test_many_authors_high_mrr(self, runner, tmp_path):
        out_dir = run_pipeline(runner, tmp_path, n_authors=50)
        summary = json.loads((out_dir / "summary.json").read_text())
        assert summary["mrr"] > 0.9

    def test_missing_store_vector_is_provider_error(self, runner, tmp_path):
        corpus = synthetic_corpus(n_authors=4, docs_per_author=32, seed=0)
        corpus_path = write_corpus_jsonl(tmp_path / "c.jsonl", corpus)
        q, t = tmp_path / "q.jsonl", tmp_path / "t.jsonl"
        runner.invoke(main, ["episodes", "--corpus", str(corpus_path), "--seed",
                             "7", "--out-queries", str(q), "--out-targets", str(t)])
        store = write_jsonl(tmp_path / "store.jsonl",
                            [{"episode_id": "nope", "vector": [0.0] * 8}])
        res = runner.invoke(main, [
            "rank", "--queries", str(q), "--targets", str(t),
            "--provider", f"file:{store}", "--dimension", "8",
            "--out-dir", str(tmp_path / "o"),
        ])
        assert res.exit_code == 2

    def test_unreachable_remote_is_provider_error(self, runner, tmp_path):
        corpus = synthetic_corpus(n_authors=4, docs_per_author=32, seed=0)
        corpus_path = write_corpus_jsonl(tmp_path / "c.jsonl", corpus)
        q, t = tmp_path / "q.jsonl", tmp_path / "t.jsonl"
        runner.invoke(main, ["episodes", "--corpus", str(corpus_path), "--seed",
                             "7", "--out-queries", str(q), "--out-targets", str(t)])
        res = runner.invoke(main, [
            "rank", "--queries", str(q), "--targets", str(t),
            "--provider", "remote:http://127.0.0.1:9/embed",
            "--out-dir", str(tmp_path / "o"),
        ])
        assert res.exit_code == 2


class TestGate:
    def test_identical_paraphrases_gate_first_half(self, runner, tmp_path):
        corpus = synthetic_corpus(n_authors=1, docs_per_author=16, seed=2)
        corpus_path = write_corpus_jsonl(tmp_path / "c.jsonl", corpus)
        eps = tmp_path / "eps.jsonl"
        runner.invoke(main, ["episodes", "--corpus", str(corpus_path),
                             "--seed", "0", "--out-episodes", str(eps)])
        out_o, out_p = tmp_path / "go.jsonl", tmp_path / "gp.jsonl"
        res = runner.invoke(main, [
            "gate", "--orig", str(eps), "--para", str(eps),
            "--out-orig", str(out_o), "--out-para", str(out_p),
            "--hist-scores", str(tmp_path / "hs.csv"),
            "--hist-edit", str(tmp_path / "he.csv"),
        ])
        assert res.exit_code == 0, res.output
        echo = json.loads(res.output.strip().splitlines()[-1])
        assert echo["episodes"] == 1
        gated = json.loads(out_o.read_text().splitlines()[0])
        # All scores tie at 1.0, so the lowest-index half is kept.
        assert len(gated["documents"]) == 8
        hist = list(csv.reader((tmp_path / "hs.csv").open()))
        assert hist[0] == ["bin_lo", "bin_hi", "count"]
        assert sum(int(r[2]) for r in hist[1:]) == 16

    def test_missing_pair_is_input_error(self, runner, tmp_path):
        corpus = synthetic_corpus(n_authors=2, docs_per_author=16, seed=2)
        corpus_path = write_corpus_jsonl(tmp_path / "c.jsonl", corpus)
        eps = tmp_path / "eps.jsonl"
        runner.invoke(main, ["episodes", "--corpus", str(corpus_path),
                             "--seed", "0", "--out-episodes", str(eps)])
        one = tmp_path / "one.jsonl"
        one.write_text(eps.read_text().splitlines()[0] + "\n")
        res = runner.invoke(main, ["gate", "--orig", str(eps), "--para", str(one),
                                   "--out-orig", str(tmp_path / "a.jsonl"),
                                   "--out-para", str(tmp_path / "b.jsonl")])
        assert res.exit_code == 1


class TestDiscriminate:
    def make_labeled(self, tmp_path, n_labels=3, per_label=8):
        return write_jsonl(tmp_path / "labeled.jsonl", [
            {"doc_id": f"l{l}-d{j}", "labels": [f"label{l}"], "text": f"doc {l} {j}"}
            for l in range(n_labels) for j in range(per_label)
        ])

    def test_sweep_table(self, runner, tmp_path):
        labeled = self.make_labeled(tmp_path)
        out_dir = tmp_path / "out"
        res = runner.invoke(main, [
            "discriminate", "--labeled", str(labeled), "--sizes", "1,2,4",
            "--n-trials", "40", "--n-boot", "100", "--seed", "3",
            "--dimension", "32", "--out-dir", str(out_dir),
        ])
        assert res.exit_code == 0, res.output
        rows = list(csv.reader((out_dir / "sweep.csv").open()))
        assert len(rows) == 4
        assert (out_dir / "roc_1.csv").exists()

    def test_constant_store_is_chance(self, runner, tmp_path):
        # Every doc maps to the same stored vector, so all trial scores tie
        # and discrimination collapses to chance.
        labeled = self.make_labeled(tmp_path)
        vec = [1.0] + [0.0] * 7
        store = write_jsonl(tmp_path / "store.jsonl", [
            {"episode_id": f"l{l}-d{j}", "vector": vec}
            for l in range(3) for j in range(8)
        ])
        out_dir = tmp_path / "out"
        res = runner.invoke(main, [
            "discriminate", "--labeled", str(labeled), "--sizes", "1",
            "--n-trials", "40", "--n-boot", "100", "--seed", "3",
            "--provider", f"file:{store}", "--dimension", "8",
            "--out-dir", str(out_dir),
        ])
        assert res.exit_code == 0, res.output
        row = list(csv.DictReader((out_dir / "sweep.csv").open()))[0]
        assert float(row["auc"]) == pytest.approx(0.5)
        assert float(row["eer"]) == pytest.approx(0.5)

    def test_all_sizes_infeasible(self, runner, tmp_path):
        labeled = self.make_labeled(tmp_path, n_labels=2, per_label=2)
        res = runner.invoke(main, [
            "discriminate", "--labeled", str(labeled), "--sizes", "50",
            "--n-trials", "10", "--n-boot", "100", "--seed", "0",
            "--out-dir", str(tmp_path / "o"),
        ])
        assert res.exit_code == 1


class TestStats:
    def test_t_paired(self, runner, tmp_path):
        payload = tmp_path / "in.json"
        payload.write_text(json.dumps({"a": [1.0, 2.0, 3.0], "b": [2.0, 4.0, 6.0]}))
        res = runner.invoke(main, ["stats", "--method", "t-paired",
                                   "--input", str(payload)])
        assert res.exit_code == 0, res.output
        out = json.loads(res.output)
        assert out["statistic"] == pytest.approx(-3.4641016, abs=1e-6)
        assert out["p_value"] == pytest.approx(0.0741799, abs=1e-6)

    def test_bootstrap_mean(self, runner, tmp_path):
        payload = tmp_path / "in.json"
        payload.write_text(json.dumps({"values": [1.0, 2.0, 3.0, 4.0, 5.0]}))
        res = runner.invoke(main, ["stats", "--method", "bootstrap-mean",
                                   "--input", str(payload), "--n-boot", "200"])
        assert res.exit_code == 0, res.output
        out = json.loads(res.output)
        assert out["lo"] <= 3.0 <= out["hi"]

    def test_bad_payload_is_input_error(self, runner, tmp_path):
        payload = tmp_path / "in.json"
        payload.write_text(json.dumps({"groups": [[1.0, 1.0], [1.0, 1.0]]}))
        res = runner.invoke(main, ["stats", "--method", "anova",
                                   "--input", str(payload)])
        assert res.exit_code == 1


class TestConfig:
    def test_config_fills_defaults_but_flags_win(self, runner, tmp_path):
        corpus = synthetic_corpus(n_authors=3, docs_per_author=20, seed=1)
        corpus_path = write_corpus_jsonl(tmp_path / "c.jsonl", corpus)
        cfg = tmp_path / "probe.cfg"
        cfg.write_text("# defaults\nepisode-len = 8\nseed = 5\n")
        out = tmp_path / "eps.jsonl"
        res = runner.invoke(main, ["episodes", "--config", str(cfg),
                                   "--corpus", str(corpus_path), "--seed", "1",
                                   "--out-episodes", str(out)])
        assert res.exit_code == 0, res.output
        records = [json.loads(l) for l in out.read_text().splitlines()]
        # episode-len came from the config (8), so 20 docs -> 2 episodes/author.
        assert len(records) == 6
        assert all(len(r["documents"]) == 8 for r in records)

    def test_explicit_flag_beats_config(self, runner, tmp_path):
        corpus = synthetic_corpus(n_authors=2, docs_per_author=20, seed=1)
        corpus_path = write_corpus_jsonl(tmp_path / "c.jsonl", corpus)
        cfg = tmp_path / "probe.cfg"
        cfg.write_text("episode-len = 8\n")
        out = tmp_path / "eps.jsonl"
        res = runner.invoke(main, ["episodes", "--config", str(cfg),
                                   "--corpus", str(corpus_path), "--seed", "1",
                                   "--episode-len", "16", "--out-episodes", str(out)])
        assert res.exit_code == 0, res.output
        records = [json.loads(l) for l in out.read_text().splitlines()]
        assert all(len(r["documents"]) == 16 for r in records)

    def test_malformed_config_line(self, runner, tmp_path):
        cfg = tmp_path / "probe.cfg"
        cfg.write_text("this is not a pair\n")
        res = runner.invoke(main, ["stats", "--config", str(cfg),
                                   "--method", "anova", "--input", str(cfg)])
        assert res.exit_code == 1
