import json
import random

import pytest

from styleprobe.corpus import Corpus, Document, Episode

FIXTURES = __file__.rsplit("/", 1)[0] + "/fixtures"


def make_doc(doc_id, author="a", text=None, timestamp=0):
    return Document(
        doc_id=doc_id,
        author_id=author,
        text=text or f"text of {doc_id}",
        timestamp=timestamp,
    )


def make_episode(author, idx=0, n_docs=16, text_salt=""):
    docs = tuple(
        make_doc(f"{author}-{idx}-{j}", author, f"doc {j} by {author} {text_salt}")
        for j in range(n_docs)
    )
    return Episode(episode_id=f"{author}:{idx}", author_id=author, documents=docs)


def synthetic_corpus(n_authors, docs_per_author, seed=0):
    rng = random.Random(seed)
    docs = []
    for a in range(n_authors):
        for j in range(docs_per_author):
            docs.append(
                Document(
                    doc_id=f"a{a}-d{j}",
                    author_id=f"a{a}",
                    text=f"document {j} of author {a} token{rng.randrange(1000)}",
                    timestamp=j,
                )
            )
    return Corpus(documents=docs)


def write_jsonl(path, records):
    with open(path, "w", encoding="utf-8") as fh:
        for r in records:
            fh.write(json.dumps(r) + "\n")
    return str(path)


@pytest.fixture
def fixtures_dir():
    return FIXTURES
