"""Embedding providers, similarity, and pooling.

Providers map episodes to unit vectors of a fixed dimension (default
512). Three kinds exist:

* ``mock`` — a hash-based deterministic encoder whose vectors mix an
  author component and a text component, so same-author episodes score
  high without any trained model;
* ``file`` — precomputed vectors from a JSONL or binary "SPEV" store;
* ``remote`` — an HTTP service exposing ``POST /embed``
  (``{"texts": [[...]]}`` in, ``{"vectors": [[...]]}`` out).
"""

from __future__ import annotations

import hashlib
import json
import struct
from dataclasses import dataclass

import numpy as np
import requests

from .corpus import Episode
from .errors import ProviderError

DEFAULT_DIMENSION = 512
MOCK_AUTHOR_WEIGHT = 0.8
SPEV_MAGIC = b"SPEV"

_NORM_REJECT = 1e-6


def normalize(vec: np.ndarray) -> np.ndarray:
    """Scale to unit length; reject degenerate or non-finite input."""
    arr = np.asarray(vec, dtype=np.float64)
    if not np.all(np.isfinite(arr)):
        raise ProviderError("embedding contains non-finite values")
    norm = float(np.linalg.norm(arr))
    if norm < _NORM_REJECT:
        raise ProviderError(f"embedding norm {norm:g} below {_NORM_REJECT:g}")
    return arr / norm


def dot(u: np.ndarray, v: np.ndarray) -> float:
    u = np.asarray(u, dtype=np.float64)
    v = np.asarray(v, dtype=np.float64)
    if u.shape != v.shape:
        raise ProviderError(f"dimension mismatch: {u.shape} vs {v.shape}")
    return float(u @ v)


def mean_pool(vectors) -> np.ndarray:
    """Coordinate-wise mean, deliberately not renormalized."""
    mat = np.asarray(list(vectors), dtype=np.float64)
    if mat.size == 0:
        raise ProviderError("mean_pool of an empty list")
    return mat.mean(axis=0)


def hash_unit_vector(key: str, dimension: int) -> np.ndarray:
    """Deterministic unit vector from a string key.

    Block j of 8 coordinates comes from sha256(key + "|" + j): eight
    little-endian uint32 values mapped to [-1, 1). The construction uses
    only exactly-representable float64 steps so independent
    implementations reproduce it bit-for-bit.
    """
    if dimension < 1:
        raise ValueError("dimension must be >= 1")
    coords = np.empty(dimension, dtype=np.float64)
    pos = 0
    block = 0
    while pos < dimension:
        digest = hashlib.sha256(f"{key}|{block}".encode("utf-8")).digest()
        words = struct.unpack("<8I", digest)
        for w in words:
            if pos >= dimension:
                break
            coords[pos] = 2.0 * (w / 4294967296.0) - 1.0
            pos += 1
        block += 1
    norm = float(np.linalg.norm(coords))
    return coords / norm


def _text_digest(texts: list[str]) -> str:
    return hashlib.sha256("\n".join(texts).encode("utf-8")).hexdigest()


def mock_embed(
    episode: Episode,
    dimension: int = DEFAULT_DIMENSION,
    seed: int = 0,
    author_weight: float = MOCK_AUTHOR_WEIGHT,
) -> np.ndarray:
    """unit(a * u_author + (1 - a) * u_text) for seeded hash vectors, so
    same-author episodes correlate strongly."""
    u_author = hash_unit_vector(f"{seed}|author|{episode.author_id}", dimension)
    u_text = hash_unit_vector(f"{seed}|text|{_text_digest(episode.texts())}", dimension)
    return normalize(author_weight * u_author + (1.0 - author_weight) * u_text)


def echo_embed(texts: list[str], dimension: int = DEFAULT_DIMENSION, seed: int = 0) -> np.ndarray:
    """Text-only deterministic encoder; the wire-protocol reference
    implementation must reproduce these vectors exactly."""
    return hash_unit_vector(f"{seed}|echo|{_text_digest(texts)}", dimension)


@dataclass(frozen=True)
class ProviderSpec:
    kind: str  # mock | file | remote
    dimension: int = DEFAULT_DIMENSION
    location: str = ""
    batch_size: int = 32
    seed: int = 0
    author_weight: float = MOCK_AUTHOR_WEIGHT

    def __post_init__(self):
        if self.kind not in ("mock", "file", "remote"):
            raise ValueError(f"unknown provider kind {self.kind!r}")
        if self.dimension < 1:
            raise ValueError("dimension must be >= 1")
        if self.batch_size < 1:
            raise ValueError("batch_size must be >= 1")


def load_vector_store(path: str) -> dict[str, np.ndarray]:
    """Read a vector store, auto-detecting binary SPEV vs JSONL."""
    with open(path, "rb") as fh:
        magic = fh.read(4)
    if magic == SPEV_MAGIC:
        return _load_spev(path)
    store: dict[str, np.ndarray] = {}
    with open(path, encoding="utf-8") as fh:
        for line_no, line in enumerate(fh, start=1):
            if not line.strip():
                continue
            try:
                record = json.loads(line)
            except json.JSONDecodeError as exc:
                raise ProviderError(f"vector store line {line_no}: invalid JSON") from exc
            store[str(record["episode_id"])] = np.asarray(record["vector"], dtype=np.float64)
    return store


def _load_spev(path: str) -> dict[str, np.ndarray]:
    store: dict[str, np.ndarray] = {}
    with open(path, "rb") as fh:
        if fh.read(4) != SPEV_MAGIC:
            raise ProviderError("not an SPEV file")
        (dim,) = struct.unpack("<I", fh.read(4))
        while True:
            head = fh.read(4)
            if not head:
                break
            (id_len,) = struct.unpack("<I", head)
            episode_id = fh.read(id_len).decode("utf-8")
            raw = fh.read(4 * dim)
            if len(raw) != 4 * dim:
                raise ProviderError(f"truncated SPEV record for {episode_id!r}")
            store[episode_id] = np.frombuffer(raw, dtype="<f4").astype(np.float64)
    return store


def save_vector_store(store: dict[str, np.ndarray], path: str, binary: bool = False) -> None:
    if binary:
        dims = {len(v) for v in store.values()}
        if len(dims) > 1:
            raise ProviderError("mixed dimensions in vector store")
        dim = dims.pop() if dims else 0
        with open(path, "wb") as fh:
            fh.write(SPEV_MAGIC)
            fh.write(struct.pack("<I", dim))
            for episode_id, vec in store.items():
                encoded = episode_id.encode("utf-8")
                fh.write(struct.pack("<I", len(encoded)))
                fh.write(encoded)
                fh.write(np.asarray(vec, dtype="<f4").tobytes())
    else:
        with open(path, "w", encoding="utf-8") as fh:
            for episode_id, vec in store.items():
                fh.write(json.dumps({"episode_id": episode_id, "vector": list(map(float, vec))}) + "\n")


def _embed_remote(spec: ProviderSpec, episodes: list[Episode]) -> list[np.ndarray]:
    vectors: list[np.ndarray] = []
    for start in range(0, len(episodes), spec.batch_size):
        batch = episodes[start : start + spec.batch_size]
        payload = {"texts": [ep.texts() for ep in batch]}
        try:
            resp = requests.post(spec.location.rstrip("/") + "/embed", json=payload, timeout=60)
        except requests.RequestException as exc:
            raise ProviderError(f"remote provider unreachable: {exc}") from exc
        if resp.status_code != 200:
            try:
                detail = resp.json().get("error", resp.text)
            except ValueError:
                detail = resp.text
            raise ProviderError(f"remote provider returned {resp.status_code}: {detail}")
        body = resp.json()
        got = body.get("vectors")
        if not isinstance(got, list) or len(got) != len(batch):
            raise ProviderError("remote provider returned a malformed vector batch")
        vectors.extend(np.asarray(v, dtype=np.float64) for v in got)
    return vectors


def embed_episodes(spec: ProviderSpec, episodes: list[Episode]) -> list[np.ndarray]:
    """One unit vector per episode, order-aligned with the input."""
    if spec.kind == "mock":
        raw = [mock_embed(ep, spec.dimension, spec.seed, spec.author_weight) for ep in episodes]
    elif spec.kind == "file":
        store = load_vector_store(spec.location)
        raw = []
        for ep in episodes:
            if ep.episode_id not in store:
                raise ProviderError(f"unknown episode {ep.episode_id!r} in vector store")
            raw.append(store[ep.episode_id])
    else:
        raw = _embed_remote(spec, episodes)
    out = []
    for ep, vec in zip(episodes, raw):
        if len(vec) != spec.dimension:
            raise ProviderError(
                f"episode {ep.episode_id!r}: dimension {len(vec)} != expected {spec.dimension}"
            )
        out.append(normalize(vec))
    return out
