"""POS-driven content-word masking over CoNLL-U tagged documents.

Three masking levels of increasing aggressiveness:

* ``xtra_lite`` masks proper nouns only,
* ``lite`` masks nouns and proper nouns,
* ``grande`` masks nouns, proper nouns, main verbs, adjectives, and adverbs.

Auxiliaries, particles, pronouns, determiners, adpositions, and
conjunctions are never masked. Within a multi-word token (for example a
contraction split into a verb plus a particle), only the sub-tokens whose
own tag is in the mask set are replaced, so contracted particles survive.
"""

from __future__ import annotations

from dataclasses import dataclass, replace

from .errors import ParseError

DEFAULT_MASK_TOKEN = "<mask>"

UPOS_TAGS = frozenset(
    {
        "NOUN", "PROPN", "VERB", "AUX", "ADJ", "ADV", "PRON", "DET", "ADP",
        "CCONJ", "SCONJ", "PART", "NUM", "INTJ", "SYM", "PUNCT", "X", "UNKNOWN",
    }
)

MASK_SETS: dict[str, frozenset[str]] = {
    "grande": frozenset({"NOUN", "PROPN", "VERB", "ADJ", "ADV"}),
    "lite": frozenset({"NOUN", "PROPN"}),
    "xtra_lite": frozenset({"PROPN"}),
}

PERTLE_LEVELS = tuple(MASK_SETS)


@dataclass(frozen=True)
class TaggedToken:
    surface: str
    upos: str
    mwt_group: int | None = None
    space_after: bool = True

    def __post_init__(self):
        if not self.surface:
            raise ValueError("token surface must be non-empty")
        if self.upos not in UPOS_TAGS:
            object.__setattr__(self, "upos", "UNKNOWN")


@dataclass(frozen=True)
class TaggedDocument:
    doc_id: str
    tokens: tuple[TaggedToken, ...]

    def text(self) -> str:
        return detokenize(self.tokens)


@dataclass(frozen=True)
class MaskedDocument:
    doc_id: str
    tokens: tuple[TaggedToken, ...]
    masked_indices: tuple[int, ...]
    mask_token: str = DEFAULT_MASK_TOKEN
    schema: str = ""

    def text(self) -> str:
        return detokenize(self.tokens)


def detokenize(tokens) -> str:
    """Concatenate surfaces, inserting a space after each token unless its
    space_after flag is off; trailing whitespace is trimmed."""
    parts: list[str] = []
    for tok in tokens:
        parts.append(tok.surface)
        if tok.space_after:
            parts.append(" ")
    return "".join(parts).rstrip()


def parse_conllu(path: str) -> list[TaggedDocument]:
    """Parse a 10-column CoNLL-U file into tagged documents.

    Document boundaries come from ``# newdoc id = ...`` comments (a file
    without them yields a single document). Multi-word token ranges
    ("i-j" lines) assign a shared mwt_group to their covered sub-tokens,
    and the range line's own SpaceAfter applies to the last sub-token.
    """
    docs: list[TaggedDocument] = []
    cur_id: str | None = None
    cur_tokens: list[TaggedToken] = []
    # Pending MWT: (first id, last id, space_after of the whole word).
    mwt: tuple[int, int, bool] | None = None

    def flush():
        nonlocal cur_tokens
        if cur_id is not None or cur_tokens:
            docs.append(TaggedDocument(doc_id=cur_id or f"doc{len(docs)}", tokens=tuple(cur_tokens)))
        cur_tokens = []

    with open(path, encoding="utf-8") as fh:
        for line_no, raw in enumerate(fh, start=1):
            line = raw.rstrip("\n")
            if not line.strip():
                continue
            if line.startswith("#"):
                if line.startswith("# newdoc"):
                    if cur_id is not None or cur_tokens:
                        flush()
                    cur_id = line.split("=", 1)[1].strip() if "=" in line else f"doc{len(docs)}"
                continue
            cols = line.split("\t")
            if len(cols) != 10:
                raise ParseError(f"expected 10 tab-separated columns, got {len(cols)}", line_no)
            tok_id, form, _, upos = cols[0], cols[1], cols[2], cols[3]
            misc = cols[9]
            space_after = "SpaceAfter=No" not in misc
            if "-" in tok_id:
                # Multi-word token range: sub-tokens carry the group.
                try:
                    first, last = (int(x) for x in tok_id.split("-"))
                except ValueError as exc:
                    raise ParseError(f"bad token id {tok_id!r}", line_no) from exc
                mwt = (first, last, space_after)
                continue
            if "." in tok_id:
                continue  # empty nodes (enhanced dependencies) are not surface tokens
            try:
                idx = int(tok_id)
            except ValueError as exc:
                raise ParseError(f"bad token id {tok_id!r}", line_no) from exc
            group = None
            sa = space_after
            if mwt is not None and mwt[0] <= idx <= mwt[1]:
                group = mwt[0]
                # Sub-tokens of one orthographic word are glued together.
                sa = mwt[2] if idx == mwt[1] else False
                if idx == mwt[1]:
                    mwt = None
            cur_tokens.append(
                TaggedToken(surface=form, upos=upos if upos in UPOS_TAGS else "UNKNOWN",
                            mwt_group=group, space_after=sa)
            )
    flush()
    # A fully empty file produced one empty unnamed document; drop it.
    if len(docs) == 1 and docs[0].tokens == () and docs[0].doc_id == "doc0":
        return []
    return docs


def pertle_mask_indices(doc: TaggedDocument, level: str) -> list[int]:
    """Indices of tokens replaced at the given level. Sub-tokens of an MWT
    are judged by their own tag, which preserves contracted particles."""
    if level not in MASK_SETS:
        raise ValueError(f"unknown PertLE level {level!r} (expected one of {PERTLE_LEVELS})")
    mask_set = MASK_SETS[level]
    return [i for i, tok in enumerate(doc.tokens) if tok.upos in mask_set]


def mask_pertle(doc: TaggedDocument, level: str, mask_token: str = DEFAULT_MASK_TOKEN) -> MaskedDocument:
    if not mask_token:
        raise ValueError("mask_token must be non-empty")
    indices = pertle_mask_indices(doc, level)
    chosen = set(indices)
    tokens = tuple(
        replace(tok, surface=mask_token) if i in chosen else tok
        for i, tok in enumerate(doc.tokens)
    )
    return MaskedDocument(
        doc_id=doc.doc_id,
        tokens=tokens,
        masked_indices=tuple(indices),
        mask_token=mask_token,
        schema=f"pertle:{level}",
    )


def masked_proportion(masked: MaskedDocument) -> float:
    """Fraction of tokens replaced; a partially masked MWT word counts its
    masked sub-tokens individually. Empty documents score 0."""
    if not masked.tokens:
        return 0.0
    return len(masked.masked_indices) / len(masked.tokens)
