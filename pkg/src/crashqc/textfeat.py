"""Narrative featurization: tokenization, vocabulary, TF-IDF vectors.

Weighting is raw term frequency times a smoothed idf,
``ln((1+N)/(1+df)) + 1``, L2-normalized per document. The smoothing
guarantees every idf is positive, so no in-vocabulary term is ever
silently erased.
"""

from __future__ import annotations

import hashlib
import json
import math
import re
from dataclasses import dataclass
from pathlib import Path
from typing import Iterable, Sequence

VOCABULARY_SCHEMA = "crashqc-vocabulary-1"

# lowercase alphanumeric runs; hyphens glue runs together so radio codes
# like "10-46" and route names like "i-64" survive as single tokens
_TOKEN_RE = re.compile(r"[a-z0-9]+(?:-[a-z0-9]+)*")


def tokenize(text: str) -> list[str]:
    return _TOKEN_RE.findall(text.lower())


def with_bigrams(tokens: Sequence[str]) -> list[str]:
    """Tokens plus adjacent-pair pseudo-terms ("a b")."""
    out = list(tokens)
    out.extend(f"{a} {b}" for a, b in zip(tokens, tokens[1:]))
    return out


@dataclass(frozen=True)
class SparseVector:
    """Pairs of (index, weight) with strictly increasing indices."""

    indices: tuple[int, ...]
    weights: tuple[float, ...]

    def __post_init__(self) -> None:
        if len(self.indices) != len(self.weights):
            raise ValueError("indices and weights must align")
        prev = -1
        for idx in self.indices:
            if idx <= prev:
                raise ValueError("indices must be strictly increasing")
            prev = idx
        for w in self.weights:
            if not math.isfinite(w):
                raise ValueError("weights must be finite")

    @property
    def nnz(self) -> int:
        return len(self.indices)

    def l2_norm(self) -> float:
        return math.sqrt(sum(w * w for w in self.weights))

    def items(self) -> Iterable[tuple[int, float]]:
        return zip(self.indices, self.weights)


EMPTY_VECTOR = SparseVector((), ())


@dataclass(frozen=True)
class Vocabulary:
    """Term → (contiguous index, document frequency) over a fixed corpus."""

    terms: tuple[str, ...]
    dfs: tuple[int, ...]
    corpus_size: int
    use_bigrams: bool = False

    def __post_init__(self) -> None:
        if self.corpus_size < 1:
            raise ValueError("corpus_size must be >= 1")
        if len(self.terms) != len(self.dfs):
            raise ValueError("terms and dfs must align")
        if len(set(self.terms)) != len(self.terms):
            raise ValueError("duplicate terms")
        for df in self.dfs:
            if not 1 <= df <= self.corpus_size:
                raise ValueError("df out of range")

    def __len__(self) -> int:
        return len(self.terms)

    @property
    def index(self) -> dict[str, int]:
        cached = self.__dict__.get("_index")
        if cached is None:
            cached = {t: i for i, t in enumerate(self.terms)}
            object.__setattr__(self, "_index", cached)
        return cached

    def df(self, term: str) -> int:
        return self.dfs[self.index[term]]

    @property
    def version(self) -> str:
        cached = self.__dict__.get("_version")
        if cached is None:
            canon = json.dumps(
                [self.corpus_size, self.use_bigrams, list(self.terms), list(self.dfs)]
            )
            cached = hashlib.sha256(canon.encode("utf-8")).hexdigest()[:12]
            object.__setattr__(self, "_version", cached)
        return cached

    def save(self, path: str | Path) -> None:
        payload = {
            "schema": VOCABULARY_SCHEMA,
            "version": self.version,
            "corpus_size": self.corpus_size,
            "use_bigrams": self.use_bigrams,
            "terms": [[t, i, df] for i, (t, df) in enumerate(zip(self.terms, self.dfs))],
        }
        Path(path).write_text(json.dumps(payload, ensure_ascii=False), encoding="utf-8")

    @classmethod
    def load(cls, path: str | Path) -> "Vocabulary":
        data = json.loads(Path(path).read_text(encoding="utf-8"))
        if data.get("schema") != VOCABULARY_SCHEMA:
            raise ValueError(f"not a vocabulary file: {path}")
        rows = data["terms"]
        for expected_index, row in enumerate(rows):
            if row[1] != expected_index:
                raise ValueError("vocabulary indices must be contiguous from 0")
        vocab = cls(
            terms=tuple(row[0] for row in rows),
            dfs=tuple(int(row[2]) for row in rows),
            corpus_size=int(data["corpus_size"]),
            use_bigrams=bool(data.get("use_bigrams", False)),
        )
        stored = data.get("version")
        if stored and stored != vocab.version:
            raise ValueError("vocabulary version does not match its contents")
        return vocab


def build_vocabulary(
    documents: Sequence[Sequence[str]], min_df: int = 2, use_bigrams: bool = False
) -> Vocabulary:
    """Vocabulary over tokenized documents, lexicographic index order.

    ``min_df`` drops rare terms (document frequency counts presence, not
    occurrences). An empty document list is an error; empty documents are
    fine.
    """
    if not documents:
        raise ValueError("cannot build a vocabulary from an empty corpus")
    if min_df < 1:
        raise ValueError("min_df must be >= 1")
    df_counts: dict[str, int] = {}
    for doc in documents:
        tokens = with_bigrams(doc) if use_bigrams else doc
        for term in set(tokens):
            df_counts[term] = df_counts.get(term, 0) + 1
    kept = sorted(t for t, df in df_counts.items() if df >= min_df)
    return Vocabulary(
        terms=tuple(kept),
        dfs=tuple(df_counts[t] for t in kept),
        corpus_size=len(documents),
        use_bigrams=use_bigrams,
    )


def idf(vocab: Vocabulary, term: str) -> float:
    return math.log((1 + vocab.corpus_size) / (1 + vocab.df(term))) + 1.0


def tfidf(tokens: Sequence[str], vocab: Vocabulary) -> SparseVector:
    """L2-normalized tf-idf vector; all-OOV or empty input → zero vector."""
    if vocab.use_bigrams:
        tokens = with_bigrams(tokens)
    counts: dict[int, int] = {}
    index = vocab.index
    for term in tokens:
        i = index.get(term)
        if i is not None:
            counts[i] = counts.get(i, 0) + 1
    if not counts:
        return EMPTY_VECTOR
    n = vocab.corpus_size
    entries = []
    for i in sorted(counts):
        weight = counts[i] * (math.log((1 + n) / (1 + vocab.dfs[i])) + 1.0)
        entries.append((i, weight))
    norm = math.sqrt(sum(w * w for _, w in entries))
    return SparseVector(
        indices=tuple(i for i, _ in entries),
        weights=tuple(w / norm for _, w in entries),
    )


def vectorize(narrative: str, vocab: Vocabulary) -> SparseVector:
    return tfidf(tokenize(narrative), vocab)
