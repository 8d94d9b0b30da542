"""Tokenization, term-by-document count matrices and tf-idf weighting."""

from __future__ import annotations

import csv
import enum
import unicodedata
from collections import Counter
from dataclasses import dataclass, field
from functools import lru_cache
from importlib import resources
from pathlib import Path
from typing import Iterable, Sequence

import numpy as np

from .errors import DataError, EmptyVocabulary, WrongWeighting


class Label(str, enum.Enum):
    RELIABLE = "reliable"
    UNRELIABLE = "unreliable"

    @classmethod
    def parse(cls, value: str) -> "Label":
        try:
            return cls(value.strip().lower())
        except ValueError:
            raise DataError(f"label must be 'reliable' or 'unreliable', got {value!r}") from None

    @property
    def sign(self) -> int:
        """+1 for the positive (unreliable) class, -1 otherwise."""
        return 1 if self is Label.UNRELIABLE else -1


class Weighting(str, enum.Enum):
    RAW = "raw"
    TFIDF = "tfidf"


@dataclass(frozen=True)
class Document:
    id: str
    text: str
    label: Label


@lru_cache(maxsize=1)
def default_stop_words() -> frozenset:
    """The shipped stop-word list (``data/stopwords.txt``)."""
    text = resources.files("icadetect").joinpath("data/stopwords.txt").read_text("utf-8")
    return frozenset(
        line.strip() for line in text.splitlines() if line.strip() and not line.startswith("#")
    )


@dataclass(frozen=True)
class TokenizeConfig:
    """``keep_chars`` are punctuation characters that survive stripping
    (hashtags and mentions stay attached to their word)."""

    stop_words: frozenset = field(default_factory=default_stop_words)
    keep_chars: str = "#@"
    lowercase: bool = True


def _is_punct(ch: str) -> bool:
    return unicodedata.category(ch).startswith("P")


def tokenize(text: str, config: TokenizeConfig = None) -> list[str]:
    """Split on whitespace, strip edge punctuation, lowercase, drop stop-words.

    >>> tokenize("Countries LIE. Ego,", TokenizeConfig(stop_words=frozenset()))
    ['countries', 'lie', 'ego']
    """
    config = config or TokenizeConfig()
    keep = config.keep_chars
    tokens = []
    for raw in text.split():
        start, end = 0, len(raw)
        while start < end and _is_punct(raw[start]) and raw[start] not in keep:
            start += 1
        while end > start and _is_punct(raw[end - 1]) and raw[end - 1] not in keep:
            end -= 1
        tok = raw[start:end]
        if config.lowercase:
            tok = tok.lower()
        if not tok or all(_is_punct(c) for c in tok):
            continue
        if tok in config.stop_words:
            continue
        tokens.append(tok)
    return tokens


@dataclass(frozen=True)
class Vocabulary:
    terms: tuple

    def __post_init__(self):
        if len(set(self.terms)) != len(self.terms):
            raise DataError("vocabulary terms must be unique")
        object.__setattr__(self, "index", {t: i for i, t in enumerate(self.terms)})

    def __len__(self):
        return len(self.terms)

    def __contains__(self, term):
        return term in self.index

    @classmethod
    def from_tokens(cls, token_lists: Iterable[Sequence[str]]) -> "Vocabulary":
        return cls(tuple(sorted({t for toks in token_lists for t in toks})))


@dataclass(frozen=True)
class TermDocMatrix:
    """d x V matrix: one row per vocabulary term, one column per document."""

    values: np.ndarray
    vocab: Vocabulary
    doc_ids: tuple
    weighting: Weighting = Weighting.RAW
    idf: np.ndarray | None = None

    @property
    def shape(self):
        return self.values.shape

    def columns(self, idx) -> "TermDocMatrix":
        idx = np.asarray(idx)
        return TermDocMatrix(
            self.values[:, idx], self.vocab, tuple(self.doc_ids[i] for i in idx),
            self.weighting, self.idf,
        )


def count_matrix(docs: Sequence[Document], vocab: Vocabulary, config: TokenizeConfig = None) -> TermDocMatrix:
    """Raw counts of ``vocab`` terms in ``docs``; other tokens are dropped."""
    config = config or TokenizeConfig()
    values = np.zeros((len(vocab), len(docs)))
    for v, doc in enumerate(docs):
        for term, n in Counter(tokenize(doc.text, config)).items():
            row = vocab.index.get(term)
            if row is not None:
                values[row, v] = n
    return TermDocMatrix(values, vocab, tuple(d.id for d in docs), Weighting.RAW)


def build_matrix(docs: Sequence[Document], config: TokenizeConfig = None) -> TermDocMatrix:
    """Vocabulary from every surviving token, then raw counts."""
    if not docs:
        raise DataError("no documents")
    config = config or TokenizeConfig()
    vocab = Vocabulary.from_tokens(tokenize(d.text, config) for d in docs)
    if len(vocab) == 0:
        raise EmptyVocabulary("no tokens survive tokenization")
    return count_matrix(docs, vocab, config)


IDF_VARIANTS = ("smooth", "standard")


def idf_weights(counts: np.ndarray, variant: str = "smooth") -> np.ndarray:
    """Inverse document frequency per row of a count matrix.

    ``smooth``: ln((1 + V) / (1 + df)) + 1.  ``standard``: ln(V / df) + 1.
    """
    V = counts.shape[1]
    df = np.count_nonzero(counts, axis=1)
    if variant == "smooth":
        return np.log((1.0 + V) / (1.0 + df)) + 1.0
    if variant == "standard":
        return np.log(V / np.maximum(df, 1)) + 1.0
    raise ValueError(f"unknown idf variant {variant!r}")


def tfidf(counts: TermDocMatrix, variant: str = "smooth") -> TermDocMatrix:
    """Raw term frequency times idf, no length normalization."""
    if counts.weighting is not Weighting.RAW:
        raise WrongWeighting("tf-idf expects a raw-count matrix")
    idf = idf_weights(counts.values, variant)
    return TermDocMatrix(counts.values * idf[:, None], counts.vocab, counts.doc_ids, Weighting.TFIDF, idf)


def apply_idf(counts: TermDocMatrix, idf: np.ndarray) -> TermDocMatrix:
    """Weight new counts with idf values learned on a training corpus."""
    if counts.weighting is not Weighting.RAW:
        raise WrongWeighting("apply_idf expects a raw-count matrix")
    return TermDocMatrix(counts.values * idf[:, None], counts.vocab, counts.doc_ids, Weighting.TFIDF, idf)


REQUIRED_COLUMNS = ("id", "label", "text")


def load_csv(path, allow_empty: bool = False) -> list[Document]:
    """Read an ``id,label,text`` CSV.  Errors carry the offending line number."""
    path = Path(path)
    try:
        fh = path.open(newline="", encoding="utf-8")
    except OSError as exc:
        raise DataError(f"{path}: cannot open ({exc.strerror})") from None
    with fh:
        reader = csv.DictReader(fh)
        header = reader.fieldnames or []
        missing = [c for c in REQUIRED_COLUMNS if c not in header]
        if missing:
            raise DataError(f"{path}:1: missing required column(s) {', '.join(missing)}")
        docs, seen = [], set()
        try:
            for row in reader:
                line = reader.line_num
                if None in row or any(row[c] is None for c in REQUIRED_COLUMNS):
                    raise DataError(f"{path}:{line}: wrong number of fields")
                doc_id = row["id"].strip()
                if not doc_id:
                    raise DataError(f"{path}:{line}: empty id")
                if doc_id in seen:
                    raise DataError(f"{path}:{line}: duplicate id {doc_id!r}")
                seen.add(doc_id)
                try:
                    label = Label.parse(row["label"])
                except DataError as exc:
                    raise DataError(f"{path}:{line}: {exc}") from None
                if not row["text"].strip() and not allow_empty:
                    raise DataError(f"{path}:{line}: empty text")
                docs.append(Document(doc_id, row["text"], label))
        except csv.Error as exc:
            raise DataError(f"{path}:{reader.line_num}: {exc}") from None
    if not docs:
        raise DataError(f"{path}: no data rows")
    return docs


def label_signs(docs: Sequence[Document]) -> np.ndarray:
    return np.array([d.label.sign for d in docs], dtype=int)


def write_triplets(matrix: TermDocMatrix, path) -> None:
    """Nonzero entries as ``row,col,value`` lines after a one-line header."""
    d, V = matrix.shape
    rows, cols = np.nonzero(matrix.values)
    with open(path, "w", newline="", encoding="utf-8") as fh:
        fh.write(f"# d={d} V={V} weighting={matrix.weighting.value}\n")
        writer = csv.writer(fh)
        writer.writerow(["row", "col", "value"])
        for r, c in zip(rows, cols):
            writer.writerow([int(r), int(c), repr(float(matrix.values[r, c]))])


def read_triplets(path) -> tuple[np.ndarray, str]:
    """Inverse of :func:`write_triplets`; returns ``(dense matrix, weighting)``."""
    with open(path, newline="", encoding="utf-8") as fh:
        header = fh.readline().lstrip("#").split()
        meta = dict(item.split("=", 1) for item in header)
        d, V = int(meta["d"]), int(meta["V"])
        out = np.zeros((d, V))
        reader = csv.DictReader(fh)
        for row in reader:
            out[int(row["row"]), int(row["col"])] = float(row["value"])
    return out, meta["weighting"]

