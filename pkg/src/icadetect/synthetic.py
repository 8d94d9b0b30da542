"""Synthetic sources, mixtures and corpora for benchmarks and tests."""

from __future__ import annotations

import numpy as np

from .errors import ConfigError

SOURCE_FAMILIES = ("laplace", "uniform", "bimodal", "gaussian")


def sources(families, V, rng) -> np.ndarray:
    """Unit-variance, zero-mean independent rows, one per family name."""
    rows = []
    for fam in families:
        if fam == "laplace":
            s = rng.laplace(0.0, 1.0 / np.sqrt(2.0), V)
        elif fam == "uniform":
            s = rng.uniform(-np.sqrt(3.0), np.sqrt(3.0), V)
        elif fam == "bimodal":
            # equal mixture of N(+-0.9, 0.44^2): variance 0.81 + 0.19 = 1
            s = rng.choice([-0.9, 0.9], V) + rng.normal(0.0, np.sqrt(0.19), V)
        elif fam == "gaussian":
            s = rng.standard_normal(V)
        else:
            raise ConfigError(f"unknown source family {fam!r}")
        rows.append(s)
    S = np.array(rows)
    return S - S.mean(axis=1, keepdims=True)


def mixing_matrix(n, rng, max_cond=10.0) -> np.ndarray:
    """Gaussian random square matrix with condition number below ``max_cond``."""
    while True:
        A = rng.standard_normal((n, n))
        if np.linalg.cond(A) < max_cond:
            return A


def parse_mix(spec: str) -> list[str]:
    """``"4xlaplace,2xuniform"`` -> list of family names."""
    out = []
    for part in spec.split(","):
        part = part.strip()
        if not part:
            continue
        head, sep, tail = part.partition("x")
        if sep and head.isdigit():
            count, fam = int(head), tail
        else:
            count, fam = 1, part
        if fam not in SOURCE_FAMILIES:
            raise ConfigError(f"unknown source family {fam!r}")
        out.extend([fam] * count)
    if not out:
        raise ConfigError("empty source mix")
    return out


def sparse_text_like(d, n, V, rng, density=0.05):
    """Nonnegative sparse sources mixed by a nonnegative matrix.

    Returns ``(X, A, S)`` with ``X = A @ S`` of shape (d, V).  Sources are
    Bernoulli-exponential, mimicking the long-tailed, mostly-zero profile of
    term weights.
    """
    S = rng.exponential(1.0, (n, V)) * (rng.random((n, V)) < density)
    A = rng.exponential(1.0, (d, n)) * (rng.random((d, n)) < 0.5)
    return A @ S, A, S


def topic_corpus(n_docs, rng, words_per_doc=12, vocab_per_class=30):
    """Two-class corpus whose classes use disjoint vocabularies.

    Returns ``(texts, labels)`` with labels in {"reliable", "unreliable"},
    balanced and interleaved.
    """
    vocab = {
        "reliable": [f"rel{i:02d}" for i in range(vocab_per_class)],
        "unreliable": [f"unr{i:02d}" for i in range(vocab_per_class)],
    }
    texts, labels = [], []
    for i in range(n_docs):
        label = "reliable" if i % 2 == 0 else "unreliable"
        words = vocab[label]
        # Zipf-ish word choice so documents share a few frequent terms
        p = 1.0 / np.arange(1, len(words) + 1)
        p /= p.sum()
        texts.append(" ".join(rng.choice(words, words_per_doc, p=p)))
        labels.append(label)
    return texts, labels
