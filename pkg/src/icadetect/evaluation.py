"""Classification metrics and word lexicons read off the estimated mixing matrix.

Undefined ratios (0/0) are reported as ``None`` and serialize to JSON ``null``.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional, Sequence

import numpy as np

from .errors import EmptyEvaluation, IndexOutOfRange, SingleClass
from .text import Vocabulary

METRIC_NAMES = ("accuracy", "sensitivity", "precision", "f1")

# Published ICA scores, printed alongside our numbers for comparison only
REFERENCE_SCORES = {
    "gaussian": {"accuracy": 0.812, "sensitivity": 0.763, "precision": 0.859, "f1": 0.803},
    "rbf": {"accuracy": 0.796, "sensitivity": 0.768, "precision": 0.824, "f1": 0.791},
    "polynomial": {"accuracy": 0.794, "sensitivity": 0.762, "precision": 0.8267, "f1": 0.784},
}


@dataclass(frozen=True)
class ConfusionCounts:
    """Positive class is unreliable (+1)."""

    tp: int
    fp: int
    tn: int
    fn: int

    def __post_init__(self):
        if min(self.tp, self.fp, self.tn, self.fn) < 0:
            raise ValueError("confusion counts must be non-negative")

    @property
    def total(self) -> int:
        return self.tp + self.fp + self.tn + self.fn

    @classmethod
    def from_labels(cls, truth, predicted) -> "ConfusionCounts":
        t = np.asarray(truth) > 0
        p = np.asarray(predicted) > 0
        return cls(
            tp=int(np.sum(t & p)), fp=int(np.sum(~t & p)),
            tn=int(np.sum(~t & ~p)), fn=int(np.sum(t & ~p)),
        )

    def swapped(self) -> "ConfusionCounts":
        """Counts with the class roles exchanged."""
        return ConfusionCounts(tp=self.tn, fp=self.fn, tn=self.tp, fn=self.fp)


def _ratio(num, den) -> Optional[float]:
    return None if den == 0 else num / den


def metrics(counts: ConfusionCounts) -> dict:
    """Accuracy, sensitivity (recall), precision and F1.

    >>> metrics(ConfusionCounts(tp=0, fp=0, tn=3, fn=1))["precision"] is None
    True
    """
    if counts.total == 0:
        raise EmptyEvaluation("no samples to evaluate")
    sens = _ratio(counts.tp, counts.tp + counts.fn)
    prec = _ratio(counts.tp, counts.tp + counts.fp)
    if sens is None or prec is None or sens + prec == 0:
        f1 = None
    else:
        f1 = 2 * prec * sens / (prec + sens)
    return {
        "accuracy": (counts.tp + counts.tn) / counts.total,
        "sensitivity": sens,
        "precision": prec,
        "f1": f1,
    }


def mean_metrics(rows: Sequence[dict]) -> dict:
    """Per-metric mean over the rows where the metric is defined."""
    out = {}
    for name in METRIC_NAMES:
        vals = [r[name] for r in rows if r.get(name) is not None]
        out[name] = float(np.mean(vals)) if vals else None
    return out


@dataclass(frozen=True)
class ComponentLexicon:
    component_index: int
    entries: tuple  # ((term, |weight|), ...)
    association: Optional[float] = None

    def to_dict(self) -> dict:
        return {
            "component": self.component_index,
            "association": self.association,
            "words": [{"term": t, "weight": w} for t, w in self.entries],
        }


def top_words(a_hat, vocab: Vocabulary, component: int, k: int = 15) -> ComponentLexicon:
    """The ``k`` terms with the largest ``|a_hat[:, component]|``.

    Ties are broken by lexicographic term order.
    """
    a_hat = np.asarray(a_hat, dtype=float)
    d, N = a_hat.shape
    if d != len(vocab):
        raise IndexOutOfRange(f"a_hat has {d} rows but the vocabulary has {len(vocab)} terms")
    if not 0 <= component < N:
        raise IndexOutOfRange(f"component must be in [0, {N - 1}], got {component}")
    if not 1 <= k <= d:
        raise IndexOutOfRange(f"k must be in [1, {d}], got {k}")
    mags = np.abs(a_hat[:, component])
    terms = np.array(vocab.terms, dtype=object)
    # lexsort: last key is primary
    order = np.lexsort((terms, -mags))[:k]
    return ComponentLexicon(component, tuple((str(terms[i]), float(mags[i])) for i in order))


def component_class_association(Y_train, labels) -> list:
    """Point-biserial correlation of each source row with the +1/-1 labels.

    Positive means the component leans unreliable.  Constant rows give ``None``.
    """
    Y = np.atleast_2d(np.asarray(Y_train, dtype=float))
    y = np.asarray(labels, dtype=float).ravel()
    if Y.shape[1] != y.size:
        raise ValueError(f"{Y.shape[1]} samples but {y.size} labels")
    if np.all(y == y[0]):
        raise SingleClass("association needs both classes")
    yc = y - y.mean()
    out = []
    for row in Y:
        rc = row - row.mean()
        den = np.sqrt(np.sum(rc * rc) * np.sum(yc * yc))
        if den <= 1e-300 or np.ptp(row) == 0:
            out.append(None)
        else:
            out.append(float(np.clip(rc @ yc / den, -1.0, 1.0)))
    return out


def rank_components(scores: Sequence[Optional[float]]) -> list:
    """Component indices by descending signed score; undefined scores last."""
    defined = [i for i, s in enumerate(scores) if s is not None]
    undefined = [i for i, s in enumerate(scores) if s is None]
    return sorted(defined, key=lambda i: (-scores[i], i)) + undefined


def lexicons(a_hat, vocab: Vocabulary, scores=None, k: int = 15) -> list:
    N = np.asarray(a_hat).shape[1]
    order = rank_components(scores) if scores is not None else list(range(N))
    out = []
    for n in order:
        lex = top_words(a_hat, vocab, n, k)
        out.append(ComponentLexicon(n, lex.entries, None if scores is None else scores[n]))
    return out


def lexicon_table(lexs: Sequence[ComponentLexicon], columns: int = 5) -> str:
    """Side-by-side plain-text table, one column per component."""
    blocks = []
    for start in range(0, len(lexs), columns):
        group = lexs[start:start + columns]
        heads = []
        for lex in group:
            a = "n/a" if lex.association is None else f"{lex.association:+.3f}"
            heads.append(f"Feature {lex.component_index} ({a})")
        cells = [[f"{t} {w:.3f}" for t, w in lex.entries] for lex in group]
        width = max(len(s) for s in heads + [c for col in cells for c in col]) + 2
        lines = ["".join(h.ljust(width) for h in heads).rstrip()]
        lines.append("-" * (width * len(group) - 2))
        for r in range(max(len(c) for c in cells)):
            lines.append("".join((col[r] if r < len(col) else "").ljust(width) for col in cells).rstrip())
        blocks.append("\n".join(lines))
    return "\n\n".join(blocks) + "\n"


def metrics_table(rows: dict, reference: dict = REFERENCE_SCORES) -> str:
    """``rows`` maps kernel family -> metric dict.  Reference values shown in brackets."""
    head = f"{'kernel':<12}" + "".join(f"{m:>22}" for m in METRIC_NAMES)
    lines = [head, "-" * len(head)]
    for fam, vals in rows.items():
        ref = reference.get(fam, {})
        cells = []
        for m in METRIC_NAMES:
            v = vals.get(m)
            ours = "undef" if v is None else f"{v:.3f}"
            cells.append(f"{ours} [{ref[m]:.3f}]" if m in ref else ours)
        lines.append(f"{fam:<12}" + "".join(f"{c:>22}" for c in cells))
    lines.append("bracketed: published reference scores, for comparison only")
    return "\n".join(lines) + "\n"
