"""Model bundle: a versioned JSON container for a trained extractor + SVM.

Matrices are stored as ``{"shape": [...], "dtype": "<f8", "data": base64}``
holding little-endian float64 values in row-major order.  The top level
records ``d`` (vocabulary size) and ``N`` (order) so a reader can check
shapes before decoding.
"""

from __future__ import annotations

import base64
import binascii
import json
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from . import svm
from .errors import ConfigError, DataError
from .pipeline import FeatureExtractor, TrainedModel
from .text import TokenizeConfig, Vocabulary
from .whitening import CenteringStats, PcaProjector

FORMAT = "icadetect-model"
FORMAT_VERSION = 1


def encode_array(a) -> dict:
    a = np.ascontiguousarray(np.asarray(a, dtype="<f8"))
    return {"shape": list(a.shape), "dtype": "<f8", "data": base64.b64encode(a.tobytes()).decode("ascii")}


def decode_array(obj) -> np.ndarray:
    if obj.get("dtype") != "<f8":
        raise DataError(f"unsupported matrix dtype {obj.get('dtype')!r}")
    raw = base64.b64decode(obj["data"], validate=True)
    shape = tuple(int(s) for s in obj["shape"])
    if len(raw) != 8 * int(np.prod(shape)):
        raise DataError(f"matrix payload has {len(raw)} bytes, shape {shape} needs {8 * int(np.prod(shape))}")
    return np.frombuffer(raw, dtype="<f8").reshape(shape).astype(float)


@dataclass
class ModelBundle:
    trained: TrainedModel
    vocab: Vocabulary
    idf: np.ndarray
    tfidf_variant: str
    tokenizer: TokenizeConfig
    association: list
    provenance: dict

    @property
    def d(self) -> int:
        return len(self.vocab)

    @property
    def order(self) -> int:
        return self.trained.extractor.order


def to_dict(b: ModelBundle) -> dict:
    fx, model = b.trained.extractor, b.trained.model
    return {
        "format": FORMAT,
        "version": FORMAT_VERSION,
        "d": b.d,
        "N": b.order,
        "vocab": list(b.vocab.terms),
        "idf": encode_array(b.idf),
        "tfidf_variant": b.tfidf_variant,
        "tokenizer": {
            "stop_words": sorted(b.tokenizer.stop_words),
            "keep_chars": b.tokenizer.keep_chars,
            "lowercase": b.tokenizer.lowercase,
        },
        "extractor": {
            "mean": encode_array(fx.stats.mean),
            "f": encode_array(fx.proj.f),
            "eigenvalues": encode_array(fx.proj.eigenvalues),
            "w": encode_array(fx.w),
            "a_hat": encode_array(fx.a_hat),
            "test_centering": fx.test_centering,
        },
        "svm": {
            "family": b.trained.family,
            "kernel": model.kernel.to_dict(),
            "c": model.c,
            "bias": model.bias,
            "support_vectors": encode_array(model.support_vectors),
            "alphas": encode_array(model.alphas),
        },
        "train_features": encode_array(b.trained.train_features),
        "association": b.association,
        "provenance": b.provenance,
    }


def from_dict(obj: dict) -> ModelBundle:
    try:
        if obj.get("format") != FORMAT:
            raise DataError("not a model bundle")
        if obj.get("version") != FORMAT_VERSION:
            raise DataError(f"unsupported bundle version {obj.get('version')!r}")
        d, N = int(obj["d"]), int(obj["N"])
        vocab = Vocabulary(tuple(obj["vocab"]))
        ex = obj["extractor"]
        stats = CenteringStats(decode_array(ex["mean"]))
        proj = PcaProjector(decode_array(ex["f"]), decode_array(ex["eigenvalues"]))
        w, a_hat = decode_array(ex["w"]), decode_array(ex["a_hat"])
        expected = {"mean": (stats.mean.shape, (d,)), "f": (proj.f.shape, (N, d)),
                    "w": (w.shape, (N, N)), "a_hat": (a_hat.shape, (d, N))}
        for name, (got, want) in expected.items():
            if got != want:
                raise DataError(f"bundle matrix {name} has shape {got}, header says {want}")
        if len(vocab) != d:
            raise DataError(f"bundle vocabulary has {len(vocab)} terms, header says d={d}")
        fx = FeatureExtractor(stats, proj, w, a_hat, ex.get("test_centering", "train"))
        s = obj["svm"]
        model = svm.SvmModel(
            support_vectors=decode_array(s["support_vectors"]), alphas=decode_array(s["alphas"]),
            bias=float(s["bias"]), kernel=svm.KernelSpec.from_dict(s["kernel"]), c=float(s["c"]),
        )
        tm = TrainedModel(fx, model, s["family"], decode_array(obj["train_features"]))
        tok = obj["tokenizer"]
        tokenizer = TokenizeConfig(frozenset(tok["stop_words"]), tok["keep_chars"], bool(tok["lowercase"]))
        return ModelBundle(tm, vocab, decode_array(obj["idf"]), obj["tfidf_variant"], tokenizer,
                           list(obj.get("association", [])), dict(obj.get("provenance", {})))
    except DataError:
        raise
    except (ConfigError, KeyError, TypeError, ValueError, binascii.Error) as exc:
        raise DataError(f"corrupt model bundle: {exc.__class__.__name__}: {exc}") from None


def save_bundle(b: ModelBundle, path) -> None:
    Path(path).write_text(json.dumps(to_dict(b), indent=1, sort_keys=True) + "\n", encoding="utf-8")


def load_bundle(path) -> ModelBundle:
    try:
        obj = json.loads(Path(path).read_text(encoding="utf-8"))
    except OSError as exc:
        raise DataError(f"{path}: cannot read bundle ({exc.strerror})") from None
    except (json.JSONDecodeError, UnicodeDecodeError) as exc:
        raise DataError(f"{path}: corrupt model bundle ({exc})") from None
    if not isinstance(obj, dict):
        raise DataError(f"{path}: corrupt model bundle")
    return from_dict(obj)
