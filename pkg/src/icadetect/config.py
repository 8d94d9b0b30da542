"""Experiment configuration read from TOML, with ``--set key=value`` overrides."""

from __future__ import annotations

import copy
import hashlib
import json
import os
from dataclasses import dataclass
from pathlib import Path

import tomli

from .errors import ConfigError
from .ica import IcaConfig
from .pipeline import FAMILIES, HyperGrid
from .text import IDF_VARIANTS, TokenizeConfig, default_stop_words

DEFAULTS = {
    "dataset": "",
    "output_dir": "out",
    "seed": 0,
    "threads": 0,  # 0 means all available cores
    "tokenizer": {"stop_words": "default", "extra_stop_words": [], "keep_chars": "#@", "lowercase": True},
    "tfidf": {"variant": "smooth"},
    "grid": {
        "orders": [10, 25, 50, 100],
        "c_values": [0.1, 1.0, 10.0, 100.0],
        "sigma_factors": [0.5, 1.0, 2.0, 5.0],
        "gamma_factors": [0.1, 1.0, 10.0],
        "degrees": [2, 3],
        "coef0": 1.0,
        "families": list(FAMILIES),
    },
    "ica": {"seed": 0, "max_iters": 500, "tol": 1e-6, "lam": 0.0, "smooth_eps": 1e-8, "restarts": 5},
    "evaluation": {"k": 15, "test_centering": "train", "final_family": "gaussian", "svm_tol": 1e-3},
}


def _merge(base: dict, update: dict, prefix: str = "") -> dict:
    out = copy.deepcopy(base)
    for key, val in update.items():
        name = prefix + key
        if key not in base:
            raise ConfigError(f"unknown config key {name!r}")
        if isinstance(base[key], dict):
            if not isinstance(val, dict):
                raise ConfigError(f"{name!r} must be a table")
            out[key] = _merge(base[key], val, name + ".")
        else:
            if isinstance(val, dict):
                raise ConfigError(f"{name!r} must not be a table")
            out[key] = val
    return out


def _parse_value(text: str):
    try:
        return tomli.loads(f"v = {text}")["v"]
    except tomli.TOMLDecodeError:
        return text


def parse_override(item: str) -> dict:
    """``"ica.lam=0.5"`` -> ``{"ica": {"lam": 0.5}}``.  Values use TOML syntax;
    anything that does not parse is taken as a bare string."""
    key, sep, value = item.partition("=")
    if not sep or not key.strip():
        raise ConfigError(f"override must look like key=value, got {item!r}")
    parts = key.strip().split(".")
    out = node = {}
    for p in parts[:-1]:
        node[p] = {}
        node = node[p]
    node[parts[-1]] = _parse_value(value.strip())
    return out


@dataclass(frozen=True)
class RunConfig:
    raw: dict
    base_dir: Path

    def section(self, name):
        return self.raw[name]

    @property
    def dataset(self) -> Path:
        p = Path(self.raw["dataset"])
        return p if p.is_absolute() else self.base_dir / p

    @property
    def output_dir(self) -> Path:
        p = Path(self.raw["output_dir"])
        return p if p.is_absolute() else self.base_dir / p

    @property
    def seed(self) -> int:
        return self.raw["seed"]

    @property
    def threads(self) -> int:
        return self.raw["threads"] or os.cpu_count() or 1

    def tokenizer(self) -> TokenizeConfig:
        t = self.raw["tokenizer"]
        sw = t["stop_words"]
        if sw == "default":
            words = set(default_stop_words())
        elif sw == "none":
            words = set()
        elif isinstance(sw, list):
            words = {str(w).lower() for w in sw}
        else:
            path = Path(sw) if Path(sw).is_absolute() else self.base_dir / sw
            try:
                lines = path.read_text(encoding="utf-8").splitlines()
            except OSError as exc:
                raise ConfigError(f"cannot read stop-word file {path}: {exc.strerror}") from None
            words = {ln.strip() for ln in lines if ln.strip() and not ln.startswith("#")}
        words |= {str(w).lower() for w in t["extra_stop_words"]}
        return TokenizeConfig(frozenset(words), t["keep_chars"], t["lowercase"])

    @property
    def tfidf_variant(self) -> str:
        return self.raw["tfidf"]["variant"]

    def grid(self) -> HyperGrid:
        g = self.raw["grid"]
        return HyperGrid(
            orders=tuple(int(n) for n in g["orders"]), c_values=tuple(float(c) for c in g["c_values"]),
            sigma_factors=tuple(float(s) for s in g["sigma_factors"]),
            gamma_factors=tuple(float(s) for s in g["gamma_factors"]),
            degrees=tuple(int(p) for p in g["degrees"]), coef0=float(g["coef0"]),
            families=tuple(g["families"]),
        )

    def ica(self, threads: int = 1) -> IcaConfig:
        i = self.raw["ica"]
        return IcaConfig(seed=int(i["seed"]), max_iters=int(i["max_iters"]), tol=float(i["tol"]),
                         lam=float(i["lam"]), smooth_eps=float(i["smooth_eps"]),
                         restarts=int(i["restarts"]), threads=threads)

    @property
    def evaluation(self) -> dict:
        return self.raw["evaluation"]

    def hash(self) -> str:
        """SHA-256 of the canonical settings, leaving out threads and output location."""
        keep = {k: v for k, v in self.raw.items() if k not in ("threads", "output_dir")}
        blob = json.dumps(keep, sort_keys=True, separators=(",", ":"))
        return hashlib.sha256(blob.encode("utf-8")).hexdigest()

    def validate(self) -> "RunConfig":
        try:
            self.grid()
            self.ica()
        except (TypeError, ValueError) as exc:
            raise ConfigError(f"bad value: {exc}") from None
        if self.tfidf_variant not in IDF_VARIANTS:
            raise ConfigError(f"tfidf.variant must be one of {IDF_VARIANTS}")
        ev = self.evaluation
        if ev["test_centering"] not in ("train", "self"):
            raise ConfigError("evaluation.test_centering must be 'train' or 'self'")
        if ev["final_family"] not in self.raw["grid"]["families"]:
            raise ConfigError("evaluation.final_family must be one of grid.families")
        if not isinstance(ev["k"], int) or ev["k"] < 1:
            raise ConfigError("evaluation.k must be a positive integer")
        if not isinstance(self.raw["threads"], int) or self.raw["threads"] < 0:
            raise ConfigError("threads must be a non-negative integer")
        if not isinstance(self.raw["seed"], int):
            raise ConfigError("seed must be an integer")
        return self


def load_config(path=None, overrides=()) -> RunConfig:
    raw = copy.deepcopy(DEFAULTS)
    base = Path.cwd()
    if path is not None:
        path = Path(path)
        try:
            data = tomli.loads(path.read_text(encoding="utf-8"))
        except OSError as exc:
            raise ConfigError(f"{path}: cannot read config ({exc.strerror})") from None
        except tomli.TOMLDecodeError as exc:
            raise ConfigError(f"{path}: {exc}") from None
        raw = _merge(raw, data)
        base = path.parent
    for item in overrides:
        raw = _merge(raw, parse_override(item))
    return RunConfig(raw, base).validate()
