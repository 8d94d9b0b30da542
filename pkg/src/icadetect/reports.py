"""JSON report writing with schema validation."""

from __future__ import annotations

import json
from functools import lru_cache
from importlib import resources
from pathlib import Path

import jsonschema

from . import __version__

SCHEMAS = ("cv_report", "lexicons", "bss_bench")


@lru_cache(maxsize=None)
def load_schema(name: str) -> dict:
    if name not in SCHEMAS:
        raise KeyError(name)
    text = resources.files("icadetect").joinpath(f"schemas/{name}.schema.json").read_text("utf-8")
    return json.loads(text)


def validate(obj: dict, name: str) -> None:
    """Raise ``jsonschema.ValidationError`` if ``obj`` does not match schema ``name``."""
    schema = load_schema(name)
    jsonschema.Draft202012Validator(schema).validate(obj)


def dumps(obj) -> str:
    return json.dumps(obj, indent=2, sort_keys=True, allow_nan=False) + "\n"


def write_report(obj: dict, path, schema: str | None = None) -> Path:
    if schema is not None:
        validate(obj, schema)
    path = Path(path)
    path.write_text(dumps(obj), encoding="utf-8")
    return path


def provenance(config_hash: str, seed: int, variant: str) -> dict:
    return {"config_hash": config_hash, "seed": int(seed), "version": __version__, "variant": variant}
