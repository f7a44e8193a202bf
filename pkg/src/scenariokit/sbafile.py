"""Canonical file format for engine objects.

Every exchange artifact is a JSON document with a top-level ``kind``
discriminator and the object's fields inlined. Serialization is canonical
(sorted keys, two-space indent, trailing newline), which is what makes
content digests and command-line replay byte-stable.
"""

from __future__ import annotations

import dataclasses
import hashlib
import json
import math
import types
from enum import Enum
from pathlib import Path
from typing import Union, get_args, get_origin, get_type_hints

from .errors import SchemaError

_HINTS_CACHE: dict[type, dict] = {}
_KINDS: dict | None = None


def _hints(cls: type) -> dict:
    cached = _HINTS_CACHE.get(cls)
    if cached is None:
        cached = get_type_hints(cls)
        _HINTS_CACHE[cls] = cached
    return cached


def to_jsonable(obj):
    """Recursively convert dataclasses, enums, and tuples to JSON types."""
    if isinstance(obj, Enum):
        return obj.value
    if dataclasses.is_dataclass(obj) and not isinstance(obj, type):
        return {f.name: to_jsonable(getattr(obj, f.name))
                for f in dataclasses.fields(obj)}
    if isinstance(obj, (list, tuple)):
        return [to_jsonable(x) for x in obj]
    if isinstance(obj, dict):
        return {str(k): to_jsonable(v) for k, v in sorted(obj.items())}
    if isinstance(obj, float):
        if not math.isfinite(obj):
            raise SchemaError("non-finite numbers cannot be serialized")
        return obj
    if obj is None or isinstance(obj, (str, int, bool)):
        return obj
    raise SchemaError(f"cannot serialize a {type(obj).__name__}")


def decode(tp, raw):
    """Build a value of annotated type ``tp`` from parsed JSON data."""
    origin = get_origin(tp)
    if origin in (Union, types.UnionType):
        args = get_args(tp)
        if raw is None:
            if type(None) in args:
                return None
            raise SchemaError(f"null not allowed for {tp}")
        for arm in args:
            if dataclasses.is_dataclass(arm) and isinstance(raw, dict):
                return decode(arm, raw)
        for arm in args:
            if get_origin(arm) is tuple and isinstance(raw, list):
                return decode(arm, raw)
        for arm in args:
            if isinstance(arm, type) and issubclass(arm, Enum) \
                    and not isinstance(raw, (dict, list)):
                try:
                    return arm(raw)
                except ValueError:
                    continue
        return raw
    if origin is tuple:
        if not isinstance(raw, list):
            raise SchemaError(f"expected a list for {tp}, got "
                              f"{type(raw).__name__}")
        args = get_args(tp)
        if len(args) == 2 and args[1] is Ellipsis:
            return tuple(decode(args[0], item) for item in raw)
        if len(args) != len(raw):
            raise SchemaError(f"expected {len(args)} items for {tp}")
        return tuple(decode(arm, item) for arm, item in zip(args, raw))
    if dataclasses.is_dataclass(tp):
        if not isinstance(raw, dict):
            raise SchemaError(f"expected an object for {tp.__name__}, got "
                              f"{type(raw).__name__}")
        hints = _hints(tp)
        kwargs = {}
        names = set()
        for f in dataclasses.fields(tp):
            names.add(f.name)
            if f.name in raw:
                kwargs[f.name] = decode(hints[f.name], raw[f.name])
            elif (f.default is dataclasses.MISSING
                  and f.default_factory is dataclasses.MISSING):
                raise SchemaError(
                    f"missing field {f.name!r} for {tp.__name__}")
        extras = sorted(set(raw) - names)
        if extras:
            raise SchemaError(
                f"unknown field(s) {extras} for {tp.__name__}")
        return tp(**kwargs)
    if isinstance(tp, type) and issubclass(tp, Enum):
        try:
            return tp(raw)
        except ValueError:
            raise SchemaError(f"{raw!r} is not a valid {tp.__name__}")
    if tp is float:
        if isinstance(raw, bool) or not isinstance(raw, (int, float)):
            raise SchemaError(f"expected a number, got {raw!r}")
        return float(raw)
    if tp is int:
        if isinstance(raw, bool) or not isinstance(raw, int):
            raise SchemaError(f"expected an integer, got {raw!r}")
        return raw
    if tp is bool:
        if not isinstance(raw, bool):
            raise SchemaError(f"expected a boolean, got {raw!r}")
        return raw
    if tp is str:
        if not isinstance(raw, str):
            raise SchemaError(f"expected a string, got {raw!r}")
        return raw
    return raw


def _registry() -> dict:
    global _KINDS
    if _KINDS is None:
        from . import dynamics, evaluation, ingest, solve, space, trees
        from .model import AssessmentState, ChangeSet
        _KINDS = {
            "assessment_state": AssessmentState,
            "changeset": ChangeSet,
            "scenario_tree": trees.ScenarioTree,
            "bundle": trees.Bundle,
            "generation_params": trees.GenerationParams,
            "decision_config": solve.DecisionConfig,
            "encoding_spec": space.EncodingSpec,
            "distance_spec": space.DistanceSpec,
            "scenario_set": evaluation.ScenarioSet,
            "evaluation_config": evaluation.EvaluationConfig,
            "method_grid": dynamics.MethodGrid,
            "trace_config": dynamics.TraceConfig,
            "records_manifest": ingest.Manifest,
        }
    return _KINDS


def kind_of(obj) -> str:
    for kind, cls in _registry().items():
        if type(obj) is cls:
            return kind
    raise SchemaError(f"no file kind registered for {type(obj).__name__}")


def dumps_canonical(obj) -> str:
    """Canonical document text for any registered object. The payload is
    normalized through a decode round trip so equal objects serialize to
    identical bytes even when a numeric field was populated with an int
    where a float is declared."""
    doc = {"kind": kind_of(obj)}
    payload = to_jsonable(decode(type(obj), to_jsonable(obj)))
    if "kind" in payload:
        raise SchemaError("payload field name 'kind' collides with the "
                          "document discriminator")
    doc.update(payload)
    return json.dumps(doc, sort_keys=True, indent=2, ensure_ascii=False) + "\n"


def loads(text: str, expected: type | None = None):
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise SchemaError(f"not valid JSON: {exc}") from exc
    if not isinstance(doc, dict) or "kind" not in doc:
        raise SchemaError("document has no 'kind' discriminator")
    kind = doc.pop("kind")
    cls = _registry().get(kind)
    if cls is None:
        raise SchemaError(f"unknown document kind {kind!r}")
    if expected is not None and cls is not expected:
        raise SchemaError(
            f"expected a {expected.__name__} document, found kind {kind!r}")
    return decode(cls, doc)


def save(obj, path) -> None:
    Path(path).write_text(dumps_canonical(obj), encoding="utf-8")


def load(path, expected: type | None = None):
    return loads(Path(path).read_text(encoding="utf-8"), expected)


def content_digest(obj) -> str:
    """Stable hex digest of an object's canonical serialization."""
    return hashlib.sha256(dumps_canonical(obj).encode("utf-8")).hexdigest()
