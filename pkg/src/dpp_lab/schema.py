"""Schema documents for every JSON artifact, plus a small validator.

The validator covers the subset of JSON Schema these documents use: type
(including type lists), properties, required, items, enum, and boolean
additionalProperties.  Keeping it in-repo avoids a dependency while letting
tests and callers hold every emitted document to a published shape.
"""

from __future__ import annotations

import json
from importlib import resources

_TYPE_MAP = {
    "object": dict,
    "array": list,
    "string": str,
    "boolean": bool,
    "null": type(None),
}


class SchemaError(Exception):
    """A JSON document does not match its schema."""


def load_schema(name: str) -> dict:
    """Load a shipped schema by short name, e.g. ``bounds``."""
    path = resources.files("dpp_lab.schemas").joinpath(f"{name}.schema.json")
    return json.loads(path.read_text(encoding="utf-8"))


def _type_ok(value, type_name: str) -> bool:
    if type_name == "number":
        return isinstance(value, (int, float)) and not isinstance(value, bool)
    if type_name == "integer":
        return isinstance(value, int) and not isinstance(value, bool)
    return isinstance(value, _TYPE_MAP[type_name])


def validate(value, schema: dict, path: str = "$") -> None:
    """Raise :class:`SchemaError` at the first mismatch."""
    stated = schema.get("type")
    if stated is not None:
        types = stated if isinstance(stated, list) else [stated]
        if not any(_type_ok(value, t) for t in types):
            raise SchemaError(f"{path}: expected {stated}, got {type(value).__name__}")
    if "enum" in schema and value not in schema["enum"]:
        raise SchemaError(f"{path}: {value!r} not one of {schema['enum']}")
    if isinstance(value, dict):
        props = schema.get("properties", {})
        for key in schema.get("required", []):
            if key not in value:
                raise SchemaError(f"{path}: missing required key {key!r}")
        if schema.get("additionalProperties", True) is False:
            extra = set(value) - set(props)
            if extra:
                raise SchemaError(f"{path}: unexpected keys {sorted(extra)}")
        for key, sub in props.items():
            if key in value:
                validate(value[key], sub, f"{path}.{key}")
    if isinstance(value, list) and "items" in schema:
        for i, item in enumerate(value):
            validate(item, schema["items"], f"{path}[{i}]")
