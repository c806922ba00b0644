"""JSON schemas for command-line inputs."""
from __future__ import annotations

import jsonschema

_component = {"type": ["number", "string", "integer"]}

SCALAR = {
    "oneOf": [
        {"type": "array", "items": _component, "minItems": 2, "maxItems": 2},
        _component,
    ]
}

POINT = {"type": "array", "items": {"type": "integer"}, "minItems": 1}

POINTS = {"type": "array", "items": POINT}

EXPPOLY = {
    "type": "object",
    "required": ["dim"],
    "properties": {
        "dim": {"type": "integer", "minimum": 1},
        "terms": {
            "type": "array",
            "items": {
                "type": "object",
                "required": ["lambda", "coeffs"],
                "properties": {
                    "lambda": {"type": "array", "items": SCALAR, "minItems": 1},
                    "coeffs": {
                        "type": "array",
                        "items": {
                            "type": "object",
                            "required": ["alpha", "c"],
                            "properties": {
                                "alpha": {"type": "array", "items": {"type": "integer", "minimum": 0}},
                                "c": SCALAR,
                            },
                        },
                    },
                },
            },
        },
    },
}

SAMPLES = {
    "type": "object",
    "required": ["dim", "lo", "hi", "values"],
    "properties": {
        "dim": {"type": "integer", "minimum": 1},
        "lo": POINT,
        "hi": POINT,
        "values": {"type": "array", "items": SCALAR},
    },
}

PHI_TABLE = {
    "type": "array",
    "items": {
        "type": "object",
        "required": ["y", "value"],
        "properties": {"y": POINT, "value": SCALAR},
    },
}

PRODUCT = {
    "type": "object",
    "required": ["factors"],
    "properties": {
        "factors": {
            "type": "array",
            "items": {
                "type": "object",
                "required": ["shift"],
                "properties": {
                    "lambda": {"type": "array", "items": SCALAR},
                    "phi": PHI_TABLE,
                    "shift": POINT,
                    "power": {"type": "integer", "minimum": 1},
                },
                "oneOf": [{"required": ["lambda"]}, {"required": ["phi"]}],
            },
        }
    },
}

SPACE = {
    "type": "object",
    "required": ["basis"],
    "properties": {"dim": {"type": "integer", "minimum": 1}, "basis": {"type": "array", "items": EXPPOLY}},
}

POWERS = {"type": "array", "items": {"type": "integer", "minimum": 1}}

PHI_VALUES = {"type": "array", "items": SCALAR}


def validate(data, schema, what: str):
    """Raise ``ValueError`` naming ``what`` when ``data`` does not match."""
    try:
        jsonschema.validate(data, schema)
    except jsonschema.ValidationError as exc:
        path = "/".join(str(p) for p in exc.absolute_path)
        raise ValueError(f"{what}: {exc.message}" + (f" at {path}" if path else "")) from None
    return data
