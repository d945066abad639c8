"""
JSON canónico - Claves ordenadas y flotantes con formato fijo %.9g
Los infinitos se escriben como cadenas ("inf", "-inf").
"""

import json
import math

import numpy as np

FLOAT_FORMAT = "%.9g"


def canonical_dumps(value, indent: int = 2) -> str:
    """Serializar `value` de forma estable (mismo texto para el mismo valor)."""
    return _encode(value, 0, indent) + "\n"


def _encode(value, level: int, indent: int) -> str:
    if isinstance(value, np.ndarray):
        value = value.tolist()
    elif isinstance(value, np.generic):
        value = value.item()

    if value is None:
        return "null"
    if isinstance(value, bool):
        return "true" if value else "false"
    if isinstance(value, int):
        return str(value)
    if isinstance(value, float):
        return _encode_float(value)
    if isinstance(value, str):
        return json.dumps(value, ensure_ascii=False)

    pad = " " * (indent * (level + 1))
    closing = " " * (indent * level)
    if isinstance(value, dict):
        if not value:
            return "{}"
        items = [f"{pad}{json.dumps(str(key), ensure_ascii=False)}: {_encode(value[key], level + 1, indent)}" for key in sorted(value, key=str)]
        return "{\n" + ",\n".join(items) + "\n" + closing + "}"
    if isinstance(value, (list, tuple)):
        if not value:
            return "[]"
        if all(_is_scalar(item) for item in value):
            return "[" + ", ".join(_encode(item, level + 1, indent) for item in value) + "]"
        items = [pad + _encode(item, level + 1, indent) for item in value]
        return "[\n" + ",\n".join(items) + "\n" + closing + "]"
    raise TypeError(f"No se puede serializar {type(value).__name__}")


def _encode_float(value: float) -> str:
    if math.isnan(value):
        return '"nan"'
    if math.isinf(value):
        return '"inf"' if value > 0 else '"-inf"'
    text = FLOAT_FORMAT % value
    return "0" if text == "-0" else text


def _is_scalar(value) -> bool:
    return value is None or isinstance(value, (bool, int, float, str, np.generic))
