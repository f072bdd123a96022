"""Stable JSON output: floats at 12 significant digits, infinities as strings."""

from __future__ import annotations

import json
import math

import numpy as np

SIG_DIGITS = 12


def _clean(obj):
    if isinstance(obj, (float, np.floating)):
        x = float(obj)
        if math.isinf(x):
            return "inf" if x > 0 else "-inf"
        if math.isnan(x):
            return "nan"
        return float(format(x, f".{SIG_DIGITS}g")) + 0.0
    if isinstance(obj, (np.integer,)):
        return int(obj)
    if isinstance(obj, dict):
        return {str(k): _clean(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_clean(v) for v in obj]
    return obj


def dump_json(obj, indent: int | None = 2) -> str:
    return json.dumps(_clean(obj), indent=indent, ensure_ascii=False) + "\n"

