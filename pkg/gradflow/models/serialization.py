"""Conversion of result objects into JSON-safe structures."""

import math
from enum import Enum
from typing import Any

import numpy as np


def json_safe(value: Any) -> Any:
    """
    Convert numpy scalars/arrays, enums and non-finite floats to JSON-safe values.

    NaN becomes None; infinities become the strings "inf" / "-inf".

    Args:
        value: Arbitrary nested structure of dicts, lists, tuples and scalars

    Returns:
        A structure that json.dumps accepts without allow_nan
    """
    if isinstance(value, dict):
        return {str(k): json_safe(v) for k, v in value.items()}
    if isinstance(value, (list, tuple)):
        return [json_safe(v) for v in value]
    if isinstance(value, np.ndarray):
        return [json_safe(v) for v in value.tolist()]
    if isinstance(value, Enum):
        return value.value
    if isinstance(value, (np.bool_, bool)):
        return bool(value)
    if isinstance(value, (np.integer,)):
        return int(value)
    if isinstance(value, (float, np.floating)):
        v = float(value)
        if math.isnan(v):
            return None
        if math.isinf(v):
            return "inf" if v > 0 else "-inf"
        return v
    return value
