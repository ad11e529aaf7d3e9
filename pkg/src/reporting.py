import json
import logging
import math
import os
import re
from dataclasses import asdict, is_dataclass
from enum import Enum

import numpy as np
import pandas as pd

logger = logging.getLogger(__name__)

SIGNIFICANT_DIGITS = 17
CSV_FLOAT_FORMAT = f"%.{SIGNIFICANT_DIGITS}g"

_FLOAT_MARK = "@@float:"
_FLOAT_PATTERN = re.compile(r'"@@float:([^"]+)"')


def to_plain(obj):
    """
    Recursively convert dataclasses, enums, numpy scalars/arrays and tuples
    into JSON-compatible Python values.
    """
    if is_dataclass(obj) and not isinstance(obj, type):
        if hasattr(obj, "to_dict"):
            return to_plain(obj.to_dict())
        return to_plain(asdict(obj))
    if isinstance(obj, Enum):
        return obj.value
    if isinstance(obj, dict):
        return {str(key): to_plain(value) for key, value in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [to_plain(value) for value in obj]
    if isinstance(obj, np.ndarray):
        return [to_plain(value) for value in obj.tolist()]
    if isinstance(obj, (bool, np.bool_)):
        return bool(obj)
    if isinstance(obj, (int, np.integer)):
        return int(obj)
    if isinstance(obj, (float, np.floating)):
        return float(obj)
    return obj


def _mark_floats(obj):
    if isinstance(obj, float):
        if not math.isfinite(obj):
            return None
        return f"{_FLOAT_MARK}{obj:.{SIGNIFICANT_DIGITS}g}"
    if isinstance(obj, dict):
        return {key: _mark_floats(value) for key, value in obj.items()}
    if isinstance(obj, list):
        return [_mark_floats(value) for value in obj]
    return obj


def dumps(obj):
    """
    Serialize a report to JSON with every float written to 17 significant
    digits and keys sorted, so identical inputs give byte-identical text.
    Non-finite floats become null.
    """
    text = json.dumps(_mark_floats(to_plain(obj)), indent=2, sort_keys=True)
    return _FLOAT_PATTERN.sub(lambda match: match.group(1), text) + "\n"


def write_json(obj, path=None):
    """Write a report to `path`, or return the text when no path is given."""
    text = dumps(obj)
    if path:
        _ensure_parent(path)
        with open(path, "w", encoding="utf-8") as handle:
            handle.write(text)
        logger.info(f"Wrote JSON report to {path}")
    return text


def write_csv(frame: pd.DataFrame, path=None):
    """Write a dataset with fixed float formatting; returns the CSV text."""
    text = frame.to_csv(index=False, float_format=CSV_FLOAT_FORMAT, lineterminator="\n")
    if path:
        _ensure_parent(path)
        with open(path, "w", encoding="utf-8", newline="") as handle:
            handle.write(text)
        logger.info(f"Wrote {len(frame)} rows to {path}")
    return text


def _ensure_parent(path):
    parent = os.path.dirname(os.path.abspath(path))
    if parent and not os.path.exists(parent):
        os.makedirs(parent)
