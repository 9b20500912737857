"""Conversion of reports and numpy values to plain JSON-ready data."""

from typing import Any

import numpy as np


def to_dict(model_instance) -> dict:
    """
    Convert a pydantic model (v2 ``model_dump`` or v1 ``dict``) to a dictionary.
    Fields declared with ``exclude=True`` (wall times) are dropped.
    """
    if hasattr(model_instance, "model_dump"):
        return model_instance.model_dump()
    if hasattr(model_instance, "dict"):
        return model_instance.dict()
    return dict(model_instance)


def json_safe(obj: Any):
    """Best-effort conversion to JSON-serializable types."""
    if hasattr(obj, "model_dump"):
        return json_safe(obj.model_dump())
    if isinstance(obj, np.ndarray):
        return [json_safe(x) for x in obj.tolist()]
    if isinstance(obj, np.generic):
        return obj.item()
    if isinstance(obj, (str, int, float, bool)) or obj is None:
        return obj
    if isinstance(obj, (list, tuple)):
        return [json_safe(x) for x in obj]
    if isinstance(obj, dict):
        return {str(k): json_safe(v) for k, v in obj.items()}
    return str(obj)
