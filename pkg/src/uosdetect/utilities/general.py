import hashlib
import json
from typing import Any

import numpy as np
from pydantic import BaseModel, ConfigDict

from uosdetect.errors import DimensionMismatch, DomainError


def _default(obj: Any) -> Any:
    if isinstance(obj, np.ndarray):
        return {"shape": list(obj.shape), "data": obj.ravel().tolist()}
    if isinstance(obj, np.generic):
        return obj.item()
    if isinstance(obj, BaseModel):
        return obj.model_dump()
    raise TypeError(f"Cannot serialize {type(obj).__name__}")


def hash_objects(input_data: tuple, len: int = 8) -> str:
    """
    Generates a fast, stable MD5 hash for the given tuple of input data.
    Arrays are serialized with their shape and full-precision values.

    Args:
        input_data (tuple): The tuple of data to hash.

    Returns:
        str: The hexadecimal digest of the MD5 hash.
    """
    serialized_data = json.dumps(input_data, sort_keys=True, default=_default)

    hasher = hashlib.md5()
    hasher.update(serialized_data.encode("utf-8"))
    return hasher.hexdigest()[:len]


def frozen_array(value: Any, ndim: int | None = None, name: str = "array") -> np.ndarray:
    """
    Coerce `value` to a read-only float array. A 1-d input is accepted where a
    matrix is expected and is treated as a single column.
    """
    array = np.array(value, dtype=float)
    if ndim == 2 and array.ndim == 1:
        array = array[:, None]
    if ndim is not None and array.ndim != ndim:
        raise DimensionMismatch(f"{name} must be {ndim}-dimensional, got shape {array.shape}")
    if not np.all(np.isfinite(array)):
        raise DomainError(f"{name} contains non-finite values")
    array.setflags(write=False)
    return array


class UoSModel(BaseModel):
    model_config = ConfigDict(
        extra="forbid",
        frozen=True,
        arbitrary_types_allowed=True,
    )
