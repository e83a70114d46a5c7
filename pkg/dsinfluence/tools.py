"""
miscellaneous functions
"""
import json
import math
import os
import tempfile
from pathlib import Path
from typing import Callable, Dict, Iterable, List, Optional, Union

import numpy as np

ABSENT = "--"


def serialize(stream: Iterable[object], **kwargs) -> Iterable[dict]:
    for data in stream:
        yield data.serialize(**kwargs)


def format_data(stream: Iterable[dict], formatters: Dict[str, Callable]):
    for data in stream:
        for key in formatters:
            if key in data:
                data[key] = formatters[key](data[key])
        yield data


def format_score(value: Optional[float], digits: int = 2) -> str:
    if value is None:
        return ABSENT
    return f"{value:.{digits}f}"


def canonical_number(value: float) -> str:
    """Render a float without exponent notation, integers without a fraction."""
    if not math.isfinite(value):
        raise ValueError(f"cannot encode non-finite number {value!r}")
    if float(value).is_integer():
        return str(int(value))
    return np.format_float_positional(value, trim="-")


def canonical_json(value) -> str:
    """
    Deterministic compact JSON: sorted keys, no whitespace and
    shortest round-trip floats.
    """
    if value is None:
        return "null"
    if isinstance(value, bool):
        return "true" if value else "false"
    if isinstance(value, (int, np.integer)):
        return str(int(value))
    if isinstance(value, (float, np.floating)):
        return canonical_number(float(value))
    if isinstance(value, str):
        return json.dumps(value, ensure_ascii=False)
    if isinstance(value, (list, tuple)):
        return "[" + ",".join(canonical_json(item) for item in value) + "]"
    if isinstance(value, dict) or hasattr(value, "items"):
        items = sorted((str(key), item) for key, item in value.items())
        return (
            "{"
            + ",".join(
                f"{json.dumps(key, ensure_ascii=False)}:{canonical_json(item)}"
                for key, item in items
            )
            + "}"
        )
    raise TypeError(f"cannot encode {type(value).__name__}")


def atomic_write(path: Union[str, Path], text: str):
    """Write text next to path and rename it into place."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    fd, tmp_name = tempfile.mkstemp(prefix=f".{path.name}.", dir=str(path.parent))
    try:
        with os.fdopen(fd, "w", encoding="utf-8", newline="") as tmp:
            tmp.write(text)
        os.replace(tmp_name, path)
    except BaseException:
        if os.path.exists(tmp_name):
            os.unlink(tmp_name)
        raise


def spawn_seeds(seed: int, count: int) -> List[int]:
    """Independent child seeds derived from one root seed."""
    children = np.random.SeedSequence(seed).spawn(count)
    return [int(child.generate_state(1)[0]) for child in children]
