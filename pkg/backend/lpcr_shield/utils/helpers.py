# LPCR Shield - Utility Helper Functions
import hashlib
import json
from pathlib import Path
from typing import Any, Union

import numpy as np
import pandas as pd
import psutil

PathLike = Union[str, Path]

CSV_FLOAT_FORMAT = "%.6f"


def sha256_bytes(data: bytes) -> str:
    return hashlib.sha256(data).hexdigest()


def _json_default(value: Any) -> Any:
    if isinstance(value, np.integer):
        return int(value)
    if isinstance(value, np.floating):
        return float(value)
    if isinstance(value, np.ndarray):
        return value.tolist()
    if isinstance(value, Path):
        return str(value)
    raise TypeError(f"Object of type {type(value).__name__} is not JSON serializable")


def canonical_json(payload: Any, indent: int = 2) -> str:
    """Deterministic JSON text: sorted keys, fixed separators, trailing newline"""
    return json.dumps(payload, sort_keys=True, indent=indent, default=_json_default) + "\n"


def write_json(path: PathLike, payload: Any) -> None:
    Path(path).write_text(canonical_json(payload), encoding="utf-8")


def read_json(path: PathLike) -> Any:
    return json.loads(Path(path).read_text(encoding="utf-8"))


def stable_hash(payload: Any) -> str:
    """Short content hash of any JSON-serializable payload"""
    return sha256_bytes(canonical_json(payload, indent=0).encode("utf-8"))[:16]


def write_csv(path: PathLike, frame: pd.DataFrame, index: bool = False) -> None:
    """Write a table with fixed float formatting so reruns are byte-identical"""
    frame.to_csv(path, index=index, float_format=CSV_FLOAT_FORMAT, lineterminator="\n")


def ensure_dir(path: PathLike) -> Path:
    path = Path(path)
    path.mkdir(parents=True, exist_ok=True)
    return path


def default_threads() -> int:
    """Physical core count, falling back to logical cores, at least 1"""
    return max(1, psutil.cpu_count(logical=False) or psutil.cpu_count() or 1)
