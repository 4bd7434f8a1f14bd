"""Checkpoint archives.

A checkpoint is a zip archive of ``.npy`` members, one per array path
(``param/...``, ``adam/...``, ``status/...``), plus UTF-8 text members for
configuration and RNG state. Arrays are stored as little-endian float64 or
int64 so a load/save round trip is bitwise exact, and zip entries carry a
fixed timestamp so identical contents give identical archive bytes.
"""

from __future__ import annotations

import io
import zipfile
from pathlib import Path
from typing import Mapping

import numpy as np

_EPOCH = (1980, 1, 1, 0, 0, 0)


def _le(arr: np.ndarray) -> np.ndarray:
    arr = np.asarray(arr)
    if arr.dtype.kind == "f":
        return np.array(arr, dtype="<f8", order="C")
    if arr.dtype.kind in "iub":
        return np.array(arr, dtype="<i8", order="C")
    raise TypeError(f"checkpoint: unsupported dtype {arr.dtype}")


def save_archive(path, arrays: Mapping[str, np.ndarray], texts: Mapping[str, str] | None = None) -> None:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with zipfile.ZipFile(path, "w", compression=zipfile.ZIP_STORED) as zf:
        for name in sorted(arrays):
            buf = io.BytesIO()
            np.lib.format.write_array(buf, _le(arrays[name]), allow_pickle=False)
            zf.writestr(zipfile.ZipInfo(f"arrays/{name}.npy", _EPOCH), buf.getvalue())
        for name in sorted(texts or {}):
            zf.writestr(zipfile.ZipInfo(f"text/{name}", _EPOCH), texts[name].encode("utf-8"))


def load_archive(path) -> tuple[dict[str, np.ndarray], dict[str, str]]:
    arrays: dict[str, np.ndarray] = {}
    texts: dict[str, str] = {}
    with zipfile.ZipFile(path, "r") as zf:
        for info in zf.infolist():
            raw = zf.read(info)
            if info.filename.startswith("arrays/"):
                name = info.filename[len("arrays/"):-len(".npy")]
                arrays[name] = np.lib.format.read_array(io.BytesIO(raw), allow_pickle=False)
            elif info.filename.startswith("text/"):
                texts[info.filename[len("text/"):]] = raw.decode("utf-8")
    return arrays, texts
