"""Versioned named-array container for model persistence.

Layout: 4-byte magic, little-endian uint32 format version, uint64 manifest
length, a JSON manifest (array names, shapes, dtypes and byte offsets plus
embedded config/meta sections), then the raw little-endian array bytes.
Arrays are stored sorted by name so identical states serialize to identical
bytes.
"""

from __future__ import annotations

import json
import struct
from pathlib import Path
from typing import Mapping

import numpy as np

MAGIC = b"TWIC"
FORMAT_VERSION = 1

_SUPPORTED_DTYPES = {"<f8", "<f4", "<i8"}


def save_arrays(
    path: str | Path,
    arrays: Mapping[str, np.ndarray],
    config: dict | None = None,
    meta: dict | None = None,
) -> None:
    entries = []
    blobs = []
    offset = 0
    for name in sorted(arrays):
        arr = np.ascontiguousarray(arrays[name])
        dtype = arr.dtype.newbyteorder("<").str
        if dtype not in _SUPPORTED_DTYPES:
            raise ValueError(f"array {name!r} has unsupported dtype {arr.dtype}")
        raw = arr.astype(dtype, copy=False).tobytes()
        entries.append(
            {
                "name": name,
                "dtype": dtype,
                "shape": list(arr.shape),
                "offset": offset,
                "nbytes": len(raw),
            }
        )
        blobs.append(raw)
        offset += len(raw)
    manifest = {
        "format_version": FORMAT_VERSION,
        "config": config or {},
        "meta": meta or {},
        "arrays": entries,
    }
    manifest_bytes = json.dumps(manifest, sort_keys=True, separators=(",", ":")).encode("utf-8")
    with open(path, "wb") as fh:
        fh.write(MAGIC)
        fh.write(struct.pack("<I", FORMAT_VERSION))
        fh.write(struct.pack("<Q", len(manifest_bytes)))
        fh.write(manifest_bytes)
        for blob in blobs:
            fh.write(blob)


def load_arrays(path: str | Path) -> tuple[dict[str, np.ndarray], dict, dict]:
    """Returns (arrays, config, meta); inverse of :func:`save_arrays`."""
    raw = Path(path).read_bytes()
    if raw[:4] != MAGIC:
        raise ValueError(f"{path}: not a checkpoint file (bad magic)")
    (version,) = struct.unpack("<I", raw[4:8])
    if version != FORMAT_VERSION:
        raise ValueError(f"{path}: unsupported checkpoint version {version}")
    (manifest_len,) = struct.unpack("<Q", raw[8:16])
    manifest = json.loads(raw[16 : 16 + manifest_len].decode("utf-8"))
    data_start = 16 + manifest_len
    arrays: dict[str, np.ndarray] = {}
    for entry in manifest["arrays"]:
        begin = data_start + entry["offset"]
        end = begin + entry["nbytes"]
        flat = np.frombuffer(raw[begin:end], dtype=np.dtype(entry["dtype"]))
        arrays[entry["name"]] = flat.reshape(entry["shape"]).copy()
    return arrays, manifest.get("config", {}), manifest.get("meta", {})
