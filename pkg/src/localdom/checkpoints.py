"""Versioned binary archives for model parameters and config snapshots.

The format is deliberately flat and byte-deterministic: a JSON header with
sorted keys followed by raw little-endian array blobs in header order. Equal
inputs always serialize to equal bytes, which makes checkpoint hashes usable
as reproducibility evidence.
"""

from __future__ import annotations

import hashlib
import json
import struct
from pathlib import Path
from typing import Dict, Tuple

import numpy as np

from .errors import BadSchema, MissingFile
from .imgio import atomic_write_bytes

MAGIC = b"LDARC001"
FORMAT_VERSION = 1


def save_archive(path, meta: dict, arrays: Dict[str, np.ndarray]) -> None:
    """Write meta (JSON-serializable) and named arrays atomically."""
    names = sorted(arrays)
    tensors = []
    blobs = []
    for name in names:
        arr = np.asarray(arrays[name])
        if arr.ndim:  # ascontiguousarray would promote 0-d to shape (1,)
            arr = np.ascontiguousarray(arr)
        if arr.dtype.byteorder == ">":
            arr = arr.astype(arr.dtype.newbyteorder("<"))
        tensors.append(
            {"name": name, "dtype": arr.dtype.str, "shape": list(arr.shape)}
        )
        blobs.append(arr.tobytes())
    header = json.dumps(
        {"format": FORMAT_VERSION, "meta": meta, "tensors": tensors},
        sort_keys=True,
        separators=(",", ":"),
    ).encode("utf-8")
    payload = MAGIC + struct.pack("<Q", len(header)) + header + b"".join(blobs)
    atomic_write_bytes(path, payload)


def load_archive(path) -> Tuple[dict, Dict[str, np.ndarray]]:
    path = Path(path)
    if not path.exists():
        raise MissingFile(f"checkpoint {path} does not exist")
    raw = path.read_bytes()
    if raw[: len(MAGIC)] != MAGIC:
        raise BadSchema(f"{path} is not a parameter archive")
    (hlen,) = struct.unpack("<Q", raw[len(MAGIC) : len(MAGIC) + 8])
    start = len(MAGIC) + 8
    header = json.loads(raw[start : start + hlen].decode("utf-8"))
    if header.get("format") != FORMAT_VERSION:
        raise BadSchema(f"unsupported archive format {header.get('format')}")
    arrays = {}
    offset = start + hlen
    for spec in header["tensors"]:
        dtype = np.dtype(spec["dtype"])
        shape = tuple(spec["shape"])
        nbytes = dtype.itemsize * int(np.prod(shape, dtype=np.int64)) if shape else dtype.itemsize
        count = int(np.prod(shape, dtype=np.int64)) if shape else 1
        arr = np.frombuffer(raw, dtype=dtype, count=count, offset=offset).reshape(shape)
        arrays[spec["name"]] = arr.copy()  # decouple from the mmap-like buffer
        offset += nbytes
    return header["meta"], arrays


def state_dict_arrays(module) -> Dict[str, np.ndarray]:
    """Flatten a torch module's state dict to named numpy arrays."""
    return {k: v.detach().cpu().numpy() for k, v in module.state_dict().items()}


def load_state_dict_arrays(module, arrays: Dict[str, np.ndarray], prefix: str = ""):
    import torch

    sd = {}
    for key, arr in arrays.items():
        if prefix:
            if not key.startswith(prefix):
                continue
            key = key[len(prefix):]
        sd[key] = torch.from_numpy(np.ascontiguousarray(arr))
    module.load_state_dict(sd)
    return module


def file_sha256(path) -> str:
    h = hashlib.sha256()
    h.update(Path(path).read_bytes())
    return h.hexdigest()
