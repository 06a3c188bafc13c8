"""Binary array container: named tensors behind a tiny self-describing header.

Layout: 4-byte magic "RMT1", uint32 version, uint32 header length, UTF-8
JSON header, then the raw little-endian row-major payloads. The header
carries the entry table (name, dtype code, shape, byte offset into the
payload region) plus an optional free-form JSON metadata dict.
"""

from __future__ import annotations

import json
import struct
from pathlib import Path

import numpy as np

from ..errors import ContainerError

MAGIC = b"RMT1"
VERSION = 1

_DTYPES = {"f2", "f4", "f8", "i1", "i2", "i4", "i8", "u1", "u2", "u4", "u8"}


def _dtype_code(arr: np.ndarray) -> str:
    code = arr.dtype.str.lstrip("<>|=")
    if code not in _DTYPES:
        raise ContainerError(f"unsupported dtype {arr.dtype} for container entry")
    return code


def write_container(path, arrays: dict[str, np.ndarray], meta: dict | None = None):
    """Write named arrays (insertion order preserved) plus optional metadata."""
    names = list(arrays)
    if len(set(names)) != len(names):
        raise ContainerError("entry names must be unique")
    entries = []
    offset = 0
    blobs = []
    for name in names:
        arr = np.ascontiguousarray(arrays[name])
        code = _dtype_code(arr)
        blob = arr.astype("<" + code, copy=False).tobytes()
        entries.append({
            "name": name,
            "dtype": code,
            "shape": list(arr.shape),
            "offset": offset,
        })
        blobs.append(blob)
        offset += len(blob)
    header = json.dumps({"entries": entries, "meta": meta or {}}).encode("utf-8")
    with open(path, "wb") as f:
        f.write(MAGIC)
        f.write(struct.pack("<II", VERSION, len(header)))
        f.write(header)
        for blob in blobs:
            f.write(blob)


class ArrayContainer:
    """Reader handle over a validated container file.

    Entries are materialized lazily from a memory map, so pulling one tensor
    out of a large record does not read the whole file.
    """

    def __init__(self, path):
        self.path = Path(path)
        with open(self.path, "rb") as f:
            head = f.read(12)
            if len(head) < 12:
                raise ContainerError(f"{path}: truncated header")
            if head[:4] != MAGIC:
                raise ContainerError(f"{path}: bad magic {head[:4]!r}")
            version, header_len = struct.unpack("<II", head[4:12])
            if version != VERSION:
                raise ContainerError(f"{path}: unknown version {version}")
            header_bytes = f.read(header_len)
            if len(header_bytes) != header_len:
                raise ContainerError(f"{path}: truncated header block")
            try:
                header = json.loads(header_bytes.decode("utf-8"))
            except (UnicodeDecodeError, json.JSONDecodeError) as exc:
                raise ContainerError(f"{path}: unreadable header ({exc})") from exc

        self.meta = header.get("meta", {})
        self._payload_base = 12 + header_len
        self._entries: dict[str, dict] = {}
        spans = []
        for entry in header.get("entries", []):
            name, code, shape = entry["name"], entry["dtype"], tuple(entry["shape"])
            if code not in _DTYPES:
                raise ContainerError(f"{path}: unknown dtype code {code!r}")
            if name in self._entries:
                raise ContainerError(f"{path}: duplicate entry {name!r}")
            nbytes = int(np.prod(shape, dtype=np.int64)) * np.dtype("<" + code).itemsize
            self._entries[name] = {"dtype": "<" + code, "shape": shape,
                                   "offset": int(entry["offset"]), "nbytes": nbytes}
            spans.append((int(entry["offset"]), nbytes, name))

        spans.sort()
        end = 0
        for off, nbytes, name in spans:
            if off < end:
                raise ContainerError(f"{path}: overlapping entry {name!r}")
            end = off + nbytes
        file_size = self.path.stat().st_size
        if self._payload_base + end > file_size:
            raise ContainerError(
                f"{path}: truncated payload (need {self._payload_base + end}, have {file_size})")
        self._mmap = np.memmap(self.path, dtype=np.uint8, mode="r")

    def names(self) -> list[str]:
        return list(self._entries)

    def shape(self, name) -> tuple:
        return self._entries[name]["shape"]

    def __contains__(self, name) -> bool:
        return name in self._entries

    def __getitem__(self, name: str) -> np.ndarray:
        if name not in self._entries:
            raise KeyError(name)
        e = self._entries[name]
        start = self._payload_base + e["offset"]
        raw = self._mmap[start:start + e["nbytes"]]
        return np.frombuffer(raw, dtype=e["dtype"]).reshape(e["shape"]).copy()

    def read_all(self) -> dict[str, np.ndarray]:
        return {name: self[name] for name in self._entries}

    def close(self):
        self._mmap = None


def read_container(path) -> tuple[dict[str, np.ndarray], dict]:
    """Fully materialize a container; returns (arrays, meta)."""
    c = ArrayContainer(path)
    arrays = c.read_all()
    meta = c.meta
    c.close()
    return arrays, meta
