"""Binary artifact container: JSON header + length-prefixed numpy arrays +
trailing SHA-256 checksum.

Used for demonstration datasets and training checkpoints. Writes are atomic
(temp file + rename) and loads fail loudly with distinct errors for bad
magic, truncation, version mismatch, and checksum corruption. Round trips
are bit-exact: identical content always produces identical file bytes.
"""

from __future__ import annotations

import hashlib
import io
import json
import os
import struct
import tempfile
from pathlib import Path

import numpy as np

MAGIC = b"MIRLBIN\x01"
FORMAT_VERSION = 1


class StorageError(Exception):
    """Base class for artifact container failures."""


class FormatError(StorageError):
    """Not a container file (bad magic) or structurally invalid."""


class TruncatedFileError(StorageError):
    """File ends before the declared content does."""


class ChecksumMismatchError(StorageError):
    """Trailing digest does not match the content."""


class VersionMismatchError(StorageError):
    """Container or payload format version is not supported."""


def _encode_meta(meta: dict) -> bytes:
    return json.dumps(meta, sort_keys=True, separators=(",", ":")).encode("utf-8")


def write_container(path: str | Path, meta: dict, arrays: list[np.ndarray]) -> str:
    """Write atomically; returns the hex SHA-256 of the full file bytes."""
    path = Path(path)
    buf = io.BytesIO()
    buf.write(MAGIC)
    header = _encode_meta({"format_version": FORMAT_VERSION, **meta})
    buf.write(struct.pack(">Q", len(header)))
    buf.write(header)
    buf.write(struct.pack(">Q", len(arrays)))
    for a in arrays:
        blob = io.BytesIO()
        np.save(blob, np.ascontiguousarray(a), allow_pickle=False)
        raw = blob.getvalue()
        buf.write(struct.pack(">Q", len(raw)))
        buf.write(raw)
    content = buf.getvalue()
    digest = hashlib.sha256(content).digest()
    path.parent.mkdir(parents=True, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=path.name + ".", suffix=".tmp")
    try:
        with os.fdopen(fd, "wb") as f:
            f.write(content)
            f.write(digest)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise
    return hashlib.sha256(content + digest).hexdigest()


class _Reader:
    def __init__(self, data: bytes):
        self.data = data
        self.off = 0

    def take(self, n: int) -> bytes:
        if self.off + n > len(self.data):
            raise TruncatedFileError(
                f"need {n} bytes at offset {self.off}, file has {len(self.data)}")
        out = self.data[self.off:self.off + n]
        self.off += n
        return out

    def take_u64(self) -> int:
        return struct.unpack(">Q", self.take(8))[0]


def read_container(path: str | Path) -> tuple[dict, list[np.ndarray]]:
    data = Path(path).read_bytes()
    if len(data) < len(MAGIC):
        raise TruncatedFileError("file shorter than the magic prefix")
    if data[:len(MAGIC)] != MAGIC:
        raise FormatError(f"{path} is not an artifact container")
    if len(data) < len(MAGIC) + 32:
        raise TruncatedFileError("file too short to hold a checksum")
    content, digest = data[:-32], data[-32:]
    r = _Reader(content)
    r.take(len(MAGIC))
    header_len = r.take_u64()
    try:
        meta = json.loads(r.take(header_len).decode("utf-8"))
    except (UnicodeDecodeError, json.JSONDecodeError) as exc:
        raise FormatError(f"unreadable header: {exc}") from exc
    version = meta.get("format_version")
    if version != FORMAT_VERSION:
        raise VersionMismatchError(
            f"container format version {version!r}, expected {FORMAT_VERSION}")
    arrays = []
    for _ in range(r.take_u64()):
        raw = r.take(r.take_u64())
        try:
            arrays.append(np.load(io.BytesIO(raw), allow_pickle=False))
        except ValueError as exc:
            raise FormatError(f"bad array block: {exc}") from exc
    if r.off != len(content):
        raise FormatError(f"{len(content) - r.off} trailing bytes before the checksum")
    if hashlib.sha256(content).digest() != digest:
        raise ChecksumMismatchError("content does not match its checksum")
    return meta, arrays


def file_hash(path: str | Path) -> str:
    return hashlib.sha256(Path(path).read_bytes()).hexdigest()
