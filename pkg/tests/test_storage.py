import numpy as np
import pytest

from metairl.storage import (
    ChecksumMismatchError,
    FormatError,
    TruncatedFileError,
    VersionMismatchError,
    file_hash,
    read_container,
    write_container,
)


def sample_arrays():
    rng = np.random.default_rng(0)
    return [rng.normal(size=(7, 3)), np.arange(5, dtype=np.int64), rng.normal(size=0)]


def test_roundtrip_is_bit_exact(tmp_path):
    path = tmp_path / "a.bin"
    meta = {"kind": "demo", "nested": {"x": [1, 2, 3]}, "s": "text"}
    write_container(path, meta, sample_arrays())
    got_meta, got_arrays = read_container(path)
    assert got_meta["kind"] == "demo"
    assert got_meta["nested"] == {"x": [1, 2, 3]}
    for a, b in zip(sample_arrays(), got_arrays):
        assert a.dtype == b.dtype
        assert np.array_equal(a, b)


def test_identical_content_gives_identical_files(tmp_path):
    p1, p2 = tmp_path / "a.bin", tmp_path / "b.bin"
    write_container(p1, {"k": 1}, sample_arrays())
    write_container(p2, {"k": 1}, sample_arrays())
    assert p1.read_bytes() == p2.read_bytes()
    assert file_hash(p1) == file_hash(p2)


def test_truncated_file_raises_truncation_error(tmp_path):
    path = tmp_path / "a.bin"
    write_container(path, {"k": 1}, sample_arrays())
    data = path.read_bytes()
    path.write_bytes(data[:len(data) // 2])
    with pytest.raises(TruncatedFileError):
        read_container(path)


def test_corrupted_checksum_raises_checksum_error(tmp_path):
    path = tmp_path / "a.bin"
    write_container(path, {"k": 1}, sample_arrays())
    data = bytearray(path.read_bytes())
    data[-1] ^= 0xFF
    path.write_bytes(bytes(data))
    with pytest.raises(ChecksumMismatchError):
        read_container(path)


def test_foreign_file_raises_format_error(tmp_path):
    path = tmp_path / "junk.bin"
    path.write_bytes(b"definitely not a container, but long enough to read")
    with pytest.raises(FormatError):
        read_container(path)


def test_version_mismatch(tmp_path):
    import json
    import struct

    from metairl import storage

    path = tmp_path / "a.bin"
    write_container(path, {"k": 1}, [])
    data = bytearray(path.read_bytes())
    # rewrite the header with a bumped container version, keep checksum valid
    header = json.dumps({"format_version": 999, "k": 1},
                        sort_keys=True, separators=(",", ":")).encode()
    rebuilt = storage.MAGIC + struct.pack(">Q", len(header)) + header + struct.pack(">Q", 0)
    import hashlib
    path.write_bytes(rebuilt + hashlib.sha256(rebuilt).digest())
    with pytest.raises(VersionMismatchError):
        read_container(path)


def test_failed_write_leaves_no_partial_file(tmp_path):
    path = tmp_path / "sub" / "a.bin"

    class Boom:
        dtype = None

    with pytest.raises(Exception):
        write_container(path, {"k": 1}, [Boom()])
    assert not path.exists()
    leftovers = list((tmp_path / "sub").glob("*")) if (tmp_path / "sub").exists() else []
    assert leftovers == []
