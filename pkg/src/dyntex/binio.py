"""Little-endian primitives shared by the KSE1/ELM1/LDS1 model files."""

from __future__ import annotations

import os
import struct
from pathlib import Path

import numpy as np

from dyntex.errors import (
    BadMagicError,
    DataError,
    ModelFormatError,
    TruncatedFileError,
    VersionMismatchError,
)

FORMAT_VERSION = 1


class Writer:
    def __init__(self, magic: bytes):
        self.parts = [magic, struct.pack("<I", FORMAT_VERSION)]

    def u32(self, *values):
        self.parts.append(struct.pack(f"<{len(values)}I", *values))

    def u64(self, value):
        self.parts.append(struct.pack("<Q", value))

    def f64(self, value):
        self.parts.append(struct.pack("<d", value))

    def text(self, s: str):
        raw = s.encode("utf-8")
        self.u32(len(raw))
        self.parts.append(raw)

    def array(self, arr):
        self.parts.append(np.ascontiguousarray(arr, dtype="<f8").tobytes())

    def write(self, path) -> int:
        blob = b"".join(self.parts)
        path = Path(path)
        tmp = path.with_name(path.name + ".tmp")
        try:
            tmp.write_bytes(blob)
            os.replace(tmp, path)
        except OSError as exc:
            raise DataError(f"cannot write model file {path}: {exc}") from exc
        return len(blob)


class Reader:
    def __init__(self, path, magic: bytes):
        try:
            self.buf = Path(path).read_bytes()
        except OSError as exc:
            raise DataError(f"cannot read model file {path}: {exc}") from exc
        self.pos = 0
        if len(self.buf) < len(magic):
            raise TruncatedFileError(f"truncated model file: {len(self.buf)} bytes")
        found = self.buf[: len(magic)]
        if found != magic:
            raise BadMagicError(f"bad magic {found!r}, expected {magic!r}")
        self.pos = len(magic)
        version = self.u32()
        if version != FORMAT_VERSION:
            raise VersionMismatchError(
                f"unsupported format version {version}, this reader handles {FORMAT_VERSION}"
            )

    def take(self, n: int) -> bytes:
        end = self.pos + n
        if end > len(self.buf):
            raise TruncatedFileError(
                f"truncated model file: needed {end} bytes, file has {len(self.buf)}"
            )
        chunk = self.buf[self.pos:end]
        self.pos = end
        return chunk

    def u32(self, count: int = 1):
        values = struct.unpack(f"<{count}I", self.take(4 * count))
        return values[0] if count == 1 else values

    def u64(self) -> int:
        return struct.unpack("<Q", self.take(8))[0]

    def f64(self) -> float:
        return struct.unpack("<d", self.take(8))[0]

    def text(self) -> str:
        raw = self.take(self.u32())
        try:
            return raw.decode("utf-8")
        except UnicodeDecodeError as exc:
            raise ModelFormatError(f"kernel spec is not valid UTF-8: {exc}") from exc

    def array(self, *shape) -> np.ndarray:
        count = int(np.prod(shape))
        raw = self.take(8 * count)
        return np.frombuffer(raw, dtype="<f8").astype(np.float64).reshape(shape)

    def finish(self):
        if self.pos != len(self.buf):
            raise ModelFormatError(f"{len(self.buf) - self.pos} trailing bytes after model data")


def sniff_magic(path) -> bytes:
    try:
        with open(path, "rb") as fh:
            return fh.read(4)
    except OSError as exc:
        raise DataError(f"cannot read model file {path}: {exc}") from exc
