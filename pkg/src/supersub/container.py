"""Binary container plumbing: CRC-32C, little-endian primitives, DEFLATE.

All on-disk formats in this package share the same skeleton: 4-byte magic,
u16 version, format-specific body, trailing CRC-32C over every preceding
byte. Readers fail with FormatError carrying the byte offset of the first
inconsistency; they never return partially parsed objects.
"""

from __future__ import annotations

import struct
import zlib

from .errors import FormatError

_CRC32C_POLY = 0x82F63B78


def _build_crc32c_table() -> list[int]:
    table = []
    for i in range(256):
        crc = i
        for _ in range(8):
            crc = (crc >> 1) ^ _CRC32C_POLY if crc & 1 else crc >> 1
        table.append(crc)
    return table


_CRC32C_TABLE = _build_crc32c_table()


def crc32c(data: bytes, crc: int = 0) -> int:
    """CRC-32C (Castagnoli). crc32c(b"123456789") == 0xE3069283."""
    crc ^= 0xFFFFFFFF
    for byte in data:
        crc = (crc >> 8) ^ _CRC32C_TABLE[(crc ^ byte) & 0xFF]
    return crc ^ 0xFFFFFFFF


def deflate(data: bytes, level: int = 9) -> bytes:
    """Raw DEFLATE stream (RFC 1951, no zlib wrapper)."""
    comp = zlib.compressobj(level=level, wbits=-15)
    return comp.compress(data) + comp.flush()


def inflate(data: bytes) -> bytes:
    try:
        decomp = zlib.decompressobj(wbits=-15)
        out = decomp.decompress(data)
        out += decomp.flush()
        if decomp.unconsumed_tail:
            raise FormatError("trailing garbage after DEFLATE stream")
        return out
    except zlib.error as exc:
        raise FormatError(f"DEFLATE decompression failed: {exc}") from exc


class Writer:
    """Accumulates little-endian fields; finish() appends the CRC-32C."""

    def __init__(self):
        self._parts: list[bytes] = []

    def raw(self, data: bytes) -> "Writer":
        self._parts.append(data)
        return self

    def u8(self, v: int) -> "Writer":
        return self.raw(struct.pack("<B", v))

    def u16(self, v: int) -> "Writer":
        return self.raw(struct.pack("<H", v))

    def u32(self, v: int) -> "Writer":
        return self.raw(struct.pack("<I", v))

    def u64(self, v: int) -> "Writer":
        return self.raw(struct.pack("<Q", v))

    def f32(self, v: float) -> "Writer":
        return self.raw(struct.pack("<f", v))

    def blob(self, data: bytes) -> "Writer":
        """u32 length prefix followed by the bytes."""
        self.u32(len(data))
        return self.raw(data)

    def text(self, s: str) -> "Writer":
        return self.blob(s.encode("utf-8"))

    def body(self) -> bytes:
        return b"".join(self._parts)

    def finish(self) -> bytes:
        data = self.body()
        return data + struct.pack("<I", crc32c(data))


class Reader:
    """Cursor over container bytes; every read checks remaining length."""

    def __init__(self, data: bytes):
        self.data = data
        self.pos = 0

    def _take(self, n: int) -> bytes:
        if self.pos + n > len(self.data):
            raise FormatError(
                f"truncated: wanted {n} bytes, {len(self.data) - self.pos} left",
                offset=self.pos,
            )
        chunk = self.data[self.pos : self.pos + n]
        self.pos += n
        return chunk

    def raw(self, n: int) -> bytes:
        return self._take(n)

    def u8(self) -> int:
        return struct.unpack("<B", self._take(1))[0]

    def u16(self) -> int:
        return struct.unpack("<H", self._take(2))[0]

    def u32(self) -> int:
        return struct.unpack("<I", self._take(4))[0]

    def u64(self) -> int:
        return struct.unpack("<Q", self._take(8))[0]

    def f32(self) -> float:
        return struct.unpack("<f", self._take(4))[0]

    def blob(self) -> bytes:
        n = self.u32()
        return self._take(n)

    def text(self) -> str:
        return self.blob().decode("utf-8")

    def expect_magic(self, magic: bytes) -> None:
        offset = self.pos
        got = self._take(len(magic))
        if got != magic:
            raise FormatError(f"bad magic {got!r}, expected {magic!r}", offset=offset)

    def expect_version(self, version: int) -> None:
        offset = self.pos
        got = self.u16()
        if got != version:
            raise FormatError(f"unsupported version {got}, expected {version}", offset=offset)

    def expect_end(self) -> None:
        if self.pos != len(self.data):
            raise FormatError(
                f"{len(self.data) - self.pos} unexpected trailing bytes", offset=self.pos
            )


def check_trailing_crc(data: bytes) -> bytes:
    """Verify the trailing CRC-32C; returns the body without the CRC field."""
    if len(data) < 4:
        raise FormatError("container shorter than its CRC field", offset=0)
    body, stored = data[:-4], struct.unpack("<I", data[-4:])[0]
    actual = crc32c(body)
    if stored != actual:
        raise FormatError(
            f"checksum mismatch: stored {stored:#010x}, computed {actual:#010x}",
            offset=len(data) - 4,
        )
    return body
