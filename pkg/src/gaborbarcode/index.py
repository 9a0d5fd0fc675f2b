"""Hamming-space barcode index with exhaustive search and a binary file format.

File layout (little-endian)::

    b"GBCX"  u16 version  u32 code_length  u32 entry_count
    u16-prefixed UTF-8 config_tag
    entry_count x [u16-prefixed image_id, u16-prefixed IRMA code ("" if none),
                   ceil(code_length / 64) x u64 packed words]
    u32 CRC32 of every preceding byte
"""
from __future__ import annotations

import os
import struct
import zlib
from dataclasses import dataclass
from typing import Iterable, Sequence

import numpy as np

from .barcodes import Barcode, pack_bits
from .irma import IrmaCode, parse_irma

MAGIC = b"GBCX"
FORMAT_VERSION = 1


class BarcodeIndexError(ValueError):
    """Base class for index construction and query errors."""


class DuplicateIdError(BarcodeIndexError):
    pass


class MixedDescriptorError(BarcodeIndexError):
    """Entries (or a probe) disagree on code length or config tag."""


class EmptyIndexError(BarcodeIndexError):
    pass


class IndexFormatError(BarcodeIndexError):
    """Wrong magic bytes or unsupported format version."""


class CorruptIndexError(BarcodeIndexError):
    """Truncated file or checksum mismatch."""


@dataclass(frozen=True)
class IndexEntry:
    image_id: str
    barcode: Barcode
    label: IrmaCode | None = None


def similarity(a: Barcode, b: Barcode) -> float:
    """``1 - hamming(a, b) / length``."""
    if a.length != b.length:
        raise MixedDescriptorError(f"length mismatch: {a.length} vs {b.length}")
    diff = np.bitwise_count(np.bitwise_xor(a.words, b.words)).sum()
    return 1.0 - int(diff) / a.length


class BarcodeIndex:
    """Immutable, ordered collection of equally configured barcodes."""

    def __init__(self, entries: Sequence[IndexEntry]):
        entries = tuple(entries)
        if not entries:
            raise EmptyIndexError("an index needs at least one entry")
        first = entries[0].barcode
        seen = set()
        for e in entries:
            if e.image_id in seen:
                raise DuplicateIdError(f"duplicate image_id {e.image_id!r}")
            seen.add(e.image_id)
            if e.barcode.length != first.length:
                raise MixedDescriptorError(
                    f"{e.image_id!r} has length {e.barcode.length}, expected {first.length}")
            if e.barcode.config_tag != first.config_tag:
                raise MixedDescriptorError(
                    f"{e.image_id!r} has tag {e.barcode.config_tag}, expected {first.config_tag}")
        self.entries = entries
        self.code_length = first.length
        self.config_tag = first.config_tag
        self.kind = first.kind
        self._words = np.stack([e.barcode.words for e in entries])
        self._words.flags.writeable = False
        self._ids = {e.image_id: i for i, e in enumerate(entries)}

    def __len__(self):
        return len(self.entries)

    def __iter__(self):
        return iter(self.entries)

    def __getitem__(self, image_id: str) -> IndexEntry:
        return self.entries[self._ids[image_id]]

    def __eq__(self, other):
        if not isinstance(other, BarcodeIndex):
            return NotImplemented
        return (self.config_tag == other.config_tag and self.code_length == other.code_length
                and self.entries == other.entries)

    def __repr__(self):
        return f"BarcodeIndex({self.config_tag}, {len(self)} entries x {self.code_length} bits)"

    def distances(self, probe: Barcode) -> np.ndarray:
        """Hamming distance from ``probe`` to every entry, in insertion order."""
        if probe.length != self.code_length:
            raise MixedDescriptorError(
                f"probe length {probe.length} does not match index length {self.code_length}")
        xor = np.bitwise_xor(self._words, probe.words)
        return np.bitwise_count(xor).sum(axis=1, dtype=np.int64)

    def query(self, probe: Barcode, k: int = 1) -> list[tuple[str, float]]:
        """Top-``k`` entries by similarity; ties go to the earlier-inserted entry."""
        if k < 1:
            raise ValueError(f"k must be >= 1, got {k}")
        if probe.config_tag != self.config_tag:
            raise MixedDescriptorError(
                f"probe descriptor {probe.config_tag} does not match index {self.config_tag}")
        dist = self.distances(probe)
        order = np.argsort(dist, kind="stable")[:k]
        return [(self.entries[i].image_id, 1.0 - int(dist[i]) / self.code_length) for i in order]

    def with_entries(self, entries: Iterable[IndexEntry]) -> "BarcodeIndex":
        return BarcodeIndex(self.entries + tuple(entries))


def build_index(entries: Sequence[IndexEntry]) -> BarcodeIndex:
    return BarcodeIndex(entries)


def query(index: BarcodeIndex, probe: Barcode, k: int = 1) -> list[tuple[str, float]]:
    return index.query(probe, k)


# ---------------------------------------------------------------- persistence

def _put_str(buf: bytearray, text: str) -> None:
    raw = text.encode("utf-8")
    if len(raw) > 0xFFFF:
        raise ValueError(f"string too long for the index format: {text[:40]!r}...")
    buf += struct.pack("<H", len(raw)) + raw


def dumps(index: BarcodeIndex) -> bytes:
    buf = bytearray(MAGIC)
    buf += struct.pack("<HII", FORMAT_VERSION, index.code_length, len(index))
    _put_str(buf, index.config_tag)
    for entry in index.entries:
        _put_str(buf, entry.image_id)
        _put_str(buf, str(entry.label) if entry.label is not None else "")
        buf += pack_bits(entry.barcode.bits).tobytes()
    buf += struct.pack("<I", zlib.crc32(buf))
    return bytes(buf)


class _Reader:
    def __init__(self, data: bytes):
        self.data = data
        self.pos = 0

    def take(self, n: int) -> bytes:
        if self.pos + n > len(self.data):
            raise CorruptIndexError("index file is truncated")
        chunk = self.data[self.pos:self.pos + n]
        self.pos += n
        return chunk

    def unpack(self, fmt: str):
        return struct.unpack(fmt, self.take(struct.calcsize(fmt)))

    def string(self) -> str:
        (n,) = self.unpack("<H")
        try:
            return self.take(n).decode("utf-8")
        except UnicodeDecodeError as exc:
            raise CorruptIndexError("invalid UTF-8 in index file") from exc


def loads(data: bytes) -> BarcodeIndex:
    if data[:4] != MAGIC:
        raise IndexFormatError("not a GBCX index file (bad magic)")
    if len(data) < 18:
        raise CorruptIndexError("index file is truncated")
    body, (crc,) = data[:-4], struct.unpack("<I", data[-4:])
    r = _Reader(body)
    r.take(4)
    version, code_length, count = r.unpack("<HII")
    if version != FORMAT_VERSION:
        raise IndexFormatError(f"unsupported index version {version}")
    if zlib.crc32(body) != crc:
        raise CorruptIndexError("CRC32 mismatch: index file is corrupt or truncated")
    tag = r.string()
    kind = tag[:3]
    n_words = -(-code_length // 64)
    entries = []
    for _ in range(count):
        image_id = r.string()
        label_text = r.string()
        words = np.frombuffer(r.take(n_words * 8), dtype="<u8")
        barcode = Barcode.from_words(words, code_length, kind, tag)
        entries.append(IndexEntry(image_id, barcode, parse_irma(label_text) if label_text else None))
    if r.pos != len(body):
        raise CorruptIndexError("trailing bytes after the last entry")
    return BarcodeIndex(entries)


def save_index(index: BarcodeIndex, path: str | os.PathLike) -> None:
    with open(path, "wb") as fh:
        fh.write(dumps(index))


def load_index(path: str | os.PathLike) -> BarcodeIndex:
    with open(path, "rb") as fh:
        return loads(fh.read())
