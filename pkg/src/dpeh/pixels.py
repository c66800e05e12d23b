"""Image model, PGM I/O, checkerboard layers, saturation handling."""
from __future__ import annotations

import re
from dataclasses import dataclass, field
from enum import IntEnum
from typing import Sequence

import numpy as np

from .bitstream import BitReader, BitWriter, pack_bits, rle_decode, rle_encode, unpack_bits
from .errors import CorruptionError, DimensionError, PGMDecodeError

MIN_RESERVED_ROWS = 2


class GrayImage:
    """Immutable 8-bit grayscale raster stored as an (height, width) uint8 array."""

    __slots__ = ("_pixels",)

    def __init__(self, pixels: np.ndarray):
        arr = np.asarray(pixels)
        if arr.ndim != 2:
            raise DimensionError(f"expected a 2-D array, got shape {arr.shape}")
        if arr.dtype != np.uint8:
            if arr.size and (arr.min() < 0 or arr.max() > 255):
                raise ValueError("intensities must lie in [0, 255]")
            arr = arr.astype(np.uint8)
        arr = arr.copy()
        arr.setflags(write=False)
        self._pixels = arr

    @classmethod
    def from_sequence(cls, width: int, height: int, data: Sequence[int]) -> "GrayImage":
        if len(data) != width * height:
            raise DimensionError(f"{len(data)} values for a {width}x{height} image")
        return cls(np.asarray(data, dtype=np.int64).reshape(height, width))

    @property
    def pixels(self) -> np.ndarray:
        return self._pixels

    @property
    def width(self) -> int:
        return self._pixels.shape[1]

    @property
    def height(self) -> int:
        return self._pixels.shape[0]

    @property
    def data(self) -> list[int]:
        return self._pixels.ravel().tolist()

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, GrayImage):
            return NotImplemented
        return self._pixels.shape == other._pixels.shape and bool(
            np.array_equal(self._pixels, other._pixels)
        )

    def __hash__(self) -> int:
        return hash((self._pixels.shape, self._pixels.tobytes()))

    def __repr__(self) -> str:
        return f"GrayImage(width={self.width}, height={self.height})"


# --- PGM -------------------------------------------------------------------

_TOKEN = re.compile(rb"\s*(?:#[^\n]*\n\s*)*(\S+)")


def load_image(raw: bytes) -> GrayImage:
    """Decode a binary PGM (P5, maxval 255)."""
    if raw[:2] != b"P5":
        raise PGMDecodeError(f"unsupported magic {raw[:2]!r}, only P5 is accepted", 0)
    pos = 2
    fields = []
    starts = []
    for name in ("width", "height", "maxval"):
        m = _TOKEN.match(raw, pos)
        if m is None:
            raise PGMDecodeError(f"missing {name}", pos)
        tok = m.group(1)
        if not tok.isdigit():
            raise PGMDecodeError(f"bad {name} {tok!r}", m.start(1))
        fields.append(int(tok))
        starts.append(m.start(1))
        pos = m.end(1)
    width, height, maxval = fields
    if maxval != 255:
        raise PGMDecodeError(f"maxval {maxval} is not 255", starts[2])
    if width < 1 or height < 1:
        raise PGMDecodeError("empty image", starts[0])
    if pos >= len(raw) or raw[pos:pos + 1] not in (b" ", b"\t", b"\n", b"\r"):
        raise PGMDecodeError("header not terminated by whitespace", pos)
    pos += 1
    need = width * height
    payload = raw[pos:pos + need]
    if len(payload) < need:
        raise PGMDecodeError(f"truncated payload: {len(payload)} of {need} bytes", pos + len(payload))
    arr = np.frombuffer(payload, dtype=np.uint8).reshape(height, width)
    return GrayImage(arr)


def save_image(img: GrayImage) -> bytes:
    return b"P5\n%d %d\n255\n" % (img.width, img.height) + img.pixels.tobytes()


def read_pgm(path) -> GrayImage:
    with open(path, "rb") as fh:
        return load_image(fh.read())


def write_pgm(path, img: GrayImage) -> None:
    with open(path, "wb") as fh:
        fh.write(save_image(img))


# --- layers ----------------------------------------------------------------

class Layer(IntEnum):
    FIRST = 1
    SECOND = 2


@dataclass(frozen=True)
class LayerPartition:
    layer: Layer
    rows: np.ndarray
    cols: np.ndarray

    @property
    def cells(self) -> list[tuple[int, int]]:
        return list(zip(self.rows.tolist(), self.cols.tolist()))

    def __len__(self) -> int:
        return int(self.rows.size)


def reserved_rows(aux_bits: int, width: int) -> int:
    """Rows at the bottom whose LSBs hold the auxiliary information."""
    return max(MIN_RESERVED_ROWS, -(-aux_bits // width))


def cell_row_range(height: int, n_reserved: int = MIN_RESERVED_ROWS) -> range:
    # the prediction context reaches one row below the cell, which must not be reserved
    return range(2, height - n_reserved - 1)


def partition(
    img: GrayImage | tuple[int, int], n_reserved: int = MIN_RESERVED_ROWS
) -> tuple[LayerPartition, LayerPartition]:
    """Split embeddable cells into the two checkerboard layers in raster order.

    ``img`` may also be a ``(height, width)`` tuple.
    """
    height, width = (img.height, img.width) if isinstance(img, GrayImage) else img
    if width < 6 or height < 7:
        raise DimensionError(f"image {width}x{height} is too small (need at least 6x7)")
    rows = cell_row_range(height, n_reserved)
    if len(rows) < 1:
        raise DimensionError(f"no embeddable rows left with {n_reserved} reserved rows")
    rr, cc = np.meshgrid(np.arange(rows.start, rows.stop), np.arange(2, width - 1), indexing="ij")
    rr, cc = rr.ravel(), cc.ravel()
    even = (rr + cc) % 2 == 0
    return (
        LayerPartition(Layer.FIRST, rr[even].astype(np.int64), cc[even].astype(np.int64)),
        LayerPartition(Layer.SECOND, rr[~even].astype(np.int64), cc[~even].astype(np.int64)),
    )


def aux_positions(width: int, height: int, n: int) -> tuple[np.ndarray, np.ndarray]:
    """Pixels holding aux bits: bottom row first, left to right, then upwards."""
    idx = np.arange(n)
    rows = height - 1 - idx // width
    cols = idx % width
    if n and rows[-1] < 0:
        raise DimensionError(f"{n} aux bits do not fit in a {width}x{height} image")
    return rows, cols


# --- saturation ------------------------------------------------------------

@dataclass(frozen=True)
class LocationMap:
    """Raster indices of pixels moved off 0/255, plus their compressed form."""

    entries: tuple[int, ...]
    size: int
    compressed: bytes = field(repr=False)
    s_clm: int

    @classmethod
    def from_entries(cls, entries: Sequence[int], size: int) -> "LocationMap":
        bitmap = np.zeros(size, dtype=np.uint8)
        bitmap[list(entries)] = 1
        w = rle_encode(bitmap) if entries else BitWriter()
        return cls(tuple(int(e) for e in entries), size, pack_bits(w.bits), len(w))

    @classmethod
    def decompress(cls, compressed: bytes, s_clm: int, size: int) -> "LocationMap":
        if s_clm == 0:
            return cls((), size, b"", 0)
        bitmap = rle_decode(BitReader(unpack_bits(compressed, s_clm)), size)
        return cls(tuple(np.flatnonzero(bitmap).tolist()), size, compressed, s_clm)

    def bits(self) -> list[int]:
        return unpack_bits(self.compressed, self.s_clm) if self.s_clm else []


def preprocess_saturation(img: GrayImage) -> tuple[GrayImage, LocationMap]:
    flat = img.pixels.ravel()
    entries = np.flatnonzero((flat == 0) | (flat == 255))
    out = flat.copy()
    out[flat == 0] = 1
    out[flat == 255] = 254
    lm = LocationMap.from_entries(entries.tolist(), flat.size)
    return GrayImage(out.reshape(img.pixels.shape)), lm


def postprocess_saturation(img: GrayImage, lm: LocationMap) -> GrayImage:
    if not lm.entries:
        return img
    flat = img.pixels.ravel().copy()
    idx = np.asarray(lm.entries, dtype=np.int64)
    if idx.max() >= flat.size or idx.min() < 0:
        raise CorruptionError("location map index outside the image")
    vals = flat[idx]
    bad = (vals != 1) & (vals != 254)
    if bad.any():
        i = int(idx[bad][0])
        raise CorruptionError(f"location map entry {i} holds {int(flat[i])}, expected 1 or 254")
    flat[idx] = np.where(vals == 1, 0, 255)
    return GrayImage(flat.reshape(img.pixels.shape))
