"""MSB-first bit I/O, variable-length integers and run-length coding of bit strings.

Integer codes: Elias gamma for positive values, Exp-Golomb of order k for
non-negative values, and zigzag-mapped gamma for signed values
(0, -1, 1, -2, 2, ... map to 1, 2, 3, 4, 5, ...).

Run-length format (used for the location map): one bit giving
the value of the first run, then the length of every run as an Elias-gamma
code. Runs alternate in value, so the decoder only needs the total length.
"""
from __future__ import annotations

from typing import Iterable, Sequence

import numpy as np

from .errors import SerializationError


class BitWriter:
    def __init__(self) -> None:
        self.bits: list[int] = []

    def __len__(self) -> int:
        return len(self.bits)

    def write(self, value: int, width: int) -> None:
        if width < 0:
            raise SerializationError(f"negative field width {width}")
        if value < 0 or value >> width:
            raise SerializationError(
                f"value {value} does not fit in {width} bits", len(self.bits)
            )
        for shift in range(width - 1, -1, -1):
            self.bits.append((value >> shift) & 1)

    def write_bits(self, bits: Iterable[int]) -> None:
        self.bits.extend(int(b) & 1 for b in bits)

    def write_gamma(self, value: int) -> None:
        """Elias-gamma code of a positive integer."""
        if value < 1:
            raise SerializationError(f"gamma code needs a positive value, got {value}", len(self.bits))
        n = value.bit_length()
        self.bits.extend([0] * (n - 1))
        self.write(value, n)

    def write_expgolomb(self, value: int, k: int) -> None:
        if value < 0:
            raise SerializationError(f"Exp-Golomb code needs a non-negative value, got {value}", len(self.bits))
        self.write_gamma((value >> k) + 1)
        self.write(value & ((1 << k) - 1), k)

    def write_signed(self, value: int) -> None:
        self.write_gamma(2 * value + 1 if value >= 0 else -2 * value)


class BitReader:
    def __init__(self, bits: Sequence[int]) -> None:
        self.bits = bits
        self.pos = 0

    @property
    def remaining(self) -> int:
        return len(self.bits) - self.pos

    def read(self, width: int) -> int:
        if width > self.remaining:
            raise SerializationError(f"stream ends while reading {width} bits", self.pos)
        value = 0
        for b in self.bits[self.pos:self.pos + width]:
            value = (value << 1) | int(b)
        self.pos += width
        return value

    def read_bits(self, n: int) -> list[int]:
        if n > self.remaining:
            raise SerializationError(f"stream ends while reading {n} bits", self.pos)
        out = [int(b) for b in self.bits[self.pos:self.pos + n]]
        self.pos += n
        return out

    def read_gamma(self) -> int:
        start = self.pos
        zeros = 0
        while True:
            if self.pos >= len(self.bits):
                raise SerializationError("stream ends inside a gamma code", start)
            if self.bits[self.pos]:
                break
            zeros += 1
            self.pos += 1
            if zeros > 40:
                raise SerializationError("gamma code too long", start)
        return self.read(zeros + 1)

    def read_expgolomb(self, k: int) -> int:
        high = self.read_gamma() - 1
        return (high << k) | self.read(k)

    def read_signed(self) -> int:
        z = self.read_gamma()
        return (z - 1) // 2 if z % 2 else -(z // 2)


def rle_encode(bits: Sequence[int] | np.ndarray, writer: BitWriter | None = None) -> BitWriter:
    w = writer if writer is not None else BitWriter()
    arr = np.asarray(bits, dtype=np.uint8)
    if arr.size == 0:
        return w
    w.write(int(arr[0]), 1)
    edges = np.flatnonzero(np.diff(arr)) + 1
    bounds = np.concatenate(([0], edges, [arr.size]))
    for run in np.diff(bounds):
        w.write_gamma(int(run))
    return w


def rle_decode(reader: BitReader, length: int) -> np.ndarray:
    out = np.zeros(length, dtype=np.uint8)
    if length == 0:
        return out
    value = reader.read(1)
    pos = 0
    while pos < length:
        at = reader.pos
        run = reader.read_gamma()
        if pos + run > length:
            raise SerializationError(f"run of {run} overflows {length}-bit field", at)
        out[pos:pos + run] = value
        pos += run
        value ^= 1
    return out


def pack_bits(bits: Sequence[int]) -> bytes:
    return np.packbits(np.asarray(bits, dtype=np.uint8)).tobytes()


def unpack_bits(data: bytes, n: int) -> list[int]:
    arr = np.unpackbits(np.frombuffer(data, dtype=np.uint8))
    if n > arr.size:
        raise SerializationError(f"need {n} bits, have {arr.size}")
    return arr[:n].tolist()
