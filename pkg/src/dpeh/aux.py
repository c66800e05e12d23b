"""Side information needed to undo an embedding, and its bit layout.

Layout, MSB first::

    s_aux:10  codec_id:4  pair:2  (M-1):6
    layer 1 block  gamma(s_clm + 1)  CLM:s_clm  layer 2 block
    checksum:16  zero padding up to s_aux

    layer block = n_end:nb  [edge:1]  [thresholds]  [lines]

``nb`` is the bit length of width*height. The edge bit (I1 >= I2) is present
only for the nonlinear pair. Layer 1 thresholds are Exp-Golomb (order 3) coded
gaps s0, s1 - s0, ...; layer 2 thresholds are signed gamma differences from
the layer 1 value at the same index, since both layers see nearly the same
complexity distribution. The lines carrying expansion bins are listed per class t in
ascending order: gamma(count + 1), then for each line its intercept b (signed
gamma for the first, gamma of the gap after that; omitted when b is always 0),
a kind prefix ("1" both bins, "01" left only, "00" right only) and each present
abscissa as a signed gamma delta from the previous one on the same side,
starting from (-1, 0). The per-class gap lists are a run-length code of the
(t, b) flag bits. C-PEE (pair 0) has fixed bins and one class, so its blocks
hold only n_end. CLM is the run-length coded location map (see ``bitstream``).
The checksum is CRC-16/CCITT of the packed bits before it.
"""
from __future__ import annotations

import binascii
from dataclasses import dataclass

from .bitstream import BitReader, BitWriter, pack_bits
from .errors import AuxOverflowError, CorruptionError, SerializationError

S_AUX_BITS = 10
MAX_AUX_BITS = (1 << S_AUX_BITS) - 1
CODEC_RLE = 0
LINE_SPAN = 255
THRESHOLD_K = 3
NO_LEFT = -1000    # no bin on that side; same sentinels as the compiled passes
NO_RIGHT = 1000
CPEE_LEFT, CPEE_RIGHT = -1, 0  # starting point for delta-coded abscissae


@dataclass(frozen=True)
class LayerAux:
    n_end: int
    edge_ge: bool = False
    thresholds: tuple[int, ...] = ()
    bins: tuple[tuple[int, int, int, int], ...] = ()  # (t, b, left, right), sorted by (t, b)


@dataclass(frozen=True)
class AuxInfo:
    pair: int
    m: int
    layers: tuple[LayerAux, LayerAux]
    clm_bits: tuple[int, ...] = ()
    codec_id: int = CODEC_RLE
    s_aux: int = 0  # total length incl. padding; 0 means "as short as possible"

    @property
    def s_clm(self) -> int:
        return len(self.clm_bits)


def n_end_width(width: int, height: int) -> int:
    return (width * height).bit_length()


def _check_line(a: AuxInfo, t: int, b: int, lo: int, hi: int, at: int) -> None:
    span = LINE_SPAN if a.pair >= 2 else 0
    if not (0 <= t < a.m and -span <= b <= span):
        raise SerializationError(f"line ({t}, {b}) outside the class/line range", at)
    has_lo, has_hi = lo != NO_LEFT, hi != NO_RIGHT
    if not (has_lo or has_hi):
        raise SerializationError(f"line ({t}, {b}) has no finite bin", at)
    if (has_lo and abs(lo) > LINE_SPAN) or (has_hi and abs(hi) > LINE_SPAN) or (has_lo and has_hi and lo >= hi):
        raise SerializationError(f"line ({t}, {b}) has invalid bins ({lo}, {hi})", at)


def _write_layer(w: BitWriter, a: AuxInfo, layer: LayerAux, nb: int, ref: tuple[int, ...] = ()) -> None:
    w.write(layer.n_end, nb)
    if a.pair == 0:
        return
    if a.pair == 3:
        w.write(int(layer.edge_ge), 1)
    if len(layer.thresholds) != a.m - 1:
        raise SerializationError(f"{len(layer.thresholds)} thresholds for {a.m} classes", len(w))
    prev = 0
    for i, s in enumerate(layer.thresholds):
        if s < prev:
            raise SerializationError("thresholds must be non-negative and non-decreasing", len(w))
        if ref:
            w.write_signed(s - ref[i])
        else:
            w.write_expgolomb(s - prev, THRESHOLD_K)
        prev = s
    by_class: list[list[tuple[int, int, int]]] = [[] for _ in range(a.m)]
    last = None
    for t, b, lo, hi in layer.bins:
        _check_line(a, t, b, lo, hi, len(w))
        if last is not None and (t, b) <= last:
            raise SerializationError("bin lines must be sorted by (t, b) without repeats", len(w))
        last = (t, b)
        by_class[t].append((b, lo, hi))
    prev_lo, prev_hi = CPEE_LEFT, CPEE_RIGHT
    for lines in by_class:
        w.write_gamma(len(lines) + 1)
        prev_b = None
        for b, lo, hi in lines:
            if a.pair >= 2:
                if prev_b is None:
                    w.write_signed(b)
                else:
                    w.write_gamma(b - prev_b)
            prev_b = b
            if lo != NO_LEFT and hi != NO_RIGHT:
                w.write(1, 1)
            else:
                w.write(0b01 if lo != NO_LEFT else 0b00, 2)
            if lo != NO_LEFT:
                w.write_signed(lo - prev_lo)
                prev_lo = lo
            if hi != NO_RIGHT:
                w.write_signed(hi - prev_hi)
                prev_hi = hi


def _body(a: AuxInfo, width: int, height: int) -> BitWriter:
    nb = n_end_width(width, height)
    w = BitWriter()
    w.write(0, S_AUX_BITS)  # patched below
    w.write(a.codec_id, 4)
    w.write(a.pair, 2)
    if not 1 <= a.m <= 64 or (a.pair == 0 and a.m != 1):
        raise SerializationError(f"class count {a.m} out of range")
    w.write(a.m - 1, 6)
    for i, layer in enumerate(a.layers):
        _write_layer(w, a, layer, nb, a.layers[0].thresholds if i else ())
        if i == 0:
            w.write_gamma(len(a.clm_bits) + 1)
            w.write_bits(a.clm_bits)
    return w


def aux_length(a: AuxInfo, width: int, height: int) -> int:
    """Shortest serialized length of ``a`` (body plus checksum), with no upper limit."""
    return len(_body(a, width, height)) + 16


def serialize_aux(a: AuxInfo, width: int, height: int) -> list[int]:
    w = _body(a, width, height)
    body_len = len(w) + 16
    total = a.s_aux or body_len
    if total < body_len:
        raise SerializationError(f"s_aux {total} is shorter than the {body_len}-bit body")
    if total > MAX_AUX_BITS:
        raise AuxOverflowError(f"auxiliary information needs {total} bits, the limit is {MAX_AUX_BITS}")
    bits = w.bits
    for i in range(S_AUX_BITS):
        bits[i] = (total >> (S_AUX_BITS - 1 - i)) & 1
    crc = binascii.crc_hqx(pack_bits(bits), 0)
    w.write(crc, 16)
    bits.extend([0] * (total - len(bits)))
    return bits


def _read_layer(r: BitReader, pair: int, m: int, nb: int, ref: tuple[int, ...] = ()) -> LayerAux:
    n_end = r.read(nb)
    if pair == 0:
        return LayerAux(n_end)
    edge = bool(r.read(1)) if pair == 3 else False
    th = []
    prev = 0
    for i in range(m - 1):
        at = r.pos
        s = ref[i] + r.read_signed() if ref else prev + r.read_expgolomb(THRESHOLD_K)
        if s < prev:
            raise SerializationError("thresholds must be non-negative and non-decreasing", at)
        th.append(s)
        prev = s
    span = LINE_SPAN if pair >= 2 else 0
    bins = []
    prev_lo, prev_hi = CPEE_LEFT, CPEE_RIGHT
    for t in range(m):
        at = r.pos
        count = r.read_gamma() - 1
        if count > 2 * span + 1:
            raise SerializationError(f"class {t} claims {count} lines", at)
        b = None
        for _ in range(count):
            at = r.pos
            if pair < 2:
                b = 0
            elif b is None:
                b = r.read_signed()
            else:
                b += r.read_gamma()
            if abs(b) > span:
                raise SerializationError(f"line intercept {b} out of range", at)
            if r.read(1):
                kind = 3
            else:
                kind = 1 if r.read(1) else 2
            lo, hi = NO_LEFT, NO_RIGHT
            if kind & 1:
                lo = prev_lo = prev_lo + r.read_signed()
            if kind & 2:
                hi = prev_hi = prev_hi + r.read_signed()
            if (kind & 1 and abs(lo) > LINE_SPAN) or (kind & 2 and abs(hi) > LINE_SPAN) or (kind == 3 and lo >= hi):
                raise SerializationError(f"line ({t}, {b}) has invalid bins ({lo}, {hi})", at)
            bins.append((t, b, lo, hi))
    return LayerAux(n_end, edge, tuple(th), tuple(bins))


def deserialize_aux(bits, width: int, height: int) -> AuxInfo:
    r = BitReader(bits)
    s_aux = r.read(S_AUX_BITS)
    if s_aux > len(bits):
        raise SerializationError(f"s_aux {s_aux} exceeds the {len(bits)} bits supplied", 0)
    codec_id = r.read(4)
    if codec_id != CODEC_RLE:
        raise SerializationError(f"unknown codec id {codec_id}", 10)
    pair = r.read(2)
    m = r.read(6) + 1
    if pair == 0 and m != 1:
        raise SerializationError("fixed-bin scheme with several classes", 16)
    nb = n_end_width(width, height)
    layer1 = _read_layer(r, pair, m, nb)
    s_clm = r.read_gamma() - 1
    clm = tuple(r.read_bits(s_clm))
    layer2 = _read_layer(r, pair, m, nb, layer1.thresholds)
    body_end = r.pos
    crc = r.read(16)
    if crc != binascii.crc_hqx(pack_bits(list(bits[:body_end])), 0):
        raise CorruptionError("auxiliary information checksum mismatch")
    if any(bits[r.pos:s_aux]):
        raise CorruptionError("non-zero padding after auxiliary information")
    return AuxInfo(pair, m, (layer1, layer2), clm, codec_id, s_aux)


def read_aux(bits, width: int, height: int) -> AuxInfo:
    """Parse with every structural failure reported as corruption."""
    try:
        return deserialize_aux(bits, width, height)
    except SerializationError as exc:
        raise CorruptionError(f"malformed auxiliary information: {exc}") from exc
