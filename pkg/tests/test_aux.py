import pytest
from hypothesis import assume, given, settings, strategies as st

from dpeh.aux import (
    MAX_AUX_BITS, NO_LEFT, NO_RIGHT, AuxInfo, LayerAux, aux_length, deserialize_aux, read_aux, serialize_aux,
)
from dpeh.errors import AuxOverflowError, CorruptionError, SerializationError

WIDTH, HEIGHT = 64, 48


@st.composite
def layer_aux(draw, pair, m):
    n_end = draw(st.integers(0, WIDTH * HEIGHT))
    if pair == 0:
        return LayerAux(n_end)
    th = tuple(sorted(draw(st.lists(st.integers(0, 400), min_size=m - 1, max_size=m - 1))))
    keys = draw(st.lists(
        st.tuples(st.integers(0, m - 1), st.integers(-255, 255) if pair >= 2 else st.just(0)),
        unique=True, max_size=12,
    ))
    bins = []
    for t, b in sorted(keys):
        kind = draw(st.sampled_from(["left", "right", "both"]))
        lo = draw(st.integers(-255, 254)) if kind != "right" else NO_LEFT
        hi = draw(st.integers(-255 if lo == NO_LEFT else lo + 1, 255)) if kind != "left" else NO_RIGHT
        bins.append((t, b, lo, hi))
    return LayerAux(n_end, draw(st.booleans()) if pair == 3 else False, th, tuple(bins))


@st.composite
def aux_infos(draw):
    pair = draw(st.integers(0, 3))
    m = 1 if pair == 0 else draw(st.integers(1, 16))
    layers = (draw(layer_aux(pair, m)), draw(layer_aux(pair, m)))
    clm = tuple(draw(st.lists(st.integers(0, 1), max_size=80)))
    return AuxInfo(pair, m, layers, clm)


@settings(max_examples=100, deadline=None)
@given(aux_infos(), st.integers(0, 40))
def test_round_trip(a, padding):
    need = aux_length(a, WIDTH, HEIGHT)
    assume(need + padding <= MAX_AUX_BITS)
    sized = AuxInfo(a.pair, a.m, a.layers, a.clm_bits, a.codec_id, need + padding)
    bits = serialize_aux(sized, WIDTH, HEIGHT)
    assert len(bits) == need + padding
    assert deserialize_aux(bits, WIDTH, HEIGHT) == sized


def test_minimal_header():
    a = AuxInfo(0, 1, (LayerAux(7), LayerAux(9)))
    bits = serialize_aux(a, WIDTH, HEIGHT)
    # 10 + 4 + 2 + 6 header, two 12-bit n_end fields, gamma(1) for an empty map, 16-bit checksum
    assert len(bits) == 22 + 24 + 1 + 16
    assert int("".join(map(str, bits[:10])), 2) == len(bits)


def example():
    layer = LayerAux(100, True, (3, 8, 20), ((0, -2, -1, 0), (1, 0, NO_LEFT, 2), (3, 5, -4, NO_RIGHT)))
    return AuxInfo(3, 4, (layer, layer), (1, 0, 1))


def test_single_bit_flips_are_detected():
    bits = serialize_aux(example(), WIDTH, HEIGHT)
    for i in range(10, len(bits)):
        flipped = list(bits)
        flipped[i] ^= 1
        with pytest.raises(CorruptionError):
            read_aux(flipped, WIDTH, HEIGHT)


def test_non_zero_padding_is_corruption():
    a = example()
    sized = AuxInfo(a.pair, a.m, a.layers, a.clm_bits, a.codec_id, aux_length(a, WIDTH, HEIGHT) + 5)
    bits = serialize_aux(sized, WIDTH, HEIGHT)
    bits[-1] = 1
    with pytest.raises(CorruptionError):
        read_aux(bits, WIDTH, HEIGHT)


def test_overflow_and_invalid_plans_are_rejected():
    big = AuxInfo(0, 1, (LayerAux(0), LayerAux(0)), tuple([1, 0] * 600))
    with pytest.raises(AuxOverflowError):
        serialize_aux(big, WIDTH, HEIGHT)
    layer = LayerAux(0, False, (5, 2), ())
    with pytest.raises(SerializationError):
        serialize_aux(AuxInfo(2, 3, (layer, layer)), WIDTH, HEIGHT)
    layer = LayerAux(0, False, (1,), ((0, 0, 3, 3),))
    with pytest.raises(SerializationError):
        serialize_aux(AuxInfo(2, 2, (layer, layer)), WIDTH, HEIGHT)
    layer = LayerAux(0, False, (1,), ((0, 0, NO_LEFT, NO_RIGHT),))
    with pytest.raises(SerializationError):
        serialize_aux(AuxInfo(2, 2, (layer, layer)), WIDTH, HEIGHT)
