"""Embedding and extraction pipelines for the three schemes.

``dpeh``  multiple 2D double-prediction-error histograms with DP bin selection
``mhm``   multiple 1D histograms of the rhombus error (same DP, one line per class)
``cpee``  rhombus prediction with fixed expansion bins -1 and 0

All three share the double-layer scan, saturation preprocessing and the aux
plumbing: the bit stream is payload followed by the original LSBs of the
pixels that the aux information overwrites, split in half between layers.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, replace
from typing import Callable, Literal, Sequence

import numpy as np

from . import _kernels as K
from .aux import MAX_AUX_BITS, AuxInfo, LayerAux, aux_length, read_aux, serialize_aux
from .bitstream import pack_bits
from .errors import (
    AuxOverflowError,
    CapacityError,
    CorruptionError,
    DimensionError,
    InfeasibleError,
    SerializationError,
)
from .histograms import (
    DEFAULT_CLASSES,
    DEFAULT_HMIN,
    Thresholds,
    classify_all,
    thresholds,
)
from .optimizer import (
    DEFAULT_DELTA,
    DEFAULT_SEARCH,
    BinChoice,
    ChoiceGroup,
    dp_rolling,
    point_groups,
)
from .pixels import (
    GrayImage,
    LayerPartition,
    LocationMap,
    aux_positions,
    partition,
    postprocess_saturation,
    preprocess_saturation,
    reserved_rows,
)
from .predictors import PredictorPair, edge_intensities

Scheme = Literal["dpeh", "mhm", "cpee"]
SCHEMES: tuple[str, ...] = ("cpee", "mhm", "dpeh")
CPEE_BINS = (-1, 0)
MAX_AUX_ROUNDS = 12
REPLAN_ROUNDS = 3


@dataclass(frozen=True)
class EmbedConfig:
    scheme: Scheme = "dpeh"
    m: int = DEFAULT_CLASSES
    hmin: int = DEFAULT_HMIN
    delta: int = DEFAULT_DELTA
    pair: PredictorPair = PredictorPair.NONLINEAR
    search: int = DEFAULT_SEARCH
    objective: Literal["total", "ratio"] = "total"
    aux_weight: int = 5
    max_retries: int = 12

    def __post_init__(self):
        if self.scheme not in SCHEMES:
            raise ValueError(f"unknown scheme {self.scheme!r}")
        if not 1 <= self.m <= 64:
            raise ValueError("class count must be in 1..64")
        if not 0 <= self.search <= 15:
            raise ValueError("search range must be in 0..15")
        if self.aux_weight < 0:
            raise ValueError("aux weight must be non-negative")

    @property
    def pair_id(self) -> int:
        if self.scheme == "cpee":
            return 0
        if self.scheme == "mhm":
            return int(PredictorPair.IDENTICAL)
        return int(self.pair)

    @property
    def classes(self) -> int:
        return 1 if self.scheme == "cpee" else self.m


@dataclass(frozen=True)
class LayerReport:
    n_end: int
    bits: int
    ec_star: int
    ed2_star: int
    cells: int
    attempts: int


@dataclass(frozen=True)
class StegoImage:
    image: GrayImage
    aux: AuxInfo
    layers: tuple[LayerReport, LayerReport]
    payload_bits: int

    @property
    def aux_bits(self) -> int:
        return self.aux.s_aux

    @property
    def realized_ec(self) -> int:
        """Capacity offered by the selected bins, summed over both layers."""
        return sum(layer.ec_star for layer in self.layers)

    @property
    def ed_star(self) -> float:
        return sum(layer.ed2_star for layer in self.layers) / 2


# --- planners --------------------------------------------------------------

def _layer_thresholds(comp: np.ndarray, m: int) -> Thresholds:
    return thresholds(comp, m) if comp.size else Thresholds(tuple([0] * (m - 1)))


def _line_points(e1: np.ndarray, b: np.ndarray, t: np.ndarray):
    """Distinct (t, b, e1) histogram points with counts, sorted lexicographically."""
    key = (t * 511 + (b + 255)) * 511 + (e1 + 255)
    uniq, count = np.unique(key, return_counts=True)
    rest, e1s = np.divmod(uniq, 511)
    ts, bs = np.divmod(rest, 511)
    return ts, bs - 255, e1s - 255, count.astype(np.int64)


def _groups_dpeh(e1, e2, t, cfg: EmbedConfig) -> list[ChoiceGroup]:
    return point_groups(*_line_points(e1, e2 - e1, t), cfg.hmin, cfg.search)


def _groups_mhm(e1, e2, t, cfg: EmbedConfig) -> list[ChoiceGroup]:
    """One 1D error histogram per class; every class is a single line."""
    return point_groups(*_line_points(e1, np.zeros_like(e1), t), cfg.hmin, cfg.search)


def line_aux_bits(c: BinChoice) -> int:
    """Rough side-information cost of putting bins on one line."""
    return 3 + 3 * ((c.left != K.NO_LEFT) + (c.right != K.NO_RIGHT))


def _penalize(groups: list[ChoiceGroup], weight: int) -> list[ChoiceGroup]:
    """Charge every choice ``weight`` half-units of distortion per estimated aux bit.

    Each aux bit overwrites one LSB and displaces one more payload-carrying
    bit, so selecting a line has a real distortion cost the histogram model
    does not see. Weight 0 gives the plain histogram optimum.
    """
    if weight == 0:
        return groups
    return [
        g.with_extra_cost(weight * (3 + 3 * ((g.left != K.NO_LEFT).astype(np.int64) + (g.right != K.NO_RIGHT))))
        for g in groups
    ]


_GROUPS: dict[str, Callable[..., list[ChoiceGroup]]] = {"dpeh": _groups_dpeh, "mhm": _groups_mhm}


def _fixed_plan_arrays(m: int = 1) -> tuple[np.ndarray, np.ndarray]:
    left = np.full((m, K.N_LINES), K.NO_LEFT, dtype=np.int64)
    right = np.full((m, K.N_LINES), K.NO_RIGHT, dtype=np.int64)
    left[0, K.LINE_OFFSET], right[0, K.LINE_OFFSET] = CPEE_BINS
    return left, right


def _plan_arrays(layer: LayerAux, m: int, pair: int) -> tuple[np.ndarray, np.ndarray]:
    if pair == 0:
        return _fixed_plan_arrays()
    left = np.full((m, K.N_LINES), K.NO_LEFT, dtype=np.int64)
    right = np.full((m, K.N_LINES), K.NO_RIGHT, dtype=np.int64)
    for t, b, lo, hi in layer.bins:
        left[t, b + K.LINE_OFFSET] = lo
        right[t, b + K.LINE_OFFSET] = hi
    return left, right


# --- embedding -------------------------------------------------------------

def _edge_flag(work: np.ndarray, pair: int) -> bool:
    if pair != int(PredictorPair.NONLINEAR):
        return False
    i1, i2 = edge_intensities(work)
    return i1 >= i2


def _embed_layer(
    work: np.ndarray, part: LayerPartition, bits: np.ndarray, cfg: EmbedConfig, weight: int
) -> tuple[LayerAux, LayerReport]:
    pair = cfg.pair_id
    edge = _edge_flag(work, pair)
    cells = len(part)
    if bits.size == 0:
        th = () if pair == 0 else tuple([0] * (cfg.m - 1))
        return LayerAux(0, edge, th), LayerReport(0, 0, 0, 0, cells, 0)

    if pair == 0:
        left, right = _fixed_plan_arrays()
        # the rhombus context is the other layer only, so these errors are the ones met while embedding
        e1, _, _ = K.layer_features(work, part.rows, part.cols, 0, False)
        expandable = np.isin(e1, CPEE_BINS)
        trial = work.copy()
        n_end, used = K.embed_pass(trial, part.rows, part.cols, bits, 0, False,
                                   np.zeros(0, np.int64), left, right)
        if used < bits.size:
            raise CapacityError(f"fixed bins carry only {used} of {bits.size} bits in one layer", used)
        work[:] = trial
        scanned = expandable[:n_end]
        ed2 = int(scanned.sum()) + 2 * int((~scanned).sum())
        return LayerAux(n_end), LayerReport(n_end, used, int(expandable.sum()), ed2, cells, 1)

    e1, e2, comp = K.layer_features(work, part.rows, part.cols, pair, edge)
    th = _layer_thresholds(comp, cfg.m)
    th_arr = th.as_array()
    target = int(bits.size)
    extra = 0
    seen = comp
    for attempt in range(1, cfg.max_retries + 1):
        groups = _penalize(_GROUPS[cfg.scheme](e1, e2, classify_all(seen, th), cfg), weight)
        try:
            plan = dp_rolling(groups, target + extra, cfg.delta, cfg.objective)
        except InfeasibleError as exc:
            raise CapacityError(
                f"layer needs {target + extra} bits but the bins cannot reach it", exc.max_capacity
            ) from exc
        left, right = plan.arrays(cfg.m)
        trial = work.copy()
        n_end, used = K.embed_pass(trial, part.rows, part.cols, bits, pair, edge, th_arr, left, right)
        if used == target:
            work[:] = trial
            layer = LayerAux(n_end, edge, th.s, tuple(
                (t, b, lo, hi) for (t, b), (lo, hi) in sorted(plan.bins.items())
            ))
            ed2 = sum(c.ed2 - weight * line_aux_bits(c) for c in plan.choices if c is not None)
            return layer, LayerReport(n_end, used, plan.ec_star, ed2, cells, attempt)
        # A cell's complexity reads same-layer pixels that precede it in the
        # scan, so classes seen while embedding differ from those of the cover.
        # Those pixels are final by then, so the marked trial image shows
        # exactly the classes the embedder met: plan again from them.
        _, _, seen = K.layer_features(trial, part.rows, part.cols, pair, edge)
        if attempt >= REPLAN_ROUNDS:
            extra += target - used + 4
    raise CapacityError(f"layer could not carry {target} bits after {cfg.max_retries} attempts")


def _min_aux_bits(cfg: EmbedConfig, width: int, height: int, lm: LocationMap) -> int:
    empty = LayerAux(0, False, () if cfg.pair_id == 0 else tuple([0] * (cfg.classes - 1)))
    aux = AuxInfo(cfg.pair_id, cfg.classes, (empty, empty), tuple(lm.bits()))
    return aux_length(aux, width, height)


def embed(cover: GrayImage, payload: Sequence[int] | np.ndarray, cfg: EmbedConfig = EmbedConfig()) -> StegoImage:
    """Hide ``payload`` bits in ``cover``; the result is exactly invertible by ``extract``."""
    bits = np.asarray(payload, dtype=np.uint8).reshape(-1)
    if bits.size and bits.max() > 1:
        raise ValueError("payload must consist of 0/1 values")
    width, height = cover.width, cover.height
    pre, lm = preprocess_saturation(cover)
    guess = _min_aux_bits(cfg, width, height, lm)
    limit = min(MAX_AUX_BITS, width * height)
    weight = cfg.aux_weight
    best: StegoImage | None = None
    for _ in range(MAX_AUX_ROUNDS):
        if guess > limit:
            raise AuxOverflowError(f"auxiliary information needs {guess} bits, the limit is {limit}", 0)
        stego, need = _embed_with_aux(pre, lm, bits, cfg, guess, weight)
        if stego is not None:
            if best is None:
                best = stego
            if need == guess or best is not stego:
                return stego
            # padding costs LSB flips and carried bits: try the exact length once
            guess = need
            continue
        if best is not None:
            return best
        if need > limit and cfg.pair_id != 0:
            if weight >= 8 * max(1, cfg.aux_weight):
                raise AuxOverflowError(
                    f"the bins able to carry this payload need {need} aux bits, the limit is {limit}", 0
                )
            # too many lines carry bins: make each line dearer and plan again
            weight = max(1, 2 * weight)
        else:
            guess = min(need + 8, max(need, limit))
    raise CapacityError("auxiliary information size did not settle")


def _embed_with_aux(
    pre: GrayImage, lm: LocationMap, bits: np.ndarray, cfg: EmbedConfig, guess: int, weight: int
) -> tuple[StegoImage | None, int]:
    """One embedding with ``guess`` aux bits reserved; returns (stego or None, aux bits needed)."""
    width, height = pre.width, pre.height
    try:
        parts = partition((height, width), reserved_rows(guess, width))
    except DimensionError as exc:
        raise CapacityError(f"{width}x{height} image cannot hold {guess} aux bits: {exc}", 0) from exc
    arows, acols = aux_positions(width, height, guess)
    work = pre.pixels.copy()
    stream = np.concatenate((bits, work[arows, acols] & 1)).astype(np.uint8)
    half = (stream.size + 1) // 2
    layer1, rep1 = _embed_layer(work, parts[0], stream[:half], cfg, weight)
    layer2, rep2 = _embed_layer(work, parts[1], stream[half:], cfg, weight)
    aux = AuxInfo(cfg.pair_id, cfg.classes, (layer1, layer2), tuple(lm.bits()))
    need = aux_length(aux, width, height)
    if need > guess:
        return None, need
    aux = replace(aux, s_aux=guess)
    aux_bits = np.asarray(serialize_aux(aux, width, height), dtype=np.uint8)
    work[arows, acols] = (work[arows, acols] & 0xFE) | aux_bits
    return StegoImage(GrayImage(work), aux, (rep1, rep2), int(bits.size)), need


def embed_cpee(cover: GrayImage, payload, cfg: EmbedConfig | None = None) -> StegoImage:
    return embed(cover, payload, replace(cfg or EmbedConfig(), scheme="cpee"))


def embed_mhm(cover: GrayImage, payload, cfg: EmbedConfig | None = None) -> StegoImage:
    return embed(cover, payload, replace(cfg or EmbedConfig(), scheme="mhm"))


# --- extraction ------------------------------------------------------------

def _lsbs(pixels: np.ndarray, n: int) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    h, w = pixels.shape
    rows, cols = aux_positions(w, h, n)
    return rows, cols, (pixels[rows, cols] & 1).astype(np.uint8)


def extract(stego: GrayImage | StegoImage) -> tuple[np.ndarray, GrayImage]:
    """Recover (payload bits, original cover) from a marked image."""
    img = stego.image if isinstance(stego, StegoImage) else stego
    work = img.pixels.copy()
    height, width = work.shape
    if width * height < 10:
        raise CorruptionError("image too small to carry auxiliary information")
    _, _, head = _lsbs(work, 10)
    s_aux = int("".join(map(str, head.tolist())), 2)
    if s_aux < 10 or s_aux > width * height:
        raise CorruptionError(f"implausible aux length {s_aux}")
    arows, acols, aux_bits = _lsbs(work, s_aux)
    aux = read_aux(aux_bits.tolist(), width, height)
    try:
        parts = partition((height, width), reserved_rows(s_aux, width))
    except DimensionError as exc:
        raise CorruptionError(f"aux length {s_aux} leaves no embeddable cells") from exc

    chunks = []
    for part, layer in zip(reversed(parts), reversed(aux.layers)):
        if layer.n_end > len(part):
            raise CorruptionError(f"n_end {layer.n_end} exceeds the {len(part)} layer cells")
        left, right = _plan_arrays(layer, aux.m, aux.pair)
        th = np.asarray(layer.thresholds, dtype=np.int64).reshape(-1)
        got, ok = K.extract_pass(work, part.rows, part.cols, layer.n_end, aux.pair,
                                 layer.edge_ge, th, left, right)
        if not ok:
            raise CorruptionError("restored pixel left the [0, 255] range")
        chunks.append(got)
    stream = np.concatenate(chunks[::-1]) if chunks else np.zeros(0, np.uint8)
    if stream.size < s_aux:
        raise CorruptionError(f"recovered {stream.size} bits, fewer than the {s_aux} aux LSBs")
    payload, lsb = stream[:-s_aux], stream[-s_aux:]
    work[arows, acols] = (work[arows, acols] & 0xFE) | lsb
    try:
        lm = LocationMap.decompress(pack_bits(list(aux.clm_bits)), aux.s_clm, width * height)
    except SerializationError as exc:
        raise CorruptionError(f"malformed location map: {exc}") from exc
    cover = postprocess_saturation(GrayImage(work), lm)
    return payload.astype(np.uint8), cover


def extract_cpee(stego: GrayImage | StegoImage) -> tuple[np.ndarray, GrayImage]:
    return extract(stego)


def extract_mhm(stego: GrayImage | StegoImage) -> tuple[np.ndarray, GrayImage]:
    return extract(stego)


# --- helpers ---------------------------------------------------------------

def psnr(a: GrayImage, b: GrayImage) -> float:
    if (a.width, a.height) != (b.width, b.height):
        raise DimensionError(f"size mismatch {a.width}x{a.height} vs {b.width}x{b.height}")
    diff = a.pixels.astype(np.int64) - b.pixels.astype(np.int64)
    mse = float(np.mean(diff * diff))
    if mse == 0:
        return math.inf
    return 10 * math.log10(255 ** 2 / mse)


def random_payload(n: int, seed: int | None = 0) -> np.ndarray:
    return np.random.default_rng(seed).integers(0, 2, size=n, dtype=np.uint8)


def capacity_estimate(cover: GrayImage, cfg: EmbedConfig = EmbedConfig()) -> int:
    """Optimistic net payload capacity of ``cover``.

    Sums, over the lines of both layers of the unmarked cover, the best
    capacity minus that line's aux cost, then subtracts the fixed aux part.

    Embedding may still be refused close to this value because marking shifts
    classes and every selected line adds aux bits.
    """
    pre, lm = preprocess_saturation(cover)
    base = _min_aux_bits(cfg, cover.width, cover.height, lm)
    try:
        parts = partition(pre, reserved_rows(base, cover.width))
    except DimensionError:
        return 0
    work = pre.pixels
    total = 0
    for part in parts:
        pair = cfg.pair_id
        edge = _edge_flag(work, pair)
        e1, e2, comp = K.layer_features(work, part.rows, part.cols, pair, edge)
        if pair == 0:
            total += int(np.isin(e1, CPEE_BINS).sum())
            continue
        groups = _GROUPS[cfg.scheme](e1, e2, classify_all(comp, _layer_thresholds(comp, cfg.m)), cfg)
        for g in groups:
            # each aux bit also occupies one stream bit (its saved LSB)
            cost = 3 + 3 * ((g.left != K.NO_LEFT).astype(np.int64) + (g.right != K.NO_RIGHT))
            total += max(0, int((g.ec - cost).max(initial=0)))
    return max(0, total - base)
