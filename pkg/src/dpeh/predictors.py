"""Pixel predictors and double prediction errors (scalar reference versions).

Context geometry around the target pixel x at (r, c)::

    r-2:  u9  u8  u7  u6
    r-1:  u5  u4  v3  u3
    r  :  u2  v4  x   v2
    r+1:  u1  .   v1

v1..v4 are the four cross neighbours (the other layer). The bulk image passes
in ``_kernels`` mirror these functions; the tests hold the two in agreement.
"""
from __future__ import annotations

from dataclasses import dataclass
from enum import IntEnum

import numpy as np

from .pixels import GrayImage

# (drow, dcol) of v1..v4 then u1..u9
CONTEXT_OFFSETS = (
    (1, 0), (0, 1), (-1, 0), (0, -1),
    (1, -2), (0, -2), (-1, 1), (-1, -1), (-1, -2),
    (-2, 1), (-2, 0), (-2, -1), (-2, -2),
)


class PredictorPair(IntEnum):
    """Predictor configurations; the value is the pair id stored in the aux header."""

    IDENTICAL = 1  # rhombus twice, i.e. plain multiple-histogram modification
    MED = 2        # rhombus + median edge detector
    NONLINEAR = 3  # rhombus + nonlinear rhombus


@dataclass(frozen=True)
class PredictionContext:
    v1: int
    v2: int
    v3: int
    v4: int
    u1: int = 0
    u2: int = 0
    u3: int = 0
    u4: int = 0
    u5: int = 0
    u6: int = 0
    u7: int = 0
    u8: int = 0
    u9: int = 0

    @classmethod
    def at(cls, pixels: np.ndarray, r: int, c: int) -> "PredictionContext":
        return cls(*(int(pixels[r + dr, c + dc]) for dr, dc in CONTEXT_OFFSETS))


@dataclass(frozen=True)
class DoubleError:
    e1: int
    e2: int

    @property
    def intercept(self) -> int:
        return self.e2 - self.e1


def _ceil_half(a: int) -> int:
    return (a + 1) // 2


def _clamp(v: int) -> int:
    return min(255, max(0, v))


def predict_rhombus(ctx: PredictionContext) -> int:
    return (ctx.v1 + ctx.v2 + ctx.v3 + ctx.v4 + 3) // 4


def predict_med(ctx: PredictionContext) -> int:
    a, b, c = ctx.v3, ctx.v4, ctx.u4
    if c >= max(a, b):
        return min(a, b)
    if c <= min(a, b):
        return max(a, b)
    return _clamp(a + b - c)


def predict_nonlinear_rhombus(ctx: PredictionContext, i1: float, i2: float) -> int:
    """Edge-directed rhombus predictor; falls back to the plain rhombus mean."""
    v1, v2, v3, v4 = ctx.v1, ctx.v2, ctx.v3, ctx.v4
    if min(v1, v2) >= max(v3, v4):
        p = _ceil_half(max(v1, v2) + min(v3, v4))
    elif min(v2, v3) >= max(v1, v4):
        p = _ceil_half(max(v2, v3) + min(v1, v4))
    elif min(v3, v4) >= max(v1, v2):
        p = _ceil_half(max(v3, v4) + min(v1, v2))
    elif min(v1, v4) >= max(v2, v3):
        p = _ceil_half(max(v1, v4) + min(v2, v3))
    elif min(v1, v3) >= max(v2, v4) and i1 >= i2:
        p = _ceil_half(v1 + v3)
    elif min(v2, v4) >= max(v1, v3) and i1 < i2:
        p = _ceil_half(v2 + v4)
    else:
        p = predict_rhombus(ctx)
    return _clamp(p)


def edge_intensities(img: GrayImage | np.ndarray) -> tuple[float, float]:
    """Mean horizontal (I1) and vertical (I2) 3-pixel differences over interior pixels."""
    x = img.pixels if isinstance(img, GrayImage) else img
    x = x.astype(np.int64)
    h, w = x.shape
    if h < 3 or w < 3:
        raise ValueError("edge intensities need an image of at least 3x3")
    cols = x[:, 2:] - x[:, :-2]           # x[i, j+1] - x[i, j-1]
    i1 = cols[:-2] + cols[1:-1] + cols[2:]
    rows = x[:-2, :] - x[2:, :]           # x[i-1, j] - x[i+1, j]
    i2 = rows[:, :-2] + rows[:, 1:-1] + rows[:, 2:]
    n = (h - 2) * (w - 2)
    return float(i1.sum()) / n, float(i2.sum()) / n


def second_prediction(ctx: PredictionContext, pair: PredictorPair, i1: float = 0.0, i2: float = 0.0) -> int:
    if pair == PredictorPair.IDENTICAL:
        return predict_rhombus(ctx)
    if pair == PredictorPair.MED:
        return predict_med(ctx)
    return predict_nonlinear_rhombus(ctx, i1, i2)


def double_errors(
    x: int, ctx: PredictionContext, i1: float, i2: float, pair: PredictorPair
) -> DoubleError:
    return DoubleError(x - predict_rhombus(ctx), x - second_prediction(ctx, pair, i1, i2))
