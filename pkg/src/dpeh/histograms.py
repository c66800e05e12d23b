"""Local complexity, quantile thresholds and sparse per-class 2D histograms."""
from __future__ import annotations

import bisect
from collections import defaultdict
from dataclasses import dataclass, field
from functools import cached_property
from typing import Iterable, Sequence, TextIO

import numpy as np

from .predictors import PredictionContext

DEFAULT_CLASSES = 16
DEFAULT_HMIN = 20


def complexity(ctx: PredictionContext, xhat: int) -> int:
    """Sum of 19 absolute differences over the prediction context."""
    v1, v2, v3, v4 = ctx.v1, ctx.v2, ctx.v3, ctx.v4
    u1, u2, u3, u4, u5, u6, u7, u8, u9 = (
        ctx.u1, ctx.u2, ctx.u3, ctx.u4, ctx.u5, ctx.u6, ctx.u7, ctx.u8, ctx.u9
    )
    return (
        abs(v1 - xhat) + abs(v2 - xhat) + abs(v3 - xhat) + abs(v4 - xhat)
        + abs(u3 - v3) + abs(v3 - u4) + abs(u4 - u5) + abs(u6 - u7)
        + abs(u7 - u8) + abs(u8 - u9) + abs(v2 - u3) + abs(u3 - u6)
        + abs(v3 - u7) + abs(v4 - u4) + abs(u4 - u8) + abs(u1 - u2)
        + abs(u2 - u5) + abs(u5 - u9) + abs(v4 - u2)
    )


@dataclass(frozen=True)
class Thresholds:
    """Class boundaries: class 0 is [0, s0], class t is [s_{t-1}+1, s_t], the last is open."""

    s: tuple[int, ...]

    @property
    def m(self) -> int:
        return len(self.s) + 1

    def classify(self, value: int) -> int:
        return bisect.bisect_left(self.s, value)

    def as_array(self) -> np.ndarray:
        return np.asarray(self.s, dtype=np.int64).reshape(-1)


def thresholds(values: Sequence[int] | np.ndarray, m: int) -> Thresholds:
    """M-quantiles: s_i is the smallest th with #{n <= th} / N >= (i + 1) / m."""
    if m < 1:
        raise ValueError(f"class count must be >= 1, got {m}")
    arr = np.sort(np.asarray(values, dtype=np.int64))
    n = arr.size
    if n == 0:
        raise ValueError("cannot compute thresholds of an empty list")
    out = []
    for i in range(m - 1):
        k = -(-(i + 1) * n // m)  # ceil((i+1) N / m) values must lie at or below s_i
        out.append(int(arr[k - 1]))
    return Thresholds(tuple(out))


def classify_all(values: np.ndarray, th: Thresholds) -> np.ndarray:
    return np.searchsorted(th.as_array(), np.asarray(values, dtype=np.int64), side="left")


@dataclass
class Dpeh2D:
    """Sparse 2D histogram of (e1, e2) pairs for one complexity class."""

    t: int
    bins: dict[tuple[int, int], int] = field(default_factory=dict)

    @property
    def total(self) -> int:
        return sum(self.bins.values())

    @cached_property
    def line_index(self) -> dict[int, list[tuple[int, int]]]:
        """Points grouped by intercept b = e2 - e1, ascending e1 within a line."""
        lines: dict[int, list[tuple[int, int]]] = defaultdict(list)
        for (e1, e2), count in self.bins.items():
            lines[e2 - e1].append((e1, count))
        return {b: sorted(pts) for b, pts in sorted(lines.items())}

    def line_totals(self) -> dict[int, int]:
        return {b: sum(c for _, c in pts) for b, pts in self.line_index.items()}


def build_dpehs(
    e1: Iterable[int], e2: Iterable[int], classes: Iterable[int], m: int
) -> list[Dpeh2D]:
    """Count every pixel's error pair in the histogram of its complexity class."""
    a1 = np.asarray(list(e1) if not isinstance(e1, np.ndarray) else e1, dtype=np.int64)
    a2 = np.asarray(list(e2) if not isinstance(e2, np.ndarray) else e2, dtype=np.int64)
    tt = np.asarray(list(classes) if not isinstance(classes, np.ndarray) else classes, dtype=np.int64)
    if a1.size and (np.abs(a1).max() > 255 or np.abs(a2).max() > 255):
        raise ValueError("prediction errors must lie in [-255, 255]")
    hists = [Dpeh2D(t) for t in range(m)]
    if a1.size == 0:
        return hists
    keys = (tt * 511 + (a1 + 255)) * 511 + (a2 + 255)
    uniq, counts = np.unique(keys, return_counts=True)
    for key, count in zip(uniq.tolist(), counts.tolist()):
        rest, k2 = divmod(key, 511)
        t, k1 = divmod(rest, 511)
        hists[t].bins[(k1 - 255, k2 - 255)] = count
    return hists


def valid_lines(h: Dpeh2D, hmin: int = DEFAULT_HMIN) -> list[int]:
    """Intercepts whose line carries at least ``hmin`` pixels."""
    return [b for b, total in h.line_totals().items() if total >= max(hmin, 1)]


def dump_csv(hists: Sequence[Dpeh2D], out: TextIO) -> None:
    out.write("t,e1,e2,count\n")
    for h in hists:
        for (a, b), c in sorted(h.bins.items()):
            out.write(f"{h.t},{a},{b},{c}\n")
