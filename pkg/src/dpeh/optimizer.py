"""Expansion-bin selection as a grouped knapsack solved by dynamic programming.

Every (class, line) pair is one group; a group contributes at most one
``BinChoice``. Distortions are kept in half units (``ed2 = 2 * ED``) so the
half-capacity term stays integral and DP ties are exact.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Literal, Sequence, Union

import numpy as np

from . import _kernels as K
from .errors import InfeasibleError
from .histograms import DEFAULT_HMIN, Dpeh2D, valid_lines

NEG_INF = K.NO_LEFT
POS_INF = K.NO_RIGHT
DEFAULT_DELTA = 2000
DEFAULT_SEARCH = 14
INF = int(K.DP_INF)

Objective = Literal["total", "ratio"]


@dataclass(frozen=True)
class BinChoice:
    """Expansion abscissae (left, right) on line (t, b); sentinels mean "no bin on that side"."""

    t: int
    b: int
    left: int
    right: int
    ec: int
    ed2: int

    @property
    def ed(self) -> float:
        return self.ed2 / 2


@dataclass(frozen=True)
class DpTables:
    f: np.ndarray      # (groups + 1, capacity + 1), row g is the state after g groups
    trans: np.ndarray  # (groups, capacity + 1), chosen choice index or -1


@dataclass
class BinPlan:
    bins: dict[tuple[int, int], tuple[int, int]] = field(default_factory=dict)
    ec_star: int = 0
    ed2_star: int = 0
    choices: list[BinChoice | None] = field(default_factory=list)

    @property
    def ed_star(self) -> float:
        return self.ed2_star / 2

    def arrays(self, m: int) -> tuple[np.ndarray, np.ndarray]:
        left = np.full((m, K.N_LINES), K.NO_LEFT, dtype=np.int64)
        right = np.full((m, K.N_LINES), K.NO_RIGHT, dtype=np.int64)
        for (t, b), (lo, hi) in self.bins.items():
            left[t, b + K.LINE_OFFSET] = lo
            right[t, b + K.LINE_OFFSET] = hi
        return left, right


# --- choice enumeration ----------------------------------------------------

class ChoiceGroup:
    """All choices of one line, stored column-wise; indexing yields ``BinChoice``."""

    __slots__ = ("t", "b", "left", "right", "ec", "ed2")

    def __init__(self, t: int, b: int, left, right, ec, ed2):
        self.t, self.b = int(t), int(b)
        self.left = np.asarray(left, dtype=np.int64)
        self.right = np.asarray(right, dtype=np.int64)
        self.ec = np.asarray(ec, dtype=np.int64)
        self.ed2 = np.asarray(ed2, dtype=np.int64)

    @classmethod
    def from_choices(cls, choices: Sequence[BinChoice], t: int = 0, b: int = 0) -> "ChoiceGroup":
        if choices:
            t, b = choices[0].t, choices[0].b
        cols = [[getattr(c, f) for c in choices] for f in ("left", "right", "ec", "ed2")]
        return cls(t, b, *cols)

    def __len__(self) -> int:
        return int(self.ec.size)

    def __getitem__(self, k: int) -> BinChoice:
        return BinChoice(self.t, self.b, int(self.left[k]), int(self.right[k]), int(self.ec[k]), int(self.ed2[k]))

    def __iter__(self):
        return (self[k] for k in range(len(self)))

    def with_extra_cost(self, extra: np.ndarray) -> "ChoiceGroup":
        return ChoiceGroup(self.t, self.b, self.left, self.right, self.ec, self.ed2 + extra)


def line_group(
    line: Sequence[tuple[int, int]], t: int = 0, b: int = 0, search: int = DEFAULT_SEARCH
) -> ChoiceGroup:
    """All single-sided and two-sided expansion choices on one line, in canonical order.

    ``line`` is the (e1, count) list of the line's points. Endpoints are
    restricted to [-search, search]; points outside still count as shifted
    mass. For each endpoint p (ascending) the order is (p, +inf), (-inf, p),
    then (p, q) for every q > p; the DP breaks ties by this order.
    """
    pts = sorted(line)
    e1s = np.array([p for p, _ in pts], dtype=np.int64)
    counts = np.array([c for _, c in pts], dtype=np.int64)
    left, right, ec, ed2, _ = K.line_choices(
        e1s, counts, np.zeros(1, np.int64), np.array([len(pts)], np.int64), search
    )
    return ChoiceGroup(t, b, left, right, ec, ed2)


def enumerate_choices(
    line: Sequence[tuple[int, int]], t: int = 0, b: int = 0, search: int = DEFAULT_SEARCH
) -> list[BinChoice]:
    """``line_group`` as a list of ``BinChoice`` records."""
    return list(line_group(line, t, b, search))


def point_groups(
    t: np.ndarray, b: np.ndarray, e1: np.ndarray, count: np.ndarray,
    hmin: int = DEFAULT_HMIN, search: int = DEFAULT_SEARCH,
) -> list[ChoiceGroup]:
    """Choice groups of every valid line from histogram points sorted by (t, b, e1).

    Lines with fewer than ``hmin`` pixels are skipped; groups come out in
    (t ascending, b ascending) order.
    """
    if t.size == 0:
        return []
    new_line = np.ones(t.size, dtype=bool)
    new_line[1:] = (t[1:] != t[:-1]) | (b[1:] != b[:-1])
    starts = np.flatnonzero(new_line)
    ends = np.append(starts[1:], t.size)
    totals = np.add.reduceat(count, starts)
    keep = totals >= max(hmin, 1)
    starts, ends = starts[keep], ends[keep]
    left, right, ec, ed2, off = K.line_choices(e1, count, starts, ends, search)
    return [
        ChoiceGroup(t[a], b[a], left[lo:hi], right[lo:hi], ec[lo:hi], ed2[lo:hi])
        for a, lo, hi in zip(starts.tolist(), off[:-1].tolist(), off[1:].tolist())
    ]


def histogram_groups(
    hists: Sequence[Dpeh2D], hmin: int = DEFAULT_HMIN, search: int = DEFAULT_SEARCH
) -> list[ChoiceGroup]:
    """Choice groups for every valid line, in (t ascending, b ascending) order."""
    rows = sorted((h.t, e2 - e1, e1, c) for h in hists for (e1, e2), c in h.bins.items())
    cols = np.array(rows, dtype=np.int64).reshape(-1, 4).T
    return point_groups(cols[0], cols[1], cols[2], cols[3], hmin, search)


Group = Union[ChoiceGroup, Sequence[BinChoice]]


def _columns(group: Group) -> tuple[np.ndarray, np.ndarray]:
    if isinstance(group, ChoiceGroup):
        return group.ec, group.ed2
    return (np.array([c.ec for c in group], dtype=np.int64),
            np.array([c.ed2 for c in group], dtype=np.int64))


# --- dynamic programming ---------------------------------------------------

def _group_arrays(group: Group, size: int):
    """Choices that fit the table, keeping the first cheapest one per capacity value.

    Dropping a choice with the same capacity and no lower distortion cannot
    change any table value or transfer under the strict-improvement rule.
    """
    ec, ed = _columns(group)
    k = np.arange(ec.size, dtype=np.int64)
    fit = ec < size
    ec, ed, k = ec[fit], ed[fit], k[fit]
    order = np.lexsort((k, ed, ec))
    first = np.ones(order.size, dtype=bool)
    first[1:] = ec[order][1:] != ec[order][:-1]
    keep = np.sort(order[first])
    return ec[keep], ed[keep], k[keep]


def _table_size(groups: Sequence[Group], ec_exp: int, delta: int) -> int:
    """Columns 0..ec_exp+delta, trimmed where no selection can reach (those stay infinite)."""
    return min(ec_exp + delta, max(ec_exp, _max_capacity(groups))) + 1


def _initial(size: int) -> np.ndarray:
    f = np.full(size, INF, dtype=np.int64)
    f[0] = 0
    return f


def dp_forward(groups: Sequence[Group], ec_exp: int, delta: int = DEFAULT_DELTA) -> DpTables:
    """Full state tables: f[g, j] is the least distortion of the first g groups at capacity exactly j."""
    size = _table_size(groups, ec_exp, delta)
    f = np.empty((len(groups) + 1, size), dtype=np.int64)
    trans = np.empty((len(groups), size), dtype=np.int32)
    f[0] = _initial(size)
    tr = np.empty(size, dtype=np.int64)
    for g, group in enumerate(groups):
        ecs, eds, ks = _group_arrays(group, size)
        K.relax_group(f[g], ecs, eds, ks, f[g + 1], tr)
        trans[g] = tr
    return DpTables(f, trans)


def _select_capacity(final: np.ndarray, ec_exp: int, objective: Objective) -> int:
    tail = final[ec_exp:]
    finite = tail < INF
    if not finite.any():
        return -1
    if objective == "ratio" and ec_exp > 0:
        js = np.arange(ec_exp, final.size)
        ratio = np.where(finite, tail / np.maximum(js, 1), np.inf)
        return ec_exp + int(np.argmin(ratio))
    return ec_exp + int(np.argmin(tail))


def _max_capacity(groups: Sequence[Group]) -> int:
    return int(sum(_columns(g)[0].max(initial=0) for g in groups))


def dp_backtrack(
    tables: DpTables, groups: Sequence[Group], ec_exp: int, objective: Objective = "total"
) -> BinPlan:
    final = tables.f[-1]
    j = _select_capacity(final, ec_exp, objective)
    if j < 0:
        raise InfeasibleError(f"no bin selection reaches {ec_exp} bits", _max_capacity(groups))
    plan = BinPlan(ec_star=j, ed2_star=int(final[j]), choices=[None] * len(groups))
    for g in range(len(groups) - 1, -1, -1):
        k = int(tables.trans[g, j])
        if k >= 0:
            c = groups[g][k]
            plan.choices[g] = c
            plan.bins[(c.t, c.b)] = (c.left, c.right)
            j -= c.ec
    assert j == 0, "backtracking must end at zero capacity"
    return plan


def dp_rolling(
    groups: Sequence[Group],
    ec_exp: int,
    delta: int = DEFAULT_DELTA,
    objective: Objective = "total",
) -> BinPlan:
    """Same plan as ``dp_forward`` + ``dp_backtrack`` with one capacity-indexed row.

    Transfers are kept per group only at capacities where a choice was taken.
    """
    size = _table_size(groups, ec_exp, delta)
    f = _initial(size)
    g_row = np.empty(size, dtype=np.int64)
    tr = np.empty(size, dtype=np.int64)
    records: list[tuple[np.ndarray, np.ndarray]] = []
    for group in groups:
        ecs, eds, ks = _group_arrays(group, size)
        if ecs.size == 0:
            records.append((np.zeros(0, np.int64), np.zeros(0, np.int64)))
            continue
        K.relax_group(f, ecs, eds, ks, g_row, tr)
        js = np.flatnonzero(tr >= 0)
        records.append((js, tr[js].copy()))
        f, g_row = g_row, f
    j = _select_capacity(f, ec_exp, objective)
    if j < 0:
        raise InfeasibleError(f"no bin selection reaches {ec_exp} bits", _max_capacity(groups))
    plan = BinPlan(ec_star=j, ed2_star=int(f[j]), choices=[None] * len(groups))
    for g in range(len(groups) - 1, -1, -1):
        js, ks = records[g]
        pos = int(np.searchsorted(js, j))
        if pos < js.size and js[pos] == j:
            c = groups[g][int(ks[pos])]
            plan.choices[g] = c
            plan.bins[(c.t, c.b)] = (c.left, c.right)
            j -= c.ec
    return plan


def exhaustive_search(groups: Sequence[Group], ec_exp: int) -> tuple[dict[int, int], int, int]:
    """Brute-force oracle for tiny instances.

    Returns ({capacity: least distortion}, best capacity, its distortion) where
    the best capacity is the smallest capacity >= ec_exp of least distortion.
    """
    ec_all = np.zeros(1, dtype=np.int64)
    ed_all = np.zeros(1, dtype=np.int64)
    for group in groups:
        ec, ed = _columns(group)
        # every combination so far, extended by "nothing" or one choice of this group
        ec_all = np.add.outer(ec_all, np.concatenate(([0], ec))).ravel()
        ed_all = np.add.outer(ed_all, np.concatenate(([0], ed))).ravel()
    order = np.lexsort((ed_all, ec_all))
    ec_sorted, ed_sorted = ec_all[order], ed_all[order]
    first = np.ones(order.size, dtype=bool)
    first[1:] = ec_sorted[1:] != ec_sorted[:-1]
    best = dict(zip(ec_sorted[first].tolist(), ed_sorted[first].tolist()))
    feasible = [(ed, ec) for ec, ed in best.items() if ec >= ec_exp]
    if not feasible:
        return best, -1, INF
    ed, ec = min(feasible)
    return best, ec, ed


def optimize(
    hists: Sequence[Dpeh2D],
    ec_exp: int,
    hmin: int = DEFAULT_HMIN,
    delta: int = DEFAULT_DELTA,
    search: int = DEFAULT_SEARCH,
    objective: Objective = "total",
) -> BinPlan:
    return dp_rolling(histogram_groups(hists, hmin, search), ec_exp, delta, objective)
