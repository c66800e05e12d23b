"""Compiled per-pixel passes and the DP relaxation step.

These loops are sequential by nature (a pixel's context includes same-layer
pixels modified earlier in the scan), so they are JIT-compiled with numba.
Pair ids: 0 = rhombus only with fixed bins, otherwise ``PredictorPair`` values.
"""
from __future__ import annotations

import numpy as np
from numba import njit

NO_LEFT = -1000
NO_RIGHT = 1000
LINE_OFFSET = 255
N_LINES = 511
DP_INF = np.int64(1) << np.int64(60)


@njit(cache=True, inline="always")
def _abs(a):
    return a if a >= 0 else -a


@njit(cache=True)
def _predict(img, r, c, pair, edge_ge):
    """Return (rhombus prediction, second prediction, complexity)."""
    v1 = np.int64(img[r + 1, c])
    v2 = np.int64(img[r, c + 1])
    v3 = np.int64(img[r - 1, c])
    v4 = np.int64(img[r, c - 1])
    u1 = np.int64(img[r + 1, c - 2])
    u2 = np.int64(img[r, c - 2])
    u3 = np.int64(img[r - 1, c + 1])
    u4 = np.int64(img[r - 1, c - 1])
    u5 = np.int64(img[r - 1, c - 2])
    u6 = np.int64(img[r - 2, c + 1])
    u7 = np.int64(img[r - 2, c])
    u8 = np.int64(img[r - 2, c - 1])
    u9 = np.int64(img[r - 2, c - 2])
    p1 = (v1 + v2 + v3 + v4 + 3) // 4
    if pair <= 1:
        p2 = p1
    elif pair == 2:
        hi = v3 if v3 > v4 else v4
        lo = v3 if v3 < v4 else v4
        if u4 >= hi:
            p2 = lo
        elif u4 <= lo:
            p2 = hi
        else:
            p2 = v3 + v4 - u4
    else:
        if min(v1, v2) >= max(v3, v4):
            p2 = (max(v1, v2) + min(v3, v4) + 1) // 2
        elif min(v2, v3) >= max(v1, v4):
            p2 = (max(v2, v3) + min(v1, v4) + 1) // 2
        elif min(v3, v4) >= max(v1, v2):
            p2 = (max(v3, v4) + min(v1, v2) + 1) // 2
        elif min(v1, v4) >= max(v2, v3):
            p2 = (max(v1, v4) + min(v2, v3) + 1) // 2
        elif min(v1, v3) >= max(v2, v4) and edge_ge:
            p2 = (v1 + v3 + 1) // 2
        elif min(v2, v4) >= max(v1, v3) and not edge_ge:
            p2 = (v2 + v4 + 1) // 2
        else:
            p2 = p1
    if p2 < 0:
        p2 = 0
    elif p2 > 255:
        p2 = 255
    n = (_abs(v1 - p1) + _abs(v2 - p1) + _abs(v3 - p1) + _abs(v4 - p1)
         + _abs(u3 - v3) + _abs(v3 - u4) + _abs(u4 - u5) + _abs(u6 - u7)
         + _abs(u7 - u8) + _abs(u8 - u9) + _abs(v2 - u3) + _abs(u3 - u6)
         + _abs(v3 - u7) + _abs(v4 - u4) + _abs(u4 - u8) + _abs(u1 - u2)
         + _abs(u2 - u5) + _abs(u5 - u9) + _abs(v4 - u2))
    return p1, p2, n


@njit(cache=True)
def _classify(n, thresholds):
    t = 0
    for s in thresholds:
        if n > s:
            t += 1
        else:
            break
    return t


@njit(cache=True)
def layer_features(img, rows, cols, pair, edge_ge):
    """Errors under both predictors and complexity for every cell, no modification."""
    m = rows.shape[0]
    e1 = np.empty(m, np.int64)
    e2 = np.empty(m, np.int64)
    comp = np.empty(m, np.int64)
    for i in range(m):
        r = rows[i]
        c = cols[i]
        p1, p2, n = _predict(img, r, c, pair, edge_ge)
        x = np.int64(img[r, c])
        e1[i] = x - p1
        e2[i] = x - p2
        comp[i] = n
    return e1, e2, comp


@njit(cache=True)
def embed_pass(img, rows, cols, bits, pair, edge_ge, thresholds, plan_left, plan_right):
    """Embed ``bits`` in scan order, modifying ``img`` in place.

    Returns (number of processed cells, number of bits consumed).
    """
    nb = bits.shape[0]
    if nb == 0:
        return 0, 0
    pos = 0
    for i in range(rows.shape[0]):
        r = rows[i]
        c = cols[i]
        p1, p2, n = _predict(img, r, c, pair, edge_ge)
        t = _classify(n, thresholds)
        line = p1 - p2 + LINE_OFFSET
        left = plan_left[t, line]
        right = plan_right[t, line]
        if left == NO_LEFT and right == NO_RIGHT:
            continue
        x = np.int64(img[r, c])
        e = x - p1
        if e == right:
            x += bits[pos]
            pos += 1
        elif e == left:
            x -= bits[pos]
            pos += 1
        elif e > right:
            x += 1
        elif e < left:
            x -= 1
        img[r, c] = x
        if pos == nb:
            return i + 1, pos
    return rows.shape[0], pos


@njit(cache=True)
def extract_pass(img, rows, cols, n_end, pair, edge_ge, thresholds, plan_left, plan_right):
    """Undo ``embed_pass`` in reverse scan order.

    Returns (bits in embedding order, ok flag); ok is False when a restored
    value falls outside [0, 255].
    """
    out = np.empty(n_end, np.uint8)
    k = 0
    ok = True
    for i in range(n_end - 1, -1, -1):
        r = rows[i]
        c = cols[i]
        p1, p2, n = _predict(img, r, c, pair, edge_ge)
        t = _classify(n, thresholds)
        line = p1 - p2 + LINE_OFFSET
        left = plan_left[t, line]
        right = plan_right[t, line]
        if left == NO_LEFT and right == NO_RIGHT:
            continue
        x = np.int64(img[r, c])
        e = x - p1
        if e == left or e == right:
            out[k] = 0
            k += 1
        elif left != NO_LEFT and e < left:
            if e == left - 1:
                out[k] = 1
                k += 1
            x += 1
        elif right != NO_RIGHT and e > right:
            if e == right + 1:
                out[k] = 1
                k += 1
            x -= 1
        if x < 0 or x > 255:
            ok = False
            x = 0 if x < 0 else 255
        img[r, c] = x
    res = out[:k].copy()
    return res[::-1].copy(), ok


@njit(cache=True)
def relax_group(f, ecs, eds, ks, g, trans):
    """One grouped-knapsack step: ``g[j] = min(f[j], min_k f[j - ec_k] + ed_k)``.

    Strict comparisons keep the inherited value, then the earliest choice, on ties.
    """
    size = f.shape[0]
    for j in range(size):
        g[j] = f[j]
        trans[j] = -1
    for idx in range(ecs.shape[0]):
        ec = ecs[idx]
        ed = eds[idx]
        k = ks[idx]
        for j in range(ec, size):
            cand = f[j - ec] + ed
            if cand < g[j]:
                g[j] = cand
                trans[j] = k


@njit(cache=True)
def line_choices(e1, cnt, starts, ends, search):
    """Expansion choices of many lines at once, in the canonical per-line order.

    Line s holds the points ``e1[starts[s]:ends[s]]`` (ascending) with counts
    ``cnt``. Returns flat (left, right, ec, ed2) columns and line offsets.
    """
    n_lines = starts.shape[0]
    total = 0
    for s in range(n_lines):
        n = 0
        for k in range(starts[s], ends[s]):
            if -search <= e1[k] <= search:
                n += 1
        total += 2 * n + n * (n - 1) // 2
    left = np.empty(total, np.int64)
    right = np.empty(total, np.int64)
    ec = np.empty(total, np.int64)
    ed2 = np.empty(total, np.int64)
    offsets = np.empty(n_lines + 1, np.int64)
    pos = 0
    for s in range(n_lines):
        offsets[s] = pos
        a = starts[s]
        z = ends[s]
        mass = 0
        for k in range(a, z):
            mass += cnt[k]
        below = 0
        for k in range(a, z):
            p = e1[k]
            h = cnt[k]
            if -search <= p <= search:
                left[pos] = p
                right[pos] = NO_RIGHT
                ec[pos] = h
                ed2[pos] = h + 2 * below
                pos += 1
                left[pos] = NO_LEFT
                right[pos] = p
                ec[pos] = h
                ed2[pos] = h + 2 * (mass - below - h)
                pos += 1
                through = below + h
                for k2 in range(k + 1, z):
                    through += cnt[k2]
                    q = e1[k2]
                    if -search <= q <= search:
                        left[pos] = p
                        right[pos] = q
                        ec[pos] = h + cnt[k2]
                        ed2[pos] = h + cnt[k2] + 2 * (below + mass - through)
                        pos += 1
            below += h
    offsets[n_lines] = pos
    return left, right, ec, ed2, offsets
