"""Acceptance criteria, one test each; every test records a PASS/FAIL line.

Benchmark images are read from ``$DPEH_IMAGE_DIR`` (default ``data/images``),
see ``scripts/fetch_images.py``. A missing image counts against its criterion.
"""
import time
from functools import lru_cache

import numpy as np
import pytest

from _images import random_image
from _report import verdict
from conftest import IMAGE_DIR
from dpeh import (
    CapacityError, EmbedConfig, PredictorPair, capacity_estimate, embed, extract, psnr, random_payload, read_pgm,
)
from dpeh.aux import MAX_AUX_BITS, NO_LEFT, NO_RIGHT, AuxInfo, LayerAux, aux_length, deserialize_aux, serialize_aux
from dpeh.cli import load_reference
from dpeh.optimizer import BinChoice, dp_backtrack, dp_forward, dp_rolling, enumerate_choices, exhaustive_search
from dpeh.errors import InfeasibleError

REF = load_reference()
IMAGES = REF["images"]
SEED = 1


@lru_cache(maxsize=None)
def bench_run(name: str, scheme: str, n: int):
    """(psnr, aux bits, seconds, round trip ok) or None when the image is not available."""
    path = IMAGE_DIR / f"{name}.pgm"
    if not path.is_file():
        return None
    cover = read_pgm(path)
    bits = random_payload(n, SEED)
    t0 = time.perf_counter()
    stego = embed(cover, bits, EmbedConfig(scheme=scheme))
    seconds = time.perf_counter() - t0
    payload, restored = extract(stego.image)
    ok = np.array_equal(payload, bits) and restored == cover
    return psnr(cover, stego.image), stego.aux_bits, seconds, ok


# --- reversibility --------------------------------------------------------

def embed_some(cover, cfg, n):
    """Embed up to ``n`` bits, halving on refusal; returns (stego, bits) or None if even 0 bits is refused."""
    while True:
        bits = random_payload(n, n)
        try:
            return embed(cover, bits, cfg), bits
        except CapacityError:
            if n == 0:
                return None
            n //= 2


def test_reversibility_suite():
    rng = np.random.default_rng(2024)
    t0 = time.perf_counter()
    stats = {s: {"ok": 0, "empty": 0, "refused": 0} for s in ("cpee", "mhm", "dpeh")}
    failures = []
    for i in range(1000):
        cover = random_image(rng, 16, 64)
        for scheme in stats:
            cfg = EmbedConfig(
                scheme=scheme, m=int(rng.choice([1, 2, 4, 8, 16])), hmin=int(rng.choice([1, 5, 20])),
                pair=PredictorPair(int(rng.integers(1, 4))),
            )
            limit = int(0.8 * capacity_estimate(cover, cfg))
            got = embed_some(cover, cfg, int(rng.integers(0, limit + 1)))
            if got is None:
                stats[scheme]["refused"] += 1
                continue
            stego, bits = got
            payload, restored = extract(stego.image)
            if not (np.array_equal(payload, bits) and restored == cover):
                failures.append((i, scheme))
            stats[scheme]["ok" if bits.size else "empty"] += 1
    elapsed = time.perf_counter() - t0
    summary = "; ".join(f"{s} {v['ok']} payload / {v['empty']} empty / {v['refused']} refused"
                        for s, v in stats.items())
    exercised = all(v["ok"] >= 250 for v in stats.values())
    verdict("reversibility suite", not failures and exercised and elapsed < 120,
            f"{len(failures)} mismatches over 3000 image/scheme runs ({summary}); {elapsed:.0f} s")


# --- DP optimality ----------------------------------------------------------

def test_dp_optimality():
    rng = np.random.default_rng(7)
    t0 = time.perf_counter()
    bad = []
    targets = 0
    for inst in range(500):
        groups = []
        for g in range(int(rng.integers(1, 6))):
            k = int(rng.integers(1, 9))
            groups.append([BinChoice(0, g, 0, 0, int(rng.integers(1, 50)), int(rng.integers(0, 200)))
                           for _ in range(k)])
        best, _, _ = exhaustive_search(groups, 0)
        # delta exceeds every capacity here, so the trimmed two-table pass is target independent
        tables = dp_forward(groups, 0)
        for ec_exp in range(max(best) + 2):
            feasible = [(ed, ec) for ec, ed in best.items() if ec >= ec_exp]
            try:
                two = dp_backtrack(tables, groups, ec_exp)
                roll = dp_rolling(groups, ec_exp)
            except InfeasibleError:
                if feasible:
                    bad.append((inst, ec_exp, "infeasible"))
                continue
            targets += 1
            if not feasible or (two.ed2_star, two.ec_star) != min(feasible):
                bad.append((inst, ec_exp, "not optimal"))
            if roll.choices != two.choices or roll.ed2_star != two.ed2_star:
                bad.append((inst, ec_exp, "rolling differs"))
    elapsed = time.perf_counter() - t0
    verdict("DP optimality", not bad and elapsed < 30,
            f"500 instances, {targets} feasible targets, {len(bad)} disagreements; {elapsed:.1f} s")


# --- worked example ---------------------------------------------------------

def test_worked_example():
    line = [(-16, 150), (0, 100), (1, 300), (5, 200), (12, 250)]
    pairs = {(c.ec, c.ed) for c in enumerate_choices(line, 0, 3)}
    want = [(300, 400), (300, 600), (500, 750), (550, 525)]
    missing = [p for p in want if p not in pairs]
    verdict("worked example", not missing, f"found {len(want) - len(missing)} of 4 (EC, ED) pairs")


# --- PSNR regressions -------------------------------------------------------

def psnr_rows(scheme, capacities):
    rows, ok = [], True
    for cap in capacities:
        for name in IMAGES:
            ref = REF["psnr"][str(cap)][name][scheme]
            tol = REF["tolerance_db"][scheme]
            got = bench_run(name, scheme, cap)
            if got is None:
                rows.append(f"{name}@{cap} missing")
                ok = False
                continue
            value, _, seconds, rt = got
            good = rt and abs(value - ref) <= tol and (scheme != "dpeh" or seconds <= 60)
            ok &= good
            rows.append(f"{name}@{cap} {value:.2f} vs {ref:.2f}{'' if good else ' x'} ({seconds:.0f} s)")
    return ok, ", ".join(rows)


def test_cpee_psnr():
    ok, detail = psnr_rows("cpee", [10000])
    verdict("C-PEE PSNR within 0.25 dB", ok, detail)


def test_proposed_psnr():
    ok, detail = psnr_rows("dpeh", [10000, 20000])
    verdict("proposed PSNR within 0.6 dB, each run <= 60 s", ok, detail)


# --- MHM equivalence ----------------------------------------------------------

def test_mhm_equivalence():
    rng = np.random.default_rng(99)
    same = embedded = 0
    for i in range(50):
        cover = random_image(rng, 32, 96)
        mhm = EmbedConfig(scheme="mhm", m=int(rng.choice([1, 2, 4])), hmin=5)
        twin = EmbedConfig(scheme="dpeh", pair=PredictorPair.IDENTICAL, m=mhm.m, hmin=5)
        n = int(rng.integers(0, int(0.6 * capacity_estimate(cover, mhm)) + 1))
        bits = random_payload(n, i)
        outcomes = []
        for cfg in (mhm, twin):
            try:
                outcomes.append(embed(cover, bits, cfg).image)
            except CapacityError:
                outcomes.append(None)
        if outcomes[0] is None:
            same += outcomes[1] is None
        else:
            embedded += 1
            same += outcomes[1] is not None and outcomes[0] == outcomes[1]
    verdict("MHM equivalence", same == 50 and embedded >= 25,
            f"{same}/50 identical outcomes, {embedded} with a stego image")


# --- aux ----------------------------------------------------------------------

def random_aux(rng, width, height):
    pair = int(rng.integers(0, 4))
    m = 1 if pair == 0 else int(rng.integers(1, 17))

    def layer():
        n_end = int(rng.integers(0, width * height + 1))
        if pair == 0:
            return LayerAux(n_end)
        th = tuple(sorted(int(v) for v in rng.integers(0, 300, size=m - 1)))
        keys = {(int(rng.integers(0, m)), int(rng.integers(-255, 256)) if pair >= 2 else 0)
                for _ in range(int(rng.integers(0, 10)))}
        bins = []
        for t, b in sorted(keys):
            kind = int(rng.integers(0, 3))
            lo = int(rng.integers(-255, 255)) if kind != 1 else NO_LEFT
            hi = int(rng.integers((lo + 1) if lo != NO_LEFT else -255, 256)) if kind != 0 else NO_RIGHT
            bins.append((t, b, lo, hi))
        return LayerAux(n_end, bool(rng.integers(0, 2)) if pair == 3 else False, th, tuple(bins))

    clm = tuple(int(v) for v in rng.integers(0, 2, size=int(rng.integers(0, 60))))
    return AuxInfo(pair, m, (layer(), layer()), clm)


def test_aux_round_trip_and_size():
    rng = np.random.default_rng(5)
    width, height = 512, 512
    identical = 0
    for _ in range(100):
        a = random_aux(rng, width, height)
        need = aux_length(a, width, height)
        sized = AuxInfo(a.pair, a.m, a.layers, a.clm_bits, a.codec_id,
                        min(MAX_AUX_BITS, need + int(rng.integers(0, 30))))
        identical += deserialize_aux(serialize_aux(sized, width, height), width, height) == sized
    lena = bench_run("lena", "dpeh", 10000)
    size_ok = lena is not None and lena[1] <= 2 * 512
    size = "missing" if lena is None else f"{lena[1]} bits"
    verdict("aux round trip and size", identical == 100 and size_ok,
            f"{identical}/100 identical; Lena s_aux at 10000 bits = {size} (limit 1024)")


# --- comparison with the MHM reference column ---------------------------------------

def test_proposed_beats_mhm_reference():
    parts, ok = [], True
    for cap in (10000, 20000):
        wins = 0
        for name in IMAGES:
            got = bench_run(name, "dpeh", cap)
            wins += got is not None and got[3] and got[0] > REF["psnr"][str(cap)][name]["mhm"]
        ok &= wins >= 5
        parts.append(f"{wins}/6 at {cap}")
    verdict("proposed above the MHM reference on >= 5 of 6 images", ok, ", ".join(parts))


if __name__ == "__main__":
    raise SystemExit(pytest.main([__file__, "-q"]))
