"""Command line front end: embed, extract, bench and dump-hist.

Exit codes: 0 ok, 2 usage, 3 capacity, 4 corruption, 5 I/O or file format.
``bench`` writes a row for every combination; it exits 4 if any round trip
failed and 3 if any combination was refused for lack of capacity.
Results are printed as ``key=value`` lines on stdout; diagnostics go to stderr.
"""
from __future__ import annotations

import argparse
import csv
import json
import os
import sys
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass
from importlib import resources
from pathlib import Path

import numpy as np

from . import _kernels as K
from .codec import EmbedConfig, embed, extract, psnr, random_payload
from .errors import CapacityError, CorruptionError, PGMDecodeError, RDHError
from .histograms import build_dpehs, classify_all, dump_csv, thresholds
from .pixels import partition, preprocess_saturation, read_pgm, write_pgm
from .predictors import PredictorPair, edge_intensities

EXIT_OK, EXIT_USAGE, EXIT_CAPACITY, EXIT_CORRUPT, EXIT_IO = 0, 2, 3, 4, 5
IMAGE_DIR_ENV = "DPEH_IMAGE_DIR"
CSV_HEADER = ["image", "scheme", "capacity_bits", "realized_ec", "psnr_db", "aux_bits", "ms_embed", "ms_extract"]
PAIRS = {p.name.lower(): p for p in PredictorPair}


def _config(args) -> EmbedConfig:
    return EmbedConfig(
        scheme=args.scheme, m=args.classes, hmin=args.hmin, delta=args.delta,
        pair=PAIRS[args.pair], search=args.search, objective=args.objective,
        aux_weight=args.aux_weight,
    )


def _read_payload(args) -> np.ndarray:
    if args.payload is not None:
        raw = Path(args.payload).read_bytes()
        if args.payload_format == "bits":
            text = raw.decode("ascii").strip()
            if set(text) - {"0", "1"}:
                raise ValueError("bit payload files may only contain 0 and 1")
            return np.frombuffer(text.encode(), dtype=np.uint8) - ord("0")
        return np.unpackbits(np.frombuffer(raw, dtype=np.uint8))
    return random_payload(args.random_bits, args.seed)


def _write_payload(path: str, bits: np.ndarray, fmt: str) -> None:
    if fmt == "bits":
        Path(path).write_text("".join(map(str, bits.tolist())) + "\n")
    else:
        Path(path).write_bytes(np.packbits(bits).tobytes())


def cmd_embed(args) -> int:
    cover = read_pgm(args.cover)
    bits = _read_payload(args)
    stego = embed(cover, bits, _config(args))
    write_pgm(args.out, stego.image)
    print(f"scheme={args.scheme}")
    print(f"payload_bits={bits.size}")
    print(f"realized_ec={stego.realized_ec}")
    print(f"ed_star={stego.ed_star:g}")
    print(f"aux_bits={stego.aux_bits}")
    print(f"n_end={','.join(str(l.n_end) for l in stego.layers)}")
    print(f"psnr={psnr(cover, stego.image):.4f}")
    return EXIT_OK


def cmd_extract(args) -> int:
    stego = read_pgm(args.stego)
    bits, cover = extract(stego)
    write_pgm(args.out_cover, cover)
    _write_payload(args.out_payload, bits, args.payload_format)
    print(f"payload_bits={bits.size}")
    return EXIT_OK


# --- bench -----------------------------------------------------------------

@dataclass(frozen=True)
class BenchJob:
    image: str
    path: str
    scheme: str
    capacity: int
    seed: int
    config: EmbedConfig
    timing: bool = True


def run_job(job: BenchJob) -> dict:
    """Embed, extract and verify one combination; PSNR only for verified runs."""
    cover = read_pgm(job.path)
    bits = random_payload(job.capacity, job.seed)
    row = {"image": job.image, "scheme": job.scheme, "capacity_bits": job.capacity,
           "realized_ec": "", "psnr_db": "", "aux_bits": "", "ms_embed": "", "ms_extract": "",
           "error": ""}
    t0 = time.perf_counter()
    try:
        stego = embed(cover, bits, job.config)
    except CapacityError as exc:
        row["error"] = f"capacity: {exc}"
        return row
    t1 = time.perf_counter()
    try:
        got, restored = extract(stego.image)
    except CorruptionError as exc:
        row["error"] = f"round-trip: {exc}"
        return row
    t2 = time.perf_counter()
    if not (np.array_equal(got, bits) and restored == cover):
        row["error"] = "round-trip: payload or cover mismatch"
        return row
    row.update(realized_ec=stego.realized_ec, psnr_db=f"{psnr(cover, stego.image):.4f}", aux_bits=stego.aux_bits)
    if job.timing:
        row.update(ms_embed=f"{(t1 - t0) * 1e3:.0f}", ms_extract=f"{(t2 - t1) * 1e3:.0f}")
    return row


def load_reference() -> dict:
    text = resources.files("dpeh").joinpath("data/reference_psnr.json").read_text()
    return json.loads(text)


def compare_line(row: dict, ref: dict) -> str | None:
    """``pass``/``warn`` verdict of one bench row against the published value, if any."""
    published = ref["psnr"].get(str(row["capacity_bits"]), {}).get(row["image"], {}).get(row["scheme"])
    if published is None or not row["psnr_db"]:
        return None
    tol = ref["tolerance_db"].get(row["scheme"], 0.6)
    diff = float(row["psnr_db"]) - published
    verdict = "pass" if abs(diff) <= tol else "warn"
    return (f"{verdict} image={row['image']} scheme={row['scheme']} capacity={row['capacity_bits']} "
            f"psnr={float(row['psnr_db']):.2f} reference={published:.2f} diff={diff:+.2f} tolerance={tol}")


def _split(text: str) -> list[str]:
    return [s for s in (p.strip() for p in text.split(",")) if s]


def cmd_bench(args) -> int:
    image_dir = Path(args.images or os.environ.get(IMAGE_DIR_ENV) or "data/images")
    if not image_dir.is_dir():
        raise FileNotFoundError(f"image directory {image_dir} not found")
    names = _split(args.names) if args.names else sorted(p.stem for p in image_dir.glob("*.pgm"))
    for name in names:
        if not (image_dir / f"{name}.pgm").is_file():
            raise FileNotFoundError(f"{image_dir / (name + '.pgm')} not found")
    schemes = _split(args.schemes)
    capacities = [int(c) for c in _split(args.capacities)]
    base = _config(argparse.Namespace(**{**vars(args), "scheme": "dpeh"}))
    jobs = [
        BenchJob(name, str(image_dir / f"{name}.pgm"), scheme, cap, args.seed,
                 EmbedConfig(**{**base.__dict__, "scheme": scheme}), not args.no_timing)
        for name in names for scheme in schemes for cap in capacities
    ]
    if args.workers > 1 and len(jobs) > 1:
        with ProcessPoolExecutor(args.workers) as pool:
            rows = list(pool.map(run_job, jobs))  # map keeps submission order
    else:
        rows = []
        for job in jobs:
            rows.append(run_job(job))
            print(f"done image={job.image} scheme={job.scheme} capacity={job.capacity}", file=sys.stderr)

    out = open(args.out, "w", newline="") if args.out else sys.stdout
    try:
        writer = csv.DictWriter(out, fieldnames=CSV_HEADER, extrasaction="ignore", lineterminator="\n")
        writer.writeheader()
        writer.writerows(rows)
    finally:
        if out is not sys.stdout:
            out.close()

    ref = load_reference()
    status = EXIT_OK
    for row in rows:
        if row["error"]:
            print(f"fail image={row['image']} scheme={row['scheme']} capacity={row['capacity_bits']} "
                  f"error={row['error']}", file=sys.stderr)
            if row["error"].startswith("round-trip"):
                status = EXIT_CORRUPT
            elif status == EXIT_OK:
                status = EXIT_CAPACITY
            continue
        line = compare_line(row, ref)
        if line and args.out:
            print(line)
    return status


# --- histogram dump --------------------------------------------------------

def cmd_dump_hist(args) -> int:
    cfg = _config(args)
    img, _ = preprocess_saturation(read_pgm(args.image))
    part = partition(img)[args.layer - 1]
    pixels = img.pixels
    edge = cfg.pair_id == PredictorPair.NONLINEAR and bool(np.greater_equal(*edge_intensities(pixels)))
    e1, e2, comp = K.layer_features(pixels, part.rows, part.cols, cfg.pair_id, edge)
    th = thresholds(comp, cfg.classes)
    hists = build_dpehs(e1, e2, classify_all(comp, th), cfg.classes)
    if args.out:
        with open(args.out, "w") as fh:
            dump_csv(hists, fh)
    else:
        dump_csv(hists, sys.stdout)
    return EXIT_OK


# --- parser ----------------------------------------------------------------

def _add_config(p: argparse.ArgumentParser) -> None:
    p.add_argument("--scheme", choices=["dpeh", "mhm", "cpee"], default="dpeh")
    p.add_argument("--classes", "-M", type=int, default=16, help="complexity classes M")
    p.add_argument("--hmin", "-H", type=int, default=20, help="least pixels on a valid line")
    p.add_argument("--delta", type=int, default=2000, help="DP capacity headroom")
    p.add_argument("--pair", choices=sorted(PAIRS), default="nonlinear", help="second predictor")
    p.add_argument("--search", type=int, default=14, help="bin abscissae range [-search, search]")
    p.add_argument("--objective", choices=["total", "ratio"], default="total")
    p.add_argument("--aux-weight", type=int, default=EmbedConfig.aux_weight,
                   help="distortion charged per estimated aux bit of a line (half units)")


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="dpeh", description="Reversible data hiding in 8-bit PGM images.")
    sub = ap.add_subparsers(dest="command", required=True)

    p = sub.add_parser("embed", help="hide a payload in a cover image")
    p.add_argument("--cover", required=True)
    src = p.add_mutually_exclusive_group(required=True)
    src.add_argument("--payload", help="payload file")
    src.add_argument("--random-bits", type=int, help="embed N seeded random bits")
    p.add_argument("--payload-format", choices=["bytes", "bits"], default="bytes",
                   help="payload file holds raw bytes or ASCII 0/1 characters")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", required=True)
    _add_config(p)
    p.set_defaults(func=cmd_embed)

    p = sub.add_parser("extract", help="recover payload and cover")
    p.add_argument("--stego", required=True)
    p.add_argument("--out-cover", required=True)
    p.add_argument("--out-payload", required=True)
    p.add_argument("--payload-format", choices=["bytes", "bits"], default="bytes")
    p.set_defaults(func=cmd_extract)

    p = sub.add_parser("bench", help="embed/extract grid with CSV report")
    p.add_argument("--images", help=f"directory of PGM files (default ${IMAGE_DIR_ENV} or data/images)")
    p.add_argument("--names", help="comma-separated image stems (default: every .pgm)")
    p.add_argument("--schemes", default="cpee,mhm,dpeh")
    p.add_argument("--capacities", default="10000,20000")
    p.add_argument("--seed", type=int, default=1)
    p.add_argument("--workers", type=int, default=1)
    p.add_argument("--out", help="CSV path (default stdout)")
    p.add_argument("--no-timing", action="store_true",
                   help="leave the ms_* columns empty so repeated runs give byte-identical CSV")
    _add_config(p)
    p.set_defaults(func=cmd_bench)

    p = sub.add_parser("dump-hist", help="write one layer's 2D histograms as CSV")
    p.add_argument("--image", required=True)
    p.add_argument("--layer", type=int, choices=[1, 2], default=1)
    p.add_argument("--out")
    _add_config(p)
    p.set_defaults(func=cmd_dump_hist)
    return ap


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    if getattr(args, "random_bits", None) is not None and args.random_bits < 0:
        print("error: --random-bits must be non-negative", file=sys.stderr)
        return EXIT_USAGE
    try:
        return args.func(args)
    except CapacityError as exc:
        print(f"capacity error: {exc}", file=sys.stderr)
        return EXIT_CAPACITY
    except CorruptionError as exc:
        print(f"corruption error: {exc}", file=sys.stderr)
        return EXIT_CORRUPT
    except (OSError, PGMDecodeError) as exc:
        print(f"i/o error: {exc}", file=sys.stderr)
        return EXIT_IO
    except (RDHError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
