"""Download the publicly packaged test images and store them as 8-bit PGM.

Only Lena and Barbara are reachable through the package index; Baboon, Boat,
Airplane and Peppers must be supplied by hand (any 512x512 8-bit PGM).
Needs Pillow (``pip install .[images]``).
"""
from __future__ import annotations

import argparse
import hashlib
import io
import json
import sys
import tarfile
import urllib.parse
import urllib.request
from pathlib import Path

import numpy as np
from PIL import Image

from dpeh import GrayImage, write_pgm

INDEX = "https://pypi.org/pypi"
SOURCES = {
    # name: (project, version, member path inside the sdist)
    "lena": ("scikit-image", "0.9.3", "skimage/data/lena.png"),
    "barbara": ("pyunlocbox", "0.6.1", "doc/tutorials/barbara.png"),
}
RGB_WEIGHTS = np.array([0.2989, 0.5870, 0.1140])


def sdist_entry(project: str, version: str) -> tuple[list[str], str]:
    """Candidate download URLs and sha256 of a release's sdist."""
    meta_url = f"{INDEX}/{project}/json"
    with urllib.request.urlopen(meta_url, timeout=60) as resp:
        meta = json.load(resp)
    for entry in meta["releases"].get(version, []):
        if entry["packagetype"] == "sdist":
            url = urllib.parse.urljoin(meta_url, entry["url"])
            # some mirrors serve package files under the index host instead
            alt = urllib.parse.urljoin(meta_url, urllib.parse.urlparse(url).path)
            return [url, alt], entry["digests"]["sha256"]
    raise RuntimeError(f"{project} {version} has no sdist")


def download(urls: list[str], sha256: str) -> bytes:
    for url in urls:
        try:
            with urllib.request.urlopen(url, timeout=300) as resp:
                data = resp.read()
        except OSError as exc:
            print(f"  {url}: {exc}", file=sys.stderr)
            continue
        if hashlib.sha256(data).hexdigest() == sha256:
            return data
        print(f"  {url}: checksum mismatch", file=sys.stderr)
    raise RuntimeError("no usable download location")


def fetch_member(project: str, version: str, member: str) -> bytes:
    data = download(*sdist_entry(project, version))
    with tarfile.open(fileobj=io.BytesIO(data)) as tar:
        for info in tar.getmembers():
            if info.name.endswith(member):
                return tar.extractfile(info).read()
    raise RuntimeError(f"{member} not found in {project} {version}")


def to_gray(png: bytes) -> np.ndarray:
    arr = np.asarray(Image.open(io.BytesIO(png)))
    if arr.ndim == 3:
        arr = np.rint(arr[..., :3].astype(np.float64) @ RGB_WEIGHTS)
    return np.clip(arr, 0, 255).astype(np.uint8)


def main(argv=None) -> int:
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--out", type=Path, default=Path(__file__).resolve().parents[1] / "data" / "images")
    args = ap.parse_args(argv)
    args.out.mkdir(parents=True, exist_ok=True)
    for name, (project, version, member) in SOURCES.items():
        target = args.out / f"{name}.pgm"
        if target.exists():
            print(f"{target} exists, skipping")
            continue
        gray = to_gray(fetch_member(project, version, member))
        write_pgm(target, GrayImage(gray))
        print(f"wrote {target} {gray.shape[1]}x{gray.shape[0]} mean={gray.mean():.2f}")
    return 0


if __name__ == "__main__":
    sys.exit(main())
