import csv
import io

import numpy as np
import pytest

from _images import gradient_image
from dpeh import random_payload, read_pgm, write_pgm
from dpeh.cli import CSV_HEADER, compare_line, load_reference, main

SMALL = ["--classes", "4", "--hmin", "5"]


@pytest.fixture
def cover(tmp_path):
    path = tmp_path / "cover.pgm"
    write_pgm(path, gradient_image(64, 64))
    return path


def run(capsys, *argv):
    code = main([str(a) for a in argv])
    out, err = capsys.readouterr()
    return code, out, err


def kv(text):
    return dict(line.split("=", 1) for line in text.splitlines() if "=" in line)


@pytest.mark.parametrize("scheme", ["cpee", "mhm", "dpeh"])
def test_embed_extract_round_trip(tmp_path, cover, capsys, scheme):
    stego = tmp_path / "s.pgm"
    code, out, _ = run(capsys, "embed", "--cover", cover, "--random-bits", 400, "--seed", 1,
                       "--scheme", scheme, "--out", stego, *SMALL)
    assert code == 0
    info = kv(out)
    assert set(info) >= {"psnr", "realized_ec", "ed_star", "aux_bits", "payload_bits"}
    assert info["payload_bits"] == "400"
    code, out, _ = run(capsys, "extract", "--stego", stego, "--out-cover", tmp_path / "c.pgm",
                       "--out-payload", tmp_path / "p.txt", "--payload-format", "bits")
    assert code == 0 and kv(out)["payload_bits"] == "400"
    assert read_pgm(tmp_path / "c.pgm") == read_pgm(cover)
    assert (tmp_path / "p.txt").read_text().strip() == "".join(map(str, random_payload(400, 1).tolist()))


def test_byte_payload_file(tmp_path, cover, capsys):
    (tmp_path / "msg.bin").write_bytes(b"hello")
    assert run(capsys, "embed", "--cover", cover, "--payload", tmp_path / "msg.bin", "--out", tmp_path / "s.pgm",
               *SMALL)[0] == 0
    assert run(capsys, "extract", "--stego", tmp_path / "s.pgm", "--out-cover", tmp_path / "c.pgm",
               "--out-payload", tmp_path / "out.bin")[0] == 0
    assert (tmp_path / "out.bin").read_bytes() == b"hello"


def test_empty_payload_round_trips(tmp_path, cover, capsys):
    assert run(capsys, "embed", "--cover", cover, "--random-bits", 0, "--out", tmp_path / "s.pgm", *SMALL)[0] == 0
    code, out, _ = run(capsys, "extract", "--stego", tmp_path / "s.pgm", "--out-cover", tmp_path / "c.pgm",
                       "--out-payload", tmp_path / "p.bin")
    assert code == 0 and kv(out)["payload_bits"] == "0"
    assert read_pgm(tmp_path / "c.pgm") == read_pgm(cover)


def test_embed_is_deterministic(tmp_path, cover, capsys):
    for name in ("a.pgm", "b.pgm"):
        run(capsys, "embed", "--cover", cover, "--random-bits", 300, "--seed", 7, "--out", tmp_path / name, *SMALL)
    assert (tmp_path / "a.pgm").read_bytes() == (tmp_path / "b.pgm").read_bytes()


def test_exit_codes(tmp_path, cover, capsys):
    code, _, err = run(capsys, "embed", "--cover", tmp_path / "missing.pgm", "--random-bits", 10,
                       "--out", tmp_path / "s.pgm")
    assert code == 5 and err
    code, _, err = run(capsys, "embed", "--cover", cover, "--random-bits", 100000, "--out", tmp_path / "s.pgm")
    assert code == 3 and "capacity" in err
    code, _, _ = run(capsys, "embed", "--cover", cover, "--random-bits", -1, "--out", tmp_path / "s.pgm")
    assert code == 2
    with pytest.raises(SystemExit) as info:
        main(["embed", "--cover", str(cover)])
    assert info.value.code == 2


def test_truncated_stego_is_a_decode_error(tmp_path, cover, capsys):
    stego = tmp_path / "s.pgm"
    run(capsys, "embed", "--cover", cover, "--random-bits", 50, "--out", stego, *SMALL)
    stego.write_bytes(stego.read_bytes()[:-100])
    code, _, err = run(capsys, "extract", "--stego", stego, "--out-cover", tmp_path / "c.pgm",
                       "--out-payload", tmp_path / "p.bin")
    assert code == 5 and "truncated" in err


def test_unembedded_image_is_corrupt(tmp_path, capsys):
    # detection relies on the aux checksum, so it is probabilistic in principle
    path = tmp_path / "noise.pgm"
    from dpeh import GrayImage
    write_pgm(path, GrayImage(np.random.default_rng(3).integers(0, 256, size=(32, 32))))
    code, _, err = run(capsys, "extract", "--stego", path, "--out-cover", tmp_path / "c.pgm",
                       "--out-payload", tmp_path / "p.bin")
    assert code == 4 and "corruption" in err


def read_csv(text):
    return list(csv.DictReader(io.StringIO(text)))


def test_bench_small_grid_is_deterministic(tmp_path, capsys):
    images = tmp_path / "imgs"
    images.mkdir()
    write_pgm(images / "ramp.pgm", gradient_image(64, 64, seed=1))
    args = ["bench", "--images", images, "--capacities", "500", "--no-timing", *SMALL]
    outs = []
    for name in ("a.csv", "b.csv"):
        code, out, _ = run(capsys, *args, "--out", tmp_path / name)
        assert code == 0
        outs.append((tmp_path / name).read_bytes())
    assert outs[0] == outs[1]
    rows = read_csv(outs[0].decode())
    assert [r["scheme"] for r in rows] == ["cpee", "mhm", "dpeh"]
    assert all(float(r["psnr_db"]) > 40 and r["ms_embed"] == "" for r in rows)


def test_bench_env_dir_and_timing(tmp_path, capsys, monkeypatch):
    write_pgm(tmp_path / "ramp.pgm", gradient_image(64, 64))
    monkeypatch.setenv("DPEH_IMAGE_DIR", str(tmp_path))
    code, out, _ = run(capsys, "bench", "--schemes", "cpee", "--capacities", "500")
    assert code == 0
    (row,) = read_csv(out)
    assert row["ms_embed"].isdigit() and row["ms_extract"].isdigit()


def test_bench_empty_scheme_list_gives_header_only(tmp_path, capsys):
    write_pgm(tmp_path / "ramp.pgm", gradient_image(64, 64))
    code, out, _ = run(capsys, "bench", "--images", tmp_path, "--schemes", "")
    assert code == 0 and out == ",".join(CSV_HEADER) + "\n"


def test_bench_capacity_refusal_keeps_row_without_psnr(tmp_path, capsys):
    write_pgm(tmp_path / "ramp.pgm", gradient_image(32, 32))
    code, out, err = run(capsys, "bench", "--images", tmp_path, "--schemes", "cpee", "--capacities", "9000")
    assert code == 3 and "fail" in err
    (row,) = read_csv(out)
    assert row["psnr_db"] == "" and row["capacity_bits"] == "9000"


def test_bench_missing_image(tmp_path, capsys):
    assert run(capsys, "bench", "--images", tmp_path, "--names", "lena")[0] == 5


def test_bench_workers_keep_order(tmp_path, capsys):
    for i in range(2):
        write_pgm(tmp_path / f"im{i}.pgm", gradient_image(64, 64, seed=i))
    code, out, _ = run(capsys, "bench", "--images", tmp_path, "--schemes", "cpee,mhm", "--capacities", "300",
                       "--workers", 2, "--no-timing", *SMALL)
    assert code == 0
    rows = read_csv(out)
    assert [(r["image"], r["scheme"]) for r in rows] == [("im0", "cpee"), ("im0", "mhm"), ("im1", "cpee"),
                                                         ("im1", "mhm")]


def test_compare_line_against_reference():
    ref = load_reference()
    row = {"image": "lena", "scheme": "cpee", "capacity_bits": 10000, "psnr_db": "57.80"}
    assert compare_line(row, ref).startswith("pass")
    assert compare_line({**row, "psnr_db": "56.00"}, ref).startswith("warn")
    assert compare_line({**row, "image": "ramp"}, ref) is None


def test_dump_hist(tmp_path, cover, capsys):
    code, out, _ = run(capsys, "dump-hist", "--image", cover, "--layer", 2, *SMALL)
    assert code == 0
    lines = out.splitlines()
    assert lines[0] == "t,e1,e2,count"
    assert sum(int(l.split(",")[3]) for l in lines[1:]) == (64 - 5) * (64 - 3) // 2
