#!/usr/bin/env python3
"""Write the 5,000-image MNIST subset shipped with mlxtend (500 images per digit,
BSD-3-Clause) as a pair of IDX files.

    python3 tools/make_mnist_subset.py --out tests/data

The wheel is fetched with `pip download` unless --csv points at an already
extracted mnist_5k.csv.gz.
"""

import argparse
import glob
import gzip
import pathlib
import struct
import subprocess
import tempfile
import zipfile


def fetch_csv(workdir: pathlib.Path) -> bytes:
    subprocess.run(
        ["pip", "download", "--no-deps", "--quiet", "mlxtend", "-d", str(workdir)],
        check=True,
    )
    wheel = glob.glob(str(workdir / "mlxtend-*.whl"))[0]
    with zipfile.ZipFile(wheel) as zf:
        return zf.read("mlxtend/data/data/mnist_5k.csv.gz")


def main() -> None:
    ap = argparse.ArgumentParser()
    ap.add_argument("--out", default="tests/data")
    ap.add_argument("--csv", help="path to mnist_5k.csv.gz")
    ap.add_argument("--prefix", default="mnist5k")
    args = ap.parse_args()

    if args.csv:
        raw = pathlib.Path(args.csv).read_bytes()
    else:
        with tempfile.TemporaryDirectory() as tmp:
            raw = fetch_csv(pathlib.Path(tmp))

    images, labels = bytearray(), bytearray()
    rows = 0
    for line in gzip.decompress(raw).decode().splitlines():
        if not line.strip():
            continue
        values = [int(float(v)) for v in line.split(",")]
        assert len(values) == 785
        images.extend(values[:-1])
        labels.append(values[-1])
        rows += 1

    out = pathlib.Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    (out / f"{args.prefix}-images-idx3-ubyte").write_bytes(
        struct.pack(">IIII", 0x00000803, rows, 28, 28) + bytes(images))
    (out / f"{args.prefix}-labels-idx1-ubyte").write_bytes(
        struct.pack(">II", 0x00000801, rows) + bytes(labels))
    print(f"wrote {rows} images to {out}")


if __name__ == "__main__":
    main()
