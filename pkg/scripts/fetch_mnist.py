#!/usr/bin/env python3
"""Download the four MNIST IDX files (gzipped) into a data directory.

The repository ships the files under data/mnist already; this script exists
for fresh checkouts that exclude them or for pointing ADVLAB_DATA somewhere
else. Usage: python3 scripts/fetch_mnist.py [dest_dir]
"""

from __future__ import annotations

import sys
import urllib.error
import urllib.request
from pathlib import Path

MIRRORS = (
    "https://ossci-datasets.s3.amazonaws.com/mnist/",
    "https://storage.googleapis.com/cvdf-datasets/mnist/",
)
FILES = (
    "train-images-idx3-ubyte.gz",
    "train-labels-idx1-ubyte.gz",
    "t10k-images-idx3-ubyte.gz",
    "t10k-labels-idx1-ubyte.gz",
)


def fetch(dest: Path) -> int:
    dest.mkdir(parents=True, exist_ok=True)
    for name in FILES:
        target = dest / name
        if target.exists():
            print(f"{name}: already present")
            continue
        last_error: Exception | None = None
        for mirror in MIRRORS:
            try:
                print(f"{name}: downloading from {mirror}")
                with urllib.request.urlopen(mirror + name, timeout=60) as resp:
                    target.write_bytes(resp.read())
                break
            except (urllib.error.URLError, OSError) as exc:
                last_error = exc
        else:
            print(f"{name}: every mirror failed ({last_error})", file=sys.stderr)
            return 1
    return 0


if __name__ == "__main__":
    dest = Path(sys.argv[1]) if len(sys.argv) > 1 else Path(__file__).resolve().parent.parent / "data" / "mnist"
    sys.exit(fetch(dest))
