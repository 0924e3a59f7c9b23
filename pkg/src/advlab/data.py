"""MNIST ingestion: the IDX binary format (gzip-transparent), pixel
normalization to [0, 1], binary class subtasks, and seeded train/valid
splits."""

from __future__ import annotations

import gzip
import os
import struct
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .errors import ConfigError, DataFormatError
from .numerics import RngStream

IMAGES_MAGIC = 0x00000803
LABELS_MAGIC = 0x00000801

DEFAULT_DATA_DIR = Path("data") / "mnist"
DATA_DIR_ENV = "ADVLAB_DATA"

_TRAIN_FILES = ("train-images-idx3-ubyte", "train-labels-idx1-ubyte")
_TEST_FILES = ("t10k-images-idx3-ubyte", "t10k-labels-idx1-ubyte")


@dataclass
class Dataset:
    """Inputs in [0, 1], one row per example; integer labels (class indices,
    or +/-1 for binary subtasks); a provenance name."""

    inputs: np.ndarray
    labels: np.ndarray
    name: str = ""

    def __post_init__(self):
        self.inputs = np.asarray(self.inputs, dtype=np.float64)
        self.labels = np.asarray(self.labels, dtype=np.int64)
        if self.inputs.ndim != 2:
            raise DataFormatError("inputs must be a 2-D example matrix")
        if self.inputs.shape[0] != self.labels.shape[0]:
            raise DataFormatError(
                f"{self.inputs.shape[0]} inputs but {self.labels.shape[0]} labels"
            )

    def __len__(self) -> int:
        return self.inputs.shape[0]

    def subset(self, idx, name=None) -> "Dataset":
        return Dataset(self.inputs[idx], self.labels[idx], name or self.name)


def _read_bytes(path) -> bytes:
    path = Path(path)
    if path.suffix == ".gz":
        with gzip.open(path, "rb") as fh:
            return fh.read()
    return path.read_bytes()


def _parse_header(raw: bytes, expected_magic: int, n_dims: int, path) -> tuple:
    header = 4 * (1 + n_dims)
    if len(raw) < header:
        raise DataFormatError(f"{path}: truncated header ({len(raw)} bytes)")
    fields = struct.unpack(f">{1 + n_dims}I", raw[:header])
    if fields[0] != expected_magic:
        raise DataFormatError(
            f"{path}: bad magic 0x{fields[0]:08x}, expected 0x{expected_magic:08x}"
        )
    return fields[1:], raw[header:]


def load_idx(images_path, labels_path, name: str | None = None) -> Dataset:
    """Parse an IDX image/label file pair (plain or .gz) into a Dataset with
    pixels divided by 255."""
    (n_img, rows, cols), img_payload = _parse_header(
        _read_bytes(images_path), IMAGES_MAGIC, 3, images_path
    )
    expected = n_img * rows * cols
    if len(img_payload) != expected:
        raise DataFormatError(
            f"{images_path}: payload {len(img_payload)} bytes, expected {expected}"
        )
    (n_lbl,), lbl_payload = _parse_header(
        _read_bytes(labels_path), LABELS_MAGIC, 1, labels_path
    )
    if len(lbl_payload) != n_lbl:
        raise DataFormatError(
            f"{labels_path}: payload {len(lbl_payload)} bytes, expected {n_lbl}"
        )
    if n_img != n_lbl:
        raise DataFormatError(
            f"{n_img} images but {n_lbl} labels ({images_path}, {labels_path})"
        )
    inputs = (
        np.frombuffer(img_payload, dtype=np.uint8)
        .astype(np.float64)
        .reshape(n_img, rows * cols)
    )
    inputs /= 255.0
    labels = np.frombuffer(lbl_payload, dtype=np.uint8).astype(np.int64)
    return Dataset(inputs, labels, name or Path(images_path).stem)


def save_idx(dataset: Dataset, images_path, labels_path, rows: int = 28, cols: int = 28):
    """Write a Dataset back to an IDX pair (inverse of load_idx for data
    that came from bytes; pixel values are rescaled by 255 and rounded)."""
    n = len(dataset)
    if dataset.inputs.shape[1] != rows * cols:
        raise DataFormatError(
            f"inputs have {dataset.inputs.shape[1]} pixels, expected {rows * cols}"
        )
    if dataset.labels.min() < 0 or dataset.labels.max() > 255:
        raise DataFormatError("labels outside unsigned byte range")
    pixels = np.rint(dataset.inputs * 255.0)
    if pixels.min() < 0 or pixels.max() > 255:
        raise DataFormatError("pixel values outside [0, 1]")
    _write_bytes(
        images_path,
        struct.pack(">4I", IMAGES_MAGIC, n, rows, cols) + pixels.astype(np.uint8).tobytes(),
    )
    _write_bytes(
        labels_path,
        struct.pack(">2I", LABELS_MAGIC, n) + dataset.labels.astype(np.uint8).tobytes(),
    )


def _write_bytes(path, data: bytes):
    # gzip mtime pinned to zero so compressed output is byte-deterministic
    if str(path).endswith(".gz"):
        data = gzip.compress(data, mtime=0)
    with open(path, "wb") as fh:
        fh.write(data)


def binary_subset(d: Dataset, pos: int, neg: int) -> Dataset:
    """Keep only the two named classes, relabeled pos -> +1 and neg -> -1,
    original order preserved."""
    if pos == neg:
        raise ConfigError(f"binary subtask needs two distinct classes, got {pos} twice")
    mask_pos = d.labels == pos
    mask_neg = d.labels == neg
    if not mask_pos.any():
        raise ValueError(f"class {pos} absent from dataset {d.name!r}")
    if not mask_neg.any():
        raise ValueError(f"class {neg} absent from dataset {d.name!r}")
    keep = mask_pos | mask_neg
    labels = np.where(mask_pos[keep], 1, -1).astype(np.int64)
    return Dataset(d.inputs[keep], labels, f"{d.name}:{pos}v{neg}")


def split(d: Dataset, n_valid: int, rng: RngStream) -> tuple[Dataset, Dataset]:
    """Deterministic shuffled split into (train, valid); disjoint and
    exhaustive, each part in original relative order."""
    n = len(d)
    if not 0 < n_valid < n:
        raise ValueError(f"n_valid must be in (0, {n}), got {n_valid}")
    perm = rng.permutation(n)
    valid_idx = np.sort(perm[:n_valid])
    train_idx = np.sort(perm[n_valid:])
    return (
        d.subset(train_idx, f"{d.name}:train"),
        d.subset(valid_idx, f"{d.name}:valid"),
    )


def resolve_data_dir(cli_value: str | None = None) -> Path:
    """Data directory: CLI flag if given, else $ADVLAB_DATA, else
    ./data/mnist."""
    if cli_value:
        return Path(cli_value)
    env = os.environ.get(DATA_DIR_ENV)
    if env:
        return Path(env)
    return DEFAULT_DATA_DIR


def _find_pair(data_dir: Path, stem_images: str, stem_labels: str):
    for suffix in ("", ".gz"):
        ip = data_dir / (stem_images + suffix)
        lp = data_dir / (stem_labels + suffix)
        if ip.exists() and lp.exists():
            return ip, lp
    raise FileNotFoundError(
        f"no {stem_images}[.gz] / {stem_labels}[.gz] under {data_dir}"
    )


def load_mnist(data_dir=None) -> tuple[Dataset, Dataset]:
    """(train, test) from the canonical four IDX files, plain or gzipped."""
    data_dir = Path(data_dir) if data_dir is not None else resolve_data_dir()
    train = load_idx(*_find_pair(data_dir, *_TRAIN_FILES), name="mnist-train")
    test = load_idx(*_find_pair(data_dir, *_TEST_FILES), name="mnist-test")
    return train, test
