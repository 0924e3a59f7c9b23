import gzip
import struct

import numpy as np
import pytest

from advlab.data import (
    DATA_DIR_ENV,
    Dataset,
    binary_subset,
    load_idx,
    load_mnist,
    resolve_data_dir,
    save_idx,
    split,
)
from advlab.errors import ConfigError, DataFormatError
from advlab.numerics import RngStream


def synth_dataset(n=30, seed=0):
    rng = np.random.default_rng(seed)
    pixels = rng.integers(0, 256, size=(n, 784)).astype(np.float64) / 255.0
    labels = rng.integers(0, 10, size=n).astype(np.int64)
    return Dataset(inputs=pixels, labels=labels, name="synth")


def test_idx_round_trip(tmp_path):
    ds = synth_dataset()
    save_idx(ds, tmp_path / "imgs.idx", tmp_path / "labs.idx")
    back = load_idx(tmp_path / "imgs.idx", tmp_path / "labs.idx", name="synth")
    assert (back.inputs == ds.inputs).all()
    assert (back.labels == ds.labels).all()
    assert back.name == "synth"


def test_idx_round_trip_gzip(tmp_path):
    ds = synth_dataset(seed=1)
    save_idx(ds, tmp_path / "imgs.idx.gz", tmp_path / "labs.idx.gz")
    back = load_idx(tmp_path / "imgs.idx.gz", tmp_path / "labs.idx.gz")
    assert (back.inputs == ds.inputs).all()


def test_idx_pixel_scaling(tmp_path):
    ds = Dataset(
        inputs=np.array([[0.0] * 783 + [1.0]]), labels=np.array([5], dtype=np.int64), name="x"
    )
    save_idx(ds, tmp_path / "i.idx", tmp_path / "l.idx")
    back = load_idx(tmp_path / "i.idx", tmp_path / "l.idx")
    assert back.inputs[0, -1] == 1.0  # byte 255 maps to exactly 1.0
    assert back.inputs[0, 0] == 0.0


def test_idx_corrupted_magic(tmp_path):
    ds = synth_dataset()
    save_idx(ds, tmp_path / "i.idx", tmp_path / "l.idx")
    raw = bytearray((tmp_path / "i.idx").read_bytes())
    raw[3] = 0x99
    (tmp_path / "i.idx").write_bytes(bytes(raw))
    with pytest.raises(DataFormatError):
        load_idx(tmp_path / "i.idx", tmp_path / "l.idx")


def test_idx_truncated_payload(tmp_path):
    ds = synth_dataset()
    save_idx(ds, tmp_path / "i.idx", tmp_path / "l.idx")
    raw = (tmp_path / "i.idx").read_bytes()
    (tmp_path / "i.idx").write_bytes(raw[:-10])
    with pytest.raises(DataFormatError):
        load_idx(tmp_path / "i.idx", tmp_path / "l.idx")


def test_idx_count_mismatch(tmp_path):
    ds = synth_dataset(n=10)
    save_idx(ds, tmp_path / "i.idx", tmp_path / "l.idx")
    other = synth_dataset(n=11, seed=2)
    save_idx(other, tmp_path / "i2.idx", tmp_path / "l2.idx")
    with pytest.raises(DataFormatError):
        load_idx(tmp_path / "i.idx", tmp_path / "l2.idx")


def test_idx_header_too_short(tmp_path):
    (tmp_path / "i.idx").write_bytes(struct.pack(">I", 0x803))
    (tmp_path / "l.idx").write_bytes(b"")
    with pytest.raises(DataFormatError):
        load_idx(tmp_path / "i.idx", tmp_path / "l.idx")


def test_dataset_length_mismatch():
    with pytest.raises(DataFormatError):
        Dataset(inputs=np.zeros((3, 4)), labels=np.zeros(2, dtype=np.int64), name="bad")


def test_dataset_subset():
    ds = synth_dataset()
    sub = ds.subset(np.array([2, 5, 7]))
    assert len(sub) == 3
    assert (sub.inputs == ds.inputs[[2, 5, 7]]).all()
    assert (sub.labels == ds.labels[[2, 5, 7]]).all()


def test_binary_subset_signs_and_order():
    ds = synth_dataset(n=200, seed=3)
    sub = binary_subset(ds, 3, 7)
    assert set(np.unique(sub.labels)) <= {-1, 1}
    n3 = int((ds.labels == 3).sum())
    n7 = int((ds.labels == 7).sum())
    assert len(sub) == n3 + n7
    # original relative order is preserved
    orig_idx = np.flatnonzero((ds.labels == 3) | (ds.labels == 7))
    assert (sub.inputs == ds.inputs[orig_idx]).all()
    assert ((sub.labels == 1) == (ds.labels[orig_idx] == 3)).all()
    assert sub.name.endswith("3v7")


def test_binary_subset_validation():
    ds = synth_dataset()
    with pytest.raises(ConfigError):
        binary_subset(ds, 4, 4)
    few = Dataset(inputs=np.zeros((2, 4)), labels=np.array([1, 2], dtype=np.int64), name="f")
    with pytest.raises(ValueError):
        binary_subset(few, 1, 9)


def test_split_partition():
    ds = synth_dataset(n=50, seed=4)
    tr, va = split(ds, 10, RngStream(0, "minibatch"))
    assert len(tr) == 40 and len(va) == 10
    # disjoint and exhaustive: every original row appears exactly once
    all_rows = np.concatenate([tr.inputs, va.inputs])
    assert sorted(map(tuple, all_rows)) == sorted(map(tuple, ds.inputs))


def test_split_is_deterministic():
    ds = synth_dataset(n=50, seed=4)
    tr1, va1 = split(ds, 10, RngStream(5, "minibatch"))
    tr2, va2 = split(ds, 10, RngStream(5, "minibatch"))
    assert (tr1.inputs == tr2.inputs).all()
    assert (va1.labels == va2.labels).all()


def test_split_preserves_relative_order():
    ds = synth_dataset(n=50, seed=6)
    tr, _ = split(ds, 10, RngStream(0, "minibatch"))
    # rows keep their original relative order inside each side
    pos = [np.flatnonzero((ds.inputs == row).all(axis=1))[0] for row in tr.inputs]
    assert pos == sorted(pos)


def test_split_validation():
    ds = synth_dataset(n=10)
    with pytest.raises(ValueError):
        split(ds, 0, RngStream(0, "minibatch"))
    with pytest.raises(ValueError):
        split(ds, 10, RngStream(0, "minibatch"))


def test_resolve_data_dir_precedence(monkeypatch, tmp_path):
    monkeypatch.delenv(DATA_DIR_ENV, raising=False)
    assert str(resolve_data_dir("explicit")) == "explicit"
    monkeypatch.setenv(DATA_DIR_ENV, str(tmp_path))
    assert resolve_data_dir(None) == tmp_path
    assert str(resolve_data_dir("cli-wins")) == "cli-wins"
    monkeypatch.delenv(DATA_DIR_ENV)
    assert str(resolve_data_dir(None)).endswith("mnist")


def test_load_mnist_missing_dir(tmp_path):
    with pytest.raises(FileNotFoundError):
        load_mnist(tmp_path / "nowhere")


def test_load_mnist_canonical_counts(mnist):
    train, test = mnist
    assert train.inputs.shape == (60000, 784)
    assert test.inputs.shape == (10000, 784)
    assert train.inputs.dtype == np.float64
    assert train.inputs.min() >= 0.0 and train.inputs.max() <= 1.0
    assert train.labels.min() == 0 and train.labels.max() == 9
    # canonical class counts for the 3-vs-7 task
    test37 = binary_subset(test, 3, 7)
    assert len(test37) == 1010 + 1028
