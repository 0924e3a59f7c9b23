import numpy as np
import pytest

from advlab.checkpoint import MAGIC, load_checkpoint, read_metadata, save_checkpoint
from advlab.errors import DataFormatError
from advlab.models import (
    EnsembleModel,
    LogisticModel,
    MaxoutModel,
    RbfModel,
    SoftmaxModel,
)
from advlab.numerics import RngStream


def sample_models():
    rng = np.random.default_rng(0)
    return [
        LogisticModel(rng.standard_normal(5), 0.25),
        SoftmaxModel(rng.standard_normal((3, 5)), rng.standard_normal(3)),
        MaxoutModel.init(
            4, 3, 2, 3, RngStream(0, "weights"), retain_input=0.8, retain_hidden=0.5
        ),
        MaxoutModel.init(4, 3, 2, 3, RngStream(1, "weights"), top="sigmoid"),
        RbfModel(rng.standard_normal((3, 4)), rng.uniform(0.5, 1.5, size=3)),
    ]


def assert_same_params(a, b):
    pa, pb = a.param_arrays(), b.param_arrays()
    assert pa.keys() == pb.keys()
    for k in pa:
        assert (pa[k] == pb[k]).all(), k


@pytest.mark.parametrize("idx", range(5))
def test_round_trip_families(tmp_path, idx):
    model = sample_models()[idx]
    path = tmp_path / "m.ckpt"
    save_checkpoint(path, model, fingerprint="abc123")
    back, meta = load_checkpoint(path)
    assert back.family == model.family
    assert_same_params(model, back)
    assert meta["config_fingerprint"] == "abc123"
    if model.family == "maxout":
        assert back.top == model.top
        assert back.retain_input == model.retain_input
        assert back.retain_hidden == model.retain_hidden
    probe = np.random.default_rng(1).standard_normal((3, model.input_dim))
    assert (model.probs(probe) == back.probs(probe)).all()


def test_round_trip_ensemble(tmp_path):
    rng = np.random.default_rng(2)
    members = [
        SoftmaxModel(rng.standard_normal((3, 4)), rng.standard_normal(3)) for _ in range(2)
    ]
    ens = EnsembleModel(members)
    save_checkpoint(tmp_path / "e.ckpt", ens)
    back, _ = load_checkpoint(tmp_path / "e.ckpt")
    assert back.family == "ensemble"
    assert len(back.members) == 2
    for m, b in zip(ens.members, back.members):
        assert_same_params(m, b)


def test_save_is_byte_deterministic(tmp_path):
    model = sample_models()[2]
    save_checkpoint(tmp_path / "a.ckpt", model, fingerprint="f")
    save_checkpoint(tmp_path / "b.ckpt", model, fingerprint="f")
    assert (tmp_path / "a.ckpt").read_bytes() == (tmp_path / "b.ckpt").read_bytes()


def test_magic_and_metadata(tmp_path):
    model = sample_models()[0]
    path = tmp_path / "m.ckpt"
    save_checkpoint(path, model)
    raw = path.read_bytes()
    assert raw.startswith(MAGIC)
    meta = read_metadata(path)
    assert meta["family"] == "logistic"
    assert {a["name"] for a in meta["arrays"]} == {"w", "b"}


def test_corrupt_magic_rejected(tmp_path):
    path = tmp_path / "m.ckpt"
    save_checkpoint(path, sample_models()[0])
    raw = bytearray(path.read_bytes())
    raw[0] ^= 0xFF
    path.write_bytes(bytes(raw))
    with pytest.raises(DataFormatError):
        load_checkpoint(path)


def test_truncated_payload_rejected(tmp_path):
    path = tmp_path / "m.ckpt"
    save_checkpoint(path, sample_models()[1])
    raw = path.read_bytes()
    path.write_bytes(raw[:-8])
    with pytest.raises(DataFormatError):
        load_checkpoint(path)


def test_trailing_bytes_rejected(tmp_path):
    path = tmp_path / "m.ckpt"
    save_checkpoint(path, sample_models()[1])
    path.write_bytes(path.read_bytes() + b"x")
    with pytest.raises(DataFormatError):
        load_checkpoint(path)


def test_logistic_scalar_bias_round_trip(tmp_path):
    # the 0-d bias array must come back as a proper scalar array
    m = LogisticModel(np.array([1.0, 2.0]), -0.75)
    save_checkpoint(tmp_path / "m.ckpt", m)
    back, _ = load_checkpoint(tmp_path / "m.ckpt")
    assert float(back.b) == -0.75
    assert back.b.shape == ()
