"""Model checkpoints: a small versioned binary container that serializes a
model byte-for-byte reproducibly (no timestamps, no compression metadata).

Layout:
  bytes 0-7    magic+version ``ADVCKPT1``
  bytes 8-15   big-endian uint64: length of the JSON metadata block
  metadata     UTF-8 JSON, sorted keys: family tag, per-array name/shape/
               dtype manifest, family config, training config fingerprint
  payload      the arrays' raw little-endian C-order bytes, manifest order
"""

from __future__ import annotations

import json
import struct
from pathlib import Path

import numpy as np

from .errors import DataFormatError
from .models import (
    EnsembleModel,
    LogisticModel,
    MaxoutLayer,
    MaxoutModel,
    RbfModel,
    SoftmaxModel,
)

MAGIC = b"ADVCKPT1"


def _family_payload(model):
    """(family, static config dict, ordered {name: array})."""
    if isinstance(model, LogisticModel):
        return "logistic", {}, {"w": model.w, "b": model.b}
    if isinstance(model, SoftmaxModel):
        return "softmax", {}, {"W": model.W, "b": model.b}
    if isinstance(model, MaxoutModel):
        cfg = {
            "top": model.top,
            "retain_input": model.retain_input,
            "retain_hidden": list(model.retain_hidden),
            "n_layers": len(model.layers),
        }
        arrays = {}
        for i, layer in enumerate(model.layers):
            arrays[f"layer{i}_W"] = layer.W
            arrays[f"layer{i}_b"] = layer.b
        arrays["top_W"] = model.top_W
        arrays["top_b"] = model.top_b
        return "maxout", cfg, arrays
    if isinstance(model, RbfModel):
        return "rbf", {}, {"mu": model.mu, "gamma": model.gamma}
    if isinstance(model, EnsembleModel):
        members = []
        arrays = {}
        for i, m in enumerate(model.members):
            fam, cfg, arrs = _family_payload(m)
            members.append({"family": fam, "config": cfg})
            for name, arr in arrs.items():
                arrays[f"m{i}/{name}"] = arr
        return "ensemble", {"members": members}, arrays
    raise DataFormatError(f"cannot checkpoint a {type(model).__name__}")


def _build_model(family: str, cfg: dict, arrays: dict):
    if family == "logistic":
        return LogisticModel(arrays["w"], float(arrays["b"]))
    if family == "softmax":
        return SoftmaxModel(arrays["W"], arrays["b"])
    if family == "maxout":
        layers = [
            MaxoutLayer(arrays[f"layer{i}_W"], arrays[f"layer{i}_b"])
            for i in range(cfg["n_layers"])
        ]
        return MaxoutModel(
            layers,
            arrays["top_W"],
            arrays["top_b"],
            retain_input=cfg["retain_input"],
            retain_hidden=tuple(cfg["retain_hidden"]),
            top=cfg["top"],
        )
    if family == "rbf":
        return RbfModel(arrays["mu"], arrays["gamma"])
    if family == "ensemble":
        members = []
        for i, mcfg in enumerate(cfg["members"]):
            prefix = f"m{i}/"
            sub = {
                name[len(prefix) :]: arr
                for name, arr in arrays.items()
                if name.startswith(prefix)
            }
            members.append(_build_model(mcfg["family"], mcfg["config"], sub))
        return EnsembleModel(members)
    raise DataFormatError(f"unknown checkpoint family {family!r}")


def save_checkpoint(path, model, fingerprint: str = ""):
    family, cfg, arrays = _family_payload(model)
    manifest = []
    chunks = []
    for name, arr in arrays.items():
        shape = list(np.asarray(arr).shape)
        arr = np.ascontiguousarray(arr)  # note: promotes 0-d to 1-d
        dtype = arr.dtype.newbyteorder("<")
        manifest.append({"name": name, "shape": shape, "dtype": dtype.str})
        chunks.append(arr.astype(dtype, copy=False).tobytes())
    meta = {
        "family": family,
        "config": cfg,
        "arrays": manifest,
        "config_fingerprint": fingerprint,
    }
    blob = json.dumps(meta, sort_keys=True, separators=(",", ":")).encode()
    with open(path, "wb") as fh:
        fh.write(MAGIC)
        fh.write(struct.pack(">Q", len(blob)))
        fh.write(blob)
        for chunk in chunks:
            fh.write(chunk)


def _read_container(path) -> tuple[dict, bytes]:
    raw = Path(path).read_bytes()
    if len(raw) < 16 or raw[:8] != MAGIC:
        raise DataFormatError(f"{path}: not a checkpoint file")
    (meta_len,) = struct.unpack(">Q", raw[8:16])
    if len(raw) < 16 + meta_len:
        raise DataFormatError(f"{path}: truncated metadata")
    return json.loads(raw[16 : 16 + meta_len].decode()), raw[16 + meta_len :]


def read_metadata(path) -> dict:
    """Metadata dict only (family, config, array manifest, fingerprint);
    array payloads are not materialized."""
    return _read_container(path)[0]


def load_checkpoint(path):
    """Rebuild the model; returns (model, metadata dict)."""
    meta, payload = _read_container(path)
    arrays = {}
    offset = 0
    for entry in meta["arrays"]:
        dtype = np.dtype(entry["dtype"])
        count = int(np.prod(entry["shape"], dtype=np.int64)) if entry["shape"] else 1
        nbytes = count * dtype.itemsize
        if offset + nbytes > len(payload):
            raise DataFormatError(f"{path}: truncated payload at {entry['name']}")
        arr = np.frombuffer(payload[offset : offset + nbytes], dtype=dtype)
        arrays[entry["name"]] = arr.reshape(entry["shape"]).astype(
            dtype.newbyteorder("="), copy=True
        )
        offset += nbytes
    if offset != len(payload):
        raise DataFormatError(f"{path}: {len(payload) - offset} trailing bytes")
    return _build_model(meta["family"], meta["config"], arrays), meta
