"""Versioned binary checkpoints.

Layout: 8-byte magic, uint32 format version, uint64 manifest length, a JSON
manifest (config echo, vocabulary, epoch, tensor names/shapes, optimizer
step counts, RNG state), then all tensors concatenated as little-endian
float32 in manifest order.  Reloading reproduces forward outputs bitwise
for states whose parameters are float32-representable (one save/load cycle
quantizes; after that, round trips are exact).
"""

from __future__ import annotations

import base64
import json
import struct
from pathlib import Path

import numpy as np
import torch

from .errors import ParseError, VersionMismatch
from .labels import vocabulary_from_json
from .model import ModelConfig, ModelState, build_model
from .text import CompositionParams, EmbeddingTable, TextEncoder
from .train import TrainConfig

MAGIC = b"MNTRSEG\x01"
FORMAT_VERSION = 1


def save_checkpoint(
    state: ModelState,
    path: str | Path,
    train_config: TrainConfig | None = None,
    optimizer: torch.optim.Optimizer | None = None,
    rng: np.random.Generator | None = None,
) -> None:
    tensors = dict(state.named_tensors())
    opt_meta = None
    if optimizer is not None:
        opt_meta = {"steps": []}
        for i, param in enumerate(state.trainable_parameters()):
            opt_state = optimizer.state.get(param, {})
            if "exp_avg" in opt_state:
                tensors[f"opt.{i}.exp_avg"] = opt_state["exp_avg"]
                tensors[f"opt.{i}.exp_avg_sq"] = opt_state["exp_avg_sq"]
                opt_meta["steps"].append(int(opt_state["step"]))
            else:
                opt_meta["steps"].append(0)

    words = sorted(state.encoder.table.words, key=state.encoder.table.words.get)
    manifest = {
        "format_version": FORMAT_VERSION,
        "model_config": state.config.to_dict(),
        "train_config": train_config.to_dict() if train_config else None,
        "vocab": json.loads(state.vocab.to_json()),
        "encoder_words": words,
        "epoch": state.epoch,
        "tensors": [
            {"name": name, "shape": list(t.shape)} for name, t in tensors.items()
        ],
        "optimizer": opt_meta,
        "rng": _rng_payload(rng),
    }
    blob = json.dumps(manifest).encode("utf-8")
    with open(path, "wb") as fh:
        fh.write(MAGIC)
        fh.write(struct.pack("<I", FORMAT_VERSION))
        fh.write(struct.pack("<Q", len(blob)))
        fh.write(blob)
        for t in tensors.values():
            fh.write(t.detach().cpu().numpy().astype("<f4").tobytes())


def _rng_payload(rng: np.random.Generator | None):
    payload = {"torch": base64.b64encode(torch.get_rng_state().numpy().tobytes()).decode()}
    if rng is not None:
        payload["numpy"] = json.dumps(rng.bit_generator.state)
    return payload


def _read_manifest(raw: bytes, path: str) -> tuple[dict, int]:
    if len(raw) < len(MAGIC) + 12:
        raise ParseError(f"{path}: truncated checkpoint header")
    if raw[: len(MAGIC)] != MAGIC:
        raise ParseError(f"{path}: bad checkpoint magic")
    (version,) = struct.unpack_from("<I", raw, len(MAGIC))
    if version != FORMAT_VERSION:
        raise VersionMismatch(f"{path}: format version {version}, supported {FORMAT_VERSION}")
    (blob_len,) = struct.unpack_from("<Q", raw, len(MAGIC) + 4)
    start = len(MAGIC) + 12
    if len(raw) < start + blob_len:
        raise ParseError(f"{path}: truncated manifest")
    try:
        manifest = json.loads(raw[start : start + blob_len].decode("utf-8"))
    except (json.JSONDecodeError, UnicodeDecodeError) as exc:
        raise ParseError(f"{path}: bad manifest JSON: {exc}") from exc
    return manifest, start + blob_len


def load_checkpoint(path: str | Path) -> ModelState:
    raw = Path(path).read_bytes()
    manifest, offset = _read_manifest(raw, str(path))

    vocab = vocabulary_from_json(json.dumps(manifest["vocab"]))
    config = ModelConfig(**manifest["model_config"])
    state = build_model(vocab, config)
    state.epoch = int(manifest.get("epoch", 0))

    arrays: dict[str, torch.Tensor] = {}
    for meta in manifest["tensors"]:
        shape = tuple(meta["shape"])
        count = int(np.prod(shape)) if shape else 1
        if offset + 4 * count > len(raw):
            raise ParseError(f"{path}: truncated tensor payload at {meta['name']!r}")
        arr = np.frombuffer(raw, dtype="<f4", count=count, offset=offset).reshape(shape)
        arrays[meta["name"]] = torch.from_numpy(arr.astype(np.float64))
        offset += 4 * count

    for prefix, module in state.trainable_modules().items():
        sd = {
            name[len(prefix) + 1 :]: tensor
            for name, tensor in arrays.items()
            if name.startswith(prefix + ".")
        }
        module.load_state_dict(sd)
    words = manifest.get("encoder_words") or sorted(
        state.encoder.table.words, key=state.encoder.table.words.get
    )
    table = EmbeddingTable(
        {w: i for i, w in enumerate(words)},
        arrays["encoder.rows"],
        arrays["encoder.buckets"],
    )
    comp = CompositionParams(arrays["encoder.weight"], arrays["encoder.bias"])
    state.encoder = TextEncoder(table, comp, kind=state.encoder.kind)
    return state


def peek_train_config(path: str | Path) -> TrainConfig | None:
    raw = Path(path).read_bytes()
    manifest, _ = _read_manifest(raw, str(path))
    cfg = manifest.get("train_config")
    if cfg is None:
        return None
    cfg = dict(cfg)
    for key in ("milestones", "betas"):
        if key in cfg and isinstance(cfg[key], list):
            cfg[key] = tuple(cfg[key])
    return TrainConfig(**cfg)
