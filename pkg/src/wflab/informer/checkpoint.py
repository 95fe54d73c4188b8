"""Parameter checkpoints: flat float64 blob behind a JSON header."""
from __future__ import annotations

import dataclasses
import hashlib
import json
import struct
from pathlib import Path
from typing import Any, Dict, Optional, Tuple, Union

import numpy as np

from ..errors import CheckpointError
from .config import InformerConfig
from .model import InformerModel, init_model

MAGIC = b"WFLB\x01"


def config_to_dict(config: InformerConfig) -> Dict[str, Any]:
    raw = dataclasses.asdict(config)
    raw["cat_sizes"] = list(config.cat_sizes)
    raw["quantile_levels"] = list(config.quantile_levels)
    return raw


def config_from_dict(raw: Dict[str, Any]) -> InformerConfig:
    data = dict(raw)
    data["cat_sizes"] = tuple(data["cat_sizes"])
    data["quantile_levels"] = tuple(data["quantile_levels"])
    return InformerConfig(**data)


def config_hash(config: InformerConfig) -> str:
    canonical = json.dumps(config_to_dict(config), sort_keys=True, separators=(",", ":"))
    return hashlib.sha256(canonical.encode()).hexdigest()


def save_checkpoint(
    path: Union[str, Path],
    model: InformerModel,
    seed: int,
    extra: Optional[Dict[str, Any]] = None,
) -> None:
    names = []
    shapes = []
    blobs = []
    for name, tensor in model.named_parameters():
        names.append(name)
        shapes.append(list(tensor.shape))
        blobs.append(np.ascontiguousarray(tensor.data, dtype=np.float64).tobytes())
    header = {
        "format": 1,
        "config": config_to_dict(model.config),
        "config_hash": config_hash(model.config),
        "seed": seed,
        "params": [{"name": n, "shape": s} for n, s in zip(names, shapes)],
        "extra": extra or {},
    }
    encoded = json.dumps(header, sort_keys=True).encode()
    with open(path, "wb") as fh:
        fh.write(MAGIC)
        fh.write(struct.pack("<Q", len(encoded)))
        fh.write(encoded)
        for blob in blobs:
            fh.write(blob)


def load_checkpoint(path: Union[str, Path]) -> Tuple[InformerModel, Dict[str, Any]]:
    """Rebuild a model from a checkpoint; returns it with the header."""
    with open(path, "rb") as fh:
        raw = fh.read()
    if raw[: len(MAGIC)] != MAGIC:
        raise CheckpointError(f"{path}: not a checkpoint (bad magic)")
    offset = len(MAGIC)
    if len(raw) < offset + 8:
        raise CheckpointError(f"{path}: truncated header length")
    (header_len,) = struct.unpack_from("<Q", raw, offset)
    offset += 8
    try:
        header = json.loads(raw[offset : offset + header_len].decode())
    except (UnicodeDecodeError, json.JSONDecodeError) as exc:
        raise CheckpointError(f"{path}: unreadable header: {exc}") from exc
    offset += header_len
    config = config_from_dict(header["config"])
    model = init_model(config, seed=0)
    params = dict(model.named_parameters())
    if [p["name"] for p in header["params"]] != [n for n, _ in model.named_parameters()]:
        raise CheckpointError(f"{path}: parameter names do not match the config")
    for spec in header["params"]:
        tensor = params[spec["name"]]
        shape = tuple(spec["shape"])
        if tensor.shape != shape:
            raise CheckpointError(
                f"{path}: {spec['name']} has shape {shape}, expected {tensor.shape}"
            )
        count = int(np.prod(shape)) if shape else 1
        nbytes = count * 8
        if offset + nbytes > len(raw):
            raise CheckpointError(f"{path}: blob truncated at {spec['name']}")
        tensor.data = np.frombuffer(raw, dtype="<f8", count=count, offset=offset).reshape(
            shape
        ).copy()
        offset += nbytes
    if offset != len(raw):
        raise CheckpointError(f"{path}: {len(raw) - offset} trailing bytes")
    return model, header
