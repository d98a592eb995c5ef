"""
Checkpoint container.

    magic    8 bytes  b"ANKCKPT\\0"
    version  uint32   little-endian
    hlen     uint64   little-endian, length of the JSON header
    header   hlen bytes of UTF-8 JSON (sorted keys, compact)
    blobs    one per tensor, in header order, little-endian float64

The header carries the builder arguments, so ``load_checkpoint`` rebuilds the
layer structure and only the numbers come from the blobs.
"""
import json
import logging
import struct
from pathlib import Path
from typing import Any, Dict, Optional, Tuple, Union

import numpy as np

from ..config import DecoderKind
from ..errors import CheckpointError
from .builders import build_encoder, build_symmetric_decoder, build_user_decoder
from .params import DECODER, ENCODER, ModelParams
from .spec import DecoderVariant

logger = logging.getLogger(__name__)

MAGIC = b"ANKCKPT\x00"
FORMAT_VERSION = 1
_PREAMBLE = struct.Struct("<8sIQ")


def _header(params: ModelParams, meta: Optional[Dict[str, Any]]) -> Dict[str, Any]:
    return {
        "role": params.role,
        "variant": None if params.variant is None else params.variant.kind.value,
        "depth_scale": 1 if params.variant is None else params.variant.depth_scale,
        "image_shape": list(params.image_shape),
        "latent_shape": list(params.latent_shape),
        "rate": params.rate,
        "widths": list(params.widths),
        "seed": params.seed,
        "frozen": params.frozen,
        "frozen_checksum": params.frozen_checksum,
        "checksum": params.checksum(),
        "tensors": [{"name": k, "shape": list(t.shape)} for k, t in params.tensors.items()],
        "meta": meta or {},
    }


def dumps_checkpoint(params: ModelParams, meta: Optional[Dict[str, Any]] = None) -> bytes:
    header = json.dumps(_header(params, meta), sort_keys=True, separators=(",", ":")).encode("utf-8")
    parts = [_PREAMBLE.pack(MAGIC, FORMAT_VERSION, len(header)), header]
    parts += [t.data.astype("<f8").tobytes() for t in params.tensors.values()]
    return b"".join(parts)


def save_checkpoint(params: ModelParams, path: Union[str, Path], meta: Optional[Dict[str, Any]] = None) -> str:
    """Write ``params`` to ``path``; returns the parameter checksum."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_bytes(dumps_checkpoint(params, meta))
    from .. import telemetry
    telemetry.checkpoints_written.inc()
    logger.info(f"Wrote {params.name} checkpoint to {path}")
    return params.checksum()


def _rebuild(header: Dict[str, Any]) -> ModelParams:
    image_shape = tuple(header["image_shape"])
    widths = tuple(header["widths"])
    seed = int(header["seed"])
    if header["role"] == ENCODER:
        return build_encoder(image_shape, header["rate"], widths, seed)
    if header["role"] != DECODER:
        raise CheckpointError(f"unknown model role {header['role']!r}")
    kind = DecoderKind(header["variant"])
    if kind == DecoderKind.SYMMETRIC:
        # the mirror only depends on the encoder's geometry
        return build_symmetric_decoder(build_encoder(image_shape, header["rate"], widths, seed), seed=seed)
    variant = DecoderVariant(kind, int(header["depth_scale"]))
    return build_user_decoder(variant, header["latent_shape"], image_shape, widths, seed)


def loads_checkpoint(blob: bytes, source: str = "<bytes>") -> Tuple[ModelParams, Dict[str, Any]]:
    if len(blob) < _PREAMBLE.size:
        raise CheckpointError(f"{source}: truncated at offset {len(blob)} (preamble needs {_PREAMBLE.size} bytes)")
    magic, version, hlen = _PREAMBLE.unpack_from(blob, 0)
    if magic != MAGIC:
        raise CheckpointError(f"{source}: not an anchorkit checkpoint (magic {magic!r})")
    if version != FORMAT_VERSION:
        raise CheckpointError(f"{source}: format version {version} unsupported (expected {FORMAT_VERSION})")
    offset = _PREAMBLE.size
    if len(blob) < offset + hlen:
        raise CheckpointError(f"{source}: header truncated at offset {len(blob)}")
    try:
        header = json.loads(blob[offset:offset + hlen].decode("utf-8"))
    except (UnicodeDecodeError, json.JSONDecodeError) as e:
        raise CheckpointError(f"{source}: corrupt header at offset {offset}: {e}") from e
    offset += hlen

    state: Dict[str, np.ndarray] = {}
    for entry in header["tensors"]:
        shape = tuple(entry["shape"])
        nbytes = 8 * int(np.prod(shape, dtype=np.int64))
        if len(blob) < offset + nbytes:
            raise CheckpointError(f"{source}: tensor {entry['name']!r} truncated at offset {len(blob)} "
                                  f"(needs bytes {offset}..{offset + nbytes})")
        state[entry["name"]] = np.frombuffer(blob, dtype="<f8", count=nbytes // 8, offset=offset).reshape(shape)
        offset += nbytes
    if offset != len(blob):
        raise CheckpointError(f"{source}: {len(blob) - offset} trailing bytes after offset {offset}")

    params = _rebuild(header)
    params.load_state(state)
    if params.checksum() != header["checksum"]:
        raise CheckpointError(f"{source}: checksum mismatch")
    if header["frozen"]:
        params = params.frozen_copy()
    return params, header.get("meta", {})


def load_checkpoint(path: Union[str, Path]) -> ModelParams:
    params, _ = loads_checkpoint(Path(path).read_bytes(), source=str(path))
    return params


def load_checkpoint_with_meta(path: Union[str, Path]) -> Tuple[ModelParams, Dict[str, Any]]:
    return loads_checkpoint(Path(path).read_bytes(), source=str(path))
