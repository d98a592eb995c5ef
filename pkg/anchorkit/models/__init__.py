"""
Base-station encoder, symmetric decoder and the heterogeneous user decoders.
"""
from .builders import (
    TOTAL_STRIDE,
    build_encoder,
    build_roster_decoder,
    build_symmetric_decoder,
    build_user_decoder,
    feasible_rates,
    latent_channels,
    mirror_layers,
)
from .checkpoint import dumps_checkpoint, load_checkpoint, load_checkpoint_with_meta, loads_checkpoint, save_checkpoint
from .forward import apply_layer, decode, encode, run_layers
from .params import DECODER, ENCODER, ModelParams
from .spec import DecoderVariant, LayerKind, LayerSpec, block_kinds, infer_shape

__all__ = [
    "DECODER",
    "DecoderVariant",
    "ENCODER",
    "LayerKind",
    "LayerSpec",
    "ModelParams",
    "TOTAL_STRIDE",
    "apply_layer",
    "block_kinds",
    "build_encoder",
    "build_roster_decoder",
    "build_symmetric_decoder",
    "build_user_decoder",
    "decode",
    "dumps_checkpoint",
    "encode",
    "feasible_rates",
    "infer_shape",
    "latent_channels",
    "load_checkpoint",
    "load_checkpoint_with_meta",
    "loads_checkpoint",
    "mirror_layers",
    "run_layers",
    "save_checkpoint",
]
