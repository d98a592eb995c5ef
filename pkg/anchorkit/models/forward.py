"""Interpreter for ``LayerSpec`` networks plus the encode/decode entry points."""
import math
from typing import Sequence

from .. import autodiff as ad
from .. import layers as nn
from ..autodiff import Tensor
from ..errors import ShapeError
from .params import DECODER, ENCODER, ModelParams
from .spec import LayerKind, LayerSpec


def apply_layer(spec: LayerSpec, params: ModelParams, x: Tensor, snr_db: float) -> Tensor:
    """Run one layer of ``params``."""
    kind = spec.kind
    if kind == LayerKind.RESIDUAL:
        main = run_layers(spec.branch, params, x, snr_db)
        side = x if spec.skip is None else apply_layer(spec.skip, params, x, snr_db)
        out = ad.add(side, main)
        return nn.sigmoid(out) if spec.post_sigmoid else out
    if kind == LayerKind.SIGMOID:
        return nn.sigmoid(x)
    if kind == LayerKind.AVG_POOL:
        return nn.avg_pool(x, spec.kernel)

    p = params.layer_params(spec.name)
    if kind == LayerKind.CONV:
        return nn.conv2d(x, p, stride=spec.stride, pad=spec.pad)
    if kind == LayerKind.TCONV:
        return nn.tconv2d(x, p, stride=spec.stride, pad=spec.pad, output_padding=spec.output_padding)
    if kind == LayerKind.GDN:
        return nn.gdn_layer(x, p)
    if kind == LayerKind.IGDN:
        return nn.gdn_layer(x, p, inverse=True)
    if kind == LayerKind.PRELU:
        return nn.prelu(x, p["slope"])
    if kind == LayerKind.ATTENTION:
        return nn.channel_attention(x, snr_db, p)
    if kind == LayerKind.FUSE:
        return nn.snr_fuse_dense(x, snr_db, p)
    raise ValueError(f"unknown layer kind {kind!r}")


def run_layers(layers: Sequence[LayerSpec], params: ModelParams, x: Tensor, snr_db: float) -> Tensor:
    for spec in layers:
        x = apply_layer(spec, params, x, snr_db)
    return x


def _check_snr(snr_db: float) -> None:
    if not math.isfinite(snr_db):
        raise ValueError(f"snr_db must be finite, got {snr_db}")


def encode(enc: ModelParams, images: Tensor, snr_db: float) -> Tensor:
    """images [N, C, H, W] in [0, 1] -> latent [N, c, H/4, W/4]."""
    if enc.role != ENCODER:
        raise ValueError(f"encode needs an encoder, got the {enc.name} decoder")
    _check_snr(snr_db)
    images = ad.as_tensor(images)
    if images.ndim != 4 or images.shape[1:] != enc.image_shape:
        raise ShapeError(f"encoder expects images [N, {', '.join(map(str, enc.image_shape))}], got {images.shape}")
    return run_layers(enc.layers, enc, images, snr_db)


def decode(dec: ModelParams, y: Tensor, snr_db: float) -> Tensor:
    """Received latent [N, c, h, w] -> image [N, C, H, W], pixels in [0, 1]."""
    if dec.role != DECODER:
        raise ValueError("decode needs a decoder, got the encoder")
    _check_snr(snr_db)
    y = ad.as_tensor(y)
    if y.ndim != 4 or y.shape[1:] != dec.latent_shape:
        raise ShapeError(f"{dec.name} decoder expects latent [N, {', '.join(map(str, dec.latent_shape))}], "
                         f"got {y.shape}")
    return run_layers(dec.layers, dec, y, snr_db)
