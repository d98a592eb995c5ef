"""
Network builders.

Stride plan: the encoder downsamples twice by 2 (5x5 kernels), so a C-channel
H x W image becomes a latent of rate * C * 16 channels at H/4 x W/4. Decoders
upsample with 5x5 stride-2 transpose convolutions; every other kernel is 3x3.
"""
import logging
from fractions import Fraction
from typing import Dict, List, Optional, Sequence, Tuple

import numpy as np

from ..autodiff import Rng, Tensor
from ..config import DecoderKind
from ..errors import GeometryError, RateError
from ..layers import init
from .params import DECODER, ENCODER, ModelParams
from .spec import MIRRORED_KIND, DecoderVariant, LayerKind, LayerSpec, block_kinds, infer_shape

logger = logging.getLogger(__name__)

TOTAL_STRIDE = 4
DEFAULT_WIDTHS = (16, 32)


def _conv(name, block, c_in, c_out, k, stride=1):
    return LayerSpec(LayerKind.CONV, name, block, c_in, c_out, kernel=k, stride=stride, pad=k // 2)


def _tconv(name, block, c_in, c_out, k, stride=1):
    # output_padding stride-1 makes a stride-s layer grow H to exactly s*H
    return LayerSpec(LayerKind.TCONV, name, block, c_in, c_out, kernel=k, stride=stride,
                     pad=k // 2, output_padding=stride - 1)


def _simple(kind, name, block, c=0, k=0):
    return LayerSpec(kind, name, block, c, c, kernel=k)


def feasible_rates(channels: int) -> List[Fraction]:
    n = channels * TOTAL_STRIDE * TOTAL_STRIDE
    return [Fraction(c, n) for c in range(1, n + 1)]


def latent_channels(rate: float, channels: int) -> int:
    exact = rate * channels * TOTAL_STRIDE * TOTAL_STRIDE
    c_out = int(round(exact))
    if c_out < 1 or abs(exact - c_out) > 1e-9:
        options = ", ".join(str(r) for r in feasible_rates(channels)[:8])
        raise RateError(f"rate {rate} needs {exact:g} latent channels; feasible rates for "
                        f"{channels}-channel input are c/{channels * TOTAL_STRIDE ** 2}, e.g. {options}, ...")
    return c_out


def _check_image_shape(image_shape: Sequence[int]) -> Tuple[int, int, int]:
    if len(image_shape) != 3 or min(image_shape) < 1:
        raise GeometryError(f"image shape must be (C, H, W), got {tuple(image_shape)}")
    c, h, w = (int(v) for v in image_shape)
    if h % TOTAL_STRIDE or w % TOTAL_STRIDE:
        raise GeometryError(f"image {h}x{w} is not a multiple of the encoder stride {TOTAL_STRIDE}")
    return c, h, w


def _layer_arrays(spec: LayerSpec, rng: Rng) -> Dict[str, np.ndarray]:
    kind = spec.kind
    if kind == LayerKind.CONV:
        return init.conv_params(spec.channels, spec.out_channels, spec.kernel, rng)
    if kind == LayerKind.TCONV:
        return init.tconv_params(spec.channels, spec.out_channels, spec.kernel, spec.stride, rng)
    if kind in (LayerKind.GDN, LayerKind.IGDN):
        return init.gdn_params(spec.channels)
    if kind == LayerKind.PRELU:
        return init.prelu_params(spec.channels)
    if kind == LayerKind.ATTENTION:
        return init.attention_params(spec.channels, rng)
    if kind == LayerKind.FUSE:
        return init.fuse_params(spec.channels, rng)
    return {}


def _init_tensors(layers: Sequence[LayerSpec], rng: Rng) -> Dict[str, Tensor]:
    tensors: Dict[str, Tensor] = {}
    for spec in layers:
        if spec.kind == LayerKind.RESIDUAL:
            inner = list(spec.branch) + ([spec.skip] if spec.skip is not None else [])
            tensors.update(_init_tensors(inner, rng))
            continue
        for suffix, arr in _layer_arrays(spec, rng.child(spec.name)).items():
            name = f"{spec.name}.{suffix}"
            tensors[name] = Tensor(arr, requires_grad=True, name=name)
    return tensors


def build_encoder(image_shape: Sequence[int] = (3, 32, 32), rate: float = 1.0 / 16.0,
                  widths: Sequence[int] = DEFAULT_WIDTHS, seed: int = 0) -> ModelParams:
    """[conv s2 + GDN + PReLU] x2 -> SNR channel attention -> conv to the latent."""
    c, h, w = _check_image_shape(image_shape)
    c_out = latent_channels(rate, c)
    w0, w1 = widths
    layers = (
        _conv("block1.conv", "block1", c, w0, 5, stride=2),
        _simple(LayerKind.GDN, "block1.gdn", "block1", w0),
        _simple(LayerKind.PRELU, "block1.prelu", "block1", w0),
        _conv("block2.conv", "block2", w0, w1, 5, stride=2),
        _simple(LayerKind.GDN, "block2.gdn", "block2", w1),
        _simple(LayerKind.PRELU, "block2.prelu", "block2", w1),
        _simple(LayerKind.ATTENTION, "attention", "attention", w1),
        _conv("out.conv", "out", w1, c_out, 3),
    )
    latent_shape = infer_shape(layers, (c, h, w))
    params = ModelParams(
        role=ENCODER,
        tensors=_init_tensors(layers, Rng(seed).child(ENCODER)),
        layers=layers,
        image_shape=(c, h, w),
        latent_shape=latent_shape,
        rate=float(rate),
        widths=(int(w0), int(w1)),
        seed=int(seed),
    )
    logger.debug(f"encoder {params.image_shape} -> {latent_shape}, {params.param_count} parameters")
    return params


def mirror_layers(layers: Sequence[LayerSpec]) -> Tuple[LayerSpec, ...]:
    """Blocks in reverse order with conv <-> tconv and GDN <-> IGDN swapped."""
    by_block: Dict[str, List[LayerSpec]] = {}
    for spec in layers:
        by_block.setdefault(spec.block, []).append(spec)

    mirrored: List[LayerSpec] = []
    for block, _ in reversed(block_kinds(layers)):
        specs = by_block[block]
        convs = [s for s in specs if s.kind == LayerKind.CONV]
        # a block's normalisation and activation act on what its conv produces
        produced = convs[0].channels if convs else specs[0].channels
        for s in specs:
            kind = MIRRORED_KIND.get(s.kind, s.kind)
            name = s.name.replace(f".{s.kind.value}", f".{kind.value}") if kind != s.kind else s.name
            if s.kind == LayerKind.CONV:
                mirrored.append(_tconv(name, block, s.out_channels, s.channels, s.kernel, s.stride))
            else:
                channels = s.channels if s.kind == LayerKind.ATTENTION else produced
                mirrored.append(LayerSpec(kind, name, block, channels, channels, kernel=s.kernel))
    mirrored.append(_simple(LayerKind.SIGMOID, "head.sigmoid", "head"))
    return tuple(mirrored)


def build_symmetric_decoder(encoder: ModelParams, seed: Optional[int] = None) -> ModelParams:
    """Mirror of ``encoder`` with fresh (untied) parameters and a sigmoid output."""
    layers = mirror_layers(encoder.layers)
    out_shape = infer_shape(layers, encoder.latent_shape)
    if out_shape != encoder.image_shape:
        raise GeometryError(f"mirrored decoder yields {out_shape}, encoder expects {encoder.image_shape}")
    seed = encoder.seed if seed is None else seed
    variant = DecoderVariant(DecoderKind.SYMMETRIC)
    return ModelParams(
        role=DECODER,
        tensors=_init_tensors(layers, Rng(seed).child(DECODER, variant.label)),
        layers=layers,
        image_shape=encoder.image_shape,
        latent_shape=encoder.latent_shape,
        rate=encoder.rate,
        widths=encoder.widths,
        seed=int(seed),
        variant=variant,
    )


def _upsampling_stack(c_in: int, widths: Tuple[int, int], depth: int, extra: LayerKind,
                      with_input_block: bool) -> List[LayerSpec]:
    """tconv + IGDN + PReLU + (attention | fusion) blocks, ending before the head."""
    w0, w1 = widths
    plan: List[Tuple[str, int, int, int, int]] = []
    if with_input_block:
        plan.append(("in", c_in, w1, 3, 1))
        c_in = w1
    plan += [("up1", c_in, w1, 5, 2), ("up2", w1, w0, 5, 2)]
    plan += [(f"mid{i}", w0, w0, 3, 1) for i in range(1, depth + 1)]

    layers: List[LayerSpec] = []
    for block, ci, co, k, s in plan:
        layers += [
            _tconv(f"{block}.tconv", block, ci, co, k, stride=s),
            _simple(LayerKind.IGDN, f"{block}.igdn", block, co),
            _simple(LayerKind.PRELU, f"{block}.prelu", block, co),
            _simple(extra, f"{block}.{extra.value}", block, co),
        ]
    return layers


def _attention_layers(c_in, image_c, widths, depth):
    layers = _upsampling_stack(c_in, widths, depth, LayerKind.ATTENTION, with_input_block=True)
    return layers + [_tconv("head.tconv", "head", widths[0], image_c, 3),
                     _simple(LayerKind.SIGMOID, "head.sigmoid", "head")]


def _conv_layers(c_in, image_c, widths, depth):
    layers = _upsampling_stack(c_in, widths, depth, LayerKind.FUSE, with_input_block=False)
    return layers + [_tconv("head.tconv", "head", widths[0], image_c, 3),
                     _simple(LayerKind.SIGMOID, "head.sigmoid", "head")]


def _residual(block, c_in, c_out, k, stride):
    branch = (
        _tconv(f"{block}.branch.tconv", block, c_in, c_out, k, stride=stride),
        _simple(LayerKind.IGDN, f"{block}.branch.igdn", block, c_out),
        _simple(LayerKind.FUSE, f"{block}.branch.fuse", block, c_out),
        _simple(LayerKind.PRELU, f"{block}.branch.prelu", block, c_out),
    )
    skip = None
    if stride != 1 or c_in != c_out:
        skip = LayerSpec(LayerKind.TCONV, f"{block}.skip.tconv", block, c_in, c_out,
                         kernel=stride, stride=stride)
    return LayerSpec(LayerKind.RESIDUAL, block, block, c_in, c_out, branch=branch, skip=skip)


def _resnet_layers(c_in, image_c, widths, depth):
    w0, w1 = widths
    layers = [_residual("res1", c_in, w1, 5, 2), _residual("res2", w1, w0, 5, 2)]
    layers += [_residual(f"res{i}", w0, w0, 3, 1) for i in range(3, 3 + 2 * depth)]
    last = f"res{3 + 2 * depth}"
    # final block: no SNR fusion, sigmoid instead of PReLU
    layers.append(LayerSpec(
        LayerKind.RESIDUAL, last, last, w0, image_c,
        branch=(_tconv(f"{last}.branch.tconv", last, w0, image_c, 3),
                _simple(LayerKind.IGDN, f"{last}.branch.igdn", last, image_c)),
        skip=_conv(f"{last}.skip.conv", last, w0, image_c, 1),
        post_sigmoid=True,
    ))
    return layers


def _vgg_layers(c_in, image_c, widths, depth):
    w0, w1 = widths
    layers: List[LayerSpec] = []
    for block, ci, co in (("group1", c_in, w1), ("group2", w1, w0)):
        layers += [
            _tconv(f"{block}.tconv1", block, ci, co, 5, stride=2),
            _simple(LayerKind.PRELU, f"{block}.prelu1", block, co),
            _tconv(f"{block}.tconv2", block, co, co, 5, stride=2),
            _simple(LayerKind.PRELU, f"{block}.prelu2", block, co),
            _simple(LayerKind.AVG_POOL, f"{block}.avg_pool", block, co, k=2),
        ]
    for i in range(1, depth + 1):
        layers += [_tconv(f"mid{i}.tconv", f"mid{i}", w0, w0, 3),
                   _simple(LayerKind.PRELU, f"mid{i}.prelu", f"mid{i}", w0)]
    # activation and SNR fusion once, at the end
    return layers + [
        _tconv("head.tconv", "head", w0, image_c, 3),
        _simple(LayerKind.FUSE, "head.fuse", "head", image_c),
        _simple(LayerKind.SIGMOID, "head.sigmoid", "head"),
    ]


_USER_LAYOUTS = {
    DecoderKind.ATTENTION: _attention_layers,
    DecoderKind.CONV: _conv_layers,
    DecoderKind.RESNET: _resnet_layers,
    DecoderKind.VGG: _vgg_layers,
}


def build_user_decoder(variant: DecoderVariant, latent_shape: Sequence[int], image_shape: Sequence[int],
                       widths: Sequence[int] = DEFAULT_WIDTHS, seed: int = 0) -> ModelParams:
    """One of the heterogeneous receivers; output geometry must match ``image_shape``."""
    if variant.kind not in _USER_LAYOUTS:
        raise ValueError(f"{variant.kind.value} is not a user decoder family")
    image_shape = _check_image_shape(image_shape)
    latent_shape = tuple(int(v) for v in latent_shape)
    widths = (int(widths[0]), int(widths[1]))
    layers = tuple(_USER_LAYOUTS[variant.kind](latent_shape[0], image_shape[0], widths, variant.depth_scale))
    out_shape = infer_shape(layers, latent_shape)
    if out_shape != image_shape:
        raise GeometryError(f"{variant.label} decoder maps latent {latent_shape} to {out_shape}, "
                            f"not the image shape {image_shape}")
    params = ModelParams(
        role=DECODER,
        tensors=_init_tensors(layers, Rng(seed).child(DECODER, variant.label)),
        layers=layers,
        image_shape=image_shape,
        latent_shape=latent_shape,
        rate=int(np.prod(latent_shape)) / int(np.prod(image_shape)),
        widths=widths,
        seed=int(seed),
        variant=variant,
    )
    logger.debug(f"{variant.label} decoder: {len(layers)} layers, {params.param_count} parameters")
    return params


def build_roster_decoder(kind: DecoderKind, encoder: ModelParams, depth_scale: int = 1,
                         seed: Optional[int] = None) -> ModelParams:
    """Decoder for a roster entry, shaped to pair with ``encoder``."""
    seed = encoder.seed if seed is None else seed
    kind = DecoderKind(kind)
    if kind == DecoderKind.SYMMETRIC:
        return build_symmetric_decoder(encoder, seed=seed)
    return build_user_decoder(DecoderVariant(kind, depth_scale), encoder.latent_shape,
                              encoder.image_shape, widths=encoder.widths, seed=seed)
